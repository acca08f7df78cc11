//! Numerical laboratory for Ricci-Yamabe solitons on coordinate charts.

// Index loops mirror the tensor notation; closures over jets have long types.
#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod catalog;
pub mod chart;
pub mod curvature;
pub mod diff;
pub mod error;
pub mod field;
pub mod identities;
pub mod jet;
pub mod quadrature;
pub mod report;
pub mod soliton;
pub mod solver;

pub use chart::{ChartDomain, ChartPoint};
pub use error::{LabError, Result};
pub use field::{MetricField, OneFormField, ScalarField, VectorField};
pub use jet::{Jet, JetLayout};
