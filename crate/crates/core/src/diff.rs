//! Partial derivatives of chart functions.
//!
//! The default backend reads derivatives off a Taylor jet. The Richardson
//! backend is an independent central-difference oracle used to cross-check
//! it; it never feeds the curvature pipeline.

use crate::chart::{ChartDomain, ChartPoint};
use crate::error::{LabError, Result};
use crate::field::{coordinate_jets, ScalarField};
use crate::jet::JetLayout;

pub const MAX_DERIVATIVE_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Truncated Taylor arithmetic (forward mode).
    Jet,
    /// Nested central differences with two Richardson levels.
    Richardson,
}

fn precheck(domain: &ChartDomain, field: &ScalarField, p: &ChartPoint, idx: &[usize]) -> Result<()> {
    if idx.len() > MAX_DERIVATIVE_ORDER {
        return Err(LabError::OrderTooHigh {
            requested: idx.len(),
            max: MAX_DERIVATIVE_ORDER,
        });
    }
    if field.dim() != domain.dim() {
        return Err(LabError::DimensionMismatch {
            expected: domain.dim(),
            got: field.dim(),
        });
    }
    if let Some(&bad) = idx.iter().find(|&&i| i >= domain.dim()) {
        return Err(LabError::InvalidParameter(format!(
            "coordinate index {bad} out of range for dimension {}",
            domain.dim()
        )));
    }
    domain.check_interior(p)
}

/// Mixed partial `d^k f / dx_{i1} ... dx_{ik}` at `p` (indices are 0-based).
pub fn partial_derivative(
    domain: &ChartDomain,
    field: &ScalarField,
    p: &ChartPoint,
    multi_index: &[usize],
) -> Result<f64> {
    partial_derivative_with(Backend::Jet, domain, field, p, multi_index)
}

pub fn partial_derivative_with(
    backend: Backend,
    domain: &ChartDomain,
    field: &ScalarField,
    p: &ChartPoint,
    multi_index: &[usize],
) -> Result<f64> {
    precheck(domain, field, p, multi_index)?;
    match backend {
        Backend::Jet => {
            let jet = field.jet_at(p, multi_index.len())?;
            Ok(jet
                .partial(multi_index)
                .expect("jet built to the requested order"))
        }
        Backend::Richardson => Ok(richardson(domain, field, p, multi_index)),
    }
}

fn richardson(domain: &ChartDomain, field: &ScalarField, p: &ChartPoint, idx: &[usize]) -> f64 {
    let layout = JetLayout::new(domain.dim(), 0);
    let eval = |x: &[f64]| {
        let pt = ChartPoint::new(x.to_vec());
        field.eval_jet(&coordinate_jets(&layout, &pt)).value()
    };
    let base: Vec<f64> = (0..domain.dim()).map(|a| domain.step(a)).collect();
    let estimate = |scale: f64| {
        let steps: Vec<f64> = base.iter().map(|h| h * scale).collect();
        let mut x = p.coords().to_vec();
        nested_central(&eval, &mut x, idx, &steps)
    };
    let (a0, a1, a2) = (estimate(1.0), estimate(0.5), estimate(0.25));
    // the nested stencil error expands in even powers of h
    let b0 = (4.0 * a1 - a0) / 3.0;
    let b1 = (4.0 * a2 - a1) / 3.0;
    (16.0 * b1 - b0) / 15.0
}

fn nested_central(eval: &dyn Fn(&[f64]) -> f64, x: &mut [f64], idx: &[usize], steps: &[f64]) -> f64 {
    match idx.split_first() {
        None => eval(x),
        Some((&axis, rest)) => {
            let h = steps[axis];
            let x0 = x[axis];
            x[axis] = x0 + h;
            let plus = nested_central(eval, x, rest, steps);
            x[axis] = x0 - h;
            let minus = nested_central(eval, x, rest, steps);
            x[axis] = x0;
            (plus - minus) / (2.0 * h)
        }
    }
}
