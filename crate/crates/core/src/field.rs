//! Smooth fields given by closed-form component functions.
//!
//! Component functions are written once against [`Jet`] arguments, so the
//! same closure serves plain evaluation (degree-0 jets) and every
//! derivative the curvature pipeline asks for.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::chart::ChartPoint;
use crate::error::{LabError, Result};
use crate::jet::{Jet, JetLayout};

/// Condition-number ceiling for index raising.
pub const CONDITION_LIMIT: f64 = 1e10;

type ScalarFn = dyn Fn(&[Jet]) -> Jet + Send + Sync;
type ComponentsFn = dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync;

/// Coordinate functions `x_i` expanded around `p`.
pub fn coordinate_jets(layout: &Arc<JetLayout>, p: &ChartPoint) -> Vec<Jet> {
    p.coords()
        .iter()
        .enumerate()
        .map(|(i, &x)| Jet::variable(layout, i, x))
        .collect()
}

fn check_dim(expected: usize, p: &ChartPoint) -> Result<()> {
    if p.dim() == expected {
        Ok(())
    } else {
        Err(LabError::DimensionMismatch {
            expected,
            got: p.dim(),
        })
    }
}

#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    func: Arc<ScalarFn>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField(dim = {})", self.dim)
    }
}

impl ScalarField {
    pub fn new(dim: usize, func: impl Fn(&[Jet]) -> Jet + Send + Sync + 'static) -> Self {
        Self {
            dim,
            func: Arc::new(func),
        }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Self::new(dim, move |x| x[0].constant_like(value))
    }

    pub fn coordinate(dim: usize, axis: usize) -> Self {
        assert!(axis < dim);
        Self::new(dim, move |x| x[axis].clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval_jet(&self, x: &[Jet]) -> Jet {
        (self.func)(x)
    }

    /// Taylor expansion of the field around `p` to total degree `order`.
    pub fn jet_at(&self, p: &ChartPoint, order: usize) -> Result<Jet> {
        check_dim(self.dim, p)?;
        let layout = JetLayout::new(self.dim, order);
        Ok(self.eval_jet(&coordinate_jets(&layout, p)))
    }

    pub fn value(&self, p: &ChartPoint) -> Result<f64> {
        Ok(self.jet_at(p, 0)?.value())
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &ScalarField, b: f64) -> Self {
        let (f, g) = (self.clone(), other.clone());
        Self::new(self.dim, move |x| f.eval_jet(x).scale(a) + g.eval_jet(x).scale(b))
    }

    /// Precomposition with a chart map given in jets.
    pub fn pullback(
        &self,
        dim: usize,
        map: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    ) -> Self {
        let f = self.clone();
        Self::new(dim, move |x| f.eval_jet(&map(x)))
    }
}

#[derive(Clone)]
struct ComponentField {
    dim: usize,
    func: Arc<ComponentsFn>,
}

impl ComponentField {
    fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        let out = (self.func)(x);
        if out.len() != self.dim {
            return Err(LabError::DimensionMismatch {
                expected: self.dim,
                got: out.len(),
            });
        }
        Ok(out)
    }

    fn values(&self, p: &ChartPoint) -> Result<Vec<f64>> {
        check_dim(self.dim, p)?;
        let layout = JetLayout::new(self.dim, 0);
        Ok(self
            .eval(&coordinate_jets(&layout, p))?
            .iter()
            .map(Jet::value)
            .collect())
    }
}

/// Contravariant components `X^i`.
#[derive(Clone)]
pub struct VectorField(ComponentField);

/// Covariant components `eta_i`.
#[derive(Clone)]
pub struct OneFormField(ComponentField);

macro_rules! component_field_api {
    ($ty:ident) => {
        impl $ty {
            pub fn new(
                dim: usize,
                func: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
            ) -> Self {
                Self(ComponentField {
                    dim,
                    func: Arc::new(func),
                })
            }

            pub fn zero(dim: usize) -> Self {
                Self::new(dim, move |x| vec![x[0].zero_like(); dim])
            }

            pub fn dim(&self) -> usize {
                self.0.dim
            }

            pub fn eval_jet(&self, x: &[Jet]) -> Result<Vec<Jet>> {
                self.0.eval(x)
            }

            pub fn values(&self, p: &ChartPoint) -> Result<Vec<f64>> {
                self.0.values(p)
            }
        }

        impl fmt::Debug for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!(stringify!($ty), "(dim = {})"), self.0.dim)
            }
        }
    };
}

component_field_api!(VectorField);
component_field_api!(OneFormField);

impl VectorField {
    /// The position field `x^i d/dx^i`.
    pub fn position(dim: usize) -> Self {
        Self::new(dim, |x| x.to_vec())
    }
}

/// Riemannian metric components; only the upper triangle is ever evaluated.
#[derive(Clone)]
pub struct MetricField {
    dim: usize,
    upper: Arc<ComponentsFn>,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MetricField(dim = {})", self.dim)
    }
}

impl MetricField {
    /// `upper` returns `g_ij` for `i <= j` in row-major order.
    pub fn from_upper(
        dim: usize,
        upper: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            upper: Arc::new(upper),
        }
    }

    pub fn diagonal(dim: usize, diag: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static) -> Self {
        Self::from_upper(dim, move |x| {
            let d = diag(x);
            let mut out = Vec::with_capacity(dim * (dim + 1) / 2);
            for i in 0..dim {
                for j in i..dim {
                    out.push(if i == j { d[i].clone() } else { x[0].zero_like() });
                }
            }
            out
        })
    }

    /// `g = factor(x) * delta`.
    pub fn conformally_flat(
        dim: usize,
        factor: impl Fn(&[Jet]) -> Jet + Send + Sync + 'static,
    ) -> Self {
        Self::diagonal(dim, move |x| vec![factor(x); dim])
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::conformally_flat(dim, |x| x[0].constant_like(1.0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Full symmetric component matrix as jets.
    pub fn eval_jet(&self, x: &[Jet]) -> Result<Vec<Vec<Jet>>> {
        let n = self.dim;
        let upper = (self.upper)(x);
        if upper.len() != n * (n + 1) / 2 {
            return Err(LabError::DimensionMismatch {
                expected: n * (n + 1) / 2,
                got: upper.len(),
            });
        }
        let mut g = vec![vec![x[0].zero_like(); n]; n];
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                g[i][j] = upper[k].clone();
                g[j][i] = upper[k].clone();
                k += 1;
            }
        }
        Ok(g)
    }

    pub fn value_at(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        check_dim(self.dim, p)?;
        let layout = JetLayout::new(self.dim, 0);
        let g = self.eval_jet(&coordinate_jets(&layout, p))?;
        Ok(DMatrix::from_fn(self.dim, self.dim, |i, j| g[i][j].value()))
    }

    /// Component values at `p` after the positivity and conditioning checks.
    pub fn checked_value_at(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        let g = self.value_at(p)?;
        check_spd(&g)?;
        Ok(g)
    }
}

/// Rejects matrices that are indefinite, non-finite, or too badly conditioned to invert.
pub fn check_spd(g: &DMatrix<f64>) -> Result<()> {
    if g.iter().any(|v| !v.is_finite()) {
        return Err(LabError::MetricSingular {
            condition: f64::INFINITY,
        });
    }
    let eig = SymmetricEigen::new(g.clone());
    let min = eig.eigenvalues.min();
    let max = eig.eigenvalues.max();
    if min <= 0.0 {
        return Err(LabError::NotSpd { min_eigenvalue: min });
    }
    let condition = max / min;
    if condition > CONDITION_LIMIT {
        return Err(LabError::MetricSingular { condition });
    }
    Ok(())
}
