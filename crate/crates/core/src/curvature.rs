//! Levi-Civita connection, Ricci curvature and covariant calculus at a point.
//!
//! [`LocalGeometry`] expands the metric around a point as Taylor jets and
//! runs the whole pipeline in jet arithmetic. Every derived quantity is
//! therefore itself a jet, and derivatives of derived fields (the gradient
//! and Laplacian of the scalar curvature, the divergence of Ricci) come from
//! differentiating those jets rather than from longer tensor formulas.
//!
//! Sign convention: `R_ij = d_k G^k_ij - d_j G^k_ik + G^k_kl G^l_ij - G^k_jl G^l_ik`,
//! which makes the round sphere positively curved.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::chart::ChartPoint;
use crate::error::{LabError, Result};
use crate::field::{check_spd, coordinate_jets, MetricField, OneFormField, ScalarField, VectorField};
use crate::jet::{Jet, JetLayout};

pub type JetMatrix = Vec<Vec<Jet>>;

/// Symmetric covariant 2-tensor at a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sym2Tensor {
    components: Vec<Vec<f64>>,
}

impl Sym2Tensor {
    /// Symmetrizes `m`; the input is expected to be symmetric up to rounding.
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let components = (0..n)
            .map(|i| (0..n).map(|j| 0.5 * (m[(i, j)] + m[(j, i)])).collect())
            .collect();
        Self { components }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            components: vec![vec![0.0; n]; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.components[i][j]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.components[i][j])
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `sqrt(T_ij T_kl g^ik g^jl)` for the given inverse metric.
    pub fn g_norm(&self, inverse_metric: &DMatrix<f64>) -> f64 {
        let t = self.to_matrix();
        let raised = inverse_metric * &t * inverse_metric;
        t.component_mul(&raised).sum().max(0.0).sqrt()
    }

    pub fn add(&self, other: &Sym2Tensor) -> Sym2Tensor {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Sym2Tensor) -> Sym2Tensor {
        self.zip(other, |a, b| a - b)
    }

    pub fn scaled(&self, s: f64) -> Sym2Tensor {
        Sym2Tensor {
            components: self
                .components
                .iter()
                .map(|row| row.iter().map(|v| v * s).collect())
                .collect(),
        }
    }

    fn zip(&self, other: &Sym2Tensor, op: impl Fn(f64, f64) -> f64) -> Sym2Tensor {
        Sym2Tensor {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| op(*x, *y)).collect())
                .collect(),
        }
    }
}

/// Christoffel symbols `G^k_ij` at a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `G^k_ij`.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureBundle {
    pub christoffel: Christoffel,
    pub ricci: Sym2Tensor,
    pub scalar: f64,
    pub ricci_norm_sq: f64,
    pub at: ChartPoint,
}

/// Metric, connection and Ricci curvature expanded around one point.
pub struct LocalGeometry {
    dim: usize,
    point: ChartPoint,
    layout: Arc<JetLayout>,
    coords: Vec<Jet>,
    g: JetMatrix,
    ginv: JetMatrix,
    // gamma[k][i][j] = G^k_ij
    gamma: Vec<JetMatrix>,
    ricci: JetMatrix,
    scalar: Jet,
}

impl LocalGeometry {
    /// Expands `metric` to total degree `order` (2..=4) around `p`.
    ///
    /// The connection is then good to degree `order - 1` and Ricci and the
    /// scalar curvature to degree `order - 2`.
    pub fn new(metric: &MetricField, p: &ChartPoint, order: usize) -> Result<Self> {
        if order > crate::diff::MAX_DERIVATIVE_ORDER {
            return Err(LabError::OrderTooHigh {
                requested: order,
                max: crate::diff::MAX_DERIVATIVE_ORDER,
            });
        }
        let order = order.max(2);
        let n = metric.dim();
        if p.dim() != n {
            return Err(LabError::DimensionMismatch {
                expected: n,
                got: p.dim(),
            });
        }
        let layout = JetLayout::new(n, order);
        let coords = coordinate_jets(&layout, p);
        let g = metric.eval_jet(&coords)?;
        let g0 = DMatrix::from_fn(n, n, |i, j| g[i][j].value());
        check_spd(&g0)?;
        let ginv = inverse_series(&g, &g0, &layout);

        // dg[a][b][c] = d_a g_bc
        let dg: Vec<JetMatrix> = (0..n)
            .map(|a| {
                g.iter()
                    .map(|row| row.iter().map(|gbc| gbc.diff(a)).collect())
                    .collect()
            })
            .collect();

        let zero = Jet::constant(&layout, 0.0);
        let mut gamma = vec![vec![vec![zero.clone(); n]; n]; n];
        for i in 0..n {
            for j in i..n {
                // first kind: G_lij = (d_i g_jl + d_j g_il - d_l g_ij) / 2
                let first: Vec<Jet> = (0..n)
                    .map(|l| (&dg[i][j][l] + &dg[j][i][l] - &dg[l][i][j]).scale(0.5))
                    .collect();
                for k in 0..n {
                    let mut acc = &ginv[k][0] * &first[0];
                    for l in 1..n {
                        acc += &ginv[k][l] * &first[l];
                    }
                    gamma[k][i][j] = acc.clone();
                    gamma[k][j][i] = acc;
                }
            }
        }

        // contracted symbols G^k_ik
        let trace_gamma: Vec<Jet> = (0..n)
            .map(|i| {
                let mut acc = gamma[0][i][0].clone();
                for k in 1..n {
                    acc += &gamma[k][i][k];
                }
                acc
            })
            .collect();

        let mut ricci = vec![vec![zero.clone(); n]; n];
        for i in 0..n {
            for j in i..n {
                let mut acc = zero.clone();
                for k in 0..n {
                    acc += gamma[k][i][j].diff(k);
                }
                acc -= trace_gamma[i].diff(j);
                for l in 0..n {
                    acc += &trace_gamma[l] * &gamma[l][i][j];
                }
                for k in 0..n {
                    for l in 0..n {
                        acc -= &gamma[k][j][l] * &gamma[l][i][k];
                    }
                }
                ricci[i][j] = acc.clone();
                ricci[j][i] = acc;
            }
        }

        let mut geom = Self {
            dim: n,
            point: p.clone(),
            layout,
            coords,
            g,
            ginv,
            gamma,
            ricci,
            scalar: zero,
        };
        geom.scalar = geom.trace(&geom.ricci.clone());
        Ok(geom)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self) -> &ChartPoint {
        &self.point
    }

    pub fn layout(&self) -> &Arc<JetLayout> {
        &self.layout
    }

    pub fn coordinates(&self) -> &[Jet] {
        &self.coords
    }

    pub fn metric_jets(&self) -> &JetMatrix {
        &self.g
    }

    pub fn inverse_metric_jets(&self) -> &JetMatrix {
        &self.ginv
    }

    pub fn christoffel_jets(&self) -> &[JetMatrix] {
        &self.gamma
    }

    pub fn ricci_jets(&self) -> &JetMatrix {
        &self.ricci
    }

    pub fn scalar_jet(&self) -> &Jet {
        &self.scalar
    }

    pub fn metric(&self) -> DMatrix<f64> {
        values(&self.g)
    }

    pub fn inverse_metric(&self) -> DMatrix<f64> {
        values(&self.ginv)
    }

    pub fn christoffel(&self) -> Christoffel {
        let n = self.dim;
        let mut data = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    data.push(self.gamma[k][i][j].value());
                }
            }
        }
        Christoffel { dim: n, data }
    }

    pub fn ricci(&self) -> Sym2Tensor {
        Sym2Tensor::from_matrix(&values(&self.ricci))
    }

    pub fn scalar(&self) -> f64 {
        self.scalar.value()
    }

    /// `|Ric|^2 = R_ij R^ij`.
    pub fn ricci_norm_sq(&self) -> f64 {
        self.norm_sq(&self.ricci).value()
    }

    /// `Q^i_j = g^ik R_kj`.
    pub fn ricci_operator(&self) -> DMatrix<f64> {
        self.inverse_metric() * values(&self.ricci)
    }

    pub fn bundle(&self) -> CurvatureBundle {
        CurvatureBundle {
            christoffel: self.christoffel(),
            ricci: self.ricci(),
            scalar: self.scalar(),
            ricci_norm_sq: self.ricci_norm_sq(),
            at: self.point.clone(),
        }
    }

    fn require(&self, jet: &Jet, needed: usize) -> Result<()> {
        if jet.order() < needed {
            Err(LabError::OrderTooHigh {
                requested: needed + (self.layout.order() - jet.order()),
                max: self.layout.order(),
            })
        } else {
            Ok(())
        }
    }

    /// `d_i R`; needs an expansion of degree >= 3.
    pub fn grad_scalar_curvature(&self) -> Result<Vec<f64>> {
        self.require(&self.scalar, 1)?;
        Ok((0..self.dim).map(|i| self.scalar.diff(i).value()).collect())
    }

    /// `Delta R`; needs an expansion of degree 4.
    pub fn laplacian_scalar_curvature(&self) -> Result<f64> {
        self.require(&self.scalar, 2)?;
        Ok(self.laplacian(&self.scalar).value())
    }

    /// Expansion of a scalar field around the same point.
    pub fn expand(&self, f: &ScalarField) -> Result<Jet> {
        if f.dim() != self.dim {
            return Err(LabError::DimensionMismatch {
                expected: self.dim,
                got: f.dim(),
            });
        }
        Ok(f.eval_jet(&self.coords))
    }

    pub fn expand_vector(&self, x: &VectorField) -> Result<Vec<Jet>> {
        x.eval_jet(&self.coords)
    }

    pub fn expand_form(&self, eta: &OneFormField) -> Result<Vec<Jet>> {
        eta.eval_jet(&self.coords)
    }

    /// `g^ij T_ij`.
    pub fn trace(&self, t: &JetMatrix) -> Jet {
        let mut acc = &self.ginv[0][0] * &t[0][0];
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i + j > 0 {
                    acc += &self.ginv[i][j] * &t[i][j];
                }
            }
        }
        acc
    }

    /// `T_ij T_kl g^ik g^jl`.
    pub fn norm_sq(&self, t: &JetMatrix) -> Jet {
        let raised = self.raise_both(t);
        let mut acc = &t[0][0] * &raised[0][0];
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i + j > 0 {
                    acc += &t[i][j] * &raised[i][j];
                }
            }
        }
        acc
    }

    fn raise_both(&self, t: &JetMatrix) -> JetMatrix {
        let n = self.dim;
        let left = mat_mul(&self.ginv, t, n);
        mat_mul(&left, &self.ginv, n)
    }

    /// `V^i = g^ij w_j`.
    pub fn raise(&self, w: &[Jet]) -> Vec<Jet> {
        (0..self.dim)
            .map(|i| {
                let mut acc = &self.ginv[i][0] * &w[0];
                for j in 1..self.dim {
                    acc += &self.ginv[i][j] * &w[j];
                }
                acc
            })
            .collect()
    }

    /// `w_i = g_ij V^j`.
    pub fn lower(&self, v: &[Jet]) -> Vec<Jet> {
        (0..self.dim)
            .map(|i| {
                let mut acc = &self.g[i][0] * &v[0];
                for j in 1..self.dim {
                    acc += &self.g[i][j] * &v[j];
                }
                acc
            })
            .collect()
    }

    /// `g^ij a_i b_j`.
    pub fn inner_forms(&self, a: &[Jet], b: &[Jet]) -> Jet {
        let raised = self.raise(b);
        dot(a, &raised)
    }

    /// `T(u, v) = T_ij u^i v^j`.
    pub fn contract(&self, t: &JetMatrix, u: &[Jet], v: &[Jet]) -> Jet {
        let tv: Vec<Jet> = t.iter().map(|row| dot(row, v)).collect();
        dot(u, &tv)
    }

    /// Covariant Hessian `d_i d_j s - G^k_ij d_k s`.
    pub fn hessian(&self, s: &Jet) -> JetMatrix {
        let ds = s.gradient();
        let n = self.dim;
        let mut h = vec![vec![s.zero_like(); n]; n];
        for i in 0..n {
            for j in i..n {
                let mut acc = ds[j].diff(i);
                for k in 0..n {
                    acc -= &self.gamma[k][i][j] * &ds[k];
                }
                h[i][j] = acc.clone();
                h[j][i] = acc;
            }
        }
        h
    }

    pub fn laplacian(&self, s: &Jet) -> Jet {
        self.trace(&self.hessian(s))
    }

    /// `nabla_k w_i = d_k w_i - G^m_ki w_m`, indexed `[k][i]`.
    pub fn covariant_derivative_form(&self, w: &[Jet]) -> JetMatrix {
        let n = self.dim;
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|i| {
                        let mut acc = w[i].diff(k);
                        for m in 0..n {
                            acc -= &self.gamma[m][k][i] * &w[m];
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    /// `nabla_k V^i = d_k V^i + G^i_kj V^j`, indexed `[k][i]`.
    pub fn covariant_derivative_vector(&self, v: &[Jet]) -> JetMatrix {
        let n = self.dim;
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|i| {
                        let mut acc = v[i].diff(k);
                        for j in 0..n {
                            acc += &self.gamma[i][k][j] * &v[j];
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    /// `nabla_k T_ij = d_k T_ij - G^m_ki T_mj - G^m_kj T_im`, indexed `[k][i][j]`.
    pub fn covariant_derivative_2form(&self, t: &JetMatrix) -> Vec<JetMatrix> {
        let n = self.dim;
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                let mut acc = t[i][j].diff(k);
                                for m in 0..n {
                                    acc -= &self.gamma[m][k][i] * &t[m][j];
                                    acc -= &self.gamma[m][k][j] * &t[i][m];
                                }
                                acc
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// `(L_X g)_ij = X^k d_k g_ij + g_kj d_i X^k + g_ik d_j X^k`.
    pub fn lie_derivative_metric(&self, x: &[Jet]) -> JetMatrix {
        let n = self.dim;
        let dx: Vec<Vec<Jet>> = x.iter().map(|xk| xk.gradient()).collect();
        let mut out = vec![vec![self.scalar.zero_like(); n]; n];
        for i in 0..n {
            for j in i..n {
                let mut acc = &x[0] * &self.g[i][j].diff(0);
                for k in 1..n {
                    acc += &x[k] * &self.g[i][j].diff(k);
                }
                for k in 0..n {
                    acc += &self.g[k][j] * &dx[k][i];
                    acc += &self.g[i][k] * &dx[k][j];
                }
                out[i][j] = acc.clone();
                out[j][i] = acc;
            }
        }
        out
    }
}

/// `g^{-1} = sum_k (-A N)^k A` with `A = g(p)^{-1}` and `N = g - g(p)` nilpotent.
fn inverse_series(g: &JetMatrix, g0: &DMatrix<f64>, layout: &Arc<JetLayout>) -> JetMatrix {
    let n = g0.nrows();
    let a = g0
        .clone()
        .cholesky()
        .expect("positive definite after check")
        .inverse();
    let a_jet: JetMatrix = (0..n)
        .map(|i| (0..n).map(|j| Jet::constant(layout, a[(i, j)])).collect())
        .collect();
    let nil: JetMatrix = (0..n)
        .map(|i| (0..n).map(|j| &g[i][j] - g0[(i, j)]).collect())
        .collect();
    // -A N
    let step: JetMatrix = mat_mul(&a_jet, &nil, n)
        .into_iter()
        .map(|row| row.into_iter().map(|v| -v).collect())
        .collect();
    let mut term = a_jet.clone();
    let mut total = a_jet;
    for _ in 0..layout.order() {
        term = mat_mul(&step, &term, n);
        for i in 0..n {
            for j in 0..n {
                total[i][j] += &term[i][j];
            }
        }
    }
    // symmetrize to keep g^ij = g^ji exactly
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (&total[i][j] + &total[j][i]).scale(0.5);
            total[i][j] = avg.clone();
            total[j][i] = avg;
        }
    }
    total
}

fn mat_mul(a: &JetMatrix, b: &JetMatrix, n: usize) -> JetMatrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut acc = &a[i][0] * &b[0][j];
                    for l in 1..n {
                        acc += &a[i][l] * &b[l][j];
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

pub(crate) fn dot(a: &[Jet], b: &[Jet]) -> Jet {
    let mut acc = &a[0] * &b[0];
    for (x, y) in a.iter().zip(b).skip(1) {
        acc += x * y;
    }
    acc
}

pub(crate) fn values(m: &JetMatrix) -> DMatrix<f64> {
    let n = m.len();
    DMatrix::from_fn(n, n, |i, j| m[i][j].value())
}

pub fn christoffel(g: &MetricField, p: &ChartPoint) -> Result<Christoffel> {
    Ok(LocalGeometry::new(g, p, 2)?.christoffel())
}

pub fn ricci(g: &MetricField, p: &ChartPoint) -> Result<Sym2Tensor> {
    Ok(LocalGeometry::new(g, p, 2)?.ricci())
}

pub fn scalar_curvature(g: &MetricField, p: &ChartPoint) -> Result<f64> {
    Ok(LocalGeometry::new(g, p, 2)?.scalar())
}

pub fn curvature_bundle(g: &MetricField, p: &ChartPoint) -> Result<CurvatureBundle> {
    Ok(LocalGeometry::new(g, p, 2)?.bundle())
}

pub fn hessian(g: &MetricField, f: &ScalarField, p: &ChartPoint) -> Result<Sym2Tensor> {
    let geom = LocalGeometry::new(g, p, 2)?;
    let fj = geom.expand(f)?;
    Ok(Sym2Tensor::from_matrix(&values(&geom.hessian(&fj))))
}

pub fn laplacian(g: &MetricField, f: &ScalarField, p: &ChartPoint) -> Result<f64> {
    let geom = LocalGeometry::new(g, p, 2)?;
    let fj = geom.expand(f)?;
    Ok(geom.laplacian(&fj).value())
}

/// Contravariant gradient `(grad f)^i = g^ij d_j f`.
pub fn gradient(g: &MetricField, f: &ScalarField, p: &ChartPoint) -> Result<Vec<f64>> {
    let geom = LocalGeometry::new(g, p, 2)?;
    let fj = geom.expand(f)?;
    Ok(geom.raise(&fj.gradient()).iter().map(Jet::value).collect())
}

pub fn grad_norm_sq(g: &MetricField, f: &ScalarField, p: &ChartPoint) -> Result<f64> {
    let geom = LocalGeometry::new(g, p, 2)?;
    let df = geom.expand(f)?.gradient();
    Ok(geom.inner_forms(&df, &df).value())
}

pub fn lie_derivative_metric(g: &MetricField, x: &VectorField, p: &ChartPoint) -> Result<Sym2Tensor> {
    let geom = LocalGeometry::new(g, p, 2)?;
    let xj = geom.expand_vector(x)?;
    Ok(Sym2Tensor::from_matrix(&values(&geom.lie_derivative_metric(&xj))))
}

pub fn ricci_operator(g: &MetricField, p: &ChartPoint) -> Result<DMatrix<f64>> {
    Ok(LocalGeometry::new(g, p, 2)?.ricci_operator())
}

pub fn grad_scalar_curvature(g: &MetricField, p: &ChartPoint) -> Result<Vec<f64>> {
    LocalGeometry::new(g, p, 3)?.grad_scalar_curvature()
}

pub fn laplacian_scalar_curvature(g: &MetricField, p: &ChartPoint) -> Result<f64> {
    LocalGeometry::new(g, p, 4)?.laplacian_scalar_curvature()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn polar_s2() -> MetricField {
        // coordinates (theta, phi)
        MetricField::diagonal(2, |x| vec![x[0].constant_like(1.0), x[0].sin().square()])
    }

    fn half_space() -> MetricField {
        MetricField::conformally_flat(3, |x| x[2].powi(-2))
    }

    #[test]
    fn flat_space_has_no_connection_or_curvature() {
        let g = MetricField::euclidean(3);
        let p = ChartPoint::from([0.3, -0.2, 1.1]);
        let b = curvature_bundle(&g, &p).unwrap();
        assert_eq!(b.christoffel.max_abs(), 0.0);
        assert_eq!(b.ricci.max_abs(), 0.0);
        assert_eq!(b.scalar, 0.0);
        assert_eq!(ricci_operator(&g, &p).unwrap().amax(), 0.0);
    }

    #[test]
    fn round_s2_christoffel() {
        let theta = PI / 3.0;
        let c = christoffel(&polar_s2(), &ChartPoint::from([theta, 0.4])).unwrap();
        // G^theta_phiphi = -sin cos = -sqrt(3)/4
        assert!((c.get(0, 1, 1) + 3f64.sqrt() / 4.0).abs() < 1e-15);
        // G^phi_thetaphi = cot theta
        assert!((c.get(1, 0, 1) - 1.0 / theta.tan()).abs() < 1e-15);
        assert_eq!(c.get(1, 0, 1), c.get(1, 1, 0));
        let r = scalar_curvature(&polar_s2(), &ChartPoint::from([theta, 0.4])).unwrap();
        assert!((r - 2.0).abs() < 1e-14);
    }

    #[test]
    fn christoffel_is_scale_invariant_and_scalar_scales() {
        let g = half_space();
        let c2 = 2.5f64;
        let scaled = MetricField::conformally_flat(3, move |x| x[2].powi(-2).scale(c2 * c2));
        let p = ChartPoint::from([0.1, 0.2, 0.9]);
        let a = christoffel(&g, &p).unwrap();
        let b = christoffel(&scaled, &p).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    assert!((a.get(k, i, j) - b.get(k, i, j)).abs() < 1e-14);
                }
            }
        }
        let r = scalar_curvature(&g, &p).unwrap();
        let rs = scalar_curvature(&scaled, &p).unwrap();
        assert!((rs - r / (c2 * c2)).abs() < 1e-13);
    }

    #[test]
    fn hyperbolic_space_is_einstein() {
        let p = ChartPoint::from([0.2, -0.3, 1.4]);
        let geom = LocalGeometry::new(&half_space(), &p, 4).unwrap();
        assert!((geom.scalar() + 6.0).abs() < 1e-12);
        let diff = geom.ricci().to_matrix() + geom.metric() * 2.0;
        assert!(diff.amax() < 1e-12);
        let q = geom.ricci_operator();
        assert!((q - DMatrix::identity(3, 3) * -2.0).amax() < 1e-12);
        assert!(geom.grad_scalar_curvature().unwrap().iter().all(|v| v.abs() < 1e-11));
        assert!(geom.laplacian_scalar_curvature().unwrap().abs() < 1e-10);
    }

    #[test]
    fn flat_quadratic_hessian() {
        let g = MetricField::euclidean(3);
        let f = ScalarField::new(3, |x| crate::curvature::dot(x, x).scale(0.5));
        let p = ChartPoint::from([1.0, 2.0, -0.5]);
        let h = hessian(&g, &f, &p).unwrap();
        assert!((h.to_matrix() - DMatrix::identity(3, 3)).amax() < 1e-15);
        assert!((laplacian(&g, &f, &p).unwrap() - 3.0).abs() < 1e-15);
        assert!((grad_norm_sq(&g, &f, &p).unwrap() - 5.25).abs() < 1e-14);
        assert_eq!(gradient(&g, &f, &p).unwrap(), vec![1.0, 2.0, -0.5]);
        let c = ScalarField::constant(3, 4.0);
        assert_eq!(hessian(&g, &c, &p).unwrap().max_abs(), 0.0);
        assert_eq!(laplacian(&g, &c, &p).unwrap(), 0.0);
        assert_eq!(grad_norm_sq(&g, &c, &p).unwrap(), 0.0);
    }

    #[test]
    fn lie_derivative_of_position_field_is_twice_metric() {
        let g = MetricField::euclidean(3);
        let p = ChartPoint::from([0.4, 0.1, -0.7]);
        let l = lie_derivative_metric(&g, &VectorField::position(3), &p).unwrap();
        assert!((l.to_matrix() - DMatrix::identity(3, 3) * 2.0).amax() < 1e-15);
        let z = lie_derivative_metric(&g, &VectorField::zero(3), &p).unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn lie_derivative_of_gradient_is_twice_hessian() {
        let g = half_space();
        let f = ScalarField::new(3, |x| (&x[0] * &x[2]).sin() + &x[1] * &x[1] * &x[2]);
        let p = ChartPoint::from([0.3, 0.5, 1.2]);
        let geom = LocalGeometry::new(&g, &p, 3).unwrap();
        let fj = geom.expand(&f).unwrap();
        let grad = geom.raise(&fj.gradient());
        let lie = values(&geom.lie_derivative_metric(&grad));
        let hess = values(&geom.hessian(&fj));
        assert!((lie - hess * 2.0).amax() < 1e-9);
        // covariant form nabla_i X_j + nabla_j X_i of the same field
        let low = geom.lower(&grad);
        let nab = geom.covariant_derivative_form(&low);
        let sym = DMatrix::from_fn(3, 3, |i, j| nab[i][j].value() + nab[j][i].value());
        assert!((sym - values(&geom.lie_derivative_metric(&grad))).amax() < 1e-9);
    }

    #[test]
    fn too_shallow_expansion_is_reported() {
        let geom = LocalGeometry::new(&half_space(), &ChartPoint::from([0.0, 0.0, 1.0]), 2).unwrap();
        assert!(matches!(
            geom.grad_scalar_curvature(),
            Err(LabError::OrderTooHigh { .. })
        ));
        assert!(matches!(
            LocalGeometry::new(&half_space(), &ChartPoint::from([0.0, 0.0, 1.0]), 5),
            Err(LabError::OrderTooHigh { .. })
        ));
    }

    #[test]
    fn singular_metric_is_rejected() {
        let g = MetricField::diagonal(3, |x| vec![x[0].constant_like(1.0), x[0].constant_like(1.0), &x[2] * &x[2]]);
        assert!(matches!(
            ricci(&g, &ChartPoint::from([0.0, 0.0, 1e-6])),
            Err(LabError::MetricSingular { .. })
        ));
    }
}
