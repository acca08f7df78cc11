//! Integration over compact catalog entries.
//!
//! The sphere is covered by its two stereographic charts. Each chart
//! integrates over the ball `|x| < cut` in spherical coordinates with
//! tensor-product Gauss-Legendre rules, and a mollifier partition of unity
//! splits every point between the charts.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{Atlas, CatalogEntry, CatalogInstance};
use crate::chart::ChartPoint;
use crate::curvature::LocalGeometry;
use crate::error::{LabError, Result};
use crate::field::{coordinate_jets, ScalarField};
use crate::jet::{Jet, JetLayout};
use crate::identities::{tolerance, IdentityResidual};
use crate::soliton::{residual_on, SolitonInstance, STEADY_TOLERANCE};

pub const MIN_RESOLUTION: usize = 8;
/// Default chart cutoff radius in stereographic coordinates.
pub const DEFAULT_CUT: f64 = 1.5;
/// Seeded points per chart on which an instance is verified before integrating.
const VERIFY_POINTS: usize = 20;

/// `exp(-1 / (1 - (s / cut)^2))` inside the cut, zero outside.
fn bump(s: f64, cut: f64) -> f64 {
    let t = s / cut;
    if t >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

/// `sqrt(det g)` through a Cholesky factor, which also certifies positivity.
fn volume_density(g: &DMatrix<f64>) -> Result<f64> {
    let chol = Cholesky::new(g.clone()).ok_or_else(|| LabError::NotSpd {
        min_eigenvalue: g.symmetric_eigenvalues().min(),
    })?;
    Ok(chol.l_dirty().diagonal().iter().take(g.nrows()).product::<f64>().abs())
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadratureNode {
    pub chart: usize,
    pub point: ChartPoint,
    /// Rule weight times Jacobian, volume density and partition weight.
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadratureGrid {
    pub resolution: usize,
    /// Cutoff radius of chart 0 and chart 1.
    pub cuts: (f64, f64),
    pub nodes: Vec<QuadratureNode>,
}

fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("resolution checked"));
    rule.as_node_weight_pairs().to_vec()
}

/// Rule on `[a, b]`.
fn mapped(rule: &[(f64, f64)], a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    rule.iter().map(move |&(x, w)| (mid + half * x, half * w))
}

impl QuadratureGrid {
    pub fn new(entry: &CatalogEntry, resolution: usize) -> Result<Self> {
        Self::with_cuts(entry, resolution, (DEFAULT_CUT, DEFAULT_CUT))
    }

    pub fn with_cuts(entry: &CatalogEntry, resolution: usize, cuts: (f64, f64)) -> Result<Self> {
        if !entry.compact {
            return Err(LabError::NotCompact(entry.name.clone()));
        }
        if resolution < MIN_RESOLUTION {
            return Err(LabError::InvalidParameter(format!(
                "quadrature resolution {resolution} is below {MIN_RESOLUTION}"
            )));
        }
        if !(cuts.0 > 1.0 && cuts.1 > 1.0 && cuts.0.is_finite() && cuts.1.is_finite()) {
            return Err(LabError::InvalidParameter(format!(
                "chart cutoffs must exceed 1, got {cuts:?}"
            )));
        }
        match entry.atlas {
            Atlas::Stereographic { .. } if entry.charts.len() == 2 && entry.dim() == 3 => {}
            _ => {
                return Err(LabError::InvalidParameter(format!(
                    "entry `{}` has no two-chart stereographic atlas",
                    entry.name
                )))
            }
        }
        let rule = gauss_legendre(resolution);
        let chart_cuts = [(cuts.0, cuts.1), (cuts.1, cuts.0)];
        let mut nodes = Vec::new();
        for (chart, &(own, other)) in chart_cuts.iter().enumerate() {
            let metric = &entry.charts[chart].metric;
            // the partition weight is 1 below 1/other and smooth above it
            let inner = 1.0 / other;
            let radial: Vec<(f64, f64)> = mapped(&rule, 0.0, inner)
                .chain(mapped(&rule, inner, own))
                .collect();
            for &(r, wr) in &radial {
                let psi = {
                    let a = bump(r, own);
                    a / (a + bump(1.0 / r, other))
                };
                if psi == 0.0 {
                    continue;
                }
                for (c, wc) in mapped(&rule, -1.0, 1.0) {
                    let s = (1.0 - c * c).sqrt();
                    for (phi, wp) in mapped(&rule, 0.0, 2.0 * std::f64::consts::PI) {
                        let point = ChartPoint::new(vec![r * s * phi.cos(), r * s * phi.sin(), r * c]);
                        let density = volume_density(&metric.value_at(&point)?)?;
                        nodes.push(QuadratureNode {
                            chart,
                            point,
                            weight: wr * wc * wp * r * r * density * psi,
                        });
                    }
                }
            }
        }
        Ok(Self {
            resolution,
            cuts,
            nodes,
        })
    }

    /// Sum of `weight * value` in node order; values are computed in parallel.
    pub fn integrate_with<F>(&self, value: F) -> Result<f64>
    where
        F: Fn(usize, &ChartPoint) -> Result<f64> + Sync,
    {
        let terms = self
            .nodes
            .par_iter()
            .map(|n| value(n.chart, &n.point).map(|v| v * n.weight))
            .collect::<Result<Vec<f64>>>()?;
        Ok(terms.iter().sum())
    }

    /// Like [`integrate_with`](Self::integrate_with) with a curvature expansion at each node.
    pub fn integrate_geometric<F>(&self, entry: &CatalogEntry, order: usize, value: F) -> Result<f64>
    where
        F: Fn(usize, &LocalGeometry) -> Result<f64> + Sync,
    {
        self.integrate_with(|chart, p| {
            let geom = LocalGeometry::new(&entry.charts[chart].metric, p, order)?;
            value(chart, &geom)
        })
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }
}

/// Integral of a field given chart by chart; a single field is used on every chart.
pub fn integrate(entry: &CatalogEntry, fields: &[ScalarField], resolution: usize) -> Result<f64> {
    if fields.is_empty() {
        return Err(LabError::InvalidParameter("no field supplied".into()));
    }
    let grid = QuadratureGrid::new(entry, resolution)?;
    integrate_on(&grid, fields)
}

pub fn integrate_on(grid: &QuadratureGrid, fields: &[ScalarField]) -> Result<f64> {
    grid.integrate_with(|chart, p| fields[chart.min(fields.len() - 1)].value(p))
}

/// Pulls a function on the ambient Euclidean space back to every chart.
pub fn ambient_field(entry: &CatalogEntry, ambient: &ScalarField) -> Result<Vec<ScalarField>> {
    (0..entry.charts.len())
        .map(|chart| {
            let embed = entry.atlas.embedding(chart).ok_or_else(|| {
                LabError::InvalidParameter(format!("entry `{}` has no embedding", entry.name))
            })?;
            Ok(ambient.pullback(entry.dim(), move |x| embed(x)))
        })
        .collect()
}

/// `int Delta u` next to its natural scale `int |Delta u|`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DivergenceCheck {
    pub integral: f64,
    pub scale: f64,
}

impl DivergenceCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.integral.abs() <= tol * self.scale
    }
}

/// Per-node data for the Laplacian: `g^ij` and the contracted symbols
/// `g^ij Gamma^k_ij`, computed once and reused for many functions.
pub struct LaplacianTable<'a> {
    grid: &'a QuadratureGrid,
    inverse: Vec<DMatrix<f64>>,
    contracted: Vec<Vec<f64>>,
}

impl<'a> LaplacianTable<'a> {
    pub fn new(grid: &'a QuadratureGrid, entry: &CatalogEntry) -> Result<Self> {
        let per_node = grid
            .nodes
            .par_iter()
            .map(|node| {
                let metric = &entry.charts[node.chart].metric;
                let n = metric.dim();
                let layout = JetLayout::new(n, 1);
                let g = metric.eval_jet(&coordinate_jets(&layout, &node.point))?;
                let value = DMatrix::from_fn(n, n, |i, j| g[i][j].value());
                let ginv = value
                    .clone()
                    .try_inverse()
                    .ok_or(LabError::MetricSingular {
                        condition: f64::INFINITY,
                    })?;
                let d = |k: usize, i: usize, j: usize| g[i][j].partial(&[k]).expect("order 1");
                // Gamma_{l ij} = (d_i g_jl + d_j g_il - d_l g_ij) / 2
                let lowered: Vec<f64> = (0..n)
                    .map(|l| {
                        let mut acc = 0.0;
                        for i in 0..n {
                            for j in 0..n {
                                acc += ginv[(i, j)] * 0.5 * (d(i, j, l) + d(j, i, l) - d(l, i, j));
                            }
                        }
                        acc
                    })
                    .collect();
                let contracted = (0..n)
                    .map(|k| (0..n).map(|l| ginv[(k, l)] * lowered[l]).sum())
                    .collect();
                Ok((ginv, contracted))
            })
            .collect::<Result<Vec<_>>>()?;
        let (inverse, contracted) = per_node.into_iter().unzip();
        Ok(Self {
            grid,
            inverse,
            contracted,
        })
    }

    /// `Delta u` at every node, in node order.
    pub fn laplacians(&self, u: &[ScalarField]) -> Result<Vec<f64>> {
        self.grid
            .nodes
            .par_iter()
            .enumerate()
            .map(|(idx, node)| {
                let f = u[node.chart.min(u.len() - 1)].jet_at(&node.point, 2)?;
                let (ginv, gamma) = (&self.inverse[idx], &self.contracted[idx]);
                let n = gamma.len();
                let mut lap = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        lap += ginv[(i, j)] * f.partial(&[i, j]).expect("order 2");
                    }
                    lap -= gamma[i] * f.partial(&[i]).expect("order 2");
                }
                Ok(lap)
            })
            .collect()
    }

    pub fn check(&self, u: &[ScalarField]) -> Result<DivergenceCheck> {
        let lap = self.laplacians(u)?;
        let weights = self.grid.nodes.iter().map(|n| n.weight);
        let (mut integral, mut scale) = (0.0, 0.0);
        for (l, w) in lap.iter().zip(weights) {
            integral += l * w;
            scale += l.abs() * w;
        }
        Ok(DivergenceCheck { integral, scale })
    }
}

pub fn check_divergence(grid: &QuadratureGrid, entry: &CatalogEntry, u: &[ScalarField]) -> Result<DivergenceCheck> {
    LaplacianTable::new(grid, entry)?.check(u)
}

fn verify_instance(entry: &CatalogEntry, inst: &CatalogInstance) -> Result<()> {
    for (si, pts) in inst.per_chart.iter().zip(entry.sample(VERIFY_POINTS, 0)) {
        for p in &pts {
            let geom = LocalGeometry::new(&si.metric, p, 2)?;
            let r = residual_on(&geom, si)?.max_abs();
            if r > tolerance::SOLITON_RESIDUAL {
                return Err(LabError::NotASoliton {
                    residual: r,
                    tolerance: tolerance::SOLITON_RESIDUAL,
                });
            }
        }
    }
    Ok(())
}

fn potential_of(si: &SolitonInstance) -> Result<&ScalarField> {
    si.kind.potential().ok_or(LabError::WrongKind {
        expected: "gradient (grys or gen-grys)",
    })
}

/// Curvature data at every node of a grid, expanded once and shared by
/// all curvature integrals over the same entry.
pub struct GeometryTable<'a> {
    grid: &'a QuadratureGrid,
    nodes: Vec<NodeGeometry>,
}

struct NodeGeometry {
    inverse: DMatrix<f64>,
    /// `gamma[k][(i, j)] = Gamma^k_ij`.
    gamma: Vec<DMatrix<f64>>,
    ricci: DMatrix<f64>,
    scalar: f64,
}

impl NodeGeometry {
    fn new(geom: &LocalGeometry) -> Self {
        let n = geom.dim();
        let ch = geom.christoffel();
        Self {
            inverse: geom.inverse_metric(),
            gamma: (0..n)
                .map(|k| DMatrix::from_fn(n, n, |i, j| ch.get(k, i, j)))
                .collect(),
            ricci: geom.ricci().to_matrix(),
            scalar: geom.scalar(),
        }
    }

    /// `(Hess f)_ij` and `df` from a degree-2 jet of `f`.
    fn hessian_and_gradient(&self, f: &Jet) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.inverse.nrows();
        let df = DVector::from_fn(n, |i, _| f.partial(&[i]).expect("order 2"));
        let hess = DMatrix::from_fn(n, n, |i, j| {
            let christ: f64 = (0..n).map(|k| self.gamma[k][(i, j)] * df[k]).sum();
            f.partial(&[i, j]).expect("order 2") - christ
        });
        (hess, df)
    }

    fn ricci_of_gradient(&self, df: &DVector<f64>) -> f64 {
        let grad = &self.inverse * df;
        (grad.transpose() * &self.ricci * &grad)[(0, 0)]
    }
}

impl<'a> GeometryTable<'a> {
    pub fn new(grid: &'a QuadratureGrid, entry: &CatalogEntry) -> Result<Self> {
        let nodes = grid
            .nodes
            .par_iter()
            .map(|node| {
                let geom = LocalGeometry::new(&entry.charts[node.chart].metric, &node.point, 2)?;
                Ok(NodeGeometry::new(&geom))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, nodes })
    }

    pub fn grid(&self) -> &QuadratureGrid {
        self.grid
    }

    fn integrate<F>(&self, value: F) -> Result<f64>
    where
        F: Fn(usize, &ChartPoint, &NodeGeometry) -> Result<f64> + Sync,
    {
        let terms = self
            .grid
            .nodes
            .par_iter()
            .zip(self.nodes.par_iter())
            .map(|(node, geo)| value(node.chart, &node.point, geo).map(|v| v * node.weight))
            .collect::<Result<Vec<f64>>>()?;
        Ok(terms.iter().sum())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IntegralInequality {
    /// `k int R^2`.
    pub lhs: f64,
    /// `int Ric(grad f, grad f)`.
    pub rhs: f64,
    /// `(n - 1)/n (beta n/2 - alpha)^2`.
    pub k: f64,
    pub holds: bool,
}

/// `k int R^2 >= int Ric(grad f, grad f)` on a compact steady gradient soliton.
pub fn check_steady_inequality(
    entry: &CatalogEntry,
    inst: &CatalogInstance,
    resolution: usize,
) -> Result<IntegralInequality> {
    precheck_steady_inequality(entry, inst)?;
    let grid = QuadratureGrid::new(entry, resolution)?;
    check_steady_inequality_on(&GeometryTable::new(&grid, entry)?, entry, inst)
}

fn precheck_steady_inequality(entry: &CatalogEntry, inst: &CatalogInstance) -> Result<()> {
    if !entry.compact {
        return Err(LabError::NotCompact(entry.name.clone()));
    }
    let lambda = inst.params().lambda;
    if lambda.abs() > STEADY_TOLERANCE {
        return Err(LabError::NotSteady { lambda });
    }
    for si in &inst.per_chart {
        potential_of(si)?;
    }
    verify_instance(entry, inst)
}

pub fn check_steady_inequality_on(
    table: &GeometryTable,
    entry: &CatalogEntry,
    inst: &CatalogInstance,
) -> Result<IntegralInequality> {
    precheck_steady_inequality(entry, inst)?;
    let params = inst.params();
    let n = entry.dim() as f64;
    let k = (n - 1.0) / n * (params.beta * n / 2.0 - params.alpha).powi(2);
    let int_r2 = table.integrate(|_, _, g| Ok(g.scalar * g.scalar))?;
    let rhs = table.integrate(|c, p, g| {
        let f = potential_of(&inst.per_chart[c])?.jet_at(p, 2)?;
        Ok(g.ricci_of_gradient(&g.hessian_and_gradient(&f).1))
    })?;
    let lhs = k * int_r2;
    let scale = 1.0 + lhs.abs() + rhs.abs();
    Ok(IntegralInequality {
        lhs,
        rhs,
        k,
        holds: lhs >= rhs - tolerance::ORDER_3 * scale,
    })
}

/// `int |Hess f|^2 + {(beta - alpha)/(alpha - beta(n-1))} int Ric(grad f, grad f) = 0`.
pub fn check_hessian_energy(
    entry: &CatalogEntry,
    inst: &CatalogInstance,
    resolution: usize,
) -> Result<IdentityResidual> {
    precheck_hessian_energy(entry, inst)?;
    let grid = QuadratureGrid::new(entry, resolution)?;
    check_hessian_energy_on(&GeometryTable::new(&grid, entry)?, entry, inst)
}

fn precheck_hessian_energy(entry: &CatalogEntry, inst: &CatalogInstance) -> Result<f64> {
    if !entry.compact {
        return Err(LabError::NotCompact(entry.name.clone()));
    }
    let params = inst.params();
    if inst.per_chart.iter().any(|si| si.effective_mu() != 0.0) {
        return Err(LabError::InvalidParameter("hessian energy needs mu = 0".into()));
    }
    let n = entry.dim() as f64;
    let denom = params.alpha - params.beta * (n - 1.0);
    if denom.abs() <= crate::soliton::DEGENERACY_TOLERANCE {
        return Err(LabError::DegenerateDenominator { value: denom });
    }
    for si in &inst.per_chart {
        potential_of(si)?;
    }
    verify_instance(entry, inst)?;
    Ok((params.beta - params.alpha) / denom)
}

pub fn check_hessian_energy_on(
    table: &GeometryTable,
    entry: &CatalogEntry,
    inst: &CatalogInstance,
) -> Result<IdentityResidual> {
    let coef = precheck_hessian_energy(entry, inst)?;
    let energy = table.integrate(|c, p, g| {
        let f = potential_of(&inst.per_chart[c])?.jet_at(p, 2)?;
        let (hess, df) = g.hessian_and_gradient(&f);
        let mixed = &g.inverse * &hess;
        Ok((&mixed * &mixed).trace() + coef * g.ricci_of_gradient(&df))
    })?;
    let origin = ChartPoint::new(vec![0.0; entry.dim()]);
    Ok(IdentityResidual::new("hessian-energy", energy, 0.0, &origin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_case, random_polynomial, CaseParams};
    use crate::soliton::{SolitonKind, SolitonParams};
    use std::f64::consts::PI;

    fn s3() -> CatalogEntry {
        build_case("unit-s3", &CaseParams::default()).unwrap()
    }

    #[test]
    fn bump_partition_sums_to_one() {
        let (b0, b1) = (1.5, 1.3);
        for i in 1..200 {
            let r = 0.01 * i as f64;
            let a = bump(r, b0) / (bump(r, b0) + bump(1.0 / r, b1));
            let rr = 1.0 / r;
            let b = bump(rr, b1) / (bump(rr, b1) + bump(r, b0));
            if r < b0 && rr < b1 {
                assert!((a + b - 1.0).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn volume_of_unit_sphere() {
        let v = integrate(&s3(), &[ScalarField::constant(3, 1.0)], 24).unwrap();
        assert!((v - 2.0 * PI * PI).abs() <= 1e-5 * 2.0 * PI * PI, "{v}");
    }

    #[test]
    fn volume_converges_with_resolution() {
        let e = s3();
        let exact = 2.0 * PI * PI;
        let errs: Vec<f64> = [8, 16]
            .iter()
            .map(|&res| (QuadratureGrid::new(&e, res).unwrap().total_weight() - exact).abs())
            .collect();
        assert!(errs[1] * 10.0 <= errs[0], "{errs:?}");
    }

    #[test]
    fn zero_field_integrates_to_zero() {
        assert_eq!(integrate(&s3(), &[ScalarField::constant(3, 0.0)], 8).unwrap(), 0.0);
    }

    #[test]
    fn noncompact_and_coarse_are_rejected() {
        let g = build_case("gaussian", &CaseParams::default()).unwrap();
        let one = [ScalarField::constant(3, 1.0)];
        assert!(matches!(integrate(&g, &one, 24), Err(LabError::NotCompact(_))));
        assert!(integrate(&s3(), &one, 4).is_err());
    }

    #[test]
    fn swapped_cuts_agree() {
        let e = s3();
        let u = ambient_field(&e, &random_polynomial(4, 3, 3)).unwrap();
        let a = integrate_on(&QuadratureGrid::with_cuts(&e, 32, (1.5, 1.3)).unwrap(), &u).unwrap();
        let b = integrate_on(&QuadratureGrid::with_cuts(&e, 32, (1.3, 1.5)).unwrap(), &u).unwrap();
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} {b}");
    }

    #[test]
    fn divergence_of_gradient_vanishes() {
        let e = s3();
        let grid = QuadratureGrid::new(&e, 24).unwrap();
        let u = ambient_field(&e, &random_polynomial(4, 3, 11)).unwrap();
        let d = check_divergence(&grid, &e, &u).unwrap();
        assert!(d.holds(1e-5), "{d:?}");
    }

    #[test]
    fn table_laplacian_matches_pipeline() {
        let e = s3();
        let grid = QuadratureGrid::new(&e, 8).unwrap();
        let u = ambient_field(&e, &random_polynomial(4, 3, 2)).unwrap();
        let fast = LaplacianTable::new(&grid, &e).unwrap().laplacians(&u).unwrap();
        for (node, l) in grid.nodes.iter().zip(&fast).step_by(97) {
            let slow = crate::curvature::laplacian(&e.charts[node.chart].metric, &u[node.chart], &node.point).unwrap();
            assert!((slow - l).abs() <= 1e-10 * (1.0 + slow.abs()));
        }
    }

    #[test]
    fn node_geometry_matches_pipeline() {
        let e = s3();
        let grid = QuadratureGrid::new(&e, 8).unwrap();
        let table = GeometryTable::new(&grid, &e).unwrap();
        let f = ambient_field(&e, &random_polynomial(4, 2, 5)).unwrap();
        for (node, geo) in grid.nodes.iter().zip(&table.nodes).step_by(131) {
            let g = &e.charts[node.chart].metric;
            let fj = f[node.chart].jet_at(&node.point, 2).unwrap();
            let (hess, _) = geo.hessian_and_gradient(&fj);
            let slow = crate::curvature::hessian(g, &f[node.chart], &node.point).unwrap().to_matrix();
            assert!((hess - slow).amax() <= 1e-10);
        }
    }

    #[test]
    fn steady_equality_case() {
        let e = s3();
        let inst = e.instance("steady").unwrap();
        let r = check_steady_inequality(&e, inst, 12).unwrap();
        assert!(r.k.abs() <= 1e-15 && r.lhs.abs() <= 1e-6 && r.rhs.abs() <= 1e-6 && r.holds);

        let mut off = inst.clone();
        for si in &mut off.per_chart {
            si.params = SolitonParams::new(1.6, 1.0, 3.0 - 3.2, 0.0).unwrap();
        }
        assert!(matches!(check_steady_inequality(&e, &off, 12), Err(LabError::NotSteady { .. })));
    }

    #[test]
    fn hessian_energy() {
        let e = s3();
        let r = check_hessian_energy(&e, e.instance("einstein").unwrap(), 12).unwrap();
        assert!(r.abs_gap <= 1e-5);

        let mut bad = e.instance("einstein").unwrap().clone();
        let u = ambient_field(&e, &ScalarField::coordinate(4, 0)).unwrap();
        for (si, f) in bad.per_chart.iter_mut().zip(u) {
            si.kind = SolitonKind::Grys { potential: f };
        }
        assert!(matches!(
            check_hessian_energy(&e, &bad, 12),
            Err(LabError::NotASoliton { .. })
        ));

        let g = build_case("gaussian", &CaseParams::default()).unwrap();
        assert!(matches!(
            check_hessian_energy(&g, &g.instances[0], 12),
            Err(LabError::NotCompact(_))
        ));
    }
}
