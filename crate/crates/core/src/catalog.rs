//! Closed-form example geometries and the soliton instances they carry.
//!
//! Entry names double as CLI case identifiers and must stay stable.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chart::{ChartDomain, ChartPoint};
use crate::curvature::{dot, LocalGeometry};
use crate::error::{LabError, Result};
use crate::field::{check_spd, MetricField, ScalarField, VectorField};
use crate::jet::Jet;
use crate::soliton::{SolitonInstance, SolitonKind, SolitonParams};

/// Stereographic charts are cut off at this coordinate half-width.
pub const STEREO_HALF_WIDTH: f64 = 1.6;
/// Largest perturbation amplitude the perturbed-flat family is meant for.
pub const PERTURBATION_LIMIT: f64 = 0.05;
/// Number of points the perturbed-flat SPD check visits.
const SPD_CHECK_POINTS: usize = 400;

/// Case names accepted by [`build_case`], in listing order.
pub const CASE_NAMES: &[&str] = &[
    "flat-r3",
    "flat-r4",
    "gaussian",
    "unit-s3",
    "sphere-r",
    "einstein-s3",
    "h3",
    "einstein-h3",
    "s2xr",
    "r2xr",
    "perturbed-flat",
    "concircular-flat",
];

#[derive(Debug, Clone)]
pub struct Chart {
    pub domain: ChartDomain,
    pub metric: MetricField,
}

/// How the charts of an entry fit together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Atlas {
    Single,
    /// Round sphere of the given radius; chart 0 projects from the south
    /// pole, chart 1 from the north pole, and both use the same metric.
    Stereographic { radius: f64 },
}

impl Atlas {
    /// Coordinates of the same manifold point in the other chart.
    pub fn transition(&self, p: &ChartPoint) -> Option<ChartPoint> {
        match self {
            Atlas::Single => None,
            Atlas::Stereographic { .. } => {
                let r2: f64 = p.coords().iter().map(|x| x * x).sum();
                (r2 > 0.0).then(|| ChartPoint::new(p.coords().iter().map(|x| x / r2).collect()))
            }
        }
    }

    /// Map from chart coordinates to the ambient Euclidean embedding.
    pub fn embedding(&self, chart: usize) -> Option<Arc<dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync>> {
        match *self {
            Atlas::Single => None,
            Atlas::Stereographic { radius } => {
                let sign = if chart == 0 { 1.0 } else { -1.0 };
                Some(Arc::new(move |x: &[Jet]| stereographic_embedding(x, radius, sign)))
            }
        }
    }
}

/// `x -> r (2x, s(|x|^2 - 1)) / (1 + |x|^2)`.
fn stereographic_embedding(x: &[Jet], radius: f64, sign: f64) -> Vec<Jet> {
    let r2 = dot(x, x);
    let inv = (&r2 + 1.0).recip();
    let mut out: Vec<Jet> = x.iter().map(|xi| (xi * &inv).scale(2.0 * radius)).collect();
    out.push(((&r2 - 1.0) * &inv).scale(sign * radius));
    out
}

type RicciFn = dyn Fn(&ChartPoint) -> DMatrix<f64> + Send + Sync;

/// Curvature and volume known in closed form.
#[derive(Clone, Default)]
pub struct ClosedForms {
    /// Ricci components at a point of any chart.
    pub ricci: Option<Arc<RicciFn>>,
    pub scalar: Option<f64>,
    pub volume: Option<f64>,
}

impl fmt::Debug for ClosedForms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosedForms")
            .field("ricci", &self.ricci.as_ref().map(|_| ".."))
            .field("scalar", &self.scalar)
            .field("volume", &self.volume)
            .finish()
    }
}

impl ClosedForms {
    fn einstein(metric: &MetricField, k: f64, volume: Option<f64>) -> Self {
        let g = metric.clone();
        let n = metric.dim() as f64;
        Self {
            ricci: Some(Arc::new(move |p| {
                g.value_at(p).expect("closed form evaluated in chart dimension") * k
            })),
            scalar: Some(n * k),
            volume,
        }
    }
}

/// One soliton on an entry, given chart by chart.
#[derive(Debug, Clone)]
pub struct CatalogInstance {
    pub name: String,
    pub note: String,
    pub per_chart: Vec<SolitonInstance>,
    /// Constant concircular factor of the soliton field, when it has one.
    pub concircular_factor: Option<f64>,
}

impl CatalogInstance {
    pub fn params(&self) -> SolitonParams {
        self.per_chart[0].params
    }
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub description: String,
    pub charts: Vec<Chart>,
    pub atlas: Atlas,
    pub compact: bool,
    pub closed_forms: ClosedForms,
    pub instances: Vec<CatalogInstance>,
    /// Coordinate index of the line factor in a product `N x R`.
    pub line_coordinate: Option<usize>,
}

impl CatalogEntry {
    pub fn dim(&self) -> usize {
        self.charts[0].metric.dim()
    }

    /// Seeded interior samples, `count` per chart.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<Vec<ChartPoint>> {
        self.charts
            .iter()
            .enumerate()
            .map(|(i, c)| c.domain.sample_points(count, chart_seed(seed, i)))
            .collect()
    }

    pub fn instance(&self, name: &str) -> Option<&CatalogInstance> {
        self.instances.iter().find(|i| i.name == name)
    }

    /// Largest gap between the closed forms and the pipeline over the samples.
    pub fn closed_form_gap(&self, points: &[Vec<ChartPoint>]) -> Result<f64> {
        let mut gap: f64 = 0.0;
        for (chart, pts) in self.charts.iter().zip(points) {
            for p in pts {
                let geom = LocalGeometry::new(&chart.metric, p, 2)?;
                if let Some(r) = self.closed_forms.scalar {
                    gap = gap.max((geom.scalar() - r).abs());
                }
                if let Some(ric) = &self.closed_forms.ricci {
                    gap = gap.max((geom.ricci().to_matrix() - ric(p)).amax());
                }
            }
        }
        Ok(gap)
    }
}

fn chart_seed(seed: u64, chart: usize) -> u64 {
    seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(chart as u64))
}

/// Parameters a case may take from the command line; `None` means the default.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CaseParams {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub radius: Option<f64>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
}

/// Every entry with its default parameters.
pub fn catalog_entries() -> Vec<CatalogEntry> {
    CASE_NAMES
        .iter()
        .map(|name| build_case(name, &CaseParams::default()).expect("default cases build"))
        .collect()
}

pub fn build_case(name: &str, cp: &CaseParams) -> Result<CatalogEntry> {
    let alpha = cp.alpha.unwrap_or(1.0);
    let beta = cp.beta.unwrap_or(0.0);
    let mu = cp.mu.unwrap_or(0.0);
    match name {
        "flat-r3" => flat(3, cp),
        "flat-r4" => flat(4, cp),
        "gaussian" => {
            let lambdas = match cp.lambda {
                Some(l) => vec![l],
                None => vec![-2.0, 0.0, 1.0, 2.0],
            };
            gaussian(&lambdas, alpha, beta, mu)
        }
        "unit-s3" => unit_s3(),
        "sphere-r" => sphere(cp.radius.unwrap_or(2.0), alpha, beta, mu, cp.lambda, "sphere-r"),
        "einstein-s3" => sphere(
            cp.radius.unwrap_or(1.0),
            alpha,
            beta,
            cp.mu.unwrap_or(1.0),
            cp.lambda,
            "einstein-s3",
        ),
        "h3" => h3(1.0, 0.0, 0.0, None, "h3"),
        "einstein-h3" => h3(alpha, beta, mu, cp.lambda, "einstein-h3"),
        "s2xr" => s2xr(cp.beta.unwrap_or(2.0), cp.lambda),
        "r2xr" => r2xr(alpha, beta),
        "perturbed-flat" => make_perturbed_flat(cp.epsilon.unwrap_or(1e-2), cp.seed.unwrap_or(42)),
        "concircular-flat" => concircular_flat(alpha, beta, cp.lambda.unwrap_or(-1.0)),
        other => Err(LabError::UnknownCase(other.to_string())),
    }
}

fn params(alpha: f64, beta: f64, lambda: f64, mu: f64) -> Result<SolitonParams> {
    SolitonParams::new(alpha, beta, lambda, mu)
}

fn single_chart(domain: ChartDomain, metric: MetricField) -> Vec<Chart> {
    vec![Chart { domain, metric }]
}

fn gradient_instance(
    name: &str,
    note: &str,
    charts: &[Chart],
    p: SolitonParams,
    potential: impl Fn(usize) -> ScalarField,
) -> CatalogInstance {
    let per_chart = charts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            SolitonInstance::new(
                p,
                c.metric.clone(),
                SolitonKind::GenGrys {
                    potential: potential(i),
                },
            )
        })
        .collect();
    CatalogInstance {
        name: name.to_string(),
        note: note.to_string(),
        per_chart,
        concircular_factor: None,
    }
}

fn flat(n: usize, cp: &CaseParams) -> Result<CatalogEntry> {
    let metric = MetricField::euclidean(n);
    let charts = single_chart(ChartDomain::cube(format!("flat-r{n}"), n, 2.0)?, metric.clone());
    let lambda = cp.lambda.unwrap_or(1.0);
    let p = params(cp.alpha.unwrap_or(1.0), cp.beta.unwrap_or(0.0), lambda, 0.0)?;
    let gauss = gradient_instance(
        "gaussian",
        "f = -lambda |x|^2 / 2, Hess f = -lambda g",
        &charts,
        p,
        |_| gaussian_potential(n, lambda),
    );
    Ok(CatalogEntry {
        name: format!("flat-r{n}"),
        description: format!("Euclidean R^{n}"),
        closed_forms: ClosedForms::einstein(&metric, 0.0, None),
        charts,
        atlas: Atlas::Single,
        compact: false,
        instances: vec![gauss],
        line_coordinate: None,
    })
}

/// `-lambda |x|^2 / 2`.
pub fn gaussian_potential(n: usize, lambda: f64) -> ScalarField {
    ScalarField::new(n, move |x| dot(x, x).scale(-0.5 * lambda))
}

fn gaussian(lambdas: &[f64], alpha: f64, beta: f64, mu: f64) -> Result<CatalogEntry> {
    let metric = MetricField::euclidean(3);
    let charts = single_chart(ChartDomain::cube("flat-r3", 3, 2.0)?, metric.clone());
    let instances = lambdas
        .iter()
        .map(|&l| {
            Ok(gradient_instance(
                &format!("lambda={l}"),
                "Ric = 0 and R = 0, so the equation reduces to Hess f = -lambda g",
                &charts,
                params(alpha, beta, l, mu)?,
                |_| gaussian_potential(3, l),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CatalogEntry {
        name: "gaussian".into(),
        description: "Gaussian gradient solitons f = -lambda |x|^2/2 on R^3".into(),
        closed_forms: ClosedForms::einstein(&metric, 0.0, None),
        charts,
        atlas: Atlas::Single,
        compact: false,
        instances,
        line_coordinate: None,
    })
}

/// Round metric of radius `radius` in stereographic coordinates.
pub fn stereographic_sphere_metric(n: usize, radius: f64) -> MetricField {
    let c = 4.0 * radius * radius;
    MetricField::conformally_flat(n, move |x| (dot(x, x) + 1.0).powi(-2).scale(c))
}

fn sphere_charts(radius: f64) -> Result<Vec<Chart>> {
    let metric = stereographic_sphere_metric(3, radius);
    ["south-projection", "north-projection"]
        .iter()
        .map(|label| {
            Ok(Chart {
                domain: ChartDomain::cube(*label, 3, STEREO_HALF_WIDTH)?,
                metric: metric.clone(),
            })
        })
        .collect()
}

fn sphere_entry(
    name: &str,
    description: String,
    radius: f64,
    instances: Vec<CatalogInstance>,
    charts: Vec<Chart>,
) -> CatalogEntry {
    let k = 2.0 / (radius * radius);
    CatalogEntry {
        name: name.into(),
        description,
        closed_forms: ClosedForms::einstein(
            &charts[0].metric,
            k,
            Some(2.0 * PI * PI * radius.powi(3)),
        ),
        charts,
        atlas: Atlas::Stereographic { radius },
        compact: true,
        instances,
        line_coordinate: None,
    }
}

fn constant_potential(_: usize) -> ScalarField {
    ScalarField::constant(3, 0.0)
}

fn unit_s3() -> Result<CatalogEntry> {
    let charts = sphere_charts(1.0)?;
    let mut instances = Vec::new();
    let balanced = |a: f64, b: f64| SolitonParams::einstein_balanced_lambda(a, b, 3, 2.0);
    let specs: [(&str, &str, f64, f64, f64); 4] = [
        ("einstein", "Ricci soliton: Ric = 2g balanced by lambda = -2", 1.0, 0.0, 0.0),
        ("gen-mu1", "constant f kills the mu df(x)df term", 1.0, 0.0, 1.0),
        ("scalar-constant", "n beta - 2 alpha = 4, lambda = 4 forces R = 6", 1.0, 2.0, 0.0),
        ("steady", "alpha = 3 beta / 2 makes the balanced lambda vanish", 1.5, 1.0, 0.0),
    ];
    for (name, note, a, b, mu) in specs {
        instances.push(gradient_instance(
            name,
            note,
            &charts,
            params(a, b, balanced(a, b), mu)?,
            constant_potential,
        ));
    }
    Ok(sphere_entry(
        "unit-s3",
        "unit round S^3 on two stereographic charts".into(),
        1.0,
        instances,
        charts,
    ))
}

fn check_radius(radius: f64) -> Result<()> {
    if radius.is_finite() && radius > 0.0 {
        Ok(())
    } else {
        Err(LabError::InvalidParameter(format!("radius must be positive, got {radius}")))
    }
}

fn sphere(
    radius: f64,
    alpha: f64,
    beta: f64,
    mu: f64,
    lambda: Option<f64>,
    name: &str,
) -> Result<CatalogEntry> {
    check_radius(radius)?;
    let charts = sphere_charts(radius)?;
    let k = 2.0 / (radius * radius);
    let lambda = lambda.unwrap_or_else(|| SolitonParams::einstein_balanced_lambda(alpha, beta, 3, k));
    let inst = gradient_instance(
        "constant-f",
        "Einstein metric with constant potential",
        &charts,
        params(alpha, beta, lambda, mu)?,
        constant_potential,
    );
    Ok(sphere_entry(
        name,
        format!("round S^3 of radius {radius} on two stereographic charts"),
        radius,
        vec![inst],
        charts,
    ))
}

fn h3(alpha: f64, beta: f64, mu: f64, lambda: Option<f64>, name: &str) -> Result<CatalogEntry> {
    let metric = MetricField::conformally_flat(3, |x| x[2].powi(-2));
    let domain = ChartDomain::new("upper-half-space", vec![(-1.0, 1.0), (-1.0, 1.0), (0.5, 2.0)])?;
    let charts = single_chart(domain, metric.clone());
    let lambda = lambda.unwrap_or_else(|| SolitonParams::einstein_balanced_lambda(alpha, beta, 3, -2.0));
    let inst = gradient_instance(
        "constant-f",
        "Ric = -2g balanced by a constant potential",
        &charts,
        params(alpha, beta, lambda, mu)?,
        constant_potential,
    );
    Ok(CatalogEntry {
        name: name.into(),
        description: "hyperbolic H^3, upper half-space model".into(),
        closed_forms: ClosedForms::einstein(&metric, -2.0, None),
        charts,
        atlas: Atlas::Single,
        compact: false,
        instances: vec![inst],
        line_coordinate: None,
    })
}

/// `S^2 x R` with the unit sphere factor in stereographic coordinates `(u, v)` and line coordinate `t`.
fn s2xr(beta: f64, lambda: Option<f64>) -> Result<CatalogEntry> {
    let metric = MetricField::from_upper(3, |x| {
        let c = (&x[0] * &x[0] + &x[1] * &x[1] + 1.0).powi(-2).scale(4.0);
        let z = x[0].zero_like();
        vec![c.clone(), z.clone(), z.clone(), c, z, x[0].constant_like(1.0)]
    });
    let domain = ChartDomain::new(
        "stereographic-times-line",
        vec![(-1.5, 1.5), (-1.5, 1.5), (-2.0, 2.0)],
    )?;
    let charts = single_chart(domain, metric.clone());
    let g = metric.clone();
    let ricci = move |p: &ChartPoint| {
        let mut m = g.value_at(p).expect("chart dimension");
        m[(2, 2)] = 0.0;
        m
    };
    // Ric = g_S2 (+) 0 and Hess t = 0, so the equation needs alpha = 0 and lambda = beta.
    let inst = gradient_instance(
        "line-potential",
        "f = t with alpha = 0 and lambda = beta",
        &charts,
        params(0.0, beta, lambda.unwrap_or(beta), 0.0)?,
        |_| ScalarField::coordinate(3, 2),
    );
    Ok(CatalogEntry {
        name: "s2xr".into(),
        description: "product S^2 x R with potential f = t".into(),
        closed_forms: ClosedForms {
            ricci: Some(Arc::new(ricci)),
            scalar: Some(2.0),
            volume: None,
        },
        charts,
        atlas: Atlas::Single,
        compact: false,
        instances: vec![inst],
        line_coordinate: Some(2),
    })
}

/// Flat `R^2 x R` with `f = t`, the steady Ricci-flat product.
fn r2xr(alpha: f64, beta: f64) -> Result<CatalogEntry> {
    let metric = MetricField::euclidean(3);
    let charts = single_chart(ChartDomain::cube("flat-r3", 3, 2.0)?, metric.clone());
    let inst = gradient_instance(
        "line-potential",
        "f = t is affine; Ric = 0 and lambda = 0",
        &charts,
        params(alpha, beta, 0.0, 0.0)?,
        |_| ScalarField::coordinate(3, 2),
    );
    Ok(CatalogEntry {
        name: "r2xr".into(),
        description: "flat product R^2 x R with potential f = t".into(),
        closed_forms: ClosedForms::einstein(&metric, 0.0, None),
        charts,
        atlas: Atlas::Single,
        compact: false,
        instances: vec![inst],
        line_coordinate: Some(2),
    })
}

fn concircular_flat(alpha: f64, beta: f64, lambda: f64) -> Result<CatalogEntry> {
    let metric = MetricField::euclidean(3);
    let charts = single_chart(ChartDomain::cube("flat-r3", 3, 2.0)?, metric.clone());
    let inst = CatalogInstance {
        name: "position-field".into(),
        note: "X = x^i d/dx^i is concircular with phi = 1, so L_X g = 2g".into(),
        per_chart: vec![SolitonInstance::new(
            params(alpha, beta, lambda, 0.0)?,
            metric.clone(),
            SolitonKind::Rys {
                field: VectorField::position(3),
            },
        )],
        concircular_factor: Some(1.0),
    };
    Ok(CatalogEntry {
        name: "concircular-flat".into(),
        description: "flat R^3 with the position field".into(),
        closed_forms: ClosedForms::einstein(&metric, 0.0, None),
        charts,
        atlas: Atlas::Single,
        compact: false,
        instances: vec![inst],
        line_coordinate: None,
    })
}

/// Exponent vectors of all monomials in `dim` variables of total degree `<= degree`.
fn monomials(dim: usize, degree: usize) -> Vec<Vec<u32>> {
    fn rec(dim: usize, left: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == dim {
            out.push(prefix.clone());
            return;
        }
        for e in 0..=left {
            prefix.push(e as u32);
            rec(dim, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, degree, &mut Vec::new(), &mut out);
    out
}

fn eval_polynomial(x: &[Jet], terms: &[(Vec<u32>, f64)]) -> Jet {
    let degree = terms.iter().flat_map(|(e, _)| e.iter()).copied().max().unwrap_or(0) as usize;
    // powers[i][e] = x_i^e
    let powers: Vec<Vec<Jet>> = x
        .iter()
        .map(|xi| {
            let mut row = vec![xi.constant_like(1.0)];
            for e in 1..=degree {
                let next = if e == 1 { xi.clone() } else { &row[e - 1] * xi };
                row.push(next);
            }
            row
        })
        .collect();
    let mut acc = x[0].zero_like();
    for (exps, c) in terms {
        let mut term: Option<Jet> = None;
        for (i, &e) in exps.iter().enumerate() {
            if e > 0 {
                let factor = &powers[i][e as usize];
                term = Some(match term {
                    None => factor.clone(),
                    Some(t) => t * factor,
                });
            }
        }
        match term {
            None => acc += x[0].constant_like(*c),
            Some(t) => acc += t.scale(*c),
        }
    }
    acc
}

fn random_terms(rng: &mut ChaCha8Rng, dim: usize, degree: usize) -> Vec<(Vec<u32>, f64)> {
    monomials(dim, degree)
        .into_iter()
        .map(|m| (m, rng.random_range(-1.0..1.0)))
        .collect()
}

/// Polynomial of total degree `degree` with seeded coefficients in `[-1, 1)`.
pub fn random_polynomial(dim: usize, degree: usize, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms = Arc::new(random_terms(&mut rng, dim, degree));
    ScalarField::new(dim, move |x| eval_polynomial(x, &terms))
}

/// Flat metric plus `epsilon` times a seeded symmetric field of quadratic
/// polynomials on `(-1, 1)^3`; positivity is checked on a dense sample.
pub fn make_perturbed_flat(epsilon: f64, seed: u64) -> Result<CatalogEntry> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(LabError::InvalidParameter(format!(
            "perturbation amplitude must be finite and nonnegative, got {epsilon}"
        )));
    }
    let n = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps: Arc<Vec<Vec<(Vec<u32>, f64)>>> = Arc::new(
        (0..n * (n + 1) / 2)
            .map(|_| random_terms(&mut rng, n, 2))
            .collect(),
    );
    let metric = MetricField::from_upper(n, move |x| {
        let mut k = 0;
        let mut out = Vec::with_capacity(comps.len());
        for i in 0..n {
            for j in i..n {
                let h = eval_polynomial(x, &comps[k]).scale(epsilon);
                out.push(if i == j { h + 1.0 } else { h });
                k += 1;
            }
        }
        out
    });
    let domain = ChartDomain::cube("perturbed-box", n, 1.0)?;
    let mut probe = domain.sample_points(SPD_CHECK_POINTS, seed);
    probe.push(ChartPoint::new(vec![0.0; n]));
    for p in &probe {
        check_spd(&metric.value_at(p)?)?;
    }
    let closed_forms = if epsilon == 0.0 {
        ClosedForms::einstein(&metric, 0.0, None)
    } else {
        ClosedForms::default()
    };
    Ok(CatalogEntry {
        name: "perturbed-flat".into(),
        description: format!("g = delta + {epsilon} h, h seeded quadratic (seed {seed})"),
        charts: single_chart(domain, metric),
        atlas: Atlas::Single,
        compact: false,
        closed_forms,
        instances: Vec::new(),
        line_coordinate: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton::residual;

    #[test]
    fn names_are_stable_and_complete() {
        let names: Vec<String> = catalog_entries().into_iter().map(|e| e.name).collect();
        assert_eq!(names, CASE_NAMES);
        assert!(matches!(
            build_case("nosuch", &CaseParams::default()),
            Err(LabError::UnknownCase(_))
        ));
    }

    #[test]
    fn closed_forms_match_pipeline() {
        for entry in catalog_entries() {
            let pts = entry.sample(20, 3);
            let gap = entry.closed_form_gap(&pts).unwrap();
            assert!(gap <= 1e-7, "{}: {gap}", entry.name);
        }
    }

    #[test]
    fn every_default_instance_is_a_soliton() {
        for entry in catalog_entries() {
            let pts = entry.sample(10, 5);
            for inst in &entry.instances {
                for (si, chart_pts) in inst.per_chart.iter().zip(&pts) {
                    for p in chart_pts {
                        let r = residual(si, p).unwrap().max_abs();
                        assert!(r <= 1e-8, "{}/{}: {r}", entry.name, inst.name);
                    }
                }
            }
        }
    }

    #[test]
    fn sphere_charts_agree_on_overlap() {
        let e = build_case("unit-s3", &CaseParams::default()).unwrap();
        for p in e.sample(30, 11).remove(0) {
            let q = e.atlas.transition(&p).unwrap();
            let r1 = LocalGeometry::new(&e.charts[0].metric, &p, 2).unwrap().scalar();
            let r2 = LocalGeometry::new(&e.charts[1].metric, &q, 2).unwrap().scalar();
            assert!((r1 - r2).abs() <= 1e-9);
            assert!((r1 - 6.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn embeddings_land_on_the_sphere_and_agree() {
        let atlas = Atlas::Stereographic { radius: 2.0 };
        let p = ChartPoint::from([0.4, -0.7, 0.9]);
        let q = atlas.transition(&p).unwrap();
        let layout = crate::jet::JetLayout::new(3, 0);
        let a = atlas.embedding(0).unwrap()(&crate::field::coordinate_jets(&layout, &p));
        let b = atlas.embedding(1).unwrap()(&crate::field::coordinate_jets(&layout, &q));
        let norm: f64 = a.iter().map(|j| j.value() * j.value()).sum();
        assert!((norm - 4.0).abs() <= 1e-12);
        for (u, v) in a.iter().zip(&b) {
            assert!((u.value() - v.value()).abs() <= 1e-12);
        }
    }

    #[test]
    fn product_ricci_annihilates_the_line() {
        let e = build_case("s2xr", &CaseParams::default()).unwrap();
        for p in e.sample(10, 1).remove(0) {
            let ric = LocalGeometry::new(&e.charts[0].metric, &p, 2).unwrap().ricci();
            assert!(ric.get(2, 2).abs() <= 1e-12);
        }
    }

    #[test]
    fn perturbed_flat_family() {
        let flat = make_perturbed_flat(0.0, 9).unwrap();
        let p = ChartPoint::from([0.2, 0.1, -0.3]);
        let ric = LocalGeometry::new(&flat.charts[0].metric, &p, 2).unwrap().ricci();
        assert_eq!(ric.max_abs(), 0.0);
        assert!(make_perturbed_flat(1e-2, 42).is_ok());
        for seed in [1, 7, 42] {
            assert!(matches!(make_perturbed_flat(10.0, seed), Err(LabError::NotSpd { .. })));
        }
        assert!(make_perturbed_flat(-1.0, 1).is_err());
    }

    #[test]
    fn sphere_radius_scaling() {
        for r in [0.5, 1.0, 2.0] {
            let cp = CaseParams {
                radius: Some(r),
                ..CaseParams::default()
            };
            let e = build_case("sphere-r", &cp).unwrap();
            let p = ChartPoint::from([0.3, 0.2, -0.1]);
            let s = LocalGeometry::new(&e.charts[0].metric, &p, 2).unwrap().scalar();
            assert!((s - 6.0 / (r * r)).abs() <= 1e-9 * (1.0 + s.abs()));
        }
    }

    #[test]
    fn monomial_count() {
        // binomial(3 + 2, 2)
        assert_eq!(monomials(3, 2).len(), 10);
        assert_eq!(monomials(4, 3).len(), 35);
    }
}
