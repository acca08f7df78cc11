//! Run configuration, check records and the JSON report format.
//!
//! Reports are deterministic for a fixed configuration: points are seeded,
//! parallel work is collected in input order before any reduction, and
//! every float is written with 17 significant digits. Wall time is only
//! included on request.

use serde::ser::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::catalog::{build_case, random_polynomial, CaseParams, CatalogEntry, CatalogInstance, CASE_NAMES};
use crate::chart::ChartPoint;
use crate::curvature::LocalGeometry;
use crate::error::{LabError, Result};
use crate::field::ScalarField;
use crate::identities::{check_affine_splitting_flags, check_constant_scalar, universal_residuals, IdentityResidual, SolitonPoint};
use crate::quadrature::{
    ambient_field, check_hessian_energy_on, check_steady_inequality_on, integrate_on, GeometryTable, LaplacianTable,
    QuadratureGrid,
};
use crate::soliton::{
    concircular_conclusions_on, concircular_defect, residual, ConcircularFactor, SolitonInstance, SolitonKind,
    DEGENERACY_TOLERANCE, STEADY_TOLERANCE,
};
use rayon::prelude::*;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "rys-lab";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A float written with 17 significant digits (`null` when not finite).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

/// `{:.16e}` rendering, which round-trips every finite `f64`.
pub fn format_num(v: f64) -> String {
    format!("{v:.16e}")
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            RawValue::from_string(format_num(self.0))
                .map_err(serde::ser::Error::custom)?
                .serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

fn nums(v: &[f64]) -> Vec<Num> {
    v.iter().copied().map(Num).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Tolerances {
    pub soliton_residual: Num,
    pub order2: Num,
    pub order3: Num,
    pub order4: Num,
    pub splitting: Num,
    pub universal: Num,
    pub affine: Num,
    /// Closed-form curvature against the pipeline.
    pub closed_form: Num,
    /// Same scalar curvature seen from two charts.
    pub overlap: Num,
    pub constant_scalar: Num,
    /// Exact flat-space statements (concircular case, Ricci flatness).
    pub exact: Num,
    pub quadrature: Num,
}

impl Default for Tolerances {
    fn default() -> Self {
        use crate::identities::tolerance as t;
        Self {
            soliton_residual: Num(t::SOLITON_RESIDUAL),
            order2: Num(t::ORDER_2),
            order3: Num(t::ORDER_3),
            order4: Num(t::ORDER_4),
            splitting: Num(t::SPLITTING),
            universal: Num(t::UNIVERSAL),
            affine: Num(t::AFFINE),
            closed_form: Num(1e-7),
            overlap: Num(1e-9),
            constant_scalar: Num(1e-9),
            exact: Num(1e-10),
            quadrature: Num(1e-5),
        }
    }
}

impl Tolerances {
    /// Overrides one tolerance by name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(LabError::InvalidParameter(format!("tolerance {name} = {value}")));
        }
        let slot = match name {
            "soliton-residual" => &mut self.soliton_residual,
            "order2" => &mut self.order2,
            "order3" => &mut self.order3,
            "order4" => &mut self.order4,
            "splitting" => &mut self.splitting,
            "universal" => &mut self.universal,
            "affine" => &mut self.affine,
            "closed-form" => &mut self.closed_form,
            "overlap" => &mut self.overlap,
            "constant-scalar" => &mut self.constant_scalar,
            "exact" => &mut self.exact,
            "quadrature" => &mut self.quadrature,
            other => return Err(LabError::InvalidParameter(format!("unknown tolerance `{other}`"))),
        };
        *slot = Num(value);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Case names; `all` expands to the whole catalog.
    pub cases: Vec<String>,
    pub params: CaseParams,
    /// Sample points per chart.
    pub points: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub resolution: usize,
    /// Random test functions for the divergence check.
    pub divergence_functions: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            cases: vec!["all".into()],
            params: CaseParams::default(),
            points: 200,
            seed: 7,
            tolerances: Tolerances::default(),
            resolution: 24,
            divergence_functions: 3,
        }
    }
}

impl RunConfig {
    /// Concrete case names, rejecting unknown ones before any work is done.
    pub fn resolved_cases(&self) -> Result<Vec<String>> {
        if self.points == 0 {
            return Err(LabError::InvalidParameter("at least one sample point is needed".into()));
        }
        if self.resolution < crate::quadrature::MIN_RESOLUTION {
            return Err(LabError::InvalidParameter(format!(
                "quadrature resolution {} is below {}",
                self.resolution,
                crate::quadrature::MIN_RESOLUTION
            )));
        }
        let mut out = Vec::new();
        for c in &self.cases {
            if c == "all" {
                out.extend(CASE_NAMES.iter().map(|s| s.to_string()));
            } else if CASE_NAMES.contains(&c.as_str()) {
                out.push(c.clone());
            } else {
                return Err(LabError::UnknownCase(c.clone()));
            }
        }
        if out.is_empty() {
            return Err(LabError::InvalidParameter("no cases selected".into()));
        }
        Ok(out)
    }

    fn echo(&self) -> ConfigEcho {
        let p = &self.params;
        ConfigEcho {
            cases: self.cases.clone(),
            alpha: p.alpha.map(Num),
            beta: p.beta.map(Num),
            lambda: p.lambda.map(Num),
            mu: p.mu.map(Num),
            radius: p.radius.map(Num),
            epsilon: p.epsilon.map(Num),
            case_seed: p.seed,
            points: self.points,
            seed: self.seed,
            resolution: self.resolution,
            divergence_functions: self.divergence_functions,
            tolerances: self.tolerances,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ConfigEcho {
    pub cases: Vec<String>,
    pub alpha: Option<Num>,
    pub beta: Option<Num>,
    pub lambda: Option<Num>,
    pub mu: Option<Num>,
    pub radius: Option<Num>,
    pub epsilon: Option<Num>,
    pub case_seed: Option<u64>,
    pub points: usize,
    pub seed: u64,
    pub resolution: usize,
    pub divergence_functions: usize,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub case: String,
    pub instance: Option<String>,
    /// The statement being checked, written out as a formula.
    pub anchor: String,
    /// Point where the gap is largest (chart index first) when the check is pointwise.
    pub point: Option<Vec<Num>>,
    pub lhs: Num,
    pub rhs: Num,
    pub gap: Num,
    pub tol: Num,
    pub samples: usize,
    pub verdict: Verdict,
    pub error: Option<String>,
}

impl CheckRecord {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Quantity {
    pub name: String,
    pub case: String,
    pub value: Num,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: ConfigEcho,
    pub records: Vec<CheckRecord>,
    pub quantities: Vec<Quantity>,
    pub warnings: Vec<String>,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<Num>,
}

impl Report {
    fn new(command: &str, config: &RunConfig, sink: Sink) -> Self {
        let passed = sink.records.iter().filter(|r| r.passed()).count();
        Self {
            schema_version: SCHEMA_VERSION,
            tool: TOOL_NAME,
            version: TOOL_VERSION,
            command: command.into(),
            config: config.echo(),
            summary: Summary {
                total: sink.records.len(),
                passed,
                failed: sink.records.len() - passed,
            },
            records: sink.records,
            quantities: sink.quantities,
            warnings: sink.warnings,
            wall_time_seconds: None,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.passed())
    }
}

/// One pointwise outcome: chart index, point, and either a residual or an error.
type Outcome = (usize, ChartPoint, Result<IdentityResidual>);

#[derive(Default)]
struct Sink {
    records: Vec<CheckRecord>,
    quantities: Vec<Quantity>,
    warnings: Vec<String>,
}

struct Ctx<'a> {
    case: &'a str,
    instance: Option<&'a str>,
}

impl Sink {
    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, ctx: &Ctx, name: &str, anchor: &str, lhs: f64, rhs: f64, gap: f64, tol: Num, samples: usize, point: Option<Vec<f64>>) {
        let verdict = if gap <= tol.0 { Verdict::Pass } else { Verdict::Fail };
        self.records.push(CheckRecord {
            name: name.into(),
            case: ctx.case.into(),
            instance: ctx.instance.map(str::to_string),
            anchor: anchor.into(),
            point: point.map(|p| nums(&p)),
            lhs: Num(lhs),
            rhs: Num(rhs),
            gap: Num(gap),
            tol,
            samples,
            verdict,
            error: None,
        });
    }

    fn push_error(&mut self, ctx: &Ctx, name: &str, anchor: &str, tol: Num, err: &LabError) {
        self.records.push(CheckRecord {
            name: name.into(),
            case: ctx.case.into(),
            instance: ctx.instance.map(str::to_string),
            anchor: anchor.into(),
            point: None,
            lhs: Num(f64::NAN),
            rhs: Num(f64::NAN),
            gap: Num(f64::NAN),
            tol,
            samples: 0,
            verdict: Verdict::Fail,
            error: Some(err.to_string()),
        });
    }

    /// Scalar statement `gap <= tol` with `lhs`/`rhs` reported as is.
    fn push_result(&mut self, ctx: &Ctx, name: &str, anchor: &str, tol: Num, r: Result<(f64, f64, f64)>) {
        match r {
            Ok((lhs, rhs, gap)) => self.push(ctx, name, anchor, lhs, rhs, gap, tol, 1, None),
            Err(e) => self.push_error(ctx, name, anchor, tol, &e),
        }
    }

    /// Worst of many pointwise residuals; `relative` selects `rel_gap` over `abs_gap`.
    fn push_worst(&mut self, ctx: &Ctx, name: &str, anchor: &str, tol: Num, relative: bool, outcomes: &[Outcome]) {
        let mut worst: Option<(f64, &Outcome)> = None;
        for o in outcomes {
            match &o.2 {
                Err(e) => {
                    self.push_error(ctx, name, anchor, tol, e);
                    return;
                }
                Ok(r) => {
                    let gap = if relative { r.rel_gap } else { r.abs_gap };
                    if worst.as_ref().is_none_or(|(g, _)| gap > *g || gap.is_nan()) {
                        worst = Some((gap, o));
                    }
                }
            }
        }
        if let Some((gap, (chart, p, Ok(r)))) = worst {
            let mut point = vec![*chart as f64];
            point.extend_from_slice(p.coords());
            self.push(ctx, name, anchor, r.lhs, r.rhs, gap, tol, outcomes.len(), Some(point));
        }
    }
}

/// Evaluates `eval` at every sample of every chart, in parallel, keeping input order.
fn sweep<F>(points: &[Vec<ChartPoint>], eval: F) -> Vec<Outcome>
where
    F: Fn(usize, &ChartPoint) -> Result<IdentityResidual> + Sync,
{
    let flat: Vec<(usize, &ChartPoint)> = points
        .iter()
        .enumerate()
        .flat_map(|(c, pts)| pts.iter().map(move |p| (c, p)))
        .collect();
    flat.par_iter().map(|&(c, p)| (c, p.clone(), eval(c, p))).collect()
}

type PointResults = Result<Vec<Result<IdentityResidual>>>;

/// Same as [`sweep`] for checks producing several residuals per point.
fn sweep_many<F>(points: &[Vec<ChartPoint>], count: usize, eval: F) -> Vec<Vec<Outcome>>
where
    F: Fn(usize, &ChartPoint) -> Result<Vec<Result<IdentityResidual>>> + Sync,
{
    let flat: Vec<(usize, &ChartPoint)> = points
        .iter()
        .enumerate()
        .flat_map(|(c, pts)| pts.iter().map(move |p| (c, p)))
        .collect();
    let per_point: Vec<(usize, ChartPoint, PointResults)> =
        flat.par_iter().map(|&(c, p)| (c, p.clone(), eval(c, p))).collect();
    (0..count)
        .map(|k| {
            per_point
                .iter()
                .map(|(c, p, r)| {
                    let item = match r {
                        Ok(v) => v[k].clone(),
                        Err(e) => Err(e.clone()),
                    };
                    (*c, p.clone(), item)
                })
                .collect()
        })
        .collect()
}

pub mod anchor {
    pub const CLOSED_FORM: &str = "Ric = k g and R = n k from the closed form";
    pub const OVERLAP: &str = "R(x) = R(x / |x|^2) across stereographic charts";
    pub const BIANCHI: &str = "g^jk nabla_k R_ij = (1/2) nabla_i R";
    pub const COMMUTATION: &str = "Delta nabla_i f - nabla_i Delta f = R_ij nabla^j f";
    pub const BOCHNER: &str =
        "(1/2) Delta |grad f|^2 = |Hess f|^2 + Ric(grad f, grad f) + g(grad f, grad Delta f)";
    pub const RYS: &str = "alpha Ric + (1/2) L_X g + (lambda - beta R / 2) g = 0";
    pub const GRYS: &str = "alpha Ric + Hess f + (lambda - beta R / 2) g + mu df (x) df = 0";
    pub const TRACE: &str = "alpha R + Delta f + n (lambda - beta R / 2) + mu |grad f|^2 = 0";
    pub const GRADIENT: &str = "{alpha - beta (n-1)} grad R + 2 mu {alpha R + (n-1)(lambda - beta R / 2)} grad f = 2 (mu alpha + 1) Ric(grad f, .)";
    pub const GRADIENT_MU0: &str = "{alpha - beta (n-1)} grad R = 2 Ric(grad f, .)";
    pub const LAPLACIAN: &str = "{alpha - beta (n-1)} Delta R + {2 mu alpha - 2 mu beta (n-1) - 1} g(grad R, grad f) = 2 mu {alpha R + (n-1)(lambda - beta R / 2)}{alpha R + n (lambda - beta R / 2)} - 2 (mu alpha + 1){alpha |Ric|^2 + R (lambda - beta R / 2)}";
    pub const LAPLACIAN_MU0: &str =
        "{alpha - beta (n-1)} Delta R = g(grad R, grad f) - 2 {alpha |Ric|^2 + R (lambda - beta R / 2)}";
    pub const SPLITTING: &str = "(1/2) Delta |grad f|^2 = |Hess f|^2 + {(beta - alpha) / (alpha - beta (n-1))} Ric(grad f, grad f)";
    pub const CONSTANT_SCALAR: &str = "R = 2 n lambda / (n beta - 2 alpha) on a compact gradient soliton";
    pub const SIGN_LAW: &str = "sign R = sign lambda when n beta > 2 alpha";
    pub const VOLUME: &str = "int_M 1 = Vol(M)";
    pub const DIVERGENCE: &str = "int_M Delta u = 0";
    pub const INTEGRAL_INEQUALITY: &str =
        "k int_M R^2 >= int_M Ric(grad f, grad f), k = (n-1)/n (beta n / 2 - alpha)^2";
    pub const HESSIAN_ENERGY: &str = "int_M |Hess f|^2 + {(beta - alpha) / (alpha - beta (n-1))} int_M Ric(grad f, grad f) = 0";
    pub const AFFINE: &str = "Hess f = 0 on N x R with f = t";
    pub const GRAD_CONSTANT: &str = "|grad f| is constant on N x R with f = t";
    pub const RICCI_FLAT: &str = "steady product soliton is Ricci flat";
    pub const CONCIRCULAR: &str = "nabla_Y X = phi Y";
    pub const EINSTEIN: &str = "Ric = (R / n) g for a concircular soliton field";
    pub const SCALAR_PREDICTION: &str = "R = 2 n (lambda + phi) / (n beta - 2 alpha)";
    pub const EIGENVALUE: &str = "Q Y = {(beta R - 2 phi - 2 lambda) / (2 alpha)} Y";
    pub const CLASS_RULE: &str = "phi vs (n beta - 2 alpha) R / (2n) classifies like the sign of lambda";
}

fn chart_points(entry: &CatalogEntry, cfg: &RunConfig) -> Vec<Vec<ChartPoint>> {
    entry.sample(cfg.points, cfg.seed)
}

/// Seed for per-case random functions, stable across catalog reordering.
fn case_seed(seed: u64, case: &str) -> u64 {
    case.bytes().fold(seed ^ 0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

/// Runs the identity suite on every selected case.
pub fn run_verify(config: &RunConfig) -> Result<Report> {
    let cases = config.resolved_cases()?;
    let entries = cases
        .iter()
        .map(|c| build_case(c, &config.params))
        .collect::<Result<Vec<_>>>()?;
    let mut sink = Sink::default();
    for entry in &entries {
        verify_entry(entry, config, &mut sink);
    }
    Ok(Report::new("verify", config, sink))
}

fn verify_entry(entry: &CatalogEntry, cfg: &RunConfig, sink: &mut Sink) {
    let tol = &cfg.tolerances;
    let ctx = Ctx {
        case: &entry.name,
        instance: None,
    };
    let points = chart_points(entry, cfg);

    if entry.closed_forms.ricci.is_some() || entry.closed_forms.scalar.is_some() {
        let r = entry.closed_form_gap(&points).map(|g| (g, 0.0, g));
        sink.push_result(&ctx, "closed-forms", anchor::CLOSED_FORM, tol.closed_form, r);
    }
    if entry.charts.len() == 2 {
        let outcomes = sweep(&points[..1], |_, p| {
            let q = entry
                .atlas
                .transition(p)
                .ok_or_else(|| LabError::InvalidParameter("point at the chart origin".into()))?;
            let a = LocalGeometry::new(&entry.charts[0].metric, p, 2)?.scalar();
            let b = LocalGeometry::new(&entry.charts[1].metric, &q, 2)?.scalar();
            Ok(IdentityResidual::new("overlap", a, b, p))
        });
        sink.push_worst(&ctx, "chart-overlap", anchor::OVERLAP, tol.overlap, false, &outcomes);
    }

    let f = random_polynomial(entry.dim(), 3, case_seed(cfg.seed, &entry.name));
    let universal = sweep_many(&points, 3, |c, p| {
        Ok(universal_residuals(&entry.charts[c].metric, &f, p)?
            .into_iter()
            .map(Ok)
            .collect())
    });
    for ((name, anc), outcomes) in [
        ("bianchi", anchor::BIANCHI),
        ("commutation", anchor::COMMUTATION),
        ("bochner", anchor::BOCHNER),
    ]
    .iter()
    .zip(&universal)
    {
        sink.push_worst(&ctx, name, anc, tol.universal, true, outcomes);
    }

    for inst in &entry.instances {
        let ctx = Ctx {
            case: &entry.name,
            instance: Some(&inst.name),
        };
        if inst.params().mu_alpha_degenerate() && inst.per_chart[0].effective_mu() != 0.0 {
            sink.warnings.push(format!(
                "{}/{}: mu alpha = -1, the gradient identity loses its Ric(grad f, .) term",
                entry.name, inst.name
            ));
        }
        match inst.per_chart[0].kind {
            SolitonKind::Rys { .. } | SolitonKind::EtaRys { .. } => verify_field_instance(entry, inst, &points, cfg, &ctx, sink),
            SolitonKind::Grys { .. } | SolitonKind::GenGrys { .. } => {
                verify_gradient_instance(entry, inst, &points, cfg, &ctx, sink)
            }
        }
    }

    if entry.compact {
        verify_integrals(entry, cfg, sink);
    }
}

fn defining_residual(inst: &CatalogInstance, points: &[Vec<ChartPoint>], anchor: &str, tol: Num, ctx: &Ctx, sink: &mut Sink) -> bool {
    let outcomes = sweep(points, |c, p| {
        let r = residual(&inst.per_chart[c], p)?.max_abs();
        Ok(IdentityResidual::new("residual", r, 0.0, p))
    });
    sink.push_worst(ctx, "soliton-residual", anchor, tol, false, &outcomes);
    sink.records.last().is_some_and(CheckRecord::passed)
}

fn verify_gradient_instance(
    entry: &CatalogEntry,
    inst: &CatalogInstance,
    points: &[Vec<ChartPoint>],
    cfg: &RunConfig,
    ctx: &Ctx,
    sink: &mut Sink,
) {
    let tol = &cfg.tolerances;
    if !defining_residual(inst, points, anchor::GRYS, tol.soliton_residual, ctx, sink) {
        sink.warnings.push(format!(
            "{}/{}: defining residual above tolerance, identity checks skipped",
            entry.name, inst.name
        ));
        return;
    }
    let si0 = &inst.per_chart[0];
    let params = si0.params;
    let n = entry.dim() as f64;
    let mu_zero = si0.effective_mu() == 0.0;
    let splitting_ok = mu_zero && (params.alpha - params.beta * (n - 1.0)).abs() > DEGENERACY_TOLERANCE;

    let mut names: Vec<(&str, &str, Num)> = vec![
        ("trace", anchor::TRACE, tol.order2),
        ("gradient", anchor::GRADIENT, tol.order3),
        ("laplacian", anchor::LAPLACIAN, tol.order4),
    ];
    if mu_zero {
        names.push(("gradient-mu0", anchor::GRADIENT_MU0, tol.order3));
        names.push(("laplacian-mu0", anchor::LAPLACIAN_MU0, tol.order4));
    }
    if splitting_ok {
        names.push(("splitting", anchor::SPLITTING, tol.splitting));
    }
    let per_check = sweep_many(points, names.len(), |c, p| {
        let sp = SolitonPoint::evaluate(&inst.per_chart[c], p)?;
        let mut out = vec![Ok(sp.trace_identity()), Ok(sp.gradient_identity()), sp.laplacian_identity()];
        if mu_zero {
            out.push(Ok(sp.gradient_identity_gradient_case()));
            out.push(sp.laplacian_identity_gradient_case());
        }
        if splitting_ok {
            out.push(sp.splitting_identity());
        }
        Ok(out)
    });
    for ((name, anc, t), outcomes) in names.iter().zip(&per_check) {
        sink.push_worst(ctx, name, anc, *t, false, outcomes);
    }

    if entry.compact {
        let denom = n * params.beta - 2.0 * params.alpha;
        if denom.abs() > DEGENERACY_TOLERANCE {
            let charts: Vec<(&SolitonInstance, &[ChartPoint])> = inst
                .per_chart
                .iter()
                .zip(points)
                .map(|(si, p)| (si, p.as_slice()))
                .collect();
            match check_constant_scalar(&charts, true, tol.constant_scalar.0) {
                Ok(rep) => {
                    let worst = if (rep.r_max - rep.predicted).abs() >= (rep.r_min - rep.predicted).abs() {
                        rep.r_max
                    } else {
                        rep.r_min
                    };
                    sink.push(ctx, "constant-scalar", anchor::CONSTANT_SCALAR, worst, rep.predicted, rep.gap, tol.constant_scalar, points.iter().map(Vec::len).sum(), None);
                    if rep.sign_law_applies {
                        let miss = if rep.sign_law_holds { 0.0 } else { 1.0 };
                        sink.push(ctx, "sign-law", anchor::SIGN_LAW, rep.r_max, params.lambda, miss, Num(0.0), 1, None);
                    }
                }
                Err(e) => sink.push_error(ctx, "constant-scalar", anchor::CONSTANT_SCALAR, tol.constant_scalar, &e),
            }
        } else {
            sink.warnings.push(format!(
                "{}/{}: n beta = 2 alpha, constant-scalar prediction undefined",
                entry.name, inst.name
            ));
        }
    }

    if entry.line_coordinate.is_some() {
        if let Some(f) = si0.kind.potential() {
            match check_affine_splitting_flags(&si0.metric, f, &points[0]) {
                Ok(flags) => {
                    sink.push(ctx, "affine-potential", anchor::AFFINE, flags.hessian_norm, 0.0, flags.hessian_norm, tol.affine, points[0].len(), None);
                    sink.push(ctx, "gradient-norm-constant", anchor::GRAD_CONSTANT, flags.grad_norm_variation, 0.0, flags.grad_norm_variation, tol.affine, points[0].len(), None);
                }
                Err(e) => sink.push_error(ctx, "affine-potential", anchor::AFFINE, tol.affine, &e),
            }
            if params.lambda.abs() <= STEADY_TOLERANCE {
                let outcomes = sweep(&points[..1], |_, p| {
                    let ric = LocalGeometry::new(&si0.metric, p, 2)?.ricci().max_abs();
                    Ok(IdentityResidual::new("ricci-flat", ric, 0.0, p))
                });
                sink.push_worst(ctx, "steady-ricci-flat", anchor::RICCI_FLAT, tol.exact, false, &outcomes);
            }
        }
    }
}

fn verify_field_instance(
    entry: &CatalogEntry,
    inst: &CatalogInstance,
    points: &[Vec<ChartPoint>],
    cfg: &RunConfig,
    ctx: &Ctx,
    sink: &mut Sink,
) {
    let tol = &cfg.tolerances;
    if !defining_residual(inst, points, anchor::RYS, tol.soliton_residual, ctx, sink) {
        sink.warnings.push(format!(
            "{}/{}: defining residual above tolerance, concircular checks skipped",
            entry.name, inst.name
        ));
        return;
    }
    let Some(phi) = inst.concircular_factor else {
        return;
    };
    let si0 = &inst.per_chart[0];
    let Some(x) = si0.kind.vector_field() else {
        return;
    };
    let factor = ConcircularFactor::Constant(phi);
    let per_check = sweep_many(points, 5, |c, p| {
        let si = &inst.per_chart[c];
        let defect = concircular_defect(&si.metric, x, &factor, p)?.amax();
        let geom = LocalGeometry::new(&si.metric, p, 2)?;
        let con = concircular_conclusions_on(&geom, &si.params, phi)?;
        let scalar = match con.scalar_pred {
            Some(pred) => Ok(IdentityResidual::new("scalar", con.measured_scalar, pred, p)),
            None => {
                Err(LabError::DegenerateBeta {
                    value: entry.dim() as f64 * si.params.beta - 2.0 * si.params.alpha,
                })
            }
        };
        let agree = if con.classes_agree() { 0.0 } else { 1.0 };
        Ok(vec![
            Ok(IdentityResidual::new("concircular", defect, 0.0, p)),
            Ok(IdentityResidual::new("einstein", con.einstein_defect, 0.0, p)),
            scalar,
            Ok(IdentityResidual::new("eigenvalue", con.eigen_defect, 0.0, p)),
            Ok(IdentityResidual::new("class", agree, 0.0, p)),
        ])
    });
    let names = [
        ("concircular-defect", anchor::CONCIRCULAR, tol.exact),
        ("einstein-defect", anchor::EINSTEIN, tol.exact),
        ("scalar-prediction", anchor::SCALAR_PREDICTION, tol.exact),
        ("eigenvalue-defect", anchor::EIGENVALUE, tol.exact),
        ("class-agreement", anchor::CLASS_RULE, Num(0.0)),
    ];
    for ((name, anc, t), outcomes) in names.iter().zip(&per_check) {
        sink.push_worst(ctx, name, anc, *t, false, outcomes);
    }
}

fn verify_integrals(entry: &CatalogEntry, cfg: &RunConfig, sink: &mut Sink) {
    let tol = &cfg.tolerances;
    let ctx = Ctx {
        case: &entry.name,
        instance: None,
    };
    let grid = match QuadratureGrid::new(entry, cfg.resolution) {
        Ok(g) => g,
        Err(e) => {
            sink.push_error(&ctx, "volume", anchor::VOLUME, tol.quadrature, &e);
            return;
        }
    };
    volume_record(entry, &grid, cfg, &ctx, sink);
    divergence_record(entry, &grid, cfg, &ctx, sink);

    let needs_table = entry.instances.iter().any(|inst| inst.per_chart[0].kind.potential().is_some());
    if !needs_table {
        return;
    }
    let table = match GeometryTable::new(&grid, entry) {
        Ok(t) => t,
        Err(e) => {
            sink.push_error(&ctx, "hessian-energy", anchor::HESSIAN_ENERGY, tol.splitting, &e);
            return;
        }
    };
    let n = entry.dim() as f64;
    for inst in &entry.instances {
        let si0 = &inst.per_chart[0];
        if si0.kind.potential().is_none() {
            continue;
        }
        let ctx = Ctx {
            case: &entry.name,
            instance: Some(&inst.name),
        };
        let p = si0.params;
        if p.lambda.abs() <= STEADY_TOLERANCE {
            let r = check_steady_inequality_on(&table, entry, inst).map(|ineq| {
                let slack = (ineq.rhs - ineq.lhs).max(0.0);
                (ineq.lhs, ineq.rhs, slack / (1.0 + ineq.lhs.abs() + ineq.rhs.abs()))
            });
            sink.push_result(&ctx, "integral-inequality", anchor::INTEGRAL_INEQUALITY, tol.order3, r);
        }
        let denom = p.alpha - p.beta * (n - 1.0);
        if si0.effective_mu() == 0.0 && denom.abs() > DEGENERACY_TOLERANCE {
            let r = check_hessian_energy_on(&table, entry, inst).map(|res| (res.lhs, res.rhs, res.abs_gap));
            sink.push_result(&ctx, "hessian-energy", anchor::HESSIAN_ENERGY, tol.splitting, r);
        }
    }
}

fn volume_record(entry: &CatalogEntry, grid: &QuadratureGrid, cfg: &RunConfig, ctx: &Ctx, sink: &mut Sink) {
    let tol = &cfg.tolerances;
    let one = [ScalarField::constant(entry.dim(), 1.0)];
    match integrate_on(grid, &one) {
        Ok(v) => {
            sink.quantities.push(Quantity {
                name: "volume".into(),
                case: entry.name.clone(),
                value: Num(v),
            });
            if let Some(exact) = entry.closed_forms.volume {
                let rel = (v - exact).abs() / exact.abs();
                sink.push(ctx, "volume", anchor::VOLUME, v, exact, rel, tol.quadrature, grid.nodes.len(), None);
            }
        }
        Err(e) => sink.push_error(ctx, "volume", anchor::VOLUME, tol.quadrature, &e),
    }
}

fn divergence_record(entry: &CatalogEntry, grid: &QuadratureGrid, cfg: &RunConfig, ctx: &Ctx, sink: &mut Sink) {
    let tol = &cfg.tolerances;
    if cfg.divergence_functions == 0 {
        return;
    }
    let result = (|| -> Result<(f64, f64)> {
        let table = LaplacianTable::new(grid, entry)?;
        let mut worst = (0.0, 0.0);
        for k in 0..cfg.divergence_functions {
            let seed = case_seed(cfg.seed, &entry.name).wrapping_add(k as u64 + 1);
            let u = ambient_field(entry, &random_polynomial(entry.dim() + 1, 3, seed))?;
            let d = table.check(&u)?;
            let rel = d.integral.abs() / d.scale;
            if rel > worst.1 || k == 0 {
                worst = (d.integral, rel);
            }
        }
        Ok(worst)
    })();
    match result {
        Ok((integral, rel)) => {
            sink.push(ctx, "divergence", anchor::DIVERGENCE, integral, 0.0, rel, tol.quadrature, cfg.divergence_functions, None)
        }
        Err(e) => sink.push_error(ctx, "divergence", anchor::DIVERGENCE, tol.quadrature, &e),
    }
}

/// Quadrature checks only: volume, divergence and the integral statements.
pub fn run_integrate(config: &RunConfig) -> Result<Report> {
    let cases = config.resolved_cases()?;
    let mut sink = Sink::default();
    for c in &cases {
        let entry = build_case(c, &config.params)?;
        if !entry.compact {
            return Err(LabError::NotCompact(entry.name));
        }
        verify_integrals(&entry, config, &mut sink);
    }
    Ok(Report::new("integrate", config, sink))
}

/// `r,f,residual` rows of a solved profile with 17 significant digits.
pub fn profile_csv(profile: &crate::solver::RadialProfile) -> Result<String> {
    let res = profile.node_residuals()?;
    let mut out = String::from("r,f,residual\n");
    for ((r, f), e) in profile.grid.iter().zip(&profile.values).zip(&res) {
        out.push_str(&format!("{},{},{}\n", format_num(*r), format_num(*f), format_num(*e)));
    }
    Ok(out)
}
