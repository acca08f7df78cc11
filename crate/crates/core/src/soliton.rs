//! Soliton parameters, defining residual tensors and the concircular case.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::chart::ChartPoint;
use crate::curvature::{values, LocalGeometry, Sym2Tensor};
use crate::error::{LabError, Result};
use crate::field::{MetricField, OneFormField, ScalarField, VectorField};
use crate::jet::Jet;

/// `|lambda|` at or below this counts as steady.
pub const STEADY_TOLERANCE: f64 = 1e-12;
/// Denominators at or below this in magnitude are treated as zero.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;
/// Allowed variation of a concircular factor before it is declared nonconstant.
pub const FACTOR_VARIATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolitonParams {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolitonClass {
    Expanding,
    Steady,
    Shrinking,
}

impl SolitonClass {
    pub fn as_str(self) -> &'static str {
        match self {
            SolitonClass::Expanding => "expanding",
            SolitonClass::Steady => "steady",
            SolitonClass::Shrinking => "shrinking",
        }
    }
}

/// Named special cases of the `(alpha, beta)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Family {
    RicciSoliton,
    YamabeSoliton,
    RhoEinstein { rho: f64 },
}

impl SolitonParams {
    pub fn new(alpha: f64, beta: f64, lambda: f64, mu: f64) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            lambda,
            mu,
        };
        if [alpha, beta, lambda, mu].iter().all(|v| v.is_finite()) {
            Ok(p)
        } else {
            Err(LabError::InvalidParameter(format!("non-finite soliton parameters {p:?}")))
        }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }

    /// Proper means `alpha` is neither 0 nor 1.
    pub fn is_proper(&self) -> bool {
        self.alpha != 0.0 && self.alpha != 1.0
    }

    /// Rho-Einstein takes precedence only when it is not already a plain Ricci soliton.
    pub fn family(&self) -> Option<Family> {
        match (self.alpha, self.beta) {
            (a, b) if a == 1.0 && b == 0.0 => Some(Family::RicciSoliton),
            (a, b) if a == 0.0 && b == 2.0 => Some(Family::YamabeSoliton),
            (1.0, b) => Some(Family::RhoEinstein { rho: b / 2.0 }),
            _ => None,
        }
    }

    pub fn classify(&self) -> SolitonClass {
        classify(self)
    }

    /// The gradient identity carries a factor `mu * alpha + 1`; it vanishes here.
    pub fn mu_alpha_degenerate(&self) -> bool {
        (self.mu * self.alpha + 1.0).abs() <= DEGENERACY_TOLERANCE
    }

    /// `lambda` that balances a constant potential on an Einstein metric
    /// with `Ric = k g` in dimension `n`.
    pub fn einstein_balanced_lambda(alpha: f64, beta: f64, n: usize, k: f64) -> f64 {
        let nf = n as f64;
        let r = nf * k;
        beta * r / 2.0 - alpha * k
    }
}

/// Sign of `lambda`, with the steady band `|lambda| <= 1e-12`.
pub fn classify(params: &SolitonParams) -> SolitonClass {
    if params.lambda.abs() <= STEADY_TOLERANCE {
        SolitonClass::Steady
    } else if params.lambda > 0.0 {
        SolitonClass::Expanding
    } else {
        SolitonClass::Shrinking
    }
}

#[derive(Debug, Clone)]
pub enum SolitonKind {
    /// `alpha Ric + L_X g / 2 + (lambda - beta R / 2) g`.
    Rys { field: VectorField },
    /// `alpha Ric + Hess f + (lambda - beta R / 2) g`.
    Grys { potential: ScalarField },
    /// RYS plus `mu eta (x) eta`.
    EtaRys { field: VectorField, eta: OneFormField },
    /// GRYS plus `mu df (x) df`.
    GenGrys { potential: ScalarField },
}

impl SolitonKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolitonKind::Rys { .. } => "rys",
            SolitonKind::Grys { .. } => "grys",
            SolitonKind::EtaRys { .. } => "eta-rys",
            SolitonKind::GenGrys { .. } => "gen-grys",
        }
    }

    pub fn potential(&self) -> Option<&ScalarField> {
        match self {
            SolitonKind::Grys { potential } | SolitonKind::GenGrys { potential } => Some(potential),
            _ => None,
        }
    }

    pub fn vector_field(&self) -> Option<&VectorField> {
        match self {
            SolitonKind::Rys { field } | SolitonKind::EtaRys { field, .. } => Some(field),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolitonInstance {
    pub params: SolitonParams,
    pub metric: MetricField,
    pub kind: SolitonKind,
}

impl SolitonInstance {
    pub fn new(params: SolitonParams, metric: MetricField, kind: SolitonKind) -> Self {
        Self {
            params,
            metric,
            kind,
        }
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    /// The `mu` that actually enters the residual (zero for RYS and GRYS).
    pub fn effective_mu(&self) -> f64 {
        match self.kind {
            SolitonKind::EtaRys { .. } | SolitonKind::GenGrys { .. } => self.params.mu,
            _ => 0.0,
        }
    }
}

/// Defining residual of any instance kind, evaluated on an existing expansion.
pub fn residual_on(geom: &LocalGeometry, inst: &SolitonInstance) -> Result<Sym2Tensor> {
    let SolitonParams {
        alpha,
        beta,
        lambda,
        mu,
    } = inst.params;
    let n = geom.dim();
    let r = geom.scalar();
    let ric = values(geom.ricci_jets());
    let g = geom.metric();
    let mut out = ric * alpha + g * (lambda - 0.5 * beta * r);

    let first_order = |jets: &[Jet]| -> Vec<f64> { jets.iter().map(Jet::value).collect() };
    match &inst.kind {
        SolitonKind::Rys { field } | SolitonKind::EtaRys { field, .. } => {
            let x = geom.expand_vector(field)?;
            out += values(&geom.lie_derivative_metric(&x)) * 0.5;
        }
        SolitonKind::Grys { potential } | SolitonKind::GenGrys { potential } => {
            let f = geom.expand(potential)?;
            out += values(&geom.hessian(&f));
        }
    }
    let extra = match &inst.kind {
        SolitonKind::EtaRys { eta, .. } => Some(first_order(&geom.expand_form(eta)?)),
        SolitonKind::GenGrys { potential } => {
            Some(first_order(&geom.expand(potential)?.gradient()))
        }
        _ => None,
    };
    if let Some(w) = extra {
        out += DMatrix::from_fn(n, n, |i, j| mu * w[i] * w[j]);
    }
    Ok(Sym2Tensor::from_matrix(&out))
}

/// Residual of whichever equation the instance kind names.
pub fn residual(inst: &SolitonInstance, p: &ChartPoint) -> Result<Sym2Tensor> {
    let geom = LocalGeometry::new(&inst.metric, p, 2)?;
    residual_on(&geom, inst)
}

fn residual_of_kind(
    inst: &SolitonInstance,
    p: &ChartPoint,
    expected: &'static str,
) -> Result<Sym2Tensor> {
    if inst.kind.name() != expected {
        return Err(LabError::WrongKind { expected });
    }
    residual(inst, p)
}

pub fn rys_residual(inst: &SolitonInstance, p: &ChartPoint) -> Result<Sym2Tensor> {
    residual_of_kind(inst, p, "rys")
}

pub fn grys_residual(inst: &SolitonInstance, p: &ChartPoint) -> Result<Sym2Tensor> {
    residual_of_kind(inst, p, "grys")
}

pub fn eta_rys_residual(inst: &SolitonInstance, p: &ChartPoint) -> Result<Sym2Tensor> {
    residual_of_kind(inst, p, "eta-rys")
}

pub fn gen_grys_residual(inst: &SolitonInstance, p: &ChartPoint) -> Result<Sym2Tensor> {
    residual_of_kind(inst, p, "gen-grys")
}

/// Max-abs component and metric norm of a residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualNorms {
    pub max_abs: f64,
    pub g_norm: f64,
}

pub fn residual_norms(inst: &SolitonInstance, p: &ChartPoint) -> Result<ResidualNorms> {
    let geom = LocalGeometry::new(&inst.metric, p, 2)?;
    let r = residual_on(&geom, inst)?;
    Ok(ResidualNorms {
        max_abs: r.max_abs(),
        g_norm: r.g_norm(&geom.inverse_metric()),
    })
}

/// Concircular factor: a field or a constant.
#[derive(Debug, Clone)]
pub enum ConcircularFactor {
    Constant(f64),
    Field(ScalarField),
}

impl ConcircularFactor {
    pub fn value(&self, p: &ChartPoint) -> Result<f64> {
        match self {
            ConcircularFactor::Constant(c) => Ok(*c),
            ConcircularFactor::Field(f) => f.value(p),
        }
    }

    /// The constant value, after checking the variation over `points`.
    pub fn constant_value(&self, points: &[ChartPoint]) -> Result<f64> {
        match self {
            ConcircularFactor::Constant(c) => Ok(*c),
            ConcircularFactor::Field(f) => {
                let vals = points.iter().map(|p| f.value(p)).collect::<Result<Vec<_>>>()?;
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let variation = hi - lo;
                if variation > FACTOR_VARIATION_TOLERANCE {
                    Err(LabError::NonConstantFactor { variation })
                } else {
                    Ok(vals.first().copied().unwrap_or(0.0))
                }
            }
        }
    }
}

/// `(nabla X)^i_j - phi delta^i_j`, row `i`, column `j`.
pub fn concircular_defect(
    g: &MetricField,
    x: &VectorField,
    phi: &ConcircularFactor,
    p: &ChartPoint,
) -> Result<DMatrix<f64>> {
    let geom = LocalGeometry::new(g, p, 2)?;
    let xj = geom.expand_vector(x)?;
    let nabla = geom.covariant_derivative_vector(&xj);
    let phi = phi.value(p)?;
    let n = geom.dim();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        nabla[j][i].value() - if i == j { phi } else { 0.0 }
    }))
}

/// Scalar curvature forced by a concircular RYS, `2n(lambda + phi) / (n beta - 2 alpha)`.
pub fn predicted_scalar_curvature(params: &SolitonParams, n: usize, phi: f64) -> Result<f64> {
    let nf = n as f64;
    let denom = nf * params.beta - 2.0 * params.alpha;
    if denom.abs() <= DEGENERACY_TOLERANCE {
        return Err(LabError::DegenerateBeta { value: denom });
    }
    Ok(2.0 * nf * (params.lambda + phi) / denom)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcircularConclusions {
    /// `max |Ric - (R/n) g|`.
    pub einstein_defect: f64,
    pub measured_scalar: f64,
    /// `None` when `n beta = 2 alpha`.
    pub scalar_pred: Option<f64>,
    /// `(beta R - 2 phi - 2 lambda) / (2 alpha)` with the measured `R`.
    pub eigenvalue_pred: f64,
    /// `max |Q - eigenvalue_pred I|`, i.e. the worst `|QY - e Y|` over a coordinate basis.
    pub eigen_defect: f64,
    /// `(n beta - 2 alpha) R / (2n)`.
    pub phi_threshold: f64,
    pub class_by_phi: SolitonClass,
    pub class_by_lambda: SolitonClass,
}

impl ConcircularConclusions {
    pub fn classes_agree(&self) -> bool {
        self.class_by_phi == self.class_by_lambda
    }
}

pub fn concircular_conclusions(
    g: &MetricField,
    params: &SolitonParams,
    phi: f64,
    p: &ChartPoint,
) -> Result<ConcircularConclusions> {
    let geom = LocalGeometry::new(g, p, 2)?;
    concircular_conclusions_on(&geom, params, phi)
}

pub fn concircular_conclusions_on(
    geom: &LocalGeometry,
    params: &SolitonParams,
    phi: f64,
) -> Result<ConcircularConclusions> {
    if params.alpha.abs() <= DEGENERACY_TOLERANCE {
        return Err(LabError::AlphaZero);
    }
    let n = geom.dim();
    let nf = n as f64;
    let r = geom.scalar();
    let ric = geom.ricci().to_matrix();
    let einstein_defect = (&ric - geom.metric() * (r / nf)).amax();
    let eigenvalue_pred = (params.beta * r - 2.0 * phi - 2.0 * params.lambda) / (2.0 * params.alpha);
    let eigen_defect = (geom.ricci_operator() - DMatrix::identity(n, n) * eigenvalue_pred).amax();
    let phi_threshold = (nf * params.beta - 2.0 * params.alpha) * r / (2.0 * nf);
    let gap = phi - phi_threshold;
    let class_by_phi = if gap.abs() <= STEADY_TOLERANCE * (1.0 + phi.abs() + phi_threshold.abs()) {
        SolitonClass::Steady
    } else if gap < 0.0 {
        SolitonClass::Expanding
    } else {
        SolitonClass::Shrinking
    };
    Ok(ConcircularConclusions {
        einstein_defect,
        measured_scalar: r,
        scalar_pred: predicted_scalar_curvature(params, n, phi).ok(),
        eigenvalue_pred,
        eigen_defect,
        phi_threshold,
        class_by_phi,
        class_by_lambda: classify(params),
    })
}
