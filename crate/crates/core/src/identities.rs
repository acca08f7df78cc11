//! Pointwise checks of the soliton identities and of the universal
//! identities (contracted Bianchi, commutation, Bochner) that their
//! derivation rests on.
//!
//! Soliton identities are only meaningful on instances whose defining
//! residual vanishes, so [`SolitonPoint::verified`] refuses to hand out an
//! evaluation otherwise.

use serde::Serialize;

use crate::chart::ChartPoint;
use crate::curvature::{dot, values, LocalGeometry};
use crate::error::{LabError, Result};
use crate::field::{MetricField, ScalarField};
use crate::jet::Jet;
use crate::soliton::{classify, residual_on, SolitonClass, SolitonInstance, SolitonKind, DEGENERACY_TOLERANCE};

/// Tolerances by the highest metric derivative order a quantity involves.
pub mod tolerance {
    pub const ORDER_2: f64 = 1e-8;
    pub const ORDER_3: f64 = 1e-6;
    pub const ORDER_4: f64 = 1e-4;
    /// Pointwise splitting identity and integrated Hessian energy.
    pub const SPLITTING: f64 = 1e-5;
    /// Universal identities on arbitrary metrics, scale-relative.
    pub const UNIVERSAL: f64 = 1e-6;
    /// Defining residual before any identity is evaluated.
    pub const SOLITON_RESIDUAL: f64 = 1e-8;
    /// Flatness of the potential in the product splitting.
    pub const AFFINE: f64 = 1e-9;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub point: ChartPoint,
}

impl IdentityResidual {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, point: &ChartPoint) -> Self {
        let abs_gap = (lhs - rhs).abs();
        Self {
            name: name.into(),
            lhs,
            rhs,
            abs_gap,
            rel_gap: abs_gap / (1.0 + lhs.abs().max(rhs.abs())),
            point: point.clone(),
        }
    }

    /// Worst component of a covector identity.
    pub fn worst_component(name: &str, lhs: &[f64], rhs: &[f64], point: &ChartPoint) -> Self {
        let mut worst: Option<Self> = None;
        for (i, (l, r)) in lhs.iter().zip(rhs).enumerate() {
            let cand = Self::new(format!("{name}[{i}]"), *l, *r, point);
            let better = match &worst {
                None => true,
                Some(w) => cand.abs_gap > w.abs_gap || cand.abs_gap.is_nan(),
            };
            if better {
                worst = Some(cand);
            }
        }
        worst.expect("at least one component")
    }
}

/// Expansion order used for every identity; `Delta R` needs four metric derivatives.
const IDENTITY_ORDER: usize = 4;

/// Everything the soliton identities need at one point of a verified instance.
pub struct SolitonPoint<'a> {
    inst: &'a SolitonInstance,
    geom: LocalGeometry,
    f: Jet,
    residual_max: f64,
}

impl<'a> SolitonPoint<'a> {
    /// Expands the instance at `p` without checking the residual.
    pub fn evaluate(inst: &'a SolitonInstance, p: &ChartPoint) -> Result<Self> {
        let potential = inst.kind.potential().ok_or(LabError::WrongKind {
            expected: "gradient (grys or gen-grys)",
        })?;
        let geom = LocalGeometry::new(&inst.metric, p, IDENTITY_ORDER)?;
        let f = geom.expand(potential)?;
        let residual_max = residual_on(&geom, inst)?.max_abs();
        Ok(Self {
            inst,
            geom,
            f,
            residual_max,
        })
    }

    /// Expands and insists the defining residual is below `tol`.
    pub fn verified(inst: &'a SolitonInstance, p: &ChartPoint, tol: f64) -> Result<Self> {
        let sp = Self::evaluate(inst, p)?;
        if sp.residual_max <= tol {
            Ok(sp)
        } else {
            Err(LabError::NotASoliton {
                residual: sp.residual_max,
                tolerance: tol,
            })
        }
    }

    pub fn residual_max(&self) -> f64 {
        self.residual_max
    }

    pub fn geometry(&self) -> &LocalGeometry {
        &self.geom
    }

    fn point(&self) -> &ChartPoint {
        self.geom.point()
    }

    fn n(&self) -> f64 {
        self.geom.dim() as f64
    }

    fn df(&self) -> Vec<Jet> {
        self.f.gradient()
    }

    fn df_values(&self) -> Vec<f64> {
        self.df().iter().map(Jet::value).collect()
    }

    fn grad_r(&self) -> Vec<f64> {
        (0..self.geom.dim())
            .map(|i| self.geom.scalar_jet().diff(i).value())
            .collect()
    }

    /// `g^ij a_i b_j` for plain covector values.
    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let ginv = self.geom.inverse_metric();
        let n = a.len();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| ginv[(i, j)] * a[i] * b[j])
            .sum()
    }

    /// `Ric(grad f, .)` as a covector.
    fn ricci_of_grad(&self) -> Vec<f64> {
        let q = values(self.geom.ricci_jets()) * self.geom.inverse_metric();
        let df = self.df_values();
        (0..df.len())
            .map(|i| (0..df.len()).map(|k| q[(i, k)] * df[k]).sum())
            .collect()
    }

    fn mu(&self) -> f64 {
        self.inst.effective_mu()
    }

    /// `alpha - beta (n - 1)`.
    fn a_coef(&self) -> f64 {
        self.inst.params.alpha - self.inst.params.beta * (self.n() - 1.0)
    }

    /// `lambda - beta R / 2`.
    fn shifted_lambda(&self) -> f64 {
        self.inst.params.lambda - 0.5 * self.inst.params.beta * self.geom.scalar()
    }

    fn laplacian_f(&self) -> f64 {
        self.geom.laplacian(&self.f).value()
    }

    fn grad_norm_sq(&self) -> f64 {
        let df = self.df_values();
        self.inner(&df, &df)
    }

    /// `alpha R + Delta f + n(lambda - beta R/2) + mu |grad f|^2 = 0`.
    pub fn trace_identity(&self) -> IdentityResidual {
        let a = self.inst.params.alpha;
        let lhs = a * self.geom.scalar()
            + self.laplacian_f()
            + self.n() * self.shifted_lambda()
            + self.mu() * self.grad_norm_sq();
        IdentityResidual::new("trace", lhs, 0.0, self.point())
    }

    /// `{alpha - beta(n-1)} grad R + 2 mu {alpha R + (n-1)(lambda - beta R/2)} grad f
    ///  = 2 (mu alpha + 1) Ric(grad f, .)`.
    pub fn gradient_identity(&self) -> IdentityResidual {
        let (alpha, mu) = (self.inst.params.alpha, self.mu());
        let b = alpha * self.geom.scalar() + (self.n() - 1.0) * self.shifted_lambda();
        let df = self.df_values();
        let lhs: Vec<f64> = self
            .grad_r()
            .iter()
            .zip(&df)
            .map(|(dr, dfi)| self.a_coef() * dr + 2.0 * mu * b * dfi)
            .collect();
        let rhs: Vec<f64> = self
            .ricci_of_grad()
            .iter()
            .map(|v| 2.0 * (mu * alpha + 1.0) * v)
            .collect();
        IdentityResidual::worst_component("gradient", &lhs, &rhs, self.point())
    }

    /// The `mu = 0` form `{alpha - beta(n-1)} grad R = 2 Ric(grad f, .)`.
    pub fn gradient_identity_gradient_case(&self) -> IdentityResidual {
        let lhs: Vec<f64> = self.grad_r().iter().map(|dr| self.a_coef() * dr).collect();
        let rhs: Vec<f64> = self.ricci_of_grad().iter().map(|v| 2.0 * v).collect();
        IdentityResidual::worst_component("gradient-mu0", &lhs, &rhs, self.point())
    }

    /// `{alpha - beta(n-1)} Delta R + {2 mu alpha - 2 mu beta (n-1) - 1} g(grad R, grad f)
    ///  = 2 mu {alpha R + (n-1)(lambda - beta R/2)} {alpha R + n(lambda - beta R/2)}
    ///    - 2 (mu alpha + 1) {alpha |Ric|^2 + R (lambda - beta R/2)}`.
    pub fn laplacian_identity(&self) -> Result<IdentityResidual> {
        let (alpha, beta, mu) = (self.inst.params.alpha, self.inst.params.beta, self.mu());
        let n = self.n();
        let r = self.geom.scalar();
        let shifted = self.shifted_lambda();
        let lap_r = self.geom.laplacian_scalar_curvature()?;
        let cross = self.inner(&self.grad_r(), &self.df_values());
        let lhs = self.a_coef() * lap_r
            + (2.0 * mu * alpha - 2.0 * mu * beta * (n - 1.0) - 1.0) * cross;
        let rhs = 2.0 * mu * (alpha * r + (n - 1.0) * shifted) * (alpha * r + n * shifted)
            - 2.0 * (mu * alpha + 1.0) * (alpha * self.geom.ricci_norm_sq() + r * shifted);
        Ok(IdentityResidual::new("laplacian", lhs, rhs, self.point()))
    }

    /// The `mu = 0` form
    /// `{alpha - beta(n-1)} Delta R = g(grad R, grad f) - 2 {alpha |Ric|^2 + R(lambda - beta R/2)}`.
    pub fn laplacian_identity_gradient_case(&self) -> Result<IdentityResidual> {
        let alpha = self.inst.params.alpha;
        let r = self.geom.scalar();
        let lhs = self.a_coef() * self.geom.laplacian_scalar_curvature()?;
        let cross = self.inner(&self.grad_r(), &self.df_values());
        let rhs = cross - 2.0 * (alpha * self.geom.ricci_norm_sq() + r * self.shifted_lambda());
        Ok(IdentityResidual::new("laplacian-mu0", lhs, rhs, self.point()))
    }

    /// `Delta |grad f|^2 / 2 = |Hess f|^2 + {(beta - alpha)/(alpha - beta(n-1))} Ric(grad f, grad f)`,
    /// valid for gradient solitons with `mu = 0`.
    pub fn splitting_identity(&self) -> Result<IdentityResidual> {
        if self.mu() != 0.0 {
            return Err(LabError::InvalidParameter(
                "splitting identity needs mu = 0".into(),
            ));
        }
        let denom = self.a_coef();
        if denom.abs() <= DEGENERACY_TOLERANCE {
            return Err(LabError::DegenerateDenominator { value: denom });
        }
        let coef = (self.inst.params.beta - self.inst.params.alpha) / denom;
        let df = self.df();
        let grad_sq = self.geom.inner_forms(&df, &df);
        let lhs = 0.5 * self.geom.laplacian(&grad_sq).value();
        let hess = self.geom.hessian(&self.f);
        let hess_sq = self.geom.norm_sq(&hess).value();
        let ric_ff = self.inner(&self.ricci_of_grad(), &self.df_values());
        let rhs = hess_sq + coef * ric_ff;
        Ok(IdentityResidual::new("splitting", lhs, rhs, self.point()))
    }
}

/// Worst component of `g^jk nabla_k R_ij = d_i R / 2` (contracted second Bianchi).
pub fn bianchi_residual(geom: &LocalGeometry) -> Result<IdentityResidual> {
    if geom.ricci_jets()[0][0].order() < 1 {
        return Err(LabError::OrderTooHigh {
            requested: 3,
            max: geom.layout().order(),
        });
    }
    let n = geom.dim();
    let nabla = geom.covariant_derivative_2form(geom.ricci_jets());
    let ginv = geom.inverse_metric();
    let lhs: Vec<f64> = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..n {
                for k in 0..n {
                    acc += ginv[(j, k)] * nabla[k][i][j].value();
                }
            }
            acc
        })
        .collect();
    let rhs: Vec<f64> = (0..n)
        .map(|i| 0.5 * geom.scalar_jet().diff(i).value())
        .collect();
    Ok(IdentityResidual::worst_component("bianchi", &lhs, &rhs, geom.point()))
}

/// Worst component of `Delta nabla_i f - nabla_i Delta f = R_ij nabla^j f`.
pub fn commutation_residual(geom: &LocalGeometry, f: &Jet) -> Result<IdentityResidual> {
    if f.order() < 3 {
        return Err(LabError::OrderTooHigh {
            requested: 3,
            max: f.order(),
        });
    }
    let n = geom.dim();
    let hess = geom.hessian(f);
    let nabla_hess = geom.covariant_derivative_2form(&hess);
    let lap = geom.trace(&hess);
    let ginv = geom.inverse_metric();
    let lhs: Vec<f64> = (0..n)
        .map(|i| {
            let mut rough = 0.0;
            for j in 0..n {
                for k in 0..n {
                    rough += ginv[(j, k)] * nabla_hess[j][k][i].value();
                }
            }
            rough - lap.diff(i).value()
        })
        .collect();
    let grad = geom.raise(&f.gradient());
    let ric = values(geom.ricci_jets());
    let rhs: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| ric[(i, j)] * grad[j].value()).sum())
        .collect();
    Ok(IdentityResidual::worst_component("commutation", &lhs, &rhs, geom.point()))
}

/// `Delta |grad f|^2 / 2 = |Hess f|^2 + Ric(grad f, grad f) + g(grad f, grad Delta f)`.
pub fn bochner_residual(geom: &LocalGeometry, f: &Jet) -> Result<IdentityResidual> {
    if f.order() < 3 {
        return Err(LabError::OrderTooHigh {
            requested: 3,
            max: f.order(),
        });
    }
    let df = f.gradient();
    let grad_sq = geom.inner_forms(&df, &df);
    let lhs = 0.5 * geom.laplacian(&grad_sq).value();
    let hess = geom.hessian(f);
    let hess_sq = geom.norm_sq(&hess).value();
    let grad = geom.raise(&df);
    let ric_ff = geom.contract(geom.ricci_jets(), &grad, &grad).value();
    let lap = geom.trace(&hess);
    let cross = dot(&grad, &lap.gradient()).value();
    Ok(IdentityResidual::new(
        "bochner",
        lhs,
        hess_sq + ric_ff + cross,
        geom.point(),
    ))
}

/// The three universal identities for one metric and test function at `p`.
pub fn universal_residuals(
    g: &MetricField,
    f: &ScalarField,
    p: &ChartPoint,
) -> Result<[IdentityResidual; 3]> {
    let geom = LocalGeometry::new(g, p, 4)?;
    let fj = geom.expand(f)?;
    Ok([
        bianchi_residual(&geom)?,
        commutation_residual(&geom, &fj)?,
        bochner_residual(&geom, &fj)?,
    ])
}

pub fn check_trace_identity(inst: &SolitonInstance, p: &ChartPoint) -> Result<IdentityResidual> {
    Ok(SolitonPoint::verified(inst, p, tolerance::SOLITON_RESIDUAL)?.trace_identity())
}

pub fn check_gradient_identity(inst: &SolitonInstance, p: &ChartPoint) -> Result<IdentityResidual> {
    Ok(SolitonPoint::verified(inst, p, tolerance::SOLITON_RESIDUAL)?.gradient_identity())
}

pub fn check_laplacian_identity(inst: &SolitonInstance, p: &ChartPoint) -> Result<IdentityResidual> {
    SolitonPoint::verified(inst, p, tolerance::SOLITON_RESIDUAL)?.laplacian_identity()
}

pub fn check_splitting_identity(inst: &SolitonInstance, p: &ChartPoint) -> Result<IdentityResidual> {
    SolitonPoint::verified(inst, p, tolerance::SOLITON_RESIDUAL)?.splitting_identity()
}

/// Constant-scalar-curvature conclusion on a compact generalized gradient soliton.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantScalarReport {
    /// `2 n lambda / (n beta - 2 alpha)`.
    pub predicted: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// `max |R - predicted|` over all samples.
    pub gap: f64,
    pub class: SolitonClass,
    /// Whether `n beta > 2 alpha`, the regime where the sign law is claimed.
    pub sign_law_applies: bool,
    /// Sign of the measured `R` matches the class (negative / zero / positive).
    pub sign_law_holds: bool,
    pub holds: bool,
}

/// Checks that `R` equals `2 n lambda / (n beta - 2 alpha)` at every sample of every chart.
///
/// `charts` pairs each chart's instance with that chart's sample points;
/// `compact` is the catalog flag of the entry they come from.
pub fn check_constant_scalar(
    charts: &[(&SolitonInstance, &[ChartPoint])],
    compact: bool,
    tol: f64,
) -> Result<ConstantScalarReport> {
    let (first, _) = charts
        .first()
        .ok_or_else(|| LabError::InvalidParameter("no charts supplied".into()))?;
    if !compact {
        return Err(LabError::NotCompact("instance".into()));
    }
    if first.kind.potential().is_none() {
        return Err(LabError::WrongKind {
            expected: "gradient (grys or gen-grys)",
        });
    }
    let params = first.params;
    let n = first.dim() as f64;
    let denom = n * params.beta - 2.0 * params.alpha;
    if denom.abs() <= DEGENERACY_TOLERANCE {
        return Err(LabError::DegenerateDenominator { value: denom });
    }
    let predicted = 2.0 * n * params.lambda / denom;
    let mut r_min = f64::INFINITY;
    let mut r_max = f64::NEG_INFINITY;
    for (inst, points) in charts {
        for p in points.iter() {
            let r = LocalGeometry::new(&inst.metric, p, 2)?.scalar();
            r_min = r_min.min(r);
            r_max = r_max.max(r);
        }
    }
    let gap = (r_max - predicted).abs().max((r_min - predicted).abs());
    let class = classify(&params);
    let sign_law_holds = match class {
        SolitonClass::Shrinking => r_max < 0.0,
        SolitonClass::Steady => r_min.abs().max(r_max.abs()) <= tol,
        SolitonClass::Expanding => r_min > 0.0,
    };
    Ok(ConstantScalarReport {
        predicted,
        r_min,
        r_max,
        gap,
        class,
        sign_law_applies: denom > 0.0,
        sign_law_holds,
        holds: gap <= tol,
    })
}

/// Flatness of the potential in a product splitting.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AffineFlags {
    /// Largest Hessian component over the samples.
    pub hessian_norm: f64,
    /// `max |grad f| - min |grad f|` over the samples.
    pub grad_norm_variation: f64,
    pub affine: bool,
}

pub fn check_affine_splitting_flags(
    g: &MetricField,
    f: &ScalarField,
    points: &[ChartPoint],
) -> Result<AffineFlags> {
    let mut hessian_norm: f64 = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in points {
        let geom = LocalGeometry::new(g, p, 2)?;
        let fj = geom.expand(f)?;
        hessian_norm = hessian_norm.max(values(&geom.hessian(&fj)).amax());
        let df = fj.gradient();
        let norm = geom.inner_forms(&df, &df).value().max(0.0).sqrt();
        lo = lo.min(norm);
        hi = hi.max(norm);
    }
    let grad_norm_variation = if points.is_empty() { 0.0 } else { hi - lo };
    Ok(AffineFlags {
        hessian_norm,
        grad_norm_variation,
        affine: hessian_norm <= tolerance::AFFINE && grad_norm_variation <= tolerance::AFFINE,
    })
}

/// True when the instance's kind carries a gradient potential with no `mu` coupling.
pub fn is_plain_gradient(inst: &SolitonInstance) -> bool {
    matches!(inst.kind, SolitonKind::Grys { .. })
        || (matches!(inst.kind, SolitonKind::GenGrys { .. }) && inst.params.mu == 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_case, make_perturbed_flat, random_polynomial, CaseParams};
    use crate::soliton::SolitonParams;

    fn case(name: &str, cp: CaseParams) -> crate::catalog::CatalogEntry {
        build_case(name, &cp).unwrap()
    }

    fn gaussian(lambda: f64) -> SolitonInstance {
        let cp = CaseParams {
            lambda: Some(lambda),
            ..CaseParams::default()
        };
        case("gaussian", cp).instances[0].per_chart[0].clone()
    }

    fn s3(name: &str) -> SolitonInstance {
        case("unit-s3", CaseParams::default())
            .instance(name)
            .unwrap()
            .per_chart[0]
            .clone()
    }

    fn p() -> ChartPoint {
        ChartPoint::from([0.4, -0.3, 0.7])
    }

    #[test]
    fn gaussian_trace_terms() {
        let inst = gaussian(2.0);
        let sp = SolitonPoint::verified(&inst, &p(), 1e-8).unwrap();
        assert!((sp.laplacian_f() + 6.0).abs() <= 1e-12);
        assert!(sp.trace_identity().abs_gap <= 1e-8);
        assert!(check_gradient_identity(&inst, &p()).unwrap().abs_gap <= 1e-6);
        assert!(check_laplacian_identity(&inst, &p()).unwrap().abs_gap <= 1e-4);
        assert!(sp.laplacian_identity_gradient_case().unwrap().abs_gap <= 1e-4);
    }

    #[test]
    fn gaussian_splitting_balances_hessian_energy() {
        for lambda in [-2.0, 1.0, 2.0] {
            let r = check_splitting_identity(&gaussian(lambda), &p()).unwrap();
            assert!((r.lhs - 3.0 * lambda * lambda).abs() <= 1e-10);
            assert!(r.abs_gap <= 1e-10);
        }
    }

    #[test]
    fn einstein_mu1_laplacian_cancels_nontrivially() {
        let inst = s3("gen-mu1");
        let sp = SolitonPoint::verified(&inst, &p(), 1e-8).unwrap();
        assert!((sp.geometry().ricci_norm_sq() - 12.0).abs() <= 1e-9);
        let r = sp.laplacian_identity().unwrap();
        assert!(r.abs_gap <= 1e-4, "{r:?}");
        assert!(sp.trace_identity().abs_gap <= 1e-8);
        assert!(sp.gradient_identity().abs_gap <= 1e-6);
    }

    #[test]
    fn hyperbolic_einstein_identities() {
        let inst = case("einstein-h3", CaseParams::default()).instances[0].per_chart[0].clone();
        let q = ChartPoint::from([0.1, -0.2, 1.1]);
        assert!(check_trace_identity(&inst, &q).unwrap().abs_gap <= 1e-8);
        assert!(check_laplacian_identity(&inst, &q).unwrap().abs_gap <= 1e-4);
    }

    #[test]
    fn non_soliton_is_rejected() {
        let inst = SolitonInstance::new(
            SolitonParams::new(1.0, 0.0, 1.0, 0.0).unwrap(),
            MetricField::euclidean(3),
            SolitonKind::Grys {
                potential: ScalarField::constant(3, 0.0),
            },
        );
        assert!(matches!(
            check_trace_identity(&inst, &p()),
            Err(LabError::NotASoliton { .. })
        ));
    }

    #[test]
    fn mu_zero_gradient_forms_agree_exactly() {
        let inst = gaussian(1.0);
        let sp = SolitonPoint::verified(&inst, &p(), 1e-8).unwrap();
        let (a, b) = (sp.gradient_identity(), sp.gradient_identity_gradient_case());
        assert_eq!((a.lhs, a.rhs), (b.lhs, b.rhs));
    }

    #[test]
    fn constant_scalar_curvature() {
        let e = case("unit-s3", CaseParams::default());
        let inst = e.instance("scalar-constant").unwrap();
        let pts = e.sample(10, 3);
        let charts: Vec<_> = inst.per_chart.iter().zip(&pts).map(|(i, p)| (i, p.as_slice())).collect();
        let rep = check_constant_scalar(&charts, true, 1e-9).unwrap();
        assert_eq!(rep.predicted, 6.0);
        assert!(rep.holds && rep.sign_law_holds && rep.sign_law_applies);

        let hypothetical = SolitonInstance {
            params: inst.params().with_lambda(0.0),
            ..inst.per_chart[0].clone()
        };
        let rep = check_constant_scalar(&[(&hypothetical, pts[0].as_slice())], true, 1e-9).unwrap();
        assert!((rep.gap - 6.0).abs() <= 1e-9 && !rep.holds);

        let degenerate = SolitonInstance {
            params: SolitonParams::new(3.0, 2.0, 0.0, 0.0).unwrap(),
            ..inst.per_chart[0].clone()
        };
        assert!(matches!(
            check_constant_scalar(&[(&degenerate, pts[0].as_slice())], true, 1e-9),
            Err(LabError::DegenerateDenominator { .. })
        ));
    }

    #[test]
    fn product_splitting() {
        let e = case("s2xr", CaseParams::default());
        let inst = &e.instances[0].per_chart[0];
        let pts = e.sample(20, 4).remove(0);
        for q in &pts {
            assert!(check_splitting_identity(inst, q).unwrap().abs_gap <= 1e-5);
        }
        let g = &e.charts[0].metric;
        let t = ScalarField::coordinate(3, 2);
        let flags = check_affine_splitting_flags(g, &t, &pts).unwrap();
        assert!(flags.affine, "{flags:?}");
        let t2 = ScalarField::new(3, |x| x[2].square());
        let flags = check_affine_splitting_flags(g, &t2, &pts).unwrap();
        assert!((flags.hessian_norm - 2.0).abs() <= 1e-12 && !flags.affine);
        let c = ScalarField::constant(3, 4.0);
        let flags = check_affine_splitting_flags(g, &c, &pts).unwrap();
        assert_eq!((flags.hessian_norm, flags.grad_norm_variation), (0.0, 0.0));
    }

    #[test]
    fn universal_identities_on_perturbed_flat() {
        let e = make_perturbed_flat(1e-2, 42).unwrap();
        let g = &e.charts[0].metric;
        let f = random_polynomial(3, 3, 5);
        for q in e.sample(10, 8).remove(0) {
            for r in universal_residuals(g, &f, &q).unwrap() {
                assert!(r.rel_gap <= tolerance::UNIVERSAL, "{r:?}");
            }
        }
    }

    #[test]
    fn universal_identities_on_curved_entries() {
        let f = random_polynomial(3, 3, 2);
        for name in ["unit-s3", "h3", "s2xr"] {
            let e = case(name, CaseParams::default());
            for q in e.sample(5, 1).remove(0) {
                for r in universal_residuals(&e.charts[0].metric, &f, &q).unwrap() {
                    assert!(r.rel_gap <= tolerance::UNIVERSAL, "{name}: {r:?}");
                }
            }
        }
    }

    #[test]
    fn rel_gap_definition() {
        let r = IdentityResidual::new("x", 3.0, -1.0, &p());
        assert_eq!(r.abs_gap, 4.0);
        assert_eq!(r.rel_gap, 1.0);
    }
}
