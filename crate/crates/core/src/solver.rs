//! Rotationally symmetric gradient solitons `f(r)` on space forms.
//!
//! The background is `dr^2 + h(r)^2 g_{S^{n-1}}` with constant sectional
//! curvature `kappa`. For a radial potential the gradient soliton equation
//! has two independent blocks, written in an orthonormal frame:
//!
//! ```text
//! rr:  alpha (n-1) kappa + f''          + lambda - beta n (n-1) kappa / 2
//! tt:  alpha (n-1) kappa + f' h' / h    + lambda - beta n (n-1) kappa / 2
//! ```
//!
//! Derivatives are fourth-order finite differences on a uniform grid that
//! starts at `ORIGIN_OFFSET`. Smoothness at the origin is imposed through
//! an extra row `f'(delta) - delta f''(delta)`, which vanishes to third
//! order for every even profile.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::soliton::SolitonParams;

pub const ORIGIN_OFFSET: f64 = 1e-3;
/// Fewest grid intervals accepted.
pub const MIN_INTERVALS: usize = 16;
pub const MAX_ITERATIONS: usize = 500;
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
/// Damping beyond which the optimizer gives up.
const MAX_DAMPING: f64 = 1e20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Background {
    Flat,
    Sphere { radius: f64 },
    Hyperbolic { radius: f64 },
}

impl Background {
    pub fn name(&self) -> &'static str {
        match self {
            Background::Flat => "flat",
            Background::Sphere { .. } => "sphere",
            Background::Hyperbolic { .. } => "hyperbolic",
        }
    }

    /// Sectional curvature.
    pub fn kappa(&self) -> f64 {
        match *self {
            Background::Flat => 0.0,
            Background::Sphere { radius } => 1.0 / (radius * radius),
            Background::Hyperbolic { radius } => -1.0 / (radius * radius),
        }
    }

    /// `h'(r) / h(r)`.
    pub fn warp_ratio(&self, r: f64) -> f64 {
        match *self {
            Background::Flat => 1.0 / r,
            Background::Sphere { radius } => 1.0 / ((r / radius).tan() * radius),
            Background::Hyperbolic { radius } => 1.0 / ((r / radius).tanh() * radius),
        }
    }

    fn validate(&self, r_max: f64) -> Result<()> {
        match *self {
            Background::Flat => Ok(()),
            Background::Sphere { radius } | Background::Hyperbolic { radius }
                if !(radius.is_finite() && radius > 0.0) =>
            {
                Err(LabError::InvalidParameter(format!(
                    "background radius must be positive, got {radius}"
                )))
            }
            Background::Sphere { radius } if r_max >= std::f64::consts::PI * radius => {
                Err(LabError::InvalidParameter(format!(
                    "grid end {r_max} reaches the antipode of a sphere of radius {radius}"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Uniform grid `r_k = delta + k (r_max - delta) / m`, `k = 0..=m`.
pub fn uniform_grid(nodes: usize, r_max: f64) -> Result<Vec<f64>> {
    if nodes < MIN_INTERVALS + 1 {
        return Err(LabError::GridTooCoarse {
            nodes,
            min: MIN_INTERVALS + 1,
        });
    }
    if !(r_max.is_finite() && r_max > ORIGIN_OFFSET) {
        return Err(LabError::InvalidParameter(format!("grid end {r_max} is not past the origin offset")));
    }
    let m = nodes - 1;
    let h = (r_max - ORIGIN_OFFSET) / m as f64;
    Ok((0..=m).map(|k| ORIGIN_OFFSET + k as f64 * h).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialProfile {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub params: SolitonParams,
    pub background: Background,
    pub dim: usize,
}

impl RadialProfile {
    pub fn new(
        grid: Vec<f64>,
        values: Vec<f64>,
        params: SolitonParams,
        background: Background,
        dim: usize,
    ) -> Result<Self> {
        if grid.len() < MIN_INTERVALS + 1 {
            return Err(LabError::GridTooCoarse {
                nodes: grid.len(),
                min: MIN_INTERVALS + 1,
            });
        }
        if values.len() != grid.len() {
            return Err(LabError::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if dim < 2 {
            return Err(LabError::InvalidParameter(format!("dimension {dim} < 2")));
        }
        if grid[0] <= 0.0 || grid.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return Err(LabError::InvalidParameter(
                "grid must be positive and strictly increasing".into(),
            ));
        }
        if values.iter().chain(&grid).any(|v| !v.is_finite()) {
            return Err(LabError::InvalidParameter("profile has non-finite entries".into()));
        }
        background.validate(*grid.last().expect("nonempty"))?;
        Ok(Self {
            grid,
            values,
            params,
            background,
            dim,
        })
    }

    /// Same grid and parameters, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), values, self.params, self.background, self.dim)
    }

    /// `max(|rr|, |tt|)` per node.
    pub fn node_residuals(&self) -> Result<Vec<f64>> {
        let r = radial_residual(self)?;
        Ok(r[..2 * self.grid.len()]
            .chunks(2)
            .map(|c| c[0].abs().max(c[1].abs()))
            .collect())
    }
}

/// Weights for derivatives `0..=order` at `x0` from the given nodes.
pub fn fornberg_weights(x0: f64, xs: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Sparse rows `(start, weights)` of the first and second derivative operators.
struct Stencils {
    first: Vec<(usize, Vec<f64>)>,
    second: Vec<(usize, Vec<f64>)>,
}

impl Stencils {
    fn new(grid: &[f64]) -> Self {
        let len = grid.len();
        let build = |width: usize, d: usize, k: usize| {
            let start = k.saturating_sub(2).min(len - width);
            let w = fornberg_weights(grid[k], &grid[start..start + width], d);
            (start, w[d].clone())
        };
        let first = (0..len).map(|k| build(5, 1, k)).collect();
        // one-sided second derivatives need a sixth point for fourth order
        let second = (0..len)
            .map(|k| {
                if k >= 2 && k + 2 < len {
                    build(5, 2, k)
                } else {
                    build(6, 2, k)
                }
            })
            .collect();
        Self { first, second }
    }
}

/// Residual rows `[rr_0, tt_0, rr_1, tt_1, ..., regularity]`.
pub fn radial_residual(profile: &RadialProfile) -> Result<Vec<f64>> {
    let (a, b) = residual_system(profile);
    let f = DVector::from_column_slice(&profile.values);
    Ok((a * f + b).iter().copied().collect())
}

/// The residual is affine in the values: `A f + b`.
fn residual_system(profile: &RadialProfile) -> (DMatrix<f64>, DVector<f64>) {
    let grid = &profile.grid;
    let len = grid.len();
    let n = profile.dim as f64;
    let SolitonParams {
        alpha, beta, lambda, ..
    } = profile.params;
    let kappa = profile.background.kappa();
    let constant = alpha * (n - 1.0) * kappa + lambda - beta * n * (n - 1.0) * kappa / 2.0;
    let st = Stencils::new(grid);
    let rows = 2 * len + 1;
    let mut a = DMatrix::zeros(rows, len);
    let mut b = DVector::from_element(rows, constant);
    for k in 0..len {
        let (s2, w2) = &st.second[k];
        for (j, w) in w2.iter().enumerate() {
            a[(2 * k, s2 + j)] += w;
        }
        let ratio = profile.background.warp_ratio(grid[k]);
        let (s1, w1) = &st.first[k];
        for (j, w) in w1.iter().enumerate() {
            a[(2 * k + 1, s1 + j)] += ratio * w;
        }
    }
    let delta = grid[0];
    let (s1, w1) = &st.first[0];
    let (s2, w2) = &st.second[0];
    for (j, w) in w1.iter().enumerate() {
        a[(2 * len, s1 + j)] += w;
    }
    for (j, w) in w2.iter().enumerate() {
        a[(2 * len, s2 + j)] -= delta * w;
    }
    b[2 * len] = 0.0;
    (a, b)
}

/// Jacobian of the residual with respect to `f_1..f_m` (the gauge pins `f_0 = 0`).
pub fn radial_jacobian(profile: &RadialProfile) -> DMatrix<f64> {
    let (a, _) = residual_system(profile);
    a.columns(1, a.ncols() - 1).into_owned()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ansatz {
    /// Every value except the pinned `f(r_0)` is free.
    Free,
    /// `f` held constant; no free parameters remain after gauge fixing.
    Constant,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub ansatz: Ansatz,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iterations: MAX_ITERATIONS,
            tolerance: RESIDUAL_TOLERANCE,
            ansatz: Ansatz::Free,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOutcome {
    pub profile: RadialProfile,
    pub iterations: usize,
    pub residual_inf: f64,
    /// `||r||^2 / 2` after each accepted step, starting with the initial value.
    pub objective: Vec<f64>,
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Levenberg-Marquardt on `||radial_residual||^2 / 2` with `f(r_0) = 0`.
pub fn solve_radial(init: &RadialProfile, options: &SolveOptions) -> Result<SolveOutcome> {
    let (a, b) = residual_system(init);
    let shift = init.values[0];
    let free = match options.ansatz {
        Ansatz::Free => init.values.len() - 1,
        Ansatz::Constant => 0,
    };
    let jac = a.columns(1, free).into_owned();
    let residual_of = |x: &DVector<f64>| -> DVector<f64> {
        if free == 0 {
            b.clone()
        } else {
            &jac * x + &b
        }
    };
    let mut x = match options.ansatz {
        Ansatz::Free => DVector::from_iterator(free, init.values[1..].iter().map(|v| v - shift)),
        Ansatz::Constant => DVector::zeros(0),
    };
    let mut r = residual_of(&x);
    let mut obj = 0.5 * r.norm_squared();
    let mut objective = vec![obj];
    let finish = |x: &DVector<f64>, r: &DVector<f64>, iterations, objective| -> Result<SolveOutcome> {
        let mut values = vec![0.0; init.values.len()];
        for (k, v) in x.iter().enumerate() {
            values[k + 1] = *v;
        }
        Ok(SolveOutcome {
            profile: init.with_values(values)?,
            iterations,
            residual_inf: inf_norm(r),
            objective,
        })
    };

    let jtj = jac.transpose() * &jac;
    let scale = DVector::from_iterator(free, (0..free).map(|i| jtj[(i, i)].max(f64::MIN_POSITIVE).sqrt()));
    let mut damping: f64 = 1e-3;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        if inf_norm(&r) <= options.tolerance {
            return finish(&x, &r, iterations, objective);
        }
        if free == 0 {
            break;
        }
        iterations += 1;
        // min ||J d + r||^2 + damping ||D d||^2 as one stacked least-squares problem
        let mut stacked = DMatrix::zeros(jac.nrows() + free, free);
        stacked.rows_mut(0, jac.nrows()).copy_from(&jac);
        for i in 0..free {
            stacked[(jac.nrows() + i, i)] = damping.sqrt() * scale[i];
        }
        let mut rhs = DVector::zeros(jac.nrows() + free);
        rhs.rows_mut(0, jac.nrows()).copy_from(&(-&r));
        let step = stacked
            .svd(true, true)
            .solve(&rhs, 0.0)
            .map_err(|e| LabError::InvalidParameter(e.to_string()))?;
        let trial = &x + &step;
        let r_trial = residual_of(&trial);
        let obj_trial = 0.5 * r_trial.norm_squared();
        if obj_trial < obj {
            x = trial;
            r = r_trial;
            obj = obj_trial;
            objective.push(obj);
            damping = (damping / 3.0).max(1e-15);
        } else {
            damping *= 4.0;
            if damping > MAX_DAMPING {
                break;
            }
        }
    }
    if inf_norm(&r) <= options.tolerance {
        return finish(&x, &r, iterations, objective);
    }
    Err(LabError::NoConvergence {
        residual: inf_norm(&r),
        iterations,
    })
}
