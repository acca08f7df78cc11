use proptest::prelude::*;

use rys_lab_core::catalog::{make_perturbed_flat, random_polynomial};
use rys_lab_core::curvature::{laplacian, ricci_operator, LocalGeometry};
use rys_lab_core::diff::{partial_derivative_with, Backend};
use rys_lab_core::report::{format_num, Num};
use rys_lab_core::soliton::{residual, SolitonInstance, SolitonKind, SolitonParams};
use rys_lab_core::solver::{
    radial_jacobian, radial_residual, solve_radial, uniform_grid, Background, RadialProfile, SolveOptions,
};
use rys_lab_core::{ChartDomain, ChartPoint, MetricField, ScalarField};

fn point3() -> impl Strategy<Value = ChartPoint> {
    prop::collection::vec(-0.8..0.8f64, 3).prop_map(ChartPoint::new)
}

fn bumpy(seed: u64) -> MetricField {
    make_perturbed_flat(1e-2, seed).unwrap().charts[0].metric.clone()
}

fn smooth_field() -> ScalarField {
    ScalarField::new(3, |x| x[0].sin() * x[1].exp() + x[2].square() * x[0].cos())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mixed_partials_commute(p in point3(), seed in 0u64..1000, i in 0usize..3, j in 0usize..3, k in 0usize..3) {
        let f = random_polynomial(3, 4, seed).combine(1.0, &smooth_field(), 1.0);
        let jet = f.jet_at(&p, 3).unwrap();
        let a = jet.partial(&[i, j, k]).unwrap();
        for perm in [[j, i, k], [k, j, i], [i, k, j]] {
            let b = jet.partial(&perm).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn partials_are_linear(p in point3(), seed in 0u64..1000, a in -3.0..3.0f64, b in -3.0..3.0f64,
                           idx in prop::collection::vec(0usize..3, 1..=4)) {
        let domain = ChartDomain::cube("box", 3, 1.0).unwrap();
        let f = random_polynomial(3, 4, seed);
        let h = smooth_field();
        let d = |field: &ScalarField| partial_derivative_with(Backend::Jet, &domain, field, &p, &idx).unwrap();
        let lhs = d(&f.combine(a, &h, b));
        let rhs = a * d(&f) + b * d(&h);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn laplacian_is_linear(p in point3(), seed in 0u64..1000, a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let g = bumpy(seed % 7 + 1);
        let f = random_polynomial(3, 3, seed);
        let h = smooth_field();
        let lhs = laplacian(&g, &f.combine(a, &h, b), &p).unwrap();
        let rhs = a * laplacian(&g, &f, &p).unwrap() + b * laplacian(&g, &h, &p).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn jet_and_richardson_agree(p in prop::collection::vec(-0.5..0.5f64, 3).prop_map(ChartPoint::new),
                                idx in prop::collection::vec(0usize..3, 1..=3)) {
        let domain = ChartDomain::cube("box", 3, 1.0).unwrap();
        let f = smooth_field();
        let exact = partial_derivative_with(Backend::Jet, &domain, &f, &p, &idx).unwrap();
        let fd = partial_derivative_with(Backend::Richardson, &domain, &f, &p, &idx).unwrap();
        prop_assert!((exact - fd).abs() <= 1e-7 * exact.abs().max(1.0), "{exact} vs {fd}");
    }

    #[test]
    fn ricci_traces_to_scalar(p in point3(), seed in 1u64..50) {
        let g = bumpy(seed);
        let geom = LocalGeometry::new(&g, &p, 2).unwrap();
        let by_inverse = (geom.inverse_metric() * geom.ricci().to_matrix()).trace();
        let by_operator = ricci_operator(&g, &p).unwrap().trace();
        let r = geom.scalar();
        prop_assert!((by_inverse - r).abs() <= 1e-12 * (1.0 + r.abs()));
        prop_assert!((by_operator - r).abs() <= 1e-12 * (1.0 + r.abs()));
    }

    #[test]
    fn mu_enters_additively(p in point3(), seed in 0u64..1000, mu in -2.0..2.0f64, lambda in -2.0..2.0f64) {
        let g = bumpy(seed % 5 + 1);
        let f = random_polynomial(3, 3, seed);
        let make = |m: f64| SolitonInstance::new(
            SolitonParams::new(1.0, 0.5, lambda, m).unwrap(),
            g.clone(),
            SolitonKind::GenGrys { potential: f.clone() },
        );
        let with = residual(&make(mu), &p).unwrap().to_matrix();
        let without = residual(&make(0.0), &p).unwrap().to_matrix();
        let df = f.jet_at(&p, 1).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = mu * df.partial(&[i]).unwrap() * df.partial(&[j]).unwrap();
                let got = with[(i, j)] - without[(i, j)];
                prop_assert!((got - expected).abs() <= 1e-10 * (1.0 + expected.abs()));
            }
        }
    }

    #[test]
    fn potential_shift_is_invisible(p in point3(), seed in 0u64..1000, c in -100.0..100.0f64) {
        let g = bumpy(seed % 5 + 1);
        let f = random_polynomial(3, 3, seed);
        let shifted = f.combine(1.0, &ScalarField::constant(3, c), 1.0);
        let inst = |pot: &ScalarField| SolitonInstance::new(
            SolitonParams::new(1.0, 0.0, 1.0, 0.0).unwrap(),
            g.clone(),
            SolitonKind::Grys { potential: pot.clone() },
        );
        let a = residual(&inst(&f), &p).unwrap().to_matrix();
        let b = residual(&inst(&shifted), &p).unwrap().to_matrix();
        prop_assert!((a - b).amax() <= 1e-12);
    }

    #[test]
    fn number_format_round_trips(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(format_num(v).parse::<f64>().unwrap(), v);
        let json = serde_json::to_string(&Num(v)).unwrap();
        prop_assert_eq!(json.parse::<f64>().unwrap(), v);
    }
}

fn background() -> impl Strategy<Value = Background> {
    prop_oneof![
        Just(Background::Flat),
        (1.0..3.0f64).prop_map(|radius| Background::Sphere { radius }),
        (0.5..3.0f64).prop_map(|radius| Background::Hyperbolic { radius }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn jacobian_matches_differences(bg in background(), lambda in -3.0..3.0f64, coeffs in prop::collection::vec(-1.0..1.0f64, 3)) {
        let grid = uniform_grid(24, 1.5).unwrap();
        let values: Vec<f64> = grid.iter().map(|r| coeffs[0] * r + coeffs[1] * r * r + coeffs[2] * (2.0 * r).sin()).collect();
        let params = SolitonParams::new(1.0, 0.3, lambda, 0.0).unwrap();
        let prof = RadialProfile::new(grid, values.clone(), params, bg, 3).unwrap();
        let jac = radial_jacobian(&prof);
        let h = 1e-6;
        for col in 0..jac.ncols() {
            let mut plus = values.clone();
            let mut minus = values.clone();
            plus[col + 1] += h;
            minus[col + 1] -= h;
            let rp = radial_residual(&prof.with_values(plus).unwrap()).unwrap();
            let rm = radial_residual(&prof.with_values(minus).unwrap()).unwrap();
            for row in 0..jac.nrows() {
                let fd = (rp[row] - rm[row]) / (2.0 * h);
                prop_assert!((fd - jac[(row, col)]).abs() <= 1e-6 * (1.0 + jac[(row, col)].abs()));
            }
        }
    }

    #[test]
    fn optimizer_never_increases_objective(bg in background(), lambda in -3.0..3.0f64, start in prop::collection::vec(-1.0..1.0f64, 2)) {
        let grid = uniform_grid(32, 1.2).unwrap();
        let values: Vec<f64> = grid.iter().map(|r| start[0] * r * r + start[1] * r).collect();
        // Curved backgrounds only carry radial solutions when lambda balances the curvature.
        let lambda = match bg {
            Background::Flat => lambda,
            _ => SolitonParams::einstein_balanced_lambda(1.0, 0.0, 3, 2.0 * bg.kappa()),
        };
        let params = SolitonParams::new(1.0, 0.0, lambda, 0.0).unwrap();
        let init = RadialProfile::new(grid, values, params, bg, 3).unwrap();
        let out = solve_radial(&init, &SolveOptions::default()).unwrap();
        prop_assert!(out.objective.len() >= 2 || out.iterations == 0);
        for w in out.objective.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn solution_ignores_constant_in_start(shift in -50.0..50.0f64, lambda in 0.5..3.0f64) {
        let grid = uniform_grid(48, 1.5).unwrap();
        let params = SolitonParams::new(1.0, 0.0, lambda, 0.0).unwrap();
        let a = RadialProfile::new(grid.clone(), vec![0.0; 48], params, Background::Flat, 3).unwrap();
        let b = a.with_values(vec![shift; 48]).unwrap();
        let sa = solve_radial(&a, &SolveOptions::default()).unwrap().profile.values;
        let sb = solve_radial(&b, &SolveOptions::default()).unwrap().profile.values;
        for (x, y) in sa.iter().zip(&sb) {
            prop_assert!((x - y).abs() <= 1e-8);
        }
    }
}
