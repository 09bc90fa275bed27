use cubiclv::equilibria::{
    char_poly_identities, classify, find_equilibria, newton_interior, seed, Kind, Label, Note,
};
use cubiclv::model::{ParamPoint, ReducedSystem};
use cubiclv::poly::CoefficientPoly;
use proptest::prelude::*;

fn c(v: f64) -> CoefficientPoly {
    CoefficientPoly::constant(v, 2)
}

/// delta(mu) = delta1 mu1 + delta2 mu2, everything else constant.
fn delta_zero(theta: f64, gamma: f64, delta1: f64, delta2: f64, p: f64) -> ReducedSystem {
    ReducedSystem::new(
        c(theta),
        c(gamma),
        CoefficientPoly::linear(0.0, delta1, delta2, 2),
        c(0.0),
        c(0.0),
        c(0.0),
        c(0.0),
        c(p),
        c(0.0),
    )
    .unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn origin_only_at_zero_parameter() {
    let sys = ReducedSystem::constant(-2.0, 1.0, -1.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6).unwrap();
    let set = find_equilibria(&sys, ParamPoint::new(0.0, 0.0)).unwrap();
    assert_eq!(set.equilibria.len(), 1);
    let e = &set.equilibria[0];
    assert_eq!((e.label, e.xi, e.kind), (Label::E0, [0.0, 0.0], Kind::Degenerate));
}

#[test]
fn quadratic_lv_interior_point() {
    let sys = ReducedSystem::constant(-2.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
    let set = find_equilibria(&sys, ParamPoint::new(0.001, 0.001)).unwrap();
    let e3 = set.get(Label::E3).unwrap();
    assert!((e3.xi[0] - 0.002).abs() < 1e-18 && (e3.xi[1] - 0.003).abs() < 1e-18, "{:?}", e3.xi);
    assert!(e3.kind.is_attractor());
    assert!(e3.proper && !e3.trivial);
}

#[test]
fn resonant_linear_part_skips_interior() {
    let sys = ReducedSystem::constant(1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
    let set = find_equilibria(&sys, ParamPoint::new(-0.01, 0.005)).unwrap();
    let e1 = set.get(Label::E1).unwrap();
    assert!((e1.xi[0] - 0.01).abs() < 1e-16 && e1.proper);
    assert!(rel(e1.lambda(0), 0.01) < 1e-12);
    assert!(rel(e1.lambda(1), 0.015) < 1e-12);
    assert!(set.get(Label::E3).is_none());
    assert!(set.notes.iter().any(|n| matches!(n, Note::DegenerateCase(_))));
}

#[test]
fn delta_zero_axis_pair() {
    let sys = delta_zero(1.0, 1.0, 1.0, 0.0, 1.0);
    let mu = ParamPoint::new(-0.01, 0.000024);
    let set = find_equilibria(&sys, mu).unwrap();
    let (e21, e22) = (set.get(Label::E21).unwrap(), set.get(Label::E22).unwrap());
    assert!(rel(e21.xi[1], 0.006) < 1e-12 && rel(e22.xi[1], 0.004) < 1e-12);
    assert!(e21.proper && e22.proper);
    let disc: f64 = 1e-4 - 4.0 * 0.000024;
    assert!(rel(e21.lambda(0), e21.xi[1] * disc.sqrt()) < 1e-10);
    assert!(rel(e22.lambda(0), -e22.xi[1] * disc.sqrt()) < 1e-10);
}

#[test]
fn origin_eigenvalues_are_the_parameters() {
    let sys = ReducedSystem::constant(-2.0, 1.0, -1.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6).unwrap();
    let cl = classify(&sys, ParamPoint::new(0.01, -0.02), [0.0, 0.0]);
    assert_eq!(cl.eigenvalues[0].re, 0.01);
    assert_eq!(cl.eigenvalues[1].re, -0.02);
    assert_eq!(cl.kind, Kind::Saddle);
}

#[test]
fn interior_saddle_below_resonance() {
    let sys = ReducedSystem::constant(1.0, 1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
    // Leading order puts E3 at (1e-3, 2e-3) here.
    let mu = ParamPoint::new(-3e-3, -2e-3);
    let e3 = find_equilibria(&sys, mu).unwrap().get(Label::E3).cloned().unwrap();
    assert!(e3.proper, "{:?}", e3.xi);
    assert_eq!(e3.kind, Kind::Saddle);
}

#[test]
fn delta_zero_determinant_sign() {
    let sys = ReducedSystem::new(
        c(1.0),
        CoefficientPoly::linear(1.0, 0.2, 0.5, 2),
        CoefficientPoly::linear(0.0, 1.0, 0.7, 2),
        c(0.1),
        c(0.1),
        c(0.1),
        c(0.1),
        c(1.0),
        c(0.1),
    )
    .unwrap();
    for k in 0..24 {
        let mu = ParamPoint::polar(1e-3, (k as f64 + 0.5) * std::f64::consts::TAU / 24.0);
        let set = find_equilibria(&sys, mu).unwrap();
        let Some(e3) = set.get(Label::E3) else { continue };
        if e3.trivial {
            continue;
        }
        let det = classify(&sys, mu, e3.xi).det;
        assert_eq!(det.signum(), -(e3.xi[0] * e3.xi[1]).signum(), "{mu:?}");
    }
}

#[test]
fn interior_identities_without_higher_terms() {
    let sys = ReducedSystem::constant(-2.0, 1.3, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
    let mu = ParamPoint::new(0.004, 0.002);
    let e3 = find_equilibria(&sys, mu).unwrap().get(Label::E3).cloned().unwrap();
    let id = char_poly_identities(&sys, mu, &e3);
    let [x, y] = e3.xi;
    assert!(rel(id.p_formula, 0.5 * (-2.0 * x - y)) < 1e-12);
    assert!(rel(id.det_l_formula, x * y) < 1e-12);
    assert!(rel(id.trace_half_direct, id.p_formula) < 1e-10);
    assert!(rel(id.det_direct, id.det_l_formula) < 1e-10);
}

#[test]
fn axis_eigenvalue_expansions_scale_cubically() {
    // E1 sits at the small root of mu1 + theta x + N x^2 = 0; expanding gives these two terms.
    let (theta, gamma, n, r) = (-2.0, 1.5, 0.7, -0.4);
    let sys = ReducedSystem::constant(theta, gamma, -1.0, 0.3, n, 0.2, 0.1, 0.6, r).unwrap();
    let err = |m: f64| {
        let mu = ParamPoint::new(m, 0.5 * m);
        let e1 = find_equilibria(&sys, mu).unwrap().get(Label::E1).cloned().unwrap();
        let l1 = -m + n * m * m / (theta * theta);
        let l2 = mu.mu2 - m / (theta * gamma) + r * m * m / (theta * theta) - n * m * m / (theta.powi(3) * gamma);
        ((e1.lambda(0) - l1).abs(), (e1.lambda(1) - l2).abs())
    };
    let (a, b) = (err(1e-2), err(1e-3));
    let slope = |hi: f64, lo: f64| (hi / lo).log10();
    assert!((slope(a.0, b.0) - 3.0).abs() < 0.3, "{a:?} {b:?}");
    assert!((slope(a.1, b.1) - 3.0).abs() < 0.3, "{a:?} {b:?}");
}

fn nondegenerate() -> impl Strategy<Value = ReducedSystem> {
    (prop::array::uniform9(-1.0..1.0f64), 0.4..2.5f64, 0.4..2.5f64, any::<(bool, bool)>())
        .prop_filter_map("resonant", |(h, a, b, (sa, sb))| {
            let theta = if sa { a } else { -a };
            let delta = if sb { b } else { -b };
            if (theta * delta - 1.0).abs() < 0.5 {
                return None;
            }
            ReducedSystem::constant(theta, 0.5 + h[0].abs(), delta, h[1], h[2], h[3], h[4], h[5], h[6]).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn interior_seed_converges_fast(sys in nondegenerate(), angle in 0.0..std::f64::consts::TAU) {
        let mut fitted = Vec::new();
        for r in [1e-2, 1e-3, 1e-4] {
            let mu = ParamPoint::polar(r, angle);
            let s = seed(&sys, mu, Label::E3).unwrap();
            let out = newton_interior(&sys, mu, s);
            prop_assert!(out.converged);
            prop_assert!(out.iterations <= 8, "{} iterations", out.iterations);
            fitted.push((out.xi[0] - s[0]).hypot(out.xi[1] - s[1]) / (r * r));
        }
        prop_assert!(fitted.iter().all(|c| c.is_finite()));
        // The seed error constant settles once |mu| is small.
        prop_assert!(fitted[2] <= 1.5 * fitted[1] + 1e-6 && fitted[1] <= 1.5 * fitted[2] + 1e-6, "{:?}", fitted);
    }

    #[test]
    fn axis_points_near_their_seeds(sys in nondegenerate(), exp in 2..5i32, angle in 0.0..std::f64::consts::TAU) {
        let mu = ParamPoint::polar(10f64.powi(-exp), angle);
        let set = find_equilibria(&sys, mu).unwrap();
        for label in [Label::E1, Label::E2] {
            let e = set.get(label).unwrap();
            let s = seed(&sys, mu, label).unwrap();
            prop_assert!((e.xi[0] - s[0]).hypot(e.xi[1] - s[1]) <= 50.0 * mu.norm().powi(2));
        }
    }

    #[test]
    fn identities_at_refined_interior(sys in nondegenerate(), angle in 0.0..std::f64::consts::TAU) {
        let mu = ParamPoint::polar(1e-3, angle);
        let set = find_equilibria(&sys, mu).unwrap();
        let e3 = set.get(Label::E3).unwrap();
        let id = char_poly_identities(&sys, mu, e3);
        prop_assert!((id.p_formula - id.trace_half_direct).abs() <= 1e-10 * (1e-6 + id.trace_half_direct.abs()));
        prop_assert!((id.det_l_formula - id.det_direct).abs() <= 1e-10 * (1e-12 + id.det_direct.abs()));
    }

    #[test]
    fn no_centre_at_the_interior(sys in nondegenerate(), t in 0.05..1.5f64) {
        let theta = sys.theta.at_origin();
        let delta = sys.delta.at_origin();
        let gamma = sys.gamma.at_origin();
        // Invert the linear part at a positive target so the interior point is proper.
        let (a, b) = (1e-3 * t.cos(), 1e-3 * t.sin());
        let mu = ParamPoint::new(-theta * a - gamma * b, -a / gamma - delta * b);
        let set = find_equilibria(&sys, mu).unwrap();
        let e3 = set.get(Label::E3).unwrap();
        prop_assert!(e3.proper && !e3.trivial);
        let cl = classify(&sys, mu, e3.xi);
        if theta * delta > 1.0 {
            prop_assert!(cl.trace_half != 0.0);
            prop_assert_eq!(cl.trace_half.signum(), theta.signum());
        } else {
            prop_assert!(e3.eigenvalues.iter().all(|l| l.im == 0.0));
        }
    }
}
