use cubiclv::bifurcation::{
    collision_check, curve_tol, point_at_abscissa, residual, sotomayor_saddle_node, sotomayor_transcritical,
    trace_curve, write_curves_csv, CurveKind, Verdict,
};
use cubiclv::equilibria::{find_equilibria, Label};
use cubiclv::fixtures::canonical_family;
use cubiclv::model::{Degeneracy, ReducedSystem};
use cubiclv::poly::CoefficientPoly;
use cubiclv::Error;

fn c(v: f64) -> CoefficientPoly {
    CoefficientPoly::constant(v, 2)
}

fn lin(c0: f64, c1: f64, c2: f64) -> CoefficientPoly {
    CoefficientPoly::linear(c0, c1, c2, 2)
}

/// delta(mu) = delta1 mu1 + delta2 mu2.
fn delta_zero(gamma: CoefficientPoly, delta1: f64, p: f64) -> ReducedSystem {
    ReducedSystem::new(c(1.0), gamma, lin(0.0, delta1, 1.0), c(0.0), c(0.0), c(0.0), c(0.0), c(p), c(0.0)).unwrap()
}

/// theta(mu) = theta1 mu1 + theta2 mu2.
fn theta_zero(gamma: CoefficientPoly, theta2: f64, n: f64) -> ReducedSystem {
    ReducedSystem::new(lin(0.0, 1.0, theta2), gamma, c(1.0), c(0.0), c(n), c(0.0), c(0.0), c(0.0), c(0.0)).unwrap()
}

fn within(got: f64, want: f64, frac: f64) -> bool {
    (got - want).abs() <= frac * want.abs()
}

const RADII: [f64; 3] = [1e-2, 1e-3, 1e-4];

#[test]
fn every_traced_sample_solves_its_equation() {
    for class in [Degeneracy::NonDegenerate, Degeneracy::DeltaZero, Degeneracy::ThetaZero] {
        for f in canonical_family(class) {
            for kind in CurveKind::all_for(class) {
                let curve = trace_curve(&f.system, kind, &RADII).unwrap();
                for s in &curve.samples {
                    assert!(s.residual.abs() < curve_tol(s.mu), "{} {kind} {:?}", f.name, s);
                    assert_eq!(s.residual, residual(&f.system, kind, s.mu));
                }
            }
        }
    }
}

#[test]
fn leading_coefficients_converge() {
    let sys = delta_zero(lin(1.0, 0.2, 0.5), 1.3, 0.8);
    for kind in [CurveKind::T3, CurveKind::T3plus, CurveKind::DBranchNeg, CurveKind::DBranchPos] {
        let err = |v: f64| {
            let s = point_at_abscissa(&sys, kind, v).unwrap();
            let k = cubiclv::bifurcation::predicted_leading(&sys, kind).unwrap();
            (s.mu.mu2 / (v * v) - k).abs()
        };
        let sign = if matches!(kind, CurveKind::T3 | CurveKind::DBranchNeg) { -1.0 } else { 1.0 };
        let (a, b) = (err(sign * 1e-2), err(sign * 1e-3));
        assert!(b <= 0.2 * a, "{kind}: {a} then {b}");
    }
}

#[test]
fn constraint_refusal() {
    let sys = delta_zero(lin(1.0, 0.0, 1.0), 1.0, 1.0);
    assert!(matches!(point_at_abscissa(&sys, CurveKind::T3, 1e-3), Err(Error::ConstraintViolation(_))));
    assert!(matches!(point_at_abscissa(&sys, CurveKind::T4, -1e-3), Err(Error::NotApplicable(_))));
}

#[test]
fn mirror_saddle_node() {
    let sys = theta_zero(c(1.0), 3.0, 1.0);
    let s = point_at_abscissa(&sys, CurveKind::DBranchPos, 0.001).unwrap();
    let rep = sotomayor_saddle_node(&sys, s.mu).unwrap();
    assert_eq!(rep.verdict, Verdict::SaddleNode);
    assert!(within(rep.scaled[0], 5e-4, 0.05), "{:?}", rep.scaled);
    assert!(within(rep.scaled[2], rep.predicted.c3.unwrap(), 0.05), "{:?}", rep);
}

#[test]
fn t4_transcritical() {
    let sys = theta_zero(lin(1.0, 1.0, 0.0), 3.0, 1.0);
    let s = point_at_abscissa(&sys, CurveKind::T4, -0.001).unwrap();
    let rep = sotomayor_transcritical(&sys, CurveKind::T4, s.mu).unwrap();
    assert_eq!(rep.verdict, Verdict::Transcritical);
    assert!(within(rep.scaled[1], -1e-3, 0.05), "{:?}", rep.scaled);
    assert!(rep.c1.abs() < 1e-9 * rep.c2.abs());
}

#[test]
fn saddle_node_everywhere_on_d() {
    for f in canonical_family(Degeneracy::DeltaZero).into_iter().chain(canonical_family(Degeneracy::ThetaZero)) {
        for kind in [CurveKind::DBranchNeg, CurveKind::DBranchPos] {
            let curve = trace_curve(&f.system, kind, &RADII[1..]).unwrap();
            for s in &curve.samples {
                let rep = sotomayor_saddle_node(&f.system, s.mu).unwrap();
                assert_eq!(rep.verdict, Verdict::SaddleNode, "{} {kind}", f.name);
            }
        }
    }
}

#[test]
fn t3_collisions_follow_the_sign() {
    // gamma delta1 - 2P < 0: E3 meets E21, the other axis point attracts.
    let a = delta_zero(lin(1.0, 0.0, 1.0), 1.0, 1.0);
    // gamma delta1 - 2P > 0: E3 meets E22, the other axis point repels.
    let b = delta_zero(lin(1.0, 0.0, 1.0), 3.0, 1.0);
    for (sys, pair, companion) in [(a, Label::E21, Label::E22), (b, Label::E22, Label::E21)] {
        let curve = trace_curve(&sys, CurveKind::T3, &[1e-3, 5e-4]).unwrap();
        assert!(!curve.samples.is_empty());
        for s in collision_check(&sys, &curve).unwrap() {
            assert!(s.passed, "{s:?}");
            assert!(s.pair.0 == pair || s.pair.1 == pair, "{s:?}");
            if let Some((l, k, _)) = s.companion {
                assert_eq!(l, companion);
                assert_eq!(k.is_attractor(), pair == Label::E21, "{s:?}");
            }
        }
    }
}

#[test]
fn t4_collisions_follow_the_sign() {
    for (theta2, pair) in [(1.0, Label::E11), (3.0, Label::E12)] {
        let sys = theta_zero(lin(1.0, 1.0, 0.0), theta2, 1.0);
        let curve = trace_curve(&sys, CurveKind::T4, &[1e-3, 5e-4]).unwrap();
        assert!(!curve.samples.is_empty());
        for s in collision_check(&sys, &curve).unwrap() {
            assert!(s.passed, "{s:?}");
            assert!(s.pair.0 == pair || s.pair.1 == pair, "{s:?}");
        }
    }
}

#[test]
fn t3_sits_under_d() {
    // The gap between the two parabolas is (delta1 gamma - 2P)^2 mu1^2 / (4 P gamma^2), so the order flips with P.
    for (delta1, p) in [(1.0, 1.0), (3.0, 1.0), (1.0, -1.0), (-2.0, 0.7), (2.5, -0.4)] {
        let sys = delta_zero(lin(1.0, 0.2, 0.3), delta1, p);
        for k in 1..=20 {
            let m1 = -1e-3 * k as f64 / 20.0;
            let t3 = point_at_abscissa(&sys, CurveKind::T3, m1).unwrap();
            let d = point_at_abscissa(&sys, CurveKind::DBranchNeg, m1).unwrap();
            assert_eq!(t3.mu.mu2 < d.mu.mu2, p > 0.0, "delta1={delta1} P={p}: {:?} vs {:?}", t3.mu, d.mu);
        }
    }
}

#[test]
fn h_avoids_the_interior_region_when_resonance_positive() {
    for f in canonical_family(Degeneracy::NonDegenerate) {
        let (theta, delta) = (f.system.theta.at_origin(), f.system.delta.at_origin());
        if theta * delta <= 1.0 {
            continue;
        }
        let curve = trace_curve(&f.system, CurveKind::H, &RADII).unwrap();
        for s in &curve.samples {
            let set = find_equilibria(&f.system, s.mu).unwrap();
            let e3 = set.get(Label::E3).unwrap();
            assert!(!(e3.proper && !e3.trivial), "{} {:?}", f.name, s.mu);
        }
    }
}

#[test]
fn curves_csv_layout() {
    let sys = delta_zero(lin(1.0, 0.0, 1.0), 1.0, 1.0);
    let curves = vec![trace_curve(&sys, CurveKind::DBranchNeg, &[1e-3]).unwrap()];
    let mut buf = Vec::new();
    write_curves_csv(&mut buf, &curves).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "kind,branch,mu1,mu2,residual");
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1].split(',').count(), 5);
    assert!(lines[1].starts_with("D-,mu1 < 0,"));
}
