use cubiclv::equilibria::find_equilibria;
use cubiclv::fixtures::{canonical_family, Fixture};
use cubiclv::model::{Degeneracy, ParamPoint};
use cubiclv::regions::{decompose, region_membership, select_case, verify_tables, DiagramInput};
use cubiclv::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn inputs(fx: &[Fixture]) -> Vec<DiagramInput<'_>> {
    fx.iter()
        .map(|f| DiagramInput { name: &f.name, system: &f.system, declared_case: Some(&f.case) })
        .collect()
}

fn check_family(family: Degeneracy, expected: usize) {
    let fx = canonical_family(family);
    let rep = verify_tables(family, &inputs(&fx), 1e-3);
    println!("{}", rep.render());
    assert!(rep.passed, "{}", rep.render());
    assert_eq!(rep.distinct_signatures, expected);
}

#[test]
fn nondegenerate_table() {
    check_family(Degeneracy::NonDegenerate, 30);
}

#[test]
fn delta_zero_table() {
    check_family(Degeneracy::DeltaZero, 20);
}

#[test]
fn theta_zero_table() {
    check_family(Degeneracy::ThetaZero, 20);
}

#[test]
fn declared_case_mismatch_fails() {
    let mut fx = canonical_family(Degeneracy::NonDegenerate);
    fx[0].case[0] = -fx[0].case[0];
    let rep = verify_tables(Degeneracy::NonDegenerate, &inputs(&fx), 1e-3);
    assert!(!rep.passed);
    assert!(!rep.diagrams[0].case_matches);
}

#[test]
fn unsupported_sign_pattern_is_flagged() {
    let mut fx = canonical_family(Degeneracy::DeltaZero).remove(0);
    fx.system.p = fx.system.p.scale(-1.0);
    let case = select_case(&fx.system).unwrap();
    assert!(!case.supported);
    assert_eq!(case.notes, vec!["table verification limited to P>0".to_string()]);
}

#[test]
fn sectors_are_constant_inside() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for family in [Degeneracy::NonDegenerate, Degeneracy::DeltaZero, Degeneracy::ThetaZero] {
        for f in canonical_family(family) {
            let r = 1e-3;
            for s in decompose(&f.system, r).unwrap() {
                let (lo, hi) = s.interval;
                let width = hi - lo;
                for _ in 0..5 {
                    let a = lo + width * rng.gen_range(0.05..0.95);
                    let mu = ParamPoint::polar(r * rng.gen_range(0.8..1.0), a);
                    // Parabolic boundaries move in angle with the radius; stay clear of them.
                    if let Ok(m) = region_membership(&f.system, mu) {
                        if m.sector_id == s.sector_id {
                            assert_eq!(m.signature, s.signature, "{} sector {}", f.name, s.sector_id);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn radius_stability() {
    for family in [Degeneracy::NonDegenerate, Degeneracy::DeltaZero, Degeneracy::ThetaZero] {
        for f in canonical_family(family) {
            let a: Vec<String> = decompose(&f.system, 1e-3).unwrap().into_iter().map(|s| s.signature).collect();
            let b: Vec<String> = decompose(&f.system, 1e-4).unwrap().into_iter().map(|s| s.signature).collect();
            assert_eq!(a, b, "{}", f.name);
        }
    }
}

#[test]
fn interior_saddle_when_determinant_sign_says_so() {
    for f in canonical_family(Degeneracy::NonDegenerate) {
        let q = f.system.theta.at_origin() * f.system.delta.at_origin() - 1.0;
        for s in decompose(&f.system, 1e-3).unwrap() {
            let set = find_equilibria(&f.system, s.representative).unwrap();
            if let Some(e3) = set.get(cubiclv::equilibria::Label::E3).filter(|e| e.proper) {
                if q < 0.0 {
                    assert_eq!(e3.kind.letter(), 's', "{}", f.name);
                } else {
                    assert_ne!(e3.kind.letter(), 's', "{}", f.name);
                }
            }
        }
    }
}

#[test]
fn truncation_keeps_signatures() {
    for f in canonical_family(Degeneracy::NonDegenerate) {
        let full: Vec<String> = decompose(&f.system, 1e-3).unwrap().into_iter().map(|s| s.signature).collect();
        let quad: Vec<String> =
            decompose(&f.system.quadratic_truncation(), 1e-3).unwrap().into_iter().map(|s| s.signature).collect();
        assert_eq!(full, quad, "{}", f.name);
    }
}

#[test]
fn origin_is_on_every_curve() {
    let f = &canonical_family(Degeneracy::NonDegenerate)[0];
    assert!(matches!(region_membership(&f.system, ParamPoint::new(0.0, 0.0)), Err(Error::OnCurve(_))));
}
