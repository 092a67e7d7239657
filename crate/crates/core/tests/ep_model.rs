use msgr::catalog::{builtin, parse_metric_file, MetricSpec, BUILTIN_NAMES};
use msgr::eh;
use msgr::ep;
use msgr::fieldspace::ep as coords;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sample(spec: &MetricSpec, rng: &mut ChaCha8Rng) -> [f64; 4] {
    std::array::from_fn(|i| {
        let (lo, hi) = spec.domain[i];
        rng.gen_range(lo..=hi)
    })
}

fn max_abs<'a>(it: impl IntoIterator<Item = &'a f64>) -> f64 {
    it.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

const A: [f64; 4] = [0.3, -0.1, 0.2, 0.05];
const DA: [[f64; 4]; 4] = [[0.1, 0.0, 0.2, 0.0], [0.0, -0.3, 0.0, 0.1], [0.0, 0.0, 0.0, 0.0], [0.05, 0.0, 0.0, 0.2]];

#[test]
fn momenta_match_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in BUILTIN_NAMES {
        let spec = builtin(name, &[]).unwrap();
        for _ in 0..3 {
            let p = spec.ep_point_at(sample(&spec, &mut rng)).unwrap();
            let m = ep::momenta_ep(&p).unwrap();
            for (a, b) in m.lmom.iter().zip(&m.lmom_closed) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{name}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn levi_civita_sections_satisfy_geometric_constraints() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for name in BUILTIN_NAMES {
        let spec = builtin(name, &[]).unwrap();
        for _ in 0..3 {
            let x = sample(&spec, &mut rng);
            let p = spec.ep_point_at(x).unwrap();
            let q = spec.eh_point_at(x).unwrap();
            let v = ep::constraints_ep(&p);
            assert!(max_abs(v.premetric.iter().flatten()) < 1e-10, "{name}");
            assert!(max_abs(&v.torsion) < 1e-12, "{name}");
            assert!(max_abs(v.torsion_deriv.iter().flatten()) < 1e-12, "{name}");
            assert!(max_abs(v.integrability.iter().flatten()) < 1e-10, "{name}");
            let (lep, leh) = (ep::lagrangian_ep(&p), eh::lagrangian_eh(&q));
            assert!((lep - leh).abs() <= 1e-10 * (1.0 + leh.abs()), "{name}: {lep} vs {leh}");
            // ∂L_EP/∂g with the connection held fixed is the EH constraint
            let l = eh::constraint_einstein(&q);
            for (c, l) in v.c0.iter().zip(&l) {
                assert!((c + l).abs() < 1e-10, "{name}: {c} vs {l}");
            }
        }
    }
}

#[test]
fn vacuum_sections_solve_the_field_equation() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for name in ["minkowski", "schwarzschild", "kasner", "ppwave"] {
        let spec = builtin(name, &[]).unwrap();
        for _ in 0..2 {
            let p = spec.ep_point_at(sample(&spec, &mut rng)).unwrap();
            assert!(max_abs(&ep::constraint_c0(&p)) < 1e-8, "{name}");
            let r = ep::verify_field_equation_ep(&p).unwrap();
            assert!(r < 1e-8, "{name}: {r}");
        }
    }
}

#[test]
fn flrw_residual_matches_c0() {
    let spec = builtin("flrw", &[]).unwrap();
    let p = spec.ep_point_at([0.4, 0.2, 0.5, 0.7]).unwrap();
    let c0 = ep::constraint_c0(&p);
    assert!(max_abs(&c0) > 1e-3);
    let cv = ep::field_equation_covector_ep(&p).unwrap();
    for (q, c) in c0.iter().enumerate() {
        assert!((cv[coords::g(q)] - c).abs() < 1e-8, "{q}");
    }
    assert!(max_abs(&cv[coords::GAMMA..]) < 1e-8);
    let dense = ep::field_equation_covector_ep_dense(&p).unwrap();
    for (a, b) in cv.iter().zip(&dense) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn field_equation_needs_extension() {
    let spec = builtin("schwarzschild", &[]).unwrap();
    let p = spec.ep_point_at([0.0, 4.0, 1.0, 0.0]).unwrap().with_extension(None).unwrap();
    assert!(ep::verify_field_equation_ep(&p).is_err());
}

#[test]
fn projective_shift_preserves_constraint_zero_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for name in BUILTIN_NAMES {
        let spec = builtin(name, &[]).unwrap();
        let p = spec.ep_point_at(sample(&spec, &mut rng)).unwrap();
        assert_eq!(ep::projective_shift(&p, [0.0; 4], [[0.0; 4]; 4]).unwrap(), p);
        let s = ep::projective_shift(&p, A, DA).unwrap();
        let v = ep::constraints_ep(&s);
        assert!(max_abs(v.premetric.iter().flatten()) < 1e-8, "{name}");
        assert!(max_abs(&v.torsion) < 1e-8, "{name}");
        assert!(max_abs(v.torsion_deriv.iter().flatten()) < 1e-8, "{name}");
        eprintln!(
            "{name}: integrability after shift {:e}, L_EP change {:e}",
            max_abs(v.integrability.iter().flatten()),
            ep::lagrangian_ep(&s) - ep::lagrangian_ep(&p)
        );
    }
}

#[test]
fn projectability() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for name in BUILTIN_NAMES {
        let spec = builtin(name, &[]).unwrap();
        let p = spec.ep_point_at(sample(&spec, &mut rng)).unwrap();
        let d = ep::projectability_check_ep(&p, 5, 7).unwrap();
        assert!(d.max_invariant() < 1e-10, "{name}: {d:?}");
        assert!(d.h_dgamma_only < 1e-12, "{name}: {d:?}");
        assert!(d.lagrangian > 1e-6, "{name}: control did not trigger");
    }
}

#[test]
fn torsionful_connection_is_detected() {
    let text = "[metric]\nname = twisted\ng 0 0 = -1\ng 1 1 = 1\ng 2 2 = 1\ng 3 3 = 1\n\
                [domain]\nx0 = -1..1\n[connection]\nGamma 1 2 3 = 0.5*x0\n";
    let spec = parse_metric_file(text).unwrap();
    let p = spec.ep_point_at([0.5, 0.0, 0.0, 0.0]).unwrap();
    let v = ep::constraints_ep(&p);
    assert!(max_abs(&v.torsion) > 0.2);
    assert!(max_abs(v.torsion_deriv.iter().flatten()) > 0.4);
    assert!(max_abs(v.premetric.iter().flatten()) > 0.2);
}
