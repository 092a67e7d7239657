use std::time::Instant;

use msgr::catalog::{builtin, MetricSpec, Vacuum};
use msgr::eh;
use msgr::fieldspace::eh as coords;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sample(spec: &MetricSpec, rng: &mut ChaCha8Rng) -> [f64; 4] {
    std::array::from_fn(|i| {
        let (lo, hi) = spec.domain[i];
        rng.gen_range(lo..=hi)
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

#[test]
fn momenta_and_hamiltonian_routes_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for name in msgr::catalog::BUILTIN_NAMES {
        let spec = builtin(name, &[]).unwrap();
        for _ in 0..5 {
            let p = spec.eh_point_at(sample(&spec, &mut rng)).unwrap();
            let m = eh::momenta_and_hamiltonian(&p).unwrap();
            for (a, b) in m.l2_ad.iter().flatten().zip(m.l2_closed.iter().flatten()) {
                assert!(rel(*a, *b) < 1e-10, "{name}: {a} vs {b}");
            }
            assert!(rel(m.h_sum, m.h_closed) < 1e-10, "{name}: {} vs {}", m.h_sum, m.h_closed);
        }
    }
}

#[test]
fn vacuum_metrics_solve_the_field_equation() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for name in ["minkowski", "schwarzschild", "kasner", "ppwave"] {
        let spec = builtin(name, &[]).unwrap();
        assert_eq!(spec.vacuum, Vacuum::Yes);
        for _ in 0..3 {
            let p = spec.eh_point_at(sample(&spec, &mut rng)).unwrap();
            let l = eh::constraint_einstein(&p);
            assert!(l.iter().all(|v| v.abs() < 1e-8), "{name}: {l:?}");
            let dl = eh::constraint_einstein_derivative(&p).unwrap();
            assert!(dl.iter().flatten().all(|v| v.abs() < 1e-8), "{name}: {dl:?}");
            let r = eh::verify_field_equation(&p).unwrap();
            assert!(r < 1e-8, "{name}: residual {r}");
        }
    }
    eprintln!("12 vacuum points in {:?}", start.elapsed());
}

#[test]
fn deferred_and_dense_contractions_agree() {
    let spec = builtin("schwarzschild", &[]).unwrap();
    let p = spec.eh_point_at([0.2, 4.5, 1.2, 0.4]).unwrap();
    let a = eh::field_equation_covector(&p).unwrap();
    let b = eh::field_equation_covector_dense(&p).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-9, "{x} {y}");
    }
}

#[test]
fn non_vacuum_residual_sits_on_metric_slots() {
    let spec = MetricSpec::from_texts(
        "bump",
        &[(0, 0, "-1"), (1, 1, "1 + x2^2"), (2, 2, "1"), (3, 3, "1")],
        &[],
        [(-1.0, 1.0); 4],
        Vacuum::No,
    )
    .unwrap();
    let p = spec.eh_point_at([0.0; 4]).unwrap();
    let l = eh::constraint_einstein(&p);
    assert!(l.iter().any(|v| v.abs() > 1e-3), "{l:?}");
    let cv = eh::field_equation_covector(&p).unwrap();
    for (i, v) in cv.iter().enumerate() {
        let want = match (coords::G..coords::DG).contains(&i) {
            true => -l[i - coords::G],
            false => 0.0,
        };
        assert!((v - want).abs() < 1e-9, "{}: {v} vs {want}", coords::name(i));
    }
}
