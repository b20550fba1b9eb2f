use ccrt::complex_mod::{circ_dist, mod_c};
use ccrt::crt::remainder_vector;
use ccrt::mle::{
    axis_candidate_set, axis_objective, common_residues, compute_weights, estimate, estimate_common,
    estimate_common_detailed, estimate_dual_real, estimate_real_axis, objective, oracle_grid_mle,
};
use ccrt::{ComplexVal, GaussianInt, ModulusSystem, NoisyRemainders, RealSystem};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn g(s: &str) -> GaussianInt {
    s.parse().unwrap()
}

fn sys(m: i64, cofactors: &[&str]) -> ModulusSystem {
    ModulusSystem::build(m, cofactors.iter().map(|s| g(s)).collect()).unwrap()
}

fn noisy(n: ComplexVal, sys: &ModulusSystem, sigmas: &[f64], rng: &mut ChaCha8Rng) -> NoisyRemainders {
    let values = sigmas
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let e = ComplexVal::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)) * s;
            mod_c(n + e, sys.full_modulus(i)).unwrap()
        })
        .collect();
    NoisyRemainders::new(values, sigmas.to_vec()).unwrap()
}

/// `x - y - [(x - y)/P]·P` with rounding done directly on the complex quotient.
fn distance_by_formula(x: ComplexVal, y: ComplexVal, p: GaussianInt) -> ComplexVal {
    let pc = p.to_complex();
    let q = (x - y) / pc;
    let rounded = ComplexVal::new((q.re + 0.5).floor(), (q.im + 0.5).floor());
    x - y - rounded * pc
}

fn complex_common_objective(residues: &[ComplexVal], w: &[f64], m: i64, x: ComplexVal) -> f64 {
    residues
        .iter()
        .zip(w)
        .map(|(&r, &wi)| wi * circ_dist(r, x, GaussianInt::real(m)).unwrap().norm_sqr())
        .sum()
}

fn residues_strategy(l: usize, m: f64) -> impl Strategy<Value = Vec<ComplexVal>> {
    prop::collection::vec((0.0..m, 0.0..m).prop_map(|(a, b)| ComplexVal::new(a, b)), l)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn objective_separates_into_axes(
        residues in residues_strategy(5, 10.0),
        sigmas in prop::collection::vec(0.1f64..2.0, 5),
        x in (0.0f64..10.0, 0.0f64..10.0),
    ) {
        let w = compute_weights(&sigmas).unwrap();
        let x = ComplexVal::new(x.0, x.1);
        let re: Vec<f64> = residues.iter().map(|r| r.re).collect();
        let im: Vec<f64> = residues.iter().map(|r| r.im).collect();
        let split = axis_objective(&re, &w, 10.0, x.re) + axis_objective(&im, &w, 10.0, x.im);
        let whole = complex_common_objective(&residues, w.as_slice(), 10, x);
        prop_assert!((split - whole).abs() <= 1e-12 * whole.max(1.0));
    }

    #[test]
    fn candidates_are_never_beaten_by_a_dense_line_search(
        l in 1usize..7,
        seed in any::<u64>(),
        m in 2i64..40,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mf = m as f64;
        let residues: Vec<f64> = (0..l).map(|_| rng.random_range(0.0..mf)).collect();
        let sigmas: Vec<f64> = (0..l).map(|_| rng.random_range(0.1..2.0)).collect();
        let w = compute_weights(&sigmas).unwrap();
        let cand = axis_candidate_set(&residues, &w, m).unwrap();
        prop_assert_eq!(cand.candidates.len(), l);
        prop_assert_eq!(cand.evaluations, l as u64);
        let best = cand.best_objective();
        let steps = 20_000;
        let step = mf / steps as f64;
        let mut grid_min = f64::INFINITY;
        for k in 0..steps {
            grid_min = grid_min.min(axis_objective(&residues, &w, mf, k as f64 * step));
        }
        prop_assert!(best <= grid_min + 1e-9, "best {best} grid {grid_min}");
        // the objective is Lipschitz with constant ≤ M (Σw = 1, |d| ≤ M/2)
        prop_assert!(grid_min <= best + mf * step);
    }

    #[test]
    fn wrap_shifts_leave_common_estimate_unchanged(
        residues in residues_strategy(4, 10.0),
        sigmas in prop::collection::vec(0.1f64..1.0, 4),
        shifts in prop::collection::vec((-30i64..30, -30i64..30), 4),
    ) {
        let w = compute_weights(&sigmas).unwrap();
        let base = estimate_common(&common_residues(&residues, 10), &w, 10).unwrap();
        let shifted: Vec<ComplexVal> = residues
            .iter()
            .zip(&shifts)
            .map(|(&r, &(a, b))| r + ComplexVal::new(a as f64, b as f64) * 10.0)
            .collect();
        let moved = estimate_common(&common_residues(&shifted, 10), &w, 10).unwrap();
        let d = circ_dist(moved, base, GaussianInt::real(10)).unwrap();
        prop_assert!(d.norm() < 1e-9, "{base} vs {moved}");
    }

    #[test]
    fn objective_matches_independent_formula(
        seed in any::<u64>(),
        z in (0.0f64..850.0, 0.0f64..850.0),
    ) {
        let s = sys(2, &["1+4i", "-3-4i", "13+16i"]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = ComplexVal::new(rng.random_range(0.0..850.0), rng.random_range(0.0..850.0));
        let obs = noisy(n, &s, &[0.3, 0.5, 0.7], &mut rng);
        let z = ComplexVal::new(z.0, z.1);
        let mut brute = 0.0;
        for (i, (&r, &sg)) in obs.values.iter().zip(&obs.sigmas).enumerate() {
            brute += distance_by_formula(r, z, s.full_modulus(i)).norm_sqr() / (sg * sg);
        }
        let got = objective(z, &obs, &s).unwrap();
        prop_assert!((got - brute).abs() <= 1e-9 * brute.max(1.0));
        // a full wrap by MΓ leaves every term unchanged
        let range = s.dynamic_range() as f64;
        for shift in [ComplexVal::new(range, 0.0), ComplexVal::new(0.0, -range)] {
            let wrapped = objective(z + shift, &obs, &s).unwrap();
            prop_assert!((wrapped - got).abs() <= 1e-9 * got.max(1.0));
        }
    }
}

#[test]
fn common_estimate_matches_dense_two_dimensional_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let m = 10;
    let steps = 1000;
    let step = m as f64 / steps as f64;
    for _ in 0..5 {
        let residues: Vec<ComplexVal> = (0..4)
            .map(|_| ComplexVal::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)))
            .collect();
        let sigmas: Vec<f64> = (0..4).map(|_| rng.random_range(0.1..1.0)).collect();
        let w = compute_weights(&sigmas).unwrap();
        let fast = estimate_common_detailed(&residues, &w, m).unwrap();
        let fast_obj = complex_common_objective(&residues, w.as_slice(), m, fast.value);
        assert!((fast_obj - fast.objective()).abs() < 1e-9);
        let mut grid_min = f64::INFINITY;
        for a in 0..steps {
            for b in 0..steps {
                let x = ComplexVal::new(a as f64 * step, b as f64 * step);
                grid_min = grid_min.min(complex_common_objective(&residues, w.as_slice(), m, x));
            }
        }
        assert!(fast_obj <= grid_min + 1e-9, "fast {fast_obj} grid {grid_min}");
    }
}

#[test]
fn full_estimate_attains_global_grid_minimum() {
    let s = sys(2, &["1+4i", "1-4i"]);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        let n = ComplexVal::new(rng.random_range(0.0..34.0), rng.random_range(0.0..34.0));
        let sigmas = [rng.random_range(0.1..1.0), rng.random_range(0.1..1.0)];
        let obs = noisy(n, &s, &sigmas, &mut rng);
        let est = estimate(&obs, &s).unwrap();
        let (_, grid_min) = oracle_grid_mle(&obs, &s, 0.05).unwrap();
        assert!(
            est.objective <= grid_min + 1e-9,
            "{} > {}",
            est.objective,
            grid_min
        );
    }
}

#[test]
fn evaluation_count_is_twice_the_channel_count() {
    let systems: [&[&str]; 8] = [
        &["3"],
        &["1+4i", "1-4i"],
        &["1+4i", "1-4i", "3"],
        &["1+4i", "1-4i", "3+4i", "3-4i"],
        &["1+4i", "1-4i", "3+4i", "3-4i", "3"],
        &["1+4i", "1-4i", "3+4i", "3-4i", "2+7i", "2-7i"],
        &["1+4i", "1-4i", "3+4i", "3-4i", "2+7i", "2-7i", "3"],
        &["1+4i", "1-4i", "3+4i", "3-4i", "2+7i", "2-7i", "3", "7"],
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for cofactors in systems {
        let l = cofactors.len();
        let s = sys(10, cofactors);
        let range = s.dynamic_range() as f64;
        let n = ComplexVal::new(rng.random_range(0.0..range), rng.random_range(0.0..range));
        let sigmas = vec![0.5; l];
        let obs = noisy(n, &s, &sigmas, &mut rng);
        let est = estimate(&obs, &s).unwrap();
        assert_eq!(est.evaluations, 2 * l as u64);
        assert_eq!(est.ops.evaluations, 2 * l as u64);
        assert!(est.ops.common_stage_mults <= 8 * (l * l) as u64);
    }
}

#[test]
fn symmetric_errors_give_exact_recovery() {
    let s = sys(10, &["3+4i", "3-4i"]);
    let n = ComplexVal::new(120.0, 130.0);
    let deltas = [ComplexVal::new(1.0, 0.5), ComplexVal::new(-1.0, -0.5)];
    let values = deltas
        .iter()
        .enumerate()
        .map(|(i, &d)| mod_c(n + d, s.full_modulus(i)).unwrap())
        .collect();
    let obs = NoisyRemainders::new(values, vec![1.0, 1.0]).unwrap();
    let est = estimate(&obs, &s).unwrap();
    assert!((est.n_hat - n).norm() < 1e-9, "{}", est.n_hat);
    let (grid_best, grid_min) = oracle_grid_mle(&obs, &s, 0.5).unwrap();
    assert!(est.objective <= grid_min + 1e-9);
    assert!((grid_best - n).norm() < 1e-9);
}

#[test]
fn zero_noise_recovery_on_random_points() {
    let s = sys(10, &["3+4i", "3-4i", "4"]);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let n = ComplexVal::new(rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0));
        let obs = NoisyRemainders::new(remainder_vector(n, &s).unwrap(), vec![0.2, 0.3, 0.4]).unwrap();
        let est = estimate(&obs, &s).unwrap();
        assert!((est.n_hat - n).norm() < 1e-9, "{n} -> {}", est.n_hat);
        assert!(est.objective < 1e-12);
    }
}

#[test]
fn real_axis_estimate_matches_complex_estimate_on_real_moduli() {
    let cs = sys(10, &["3", "4", "7"]);
    let rs = RealSystem::build(&[30, 40, 70]).unwrap();
    assert_eq!(cs.dynamic_range(), rs.dynamic_range());
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..500 {
        let n = ComplexVal::new(rng.random_range(0.0..840.0), rng.random_range(0.0..840.0));
        let sigmas = [
            rng.random_range(0.2..2.0),
            rng.random_range(0.2..2.0),
            rng.random_range(0.2..2.0),
        ];
        let obs = noisy(n, &cs, &sigmas, &mut rng);
        let est = estimate(&obs, &cs).unwrap();
        let re: Vec<f64> = obs.values.iter().map(|v| v.re).collect();
        let im: Vec<f64> = obs.values.iter().map(|v| v.im).collect();
        let re_hat = estimate_real_axis(&re, &sigmas, &rs).unwrap();
        let im_hat = estimate_real_axis(&im, &sigmas, &rs).unwrap();
        assert!(
            (est.n_hat.re - re_hat).abs() < 1e-9,
            "{} vs {re_hat}",
            est.n_hat.re
        );
        assert!(
            (est.n_hat.im - im_hat).abs() < 1e-9,
            "{} vs {im_hat}",
            est.n_hat.im
        );
        let dual = estimate_dual_real(&obs, &rs, &rs).unwrap();
        assert!((dual - est.n_hat).norm() < 1e-9);
    }
}

#[test]
fn dual_real_aliases_outside_its_range() {
    let rs = RealSystem::build(&[5, 6, 7]).unwrap();
    assert_eq!(rs.dynamic_range(), 210);
    let rem = |x: f64| -> Vec<f64> { [5.0, 6.0, 7.0].iter().map(|m| x.rem_euclid(*m)).collect() };
    let sig = [0.1, 0.1, 0.1];
    assert_eq!(estimate_real_axis(&rem(123.0), &sig, &rs).unwrap(), 123.0);
    assert_eq!(estimate_real_axis(&rem(-130.0), &sig, &rs).unwrap(), 80.0);
    assert_eq!(estimate_real_axis(&rem(250.0), &sig, &rs).unwrap(), 40.0);
}
