use ccrt::crt::{reconstruct_coprime, remainder_vector, solve_common, verify_remainders};
use ccrt::{ComplexVal, GaussianInt, ModulusSystem};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn g(s: &str) -> GaussianInt {
    s.parse().unwrap()
}

fn small_systems() -> Vec<ModulusSystem> {
    vec![
        ModulusSystem::build(3, vec![g("1+4i"), g("1-4i")]).unwrap(),
        ModulusSystem::build(2, vec![g("2+i"), g("2-i"), g("3")]).unwrap(),
        ModulusSystem::build(1, vec![g("4+5i"), g("4-5i"), g("7")]).unwrap(),
        ModulusSystem::build(2, vec![g("1+4i"), g("-3-4i"), g("13+16i")]).unwrap(),
        ModulusSystem::build(5, vec![g("7")]).unwrap(),
    ]
}

#[test]
fn exhaustive_lattice_round_trip() {
    for sys in small_systems() {
        let range = sys.dynamic_range();
        for re in 0..range {
            for im in 0..range {
                let n = ComplexVal::new(re as f64, im as f64);
                let rems = remainder_vector(n, &sys).unwrap();
                let sol = solve_common(&rems, &sys).unwrap();
                assert_eq!(sol.n, n, "system Γ = {}", sys.gamma());
                assert_eq!(sol.n, sol.n0.to_complex() * sys.m() as f64 + sol.r_common);
            }
        }
    }
}

#[test]
fn exhaustive_coprime_round_trip() {
    for sys in small_systems() {
        let sys = ModulusSystem::build(1, sys.cofactors().to_vec()).unwrap();
        let gamma = sys.gamma();
        for re in 0..gamma {
            for im in 0..gamma {
                let n = ComplexVal::new(re as f64, im as f64);
                let rems = remainder_vector(n, &sys).unwrap();
                assert_eq!(reconstruct_coprime(&rems, &sys).unwrap(), n);
            }
        }
    }
}

#[test]
fn random_real_valued_round_trip() {
    let sys = ModulusSystem::build(10, vec![g("3+4i"), g("3-4i"), g("4")]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let range = sys.dynamic_range() as f64;
    for _ in 0..50 {
        let n = ComplexVal::new(rng.random_range(0.0..range), rng.random_range(0.0..range));
        let rems = remainder_vector(n, &sys).unwrap();
        let sol = solve_common(&rems, &sys).unwrap();
        assert!((sol.n - n).norm() < 1e-9 * range, "{n} -> {}", sol.n);
        assert!(verify_remainders(sol.n, &rems, &sys, 1e-9).unwrap());
    }
}

#[test]
fn coprime_reconstruction_of_fractional_values() {
    let sys = ModulusSystem::build(1, vec![g("4+5i"), g("4-5i"), g("7")]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let n = ComplexVal::new(rng.random_range(0.0..287.0), rng.random_range(0.0..287.0));
        let rems = remainder_vector(n, &sys).unwrap();
        let got = reconstruct_coprime(&rems, &sys).unwrap();
        assert!((got - n).norm() < 1e-9, "{n} -> {got}");
    }
}

#[test]
fn basis_sums_to_one_modulo_each_cofactor() {
    for sys in small_systems() {
        let total = sys.basis().iter().fold(GaussianInt::ZERO, |acc, &e| acc + e);
        for &c in sys.cofactors() {
            assert!((total - GaussianInt::ONE).is_divisible_by(c).unwrap());
        }
        for (i, (&gamma, &inv)) in sys.partials().iter().zip(sys.inverses()).enumerate() {
            let c = sys.cofactors()[i];
            assert!((gamma * inv - GaussianInt::ONE).is_divisible_by(c).unwrap());
        }
    }
}

proptest! {
    #[test]
    fn round_trip_on_eight_channel_system(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let sys = ModulusSystem::build(
            10,
            ["1+4i", "1-4i", "3+4i", "3-4i", "2+7i", "2-7i", "3", "7"].iter().map(|s| g(s)).collect(),
        ).unwrap();
        prop_assert_eq!(sys.gamma(), 473_025);
        let range = sys.dynamic_range() as f64;
        let n = ComplexVal::new(a * range, b * range);
        let sol = solve_common(&remainder_vector(n, &sys).unwrap(), &sys).unwrap();
        prop_assert!((sol.n - n).norm() < 1e-9 * range);
    }
}
