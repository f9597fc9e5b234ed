//! Independent oracles over random parameter draws: a general complex
//! eigensolver, the characteristic-polynomial identities, and the two
//! routes to the weak-drive cavity amplitude.

use ep3_core::fitting::{steady_amplitudes, steady_cavity_amplitude, transmission_model};
use ep3_core::model::{build_hnh, build_probe_hamiltonian, SystemParams};
use ep3_core::spectral::eigenvalues;
use ep3_core::{Detuning, HilbertSpaceConfig, C64};
use nalgebra::Matrix3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DRAWS: usize = 1000;

fn draw(rng: &mut ChaCha8Rng) -> SystemParams<f64> {
    let kappa = rng.random_range(0.5..15.0);
    SystemParams::new(
        rng.random_range(0.1..10.0),
        rng.random_range(0.1..10.0),
        rng.random_range(0.1..2.0),
        rng.random_range(0.0..0.5),
        kappa,
        0.1 * kappa,
    )
    .unwrap()
}

fn draws() -> impl Iterator<Item = SystemParams<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_501);
    (0..DRAWS).map(move |_| draw(&mut rng))
}

fn general_eigenvalues(p: &SystemParams<f64>) -> Vec<C64> {
    let h = build_hnh(p).unwrap();
    let m = Matrix3::from_fn(|i, j| h[(i, j)]);
    let schur = m.schur();
    schur.eigenvalues().unwrap().iter().copied().collect()
}

#[test]
fn vieta_identities_hold() {
    for p in draws() {
        let t = eigenvalues(&p);
        let scale = t.values().iter().fold(1.0f64, |m, z| m.max(z.norm()));
        let gamma = p.gamma();
        let sum = C64::new(0.0, -(gamma + p.kappa));
        let pair = C64::new(
            -(p.omega * p.omega / 4.0 + p.g * p.g + gamma * p.kappa),
            0.0,
        );
        let prod = C64::new(0.0, p.omega * p.omega * p.kappa / 4.0);
        assert!((t.sum() - sum).norm() <= 1e-10 * scale, "{p:?}");
        assert!(
            (t.pair_sum() - pair).norm() <= 1e-10 * scale * scale,
            "{p:?}"
        );
        assert!(
            (t.product() - prod).norm() <= 1e-10 * scale.powi(3),
            "{p:?}"
        );
    }
}

#[test]
fn cubic_roots_match_general_eigensolver() {
    for p in draws() {
        let ours = eigenvalues(&p);
        let mut theirs = general_eigenvalues(&p);
        let scale = ours.values().iter().fold(1.0f64, |m, z| m.max(z.norm()));
        for z in ours.values() {
            let (k, d) = theirs
                .iter()
                .enumerate()
                .map(|(k, w)| (k, (w - z).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!(d <= 1e-8 * scale, "{p:?}: {z} off by {d}");
            theirs.remove(k);
        }
    }
}

#[test]
fn linear_solve_matches_closed_form_amplitude() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for p in draws() {
        let t = eigenvalues(&p);
        let d = rng.random_range(-15.0..15.0);
        let solved = steady_amplitudes(&p, Detuning::new(d).unwrap())
            .unwrap()
            .delta;
        let closed = steady_cavity_amplitude(d, &t, p.kappa, p.epsilon);
        assert!(
            (solved - closed).norm() <= 1e-10 * solved.norm().max(p.epsilon / p.kappa),
            "{p:?} D={d}"
        );
        let t_amp = (solved * p.kappa / p.epsilon).norm_sqr();
        let t_model = transmission_model(Detuning::new(d).unwrap(), &t, p.kappa);
        assert!((t_amp - t_model).abs() <= 1e-10 * t_model.max(1e-3));
    }
}

#[test]
fn resonant_unit_transmission_and_mirror_symmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in draws() {
        let t = eigenvalues(&p);
        let at = |d: f64| transmission_model(Detuning::new(d).unwrap(), &t, p.kappa);
        assert!((at(0.0) - 1.0).abs() <= 1e-10, "{p:?}: T(0) = {}", at(0.0));
        let d = rng.random_range(0.01..20.0);
        assert!(
            (at(d) - at(-d)).abs() <= 1e-10 * at(d).max(1e-6),
            "{p:?} D={d}"
        );
    }
}

#[test]
fn far_detuned_tail_follows_bare_cavity() {
    for p in draws().take(100) {
        let t = eigenvalues(&p);
        let d = 1e3;
        let ratio = transmission_model(Detuning::new(d).unwrap(), &t, p.kappa)
            / (p.kappa * p.kappa / (d * d));
        assert!((ratio - 1.0).abs() < 0.05, "{p:?}: {ratio}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hnh_is_complex_symmetric_with_fixed_trace(
        g in 0.0..10.0f64, w in 0.0..10.0f64, g1 in 0.0..2.0f64, g2 in 0.0..1.0f64, k in 0.1..10.0f64,
    ) {
        let p = SystemParams::new(g, w, g1, g2, k, 0.0).unwrap();
        let h = build_hnh(&p).unwrap();
        prop_assert!(h.is_symmetric(0.0));
        prop_assert_eq!(h.trace(), C64::new(0.0, -(g1 + g2 + k)));
        for i in 0..3 {
            prop_assert_eq!(h[(i, i)].re, 0.0);
            prop_assert!(h[(i, i)].im <= 0.0);
        }
    }

    #[test]
    fn probe_hamiltonian_is_hermitian(
        g in 0.0..10.0f64, w in 0.0..10.0f64, k in 0.1..10.0f64, eps in 0.0..2.0f64,
        d in -20.0..20.0f64, n in 1usize..5,
    ) {
        let p = SystemParams::new(g, w, 1.0, 0.0, k, eps).unwrap();
        let cfg = HilbertSpaceConfig::new(n).unwrap();
        let h = build_probe_hamiltonian(&p, Detuning::new(d).unwrap(), &cfg).unwrap();
        prop_assert_eq!(h.dim(), 3 * (n + 1));
        prop_assert!(h.is_hermitian(0.0));
    }
}
