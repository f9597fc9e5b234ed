//! Free decay under the factor-2 Lindblad convention, integrated from
//! hand-built initial states and compared with closed forms.

use ep3_core::dynamics::OpenSystem;
use ep3_core::model::SystemParams;
use ep3_core::{AtomicLevel, Detuning, HilbertSpaceConfig, Matrix, C64};

fn rk4(
    sys: &OpenSystem<f64>,
    rho0: &Matrix,
    t_final: f64,
    dt: f64,
    mut observe: impl FnMut(f64, &Matrix),
) {
    let heff = sys.effective_hamiltonian();
    let mut rho = rho0.clone();
    let steps = (t_final / dt).round() as usize;
    let half = C64::new(dt / 2.0, 0.0);
    let full = C64::new(dt, 0.0);
    let sixth = C64::new(dt / 6.0, 0.0);
    let two = C64::new(2.0, 0.0);
    observe(0.0, &rho);
    for s in 1..=steps {
        let k1 = sys.rhs(&heff, &rho);
        let k2 = sys.rhs(&heff, &(rho.clone() + k1.scale(half)));
        let k3 = sys.rhs(&heff, &(rho.clone() + k2.scale(half)));
        let k4 = sys.rhs(&heff, &(rho.clone() + k3.scale(full)));
        let incr = k1 + k2.scale(two) + k3.scale(two) + k4;
        rho = rho + incr.scale(sixth);
        observe(s as f64 * dt, &rho);
    }
}

fn pure(dim: usize, amps: &[(usize, C64)]) -> Matrix {
    Matrix::from_fn(dim, |i, j| {
        let a = amps
            .iter()
            .find(|(k, _)| *k == i)
            .map_or(C64::new(0.0, 0.0), |x| x.1);
        let b = amps
            .iter()
            .find(|(k, _)| *k == j)
            .map_or(C64::new(0.0, 0.0), |x| x.1);
        a * b.conj()
    })
}

#[test]
fn cavity_field_decays_at_kappa() {
    let kappa = 7.0;
    let p = SystemParams::new(0.0, 0.0, 1.0, 0.0, kappa, 0.0).unwrap();
    let cfg = HilbertSpaceConfig::new(2).unwrap();
    let sys = OpenSystem::new(&p, Detuning::new(0.0).unwrap(), &cfg).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let g1 = AtomicLevel::G1;
    let rho0 = pure(
        cfg.dim(),
        &[
            (cfg.index(g1, 0), C64::new(s, 0.0)),
            (cfg.index(g1, 1), C64::new(s, 0.0)),
        ],
    );
    let a = cfg.annihilation::<f64>();
    let field = |rho: &Matrix| (&a * rho).trace();
    let a0 = field(&rho0);
    rk4(&sys, &rho0, 0.5, 1e-3, |t, rho| {
        let want = a0 * (-kappa * t).exp();
        assert!((field(rho) - want).norm() < 1e-9, "t={t}");
    });
}

#[test]
fn excited_population_decays_at_twice_gamma() {
    let (g1, g2) = (0.7, 0.3);
    let p = SystemParams::new(0.0, 0.0, g1, g2, 7.0, 0.0).unwrap();
    let cfg = HilbertSpaceConfig::new(1).unwrap();
    let sys = OpenSystem::new(&p, Detuning::new(0.0).unwrap(), &cfg).unwrap();
    let e0 = cfg.index(AtomicLevel::E, 0);
    let rho0 = pure(cfg.dim(), &[(e0, C64::new(1.0, 0.0))]);
    let mut halvings = Vec::new();
    rk4(&sys, &rho0, 2.0, 1e-3, |t, rho| {
        let pop = rho[(e0, e0)].re;
        assert!((pop - (-2.0 * (g1 + g2) * t).exp()).abs() < 1e-9, "t={t}");
        if (pop - 0.5).abs() < 1e-3 {
            halvings.push(t);
        }
    });
    // Survival halves at ln2 / (2 gamma).
    let t_half = std::f64::consts::LN_2 / 2.0;
    assert!(halvings.iter().any(|t| (t - t_half).abs() < 2e-3));
    // Branching into the two ground levels follows the rates.
    let mut last = None;
    rk4(&sys, &rho0, 10.0, 1e-3, |_, rho| last = Some(rho.clone()));
    let rho = last.unwrap();
    let g1_pop = rho[(cfg.index(AtomicLevel::G1, 0), cfg.index(AtomicLevel::G1, 0))].re;
    let g2_pop = rho[(cfg.index(AtomicLevel::G2, 0), cfg.index(AtomicLevel::G2, 0))].re;
    assert!((g1_pop - 0.7).abs() < 1e-6 && (g2_pop - 0.3).abs() < 1e-6);
}
