use gravsim_core::branch::{evolve, to_dense, ProbeConfig};
use gravsim_core::hilbert::{dicke_operators, identity, kron, partial_trace, DensityMatrix, DickeSpace, FockSpace};
use gravsim_core::open_system::{initial_state, integrate, qfi_losses, Generator, LindbladParams};
use gravsim_core::{oracles, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn dissipator(l: &DMatrix<C64>, rho: &DMatrix<C64>) -> DMatrix<C64> {
    let ll = l.adjoint() * l;
    l * rho * l.adjoint() - (&ll * rho + rho * &ll) * C64::new(0.5, 0.0)
}

fn random_hermitian(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let m = DMatrix::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn lossy(n: usize, k: f64, rates: [f64; 4], cutoff: usize) -> LindbladParams {
    let mut p = LindbladParams::new(ProbeConfig::ghz(n, k, 0.2, 0.3, C64::new(0.4, 0.1)), rates[0], rates[1], rates[2], rates[3]);
    p.cutoff = Some(cutoff);
    p
}

#[test]
fn generator_matches_term_by_term_construction() {
    let params = lossy(3, 0.7, [0.03, 0.02, 0.05, 1.5], 6);
    let gen = Generator::new(&params).unwrap();
    let spins = DickeSpace::new(3).unwrap();
    let ops = dicke_operators(&spins);
    let fock = FockSpace::new(6);
    let a = fock.annihilation();
    let (is, if_) = (identity(spins.dim()), identity(fock.dim()));
    let z = &ops.sz * C64::from(0.7) - &is * C64::from(0.2 * 0.3f64.cos());
    let h = kron(&is, &fock.number()) - kron(&z, &(&a + a.adjoint()));
    let sz = kron(&ops.sz, &if_);
    let sm = kron(&ops.s_minus, &if_);
    let af = kron(&is, &a);
    let ad = kron(&is, &a.adjoint());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3 {
        let rho = random_hermitian(gen.dim(), &mut rng);
        let i = C64::new(0.0, 1.0);
        let expected = (&h * &rho - &rho * &h) * (-i)
            + dissipator(&sz, &rho) * C64::from(0.03)
            + dissipator(&sm, &rho) * C64::from(0.02)
            + dissipator(&af, &rho) * C64::from(0.05 * 2.5)
            + dissipator(&ad, &rho) * C64::from(0.05 * 1.5);
        let got = gen.apply(&rho).unwrap();
        assert!((got - &expected).norm() < 1e-12 * expected.norm());
    }
}

#[test]
fn generator_is_linear() {
    let gen = Generator::new(&lossy(2, 0.5, [0.1, 0.2, 0.01, 3.0], 8)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = random_hermitian(gen.dim(), &mut rng);
    let y = random_hermitian(gen.dim(), &mut rng);
    let c = C64::new(0.3, -1.2);
    let lhs = gen.apply(&(&x + &y * c)).unwrap();
    let rhs = gen.apply(&x).unwrap() + gen.apply(&y).unwrap() * c;
    assert!((lhs - &rhs).norm() < 1e-12 * rhs.norm());
}

#[test]
fn zero_rates_reproduce_branch_dynamics() {
    for n in [1, 3] {
        let probe = ProbeConfig::ghz(n, 0.6, 0.1, 0.0, C64::new(0.5, 0.0));
        let params = LindbladParams::closed(probe.clone());
        let space = FockSpace::new(params.effective_cutoff());
        let rho0 = initial_state(&params).unwrap();
        for tau in [PI, 2.0 * PI] {
            let traj = integrate(&rho0, &params, tau).unwrap();
            let psi = to_dense(&evolve(&probe, tau).unwrap(), &space).unwrap();
            let f = traj.rho.fidelity_with_pure(psi.amplitudes());
            assert!(f > 1.0 - 1e-6, "N={n} tau={tau}: fidelity {f}");
            assert!(traj.trace_error < 1e-8);
            assert!(traj.rho.min_eigenvalue() > -1e-8, "N={n} tau={tau}: {} steps={}", traj.rho.min_eigenvalue(), traj.steps.len());
        }
    }
}

#[test]
fn single_mode_decay_law() {
    let kappa = 0.05;
    let mut params = LindbladParams::new(ProbeConfig::ghz(1, 0.0, 0.0, 0.0, C64::new(0.0, 0.0)), 0.0, 0.0, kappa, 0.0);
    params.cutoff = Some(4);
    let fock = FockSpace::new(4);
    let mut one = DMatrix::from_element(5, 5, C64::new(0.0, 0.0));
    one[(1, 1)] = C64::new(1.0, 0.0);
    let spin = DMatrix::from_fn(2, 2, |_, _| C64::new(0.5, 0.0));
    let rho0 = DensityMatrix::new(kron(&spin, &one), vec![2, 5]).unwrap();
    let number = kron(&identity(2), &fock.number());
    for tau in [1.0, 5.0, 20.0] {
        let rho = integrate(&rho0, &params, tau).unwrap().rho;
        let n = (rho.matrix() * &number).trace().re;
        assert!((n - (-kappa * tau).exp()).abs() < 1e-8, "tau={tau}: {n}");
    }
}

#[test]
fn collective_dephasing_of_ghz_coherence() {
    let gamma_d = 0.02;
    for n in [2usize, 4] {
        let mut params = LindbladParams::new(ProbeConfig::ghz(n, 0.0, 0.0, 0.0, C64::new(0.0, 0.0)), gamma_d, 0.0, 0.0, 0.0);
        params.cutoff = Some(2);
        let rho0 = initial_state(&params).unwrap();
        let tau = 3.0;
        let spin = partial_trace(&integrate(&rho0, &params, tau).unwrap().rho, 0).unwrap();
        let coherence = spin.matrix()[(n, 0)].norm();
        let expected = 0.5 * (-gamma_d * (n * n) as f64 * tau / 2.0).exp();
        assert!((coherence - expected).abs() < 1e-9, "N={n}: {coherence} vs {expected}");
    }
}

#[test]
fn weak_damping_leaves_field_near_initial_state() {
    let probe = ProbeConfig::ghz(1, 0.0, 0.0, 0.0, C64::new(1.0, 0.0));
    let mut params = LindbladParams::new(probe, 0.0, 0.0, 1e-5, 10.0);
    params.cutoff = Some(30);
    let rho0 = initial_state(&params).unwrap();
    let rho = integrate(&rho0, &params, 2.0 * PI).unwrap().rho;
    let field = partial_trace(&rho, 1).unwrap();
    let field0 = partial_trace(&rho0, 1).unwrap();
    let d = field.trace_distance(&field0).unwrap();
    assert!(d < 1e-3, "trace distance {d}");
    assert!(d > 0.0);
}

#[test]
fn vanishing_rates_recover_ideal_qfi() {
    let probe = ProbeConfig::ghz(2, 0.5, 0.1, 0.0, C64::new(0.0, 0.0));
    let mut params = LindbladParams::new(probe, 1e-9, 1e-9, 1e-9, 0.0);
    params.cutoff = Some(25);
    let r = qfi_losses(&params, 2.0 * PI, 1e-4, true).unwrap();
    let ideal = oracles::qfi_ghz(0.5, 2, 2.0 * PI, 0.0);
    assert!((r.fisher.value - ideal).abs() < 1e-3 * ideal, "{} vs {ideal}", r.fisher.value);
    assert!((r.fraction - 1.0).abs() < 1e-3);
}

#[test]
fn anisotropic_probes_are_rejected() {
    let mut probe = ProbeConfig::ghz(2, 0.5, 0.1, 0.0, C64::new(0.0, 0.0));
    probe.couplings = gravsim_core::branch::Couplings::Anisotropic(vec![0.4, 0.6]);
    assert!(Generator::new(&LindbladParams::closed(probe)).is_err());
    let bad = LindbladParams::new(ProbeConfig::ghz(2, 0.5, 0.1, 0.0, C64::new(0.0, 0.0)), -1.0, 0.0, 0.0, 0.0);
    assert!(bad.validate().is_err());
}
