//! Lindblad dynamics on the Dicke ⊗ truncated-Fock space.
//!
//! The master equation in scaled time is
//!
//! `ρ̇ = −i[H, ρ] + γ_d D[S_z]ρ + γ D[S₋]ρ + κ(n_th+1) D[a]ρ + κ n_th D[a†]ρ`
//!
//! with `D[L]ρ = LρL† − ½{L†L, ρ}`. Integration runs in the frame rotating with
//! `a†a`, where only the conditional-displacement term is left in the Hamiltonian
//! and every dissipator is unchanged. `L†L` is always formed from the truncated
//! operators, so the trace is conserved exactly by the generator.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::branch::{evolve, to_dense, Couplings, ProbeConfig};
use crate::error::{Error, Result};
use crate::fisher::{finite_diff_matrix, qfi_mixed, FisherResult, EIGEN_THRESHOLD};
use crate::hilbert::{fock_cutoff_for, DensityMatrix, DickeSpace, FockSpace};
use crate::oracles::qfi_ghz;

const ZERO: C64 = C64::new(0.0, 0.0);

/// RK4 with step-doubling error control and local extrapolation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integrator {
    pub initial_step: f64,
    /// Largest accepted local error per step (max-norm on matrix elements).
    pub tolerance: f64,
    pub min_step: f64,
    pub max_step: f64,
}

impl Default for Integrator {
    fn default() -> Self {
        Self {
            initial_step: 1e-2,
            tolerance: 1e-10,
            min_step: 1e-8,
            max_step: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LindbladParams {
    /// Collective dephasing rate, `D[S_z]`.
    pub gamma_d: f64,
    /// Collective emission rate, `D[S₋]`.
    pub gamma: f64,
    /// Mechanical damping rate.
    pub kappa: f64,
    /// Bath mean occupation.
    pub n_th: f64,
    pub probe: ProbeConfig,
    /// Explicit Fock cutoff; `None` uses [`LindbladParams::default_cutoff`].
    pub cutoff: Option<usize>,
    pub integrator: Integrator,
}

impl LindbladParams {
    pub fn new(probe: ProbeConfig, gamma_d: f64, gamma: f64, kappa: f64, n_th: f64) -> Self {
        Self {
            gamma_d,
            gamma,
            kappa,
            n_th,
            probe,
            cutoff: None,
            integrator: Integrator::default(),
        }
    }

    pub fn closed(probe: ProbeConfig) -> Self {
        Self::new(probe, 0.0, 0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.probe.validate()?;
        for (name, v) in [
            ("gamma_d", self.gamma_d),
            ("gamma", self.gamma),
            ("kappa", self.kappa),
            ("n_th", self.n_th),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if !matches!(self.probe.couplings, Couplings::Isotropic(_)) || !self.probe.uses_dicke_labels() {
            return Err(Error::Unsupported(
                "the master equation is collective and needs an isotropic Dicke-basis probe".into(),
            ));
        }
        let it = &self.integrator;
        if !(it.tolerance > 0.0 && it.min_step > 0.0 && it.initial_step >= it.min_step && it.max_step >= it.min_step) {
            return Err(Error::InvalidInput(format!("inconsistent integrator settings {it:?}")));
        }
        Ok(())
    }

    /// Bound on `|φ(τ)|` over all branches and times: `|α| + 2 max|z|`.
    pub fn max_displacement(&self) -> f64 {
        let k = self.probe.total_coupling() / self.probe.n_spins as f64;
        let zmax = 0.5 * k.abs() * self.probe.n_spins as f64 + (self.probe.g * self.probe.xi.cos()).abs();
        self.probe.alpha.norm() + 2.0 * zmax
    }

    /// Coherent-state heuristic inflated by `4√n_th` for bath heating.
    pub fn default_cutoff(&self) -> usize {
        fock_cutoff_for(self.max_displacement()) + (4.0 * self.n_th.sqrt()).ceil() as usize
    }

    pub fn effective_cutoff(&self) -> usize {
        self.cutoff.unwrap_or_else(|| self.default_cutoff())
    }
}

/// Precomputed coefficients of the master equation in the rotating frame.
#[derive(Clone, Debug)]
pub struct Generator {
    blocks: usize,
    fock: usize,
    /// `m` per Dicke block.
    m: Vec<f64>,
    /// Conditional displacement `z_m = k m − g cos ξ` per block.
    z: Vec<f64>,
    /// `⟨b−1|S₋|b⟩` per block (zero for the lowest).
    lowering: Vec<f64>,
    sqrt_n: Vec<f64>,
    /// Diagonal of `½ Σ r L†L`.
    loss: Vec<f64>,
    gamma_d: f64,
    gamma: f64,
    down: f64,
    up: f64,
}

impl Generator {
    pub fn new(params: &LindbladParams) -> Result<Self> {
        params.validate()?;
        let spins = DickeSpace::new(params.probe.n_spins)?;
        let fock = FockSpace::new(params.effective_cutoff()).dim();
        let k = params.probe.total_coupling() / params.probe.n_spins as f64;
        let shift = params.probe.g * params.probe.xi.cos();
        let blocks = spins.dim();
        let m: Vec<f64> = (0..blocks).map(|b| spins.m(b)).collect();
        let z = m.iter().map(|m| k * m - shift).collect();
        let lowering = (0..blocks).map(|b| if b == 0 { 0.0 } else { spins.lowering_coefficient(b) }).collect::<Vec<_>>();
        let sqrt_n = (0..=fock).map(|n| (n as f64).sqrt()).collect();
        let down = params.kappa * (params.n_th + 1.0);
        let up = params.kappa * params.n_th;
        let mut loss = Vec::with_capacity(blocks * fock);
        for b in 0..blocks {
            let emission = if b == 0 { 0.0 } else { spins.lowering_coefficient(b).powi(2) };
            for n in 0..fock {
                let raise = if n + 1 < fock { (n + 1) as f64 } else { 0.0 };
                loss.push(0.5 * (params.gamma_d * m[b] * m[b] + params.gamma * emission + down * n as f64 + up * raise));
            }
        }
        Ok(Self {
            blocks,
            fock,
            m,
            z,
            lowering,
            sqrt_n,
            loss,
            gamma_d: params.gamma_d,
            gamma: params.gamma,
            down,
            up,
        })
    }

    pub fn dim(&self) -> usize {
        self.blocks * self.fock
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.blocks, self.fock]
    }

    /// Rotating-frame right-hand side on column-major storage.
    fn rhs(&self, tau: f64, rho: &[C64], out: &mut [C64]) {
        let d = self.dim();
        let nf = self.fock;
        let (s, c) = tau.sin_cos();
        let fwd = C64::new(c, -s); // e^{−iτ}
        let bwd = C64::new(c, s); // e^{iτ}
        let i = C64::new(0.0, 1.0);
        for col in 0..d {
            let (bj, nj) = (col / nf, col % nf);
            let zj = self.z[bj];
            let base = col * d;
            let right = if nj + 1 < nf { Some(&rho[(col + 1) * d..(col + 2) * d]) } else { None };
            let left = if nj > 0 { Some(&rho[(col - 1) * d..col * d]) } else { None };
            let cur = &rho[base..base + d];
            let ej_up = -zj * self.sqrt_n[nj + 1];
            let ej_dn = -zj * self.sqrt_n[nj];
            for row in 0..d {
                let (bi, ni) = (row / nf, row % nf);
                let zi = self.z[bi];
                // (Hρ)_ij
                let mut h = ZERO;
                if ni + 1 < nf {
                    h += cur[row + 1] * (-zi * self.sqrt_n[ni + 1]) * fwd;
                }
                if ni > 0 {
                    h += cur[row - 1] * (-zi * self.sqrt_n[ni]) * bwd;
                }
                // (ρH)_ij
                if let Some(r) = right {
                    h -= r[row] * ej_up * bwd;
                }
                if let Some(l) = left {
                    h -= l[row] * ej_dn * fwd;
                }
                let mut v = -i * h - cur[row] * (self.loss[row] + self.loss[col]);
                if self.gamma_d != 0.0 {
                    v += cur[row] * (self.gamma_d * self.m[bi] * self.m[bj]);
                }
                if self.gamma != 0.0 && bi + 1 < self.blocks && bj + 1 < self.blocks {
                    let w = self.gamma * self.lowering[bi + 1] * self.lowering[bj + 1];
                    v += rho[(col + nf) * d + row + nf] * w;
                }
                if self.down != 0.0 && ni + 1 < nf && nj + 1 < nf {
                    v += rho[(col + 1) * d + row + 1] * (self.down * self.sqrt_n[ni + 1] * self.sqrt_n[nj + 1]);
                }
                if self.up != 0.0 && ni > 0 && nj > 0 {
                    v += rho[(col - 1) * d + row - 1] * (self.up * self.sqrt_n[ni] * self.sqrt_n[nj]);
                }
                out[base + row] = v;
            }
        }
    }

    /// Lab-frame generator `L(ρ)`, including the free `a†a` term.
    pub fn apply(&self, rho: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        let d = self.dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::DimensionMismatch(format!("generator acts on {d}x{d}, got {}x{}", rho.nrows(), rho.ncols())));
        }
        let mut out = DMatrix::from_element(d, d, ZERO);
        self.rhs(0.0, rho.as_slice(), out.as_mut_slice());
        for col in 0..d {
            for row in 0..d {
                let dn = (row % self.fock) as f64 - (col % self.fock) as f64;
                out[(row, col)] -= C64::new(0.0, dn) * rho[(row, col)];
            }
        }
        Ok(out)
    }

    /// `ρ_lab = e^{−i a†a τ} ρ̃ e^{i a†a τ}` and its inverse for `tau → −tau`.
    fn rotate(&self, rho: &mut DMatrix<C64>, tau: f64) {
        let d = self.dim();
        for col in 0..d {
            for row in 0..d {
                let dn = (row % self.fock) as f64 - (col % self.fock) as f64;
                rho[(row, col)] *= C64::from_polar(1.0, -dn * tau);
            }
        }
    }
}

/// Integrated state with the accepted step schedule for replay.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub rho: DensityMatrix,
    pub steps: Vec<f64>,
    pub rejected: usize,
    pub trace_error: f64,
    pub cutoff: usize,
}

struct Rk4Work {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4Work {
    fn new(len: usize) -> Self {
        let z = || vec![ZERO; len];
        Self { k1: z(), k2: z(), k3: z(), k4: z(), tmp: z() }
    }
}

fn rk4_step(gen: &Generator, tau: f64, h: f64, y: &[C64], out: &mut [C64], w: &mut Rk4Work) {
    let hc = C64::from(h);
    let half = C64::from(0.5 * h);
    gen.rhs(tau, y, &mut w.k1);
    for (t, (a, k)) in w.tmp.iter_mut().zip(y.iter().zip(&w.k1)) {
        *t = a + k * half;
    }
    gen.rhs(tau + 0.5 * h, &w.tmp, &mut w.k2);
    for (t, (a, k)) in w.tmp.iter_mut().zip(y.iter().zip(&w.k2)) {
        *t = a + k * half;
    }
    gen.rhs(tau + 0.5 * h, &w.tmp, &mut w.k3);
    for (t, (a, k)) in w.tmp.iter_mut().zip(y.iter().zip(&w.k3)) {
        *t = a + k * hc;
    }
    gen.rhs(tau + h, &w.tmp, &mut w.k4);
    let sixth = C64::from(h / 6.0);
    for (idx, o) in out.iter_mut().enumerate() {
        *o = y[idx] + (w.k1[idx] + (w.k2[idx] + w.k3[idx]) * 2.0 + w.k4[idx]) * sixth;
    }
}

fn symmetrize(y: &mut [C64], d: usize) {
    for col in 0..d {
        for row in col..d {
            let a = y[col * d + row];
            let b = y[row * d + col];
            let avg = (a + b.conj()) * 0.5;
            y[col * d + row] = avg;
            y[row * d + col] = avg.conj();
        }
    }
}

/// Initial density matrix `|ψ(0)⟩⟨ψ(0)|` of the probe on the generator's space.
pub fn initial_state(params: &LindbladParams) -> Result<DensityMatrix> {
    let space = FockSpace::new(params.effective_cutoff());
    Ok(to_dense(&evolve(&params.probe, 0.0)?, &space)?.to_density_matrix())
}

/// Adaptive integration from `rho0` at `τ = 0` to `tau_end`.
pub fn integrate(rho0: &DensityMatrix, params: &LindbladParams, tau_end: f64) -> Result<Trajectory> {
    run(rho0, params, tau_end, None)
}

/// Replays a recorded step schedule without error control, so that nearby
/// parameter values see identical discretizations.
pub fn integrate_with_schedule(rho0: &DensityMatrix, params: &LindbladParams, steps: &[f64]) -> Result<Trajectory> {
    let tau_end = steps.iter().sum();
    run(rho0, params, tau_end, Some(steps))
}

fn run(rho0: &DensityMatrix, params: &LindbladParams, tau_end: f64, schedule: Option<&[f64]>) -> Result<Trajectory> {
    if !(tau_end >= 0.0) || !tau_end.is_finite() {
        return Err(Error::InvalidInput(format!("tau must be finite and non-negative, got {tau_end}")));
    }
    let gen = Generator::new(params)?;
    let d = gen.dim();
    if rho0.dim() != d {
        return Err(Error::DimensionMismatch(format!("initial state has dimension {}, generator {d}", rho0.dim())));
    }
    let it = params.integrator;
    let mut y: Vec<C64> = rho0.matrix().as_slice().to_vec();
    let mut full = vec![ZERO; d * d];
    let mut mid = vec![ZERO; d * d];
    let mut two = vec![ZERO; d * d];
    let mut work = Rk4Work::new(d * d);
    let mut steps = Vec::new();
    let mut rejected = 0;
    let mut tau = 0.0;

    // One step-doubling pair: `full` holds the single step, `two` the two half
    // steps; returns the error estimate and leaves the extrapolated state in `two`.
    let mut pair = |tau: f64, step: f64, y: &[C64], full: &mut Vec<C64>, mid: &mut Vec<C64>, two: &mut Vec<C64>| {
        rk4_step(&gen, tau, step, y, full, &mut work);
        rk4_step(&gen, tau, 0.5 * step, y, mid, &mut work);
        rk4_step(&gen, tau + 0.5 * step, 0.5 * step, mid, two, &mut work);
        let mut err = 0.0f64;
        for (t, f) in two.iter_mut().zip(full.iter()) {
            let diff = *t - f;
            err = err.max(diff.norm());
            *t += diff / 15.0;
        }
        err / 15.0
    };

    if let Some(schedule) = schedule {
        for &h in schedule {
            pair(tau, h, &y, &mut full, &mut mid, &mut two);
            std::mem::swap(&mut y, &mut two);
            symmetrize(&mut y, d);
            tau += h;
            steps.push(h);
        }
    } else {
        let mut h = it.initial_step.min(it.max_step);
        while tau < tau_end {
            let last = tau + h >= tau_end;
            let step = if last { tau_end - tau } else { h };
            let err = pair(tau, step, &y, &mut full, &mut mid, &mut two);
            if err <= it.tolerance {
                std::mem::swap(&mut y, &mut two);
                symmetrize(&mut y, d);
                tau = if last { tau_end } else { tau + step };
                steps.push(step);
            } else {
                rejected += 1;
            }
            let factor = if err > 0.0 { 0.9 * (it.tolerance / err).powf(0.2) } else { 2.0 };
            let next = step * factor.clamp(0.2, 2.0);
            if err > it.tolerance && next < it.min_step {
                return Err(Error::StepSizeUnderflow { tau, min_step: it.min_step });
            }
            if !last || err > it.tolerance {
                h = next.clamp(it.min_step, it.max_step);
            }
        }
    }

    let mut rho = DMatrix::from_vec(d, d, y);
    gen.rotate(&mut rho, tau);
    let rho = DensityMatrix::new(rho, gen.dims())?;
    let trace_error = (rho.trace() - C64::from(1.0)).norm();
    Ok(Trajectory {
        rho,
        steps,
        rejected,
        trace_error,
        cutoff: gen.fock - 1,
    })
}

/// QFI of the lossy state together with the closed-system reference.
#[derive(Clone, Debug)]
pub struct LossyQfi {
    pub fisher: FisherResult,
    /// `qfi_ghz(k, N, τ, ξ)` for the same probe.
    pub ideal: f64,
    pub fraction: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
    pub steps: usize,
}

/// Mixed-state QFI of `ρ(τ)` with `∂_g ρ` from central differences at `g0 ± h`
/// (and `g0 ± 2h` with Richardson extrapolation). All offsets replay the
/// step schedule chosen adaptively at `g0` and run concurrently.
pub fn qfi_losses(params: &LindbladParams, tau: f64, h: f64, richardson: bool) -> Result<LossyQfi> {
    let g0 = params.probe.g;
    let at = |g: f64| {
        let mut p = params.clone();
        p.probe.g = g;
        p
    };
    let rho0 = initial_state(params)?;
    let base = integrate(&rho0, params, tau)?;
    let offsets: Vec<f64> = if richardson { vec![h, -h, 2.0 * h, -2.0 * h] } else { vec![h, -h] };
    let runs: Vec<Result<(f64, DMatrix<C64>)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = offsets
            .iter()
            .map(|&dg| {
                let p = at(g0 + dg);
                let steps = &base.steps;
                scope.spawn(move || -> Result<(f64, DMatrix<C64>)> {
                    let r0 = initial_state(&p)?;
                    Ok((dg, integrate_with_schedule(&r0, &p, steps)?.rho.into_matrix()))
                })
            })
            .collect();
        handles.into_iter().map(|t| t.join().expect("integration thread panicked")).collect()
    });
    let mut shifted = Vec::with_capacity(runs.len());
    for r in runs {
        shifted.push(r?);
    }
    let lookup = |g: f64| -> Result<DMatrix<C64>> {
        shifted
            .iter()
            .find(|(dg, _)| (g0 + dg - g).abs() < 1e-3 * h)
            .map(|(_, m)| m.clone())
            .ok_or_else(|| Error::InvalidInput(format!("no integration at g = {g}")))
    };
    let drho = finite_diff_matrix(lookup, g0, h, richardson)?;
    let mut fisher = qfi_mixed(&base.rho, &drho, EIGEN_THRESHOLD)?;
    fisher.numerics.fd_step = Some(h);
    fisher.numerics.cutoff = Some(base.cutoff);
    let ideal = qfi_ghz(
        params.probe.total_coupling() / params.probe.n_spins as f64,
        params.probe.n_spins,
        tau,
        params.probe.xi,
    );
    let min_eigenvalue = base.rho.min_eigenvalue();
    if base.trace_error > 1e-8 {
        fisher.diagnostics.push(format!("trace error {:.3e}", base.trace_error));
    }
    if min_eigenvalue < -1e-8 {
        fisher.diagnostics.push(format!("minimum eigenvalue {min_eigenvalue:.3e}"));
    }
    Ok(LossyQfi {
        fraction: fisher.value / ideal,
        fisher,
        ideal,
        trace_error: base.trace_error,
        min_eigenvalue,
        steps: base.steps.len(),
    })
}
