//! Exact evolution as a superposition of spin-labelled coherent branches.
//!
//! `Z` is diagonal in the spin-z basis, so each spin eigenstate `|l⟩` with
//! eigenvalue `z` drags the field along an exactly solvable displaced orbit:
//!
//! ```text
//! e^{-iτH} |l⟩|α⟩ = e^{i z² (τ − sin τ)} e^{i z Im(η conj(α e^{-iτ}))} |l⟩|α e^{-iτ} + z η⟩,
//! η(τ) = 1 − e^{-iτ}.
//! ```

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{
    coherent_overlap, coherent_overlap_dg, coherent_state, DenseState, DensityMatrix, FockSpace,
    NORM_TOLERANCE,
};

const NORMALIZATION_TOLERANCE: f64 = 1e-10;

/// Spin-field couplings in scaled units.
#[derive(Clone, Debug, PartialEq)]
pub enum Couplings {
    /// Collective coupling `k S_z`.
    Isotropic(f64),
    /// Per-spin couplings `Σ k_i σ_i^z / 2`, one entry per spin.
    Anisotropic(Vec<f64>),
}

/// Initial spin state.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialSpin {
    /// `(|N/2, −N/2⟩ + |N/2, N/2⟩)/√2`.
    Ghz,
    /// Product of `σ_x = +1` eigenstates.
    Css,
    /// Amplitudes `c_m` in ascending-`m` Dicke order.
    Dicke(Vec<C64>),
    /// Amplitudes indexed by bitstring (spin 1 is the most significant bit, bit 1 = spin up).
    Product(Vec<C64>),
}

/// Spin basis label of a branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpinLabel {
    /// Dicke state with `m = two_m / 2`.
    Dicke { two_m: i32 },
    /// Product basis state; bit 1 means `σ^z = +1`.
    Bits(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeConfig {
    pub n_spins: usize,
    pub couplings: Couplings,
    pub g: f64,
    pub xi: f64,
    pub alpha: C64,
    pub initial_spin: InitialSpin,
}

impl ProbeConfig {
    /// Isotropic GHZ probe.
    pub fn ghz(n_spins: usize, k: f64, g: f64, xi: f64, alpha: C64) -> Self {
        Self {
            n_spins,
            couplings: Couplings::Isotropic(k),
            g,
            xi,
            alpha,
            initial_spin: InitialSpin::Ghz,
        }
    }

    /// Isotropic coherent-spin-state probe.
    pub fn css(n_spins: usize, k: f64, g: f64, xi: f64, alpha: C64) -> Self {
        Self {
            initial_spin: InitialSpin::Css,
            ..Self::ghz(n_spins, k, g, xi, alpha)
        }
    }

    pub fn with_g(&self, g: f64) -> Self {
        Self { g, ..self.clone() }
    }

    /// Per-spin couplings, expanded for the isotropic case.
    pub fn spin_couplings(&self) -> Vec<f64> {
        match &self.couplings {
            Couplings::Isotropic(k) => vec![*k; self.n_spins],
            Couplings::Anisotropic(ks) => ks.clone(),
        }
    }

    /// `Σ k_i`, i.e. `kN` for isotropic couplings.
    pub fn total_coupling(&self) -> f64 {
        self.spin_couplings().iter().sum()
    }

    /// Whether branches carry Dicke labels (otherwise bitstrings).
    pub fn uses_dicke_labels(&self) -> bool {
        matches!(self.couplings, Couplings::Isotropic(_))
            && !matches!(self.initial_spin, InitialSpin::Product(_))
    }

    /// Dimension of the spin factor used by [`to_dense`].
    pub fn spin_dim(&self) -> usize {
        if self.uses_dicke_labels() {
            self.n_spins + 1
        } else {
            1usize << self.n_spins
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_spins == 0 {
            return Err(Error::InvalidInput("at least one spin is required".into()));
        }
        if let Couplings::Anisotropic(ks) = &self.couplings {
            if ks.len() != self.n_spins {
                return Err(Error::DimensionMismatch(format!(
                    "{} couplings for {} spins",
                    ks.len(),
                    self.n_spins
                )));
            }
        }
        // GHZ keeps two bitstring branches; other product-basis states enumerate 2^N
        let limit = if self.initial_spin == InitialSpin::Ghz { 63 } else { DENSE_BITS_LIMIT };
        if !self.uses_dicke_labels() && self.n_spins > limit {
            return Err(Error::Unsupported(format!(
                "bitstring branches for {} spins",
                self.n_spins
            )));
        }
        let check_norm = |amps: &[C64], expected: usize| -> Result<()> {
            if amps.len() != expected {
                return Err(Error::DimensionMismatch(format!(
                    "{} spin amplitudes, expected {}",
                    amps.len(),
                    expected
                )));
            }
            let norm: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
            if (norm - 1.0).abs() > NORMALIZATION_TOLERANCE {
                return Err(Error::InvalidInput(format!(
                    "spin amplitudes have squared norm {norm}"
                )));
            }
            Ok(())
        };
        match &self.initial_spin {
            InitialSpin::Dicke(c) => check_norm(c, self.n_spins + 1),
            InitialSpin::Product(r) => check_norm(r, 1usize << self.n_spins),
            _ => Ok(()),
        }
    }

    /// Initial spin amplitudes keyed by label, in ascending label order.
    pub fn initial_amplitudes(&self) -> Result<Vec<(SpinLabel, C64)>> {
        self.validate()?;
        let n = self.n_spins;
        let h = C64::from(std::f64::consts::FRAC_1_SQRT_2);
        if self.uses_dicke_labels() {
            let dicke = |i: usize| SpinLabel::Dicke {
                two_m: 2 * i as i32 - n as i32,
            };
            return Ok(match &self.initial_spin {
                InitialSpin::Ghz => vec![(dicke(0), h), (dicke(n), h)],
                InitialSpin::Css => (0..=n).map(|i| (dicke(i), C64::from(css_weight(n, i)))).collect(),
                InitialSpin::Dicke(c) => c.iter().enumerate().map(|(i, &c)| (dicke(i), c)).collect(),
                InitialSpin::Product(_) => unreachable!("product inputs use bitstring labels"),
            });
        }
        let all_up = (1u64 << n) - 1;
        Ok(match &self.initial_spin {
            InitialSpin::Ghz => vec![(SpinLabel::Bits(0), h), (SpinLabel::Bits(all_up), h)],
            InitialSpin::Css => {
                let c = C64::from((0.5f64).powf(n as f64 / 2.0));
                (0..=all_up).map(|b| (SpinLabel::Bits(b), c)).collect()
            }
            InitialSpin::Dicke(c) => (0..=all_up)
                .map(|b| {
                    let ups = b.count_ones() as usize;
                    let amp = c[ups] * css_weight(n, ups) * 2f64.powf(n as f64 / 2.0) / binomial(n, ups);
                    (SpinLabel::Bits(b), amp)
                })
                .collect(),
            InitialSpin::Product(r) => r.iter().enumerate().map(|(b, &c)| (SpinLabel::Bits(b as u64), c)).collect(),
        })
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    use statrs::function::factorial::ln_binomial;
    ln_binomial(n as u64, k as u64).exp()
}

/// `√C(N, i) / 2^{N/2}`: Dicke weight of the `σ_x = +1` product state.
fn css_weight(n: usize, i: usize) -> f64 {
    use statrs::function::factorial::ln_binomial;
    (0.5 * (ln_binomial(n as u64, i as u64) - n as f64 * std::f64::consts::LN_2)).exp()
}

/// One spin-labelled coherent branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherentBranch {
    pub label: SpinLabel,
    /// Complex weight including every accumulated phase.
    pub amplitude: C64,
    /// Coherent field amplitude.
    pub phi: C64,
    /// Eigenvalue of `Z` on this branch.
    pub z: f64,
}

#[derive(Clone, Debug)]
pub struct BranchedState {
    branches: Vec<CoherentBranch>,
    tau: f64,
    config: ProbeConfig,
}

impl BranchedState {
    pub fn branches(&self) -> &[CoherentBranch] {
        &self.branches
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn config(&self) -> &ProbeConfig {
        &self.config
    }

    pub fn norm_sqr(&self) -> f64 {
        self.branches.iter().map(|b| b.amplitude.norm_sqr()).sum()
    }

    /// Largest `|φ|` over branches.
    pub fn max_phi(&self) -> f64 {
        self.branches.iter().map(|b| b.phi.norm()).fold(0.0, f64::max)
    }

    /// Largest `|φ + s φ'|` reachable for |s| ≤ 1, handy for grid sizing.
    pub fn max_phi_with_tangent(&self) -> f64 {
        let eta = eta(self.tau).norm();
        self.max_phi() + eta * self.config.xi.cos().abs()
    }

    /// Closed-form field purity `Σ |A_a|²|A_b|² |⟨φ_a|φ_b⟩|²`.
    pub fn field_purity(&self) -> f64 {
        let mut p = 0.0;
        for a in &self.branches {
            for b in &self.branches {
                p += a.amplitude.norm_sqr() * b.amplitude.norm_sqr() * coherent_overlap(a.phi, b.phi).norm_sqr();
            }
        }
        p
    }
}

/// `η(τ) = 1 − e^{−iτ}`.
pub fn eta(tau: f64) -> C64 {
    C64::new(1.0, 0.0) - C64::from_polar(1.0, -tau)
}

/// Eigenvalue of `Z` on the spin basis state `label`.
pub fn z_eigenvalue(label: SpinLabel, config: &ProbeConfig) -> Result<f64> {
    let n = config.n_spins;
    let shift = config.g * config.xi.cos();
    let mismatch = || Error::LabelMismatch {
        label: format!("{label:?}"),
    };
    match label {
        SpinLabel::Dicke { two_m } => {
            let k = match config.couplings {
                Couplings::Isotropic(k) => k,
                Couplings::Anisotropic(_) => return Err(mismatch()),
            };
            if two_m.unsigned_abs() as usize > n || (two_m + n as i32) % 2 != 0 {
                return Err(mismatch());
            }
            Ok(k * two_m as f64 / 2.0 - shift)
        }
        SpinLabel::Bits(bits) => {
            if n < 64 && bits >> n != 0 {
                return Err(mismatch());
            }
            let ks = config.spin_couplings();
            if ks.len() != n {
                return Err(mismatch());
            }
            let sum: f64 = ks
                .iter()
                .enumerate()
                .map(|(i, k)| {
                    let up = (bits >> (n - 1 - i)) & 1 == 1;
                    if up {
                        0.5 * k
                    } else {
                        -0.5 * k
                    }
                })
                .sum();
            Ok(sum - shift)
        }
    }
}

/// Displacement phase argument `w = Im(η conj(α e^{−iτ}))`; equals `α sin τ` for real α.
fn displacement_phase(alpha: C64, tau: f64) -> f64 {
    (eta(tau) * (alpha * C64::from_polar(1.0, -tau)).conj()).im
}

/// Exact state after scaled time `tau`.
pub fn evolve(config: &ProbeConfig, tau: f64) -> Result<BranchedState> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidInput(format!("tau must be finite and non-negative, got {tau}")));
    }
    let e = eta(tau);
    let t = tau - tau.sin();
    let w = displacement_phase(config.alpha, tau);
    let rotated = config.alpha * C64::from_polar(1.0, -tau);
    let branches = config
        .initial_amplitudes()?
        .into_iter()
        .map(|(label, c)| {
            let z = z_eigenvalue(label, config)?;
            Ok(CoherentBranch {
                label,
                amplitude: c * C64::from_polar(1.0, z * z * t + z * w),
                phi: rotated + e * z,
                z,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BranchedState {
        branches,
        tau,
        config: config.clone(),
    })
}

/// Analytic `∂_g` of every branch amplitude and field amplitude.
#[derive(Clone, Debug)]
pub struct BranchTangent {
    pub d_amplitude: Vec<C64>,
    pub d_phi: Vec<C64>,
}

pub fn d_dg(state: &BranchedState) -> BranchTangent {
    let tau = state.tau;
    let dz = -state.config.xi.cos();
    let t = tau - tau.sin();
    let w = displacement_phase(state.config.alpha, tau);
    let d_phi = eta(tau) * dz;
    BranchTangent {
        d_amplitude: state
            .branches
            .iter()
            .map(|b| b.amplitude * C64::new(0.0, dz * (2.0 * b.z * t + w)))
            .collect(),
        d_phi: vec![d_phi; state.branches.len()],
    }
}

fn spin_index(label: SpinLabel, config: &ProbeConfig) -> usize {
    match label {
        SpinLabel::Dicke { two_m } => ((two_m + config.n_spins as i32) / 2) as usize,
        SpinLabel::Bits(b) => b as usize,
    }
}

/// Largest spin count whose product basis is expanded explicitly.
const DENSE_BITS_LIMIT: usize = 30;

fn dense_spin_check(config: &ProbeConfig) -> Result<()> {
    if !config.uses_dicke_labels() && config.n_spins > DENSE_BITS_LIMIT {
        return Err(Error::Unsupported(format!(
            "dense product basis for {} spins",
            config.n_spins
        )));
    }
    Ok(())
}

/// `Σ_b A_b |l_b⟩ ⊗ |φ_b⟩` on the truncated space (spin-major ordering).
pub fn to_dense(state: &BranchedState, space: &FockSpace) -> Result<DenseState> {
    let config = &state.config;
    let fd = space.dim();
    dense_spin_check(config)?;
    let mut v = DVector::from_element(config.spin_dim() * fd, C64::new(0.0, 0.0));
    let mut deficit = 0.0;
    for b in &state.branches {
        let coh = coherent_state(b.phi, space)?;
        deficit += b.amplitude.norm_sqr() * coh.norm_deficit;
        let offset = spin_index(b.label, config) * fd;
        for n in 0..fd {
            v[offset + n] += b.amplitude * coh.amplitudes[n];
        }
    }
    DenseState::new(v, vec![config.spin_dim(), fd], deficit)
}

/// Dense image of a branch tangent, using `∂⟨n|φ⟩ = −Re(φ̄φ')⟨n|φ⟩ + φ'√n⟨n−1|φ⟩`.
pub fn tangent_to_dense(state: &BranchedState, tangent: &BranchTangent, space: &FockSpace) -> Result<DVector<C64>> {
    let config = &state.config;
    let fd = space.dim();
    dense_spin_check(config)?;
    let mut v = DVector::from_element(config.spin_dim() * fd, C64::new(0.0, 0.0));
    for (i, b) in state.branches.iter().enumerate() {
        let coh = coherent_state(b.phi, space)?.amplitudes;
        let dphi = tangent.d_phi[i];
        let shrink = -(b.phi.conj() * dphi).re;
        let offset = spin_index(b.label, config) * fd;
        for n in 0..fd {
            let mut dcoh = coh[n] * shrink;
            if n > 0 {
                dcoh += dphi * (n as f64).sqrt() * coh[n - 1];
            }
            v[offset + n] += tangent.d_amplitude[i] * coh[n] + b.amplitude * dcoh;
        }
    }
    if v.iter().any(|z| !z.is_finite()) {
        return Err(Error::InvalidInput("non-finite tangent".into()));
    }
    Ok(v)
}

/// Spin reduced state in the branch-label basis (ascending labels):
/// `ρ[a, b] = A_a conj(A_b) ⟨φ_b|φ_a⟩`.
pub fn spin_reduced_dm(state: &BranchedState) -> DensityMatrix {
    let br = &state.branches;
    let n = br.len();
    let m = DMatrix::from_fn(n, n, |a, b| {
        br[a].amplitude * br[b].amplitude.conj() * coherent_overlap(br[b].phi, br[a].phi)
    });
    DensityMatrix::new(m, vec![n]).expect("square by construction")
}

/// `∂_g` of [`spin_reduced_dm`].
pub fn spin_reduced_dm_dg(state: &BranchedState, tangent: &BranchTangent) -> DMatrix<C64> {
    let br = &state.branches;
    let n = br.len();
    DMatrix::from_fn(n, n, |a, b| {
        let (aa, ab) = (br[a].amplitude, br[b].amplitude.conj());
        let (da, db) = (tangent.d_amplitude[a], tangent.d_amplitude[b].conj());
        let o = coherent_overlap(br[b].phi, br[a].phi);
        let d_o = coherent_overlap_dg(br[b].phi, tangent.d_phi[b], br[a].phi, tangent.d_phi[a]);
        da * ab * o + aa * db * o + aa * ab * d_o
    })
}

/// Outcome of evolving a GHZ probe against a thermal field.
#[derive(Clone, Debug)]
pub struct ThermalCheck {
    /// Spin reduced state in the two-branch basis (`−N/2` first).
    pub spin: DensityMatrix,
    pub field: DensityMatrix,
    pub initial_field: DensityMatrix,
    /// `(e^{2iτ K g cos ξ}|−⟩ + |+⟩)/√2`, the expected spin state at `τ = 2πj`.
    pub spin_target: DVector<C64>,
    pub spin_fidelity: f64,
    pub field_fidelity: f64,
    pub cutoff: usize,
}

/// Cutoff such that the thermal tail `(n̄/(n̄+1))^{cutoff+1}` is below the norm tolerance,
/// widened for the largest branch displacement.
pub fn thermal_cutoff(n_bar: f64, max_displacement: f64) -> usize {
    let base = if n_bar > 0.0 {
        (NORM_TOLERANCE.ln() / (n_bar / (n_bar + 1.0)).ln()).ceil() as usize
    } else {
        0
    };
    base + crate::hilbert::fock_cutoff_for(max_displacement)
}

/// Evolves a GHZ probe with a thermal field of mean occupation `n_bar` by exact
/// per-spin-block propagation, then compares to the disentangled prediction.
pub fn thermal_evolution_check(config: &ProbeConfig, n_bar: f64, tau: f64, cutoff: Option<usize>) -> Result<ThermalCheck> {
    if config.initial_spin != InitialSpin::Ghz {
        return Err(Error::Unsupported("thermal evolution requires a GHZ probe".into()));
    }
    if config.alpha.norm() != 0.0 {
        return Err(Error::Unsupported("thermal evolution starts from an undisplaced thermal field".into()));
    }
    if !(n_bar >= 0.0) {
        return Err(Error::InvalidInput(format!("mean occupation {n_bar} is negative")));
    }
    let pure = evolve(config, 0.0)?;
    let zs: Vec<f64> = pure.branches.iter().map(|b| b.z).collect();
    let cs: Vec<C64> = pure.branches.iter().map(|b| b.amplitude).collect();
    let max_disp = zs.iter().fold(0.0f64, |m, z| m.max(2.0 * z.abs()));
    let cutoff = cutoff.unwrap_or_else(|| thermal_cutoff(n_bar, max_disp));
    let ratio = if n_bar > 0.0 { n_bar / (n_bar + 1.0) } else { 0.0 };
    let deficit = ratio.powf(cutoff as f64 + 1.0);
    if deficit > NORM_TOLERANCE {
        return Err(Error::Truncation { deficit, cutoff });
    }
    let space = FockSpace::new(cutoff);
    let d = space.dim();
    let weights: Vec<f64> = (0..d).map(|n| (1.0 - ratio) * ratio.powi(n as i32)).collect();
    let rho_f = DMatrix::from_diagonal(&DVector::from_iterator(d, weights.iter().map(|&w| C64::from(w))));

    // U_z = V e^{-iEτ} V^T for the real tridiagonal block H_z = n − z(a + a†)
    let unitaries: Vec<DMatrix<C64>> = zs
        .iter()
        .map(|&z| {
            let mut h = DMatrix::<f64>::zeros(d, d);
            for n in 0..d {
                h[(n, n)] = n as f64;
                if n + 1 < d {
                    let off = -z * ((n + 1) as f64).sqrt();
                    h[(n, n + 1)] = off;
                    h[(n + 1, n)] = off;
                }
            }
            let eig = h.symmetric_eigen();
            let v = eig.eigenvectors.map(C64::from);
            let phases = DVector::from_iterator(d, eig.eigenvalues.iter().map(|&e| C64::from_polar(1.0, -e * tau)));
            &v * DMatrix::from_diagonal(&phases) * v.transpose()
        })
        .collect();

    let evolved: Vec<DMatrix<C64>> = unitaries.iter().map(|u| u * &rho_f).collect();
    let nb = zs.len();
    let spin = DMatrix::from_fn(nb, nb, |a, b| {
        // Tr(U_a ρ U_b†) = Σ_ij (U_a ρ)_ij conj(U_b)_ij
        let tr: C64 = evolved[a].iter().zip(unitaries[b].iter()).map(|(x, y)| x * y.conj()).sum();
        cs[a] * cs[b].conj() * tr
    });
    let mut field = DMatrix::zeros(d, d);
    for a in 0..nb {
        field += (&evolved[a] * unitaries[a].adjoint()) * C64::from(cs[a].norm_sqr());
    }
    let spin = DensityMatrix::new(spin, vec![nb])?;
    let field = DensityMatrix::new(field, vec![d])?;
    let initial_field = DensityMatrix::new(rho_f, vec![d])?;

    let k_total = config.total_coupling();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let spin_target = DVector::from_vec(vec![
        C64::from_polar(h, 2.0 * tau * k_total * config.g * config.xi.cos()),
        C64::from(h),
    ]);
    let spin_fidelity = spin.fidelity_with_pure(&spin_target);
    let field_fidelity = field.fidelity(&initial_field)?;
    Ok(ThermalCheck {
        spin,
        field,
        initial_field,
        spin_target,
        spin_fidelity,
        field_fidelity,
        cutoff,
    })
}
