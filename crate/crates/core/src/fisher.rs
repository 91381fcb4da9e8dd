//! Quantum and classical Fisher information.
//!
//! Pure-state QFI works on any representation exposing `⟨ψ|ψ⟩`, `⟨ψ|∂ψ⟩` and
//! `⟨∂ψ|∂ψ⟩`. Joint spin-field channels are evaluated on GHZ-support states:
//! the spin is measured with a two-outcome projector `{Υ, Υ⊥}` and the field with
//! homodyne, heterodyne or photon-number detection.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::branch::{d_dg, spin_reduced_dm, spin_reduced_dm_dg, BranchTangent, BranchedState, SpinLabel};
use crate::error::{Error, Result};
use crate::hilbert::{coherent_overlap, hermitian_part, DenseState, DensityMatrix};

/// Eigenvalue-pair cutoff `λ_n + λ_m > threshold` for mixed-state QFI.
pub const EIGEN_THRESHOLD: f64 = 1e-12;
/// Largest norm deficit tolerated by [`qfi_pure`].
pub const PURE_DEFICIT_LIMIT: f64 = 1e-8;
/// Outcome probabilities this close to 0 or 1 carry no information in the binary formula.
pub const BOUNDARY: f64 = 1e-12;
/// The spin-angle search ignores outcomes this close to certainty, where
/// cancellation in `p` dominates the binary CFI.
const SEARCH_BOUNDARY: f64 = 1e-8;

const HERMITIAN_TOLERANCE: f64 = 1e-8;
const COVERAGE_ERROR: f64 = 1e-6;
const COVERAGE_WARN: f64 = 1e-8;

/// Two-outcome spin measurement `|Υ⟩ = cos(Θ/2)|N/2⟩ + sin(Θ/2)e^{−iΦ}|−N/2⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinPovm {
    pub theta: f64,
    pub phi: f64,
}

impl SpinPovm {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self {
            theta,
            phi: phi.rem_euclid(2.0 * std::f64::consts::PI),
        }
    }

    /// Components `[⟨−|Υ⟩, ⟨+|Υ⟩]` in the `(−N/2, +N/2)` branch order.
    pub fn vector(&self) -> [C64; 2] {
        let (s, c) = (0.5 * self.theta).sin_cos();
        [C64::from_polar(s, -self.phi), C64::from(c)]
    }

    /// Components of the orthogonal outcome `Υ⊥`.
    pub fn complement(&self) -> [C64; 2] {
        let (s, c) = (0.5 * self.theta).sin_cos();
        [C64::from_polar(-c, -self.phi), C64::from(s)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    QfiPure,
    QfiMixed,
    CfiSpin,
    CfiHomodyne,
    CfiHeterodyne,
    CfiPhotocount,
}

impl Channel {
    pub fn name(&self) -> &'static str {
        match self {
            Channel::QfiPure => "qfi_pure",
            Channel::QfiMixed => "qfi_mixed",
            Channel::CfiSpin => "cfi_spin",
            Channel::CfiHomodyne => "cfi_homodyne",
            Channel::CfiHeterodyne => "cfi_heterodyne",
            Channel::CfiPhotocount => "cfi_photocount",
        }
    }
}

/// Numerical settings used to produce a [`FisherResult`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Numerics {
    pub fd_step: Option<f64>,
    pub grid_points: Option<usize>,
    pub cutoff: Option<usize>,
    pub eigen_threshold: Option<f64>,
    pub homodyne_lambda: Option<f64>,
    pub coverage: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FisherResult {
    /// Headline value. For joint spin-field channels this is the single-outcome
    /// `∫(∂p)²/(p(1−p))` functional.
    pub value: f64,
    pub channel: Channel,
    pub angles: Option<SpinPovm>,
    /// Standard joint CFI `Σ_{Υ,Υ⊥} ∫(∂p)²/p`, for joint channels.
    pub standard: Option<f64>,
    pub standard_angles: Option<SpinPovm>,
    pub numerics: Numerics,
    pub diagnostics: Vec<String>,
}

impl FisherResult {
    fn new(value: f64, channel: Channel) -> Self {
        Self {
            value,
            channel,
            angles: None,
            standard: None,
            standard_angles: None,
            numerics: Numerics::default(),
            diagnostics: Vec::new(),
        }
    }
}

/// A pure state together with its `g`-derivative, seen through inner products.
pub trait PureTangent {
    fn norm_sqr(&self) -> f64;
    /// `⟨ψ|∂ψ⟩`.
    fn overlap(&self) -> C64;
    /// `⟨∂ψ|∂ψ⟩`.
    fn tangent_norm_sqr(&self) -> f64;
    fn norm_deficit(&self) -> f64;
}

/// Branch state with its analytic tangent; inner products in closed form.
pub struct BranchPure<'a> {
    pub state: &'a BranchedState,
    pub tangent: &'a BranchTangent,
}

impl PureTangent for BranchPure<'_> {
    fn norm_sqr(&self) -> f64 {
        self.state.norm_sqr()
    }

    fn overlap(&self) -> C64 {
        self.state
            .branches()
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let dphi = self.tangent.d_phi[i];
                let field = C64::new(0.0, (b.phi.conj() * dphi).im);
                b.amplitude.conj() * (self.tangent.d_amplitude[i] + b.amplitude * field)
            })
            .sum()
    }

    fn tangent_norm_sqr(&self) -> f64 {
        self.state
            .branches()
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let (a, da, dphi) = (b.amplitude, self.tangent.d_amplitude[i], self.tangent.d_phi[i]);
                let field = C64::new(0.0, (b.phi.conj() * dphi).im);
                let proj = (b.phi.conj() * dphi).re;
                let dfield = dphi.norm_sqr() * (1.0 + b.phi.norm_sqr()) - proj * proj;
                da.norm_sqr() + 2.0 * (da.conj() * a * field).re + a.norm_sqr() * dfield
            })
            .sum()
    }

    fn norm_deficit(&self) -> f64 {
        0.0
    }
}

/// Dense vector with a dense tangent.
pub struct DensePure<'a> {
    pub state: &'a DenseState,
    pub tangent: &'a DVector<C64>,
}

impl PureTangent for DensePure<'_> {
    fn norm_sqr(&self) -> f64 {
        self.state.norm_sqr()
    }

    fn overlap(&self) -> C64 {
        self.state.amplitudes().dotc(self.tangent)
    }

    fn tangent_norm_sqr(&self) -> f64 {
        self.tangent.norm_squared()
    }

    fn norm_deficit(&self) -> f64 {
        self.state.norm_deficit()
    }
}

/// `4[⟨∂ψ|∂ψ⟩ − |⟨ψ|∂ψ⟩|²]`.
pub fn qfi_pure(p: &impl PureTangent) -> Result<FisherResult> {
    let deficit = p.norm_deficit().max((1.0 - p.norm_sqr()).abs());
    if deficit > PURE_DEFICIT_LIMIT {
        return Err(Error::Truncation { deficit, cutoff: 0 });
    }
    let raw = 4.0 * (p.tangent_norm_sqr() - p.overlap().norm_sqr());
    let mut r = FisherResult::new(raw.max(0.0), Channel::QfiPure);
    if raw < 0.0 {
        r.diagnostics.push(format!("negative round-off {raw:.3e} clamped to 0"));
    }
    Ok(r)
}

/// Full spin-mechanical QFI of a branch state via its analytic tangent.
pub fn qfi_branch(state: &BranchedState) -> Result<FisherResult> {
    let tangent = d_dg(state);
    qfi_pure(&BranchPure { state, tangent: &tangent })
}

/// Mixed-state QFI `2 Σ |⟨λ_m|∂ρ|λ_n⟩|²/(λ_n + λ_m)` over pairs above `threshold`.
pub fn qfi_mixed(rho: &DensityMatrix, drho: &DMatrix<C64>, threshold: f64) -> Result<FisherResult> {
    if drho.nrows() != rho.dim() || drho.ncols() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "derivative is {}x{}, state has dimension {}",
            drho.nrows(),
            drho.ncols(),
            rho.dim()
        )));
    }
    let herm = rho.hermiticity_error();
    if herm > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian(herm));
    }
    let dherm = (drho - drho.adjoint()).camax();
    if dherm > HERMITIAN_TOLERANCE * drho.camax().max(1.0) {
        return Err(Error::NotHermitian(dherm));
    }
    let eig = hermitian_part(rho.matrix()).symmetric_eigen();
    let v = &eig.eigenvectors;
    let d = v.adjoint() * hermitian_part(drho) * v;
    let lam = &eig.eigenvalues;
    let n = lam.len();
    let mut q = 0.0;
    let mut skipped = 0usize;
    for i in 0..n {
        for j in 0..n {
            let s = lam[i] + lam[j];
            if s > threshold {
                q += d[(i, j)].norm_sqr() / s;
            } else {
                skipped += 1;
            }
        }
    }
    let mut r = FisherResult::new(2.0 * q, Channel::QfiMixed);
    r.numerics.eigen_threshold = Some(threshold);
    r.diagnostics.push(format!("{skipped} eigenvalue pairs below threshold"));
    Ok(r)
}

/// QFI of the spin subsystem of a branch state.
pub fn qfi_spin(state: &BranchedState) -> Result<FisherResult> {
    let tangent = d_dg(state);
    let rho = spin_reduced_dm(state);
    let drho = spin_reduced_dm_dg(state, &tangent);
    qfi_mixed(&rho, &drho, EIGEN_THRESHOLD)
}

/// `(∂p)²/(p(1−p))`, or 0 with a diagnostic when `p` is pinned to 0 or 1.
pub fn cfi_binary(p: f64, dp: f64) -> (f64, Option<String>) {
    if p < BOUNDARY || p > 1.0 - BOUNDARY {
        return (0.0, Some(format!("outcome probability {p:.3e} at the boundary")));
    }
    (dp * dp / (p * (1.0 - p)), None)
}

/// The two GHZ-support branches `(−N/2, +N/2)` of a state, rejecting anything else.
fn ghz_pair(state: &BranchedState) -> Result<[usize; 2]> {
    let n = state.config().n_spins;
    let all_up = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut low = None;
    let mut high = None;
    for (i, b) in state.branches().iter().enumerate() {
        match b.label {
            SpinLabel::Dicke { two_m } if two_m == -(n as i32) => low = Some(i),
            SpinLabel::Dicke { two_m } if two_m == n as i32 => high = Some(i),
            SpinLabel::Bits(0) => low = Some(i),
            SpinLabel::Bits(x) if x == all_up => high = Some(i),
            _ => {
                if b.amplitude.norm() > 1e-12 {
                    return Err(Error::Unsupported(
                        "spin POVM needs a state supported on m = ±N/2".into(),
                    ));
                }
            }
        }
    }
    match (low, high) {
        (Some(l), Some(h)) => Ok([l, h]),
        _ => Err(Error::Unsupported("state lacks one of the m = ±N/2 branches".into())),
    }
}

/// Spin reduced state on the `(−N/2, +N/2)` support and its derivative.
struct SpinPair {
    rho: [[C64; 2]; 2],
    drho: [[C64; 2]; 2],
}

impl SpinPair {
    fn new(state: &BranchedState) -> Result<Self> {
        let idx = ghz_pair(state)?;
        let tangent = d_dg(state);
        let rho = spin_reduced_dm(state);
        let drho = spin_reduced_dm_dg(state, &tangent);
        let pick = |m: &DMatrix<C64>| [[m[(idx[0], idx[0])], m[(idx[0], idx[1])]], [m[(idx[1], idx[0])], m[(idx[1], idx[1])]]];
        Ok(Self {
            rho: pick(rho.matrix()),
            drho: pick(&drho),
        })
    }

    fn quad(m: &[[C64; 2]; 2], u: &[C64; 2]) -> f64 {
        let mut s = C64::new(0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                s += u[a].conj() * m[a][b] * u[b];
            }
        }
        s.re
    }

    fn p_dp(&self, povm: &SpinPovm) -> (f64, f64) {
        let u = povm.vector();
        (Self::quad(&self.rho, &u), Self::quad(&self.drho, &u))
    }
}

/// Spin-POVM CFI at fixed angles.
pub fn cfi_spin(state: &BranchedState, povm: SpinPovm) -> Result<FisherResult> {
    let pair = SpinPair::new(state)?;
    let (p, dp) = pair.p_dp(&povm);
    let (v, diag) = cfi_binary(p, dp);
    let mut r = FisherResult::new(v, Channel::CfiSpin);
    r.angles = Some(povm);
    r.diagnostics.extend(diag);
    Ok(r)
}

/// Maximizes `f` on `[a, b]` by golden-section search.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Grid-then-golden maximization over a periodic angle.
fn maximize_periodic(f: &impl Fn(f64) -> f64, points: usize, tol: f64) -> (f64, f64) {
    let step = 2.0 * std::f64::consts::PI / points as f64;
    let (mut best_x, mut best_v) = (0.0, f64::MIN);
    for i in 0..points {
        let x = step * i as f64;
        let v = f(x);
        if v > best_v {
            best_x = x;
            best_v = v;
        }
    }
    let (x, v) = golden_max(f, best_x - step, best_x + step, tol);
    if v >= best_v {
        (x, v)
    } else {
        (best_x, best_v)
    }
}

/// Maximizes the spin-POVM CFI. The `(Θ, Φ)` grid check must find its maximum
/// on the `Θ = π/2` line; the azimuth is then refined to 1e-8.
pub fn optimize_spin_angles(state: &BranchedState) -> Result<FisherResult> {
    use std::f64::consts::PI;
    let pair = SpinPair::new(state)?;
    let value = |theta: f64, phi: f64| {
        let (p, dp) = pair.p_dp(&SpinPovm::new(theta, phi));
        if p.min(1.0 - p) < SEARCH_BOUNDARY {
            0.0
        } else {
            cfi_binary_value((p, dp))
        }
    };
    let (mut grid_best, mut grid_theta) = (f64::MIN, 0.0);
    for i in 0..61 {
        let theta = PI * i as f64 / 60.0;
        for j in 0..181 {
            let v = value(theta, 2.0 * PI * j as f64 / 181.0);
            if v > grid_best {
                grid_best = v;
                grid_theta = theta;
            }
        }
    }
    let f = |phi: f64| value(PI / 2.0, phi);
    let (phi, best) = maximize_periodic(&f, 181, 1e-8);
    let mut r = FisherResult::new(best, Channel::CfiSpin);
    r.angles = Some(SpinPovm::new(PI / 2.0, phi));
    r.numerics.grid_points = Some(181);
    if grid_best > best * (1.0 + 1e-9) + 1e-14 {
        r.diagnostics.push(format!(
            "grid maximum {grid_best:.6e} at theta = {grid_theta:.6} exceeds the theta = pi/2 line"
        ));
    }
    Ok(r)
}

fn cfi_binary_value((p, dp): (f64, f64)) -> f64 {
    cfi_binary(p, dp).0
}

/// Per-outcome field amplitudes `⟨y|φ_a⟩` and their `g`-derivatives with quadrature weights.
#[derive(Clone, Debug)]
pub struct FieldTable {
    weights: Vec<f64>,
    /// `A_a ⟨y|φ_a⟩` for the low and high branch.
    amp: Vec<[C64; 2]>,
    /// `∂_g (A_a ⟨y|φ_a⟩)`.
    damp: Vec<[C64; 2]>,
}

struct PairData {
    amp: [C64; 2],
    damp: [C64; 2],
    phi: [C64; 2],
    dphi: [C64; 2],
}

fn pair_data(state: &BranchedState) -> Result<PairData> {
    let idx = ghz_pair(state)?;
    let t = d_dg(state);
    let b = state.branches();
    Ok(PairData {
        amp: [b[idx[0]].amplitude, b[idx[1]].amplitude],
        damp: [t.d_amplitude[idx[0]], t.d_amplitude[idx[1]]],
        phi: [b[idx[0]].phi, b[idx[1]].phi],
        dphi: [t.d_phi[idx[0]], t.d_phi[idx[1]]],
    })
}

impl FieldTable {
    /// A single field outcome with unit amplitude: the spin-only limit.
    pub fn trivial(state: &BranchedState) -> Result<Self> {
        let d = pair_data(state)?;
        Ok(Self {
            weights: vec![1.0],
            amp: vec![d.amp],
            damp: vec![d.damp],
        })
    }

    fn from_fn(d: &PairData, weights: Vec<f64>, f: impl Fn(usize, usize, C64, C64) -> (C64, C64)) -> Self {
        let mut amp = Vec::with_capacity(weights.len());
        let mut damp = Vec::with_capacity(weights.len());
        for i in 0..weights.len() {
            let mut a = [C64::new(0.0, 0.0); 2];
            let mut da = [C64::new(0.0, 0.0); 2];
            for s in 0..2 {
                let (v, dv) = f(i, s, d.phi[s], d.dphi[s]);
                a[s] = d.amp[s] * v;
                da[s] = d.damp[s] * v + d.amp[s] * dv;
            }
            amp.push(a);
            damp.push(da);
        }
        Self { weights, amp, damp }
    }

    /// `Σ_y w_y Σ_a |A_a⟨y|φ_a⟩|²`, the probability mass captured by the grid.
    pub fn coverage(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.amp)
            .map(|(w, a)| w * (a[0].norm_sqr() + a[1].norm_sqr()))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `(literal, standard)` joint functionals at fixed angles.
    pub fn evaluate(&self, povm: &SpinPovm) -> (f64, f64) {
        let u = povm.vector();
        let v = povm.complement();
        let (mut literal, mut standard) = (0.0, 0.0);
        for i in 0..self.weights.len() {
            let (a, da) = (&self.amp[i], &self.damp[i]);
            let w = self.weights[i];
            for (k, vec) in [u, v].iter().enumerate() {
                let psi = vec[0].conj() * a[0] + vec[1].conj() * a[1];
                let dpsi = vec[0].conj() * da[0] + vec[1].conj() * da[1];
                let p = psi.norm_sqr();
                if p < 1e-300 {
                    continue;
                }
                let dp = 2.0 * (psi.conj() * dpsi).re;
                standard += w * dp * dp / p;
                if k == 0 {
                    literal += w * cfi_binary(p, dp).0;
                }
            }
        }
        (literal, standard)
    }
}

/// How spin angles are chosen for joint channels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AngleChoice {
    Fixed(SpinPovm),
    Optimize,
}

/// Maximizes a smooth function of `(Θ, Φ)`: grid search and alternating golden
/// sections on the cheap `coarse` objective, then a short polish on `fine`.
fn maximize_angles(coarse: impl Fn(&SpinPovm) -> f64, fine: impl Fn(&SpinPovm) -> f64) -> (SpinPovm, f64) {
    use std::f64::consts::PI;
    let (nt, np) = (9, 24);
    let mut best = (SpinPovm::new(PI / 2.0, 0.0), f64::MIN);
    for i in 0..nt {
        let theta = PI * i as f64 / (nt - 1) as f64;
        for j in 0..np {
            let povm = SpinPovm::new(theta, 2.0 * PI * j as f64 / np as f64);
            let v = coarse(&povm);
            if v > best.1 {
                best = (povm, v);
            }
        }
    }
    let polish = |f: &dyn Fn(&SpinPovm) -> f64, start: (f64, f64), mut dt: f64, mut dp: f64, rounds: usize, tol: f64| {
        let (mut theta, mut phi) = start;
        let mut value = f(&SpinPovm::new(theta, phi));
        for _ in 0..rounds {
            let (t, v) = golden_max(|t| f(&SpinPovm::new(t, phi)), (theta - dt).max(0.0), (theta + dt).min(PI), tol);
            if v >= value {
                theta = t;
                value = v;
            }
            let (p, v) = golden_max(|p| f(&SpinPovm::new(theta, p)), phi - dp, phi + dp, tol);
            if v >= value {
                phi = p;
                value = v;
            }
            dt *= 0.5;
            dp *= 0.5;
        }
        (theta, phi, value)
    };
    let (t, p, _) = polish(&coarse, (best.0.theta, best.0.phi), PI / (nt - 1) as f64, 2.0 * PI / np as f64, 4, 1e-5);
    let (t, p, v) = polish(&fine, (t, p), 0.02, 0.02, 2, 1e-8);
    (SpinPovm::new(t, p), v)
}

/// Joint CFI over a prepared field table; `coarse` (if given) drives the angle search.
pub fn joint_cfi(table: &FieldTable, coarse: Option<&FieldTable>, angles: AngleChoice, channel: Channel) -> Result<FisherResult> {
    let coverage = table.coverage();
    if (coverage - 1.0).abs() > COVERAGE_ERROR {
        return Err(Error::GridCoverage { coverage });
    }
    let mut r = FisherResult::new(0.0, channel);
    r.numerics.coverage = Some(coverage);
    r.numerics.grid_points = Some(table.len());
    if (coverage - 1.0).abs() > COVERAGE_WARN {
        r.diagnostics.push(format!("grid coverage {coverage:.12}"));
    }
    match angles {
        AngleChoice::Fixed(povm) => {
            let (l, s) = table.evaluate(&povm);
            r.value = l;
            r.standard = Some(s);
            r.angles = Some(povm);
            r.standard_angles = Some(povm);
        }
        AngleChoice::Optimize => {
            let search = coarse.unwrap_or(table);
            let (pl, l) = maximize_angles(|p| search.evaluate(p).0, |p| table.evaluate(p).0);
            let (ps, s) = maximize_angles(|p| search.evaluate(p).1, |p| table.evaluate(p).1);
            r.value = l;
            r.standard = Some(s);
            r.angles = Some(pl);
            r.standard_angles = Some(ps);
        }
    }
    Ok(r)
}

/// Homodyne phase selection.
#[derive(Clone, Debug, PartialEq)]
pub enum LambdaChoice {
    Fixed(f64),
    /// Report the best of several phases.
    Sweep(Vec<f64>),
}

impl LambdaChoice {
    /// `{0, π/4, π/2, 3π/4}`.
    pub fn standard_sweep() -> Self {
        use std::f64::consts::PI;
        LambdaChoice::Sweep(vec![0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HomodyneGrid {
    pub lambda: LambdaChoice,
    /// `None` selects `±(√2 max|φ| + 6)`.
    pub half_width: Option<f64>,
    pub points: usize,
}

impl Default for HomodyneGrid {
    fn default() -> Self {
        Self {
            lambda: LambdaChoice::Fixed(0.0),
            half_width: None,
            points: 2001,
        }
    }
}

/// `⟨x_λ|φ⟩ = π^{−1/4} exp(−x²/2 − |φ|²/2 + √2 x φe^{−iλ} − φ²e^{−2iλ}/2)` and its derivative.
pub fn homodyne_amplitude(x: f64, lambda: f64, phi: C64, dphi: C64) -> (C64, C64) {
    let rot = C64::from_polar(1.0, -lambda);
    let rot2 = rot * rot;
    let sqrt2 = std::f64::consts::SQRT_2;
    let expo = -0.5 * x * x - 0.5 * phi.norm_sqr() + sqrt2 * x * phi * rot - 0.5 * phi * phi * rot2;
    let v = expo.exp() * std::f64::consts::PI.powf(-0.25);
    let d = -(phi.conj() * dphi).re + sqrt2 * x * dphi * rot - phi * dphi * rot2;
    (v, v * d)
}

fn homodyne_table(state: &BranchedState, lambda: f64, grid: &HomodyneGrid) -> Result<FieldTable> {
    let d = pair_data(state)?;
    let max_phi = d.phi[0].norm().max(d.phi[1].norm());
    let hw = grid.half_width.unwrap_or(std::f64::consts::SQRT_2 * max_phi + 6.0);
    let n = grid.points.max(3);
    let h = 2.0 * hw / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| -hw + h * i as f64).collect();
    let weights = (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h }).collect();
    Ok(FieldTable::from_fn(&d, weights, |i, _, phi, dphi| homodyne_amplitude(xs[i], lambda, phi, dphi)))
}

/// Joint spin ⊗ homodyne CFI.
pub fn cfi_homodyne(state: &BranchedState, grid: &HomodyneGrid, angles: AngleChoice) -> Result<FisherResult> {
    let lambdas = match &grid.lambda {
        LambdaChoice::Fixed(l) => vec![*l],
        LambdaChoice::Sweep(ls) => ls.clone(),
    };
    let mut best: Option<FisherResult> = None;
    let mut best_standard = (f64::MIN, None, 0.0);
    for &lambda in &lambdas {
        let table = homodyne_table(state, lambda, grid)?;
        let coarse = homodyne_table(state, lambda, &HomodyneGrid { points: (grid.points / 5).max(201), ..grid.clone() })?;
        let mut r = joint_cfi(&table, Some(&coarse), angles, Channel::CfiHomodyne)?;
        r.numerics.homodyne_lambda = Some(lambda);
        let s = r.standard.unwrap_or(0.0);
        if s > best_standard.0 {
            best_standard = (s, r.standard_angles, lambda);
        }
        if best.as_ref().is_none_or(|b| r.value > b.value) {
            best = Some(r);
        }
    }
    let mut r = best.expect("at least one homodyne phase");
    r.standard = Some(best_standard.0);
    r.standard_angles = best_standard.1;
    if lambdas.len() > 1 {
        r.diagnostics.push(format!("standard variant maximized at lambda = {:.6}", best_standard.2));
    }
    Ok(r)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeterodyneGrid {
    /// `None` selects `max|φ| + 5`.
    pub half_width: Option<f64>,
    pub points_per_axis: usize,
}

impl Default for HeterodyneGrid {
    fn default() -> Self {
        Self {
            half_width: None,
            points_per_axis: 201,
        }
    }
}

fn heterodyne_table(d: &PairData, half_width: f64, n: usize) -> FieldTable {
    let h = 2.0 * half_width / n as f64;
    let coord = |i: usize| -half_width + h * (i as f64 + 0.5);
    let zetas: Vec<C64> = (0..n * n).map(|i| C64::new(coord(i / n), coord(i % n))).collect();
    let w = h * h / std::f64::consts::PI;
    FieldTable::from_fn(d, vec![w; n * n], |i, _, phi, dphi| {
        let zeta = zetas[i];
        let v = coherent_overlap(zeta, phi);
        (v, v * (-(phi.conj() * dphi).re + zeta.conj() * dphi))
    })
}

/// Joint spin ⊗ heterodyne CFI with `p = |…⟨ζ|φ⟩|²/π` on a midpoint grid.
pub fn cfi_heterodyne(state: &BranchedState, grid: &HeterodyneGrid, angles: AngleChoice) -> Result<FisherResult> {
    let d = pair_data(state)?;
    let max_phi = d.phi[0].norm().max(d.phi[1].norm());
    let hw = grid.half_width.unwrap_or(max_phi + 5.0);
    let n = grid.points_per_axis.max(2);
    let table = heterodyne_table(&d, hw, n);
    let coarse = heterodyne_table(&d, hw, (n / 3).max(41).min(n));
    joint_cfi(&table, Some(&coarse), angles, Channel::CfiHeterodyne)
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct PhotocountGrid {
    /// `None` selects the Fock cutoff heuristic for the largest branch amplitude.
    pub n_max: Option<usize>,
}

/// Joint spin ⊗ photon-number CFI.
pub fn cfi_photocount(state: &BranchedState, grid: &PhotocountGrid, angles: AngleChoice) -> Result<FisherResult> {
    let d = pair_data(state)?;
    let max_phi = d.phi[0].norm().max(d.phi[1].norm());
    let n_max = grid.n_max.unwrap_or_else(|| crate::hilbert::fock_cutoff_for(max_phi));
    // ⟨n|φ⟩ by recurrence, with ∂⟨n|φ⟩ = −Re(φ̄φ')⟨n|φ⟩ + φ'√n⟨n−1|φ⟩
    let column = |phi: C64, dphi: C64| {
        let mut v = vec![C64::new(0.0, 0.0); n_max + 1];
        let mut dv = v.clone();
        v[0] = C64::from((-0.5 * phi.norm_sqr()).exp());
        let shrink = -(phi.conj() * dphi).re;
        dv[0] = v[0] * shrink;
        for n in 1..=n_max {
            v[n] = v[n - 1] * phi / (n as f64).sqrt();
            dv[n] = v[n] * shrink + dphi * (n as f64).sqrt() * v[n - 1];
        }
        (v, dv)
    };
    let cols = [column(d.phi[0], d.dphi[0]), column(d.phi[1], d.dphi[1])];
    let table = FieldTable::from_fn(&d, vec![1.0; n_max + 1], |n, s, _, _| (cols[s].0[n], cols[s].1[n]));
    let mut r = joint_cfi(&table, None, angles, Channel::CfiPhotocount)?;
    r.numerics.cutoff = Some(n_max);
    Ok(r)
}

/// Removes the `i Im⟨ψ|t⟩ ψ` gauge component so tangents from different phase
/// conventions can be compared.
pub fn gauge_tangent(psi: &DVector<C64>, tangent: &DVector<C64>) -> DVector<C64> {
    let ov = psi.dotc(tangent);
    tangent - psi * C64::new(0.0, ov.im / psi.norm_squared())
}

/// Central difference `(ψ(g0+h) − ψ(g0−h))/(2h)` with each shifted state rephased
/// so that `⟨ψ(g0)|ψ(g0±h)⟩` is real and positive.
pub fn finite_diff_tangent(factory: impl Fn(f64) -> Result<DVector<C64>>, g0: f64, h: f64) -> Result<DVector<C64>> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("finite-difference step {h} must be positive")));
    }
    let psi0 = factory(g0)?;
    let aligned = |g: f64| -> Result<DVector<C64>> {
        let psi = factory(g)?;
        let ov = psi0.dotc(&psi);
        let phase = if ov.norm() > 0.0 { ov.conj() / ov.norm() } else { C64::new(1.0, 0.0) };
        Ok(psi * phase)
    };
    let plus = aligned(g0 + h)?;
    let minus = aligned(g0 - h)?;
    Ok((plus - minus) / C64::from(2.0 * h))
}

/// Central difference of a matrix-valued function, optionally Richardson-extrapolated
/// with the `2h` stencil: `(4 D_h − D_{2h})/3`.
pub fn finite_diff_matrix(
    factory: impl Fn(f64) -> Result<DMatrix<C64>>,
    g0: f64,
    h: f64,
    richardson: bool,
) -> Result<DMatrix<C64>> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("finite-difference step {h} must be positive")));
    }
    let d_h = (factory(g0 + h)? - factory(g0 - h)?) / C64::from(2.0 * h);
    if !richardson {
        return Ok(d_h);
    }
    let d_2h = (factory(g0 + 2.0 * h)? - factory(g0 - 2.0 * h)?) / C64::from(4.0 * h);
    Ok((d_h * C64::from(4.0) - d_2h) / C64::from(3.0))
}
