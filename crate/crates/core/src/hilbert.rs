//! Finite-dimensional Hilbert-space primitives.
//!
//! Basis conventions are fixed throughout the crate:
//!
//! * Fock states `|0⟩..|cutoff⟩` in ascending order.
//! * Dicke states `|N/2, m⟩` in ascending `m`, index `i` carries `m = i - N/2`.
//! * Composite spin⊗field vectors are spin-major: `index = spin * fock_dim + n`.
//!
//! States are never renormalized behind the caller's back. Truncated coherent
//! states report their Poisson-tail deficit instead.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Largest norm deficit a truncated coherent state may carry before it is rejected.
pub const NORM_TOLERANCE: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Fock cutoff that keeps the Poisson tail of `|φ|` below ~1e-12 for desk-scale amplitudes.
pub fn fock_cutoff_for(phi_max: f64) -> usize {
    let r = phi_max.abs();
    (r * r + 8.0 * r + 20.0).ceil() as usize
}

/// Truncated single-mode Fock space `span{|0⟩, …, |cutoff⟩}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockSpace {
    cutoff: usize,
}

impl FockSpace {
    pub fn new(cutoff: usize) -> Self {
        Self { cutoff }
    }

    /// Space sized by [`fock_cutoff_for`].
    pub fn for_amplitude(phi_max: f64) -> Self {
        Self::new(fock_cutoff_for(phi_max))
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.cutoff + 1
    }

    pub fn annihilation(&self) -> DMatrix<C64> {
        let d = self.dim();
        let mut a = DMatrix::zeros(d, d);
        for n in 1..d {
            a[(n - 1, n)] = C64::from((n as f64).sqrt());
        }
        a
    }

    pub fn creation(&self) -> DMatrix<C64> {
        self.annihilation().adjoint()
    }

    pub fn number(&self) -> DMatrix<C64> {
        DMatrix::from_diagonal(&DVector::from_fn(self.dim(), |n, _| C64::from(n as f64)))
    }
}

/// Symmetric (maximal spin `s = N/2`) subspace of `N` spin-1/2 particles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DickeSpace {
    n_spins: usize,
}

impl DickeSpace {
    pub fn new(n_spins: usize) -> Result<Self> {
        if n_spins == 0 {
            return Err(Error::InvalidInput("Dicke space needs at least one spin".into()));
        }
        Ok(Self { n_spins })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.n_spins + 1
    }

    /// Total spin `s = N/2`.
    pub fn spin(&self) -> f64 {
        self.n_spins as f64 / 2.0
    }

    /// Magnetic quantum number of basis index `i`.
    pub fn m(&self, index: usize) -> f64 {
        index as f64 - self.spin()
    }

    /// Basis index of `m = two_m / 2`, if it lies in the space.
    pub fn index_of(&self, two_m: i32) -> Option<usize> {
        let shifted = two_m + self.n_spins as i32;
        if shifted < 0 || shifted % 2 != 0 || shifted / 2 > self.n_spins as i32 {
            return None;
        }
        Some((shifted / 2) as usize)
    }

    /// `⟨m-1|S₋|m⟩ = √(s(s+1) − m(m−1))`.
    pub fn lowering_coefficient(&self, index: usize) -> f64 {
        let s = self.spin();
        let m = self.m(index);
        (s * (s + 1.0) - m * (m - 1.0)).max(0.0).sqrt()
    }
}

/// Collective spin operators in the ascending-`m` Dicke basis.
#[derive(Clone, Debug)]
pub struct DickeOperators {
    pub sz: DMatrix<C64>,
    pub s_plus: DMatrix<C64>,
    pub s_minus: DMatrix<C64>,
}

impl DickeOperators {
    pub fn sx(&self) -> DMatrix<C64> {
        (&self.s_plus + &self.s_minus) * C64::from(0.5)
    }

    pub fn sy(&self) -> DMatrix<C64> {
        (&self.s_plus - &self.s_minus) * C64::new(0.0, -0.5)
    }
}

pub fn dicke_operators(space: &DickeSpace) -> DickeOperators {
    let d = space.dim();
    let sz = DMatrix::from_diagonal(&DVector::from_fn(d, |i, _| C64::from(space.m(i))));
    let mut s_minus = DMatrix::zeros(d, d);
    for i in 1..d {
        s_minus[(i - 1, i)] = C64::from(space.lowering_coefficient(i));
    }
    let s_plus = s_minus.adjoint();
    DickeOperators { sz, s_plus, s_minus }
}

/// Truncated coherent-state vector together with its Poisson-tail deficit.
#[derive(Clone, Debug)]
pub struct CoherentVector {
    pub amplitudes: DVector<C64>,
    pub norm_deficit: f64,
}

/// `Σ_{n > cutoff} e^{-μ} μⁿ / n!`, summed directly so it stays accurate far below 1e-16.
pub fn poisson_tail(mean: f64, cutoff: usize) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    // log of the first omitted term
    let n0 = cutoff + 1;
    let mut log_term = -mean + n0 as f64 * mean.ln() - statrs::function::gamma::ln_gamma(n0 as f64 + 1.0);
    let mut sum = 0.0;
    let mut n = n0;
    loop {
        let term = log_term.exp();
        sum += term;
        n += 1;
        log_term += mean.ln() - (n as f64).ln();
        // terms decrease geometrically once n > mean
        if (n as f64) > mean && (term < sum * 1e-17 || term < 1e-300) {
            break;
        }
        if n > cutoff + 100_000 {
            break;
        }
    }
    sum.min(1.0)
}

/// Components `e^{-|α|²/2} αⁿ/√n!` up to the cutoff, without a truncation check.
pub fn coherent_state_truncated(alpha: C64, space: &FockSpace) -> CoherentVector {
    let d = space.dim();
    let mut v = DVector::from_element(d, ZERO);
    let mut c = C64::from((-0.5 * alpha.norm_sqr()).exp());
    v[0] = c;
    for n in 1..d {
        c = c * alpha / (n as f64).sqrt();
        v[n] = c;
    }
    CoherentVector {
        amplitudes: v,
        norm_deficit: poisson_tail(alpha.norm_sqr(), space.cutoff()),
    }
}

/// Truncated coherent state `|α⟩`, rejected when the Poisson tail exceeds [`NORM_TOLERANCE`].
pub fn coherent_state(alpha: C64, space: &FockSpace) -> Result<CoherentVector> {
    let v = coherent_state_truncated(alpha, space);
    if v.norm_deficit > NORM_TOLERANCE {
        return Err(Error::Truncation {
            deficit: v.norm_deficit,
            cutoff: space.cutoff(),
        });
    }
    Ok(v)
}

/// `⟨β|γ⟩ = exp(−|β|²/2 − |γ|²/2 + β̄γ)`.
pub fn coherent_overlap(beta: C64, gamma: C64) -> C64 {
    (-0.5 * beta.norm_sqr() - 0.5 * gamma.norm_sqr() + beta.conj() * gamma).exp()
}

/// Derivative of [`coherent_overlap`] along a parameter that moves `β` and `γ`
/// with velocities `dbeta` and `dgamma`.
pub fn coherent_overlap_dg(beta: C64, dbeta: C64, gamma: C64, dgamma: C64) -> C64 {
    let d_exponent = -(beta.conj() * dbeta).re - (gamma.conj() * dgamma).re
        + dbeta.conj() * gamma
        + beta.conj() * dgamma;
    coherent_overlap(beta, gamma) * d_exponent
}

/// Pure state on a tensor-product space.
#[derive(Clone, Debug)]
pub struct DenseState {
    amplitudes: DVector<C64>,
    dims: Vec<usize>,
    norm_deficit: f64,
}

impl DenseState {
    pub fn new(amplitudes: DVector<C64>, dims: Vec<usize>, norm_deficit: f64) -> Result<Self> {
        let total: usize = dims.iter().product();
        if total != amplitudes.len() {
            return Err(Error::DimensionMismatch(format!(
                "dims {:?} imply {} amplitudes, got {}",
                dims,
                total,
                amplitudes.len()
            )));
        }
        Ok(Self {
            amplitudes,
            dims,
            norm_deficit,
        })
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Truncation deficit recorded when the state was built.
    pub fn norm_deficit(&self) -> f64 {
        self.norm_deficit
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &DenseState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn to_density_matrix(&self) -> DensityMatrix {
        DensityMatrix::from_pure(&self.amplitudes, self.dims.clone())
            .expect("dims already validated")
    }
}

/// Density operator on a tensor-product space (subsystem order as in `dims`).
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
    dims: Vec<usize>,
}

impl DensityMatrix {
    pub fn new(matrix: DMatrix<C64>, dims: Vec<usize>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let total: usize = dims.iter().product();
        if total != matrix.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "dims {:?} imply dimension {}, matrix has {}",
                dims,
                total,
                matrix.nrows()
            )));
        }
        Ok(Self { matrix, dims })
    }

    pub fn from_pure(psi: &DVector<C64>, dims: Vec<usize>) -> Result<Self> {
        Self::new(psi * psi.adjoint(), dims)
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `Tr ρ²` (uses Hermiticity: sum of squared moduli).
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..=j {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = hermitian_part(&self.matrix)
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Checks Hermiticity, unit trace and positivity, each to `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > tol {
            return Err(Error::NotHermitian(herm));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidInput(format!("trace {tr} differs from 1")));
        }
        let min = self.min_eigenvalue();
        if min < -tol {
            return Err(Error::InvalidInput(format!(
                "minimum eigenvalue {min:.3e} is negative"
            )));
        }
        Ok(())
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity_with_pure(&self, psi: &DVector<C64>) -> f64 {
        (psi.adjoint() * &self.matrix * psi)[(0, 0)].re
    }

    /// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
    pub fn fidelity(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "fidelity between dimensions {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        let sqrt_rho = hermitian_sqrt(&self.matrix);
        let inner = &sqrt_rho * &other.matrix * &sqrt_rho;
        let root_trace: f64 = hermitian_part(&inner)
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|&l| l.max(0.0).sqrt())
            .sum();
        Ok(root_trace * root_trace)
    }

    /// `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "trace distance between dimensions {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        let diff = &self.matrix - &other.matrix;
        let sum: f64 = hermitian_part(&diff)
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|l| l.abs())
            .sum();
        Ok(0.5 * sum)
    }
}

/// `(M + M†)/2`.
pub fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::from(0.5)
}

/// Principal square root of a Hermitian positive semidefinite matrix; negative
/// round-off eigenvalues are clamped to zero.
pub fn hermitian_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = hermitian_part(m).symmetric_eigen();
    let v = &eig.eigenvectors;
    let roots = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| C64::from(l.max(0.0).sqrt())),
    );
    v * DMatrix::from_diagonal(&roots) * v.adjoint()
}

/// Reduced state of subsystem `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: usize) -> Result<DensityMatrix> {
    let dims = rho.dims();
    if keep >= dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "subsystem {keep} out of range for dims {dims:?}"
        )));
    }
    let d_keep = dims[keep];
    let inner: usize = dims[keep + 1..].iter().product();
    let outer: usize = dims[..keep].iter().product();
    let m = rho.matrix();
    let mut out = DMatrix::from_element(d_keep, d_keep, ZERO);
    for o in 0..outer {
        for i in 0..inner {
            for a in 0..d_keep {
                let row = (o * d_keep + a) * inner + i;
                for b in 0..d_keep {
                    let col = (o * d_keep + b) * inner + i;
                    out[(a, b)] += m[(row, col)];
                }
            }
        }
    }
    DensityMatrix::new(out, vec![d_keep])
}

/// `S_L = 1 − Tr ρ²`.
pub fn linear_entropy(rho: &DensityMatrix) -> f64 {
    1.0 - rho.purity()
}

/// Normalized Hermite functions `ψ₀(x)..ψ_{n_max}(x)`, with
/// `ψₙ(x) = π^{-1/4} 2^{-n/2} (n!)^{-1/2} e^{-x²/2} Hₙ(x)`.
///
/// Uses the normalized three-term recurrence with running rescaling, so large
/// orders neither overflow nor lose the Gaussian prefactor to underflow.
pub fn hermite_functions(n_max: usize, x: f64) -> Vec<f64> {
    const BIG: f64 = 1e150;
    let mut out = Vec::with_capacity(n_max + 1);
    let mut log_scale = -0.5 * x * x - 0.25 * std::f64::consts::PI.ln();
    let mut prev = 0.0;
    let mut cur = 1.0;
    out.push(cur * log_scale.exp());
    for n in 0..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            cur /= BIG;
            prev /= BIG;
            log_scale += BIG.ln();
        }
        out.push(cur * log_scale.exp());
    }
    out
}

/// `⟨n|x_λ⟩ = ψₙ(x) e^{inλ}` for the rotated quadrature `√2 x_λ = a e^{-iλ} + a† e^{iλ}`.
pub fn position_wavefunction(n: usize, x: f64, lambda: f64) -> C64 {
    let psi = hermite_functions(n, x)[n];
    C64::from_polar(psi, n as f64 * lambda)
}

/// `|a⟩⊗|b⟩` for the spin-major ordering.
pub fn kron_vec(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    let mut out = DVector::from_element(a.len() * b.len(), ZERO);
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i * b.len() + j] = ai * bj;
        }
    }
    out
}

/// `A ⊗ B`.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// Identity on `dim`.
pub fn identity(dim: usize) -> DMatrix<C64> {
    DMatrix::from_diagonal_element(dim, dim, ONE)
}
