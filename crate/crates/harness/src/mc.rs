//! Monte-Carlo robustness against coupling anisotropy.
//!
//! Each sample draws `Δk_i ~ U[−δk, δk]` for every spin and evolves the GHZ probe
//! with couplings `k(1 + Δk_i)`. Sample `j` uses ChaCha20 seeded from the model
//! seed on stream `j`, so results are independent of worker scheduling.

use gravsim_core::branch::{evolve, Couplings, ProbeConfig};
use gravsim_core::fisher::qfi_branch;
use gravsim_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{HarnessError, Result};

pub const RNG_IDENTITY: &str = "ChaCha20 (rand_chacha 0.9), seed_from_u64(seed), stream = sample index";

#[derive(Clone, Debug, PartialEq)]
pub struct AnisotropyModel {
    pub k: f64,
    pub delta_k: f64,
    pub n_spins: usize,
    pub samples: usize,
    pub seed: u64,
    pub g: f64,
    pub xi: f64,
    pub alpha: C64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct McResult {
    pub mean: f64,
    /// Sample standard deviation (Bessel-corrected).
    pub std: f64,
    pub values: Vec<f64>,
}

impl AnisotropyModel {
    pub fn couplings(&self, sample: usize) -> Vec<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(sample as u64);
        (0..self.n_spins)
            .map(|_| {
                let dk = if self.delta_k > 0.0 { rng.random_range(-self.delta_k..=self.delta_k) } else { 0.0 };
                self.k * (1.0 + dk)
            })
            .collect()
    }
}

pub fn anisotropy_mc(model: &AnisotropyModel, tau: f64) -> Result<McResult> {
    if !(model.delta_k >= 0.0) {
        return Err(HarnessError::Config(format!("delta_k must be non-negative, got {}", model.delta_k)));
    }
    if model.samples == 0 || model.n_spins == 0 || model.n_spins > 63 {
        return Err(HarnessError::Config("need at least one sample and 1..=63 spins".into()));
    }
    let values = (0..model.samples)
        .into_par_iter()
        .map(|j| {
            let mut config = ProbeConfig::ghz(model.n_spins, model.k, model.g, model.xi, model.alpha);
            config.couplings = Couplings::Anisotropic(model.couplings(j));
            Ok(qfi_branch(&evolve(&config, tau)?)?.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(McResult { mean, std, values })
}
