//! Sweep specifications with per-figure defaults and config overrides.

use std::f64::consts::PI;

use gravsim_core::fisher::LambdaChoice;

use crate::config::Config;
use crate::error::{HarnessError, Result};

/// Keys accepted in figure config files (and mirrored by CLI flags).
pub const FIGURE_KEYS: &[&str] = &[
    "seed",
    "tau-points",
    "kn-list",
    "scaling-taus",
    "scaling-n-list",
    "k",
    "alpha",
    "g",
    "xi",
    "delta-k-list",
    "samples",
    "mc-n-list",
    "mc-tau",
    "gamma-d-list",
    "gamma-list",
    "fixed-gamma-d",
    "kappa",
    "nth",
    "cutoff",
    "lossy-n",
    "lossy-n-list",
    "fd-step",
    "richardson",
    "tolerance",
    "homodyne-lambda",
    "homodyne-points",
    "heterodyne-points",
    "css-k-list",
    "css-tau-fractions",
    "css-n-max",
    "omega-min",
    "omega-max",
    "omega-points",
    "mass-min",
    "mass-max",
    "mass-points",
    "sense-n-list",
    "nu",
];

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub figure: u8,
    pub seed: Option<u64>,
    /// Points on `τ ∈ [0, 2π]`.
    pub tau_points: usize,
    pub kn_list: Vec<f64>,
    /// Times for the `(kN)²` panels of figure 1.
    pub scaling_taus: Vec<f64>,
    pub scaling_n_list: Vec<usize>,
    /// Base coupling for N sweeps (figures 1, 5 and 7).
    pub k: f64,
    pub alpha: f64,
    pub g: f64,
    pub xi: f64,
    pub delta_k_list: Vec<f64>,
    pub samples: usize,
    pub mc_n_list: Vec<usize>,
    pub mc_tau: f64,
    pub gamma_d_list: Vec<f64>,
    pub gamma_list: Vec<f64>,
    pub fixed_gamma_d: f64,
    pub kappa: f64,
    pub n_th: f64,
    pub cutoff: usize,
    pub lossy_n: usize,
    pub lossy_n_list: Vec<usize>,
    pub fd_step: f64,
    pub richardson: bool,
    pub tolerance: f64,
    pub homodyne_lambda: LambdaChoice,
    pub homodyne_points: usize,
    pub heterodyne_points: usize,
    pub css_k_list: Vec<f64>,
    pub css_tau_fractions: Vec<f64>,
    pub css_n_max: usize,
    pub omega: (f64, f64, usize),
    pub mass: (f64, f64, usize),
    pub sense_n_list: Vec<usize>,
    pub nu: f64,
}

impl SweepSpec {
    pub fn defaults(figure: u8) -> Result<Self> {
        if !(1..=7).contains(&figure) {
            return Err(HarnessError::Config(format!("unknown figure {figure}; expected 1..7")));
        }
        let fig4 = figure == 4;
        Ok(Self {
            figure,
            seed: None,
            tau_points: if fig4 { 41 } else { 601 },
            kn_list: if fig4 { vec![0.01, 0.1, 2.0] } else { vec![0.05, 0.5, 1.0, 2.0] },
            scaling_taus: vec![PI / 2.0, PI, 1.5 * PI, 2.0 * PI],
            scaling_n_list: (1..=20).collect(),
            k: if figure == 7 { 1.0 } else { 0.1 },
            alpha: 0.0,
            g: 0.1,
            xi: 0.0,
            delta_k_list: vec![0.1, 0.3, 0.5],
            samples: 1000,
            mc_n_list: vec![4, 8, 16, 32],
            mc_tau: 2.0 * PI,
            gamma_d_list: vec![1e-4, 1e-3, 1e-2],
            gamma_list: vec![1e-4, 1e-3],
            fixed_gamma_d: 1e-3,
            kappa: 1e-5,
            n_th: 10.0,
            cutoff: 40,
            lossy_n: 4,
            lossy_n_list: vec![1, 2, 3, 4],
            fd_step: 1e-4,
            richardson: true,
            tolerance: 1e-10,
            homodyne_lambda: LambdaChoice::Fixed(0.0),
            homodyne_points: 2001,
            heterodyne_points: 201,
            css_k_list: vec![0.1, 0.5],
            css_tau_fractions: vec![0.99, 0.95],
            css_n_max: 40,
            omega: (1e3, 1e9, 61),
            mass: (1e-21, 1e-3, 61),
            sense_n_list: vec![3, 10, 100, 1000],
            nu: 1e3,
        })
    }

    pub fn from_config(figure: u8, config: &Config) -> Result<Self> {
        config.check_keys(FIGURE_KEYS)?;
        let mut s = Self::defaults(figure)?;
        if let Some(v) = config.get("seed")? {
            s.seed = Some(v);
        }
        macro_rules! scalar {
            ($key:literal, $field:expr) => {
                if let Some(v) = config.get($key)? {
                    $field = v;
                }
            };
        }
        macro_rules! list {
            ($key:literal, $field:expr) => {
                if let Some(v) = config.get_list($key)? {
                    $field = v;
                }
            };
        }
        scalar!("tau-points", s.tau_points);
        list!("kn-list", s.kn_list);
        list!("scaling-taus", s.scaling_taus);
        list!("scaling-n-list", s.scaling_n_list);
        scalar!("k", s.k);
        scalar!("alpha", s.alpha);
        scalar!("g", s.g);
        scalar!("xi", s.xi);
        list!("delta-k-list", s.delta_k_list);
        scalar!("samples", s.samples);
        list!("mc-n-list", s.mc_n_list);
        scalar!("mc-tau", s.mc_tau);
        list!("gamma-d-list", s.gamma_d_list);
        list!("gamma-list", s.gamma_list);
        scalar!("fixed-gamma-d", s.fixed_gamma_d);
        scalar!("kappa", s.kappa);
        scalar!("nth", s.n_th);
        scalar!("cutoff", s.cutoff);
        scalar!("lossy-n", s.lossy_n);
        list!("lossy-n-list", s.lossy_n_list);
        scalar!("fd-step", s.fd_step);
        if let Some(v) = config.get_bool("richardson")? {
            s.richardson = v;
        }
        scalar!("tolerance", s.tolerance);
        if let Some(raw) = config.get::<String>("homodyne-lambda")? {
            s.homodyne_lambda = if raw == "sweep" {
                LambdaChoice::standard_sweep()
            } else {
                LambdaChoice::Fixed(config.get("homodyne-lambda")?.unwrap_or_default())
            };
        }
        scalar!("homodyne-points", s.homodyne_points);
        scalar!("heterodyne-points", s.heterodyne_points);
        list!("css-k-list", s.css_k_list);
        list!("css-tau-fractions", s.css_tau_fractions);
        scalar!("css-n-max", s.css_n_max);
        scalar!("omega-min", s.omega.0);
        scalar!("omega-max", s.omega.1);
        scalar!("omega-points", s.omega.2);
        scalar!("mass-min", s.mass.0);
        scalar!("mass-max", s.mass.1);
        scalar!("mass-points", s.mass.2);
        list!("sense-n-list", s.sense_n_list);
        scalar!("nu", s.nu);
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.tau_points < 2 {
            return bad(format!("tau-points must be at least 2, got {}", self.tau_points));
        }
        let lists = [
            ("kn-list", self.kn_list.is_empty()),
            ("scaling-taus", self.scaling_taus.is_empty()),
            ("scaling-n-list", self.scaling_n_list.is_empty()),
            ("delta-k-list", self.delta_k_list.is_empty()),
            ("mc-n-list", self.mc_n_list.is_empty()),
            ("gamma-d-list", self.gamma_d_list.is_empty()),
            ("gamma-list", self.gamma_list.is_empty()),
            ("lossy-n-list", self.lossy_n_list.is_empty()),
            ("css-k-list", self.css_k_list.is_empty()),
            ("css-tau-fractions", self.css_tau_fractions.is_empty()),
            ("sense-n-list", self.sense_n_list.is_empty()),
        ];
        if let Some((name, _)) = lists.iter().find(|(_, empty)| *empty) {
            return bad(format!("{name} must not be empty"));
        }
        if self.delta_k_list.iter().any(|d| !(*d >= 0.0)) {
            return bad("delta-k-list entries must be non-negative".into());
        }
        if self.samples == 0 {
            return bad("samples must be positive".into());
        }
        if self.omega.0 <= 0.0 || self.omega.1 < self.omega.0 || self.mass.0 <= 0.0 || self.mass.1 < self.mass.0 {
            return bad("omega and mass ranges must be positive and ordered".into());
        }
        if self.omega.2 == 0 || self.mass.2 == 0 || self.nu <= 0.0 {
            return bad("omega-points, mass-points and nu must be positive".into());
        }
        if !(self.fd_step > 0.0) || !(self.tolerance > 0.0) {
            return bad("fd-step and tolerance must be positive".into());
        }
        if self.figure == 5 && self.seed.is_none() {
            return bad("figure 5 is stochastic; a seed is required (--seed or seed = ...)".into());
        }
        Ok(())
    }

    /// Uniform grid on `[0, 2π]`.
    pub fn tau_grid(&self) -> Vec<f64> {
        let n = self.tau_points;
        (0..n).map(|i| 2.0 * PI * i as f64 / (n - 1) as f64).collect()
    }
}

/// `points` log-spaced values on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..points).map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64)).collect()
}
