//! Figure pipelines: each produces a long-format [`Dataset`] from a [`SweepSpec`].

use gravsim_core::branch::{evolve, spin_reduced_dm, ProbeConfig};
use gravsim_core::fisher::{
    cfi_heterodyne, cfi_homodyne, cfi_photocount, optimize_spin_angles, qfi_branch, qfi_spin, AngleChoice, FisherResult,
    HeterodyneGrid, HomodyneGrid, LambdaChoice, PhotocountGrid,
};
use gravsim_core::open_system::{qfi_losses, LindbladParams};
use gravsim_core::{oracles, C64};
use rayon::prelude::*;

use crate::dataset::{Dataset, Row};
use crate::error::{HarnessError, Result};
use crate::mc::{anisotropy_mc, AnisotropyModel, RNG_IDENTITY};
use crate::spec::{log_grid, SweepSpec};

/// Runs the pipeline for `spec.figure` and returns sorted rows.
pub fn run_figure(spec: &SweepSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut ds = Dataset::new(spec.figure);
    ds.rows = match spec.figure {
        1 => figure1(spec)?,
        2 => figure2(spec)?,
        3 => figure3(spec)?,
        4 => figure4(spec)?,
        5 => figure5(spec)?,
        6 => figure6(spec)?,
        7 => sensitivity_map(spec)?,
        other => return Err(HarnessError::Config(format!("unknown figure {other}; expected 1..7"))),
    };
    describe(spec, &mut ds);
    ds.sort();
    Ok(ds)
}

fn list<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

fn describe(spec: &SweepSpec, ds: &mut Dataset) {
    ds.meta("generator", concat!("gravsim ", env!("CARGO_PKG_VERSION")));
    ds.meta("units", "scaled: tau = omega t, k and g in zero-point units");
    let (a, g, xi) = (spec.alpha, spec.g, spec.xi);
    match spec.figure {
        1..=3 => {
            ds.meta("tau_points", spec.tau_points);
            ds.meta("kn_list", list(&spec.kn_list));
            ds.meta("alpha g xi", format!("{a} {g} {xi}"));
            if spec.figure == 1 {
                ds.meta("scaling_taus", list(&spec.scaling_taus));
                ds.meta("scaling_n_list", list(&spec.scaling_n_list));
                ds.meta("scaling_k", spec.k);
            }
            ds.meta("method", "closed-form coherent branches; pure-state and reduced-state QFI");
        }
        4 => {
            ds.meta("tau_points", spec.tau_points);
            ds.meta("kn_list", list(&spec.kn_list));
            ds.meta("alpha g xi", format!("{a} {g} {xi}"));
            let lambda = match &spec.homodyne_lambda {
                LambdaChoice::Fixed(l) => l.to_string(),
                LambdaChoice::Sweep(ls) => format!("best of {}", list(ls)),
            };
            ds.meta("homodyne_lambda", lambda);
            ds.meta("homodyne_points", spec.homodyne_points);
            ds.meta("heterodyne_points_per_axis", spec.heterodyne_points);
            ds.meta(
                "y",
                "single-outcome functional sum over y of (dp)^2/(p(1-p)); column standard holds the standard joint CFI",
            );
            ds.meta("method", "joint spin-field CFI with spin angles optimized per point");
        }
        5 => {
            ds.meta("seed", spec.seed.unwrap_or_default());
            ds.meta("rng", RNG_IDENTITY);
            ds.meta("samples", spec.samples);
            ds.meta("mc_tau", spec.mc_tau);
            ds.meta("mc_k", spec.k);
            ds.meta("delta_k_list", list(&spec.delta_k_list));
            ds.meta("mc_n_list", list(&spec.mc_n_list));
            ds.meta("gamma_d_list", list(&spec.gamma_d_list));
            ds.meta("gamma_list", list(&spec.gamma_list));
            ds.meta("fixed_gamma_d", spec.fixed_gamma_d);
            ds.meta("lossy_n lossy_n_list", format!("{} {}", spec.lossy_n, list(&spec.lossy_n_list)));
            ds.meta("kappa n_th cutoff", format!("{} {} {}", spec.kappa, spec.n_th, spec.cutoff));
            ds.meta("fd_step richardson tolerance", format!("{} {} {}", spec.fd_step, spec.richardson, spec.tolerance));
            ds.meta("lossy_probe", "GHZ, k = 1, tau = 2 pi, alpha g xi from the sweep settings");
            ds.meta("method", "anisotropy Monte Carlo on branch states; Lindblad RK4 with step doubling and mixed-state QFI");
        }
        6 => {
            ds.meta("css_k_list", list(&spec.css_k_list));
            ds.meta("css_tau_fractions", list(&spec.css_tau_fractions));
            ds.meta("css_n_max", spec.css_n_max);
            ds.meta("method", "spin-reduced QFI of GHZ and CSS probes; full-system CSS QFI at tau = 2 pi");
        }
        _ => {
            ds.meta("omega", format!("{} {} {}", spec.omega.0, spec.omega.1, spec.omega.2));
            ds.meta("mass", format!("{} {} {}", spec.mass.0, spec.mass.1, spec.mass.2));
            ds.meta("sense_n_list", list(&spec.sense_n_list));
            ds.meta("nu k", format!("{} {}", spec.nu, spec.k));
            ds.meta("y", "log10 of delta_g in m/s^2");
            ds.meta("method", "Cramer-Rao bound from the GHZ QFI at tau = 2 pi");
        }
    }
}

fn ghz(spec: &SweepSpec, n: usize, k: f64) -> ProbeConfig {
    ProbeConfig::ghz(n, k, spec.g, spec.xi, C64::new(spec.alpha, 0.0))
}

/// Row with the shared point columns filled in.
fn point(series: String, x: f64, y: f64, panel: &str, quantity: &str, cfg: &ProbeConfig, tau: f64) -> Row {
    Row::new(series, x, y)
        .with("panel", panel)
        .with("quantity", quantity)
        .with("k", cfg.total_coupling() / cfg.n_spins as f64)
        .with("n", cfg.n_spins)
        .with("tau", tau)
        .with("alpha", cfg.alpha.re)
        .with("g", cfg.g)
        .with("xi", cfg.xi)
}

fn collect<T: Send>(items: Vec<Result<Vec<T>>>) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for r in items {
        out.extend(r?);
    }
    Ok(out)
}

fn figure1(spec: &SweepSpec) -> Result<Vec<Row>> {
    let taus = spec.tau_grid();
    let mut jobs: Vec<(ProbeConfig, f64, bool)> = Vec::new();
    for &kn in &spec.kn_list {
        jobs.extend(taus.iter().map(|&t| (ghz(spec, 1, kn), t, false)));
    }
    for &t in &spec.scaling_taus {
        jobs.extend(spec.scaling_n_list.iter().map(|&n| (ghz(spec, n, spec.k), t, true)));
    }
    let rows = jobs
        .par_iter()
        .map(|(cfg, tau, scaling)| {
            let state = evolve(cfg, *tau)?;
            let (n, k) = (cfg.n_spins, cfg.total_coupling() / cfg.n_spins as f64);
            let kn = k * n as f64;
            let q_sm = qfi_branch(&state)?.value;
            let q_spin = qfi_spin(&state)?.value;
            let (series, x, panels) = if *scaling {
                (format!("tau={tau}"), kn * kn, ["b", "d"])
            } else {
                (format!("kN={kn}"), *tau, ["a", "c"])
            };
            Ok(vec![
                point(format!("q_sm {series}"), x, q_sm, panels[0], "q_sm", cfg, *tau)
                    .with("oracle", oracles::qfi_ghz(k, n, *tau, cfg.xi))
                    .with("method", "branch pure-state QFI"),
                point(format!("q_spin {series}"), x, q_spin, panels[1], "q_spin", cfg, *tau)
                    .with("oracle", oracles::qfi_spin_ghz(k, n, *tau))
                    .with("method", "spin-reduced mixed-state QFI"),
            ])
        })
        .collect();
    collect(rows)
}

fn figure2(spec: &SweepSpec) -> Result<Vec<Row>> {
    let taus = spec.tau_grid();
    let jobs: Vec<(f64, f64)> = spec.kn_list.iter().flat_map(|&kn| taus.iter().map(move |&t| (kn, t))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(kn, tau)| {
            let cfg = ghz(spec, 1, kn);
            let s = 1.0 - spin_reduced_dm(&evolve(&cfg, tau)?).purity();
            Ok(vec![point(format!("kN={kn}"), tau, s, "a", "linear_entropy", &cfg, tau)
                .with("oracle", oracles::linear_entropy_ghz(kn, 1, tau))
                .with("method", "one minus spin purity")])
        })
        .collect();
    collect(rows)
}

fn figure3(spec: &SweepSpec) -> Result<Vec<Row>> {
    let taus = spec.tau_grid();
    let jobs: Vec<(f64, f64)> = spec.kn_list.iter().flat_map(|&kn| taus.iter().map(move |&t| (kn, t))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(kn, tau)| {
            let cfg = ghz(spec, 1, kn);
            let state = evolve(&cfg, tau)?;
            let q_sm = qfi_branch(&state)?.value;
            let q_spin = qfi_spin(&state)?.value;
            let f = optimize_spin_angles(&state)?;
            let povm = f.angles.expect("spin optimizer reports angles");
            let q_spin_oracle = oracles::qfi_spin_ghz(kn, 1, tau);
            let mut out = vec![
                point(format!("q_spin kN={kn}"), tau, q_spin, "a", "q_spin", &cfg, tau)
                    .with("oracle", q_spin_oracle)
                    .with("method", "spin-reduced mixed-state QFI"),
                point(format!("f_spin kN={kn}"), tau, f.value, "a", "f_spin", &cfg, tau)
                    .with("oracle", q_spin_oracle)
                    .with("theta", povm.theta)
                    .with("phi", povm.phi)
                    .with("method", "two-outcome spin CFI maximized over angles"),
            ];
            if q_sm > 0.0 {
                let oracle = oracles::qfi_ghz(kn, 1, tau, cfg.xi);
                out.push(
                    point(format!("ratio kN={kn}"), tau, f.value / q_sm, "b", "f_spin_over_q_sm", &cfg, tau)
                        .with("oracle", q_spin_oracle / oracle)
                        .with("theta", povm.theta)
                        .with("phi", povm.phi)
                        .with("method", "optimized spin CFI over branch QFI"),
                );
            }
            Ok(out)
        })
        .collect();
    collect(rows)
}

fn channel_row(series: String, tau: f64, r: &FisherResult, cfg: &ProbeConfig, quantity: &str, method: String) -> Row {
    let angles = r.angles;
    let standard_angles = r.standard_angles;
    point(series, tau, r.value, "a", quantity, cfg, tau)
        .with("standard", r.standard)
        .with("theta", angles.map(|p| p.theta))
        .with("phi", angles.map(|p| p.phi))
        .with("standard_theta", standard_angles.map(|p| p.theta))
        .with("standard_phi", standard_angles.map(|p| p.phi))
        .with("coverage", r.numerics.coverage)
        .with("method", method)
}

fn figure4(spec: &SweepSpec) -> Result<Vec<Row>> {
    let taus = spec.tau_grid();
    let jobs: Vec<(f64, f64)> = spec.kn_list.iter().flat_map(|&kn| taus.iter().map(move |&t| (kn, t))).collect();
    let hom_grid = HomodyneGrid {
        lambda: spec.homodyne_lambda.clone(),
        half_width: None,
        points: spec.homodyne_points,
    };
    let het_grid = HeterodyneGrid {
        half_width: None,
        points_per_axis: spec.heterodyne_points,
    };
    let rows = jobs
        .par_iter()
        .map(|&(kn, tau)| {
            let cfg = ghz(spec, 1, kn);
            let state = evolve(&cfg, tau)?;
            let q = qfi_branch(&state)?.value;
            let spin = optimize_spin_angles(&state)?;
            let hom = cfi_homodyne(&state, &hom_grid, AngleChoice::Optimize)?;
            let het = cfi_heterodyne(&state, &het_grid, AngleChoice::Optimize)?;
            let pho = cfi_photocount(&state, &PhotocountGrid::default(), AngleChoice::Optimize)?;
            let tag = |name: &str| format!("{name} kN={kn}");
            Ok(vec![
                point(tag("q_sm"), tau, q, "a", "q_sm", &cfg, tau).with("method", "branch pure-state QFI"),
                channel_row(tag("f_spin"), tau, &spin, &cfg, "f_spin", "spin-only CFI".into()),
                channel_row(
                    tag("f_hom"),
                    tau,
                    &hom,
                    &cfg,
                    "f_homodyne",
                    format!("trapezoid on {} points lambda {:?}", spec.homodyne_points, hom.numerics.homodyne_lambda.unwrap_or(0.0)),
                ),
                channel_row(
                    tag("f_het"),
                    tau,
                    &het,
                    &cfg,
                    "f_heterodyne",
                    format!("midpoint grid {0}x{0}", spec.heterodyne_points),
                ),
                channel_row(
                    tag("f_pho"),
                    tau,
                    &pho,
                    &cfg,
                    "f_photocount",
                    format!("photon numbers 0..={}", pho.numerics.cutoff.unwrap_or(0)),
                ),
            ])
        })
        .collect();
    collect(rows)
}

fn mc_rows(spec: &SweepSpec, seed: u64) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &dk in &spec.delta_k_list {
        for &n in &spec.mc_n_list {
            let model = AnisotropyModel {
                k: spec.k,
                delta_k: dk,
                n_spins: n,
                samples: spec.samples,
                seed,
                g: spec.g,
                xi: spec.xi,
                alpha: C64::new(spec.alpha, 0.0),
            };
            let r = anisotropy_mc(&model, spec.mc_tau)?;
            let cfg = ghz(spec, n, spec.k);
            let base = |series: String, y: f64, panel: &str, quantity: &str| {
                point(series, n as f64, y, panel, quantity, &cfg, spec.mc_tau)
                    .with("delta_k", dk)
                    .with("samples", spec.samples)
                    .with("seed", seed)
                    .with("method", "Monte Carlo over uniform coupling offsets")
            };
            rows.push(base(format!("mean delta_k={dk}"), r.mean, "a", "mean_q_sm"));
            rows.push(base(format!("rel_std delta_k={dk}"), r.std / r.mean, "b", "rel_std"));
        }
    }
    for &n in &spec.mc_n_list {
        let cfg = ghz(spec, n, spec.k);
        rows.push(
            point("ideal".into(), n as f64, oracles::qfi_ghz(spec.k, n, spec.mc_tau, spec.xi), "a", "q_sm_ideal", &cfg, spec.mc_tau)
                .with("delta_k", 0.0)
                .with("method", "closed form"),
        );
    }
    Ok(rows)
}

fn lossy_row(spec: &SweepSpec, n: usize, gamma_d: f64, gamma: f64, panel: &str) -> Result<Vec<Row>> {
    let tau = 2.0 * std::f64::consts::PI;
    let cfg = ghz(spec, n, 1.0);
    let mut params = LindbladParams::new(cfg.clone(), gamma_d, gamma, spec.kappa, spec.n_th);
    params.cutoff = Some(spec.cutoff);
    params.integrator.tolerance = spec.tolerance;
    let r = qfi_losses(&params, tau, spec.fd_step, spec.richardson)?;
    let fill = |row: Row| {
        row.with("gamma_d", gamma_d)
            .with("gamma", gamma)
            .with("kappa", spec.kappa)
            .with("n_th", spec.n_th)
            .with("cutoff", spec.cutoff)
            .with("fd_step", spec.fd_step)
            .with("trace_error", r.trace_error)
            .with("min_eigenvalue", r.min_eigenvalue)
            .with("method", format!("Lindblad RK4 {} steps; mixed-state QFI", r.steps))
    };
    Ok(match panel {
        "c" => vec![
            fill(point(format!("q_losses gamma={gamma}"), gamma_d, r.fisher.value, "c", "q_losses", &cfg, tau)),
            fill(point(format!("fraction gamma={gamma}"), gamma_d, r.fraction, "c", "fraction", &cfg, tau)),
        ],
        _ => vec![fill(point(
            format!("fraction gamma_d={gamma_d} gamma={gamma}"),
            n as f64,
            r.fraction,
            "d",
            "fraction",
            &cfg,
            tau,
        ))],
    })
}

fn figure5(spec: &SweepSpec) -> Result<Vec<Row>> {
    let seed = spec
        .seed
        .ok_or_else(|| HarnessError::Config("figure 5 is stochastic; a seed is required".into()))?;
    let mut rows = mc_rows(spec, seed)?;
    let mut jobs: Vec<(usize, f64, f64, &str)> = Vec::new();
    for &gamma in &spec.gamma_list {
        jobs.extend(spec.gamma_d_list.iter().map(|&gd| (spec.lossy_n, gd, gamma, "c")));
        jobs.extend(spec.lossy_n_list.iter().map(|&n| (n, spec.fixed_gamma_d, gamma, "d")));
    }
    let lossy = jobs.par_iter().map(|&(n, gd, g, panel)| lossy_row(spec, n, gd, g, panel)).collect();
    rows.extend(collect(lossy)?);
    Ok(rows)
}

fn figure6(spec: &SweepSpec) -> Result<Vec<Row>> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let panels = ["a", "b", "c", "d", "e", "f", "g", "h"];
    let mut jobs: Vec<(String, f64, f64, usize)> = Vec::new();
    let mut idx = 0;
    for &k in &spec.css_k_list {
        for &frac in &spec.css_tau_fractions {
            let panel = panels.get(idx).copied().unwrap_or("x").to_string();
            idx += 1;
            jobs.extend((1..=spec.css_n_max).map(|n| (panel.clone(), k, frac * two_pi, n)));
        }
    }
    let rows = jobs
        .par_iter()
        .map(|(panel, k, tau, n)| {
            let (k, tau, n) = (*k, *tau, *n);
            let g_cfg = ghz(spec, n, k);
            let c_cfg = ProbeConfig::css(n, k, spec.g, spec.xi, C64::new(spec.alpha, 0.0));
            let g_spin = qfi_spin(&evolve(&g_cfg, tau)?)?.value;
            let c_spin = qfi_spin(&evolve(&c_cfg, tau)?)?.value;
            let tag = format!("k={k} tau={tau}");
            Ok(vec![
                point(format!("ghz {tag}"), n as f64, g_spin, panel, "q_spin_ghz", &g_cfg, tau)
                    .with("oracle", oracles::qfi_spin_ghz(k, n, tau))
                    .with("method", "spin-reduced mixed-state QFI"),
                point(format!("css {tag}"), n as f64, c_spin, panel, "q_spin_css", &c_cfg, tau)
                    .with("method", "spin-reduced mixed-state QFI"),
            ])
        })
        .collect();
    let mut out = collect(rows)?;
    let full: Vec<(f64, usize)> = spec.css_k_list.iter().flat_map(|&k| (1..=spec.css_n_max).map(move |n| (k, n))).collect();
    let full_rows = full
        .par_iter()
        .map(|&(k, n)| {
            let cfg = ProbeConfig::css(n, k, spec.g, spec.xi, C64::new(spec.alpha, 0.0));
            let q = qfi_branch(&evolve(&cfg, two_pi)?)?.value;
            Ok(vec![point(format!("css_full k={k}"), n as f64, q, "full", "q_sm_css", &cfg, two_pi)
                .with("oracle", oracles::qfi_css_2pi(k, n)?)
                .with("method", "branch pure-state QFI")])
        })
        .collect();
    out.extend(collect(full_rows)?);
    Ok(out)
}

/// `log10 Δḡ` over the `(ω, M)` grid for each `N` at `τ = 2π`.
pub fn sensitivity_map(spec: &SweepSpec) -> Result<Vec<Row>> {
    let tau = 2.0 * std::f64::consts::PI;
    let omegas = log_grid(spec.omega.0, spec.omega.1, spec.omega.2);
    let masses = log_grid(spec.mass.0, spec.mass.1, spec.mass.2);
    let mut rows = Vec::with_capacity(omegas.len() * masses.len() * spec.sense_n_list.len());
    for &n in &spec.sense_n_list {
        for &omega in &omegas {
            for &mass in &masses {
                let dg = oracles::sensitivity(omega, mass, n, spec.nu, spec.k, tau, spec.xi)?;
                rows.push(
                    Row::new(format!("N={n}"), omega, dg.log10())
                        .with("mass", mass)
                        .with("n", n)
                        .with("nu", spec.nu)
                        .with("k", spec.k)
                        .with("tau", tau)
                        .with("xi", spec.xi)
                        .with("delta_g", dg)
                        .with("closed_form", oracles::sensitivity_closed_form(omega, mass, n, spec.nu, spec.k)),
                );
            }
        }
    }
    Ok(rows)
}
