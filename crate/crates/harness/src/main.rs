//! `gravsim` command-line interface.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gravsim::config::Config;
use gravsim::dataset::format_float;
use gravsim::{run_figure, HarnessError, Result, SweepSpec};
use gravsim_core::branch::{evolve, ProbeConfig};
use gravsim_core::fisher::{
    cfi_heterodyne, cfi_homodyne, cfi_photocount, optimize_spin_angles, qfi_branch, qfi_spin, AngleChoice,
    FisherResult, HeterodyneGrid, HomodyneGrid, PhotocountGrid,
};
use gravsim_core::open_system::{qfi_losses, LindbladParams};
use gravsim_core::{oracles, C64};

#[derive(Parser)]
#[command(name = "gravsim", version, about = "Spin-mechanical gravimetry simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProbeKind {
    Ghz,
    Css,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelArg {
    /// Full spin-mechanical QFI.
    Qfi,
    /// QFI of the reduced spin state.
    SpinQfi,
    /// Two-outcome spin CFI with optimized angles.
    Spin,
    Homodyne,
    Heterodyne,
    Photocount,
}

#[derive(Subcommand)]
enum Command {
    /// Generate fig<N>.csv and fig<N>.json.
    Fig {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=7))]
        figure: u8,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Override a config key, e.g. `--set tau-points=101`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Omit the generation timestamp so output is byte-reproducible.
        #[arg(long)]
        no_timestamp: bool,
    },
    /// Fisher information of a single configuration.
    Qfi {
        #[arg(long)]
        k: f64,
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 0.0)]
        xi: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
        g: f64,
        #[arg(long, value_enum, default_value = "qfi")]
        channel: ChannelArg,
        #[arg(long, value_enum, default_value = "ghz")]
        probe: ProbeKind,
    },
    /// Mixed-state QFI under the collective master equation.
    Lindblad {
        #[arg(long)]
        gamma_d: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        nth: f64,
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        k: f64,
        #[arg(long, default_value_t = 2.0 * std::f64::consts::PI)]
        tau: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
        g: f64,
        #[arg(long)]
        cutoff: Option<usize>,
        #[arg(long, default_value_t = 1e-4)]
        fd_step: f64,
    },
    /// Cramer-Rao gravimetric sensitivity in m/s^2.
    Sense {
        #[arg(long)]
        omega: f64,
        #[arg(long)]
        mass: f64,
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        nu: f64,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long, default_value_t = 2.0 * std::f64::consts::PI)]
        tau: f64,
        #[arg(long, default_value_t = 0.0)]
        xi: f64,
    },
}

fn print_fisher(r: &FisherResult) {
    println!("channel = {}", r.channel.name());
    println!("value = {}", format_float(r.value));
    if let Some(s) = r.standard {
        println!("standard = {}", format_float(s));
    }
    if let Some(p) = r.angles {
        println!("theta = {}", format_float(p.theta));
        println!("phi = {}", format_float(p.phi));
    }
    for d in &r.diagnostics {
        eprintln!("note: {d}");
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fig {
            figure,
            config,
            out,
            seed,
            overrides,
            no_timestamp,
        } => {
            let mut cfg = match config {
                Some(path) => Config::load(&path)?,
                None => Config::default(),
            };
            for o in &overrides {
                let (k, v) = o
                    .split_once('=')
                    .ok_or_else(|| HarnessError::Config(format!("--set expects KEY=VALUE, got {o:?}")))?;
                cfg.set(k.trim(), v.trim());
            }
            if let Some(s) = seed {
                cfg.set("seed", s.to_string());
            }
            let spec = SweepSpec::from_config(figure, &cfg)?;
            let ds = run_figure(&spec)?;
            let stamp = (!no_timestamp).then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
            let (csv, json) = ds.write(&out, stamp.as_deref())?;
            println!("{}", csv.display());
            println!("{}", json.display());
        }
        Command::Qfi {
            k,
            n,
            tau,
            xi,
            alpha,
            g,
            channel,
            probe,
        } => {
            let alpha = C64::new(alpha, 0.0);
            let cfg = match probe {
                ProbeKind::Ghz => ProbeConfig::ghz(n, k, g, xi, alpha),
                ProbeKind::Css => ProbeConfig::css(n, k, g, xi, alpha),
            };
            let state = evolve(&cfg, tau)?;
            let r = match channel {
                ChannelArg::Qfi => qfi_branch(&state)?,
                ChannelArg::SpinQfi => qfi_spin(&state)?,
                ChannelArg::Spin => optimize_spin_angles(&state)?,
                ChannelArg::Homodyne => cfi_homodyne(&state, &HomodyneGrid::default(), AngleChoice::Optimize)?,
                ChannelArg::Heterodyne => cfi_heterodyne(&state, &HeterodyneGrid::default(), AngleChoice::Optimize)?,
                ChannelArg::Photocount => cfi_photocount(&state, &PhotocountGrid::default(), AngleChoice::Optimize)?,
            };
            print_fisher(&r);
        }
        Command::Lindblad {
            gamma_d,
            gamma,
            kappa,
            nth,
            n,
            k,
            tau,
            alpha,
            g,
            cutoff,
            fd_step,
        } => {
            let mut params =
                LindbladParams::new(ProbeConfig::ghz(n, k, g, 0.0, C64::new(alpha, 0.0)), gamma_d, gamma, kappa, nth);
            params.cutoff = cutoff;
            let r = qfi_losses(&params, tau, fd_step, true)?;
            print_fisher(&r.fisher);
            println!("ideal = {}", format_float(r.ideal));
            println!("fraction = {}", format_float(r.fraction));
            println!("cutoff = {}", params.effective_cutoff());
            println!("trace_error = {}", format_float(r.trace_error));
            println!("min_eigenvalue = {}", format_float(r.min_eigenvalue));
            println!("steps = {}", r.steps);
        }
        Command::Sense {
            omega,
            mass,
            n,
            nu,
            k,
            tau,
            xi,
        } => {
            let dg = oracles::sensitivity(omega, mass, n, nu, k, tau, xi)?;
            println!("delta_g = {}", format_float(dg));
            println!("log10_delta_g = {}", format_float(dg.log10()));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
