//! Batch driver for the GMQDT dissociative-recombination pipeline.
//!
//! Every subcommand loads one TOML configuration, validates it, runs
//! the requested stage, and writes deterministic CSV files: identical
//! configuration means byte-identical output. The configuration hash
//! is embedded as a comment line above each CSV header.

use anyhow::Context;
use clap::{Parser, Subcommand};
use gmqdt::config::RunConfig;
use gmqdt::pipeline::Pipeline;
use gmqdt::Error as GmqdtError;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "gmqdt",
    about = "Generalized quantum defect theory for electron collisions with dipolar molecular ions",
    version
)]
struct Cli {
    /// TOML run configuration; the bundled defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV files.
    #[arg(long, global = true, default_value = "out")]
    output: PathBuf,

    /// Rerun the stage with the dipole switched off (D = 0 extraction
    /// conventions) for A/B comparison.
    #[arg(long, global = true)]
    dipole_off: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Effective channels: lambda, centrifugal coefficients, mixing fractions.
    Channels,
    /// Generalized phase parameter beta over the configured energy grid.
    Beta,
    /// Bound states of the configured channel.
    Bound {
        /// Cross-check against direct radial integration.
        #[arg(long)]
        oracle: bool,
    },
    /// Quantum-defect surfaces along the bend scan.
    Defects,
    /// Body-frame reaction matrix along the bend scan.
    Kmatrix,
    /// Autoionizing resonances of the vibronic problem.
    Resonances,
    /// DR cross section: capture model plus beam convolution.
    Xsec,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("GMQDT_LOG")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let config_error = e
                .downcast_ref::<GmqdtError>()
                .map(|g| matches!(g, GmqdtError::Config(_)))
                .unwrap_or(false)
                || e.downcast_ref::<toml::de::Error>().is_some();
            if config_error {
                eprintln!("error[config]: {e:#}");
                ExitCode::from(2)
            } else {
                eprintln!("error[run]: {e:#}");
                ExitCode::from(1)
            }
        }
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<(RunConfig, String)> {
    match &cli.config {
        Some(path) => {
            let bytes = fs::read(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            let text = String::from_utf8(bytes.clone()).context("config is not UTF-8")?;
            let cfg: RunConfig = toml::from_str(&text)?;
            cfg.validate()?;
            let mut hasher = Sha256::new();
            hasher.update(&bytes);
            let hash = hex_prefix(&hasher.finalize(), 12);
            Ok((cfg, hash))
        }
        None => {
            let cfg = RunConfig::default();
            cfg.validate()?;
            Ok((cfg, "builtin-default".to_string()))
        }
    }
}

fn hex_prefix(bytes: &[u8], n: usize) -> String {
    bytes
        .iter()
        .flat_map(|b| [b >> 4, b & 0xf])
        .take(n)
        .map(|x| char::from_digit(x as u32, 16).unwrap())
        .collect()
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let (config, hash) = load_config(cli)?;
    let dipole_on = !cli.dipole_off;
    let pipe = Pipeline::new(config.clone(), dipole_on, hash.clone())?;
    fs::create_dir_all(&cli.output)
        .with_context(|| format!("creating output dir {}", cli.output.display()))?;

    match cli.command {
        Command::Channels => cmd_channels(&pipe, &cli.output),
        Command::Beta => cmd_beta(&pipe, &cli.output),
        Command::Bound { oracle } => cmd_bound(&pipe, &cli.output, oracle),
        Command::Defects => cmd_defects(&pipe, &cli.output),
        Command::Kmatrix => cmd_kmatrix(&pipe, &cli.output),
        Command::Resonances => cmd_resonances(&pipe, &cli.output),
        Command::Xsec => cmd_xsec(&pipe, &cli.output, &config, &hash),
    }
}

fn header(pipe: &Pipeline) -> String {
    format!(
        "# config_hash={} dipole={}\n",
        pipe.config_hash,
        if pipe.dipole_on { "on" } else { "off" }
    )
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_channels(pipe: &Pipeline, out: &Path) -> anyhow::Result<()> {
    let rows = pipe.channel_table();
    println!("channel   lambda                     lambda(lambda+1)   mixing");
    for r in &rows {
        println!(
            "{:<9} {:>12.7} {:+12.7}i {:>16.7} {:>8.4}",
            r.label.as_str(),
            r.lambda.re,
            r.lambda.im,
            r.centrifugal_coefficient,
            r.mixing_fraction
        );
    }
    let mut s = header(pipe);
    s.push_str("label,lambda_re,lambda_im,centrifugal_coefficient,mixing_fraction\n");
    for r in &rows {
        s.push_str(&format!(
            "{},{:.9e},{:.9e},{:.9e},{:.9e}\n",
            r.label.as_str(),
            r.lambda.re,
            r.lambda.im,
            r.centrifugal_coefficient,
            r.mixing_fraction
        ));
    }
    write_file(&out.join("channels.csv"), &s)
}

fn cmd_beta(pipe: &Pipeline, out: &Path) -> anyhow::Result<()> {
    let rows = pipe.beta_grid()?;
    let mut s = header(pipe);
    s.push_str("eps_hartree,beta_stilde,beta_ppi,beta_ptilde,beta_dsigma\n");
    for r in &rows {
        s.push_str(&format!(
            "{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}\n",
            r.eps, r.beta_stilde, r.beta_ppi, r.beta_ptilde, r.beta_dsigma
        ));
    }
    write_file(&out.join("beta.csv"), &s)?;
    println!("beta grid: {} points", rows.len());
    Ok(())
}

fn cmd_bound(pipe: &Pipeline, out: &Path, oracle: bool) -> anyhow::Result<()> {
    let rows = pipe.bound_table(oracle)?;
    let mut s = header(pipe);
    if oracle {
        s.push_str("n,energy_hartree,oracle_hartree\n");
        let mut max_delta = 0.0_f64;
        for r in &rows {
            let o = r.oracle_energy.expect("oracle column requested");
            max_delta = max_delta.max((o - r.energy).abs());
            s.push_str(&format!("{},{:.12e},{:.12e}\n", r.n, r.energy, o));
        }
        println!("max |delta| = {max_delta:.3e} hartree");
    } else {
        s.push_str("n,energy_hartree\n");
        for r in &rows {
            s.push_str(&format!("{},{:.12e}\n", r.n, r.energy));
        }
        println!("bound states: {}", rows.len());
    }
    write_file(&out.join("bound.csv"), &s)
}

fn cmd_defects(pipe: &Pipeline, out: &Path) -> anyhow::Result<()> {
    let rows = pipe.defect_grid()?;
    let mut s = header(pipe);
    s.push_str("theta_rad,mu_stilde,mu_ppi_minus,mu_ptilde,mu_ppi_plus,mu_dsigma\n");
    for r in &rows {
        s.push_str(&format!(
            "{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}\n",
            r.theta, r.mu[0], r.mu[1], r.mu[2], r.mu[3], r.mu[4]
        ));
    }
    write_file(&out.join("defects.csv"), &s)?;
    println!("defect scan: {} points", rows.len());
    Ok(())
}

fn cmd_kmatrix(pipe: &Pipeline, out: &Path) -> anyhow::Result<()> {
    let rows = pipe.kmatrix_grid()?;
    let mut s = header(pipe);
    s.push_str("theta_rad");
    for a in 0..5 {
        for b in a..5 {
            s.push_str(&format!(",k_{a}{b}"));
        }
    }
    s.push('\n');
    for r in &rows {
        s.push_str(&format!("{:.9e}", r.theta));
        for v in r.upper {
            s.push_str(&format!(",{v:.9e}"));
        }
        s.push('\n');
    }
    write_file(&out.join("kmatrix.csv"), &s)?;
    println!("kmatrix scan: {} points", rows.len());
    Ok(())
}

fn cmd_resonances(pipe: &Pipeline, out: &Path) -> anyhow::Result<()> {
    let rows = pipe.resonances()?;
    let mut s = header(pipe);
    s.push_str("E_a_hartree,Gamma_hartree,channel,fit_residual\n");
    for r in &rows {
        s.push_str(&format!(
            "{:.12e},{:.12e},{},{:.3e}\n",
            r.energy, r.gamma, r.channel, r.fit_residual
        ));
    }
    write_file(&out.join("resonances.csv"), &s)?;
    println!("resonances: {}", rows.len());
    Ok(())
}

fn cmd_xsec(pipe: &Pipeline, out: &Path, config: &RunConfig, hash: &str) -> anyhow::Result<()> {
    let curve = pipe.cross_section()?;
    let mut s = header(pipe);
    s.push_str("energy_eV,sigma_raw_cm2,sigma_conv_cm2\n");
    for i in 0..curve.energy_ev.len() {
        s.push_str(&format!(
            "{:.8e},{:.8e},{:.8e}\n",
            curve.energy_ev[i], curve.sigma_raw_cm2[i], curve.sigma_conv_cm2[i]
        ));
    }
    write_file(&out.join("xsec.csv"), &s)?;

    // A/B comparison file: both dipole conventions and their ratio
    let other = Pipeline::new(config.clone(), !pipe.dipole_on, hash.to_string())?;
    let other_curve = other.cross_section()?;
    let (on, off) = if pipe.dipole_on {
        (&curve, &other_curve)
    } else {
        (&other_curve, &curve)
    };
    let mut c = format!("# config_hash={hash}\n");
    c.push_str("energy_eV,sigma_conv_on_cm2,sigma_conv_off_cm2,ratio\n");
    for i in 0..on.energy_ev.len() {
        let a = on.sigma_conv_cm2[i];
        let b = off.sigma_conv_cm2[i];
        c.push_str(&format!(
            "{:.8e},{:.8e},{:.8e},{:.8e}\n",
            on.energy_ev[i],
            a,
            b,
            if b > 0.0 { a / b } else { f64::NAN }
        ));
    }
    write_file(&out.join("xsec_compare.csv"), &c)?;
    println!("xsec: {} bins", curve.energy_ev.len());
    Ok(())
}
