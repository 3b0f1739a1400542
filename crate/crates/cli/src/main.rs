//! cfolab: training design, link simulation and CFO estimation from the
//! command line.
//!
//! Subcommands: `design`, `simulate`, `crb`, `diagnose`, `estimate`. Exit
//! codes: 0 success, 1 configuration/validation error, 2 numerical or
//! estimation error. Outputs are written atomically (temp file + rename) so
//! partial files are never left behind.

mod runconfig;

use clap::{Args, Parser, Subcommand};
use runconfig::RunConfig;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cfolab_core::error::Error;
use cfolab_core::evalkit::{
    average_crb, draw_cfo, icfo_diagnostics, identifiability_scan, render_csv, run_monte_carlo,
    MonteCarloSpec,
};
use cfolab_core::rng::substream;
use cfolab_core::seqdesign::{design_diagnostics, make_training_set, validate_conditions};
use cfolab_core::sigmodel::{gen_channel, read_frame_path, transmit, write_frame_json};
use cfolab_core::CfoEstimator;

#[derive(Parser)]
#[command(
    name = "cfolab",
    about = "Two-stage CFO estimation for MIMO-OFDM: training design, simulation, bounds and diagnostics",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed (the CFOLAB_SEED environment variable
    /// overrides both).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build a training set, validate the design conditions and print the
    /// quality diagnostics.
    Design {
        #[command(flatten)]
        common: CommonOpts,
        /// Training variant to construct (TS0 | TS1 | RS).
        #[arg(long, default_value = "TS0")]
        variant: String,
        /// Where to write the training set JSON.
        #[arg(long)]
        out: PathBuf,
        /// Optional CSV dump of the |T| and |alpha| tables.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Monte-Carlo MSE vs SNR for the configured variants.
    Simulate {
        #[command(flatten)]
        common: CommonOpts,
        /// Output table path.
        #[arg(long)]
        out: PathBuf,
        /// Output format: csv or json.
        #[arg(long, default_value = "csv")]
        format: String,
        /// Worker threads for the trial loop (results are identical for any
        /// count).
        #[arg(long)]
        workers: Option<usize>,
        /// Add the wall-clock sec_per_trial column (non-deterministic).
        #[arg(long)]
        timing: bool,
        /// Also write the first trials of the first variant as JSON frame
        /// files into this directory.
        #[arg(long)]
        emit_frames: Option<PathBuf>,
        /// How many frames to emit.
        #[arg(long, default_value_t = 1)]
        emit_count: usize,
    },
    /// Channel-averaged Cramer-Rao bound over the configured SNR grid.
    Crb {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        out: PathBuf,
        /// Training variant for the bound.
        #[arg(long, default_value = "TS0")]
        variant: String,
    },
    /// Identifiability scan plus the integer-CFO design diagnostic curves.
    Diagnose {
        #[command(flatten)]
        common: CommonOpts,
        /// CSV output of (r_delta, m_diag, m_offdiag_abs, zeta).
        #[arg(long)]
        out: PathBuf,
        /// Antenna tuple mu,mu_prime,mu_dprime for the kernels.
        #[arg(long, default_value = "0,1,2", value_parser = parse_tuple)]
        tuple: (usize, usize, usize),
        /// Grid step for the kernel curves.
        #[arg(long, default_value_t = 0.1)]
        grid_step: f64,
        /// Grid step for the identifiability scan.
        #[arg(long, default_value_t = 0.05)]
        scan_step: f64,
        /// Training variant used for the diagnostics.
        #[arg(long, default_value = "TS0")]
        variant: String,
    },
    /// Estimate the CFO of a stored frame (JSON or binary).
    Estimate {
        /// Frame file; JSON frames embed their config.
        #[arg(long)]
        frame: PathBuf,
        /// Config file, required for binary frames.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Optional JSON result path (also printed to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_tuple(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected mu,mu_prime,mu_dprime".into());
    }
    let parse = |p: &str| p.trim().parse::<usize>().map_err(|e| e.to_string());
    Ok((parse(parts[0])?, parse(parts[1])?, parse(parts[2])?))
}

/// Write bytes atomically: temp file in the target directory, then rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    if let Some(d) = dir {
        std::fs::create_dir_all(d)?;
    }
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Format(_) | Error::Io(_) | Error::Dimension(_) => 1,
        Error::Numerical(_) | Error::Degenerate(_) | Error::Ambiguity(_) => 2,
    }
}

/// Enforce C0..C4 before running anything that estimates.
fn require_valid(cfg: &cfolab_core::SystemConfig) -> Result<(), Error> {
    let report = validate_conditions(cfg);
    let failures = report.required_failures();
    if failures.is_empty() {
        for check in report.checks.iter().filter(|c| !c.pass) {
            eprintln!("warning: {} — {}", check.name, check.detail);
        }
        Ok(())
    } else {
        let lines: Vec<String> = failures
            .iter()
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect();
        Err(Error::Config(format!(
            "design conditions violated:\n  {}",
            lines.join("\n  ")
        )))
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Design {
            common,
            variant,
            out,
            csv,
        } => {
            let rc = RunConfig::load(&common.config, common.seed)?;
            let cfg = rc.system;
            let variant = variant.parse()?;
            let report = validate_conditions(&cfg);
            print!("{}", report.render_text());
            let mut rng = substream(cfg.seed, "pilots", &[]);
            let ts = make_training_set(&cfg, variant, &mut rng)?;
            let diag = design_diagnostics(&ts, &cfg)?;
            println!("{}", diag.render_text(&cfg));
            let doc = serde_json::json!({
                "variant": variant.to_string(),
                "pilot_offsets": cfg.pilot_offsets,
                "base_sequences": ts
                    .base_sequences
                    .iter()
                    .map(|s| s.iter().map(|v| [v.re, v.im]).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
            });
            let mut text =
                serde_json::to_string_pretty(&doc).map_err(|e| Error::Format(e.to_string()))?;
            text.push('\n');
            write_atomic(&out, text.as_bytes())?;
            if let Some(csv_path) = csv {
                write_atomic(&csv_path, diag.render_csv(&cfg).as_bytes())?;
            }
            println!("training set written to {}", out.display());
            Ok(())
        }
        Command::Simulate {
            common,
            out,
            format,
            workers,
            timing,
            emit_frames,
            emit_count,
        } => {
            let rc = RunConfig::load(&common.config, common.seed)?;
            require_valid(&rc.system)?;
            if let Some(dir) = emit_frames {
                emit_frame_files(&rc, &dir, emit_count)?;
            }
            let spec = MonteCarloSpec {
                cfg: rc.system.clone(),
                variants: rc.variants.clone(),
                snr_grid_db: rc.snr_grid_db.clone(),
                n_trials: rc.n_trials,
                profile: rc.profile.clone(),
                workers: workers.unwrap_or(rc.workers),
                timing,
            };
            let rows = run_monte_carlo(&spec)?;
            for row in &rows {
                println!(
                    "{} snr={:>5.1} dB  mse={:.6e}  icfo_err={:.4}  ambiguity={:.4}  avcrb={:.6e}",
                    row.variant,
                    row.snr_db,
                    row.mse,
                    row.icfo_error_rate,
                    row.ambiguity_rate,
                    row.avcrb
                );
            }
            let payload = match format.as_str() {
                "csv" => render_csv(&rows),
                "json" => rows_to_json(&rows)?,
                other => {
                    return Err(Error::Config(format!(
                        "unknown output format '{other}' (expected csv or json)"
                    )))
                }
            };
            write_atomic(&out, payload.as_bytes())?;
            Ok(())
        }
        Command::Crb {
            common,
            out,
            variant,
        } => {
            let rc = RunConfig::load(&common.config, common.seed)?;
            require_valid(&rc.system)?;
            let cfg = &rc.system;
            let variant: cfolab_core::TrainingVariant = variant.parse()?;
            let mut p_rng = substream(cfg.seed, "pilots", &[]);
            let ts = make_training_set(cfg, variant, &mut p_rng)?;
            let mut csv = String::from("variant,snr_db,n_trials,avcrb,avcrb_stderr\n");
            for &snr_db in &rc.snr_grid_db {
                let noise_var = 10f64.powf(-snr_db / 10.0);
                let mut rng = substream(cfg.seed, "crb-channel", &[]);
                let (mean, stderr) =
                    average_crb(cfg, &ts, &rc.profile, noise_var, rc.n_trials, &mut rng)?;
                println!("{variant} snr={snr_db:>5.1} dB  avcrb={mean:.6e} (+/- {stderr:.2e})");
                csv.push_str(&format!(
                    "{variant},{snr_db},{},{mean},{stderr}\n",
                    rc.n_trials
                ));
            }
            write_atomic(&out, csv.as_bytes())?;
            Ok(())
        }
        Command::Diagnose {
            common,
            out,
            tuple,
            grid_step,
            scan_step,
            variant,
        } => {
            let rc = RunConfig::load(&common.config, common.seed)?;
            let cfg = &rc.system;
            let variant: cfolab_core::TrainingVariant = variant.parse()?;
            let report = validate_conditions(cfg);
            print!("{}", report.render_text());
            let mut p_rng = substream(cfg.seed, "pilots", &[]);
            let ts = make_training_set(cfg, variant, &mut p_rng)?;
            let mut ch_rng = substream(cfg.seed, "scan-channel", &[]);
            let ch = gen_channel(cfg, &rc.profile, &mut ch_rng)?;
            let scan = identifiability_scan(cfg, &ts, &ch, scan_step)?;
            println!(
                "identifiability: min D = {:.6e} (at Delta = {:.3}, baseline {:.6e}) -> {}",
                scan.min_away_from_zero,
                scan.argmin,
                scan.baseline,
                if scan.pass { "PASS" } else { "FAIL" }
            );
            let diag = icfo_diagnostics(cfg, &ts, tuple, grid_step)?;
            println!(
                "kernel tuple {:?}: |alpha| = {:.4}, closed-form check err = {:.2e}",
                diag.tuple, diag.alpha_abs, diag.crosscheck_max_err
            );
            write_atomic(&out, diag.render_csv().as_bytes())?;
            Ok(())
        }
        Command::Estimate { frame, config, out } => {
            let fallback = match &config {
                Some(path) => Some(RunConfig::load(path, None)?.system),
                None => None,
            };
            let (cfg, frame) = read_frame_path(&frame, fallback.as_ref())?;
            require_valid(&cfg)?;
            let estimator = CfoEstimator::new(cfg)?;
            let est = estimator.estimate(&frame)?;
            let mut doc = est.to_json();
            if let Some(truth) = frame.true_cfo {
                let err = cfolab_core::estimator::circular_difference(
                    est.cfo - truth,
                    estimator.config().repetitions as f64,
                );
                doc["true_cfo"] = serde_json::json!(truth);
                doc["signed_error"] = serde_json::json!(err);
            }
            let mut text =
                serde_json::to_string_pretty(&doc).map_err(|e| Error::Format(e.to_string()))?;
            text.push('\n');
            print!("{text}");
            if let Some(path) = out {
                write_atomic(&path, text.as_bytes())?;
            }
            Ok(())
        }
    }
}

fn rows_to_json(rows: &[cfolab_core::evalkit::MonteCarloRow]) -> Result<String, Error> {
    let items: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            serde_json::json!({
                "variant": r.variant.to_string(),
                "snr_db": r.snr_db,
                "n_trials": r.n_trials,
                "mse": r.mse,
                "mse_stderr": r.mse_stderr,
                "icfo_error_rate": r.icfo_error_rate,
                "ambiguity_rate": r.ambiguity_rate,
                "avcrb": r.avcrb,
                "avcrb_stderr": r.avcrb_stderr,
                "sec_per_trial": r.sec_per_trial,
            })
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&serde_json::Value::Array(items))
        .map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Write the first trials of the first configured variant as JSON frames.
fn emit_frame_files(rc: &RunConfig, dir: &Path, count: usize) -> Result<(), Error> {
    let cfg = &rc.system;
    let variant = *rc
        .variants
        .first()
        .ok_or_else(|| Error::Config("no variants configured".into()))?;
    std::fs::create_dir_all(dir)?;
    for trial in 0..count as u64 {
        let mut p_rng = substream(cfg.seed, "pilots", &[0, trial]);
        let ts = make_training_set(cfg, variant, &mut p_rng)?;
        let mut ch_rng = substream(cfg.seed, "channel", &[trial]);
        let ch = gen_channel(cfg, &rc.profile, &mut ch_rng)?;
        let mut cfo_rng = substream(cfg.seed, "cfo", &[trial]);
        let cfo = draw_cfo(cfg, &mut cfo_rng);
        let snr_db = rc.snr_grid_db.last().copied().unwrap_or(10.0);
        let noise_var = 10f64.powf(-snr_db / 10.0);
        let mut n_rng = substream(cfg.seed, "noise", &[trial]);
        let frame = transmit(cfg, &ts, &ch, cfo, noise_var, &mut n_rng)?;
        let mut buf = Vec::new();
        write_frame_json(&mut buf, cfg, &frame)?;
        let path = dir.join(format!("frame_{trial:04}.json"));
        write_atomic(&path, &buf)?;
        println!("frame written to {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
