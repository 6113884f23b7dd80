//! Subcommand definitions and their implementations.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use compreg::codec::Theta;
use compreg::linops::DegradationOperator;
use compreg::metrics::psnr;
use compreg::pnm::{read_image, write_image};
use compreg::restore::{final_touch_inpaint, run, RunOptions};
use compreg::theory::demo_emit;
use compreg::Signal;

use crate::config::{build_codec, resolve, RunConfig};
use crate::degrade::{
    degrade, load_descriptor, write_descriptor, DegradationKind, DegradationSpec,
};
use crate::error::{CliError, CliResult, Code};
use crate::model::{report, ModelSpec};

#[derive(Debug, Parser)]
#[command(
    name = "compreg",
    version,
    about = "Image restoration by iterated lossy compression"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Blur or mask an image and add Gaussian noise.
    Degrade(DegradeArgs),
    /// Restore a degraded image given its operator descriptor.
    Restore(RestoreArgs),
    /// Peak signal-to-noise ratio between two images.
    Psnr(PsnrArgs),
    /// Optimal rate allocation table for a Gaussian model, with a verification report.
    TheoryDemo(TheoryArgs),
    /// Run the numerical checks of the rate-distortion results.
    Verify(TheoryArgs),
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    pub input: PathBuf,
    /// set1, set2, uniform:<size>, psf:<file>, inpaint:<fraction> or identity.
    #[arg(long, default_value = "set2")]
    pub kind: String,
    /// Noise variance; defaults to 2 for set1, 0.3 for set2 and 0 otherwise.
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to the output path with a `.json` extension.
    #[arg(long)]
    pub descriptor: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RestoreArgs {
    pub input: PathBuf,
    pub descriptor: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub algorithm: Option<u8>,
    /// dct, oracle or external:<config.json>.
    #[arg(long)]
    pub codec: Option<String>,
    #[arg(long)]
    pub codebook: Option<PathBuf>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<Theta>,
    #[arg(long)]
    pub shifts: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Also write the decompressed form of the estimate.
    #[arg(long)]
    pub compressed: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PsnrArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    #[arg(long, default_value_t = 255.0)]
    pub peak: f64,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    /// Model JSON; a built-in AR(1) model when absent.
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Allocation CSV (theory-demo only).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Verification report JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn read(path: &Path) -> CliResult<Signal<f64>> {
    read_image(path).map_err(|e| CliError::from(e).context(path.display()))
}

fn write(path: &Path, x: &Signal<f64>) -> CliResult<()> {
    write_image(path, x).map_err(|e| CliError::from(e).context(path.display()))
}

pub fn run_cli(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Degrade(a) => degrade_cmd(&a, stdout),
        Command::Restore(a) => restore_cmd(&a, stdout),
        Command::Psnr(a) => psnr_cmd(&a, stdout),
        Command::TheoryDemo(a) => theory_demo_cmd(&a, stdout),
        Command::Verify(a) => verify_cmd(&a, stdout),
    }
}

fn degrade_cmd(a: &DegradeArgs, out: &mut dyn Write) -> CliResult<()> {
    let x = read(&a.input)?;
    let spec = DegradationSpec::new(a.kind.parse::<DegradationKind>()?, a.sigma2, a.seed)?;
    let descriptor_path = a
        .descriptor
        .clone()
        .unwrap_or_else(|| a.out.with_extension("json"));
    let stem = descriptor_path
        .file_stem()
        .map_or_else(|| "degraded".into(), |s| s.to_string_lossy().into_owned());
    let degraded = degrade(&x, &spec, Path::new(&format!("{stem}.mask.pgm")))?;
    write(&a.out, &degraded.y)?;
    write_descriptor(&degraded, &descriptor_path)?;
    writeln!(
        out,
        "degraded {} ({}, sigma2 {}) -> {}",
        a.input.display(),
        degraded.descriptor.degradation,
        spec.sigma_n2,
        a.out.display()
    )?;
    Ok(())
}

fn restore_cmd(a: &RestoreArgs, out: &mut dyn Write) -> CliResult<()> {
    let (descriptor, h) = load_descriptor(&a.descriptor)?;
    let y = read(&a.input)?;
    if y.dims() != h.dims() {
        return Err(CliError::config(format!(
            "image is {:?} but the descriptor describes {:?}",
            y.dims(),
            h.dims()
        )));
    }
    let file = match &a.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let flags = RunConfig {
        algorithm: a.algorithm,
        codec: a.codec.clone(),
        codebook: a.codebook.clone(),
        beta: a.beta,
        mu: a.mu,
        theta: a.theta,
        shifts: a.shifts,
        iters: a.iters,
        seed: a.seed,
        reference: a.reference.clone(),
        ..Default::default()
    };
    let cfg = file.merged(flags);
    let resolved = resolve(&cfg, descriptor.is_mask())?;
    let codec = build_codec(&resolved.codec, resolved.admm.block)?;
    let reference = resolved.reference.as_deref().map(read).transpose()?;
    let outcome = run(
        resolved.algorithm,
        &y,
        &h,
        codec.as_ref(),
        &resolved.admm,
        RunOptions {
            reference: reference.as_ref(),
            initial: None,
        },
    )?;
    let restored = match &h {
        DegradationOperator::DiagonalMask(m) => final_touch_inpaint(&outcome.estimate, &y, m)?,
        DegradationOperator::Circulant(_) => outcome.estimate.clone(),
    };
    write(&a.out, &restored)?;
    if let Some(p) = &a.compressed {
        write(p, &outcome.compressed_estimate)?;
    }
    if let Some(p) = &a.trace {
        let mut w =
            csv::Writer::from_path(p).map_err(|e| CliError::from(e).context(p.display()))?;
        for row in outcome.trace() {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    let bits: u64 = outcome.final_outputs.iter().map(|o| o.bit_cost).sum();
    write!(
        out,
        "algorithm {} ran {} iterations, {} bits",
        resolved.algorithm.number(),
        outcome.iterations(),
        bits
    )?;
    if let Some(r) = &reference {
        write!(out, ", psnr {}", format_psnr(psnr(&restored, r, 255.0)?))?;
    }
    writeln!(out)?;
    Ok(())
}

/// Four decimals, or `inf` for identical images.
pub fn format_psnr(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.4}")
    }
}

fn psnr_cmd(a: &PsnrArgs, out: &mut dyn Write) -> CliResult<()> {
    if !(a.peak.is_finite() && a.peak > 0.0) {
        return Err(CliError::config("peak must be positive"));
    }
    let (x, y) = (read(&a.a)?, read(&a.b)?);
    writeln!(out, "{}", format_psnr(psnr(&x, &y, a.peak)?))?;
    Ok(())
}

fn load_spec(a: &TheoryArgs) -> CliResult<ModelSpec> {
    let mut spec = match &a.spec {
        Some(p) => ModelSpec::from_file(p)?,
        None => ModelSpec::default(),
    };
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if let Some(t) = a.trials {
        spec.trials = t;
    }
    Ok(spec)
}

fn write_report(path: &Path, r: &crate::model::Report) -> CliResult<()> {
    let text = serde_json::to_string_pretty(r)?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::from(e).context(path.display()))
}

fn theory_demo_cmd(a: &TheoryArgs, out: &mut dyn Write) -> CliResult<()> {
    let csv_path = a
        .out
        .clone()
        .ok_or_else(|| CliError::config("theory-demo needs --out"))?;
    let spec = load_spec(a)?;
    let model = spec.build()?;
    demo_emit(&model, &csv_path).map_err(|e| CliError::from(e).context(csv_path.display()))?;
    let r = report(&spec)?;
    let report_path = a
        .report
        .clone()
        .unwrap_or_else(|| csv_path.with_extension("report.json"));
    write_report(&report_path, &r)?;
    let passed = r.checks.iter().filter(|c| c.passed).count();
    writeln!(
        out,
        "rank {}, total rate {:.6} bits, {passed}/{} checks passed -> {}",
        r.rank,
        r.total_rate,
        r.checks.len(),
        csv_path.display()
    )?;
    Ok(())
}

fn verify_cmd(a: &TheoryArgs, out: &mut dyn Write) -> CliResult<()> {
    let spec = load_spec(a)?;
    let r = report(&spec)?;
    for c in &r.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        writeln!(
            out,
            "{tag} {:<36} {:.3e} (tolerance {:.1e})",
            c.name, c.value, c.tolerance
        )?;
    }
    if let Some(p) = &a.report {
        write_report(p, &r)?;
    }
    let failed = r.checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::new(
            Code::Solver,
            format!("{failed} verification checks failed"),
        ));
    }
    Ok(())
}
