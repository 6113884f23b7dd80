//! Restoration settings from a JSON file and command-line overrides.

use std::path::{Path, PathBuf};

use compreg::codec::{Codebook, Codec, DctCodec, ExternalCodec, OracleCodec, Theta};
use compreg::restore::{AdmmConfig, Algorithm, ThetaSchedule};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Every field is optional; unset fields take the defaults of the operator kind.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: Option<u8>,
    /// `dct`, `oracle` or `external:<config.json>`.
    pub codec: Option<String>,
    /// Codebook file for the oracle codec.
    pub codebook: Option<PathBuf>,
    pub beta: Option<f64>,
    pub mu: Option<f64>,
    pub theta: Option<Theta>,
    /// Takes precedence over `theta`.
    pub theta_schedule: Option<ThetaSchedule>,
    pub shifts: Option<usize>,
    pub block: Option<[usize; 2]>,
    pub iters: Option<usize>,
    pub cg_tol: Option<f64>,
    pub cg_max_iters: Option<usize>,
    pub stop_tol: Option<f64>,
    /// Recorded in outputs; the built-in codecs are deterministic.
    pub seed: Option<u64>,
    pub reference: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::from(e).context(path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn merged(self, other: RunConfig) -> Self {
        macro_rules! pick {
            ($($f:ident),*) => { Self { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            algorithm,
            codec,
            codebook,
            beta,
            mu,
            theta,
            theta_schedule,
            shifts,
            block,
            iters,
            cg_tol,
            cg_max_iters,
            stop_tol,
            seed,
            reference
        )
    }
}

/// Default settings for one kind of degradation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Defaults {
    pub algorithm: Algorithm,
    pub beta: f64,
    pub mu: f64,
    pub theta: Theta,
    pub shifts: usize,
    pub iters: usize,
}

/// Deblurring with the built-in DCT codec; θ picked by PSNR on the bundled test images.
pub const DEBLUR_DEFAULTS: Defaults = Defaults {
    algorithm: Algorithm::Overlapping,
    beta: 1e-3,
    mu: 6.67e-6,
    theta: 11,
    shifts: 9,
    iters: 15,
};

/// Inpainting with the built-in DCT codec.
pub const INPAINT_DEFAULTS: Defaults = Defaults {
    algorithm: Algorithm::RobustDual,
    beta: 0.1 / 64.0,
    mu: 6.67e-6,
    theta: 13,
    shifts: 64,
    iters: 35,
};

#[derive(Debug, Clone, PartialEq)]
pub enum CodecChoice {
    Dct,
    Oracle(PathBuf),
    External(PathBuf),
}

/// A fully specified run.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub algorithm: Algorithm,
    pub codec: CodecChoice,
    pub admm: AdmmConfig,
    pub seed: u64,
    pub reference: Option<PathBuf>,
}

pub fn resolve(cfg: &RunConfig, inpainting: bool) -> CliResult<Resolved> {
    let d = if inpainting {
        INPAINT_DEFAULTS
    } else {
        DEBLUR_DEFAULTS
    };
    let algorithm = match cfg.algorithm {
        Some(n) => Algorithm::from_number(n)
            .ok_or_else(|| CliError::config(format!("algorithm must be 1, 2 or 3, not {n}")))?,
        None => d.algorithm,
    };
    let codec = match cfg.codec.as_deref().unwrap_or("dct") {
        "dct" => CodecChoice::Dct,
        "oracle" => CodecChoice::Oracle(
            cfg.codebook
                .clone()
                .ok_or_else(|| CliError::config("the oracle codec needs a codebook file"))?,
        ),
        s => match s.strip_prefix("external:") {
            Some(p) if !p.is_empty() => CodecChoice::External(PathBuf::from(p)),
            _ => return Err(CliError::config(format!("unknown codec `{s}`"))),
        },
    };
    let shifts = match (cfg.shifts, algorithm) {
        (Some(m), _) => m,
        (None, Algorithm::NonOverlapping) => 1,
        (None, _) => d.shifts,
    };
    let theta_schedule = match (cfg.theta_schedule, cfg.theta, &codec) {
        (Some(s), _, _) => s,
        (None, Some(theta), _) => ThetaSchedule::Fixed { theta },
        (None, None, CodecChoice::Dct) => ThetaSchedule::Fixed { theta: d.theta },
        (None, None, _) => {
            return Err(CliError::config(
                "set theta or theta_schedule for this codec",
            ))
        }
    };
    let base = AdmmConfig::default();
    let block = cfg.block.map_or(base.block, |[h, w]| (h, w));
    let admm = AdmmConfig {
        beta: cfg.beta.unwrap_or(d.beta),
        mu: Some(cfg.mu.unwrap_or(d.mu / shifts as f64)),
        theta_schedule,
        num_shifts: shifts,
        block,
        max_iters: cfg.iters.unwrap_or(d.iters),
        cg_tol: cfg.cg_tol.unwrap_or(base.cg_tol),
        cg_max_iters: cfg.cg_max_iters.unwrap_or(base.cg_max_iters),
        stop_tol: cfg.stop_tol.unwrap_or(base.stop_tol),
    };
    admm.validate()?;
    Ok(Resolved {
        algorithm,
        codec,
        admm,
        seed: cfg.seed.unwrap_or(0),
        reference: cfg.reference.clone(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodebookEntry {
    values: Vec<f64>,
    bits: u64,
}

/// On-disk oracle codec: block size, entries and the λ grid indexed by θ.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodebookFile {
    block: [usize; 2],
    entries: Vec<CodebookEntry>,
    lambdas: Vec<f64>,
}

pub fn load_oracle(path: &Path) -> CliResult<OracleCodec<f64>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::from(e).context(path.display()))?;
    let f: CodebookFile = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let entries = f.entries.into_iter().map(|e| (e.values, e.bits)).collect();
    let book = Codebook::new((f.block[0], f.block[1]), entries)?;
    Ok(OracleCodec::new(book, f.lambdas)?)
}

pub fn build_codec(choice: &CodecChoice, block: (usize, usize)) -> CliResult<Box<dyn Codec<f64>>> {
    Ok(match choice {
        CodecChoice::Dct => Box::new(DctCodec::new(block)),
        CodecChoice::Oracle(p) => Box::new(load_oracle(p)?),
        CodecChoice::External(p) => Box::new(ExternalCodec::from_file(p)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_operator_kind() {
        let r = resolve(&RunConfig::default(), false).unwrap();
        assert_eq!(r.algorithm, Algorithm::Overlapping);
        assert_eq!(r.admm.num_shifts, 9);
        assert_eq!(r.admm.theta_schedule, ThetaSchedule::Fixed { theta: 11 });
        assert!((r.admm.mu.unwrap() - 6.67e-6 / 9.0).abs() < 1e-20);
        let r = resolve(&RunConfig::default(), true).unwrap();
        assert_eq!(r.algorithm, Algorithm::RobustDual);
        assert_eq!(r.admm.num_shifts, 64);
    }

    #[test]
    fn algorithm_one_defaults_to_one_shift() {
        let cfg = RunConfig {
            algorithm: Some(1),
            ..Default::default()
        };
        assert_eq!(resolve(&cfg, false).unwrap().admm.num_shifts, 1);
    }

    #[test]
    fn overrides_win() {
        let file = RunConfig {
            beta: Some(0.5),
            theta: Some(4),
            ..Default::default()
        };
        let flags = RunConfig {
            theta: Some(7),
            ..Default::default()
        };
        let m = file.merged(flags);
        assert_eq!((m.beta, m.theta), (Some(0.5), Some(7)));
    }

    #[test]
    fn rejects_bad_settings() {
        let bad = |cfg: RunConfig| resolve(&cfg, false).is_err();
        assert!(bad(RunConfig {
            algorithm: Some(4),
            ..Default::default()
        }));
        assert!(bad(RunConfig {
            codec: Some("jpeg".into()),
            ..Default::default()
        }));
        assert!(bad(RunConfig {
            codec: Some("oracle".into()),
            ..Default::default()
        }));
        assert!(bad(RunConfig {
            shifts: Some(65),
            ..Default::default()
        }));
        assert!(serde_json::from_str::<RunConfig>(r#"{"betta": 1}"#).is_err());
    }
}
