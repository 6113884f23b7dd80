//! Synthetic degradations and the operator descriptor written next to them.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use compreg::linops::{DegradationOperator, Kernel};
use compreg::pnm::{read_image, write_image};
use compreg::Signal;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum DegradationKind {
    /// 15×15 PSF `1/(1 + x₁² + x₂²)`, `x₁, x₂ ∈ −7..=7`, unit sum; σ² = 2.
    Set1,
    /// 9×9 uniform blur; σ² = 0.3.
    Set2,
    UniformBlur(usize),
    PsfFile(PathBuf),
    /// Each pixel is missing with this probability.
    Inpaint(f64),
    Identity,
}

impl DegradationKind {
    pub fn default_sigma2(&self) -> f64 {
        match self {
            Self::Set1 => 2.0,
            Self::Set2 => 0.3,
            _ => 0.0,
        }
    }

    fn label(&self) -> String {
        match self {
            Self::Set1 => "set1".into(),
            Self::Set2 => "set2".into(),
            Self::UniformBlur(n) => format!("uniform:{n}"),
            Self::PsfFile(p) => format!("psf:{}", p.display()),
            Self::Inpaint(f) => format!("inpaint:{f}"),
            Self::Identity => "identity".into(),
        }
    }
}

impl FromStr for DegradationKind {
    type Err = CliError;

    /// `set1`, `set2`, `uniform:<odd size>`, `psf:<file>`, `inpaint:<fraction>` or `identity`.
    fn from_str(s: &str) -> CliResult<Self> {
        let (head, arg) = s.split_once(':').map_or((s, None), |(h, a)| (h, Some(a)));
        let need = |what: &str| {
            arg.ok_or_else(|| CliError::config(format!("degradation `{head}` needs a {what}")))
        };
        let kind = match head {
            "set1" => Self::Set1,
            "set2" => Self::Set2,
            "identity" => Self::Identity,
            "uniform" => {
                let n: usize = need("size")?
                    .parse()
                    .map_err(|_| CliError::config(format!("bad blur size in `{s}`")))?;
                Self::UniformBlur(n)
            }
            "psf" => Self::PsfFile(PathBuf::from(need("file")?)),
            "inpaint" => {
                let f: f64 = need("fraction")?
                    .parse()
                    .map_err(|_| CliError::config(format!("bad fraction in `{s}`")))?;
                Self::Inpaint(f)
            }
            _ => return Err(CliError::config(format!("unknown degradation `{s}`"))),
        };
        if arg.is_some() && matches!(kind, Self::Set1 | Self::Set2 | Self::Identity) {
            return Err(CliError::config(format!(
                "degradation `{head}` takes no argument"
            )));
        }
        Ok(kind)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegradationSpec {
    pub kind: DegradationKind,
    pub sigma_n2: f64,
    pub seed: u64,
}

impl DegradationSpec {
    pub fn new(kind: DegradationKind, sigma_n2: Option<f64>, seed: u64) -> CliResult<Self> {
        let sigma_n2 = sigma_n2.unwrap_or_else(|| kind.default_sigma2());
        if !(sigma_n2.is_finite() && sigma_n2 >= 0.0) {
            return Err(CliError::config(
                "noise variance must be finite and non-negative",
            ));
        }
        match &kind {
            DegradationKind::UniformBlur(n) if *n == 0 || n % 2 == 0 => {
                return Err(CliError::config("blur size must be odd"));
            }
            DegradationKind::Inpaint(f) if !(0.0..1.0).contains(f) => {
                return Err(CliError::config("missing fraction must lie in [0, 1)"));
            }
            _ => {}
        }
        Ok(Self {
            kind,
            sigma_n2,
            seed,
        })
    }
}

/// Unnormalized taps of the `Set1` PSF, row-major over `x₁, x₂ ∈ −7..=7`.
pub fn set1_psf_raw() -> Vec<f64> {
    (-7i32..=7)
        .flat_map(|a| (-7i32..=7).map(move |b| 1.0 / f64::from(1 + a * a + b * b)))
        .collect()
}

/// Reads a PSF written as whitespace-separated rows, one row per line.
pub fn read_psf(path: &Path) -> CliResult<Kernel<f64>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::from(e).context(path.display()))?;
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split_whitespace()
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| CliError::config(format!("bad PSF value `{v}`")))
                })
                .collect()
        })
        .collect::<CliResult<_>>()?;
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err(CliError::config("PSF rows differ in length"));
    }
    Ok(Kernel::new(rows.len(), width, rows.concat())?)
}

fn kernel_for(kind: &DegradationKind) -> CliResult<Option<Kernel<f64>>> {
    Ok(match kind {
        DegradationKind::Set1 => Some(Kernel::normalized(15, 15, set1_psf_raw())?),
        DegradationKind::Set2 => Some(Kernel::uniform(9, 9)?),
        DegradationKind::UniformBlur(n) => Some(Kernel::uniform(*n, *n)?),
        DegradationKind::PsfFile(p) => Some(read_psf(p)?),
        DegradationKind::Inpaint(_) | DegradationKind::Identity => None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorDescriptor {
    Identity,
    /// Exact taps, anchored at `(height/2, width/2)` and applied cyclically.
    Convolution {
        height: usize,
        width: usize,
        taps: Vec<f64>,
    },
    /// PGM with 255 for kept pixels and 0 for missing ones, relative to the descriptor.
    Mask {
        file: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Descriptor {
    pub degradation: String,
    pub height: usize,
    pub width: usize,
    pub operator: OperatorDescriptor,
    pub sigma_n2: f64,
    pub seed: u64,
}

impl Descriptor {
    pub fn is_mask(&self) -> bool {
        matches!(self.operator, OperatorDescriptor::Mask { .. })
    }
}

/// The result of [`degrade`]: the observation, its operator and the descriptor.
#[derive(Debug, Clone)]
pub struct Degraded {
    pub y: Signal<f64>,
    pub operator: DegradationOperator<f64>,
    pub descriptor: Descriptor,
    pub keep: Option<Vec<bool>>,
}

/// `y = Hx + n` with `n ~ N(0, σ²)` drawn from `spec.seed`. For masks the mask is
/// drawn first and missing pixels are set to 0. The descriptor names the mask
/// file as `mask_file`.
pub fn degrade(x: &Signal<f64>, spec: &DegradationSpec, mask_file: &Path) -> CliResult<Degraded> {
    let dims = x.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (operator, descriptor_op, keep) = match &spec.kind {
        DegradationKind::Inpaint(fraction) => {
            let keep: Vec<bool> = (0..x.len()).map(|_| !rng.random_bool(*fraction)).collect();
            let op = DegradationOperator::mask(dims, keep.clone())?;
            let d = OperatorDescriptor::Mask {
                file: mask_file.to_path_buf(),
            };
            (op, d, Some(keep))
        }
        kind => match kernel_for(kind)? {
            Some(k) => {
                let d = OperatorDescriptor::Convolution {
                    height: k.dims().0,
                    width: k.dims().1,
                    taps: k.taps().to_vec(),
                };
                (DegradationOperator::convolution(k, dims)?, d, None)
            }
            None => (
                DegradationOperator::identity(dims)?,
                OperatorDescriptor::Identity,
                None,
            ),
        },
    };
    let mut y = operator.apply(x)?;
    if spec.sigma_n2 > 0.0 {
        let normal =
            Normal::new(0.0, spec.sigma_n2.sqrt()).map_err(|e| CliError::config(e.to_string()))?;
        for v in y.as_mut_slice() {
            *v += normal.sample(&mut rng);
        }
        if let Some(keep) = &keep {
            for (v, &k) in y.as_mut_slice().iter_mut().zip(keep) {
                if !k {
                    *v = 0.0;
                }
            }
        }
    }
    let descriptor = Descriptor {
        degradation: spec.kind.label(),
        height: dims.0,
        width: dims.1,
        operator: descriptor_op,
        sigma_n2: spec.sigma_n2,
        seed: spec.seed,
    };
    Ok(Degraded {
        y,
        operator,
        descriptor,
        keep,
    })
}

fn mask_image(keep: &[bool], dims: (usize, usize)) -> Signal<f64> {
    let data = keep.iter().map(|&k| if k { 255.0 } else { 0.0 }).collect();
    Signal::new(dims.0, dims.1, data).expect("mask matches dims")
}

/// Writes the descriptor JSON and, for masks, the mask image beside it.
pub fn write_descriptor(d: &Degraded, path: &Path) -> CliResult<()> {
    if let (OperatorDescriptor::Mask { file }, Some(keep)) = (&d.descriptor.operator, &d.keep) {
        let mask_path = resolve(path, file);
        write_image(
            &mask_path,
            &mask_image(keep, (d.descriptor.height, d.descriptor.width)),
        )
        .map_err(|e| CliError::from(e).context(mask_path.display()))?;
    }
    let text = serde_json::to_string_pretty(&d.descriptor)?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::from(e).context(path.display()))
}

fn resolve(descriptor_path: &Path, file: &Path) -> PathBuf {
    if file.is_absolute() {
        file.to_path_buf()
    } else {
        descriptor_path.parent().unwrap_or(Path::new("")).join(file)
    }
}

/// Loads a descriptor and rebuilds its operator.
pub fn load_descriptor(path: &Path) -> CliResult<(Descriptor, DegradationOperator<f64>)> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::from(e).context(path.display()))?;
    let d: Descriptor = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let dims = (d.height, d.width);
    let op = match &d.operator {
        OperatorDescriptor::Identity => DegradationOperator::identity(dims)?,
        OperatorDescriptor::Convolution {
            height,
            width,
            taps,
        } => DegradationOperator::convolution(Kernel::new(*height, *width, taps.clone())?, dims)?,
        OperatorDescriptor::Mask { file } => {
            let mask_path = resolve(path, file);
            let m = read_image::<f64>(&mask_path)
                .map_err(|e| CliError::from(e).context(mask_path.display()))?;
            if m.dims() != dims {
                return Err(CliError::config(format!(
                    "mask is {:?} but the descriptor says {dims:?}",
                    m.dims()
                )));
            }
            DegradationOperator::mask(dims, m.as_slice().iter().map(|&v| v >= 128.0).collect())?
        }
    };
    Ok((d, op))
}
