//! Adapter running an external compressor and decompressor through the shell.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{Codec, CodecOutput, Theta};
use crate::error::{Error, Result};
use crate::pnm;
use crate::scalar::Real;
use crate::signal::Signal;

/// Command templates. `{in}`, `{bin}`, `{theta}` and `{out}` are substituted
/// with shell-quoted paths and the integer θ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalConfig {
    pub compress: String,
    pub decompress: String,
    pub theta_values: Vec<Theta>,
    #[serde(default = "default_timeout")]
    pub timeout_sec: f64,
}

fn default_timeout() -> f64 {
    60.0
}

#[derive(Debug, Clone)]
pub struct ExternalCodec {
    config: ExternalConfig,
}

impl ExternalCodec {
    pub fn new(config: ExternalConfig) -> Result<Self> {
        if config.theta_values.is_empty() {
            return Err(Error::Config("external codec lists no theta values".into()));
        }
        if !(config.timeout_sec.is_finite() && config.timeout_sec > 0.0) {
            return Err(Error::Config(
                "external codec timeout must be positive".into(),
            ));
        }
        Ok(Self { config })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let config = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::new(config)
    }

    pub fn config(&self) -> &ExternalConfig {
        &self.config
    }

    fn run(&self, template: &str, vars: &[(&str, String)]) -> Result<()> {
        let mut cmd = template.to_string();
        for (key, value) in vars {
            cmd = cmd.replace(&format!("{{{key}}}"), value);
        }
        let mut command = Command::new("sh");
        command
            .arg("-c")
            .arg(&cmd)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::piped());
        // Own process group, so a timeout also stops grandchildren holding the pipe.
        #[cfg(unix)]
        std::os::unix::process::CommandExt::process_group(&mut command, 0);
        let mut child = command.spawn()?;
        let mut stderr_pipe = child.stderr.take().expect("stderr is piped");
        let reader = std::thread::spawn(move || {
            let mut buf = String::new();
            let _ = stderr_pipe.read_to_string(&mut buf);
            buf
        });
        let deadline = Instant::now() + Duration::from_secs_f64(self.config.timeout_sec);
        let status = loop {
            if let Some(status) = child.try_wait()? {
                break Some(status);
            }
            if Instant::now() >= deadline {
                kill_tree(&mut child);
                break None;
            }
            std::thread::sleep(Duration::from_millis(2));
        };
        let stderr = reader.join().unwrap_or_default().trim().to_string();
        match status {
            None => Err(Error::Codec {
                message: format!("`{cmd}` timed out after {} s", self.config.timeout_sec),
                status: None,
                stderr,
            }),
            Some(s) if !s.success() => Err(Error::Codec {
                message: format!("`{cmd}` failed with {s}"),
                status: s.code(),
                stderr,
            }),
            Some(_) => Ok(()),
        }
    }
}

fn kill_tree(child: &mut std::process::Child) {
    #[cfg(unix)]
    // SAFETY: signals only the process group created for this child.
    unsafe {
        libc::killpg(child.id() as libc::pid_t, libc::SIGKILL);
    }
    let _ = child.kill();
    let _ = child.wait();
}

fn quoted(path: &Path) -> String {
    format!("'{}'", path.display().to_string().replace('\'', r"'\''"))
}

fn require_file(path: &PathBuf, what: &str) -> Result<u64> {
    std::fs::metadata(path)
        .map(|m| m.len())
        .map_err(|_| Error::codec(format!("{what} did not produce {}", path.display())))
}

impl<T: Real> Codec<T> for ExternalCodec {
    fn theta_grid(&self) -> &[Theta] {
        &self.config.theta_values
    }

    /// The input is rounded and clamped to 8 bits before compression.
    fn compress_decompress(&self, x: &Signal<T>, theta: Theta) -> Result<CodecOutput<T>> {
        <Self as Codec<T>>::check_theta(self, theta)?;
        let dir = tempfile::Builder::new()
            .prefix("compreg-codec-")
            .tempdir()?;
        let input = dir.path().join("in.pgm");
        let bin = dir.path().join("stream.bin");
        let output = dir.path().join("out.pgm");
        std::fs::write(&input, pnm::encode_pgm(x)?)?;

        self.run(
            &self.config.compress,
            &[
                ("in", quoted(&input)),
                ("bin", quoted(&bin)),
                ("theta", theta.to_string()),
            ],
        )?;
        let size = require_file(&bin, "compress command")?;
        self.run(
            &self.config.decompress,
            &[
                ("bin", quoted(&bin)),
                ("out", quoted(&output)),
                ("theta", theta.to_string()),
            ],
        )?;
        require_file(&output, "decompress command")?;
        let reconstruction: Signal<T> = pnm::read_image(&output)
            .map_err(|e| Error::codec(format!("unreadable decompressed image: {e}")))?;
        if reconstruction.dims() != x.dims() {
            return Err(Error::codec(format!(
                "decompressed image is {}x{}, expected {}x{}",
                reconstruction.height(),
                reconstruction.width(),
                x.height(),
                x.width()
            )));
        }
        Ok(CodecOutput {
            reconstruction,
            bit_cost: 8 * size,
            per_block_bits: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn copy_codec() -> ExternalCodec {
        ExternalCodec::new(ExternalConfig {
            compress: "cp {in} {bin}".into(),
            decompress: "cp {bin} {out}".into(),
            theta_values: vec![1, 2],
            timeout_sec: 10.0,
        })
        .unwrap()
    }

    #[test]
    fn copy_round_trip_is_lossless_after_quantization() {
        let x = Signal::new(2, 3, vec![1.2, 2.7, -3.0, 400.0, 5.5, 6.0]).unwrap();
        let out = copy_codec().compress_decompress(&x, 1).unwrap();
        assert_eq!(
            out.reconstruction.as_slice(),
            &[1.0, 3.0, 0.0, 255.0, 6.0, 6.0]
        );
        let header = pnm::encode_pgm(&x).unwrap().len() as u64;
        assert_eq!(out.bit_cost, 8 * header);
        assert!(out.per_block_bits.is_none());
    }

    #[test]
    fn failing_command_reports_status() {
        let codec = ExternalCodec::new(ExternalConfig {
            compress: "echo boom >&2; exit 7".into(),
            decompress: "true".into(),
            theta_values: vec![0],
            timeout_sec: 10.0,
        })
        .unwrap();
        match codec.compress_decompress(&Signal::<f64>::zeros(2, 2), 0) {
            Err(Error::Codec { status, stderr, .. }) => {
                assert_eq!(status, Some(7));
                assert_eq!(stderr, "boom");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_output_is_an_error() {
        let codec = ExternalCodec::new(ExternalConfig {
            compress: "true".into(),
            decompress: "true".into(),
            theta_values: vec![0],
            timeout_sec: 10.0,
        })
        .unwrap();
        assert!(matches!(
            codec.compress_decompress(&Signal::<f64>::zeros(2, 2), 0),
            Err(Error::Codec { .. })
        ));
    }

    #[test]
    fn slow_command_times_out() {
        let codec = ExternalCodec::new(ExternalConfig {
            compress: "sleep 5".into(),
            decompress: "true".into(),
            theta_values: vec![0],
            timeout_sec: 0.2,
        })
        .unwrap();
        let start = Instant::now();
        let r = codec.compress_decompress(&Signal::<f64>::zeros(2, 2), 0);
        assert!(matches!(r, Err(Error::Codec { status: None, .. })));
        assert!(start.elapsed() < Duration::from_secs(4));
    }

    #[test]
    fn theta_outside_config() {
        assert!(matches!(
            copy_codec().compress_decompress(&Signal::<f64>::zeros(2, 2), 9),
            Err(Error::ThetaOutOfRange { theta: 9 })
        ));
    }
}
