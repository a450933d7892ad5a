//! Command-line front end: `detect`, `tune`, `score` and `synth`.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O error, 3 analysis
//! precondition failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Deserialize;

use crate::detector::{self, Detector, PipelineConfig, ThresholdMode};
use crate::error::{Error, Result};
use crate::evalkit::{self, DEFAULT_EVAL_HOP_S};
use crate::rhythm::RHYTHM_CSV_HEADER;
use crate::signal;
use crate::synthlab::{self, SceneSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_ANALYSIS: i32 = 3;

/// Environment variable naming a config file used when `--config` is absent.
pub const CONFIG_ENV: &str = "STACCATO_CONFIG";

#[derive(Debug, Parser)]
#[command(name = "staccato", version, about = "Detect rhythmic vocalized laughter in recordings")]
struct Cli {
    /// TOML run configuration (falls back to $STACCATO_CONFIG)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print laughter intervals found in a WAV file
    Detect {
        wav: PathBuf,
        /// Emit a JSON array instead of tab-separated lines
        #[arg(long)]
        json: bool,
        /// `otsu` or `fixed:<dB>`
        #[arg(long)]
        threshold_mode: Option<ThresholdMode>,
        /// Worker threads for frame analysis
        #[arg(long)]
        threads: Option<usize>,
        /// Write rhythm matrices of gated frames to this CSV
        #[arg(long)]
        debug_rhythm: Option<PathBuf>,
    },
    /// Compare the Otsu power gate with the F1-optimal fixed gate
    Tune {
        wav: PathBuf,
        truth: PathBuf,
        /// Prefix for roc_otsu.csv and roc_opt.csv (e.g. `out/`)
        #[arg(long, default_value = "")]
        out_prefix: String,
        /// Also write roc.svg
        #[arg(long)]
        svg: bool,
    },
    /// Score hypothesis intervals against a reference annotation
    Score {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Recording duration in seconds
        #[arg(long)]
        dur: f64,
        #[arg(long, default_value_t = DEFAULT_EVAL_HOP_S)]
        hop: f64,
        #[arg(long)]
        json: bool,
    },
    /// Render synthetic clips with ground truth
    Synth {
        /// Scene description (TOML)
        #[arg(long, required_unless_present = "corpus", conflicts_with = "corpus")]
        spec: Option<PathBuf>,
        /// Output WAV; the truth CSV is written next to it
        #[arg(long, requires = "spec")]
        out: Option<PathBuf>,
        /// Emit the standard corpus of N clips (60 % laughter, 40 % controls)
        #[arg(long, requires = "out_dir")]
        corpus: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.pipeline.validate()?;
        Ok(cfg)
    }

    /// `explicit` if given, else the file named by [`CONFIG_ENV`], else
    /// defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_io() {
        EXIT_IO
    } else {
        EXIT_ANALYSIS
    }
}

/// Parses `args` (including the program name) and runs the command, writing
/// results to stdout and diagnostics to stderr. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let mut out = String::new();
    let result = execute(cli, &mut out);
    print!("{out}");
    let _ = std::io::stdout().flush();
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: Cli, out: &mut String) -> Result<()> {
    match cli.command {
        Command::Detect { wav, json, threshold_mode, threads, debug_rhythm } => {
            let mut cfg = RunConfig::resolve(cli.config.as_deref())?;
            if let Some(mode) = threshold_mode {
                cfg.pipeline.threshold_mode = mode;
            }
            let mut det = Detector::new(cfg.pipeline)?;
            if let Some(n) = threads.or(cfg.threads) {
                det = det.with_threads(n)?;
            }
            let signal = signal::load_canonical(&wav)?;
            let report = det.analyze(&signal, debug_rhythm.is_some())?;
            if let Some(path) = debug_rhythm {
                let mut csv = String::from(RHYTHM_CSV_HEADER);
                for (index, start, matrix) in &report.rhythm {
                    matrix.write_csv_rows(*index, *start, &mut csv);
                }
                std::fs::write(path, csv)?;
            }
            out.push_str(&if json {
                detector::format_json(&report.intervals)
            } else {
                detector::format_tsv(&report.intervals)
            });
        }
        Command::Tune { wav, truth, out_prefix, svg } => {
            let cfg = RunConfig::resolve(cli.config.as_deref())?;
            let signal = signal::load_canonical(&wav)?;
            let reference = evalkit::load_annotations(&truth)?;
            let study = evalkit::threshold_study(&signal, &reference, &cfg.pipeline)?;
            std::fs::write(format!("{out_prefix}roc_otsu.csv"), study.otsu_curve.to_csv())?;
            std::fs::write(format!("{out_prefix}roc_opt.csv"), study.optimized.curve.to_csv())?;
            if svg {
                let plot = evalkit::roc_svg(&[("otsu", &study.otsu_curve), ("optimized", &study.optimized.curve)]);
                std::fs::write(format!("{out_prefix}roc.svg"), plot)?;
            }
            let _ = writeln!(out, "otsu threshold      {:.3} dB  F1 {:.3}", study.otsu_threshold_db, study.otsu_f1);
            let _ = writeln!(
                out,
                "optimized threshold {:.3} dB  F1 {:.3}  AUC {:.3}",
                study.optimized.threshold, study.optimized.f1, study.optimized.curve.auc
            );
            let _ = writeln!(out, "apply with: --threshold-mode fixed:{}", study.optimized.threshold);
        }
        Command::Score { hyp, reference, dur, hop, json } => {
            let detected = evalkit::load_hypothesis(&hyp)?;
            let reference = evalkit::load_annotations(&reference)?;
            let report = evalkit::score(&detected, &reference, dur, hop)?;
            if json {
                out.push_str(&serde_json::to_string_pretty(&report).expect("report serializes"));
                out.push('\n');
            } else {
                out.push_str(&report.to_text());
            }
        }
        Command::Synth { spec, out: wav, corpus, out_dir, seed } => {
            if let Some(n) = corpus {
                let dir = out_dir.expect("clap requires out_dir with corpus");
                std::fs::create_dir_all(&dir)?;
                let n_laugh = n * 3 / 5;
                let mut manifest = String::from("name\tkind\tfingerprint\n");
                for entry in synthlab::standard_corpus(seed, n_laugh, n - n_laugh) {
                    let clip = synthlab::synth_scene(&entry.scene)?;
                    synthlab::write_clip(dir.join(format!("{}.wav", entry.name)), &clip)?;
                    let kind = serde_json::to_value(entry.kind).expect("kind serializes");
                    let _ = writeln!(manifest, "{}\t{}\t{}", entry.name, kind.as_str().unwrap_or(""), clip.fingerprint);
                }
                std::fs::write(dir.join("corpus.tsv"), manifest)?;
                let _ = writeln!(out, "wrote {n} clips to {}", dir.display());
            } else {
                let spec_path = spec.expect("clap requires spec without corpus");
                let text = std::fs::read_to_string(&spec_path).map_err(|e| match e.kind() {
                    std::io::ErrorKind::NotFound => Error::NotFound(spec_path.clone()),
                    _ => Error::Io(e),
                })?;
                let scene: SceneSpec = toml::from_str(&text)
                    .map_err(|e| Error::InvalidSpec(format!("{}: {e}", spec_path.display())))?;
                for bout in &scene.bouts {
                    for w in bout.spec.warnings() {
                        eprintln!("warning: {w}");
                    }
                }
                let clip = synthlab::synth_scene(&scene)?;
                let wav = wav.unwrap_or_else(|| spec_path.with_extension("wav"));
                let truth = synthlab::write_clip(&wav, &clip)?;
                let _ = writeln!(out, "wrote {} and {}", wav.display(), truth.display());
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_and_help() {
        assert_eq!(run(["staccato"]), EXIT_USAGE);
        assert_eq!(run(["staccato", "detect"]), EXIT_USAGE);
        assert_eq!(run(["staccato", "detect", "x.wav", "--threshold-mode", "median"]), EXIT_USAGE);
        assert_eq!(run(["staccato", "--help"]), EXIT_OK);
        assert_eq!(run(["staccato", "--version"]), EXIT_OK);
    }

    #[test]
    fn run_config_rejects_unknown_keys() {
        let cfg: RunConfig = toml::from_str("threads = 2\n[pipeline]\nconfidence_level = 0.9\n").unwrap();
        assert_eq!(cfg.threads, Some(2));
        assert_eq!(cfg.pipeline.confidence_level, 0.9);
        assert!(toml::from_str::<RunConfig>("thread = 2\n").is_err());
        assert!(toml::from_str::<RunConfig>("[pipeline]\nframe = 2\n").is_err());
    }
}
