//! Command-line front end: encode, decode, experiments, NSDT training and
//! corpus generation.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bav1::codec::{decode_frame, encode_frame, ToolConfig, DEFAULT_LAMBDA_SCALE, DEFAULT_SHARED_DEPTH};
use bav1::frame::{load_frame, write_raw, write_y4m, FileFormat};
use bav1::harness::train::train_default_kernel_file;
use bav1::harness::{additivity, load_corpus, mini_corpus, run_experiment, write_corpus, ExperimentKind, ExperimentOptions};
use clap::{Parser, Subcommand};
use log::info;

#[derive(Parser)]
#[command(name = "bav1", version, about = "Intra-frame YCbCr 4:2:0 block codec with toggleable coding tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode the first frame of a Y4M or raw 4:2:0 file.
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 39)]
        qp: u8,
        /// Tool list such as `+sdp,+ccso,-nsdt`; `all` names every tool.
        #[arg(long, default_value = "")]
        tools: String,
        /// Width of a raw `.yuv` input.
        #[arg(long)]
        width: Option<usize>,
        /// Height of a raw `.yuv` input.
        #[arg(long)]
        height: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_SHARED_DEPTH)]
        shared_depth: u8,
        #[arg(long, default_value_t = DEFAULT_LAMBDA_SCALE)]
        lambda_scale: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Decode a bitstream to raw planar 4:2:0, or Y4M for a `.y4m` output.
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run a BD-rate experiment and write the CSV report.
    Experiment {
        #[arg(long, default_value = "tool-on")]
        kind: ExperimentKind,
        /// Directory of `.y4m` files; the built-in mini-corpus if absent.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = ExperimentOptions::default().qps)]
        qps: Vec<u8>,
        #[arg(long)]
        out: PathBuf,
        /// Also run the opposite kind and log the additivity check.
        #[arg(long)]
        with_opposite: bool,
        /// Encode one configuration at a time for meaningful time ratios.
        #[arg(long)]
        timing_serial: bool,
    },
    /// Train the NSDT KLT kernels on the mini-corpus and write the kernel file.
    TrainNsdt {
        #[arg(long)]
        output: PathBuf,
    },
    /// Write the mini-corpus as `.y4m` files.
    Corpus {
        #[arg(long)]
        out: PathBuf,
    },
}

fn input_format(path: &Path, width: Option<usize>, height: Option<usize>) -> Result<FileFormat> {
    let is_y4m = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("y4m"));
    match (is_y4m, width, height) {
        (true, _, _) => Ok(FileFormat::Y4m),
        (false, Some(width), Some(height)) => Ok(FileFormat::RawYuv420 { width, height }),
        _ => bail!("raw input {} needs --width and --height", path.display()),
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Encode { input, qp, tools, width, height, shared_depth, lambda_scale, output } => {
            let frame = load_frame(&input, input_format(&input, width, height)?)?;
            let mut cfg = ToolConfig::baseline(qp).apply_tool_list(&tools).map_err(anyhow::Error::msg)?;
            cfg.shared_depth = shared_depth;
            cfg.lambda_scale = lambda_scale;
            let out = encode_frame(&frame, &cfg)?;
            fs::write(&output, &out.bitstream).with_context(|| format!("writing {}", output.display()))?;
            let q = &out.stats.quality;
            info!(
                "{}x{} qp {} tools {:#04x}: {} bytes, PSNR Y {:.2} Cb {:.2} Cr {:.2} dB",
                frame.width(),
                frame.height(),
                cfg.qp,
                cfg.bitmap(),
                out.bitstream.len(),
                q.psnr_y(),
                q.psnr_cb(),
                q.psnr_cr()
            );
        }
        Command::Decode { input, output } => {
            let bytes = fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            let frame = decode_frame(&bytes)?;
            if output.extension().is_some_and(|e| e.eq_ignore_ascii_case("y4m")) {
                write_y4m(&output, &frame)?;
            } else {
                write_raw(&output, &frame)?;
            }
            info!("{}x{} written to {}", frame.width(), frame.height(), output.display());
        }
        Command::Experiment { kind, corpus, qps, out, with_opposite, timing_serial } => {
            let items = match corpus {
                Some(dir) => load_corpus(&dir)?,
                None => mini_corpus(),
            };
            let opts = ExperimentOptions { qps, timing_serial, ..ExperimentOptions::default() };
            info!("{} over {} files at qps {:?}", kind.name(), items.len(), opts.qps);
            let report = run_experiment(kind, &items, &opts)?;
            report.write_csv(fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?)?;
            info!("report written to {}", out.display());
            if with_opposite {
                let (on, off) = match kind {
                    ExperimentKind::ToolOn => (report, run_experiment(ExperimentKind::ToolOff, &items, &opts)?),
                    ExperimentKind::ToolOff => (run_experiment(ExperimentKind::ToolOn, &items, &opts)?, report),
                    ExperimentKind::Package => bail!("--with-opposite needs tool-on or tool-off"),
                };
                for a in additivity(&on, &off) {
                    info!(
                        "{}: on gain {:.2}%, off loss {:.2}%, {}",
                        a.tool,
                        a.on_gain,
                        a.off_loss,
                        if a.additive { "additive" } else { "overlapping" }
                    );
                }
            }
        }
        Command::TrainNsdt { output } => {
            let bytes = train_default_kernel_file()?;
            fs::write(&output, &bytes).with_context(|| format!("writing {}", output.display()))?;
            info!("{} bytes written to {}", bytes.len(), output.display());
        }
        Command::Corpus { out } => {
            write_corpus(&out)?;
            info!("mini-corpus written to {}", out.display());
        }
    }
    Ok(())
}
