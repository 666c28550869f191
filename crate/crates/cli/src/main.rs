//! Video deraining command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 input error,
//! 4 internal invariant violation.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use derain_core::background::BackgroundKind;
use derain_core::error::Error;
use derain_core::io::{self, FrameFormat, SequenceReader};
use derain_core::metrics::{psnr, render_psnr_report};
use derain_core::pipeline::{run_derain, PipelineConfig, RunConfig, TruthRefs};
use derain_core::rain_synth::{add_rain, scene_frame, SynthConfig};

#[derive(Parser)]
#[command(
    name = "derain",
    version,
    about = "Remove rain streaks from frame sequences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derain an input sequence into an output directory.
    Derain(DerainArgs),
    /// Generate a synthetic scene with rain and ground-truth masks.
    Synth(SynthArgs),
    /// Compare two sequences frame by frame with PSNR.
    Psnr(PsnrArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BgChoice {
    Median,
    Mog,
}

#[derive(Args)]
struct DerainArgs {
    /// Input directory containing frame_%06d files and meta.txt.
    #[arg(long)]
    input: PathBuf,
    /// Output directory for out_%06d.png (created if missing).
    #[arg(long)]
    output: PathBuf,
    /// Foreground intensity threshold.
    #[arg(long, default_value_t = 20)]
    tau: u8,
    /// Rain/object duration threshold as a fraction of the frame rate.
    #[arg(long, default_value_t = 0.25)]
    duration_frac: f64,
    /// Maximum streak width as a fraction of the frame width.
    #[arg(long, default_value_t = 0.05)]
    width_frac: f64,
    /// Location-filter radius in pixels at a 320-wide frame.
    #[arg(long, default_value_t = 3)]
    loc_radius: u32,
    /// Background estimator.
    #[arg(long, value_enum, default_value_t = BgChoice::Median)]
    bg: BgChoice,
    /// Also write the final classmap per frame (mask_%06d.pgm).
    #[arg(long)]
    dump_masks: bool,
    /// Also write per-stage rasters (bg_, fg_, ta_, mask_w_, mask_l_).
    #[arg(long)]
    dump_stages: bool,
    /// Clean ground-truth sequence for PSNR scoring.
    #[arg(long, requires = "truth_rain", requires = "truth_object")]
    truth_clean: Option<PathBuf>,
    /// Rain ground-truth masks.
    #[arg(long, requires = "truth_clean")]
    truth_rain: Option<PathBuf>,
    /// Object ground-truth masks.
    #[arg(long, requires = "truth_clean")]
    truth_object: Option<PathBuf>,
    /// Write the per-frame metrics CSV here (requires the truth dirs).
    #[arg(long, requires = "truth_clean")]
    report: Option<PathBuf>,
    /// Print per-frame scores to stdout.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// JSON scene+rain configuration; defaults to the built-in benchmark.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output root; receives clean/, rainy/, truth_rain/, truth_object/.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct PsnrArgs {
    /// First sequence directory.
    #[arg(long)]
    a: PathBuf,
    /// Second sequence directory.
    #[arg(long)]
    b: PathBuf,
    /// Write the per-frame PSNR CSV here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print per-frame values to stdout.
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Derain(args) => cmd_derain(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Psnr(args) => cmd_psnr(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::Config(_) | Error::Channel { .. } => 2,
        Error::Internal(_) => 4,
        _ => 3,
    }
}

fn cmd_derain(args: DerainArgs) -> derain_core::Result<()> {
    let truth = match (&args.truth_clean, &args.truth_rain, &args.truth_object) {
        (Some(clean), Some(rain), Some(object)) => Some(TruthRefs {
            clean_dir: clean.clone(),
            rain_dir: rain.clone(),
            object_dir: object.clone(),
        }),
        (None, None, None) => None,
        _ => {
            return Err(Error::Config(
                "--truth-clean, --truth-rain and --truth-object must be given together".into(),
            ))
        }
    };
    let cfg = RunConfig {
        input_dir: args.input,
        output_dir: args.output,
        pipeline: PipelineConfig {
            tau: args.tau,
            duration_frac: args.duration_frac,
            width_frac: args.width_frac,
            loc_radius_base: args.loc_radius,
            bg_kind: match args.bg {
                BgChoice::Median => BackgroundKind::TemporalMedian,
                BgChoice::Mog => BackgroundKind::GaussianMixture,
            },
            ..PipelineConfig::default()
        },
        dump_masks: args.dump_masks,
        dump_stages: args.dump_stages,
        truth,
        report: args.report,
    };
    let summary = run_derain(&cfg)?;
    if let Some(scores) = &summary.scores {
        if args.verbose {
            for s in scores {
                println!(
                    "frame {:06}: psnr_in {:.4} psnr_out {:.4} rain_recall {:.4} rain_precision {:.4} object_recall {:.4}",
                    s.frame_index,
                    s.psnr_input_db,
                    s.psnr_output_db,
                    s.rain_recall,
                    s.rain_precision,
                    s.object_recall
                );
            }
        }
        let n = scores.len() as f64;
        let mean_in: f64 = scores.iter().map(|s| s.psnr_input_db).sum::<f64>() / n;
        let mean_out: f64 = scores.iter().map(|s| s.psnr_output_db).sum::<f64>() / n;
        println!("avg psnr: input {mean_in:.4} dB, output {mean_out:.4} dB");
    }
    println!("derained {} frames", summary.frame_count);
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> derain_core::Result<()> {
    let cfg: SynthConfig = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))?
        }
        None => SynthConfig::default(),
    };
    cfg.scene.validate()?;
    cfg.rain.validate()?;

    let meta = cfg.scene.meta();
    let dirs = ["clean", "rainy", "truth_rain", "truth_object"].map(|d| args.output.join(d));
    for dir in &dirs {
        fs::create_dir_all(dir)?;
        io::write_meta(&dir.join(io::META_FILE), &meta)?;
    }
    let [clean_dir, rainy_dir, rain_dir, object_dir] = dirs;

    for n in 0..cfg.scene.frame_count {
        let (clean, object_mask) = scene_frame(&cfg.scene, n)?;
        let (rainy, rain_mask) = add_rain(&clean, &cfg.rain, n)?;
        let ext = FrameFormat::Png.extension_for(clean.channels());
        io::write_frame(&clean_dir.join(io::frame_file_name(n, ext)), &clean)?;
        io::write_frame(&rainy_dir.join(io::frame_file_name(n, ext)), &rainy)?;
        io::write_mask(&rain_mask, &rain_dir.join(io::frame_file_name(n, "pgm")))?;
        io::write_mask(
            &object_mask,
            &object_dir.join(io::frame_file_name(n, "pgm")),
        )?;
    }

    // keep a copy of the effective configuration next to the data
    let echo = serde_json::to_string_pretty(&cfg)
        .map_err(|e| Error::Internal(format!("config echo: {e}")))?;
    fs::write(args.output.join("config.json"), echo)?;
    println!(
        "wrote {} frames under {}",
        cfg.scene.frame_count,
        args.output.display()
    );
    Ok(())
}

fn cmd_psnr(args: PsnrArgs) -> derain_core::Result<()> {
    let mut a = SequenceReader::open(&args.a)?;
    let mut b = SequenceReader::open(&args.b)?;
    if a.meta().frame_count != b.meta().frame_count {
        return Err(Error::Meta(format!(
            "frame counts differ: {} vs {}",
            a.meta().frame_count,
            b.meta().frame_count
        )));
    }
    let count = a.meta().frame_count;
    let mut rows = Vec::with_capacity(count as usize);
    for n in 0..count {
        let fa = a.next().expect("counted")?;
        let fb = b.next().expect("counted")?;
        let value = psnr(&fa, &fb)?;
        if args.verbose {
            println!("frame {n:06}: {value:.4} dB");
        }
        rows.push((n, value));
    }
    let avg = rows.iter().map(|(_, v)| v).sum::<f64>() / rows.len() as f64;
    println!("avg psnr: {avg:.4} dB over {count} frames");
    if let Some(path) = &args.report {
        fs::write(path, render_psnr_report(&rows)?)?;
    }
    Ok(())
}
