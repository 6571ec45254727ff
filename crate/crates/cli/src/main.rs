use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use idpipe::autocrop::{crop_by_contours, crop_by_detail, LayoutConfig};
use idpipe::cleanse::{clean_background, CleanParams};
use idpipe::deskew::{deskew, MethodChoice};
use idpipe::mrz::{locate_mrz, parse_td3, MrzLocateConfig};
use idpipe::pipeline::{process_path, timing_report, write_record, Mode, PipelineConfig};
use idpipe::raster::crop;
use idpipe::raster::io::{read_image, write_pgm};
use idpipe::synthcard::{glyph_reader_for, render_card, CardSpec, GlyphFont};
use idpipe::textseg::{
    contour_char_boxes, detect_text_external, drop_oversized, mser_regions, vote_merge, MserParams,
};

#[derive(Parser)]
#[command(
    name = "idpipe",
    version,
    about = "Pre-OCR processing of identity document images"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Report {
    Json,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CropKind {
    Contour,
    Detail,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SourceKind {
    Mser,
    Contour,
    External,
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate the skew angle and write the corrected image.
    Deskew {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "auto")]
        method: MethodChoice,
        #[arg(long, value_enum, default_value = "text")]
        report: Report,
    },
    /// Crop the card out of a frame.
    Crop {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "contour")]
        method: CropKind,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        report: Report,
        #[arg(long, default_value_t = 64)]
        window: usize,
        #[arg(long, default_value_t = 32)]
        stride: usize,
    },
    /// Remove background texture.
    Clean {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        passes: Option<usize>,
    },
    /// Detect text lines by voting across region sources.
    Segment {
        input: PathBuf,
        #[arg(
            long,
            value_enum,
            value_delimiter = ',',
            default_value = "mser,contour"
        )]
        sources: Vec<SourceKind>,
        #[arg(long)]
        text_detector_cmd: Option<String>,
        #[arg(long, default_value_t = 2)]
        vote_min: usize,
        #[arg(long, value_enum, default_value = "json")]
        report: Report,
    },
    /// Parse two 44-character TD3 lines.
    MrzParse { line1: String, line2: String },
    /// Find the machine-readable zone on a cropped card.
    MrzLocate {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        report: Report,
    },
    /// Run the full pipeline and append records to a store.
    Process {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        face_cmd: Option<String>,
        #[arg(long)]
        text_cmd: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        emit_debug: bool,
    },
    /// Render a synthetic card with ground truth.
    Synth {
        #[arg(long, conflicts_with = "passport_seed")]
        spec: Option<PathBuf>,
        /// Render the stock passport page for this seed instead of a spec file.
        #[arg(long)]
        passport_seed: Option<u64>,
        #[arg(long)]
        rotation: Option<f64>,
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

type Res<T> = Result<T, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn say(text: impl std::fmt::Display) {
    // A closed pipe (`| head`) is not an error worth reporting.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn print_json(v: &impl serde::Serialize) -> Res<()> {
    say(serde_json::to_string_pretty(v).map_err(err)?);
    Ok(())
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn run(cli: Cli) -> Res<bool> {
    match cli.cmd {
        Cmd::Deskew {
            input,
            out,
            method,
            report,
        } => {
            let img = read_image(&input).map_err(err)?;
            let d = deskew(&img, method).map_err(err)?;
            if let Some(out) = out {
                write_pgm(&d.image, out).map_err(err)?;
            }
            let e = d.estimate;
            match report {
                Report::Json => print_json(&json!({
                    "angle": e.angle,
                    "confidence": e.confidence,
                    "method": e.method,
                    "ms": d.elapsed_ms,
                }))?,
                Report::Text => say(format_args!(
                    "{:.3} deg ({:?}, confidence {:.2})",
                    e.angle, e.method, e.confidence
                )),
            }
        }
        Cmd::Crop {
            input,
            method,
            out,
            report,
            window,
            stride,
        } => {
            let img = read_image(&input).map_err(err)?;
            let r = match method {
                CropKind::Contour => crop_by_contours(&img, &LayoutConfig::default()),
                CropKind::Detail => crop_by_detail(&img, window, stride),
            }
            .map_err(err)?;
            if let Some(out) = out {
                write_pgm(&crop(&img, &r.bbox).map_err(err)?, out).map_err(err)?;
            }
            match report {
                Report::Json => print_json(&json!({
                    "method": r.method,
                    "box": r.bbox,
                    "ms": r.elapsed_ms,
                    "kept_contours": r.kept_contours,
                    "low_confidence": r.low_confidence,
                }))?,
                Report::Text => say(format_args!("{:?} in {:.1} ms", r.bbox, r.elapsed_ms)),
            }
        }
        Cmd::Clean { input, out, passes } => {
            let img = read_image(&input).map_err(err)?;
            let mut p = CleanParams::default();
            if let Some(n) = passes {
                p.passes = n;
            }
            write_pgm(&clean_background(&img, &p).map_err(err)?, out).map_err(err)?;
        }
        Cmd::Segment {
            input,
            sources,
            text_detector_cmd,
            vote_min,
            report,
        } => {
            let img = read_image(&input).map_err(err)?;
            let mut lists = Vec::new();
            let mut counts = serde_json::Map::new();
            let t = Instant::now();
            for s in &sources {
                let (name, regions) = match s {
                    SourceKind::Mser => ("mser", mser_regions(&img, &MserParams::default())),
                    SourceKind::Contour => (
                        "contour",
                        contour_char_boxes(&img, &LayoutConfig::default()),
                    ),
                    SourceKind::External => {
                        let cmd = text_detector_cmd
                            .as_deref()
                            .ok_or("the external source needs --text-detector-cmd")?;
                        (
                            "external",
                            detect_text_external(&input, cmd, idpipe::adapter::DEFAULT_TIMEOUT),
                        )
                    }
                };
                let regions = match s {
                    SourceKind::External => regions.map_err(err)?,
                    _ => drop_oversized(regions.map_err(err)?, img.height()),
                };
                counts.insert(name.into(), regions.len().into());
                lists.push(regions);
            }
            let lines = vote_merge(&lists, img.width(), img.height(), vote_min).map_err(err)?;
            let boxes: Vec<_> = lines.iter().map(|r| r.bbox).collect();
            match report {
                Report::Json => print_json(&json!({
                    "lines": boxes,
                    "source_counts": counts,
                    "ms": ms_since(t),
                }))?,
                Report::Text => {
                    for b in boxes {
                        say(format_args!("{} {} {} {}", b.x0, b.y0, b.w, b.h));
                    }
                }
            }
        }
        Cmd::MrzParse { line1, line2 } => {
            let rec = parse_td3(&line1, &line2).map_err(err)?;
            print_json(&rec)?;
            return Ok(rec.checks.all_pass());
        }
        Cmd::MrzLocate { input, report } => {
            let img = read_image(&input).map_err(err)?;
            let band = locate_mrz(&img, &MrzLocateConfig::default()).map_err(err)?;
            match report {
                Report::Json => print_json(&json!({ "band": band }))?,
                Report::Text => match band {
                    Some(b) => say(format_args!("{:?} score {:.3}", b.bbox, b.score)),
                    None => say(format_args!("no zone")),
                },
            }
        }
        Cmd::Process {
            inputs,
            out,
            mode,
            face_cmd,
            text_cmd,
            config,
            emit_debug,
        } => {
            return process(inputs, &out, mode, face_cmd, text_cmd, config, emit_debug);
        }
        Cmd::Synth {
            spec,
            passport_seed,
            rotation,
            noise,
            out,
        } => {
            let mut s = match (spec, passport_seed) {
                (Some(p), _) => {
                    serde_json::from_str::<CardSpec>(&fs::read_to_string(&p).map_err(err)?)
                        .map_err(|e| format!("{}: {e}", p.display()))?
                }
                (None, Some(seed)) => CardSpec::passport(seed),
                (None, None) => return Err("give --spec or --passport-seed".into()),
            };
            if let Some(r) = rotation {
                s.rotation = r;
            }
            if let Some(n) = noise {
                s.noise_sigma = n;
            }
            let (img, truth) = render_card(&s).map_err(err)?;
            fs::create_dir_all(&out).map_err(err)?;
            write_pgm(&img, out.join("image.pgm")).map_err(err)?;
            fs::write(
                out.join("truth.json"),
                serde_json::to_string_pretty(&truth).map_err(err)?,
            )
            .map_err(err)?;
        }
    }
    Ok(true)
}

fn process(
    inputs: Vec<PathBuf>,
    out: &Path,
    mode: Option<Mode>,
    face_cmd: Option<String>,
    text_cmd: Option<String>,
    config: Option<PathBuf>,
    emit_debug: bool,
) -> Res<bool> {
    let mut cfg = match &config {
        Some(p) => PipelineConfig::parse(&fs::read_to_string(p).map_err(err)?)
            .map_err(|e| format!("{}: {e}", p.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(m) = mode {
        cfg.mode = m;
    }
    if face_cmd.is_some() {
        cfg.face_adapter = face_cmd;
    }
    if text_cmd.is_some() {
        cfg.text_adapter = text_cmd;
    }
    cfg.emit_debug |= emit_debug;

    let font = GlyphFont::new(cfg.glyph_scale);
    let mut records = Vec::new();
    let mut all_ok = true;
    for input in &inputs {
        let done = process_path(input, &cfg, glyph_reader_for(&font)).and_then(|p| {
            write_record(out, &p.record, &p.blobs)?;
            Ok(p)
        });
        match done {
            Ok(p) => {
                for (stage, img) in &p.debug {
                    let dir = out.join("debug").join(&p.record.id);
                    fs::create_dir_all(&dir).map_err(err)?;
                    write_pgm(img, dir.join(format!("{stage}.pgm"))).map_err(err)?;
                }
                say(format_args!("{} {}", p.record.id, input.display()));
                records.push(p.record);
            }
            Err(e) => {
                all_ok = false;
                eprintln!("idpipe: {}: {e}", input.display());
            }
        }
    }
    if let Ok(rep) = timing_report(&records) {
        fs::write(
            out.join("timing.json"),
            serde_json::to_string_pretty(&rep).map_err(err)?,
        )
        .map_err(err)?;
    }
    Ok(all_ok)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("idpipe: {e}");
            ExitCode::from(2)
        }
    }
}
