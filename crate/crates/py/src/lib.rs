//! Python bindings. Images travel as file paths; structured results come
//! back as plain dicts and lists.

use std::path::{Path, PathBuf};

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use idpipe::autocrop::{crop_by_contours, crop_by_detail, LayoutConfig};
use idpipe::cleanse::{clean_background, CleanParams};
use idpipe::deskew::{deskew as run_deskew, MethodChoice};
use idpipe::mrz::{check_digit as mrz_check_digit, locate_mrz, parse_td3, MrzLocateConfig};
use idpipe::photoid::{expand_face_box as expand, FaceBox};
use idpipe::pipeline::{process_path, write_record, PipelineConfig};
use idpipe::raster::io::{read_image, write_pgm};
use idpipe::raster::{crop as crop_image, Box};
use idpipe::synthcard::{glyph_reader_for, render_card, CardSpec, GlyphFont};
use idpipe::textseg::{contour_char_boxes, drop_oversized, mser_regions, vote_merge, MserParams};
use idpipe::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn method_choice(name: &str) -> PyResult<MethodChoice> {
    name.parse().map_err(py_err)
}

/// Skew estimate for the image at `path`; writes the corrected image to
/// `out` when given.
#[pyfunction]
#[pyo3(signature = (path, method = "auto", out = None))]
fn deskew<'py>(
    py: Python<'py>,
    path: PathBuf,
    method: &str,
    out: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let img = read_image(&path).map_err(py_err)?;
    let d = run_deskew(&img, method_choice(method)?).map_err(py_err)?;
    if let Some(out) = out {
        write_pgm(&d.image, out).map_err(py_err)?;
    }
    to_py(
        py,
        &serde_json::json!({
            "angle": d.estimate.angle,
            "confidence": d.estimate.confidence,
            "method": d.estimate.method,
            "ms": d.elapsed_ms,
        }),
    )
}

#[pyfunction]
#[pyo3(signature = (path, method = "contour", out = None))]
fn crop<'py>(
    py: Python<'py>,
    path: PathBuf,
    method: &str,
    out: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let img = read_image(&path).map_err(py_err)?;
    let r = match method {
        "contour" => crop_by_contours(&img, &LayoutConfig::default()),
        "detail" => crop_by_detail(&img, 64, 32),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown crop method {other:?}"
            )))
        }
    }
    .map_err(py_err)?;
    if let Some(out) = out {
        write_pgm(&crop_image(&img, &r.bbox).map_err(py_err)?, out).map_err(py_err)?;
    }
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (path, out, passes = 2))]
fn clean(path: PathBuf, out: PathBuf, passes: usize) -> PyResult<()> {
    let img = read_image(&path).map_err(py_err)?;
    let p = CleanParams {
        passes,
        ..CleanParams::default()
    };
    write_pgm(&clean_background(&img, &p).map_err(py_err)?, out).map_err(py_err)
}

/// Text-line boxes voted from the MSER and contour sources.
#[pyfunction]
#[pyo3(signature = (path, vote_min = 2))]
fn segment<'py>(py: Python<'py>, path: PathBuf, vote_min: usize) -> PyResult<Bound<'py, PyAny>> {
    let img = read_image(&path).map_err(py_err)?;
    let h = img.height();
    let sources = vec![
        drop_oversized(
            mser_regions(&img, &MserParams::default()).map_err(py_err)?,
            h,
        ),
        drop_oversized(
            contour_char_boxes(&img, &LayoutConfig::default()).map_err(py_err)?,
            h,
        ),
    ];
    let lines = vote_merge(&sources, img.width(), h, vote_min).map_err(py_err)?;
    let boxes: Vec<Box> = lines.into_iter().map(|r| r.bbox).collect();
    to_py(py, &boxes)
}

#[pyfunction]
fn check_digit(s: &str) -> PyResult<u8> {
    mrz_check_digit(s).map_err(py_err)
}

#[pyfunction]
fn mrz_parse<'py>(py: Python<'py>, line1: &str, line2: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &parse_td3(line1, line2).map_err(py_err)?)
}

#[pyfunction]
fn mrz_locate<'py>(py: Python<'py>, path: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let img = read_image(&path).map_err(py_err)?;
    to_py(
        py,
        &locate_mrz(&img, &MrzLocateConfig::default()).map_err(py_err)?,
    )
}

/// Photo-ID region around a face box inside a `width` x `height` card.
#[pyfunction]
fn expand_face_box<'py>(
    py: Python<'py>,
    face: (i32, i32, u32, u32),
    width: usize,
    height: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let (x0, y0, w, h) = face;
    let f = FaceBox::new(Box::new(x0, y0, w, h), 1.0);
    to_py(py, &expand(&f, width, height).map_err(py_err)?)
}

/// Runs the pipeline on one image and appends the record to the store in
/// `store`. `config` is the text of a key=value config file.
#[pyfunction]
#[pyo3(signature = (path, store, config = None))]
fn process<'py>(
    py: Python<'py>,
    path: PathBuf,
    store: PathBuf,
    config: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = match config {
        Some(text) => PipelineConfig::parse(text).map_err(py_err)?,
        None => PipelineConfig::default(),
    };
    let font = GlyphFont::new(cfg.glyph_scale);
    let p = process_path(Path::new(&path), &cfg, glyph_reader_for(&font)).map_err(py_err)?;
    write_record(&store, &p.record, &p.blobs).map_err(py_err)?;
    to_py(py, &p.record)
}

/// Renders the stock passport page for `seed` into `out/image.pgm` and
/// returns its ground truth.
#[pyfunction]
#[pyo3(signature = (seed, out, rotation = 0.0, noise = 0.0))]
fn synth_passport<'py>(
    py: Python<'py>,
    seed: u64,
    out: PathBuf,
    rotation: f64,
    noise: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = CardSpec::passport(seed)
        .with_rotation(rotation)
        .with_noise(noise);
    let (img, truth) = render_card(&spec).map_err(py_err)?;
    std::fs::create_dir_all(&out).map_err(|e| PyIOError::new_err(e.to_string()))?;
    write_pgm(&img, out.join("image.pgm")).map_err(py_err)?;
    to_py(py, &truth)
}

#[pymodule]
pub fn idpipe_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(deskew, m)?)?;
    m.add_function(wrap_pyfunction!(crop, m)?)?;
    m.add_function(wrap_pyfunction!(clean, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(check_digit, m)?)?;
    m.add_function(wrap_pyfunction!(mrz_parse, m)?)?;
    m.add_function(wrap_pyfunction!(mrz_locate, m)?)?;
    m.add_function(wrap_pyfunction!(expand_face_box, m)?)?;
    m.add_function(wrap_pyfunction!(process, m)?)?;
    m.add_function(wrap_pyfunction!(synth_passport, m)?)?;
    Ok(())
}
