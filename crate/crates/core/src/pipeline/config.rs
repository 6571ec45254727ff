use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::autocrop::LayoutConfig;
use crate::cleanse::CleanParams;
use crate::deskew::MethodChoice;
use crate::error::{Error, Result};
use crate::textseg::MserParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Realtime,
    Offline,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "realtime" => Ok(Mode::Realtime),
            "offline" => Ok(Mode::Offline),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Realtime => "realtime",
            Mode::Offline => "offline",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub layout: LayoutConfig,
    pub clean: CleanParams,
    pub mser: MserParams,
    pub face_adapter: Option<String>,
    pub text_adapter: Option<String>,
    pub vote_min: usize,
    pub deskew: MethodChoice,
    pub adapter_timeout: Duration,
    /// Window and stride of the offline detail crop.
    pub detail_window: usize,
    pub detail_stride: usize,
    /// Cell scale of the synthetic glyph font used as the reader.
    pub glyph_scale: usize,
    pub emit_debug: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: Mode::Realtime,
            layout: LayoutConfig::default(),
            clean: CleanParams::default(),
            mser: MserParams::default(),
            face_adapter: None,
            text_adapter: None,
            vote_min: 2,
            deskew: MethodChoice::Auto,
            adapter_timeout: crate::adapter::DEFAULT_TIMEOUT,
            detail_window: 64,
            detail_stride: 32,
            glyph_scale: 3,
            emit_debug: false,
        }
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected true or false, got {v:?}"
        ))),
    }
}

fn command(v: &str) -> Option<String> {
    (!v.is_empty()).then(|| v.to_string())
}

impl PipelineConfig {
    /// Parses flat `key = value` text. Nested settings use dotted keys
    /// (`layout.crop_margin`, `clean.passes`, `mser.delta`); `#` starts a
    /// comment line. Keys not given keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = PipelineConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", n + 1)))?;
            c.set(k.trim(), v.trim())?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "mode" => self.mode = v.parse()?,
            "face_adapter" => self.face_adapter = command(v),
            "text_adapter" => self.text_adapter = command(v),
            "vote_min" => self.vote_min = num(key, v)?,
            "deskew_method" => {
                self.deskew = v.parse().map_err(|e: Error| Error::Config(e.to_string()))?
            }
            "adapter_timeout_ms" => self.adapter_timeout = Duration::from_millis(num(key, v)?),
            "detail_window" => self.detail_window = num(key, v)?,
            "detail_stride" => self.detail_stride = num(key, v)?,
            "glyph_scale" => self.glyph_scale = num(key, v)?,
            "emit_debug" => self.emit_debug = flag(key, v)?,
            "layout.target_aspect" => self.layout.target_aspect = num(key, v)?,
            "layout.aspect_low" => self.layout.aspect_low = num(key, v)?,
            "layout.aspect_high" => self.layout.aspect_high = num(key, v)?,
            "layout.ratio_tolerance" => self.layout.ratio_tolerance = num(key, v)?,
            "layout.crop_margin" => self.layout.crop_margin = num(key, v)?,
            "layout.binarize_window" => self.layout.binarize_window = num(key, v)?,
            "layout.binarize_offset" => self.layout.binarize_offset = num(key, v)?,
            "layout.min_siblings" => self.layout.min_siblings = num(key, v)?,
            "layout.band_factor" => self.layout.band_factor = num(key, v)?,
            "layout.min_glyph_area" => self.layout.min_glyph_area = num(key, v)?,
            "clean.window" => self.clean.window = num(key, v)?,
            "clean.offset" => self.clean.offset = num(key, v)?,
            "clean.blur_sigma" => self.clean.blur_sigma = num(key, v)?,
            "clean.passes" => self.clean.passes = num(key, v)?,
            "clean.sharpen_amount" => self.clean.sharpen_amount = num(key, v)?,
            "mser.delta" => self.mser.delta = num(key, v)?,
            "mser.min_area" => self.mser.min_area = num(key, v)?,
            "mser.max_area" => self.mser.max_area = num(key, v)?,
            "mser.max_variation" => self.mser.max_variation = num(key, v)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.vote_min == 0 {
            return Err(Error::Config("vote_min must be at least 1".into()));
        }
        if self.detail_window == 0 || self.detail_stride == 0 {
            return Err(Error::Config(
                "detail window and stride must be positive".into(),
            ));
        }
        if self.glyph_scale == 0 {
            return Err(Error::Config("glyph_scale must be positive".into()));
        }
        self.layout.validate()?;
        self.clean
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.mser
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_keys() {
        let c = PipelineConfig::parse(
            "# offline run\nmode = offline\nvote_min=1\nclean.passes = 3\nlayout.crop_margin=0.02\nface_adapter = python3 face.py\n",
        )
        .unwrap();
        assert_eq!(c.mode, Mode::Offline);
        assert_eq!(c.vote_min, 1);
        assert_eq!(c.clean.passes, 3);
        assert_eq!(c.layout.crop_margin, 0.02);
        assert_eq!(c.face_adapter.as_deref(), Some("python3 face.py"));
        assert_eq!(
            PipelineConfig::parse("").unwrap(),
            PipelineConfig::default()
        );
    }

    #[test]
    fn rejects_bad_config() {
        for bad in [
            "mode = batch",
            "vote_min = 0",
            "colour = red",
            "clean.passes = two",
            "just words",
            "clean.passes = 0",
        ] {
            assert!(
                matches!(PipelineConfig::parse(bad), Err(Error::Config(_))),
                "{bad}"
            );
        }
    }
}
