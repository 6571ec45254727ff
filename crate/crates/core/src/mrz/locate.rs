use serde::{Deserialize, Serialize};

use crate::raster::{
    find_contours, gaussian_blur, morphology, normalize, otsu_binarize, sobel_gradients, Box,
    GrayImage, Kernel, MorphOp,
};

/// A candidate machine-readable zone on the card.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrzBand {
    #[serde(rename = "box")]
    pub bbox: Box,
    /// Fill ratio times width coverage.
    pub score: f64,
}

impl MrzBand {
    /// Vertical center as a fraction of `card_h`.
    pub fn center_fraction(&self, card_h: usize) -> f64 {
        self.bbox.center().1 / card_h as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MrzLocateConfig {
    pub blur_sigma: f64,
    pub rect_kernel: (usize, usize),
    pub square_kernel: usize,
    pub erode_iterations: usize,
    pub min_width_fraction: f64,
    pub min_aspect: f64,
}

impl Default for MrzLocateConfig {
    fn default() -> Self {
        MrzLocateConfig {
            blur_sigma: 1.0,
            rect_kernel: (13, 5),
            square_kernel: 21,
            erode_iterations: 2,
            min_width_fraction: 0.75,
            min_aspect: 4.0,
        }
    }
}

/// Binary mask of MRZ-like text: blackhat, horizontal gradient, closing and
/// Otsu. Exposed for debugging output.
pub fn mrz_mask(
    card: &GrayImage,
    cfg: &MrzLocateConfig,
) -> crate::Result<crate::raster::BinaryImage> {
    let rect = Kernel::rect(cfg.rect_kernel.0, cfg.rect_kernel.1)?;
    let square = Kernel::square(cfg.square_kernel)?;
    let blurred = gaussian_blur(card, cfg.blur_sigma)?;
    let blackhat = morphology(&blurred, MorphOp::Blackhat, &rect);
    let (gx, _) = sobel_gradients(&blackhat);
    let mag = blackhat.with_data(gx.iter().map(|g| g.unsigned_abs().min(255) as u8).collect());
    let grad = morphology(&normalize(&mag), MorphOp::Close, &rect);
    let (bin, _) = otsu_binarize(&grad);
    let mut bin = bin.morph(MorphOp::Close, &square);
    let k3 = Kernel::square(3)?;
    for _ in 0..cfg.erode_iterations {
        bin = bin.morph(MorphOp::Erode, &k3);
    }
    Ok(bin)
}

/// Finds the lowest wide band of dark text, or `None`.
pub fn locate_mrz(card: &GrayImage, cfg: &MrzLocateConfig) -> crate::Result<Option<MrzBand>> {
    let mask = mrz_mask(card, cfg)?;
    let cw = card.width() as f64;
    let best = find_contours(&mask)
        .into_iter()
        .filter(|n| n.parent.is_none())
        .filter(|n| {
            n.bbox.w as f64 >= cfg.min_width_fraction * cw && n.bbox.aspect() > cfg.min_aspect
        })
        .max_by_key(|n| (n.bbox.bottom(), n.bbox.y0));
    Ok(best.map(|n| MrzBand {
        bbox: n.bbox,
        score: (n.area as f64 / n.bbox.area() as f64) * (n.bbox.w as f64 / cw),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::crop;
    use crate::synthcard::{render_card, CardSpec, TextLine};

    fn card_of(spec: &CardSpec) -> (GrayImage, crate::synthcard::GroundTruth) {
        let (img, t) = render_card(spec).unwrap();
        let card = crop(&img, &t.card_box).unwrap();
        (card, t)
    }

    #[test]
    fn finds_rendered_zone() {
        for seed in 0..5 {
            let (card, t) = card_of(&CardSpec::passport(seed));
            let band = locate_mrz(&card, &MrzLocateConfig::default())
                .unwrap()
                .unwrap();
            let truth = t
                .mrz_band
                .unwrap()
                .translate(-t.card_box.x0, -t.card_box.y0);
            assert!(
                (band.bbox.x0 - truth.x0).abs() <= 5,
                "{band:?} vs {truth:?}"
            );
            assert!(
                (band.bbox.y0 - truth.y0).abs() <= 5,
                "{band:?} vs {truth:?}"
            );
            assert!(
                (band.bbox.right() - truth.right()).abs() <= 5,
                "{band:?} vs {truth:?}"
            );
            assert!(
                (band.bbox.bottom() - truth.bottom()).abs() <= 5,
                "{band:?} vs {truth:?}"
            );
            assert!(band.score >= 0.5, "{}", band.score);
            assert!(band.center_fraction(card.height()) > 0.5);
        }
    }

    #[test]
    fn no_zone_on_plain_card() {
        let mut spec = CardSpec::passport(3);
        spec.mrz = None;
        let (card, _) = card_of(&spec);
        assert!(locate_mrz(&card, &MrzLocateConfig::default())
            .unwrap()
            .is_none());
        let blank = GrayImage::new(400, 250, 230);
        assert!(locate_mrz(&blank, &MrzLocateConfig::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn lower_of_two_bands_wins() {
        let mut spec = CardSpec::passport(5);
        spec.text_lines = vec![TextLine {
            row: 60,
            column: 107,
            text: "ADDRESS<LINE<".repeat(4).chars().take(44).collect(),
        }];
        spec.photo = None;
        let (card, t) = card_of(&spec);
        let band = locate_mrz(&card, &MrzLocateConfig::default())
            .unwrap()
            .unwrap();
        let truth = t
            .mrz_band
            .unwrap()
            .translate(-t.card_box.x0, -t.card_box.y0);
        assert!(band.bbox.iou(&truth) > 0.7, "{band:?} vs {truth:?}");
    }
}
