use proptest::prelude::*;

use idpipe::deskew::{estimate_fft, estimate_hough};
use idpipe::mrz::parse_td3;
use idpipe::raster::{crop, rotate, GrayImage};
use idpipe::synthcard::{render_card, CardSpec};

fn ruled_page() -> GrayImage {
    GrayImage::from_fn(420, 300, |x, y| {
        let in_line = (y % 24) < 5 && (40..380).contains(&x) && (30..270).contains(&y);
        let gap = (x / 9) % 6 == 5;
        if in_line && !gap {
            20
        } else {
            230
        }
    })
}

#[test]
fn rendering_is_deterministic() {
    let spec = CardSpec::passport(5)
        .with_rotation(11.0)
        .with_noise(6.0)
        .with_texture(10.0);
    assert_eq!(render_card(&spec).unwrap(), render_card(&spec).unwrap());
}

#[test]
fn truth_matches_the_pixels() {
    let spec = CardSpec::passport(8);
    let (img, t) = render_card(&spec).unwrap();
    for g in &t.glyph_boxes {
        assert!(t.card_box.contains(&g.bbox));
        let cell = crop(&img, &g.bbox).unwrap();
        assert!(cell.as_raw().contains(&spec.ink), "no ink in {:?}", g);
    }
    let band = t.mrz_band.unwrap();
    assert!(band.center().1 > t.card_box.center().1);
    let [a, b] = t.mrz_lines.clone().unwrap();
    assert!(parse_td3(&a, &b).unwrap().checks.all_pass());
    assert!(t.card_box.contains(&t.photo_box.unwrap()));
}

#[test]
fn rotated_corners_keep_card_size() {
    let spec = CardSpec::passport(1).with_rotation(23.0);
    let (_, t) = render_card(&spec).unwrap();
    let d = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
    let c = t.card_corners;
    assert!((d(c[0], c[1]) - (spec.card_w - 1) as f64).abs() < 1e-6);
    assert!((d(c[1], c[2]) - (spec.card_h - 1) as f64).abs() < 1e-6);
    assert_eq!(t.rotation, 23.0);
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(render_card(&CardSpec::passport(1).with_texture(500.0)).is_err());
    let spec = CardSpec {
        glyph_scale: 0,
        ..CardSpec::passport(1)
    };
    assert!(render_card(&spec).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn estimators_undo_rotation(theta in -40.0f64..40.0) {
        let img = rotate(&ruled_page(), theta, 230);
        let f = estimate_fft(&img).unwrap();
        let h = estimate_hough(&img).unwrap();
        prop_assert!((f.angle + theta).abs() <= 1.0, "fft {:?} for {}", f, theta);
        prop_assert!((h.angle + theta).abs() <= 1.0, "hough {:?} for {}", h, theta);
    }
}
