use proptest::prelude::*;

use idpipe::photoid::{expand_face_box, mask_photo_region, FaceBox};
use idpipe::raster::{Box, GrayImage};
use idpipe::Error;

const W: usize = 200;
const H: usize = 160;

fn inside() -> impl Strategy<Value = Box> {
    (1u32..=W as u32, 1u32..=H as u32).prop_flat_map(|(w, h)| {
        (0..=(W as u32 - w), 0..=(H as u32 - h))
            .prop_map(move |(x, y)| Box::new(x as i32, y as i32, w, h))
    })
}

proptest! {
    #[test]
    fn clamped_box_stays_in_image(b in inside()) {
        let p = expand_face_box(&FaceBox::new(b, 0.5), W, H).unwrap();
        prop_assert!(Box::new(0, 0, W as u32, H as u32).contains(&p.bbox));
        prop_assert_eq!(Some(p.bbox), p.unclamped.clamp_to(W, H));
        prop_assert!(p.unclamped.contains(&b));
    }

    #[test]
    fn outside_faces_are_rejected(x in -40i32..0, w in 1u32..40) {
        let r = expand_face_box(&FaceBox::new(Box::new(x, 10, w, 20), 0.5), W, H);
        prop_assert!(matches!(r, Err(Error::Geometry(_))));
    }

    #[test]
    fn squared_faces_keep_their_center(b in inside()) {
        let n = FaceBox::new(b, 0.5).normalized().bbox;
        let (lo, hi) = (n.w.min(n.h), n.w.max(n.h));
        prop_assert!((hi - lo) as f64 <= 0.1 * hi as f64);
        let ((cx, cy), (nx, ny)) = (b.center(), n.center());
        prop_assert!((cx - nx).abs() <= 0.5 && (cy - ny).abs() <= 0.5);
    }

    #[test]
    fn masking_touches_only_the_box(b in inside(), seed in any::<u8>()) {
        let img = GrayImage::from_fn(W, H, |x, y| (x as u8).wrapping_mul(31) ^ (y as u8) ^ seed);
        let p = expand_face_box(&FaceBox::new(b, 0.5), W, H).unwrap();
        let m = mask_photo_region(&img, &p);
        for y in 0..H {
            for x in 0..W {
                let want = if p.bbox.contains_point(x as i32, y as i32) { 0 } else { img.get(x, y) };
                prop_assert_eq!(m.get(x, y), want);
            }
        }
    }
}
