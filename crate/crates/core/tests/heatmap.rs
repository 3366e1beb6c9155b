use ovmil::abmil::{AbmilParams, ModelShape};
use ovmil::heatmap::*;
use ovmil::preprocess::RgbTile;
use ovmil::FeatureBag;
use proptest::prelude::*;

const WHITE: [u8; 3] = [255, 255, 255];

fn spec(patch: u32, stride: u32, ds: u32, normalisation: Normalisation) -> HeatmapSpec {
    HeatmapSpec { patch_px: patch, stride_px: stride, downsample: ds, normalisation, ..HeatmapSpec::default() }
}

/// Per-pixel oracle: mean attention of patches containing the pixel's sample point.
fn oracle_scores(coords: &[(u32, u32)], att: &[f64], dims: (u32, u32), patch: u32, ds: u32) -> Vec<Option<f64>> {
    let (cw, ch) = (dims.0.div_ceil(ds), dims.1.div_ceil(ds));
    let mut out = Vec::new();
    for cy in 0..ch {
        for cx in 0..cw {
            let (px, py) = (cx * ds + ds / 2, cy * ds + ds / 2);
            let hits: Vec<f64> = coords
                .iter()
                .zip(att)
                .filter(|(&(x, y), _)| x <= px && px < x + patch && y <= py && py < y + patch)
                .map(|(_, &a)| a)
                .collect();
            out.push((!hits.is_empty()).then(|| hits.iter().sum::<f64>() / hits.len() as f64));
        }
    }
    out
}

fn normalised(weights: &[f64]) -> Vec<f64> {
    let s: f64 = weights.iter().sum();
    weights.iter().map(|w| w / s).collect()
}

#[test]
fn single_patch_is_a_uniform_top_colour_rectangle() {
    let s = spec(8, 8, 1, Normalisation::default());
    let h = render_heatmap(&[(4, 6)], &[1.0], (20, 20), &s, None).unwrap();
    let top = Colormap::Viridis.map(1.0);
    for y in 0..20 {
        for x in 0..20 {
            let inside = (4..12).contains(&x) && (6..14).contains(&y);
            assert_eq!(h.image.pixel(x, y), if inside { top } else { WHITE }, "({x}, {y})");
        }
    }
}

#[test]
fn equal_attention_gives_equal_rectangles() {
    let s = spec(4, 4, 1, Normalisation::MinMax);
    let h = render_heatmap(&[(0, 0), (8, 4)], &[0.5, 0.5], (12, 12), &s, None).unwrap();
    assert_eq!(h.image.pixel(1, 1), h.image.pixel(10, 6));
    assert_ne!(h.image.pixel(1, 1), WHITE);
    assert_eq!(h.image.pixel(6, 1), WHITE);
}

#[test]
fn half_overlap_strip_averages_attention() {
    let s = spec(8, 4, 1, Normalisation::MinMax);
    let h = render_heatmap(&[(0, 0), (4, 0)], &[0.25, 0.75], (12, 8), &s, None).unwrap();
    for y in 0..8 {
        assert_eq!(h.score(1, y), Some(0.25));
        assert_eq!(h.score(5, y), Some(0.5));
        assert_eq!(h.score(10, y), Some(0.75));
    }
    assert_eq!(h.image.pixel(5, 3), Colormap::Viridis.map(0.5));
    assert_eq!(h.image.pixel(0, 0), Colormap::Viridis.map(0.0));
    assert_eq!(h.image.pixel(11, 7), Colormap::Viridis.map(1.0));
}

#[test]
fn default_spec_matches_half_overlapping_256_patches() {
    let s = HeatmapSpec::default();
    assert_eq!((s.patch_px, s.stride_px), (256, 128));
    assert_eq!(s.normalisation, Normalisation::Percentile { low: 1.0, high: 99.0 });
    s.validate().unwrap();
}

fn grid_case() -> impl Strategy<Value = (Vec<(u32, u32)>, Vec<f64>, u32, u32, u32)> {
    (1u32..4, prop_oneof![Just(1u32), Just(2)], 1u32..4, 2u32..6, 2u32..6).prop_flat_map(|(k, overlap, ds, gx, gy)| {
        let patch = 4 * k;
        let stride = patch / overlap;
        let cells: Vec<(u32, u32)> =
            (0..gy).flat_map(|j| (0..gx).map(move |i| (i * stride, j * stride))).collect();
        let n = cells.len();
        (
            proptest::sample::subsequence(cells, 1..=n),
            proptest::collection::vec(0.01f64..1.0, n),
            Just(patch),
            Just(stride),
            Just(ds),
        )
            .prop_map(|(coords, w, patch, stride, ds)| {
                let att = normalised(&w[..coords.len()]);
                (coords, att, patch, stride, ds)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn painted_pixels_are_the_union_of_patches((coords, att, patch, stride, ds) in grid_case()) {
        let dims = (6 * patch + 3, 6 * patch + 1);
        let s = spec(patch, stride, ds, Normalisation::default());
        let h = render_heatmap(&coords, &att, dims, &s, None).unwrap();
        let oracle = oracle_scores(&coords, &att, dims, patch, ds);
        let w = h.image.width();
        for (i, want) in oracle.iter().enumerate() {
            let (x, y) = (i as u32 % w, i as u32 / w);
            prop_assert_eq!(h.image.pixel(x, y) != WHITE, want.is_some());
            match (h.scores[i], want) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
                (None, None) => {}
                _ => prop_assert!(false, "coverage differs at ({x}, {y})"),
            }
        }
    }

    #[test]
    fn rendering_ignores_patch_order((coords, att, patch, stride, ds) in grid_case(), rot in 0usize..50) {
        let dims = (6 * patch, 6 * patch);
        let s = spec(patch, stride, ds, Normalisation::default());
        let a = render_heatmap(&coords, &att, dims, &s, None).unwrap();
        let r = rot % coords.len();
        let mut c2 = coords.clone();
        let mut a2 = att.clone();
        c2.rotate_left(r);
        a2.rotate_left(r);
        c2.reverse();
        a2.reverse();
        let b = render_heatmap(&c2, &a2, dims, &s, None).unwrap();
        prop_assert_eq!(a.image, b.image);
    }

    #[test]
    fn minmax_peak_colour_sits_in_the_top_patch(
        (coords, att, patch, _, ds) in grid_case().prop_filter("non-overlapping", |c| c.2 == c.3)
    ) {
        let dims = (6 * patch, 6 * patch);
        let s = spec(patch, patch, ds, Normalisation::MinMax);
        let h = render_heatmap(&coords, &att, dims, &s, None).unwrap();
        let best = (0..att.len()).fold(0, |b, i| if att[i] > att[b] { i } else { b });
        let (bx, by) = coords[best];
        let top = Colormap::Viridis.map(1.0);
        let mut found = false;
        for y in 0..h.image.height() {
            for x in 0..h.image.width() {
                if h.image.pixel(x, y) == top {
                    found = true;
                    let (px, py) = (x * ds + ds / 2, y * ds + ds / 2);
                    let in_best = bx <= px && px < bx + patch && by <= py && py < by + patch;
                    let tied = coords.iter().zip(&att).any(|(&(cx, cy), &a)| {
                        a == att[best] && cx <= px && px < cx + patch && cy <= py && py < cy + patch
                    });
                    prop_assert!(in_best || tied);
                }
            }
        }
        prop_assert!(found || ds > patch);
    }
}

#[test]
fn background_blending() {
    let bg = RgbTile::filled(16, 16, [200, 100, 50]).unwrap();
    let coords = [(0, 0), (8, 8)];
    let att = [0.3, 0.7];
    let mut s = spec(8, 8, 1, Normalisation::MinMax);
    s.opacity = 0.0;
    assert_eq!(render_heatmap(&coords, &att, (16, 16), &s, Some(&bg)).unwrap().image, bg);
    s.opacity = 1.0;
    let h = render_heatmap(&coords, &att, (16, 16), &s, Some(&bg)).unwrap();
    assert_eq!(h.image.pixel(2, 2), Colormap::Viridis.map(0.0));
    assert_eq!(h.image.pixel(12, 12), Colormap::Viridis.map(1.0));
    assert_eq!(h.image.pixel(12, 2), [200, 100, 50]);
    s.opacity = 0.5;
    let h = render_heatmap(&coords, &att, (16, 16), &s, Some(&bg)).unwrap();
    let c = Colormap::Viridis.map(1.0);
    let want = [0, 1, 2].map(|k| ((c[k] as f64 + [200.0, 100.0, 50.0][k]) / 2.0).round() as u8);
    assert_eq!(h.image.pixel(12, 12), want);
}

#[test]
fn downsampled_canvas_size() {
    let s = spec(256, 128, 32, Normalisation::default());
    let h = render_heatmap(&[(0, 0), (128, 0)], &[0.5, 0.5], (1000, 300), &s, None).unwrap();
    assert_eq!((h.image.width(), h.image.height()), (32, 10));
    assert!(h.score(0, 0).is_some() && h.score(11, 0).is_some() && h.score(12, 0).is_none());
}

#[test]
fn invalid_inputs() {
    let s = spec(8, 8, 1, Normalisation::default());
    assert!(matches!(render_heatmap(&[], &[], (16, 16), &s, None), Err(HeatmapError::EmptyBag)));
    assert!(matches!(render_heatmap(&[(10, 0)], &[1.0], (16, 16), &s, None), Err(HeatmapError::Geometry(_))));
    assert!(matches!(render_heatmap(&[(0, 0)], &[0.5], (16, 16), &s, None), Err(HeatmapError::Attention(_))));
    let bg = RgbTile::filled(4, 4, WHITE).unwrap();
    assert!(matches!(render_heatmap(&[(0, 0)], &[1.0], (16, 16), &s, Some(&bg)), Err(HeatmapError::Geometry(_))));
    for bad in [spec(8, 3, 1, Normalisation::default()), spec(8, 16, 1, Normalisation::default()), spec(8, 8, 0, Normalisation::MinMax)] {
        assert!(matches!(bad.validate(), Err(HeatmapError::Spec(_))));
    }
    let mut s = HeatmapSpec::default();
    s.opacity = 1.5;
    assert!(s.validate().is_err());
}

#[test]
fn spec_strings_round_trip() {
    for n in [Normalisation::MinMax, Normalisation::Percentile { low: 5.0, high: 95.0 }] {
        assert_eq!(n.to_string().parse::<Normalisation>().unwrap(), n);
    }
    assert_eq!("percentile".parse::<Normalisation>().unwrap(), Normalisation::default());
    assert_eq!("Grey".parse::<Colormap>().unwrap(), Colormap::Gray);
    assert!("jet".parse::<Colormap>().is_err());
}

#[test]
fn model_heatmap_and_sidecar() {
    let dim = 6;
    let coords: Vec<(u32, u32)> = (0..3).flat_map(|j| (0..4).map(move |i| (i * 128, j * 128))).collect();
    let features = (0..coords.len() * dim).map(|i| ((i * 37 % 11) as f32 - 5.0) / 3.0).collect();
    let bag = FeatureBag::new("slide-7", dim, 256, coords, features).unwrap();
    let params = AbmilParams::init(ModelShape::new(dim, 8, 4).unwrap(), 3);
    let s = HeatmapSpec { downsample: 16, ..HeatmapSpec::default() };
    let h = attention_heatmap(&params, &bag, (640, 512), &s, None).unwrap();
    assert_eq!((h.image.width(), h.image.height()), (40, 32));
    assert_eq!(h.stats.n, 12);
    assert!(h.stats.entropy > 0.0 && h.stats.entropy <= (12f64).ln() + 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let png = dir.path().join("slide-7.png");
    write_heatmap(&h, "slide-7", &s, false, &png).unwrap();
    assert_eq!(RgbTile::load_png(&png).unwrap(), h.image);
    let text = std::fs::read_to_string(dir.path().join("slide-7.txt")).unwrap();
    for key in ["slide_id=slide-7", "colormap=viridis", "stride_px=128", "normalisation=percentile:1:99", "attention_entropy="] {
        assert!(text.contains(key), "{key} missing from {text}");
    }
}
