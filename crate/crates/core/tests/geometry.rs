mod common;

use proptest::prelude::*;
use rand::Rng;
use vfg_core::geometry::{intersection, iou, occlusion_ratio, BBox};

// Fraction of uniform samples from the bounding square that hit each box.
fn monte_carlo_iou(a: &BBox, b: &BBox, n: usize, seed: u64) -> f64 {
    let mut r = common::rng(seed);
    let x0 = a.x.min(b.x);
    let y0 = a.y.min(b.y);
    let x1 = a.right().max(b.right());
    let y1 = a.bottom().max(b.bottom());
    let (mut both, mut either) = (0usize, 0usize);
    for _ in 0..n {
        let px = r.random_range(x0..x1);
        let py = r.random_range(y0..y1);
        let ia = a.contains_point(px, py);
        let ib = b.contains_point(px, py);
        both += (ia && ib) as usize;
        either += (ia || ib) as usize;
    }
    both as f64 / either as f64
}

#[test]
fn iou_agrees_with_monte_carlo() {
    let mut r = common::rng(11);
    for k in 0..20 {
        let a = common::random_box(&mut r, 20.0, 30.0);
        let b = common::random_box(&mut r, 20.0, 30.0);
        let est = monte_carlo_iou(&a, &b, 100_000, k);
        assert!(
            (iou(&a, &b) - est).abs() <= 0.02,
            "{a:?} {b:?}: {} vs {est}",
            iou(&a, &b)
        );
    }
}

#[test]
fn iou_matches_reference_formula() {
    let mut r = common::rng(12);
    for _ in 0..10_000 {
        let a = common::random_box(&mut r, 50.0, 30.0);
        let b = common::random_box(&mut r, 50.0, 30.0);
        assert!((iou(&a, &b) - common::iou_oracle(&a, &b)).abs() < 1e-12);
    }
}

fn arb_box() -> impl Strategy<Value = BBox> {
    (
        -100.0..100.0f64,
        -100.0..100.0f64,
        0.1..50.0f64,
        0.1..50.0f64,
    )
        .prop_map(|(x, y, w, h)| BBox::new(x, y, w, h))
}

proptest! {
    #[test]
    fn intersection_bounded_by_both_areas(a in arb_box(), b in arb_box()) {
        let i = intersection(&a, &b);
        prop_assert!(i >= 0.0);
        prop_assert!(i <= a.area() * (1.0 + 1e-12));
        prop_assert!(i <= b.area() * (1.0 + 1e-12));
    }

    #[test]
    fn translation_keeps_iou(a in arb_box(), b in arb_box(), dx in -50.0..50.0f64, dy in -50.0..50.0f64) {
        let moved = iou(&a.translate(dx, dy), &b.translate(dx, dy));
        prop_assert!((moved - iou(&a, &b)).abs() < 1e-9);
    }

    #[test]
    fn occlusion_in_unit_interval(v in arb_box(), f in arb_box()) {
        let s = occlusion_ratio(&v, &f).unwrap();
        prop_assert!((0.0..=1.0).contains(&s.occlusion));
        prop_assert!(s.visible_area <= s.full_area);
    }

    #[test]
    fn contained_box_iou_is_area_ratio(f in arb_box(), fx in 0.0..1.0f64, fy in 0.0..1.0f64, sw in 0.05..1.0f64, sh in 0.05..1.0f64) {
        let w = f.w * sw;
        let h = f.h * sh;
        let inner = BBox::new(f.x + fx * (f.w - w), f.y + fy * (f.h - h), w, h);
        prop_assert!((intersection(&inner, &f) - inner.area()).abs() <= 1e-9 * f.area());
        prop_assert!((iou(&inner, &f) - inner.area() / f.area()).abs() < 1e-9);
    }
}
