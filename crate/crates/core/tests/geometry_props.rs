mod common;

use common::{area_and_perimeter, scanline_areas, star_strategy};
use proptest::prelude::*;
use shrinkmask::geometry::{fixed_offset, intersection_area, offset_polygon, polygon_iou, shrink_offset, union_area};
use shrinkmask::{FixedExtendParams, Point2, Polygon, ShrinkParams};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn shrink_offset_is_area_over_perimeter(p in star_strategy(0.0..100.0, 2.0..60.0)) {
        let (a, l) = area_and_perimeter(&p);
        let want = a / l * 0.84;
        let got = shrink_offset(&p, ShrinkParams::default());
        prop_assert!((got - want).abs() <= 1e-9 * want, "{got} vs {want}");
    }

    #[test]
    fn fixed_offset_inverts_shrink(p in star_strategy(0.0..100.0, 2.0..60.0), dt in 0.5f64..3.0) {
        let (a, l) = area_and_perimeter(&p);
        let got = fixed_offset(&p, FixedExtendParams::new(dt).unwrap());
        prop_assert!((got - a / l * dt).abs() <= 1e-9 * got);
    }

    #[test]
    fn area_is_rigid_motion_invariant(
        p in star_strategy(0.0..50.0, 2.0..30.0),
        theta in -3.2f64..3.2,
        s in 0.25f64..4.0,
        tx in -100.0f64..100.0,
    ) {
        let q = p.transformed(theta, s, tx, -tx).unwrap();
        prop_assert!((q.area() - s * s * p.area()).abs() <= 1e-9 * q.area());
        prop_assert!((q.perimeter() - s * p.perimeter()).abs() <= 1e-9 * q.perimeter());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn boolean_areas_match_scanline_oracle(
        a in star_strategy(15.0..25.0, 4.0..15.0),
        b in star_strategy(10.0..30.0, 4.0..15.0),
    ) {
        let (oa, ob, oi) = scanline_areas(&a, &b, 4000);
        let ou = oa + ob - oi;
        let (i, u) = (intersection_area(&a, &b), union_area(&a, &b));
        prop_assert!((i - oi).abs() <= 0.01 * oi.max(1e-2), "intersection {i} vs {oi}");
        prop_assert!((u - ou).abs() <= 0.01 * ou, "union {u} vs {ou}");
        let iou = polygon_iou(&a, &b);
        prop_assert!((0.0..=1.0).contains(&iou));
        prop_assert!((iou - polygon_iou(&b, &a)).abs() < 1e-12);
    }

    #[test]
    fn shrinking_stays_inside(p in star_strategy(20.0..40.0, 8.0..20.0), frac in 0.05f64..0.9) {
        let d = frac * shrink_offset(&p, ShrinkParams::default());
        let Ok(parts) = offset_polygon(&p, -d) else { return Ok(()) };
        let total: f64 = parts.iter().map(Polygon::area).sum();
        prop_assert!(total < p.area());
        for part in &parts {
            for &v in part.vertices() {
                prop_assert!(p.contains(v), "{v:?} escaped");
                prop_assert!(p.boundary_distance(v) >= d - 1e-6);
            }
        }
    }

    #[test]
    fn expansion_covers_original(p in star_strategy(20.0..40.0, 8.0..20.0), d in 0.2f64..6.0) {
        let parts = offset_polygon(&p, d).unwrap();
        prop_assert_eq!(parts.len(), 1);
        let q = &parts[0];
        prop_assert!(q.area() > p.area());
        for &v in p.vertices() {
            prop_assert!(q.contains(v));
        }
        for &v in q.vertices() {
            let dist = p.boundary_distance(v);
            prop_assert!(!p.contains(v) || dist < 1e-6);
            prop_assert!(dist >= d - 1e-6 && dist <= 2.0 * d + 1e-6, "vertex at {dist} for offset {d}");
        }
    }
}

#[test]
fn square_fixture_inset() {
    let sq = Polygon::rect(10.0, 10.0, 30.0, 30.0).unwrap();
    let o = shrink_offset(&sq, ShrinkParams::default());
    assert!((o - 4.2).abs() < 1e-12);
    let inner = offset_polygon(&sq, -o).unwrap();
    assert_eq!(inner.len(), 1);
    // Boolean resolution snaps vertices to a fixed grid of about 1e-8 px.
    let b = inner[0].bbox();
    assert!((b.width() - 11.6).abs() < 1e-6 && (b.height() - 11.6).abs() < 1e-6, "{b:?}");
}

#[test]
fn u_shape_splits_when_its_base_collapses() {
    // Arms 10 wide, base 6 thick.
    let u = Polygon::from_coords(&[
        (0.0, 0.0),
        (10.0, 0.0),
        (10.0, 24.0),
        (20.0, 24.0),
        (20.0, 0.0),
        (30.0, 0.0),
        (30.0, 30.0),
        (0.0, 30.0),
    ])
    .unwrap();
    assert_eq!(offset_polygon(&u, -2.0).unwrap().len(), 1);
    let parts = offset_polygon(&u, -4.0).unwrap();
    assert_eq!(parts.len(), 2);
    for p in &parts {
        assert!((p.area() - 2.0 * 22.0).abs() < 1e-6, "{}", p.area());
    }
    assert!(offset_polygon(&u, -5.5).is_err());
}

#[test]
fn iou_of_shifted_squares() {
    let a = Polygon::rect(0.0, 0.0, 10.0, 10.0).unwrap();
    let b = Polygon::rect(5.0, 0.0, 15.0, 10.0).unwrap();
    assert!((polygon_iou(&a, &b) - 50.0 / 150.0).abs() < 1e-12);
    let far = a.translated(100.0, 0.0).unwrap();
    assert_eq!(intersection_area(&a, &far), 0.0);
    assert!(Point2::new(f64::NAN, 0.0).is_err());
}
