use proptest::prelude::*;

use hausdorff_grid::experiments::{fit_order, scene_circle_in_ring};
use hausdorff_grid::grid::Grid;
use hausdorff_grid::hausdorff::{dh_approx, dh_approx_shapes, dh_oracle, md_oracle, sd_supnorm};
use hausdorff_grid::point::Point;
use hausdorff_grid::redistance::{fast_march, positive_part, sample_exact_sd, sample_levelset};
use hausdorff_grid::shapes::{RingParams, Shape};
use hausdorff_grid::stochastic::{analyze_iterates, probe_segment};

fn primitive() -> impl Strategy<Value = Shape> {
    (-1.2f64..1.2, -1.2f64..1.2, 0.1f64..0.7, 0.1f64..0.7, any::<bool>()).prop_map(|(x, y, s, t, round)| {
        let c = Point::new2(x, y);
        if round {
            Shape::ball(c, s, 2).unwrap()
        } else {
            Shape::cuboid(c - Point::new2(s, t), c + Point::new2(s, t), 2).unwrap()
        }
    })
}

fn union() -> impl Strategy<Value = Shape> {
    prop::collection::vec(primitive(), 1..=3).prop_map(|v| Shape::union(v).unwrap())
}

fn grid_for(h: f64, sx: f64, sy: f64) -> Grid {
    Grid::covering(2, Point::new2(-2.2, -2.2), Point::new2(2.2, 2.2), h, Point::new2(sx * h, sy * h)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn grid_value_never_exceeds_hausdorff(a in union(), b in union(), h in 0.1f64..0.6, sx in 0.0f64..1.0, sy in 0.0f64..1.0) {
        let g = grid_for(h, sx, sy);
        let rep = dh_approx_shapes(&g, &a, &b).unwrap();
        let o = dh_oracle(&a, &b, 0.04).unwrap();
        prop_assert!(rep.d_tilde <= o.dh + o.error, "d̃ {} vs oracle {} ± {}", rep.d_tilde, o.dh, o.error);
        prop_assert!(o.dh - rep.d_tilde <= 2f64.sqrt() * h + o.error);
    }

    #[test]
    fn unsigned_gap_below_signed_gap(a in primitive(), b in primitive(), h in 0.1f64..0.6, sx in 0.0f64..1.0, sy in 0.0f64..1.0) {
        let g = grid_for(h, sx, sy);
        let (sa, sb) = (sample_exact_sd(&g, &a).unwrap(), sample_exact_sd(&g, &b).unwrap());
        let rep = dh_approx(&positive_part(&sa), &positive_part(&sb)).unwrap();
        let (sup, _) = sd_supnorm(&sa, &sb).unwrap();
        prop_assert!(rep.d_tilde <= sup);
    }

    #[test]
    fn max_distance_dominates_distance(s in primitive(), x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let p = Point::new2(x, y);
        let gap = 0.05;
        let md = md_oracle(&s, &p, gap).unwrap();
        prop_assert!(md + 1e-12 >= s.distance(&p));
        // distance to a small ball around p is the max distance, up to its radius
        let dot = Shape::ball(p, gap, 2).unwrap();
        let o = dh_oracle(&s, &dot, gap).unwrap();
        prop_assert!((o.dh - md).abs() <= o.error + gap + 2f64.sqrt() * gap);
    }

    #[test]
    fn iterate_lemma(x0 in 0.0f64..1.0, k in 0.0f64..1.0, n in 1usize..300) {
        let a = analyze_iterates(x0, k, n, u64::MAX).unwrap();
        if !a.rational {
            prop_assert!(a.epsilon > 0.0 && a.epsilon <= 1.0 / n as f64);
            let m = a.m.expect("return index within the bound");
            prop_assert!((m as f64) <= 2.0 / (a.epsilon * a.epsilon));
            prop_assert!((m as u64) <= a.k_bound.unwrap());
        }
    }

    #[test]
    fn segment_probe_bounds(x0 in 0.0f64..4.0, y0 in 0.0f64..4.0, x1 in 0.0f64..4.0, y1 in 0.0f64..4.0, h in 0.05f64..0.5) {
        let g = Grid::covering(2, Point::new2(0.0, 0.0), Point::new2(4.0, 4.0), h, Point::ORIGIN).unwrap();
        let (p, q) = (Point::new2(x0, y0), Point::new2(x1, y1));
        let probe = probe_segment(&g, &p, &q).unwrap();
        prop_assert!(probe.beta >= 0.0 && probe.beta <= g.cell_diagonal() / 2.0 + 1e-12);
        prop_assert!(probe.edges_crossed as f64 >= (p.distance(&q) / g.cell_diagonal()).floor());
    }

    #[test]
    fn fast_marching_keeps_sign(cx in -0.5f64..0.5, cy in -0.5f64..0.5, r in 0.3f64..1.2, h in 0.05f64..0.3) {
        let s = Shape::ball(Point::new2(cx, cy), r, 2).unwrap();
        let g = Grid::covering(2, Point::new2(-2.0, -2.0), Point::new2(2.0, 2.0), h, Point::ORIGIN).unwrap();
        let phi = sample_levelset(&g, &s).unwrap();
        let d = fast_march(&phi).unwrap();
        for (u, v) in phi.values().iter().zip(d.values()) {
            prop_assert_eq!(*u <= 0.0, *v <= 0.0);
        }
    }

    #[test]
    fn exact_power_laws_fit_exactly(c in 0.01f64..10.0, p in 0.5f64..5.0) {
        let pts: Vec<(f64, f64)> = [0.2f64, 0.1, 0.05, 0.025].iter().map(|&h| (h, c * h.powf(p))).collect();
        let f = fit_order(&pts).unwrap();
        prop_assert!((f.slope - p).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn circle_in_ring_error_within_bound(mag in 0.0f64..6.5, ang in 0.0f64..std::f64::consts::TAU, h in 0.05f64..0.4, sx in 0.0f64..1.0, sy in 0.0f64..1.0) {
        let scene = scene_circle_in_ring(2, Point::new2(mag * ang.cos(), mag * ang.sin()), &RingParams::default()).unwrap();
        let g = scene.grid(h, Point::new2(sx * h, sy * h)).unwrap();
        let rep = dh_approx_shapes(&g, &scene.a, &scene.b).unwrap();
        let delta = scene.dh - rep.d_tilde;
        prop_assert!(delta >= -1e-12 && delta <= scene.error_bound(h) + 1e-12, "δ {} bound {}", delta, scene.error_bound(h));
    }
}
