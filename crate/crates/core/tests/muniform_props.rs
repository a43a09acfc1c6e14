use nematic::muniform::{
    estimate_uniformity, neighborhood, rasterize, rasterize_in, set_distances, uniformity_report, GridFrame,
    NeighborhoodMode, Point2, Polygon2D, UniformityOptions,
};
use nematic::Error;
use proptest::prelude::*;

fn convex_polygon() -> impl Strategy<Value = Polygon2D> {
    prop_oneof![
        (3usize..12, 0.3f64..1.0).prop_map(|(n, r)| Polygon2D::regular(n, r, Point2::new(0.1, -0.2)).unwrap()),
        (0.3f64..1.0, 0.3f64..1.0).prop_map(|(w, h)| Polygon2D::rectangle(0.0, 0.0, w, h).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn neighbourhoods_sandwich_the_set(p in convex_polygon(), k in 1usize..6) {
        let g = rasterize(&p, 1.0 / 64.0).unwrap();
        let eps = k as f64 * g.h();
        let inner = neighborhood(&g, eps, NeighborhoodMode::Inner).unwrap();
        let outer = neighborhood(&g, eps, NeighborhoodMode::Outer).unwrap();
        prop_assert!(inner.is_subset_of(&g));
        prop_assert!(g.is_subset_of(&outer));
        let wider = neighborhood(&g, eps + g.h(), NeighborhoodMode::Outer).unwrap();
        let deeper = neighborhood(&g, eps + g.h(), NeighborhoodMode::Inner).unwrap();
        prop_assert!(outer.is_subset_of(&wider));
        prop_assert!(deeper.is_subset_of(&inner));
    }

    #[test]
    fn distances_vanish_together(r1 in 0.3f64..0.9, r2 in 0.3f64..0.9, n in 3usize..9) {
        let a = Polygon2D::regular(n, r1, Point2::zeros()).unwrap();
        let b = Polygon2D::regular(n, r2, Point2::zeros()).unwrap();
        let frame = GridFrame::covering(&[&a, &b], 1.0 / 64.0, 0.1).unwrap();
        let (ga, gb) = (rasterize_in(&a, frame), rasterize_in(&b, frame));
        let d = set_distances(&ga, &gb).unwrap();
        prop_assert_eq!(d.l1 == 0.0, d.hausdorff == 0.0);
        prop_assert!(d.l1 >= 0.0 && d.hausdorff >= 0.0);
        let same = set_distances(&ga, &ga).unwrap();
        prop_assert_eq!((same.l1, same.hausdorff), (0.0, 0.0));
        // symmetric
        prop_assert_eq!(set_distances(&gb, &ga).unwrap(), d);
    }

    #[test]
    fn convex_domains_are_uniform(p in convex_polygon(), seed in 0u64..100) {
        let opts = UniformityOptions { samples: 12, h: p.diameter() / 64.0, seed, ..Default::default() };
        let r = uniformity_report(&p, &opts).unwrap();
        prop_assert_eq!(r.infeasible_pairs, 0);
        prop_assert!(r.m_estimate >= 1.0 && r.m_estimate <= 10.0, "{}", r.m_estimate);
    }

    #[test]
    fn feasibility_is_monotone_in_m(seed in 0u64..100) {
        // feasible at the estimate, infeasible a little below it, and the cap does not move it beyond the bisection tolerance
        let p = Polygon2D::dumbbell(0.1).unwrap();
        let g = rasterize(&p, 1.0 / 64.0).unwrap();
        let r = uniformity_report(&p, &UniformityOptions { samples: 4, h: 1.0 / 64.0, seed, ..Default::default() }).unwrap();
        for pair in r.pairs.iter().filter(|q| q.m.is_some_and(|m| m > 1.5)) {
            let (x, y, m) = (Point2::from(pair.x), Point2::from(pair.y), pair.m.unwrap());
            prop_assert!((estimate_uniformity(&g, x, y, 2.0 * m).unwrap() - m).abs() <= 1e-2);
            prop_assert!(estimate_uniformity(&g, x, y, m).is_ok());
            let below = estimate_uniformity(&g, x, y, m - 0.1);
            prop_assert!(matches!(below, Err(Error::Infeasible { .. })), "{:?}", below);
        }
    }
}

#[test]
fn narrower_necks_need_larger_constants() {
    let m: Vec<f64> = [0.3, 0.15]
        .iter()
        .map(|&w| {
            let opts = UniformityOptions { samples: 30, h: 1.0 / 64.0, ..Default::default() };
            uniformity_report(&Polygon2D::dumbbell(w).unwrap(), &opts).unwrap().m_estimate
        })
        .collect();
    assert!(m[1] > m[0], "{m:?}");
}
