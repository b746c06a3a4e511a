use exact_diffusion::bridge::{
    compute_case_weights, interpolate_skeleton, sample_bridge_point, BridgeQuery, UvRegion,
};
use exact_diffusion::skeleton::SkeletonPoint;
use exact_diffusion::RngStream;
use proptest::prelude::*;

fn query() -> impl Strategy<Value = BridgeQuery> {
    (
        1e-3f64..3.0,
        1e-3f64..3.0,
        -3.0f64..3.0,
        -3.0f64..3.0,
        0.0f64..2.0,
        1e-6f64..3.0,
    )
        .prop_map(|(d1, d2, b1, b3, l1, dl)| BridgeQuery {
            s1: 0.0,
            s2: d1,
            s3: d1 + d2,
            b1,
            b3,
            l1,
            l3: l1 + dl,
        })
}

proptest! {
    #[test]
    fn weights_form_a_distribution(q in query()) {
        let w = compute_case_weights(&q).unwrap();
        prop_assert!((w.p1 + w.p2 + w.p3 - 1.0).abs() <= 1e-10);
        prop_assert!(w.p1 >= 0.0 && w.p3 >= 0.0 && w.p2 >= 0.0);
    }

    #[test]
    fn bridge_local_time_stays_between_anchors(q in query(), seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0);
        for _ in 0..20 {
            let (b, l) = sample_bridge_point(&q, &mut rng).unwrap();
            prop_assert!(b.is_finite());
            prop_assert!(l >= q.l1 && l <= q.l3);
        }
    }

    #[test]
    fn region_is_the_pullback(q in query(), u in 0.0f64..8.0, v in 0.0f64..8.0) {
        let r = UvRegion::new(&q);
        let (b2, l2) = r.to_b_l(u, v);
        let margin = b2.abs().min((l2 - r.l1).abs()).min((l2 - r.l3).abs());
        prop_assume!(margin > 1e-12);
        prop_assert_eq!(r.contains(u, v), b2 >= 0.0 && l2 >= r.l1 && l2 <= r.l3);
    }

    #[test]
    fn interpolation_keeps_order(
        x in -2.0f64..2.0,
        b in -2.0f64..2.0,
        l in 0.0f64..1.5,
        times in proptest::collection::vec(0.0f64..1.0, 0..12),
        seed in any::<u64>(),
    ) {
        // a positive end local time needs a path that can reach zero
        let l = if x * b > 0.0 { 0.0 } else { l };
        let l = if x * b <= 0.0 { l.max(1e-9) } else { l };
        let pts = [SkeletonPoint::new(0.0, x, 0.0), SkeletonPoint::new(1.0, b, l)];
        let out = interpolate_skeleton(&pts, &times, &mut RngStream::new(seed, 1)).unwrap();
        prop_assert!(out.windows(2).all(|w| w[0].t < w[1].t && w[0].l <= w[1].l));
        prop_assert!(times.iter().all(|t| out.iter().any(|p| p.t == *t)));
        prop_assert_eq!(out.first().unwrap(), &pts[0]);
        prop_assert_eq!(out.last().unwrap(), &pts[1]);
    }
}
