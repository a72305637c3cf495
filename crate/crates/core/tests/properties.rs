//! Randomised properties of serialisation, inner products and perturbations.

use std::sync::Arc;

use pe_lab::geometry::operators::tensor_inner;
use pe_lab::geometry::{RadialGrid, RadialSymmetric2Tensor, Scheme, WarpedMetric};
use pe_lab::harness::{generate_perturbation, PerturbationKind, PerturbationSpec};
use proptest::prelude::*;

fn grid(n: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::new(n, 64, 10.0, Scheme::Order4).unwrap())
}

fn profile(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.5f64..0.5, len)
}

proptest! {
    #[test]
    fn metric_json_round_trip_is_bit_exact(n in 3usize..6, u in profile(64), v in profile(64)) {
        let g = WarpedMetric::new(grid(n), u, v).unwrap();
        let back = WarpedMetric::from_json(&g.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.u, g.u);
        prop_assert_eq!(back.v, g.v);
    }

    #[test]
    fn tensor_inner_is_symmetric_and_bilinear(
        a1 in profile(64), b1 in profile(64), a2 in profile(64), b2 in profile(64), s in -2.0f64..2.0,
    ) {
        let gr = grid(3);
        let g = WarpedMetric::hyperbolic(gr.clone());
        let mut h1 = RadialSymmetric2Tensor::zeros(gr.clone());
        let mut h2 = RadialSymmetric2Tensor::zeros(gr);
        (h1.a, h1.b, h2.a, h2.b) = (a1, b1, a2, b2);
        let x = tensor_inner(&g, &h1, &h2).unwrap();
        let y = tensor_inner(&g, &h2, &h1).unwrap();
        prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        let scaled = tensor_inner(&g, &h1.scale(s), &h2).unwrap();
        prop_assert!((scaled - s * x).abs() <= 1e-9 * (1.0 + x.abs()));
        prop_assert!(tensor_inner(&g, &h1, &h1).unwrap() >= 0.0);
    }

    #[test]
    fn perturbations_are_deterministic_and_supported(seed in 0u64..1000, kind_index in 0usize..4) {
        let kind = [PerturbationKind::Conformal, PerturbationKind::Tt, PerturbationKind::RandomCompact, PerturbationKind::DivergenceFree][kind_index];
        let gr = grid(4);
        let spec = PerturbationSpec { kind, amplitude: 0.01, support: [0.5, 4.0], seed, bumps: 3 };
        let h = generate_perturbation(&spec, &gr).unwrap();
        let again = generate_perturbation(&spec, &gr).unwrap();
        prop_assert_eq!(&h.a, &again.a);
        prop_assert_eq!(&h.b, &again.b);
        for (k, &r) in gr.nodes().iter().enumerate() {
            if r > 4.0 + 1e-12 {
                prop_assert!(h.a[k] == 0.0 && h.b[k] == 0.0, "nonzero at r = {}", r);
            }
        }
    }
}
