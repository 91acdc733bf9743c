//! Property tests for the distance and kernel invariants.

use mckv_core::measure::DiscreteMeasure;
use mckv_core::mollify::{Kde1d, MollifierFamily};
use mckv_core::particle::ParticleCloud;
use mckv_core::transport::{
    kantorovich_dual_value, wasserstein_1d, wasserstein_lp, weighted_tv,
};
use mckv_core::GridDensity;
use proptest::prelude::*;

fn measure_strategy(max_atoms: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec((-4.0f64..4.0, 0.01f64..1.0), 1..max_atoms).prop_map(|atoms| {
        let pts: Vec<f64> = atoms.iter().map(|(x, _)| *x).collect();
        let masses: Vec<f64> = atoms.iter().map(|(_, w)| *w).collect();
        DiscreteMeasure::normalized(1, pts, masses).unwrap()
    })
}

fn density_pair_strategy() -> impl Strategy<Value = (GridDensity, GridDensity)> {
    let cells = 64usize;
    let values = prop::collection::vec(0.0f64..1.0, cells);
    (values.clone(), values).prop_map(move |(a, b)| {
        let norm = |raw: Vec<f64>| {
            let width = 6.0 / cells as f64;
            let mass: f64 = raw.iter().sum::<f64>() * width;
            let mass = mass.max(1e-9);
            let vals: Vec<f64> = raw.iter().map(|v| v / mass).collect();
            GridDensity::new_1d(-3.0, 3.0, cells, vals).unwrap()
        };
        (norm(a), norm(b))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantile_route_matches_lp_route(
        mu in measure_strategy(24),
        nu in measure_strategy(24),
        p in 1.0f64..3.0,
    ) {
        let w1d = wasserstein_1d(&mu, &nu, p).unwrap();
        let (wlp, plan) = wasserstein_lp(&mu, &nu, p).unwrap();
        plan.validate(&mu, &nu).unwrap();
        prop_assert!((w1d - wlp).abs() <= 1e-9, "{w1d} vs {wlp}");
    }

    #[test]
    fn distance_is_symmetric_and_triangular(
        a in measure_strategy(16),
        b in measure_strategy(16),
        c in measure_strategy(16),
    ) {
        let ab = wasserstein_1d(&a, &b, 1.0).unwrap();
        let ba = wasserstein_1d(&b, &a, 1.0).unwrap();
        prop_assert_eq!(ab.to_bits(), ba.to_bits());
        let bc = wasserstein_1d(&b, &c, 1.0).unwrap();
        let ac = wasserstein_1d(&a, &c, 1.0).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn distance_is_monotone_in_the_order(
        mu in measure_strategy(16),
        nu in measure_strategy(16),
        p in 1.0f64..2.5,
        bump in 0.0f64..2.0,
    ) {
        let q = p + bump;
        let (wp, _) = wasserstein_lp(&mu, &nu, p).unwrap();
        let (wq, _) = wasserstein_lp(&mu, &nu, q).unwrap();
        prop_assert!(wp <= wq + 1e-9, "W_{p} = {wp} > W_{q} = {wq}");
    }

    #[test]
    fn dual_values_lower_bound_the_distance(
        mu in measure_strategy(16),
        nu in measure_strategy(16),
        anchor in -3.0f64..3.0,
        offset in -1.0f64..1.0,
    ) {
        // f(x) = offset + min(|x - anchor|, |x + anchor|) is 1-Lipschitz
        let f = move |x: &[f64]| offset + (x[0] - anchor).abs().min((x[0] + anchor).abs());
        let dual = kantorovich_dual_value(f, &mu, &nu).unwrap();
        let (w1, _) = wasserstein_lp(&mu, &nu, 1.0).unwrap();
        prop_assert!(dual <= w1 + 1e-9, "dual {dual} > W1 {w1}");
    }

    #[test]
    fn weighted_tv_dominates_wp(
        (l1, l2) in density_pair_strategy(),
        p in prop::sample::select(vec![1.0f64, 2.0]),
    ) {
        let m1 = l1.to_measure().unwrap();
        let m2 = l2.to_measure().unwrap();
        let w = wasserstein_1d(&m1, &m2, p).unwrap();
        let tv = weighted_tv(&l1, &l2, p).unwrap();
        let factor = 1.0f64.max(2.0f64.powf(p - 1.0));
        let slack = 10.0 * l1.cell_width()[0];
        prop_assert!(w.powf(p) <= factor * tv.weighted + slack);
    }

    #[test]
    fn kde_respects_support_and_peak(
        xs in prop::collection::vec(-2.0f64..2.0, 1..200),
        query in -3.0f64..3.0,
        n in 2u32..32,
    ) {
        let fam = MollifierFamily::bump(1, n).unwrap();
        let cloud = ParticleCloud::new(1, xs.clone(), 0.0).unwrap();
        let kde = Kde1d::new(&cloud, &fam).unwrap();
        let v = kde.eval(query);
        prop_assert!(v >= 0.0);
        prop_assert!(v <= fam.peak() + 1e-12);
        let radius = fam.radius();
        let near = xs.iter().any(|x| (x - query).abs() < radius);
        if !near {
            prop_assert_eq!(v, 0.0);
        }
        // pruning is invisible in the bits
        prop_assert_eq!(v.to_bits(), kde.eval_naive(query).to_bits());
    }

    #[test]
    fn measure_csv_roundtrip(mu in measure_strategy(24)) {
        let text = mckv_core::csv_io::measure_to_csv(&mu);
        let back = mckv_core::csv_io::measure_from_csv(&text).unwrap();
        prop_assert_eq!(back.points(), mu.points());
        prop_assert_eq!(back.weights(), mu.weights());
    }
}
