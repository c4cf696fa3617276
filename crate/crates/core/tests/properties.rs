//! Cross-module invariants on random curves and primes.

use isoradix::arith::primes_in;
use isoradix::curve::prime_rng;
use isoradix::distinguish;
use isoradix::lfunc;
use isoradix::{Engine, RationalCurve};
use proptest::prelude::*;

fn curve_strategy() -> impl Strategy<Value = RationalCurve> {
    (-500i64..500, -500i64..500).prop_filter_map("singular", |(a, b)| RationalCurve::new("r", a, b).ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn twist_traces_flip_by_legendre(c in curve_strategy(), d in prop::sample::select(vec![-3i64, -1, 2, 5, 7, -11])) {
        let t = c.twist(d, "t").unwrap();
        for p in primes_in(5, 600) {
            let (Ok(e), Ok(et)) = (c.reduce(p), t.reduce(p)) else { continue };
            if p as i64 % d == 0 { continue; }
            let a = p as i64 + 1 - e.count_naive() as i64;
            let at = p as i64 + 1 - et.count_naive() as i64;
            let chi = e.field().legendre(e.field().from_i64(d)) as i64;
            prop_assert_eq!(at, chi * a, "p={}", p);
        }
    }

    #[test]
    fn group_order_is_seed_independent(c in curve_strategy(), seed in any::<u64>(), idx in 0usize..200) {
        let primes = primes_in(20_000, 60_000);
        let p = primes[idx * primes.len() / 200];
        if let Ok(e) = c.reduce(p) {
            let n1 = e.group_order(&mut prime_rng(seed, p)).unwrap();
            let n2 = e.group_order(&mut prime_rng(seed ^ 0xdead, p)).unwrap();
            prop_assert_eq!(n1, n2);
            let pt = e.random_point(&mut prime_rng(seed, p));
            prop_assert!(e.scalar_mul(n1, &pt).is_infinity());
        }
    }

    #[test]
    fn extension_orders_are_norms(a in -60i64..=60, k in 1u32..=6) {
        let p = 997u64;
        let d = lfunc::count_extension(a, p, k).unwrap();
        prop_assert!((d.t_k as i128).pow(2) <= 4 * (d.q() as i128));
        prop_assert_eq!(d.n_k as i128, d.q() as i128 + 1 - d.t_k as i128);
    }

    #[test]
    fn grid_of_pair_sums_to_one(c1 in curve_strategy(), c2 in curve_strategy(), ell in prop::sample::select(vec![2u64, 3, 5, 7])) {
        let engine = Engine::in_memory(0);
        let g = distinguish::joint_valuation_density(&engine, &c1, &c2, ell, 3000).unwrap();
        prop_assert!((g.density_sum() - 1.0).abs() < 1e-9);
        let swapped = distinguish::joint_valuation_density(&engine, &c2, &c1, ell, 3000).unwrap();
        for m in 0..g.counts.len() {
            for m2 in 0..g.counts.len() {
                prop_assert_eq!(g.counts[m][m2], swapped.counts[m2][m]);
            }
        }
    }
}

#[test]
fn mismatch_density_stabilizes() {
    let engine = Engine::in_memory(0);
    let e1 = RationalCurve::new("cm_i", 1, 0).unwrap();
    let e2 = RationalCurve::new("cm_j", 0, 1).unwrap();
    let at = |b| {
        distinguish::mismatch_scan(&engine, &e1, &e2, b, &[3, 5, 7])
            .unwrap()
            .per_ell_density
    };
    let (half, full) = (at(40_000), at(80_000));
    for (x, y) in half.iter().zip(&full) {
        assert!(
            (x.density - y.density).abs() < 0.01,
            "ell={}: {} vs {}",
            x.ell,
            x.density,
            y.density
        );
        assert!(y.density > 0.0);
    }
}
