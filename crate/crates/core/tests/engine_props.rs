//! Property tests of whole simulation runs on small random regions.

use proptest::prelude::*;
use sleac_core::engine::{run_instrumented, tree_violations, Instrumentation};
use sleac_core::{run, Algorithm, Approach, Region, SchedulerKind, SimParams};

/// Builds a region text from a wall mask, placing the entry on the first
/// open cell. Returns `None` when the open cells are not connected.
fn region_from_mask(width: usize, walls: &[bool]) -> Option<Region> {
    let first = walls.iter().position(|w| !w)?;
    let text: String = walls
        .chunks(width)
        .enumerate()
        .map(|(r, row)| {
            let mut line: String = row
                .iter()
                .enumerate()
                .map(|(c, &w)| match (w, r * width + c == first) {
                    (_, true) => 'E',
                    (true, false) => 'W',
                    (false, false) => '.',
                })
                .collect();
            line.push('\n');
            line
        })
        .collect();
    Region::parse(&text).ok()
}

fn arb_region() -> impl Strategy<Value = Region> {
    (2usize..8, 2usize..8)
        .prop_flat_map(|(w, h)| (Just(w), prop::collection::vec(prop::bool::weighted(0.2), w * h)))
        .prop_filter_map("open cells must be connected", |(w, walls)| {
            region_from_mask(w, &walls)
        })
}

fn arb_params() -> impl Strategy<Value = SimParams> {
    (
        0usize..3,
        any::<bool>(),
        any::<bool>(),
        1u32..6,
        4u32..30,
        prop_oneof![Just(0.0), 0.0..0.2f64],
        any::<u64>(),
    )
        .prop_map(|(alg, a2, adv, dt, e0, alpha, seed)| SimParams {
            algorithm: Algorithm::ALL[alg],
            approach: if a2 {
                Approach::MaxCoverage
            } else {
                Approach::FastTermination
            },
            scheduler: if adv {
                SchedulerKind::Adversarial
            } else {
                SchedulerKind::Random
            },
            dt,
            e0,
            alpha,
            seed,
            m: 50,
            max_steps: Some(5_000),
            ..SimParams::default()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn runs_keep_invariants(region in arb_region(), p in arb_params()) {
        let inst = Instrumentation { log_events: false, check_invariants: true };
        let out = run_instrumented(&region, &p, inst).unwrap();
        prop_assert!(out.violations.is_empty(), "{:?}", &out.violations[..1]);
        if p.algorithm == Algorithm::Sltt && out.metrics.nda_failed == 0 {
            let tree = tree_violations(&region, &out.occupancy, &out.agents);
            prop_assert!(tree.is_empty(), "{:?}", tree);
        }
        let m = &out.metrics;
        prop_assert_eq!(m.n_agents, out.agents.len());
        prop_assert!(m.a_c <= region.n());
        // A settled agent fails on the tick that empties it, so it can
        // overshoot by less than one settled tick.
        prop_assert!(m.max_ei < f64::from(p.e0) + p.alpha + 1e-9);
        let total: f64 = out.agents.iter().map(|a| a.consumed(p.alpha)).sum();
        prop_assert!((total - m.e_total).abs() <= 1e-6 * total.max(1.0));
    }

    #[test]
    fn runs_replay_exactly(region in arb_region(), p in arb_params()) {
        prop_assert_eq!(run(&region, &p).unwrap(), run(&region, &p).unwrap());
    }

    #[test]
    fn agents_enter_no_faster_than_the_interval(region in arb_region(), p in arb_params()) {
        let out = run_instrumented(&region, &p, Instrumentation::default()).unwrap();
        for w in out.agents.windows(2) {
            prop_assert!(w[1].entered_at >= w[0].entered_at + u64::from(p.dt));
            prop_assert_eq!(w[1].entered_at % u64::from(p.dt), 0);
        }
    }
}
