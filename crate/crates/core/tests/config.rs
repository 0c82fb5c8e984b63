use adaptive_dose::acquisition::UtilityWeights;
use adaptive_dose::config::{parse_config, to_config_text};
use adaptive_dose::gp::{KernelSpec, ObservationSet};
use adaptive_dose::trial::{GroundTruth, ScenarioConfig};
use proptest::prelude::*;

fn arb_config() -> impl Strategy<Value = ScenarioConfig> {
    (
        (-20.0..20.0f64, -5.0..5.0f64, 0.0..1.0f64),
        (0.1..10.0f64, 0.1..5.0f64),
        (0.0..100.0f64, 0.0..100.0f64),
        (-10.0..10.0f64, 1usize..200, 1usize..60),
        any::<u64>(),
        prop::option::of(prop::collection::vec((0.0..1.0f64, -3.0..3.0f64), 0..6)),
    )
        .prop_map(|((m, b, noise), (ls, amp), (l1, l2), (lo, intervals, budget), seed, warm)| {
            let step = 0.25;
            let hi = lo + intervals as f64 * step;
            ScenarioConfig {
                truth: GroundTruth {
                    midpoint: m,
                    intercept: b,
                    noise_std: noise,
                },
                kernel: KernelSpec {
                    length_scale: ls,
                    signal_amplitude: amp,
                },
                weights: UtilityWeights {
                    lambda1: l1,
                    lambda2: l2,
                },
                domain_lo: lo,
                domain_hi: hi,
                budget,
                grid_step: step,
                seed,
                warm_start: warm.map(|pts| {
                    ObservationSet::from_pairs(pts.into_iter().map(|(u, y)| (lo + u * (hi - lo), y))).unwrap()
                }),
            }
        })
}

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(cfg in arb_config()) {
        prop_assert!(cfg.validate().is_ok());
        let text = to_config_text(&cfg);
        prop_assert_eq!(parse_config(&text).unwrap(), cfg);
    }
}

#[test]
fn comments_and_defaults() {
    let text = "\
# comment line
truth.m = 6   # trailing comment
truth.b = 1
truth.noise_std = 0.1
kernel.length_scale = 2
weights.lambda1 = 30
weights.lambda2 = 10
domain.lo = 0
domain.hi = 12
budget = 12
seed = 1
";
    let cfg = parse_config(text).unwrap();
    assert_eq!(cfg.grid_step, 0.01);
    assert_eq!(cfg.kernel.signal_amplitude, 1.0);
    assert_eq!(cfg.warm_start, None);
}
