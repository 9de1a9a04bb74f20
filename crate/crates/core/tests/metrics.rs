mod common;

use fict_core::eval::stats::t_two_sided_p;
use fict_core::eval::{aggregate, pearson, BenchmarkResult, ModelKey, FULL};
use fict_core::filters::Registry;
use fict_core::synth;
use proptest::prelude::*;

#[test]
fn metric_identities() {
    common::check_metrics(1_000).unwrap();
}

#[test]
fn t_tail_matches_quadrature_across_df() {
    for df in [1u32, 2, 3, 5, 8, 13] {
        for t in [0.3, 1.0, 2.2, 4.0] {
            let q = common::t_p_by_quadrature(t, df);
            let p = t_two_sided_p(t, df as f64);
            assert!((p - q).abs() < 1e-6, "df {df} t {t}: {p} vs {q}");
        }
    }
}

fn result(
    registry: &Registry,
    corpus: &str,
    seed: u64,
    bench: &str,
    deltas: Vec<f64>,
) -> BenchmarkResult {
    let acc = deltas.iter().filter(|d| **d > 0.0).count() as f64 / deltas.len() as f64;
    BenchmarkResult {
        model: ModelKey::new("m", corpus, seed, registry).unwrap(),
        benchmark: bench.into(),
        accuracy: acc,
        mean_p_delta: deltas.iter().sum::<f64>() / deltas.len() as f64,
        pair_ids: (0..deltas.len()).map(|i| format!("p{i}")).collect(),
        logprob_sum: -10.0 * (seed as f64 + 1.0),
        token_count: 20,
        p_deltas: deltas,
    }
}

proptest! {
    #[test]
    fn accuracy_is_scale_invariant_and_p_delta_linear(
        deltas in prop::collection::vec(-5.0f64..5.0, 1..30),
        c in 0.01f64..100.0,
    ) {
        let registry = Registry::builtin();
        let a = result(&registry, FULL, 1, "b", deltas.clone());
        let b = result(&registry, FULL, 1, "b", deltas.iter().map(|d| d * c).collect());
        prop_assert_eq!(a.accuracy, b.accuracy);
        prop_assert!((b.mean_p_delta - c * a.mean_p_delta).abs() <= 1e-9 * (1.0 + b.mean_p_delta.abs()));
    }

    #[test]
    fn pearson_is_affine_invariant(
        xy in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..40),
        a in 0.1f64..10.0, b in -5.0f64..5.0,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        if let Ok(r) = pearson(&x, &y) {
            let x2: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let r2 = pearson(&x2, &y).unwrap();
            prop_assert!((r - r2).abs() < 1e-9);
        }
    }

    #[test]
    fn aggregation_ignores_record_order(rot in 0usize..8, rev in any::<bool>()) {
        let registry = Registry::builtin();
        let mut results = Vec::new();
        for (corpus, base) in [(FULL, 1.0), ("agr-pp-mod", -1.0)] {
            for seed in [1, 2] {
                for bench in [synth::PP_BENCHMARK, synth::SIMPLE_BENCHMARK] {
                    let deltas = vec![base, 0.5 * seed as f64, -0.25, base * seed as f64];
                    results.push(result(&registry, corpus, seed, bench, deltas));
                }
            }
        }
        let expected = aggregate(&results, &registry).unwrap();
        results.rotate_left(rot);
        if rev {
            results.reverse();
        }
        prop_assert_eq!(aggregate(&results, &registry).unwrap(), expected);
    }
}
