mod common;

use mas_core::oracle::best_paths;
use mas_core::parallel::{forward_parallel, LaneBuffer};
use mas_core::reference::{forward_reference, solve_reference};
use mas_core::{
    align_parallel, align_reference, solve_item, Engine, F32Config, F64Config, ItemView,
    LanePadding, LikelihoodBatch, MasConfig, ValidLengths,
};
use proptest::prelude::*;

fn item(t: usize, s: usize) -> impl Strategy<Value = (usize, usize, Vec<f32>)> {
    proptest::collection::vec(-5.0f32..=5.0, t * s).prop_map(move |v| (t, s, v))
}

fn dims(t_max: usize, s_max: usize) -> impl Strategy<Value = (usize, usize)> {
    (1..=t_max).prop_flat_map(move |t| (Just(t), t..=s_max))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn parallel_equals_reference((t, s, values) in dims(64, 256).prop_flat_map(|(t, s)| item(t, s))) {
        let batch = LikelihoodBatch::full(1, t, s, values).unwrap();
        let reference = align_reference(&batch, &F32Config::new(Engine::Reference)).unwrap();
        let parallel = align_parallel(&batch, &F32Config::new(Engine::Parallel)).unwrap();
        prop_assert_eq!(&parallel, &reference);
        prop_assert!(common::check_alignment(&parallel, &batch).is_ok());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn lane_padding_is_unobservable((t, s, values) in dims(40, 90).prop_flat_map(|(t, s)| item(t, s))) {
        let batch = LikelihoodBatch::full(1, t, s, values).unwrap();
        let plain = align_parallel(&batch, &F32Config::default()).unwrap();
        let padded = align_parallel(
            &batch,
            &F32Config::default().with_lane_padding(LanePadding::NextPowerOfTwo),
        ).unwrap();
        prop_assert_eq!(plain, padded);
    }

    #[test]
    fn feasible_scores_agree_bitwise((t, s, values) in dims(24, 60).prop_flat_map(|(t, s)| item(t, s))) {
        let view = ItemView::dense(&values, t, s).unwrap();
        let cfg = F32Config::default();
        let cache = forward_reference(view, &cfg);
        let mut buf = LaneBuffer::from_item(view, LanePadding::NextPowerOfTwo, cfg.max_neg_val());
        forward_parallel(&mut buf, &cfg);
        for j in 0..s {
            for i in 0..=j.min(t - 1) {
                prop_assert_eq!(buf.get(i, j).to_bits(), cache.get(i, j).to_bits());
            }
        }
    }

    #[test]
    fn score_equals_path_sum((t, s, values) in dims(30, 80).prop_flat_map(|(t, s)| item(t, s))) {
        let view = ItemView::dense(&values, t, s).unwrap();
        let (score, path) = solve_reference(view, &F32Config::default());
        let along: f32 = path.score_with(|i, j| view.get(i, j));
        prop_assert_eq!(along.to_bits(), score.to_bits());
    }

    #[test]
    fn engines_match_oracle((t, s, values) in dims(6, 10).prop_flat_map(|(t, s)| item(t, s))) {
        let view = ItemView::dense(&values, t, s).unwrap();
        let truth = best_paths(view).unwrap();
        for engine in Engine::ALL {
            let (score, path) = solve_item(view, &MasConfig::new(engine));
            prop_assert!(common::rel_close(score as f64, truth.max_score, 1e-5));
            prop_assert!(truth.contains(&path));
        }
    }
}

#[test]
fn prefix_scores_are_sub_instance_optima() {
    // Q[i][j] is the oracle optimum of the top-left (i+1) x (j+1) block.
    let (t, s) = (5, 9);
    let values: Vec<f32> = (0..t * s)
        .map(|k| ((k * 7919 % 97) as f32 / 9.7) - 5.0)
        .collect();
    let view = ItemView::dense(&values, t, s).unwrap();
    let cache = forward_reference(view, &F32Config::default());
    for i in 0..t {
        for j in i..s {
            let block: Vec<f32> = (0..=i)
                .flat_map(|r| values[r * s..r * s + j + 1].to_vec())
                .collect();
            let truth = best_paths(ItemView::dense(&block, i + 1, j + 1).unwrap()).unwrap();
            assert!(
                common::rel_close(cache.get(i, j) as f64, truth.max_score, 1e-5),
                "({i}, {j}): {} vs {}",
                cache.get(i, j),
                truth.max_score
            );
        }
    }
}

#[test]
fn f64_engines_agree() {
    let values: Vec<f64> = (0..3 * 7 * 20)
        .map(|k| ((k * 131 % 61) as f64 - 30.0) / 6.0)
        .collect();
    let lengths = vec![
        ValidLengths::new(7, 20),
        ValidLengths::new(3, 11),
        ValidLengths::new(1, 1),
    ];
    let batch = LikelihoodBatch::new(3, 7, 20, values, lengths).unwrap();
    let r = align_reference(&batch, &F64Config::new(Engine::Reference)).unwrap();
    let p = align_parallel(&batch, &F64Config::new(Engine::Parallel)).unwrap();
    assert_eq!(r, p);
    let paths = r.paths().unwrap();
    assert_eq!(paths[2].one_based(), vec![1]);
    for (b, path) in paths.iter().enumerate() {
        let truth = if batch.valid_lengths()[b].speech <= 11 {
            Some(best_paths(batch.item(b)).unwrap())
        } else {
            None
        };
        if let Some(truth) = truth {
            assert!(truth.contains(path));
        }
    }
}

#[test]
fn ragged_batches_match_across_engines() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    for _ in 0..50 {
        let b = rng.gen_range(1..6);
        let tc = rng.gen_range(1..20);
        let sc = rng.gen_range(tc..50);
        let lengths: Vec<ValidLengths> = (0..b)
            .map(|_| {
                let t = rng.gen_range(1..=tc);
                ValidLengths::new(t, rng.gen_range(t..=sc))
            })
            .collect();
        let values = (0..b * tc * sc)
            .map(|_| rng.gen_range(-5.0f32..5.0))
            .collect();
        let batch = LikelihoodBatch::new(b, tc, sc, values, lengths).unwrap();
        let r = align_reference(&batch, &F32Config::new(Engine::Reference)).unwrap();
        let p = align_parallel(
            &batch,
            &F32Config::new(Engine::Parallel).with_threads(Some(2)),
        )
        .unwrap();
        assert_eq!(r, p);
        common::check_alignment(&r, &batch).unwrap();
    }
}
