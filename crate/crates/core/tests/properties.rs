use proptest::prelude::*;

use gmr_core::cleaner::confidence_table;
use gmr_core::data::{read_csv, test_count, write_csv};
use gmr_core::eval::{cleaned_posterior, variance_reduction_experiment, NoiseModel, PosteriorShiftInput};
use gmr_core::geometry::{distance, select_metric};
use gmr_core::{stratified_split, CleaningConfig, Dataset, Metric, ResolvedMetric, SplitSpec};

#[test]
fn split_counts_follow_rounding_rule_for_all_small_classes() {
    for n_maj in 2..=50usize {
        for n_min in 2..=50usize {
            let rows: Vec<Vec<f64>> = (0..n_maj + n_min).map(|i| vec![i as f64]).collect();
            let labels: Vec<u8> = (0..n_maj + n_min).map(|i| u8::from(i >= n_maj)).collect();
            let data = Dataset::from_rows(&rows, labels).unwrap();
            let (train, test) = stratified_split(&data, &SplitSpec::new(0.2, 7)).unwrap();
            let expect = |c: usize| ((0.2 * c as f64).round() as usize).max(1);
            assert_eq!(test.class_counts(), (expect(n_maj), expect(n_min)), "{n_maj}/{n_min}");
            assert_eq!(test.class_counts(), (test_count(0.2, n_maj), test_count(0.2, n_min)));
            assert_eq!(train.len() + test.len(), data.len());
        }
    }
}

#[test]
fn metric_switch_is_sharp() {
    assert_eq!(select_metric(Metric::Auto, 100), ResolvedMetric::Euclidean);
    assert_eq!(select_metric(Metric::Auto, 101), ResolvedMetric::Cosine);
}

#[test]
fn single_neighbour_variance_estimators_agree_exactly() {
    for seed in 0..5 {
        let r = variance_reduction_experiment(NoiseModel::default(), 1, 1000, seed).unwrap();
        assert_eq!(r.mse_geometric, r.mse_uniform);
    }
}

#[test]
fn asymmetric_removal_raises_posterior_over_grid() {
    for ir in [0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 100.0] {
        for i in 0..20 {
            let r1 = i as f64 * 0.045;
            let symmetric = cleaned_posterior(&PosteriorShiftInput::from_ir(ir, r1, r1)).unwrap();
            for j in (i + 1)..22 {
                let r0 = j as f64 * 0.045;
                let p = cleaned_posterior(&PosteriorShiftInput::from_ir(ir, r0, r1)).unwrap();
                assert!(p > symmetric, "ir={ir} r0={r0} r1={r1}");
            }
        }
    }
}

fn dataset_strategy() -> impl Strategy<Value = Dataset> {
    (20usize..48, 1usize..5).prop_flat_map(|(n, dim)| {
        (
            prop::collection::vec(prop::collection::vec(-50.0f64..50.0, dim), n),
            prop::collection::vec(prop::bool::weighted(0.3), n),
        )
            .prop_filter_map("needs both classes", |(rows, flags)| {
                let labels: Vec<u8> = flags.into_iter().map(u8::from).collect();
                (labels.contains(&0) && labels.contains(&1)).then(|| Dataset::from_rows(&rows, labels).unwrap())
            })
    })
}

fn min_pair_distance(data: &Dataset) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..data.len() {
        for j in (i + 1)..data.len() {
            best = best.min(distance(data.row(i), data.row(j), ResolvedMetric::Euclidean).unwrap());
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_is_lossless(data in dataset_strategy(), names in prop::bool::ANY) {
        let raw = if names { ("neg", "pos") } else { ("0", "1") };
        let header: Vec<String> = (0..data.n_features()).map(|j| format!("f{j}")).collect();
        let mut text = format!("{},label\n", header.join(","));
        for i in 0..data.len() {
            let cells: Vec<String> = data.row(i).iter().map(|v| format!("{v:?}")).collect();
            let label = if data.label(i) == 1 { raw.1 } else { raw.0 };
            text.push_str(&format!("{},{label}\n", cells.join(",")));
        }
        let (loaded, schema) = read_csv(text.as_bytes(), "label", Some(raw.1)).unwrap();
        prop_assert_eq!(loaded.features(), data.features());
        prop_assert_eq!(loaded.labels(), data.labels());

        let mut out = Vec::new();
        write_csv(&mut out, &loaded, &schema).unwrap();
        let (again, schema2) = read_csv(out.as_slice(), "label", Some(raw.1)).unwrap();
        prop_assert_eq!(again.features(), data.features());
        prop_assert_eq!(again.labels(), data.labels());
        prop_assert_eq!(schema2, schema);
    }

    #[test]
    fn votes_scale_invariant(data in dataset_strategy(), c in 0.01f64..100.0) {
        prop_assume!(min_pair_distance(&data) >= 1e-3 && min_pair_distance(&data) * c >= 1e-3);
        let config = CleaningConfig { k: 7, metric: Metric::Euclidean, ..Default::default() };
        let scaled = Dataset::from_parts(
            data.features().iter().map(|v| v * c).collect(),
            data.n_features(),
            data.labels().to_vec(),
            data.row_ids().to_vec(),
        ).unwrap();
        let (a, _) = confidence_table(&data, &config).unwrap();
        let (b, _) = confidence_table(&scaled, &config).unwrap();
        for (x, y) in a.rows().iter().zip(b.rows()) {
            prop_assert!((x.vote_0 - y.vote_0).abs() <= 1e-6);
            prop_assert!((x.vote_1 - y.vote_1).abs() <= 1e-6);
            // Exact argmax ties may not survive rescaling rounding.
            if (x.vote_0 - x.vote_1).abs() > 1e-9 {
                prop_assert_eq!(x.predicted, y.predicted);
            }
        }
    }

    #[test]
    fn votes_permutation_equivariant(data in dataset_strategy(), seed in any::<u64>()) {
        let config = CleaningConfig { k: 5, metric: Metric::Euclidean, ..Default::default() };
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut s = seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let shuffled = data.select(&order);
        let (a, _) = confidence_table(&data, &config).unwrap();
        let (b, _) = confidence_table(&shuffled, &config).unwrap();
        // Tie-breaks follow row position, so equal-distance neighbours may
        // swap; only compare rows whose k-th and (k+1)-th distances differ.
        let nn = gmr_core::geometry::knn_all(&data, config.k + 1, ResolvedMetric::Euclidean).unwrap();
        for (pos, &orig) in order.iter().enumerate() {
            let d = nn.distances(orig);
            if d[config.k - 1] == d[config.k] {
                continue;
            }
            prop_assert_eq!(a.get(orig), b.get(pos));
        }
    }

    #[test]
    fn symmetric_distance(a in prop::collection::vec(-1e3f64..1e3, 1..12), shift in -1e3f64..1e3) {
        let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v * 0.5 + shift + i as f64).collect();
        for m in [ResolvedMetric::Euclidean, ResolvedMetric::Cosine] {
            let ab = distance(&a, &b, m).unwrap();
            let ba = distance(&b, &a, m).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12 * ab.abs().max(1.0));
        }
    }
}
