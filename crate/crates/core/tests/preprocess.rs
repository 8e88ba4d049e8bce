mod common;

use proptest::prelude::*;
use uavids_core::ingest::{Cell, Column, LabelMap, RawTable};
use uavids_core::pipeline::{prepare, RawDataset};
use uavids_core::preprocess::*;

fn labels_strategy() -> impl Strategy<Value = (Vec<usize>, usize)> {
    (2usize..6).prop_flat_map(|k| (prop::collection::vec(0..k, 10..120), Just(k)))
}

fn label_map(k: usize) -> LabelMap {
    LabelMap::ordered(&(0..k).map(|c| format!("c{c}")).collect::<Vec<_>>()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn class_weights_conserve_mass((y, k) in labels_strategy()) {
        let present: Vec<usize> = (0..k).filter(|c| y.contains(c)).collect();
        let y: Vec<usize> = y.iter().map(|v| present.iter().position(|p| p == v).unwrap()).collect();
        let kk = present.len();
        let w = class_weights(&y, kk).unwrap();
        let total: f64 = w.sample_weights(&y).iter().sum();
        prop_assert!((total - y.len() as f64).abs() <= 1e-9);
    }

    #[test]
    fn kfold_partitions_rows_evenly((y, k) in labels_strategy(), folds in 2usize..6, seed in any::<u64>()) {
        let map = label_map(k);
        match stratified_kfold(&y, &map, folds, seed) {
            Err(_) => {
                let singleton = (0..k).any(|c| y.iter().filter(|&&v| v == c).count() == 1);
                prop_assert!(singleton || folds > y.len());
            }
            Ok(f) => {
                let mut all: Vec<usize> = f.concat();
                all.sort_unstable();
                prop_assert_eq!(all, (0..y.len()).collect::<Vec<_>>());
                let sizes: Vec<usize> = f.iter().map(Vec::len).collect();
                prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
                for c in 0..k {
                    let per: Vec<usize> = f.iter().map(|fold| fold.iter().filter(|&&i| y[i] == c).count()).collect();
                    prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
                }
            }
        }
    }

    #[test]
    fn split_keeps_class_proportions((y, k) in labels_strategy(), frac in 0.1f64..0.9, seed in any::<u64>()) {
        let map = label_map(k);
        if let Ok((tr, te)) = stratified_split_indices(&y, &map, frac, seed) {
            prop_assert_eq!(tr.len() + te.len(), y.len());
            for c in 0..k {
                let n = y.iter().filter(|&&v| v == c).count();
                if n == 0 {
                    continue;
                }
                let got = tr.iter().filter(|&&i| y[i] == c).count();
                prop_assert!((got as f64 - frac * n as f64).abs() <= 1.0);
                prop_assert!(got >= 1 && got < n);
            }
        }
    }
}

fn raw(values: &[(&str, &str)]) -> RawTable {
    let num = Column {
        name: "n".into(),
        values: values.iter().map(|(v, _)| Cell::parse(v)).collect(),
    };
    let cat = Column {
        name: "proto".into(),
        values: values.iter().map(|(_, v)| Cell::parse(v)).collect(),
    };
    let label = Column {
        name: "Label".into(),
        values: (0..values.len()).map(|i| Cell::Text(if i % 2 == 0 { "a" } else { "b" }.into())).collect(),
    };
    RawTable::new(vec![num, cat, label], vec![]).unwrap()
}

#[test]
fn recipe_replay_is_pure_and_maps_unseen_categories() {
    let t = raw(&[("1", "tcp"), ("", "udp"), ("3", "tcp"), ("10", ""), ("2", "udp"), ("4", "tcp")]);
    let ds = RawDataset::new(t, LabelMap::ordered(&["a", "b"]).unwrap()).unwrap();
    let p = prepare(&ds, &[0, 1, 2, 3], &[4, 5], false).unwrap();
    let r = fit_recipe(&ds.table.select_rows(&[0, 1, 2, 3]), &ds.schema, "Label", &ds.label_map).unwrap();
    assert_eq!(r, p.recipe);
    let (a, _) = apply_recipe(&r, &ds.table).unwrap();
    let (b, _) = apply_recipe(&r, &ds.table).unwrap();
    assert_eq!(a, b);
    match &r.columns["n"] {
        ColumnRecipe::Numeric { median, .. } => assert_eq!(*median, 3.0),
        other => panic!("{other:?}"),
    }

    let novel = raw(&[("1", "icmp"), ("2", "tcp")]);
    let (t, report) = apply_recipe(&r, &novel).unwrap();
    assert_eq!(t.x.get(0, 1), 2.0);
    assert_eq!(report.total_unseen(), 1);
}

#[test]
fn fit_on_all_changes_the_recipe() {
    let ds = common::dataset(&common::binary_spec(200, 0.5), 1);
    let tr: Vec<usize> = (0..100).collect();
    let te: Vec<usize> = (100..200).collect();
    let split = prepare(&ds, &tr, &te, false).unwrap();
    let all = prepare(&ds, &tr, &te, true).unwrap();
    assert_ne!(split.recipe, all.recipe);
    assert_eq!(split.train.n_rows(), all.train.n_rows());
}
