mod common;

use std::fs;
use std::path::Path;

use uavids_core::ensembles::{fit_model, io, ModelKind, ModelSpec};
use uavids_core::ingest::*;
use uavids_core::preprocess::{read_feature_table, write_feature_table};
use uavids_core::Error;

fn write(path: &Path, text: &str) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, text).unwrap();
}

#[test]
fn scan_reads_classes_in_sorted_order_and_pads_columns() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write(&root.join("Normal/a.csv"), "ts,len\n1,10\n2,NaN\n");
    write(&root.join("Attack/b.csv"), "len,proto\n5,tcp\n6,udp\n7,tcp\n");
    write(&root.join("Attack/notes.txt"), "ignored");
    fs::create_dir_all(root.join("Empty")).unwrap();
    write(&root.join("HeaderOnly/x.csv"), "ts,len\n");
    let (t, map) = scan_dataset(root).unwrap();
    assert_eq!(map.names(), vec!["Attack", "Normal"]);
    assert_eq!(t.row_count(), 5);
    assert_eq!(t.column_names(), vec!["len", "proto", "ts", "Label"]);
    let ts = &t.column("ts").unwrap().values;
    assert!(ts[..3].iter().all(Cell::is_missing));
    assert_eq!(ts[3], Cell::Number(1.0));
    assert!(t.column("len").unwrap().values[4].is_missing());
    let labels: Vec<String> = t.column("Label").unwrap().values.iter().map(|c| c.as_category().unwrap()).collect();
    assert_eq!(labels, vec!["Attack", "Attack", "Attack", "Normal", "Normal"]);
    let schema = infer_schema(&t.retain_columns(|n| n != "Label")).unwrap();
    assert_eq!(schema[1].kind, ColumnKind::Categorical);
    assert_eq!(schema[0].kind, ColumnKind::Numeric);
    assert_eq!(schema[0].missing_count, 1);
    assert_eq!(schema[2].missing_count, 3);
}

#[test]
fn scan_errors() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir_all(dir.path().join("Only")).unwrap();
    assert!(matches!(scan_dataset(dir.path()), Err(Error::NoClassesFound { .. })));

    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("A/a.csv"), "x\n1\n");
    write(&dir.path().join("B/b.csv"), "x\nabc\n");
    match scan_dataset(dir.path()) {
        Err(Error::SchemaConflict { column, .. }) => assert_eq!(column, "x"),
        other => panic!("{other:?}"),
    }

    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("A/a.csv"), "x,x\n1,2\n");
    assert!(matches!(scan_dataset(dir.path()), Err(Error::SchemaConflict { .. })));

    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("A/a.csv"), "x,Label\n1,2\n");
    assert!(matches!(scan_dataset(dir.path()), Err(Error::SchemaConflict { .. })));
}

#[test]
fn label_map_override() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("b/a.csv"), "x\n1\n");
    write(&dir.path().join("a/a.csv"), "x\n2\n");
    let m = LabelMap::ordered(&["b", "a"]).unwrap();
    let (_, got) = scan_dataset_with(dir.path(), Some(&m)).unwrap();
    assert_eq!(got.index_of("b"), Some(0));
    let wrong = LabelMap::ordered(&["b", "c"]).unwrap();
    assert!(matches!(scan_dataset_with(dir.path(), Some(&wrong)), Err(Error::UnknownClass(c)) if c == "a"));
    let extra = LabelMap::ordered(&["a", "b", "c"]).unwrap();
    assert!(matches!(scan_dataset_with(dir.path(), Some(&extra)), Err(Error::SchemaMismatch(_))));
    let file = dir.path().join("map.json");
    fs::write(&file, r#"[{"class_name":"b","class_index":0},{"class_name":"a","class_index":1}]"#).unwrap();
    assert_eq!(LabelMap::load(&file).unwrap(), m);
}

#[test]
fn canonical_table_round_trip() {
    let spec = SynthSpec {
        n_rows: 120,
        n_categorical: 1,
        missing_fraction: 0.05,
        n_classes: 3,
        ..Default::default()
    };
    let (t, map) = synthesize_dataset(&spec, 4).unwrap();
    let schema = infer_schema(&t.retain_columns(|n| n != LABEL_COLUMN)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("table");
    write_canonical(&stem, &t, &schema, LABEL_COLUMN, &map).unwrap();
    let (back, sidecar) = read_canonical(&stem).unwrap();
    assert_eq!(sidecar.label_map, map);
    assert_eq!(sidecar.columns, schema);
    assert_eq!(back.row_count(), t.row_count());
    for c in t.columns() {
        assert_eq!(back.column(&c.name).unwrap().values, c.values, "column {}", c.name);
    }
}

#[test]
fn feature_table_round_trip_is_exact() {
    let p = common::prepared(&common::binary_spec(200, 1.0), 3);
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("train");
    write_feature_table(&stem, &p.train).unwrap();
    assert_eq!(read_feature_table(&stem).unwrap(), p.train);
}

#[test]
fn model_file_round_trip_and_rejections() {
    let p = common::prepared(&common::binary_spec(200, 1.0), 5);
    let dir = tempfile::tempdir().unwrap();
    for kind in ModelKind::ALL {
        let m = fit_model(&ModelSpec::new(kind).with_estimators(4), &p.train, 1).unwrap();
        let path = dir.path().join(format!("{}.json", kind.short_name()));
        io::save(&m, &path).unwrap();
        let back = io::load(&path).unwrap();
        assert_eq!(back, m, "{kind}");
        assert_eq!(back.predict_proba(&p.test).unwrap(), m.predict_proba(&p.test).unwrap());

        let bytes = fs::read(&path).unwrap();
        assert!(matches!(io::from_bytes(&bytes[..bytes.len() / 2]), Err(Error::DecodeError(_))));
        let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        v["format_version"] = serde_json::json!(io::MODEL_FORMAT_VERSION + 1);
        let future = serde_json::to_vec(&v).unwrap();
        assert!(matches!(
            io::from_bytes(&future),
            Err(Error::UnsupportedModelVersion { found, .. }) if found == io::MODEL_FORMAT_VERSION + 1
        ));
        let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        if v["trees"][0]["nodes"].as_array().unwrap().len() > 1 {
            v["trees"][0]["nodes"][0]["left"] = serde_json::json!(0);
            assert!(matches!(io::from_bytes(&serde_json::to_vec(&v).unwrap()), Err(Error::DecodeError(_))));
        }
    }
}
