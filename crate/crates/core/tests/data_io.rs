use std::fs;
use std::path::Path;

use hand2tool::affordance::{ActionId, AffordanceModel};
use hand2tool::data::*;
use hand2tool::shape::{extract_features, format_contours, Contour};
use hand2tool::synthworld::{generate_dataset, SynthConfig};
use hand2tool::tasks::DirectionMap;
use hand2tool::Error;

fn header() -> String {
    let mut h = vec!["entity_id".to_string(), "kind".into(), "view_id".into()];
    h.extend(feature_columns());
    h.join(",")
}

fn feature_row(id: &str, kind: &str, view: &str, v: f64) -> String {
    let mut r = vec![id.to_string(), kind.into(), view.into()];
    r.extend(std::iter::repeat_n(v.to_string(), 13));
    r.join(",")
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn root_cause(e: &Error) -> &Error {
    match e {
        Error::File { source, .. } => root_cause(source),
        other => other,
    }
}

#[test]
fn hand_file_with_thirty_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = header() + "\n";
    for hand in ["straight", "bent", "arched"] {
        for v in 0..10 {
            text += &feature_row(hand, "hand", &format!("v{v}"), 0.25);
            text += "\n";
        }
    }
    let p = write(dir.path(), "entities.csv", &text);
    let a = load_entities(&p).unwrap();
    assert_eq!(a.len(), 30);
    // idempotent
    assert_eq!(load_entities(&p).unwrap(), a);
}

#[test]
fn out_of_range_feature_names_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let mut row: Vec<String> = feature_row("h", "hand", "v0", 0.5)
        .split(',')
        .map(String::from)
        .collect();
    row[3 + 4] = "1.2".into();
    let text = format!("{}\n{}\n{}\n", header(), feature_row("h", "hand", "v1", 0.5), row.join(","));
    let p = write(dir.path(), "entities.csv", &text);
    let err = load_entities(&p).unwrap_err();
    match root_cause(&err) {
        Error::Range { row, column, value } => {
            assert_eq!(*row, 3);
            assert_eq!(column, "f05");
            assert_eq!(*value, 1.2);
        }
        other => panic!("{other:?}"),
    }
    assert!(err.to_string().contains("f05"));
}

#[test]
fn schema_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = header().replace(",f13", "");
    let p = write(dir.path(), "a.csv", &(missing + "\n"));
    assert!(matches!(root_cause(&load_entities(&p).unwrap_err()), Error::Schema(m) if m.contains("f13")));
    let extra = header() + ",colour";
    let p = write(dir.path(), "b.csv", &(extra + "\n"));
    assert!(matches!(root_cause(&load_entities(&p).unwrap_err()), Error::Schema(m) if m.contains("colour")));
    let text = format!("{}\n{}\n{}\n", header(), feature_row("h", "hand", "v0", 0.5), feature_row("h", "hand", "v0", 0.4));
    let p = write(dir.path(), "c.csv", &text);
    assert!(matches!(root_cause(&load_entities(&p).unwrap_err()), Error::DuplicateKey(_)));
    let p = write(dir.path(), "t.csv", "trial_id,manipulator_id,object_id,action,effect_x_m,effect_y_m\nt1,h,o,wave,0,0\n");
    assert!(matches!(root_cause(&load_trials(&p).unwrap_err()), Error::Schema(_)));
}

#[test]
fn contour_paths_match_direct_extraction() {
    let dir = tempfile::tempdir().unwrap();
    let shapes = [
        vec![(0.0, 0.0), (4.0, 0.0), (4.0, 1.0), (0.0, 1.0)],
        vec![(0.0, 0.0), (5.0, -1.0), (7.0, 2.0), (4.0, 3.0), (6.0, 6.0), (1.0, 5.0)],
    ];
    fs::create_dir(dir.path().join("shapes")).unwrap();
    let mut text = "entity_id,kind,view_id,contour_path\n".to_string();
    let mut want = Vec::new();
    for (k, s) in shapes.iter().enumerate() {
        let c = Contour::from_xy(s).unwrap();
        fs::write(dir.path().join(format!("shapes/{k}.txt")), format_contours(std::slice::from_ref(&c))).unwrap();
        text += &format!("thing,object,v{k},shapes/{k}.txt\n");
        want.push(extract_features(&c).unwrap());
    }
    let p = write(dir.path(), "entities.csv", &text);
    let got: Vec<_> = load_entities(&p).unwrap().into_iter().map(|e| e.features).collect();
    assert_eq!(got, want);
}

#[test]
fn degenerate_contour_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("flat.txt"), "0,0\n1,0\n2,0\n").unwrap();
    let p = write(dir.path(), "entities.csv", "entity_id,kind,view_id,contour_path\nx,tool,v0,flat.txt\n");
    let err = load_entities(&p).unwrap_err();
    assert!(err.to_string().contains("flat.txt"), "{err}");
    assert!(err.is_validation());
}

#[test]
fn csv_round_trip_is_exact() {
    let ds = generate_dataset(&SynthConfig::hands(3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_entities(dir.path().join("e.csv"), ds.entities()).unwrap();
    write_trials(dir.path().join("t.csv"), ds.trials()).unwrap();
    let back = Dataset::load(dir.path().join("e.csv"), dir.path().join("t.csv")).unwrap();
    assert_eq!(back, ds);
}

#[test]
fn dangling_trial_fails_whole_load() {
    let dir = tempfile::tempdir().unwrap();
    let e = write(dir.path(), "e.csv", &format!("{}\n{}\n", header(), feature_row("h", "hand", "v0", 0.5)));
    let t = write(dir.path(), "t.csv", "trial_id,manipulator_id,object_id,action,effect_x_m,effect_y_m\nt1,h,ghost,push,0,0.05\n");
    assert!(matches!(Dataset::load(e, t), Err(Error::UnknownEntity(_))));
}

#[test]
fn adapter_maps_columns_units_and_labels() {
    let dir = tempfile::tempdir().unwrap();
    let e = write(dir.path(), "e.csv", &format!("{}\n{}\n{}\n", header(), feature_row("h", "hand", "v0", 0.5), feature_row("o", "object", "v0", 0.5)));
    let t = write(
        dir.path(),
        "t.csv",
        "id,tool,target,motion,dx_cm,dy_cm,operator\n7,h,o,pull,1.5,-8,ann\n",
    );
    let adapter = Adapter::parse(
        r#"
        effect_scale = 0.01
        [trials]
        trial_id = "id"
        manipulator_id = "tool"
        object_id = "target"
        action = "motion"
        effect_x_m = "dx_cm"
        effect_y_m = "dy_cm"
        [actions]
        pull = "draw"
        "#,
    )
    .unwrap();
    let trials = load_trials_with(&t, Some(&adapter)).unwrap();
    assert_eq!(trials[0].action, ActionId::Draw);
    assert!((trials[0].effect_x_m - 0.015).abs() < 1e-15);
    assert!((trials[0].effect_y_m + 0.08).abs() < 1e-15);
    let ds = Dataset::new(load_entities(e).unwrap(), trials).unwrap();
    assert_eq!(ds.augment().unwrap().len(), 1);
    assert!(Adapter::parse("effect_scale = -1").is_err());
    assert!(Adapter::parse("[actions]\nx = \"fly\"").is_err());
}

fn trained_model() -> AffordanceModel {
    let ds = generate_dataset(&SynthConfig::hands(5)).unwrap();
    let obs = observations(&ds.augment().unwrap());
    AffordanceModel::fit(&obs, 1.0, DirectionMap::default()).unwrap().0
}

#[test]
fn model_file_round_trip_and_tamper_detection() {
    let model = trained_model();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(&model, &path).unwrap();
    assert_eq!(load_model(&path).unwrap(), model);
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"format_version\": 1"));

    // truncated
    let cut = write(dir.path(), "cut.json", &text[..text.len() / 2]);
    assert!(matches!(root_cause(&load_model(cut).unwrap_err()), Error::CorruptModel(_)));

    // other version
    let v2 = write(dir.path(), "v2.json", &text.replacen("\"format_version\": 1", "\"format_version\": 2", 1));
    assert!(matches!(
        root_cause(&load_model(v2).unwrap_err()),
        Error::VersionMismatch { found: 2, expected: 1 }
    ));

    // CPT row no longer sums to one
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["model"]["cpt_y"]["rows"][17][0] = serde_json::json!(0.9);
    let bad = write(dir.path(), "row.json", &serde_json::to_string_pretty(&doc).unwrap());
    match root_cause(&load_model(bad).unwrap_err()) {
        Error::CorruptModel(m) => assert!(m.contains("cpt_y row 17"), "{m}"),
        other => panic!("{other:?}"),
    }

    // a valid but altered model fails the checksum
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["model"]["smoothing_alpha"] = serde_json::json!(2.0);
    let alt = write(dir.path(), "alt.json", &serde_json::to_string_pretty(&doc).unwrap());
    match root_cause(&load_model(alt).unwrap_err()) {
        Error::CorruptModel(m) => assert!(m.contains("checksum"), "{m}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn by_view_split_keeps_test_views_unseen() {
    let ds = generate_dataset(&SynthConfig::hands(8)).unwrap();
    let s = split(&ds, SplitMode::ByView, 0.8, 4).unwrap();
    for t in &s.test {
        assert!(!s
            .train
            .iter()
            .any(|r| r.trial_id == t.trial_id && r.manipulator_view == t.manipulator_view));
    }
    // 8 of 10 views per entity in training: 64 pairs per trial, 4 in test
    assert_eq!(s.train.len(), ds.trials().len() * 64);
    assert_eq!(s.test.len(), ds.trials().len() * 4);
}

#[test]
fn by_trial_split_is_stratified() {
    let ds = generate_dataset(&SynthConfig::hands(8)).unwrap();
    let (tr, te) = stratified_trial_split(ds.trials(), 0.8, 1).unwrap();
    assert_eq!(tr.len() + te.len(), ds.trials().len());
    let straight = tr
        .iter()
        .filter(|&&i| ds.trials()[i].manipulator_id == "straight_hand")
        .count();
    assert_eq!(2 * straight, tr.len());
    assert_eq!(stratified_trial_split(ds.trials(), 0.8, 1).unwrap(), (tr, te));
}
