use std::path::Path;

use proptest::prelude::*;
use sha2::{Digest, Sha256};

use zoosynth::dataset::{
    build_split, sample_id, sample_seed, Manifest, ManifestHeader, ManifestWriter, SampleFiles, SampleRecord, Seeds,
    SplitSpec, SplitTag,
};
use zoosynth::error::SplitAxis;
use zoosynth::model::PoseParams;
use zoosynth::prompt::Construction;
use zoosynth::render::CameraSpec;
use zoosynth::taxonomy::Rank;
use zoosynth::Error;

fn record(index: u64, taxon: &str, family: &str, pose_index: usize, camera: &str, scenery: &str) -> SampleRecord {
    let id = sample_id(7, index);
    SampleRecord {
        sample_index: index,
        sample_id: id.clone(),
        taxon: taxon.into(),
        rank: Rank::Species,
        family: family.into(),
        betas: vec![0.25, -1.5],
        pose: PoseParams::identity(3),
        pose_index,
        camera: CameraSpec {
            azimuth_deg: 12.5,
            elevation_deg: 3.0,
            distance: 4.2,
            focal_length_mm: 50.0,
            image_size: 64,
            target: [0.1, 0.2, 0.3],
        },
        prompt: format!("A photo of a {taxon}."),
        construction: Construction::TemplateFallback,
        caption: Some("facing left".into()),
        camera_setting: camera.into(),
        scenery: scenery.into(),
        seeds: Seeds { master: 7, sample: sample_seed(7, index) },
        files: SampleFiles::for_sample(&id),
        model_id: "stub".into(),
        split: None,
        downgrades: vec![],
    }
}

fn manifest(records: Vec<SampleRecord>) -> Manifest {
    Manifest { header: ManifestHeader::new(7, serde_json::json!({"k": 1})), records }
}

fn touch_files(root: &Path, r: &SampleRecord) {
    for rel in r.files.all() {
        let p = root.join(rel);
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        std::fs::write(p, b"x").unwrap();
    }
}

#[test]
fn ids_and_seeds_follow_the_hash() {
    let mut h = Sha256::new();
    h.update(b"zoosynth-sample");
    h.update(42u64.to_le_bytes());
    h.update(3u64.to_le_bytes());
    let d = h.finalize();
    let hex: String = d[..12].iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(sample_id(42, 3), hex);
    assert_eq!(sample_seed(42, 3), u64::from_le_bytes(d[24..32].try_into().unwrap()));
    let ids: std::collections::HashSet<_> = (0..1000).map(|i| sample_id(42, i)).collect();
    assert_eq!(ids.len(), 1000);
}

#[test]
fn writer_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let w = ManifestWriter::create(dir.path(), ManifestHeader::new(7, serde_json::json!({}))).unwrap();
    let recs: Vec<_> = (0..3).rev().map(|i| record(i, "red fox", "Canidae", i as usize, "a", "b")).collect();
    for r in &recs {
        touch_files(dir.path(), r);
        w.write_sample(r.clone()).unwrap();
    }
    assert_eq!(w.len(), 3);
    let m = w.finalize().unwrap();
    assert_eq!(m.records.iter().map(|r| r.sample_index).collect::<Vec<_>>(), [0, 1, 2]);
    let loaded = Manifest::load(&dir.path().join("manifest.jsonl")).unwrap();
    assert_eq!(loaded, m);
    loaded.verify(Some(dir.path())).unwrap();
}

#[test]
fn missing_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let w = ManifestWriter::create(dir.path(), ManifestHeader::new(7, serde_json::json!({}))).unwrap();
    let r = record(0, "red fox", "Canidae", 0, "a", "b");
    touch_files(dir.path(), &r);
    std::fs::remove_file(dir.path().join(&r.files.canny)).unwrap();
    assert!(matches!(w.write_sample(r), Err(Error::Integrity(_))));
    assert!(w.is_empty());
}

#[test]
fn duplicate_id_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let w = ManifestWriter::create(dir.path(), ManifestHeader::new(7, serde_json::json!({}))).unwrap();
    let r = record(0, "red fox", "Canidae", 0, "a", "b");
    touch_files(dir.path(), &r);
    w.write_sample(r.clone()).unwrap();
    assert!(matches!(w.write_sample(r.clone()), Err(Error::Integrity(_))));
    let m = manifest(vec![r.clone(), r]);
    assert!(matches!(m.verify(None), Err(Error::Integrity(_))));
}

#[test]
fn verify_detects_files_deleted_after_writing() {
    let dir = tempfile::tempdir().unwrap();
    let r = record(0, "red fox", "Canidae", 0, "a", "b");
    touch_files(dir.path(), &r);
    let m = manifest(vec![r.clone()]);
    m.verify(Some(dir.path())).unwrap();
    std::fs::remove_file(dir.path().join(&r.files.image)).unwrap();
    assert!(m.verify(Some(dir.path())).is_err());
}

fn felidae_spec(test_size: usize) -> SplitSpec {
    SplitSpec { holdout_families: vec!["Felidae".into()], test_size, ..Default::default() }
}

fn split_err_axis(r: zoosynth::Result<(Manifest, Manifest)>) -> SplitAxis {
    match r {
        Err(Error::Split { axis, .. }) => axis,
        other => panic!("expected split error, got {other:?}"),
    }
}

#[test]
fn shared_pose_is_a_pose_violation() {
    let m = manifest(vec![record(0, "lynx", "Felidae", 5, "a", "b"), record(1, "red fox", "Canidae", 5, "c", "d")]);
    assert_eq!(split_err_axis(build_split(&m, &felidae_spec(0))), SplitAxis::Pose);
}

#[test]
fn each_axis_violation_is_detected() {
    let clean = || vec![record(0, "lynx", "Felidae", 0, "cam-t", "scene-t"), record(1, "red fox", "Canidae", 1, "cam-a", "scene-a")];
    let cases: [(Box<dyn Fn(&mut SampleRecord)>, SplitAxis); 4] = [
        (Box::new(|r| r.taxon = "lynx".into()), SplitAxis::Species),
        (Box::new(|r| r.pose_index = 0), SplitAxis::Pose),
        (Box::new(|r| r.camera_setting = "cam-t".into()), SplitAxis::CameraSetting),
        (Box::new(|r| r.scenery = "scene-t".into()), SplitAxis::Scenery),
    ];
    assert!(build_split(&manifest(clean()), &felidae_spec(1)).is_ok());
    for (inject, axis) in cases {
        let mut recs = clean();
        inject(&mut recs[1]);
        assert_eq!(split_err_axis(build_split(&manifest(recs), &felidae_spec(1))), axis);
    }
}

#[test]
fn explicit_lists_are_enforced_both_ways() {
    let recs = vec![record(0, "lynx", "Felidae", 0, "cam-t", "scene-t"), record(1, "red fox", "Canidae", 1, "cam-a", "scene-a")];
    let mut spec = felidae_spec(1);
    spec.test_pose_indices = Some(vec![0]);
    spec.test_camera_settings = Some(vec!["cam-t".into()]);
    spec.test_sceneries = Some(vec!["scene-t".into()]);
    assert!(build_split(&manifest(recs.clone()), &spec).is_ok());
    spec.test_sceneries = Some(vec!["scene-x".into()]);
    assert_eq!(split_err_axis(build_split(&manifest(recs.clone()), &spec)), SplitAxis::Scenery);
    spec.test_sceneries = Some(vec!["scene-t".into(), "scene-a".into()]);
    assert_eq!(split_err_axis(build_split(&manifest(recs), &spec)), SplitAxis::Scenery);
}

#[test]
fn hundred_felid_test_set() {
    let mut recs = Vec::new();
    for i in 0..100u64 {
        recs.push(record(i, &format!("cat{}", i % 40), "Felidae", i as usize, &format!("cam{}", i % 5), &format!("scene{}", i % 6)));
    }
    for i in 100..400u64 {
        recs.push(record(i, &format!("dog{}", i % 50), "Canidae", i as usize, &format!("cam{}", 5 + i % 20), &format!("scene{}", 6 + i % 20)));
    }
    let (train, test) = build_split(&manifest(recs.clone()), &felidae_spec(100)).unwrap();
    assert_eq!(test.records.len(), 100);
    assert_eq!(train.records.len(), 300);
    assert!(test.records.iter().all(|r| r.split == Some(SplitTag::Test)));
    assert!(train.records.iter().all(|r| r.split == Some(SplitTag::Train)));
    assert_eq!(split_err_axis(build_split(&manifest(recs), &felidae_spec(101))), SplitAxis::Size);
}

#[test]
fn empty_holdout_keeps_everything_in_train() {
    let recs: Vec<_> = (0..5).map(|i| record(i, "lynx", "Felidae", i as usize, "a", "b")).collect();
    let (train, test) = build_split(&manifest(recs), &SplitSpec::default()).unwrap();
    assert_eq!((train.records.len(), test.records.len()), (5, 0));
}

fn arb_record() -> impl Strategy<Value = SampleRecord> {
    (
        0u64..10_000,
        "[a-z ]{1,12}",
        prop::collection::vec(-1e6..1e6f64, 0..6),
        prop::collection::vec([-3.1..3.1f64, -3.1..3.1f64, -3.1..3.1f64], 1..5),
        any::<u64>(),
        prop::option::of("[a-z ]{0,20}"),
        prop::bool::ANY,
    )
        .prop_map(|(i, taxon, betas, rotations, seed, caption, test)| {
            let mut r = record(i, &taxon, "Canidae", i as usize, "c", "s");
            r.betas = betas;
            r.pose = PoseParams { rotations, translation: [0.5, -0.25, 1e-9] };
            r.seeds.sample = seed;
            r.caption = caption;
            r.split = test.then_some(SplitTag::Test);
            r
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn manifest_round_trip_is_lossless(recs in prop::collection::vec(arb_record(), 0..8)) {
        let m = manifest(recs);
        let text = m.to_jsonl().unwrap();
        let back = Manifest::parse(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(back.to_jsonl().unwrap(), text);
    }

    #[test]
    fn split_partitions_input(families in prop::collection::vec(prop::bool::ANY, 1..30)) {
        let recs: Vec<_> = families
            .iter()
            .enumerate()
            .map(|(i, &felid)| {
                if felid {
                    record(i as u64, &format!("cat{i}"), "Felidae", i, &format!("ct{i}"), &format!("st{i}"))
                } else {
                    record(i as u64, &format!("dog{i}"), "Canidae", i, &format!("ca{i}"), &format!("sa{i}"))
                }
            })
            .collect();
        let (train, test) = build_split(&manifest(recs.clone()), &felidae_spec(0)).unwrap();
        prop_assert_eq!(train.records.len() + test.records.len(), recs.len());
        let mut ids: Vec<_> = train.records.iter().chain(&test.records).map(|r| r.sample_id.clone()).collect();
        ids.sort();
        ids.dedup();
        prop_assert_eq!(ids.len(), recs.len());
    }
}
