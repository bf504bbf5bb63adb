use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use shrinkmask::geometry::polygon_iou;
use shrinkmask::io::{decode_map, encode_map, parse_detections, write_detections, DetectionFile, MapData};
use shrinkmask::postproc::{Detection, ExtendMode};
use shrinkmask::{BitMask, FloatMap, Polygon};

fn shrinkmask(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shrinkmask")).args(args).env_remove("SHRINKMASK_THREADS").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn map(path: &Path) -> MapData {
    decode_map(&fs::read(path).unwrap()).unwrap()
}

const MAPS: [&str; 5] = ["shrink", "offset", "spw", "spw-valid", "ignore"];

#[test]
fn gen_labels_matches_golden_files() {
    let out = tempfile::tempdir().unwrap();
    let o = shrinkmask(&["gen-labels", "--ann", p(&fixture("square/ann")), "--out", p(out.path()), "--window", "8"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for m in MAPS {
        let name = format!("square.{m}.mapf");
        let got = fs::read(out.path().join(&name)).unwrap();
        let want = fs::read(fixture("square/golden").join(&name)).unwrap();
        assert!(got == want, "{name} differs from its golden file");
    }
}

/// The frozen golden maps themselves agree with hand-derived values for the
/// 20x20 square at (10, 10) in a 40x40 image.
#[test]
fn golden_files_hold_expected_values() {
    let g = fixture("square/golden");
    let MapData::Mask(shrink) = map(&g.join("square.shrink.mapf")) else { panic!("shrink is a mask") };
    // Inset by 4.2 px: pixel centres 14.5 ..= 25.5.
    for i in 0..40 {
        for j in 0..40 {
            assert_eq!(shrink.get(i, j), (14..26).contains(&i) && (14..26).contains(&j), "({i}, {j})");
        }
    }
    let offset = map(&g.join("square.offset.mapf")).into_float();
    assert_eq!(offset.get(20, 20), 9.5);
    assert_eq!(offset.get(10, 10), 0.5);
    assert_eq!(offset.get(12, 20), 2.5);
    assert_eq!(offset.get(5, 5), 0.0);
    let spw = map(&g.join("square.spw.mapf")).into_float();
    // Window of 8 at (20, 20) spans rows and columns 17 ..= 24.
    assert_eq!(spw.get(20, 20), 1.0);
    // At (14, 14) the window spans 11 ..= 18; rows and columns 14 ..= 18 are set.
    assert_eq!(spw.get(14, 14), 25.0 / 64.0);
    let MapData::Mask(valid) = map(&g.join("square.spw-valid.mapf")) else { panic!() };
    assert_eq!(valid.count(), 1600);
    let MapData::Mask(ignore) = map(&g.join("square.ignore.mapf")) else { panic!() };
    assert!(ignore.is_empty());
}

#[test]
fn gen_labels_edge_cases() {
    let empty = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let o = shrinkmask(&["gen-labels", "--ann", p(empty.path()), "--out", p(out.path())]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_dir(out.path()).unwrap().count(), 0);
    assert!(stderr(&o).contains("no annotation files"));

    let o = shrinkmask(&["gen-labels", "--ann", p(empty.path()), "--out", p(out.path()), "--delta-s", "1.2"]);
    assert_eq!(code(&o), 2);

    fs::write(empty.path().join("bad.txt"), "0,0,8,0,8,8,0,8\n1,2,3\n").unwrap();
    fs::write(empty.path().join("good.txt"), "# size 16x16\n2,2,14,2,14,14,2,14\n").unwrap();
    let o = shrinkmask(&["gen-labels", "--ann", p(empty.path()), "--out", p(out.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("bad.txt:2:"), "{}", stderr(&o));
    assert!(out.path().join("good.shrink.mapf").exists());
    assert!(!out.path().join("bad.shrink.mapf").exists());
}

#[test]
fn reconstruct_from_oracle_maps() {
    let g = fixture("square/golden");
    let out = tempfile::tempdir().unwrap();
    let det = out.path().join("square.det");
    let o = shrinkmask(&[
        "reconstruct",
        "--shrink",
        p(&g.join("square.shrink.mapf")),
        "--offset",
        p(&g.join("square.offset.mapf")),
        "--mode",
        "adaptive",
        "--out",
        p(&det),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("total"));
    let file = parse_detections(&fs::read_to_string(&det).unwrap()).unwrap();
    assert!(file.timing.is_some() && file.config.is_some());
    assert_eq!(file.detections.len(), 1);
    let square = Polygon::rect(10.0, 10.0, 30.0, 30.0).unwrap();
    assert!(polygon_iou(&file.detections[0].contour, &square) >= 0.95);

    // All-zero probability map.
    let zero = out.path().join("zero.mapf");
    fs::write(&zero, encode_map(&MapData::Float(FloatMap::new(40, 40).unwrap()))).unwrap();
    let empty = out.path().join("empty.det");
    let o = shrinkmask(&[
        "reconstruct",
        "--shrink",
        p(&zero),
        "--offset",
        p(&g.join("square.offset.mapf")),
        "--out",
        p(&empty),
        "--no-timing",
    ]);
    assert_eq!(code(&o), 0);
    let file = parse_detections(&fs::read_to_string(&empty).unwrap()).unwrap();
    assert!(file.detections.is_empty() && file.timing.is_none());

    let (shrink_path, offset_path) = (g.join("square.shrink.mapf"), g.join("square.offset.mapf"));
    let base = ["reconstruct", "--shrink", p(&shrink_path), "--out", p(&empty)];
    let fixed = [&base[..], &["--offset", p(&offset_path), "--mode", "fixed"]].concat();
    assert_eq!(code(&shrinkmask(&fixed)), 2);

    let small = out.path().join("small.mapf");
    fs::write(&small, encode_map(&MapData::Mask(BitMask::new(8, 8).unwrap()))).unwrap();
    let mismatch = [&base[..], &["--offset", p(&small)]].concat();
    assert_eq!(code(&shrinkmask(&mismatch)), 2);
}

fn det_file(polys: &[Polygon]) -> String {
    let detections = polys
        .iter()
        .map(|c| Detection {
            contour: c.clone(),
            score: 0.9,
            shrink_contour: c.clone(),
            offset_used: 1.0,
            mode: ExtendMode::Adaptive,
        })
        .collect();
    write_detections(&DetectionFile { config: None, timing: None, detections })
}

#[test]
fn evaluate_prints_table_metrics() {
    let a = Polygon::rect(0.0, 0.0, 20.0, 10.0).unwrap();
    let b = Polygon::rect(40.0, 0.0, 60.0, 10.0).unwrap();
    let gt = tempfile::tempdir().unwrap();
    let det = tempfile::tempdir().unwrap();
    fs::write(gt.path().join("img.txt"), "0,0,20,0,20,10,0,10\n40,0,60,0,60,10,40,10\n").unwrap();

    fs::write(det.path().join("img.det"), det_file(&[a.clone(), b])).unwrap();
    let o = shrinkmask(&["evaluate", "--det", p(det.path()), "--gt", p(gt.path()), "--iou", "0.5,0.75"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.matches("P 100.0 R 100.0 F 100.0").count(), 2, "{text}");

    // One of two texts found: P 1, R 1/2.
    fs::write(det.path().join("img.det"), det_file(&[a])).unwrap();
    let o = shrinkmask(&["evaluate", "--det", p(det.path()), "--gt", p(gt.path()), "--iou", "0.5"]);
    assert!(stdout(&o).contains("P 100.0 R 50.0 F 66.7"), "{}", stdout(&o));

    let o = shrinkmask(&["--json-style", "evaluate", "--det", p(det.path()), "--gt", p(gt.path())]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["metrics"][0]["tp"], 1);
    assert_eq!(v["metrics"][0]["fn"], 1);

    fs::write(det.path().join("other.det"), det_file(&[])).unwrap();
    let o = shrinkmask(&["evaluate", "--det", p(det.path()), "--gt", p(gt.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("other.det"));
}

#[test]
fn study_modes_agree_without_perturbation() {
    let o = shrinkmask(&["--json-style", "study", "--scenes", "10", "--seed", "3", "--k", "0", "--sigma", "0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let row = &v["rows"][0];
    let (a, f) = (row["adaptive_mean_iou"].as_f64().unwrap(), row["fixed_mean_iou"].as_f64().unwrap());
    assert!((a - f).abs() <= 0.02, "{a} vs {f}");

    let o = shrinkmask(&["study", "--scenes", "3", "--k", "-2,2", "--sigma", "0.1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&shrinkmask(&["study", "--k", "3..1"])), 2);
}

#[test]
fn loss_check_and_bench_report() {
    let o = shrinkmask(&["loss-check", "--trials", "50"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(stdout(&o).matches(" ok").count(), 3);

    let o = shrinkmask(&["--json-style", "bench", "--scenes", "2", "--size", "640x640", "--repeat", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["samples"], 6);
    for k in ["mean_ms", "p50_ms", "p99_ms"] {
        assert!(v[k].as_f64().unwrap() > 0.0);
    }
    assert!(v["breakdown"]["components_ms"].as_f64().is_some());
    assert_eq!(code(&shrinkmask(&["bench", "--size", "640"])), 2);
}

#[test]
fn synth_roundtrip_render() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&shrinkmask(&["synth", "--scenes", "4", "--seed", "9", "--out", p(&a)])), 0);
    assert_eq!(code(&shrinkmask(&["--threads", "3", "synth", "--scenes", "4", "--seed", "9", "--out", p(&b)])), 0);
    for i in 0..4 {
        let name = format!("scene_{i:04}.txt");
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap());
    }

    let rt = dir.path().join("rt");
    let o = shrinkmask(&["roundtrip", "--scenes", "4", "--seed", "9", "--out", p(&rt)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = shrinkmask(&["evaluate", "--det", p(&rt), "--gt", p(&rt)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("IoU 0.50  P 100.0 R 100.0 F 100.0"), "{}", stdout(&o));

    let png = dir.path().join("overlay.png");
    let o = shrinkmask(&[
        "render",
        "--ann",
        p(&rt.join("scene_0000.txt")),
        "--det",
        p(&rt.join("scene_0000.det")),
        "--out",
        p(&png),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let img = image::open(&png).unwrap().to_rgba8();
    assert_eq!(img.dimensions(), (512, 512));
    let blue = img.pixels().filter(|px| px.0[..3] == shrinkmask::render::ADAPTIVE).count();
    assert!(blue > 100);
}

#[test]
fn thread_settings_are_validated() {
    assert_eq!(code(&shrinkmask(&["--threads", "0", "loss-check", "--trials", "1"])), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_shrinkmask"))
        .args(["loss-check", "--trials", "1"])
        .env("SHRINKMASK_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert_eq!(code(&shrinkmask(&["no-such-command"])), 2);
}
