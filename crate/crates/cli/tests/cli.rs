mod common;

use std::fs;
use std::path::{Path, PathBuf};

use common::{ovmil, p};
use ovmil::kv::parse_kv;
use ovmil::preprocess::RgbTile;
use ovmil_testkit::MilTask;

fn small_task() -> MilTask {
    MilTask { n_classes: 5, dim: 8, min_patches: 4, max_patches: 12, signal_fraction: 0.25, amplitude: 5.0 }
}

fn manifest(dir: &Path) -> PathBuf {
    let task = small_task();
    common::cohort(&task, &task.directions(1), 60, 1, "c").write(&dir.join("data"))
}

fn echo(path: &Path) -> std::collections::BTreeMap<String, String> {
    parse_kv(&fs::read_to_string(path).unwrap()).unwrap()
}

fn train(dir: &Path, out: &str, extra: &[&str]) -> PathBuf {
    let m = manifest(dir);
    let out = dir.join(out);
    let (m_s, out_s) = (p(&m), p(&out));
    let mut args = vec!["train", "--manifest", &m_s, "--max-epochs", "3", "--set", "model_size=8x4"];
    args.extend_from_slice(extra);
    args.extend_from_slice(&["--out", &out_s]);
    assert_eq!(ovmil(&args), 0);
    out
}

fn tissue_tile() -> RgbTile {
    RgbTile::from_fn(64, 48, |x, y| if x < 32 { [235, 235, 235] } else { [150 + (y % 20) as u8, 60, 140] }).unwrap()
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let tile = dir.path().join("t.png");
    tissue_tile().save_png(&tile).unwrap();
    assert_eq!(ovmil(&["preprocess", "--mode", "blur", &p(&tile), &p(dir.path())]), 64);
    assert_eq!(ovmil(&["frobnicate"]), 64);
    assert_eq!(ovmil(&["train", "--manifest", "m.csv", "--out", "o", "--preset", "nope"]), 64);

    let cfg = dir.path().join("bad.kv");
    fs::write(&cfg, "learning_rate = 1e-3\ncolour = blue\n").unwrap();
    let m = manifest(dir.path());
    assert_eq!(ovmil(&["train", "--config", &p(&cfg), "--manifest", &p(&m), "--out", &p(&dir.path().join("o"))]), 64);
    assert_eq!(ovmil(&["train", "--manifest", &p(&m), "--set", "dropout=2", "--out", &p(&dir.path().join("o"))]), 64);
    assert_eq!(ovmil(&["--help"]), 0);
}

#[test]
fn missing_inputs_exit_2_and_empty_dirs_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nothing.png");
    assert_eq!(ovmil(&["preprocess", "--mode", "segment", &p(&missing), &p(dir.path())]), 2);
    assert_eq!(ovmil(&["evaluate", "--predictions", &p(&missing)]), 2);
    let m = dir.path().join("absent.csv");
    assert_eq!(ovmil(&["train", "--manifest", &p(&m), "--out", &p(&dir.path().join("o"))]), 2);

    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(ovmil(&["preprocess", "--mode", "segment", &p(&empty), &p(&dir.path().join("seg"))]), 0);
}

#[test]
fn config_precedence_and_preset_echo() {
    let dir = tempfile::tempdir().unwrap();
    let preset_run = train(dir.path(), "preset", &["--preset", "RN50"]);
    let e = echo(&preset_run.join("config.kv"));
    assert_eq!(e["learning_rate"], "0.002");
    assert_eq!(e["preset"], "rn50");
    assert_eq!(e["model_size"], "8x4");
    assert_eq!(e["max_epochs"], "3");

    // preset < file < flags
    let cfg = dir.path().join("run.kv");
    fs::write(&cfg, "preset = rn50\nlearning_rate = 5e-4\ndropout = 0.1\n").unwrap();
    let layered = train(dir.path(), "layered", &["--config", &p(&cfg), "--set", "dropout=0.3"]);
    let e = echo(&layered.join("config.kv"));
    assert_eq!(e["learning_rate"], "0.0005");
    assert_eq!(e["dropout"], "0.3");
    assert_eq!(e["epsilon"], "0.01");
    assert!(!e.contains_key("workers"));

    let defaults = train(dir.path(), "defaults", &[]);
    let e = echo(&defaults.join("config.kv"));
    assert_eq!(e["learning_rate"], "0.0002");
    assert_eq!(e["n_folds"], "5");
    for i in 0..5 {
        assert!(defaults.join(format!("fold{i}/checkpoint.abml")).exists());
        assert!(defaults.join(format!("fold{i}/history.csv")).exists());
    }
    assert!(defaults.join("folds.csv").exists());
}

#[test]
fn preprocess_writes_masks_grids_and_augmented_copies() {
    let dir = tempfile::tempdir().unwrap();
    let tiles = dir.path().join("tiles");
    fs::create_dir(&tiles).unwrap();
    tissue_tile().save_png(tiles.join("a.png")).unwrap();
    tissue_tile().save_png(tiles.join("b.png")).unwrap();
    let seg = dir.path().join("seg");
    assert_eq!(ovmil(&["preprocess", "--mode", "segment", &p(&tiles), &p(&seg), "--patch-px", "16"]), 0);
    for stem in ["a", "b"] {
        let mask = image::open(seg.join(format!("{stem}_mask.png"))).unwrap().to_luma8();
        assert_eq!(mask.get_pixel(5, 5).0[0], 0);
        assert_eq!(mask.get_pixel(50, 5).0[0], 255);
        assert!(seg.join(format!("{stem}_outline.png")).exists());
        let grid = fs::read_to_string(seg.join(format!("{stem}_patches.csv"))).unwrap();
        // The right half holds 2 × 3 full tissue patches of 16 px.
        assert_eq!(grid.lines().count(), 1 + 6);
    }
    assert!(seg.join("preprocess_config.kv").exists());

    let aug = dir.path().join("aug");
    let again = dir.path().join("aug2");
    for out in [&aug, &again] {
        assert_eq!(ovmil(&["preprocess", "--mode", "augment", &p(&tiles), &p(out), "--copies", "3", "--seed", "4"]), 0);
    }
    for j in 0..3 {
        let name = format!("a_aug{j:03}.png");
        assert_eq!(fs::read(aug.join(&name)).unwrap(), fs::read(again.join(&name)).unwrap());
    }
    assert_ne!(fs::read(aug.join("a_aug000.png")).unwrap(), fs::read(aug.join("a_aug001.png")).unwrap());

    let norm = dir.path().join("norm");
    let reference = tiles.join("a.png");
    let code = ovmil(&["preprocess", "--mode", "normalise", "--method", "reinhard", "--reference", &p(&reference), &p(&tiles), &p(&norm)]);
    assert_eq!(code, 0);
    assert!(norm.join("b.png").exists());
    assert_eq!(ovmil(&["preprocess", "--mode", "normalise", "--method", "reinhard", &p(&tiles), &p(&norm)]), 64);
}

#[test]
fn evaluate_compare_and_heatmap() {
    let dir = tempfile::tempdir().unwrap();
    let run = train(dir.path(), "run", &["--seed", "2"]);
    let preds = run.join("predictions_test.csv");
    let code = ovmil(&["evaluate", "--predictions", &p(&preds), "--bootstrap", "500", "--metric", "balanced_accuracy", "--metric", "macro_auroc"]);
    assert_eq!(code, 0);
    let report = fs::read_to_string(run.join("predictions_test_report.csv")).unwrap();
    assert_eq!(report.lines().count(), 3);
    assert!(report.contains("macro_auroc"));
    assert_eq!(echo(&run.join("predictions_test_report_meta.kv"))["iterations"], "500");

    // Two identical runs differ by exactly zero on every fold.
    let twin = dir.path().join("twin");
    fs::create_dir(&twin).unwrap();
    for i in 0..5 {
        fs::create_dir(twin.join(format!("fold{i}"))).unwrap();
        let name = format!("fold{i}/predictions_test.csv");
        fs::copy(run.join(&name), twin.join(&name)).unwrap();
    }
    let cmp = dir.path().join("cmp");
    assert_eq!(ovmil(&["compare", &p(&run), &p(&twin), "--out", &p(&cmp)]), 0);
    let mut rows = csv::Reader::from_path(cmp.join("comparison.csv")).unwrap();
    let records: Vec<csv::StringRecord> = rows.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), 3);
    for r in &records {
        assert_eq!(&r[0], "run vs twin");
        assert_eq!(r[3].parse::<f64>().unwrap(), 1.0);
        assert_eq!(&r[5], "true");
    }
    assert_eq!(ovmil(&["compare", &p(&run), &p(&dir.path().join("data")), "--out", &p(&cmp)]), 2);

    let bag = dir.path().join("data/c0000.fbag");
    let hm = dir.path().join("hm");
    let ckpt = run.join("fold0/checkpoint.abml");
    let code = ovmil(&["heatmap", "--checkpoint", &p(&ckpt), "--bag", &p(&bag), "--downsample", "64", "--out", &p(&hm)]);
    assert_eq!(code, 0);
    let png = image::open(hm.join("c0000_heatmap.png")).unwrap();
    assert!(png.width() > 0 && png.height() > 0);
    let sidecar = echo(&hm.join("c0000_heatmap.txt"));
    assert_eq!(sidecar["slide_id"], "c0000");
    assert_eq!(echo(&hm.join("heatmap_config.kv"))["downsample"], "64");
    let bad = ovmil(&["heatmap", "--checkpoint", &p(&ckpt), "--bag", &p(&bag), "--opacity", "3", "--out", &p(&hm)]);
    assert_eq!(bad, 64);
}

#[test]
fn tune_writes_trace_and_selected_config() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(dir.path());
    let schedule = dir.path().join("s.txt");
    let grid = dir.path().join("g.kv");
    fs::write(&schedule, "1: learning_rate\n").unwrap();
    fs::write(&grid, "learning_rate = 1e-3, 1e-2\n").unwrap();
    let out = dir.path().join("tune");
    let code = ovmil(&[
        "tune", "--manifest", &p(&m), "--schedule", &p(&schedule), "--grid", &p(&grid), "--max-epochs", "2",
        "--set", "model_size=8x4", "--out", &p(&out),
    ]);
    assert_eq!(code, 0);
    let trace = fs::read_to_string(out.join("tuning_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 3);
    assert_eq!(trace.matches(",true").count(), 1);
    let tuned = echo(&out.join("tuned_config.kv"));
    assert!(["0.001", "0.01"].contains(&tuned["learning_rate"].as_str()));
    assert_eq!(tuned["model_size"], "8x4");

    fs::write(&schedule, "1: colour\n").unwrap();
    let code = ovmil(&["tune", "--manifest", &p(&m), "--schedule", &p(&schedule), "--grid", &p(&grid), "--out", &p(&out)]);
    assert_eq!(code, 64);
}
