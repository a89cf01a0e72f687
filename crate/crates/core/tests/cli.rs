//! Integration tests for the `mfbi` binary: exit codes, output contracts,
//! config-file precedence and byte-identical reruns.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mfbi_core::{
    change_map, write_raster, write_truth_labels, BuildingMask, ChangeConfig, Label, Pattern,
    RasterImage, TruthCell,
};
use tempfile::tempdir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mfbi"))
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// 64x64 4-band raster with 8-bit-like levels and bright blocks.
fn write_block_raster(path: &Path, blocks: &[(usize, usize, usize, usize)]) {
    let plane = 64 * 64;
    let mut data = vec![20.0f64; 4 * plane];
    for &(x0, y0, x1, y1) in blocks {
        for band in 0..4 {
            for y in y0..y1 {
                let at = band * plane + y * 64;
                data[at + x0..at + x1].fill(220.0);
            }
        }
    }
    let names = ["nir", "red", "green", "blue"].map(String::from).to_vec();
    let img = RasterImage::new(64, 64, names, data).unwrap();
    write_raster(&img, path).unwrap();
}

#[test]
fn index_is_deterministic_across_reruns() {
    let dir = tempdir().unwrap();
    let raster = dir.path().join("t.raster");
    write_block_raster(&raster, &[(8, 8, 24, 24)]);
    for out in ["a.pgm", "b.pgm"] {
        let output = bin()
            .args(["index", "--in"])
            .arg(&raster)
            .args(["--out"])
            .arg(dir.path().join(out))
            .args(["--method", "mfbi"])
            .output()
            .unwrap();
        assert!(output.status.success(), "{}", stderr(&output));
        assert!(stdout(&output).starts_with("compute_seconds="), "{}", stdout(&output));
    }
    let a = fs::read(dir.path().join("a.pgm")).unwrap();
    let b = fs::read(dir.path().join("b.pgm")).unwrap();
    assert_eq!(a, b, "reruns must be byte-identical");
    assert!(dir.path().join("a.pgm.meta.json").exists());
}

#[test]
fn unknown_method_and_missing_input_exit_nonzero() {
    let dir = tempdir().unwrap();
    let output = bin()
        .args(["index", "--in", "x.raster", "--out", "y.pgm", "--method", "mbfi"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(stderr(&output).contains("mbfi"));

    let output = bin()
        .args(["index", "--in"])
        .arg(dir.path().join("missing.raster"))
        .args(["--out"])
        .arg(dir.path().join("y.pgm"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(stderr(&output).contains("missing.raster"));
}

#[test]
fn mask_of_constant_raster_warns_and_writes_empty_mask() {
    let dir = tempdir().unwrap();
    let raster = dir.path().join("flat.raster");
    write_block_raster(&raster, &[]);
    let feature = dir.path().join("flat.pgm");
    let output = bin()
        .args(["index", "--in"])
        .arg(&raster)
        .args(["--out"])
        .arg(&feature)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr(&output));

    let mask_path = dir.path().join("flat_mask.pgm");
    let output = bin()
        .args(["mask", "--in"])
        .arg(&raster)
        .args(["--feature"])
        .arg(&feature)
        .args(["--out"])
        .arg(&mask_path)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr(&output));
    assert!(stdout(&output).contains("otsu_threshold=none"), "{}", stdout(&output));
    let mask = mfbi_core::read_mask(&mask_path).unwrap();
    assert_eq!(mask.count_ones(), 0);
}

#[test]
fn change_pipeline_produces_report_and_eval_scores_it() {
    let dir = tempdir().unwrap();
    let (t1, t2) = (dir.path().join("t1.raster"), dir.path().join("t2.raster"));
    write_block_raster(&t1, &[(8, 8, 24, 24)]);
    write_block_raster(&t2, &[(8, 8, 24, 24), (40, 40, 56, 56)]);

    let mut masks = Vec::new();
    for (raster, tag) in [(&t1, "t1"), (&t2, "t2")] {
        let feature = dir.path().join(format!("{tag}.pgm"));
        let output = bin()
            .args(["index", "--in"])
            .arg(raster)
            .args(["--out"])
            .arg(&feature)
            .output()
            .unwrap();
        assert!(output.status.success(), "{}", stderr(&output));
        let mask = dir.path().join(format!("{tag}_mask.pgm"));
        let output = bin()
            .args(["mask", "--in"])
            .arg(raster)
            .args(["--feature"])
            .arg(&feature)
            .args(["--out"])
            .arg(&mask)
            .output()
            .unwrap();
        assert!(output.status.success(), "{}", stderr(&output));
        masks.push(mask);
    }

    let report = dir.path().join("change.txt");
    let output = bin()
        .args(["change", "--t1"])
        .arg(&masks[0])
        .args(["--t2"])
        .arg(&masks[1])
        .args(["--out-image"])
        .arg(dir.path().join("change.ppm"))
        .args(["--out-report"])
        .arg(&report)
        .args(["--n-segments", "4"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr(&output));
    assert!(stdout(&output).contains("cells=16"));

    // Truth agreeing with every prediction scores a perfect accuracy.
    let parsed = match mfbi_core::read_change_report(&report).unwrap() {
        mfbi_core::ChangeReport::Pattern(map) => map,
        other => panic!("{other:?}"),
    };
    let truth: Vec<TruthCell<Pattern>> = parsed
        .cells()
        .iter()
        .map(|c| TruthCell { row: c.row, col: c.col, label: c.label })
        .collect();
    let truth_path = dir.path().join("truth.csv");
    write_truth_labels(&truth, &truth_path).unwrap();

    let matrix = dir.path().join("matrix.csv");
    let output = bin()
        .args(["eval", "--report"])
        .arg(&report)
        .args(["--truth"])
        .arg(&truth_path)
        .args(["--out"])
        .arg(&matrix)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("OA=100.00"), "{text}");
    assert!(text.starts_with("predicted/truth,SI,SD,AU"), "{text}");
    let written = fs::read_to_string(&matrix).unwrap();
    assert!(written.starts_with("predicted/truth,SI,SD,AU"));

    // A truth file missing one cell is a listed error.
    let short_path = dir.path().join("short.csv");
    write_truth_labels(&truth[1..], &short_path).unwrap();
    let output = bin()
        .args(["eval", "--report"])
        .arg(&report)
        .args(["--truth"])
        .arg(&short_path)
        .args(["--out"])
        .arg(dir.path().join("m2.csv"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(stderr(&output).contains("(0,0)"), "{}", stderr(&output));
}

#[test]
fn sweep_writes_one_row_per_threshold() {
    let dir = tempdir().unwrap();
    // Masks made directly: a quarter-turn block move.
    let mut bits1 = vec![false; 64 * 64];
    let mut bits2 = vec![false; 64 * 64];
    for y in 0..24 {
        for x in 0..24 {
            bits1[y * 64 + x] = true;
            bits2[(y + 40) * 64 + (x + 40)] = true;
        }
    }
    let m1 = BuildingMask::new(64, 64, bits1).unwrap();
    let m2 = BuildingMask::new(64, 64, bits2).unwrap();
    let (p1, p2) = (dir.path().join("m1.pgm"), dir.path().join("m2.pgm"));
    mfbi_core::write_mask(&m1, &p1).unwrap();
    mfbi_core::write_mask(&m2, &p2).unwrap();

    let cfg = ChangeConfig { n_segments: 2, ..Default::default() };
    let map = change_map(&m1, &m2, &cfg).unwrap();
    let truth: Vec<TruthCell<Pattern>> = map
        .cells()
        .iter()
        .map(|c| TruthCell { row: c.row, col: c.col, label: c.label })
        .collect();
    let truth_path = dir.path().join("truth.csv");
    write_truth_labels(&truth, &truth_path).unwrap();

    let out = dir.path().join("sweep.csv");
    let output = bin()
        .args(["sweep", "--t1"])
        .arg(&p1)
        .args(["--t2"])
        .arg(&p2)
        .args(["--truth"])
        .arg(&truth_path)
        .args(["--t", "1.5,2,2.5,3,3.5,4,4.5", "--n-segments", "2", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr(&output));
    let csv = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "T,overall_accuracy");
    assert_eq!(lines.len(), 8, "{csv}");

    // A threshold not exceeding 1 is rejected.
    let output = bin()
        .args(["sweep", "--t1"])
        .arg(&p1)
        .args(["--t2"])
        .arg(&p2)
        .args(["--truth"])
        .arg(&truth_path)
        .args(["--t", "1.0", "--n-segments", "2", "--out"])
        .arg(dir.path().join("bad.csv"))
        .output()
        .unwrap();
    assert!(!output.status.success());
}

#[test]
fn config_file_supplies_defaults_and_flags_override_it() {
    let dir = tempdir().unwrap();
    let (t1, t2) = (dir.path().join("m1.pgm"), dir.path().join("m2.pgm"));
    let mask = BuildingMask::new(64, 64, vec![false; 64 * 64]).unwrap();
    mfbi_core::write_mask(&mask, &t1).unwrap();
    mfbi_core::write_mask(&mask, &t2).unwrap();

    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "n_segments = 2\nchange_threshold = 3.5\n").unwrap();

    let run = |extra: &[&str]| {
        let mut cmd = bin();
        cmd.args(["change", "--t1"])
            .arg(&t1)
            .args(["--t2"])
            .arg(&t2)
            .args(["--out-image"])
            .arg(dir.path().join("c.ppm"))
            .args(["--out-report"])
            .arg(dir.path().join("c.txt"))
            .args(["--config"])
            .arg(&cfg)
            .args(extra);
        cmd.output().unwrap()
    };
    let output = run(&[]);
    assert!(output.status.success(), "{}", stderr(&output));
    assert!(stdout(&output).contains("cells=4"), "{}", stdout(&output));
    let report = fs::read_to_string(dir.path().join("c.txt")).unwrap();
    assert!(report.contains("change_threshold=3.5"), "{report}");

    let output = run(&["--n-segments", "4"]);
    assert!(output.status.success(), "{}", stderr(&output));
    assert!(stdout(&output).contains("cells=16"), "{}", stdout(&output));

    fs::write(&cfg, "n_segments = 2\nwindow = 9\n").unwrap();
    let output = run(&[]);
    assert!(!output.status.success(), "unknown config keys must be rejected");
    assert!(stderr(&output).contains("window"), "{}", stderr(&output));
}

#[test]
fn zero_segments_is_a_validation_error() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("m.pgm");
    let mask = BuildingMask::new(16, 16, vec![false; 256]).unwrap();
    mfbi_core::write_mask(&mask, &path).unwrap();
    let output = bin()
        .args(["change", "--t1"])
        .arg(&path)
        .args(["--t2"])
        .arg(&path)
        .args(["--out-image"])
        .arg(dir.path().join("c.ppm"))
        .args(["--out-report"])
        .arg(dir.path().join("c.txt"))
        .args(["--n-segments", "0"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(stderr(&output).contains("n_segments"), "{}", stderr(&output));
}

#[test]
fn change_baseline_requires_diff_threshold_and_labels_binary() {
    let dir = tempdir().unwrap();
    let (p1, p2) = (dir.path().join("m1.pgm"), dir.path().join("m2.pgm"));
    let mut bits = vec![false; 32 * 32];
    bits.iter_mut().take(100).for_each(|b| *b = true);
    mfbi_core::write_mask(&BuildingMask::new(32, 32, vec![false; 1024]).unwrap(), &p1).unwrap();
    mfbi_core::write_mask(&BuildingMask::new(32, 32, bits).unwrap(), &p2).unwrap();

    let run = |extra: &[&str]| {
        let mut cmd = bin();
        cmd.args(["change-baseline", "--t1"])
            .arg(&p1)
            .args(["--t2"])
            .arg(&p2)
            .args(["--out-image"])
            .arg(dir.path().join("c.ppm"))
            .args(["--out-report"])
            .arg(dir.path().join("c.txt"))
            .args(["--n-segments", "2"])
            .args(extra);
        cmd.output().unwrap()
    };
    let output = run(&[]);
    assert!(!output.status.success(), "baseline without diff threshold must fail");

    let output = run(&["--diff-threshold", "10"]);
    assert!(output.status.success(), "{}", stderr(&output));
    let report = fs::read_to_string(dir.path().join("c.txt")).unwrap();
    assert!(report.contains("kind=binary"), "{report}");
    assert!(report.lines().skip(5).all(|l| l.ends_with(" C") || l.ends_with(" UC")));
}

#[test]
fn pipeline_writes_all_artifacts_and_metadata() {
    let dir = tempdir().unwrap();
    let (t1, t2) = (dir.path().join("t1.raster"), dir.path().join("t2.raster"));
    write_block_raster(&t1, &[(8, 8, 24, 24)]);
    write_block_raster(&t2, &[(40, 40, 56, 56)]);

    let out_dir = dir.path().join("run");
    let output = bin()
        .args(["pipeline", "--t1"])
        .arg(&t1)
        .args(["--t2"])
        .arg(&t2)
        .args(["--out-dir"])
        .arg(&out_dir)
        .args(["--n-segments", "4"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr(&output));
    for artifact in [
        "t1_mfbi.pgm",
        "t2_mfbi.pgm",
        "t1_mask.pgm",
        "t2_mask.pgm",
        "change.ppm",
        "change_report.txt",
        "run.meta.json",
    ] {
        assert!(out_dir.join(artifact).exists(), "missing {artifact}");
    }
    let meta = fs::read_to_string(out_dir.join("run.meta.json")).unwrap();
    assert!(meta.contains("\"n_segments\": 4"), "{meta}");
    assert!(meta.contains("\"method\": \"mfbi\""), "{meta}");
}

#[test]
fn bench_csv_has_header_and_one_row_per_run() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let output = bin()
        .args([
            "bench",
            "--width",
            "64",
            "--height",
            "64",
            "--bands",
            "2",
            "--repetitions",
            "2",
            "--seed",
            "5",
            "--out",
        ])
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr(&output));
    let csv = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "method,run,seconds");
    assert_eq!(lines.len(), 5, "{csv}");
    assert!(lines[1].starts_with("mfbi,0,"));
    assert!(lines[4].starts_with("mbi,1,"));
    let text = stdout(&output);
    assert!(text.contains("median_seconds_mfbi="), "{text}");
    assert!(text.contains("speedup="), "{text}");

    let output = bin().args(["bench", "--repetitions", "0"]).output().unwrap();
    assert!(!output.status.success());
}

#[test]
fn truth_labels_round_trip_matches_parse() {
    // The Display form of each label is its file code.
    for label in Pattern::ALL {
        assert_eq!(Pattern::parse(label.code()), Some(*label));
    }
}
