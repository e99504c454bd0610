//! CLI acceptance: every command rerun with identical inputs and seed must
//! produce byte-identical output files, exit codes follow the 0/2/3
//! contract, and the pinned file schemas hold.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use demtd_core::phantom::{sample_phantom, AnalyticField};
use demtd_core::rng::Rng;
use demtd_core::volume::{load_volume, save_mask, save_volume, MaskROI, Volume3D};

fn demtd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_demtd"))
}

fn work_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("demtd_cli_{tag}_{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn interior_mask(dims: (usize, usize, usize), margin: usize) -> MaskROI {
    let (nx, ny, nz) = dims;
    let mut data = vec![0u8; nx * ny * nz];
    for z in margin..nz - margin {
        for y in margin..ny - margin {
            for x in margin..nx - margin {
                data[x + nx * (y + ny * z)] = 1;
            }
        }
    }
    MaskROI::new(dims, data).unwrap()
}

/// Write a lesion volume/mask pair; class 1 gets extra voxel noise.
fn write_lesion(dir: &Path, name: &str, seed: u64, class: u8) -> (String, String) {
    let dims = (12, 12, 12);
    let field = AnalyticField::smooth_deformable(seed, 2);
    let (volume, _, _) = sample_phantom(&field, dims).unwrap();
    let mut rng = Rng::new(seed ^ 0xAB);
    let amp = if class == 0 { 0.05 } else { 0.4 };
    let data: Vec<f32> = volume
        .data()
        .iter()
        .map(|&v| v + (amp * rng.next_gaussian()) as f32)
        .collect();
    let noisy = Volume3D::new(dims, (1.0, 1.0, 1.0), data).unwrap();
    let vpath = dir.join(format!("{name}_vol.json"));
    let mpath = dir.join(format!("{name}_mask.json"));
    save_volume(&vpath, &noisy).unwrap();
    save_mask(&mpath, &interior_mask(dims, 3)).unwrap();
    (format!("{name}_vol.json"), format!("{name}_mask.json"))
}

fn write_manifest(dir: &Path, records: &[(String, String, String, u8)]) -> PathBuf {
    let lesions: Vec<String> = records
        .iter()
        .map(|(id, vol, mask, label)| {
            format!(r#"{{"id":"{id}","volume":"{vol}","mask":"{mask}","label":{label}}}"#)
        })
        .collect();
    let text = format!(r#"{{"lesions":[{}]}}"#, lesions.join(","));
    let path = dir.join("manifest.json");
    fs::write(&path, text).unwrap();
    path
}

/// Synthetic separable feature CSV: feature 0 separates, rest noise.
fn write_feature_csv(dir: &Path, n_per_class: usize, dim: usize, seed: u64) -> PathBuf {
    let mut rng = Rng::new(seed);
    let mut out = String::from("id,label");
    for i in 0..dim {
        out.push_str(&format!(",f{i:03}"));
    }
    out.push('\n');
    for class in 0..2u8 {
        for i in 0..n_per_class {
            out.push_str(&format!("s{class}{i},{class}"));
            for k in 0..dim {
                let v = if k == 0 {
                    class as f64 * 6.0 + rng.next_gaussian()
                } else {
                    rng.next_gaussian()
                };
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
    }
    let path = dir.join("features.csv");
    fs::write(&path, out).unwrap();
    path
}

fn run_ok(cmd: &mut Command) {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed: {:?}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn assert_exit(cmd: &mut Command, code: i32) {
    let out = cmd.output().unwrap();
    assert_eq!(
        out.status.code(),
        Some(code),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(!out.stderr.is_empty(), "error path must report to stderr");
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let entry = entry.unwrap();
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(dir)
                    .unwrap()
                    .to_string_lossy()
                    .to_string();
                files.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn c14_every_command_is_byte_deterministic() {
    let dir = work_dir("determinism");
    let inputs = dir.join("inputs");
    fs::create_dir_all(&inputs).unwrap();

    let mut records = Vec::new();
    for i in 0..4 {
        let class = (i % 2) as u8;
        let (vol, mask) = write_lesion(&inputs, &format!("l{i}"), 500 + i as u64, class);
        records.push((format!("l{i}"), vol, mask, class));
    }
    let manifest = write_manifest(&inputs, &records);
    let features_csv = write_feature_csv(&inputs, 20, 6, 321);
    let scores_a = inputs.join("scores_a.txt");
    let scores_b = inputs.join("scores_b.txt");
    {
        let mut rng = Rng::new(5);
        let a: Vec<String> = (0..40)
            .map(|_| format!("{}", 0.4 + 0.1 * rng.next_gaussian()))
            .collect();
        let b: Vec<String> = (0..40)
            .map(|_| format!("{}", 0.6 + 0.1 * rng.next_gaussian()))
            .collect();
        fs::write(&scores_a, a.join("\n") + "\n").unwrap();
        fs::write(&scores_b, b.join("\n") + "\n").unwrap();
    }

    let run_all = |out_root: &Path| {
        fs::create_dir_all(out_root).unwrap();
        run_ok(
            demtd()
                .args(["maps", "--volume"])
                .arg(inputs.join("l0_vol.json"))
                .arg("--mask")
                .arg(inputs.join("l0_mask.json"))
                .arg("--out-dir")
                .arg(out_root.join("maps"))
                .args(["--n", "2", "--levels", "16"]),
        );
        run_ok(
            demtd()
                .args(["features", "--manifest"])
                .arg(&manifest)
                .arg("--out")
                .arg(out_root.join("features.csv"))
                .args(["--n", "2", "--levels", "16"]),
        );
        run_ok(
            demtd()
                .args(["train", "--features"])
                .arg(&features_csv)
                .arg("--model-out")
                .arg(out_root.join("model.bin"))
                .arg("--summary-out")
                .arg(out_root.join("train.json"))
                .args(["--trees", "50", "--seed", "9"]),
        );
        run_ok(
            demtd()
                .args(["cv", "--features"])
                .arg(&features_csv)
                .arg("--out")
                .arg(out_root.join("cv.json"))
                .arg("--scores-out")
                .arg(out_root.join("cv_scores.txt"))
                .args(["--trees", "40", "--repeats", "5", "--seed", "11"]),
        );
        run_ok(
            demtd()
                .args(["grid", "--manifest"])
                .arg(&manifest)
                .arg("--out")
                .arg(out_root.join("grid.csv"))
                .arg("--best-out")
                .arg(out_root.join("best.json"))
                .args([
                    "--n-values",
                    "1,2",
                    "--levels-values",
                    "16,24",
                    "--trees",
                    "10",
                    "--repeats",
                    "2",
                    "--seed",
                    "3",
                ]),
        );
        run_ok(
            demtd()
                .args(["ttest", "--scores-a"])
                .arg(&scores_a)
                .arg("--scores-b")
                .arg(&scores_b)
                .arg("--out")
                .arg(out_root.join("ttest.json")),
        );
        run_ok(
            demtd()
                .args(["validate-invariance", "--out"])
                .arg(out_root.join("validate.json"))
                .args([
                    "--phantom",
                    "smooth",
                    "--draws",
                    "6",
                    "--dims",
                    "20",
                    "--seed",
                    "13",
                ]),
        );
    };

    let out1 = dir.join("run1");
    let out2 = dir.join("run2");
    run_all(&out1);
    run_all(&out2);

    let s1 = snapshot(&out1);
    let s2 = snapshot(&out2);
    assert_eq!(s1.len(), s2.len());
    let mut checked = 0;
    for ((name1, bytes1), (name2, bytes2)) in s1.iter().zip(s2.iter()) {
        assert_eq!(name1, name2);
        assert_eq!(bytes1, bytes2, "artifact {name1} differs between reruns");
        checked += 1;
    }
    println!("criterion 14: {checked} artifacts byte-identical across reruns");
    assert!(checked >= 15);
}

#[test]
fn maps_quadratic_phantom_matches_analytic_e() {
    let dir = work_dir("maps_quadratic");
    let dims = (16, 16, 16);
    let (volume, _, _) = sample_phantom(&AnalyticField::radial_quadratic(), dims).unwrap();
    save_volume(&dir.join("q_vol.json"), &volume).unwrap();
    save_mask(&dir.join("q_mask.json"), &interior_mask(dims, 3)).unwrap();
    run_ok(
        demtd()
            .args(["maps", "--volume"])
            .arg(dir.join("q_vol.json"))
            .arg("--mask")
            .arg(dir.join("q_mask.json"))
            .arg("--out-dir")
            .arg(dir.join("out"))
            .args(["--n", "1", "--levels", "16"]),
    );

    // Interior mask box [3,12] dilated by margin 3 spans the full lattice,
    // so map voxels align with the original coordinates.
    let e_map = load_volume(&dir.join("out/e_map.json")).unwrap();
    assert_eq!(e_map.dims(), dims);
    let c = 7.5;
    for z in 3..13 {
        for y in 3..13 {
            for x in 3..13usize {
                let r2 = (x as f64 - c).powi(2) + (y as f64 - c).powi(2) + (z as f64 - c).powi(2);
                let want = 2.0 * r2;
                let got = e_map.at(x, y, z) as f64;
                assert!(
                    (got - want).abs() <= 0.01 * want.max(1.0),
                    "E at ({x},{y},{z}): {got} vs {want}"
                );
            }
        }
    }
    let stats: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("out/stats.json")).unwrap()).unwrap();
    assert_eq!(stats["masked_voxels"], 1000);
    assert_eq!(stats["singular_voxels"], 0);
    assert_eq!(stats["echo"]["command"], "maps");

    // Histogram is a probability vector.
    let hist = fs::read_to_string(dir.join("out/histogram.csv")).unwrap();
    let mut lines = hist.lines();
    assert_eq!(lines.next(), Some("bin,probability"));
    let total: f64 = lines
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn feature_csv_schema_and_skip_bad() {
    let dir = work_dir("features_schema");
    let mut records = Vec::new();
    for i in 0..3 {
        let (vol, mask) = write_lesion(&dir, &format!("s{i}"), 900 + i as u64, (i % 2) as u8);
        records.push((format!("s{i}"), vol, mask, (i % 2) as u8));
    }
    let manifest = write_manifest(&dir, &records);
    let out = dir.join("features.csv");
    run_ok(
        demtd()
            .args(["features", "--manifest"])
            .arg(&manifest)
            .arg("--out")
            .arg(&out)
            .args(["--n", "1", "--levels", "16"]),
    );
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4, "header plus three lesions");
    let header: Vec<&str> = lines[0].split(',').collect();
    assert_eq!(header.len(), 366);
    assert_eq!(header[0], "id");
    assert_eq!(header[1], "label");
    assert_eq!(header[2], "f000");
    assert_eq!(header[365], "f363");
    for row in &lines[1..] {
        assert_eq!(row.split(',').count(), 366);
    }
    assert!(dir.join("features.csv.meta.json").exists());

    // A record with a missing file aborts, unless --skip-bad is given.
    let mut bad = records.clone();
    bad.push((
        "ghost".into(),
        "missing_vol.json".into(),
        "missing_mask.json".into(),
        0,
    ));
    let manifest_bad = write_manifest(&dir, &bad);
    assert_exit(
        demtd()
            .args(["features", "--manifest"])
            .arg(&manifest_bad)
            .arg("--out")
            .arg(dir.join("bad.csv"))
            .args(["--n", "1", "--levels", "16"]),
        2,
    );
    run_ok(
        demtd()
            .args(["features", "--manifest"])
            .arg(&manifest_bad)
            .arg("--out")
            .arg(dir.join("skipped.csv"))
            .args(["--n", "1", "--levels", "16", "--skip-bad"]),
    );
    let text = fs::read_to_string(dir.join("skipped.csv")).unwrap();
    assert_eq!(text.lines().count(), 4, "ghost row skipped");
}

#[test]
fn cv_on_separable_features_reaches_high_auc() {
    let dir = work_dir("cv_sep");
    let csv = write_feature_csv(&dir, 30, 5, 77);
    let out = dir.join("metrics.json");
    run_ok(
        demtd()
            .args(["cv", "--features"])
            .arg(&csv)
            .arg("--out")
            .arg(&out)
            .args(["--trees", "80", "--repeats", "10", "--seed", "21"]),
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(report["auc_mean"].as_f64().unwrap() >= 0.99);
    assert_eq!(report["seed"], 21);
    assert_eq!(report["echo"]["repeats"], 10);
    for key in ["auc_mean", "auc_std", "acc", "sn", "sp"] {
        assert!(report[key].is_number(), "missing {key}");
    }
}

#[test]
fn grid_two_by_two_schema() {
    let dir = work_dir("grid_schema");
    let mut records = Vec::new();
    for i in 0..4 {
        let (vol, mask) = write_lesion(&dir, &format!("g{i}"), 700 + i as u64, (i % 2) as u8);
        records.push((format!("g{i}"), vol, mask, (i % 2) as u8));
    }
    let manifest = write_manifest(&dir, &records);
    let out = dir.join("grid.csv");
    run_ok(
        demtd()
            .args(["grid", "--manifest"])
            .arg(&manifest)
            .arg("--out")
            .arg(&out)
            .arg("--best-out")
            .arg(dir.join("best.json"))
            .args([
                "--n-values",
                "3",
                "--levels-values",
                "16",
                "--trees",
                "10",
                "--repeats",
                "2",
            ]),
    );
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,levels,auc_mean,auc_std,acc,sn,sp");
    assert_eq!(lines.len(), 2, "single (n, L) pair gives one row");
    assert!(lines[1].starts_with("3,16,"));
    let best: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("best.json")).unwrap()).unwrap();
    assert_eq!(best["best"]["root_power"], 3);
    assert_eq!(best["best"]["levels"], 16);
}

#[test]
fn train_persists_model_and_kl_basis() {
    let dir = work_dir("train_kl");
    let mut records = Vec::new();
    for i in 0..4 {
        let (vol, mask) = write_lesion(&dir, &format!("k{i}"), 810 + i as u64, (i % 2) as u8);
        records.push((format!("k{i}"), vol, mask, (i % 2) as u8));
    }
    let manifest = write_manifest(&dir, &records);
    let csv = dir.join("features.csv");
    run_ok(
        demtd()
            .args(["features", "--manifest"])
            .arg(&manifest)
            .arg("--out")
            .arg(&csv)
            .args(["--n", "1", "--levels", "16"]),
    );
    run_ok(
        demtd()
            .args(["train", "--features"])
            .arg(&csv)
            .arg("--model-out")
            .arg(dir.join("model.bin"))
            .arg("--kl-basis-out")
            .arg(dir.join("basis.json"))
            .args(["--trees", "20", "--seed", "2"]),
    );

    let basis: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("basis.json")).unwrap()).unwrap();
    let mean = basis["mean"].as_array().unwrap();
    assert_eq!(mean.len(), 28, "one mean vector per measure");
    assert_eq!(mean[0].as_array().unwrap().len(), 13);
    let b = basis["basis"].as_array().unwrap();
    assert_eq!(b.len(), 28);
    assert_eq!(b[0].as_array().unwrap().len(), 169, "13x13 row-major");
    assert!(dir.join("model.bin").exists());
}

#[test]
fn ttest_identical_lists_give_p_one() {
    let dir = work_dir("ttest_ident");
    let scores = dir.join("s.txt");
    fs::write(&scores, "0.25\n0.25\n0.25\n0.25\n").unwrap();
    let out = dir.join("t.json");
    run_ok(
        demtd()
            .args(["ttest", "--scores-a"])
            .arg(&scores)
            .arg("--scores-b")
            .arg(&scores)
            .arg("--out")
            .arg(&out),
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["p"], 1.0);
}

#[test]
fn validate_invariance_analytic_contract() {
    let dir = work_dir("validate");
    let out = dir.join("report.json");
    run_ok(
        demtd()
            .args(["validate-invariance", "--out"])
            .arg(&out)
            .args([
                "--phantom",
                "quadratic",
                "--draws",
                "100",
                "--dims",
                "24",
                "--seed",
                "19",
            ]),
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["draws"], 100);
    assert!(report["analytic_rms_max"].as_f64().unwrap() < 1e-9);
    assert!(report["discrete_rms_max"].as_f64().unwrap() < 0.05);
    let per_draw = report["report"]["draws"].as_array().unwrap();
    assert_eq!(per_draw.len(), 100);
    for d in per_draw {
        assert!(d["analytic_max"].as_f64().unwrap() < 1e-9);
    }
}

#[test]
fn exit_codes_follow_contract() {
    let dir = work_dir("exit_codes");
    let (vol, mask) = write_lesion(&dir, "e0", 1234, 0);

    // Missing mask file: input error, exit 2.
    assert_exit(
        demtd()
            .args(["maps", "--volume"])
            .arg(dir.join(&vol))
            .arg("--mask")
            .arg(dir.join("nope_mask.json"))
            .arg("--out-dir")
            .arg(dir.join("out"))
            .args(["--n", "1", "--levels", "16"]),
        2,
    );

    // Root power 0: parameter error, exit 2.
    assert_exit(
        demtd()
            .args(["maps", "--volume"])
            .arg(dir.join(&vol))
            .arg("--mask")
            .arg(dir.join(&mask))
            .arg("--out-dir")
            .arg(dir.join("out"))
            .args(["--n", "0", "--levels", "16"]),
        2,
    );

    // Duplicate manifest id: exit 2.
    let records = vec![
        ("dup".to_string(), vol.clone(), mask.clone(), 0u8),
        ("dup".to_string(), vol.clone(), mask.clone(), 1u8),
    ];
    let manifest = write_manifest(&dir, &records);
    assert_exit(
        demtd()
            .args(["features", "--manifest"])
            .arg(&manifest)
            .arg("--out")
            .arg(dir.join("f.csv"))
            .args(["--n", "1", "--levels", "16"]),
        2,
    );

    // Single-class training data: numeric/runtime error, exit 3.
    let csv = dir.join("single_class.csv");
    fs::write(&csv, "id,label,f000\na,1,0.1\nb,1,0.2\nc,1,0.3\nd,1,0.4\n").unwrap();
    assert_exit(
        demtd()
            .args(["cv", "--features"])
            .arg(&csv)
            .arg("--out")
            .arg(dir.join("m.json"))
            .args(["--trees", "5", "--repeats", "2"]),
        3,
    );

    // Constant-but-different scores: undefined t statistic, exit 3.
    fs::write(dir.join("ca.txt"), "1\n1\n1\n").unwrap();
    fs::write(dir.join("cb.txt"), "2\n2\n2\n").unwrap();
    assert_exit(
        demtd()
            .args(["ttest", "--scores-a"])
            .arg(dir.join("ca.txt"))
            .arg("--scores-b")
            .arg(dir.join("cb.txt"))
            .arg("--out")
            .arg(dir.join("t.json")),
        3,
    );

    // KL decorrelation requires 364-wide descriptors: exit 2 on narrow CSV.
    let narrow = write_feature_csv(&dir, 5, 4, 62);
    assert_exit(
        demtd()
            .args(["cv", "--features"])
            .arg(&narrow)
            .arg("--out")
            .arg(dir.join("kl.json"))
            .args(["--kl", "--trees", "5", "--repeats", "2"]),
        2,
    );
}
