//! End-to-end checks of the `earcost` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn earcost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_earcost"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("earcost_cli_{tag}_{}", std::process::id()));
    std::fs::remove_dir_all(&dir).ok();
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn path_str(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn synth_extract_det_eer_round_trip() {
    let dir = workdir("roundtrip");
    let data = dir.join("data");

    let out = earcost(&[
        "synth",
        "--seed",
        "5",
        "--out-dir",
        path_str(&data),
        "--target-clips",
        "3",
        "--world-clips",
        "3",
        "--clip-seconds",
        "1.5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(data.join("annotations.csv").exists());

    // feature extraction with and without differences
    let feats = dir.join("feats.csv");
    let out = earcost(&[
        "extract",
        "--input",
        path_str(&data.join("target_000.wav")),
        "--output",
        path_str(&feats),
        "--deltas",
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&feats).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 54);
    assert!(header.starts_with("mfcc_0"));
    assert!(header.contains("dd_zcr"));

    // train a mixture pair, score the same data, evaluate
    let models = dir.join("models");
    let out = earcost(&[
        "train-gmm",
        "--dataset",
        path_str(&data),
        "--annotations",
        path_str(&data.join("annotations.csv")),
        "--label",
        "alarm",
        "--seed",
        "3",
        "--components",
        "2",
        "--out-dir",
        path_str(&models),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(models.join("gmm_target.json").exists());
    assert!(models.join("normalization.json").exists());

    let scores = dir.join("scores.csv");
    let out = earcost(&[
        "score",
        "--dataset",
        path_str(&data),
        "--annotations",
        path_str(&data.join("annotations.csv")),
        "--label",
        "alarm",
        "--model-dir",
        path_str(&models),
        "--family",
        "gmm",
        "--output",
        path_str(&scores),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let score_text = std::fs::read_to_string(&scores).unwrap();
    assert!(score_text.starts_with("clip,frame_index,score,label\n"));
    assert!(score_text.contains("target_000.wav,0,"));

    let det_csv = dir.join("det.csv");
    let det_svg = dir.join("det.svg");
    let out = earcost(&[
        "det",
        "--scores",
        path_str(&scores),
        "--out-csv",
        path_str(&det_csv),
        "--out-svg",
        path_str(&det_svg),
    ]);
    assert!(out.status.success());
    assert!(std::fs::read_to_string(&det_csv)
        .unwrap()
        .starts_with("threshold,fa_pct,md_pct,nd_fa,nd_md"));
    assert!(std::fs::read_to_string(&det_svg).unwrap().contains("<polyline"));

    let out = earcost(&["eer", "--scores", path_str(&scores)]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("EER"), "{stdout}");

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn budget_prints_reference_numbers() {
    let out = earcost(&["budget"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("1024000"), "{stdout}");
    assert!(stdout.contains("2560"), "{stdout}");
}

#[test]
fn cost_single_family_and_sweep() {
    let out = earcost(&[
        "cost",
        "--family",
        "dnn-sigmoid",
        "--layers",
        "2",
        "--hidden",
        "50",
        "--dim",
        "54",
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("total=10702"));

    let out = earcost(&["cost", "--csv"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("family,size,dim,"));
    assert!(stdout.lines().count() > 100);
}

#[test]
fn missing_files_exit_nonzero_with_category() {
    let out = earcost(&[
        "eer",
        "--scores",
        "/nonexistent/earcost/scores.csv",
    ]);
    assert!(!out.status.success());
    assert_eq!(out.status.code(), Some(3), "io failures map to exit 3");

    let dir = workdir("badwav");
    std::fs::write(dir.join("x.wav"), b"not really a wav").unwrap();
    std::fs::write(dir.join("ann.csv"), "file,onset_s,offset_s,label\n").unwrap();
    let out = earcost(&[
        "train-gmm",
        "--dataset",
        path_str(&dir),
        "--annotations",
        path_str(&dir.join("ann.csv")),
        "--label",
        "alarm",
        "--seed",
        "1",
        "--out-dir",
        path_str(&dir.join("out")),
    ]);
    assert!(!out.status.success());
    assert_eq!(out.status.code(), Some(4), "format failures map to exit 4");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn run_with_config_file_and_rnn() {
    let dir = workdir("runcfg");
    let data = dir.join("data");
    let out = earcost(&[
        "synth",
        "--seed",
        "9",
        "--out-dir",
        path_str(&data),
        "--target-clips",
        "6",
        "--world-clips",
        "6",
        "--clip-seconds",
        "2.0",
    ]);
    assert!(out.status.success());

    let config = dir.join("experiment.cfg");
    std::fs::write(
        &config,
        format!(
            "[dataset]\n\
             dir = {data}\n\
             annotations = {data}/annotations.csv\n\
             target_label = alarm\n\
             \n\
             [experiment]\n\
             seed = 4\n\
             output_dir = {out}\n\
             \n\
             [gmm]\n\
             m_grid = 2, 4\n\
             \n\
             [svm]\n\
             kernels = linear\n\
             c_grid = 1.0\n\
             t_grid = 200\n\
             \n\
             [dnn]\n\
             layers_grid = 1\n\
             hidden_grid = 8\n\
             activations = sigmoid\n\
             max_epochs = 25\n\
             \n\
             [rnn]\n\
             enabled = true\n\
             layers_grid = 1\n\
             hidden_grid = 8\n\
             max_epochs = 6\n",
            data = data.display(),
            out = dir.join("out").display()
        ),
    )
    .unwrap();

    let out = earcost(&["run", "--config", path_str(&config)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("rnn"), "{stdout}");

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/summary.json")).unwrap())
            .unwrap();
    let families: Vec<&str> = summary["families"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["family"].as_str().unwrap())
        .collect();
    assert_eq!(families, vec!["gmm", "svm", "dnn", "rnn"]);
    // every frame in every score file traces back to a clip and index
    for family in &families {
        let scores =
            std::fs::read_to_string(dir.join(format!("out/scores_{family}.csv"))).unwrap();
        for line in scores.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 4);
            assert!(fields[0].ends_with(".wav"));
            fields[1].parse::<usize>().unwrap();
        }
    }
    std::fs::remove_dir_all(&dir).ok();
}
