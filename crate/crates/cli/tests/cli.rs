use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use smolpipe_core::model::ToyVlm;
use smolpipe_core::vision::RawImage;
use tempfile::TempDir;

fn smolpipe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smolpipe"))
        .args(args)
        .env_remove("SMOLPIPE_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(o: Output) -> String {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), stderr(&o));
    stdout(&o)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn image(dir: &TempDir, name: &str, w: usize, h: usize) -> PathBuf {
    let path = dir.path().join(name);
    RawImage::from_fn(w, h, |x, y| [(x % 256) as u8, (y % 256) as u8, ((x + y) % 256) as u8])
        .unwrap()
        .save_ppm(&path)
        .unwrap();
    path
}

fn preset_with(dir: &TempDir, name: &str, key: &str, value: &str) -> PathBuf {
    let text = smolpipe_core::budget::PipelineConfig::preset_text("smolvlm-256m").unwrap();
    let edited: String = text
        .lines()
        .map(|l| {
            if l.starts_with(&format!("{key} =")) {
                format!("{key} = {value}\n")
            } else {
                format!("{l}\n")
            }
        })
        .collect();
    let path = dir.path().join(name);
    std::fs::write(&path, edited).unwrap();
    path
}

fn field(line: &str, key: &str) -> usize {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from {line:?}"))
        .parse()
        .unwrap()
}

#[test]
fn tokenize_square_image() {
    let dir = tempfile::tempdir().unwrap();
    let img = image(&dir, "sq.ppm", 512, 512);
    let out = dir.path().join("run");
    let text = ok(smolpipe(&["tokenize-image", s(&img), "--out", s(&out)]));
    assert_eq!(text.lines().next(), Some("tiles=0 global=1 visual_tokens=64"));
    assert!(out.join("run-manifest.txt").is_file());
    let dump = std::fs::read_to_string(out.join("tokens.csv")).unwrap();
    assert_eq!(dump.lines().count(), 1 + 65);

    let r1 = preset_with(&dir, "r1.txt", "shuffle_r", "1");
    let text = ok(smolpipe(&[
        "tokenize-image",
        s(&img),
        "--config",
        s(&r1),
        "--out",
        s(&out),
    ]));
    assert_eq!(field(text.lines().next().unwrap(), "visual_tokens"), 1024);
}

#[test]
fn string_positions_cost_more_tokens() {
    let dir = tempfile::tempdir().unwrap();
    let img = image(&dir, "wide.ppm", 1100, 600);
    let total = |mode: &str| {
        let out = dir.path().join(mode);
        let text = ok(smolpipe(&["tokenize-image", s(&img), "--mode", mode, "--out", s(&out)]));
        field(text.lines().nth(1).unwrap(), "total_tokens")
    };
    assert!(total("string") > total("learned"));
}

#[test]
fn input_and_geometry_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let missing = smolpipe(&["tokenize-image", s(&dir.path().join("none.ppm")), "--out", s(&out)]);
    assert_eq!(missing.status.code(), Some(2));

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "name = x\npatch 16\n").unwrap();
    let o = smolpipe(&["budget", s(&bad), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let img = image(&dir, "sq.ppm", 64, 64);
    let geo = preset_with(&dir, "geo.txt", "patch", "15");
    let o = smolpipe(&["tokenize-image", s(&img), "--config", s(&geo), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    let o = Command::new(env!("CARGO_BIN_EXE_smolpipe"))
        .args(["budget", "smolvlm-256m", "--out", s(&out)])
        .env("SMOLPIPE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(
        smolpipe(&["ablate", "--axis", "colour", "--out", s(&out)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn budget_rows_and_batch_linearity() {
    let dir = tempfile::tempdir().unwrap();
    let work = |batch: u64| {
        let path = dir.path().join(format!("w{batch}.txt"));
        std::fs::write(
            &path,
            format!("image_width = 1920\nimage_height = 1080\nbatch = {batch}\n"),
        )
        .unwrap();
        path
    };
    let table = |batch: u64| {
        let out = dir.path().join(format!("b{batch}"));
        let text = ok(smolpipe(&[
            "budget",
            "smolvlm-2.2b",
            "smolvlm-256m",
            "smolvlm-500m",
            "--workload",
            s(&work(batch)),
            "--out",
            s(&out),
        ]));
        assert_eq!(std::fs::read_to_string(out.join("budget.csv")).unwrap(), text);
        let mut rows = csv::Reader::from_reader(text.as_bytes());
        let header = rows.headers().unwrap().clone();
        let col = |name: &str| header.iter().position(|h| h == name).unwrap();
        let (name, kv, visual) = (col("name"), col("kv_bytes"), col("image_visual_tokens"));
        rows.records()
            .map(|r| {
                let r = r.unwrap();
                (
                    r[name].to_string(),
                    r[kv].parse::<u64>().unwrap(),
                    r[visual].parse::<usize>().unwrap(),
                )
            })
            .collect::<Vec<_>>()
    };
    let one = table(1);
    let names: Vec<&str> = one.iter().map(|r| r.0.as_str()).collect();
    assert_eq!(names, ["smolvlm-256m", "smolvlm-500m", "smolvlm-2.2b"]);
    let two = table(2);
    for (a, b) in one.iter().zip(&two) {
        assert_eq!(b.1, 2 * a.1);
    }

    let img = image(&dir, "hd.ppm", 1920, 1080);
    let text = ok(smolpipe(&[
        "tokenize-image",
        s(&img),
        "--out",
        s(&dir.path().join("tok")),
    ]));
    assert_eq!(field(text.lines().next().unwrap(), "visual_tokens"), one[0].2);
}

fn dataset(dir: &TempDir, task: &str, count: usize) -> PathBuf {
    let path = dir.path().join(format!("{task}-data"));
    let n = count.to_string();
    ok(smolpipe(&[
        "generate-dataset",
        "--task",
        task,
        "--count",
        &n,
        "--seed",
        "3",
        "--out",
        s(&path),
    ]));
    path
}

#[test]
fn zero_steps_saves_the_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(&dir, "caption", 4);
    let out = dir.path().join("train");
    ok(smolpipe(&[
        "train-toy",
        s(&data),
        "--steps",
        "0",
        "--seed",
        "9",
        "--out",
        s(&out),
    ]));
    let saved = ToyVlm::load(out.join("checkpoint")).unwrap();
    let fresh = ToyVlm::init(saved.config().clone(), 9).unwrap();
    assert_eq!(saved.params().len(), fresh.params().len());
    for (name, t) in saved.params() {
        assert!(t.bitwise_eq(fresh.param(name).unwrap()), "{name}");
    }
}

#[test]
fn fixed_seed_reproduces_loss_log() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(&dir, "temporal", 4);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let args = [
            "train-toy",
            s(&data),
            "--steps",
            "3",
            "--seed",
            "5",
            "--batch-size",
            "2",
            "--out",
            s(&out),
        ];
        ok(smolpipe(&args));
        std::fs::read_to_string(out.join("loss.csv")).unwrap()
    };
    let first = run("a");
    assert_eq!(first.lines().count(), 4);
    assert_eq!(first, run("b"));
}

#[test]
fn overflowing_sample_exits_with_its_id() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(&dir, "caption", 2);
    let samples = data.join("samples.jsonl");
    let text = std::fs::read_to_string(&samples).unwrap();
    let long = "word ".repeat(9000);
    let edited: Vec<String> = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 1 {
                l.replacen("What is in the image?", &long, 1)
            } else {
                l.to_string()
            }
        })
        .collect();
    std::fs::write(&samples, edited.join("\n") + "\n").unwrap();
    let o = smolpipe(&["train-toy", s(&data), "--out", s(&dir.path().join("t"))]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("caption-0001"), "{}", stderr(&o));
}

#[test]
fn default_run_overfits_the_caption_set() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("captions");
    ok(smolpipe(&["generate-dataset", "--task", "caption", "--out", s(&path)]));
    let text = ok(smolpipe(&["train-toy", s(&path), "--out", s(&dir.path().join("t"))]));
    let loss: f64 = text
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix("final_loss="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(loss < 0.05, "{text}");
}

#[test]
fn ablation_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.txt");
    std::fs::write(&cfg, "steps = 1\ntrain_count = 4\neval_count = 2\nbatch_size = 2\n").unwrap();
    let table = |axis: &str| {
        let out = dir.path().join(axis);
        let text = ok(smolpipe(&[
            "ablate",
            "--axis",
            axis,
            "--config",
            s(&cfg),
            "--out",
            s(&out),
        ]));
        assert!(out.join(format!("ablation-{axis}.csv")).is_file());
        let mut r = csv::Reader::from_reader(text.as_bytes());
        r.deserialize::<std::collections::HashMap<String, String>>()
            .map(|row| row.unwrap())
            .collect::<Vec<_>>()
    };
    let shuffle = table("shuffle");
    let settings: Vec<&str> = shuffle.iter().map(|r| r["setting"].as_str()).collect();
    assert_eq!(settings, ["1", "2", "4"]);
    let pos = table("posmode");
    let len = |i: usize| pos[i]["mean_seq_len"].parse::<f64>().unwrap();
    assert_eq!(pos[0]["setting"], "learned");
    assert!(len(0) < len(1));
}
