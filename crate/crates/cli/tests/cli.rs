use std::path::PathBuf;
use std::process::{Command, Output};

use rcldpc::code::{edge_counts, Code};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rcldpc"))
}

fn toy() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data/toy.bg"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("RCLDPC_THREADS").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn every_flag_is_documented() {
    for sub in ["construct", "encode", "simulate", "train", "eval", "report", "convert"] {
        let o = run(&[sub, "--help"]);
        assert!(o.status.success(), "{sub}");
        let text = stdout(&o);
        let lines: Vec<&str> = text.lines().map(str::trim_start).collect();
        let mut flags = 0;
        for (i, line) in lines.iter().enumerate() {
            if !(line.starts_with("--") || line.starts_with("-h") || line.starts_with("-V")) {
                continue;
            }
            flags += 1;
            // help text sits either after the flag or on the next line
            let inline = line.split("  ").map(str::trim).filter(|s| !s.is_empty()).count() >= 2;
            let below = lines.get(i + 1).is_some_and(|n| !n.is_empty() && !n.starts_with('-'));
            assert!(inline || below, "{sub}: undocumented flag line {line:?}");
        }
        assert!(flags >= 2, "{sub}: no flags listed");
    }
}

#[test]
fn missing_code_file_exits_2_and_names_path() {
    let o = run(&["construct", "--code", "/nonexistent/codes/missing.bg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/codes/missing.bg"));
}

#[test]
fn invalid_code_file_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dup.bg");
    std::fs::write(&path, "BG 2 3 1 1\nRATES\n2 3 3\n0 0 0\n0 0 1\n1 1 0\n1 2 0\n").unwrap();
    let o = run(&["construct", "--code", path.to_str().unwrap(), "--z", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 5"), "{}", stderr(&o));
}

#[test]
fn construct_prints_ladder() {
    let o = run(&["construct", "--code", toy().to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("N = 64, M = 32, E = 188, K = 32"), "{text}");
    assert!(text.contains(&Code::toy(4).fingerprint()));
}

#[test]
fn report_counts_match_edge_counts() {
    let o = run(&["report", "--code", toy().to_str().unwrap(), "--layers", "5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let code = Code::toy(4);
    let counts = edge_counts(&code.ladder);
    let e = code.tanner.edge_count();
    assert!(text.contains(&format!("per rate: {counts:?}")), "{text}");
    let row = |name: &str| -> Vec<usize> {
        let line = text.lines().find(|l| l.split_whitespace().next() == Some(name)).unwrap();
        line.split_whitespace().skip(1).map(|t| t.parse().unwrap()).collect()
    };
    assert_eq!(row("bp")[0], 2 * e);
    assert_eq!(row("cnms")[5], 1);
    assert_eq!(row("nnms")[5], counts.iter().sum::<usize>());
    assert_eq!(row("rc-nnms")[5], e);
    assert_eq!(row("pbrc-nnms")[5], code.base.entries.len());
}

#[test]
fn encode_given_bits_satisfies_checks() {
    let code = Code::toy(4);
    let info = "10110010".repeat(4);
    let o = run(&["encode", "--code", toy().to_str().unwrap(), "--rate", "2", "--info", &info]);
    assert!(o.status.success());
    let bits: Vec<u8> = stdout(&o).trim().bytes().map(|b| b - b'0').collect();
    assert_eq!(bits.len(), 64);
    assert!(code.view(2).unwrap().syndrome_ok(&bits));
    let bad = run(&["encode", "--code", toy().to_str().unwrap(), "--info", "012"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn simulate_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fer.csv");
    let svg = dir.path().join("fer.svg");
    let o = run(&[
        "simulate", "--code", toy().to_str().unwrap(), "--decoder", "bp", "--snr", "1:0.5:4", "--frames", "300", "--exhaustive",
        "--max-iter", "5", "--seed", "7", "--out", csv.to_str().unwrap(), "--svg", svg.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    let recs = rcldpc::harness::parse_csv(&text).unwrap();
    assert_eq!(recs.len(), 3 * 7);
    assert!(recs.iter().all(|r| r.frames_run == 300));
    assert_eq!(std::fs::read_to_string(&svg).unwrap().matches("<polyline").count(), 3);
}

#[test]
fn thread_setting_does_not_change_results() {
    let code = toy();
    let args = ["simulate", "--code", code.to_str().unwrap(), "--decoder", "nms:0.75", "--snr", "2", "--frames", "2000", "--exhaustive", "--max-iter", "5"];
    let strip = |o: &Output| stdout(o).lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect::<Vec<_>>();
    let one = bin().args(args).env("RCLDPC_THREADS", "1").output().unwrap();
    let four = bin().args(args).arg("--threads").arg("4").env_remove("RCLDPC_THREADS").output().unwrap();
    assert!(one.status.success() && four.status.success());
    assert_eq!(strip(&one), strip(&four));
    let bad = bin().args(args).env("RCLDPC_THREADS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("RCLDPC_THREADS"));
}

#[test]
fn train_simulate_eval_convert() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("train.cfg");
    let model = dir.path().join("m.rcnn");
    std::fs::write(
        &cfg,
        format!(
            "code = {}\nvariant = nnms\ntying = per-base-edge\nL_max = 2\nbatch_size = 16\nbatches_per_stage = 3\nvalidation_frames = 20\n",
            toy().display()
        ),
    )
    .unwrap();
    let o = run(&["train", "--config", cfg.to_str().unwrap(), "--set", "lr=0.01", "--out", model.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("stage 2: validation loss"));

    let o = run(&["simulate", "--code", toy().to_str().unwrap(), "--model", model.to_str().unwrap(), "--snr", "3", "--rates", "0.5", "--frames", "200", "--exhaustive"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 2);

    let o = run(&["eval", "--code", toy().to_str().unwrap(), "--model", model.to_str().unwrap(), "--snr", "2,4", "--frames", "100", "--loss-frames", "50"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 1 + 3 * 2);

    let untied = dir.path().join("u.rcnn");
    let o = run(&["convert", "--code", toy().to_str().unwrap(), "--model", model.to_str().unwrap(), "--untie", "--out", untied.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let code = Code::toy(4);
    let tied = rcldpc::neural::read_model::<f64>(&std::fs::read_to_string(&model).unwrap(), &code).unwrap();
    let expanded = rcldpc::neural::read_model::<f64>(&std::fs::read_to_string(&untied).unwrap(), &code).unwrap();
    assert_eq!(expanded.params.values, tied.params.expand().values);

    let csv = dir.path().join("m.csv");
    let o = run(&["convert", "--code", toy().to_str().unwrap(), "--model", model.to_str().unwrap(), "--format", "csv", "--out", csv.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 1 + 4);

    // a model refuses a different code
    let bg2 = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data/bg2_z16.bg");
    let o = run(&["simulate", "--code", bg2, "--z", "16", "--model", model.to_str().unwrap(), "--snr", "3", "--frames", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("fingerprint"), "{}", stderr(&o));
}
