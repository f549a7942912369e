use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn argqual(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_argqual")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = argqual(args);
    assert!(
        out.status.success(),
        "argqual {} failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Exit code and the single stderr line of a failing run.
fn fails(args: &[&str]) -> (i32, String) {
    let out = argqual(args);
    assert!(!out.status.success(), "argqual {} unexpectedly succeeded", args.join(" "));
    let err = String::from_utf8(out.stderr).unwrap();
    let lines: Vec<&str> = err.lines().filter(|l| !l.trim().is_empty()).collect();
    assert_eq!(lines.len(), 1, "expected one error line, got {err:?}");
    (out.status.code().unwrap(), lines[0].to_string())
}

fn s(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// Serves `reply(body)` for every request until the test process exits.
fn serve(reply: impl Fn(&str) -> (u16, String) + Send + 'static) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap_or(0);
                }
            }
            let mut body = vec![0u8; len];
            let _ = reader.read_exact(&mut body);
            let (status, text) = reply(&String::from_utf8_lossy(&body));
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{text}",
                text.len()
            );
        }
    });
    format!("http://{addr}")
}

#[test]
fn evaluate_reproduces_prompted_novelty_scores() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures().join("gpt3_novelty");
    let out = dir.path().join("eval");
    let text = ok(&[
        "--out",
        &s(&out),
        "evaluate",
        "--predictions",
        &s(&f.join("predictions.csv")),
        "--gold",
        &s(&f.join("gold.csv")),
    ]);
    assert!(text.contains("novelty"), "{text}");
    let report = json(&out.join("report.json"));
    let novelty = &report["tasks"][0];
    assert_eq!(novelty["task"], "novelty");
    let f1 = |i: usize| novelty["labels"][i]["f1"].as_f64().unwrap();
    assert!((f1(0) - 0.671).abs() <= 5e-4 && (f1(1) - 0.277).abs() <= 5e-4, "{} {}", f1(0), f1(1));
    assert_eq!(novelty["confusion"]["counts"], serde_json::json!([[240, 54], [181, 45]]));
    assert!(report["combined"].is_null());
    for f in ["config.json", "inputs.json", "manifest.json", "report.txt"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "evaluate");
    assert_eq!(manifest["inputs"]["gold"]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn mix_takes_each_task_from_its_own_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    std::fs::write(
        &a,
        "instance_id,task,value,source,flagged\n\
         x1,novelty,negative,gpt3,false\nx1,validity,positive,gpt3,false\n\
         x2,novelty,negative,gpt3,false\nx2,validity,negative,gpt3,true\n\
         x3,novelty,negative,gpt3,false\nx3,validity,positive,gpt3,false\n",
    )
    .unwrap();
    std::fs::write(
        &b,
        "instance_id,task,value,source,flagged\n\
         x1,novelty,positive,mtl,false\nx1,validity,negative,mtl,false\n\
         x2,novelty,positive,mtl,false\nx2,validity,positive,mtl,false\n\
         x3,novelty,negative,mtl,false\nx3,validity,negative,mtl,false\n",
    )
    .unwrap();
    let out = dir.path().join("mix");
    ok(&["--out", &s(&out), "mix", "--validity", &s(&a), "--novelty", &s(&b)]);
    assert_eq!(
        std::fs::read_to_string(out.join("predictions.csv")).unwrap(),
        "instance_id,task,value,source,flagged\n\
         x1,validity,positive,gpt3,false\nx1,novelty,positive,mtl,false\n\
         x2,validity,negative,gpt3,true\nx2,novelty,positive,mtl,false\n\
         x3,validity,positive,gpt3,false\nx3,novelty,negative,mtl,false\n"
    );
    assert_eq!(json(&out.join("mix.json"))["tag"], "mix(gpt3,mtl)");
}

#[test]
fn mix_with_mismatched_ids_is_a_coverage_error() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    std::fs::write(&a, "instance_id,task,value,source,flagged\nx1,validity,positive,a,false\n").unwrap();
    std::fs::write(&b, "instance_id,task,value,source,flagged\nx2,novelty,positive,b,false\n").unwrap();
    let (code, line) = fails(&["--out", &s(&dir.path().join("m")), "mix", "--validity", &s(&a), "--novelty", &s(&b)]);
    assert_eq!(code, 4);
    assert!(line.starts_with("error[coverage]: "), "{line}");
}

const FAST: &str = r#"{
  "encoder": {"kind": "reference", "config": {"vocab_buckets": 256, "embed_dim": 8, "projection_dim": 8, "seed": 0}},
  "train": {"learning_rate": 0.01, "epochs": 2}
}"#;

fn small_split(dir: &Path) -> (PathBuf, PathBuf) {
    let f = fixtures().join("shared_task");
    let cut = |name: &str, n: usize| {
        let text = std::fs::read_to_string(f.join(format!("{name}.csv"))).unwrap();
        let head: Vec<&str> = text.lines().take(n + 1).collect();
        let p = dir.join(format!("{name}.csv"));
        std::fs::write(&p, head.join("\n") + "\n").unwrap();
        p
    };
    (cut("train", 120), cut("dev", 40))
}

#[test]
fn seed_sweep_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (train, dev) = small_split(dir.path());
    let cfg = dir.path().join("fast.json");
    std::fs::write(&cfg, FAST).unwrap();
    let sweep = |name: &str, runs: &str, par: &str| {
        let out = dir.path().join(name);
        ok(&[
            "--config", &s(&cfg), "--out", &s(&out), "--seed", "3", "seed-sweep", "--train", &s(&train), "--dev",
            &s(&dev), "--runs", runs, "--parallelism", par,
        ]);
        out
    };
    let a = sweep("a", "2", "1");
    let b = sweep("b", "2", "2");
    for f in ["seed_summary.json", "summary.txt", "seed-3/dev_report.json", "seed-4/checkpoint.json", "loss_mean.dat"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let summary = json(&a.join("seed_summary.json"));
    assert_eq!(summary["runs"], 2);
    let seeds: Vec<u64> = json(&a.join("seed-4/checkpoint.json"))["train_config"]["seed"].as_u64().into_iter().collect();
    assert_eq!(seeds, [4]);

    let c = sweep("c", "1", "1");
    let d = sweep("d", "1", "1");
    assert_eq!(
        std::fs::read(c.join("seed-3/dev_report.json")).unwrap(),
        std::fs::read(d.join("seed-3/dev_report.json")).unwrap()
    );
    assert!(json(&c.join("seed_summary.json")).is_null());
    assert_eq!(
        std::fs::read(a.join("seed-3/dev_report.json")).unwrap(),
        std::fs::read(c.join("seed-3/dev_report.json")).unwrap()
    );

    let rep = dir.path().join("rep");
    let text = ok(&["--out", &s(&rep), "report", &s(&a)]);
    assert!(text.contains("runs: 2"), "{text}");
    assert!(rep.join("run-0/loss_max.dat").is_file());
}

#[test]
fn rerunning_a_manifest_reproduces_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let (train, dev) = small_split(dir.path());
    let cfg = dir.path().join("fast.json");
    std::fs::write(&cfg, FAST).unwrap();
    let tr = dir.path().join("train");
    ok(&["--config", &s(&cfg), "--out", &s(&tr), "train", "--train", &s(&train), "--dev", &s(&dev)]);
    let p1 = dir.path().join("p1");
    ok(&[
        "--config", &s(&cfg), "--out", &s(&p1), "predict", "--checkpoint", &s(&tr.join("checkpoint.json")), "--input",
        &s(&dev),
    ]);
    let manifest = json(&p1.join("manifest.json"));
    let mut argv: Vec<String> = manifest["argv"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    let p2 = dir.path().join("p2");
    let at = argv.iter().position(|a| a == "--out").unwrap();
    argv[at + 1] = s(&p2);
    let args: Vec<&str> = argv[1..].iter().map(String::as_str).collect();
    ok(&args);
    assert_eq!(std::fs::read(p1.join("predictions.csv")).unwrap(), std::fs::read(p2.join("predictions.csv")).unwrap());
    assert_eq!(
        json(&p1.join("manifest.json"))["outputs"],
        json(&p2.join("manifest.json"))["outputs"]
    );
}

#[test]
fn baseline_and_contrastive_stages_run() {
    let dir = tempfile::tempdir().unwrap();
    let (train, dev) = small_split(dir.path());
    let cfg = dir.path().join("fast.json");
    std::fs::write(&cfg, FAST).unwrap();
    let base = dir.path().join("base");
    ok(&["--out", &s(&base), "baseline", "--train", &s(&train), "--input", &s(&dev), "--split", "dev"]);
    let preds = std::fs::read_to_string(base.join("predictions.csv")).unwrap();
    assert_eq!(preds.lines().count(), 1 + 2 * 40);
    assert!(preds.lines().skip(1).all(|l| l.contains(",svm,")));

    let con = dir.path().join("con");
    ok(&["--config", &s(&cfg), "--out", &s(&con), "contrastive-train", "--train", &s(&train)]);
    let ckpt = json(&con.join("checkpoint.json"));
    assert!(ckpt["contrastive_config"].is_object());
    let tr = dir.path().join("tr");
    ok(&[
        "--config", &s(&cfg), "--out", &s(&tr), "train", "--train", &s(&train), "--dev", &s(&dev), "--init",
        &s(&con.join("checkpoint.json")),
    ]);
    assert!(json(&tr.join("checkpoint.json"))["contrastive_config"].is_object());
}

#[test]
fn usage_and_config_errors_are_single_lines() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(&dir.path().join("o"));
    let (code, line) = fails(&["--out", &out, "evaluate", "--gold", "/nonexistent.csv"]);
    assert_eq!(code, 2);
    assert!(line.starts_with("error[usage]: "), "{line}");
    let (code, line) = fails(&["--out", &out, "frobnicate"]);
    assert_eq!(code, 2);
    assert!(line.starts_with("error[usage]: "), "{line}");
    let (code, _) = fails(&["--out", &out, "evaluate", "--predictions", "/nonexistent.csv", "--gold", "/nonexistent.csv"]);
    assert_eq!(code, 2);

    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"profile": "clteaml-9"}"#).unwrap();
    let (code, line) = fails(&["--config", &s(&cfg), "--out", &out, "report", &out]);
    assert_eq!(code, 3);
    assert!(line.starts_with("error[config]: "), "{line}");

    std::fs::write(&cfg, r#"{"seed": "#).unwrap();
    let (code, line) = fails(&["--config", &s(&cfg), "--out", &out, "report", &out]);
    assert_eq!(code, 4);
    assert!(line.starts_with("error[parse]: "), "{line}");

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "topic,Premise,Conclusion\nt,p,c\n").unwrap();
    let (code, line) = fails(&["--out", &out, "prepare-data", "--train", &s(&bad)]);
    assert_eq!(code, 4);
    assert!(line.starts_with("error[schema]: ") && line.contains("Validity"), "{line}");

    assert_eq!(argqual(&["--help"]).status.code(), Some(0));
}

fn external_config(dir: &Path, encoder: Value) -> PathBuf {
    let cfg = dir.join(format!("ext-{}.json", rand_suffix()));
    let body = serde_json::json!({"encoder": encoder, "train": {"learning_rate": 0.01, "epochs": 1}});
    std::fs::write(&cfg, body.to_string()).unwrap();
    cfg
}

fn rand_suffix() -> u64 {
    use std::sync::atomic::{AtomicU64, Ordering};
    static N: AtomicU64 = AtomicU64::new(0);
    N.fetch_add(1, Ordering::SeqCst)
}

#[test]
fn http_external_encoder_trains_heads_only() {
    let url = serve(|body| {
        let n = body.len() as f64;
        (200, format!("[{}, {}, 1.0, -0.5]", (n / 50.0).sin(), body.matches(' ').count() as f64 / 10.0))
    });
    let dir = tempfile::tempdir().unwrap();
    let (train, dev) = small_split(dir.path());
    let enc = serde_json::json!({"kind": "external", "transport": {"http": {"url": url}}, "dim": 4, "timeout_secs": 5});
    let cfg = external_config(dir.path(), enc);
    let tr = dir.path().join("tr");
    ok(&["--config", &s(&cfg), "--out", &s(&tr), "train", "--train", &s(&train), "--dev", &s(&dev)]);
    let ckpt = json(&tr.join("checkpoint.json"));
    assert!(ckpt["encoder_parameters"].is_null());
    assert_eq!(ckpt["heads"][0]["weight"].as_array().unwrap().len(), 2 * 4);
    let pr = dir.path().join("pr");
    ok(&["--out", &s(&pr), "predict", "--checkpoint", &s(&tr.join("checkpoint.json")), "--input", &s(&dev)]);

    let (code, line) = fails(&["--config", &s(&cfg), "--out", &s(&dir.path().join("c")), "contrastive-train", "--train", &s(&train)]);
    assert_eq!(code, 3);
    assert!(line.starts_with("error[config]: ") && line.contains("frozen"), "{line}");
}

#[test]
fn external_encoder_failures_are_classified() {
    let dir = tempfile::tempdir().unwrap();
    let (train, dev) = small_split(dir.path());
    let run = |enc: Value| {
        let cfg = external_config(dir.path(), enc);
        fails(&["--config", &s(&cfg), "--out", &s(&dir.path().join("x")), "train", "--train", &s(&train), "--dev", &s(&dev)])
    };

    // Bind then drop so nothing listens on the port.
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let (code, line) = run(serde_json::json!({
        "kind": "external", "transport": {"http": {"url": format!("http://127.0.0.1:{port}/embed")}}, "dim": 4, "timeout_secs": 2
    }));
    assert_eq!(code, 3);
    assert!(line.starts_with("error[config]: "), "{line}");

    let url = serve(|_| (200, "[1.0, 2.0, 3.0]".into()));
    let (code, line) = run(serde_json::json!({"kind": "external", "transport": {"http": {"url": url}}, "dim": 4}));
    assert_eq!(code, 3);
    assert!(line.starts_with("error[dimension]: "), "{line}");
}

#[test]
fn subprocess_external_encoder() {
    let dir = tempfile::tempdir().unwrap();
    let (train, dev) = small_split(dir.path());
    let script = r#"while IFS= read -r line; do echo "0.5 ${#line} -1"; done"#;
    let enc = serde_json::json!({
        "kind": "external", "transport": {"subprocess": {"command": "sh", "args": ["-c", script]}}, "dim": 3
    });
    let cfg = external_config(dir.path(), enc);
    let tr = dir.path().join("tr");
    ok(&["--config", &s(&cfg), "--out", &s(&tr), "train", "--train", &s(&train), "--dev", &s(&dev)]);
    assert_eq!(json(&tr.join("history.json"))["history"].as_array().unwrap().len(), 1);
}

#[test]
fn http_completion_provider_records_then_replays() {
    let url = serve(|body| {
        let v: Value = serde_json::from_str(body).unwrap();
        let prompt = v["prompt"].as_str().unwrap();
        let target = prompt.rsplit("\n\n").next().unwrap();
        let text = if target.contains("Reactors") { " Yes" } else { " no" };
        (200, serde_json::json!({"choices": [{"text": text}]}).to_string())
    });
    let dir = tempfile::tempdir().unwrap();
    let ranking = fixtures().join("prompt/ranking.csv");
    let cache = dir.path().join("cache");
    let cfg = dir.path().join("p.json");
    std::fs::write(
        &cfg,
        serde_json::json!({
            "prompt": {"kind": "http-openai-compatible", "base_url": url, "api_key_env": "ARGQUAL_TEST_NO_KEY",
                       "cache_dir": s(&cache), "max_retries": 0}
        })
        .to_string(),
    )
    .unwrap();
    let live = dir.path().join("live");
    ok(&[
        "--config", &s(&cfg), "--out", &s(&live), "prompt-predict", "--train", &s(&ranking), "--input", &s(&ranking),
        "--task", "validity",
    ]);
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 8);
    let replay = dir.path().join("replay");
    ok(&[
        "--config", &s(&cfg), "--out", &s(&replay), "prompt-predict", "--train", &s(&ranking), "--input",
        &s(&ranking), "--task", "validity", "--provider", "replay-only",
    ]);
    let a = std::fs::read_to_string(live.join("predictions.csv")).unwrap();
    assert_eq!(a, std::fs::read_to_string(replay.join("predictions.csv")).unwrap());
    assert_eq!(a.matches(",positive,").count(), 2, "{a}");

    let (code, line) = fails(&[
        "--out", &s(&dir.path().join("miss")), "prompt-predict", "--train", &s(&ranking), "--input", &s(&ranking),
        "--task", "novelty", "--provider", "replay-only", "--cache-dir", &s(&cache),
    ]);
    assert_eq!(code, 6);
    assert!(line.starts_with("error[cache-miss]: "), "{line}");
}

#[test]
fn prepare_data_reports_fixture_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures().join("shared_task");
    let out = dir.path().join("prep");
    let text = ok(&[
        "--out",
        &s(&out),
        "prepare-data",
        "--train",
        &s(&f.join("train.csv")),
        "--dev",
        &s(&f.join("dev.csv")),
        "--test",
        &s(&f.join("test.csv")),
    ]);
    assert!(text.contains("331/18/296/105"), "{text}");
    let stats = json(&out.join("stats.json"));
    assert_eq!(stats["topic_overlap"], serde_json::json!([["train", "dev", 0], ["train", "test", 0], ["dev", "test", 8]]));
    assert_eq!(
        std::fs::read(out.join("dev.csv")).unwrap(),
        std::fs::read(f.join("dev.csv")).unwrap()
    );
}
