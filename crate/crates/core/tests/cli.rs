use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use curriculum_core::curriculum::MetricsLog;
use curriculum_core::data::{write_mnist_idx, Dataset, Shape, Split};

const FIXED: &str = r#"
[dataset]
name = "mnist"
[model]
hidden = 8
[curriculum]
kind = "fixed"
scorer = "stddev"
direction = "plus"
pace = { kind = "exponential", starting_fraction = 0.2, inc = 1.9, step_length = 10 }
[train]
batch_size = 10
total_steps = 40
seed = 1
eval_every = 10
lr = { lr0 = 0.1, decay_factor = 1.5, decay_step = 20 }
"#;

const DCL: &str = r#"
[dataset]
name = "mnist"
[model]
hidden = 8
[curriculum]
kind = "dcl"
k = 0.5
[train]
batch_size = 10
total_steps = 30
seed = 1
eval_every = 10
lr = { lr0 = 0.1, decay_factor = 1.5, decay_step = 20 }
"#;

/// Class-dependent blobs on a noisy 28x28 background.
fn synthetic_mnist(n: usize, seed: u64, split: Split) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut images = Vec::with_capacity(n * 784);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 10;
        for p in 0..784 {
            let (r, c) = (p / 28, p % 28);
            let on = r / 3 == label && c > 4 && c < 24;
            images.push(if on {
                rng.gen_range(150..=255)
            } else {
                rng.gen_range(0..60)
            });
        }
        labels.push(label);
    }
    Dataset::new("mnist", split, Shape::new(28, 28, 1), 10, images, labels).unwrap()
}

struct Sandbox {
    dir: tempfile::TempDir,
}

impl Sandbox {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mnist = dir.path().join("data/mnist");
        fs::create_dir_all(&mnist).unwrap();
        write_mnist_idx(
            &synthetic_mnist(200, 1, Split::Train),
            mnist.join("train-images-idx3-ubyte"),
            mnist.join("train-labels-idx1-ubyte.gz"),
        )
        .unwrap();
        write_mnist_idx(
            &synthetic_mnist(100, 2, Split::Test),
            mnist.join("t10k-images-idx3-ubyte.gz"),
            mnist.join("t10k-labels-idx1-ubyte"),
        )
        .unwrap();
        fs::write(dir.path().join("fixed.toml"), FIXED).unwrap();
        fs::write(dir.path().join("dcl.toml"), DCL).unwrap();
        Self { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_curriculum"))
            .args(args)
            .env("CURRICULUM_DATA_DIR", self.path("data"))
            .env("RAYON_NUM_THREADS", "2")
            .current_dir(self.dir.path())
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

/// Every file under `dir` except the manifest, keyed by relative path.
fn primary_artifacts(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "manifest.json" {
                files.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    files
}

fn assert_same_artifacts(a: &Path, b: &Path) {
    let (x, y) = (primary_artifacts(a), primary_artifacts(b));
    assert!(!x.is_empty());
    assert_eq!(x.keys().collect::<Vec<_>>(), y.keys().collect::<Vec<_>>());
    for (k, v) in &x {
        assert!(v == &y[k], "{} differs between reruns", k.display());
    }
}

#[test]
fn reruns_produce_identical_artifacts() {
    let s = Sandbox::new();
    for tag in ["a", "b"] {
        s.ok(&["score", "--config", "fixed.toml", "--out", &format!("score-{tag}")]);
        s.ok(&[
            "train",
            "--config",
            "fixed.toml",
            "--out",
            &format!("train-{tag}"),
            "--dump-plan",
            "--track-per-example",
        ]);
        s.ok(&[
            "dcl",
            "--config",
            "dcl.toml",
            "--out",
            &format!("dcl-{tag}"),
            "--train-reference",
            "--k",
            "0.5,1",
        ]);
        s.ok(&[
            "analyze",
            "correlation",
            "--rho",
            "dcl-a/rho/dcl-plus-k0.5",
            "--out",
            &format!("corr-{tag}"),
        ]);
        s.ok(&[
            "analyze",
            "learned",
            "--run",
            "train-a",
            "--out",
            &format!("learned-{tag}"),
        ]);
        s.ok(&[
            "analyze",
            "table1",
            "--datasets",
            "mnist",
            "--b",
            "10",
            "--out",
            &format!("t1-{tag}"),
        ]);
    }
    for cmd in ["score", "train", "dcl", "corr", "learned", "t1"] {
        assert_same_artifacts(&s.path(&format!("{cmd}-a")), &s.path(&format!("{cmd}-b")));
    }

    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(s.path("train-a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "train");
    assert!(manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .any(|a| a == "metrics.csv"));

    for name in [
        "metrics-vanilla.csv",
        "metrics-dcl-plus-k0.5.csv",
        "metrics-dcl-minus-k1.csv",
        "reference.ckpt",
    ] {
        assert!(s.path("dcl-a").join(name).is_file(), "missing {name}");
    }
    // pace 100 with b = 10: ten steps per epoch, three epochs
    assert_eq!(fs::read_dir(s.path("dcl-a/rho/dcl-plus-k0.5")).unwrap().count(), 3);
}

#[test]
fn primary_csvs_embed_the_config() {
    let s = Sandbox::new();
    s.ok(&["train", "--config", "fixed.toml", "--out", "t", "--seed", "7"]);
    let text = fs::read_to_string(s.path("t/metrics.csv")).unwrap();
    let header: Vec<&str> = text.lines().take_while(|l| l.starts_with("# ")).collect();
    assert!(header.iter().any(|l| l.contains("kind = \"fixed\"")));
    assert!(header.iter().any(|l| l.contains("seed = 7")));
    let rows = MetricsLog::read_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.iter().map(|r| r.step).collect::<Vec<_>>(), [0, 10, 20, 30, 40]);
    let cfg = fs::read_to_string(s.path("t/config.toml")).unwrap();
    assert!(cfg.contains("seed = 7"));
}

#[test]
fn seed_sweeps_write_one_run_per_seed_and_an_aggregate() {
    let s = Sandbox::new();
    s.ok(&["train", "--config", "fixed.toml", "--out", "sweep", "--seeds", "3"]);
    for j in 0..3 {
        assert!(s.path(&format!("sweep/seed-{j}/metrics.csv")).is_file());
    }
    let agg = fs::read_to_string(s.path("sweep/aggregate.csv")).unwrap();
    let body: Vec<&str> = agg.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(body[0].starts_with("step,n,train_loss_mean,train_loss_ste"));
    assert_eq!(body.len(), 6);
    assert!(body[1..].iter().all(|l| l.split(',').nth(1) == Some("3")));
    assert_ne!(
        fs::read(s.path("sweep/seed-0/metrics.csv")).unwrap(),
        fs::read(s.path("sweep/seed-1/metrics.csv")).unwrap()
    );
}

#[test]
fn dumped_plan_stays_inside_the_pace_prefix() {
    let s = Sandbox::new();
    s.ok(&["train", "--config", "fixed.toml", "--out", "p", "--dump-plan"]);
    let scores = fs::read_to_string(s.path("p/scores.csv")).unwrap();
    let mut rank_of = BTreeMap::new();
    let mut lines = scores.lines().filter(|l| !l.starts_with('#'));
    let cols: Vec<&str> = lines.next().unwrap().split(',').collect();
    let (ix, rk) = (
        cols.iter().position(|c| *c == "index").unwrap(),
        cols.iter().position(|c| *c == "rank").unwrap(),
    );
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        rank_of.insert(f[ix].parse::<usize>().unwrap(), f[rk].parse::<usize>().unwrap());
    }
    let plan = fs::read_to_string(s.path("p/plan.csv")).unwrap();
    let mut lines = plan.lines().filter(|l| !l.starts_with('#'));
    let cols: Vec<&str> = lines.next().unwrap().split(',').collect();
    let (st, ex) = (
        cols.iter().position(|c| *c == "step").unwrap(),
        cols.iter().position(|c| *c == "index").unwrap(),
    );
    let mut seen = 0;
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        let step: usize = f[st].parse().unwrap();
        let pace = ((0.2 * 1.9f64.powi((step / 10) as i32)).min(1.0) * 200.0).floor() as usize;
        assert!(
            rank_of[&f[ex].parse::<usize>().unwrap()] < pace,
            "step {step} leaves the prefix"
        );
        seen += 1;
    }
    assert_eq!(seen, 40 * 10);
}

#[test]
fn exit_codes() {
    let s = Sandbox::new();
    // usage and config errors
    assert_eq!(
        s.run(&["score", "--config", "fixed.toml", "--scorer", "bogus"])
            .status
            .code(),
        Some(2)
    );
    fs::write(s.path("bad.toml"), FIXED.replace("hidden = 8", "hidden = 8\nwidth = 3")).unwrap();
    assert_eq!(
        s.run(&["train", "--config", "bad.toml", "--out", "x"]).status.code(),
        Some(2)
    );

    // divergence still leaves partial metrics behind
    fs::write(s.path("huge.toml"), FIXED.replace("lr0 = 0.1", "lr0 = 1e300")).unwrap();
    let out = s.run(&["train", "--config", "huge.toml", "--out", "div"]);
    assert_eq!(out.status.code(), Some(3));
    let rows = MetricsLog::read_csv(fs::read_to_string(s.path("div/metrics.csv")).unwrap().as_bytes()).unwrap();
    assert_eq!(rows[0].step, 0);

    // missing or mismatched reference
    assert_eq!(
        s.run(&["dcl", "--config", "dcl.toml", "--out", "d1"]).status.code(),
        Some(4)
    );
    assert_eq!(
        s.run(&["dcl", "--config", "dcl.toml", "--out", "d2", "--reference", "nope.ckpt"])
            .status
            .code(),
        Some(4)
    );
    s.ok(&[
        "dcl",
        "--config",
        "dcl.toml",
        "--out",
        "d3",
        "--train-reference",
        "--k",
        "1",
        "--variant",
        "plus",
    ]);
    fs::write(s.path("wide.toml"), DCL.replace("hidden = 8", "hidden = 9")).unwrap();
    assert_eq!(
        s.run(&[
            "dcl",
            "--config",
            "wide.toml",
            "--out",
            "d4",
            "--reference",
            "d3/reference.ckpt"
        ])
        .status
        .code(),
        Some(4)
    );
    s.ok(&[
        "dcl",
        "--config",
        "dcl.toml",
        "--out",
        "d5",
        "--reference",
        "d3/reference.ckpt",
        "--variant",
        "minus",
    ]);

    // missing inputs
    fs::write(s.path("fashion.toml"), FIXED.replace("\"mnist\"", "\"fashion-mnist\"")).unwrap();
    assert_eq!(
        s.run(&["score", "--config", "fashion.toml", "--out", "f"])
            .status
            .code(),
        Some(5)
    );
    assert_eq!(s.run(&["train", "--config", "nowhere.toml"]).status.code(), Some(5));
    s.ok(&["train", "--config", "fixed.toml", "--out", "nocorr"]);
    assert_eq!(s.run(&["analyze", "learned", "--run", "nocorr"]).status.code(), Some(5));
    let out = Command::new(env!("CARGO_BIN_EXE_curriculum"))
        .args(["score", "--config", "fixed.toml", "--out", "nodata"])
        .env_remove("CURRICULUM_DATA_DIR")
        .current_dir(s.dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(5));
}
