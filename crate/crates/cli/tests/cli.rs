use std::path::Path;
use std::process::{Command, Output};

fn growthgap(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_growthgap"))
        .args(args)
        .current_dir(dir)
        .env_remove("GROWTHGAP_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

#[test]
fn arith_golden_mean_has_fibonacci_denominators() {
    let d = tempfile::tempdir().unwrap();
    let o = growthgap(d.path(), &["arith", "--alpha", "surd:1,-1,5,2", "--depth", "30", "--json", "out.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(d.path(), "out.json");
    let q: Vec<u64> = v["result"]["q"].as_array().unwrap().iter().map(|x| x.as_str().unwrap().parse().unwrap()).collect();
    let (mut a, mut b) = (1u64, 1u64);
    assert_eq!(&q[..2], &[1, 1]);
    for &x in &q[2..] {
        let c = a + b;
        assert_eq!(x, c);
        (a, b) = (b, c);
    }
    assert_eq!(v["status"], "ok");
    assert_eq!(v["seed"], 0);
    assert!(d.path().join("out.timings.json").exists());
    // stdout carries the CSV once the summary went to a file
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("n,q_n,"));
}

#[test]
fn certify_standard_map_then_verify() {
    let d = tempfile::tempdir().unwrap();
    let args = ["certify", "--map", "standard-map", "--k", "6", "--q", "100000", "--a", "auto", "--out", "cert.json", "--json", "s.json"];
    let o = growthgap(d.path(), &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(d.path(), "s.json");
    assert_eq!(s["status"], "ok");
    assert_eq!(s["result"]["outcome"]["outcome"], "certified");
    let o = growthgap(d.path(), &["verify-cert", "cert.json", "--json", "v.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(d.path(), "v.json")["result"]["kind"], "hyperbolicity");

    let mut cert = json(d.path(), "cert.json");
    cert["degree"] = serde_json::json!(-cert["degree"].as_i64().unwrap());
    std::fs::write(d.path().join("bad.json"), cert.to_string()).unwrap();
    let o = growthgap(d.path(), &["verify-cert", "bad.json", "--json", "bad-summary.json"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(d.path(), "bad-summary.json")["status"], "error");
}

#[test]
fn rotation_is_not_found() {
    let d = tempfile::tempdir().unwrap();
    let o = growthgap(d.path(), &["certify", "--map", "rigid-rotation", "--eps", "0.1", "--q", "2000", "--json", "s.json"]);
    assert_eq!(code(&o), 2);
    assert_eq!(json(d.path(), "s.json")["status"], "not-found");
    let o = growthgap(d.path(), &["scan", "--map", "rigid-rotation", "--eps", "0.1", "--q-seq", "2,4,16", "--json", "g.json"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn free_disc_is_deterministic_across_threads() {
    let args = ["rigidity", "free-disc", "--map", "rigid-rotation", "--eps", "0.3", "--trials", "100000", "--seed", "7"];
    let mut outs = Vec::new();
    for threads in ["1", "3"] {
        let d = tempfile::tempdir().unwrap();
        let mut a = args.to_vec();
        a.extend(["--csv", "fd.csv", "--json", "fd.json", "--threads", threads]);
        let o = growthgap(d.path(), &a);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        outs.push((read(d.path(), "fd.csv"), read(d.path(), "fd.json")));
    }
    assert_eq!(outs[0], outs[1]);
    let v: serde_json::Value = serde_json::from_str(&outs[0].1).unwrap();
    let (sup, cf) = (v["result"]["sup_measure"].as_f64().unwrap(), v["result"]["closed_form"].as_f64().unwrap());
    assert!((sup - cf).abs() < 0.05 * cf);
}

#[test]
fn printed_config_reproduces_the_run() {
    let flags = ["rigidity", "kac", "--map", "rigid-rotation", "--eps", "0.25", "--center", "0.5,0.0", "--disc-radius", "0.05"];
    let d = tempfile::tempdir().unwrap();
    let mut a = flags.to_vec();
    a.extend(["--samples", "500", "--horizon", "100", "--seed", "4", "--json", "k.json"]);
    assert_eq!(code(&growthgap(d.path(), &a)), 0);
    a.push("--print-config");
    let o = growthgap(d.path(), &a);
    assert_eq!(code(&o), 0);
    let e = tempfile::tempdir().unwrap();
    std::fs::write(e.path().join("exp.toml"), &o.stdout).unwrap();
    let o = growthgap(e.path(), &["run", "--config", "exp.toml"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(d.path(), "k.json"), read(e.path(), "k.json"));
    let v = json(e.path(), "k.json");
    assert_eq!(v["result"]["min_return"], 4);
    assert_eq!(v["result"]["max_return"], 4);
}

#[test]
fn config_with_unknown_key_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let text = "rng_seed = 1\ncolour = \"red\"\n[run]\noperation = \"arith\"\n[run.params]\nalpha = \"golden\"\ndepth = 5\n";
    std::fs::write(d.path().join("bad.toml"), text).unwrap();
    let o = growthgap(d.path(), &["run", "--config", "bad.toml"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn usage_errors_exit_nonzero() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&growthgap(d.path(), &["certify", "--q", "100"])), 1);
    assert_eq!(code(&growthgap(d.path(), &["arith"])), 1);
    assert_eq!(code(&growthgap(d.path(), &["scan", "--map", "standard-map", "--k", "1"])), 1);
    assert_eq!(code(&growthgap(d.path(), &["--help"])), 0);
}

#[test]
fn budget_truncation_is_marked() {
    let d = tempfile::tempdir().unwrap();
    let args = ["scan", "--map", "standard-map", "--k", "1", "--n-list", "1,10,100000", "--max-iterations", "100000", "--json", "g.json"];
    let o = growthgap(d.path(), &args);
    assert_eq!(code(&o), 0);
    let v = json(d.path(), "g.json");
    assert!(v["truncated"].as_str().unwrap().contains("100000"));
    assert_eq!(v["result"].as_array().unwrap().len(), 2);
}
