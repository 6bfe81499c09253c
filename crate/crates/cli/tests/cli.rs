use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rabi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rabi")).args(args).output().unwrap()
}

fn rabi_env(args: &[&str], key: &str, val: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rabi")).args(args).env(key, val).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

const EXACT: &str = r#"{"mode":"H0","a1":1.5,"N":2,"v":[0.0,0.0]}"#;
const BENCH: &str = r#"{"mode":"H0","a1":1.0,"N":2,"v":[-0.25,0.25]}"#;

#[test]
fn spectrum_of_exact_model() {
    let d = tempfile::tempdir().unwrap();
    let m = write(d.path(), "m.json", EXACT);
    let out = d.path().join("s.csv");
    let o = rabi(&["spectrum", "--model", s(&m), "--n-lo", "1", "--n-hi", "50", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ls: Vec<f64> = column(&out, "lambda").iter().map(|x| x.parse().unwrap()).collect();
    assert_eq!(ls.len(), 50);
    for (i, l) in ls.iter().enumerate() {
        assert!((l - ((i + 1) as f64 - 2.25)).abs() < 1e-6);
    }
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("n,lambda,trunc_size,trunc_err\n"));
    assert!(!text.contains('\r'));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("s.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "spectrum");
    assert!(manifest["tolerances"]["bisection"].is_number());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    let m = write(d.path(), "m.json", BENCH);
    let a = d.path().join("a.csv");
    let b = d.path().join("b.csv");
    for (out, jobs) in [(&a, "1"), (&b, "3")] {
        let o = rabi(&["--jobs", jobs, "spectrum", "--model", s(&m), "--n-lo", "10", "--n-hi", "60", "--out", s(out), "--trunc-policy", "fixed:400"]);
        assert!(o.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn usage_and_domain_and_io_exit_codes() {
    let o = rabi(&["spectrum", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    let d = tempfile::tempdir().unwrap();
    let m = write(d.path(), "m.json", EXACT);
    let out = d.path().join("x.csv");
    let o = rabi(&["spectrum", "--model", s(&m), "--n-lo", "0", "--n-hi", "5", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));

    let bad = write(d.path(), "bad.json", r#"{"mode":"H0","a1":1.0,"N":2,"v":[0.3,0.3]}"#);
    let o = rabi(&["spectrum", "--model", s(&bad), "--n-lo", "1", "--n-hi", "5", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));

    let o = rabi(&["spectrum", "--model", "/nonexistent/m.json", "--n-lo", "1", "--n-hi", "5", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));

    let o = rabi(&["spectrum", "--model", s(&m), "--n-lo", "1", "--n-hi", "5", "--out", s(&out), "--trunc-policy", "sometimes"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_three_term_slope() {
    let d = tempfile::tempdir().unwrap();
    let m = write(d.path(), "m.json", BENCH);
    let sp = d.path().join("s.csv");
    let o = rabi(&["spectrum", "--model", s(&m), "--n-lo", "200", "--n-hi", "2000", "--out", s(&sp)]);
    assert!(o.status.success());
    let out = d.path().join("r.csv");
    let o = rabi(&["compare", "--model", s(&m), "--spectrum", s(&sp), "--source", "E0", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fit: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(fit["slope"].as_f64().unwrap() <= -0.4, "{fit}");
    assert_eq!(column(&out, "resid_E").len(), 1801);
    assert!(column(&out, "pred_GRWA").iter().all(|x| x.is_empty()));
}

#[test]
fn recover_from_rabi_spectra() {
    let d = tempfile::tempdir().unwrap();
    let plus = write(d.path(), "p.json", r#"{"rabi":{"omega":1.0,"E":0.5,"g":1.0,"hbar":1.0},"sign":"+"}"#);
    let minus = write(d.path(), "q.json", r#"{"rabi":{"omega":1.0,"E":0.5,"g":1.0,"hbar":1.0},"sign":"-"}"#);
    let (ps, ms) = (d.path().join("p.csv"), d.path().join("q.csv"));
    for (m, o) in [(&plus, &ps), (&minus, &ms)] {
        let r = rabi(&["spectrum", "--model", s(m), "--n-lo", "200", "--n-hi", "1200", "--out", s(o)]);
        assert!(r.status.success());
    }
    let out = d.path().join("params.json");
    let o = rabi(&["recover", "--spectrum", s(&ps), "--spectrum-minus", s(&ms), "--hbar", "1", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    for (k, truth) in [("omega", 1.0), ("E", 0.5), ("g", 1.0)] {
        let x = v[k].as_f64().unwrap();
        assert!((x - truth).abs() / truth < 2e-2, "{k} = {x}");
    }
    assert!(v["rms"].is_number());
}

#[test]
fn recover_reads_branch_column_from_one_file() {
    let d = tempfile::tempdir().unwrap();
    let mut text = String::from("n,lambda,branch\n");
    for b in ['+', '-'] {
        for n in 50..=400u64 {
            text.push_str(&format!("{n},{:.16e},{b}\n", -0.5 + n as f64 - 0.64));
        }
    }
    let p = write(d.path(), "both.csv", &text);
    let out = d.path().join("params.json");
    let o = rabi(&["recover", "--spectrum", s(&p), "--hbar", "1", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!((v["g"].as_f64().unwrap() - 0.8).abs() < 1e-9);
    assert!(v["E"].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn gn_uses_cache() {
    let d = tempfile::tempdir().unwrap();
    let cache = d.path().join("cache");
    let m = write(d.path(), "m.json", BENCH);
    let (a, b) = (d.path().join("a.csv"), d.path().join("b.csv"));
    for out in [&a, &b] {
        let o = rabi_env(
            &["gn", "--model", s(&m), "--n-list", "100,200", "--method", "exp", "--k-radius", "2", "--out", s(out)],
            "RABI_CACHE_DIR",
            &cache,
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read_dir(&cache).unwrap().count(), 8);
    assert_eq!(column(&a, "k").len(), 10);
    let o = rabi(&["gn", "--model", s(&m), "--n-list", "100", "--method", "oscillatory", "--out", s(&a)]);
    assert!(o.status.success());
}

#[test]
fn trace_and_phase_and_sweep() {
    let d = tempfile::tempdir().unwrap();
    let m = write(d.path(), "m.json", BENCH);
    let t = d.path().join("t.csv");
    let o = rabi(&["trace-check", "--model", s(&m), "--n-list", "100,200", "--chi", "gaussian:1", "--out", s(&t)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(column(&t, "value").len(), 2);

    let n3 = write(d.path(), "n3.json", r#"{"mode":"H12","a1":1.0,"gamma":0.5,"N":3,"v":[-0.5,-0.5,1.0]}"#);
    for suite in ["lemma63", "lemma82", "psi1"] {
        let p = d.path().join(format!("{suite}.csv"));
        let o = rabi(&["phase-check", "--model", s(&n3), "--suite", suite, "--samples", "7", "--seed", "3", "--out", s(&p)]);
        assert!(o.status.success(), "{suite}: {}", String::from_utf8_lossy(&o.stderr));
        let pass = column(&p, "pass");
        assert!(!pass.is_empty() && pass.iter().all(|x| x == "true"), "{suite}");
    }

    let fam = write(
        d.path(),
        "f.json",
        r#"{"kind":"stationary","eta0":0.3,"symbols":[{"kind":"constant","re":1.0,"im":0.0}]}"#,
    );
    let o_path = d.path().join("o.csv");
    let o = rabi(&["oscillatory-sweep", "--family", s(&fam), "--mu-grid", "10,100", "--out", s(&o_path)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ratios: Vec<f64> = column(&o_path, "ratio").iter().map(|x| x.parse().unwrap()).collect();
    assert!(ratios.iter().all(|r| *r <= 1.0));
}
