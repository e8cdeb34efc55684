use std::path::Path;
use std::process::{Command, Output};

fn opnorm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opnorm")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("opnorm-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn report(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn default_commands_pass() {
    for args in [
        vec!["norm"],
        vec!["norm", "--kind", "pstar"],
        vec!["ubt"],
        vec!["extend", "--mode", "set", "--pairs", "all"],
        vec!["extend", "--mode", "posneg"],
        vec!["extend", "--mode", "hilbert"],
        vec!["extend", "--mode", "linear"],
        vec!["bd", "metric"],
        vec!["bd", "algebra"],
        vec!["bd", "complete"],
        vec!["distrib", "--functional", "dderiv:k=1"],
        vec!["fourier", "--check", "l1c0"],
        vec!["fourier", "--check", "schwartz"],
    ] {
        let out = opnorm(&args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let r = report(&out);
        assert_eq!(r["seed"], 20240611);
        assert!(r["command"].as_str().unwrap().starts_with("opnorm "));
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = scratch("config");
    for text in ["[metric]\na = 0.5\n", "sed = 3\n", "[operator]\nexpr = \"x +\"\n", "[operator]\nkind = \"r\"\n"] {
        let cfg = write_config(&dir, text);
        let out = opnorm(&["--config", &cfg, "norm"]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));
    }
    assert_eq!(opnorm(&["distrib", "--functional", "delta:q=1"]).status.code(), Some(2));
    assert_eq!(opnorm(&["extend", "--mode", "complex"]).status.code(), Some(2));
    assert_eq!(opnorm(&["--tol-exact", "2", "norm"]).status.code(), Some(2));
    assert_eq!(opnorm(&["suite", "--checks", "16"]).status.code(), Some(2));
}

#[test]
fn failing_checks_exit_with_one() {
    let dir = scratch("fail");
    // opposite points make the positive part violate its bound
    let cfg = write_config(
        &dir,
        "[extend]\npoints = [[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0]]\nvalues = [0.0, 1.0, -1.0]\ntargets = [[1.0, 1.0]]\n",
    );
    assert_eq!(opnorm(&["--config", &cfg, "extend", "--mode", "posneg"]).status.code(), Some(1));
}

#[test]
fn reports_are_reproducible_and_carry_the_seed() {
    let dir = scratch("repro");
    let (a, b) = (dir.join("a"), dir.join("b"));
    let run = |out: &Path| {
        opnorm(&["--seed", "5", "--out", out.to_str().unwrap(), "suite", "--checks", "4,8,14,15"])
    };
    let (ra, rb) = (run(&a), run(&b));
    assert_eq!(ra.status.code(), Some(0), "{}", String::from_utf8_lossy(&ra.stderr));
    let strip = |o: &Output| {
        let mut v = report(o);
        let obj = v.as_object_mut().unwrap();
        obj.remove("timing_ms");
        obj.remove("command");
        serde_json::to_string(&v).unwrap()
    };
    assert_eq!(strip(&ra), strip(&rb));
    let mut csvs = 0;
    for entry in std::fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        if !name.to_string_lossy().ends_with(".csv") {
            continue;
        }
        csvs += 1;
        let left = std::fs::read_to_string(a.join(&name)).unwrap();
        assert_eq!(left, std::fs::read_to_string(b.join(&name)).unwrap());
        assert!(left.starts_with("seed,"));
        assert!(left.lines().skip(1).all(|l| l.starts_with("5,")));
    }
    assert!(csvs > 0);
    assert!(std::fs::read_to_string(a.join("report.json")).unwrap().contains("\"seed\": 5"));
}

#[test]
fn verdicts_do_not_depend_on_the_seed() {
    let verdicts = |seed: &str| {
        let r = report(&opnorm(&["--seed", seed, "suite", "--checks", "4,8,9,14"]));
        r["checks"].as_array().unwrap().iter().map(|c| c["passed"].clone()).collect::<Vec<_>>()
    };
    assert_eq!(verdicts("1"), verdicts("2"));
}
