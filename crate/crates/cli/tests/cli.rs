use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_basinscope"))
}

fn system(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../systems")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn write_spec(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn coeffs_dump_has_one_line_per_multi_index() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("vdp.txt");
    let o = run(&[
        "coeffs",
        system("vanderpol.json").to_str().unwrap(),
        "--degree",
        "20",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dump = std::fs::read_to_string(&out).unwrap();
    let want: usize = (2..=20).map(|m| m + 1).sum();
    assert_eq!(dump.lines().count(), want);
    let summary = stdout_json(&o);
    assert!(summary["residual_max"].as_f64().unwrap() < 1e-8);
    assert_eq!(summary["coefficient_lines"], want);
}

#[test]
fn example_one_quadratic_coefficient() {
    let o = run(&["coeffs", system("example1.json").to_str().unwrap(), "--degree", "4"]);
    assert!(o.status.success());
    let dump = String::from_utf8(o.stdout).unwrap();
    let line = dump.lines().next().unwrap();
    let fields: Vec<&str> = line.split_whitespace().collect();
    assert_eq!(&fields[..2], &["2", "0"]);
    assert_eq!(fields[2].parse::<f64>().unwrap(), 0.5);
    assert_eq!(fields[3].parse::<f64>().unwrap(), 0.0);
    assert_eq!(line, "2 0  5.0000000000000000e-01  0.0000000000000000e+00");
}

#[test]
fn error_exit_codes() {
    let o = run(&["coeffs", system("unstable1d.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("ERROR 2:"));

    let dir = tempfile::tempdir().unwrap();
    let jordan = write_spec(
        dir.path(),
        "jordan.json",
        r#"{"dim":2,"equations":[[{"coeff":-1.0,"exps":[1,0]},{"coeff":1.0,"exps":[0,1]}],[{"coeff":-1.0,"exps":[0,1]}]]}"#,
    );
    let o = run(&["coeffs", jordan.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("ERROR 3:"));

    let broken = write_spec(dir.path(), "broken.json", r#"{"dim":1,"equations":"#);
    let o = run(&["coeffs", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    let constant = write_spec(
        dir.path(),
        "constant.json",
        r#"{"dim":1,"equations":[[{"coeff":1.0,"exps":[0]}]]}"#,
    );
    assert_eq!(run(&["coeffs", constant.to_str().unwrap()]).status.code(), Some(4));
    assert_eq!(run(&["nonsense"]).status.code(), Some(4));

    let o = bin()
        .args(["coeffs", system("linear1d.json").to_str().unwrap()])
        .env("BASINSCOPE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn region_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run_into = |sub: &str| {
        let out = dir.path().join(sub);
        let o = bin()
            .args([
                "region",
                system("vanderpol.json").to_str().unwrap(),
                "--resolution",
                "128",
                "--out",
                out.to_str().unwrap(),
            ])
            .env("BASINSCOPE_THREADS", "2")
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run_into("a"), run_into("b"));
    for f in ["grid.csv", "summary.json", "region.svg"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f} differs"
        );
    }
    let csv = std::fs::read_to_string(a.join("grid.csv")).unwrap();
    assert!(csv.starts_with("x1,x2,Vp,Vdot,status,in_Gp,in_Npc\n"));
    assert_eq!(csv.lines().count(), 128 * 128 + 1);
    let svg = std::fs::read_to_string(a.join("region.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn region_with_oracle_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "region",
        system("vanderpol.json").to_str().unwrap(),
        "--resolution",
        "100",
        "--oracle-boundary",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let summary = stdout_json(&o);
    assert!(summary["oracle_boundary_points"].as_u64().unwrap() > 50);
    let csv = std::fs::read_to_string(dir.path().join("boundary.csv")).unwrap();
    assert!(csv.starts_with("x1,x2\n"));
    let svg = std::fs::read_to_string(dir.path().join("region.svg")).unwrap();
    assert!(svg.contains("<polyline"));
}

#[test]
fn example_two_csv_inside_unit_disk() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "region",
        system("example2.json").to_str().unwrap(),
        "--degree",
        "10",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    let mut inside = 0;
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[6] == "1" {
            let (x, y): (f64, f64) = (f[0].parse().unwrap(), f[1].parse().unwrap());
            assert!(x * x + y * y < 1.0);
            inside += 1;
        }
    }
    assert!(inside > 1000);
}

#[test]
fn verify_example_one() {
    let o = run(&[
        "verify",
        system("example1.json").to_str().unwrap(),
        "--degree",
        "10",
        "--samples",
        "200",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = stdout_json(&o);
    assert_eq!(r["counts"]["ESCAPES"], 0);
    assert_eq!(r["samples"], 200);
    assert_eq!(r["seed"], 42);
}

#[test]
fn continue1d_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("intervals.json");
    let o = run(&[
        "continue1d",
        system("cubic1d.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(r["left"], "UNBOUNDED_LIKELY");
    assert_eq!(r["right"], "UNBOUNDED_LIKELY");
    let lo = r["union"][0].as_f64().unwrap();
    let hi = r["union"][1].as_f64().unwrap();
    assert!(lo <= -1.95 && hi >= 0.95);
    assert_eq!(r["steps"].as_array().unwrap().len(), 2);
}

#[test]
fn bench_reports_stages() {
    let o = run(&[
        "bench",
        system("vanderpol.json").to_str().unwrap(),
        "--resolution",
        "64",
        "--samples",
        "10",
    ]);
    assert!(o.status.success());
    let r = stdout_json(&o);
    for k in ["lyapunov_ms", "grid_ms", "c_star_ms", "classify_ms"] {
        assert!(r[k].as_f64().is_some(), "{k} missing");
    }
}
