use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdma-lab"))
        .args(args)
        .env_remove("CDMA_LAB_THREADS")
        .output()
        .expect("binary runs")
}

fn run_to(dir: &TempDir, name: &str, args: &[&str]) -> (PathBuf, String) {
    let out = dir.path().join(name);
    let mut full: Vec<&str> = args.to_vec();
    let out_str = out.to_str().unwrap().to_owned();
    full.extend(["--out", &out_str]);
    let o = lab(&full);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = std::fs::read_to_string(&out).unwrap();
    (out, csv)
}

fn header(csv: &str) -> &str {
    csv.lines().next().unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_owned()).collect()
}

fn manifest(csv_path: &Path) -> serde_json::Value {
    let mut p = csv_path.as_os_str().to_owned();
    p.push(".manifest.json");
    serde_json::from_str(&std::fs::read_to_string(PathBuf::from(p)).unwrap()).unwrap()
}

#[test]
fn headers_are_pinned() {
    let dir = TempDir::new().unwrap();
    let cases: &[(&[&str], &str)] = &[
        (&["replica"], "beta,sigma2,m_star,lambda_star,c_rs_nats,c_rs_bits,n_fixed_points"),
        (&["phase", "--beta", "1", "--sigma2", "1"], "beta,sigma2,root_count,m_star,lambda_star,c_rs_nats,c_rs_bits"),
        (
            &["simulate", "--K", "3", "--matrices", "3"],
            "K,N,beta_actual,sigma2,dist,n_matrices,n_noise,mi_nats_mean,mi_nats_se,ber_mean,ber_se,bound_nats",
        ),
        (&["concentrate", "--K", "2,3", "--matrices", "3"], "K,var_mi,var_f,tail_freq_mi,tail_freq_f,epsilon"),
        (&["universality", "--K", "2", "--matrices", "3"], "K,dist,mi_nats_mean,mi_nats_se"),
        (&["trend", "--K", "2,3", "--matrices", "3"], "K,N,beta_actual,sigma2,mi_nats_mean,mi_nats_se"),
        (
            &["interpolate", "--K", "3", "--samples", "4", "--t", "0.5"],
            "t,u,f_mean,f_se,dfdt_fd,T1_raw,T2_raw,T1_reduced,T2_reduced,R,R_se",
        ),
        (
            &["nishimori", "--K", "3", "--samples", "4", "--t", "0.5"],
            "t,u,res_mq,res_mq_se,res_X11,res_X11_se,res_X12,res_X12_se",
        ),
        (&["sumrule", "--K", "3", "--samples", "4", "--t-grid", "0:1:3"], "m,u,lhs,rhs,residual,budget"),
        (&["gaussian"], "beta,sigma2,closed_form_nats,replica_nats,m_star,abs_diff"),
        (&["colored", "--rho", "0.5"], "beta,sigma2,rho,lambda_col,c_upper_nats,argmin_m"),
        (&["powers"], "beta,sigma2,profile,c_upper_nats,argmin_m"),
    ];
    for (args, expected) in cases {
        let (_, csv) = run_to(&dir, "h.csv", args);
        assert_eq!(header(&csv), *expected, "{args:?}");
        assert!(csv.lines().count() >= 2, "{args:?} wrote no rows");
        assert!(!csv.contains('\r'));
    }
}

#[test]
fn bits_flag_adds_columns_only() {
    let dir = TempDir::new().unwrap();
    let (_, nats) = run_to(&dir, "a.csv", &["gaussian"]);
    let (_, bits) = run_to(&dir, "b.csv", &["gaussian", "--bits"]);
    assert!(header(&bits).starts_with(header(&nats)));
    assert!(header(&bits).ends_with("closed_form_bits,replica_bits"));
    let nat: f64 = column(&bits, "closed_form_nats")[0].parse().unwrap();
    let bit: f64 = column(&bits, "closed_form_bits")[0].parse().unwrap();
    assert!((bit - nat / std::f64::consts::LN_2).abs() < 1e-15);
}

#[test]
fn replica_row_matches_bits_conversion_and_vanishing_snr() {
    let dir = TempDir::new().unwrap();
    let (_, csv) = run_to(&dir, "r.csv", &["replica", "--beta", "1", "--sigma2", "1,1e9"]);
    let nats: Vec<f64> = column(&csv, "c_rs_nats").iter().map(|s| s.parse().unwrap()).collect();
    let bits: Vec<f64> = column(&csv, "c_rs_bits").iter().map(|s| s.parse().unwrap()).collect();
    assert!((bits[0] - nats[0] / std::f64::consts::LN_2).abs() < 1e-15);
    assert!(nats[1].abs() < 1e-6);
}

#[test]
fn as_printed_shifts_by_ln2() {
    let dir = TempDir::new().unwrap();
    let (_, a) = run_to(&dir, "a.csv", &["replica"]);
    let (_, b) = run_to(&dir, "b.csv", &["replica", "--as-printed"]);
    let x: f64 = column(&a, "c_rs_nats")[0].parse().unwrap();
    let y: f64 = column(&b, "c_rs_nats")[0].parse().unwrap();
    assert!((x - y - std::f64::consts::LN_2).abs() < 1e-15);
}

#[test]
fn zero_users_is_a_validation_error_naming_the_flag() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("s.csv");
    let o = lab(&["simulate", "--K", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--K"));
    assert!(!out.exists());
}

#[test]
fn bad_flags_exit_with_two() {
    for args in [
        &["replica", "--bogus", "1"][..],
        &["replica", "--beta", "abc"],
        &["replica", "--beta", "-1"],
        &["interpolate", "--t", "1.5"],
        &["nosuchcommand"],
    ] {
        let dir = TempDir::new().unwrap();
        let out = dir.path().join("x.csv");
        let mut full = args.to_vec();
        full.extend(["--out", out.to_str().unwrap()]);
        let o = lab(&full);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(!err.contains("panicked"), "{err}");
    }
}

#[test]
fn oversized_enumeration_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("s.csv");
    let o = lab(&["simulate", "--K", "6", "--k-max", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("enumeration refused"));
}

#[test]
fn missing_out_is_reported() {
    let o = lab(&["replica"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--out"));
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# grid\nbeta = 0.5\nsigma2 = 2\nbits = true\n").unwrap();
    let conf = conf.to_str().unwrap();
    let (path, csv) = run_to(&dir, "c.csv", &["gaussian", "--config", conf, "--sigma2", "3"]);
    assert_eq!(column(&csv, "beta"), vec!["5.0000000000000000e-1"]);
    assert_eq!(column(&csv, "sigma2"), vec!["3.0000000000000000e0"]);
    assert!(header(&csv).contains("replica_bits"));
    let m = manifest(&path);
    assert_eq!(m["params"]["sigma2"], "3");
    assert_eq!(m["params"]["beta"], "0.5");
    assert_eq!(m["config"]["entries"][0][0], "beta");

    std::fs::write(dir.path().join("bad.conf"), "nosuchkey = 1\n").unwrap();
    let bad = dir.path().join("bad.conf");
    let o = lab(&["gaussian", "--config", bad.to_str().unwrap(), "--out", "/dev/null"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn manifest_records_the_run() {
    let dir = TempDir::new().unwrap();
    let (path, _) = run_to(&dir, "m.csv", &["simulate", "--K", "3", "--matrices", "4", "--seed", "9"]);
    let m = manifest(&path);
    assert_eq!(m["subcommand"], "simulate");
    assert_eq!(m["seed"], 9);
    assert_eq!(m["params"]["users"], "3");
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m["outputs"][0], path.to_str().unwrap());
    let stamp = m["timestamp"].as_str().unwrap();
    assert!(stamp.len() == 20 && stamp.ends_with('Z'), "{stamp}");
}

#[test]
fn replaying_a_manifest_reproduces_the_csv() {
    let dir = TempDir::new().unwrap();
    let (path, first) = run_to(&dir, "a.csv", &["universality", "--K", "3", "--matrices", "6", "--threads", "1"]);
    let m = manifest(&path);
    let mut replay: Vec<String> = m["replay"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_owned())
        .collect();
    let second = dir.path().join("b.csv");
    replay.extend(["--threads".into(), "4".into(), "--out".into(), second.to_str().unwrap().into()]);
    let args: Vec<&str> = replay.iter().map(String::as_str).collect();
    assert!(lab(&args).status.success());
    assert_eq!(first, std::fs::read_to_string(second).unwrap());
}

#[test]
fn thread_count_falls_back_to_environment() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("t.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_cdma-lab"))
        .args(["gaussian", "--out", out.to_str().unwrap()])
        .env("CDMA_LAB_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(manifest(&out)["threads"], 2);

    let o = Command::new(env!("CARGO_BIN_EXE_cdma-lab"))
        .args(["gaussian", "--out", out.to_str().unwrap()])
        .env("CDMA_LAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
