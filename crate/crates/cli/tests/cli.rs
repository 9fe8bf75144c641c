use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rayleigh(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rayleigh")).args(args).arg("--out").arg(out).output().unwrap()
}

const SMALL: [&str; 8] = ["--samples", "200", "--horizon", "4", "--replicates", "2", "--seed", "3"];

fn with_small<'a>(head: &[&'a str]) -> Vec<&'a str> {
    head.iter().copied().chain(SMALL).collect()
}

fn assert_csv(path: &Path, header: &str) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    let lines: Vec<String> = text.lines().map(String::from).collect();
    assert_eq!(lines[0], header, "{}", path.display());
    let last = lines.last().unwrap();
    assert!(last.starts_with("# {\"program\":\"rayleigh\",\"version\":\""), "{last}");
    assert!(text.ends_with('\n'));
    lines
}

#[test]
fn variance_writes_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = rayleigh(&with_small(&["variance", "type1"]), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let curve = assert_csv(&dir.path().join("variance_curve.csv"), "t,var,sem,n");
    assert_eq!(curve.len(), 1 + 41 + 1);
    let slope = assert_csv(&dir.path().join("slope.csv"), "sigma2,stderr,t_start,T,N,R");
    let fields: Vec<&str> = slope[1].split(',').collect();
    assert_eq!(&fields[2..], ["2", "4", "200", "2"]);
    let s: f64 = fields[0].parse().unwrap();
    assert!(s > 0.3 && s < 1.3, "{s}");
    assert!(slope[2].contains("\"kind\":\"type1\"") && slope[2].contains("\"mass\":1.0"));
}

#[test]
fn same_seed_same_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = with_small(&["variance", "type2-fixed", "--strength", "0.5"]);
    assert!(rayleigh(&args, a.path()).status.success());
    assert!(rayleigh(&args, b.path()).status.success());
    for f in ["variance_curve.csv", "slope.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let c = tempfile::tempdir().unwrap();
    let mut other = args.clone();
    *other.last_mut().unwrap() = "4";
    assert!(rayleigh(&other, c.path()).status.success());
    assert_ne!(fs::read(a.path().join("slope.csv")).unwrap(), fs::read(c.path().join("slope.csv")).unwrap());
}

#[test]
fn configuration_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        with_small(&["variance", "type1", "--grid-step", "0"]),
        with_small(&["variance", "type1", "--grid-step=-0.1"]),
        with_small(&["variance", "type2-fixed"]),
        with_small(&["variance", "type1", "--fit-start", "1.5"]),
        with_small(&["sweep", "c", "--c-grid", "1,0.5"]),
        vec!["variance", "nonsense"],
    ] {
        let out = rayleigh(&args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    assert!(!dir.path().join("slope.csv").exists());
}

#[test]
fn empty_grid_from_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "c_grid = []\n").unwrap();
    let out = rayleigh(&["sweep", "c", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "samples = 100\nhorizon = 4.0\nreplicates = 2\nseed = 8\nmass = 0.5\n").unwrap();
    let out = rayleigh(&["variance", "type1", "--config", cfg.to_str().unwrap(), "--samples", "150"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let slope = assert_csv(&dir.path().join("slope.csv"), "sigma2,stderr,t_start,T,N,R");
    assert!(slope[1].ends_with(",4,150,2"), "{}", slope[1]);
    assert!(slope[2].contains("\"seed\":8") && slope[2].contains("\"mass\":0.5"));
}

#[test]
fn event_cap_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = rayleigh(&with_small(&["variance", "type1", "--event-cap", "2"]), dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn narrow_window_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = rayleigh(&with_small(&["variance", "type1", "--window-factor", "0.1"]), dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sweep_rows_and_quadrature_status() {
    let dir = tempfile::tempdir().unwrap();
    let out = rayleigh(&with_small(&["sweep", "c", "--c-grid", "0.1,1,10"]), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = assert_csv(&dir.path().join("sweep.csv"), "param,sigma2,stderr,status");
    assert_eq!(rows.len(), 5);
    assert!(rows[1].starts_with("0.1,") && rows[3].starts_with("10,"));
    assert!(rows[1..4].iter().all(|r| r.ends_with(",ok")));
    // this grid leaves too much of rho uncovered; the file says so
    let q = assert_csv(&dir.path().join("mixed_quadrature.csv"), "sigma2,stderr,rho_mass_below,rho_mass_above,status");
    assert!(q[1].starts_with(",,") && q[1].contains("uncovered"), "{}", q[1]);

    let m = tempfile::tempdir().unwrap();
    let out = rayleigh(&with_small(&["sweep", "m", "--m-grid", "1"]), m.path());
    assert!(out.status.success());
    assert_eq!(assert_csv(&m.path().join("sweep.csv"), "param,sigma2,stderr,status").len(), 3);
    assert!(!m.path().join("mixed_quadrature.csv").exists());
}

#[test]
fn converge_single_mass_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["converge", "--m-grid", "0.01", "--draws", "3", "--horizon", "2"];
    let out = rayleigh(&args, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let conv = assert_csv(&dir.path().join("convergence.csv"), "M,sup_error");
    assert_eq!(conv.len(), 3);
    assert!(conv[1].starts_with("0.01,"));
    let wz = assert_csv(&dir.path().join("wz_invariant.csv"), "M,max_rel_dev");
    assert_eq!(wz.len(), 3);

    let two = tempfile::tempdir().unwrap();
    let out = rayleigh(&["converge", "--m-grid", "0.1,0.001", "--draws", "3", "--horizon", "2"], two.path());
    assert!(out.status.success());
    let conv = assert_csv(&two.path().join("convergence.csv"), "M,sup_error");
    assert!(conv[3].contains("\"rate_slope\""));
    let out = rayleigh(&["converge", "--m-grid", "0.001,0.1", "--draws", "3"], two.path());
    assert_eq!(out.status.code(), Some(1));
}
