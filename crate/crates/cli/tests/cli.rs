use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sleac_cli::sweep::read_rows;
use tempfile::TempDir;

fn sleac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sleac"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_minimal_region_file_closes() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "tiny.txt", "# three cells\nE..\n");
    let cfg = write(dir.path(), "run.cfg", "region = tiny.txt\ne0 = 20\n");
    let o = sleac(&["run", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_rows(o.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].terminated, "closed");
    assert_eq!(rows[0].a_c, 3);
    assert_eq!(rows[0].n, 3);
}

#[test]
fn same_seed_gives_identical_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "run.cfg",
        "region = open:15x15\nalgorithm = SLTT\napproach = 2\ne0 = 9\nseed = 4\n",
    );
    let out = dir.path().join("rows.csv");
    let out_s = out.display().to_string();
    for _ in 0..2 {
        let o = sleac(&["run", "--config", &cfg, "--out", &out_s]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let rows = read_rows(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], rows[1]);
}

#[test]
fn strict_flags_step_cap() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.cfg", "region = line:30\ne0 = 100\nmax_steps = 5\n");
    let o = sleac(&["run", "--config", &cfg]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("step_cap"));
    let o = sleac(&["run", "--config", &cfg, "--strict"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn event_log_is_written() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.cfg", "region = line:3\ne0 = 20\nscheduler = adversarial\n");
    let log = dir.path().join("events.csv");
    let o = sleac(&[
        "run",
        "--config",
        &cfg,
        "--log-events",
        &log.display().to_string(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&log).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,agent,action,from,to,s1,s2,E"));
    assert!(lines.next().unwrap().starts_with("0,1,enter,0:0,0:0,"));
}

#[test]
fn config_errors_are_distinct() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("region = line:5\ncolour = red\n", "unknown key"),
        ("dt = 2\n", "no region"),
        ("region = missing.txt\n", "cannot read region file"),
        ("region = line:5\ne0 = 1\n", "invalid parameter combination"),
        ("region = line:5\ndt = fast\n", "bad value"),
    ];
    for (text, needle) in cases {
        let cfg = write(dir.path(), "bad.cfg", text);
        let o = sleac(&["run", "--config", &cfg]);
        assert!(!o.status.success());
        assert!(stderr(&o).contains(needle), "{needle}: {}", stderr(&o));
    }
}

#[test]
fn sweep_writes_rows_and_aggregates() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "sweep.cfg", "region = line:8\ne0 = 40\n");
    let out = dir.path().join("rows.csv");
    let agg = dir.path().join("agg.csv");
    let o = sleac(&[
        "sweep",
        "--config",
        &cfg,
        "--vary",
        "dt=2,4",
        "--vary",
        "algorithm=SLLG,SLTT",
        "--seeds",
        "3",
        "--out",
        &out.display().to_string(),
        "--aggregates",
        &agg.display().to_string(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_rows(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 12);
    assert!(rows.windows(2).all(|w| w[0].run_id < w[1].run_id));
    let agg = fs::read_to_string(&agg).unwrap();
    assert_eq!(agg.lines().count(), 5);
    assert!(agg.starts_with("region,n,algorithm"));
}

#[test]
fn sweep_cap_reports_size() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "sweep.cfg", "region = line:8\n");
    let o = sleac(&[
        "sweep", "--config", &cfg, "--vary", "dt=1,2,4,8", "--seeds", "50", "--cap", "100",
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("200 runs"), "{}", stderr(&o));
}

#[test]
fn bounds_tables() {
    let o = sleac(&["bounds", "approach1", "--e0", "15", "--dt", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    for (name, value) in [
        ("d_max", "13"),
        ("ball_inner", "265"),
        ("termination_bound", "558"),
        ("area_bound", "279"),
    ] {
        assert!(
            text.lines()
                .any(|l| l.starts_with(name) && l.trim_end().ends_with(value)),
            "{name}: {text}"
        );
    }

    let o = sleac(&["bounds", "linear_edge", "--n", "100", "--dt", "2", "--alpha", "0", "--csv"]);
    assert!(stdout(&o).contains("total_energy,\"closed form, worst case\",14951"));
    let o = sleac(&["bounds", "linear_mid", "--n", "100", "--j", "20", "--dt", "2", "--csv"]);
    assert!(stdout(&o).contains(",16433\n"), "{}", stdout(&o));

    let o = sleac(&["bounds", "linear_mid", "--n", "100", "--e0", "15"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("does not take `e0`"));
}
