use std::path::{Path, PathBuf};
use std::process::Command;

use cycspec::config::Config;
use cycspec::output::CSV_HEADER;
use cycspec::{emit_results, run, to_csv, ExperimentKind, Mode, ResultRow};

fn simulate(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_simulate")).args(args).output().expect("run simulate")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = r#"
[experiment]
kind = "b2b"
baud_gbd = [40.0]
"#;

#[test]
fn unknown_key_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "[experiment]\nbogus = 1\n");
    let out = simulate(&[cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));
}

#[test]
fn missing_file_is_a_config_error() {
    let out = simulate(&["/nonexistent/cfg.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_grid_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "[detuning]\ndetuning_ghz = []\n");
    assert_eq!(simulate(&[cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn core_rejection_is_a_simulation_failure() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), &format!("{SMALL}\n[tx]\nroll_off = 2.0\n"));
    let csv = d.path().join("out.csv");
    let out = simulate(&[cfg.to_str().unwrap(), "--smoke", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!csv.exists());
}

#[test]
fn smoke_b2b_writes_sorted_csv() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), SMALL);
    let csv = d.path().join("out.csv");
    let out = simulate(&[cfg.to_str().unwrap(), "--smoke", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    // 2 modes x (2 OSNR points + noiseless control)
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.len() == 11));
    let noiseless: Vec<_> = rows.iter().filter(|r| r[3] == "inf").collect();
    assert_eq!(noiseless.len(), 2);
    assert!(noiseless.iter().all(|r| r[7] == "0" && r[8] == "inf"));
    assert_eq!(rows[0][2], "nyquist");
    assert_eq!(rows[5][2], "cyclic");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("req_osnr_db"));
}

#[test]
fn identical_runs_give_identical_bytes() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), SMALL);
    let (a, b) = (d.path().join("a.csv"), d.path().join("b.csv"));
    for p in [&a, &b] {
        let out = simulate(&[cfg.to_str().unwrap(), "--smoke", "--out", p.to_str().unwrap()]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn experiment_and_seed_flags_override_config() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(
        d.path(),
        "[experiment]\nkind = \"b2b\"\nbaud_gbd = [40.0]\nmodes = [\"cyclic\"]\n[detuning]\ndetuning_ghz = [0.0, 2.0]\n",
    );
    let csv = d.path().join("out.csv");
    let out = simulate(&[
        cfg.to_str().unwrap(),
        "--smoke",
        "--experiment",
        "detuning",
        "--seeds",
        "2",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.starts_with("detuning,40,cyclic,")));
    let seeds: Vec<&str> = rows.iter().map(|r| r.split(',').nth(9).unwrap()).collect();
    assert_eq!(seeds, ["1", "2", "1", "2"]);
}

#[test]
fn gnuplot_blocks_are_written() {
    let d = tempfile::tempdir().unwrap();
    let gp = d.path().join("plots");
    let cfg = write_config(d.path(), &format!("{SMALL}\n[output]\ngnuplot_dir = {:?}\n", gp.to_str().unwrap()));
    let csv = d.path().join("out.csv");
    assert!(simulate(&[cfg.to_str().unwrap(), "--smoke", "--out", csv.to_str().unwrap()]).status.success());
    let text = std::fs::read_to_string(gp.join("b2b.dat")).unwrap();
    // one block per mode, separated by two blank lines
    assert_eq!(text.matches("\n\n\n").count(), 1);
    assert!(text.starts_with("# b2b baud_gbd=40 mode=nyquist"));
}

fn row() -> ResultRow {
    ResultRow {
        experiment: "b2b".into(),
        baud_gbd: 42.5,
        mode: Mode::Cyclic,
        osnr_db: 14.1234567,
        psd_ratio_db: 8.0,
        detuning_ghz: 0.0,
        pass_index: 0,
        ber: 3.7e-3,
        q2_db: 8.5612345,
        seed: 7,
        config_hash: "abcd".into(),
        bit_errors: 37,
        bits_counted: 10000,
        failure: None,
    }
}

#[test]
fn empty_rows_leave_no_file() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("x.csv");
    assert!(emit_results(&[], &p).is_err());
    assert!(!p.exists());
}

#[test]
fn one_row_gives_two_lines() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("x.csv");
    emit_results(&[row()], &p).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    assert_eq!(text, format!("{CSV_HEADER}\nb2b,42.5,cyclic,14.1235,8,0,0,0.0037,8.56123,7,abcd\n"));
}

#[test]
fn unwritable_path_reports_it() {
    let e = emit_results(&[row()], Path::new("/nonexistent/dir/x.csv")).unwrap_err();
    assert!(e.to_string().contains("/nonexistent/dir/x.csv"));
}

#[test]
fn row_order_does_not_depend_on_input_order() {
    let mut a = row();
    let mut b = row();
    b.seed = 3;
    a.mode = Mode::Nyquist;
    let x = to_csv(&[a.clone(), b.clone()]);
    let y = to_csv(&[b, a]);
    assert_eq!(x, y);
}

#[test]
fn runners_are_independent() {
    let mut cfg = Config::from_toml(SMALL).unwrap();
    cfg.apply_smoke();
    cfg.experiment.modes = vec![Mode::Nyquist];
    let (first, _) = run(&cfg, ExperimentKind::B2b).unwrap();
    let _ = run(&cfg, ExperimentKind::Detuning).unwrap();
    let (again, _) = run(&cfg, ExperimentKind::B2b).unwrap();
    assert_eq!(to_csv(&first), to_csv(&again));
    assert!(first.iter().all(|r| r.config_hash == cfg.hash()));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            Config::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 3);
}
