use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use adhoc_kitchen::world::DEFAULT_LAYOUT;

fn cli(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adhoc-kitchen"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

#[test]
fn run_export_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::create_dir(d.join("kitchens")).unwrap();
    fs::write(d.join("kitchens/k.txt"), DEFAULT_LAYOUT).unwrap();
    fs::create_dir(d.join("cfg")).unwrap();
    // the layout path is relative to the config file
    fs::write(d.join("cfg/run.conf"), "layout = ../kitchens/k.txt\nmax_ticks = 2000\n").unwrap();

    let out = cli(
        &["run", "--config", "cfg/run.conf", "--seed", "4", "--log", "log.jsonl", "--summary", "s.csv"],
        d,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(d.join("s.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().contains(",4,round_robin,"));

    for (fmt, file, marker) in [("graphml", "n.graphml", "<graphml"), ("dot", "n.dot", "graph collaboration")] {
        let out = cli(&["export-net", "--log", "log.jsonl", "--format", fmt, "--out", file], d);
        assert!(out.status.success());
        assert!(fs::read_to_string(d.join(file)).unwrap().contains(marker));
    }
    let out = cli(&["export-net", "--log", "log.jsonl", "--format", "gexf", "--out", "x"], d);
    assert_eq!(out.status.code(), Some(1));

    let out = cli(
        &["plot", "--summary", "s.csv", "--x", "team_size", "--group", "comm_cost", "--y", "meals_served", "--out", "p.svg"],
        d,
    );
    assert!(out.status.success());
    assert!(fs::read_to_string(d.join("p.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn sweep_writes_sorted_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("base.conf"), "max_ticks = 300\n").unwrap();
    fs::write(d.join("axes"), "team_size = 4, 2\ncomm_cost = 25, 0\n").unwrap();
    let out = cli(&["sweep", "--config", "base.conf", "--axes", "axes", "--seeds", "3", "--out", "res"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let parallel = fs::read_to_string(d.join("res/summary.csv")).unwrap();
    assert_eq!(parallel.lines().count(), 13);
    let second: Vec<&str> = parallel.lines().nth(1).unwrap().split(',').collect();
    assert_eq!((second[1], second[2], second[12]), ("2", "0", "1"));

    let out = cli(
        &["sweep", "--config", "base.conf", "--axes", "axes", "--seeds", "3", "--out", "serial", "--serial"],
        d,
    );
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(d.join("serial/summary.csv")).unwrap(), parallel);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.conf"), "team_size = 0\n").unwrap();
    assert_eq!(cli(&["run", "--config", "bad.conf"], d).status.code(), Some(1));
    fs::write(d.join("typo.conf"), "teamsize = 3\n").unwrap();
    let out = cli(&["run", "--config", "typo.conf"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    assert_eq!(cli(&["run", "--config", "missing.conf"], d).status.code(), Some(2));
    fs::write(d.join("nolayout.conf"), "layout = nowhere.txt\n").unwrap();
    assert_eq!(cli(&["run", "--config", "nolayout.conf"], d).status.code(), Some(2));
    assert_eq!(cli(&["frobnicate"], d).status.code(), Some(1));
    let v = cli(&["--version"], d);
    assert!(v.status.success());
    assert!(String::from_utf8_lossy(&v.stdout).contains(env!("CARGO_PKG_VERSION")));
    assert!(cli(&["--help"], d).status.success());
}
