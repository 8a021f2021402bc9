use std::fs;
use std::path::{Path, PathBuf};

use decarb_core::cli;
use decarb_core::results::{read_results, CostRow};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/two_zone_toy");

fn decarb(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("decarb").chain(args.iter().copied());
    let code = cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn fixture_copy(dir: &Path) -> PathBuf {
    let dst = dir.join("scenario");
    fs::create_dir_all(&dst).unwrap();
    for e in fs::read_dir(FIXTURE).unwrap() {
        let e = e.unwrap();
        fs::copy(e.path(), dst.join(e.file_name())).unwrap();
    }
    dst
}

fn edit_manifest(dir: &Path, f: impl FnOnce(&mut serde_json::Value)) {
    let path = dir.join("scenario.json");
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    f(&mut v);
    fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
}

fn read_costs(dir: &Path) -> Vec<CostRow> {
    let mut rdr = csv::Reader::from_path(dir.join("costs_by_year.csv")).unwrap();
    rdr.deserialize().map(|r| r.unwrap()).collect()
}

#[test]
fn bundled_fixture_validates() {
    let (code, out, err) = decarb(&["validate", "--scenario", "two_zone_toy"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("two_zone_toy"));
}

#[test]
fn bad_soc_bounds_name_the_storage() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = fixture_copy(tmp.path());
    edit_manifest(&dir, |v| v["storage"][0]["soc_min_fraction"] = 0.95.into());
    let (code, _, err) = decarb(&["validate", "--scenario", dir.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("caiso_battery"), "{err}");
    assert!(err.contains("/storage/0/soc_min_fraction"), "{err}");
}

#[test]
fn missing_hour_is_a_data_gap() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = fixture_copy(tmp.path());
    let path = dir.join("load_nw.csv");
    let text = fs::read_to_string(&path).unwrap();
    let kept: Vec<&str> = text.lines().filter(|l| !l.starts_with("2023,2,1,")).collect();
    assert_eq!(kept.len() + 1, text.lines().count());
    fs::write(&path, kept.join("\n") + "\n").unwrap();
    let (code, _, err) = decarb(&["validate", "--scenario", dir.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("data gap"), "{err}");
    assert!(err.contains("week 2, hour 1"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(decarb(&["solve"]).0, 2);
    assert_eq!(decarb(&["frobnicate"]).0, 2);
    assert_eq!(decarb(&["--help"]).0, 0);
}

#[test]
fn unknown_scenario_fails_cleanly() {
    let (code, _, err) = decarb(&["validate", "--scenario", "/nonexistent/scenario.json"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error:"), "{err}");
}

#[test]
fn solve_writes_consistent_tables_and_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let (code, out, err) = decarb(&[
            "solve",
            "--scenario",
            "two_zone_toy",
            "--max-iter",
            "6",
            "--seed",
            "9",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        assert!(out.starts_with("slblr objective"), "{out}");
    }
    let names = [
        "costs_by_year.csv",
        "fleet_by_year.csv",
        "dispatch.csv",
        "soc.csv",
        "emissions.csv",
        "iterations.csv",
        "summary.json",
    ];
    for n in names {
        assert_eq!(fs::read(a.join(n)).unwrap(), fs::read(b.join(n)).unwrap(), "{n} differs between runs");
    }

    let rs = read_results(&a).unwrap();
    assert_eq!(rs.summary.seed, 9);
    assert_eq!(rs.summary.iterations, rs.iterations.len());
    assert!(rs.summary.max_constraint_violation <= 1e-6);
    let costs = read_costs(&a);
    let sum = |f: fn(&CostRow) -> f64| costs.iter().map(f).sum::<f64>();
    let t = &rs.summary.totals;
    for (got, want) in [
        (sum(|c| c.generation), t.generation),
        (sum(|c| c.maintenance), t.maintenance),
        (sum(|c| c.investment), t.investment),
        (sum(|c| c.total), t.total),
    ] {
        assert!((got - want).abs() <= 1e-6 * want.abs().max(1.0), "{got} vs {want}");
    }
    for c in &costs {
        assert!((c.generation + c.maintenance + c.investment - c.total).abs() <= 1e-6 * c.total.abs().max(1.0));
    }
    let weighted = sum(|c| c.year_weight * c.total);
    assert!(
        (weighted - rs.summary.objective).abs() <= 1e-6 * rs.summary.objective.abs(),
        "{weighted} vs {}",
        rs.summary.objective
    );

    let (code, out, err) = decarb(&["report", "--out", a.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().count(), 3);
    for f in ["report_fleet_over_time.csv", "report_cost_breakdown.csv", "report_soc_trace.csv"] {
        assert!(a.join(f).is_file(), "{f}");
    }
}

#[test]
fn seed_sets_the_group_order() {
    let tmp = tempfile::tempdir().unwrap();
    let mut orders = Vec::new();
    for seed in ["1", "1", "2"] {
        let dir = tmp.path().join(format!("{seed}-{}", orders.len()));
        let (code, _, err) = decarb(&["solve", "--scenario", "two_zone_toy", "--max-iter", "4", "--seed", seed, "--out", dir.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
        let rs = read_results(&dir).unwrap();
        assert_eq!(rs.summary.seed.to_string(), seed);
        orders.push(rs.iterations.iter().map(|r| r.groups.clone()).collect::<Vec<_>>());
    }
    assert_eq!(orders[0], orders[1]);
    assert_ne!(orders[0], orders[2]);
}

#[test]
fn infeasible_policy_writes_a_diagnosis() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = fixture_copy(tmp.path());
    edit_manifest(&dir, |v| v["policy"]["rps_fraction_by_year"] = 0.99.into());
    let out = tmp.path().join("out");
    let (code, _, err) = decarb(&["solve", "--scenario", dir.to_str().unwrap(), "--max-iter", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("infeasible"), "{err}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("infeasibility.json")).unwrap()).unwrap();
    let implicated = report["implicated"].as_array().unwrap();
    assert!(!implicated.is_empty());
    assert!(implicated.iter().all(|r| r.as_str().unwrap().starts_with("rps")));
}

#[test]
fn mps_export_is_written() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("nested/model.mps");
    let (code, _, err) = decarb(&["export-mps", "--scenario", "two_zone_toy", "--out", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(path).unwrap();
    assert!(text.starts_with("NAME"));
    assert!(text.trim_end().ends_with("ENDATA"));
}
