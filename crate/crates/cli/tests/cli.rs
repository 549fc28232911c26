use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fibermap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fibermap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// Bundle at epsilon = 0.5, optionally with the depth forced.
fn build_small(dir: &Path, r: Option<&str>) -> String {
    let path = dir.join(format!("small{}.json", r.unwrap_or("")));
    let p = path.to_str().unwrap();
    let mut args = vec!["build", "--n", "3", "--q", "2", "--epsilon", "0.5", "--seed", "1", "--out", p];
    if let Some(r) = r {
        args.extend(["--r", r]);
    }
    let out = fibermap(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    p.to_string()
}

#[test]
fn build_is_deterministic_and_has_eight_branches() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = fibermap(&["build", "--n", "3", "--q", "2", "--epsilon", "0.1", "--seed", "0", "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let ba = std::fs::read(&a).unwrap();
    assert_eq!(ba, std::fs::read(&b).unwrap());
    let v: Value = serde_json::from_slice(&ba).unwrap();
    assert_eq!(v["schema"], "fibermap.bundle/1");
    assert_eq!(v["tree"]["branches"], 8);
    assert_eq!(v["tree"]["max_degree"], 9);
    assert_eq!(v["args"]["epsilon"], 0.1);
}

#[test]
fn invalid_ranges_exit_with_usage_code() {
    assert_eq!(fibermap(&["build", "--n", "2", "--q", "2", "--epsilon", "0.1"]).status.code(), Some(1));
    assert_eq!(fibermap(&["build", "--n", "3", "--q", "1", "--epsilon", "0.1"]).status.code(), Some(1));
    assert_eq!(fibermap(&["build", "--n", "3", "--q", "2", "--epsilon", "1.5"]).status.code(), Some(1));
    assert_eq!(fibermap(&["build", "--n", "3", "--q", "2"]).status.code(), Some(1));
    assert_eq!(fibermap(&["build", "--n", "x"]).status.code(), Some(1));
    assert_eq!(fibermap(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(fibermap(&["--help"]).status.code(), Some(0));
}

#[test]
fn tree_map_only_build() {
    let out = fibermap(&["build", "--n", "2", "--r", "2", "--delta", "0.05"]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["schema"], "fibermap.treemap/1");
    assert_eq!(v["levels"].as_array().unwrap().len(), 3);
    assert!(v["exceptional_volume"].as_f64().unwrap() <= 0.05);
    assert_eq!(v["args"]["q"], Value::Null);
}

#[test]
fn config_file_mirrors_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "n = 3\nq = 2\nepsilon = 0.5\nseed = 1\nr = 2\n").unwrap();
    let from_cfg = fibermap(&["--config", cfg.to_str().unwrap(), "build"]);
    let from_flags = fibermap(&["build", "--n", "3", "--q", "2", "--epsilon", "0.5", "--seed", "1", "--r", "2"]);
    assert!(from_cfg.status.success());
    assert_eq!(from_cfg.stdout, from_flags.stdout);
    // flags win over the file
    let other = fibermap(&["--config", cfg.to_str().unwrap(), "build", "--seed", "2"]);
    assert_eq!(json_of(&other)["seed"], 2);
    std::fs::write(&cfg, "n = \"three\"\n").unwrap();
    assert_eq!(fibermap(&["--config", cfg.to_str().unwrap(), "build"]).status.code(), Some(1));
}

#[test]
fn audit_small_map() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = build_small(dir.path(), None);
    let out = fibermap(&["audit", "--bundle", &bundle, "--samples", "500", "--seed", "3", "--multiplicity", "600"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["schema"], "fibermap.audit/1");
    assert_eq!(v["samples"], 500);
    assert_eq!(v["multiplicity"]["violations"], 0);
    assert_eq!(v["runtime_seconds"], Value::Null);
    assert!(v["max_volume"].as_f64().unwrap() <= v["certified_bound"].as_f64().unwrap());
    let again = fibermap(&["audit", "--bundle", &bundle, "--samples", "500", "--seed", "3", "--multiplicity", "600"]);
    assert_eq!(out.stdout, again.stdout);
    let timed = json_of(&fibermap(&["audit", "--bundle", &bundle, "--samples", "200", "--timing"]));
    assert!(timed["runtime_seconds"].as_f64().is_some());
    assert_eq!(fibermap(&["audit", "--bundle", "/nonexistent/b.json"]).status.code(), Some(1));
    // too shallow for its epsilon: the report is still written, the verdict fails
    let shallow = build_small(dir.path(), Some("1"));
    let out = fibermap(&["audit", "--bundle", &shallow, "--samples", "500"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json_of(&out)["within_budget"], false);
}

#[test]
fn eval_then_fiber_recovers_the_point() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = build_small(dir.path(), Some("2"));
    let e = json_of(&fibermap(&["eval", "--bundle", &bundle, "--point", "0.2,1,0.7,0.4"]));
    assert_eq!(e["schema"], "fibermap.eval/1");
    assert_eq!(e["face"], 3);
    let image: Vec<String> = e["image"].as_array().unwrap().iter().map(|x| format!("{}", x.as_f64().unwrap())).collect();
    let f = fibermap(&["fiber", "--bundle", &bundle, "--value", &image.join(",")]);
    assert_eq!(f.status.code(), Some(0));
    let f = json_of(&f);
    let comps = f["components"].as_array().unwrap();
    assert!(!comps.is_empty() && comps.len() <= 9);
    assert!(comps.iter().any(|c| c["tree_point"] == e["tree_point"]));
    let s = json_of(&fibermap(&["eval", "--bundle", &bundle, "--surface", "sphere", "--point", "-1,0,0,0"]));
    assert_eq!(s["cube_point"][0], 0.0);
    assert_eq!(fibermap(&["eval", "--bundle", &bundle, "--point", "0.5,0.5,0.5,0.5"]).status.code(), Some(1));
    assert_eq!(fibermap(&["fiber", "--bundle", &bundle, "--value", "1"]).status.code(), Some(1));
}

#[test]
fn render_svg_figure() {
    let out = fibermap(&["render-svg", "--n", "2", "--r", "2", "--delta", "0.05"]);
    assert!(out.status.success());
    let svg = String::from_utf8(out.stdout).unwrap();
    assert!(svg.contains("version=\"1.1\""));
    assert!(svg.contains("length ≤ 1") && svg.contains("1 < length ≤ 6"));
    assert!(svg.contains("class=\"skeleton\""));
    let flat = String::from_utf8(fibermap(&["render-svg", "--r", "0", "--delta", "0.3"]).stdout).unwrap();
    assert!(!flat.contains("class=\"skeleton\""));
    assert!(flat.contains("class=\"square\""));
    assert_eq!(fibermap(&["render-svg", "--n", "3"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("fig.svg");
    assert!(fibermap(&["render-svg", "--out", p.to_str().unwrap()]).status.success());
    assert!(std::fs::read_to_string(&p).unwrap().starts_with("<?xml"));
}

#[test]
fn verify_appendix_suites() {
    let dir = tempfile::tempdir().unwrap();
    let charts = dir.path().join("charts");
    let out = fibermap(&["verify-appendix", "--suite", "tubes", "--samples", "200000", "--charts", charts.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["schema"], "fibermap.appendix/1");
    assert_eq!(v["consistent"], true);
    assert_eq!(v["instances"].as_array().unwrap().len(), 9);
    assert!(std::fs::read_dir(&charts).unwrap().count() > 0);
    let d = json_of(&fibermap(&["verify-appendix", "--suite", "decomposition", "--samples", "50000"]));
    assert!(d["instances"].as_array().unwrap().iter().any(|i| i["name"].as_str().unwrap().contains("hemisphere")));
    assert_eq!(fibermap(&["verify-appendix", "--suite", "nope"]).status.code(), Some(1));
    assert_eq!(fibermap(&["verify-appendix", "--suite", "tubes", "--samples", "10"]).status.code(), Some(1));
}
