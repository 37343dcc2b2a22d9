use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use twoaxis::config::{make_config, Role};
use twoaxis::oracle::word_descent;
use twoaxis::plan_json::plan_to_json;
use twoaxis::rotations::{quat_exp, Vec3};
use twoaxis::solver::{realize, segments_cost, Plan, Segment};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twoaxis")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn verify(path: &Path) -> Output {
    run(&["verify", "--plan", path.to_str().unwrap()])
}

const HALF_PI: &str = "1.5707963267948966";

#[test]
fn quarter_turn_about_z_costs_three_half_pi() {
    let o = run(&["plan", "--alpha", HALF_PI, "--kappa", "1", "--target", "axis-angle:0,0,1:1.5707963267948966"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!((v["total_cost"].as_f64().unwrap() - 1.5 * PI).abs() < 1e-8);
}

#[test]
fn identity_and_single_axis_targets() {
    let o = run(&["plan", "--alpha", "1", "--kappa", "0.5", "--target", "quat:0,0,0,1"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["total_cost"].as_f64().unwrap(), 0.0);
    assert_eq!(v["pattern_id"], "empty");
    assert_eq!(v["segments"].as_array().unwrap().len(), 0);

    let o = run(&["plan", "--alpha", "1.3181160716528177", "--kappa", "0.5", "--target", "axis-angle:1,0,0:0.8"]);
    let v = json(&o);
    assert_eq!(v["segments"].as_array().unwrap().len(), 1);
    assert!((v["total_cost"].as_f64().unwrap() - 0.8).abs() < 1e-9);
}

#[test]
fn plan_schema_is_exact() {
    let o = run(&["plan", "--alpha", "1.2", "--kappa", "0.7", "--target", "euler:X=0.4,Z=1.1,Y=-0.3"]);
    let v = json(&o);
    let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
    keys.sort();
    assert_eq!(
        keys,
        ["alpha", "kappa", "pattern_id", "residual", "segments", "symmetry_index", "target", "total_cost", "window"]
    );
    assert_eq!(v["target"]["quat"].as_array().unwrap().len(), 4);
    let mut seg: Vec<_> = v["segments"][0].as_object().unwrap().keys().cloned().collect();
    seg.sort();
    assert_eq!(seg, ["a", "axis_unit", "b", "cost", "duration", "rotation_angle"]);
    assert_eq!(v["window"].as_array().unwrap().len(), 2);
    // 17 significant digits
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("\"alpha\": 1.2000000000000000e0"), "{text}");
}

#[test]
fn json_out_and_frame() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    let o = run(&[
        "plan", "--alpha", HALF_PI, "--kappa", "1", "--target", "axis-angle:1,0,0:0.5",
        "--frame", "quat:0,0,0.7071067811865476,0.7071067811865476",
        "--json-out", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    // the caller's x axis is the canonical y axis
    let q: Vec<f64> = v["target"]["quat"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(q[0].abs() < 1e-15 && (q[1] - 0.25f64.sin()).abs() < 1e-15, "{q:?}");
    assert!((v["total_cost"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn degrees_flag() {
    let a = json(&run(&["plan", "--alpha", "90", "--kappa", "1", "--degrees", "--target", "axis-angle:0,0,1:90"]));
    let b = json(&run(&["plan", "--alpha", HALF_PI, "--kappa", "1", "--target", "axis-angle:0,0,1:1.5707963267948966"]));
    assert!((a["total_cost"].as_f64().unwrap() - b["total_cost"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn obtuse_alpha_is_reduced() {
    let o = run(&["plan", "--alpha", "2.0", "--kappa", "0.4", "--target", "axis-angle:0.3,0.2,1:1.3"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha > pi/2"));
    let v = json(&o);
    assert!((v["alpha"].as_f64().unwrap() - (PI - 2.0)).abs() < 1e-15);
}

#[test]
fn malformed_input_exits_one() {
    for args in [
        vec!["plan", "--alpha", "1", "--kappa", "0.5"],
        vec!["plan", "--alpha", "1", "--kappa", "1.5", "--target", "quat:0,0,0,1"],
        vec!["plan", "--alpha", "1", "--kappa", "0.5", "--target", "quat:1,2"],
        vec!["plan", "--alpha", "1", "--kappa", "0.5", "--target", "matrix:1,0,0,0,1,0,0,0,2"],
        vec!["plan", "--alpha", "0", "--kappa", "0.5", "--target", "quat:0,0,0,1"],
        vec!["sweep", "--alpha", "1", "--kappa", "0.5", "--axis", "0,0,0", "--t-min", "0", "--t-max", "1", "--steps", "3"],
        vec!["frobnicate"],
    ] {
        let o = run(&args);
        assert_eq!(code(&o), 1, "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn verify_rejects_unreadable_plans() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"alpha\": 1.0, \"kappa\": ").unwrap();
    assert_eq!(code(&verify(&bad)), 1);
    assert_eq!(code(&verify(&dir.path().join("missing.json"))), 1);
}

#[test]
fn verify_fails_a_perturbed_duration() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    run(&["plan", "--alpha", "1.1", "--kappa", "0.6", "--target", "axis-angle:0.2,0.5,1:2.2", "--json-out", path.to_str().unwrap()]);
    assert_eq!(code(&verify(&path)), 0);
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let d = v["segments"][1]["duration"].as_f64().unwrap();
    v["segments"][1]["duration"] = (d + 0.1).into();
    fs::write(&path, v.to_string()).unwrap();
    let o = verify(&path);
    assert_eq!(code(&o), 2);
    let r = json(&o);
    assert_eq!(r["pass"], false);
    assert_eq!(r["residual_pass"], false);
}

#[test]
fn verify_passes_hand_built_five_segment_word() {
    let cfg = make_config(0.25f64.acos(), 0.5).unwrap();
    let seg = |r: Role, d: f64| Segment { control: cfg.control(r), duration: d };
    let segments = vec![
        seg(Role::PlusY, cfg.t_hat_y),
        seg(Role::PlusX, cfg.t_hat_x),
        seg(Role::PlusWp, 1.3),
        seg(Role::PlusX, cfg.t_hat_x),
        seg(Role::PlusY, cfg.t_hat_y),
    ];
    let target = realize(&cfg, &segments);
    let p = Plan {
        alpha: cfg.alpha,
        kappa: cfg.kappa,
        target,
        total_cost: segments_cost(&cfg, &segments),
        residual: 0.0,
        segments,
        pattern_id: Some(twoaxis::patterns::PatternId::IV),
        symmetry_index: 0,
        window: (1, 5),
        parameters: Default::default(),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("iv.json");
    fs::write(&path, plan_to_json(&p).unwrap()).unwrap();
    let o = verify(&path);
    let r = json(&o);
    assert_eq!(code(&o), 0, "{r}");
    assert_eq!(r["pmp"]["switches"].as_array().unwrap().len(), 4);
}

#[test]
fn round_trip_random_suite() {
    let cfgs = [(FRAC_PI_2, 1.0), (FRAC_PI_2, 0.5), (0.25f64.acos(), 0.5), (0.5f64.acos(), 0.25), (FRAC_PI_2, 0.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let dir = tempfile::tempdir().unwrap();
    for i in 0..50 {
        let (alpha, kappa) = cfgs[i % cfgs.len()];
        let q: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let target = format!("quat:{},{},{},{}", q[0], q[1], q[2], q[3]);
        let path = dir.path().join(format!("{i}.json"));
        let o = run(&[
            "plan", "--alpha", &alpha.to_string(), "--kappa", &kappa.to_string(),
            "--target", &target, "--json-out", path.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{target}: {}", String::from_utf8_lossy(&o.stderr));
        let o = verify(&path);
        assert_eq!(code(&o), 0, "case {i} ({alpha}, {kappa}) {target}: {}", String::from_utf8_lossy(&o.stdout));
    }
}

fn sweep(args: &[&str]) -> Vec<Vec<String>> {
    let mut full = vec!["sweep"];
    full.extend_from_slice(args);
    let o = run(&full);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,planner_cost,pattern_id,closed_form_cost"));
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn sweep_matches_closed_form() {
    let rows = sweep(&["--alpha", HALF_PI, "--kappa", "1", "--axis", "0,0,1", "--t-min", "0", "--t-max", "3.141592653589793", "--steps", "64"]);
    assert_eq!(rows.len(), 64);
    for r in &rows {
        let t: f64 = r[0].parse().unwrap();
        let cost: f64 = r[1].parse().unwrap();
        let (s, c) = (0.5 * t).sin_cos();
        let two_w = 2.0 * ((1.0 / (c + s)).min(1.0).acos() + (c - s).clamp(-1.0, 1.0).acos());
        let closed: f64 = r[3].parse().unwrap();
        assert!((cost - closed).abs() < 1e-8, "{r:?}");
        // loose check against the textbook form, whose acos loses digits near t = pi
        assert!((cost - two_w.min(PI + t)).abs() < 1e-6, "{r:?}");
    }
}

#[test]
fn sweep_single_step_at_zero() {
    let rows = sweep(&["--alpha", "1", "--kappa", "0.3", "--axis", "1,1,0", "--t-min", "0", "--t-max", "2", "--steps", "1"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[0][3], "");
}

#[test]
fn sweep_agrees_with_word_descent() {
    let (alpha, kappa) = (PI / 3.0, 0.4);
    let rows = sweep(&["--alpha", &alpha.to_string(), "--kappa", "0.4", "--axis", "0,0,1", "--t-min", "0.3", "--t-max", "3", "--steps", "8"]);
    let cfg = make_config(alpha, kappa).unwrap();
    for r in &rows {
        let t: f64 = r[0].parse().unwrap();
        let cost: f64 = r[1].parse().unwrap();
        let wd = word_descent(&cfg, quat_exp(Vec3::E3 * (0.5 * t)), 4, 2).unwrap();
        assert!((cost - wd.cost_upper).abs() < 1e-5, "t = {t}: {cost} vs {}", wd.cost_upper);
    }
}

fn pattern_ids(args: &[&str]) -> Vec<String> {
    let mut full = vec!["patterns"];
    full.extend_from_slice(args);
    let o = run(&full);
    assert_eq!(code(&o), 0);
    String::from_utf8(o.stdout).unwrap().lines().skip(2).map(|l| l.split_whitespace().next().unwrap().to_string()).collect()
}

#[test]
fn pattern_tables() {
    assert_eq!(pattern_ids(&["--alpha", HALF_PI, "--kappa", "0"]), ["IX", "X"]);
    assert_eq!(pattern_ids(&["--alpha", HALF_PI, "--kappa", "1"]), ["I", "II", "III"]);
    assert_eq!(pattern_ids(&["--alpha", &0.25f64.acos().to_string(), "--kappa", "0.5"]), ["I", "IV", "V", "VI", "VII"]);
}

#[test]
fn oracle_identity_costs_nothing() {
    for method in ["descent", "graph"] {
        let o = run(&["oracle", "--alpha", "1", "--kappa", "0.5", "--target", "quat:0,0,0,1", "--method", method]);
        assert_eq!(code(&o), 0);
        assert_eq!(json(&o)["cost_upper"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn oracle_reports_settings() {
    let o = run(&[
        "oracle", "--alpha", HALF_PI, "--kappa", "1", "--target", "axis-angle:1,0,0:0.6",
        "--method", "descent", "--max-segments", "2", "--restarts", "1",
    ]);
    let v = json(&o);
    assert!((v["cost_upper"].as_f64().unwrap() - 0.6).abs() < 1e-6);
    assert_eq!(v["settings"]["max_segments"], 2);
    assert_eq!(v["settings"]["restarts"], 1);
}

#[test]
fn thread_cap_is_honoured() {
    let o = Command::new(env!("CARGO_BIN_EXE_twoaxis"))
        .args(["plan", "--alpha", "1", "--kappa", "0.5", "--target", "axis-angle:0,0,1:1"])
        .env("TWOAXIS_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let o = Command::new(env!("CARGO_BIN_EXE_twoaxis"))
        .args(["plan", "--alpha", "1", "--kappa", "0.5", "--target", "axis-angle:0,0,1:1"])
        .env("TWOAXIS_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}
