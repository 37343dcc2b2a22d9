use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

use twoaxis::config::{make_config, Role};
use twoaxis::oracle::{graph_search, word_descent};
use twoaxis::patterns::PatternId;
use twoaxis::pmp::{check_segments, region_control, AdjointState};
use twoaxis::rotations::{quat_distance, quat_exp, Quat, Vec3};
use twoaxis::solver::{plan, plan_cost_curve, realize, Segment};

fn z_turn(t: f64) -> Quat {
    quat_exp(Vec3::E3 * (0.5 * t))
}

fn example_one_cost(t: f64) -> f64 {
    let (s, c) = (0.5 * t).sin_cos();
    2.0 * ((1.0 / (c + s)).acos() + (c - s).acos())
}

#[test]
fn quarter_turn_ties_both_families() {
    let cfg = make_config(FRAC_PI_2, 1.0).unwrap();
    let p = plan(&cfg, z_turn(FRAC_PI_2)).unwrap();
    assert!((p.total_cost - 1.5 * PI).abs() < 1e-8);
    assert!((example_one_cost(FRAC_PI_2) - 1.5 * PI).abs() < 1e-12);
}

#[test]
fn large_turn_uses_the_conjugated_axis_word() {
    let cfg = make_config(FRAC_PI_2, 1.0).unwrap();
    let t = 0.9 * PI;
    let p = plan(&cfg, z_turn(t)).unwrap();
    assert!((p.total_cost - (t + PI)).abs() < 1e-8);
    let d: Vec<f64> = p.segments.iter().map(|s| s.duration).collect();
    assert_eq!(d.len(), 3, "{:?}", p.segments);
    // a quarter turn, the target angle about the other axis, then a quarter turn back
    assert!((d[0] - FRAC_PI_2).abs() < 1e-8 && (d[1] - t).abs() < 1e-8 && (d[2] - FRAC_PI_2).abs() < 1e-8, "{d:?}");
    let outer = p.segments[0].control.role().unwrap();
    assert_eq!(p.segments[2].control.role(), Some(outer.negated()));
}

#[test]
fn cost_curve_on_the_right_angle_configuration() {
    let cfg = make_config(FRAC_PI_2, 1.0).unwrap();
    let curve = plan_cost_curve(&cfg, Vec3::E3, &[0.0, FRAC_PI_4, PI]).unwrap();
    assert_eq!(curve[0].1, 0.0);
    assert_eq!(curve[0].2, "empty");
    assert!((curve[1].1 - example_one_cost(FRAC_PI_4)).abs() < 1e-8);
    assert!((curve[1].1 - 3.396_245_242_269_420).abs() < 1e-8);
    assert!((curve[2].1 - 2.0 * PI).abs() < 1e-8);
}

#[test]
fn corner_controls() {
    let cfg = make_config(0.25f64.acos(), 0.5).unwrap();
    let k = cfg.kappa;
    assert_eq!(region_control(&cfg, AdjointState::new(1.0, 0.0, 0.3)).unwrap(), [Role::PlusX]);
    assert_eq!(
        region_control(&cfg, AdjointState::new(1.0, k, 0.0)).unwrap(),
        [Role::PlusX, Role::PlusY, Role::PlusWm]
    );
    assert_eq!(
        region_control(&cfg, AdjointState::new(1.0, -k, 0.0)).unwrap(),
        [Role::PlusX, Role::MinusY, Role::PlusWp]
    );
}

#[test]
fn five_segment_word_is_certified_with_corner_switches() {
    let cfg = make_config(0.25f64.acos(), 0.5).unwrap();
    let seg = |r: Role, d: f64| Segment { control: cfg.control(r), duration: d };
    let word = [
        seg(Role::PlusY, cfg.t_hat_y),
        seg(Role::PlusX, cfg.t_hat_x),
        seg(Role::PlusWp, 0.8),
        seg(Role::PlusX, cfg.t_hat_x),
        seg(Role::PlusY, cfg.t_hat_y),
    ];
    let r = check_segments(&cfg, &word);
    assert!(r.pass, "{:?}", r.failure);
    assert_eq!(r.switches.len(), 4);
    // the W-segment dwells on a corner
    for sw in &r.switches[1..3] {
        assert!(sw.costate_at_switch.z.abs() < 1e-6, "{sw:?}");
    }
}

#[test]
fn repeated_half_turn_is_not_extremal() {
    let cfg = make_config(1.2, 0.6).unwrap();
    let x = cfg.control(Role::PlusX);
    let r = check_segments(&cfg, &[Segment { control: x, duration: PI }, Segment { control: x, duration: PI }]);
    assert!(!r.pass);
    let r = check_segments(&cfg, &[Segment { control: x, duration: 0.7 }]);
    assert!(r.pass);
}

#[test]
fn graph_search_examples() {
    let cfg = make_config(FRAC_PI_2, 1.0).unwrap();
    let r = graph_search(&cfg, quat_exp(Vec3::E1 * 0.15), 0.01, 0.02).unwrap();
    assert!((r.cost_upper - 0.3).abs() <= 0.01 + 0.02, "{}", r.cost_upper);
    assert!(quat_distance(realize(&cfg, &r.plan_found), quat_exp(Vec3::E1 * 0.15)) <= r.residual + 1e-12);
    let r = graph_search(&cfg, z_turn(0.5), 0.01, 0.02).unwrap();
    assert!((r.cost_upper - example_one_cost(0.5)).abs() <= 0.05, "{}", r.cost_upper);
}

#[test]
fn graph_search_refines_with_the_time_step() {
    let cfg = make_config(FRAC_PI_2, 0.5).unwrap();
    let g = quat_exp(Vec3::new(0.2, -0.4, 0.5));
    let costs: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&d| graph_search(&cfg, g, d, 0.02).unwrap().cost_upper).collect();
    assert!(costs[1] <= costs[0] + 0.01 && costs[2] <= costs[1] + 0.01, "{costs:?}");
}

#[test]
fn word_descent_examples() {
    let cfg = make_config(1.0, 0.35).unwrap();
    let r = word_descent(&cfg, quat_exp(cfg.y * 0.2), 1, 2).unwrap();
    assert!((r.cost_upper - 0.35 * 0.4).abs() < 1e-9, "{}", r.cost_upper);

    let cfg = make_config(FRAC_PI_2, 1.0).unwrap();
    let g = z_turn(FRAC_PI_3);
    let r = word_descent(&cfg, g, 4, 2).unwrap();
    assert!((r.cost_upper - plan(&cfg, g).unwrap().total_cost).abs() < 1e-6);
}

#[test]
fn free_second_axis() {
    let cfg = make_config(FRAC_PI_2, 0.0).unwrap();
    let g = z_turn(FRAC_PI_4);
    let p = plan(&cfg, g).unwrap();
    assert!((p.total_cost - FRAC_PI_4).abs() < 1e-8);
    assert!(matches!(p.pattern_id, Some(PatternId::IX) | Some(PatternId::X)));
    let r = word_descent(&cfg, g, 3, 2).unwrap();
    assert!((r.cost_upper - FRAC_PI_4).abs() < 1e-6, "{}", r.cost_upper);
    // the paid turn is about W₊ = X, the half turns about Y cost nothing
    let paid: Vec<_> = r.plan_found.iter().filter(|s| s.control.a.abs() > 0.5).collect();
    assert_eq!(paid.len(), 1);
    assert!((paid[0].duration - FRAC_PI_4).abs() < 1e-6);
}
