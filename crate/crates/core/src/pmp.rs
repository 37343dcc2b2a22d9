//! Necessary-condition certification of plans through the adjoint (costate)
//! dynamics.
//!
//! The costate is written `p = sS + qQ + zZ` with `S = X - cY`, `Q = Y - cX`
//! and normalized so that `p₀ = -sin²α`. Along an optimal trajectory it stays
//! on the boundary `max(|s| - 1, |q| - κ) = 0`, selects the control through
//! the Hamiltonian and evolves by `dp/dt = p × u`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{AxisConfig, Control, Letter, Role};
use crate::rotations::Vec3;
use crate::solver::{Plan, Segment};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PmpError {
    #[error("costate violates M(p) = 0 (excess {0:.3e})")]
    Inadmissible(f64),
    #[error("control/region mismatch: {0:?} not allowed at ({1}, {2}, {3})")]
    ControlMismatch(Control, f64, f64, f64),
    #[error("not on a common trajectory: circle mismatch {0:.3e}")]
    NotOnCommonTrajectory(f64),
}

/// Tolerance on region membership and corner hits.
pub const REGION_TOL: f64 = 1e-6;
/// Tolerance on `|p|` conservation, relative to `max(1, |p|)`.
pub const CONSERVATION_TOL: f64 = 1e-9;
/// Tolerance of `region_control` and `adjoint_flow` preconditions.
pub const ADMISSIBLE_TOL: f64 = 1e-9;

const SCAN_POINTS: usize = 2001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjointState {
    pub s: f64,
    pub q: f64,
    pub z: f64,
}

impl AdjointState {
    pub fn new(s: f64, q: f64, z: f64) -> Self {
        AdjointState { s, q, z }
    }

    pub fn to_vector(self, cfg: &AxisConfig) -> Vec3 {
        cfg.s * self.s + cfg.q * self.q + cfg.z * self.z
    }

    pub fn from_vector(cfg: &AxisConfig, p: Vec3) -> Self {
        let n = cfg.sin_alpha * cfg.sin_alpha;
        AdjointState { s: p.dot(cfg.x) / n, q: p.dot(cfg.y) / n, z: p.dot(cfg.z) / n }
    }

    /// `M(p) / sin²α`
    pub fn excess(self, kappa: f64) -> f64 {
        (self.s.abs() - 1.0).max(self.q.abs() - kappa)
    }

    /// `|p|² / sin²α = s² + q² + z² - 2csq`
    pub fn norm_sq(self, cfg: &AxisConfig) -> f64 {
        self.s * self.s + self.q * self.q + self.z * self.z - 2.0 * cfg.c * self.s * self.q
    }
}

/// `(M(p) - H(p, u)) / sin²α` on the admissible boundary.
pub fn hamiltonian_deficiency(cfg: &AxisConfig, st: AdjointState, u: &Control) -> f64 {
    u.a.abs() + cfg.kappa * u.b.abs() - st.s * u.a - st.q * u.b
}

fn allowed(cfg: &AxisConfig, st: AdjointState, u: &Control, tol: f64) -> bool {
    hamiltonian_deficiency(cfg, st, u) <= tol
}

/// Controls among the eight roles that maximize the Hamiltonian at `st`.
pub fn region_control(cfg: &AxisConfig, st: AdjointState) -> Result<Vec<Role>, PmpError> {
    let e = st.excess(cfg.kappa);
    if e.abs() > ADMISSIBLE_TOL {
        return Err(PmpError::Inadmissible(e));
    }
    let mut roles: Vec<Role> = Role::ALL
        .into_iter()
        .filter(|&r| allowed(cfg, st, &cfg.control(r), ADMISSIBLE_TOL))
        .collect();
    // critical controls only dwell where the flow leaves the corner fixed
    roles.retain(|r| !r.is_critical() || st.z.abs() <= ADMISSIBLE_TOL);
    if cfg.kappa == 0.0 {
        // W₊ and W₋ coincide; report it once
        roles.retain(|r| r.letter() != Letter::Wm);
    }
    Ok(roles)
}

/// `p(t) = R(-t u) p(0)` in ambient coordinates; unconstrained.
fn flow_vector(cfg: &AxisConfig, p: Vec3, u: &Control, t: f64) -> Vec3 {
    let g = cfg.generator(u);
    let w = g.norm();
    if w == 0.0 || t == 0.0 {
        return p;
    }
    let n = g * (1.0 / w);
    let (sn, cs) = (-t * w).sin_cos();
    let along = n * n.dot(p);
    along + (p - along) * cs + n.cross(p) * sn
}

/// Evolves `st` under constant control `u` for parameter time `t`.
pub fn adjoint_flow(
    st: AdjointState,
    u: &Control,
    t: f64,
    cfg: &AxisConfig,
) -> Result<AdjointState, PmpError> {
    let e = st.excess(cfg.kappa);
    if e.abs() > ADMISSIBLE_TOL {
        return Err(PmpError::Inadmissible(e));
    }
    if !allowed(cfg, st, u, ADMISSIBLE_TOL) {
        return Err(PmpError::ControlMismatch(*u, st.s, st.q, st.z));
    }
    if t == 0.0 {
        return Ok(st);
    }
    Ok(adjoint_flow_unchecked(st, u, t, cfg))
}

pub fn adjoint_flow_unchecked(st: AdjointState, u: &Control, t: f64, cfg: &AxisConfig) -> AdjointState {
    AdjointState::from_vector(cfg, flow_vector(cfg, st.to_vector(cfg), u, t))
}

/// X-arc and Y-arc evolution times between corners whose `z` coordinates are
/// `z1` and `z2`.
pub fn switch_time_relation(cfg: &AxisConfig, z1: f64, z2: f64) -> Result<(f64, f64), PmpError> {
    let (k, c) = (cfg.kappa, cfg.c);
    let mismatch = z1 * z1 + (k - c) * (k - c) - z2 * z2 - (k + c) * (k + c);
    let scale = 1.0 + z1 * z1 + z2 * z2;
    if mismatch.abs() > 1e-9 * scale {
        return Err(PmpError::NotOnCommonTrajectory(mismatch));
    }
    let d = z2 - z1;
    let s = z2 + z1;
    let t_x = 2.0 * (d * d + 4.0 * k * k).sqrt().atan2((s * s + 4.0 * c * c).sqrt());
    let t_y = 2.0 * (d * d + 4.0).sqrt().atan2((s * s + 4.0 * k * k * c * c).sqrt());
    Ok((t_x, t_y))
}

/// The `z1` matching `z2` on the circle through both corners.
pub fn partner_z(cfg: &AxisConfig, z2: f64) -> f64 {
    (z2 * z2 + 4.0 * cfg.kappa * cfg.c).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub time: f64,
    pub from_control: Control,
    pub to_control: Control,
    pub costate_at_switch: AdjointState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmpFailure {
    pub reason: String,
    /// Index of the offending segment.
    pub segment: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmpReport {
    pub pass: bool,
    pub failure: Option<PmpFailure>,
    pub initial_costate: Option<AdjointState>,
    pub switches: Vec<SwitchEvent>,
}

impl PmpReport {
    fn pass(initial: Option<AdjointState>, switches: Vec<SwitchEvent>) -> Self {
        PmpReport { pass: true, failure: None, initial_costate: initial, switches }
    }

    fn fail(reason: impl Into<String>, segment: usize) -> Self {
        PmpReport {
            pass: false,
            failure: Some(PmpFailure { reason: reason.into(), segment }),
            initial_costate: None,
            switches: Vec::new(),
        }
    }
}

/// Extremes of `A + B cos(wτ) + C sin(wτ)` over `τ ∈ [0, T]`.
fn sinusoid_range(a: f64, b: f64, c: f64, w: f64, t: f64) -> (f64, f64) {
    let f = |x: f64| a + b * x.cos() + c * x.sin();
    let end = w * t;
    let mut lo = f(0.0).min(f(end));
    let mut hi = f(0.0).max(f(end));
    let r = b.hypot(c);
    if r > 0.0 && end > 0.0 {
        let phi = c.atan2(b);
        // critical phases phi + kπ inside [0, end]
        let k0 = ((0.0 - phi) / std::f64::consts::PI).ceil() as i64;
        let mut k = k0;
        loop {
            let x = phi + k as f64 * std::f64::consts::PI;
            if x > end {
                break;
            }
            let v = f(x);
            lo = lo.min(v);
            hi = hi.max(v);
            k += 1;
        }
    }
    (lo, hi)
}

/// `A, B, C` of the functional `ℓ · p(τ)` along `p(τ) = R(-τ g) p`.
fn functional_terms(p: Vec3, n: Vec3, l: Vec3) -> (f64, f64, f64) {
    let a = n.dot(p) * l.dot(n);
    (a, l.dot(p) - a, -l.dot(n.cross(p)))
}

/// Worst normalized violation along one segment started at `p`.
fn segment_violation(cfg: &AxisConfig, p: Vec3, seg: &Segment) -> (f64, &'static str) {
    let n2 = cfg.sin_alpha * cfg.sin_alpha;
    let g = cfg.generator(&seg.control);
    let w = g.norm();
    let (a, b) = (seg.control.a, seg.control.b);
    let k = cfg.kappa;
    // functionals giving s, q and the Hamiltonian part s a + q b
    let lx = cfg.x * (1.0 / n2);
    let ly = cfg.y * (1.0 / n2);
    let lh = lx * a + ly * b;
    let ranges = |l: Vec3| -> (f64, f64) {
        if w == 0.0 {
            let v = l.dot(p);
            return (v, v);
        }
        let nn = g * (1.0 / w);
        let (aa, bb, cc) = functional_terms(p, nn, l);
        sinusoid_range(aa, bb, cc, w, seg.duration)
    };
    let (s_lo, s_hi) = ranges(lx);
    let (q_lo, q_hi) = ranges(ly);
    let (h_lo, _) = ranges(lh);
    let region = (s_hi.max(-s_lo) - 1.0).max(q_hi.max(-q_lo) - k);
    let deficiency = a.abs() + k * b.abs() - h_lo;
    if region >= deficiency {
        (region / REGION_TOL, "costate leaves the admissible region")
    } else {
        (deficiency / REGION_TOL, "control does not maximize the Hamiltonian")
    }
}

struct Evaluation {
    score: f64,
    reason: &'static str,
    segment: usize,
    switches: Vec<SwitchEvent>,
}

/// Normalized worst violation of the whole trajectory from `p0`; certified
/// iff `score <= 1`.
fn evaluate(cfg: &AxisConfig, segments: &[Segment], p0: Vec3) -> Evaluation {
    let mut worst = (0.0f64, "", 0usize);
    let bump = |v: f64, why: &'static str, k: usize, worst: &mut (f64, &'static str, usize)| {
        if !(v <= worst.0) {
            *worst = (if v.is_nan() { f64::INFINITY } else { v }, why, k);
        }
    };
    let norm0 = p0.norm();
    let mut p = p0;
    let mut time = 0.0;
    let mut switches = Vec::new();
    for (k, seg) in segments.iter().enumerate() {
        let st = AdjointState::from_vector(cfg, p);
        if k > 0 {
            let prev = &segments[k - 1];
            let d = hamiltonian_deficiency(cfg, st, &prev.control)
                .max(hamiltonian_deficiency(cfg, st, &seg.control));
            bump(d / REGION_TOL, "switch away from a critical corner", k, &mut worst);
            switches.push(SwitchEvent {
                time,
                from_control: prev.control,
                to_control: seg.control,
                costate_at_switch: st,
            });
        }
        let (v, why) = segment_violation(cfg, p, seg);
        bump(v, why, k, &mut worst);
        p = flow_vector(cfg, p, &seg.control, seg.duration);
        time += seg.duration;
        let drift = (p.norm() - norm0).abs() / norm0.max(1.0);
        bump(drift / CONSERVATION_TOL, "|p| not conserved", k, &mut worst);
    }
    Evaluation { score: worst.0, reason: worst.1, segment: worst.2, switches }
}

fn back(cfg: &AxisConfig, segments: &[Segment], upto: usize, p: Vec3) -> Vec3 {
    segments[..upto]
        .iter()
        .rev()
        .fold(p, |p, s| flow_vector(cfg, p, &s.control, -s.duration))
}

fn is_axis_control(u: &Control) -> bool {
    u.a == 0.0 || u.b == 0.0
}

fn corner(cfg: &AxisConfig, ss: f64, sq: f64, z: f64) -> Vec3 {
    AdjointState::new(ss, sq * cfg.kappa, z).to_vector(cfg)
}

const SIGNS: [(f64, f64); 4] = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];

/// Initial costates fixed by a dwell at a corner.
fn dwell_candidates(cfg: &AxisConfig, segments: &[Segment]) -> Vec<Vec3> {
    segments
        .iter()
        .enumerate()
        .filter(|(_, s)| !is_axis_control(&s.control))
        .map(|(k, s)| {
            let p = corner(cfg, s.control.a.signum(), s.control.b.signum(), 0.0);
            back(cfg, segments, k, p)
        })
        .collect()
}

/// A one-parameter family of initial costates `base + ζ dir`.
struct Family {
    base: Vec3,
    dir: Vec3,
}

fn families(cfg: &AxisConfig, segments: &[Segment]) -> Vec<Family> {
    let mut out = Vec::new();
    let n = segments.len();
    if n == 1 {
        // enter or leave through any corner
        for &(ss, sq) in &SIGNS {
            out.push(Family { base: corner(cfg, ss, sq, 0.0), dir: cfg.z });
            let base = back(cfg, segments, 1, corner(cfg, ss, sq, 0.0));
            out.push(Family { base, dir: back(cfg, segments, 1, cfg.z) });
        }
        return out;
    }
    for j in 1..n {
        let (u, v) = (&segments[j - 1].control, &segments[j].control);
        for &(ss, sq) in &SIGNS {
            let st = AdjointState::new(ss, sq * cfg.kappa, 0.0);
            if !allowed(cfg, st, u, REGION_TOL) || !allowed(cfg, st, v, REGION_TOL) {
                continue;
            }
            let base = back(cfg, segments, j, st.to_vector(cfg));
            let dir = back(cfg, segments, j, cfg.z);
            out.push(Family { base, dir });
        }
    }
    out
}

/// Closed-form `ζ` values making some other switch land on a corner.
fn affine_roots(cfg: &AxisConfig, segments: &[Segment], fam: &Family) -> Vec<f64> {
    let n2 = cfg.sin_alpha * cfg.sin_alpha;
    let mut roots = vec![0.0];
    let mut p = fam.base;
    let mut d = fam.dir;
    for (k, seg) in segments.iter().enumerate() {
        if k > 0 {
            for (l, target) in [(cfg.x, 1.0), (cfg.y, cfg.kappa)] {
                let (pv, dv) = (p.dot(l) / n2, d.dot(l) / n2);
                if dv.abs() > 1e-12 {
                    for sign in [1.0, -1.0] {
                        roots.push((sign * target - pv) / dv);
                    }
                }
            }
        }
        p = flow_vector(cfg, p, &seg.control, seg.duration);
        d = flow_vector(cfg, d, &seg.control, seg.duration);
    }
    roots.retain(|r| r.is_finite());
    roots
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Scans `ζ = tan θ` and refines the best few basins.
fn scan_family(cfg: &AxisConfig, segments: &[Segment], fam: &Family) -> Vec<f64> {
    let half = std::f64::consts::FRAC_PI_2;
    let step = 2.0 * half / (SCAN_POINTS + 1) as f64;
    let score = |theta: f64| {
        let zeta = theta.tan();
        evaluate(cfg, segments, fam.base + fam.dir * zeta).score
    };
    let thetas: Vec<f64> = (1..=SCAN_POINTS).map(|i| -half + i as f64 * step).collect();
    let vals: Vec<f64> = thetas.iter().map(|&t| score(t)).collect();
    let mut minima: Vec<usize> = (0..vals.len())
        .filter(|&i| {
            let l = if i == 0 { f64::INFINITY } else { vals[i - 1] };
            let r = if i + 1 == vals.len() { f64::INFINITY } else { vals[i + 1] };
            vals[i] <= l && vals[i] <= r
        })
        .collect();
    minima.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    minima.truncate(8);
    minima
        .into_iter()
        .map(|i| {
            let (th, _) = golden_min(&score, thetas[i] - step, thetas[i] + step, 60);
            th.tan()
        })
        .collect()
}

/// Fixed point `p ∥ u` of a single-segment plan, scaled onto the boundary.
fn fixed_point(cfg: &AxisConfig, seg: &Segment) -> Option<Vec3> {
    let g = cfg.generator(&seg.control);
    let st = AdjointState::from_vector(cfg, g);
    let scale = st.s.abs().max(if cfg.kappa > 0.0 { st.q.abs() / cfg.kappa } else { 0.0 });
    (scale > 0.0).then(|| g * (1.0 / scale))
}

/// Searches for an initial costate certifying `plan`.
pub fn check_plan(cfg: &AxisConfig, plan: &Plan) -> PmpReport {
    check_segments(cfg, &plan.segments)
}

pub fn check_segments(cfg: &AxisConfig, segments: &[Segment]) -> PmpReport {
    if segments.is_empty() {
        return PmpReport::pass(None, Vec::new());
    }
    for (k, s) in segments.iter().enumerate() {
        if !(s.duration >= 0.0) || !s.duration.is_finite() {
            return PmpReport::fail("negative or non-finite duration", k);
        }
        if k > 0 && segments[k - 1].control.a == s.control.a && segments[k - 1].control.b == s.control.b {
            return PmpReport::fail("repeated control without a switch", k);
        }
    }

    let mut best: Option<(f64, Vec3)> = None;
    let consider = |p0: Vec3, best: &mut Option<(f64, Vec3)>| -> bool {
        if !p0.norm().is_finite() {
            return false;
        }
        let e = evaluate(cfg, segments, p0);
        if best.as_ref().map_or(true, |(s, _)| e.score < *s) {
            *best = Some((e.score, p0));
        }
        e.score <= 1.0
    };
    let finish = |p0: Vec3| {
        let e = evaluate(cfg, segments, p0);
        PmpReport::pass(Some(AdjointState::from_vector(cfg, p0)), e.switches)
    };

    for p0 in dwell_candidates(cfg, segments) {
        if consider(p0, &mut best) {
            return finish(p0);
        }
    }
    if segments.len() == 1 {
        if let Some(p0) = fixed_point(cfg, &segments[0]) {
            if consider(p0, &mut best) {
                return finish(p0);
            }
        }
    }
    let fams = families(cfg, segments);
    for fam in &fams {
        for zeta in affine_roots(cfg, segments, fam) {
            let p0 = fam.base + fam.dir * zeta;
            if consider(p0, &mut best) {
                return finish(p0);
            }
        }
    }
    for fam in &fams {
        for zeta in scan_family(cfg, segments, fam) {
            let p0 = fam.base + fam.dir * zeta;
            if consider(p0, &mut best) {
                return finish(p0);
            }
        }
    }
    match best {
        Some((_, p0)) => {
            let e = evaluate(cfg, segments, p0);
            PmpReport::fail(e.reason, e.segment)
        }
        None => PmpReport::fail("no admissible initial costate", 0),
    }
}
