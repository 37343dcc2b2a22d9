//! Brute-force upper bounds on the minimum cost, independent of the catalog.
//!
//! [`graph_search`] runs uniform-cost search over quantized unit quaternions
//! with the four axis controls. [`word_descent`] optimizes durations of every
//! short control word directly. Neither consults the pattern catalog.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{control_cost, segment_rotation, AxisConfig, Control, Role};
use crate::par::{self, ExecPolicy};
use crate::rotations::{quat_distance, quat_exp, Quat, Vec3};
use crate::solver::{realize, segments_cost, Segment};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("oracle budget exhausted after {expansions} expansions (best partial bound {best_partial})")]
    BudgetExhausted { expansions: usize, best_partial: f64 },
    #[error("time step out of range: {0} (expected 0 < delta <= 0.1)")]
    BadDelta(f64),
    #[error("quantization out of range: {0}")]
    BadQuant(f64),
    #[error("max_segments out of range: {0} (expected 1..=8)")]
    BadMaxSegments(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OracleSettings {
    pub delta: Option<f64>,
    pub quant: Option<f64>,
    pub max_segments: Option<usize>,
    pub restarts: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// `+∞` when nothing feasible was found.
    pub cost_upper: f64,
    pub plan_found: Vec<Segment>,
    /// Distance from the replayed `plan_found` to the target.
    pub residual: f64,
    pub settings: OracleSettings,
}

impl OracleResult {
    fn infeasible(settings: OracleSettings) -> Self {
        OracleResult { cost_upper: f64::INFINITY, plan_found: Vec::new(), residual: f64::INFINITY, settings }
    }
}

/// Expansion cap of [`graph_search`].
pub const DEFAULT_BUDGET: usize = 20_000_000;

type Key = u64;

/// Sentinel key of the arrival node; never produced by `cell_key`.
const GOAL: Key = u64::MAX;

const RAY_CELLS: u32 = 3;

fn cell_key(q: Quat, quant: f64) -> Key {
    let v = q.to_array();
    let lead = v.iter().copied().find(|x| x.abs() > 1e-15).unwrap_or(1.0);
    let sign = if lead < 0.0 { -1.0 } else { 1.0 };
    v.iter().fold(0u64, |acc, &x| {
        let k = (sign * x / quant).round() as i64 as i16;
        (acc << 16) | (k as u16 as u64)
    })
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    key: Key,
}

impl Eq for Entry {}

impl Ord for Entry {
    // reversed: BinaryHeap pops the cheapest, ties by key
    fn cmp(&self, o: &Self) -> Ordering {
        o.cost.total_cmp(&self.cost).then_with(|| o.key.cmp(&self.key))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// How a cell was reached: `steps` steps of control `ctrl` from `from`.
#[derive(Clone, Copy)]
struct Link {
    from: Key,
    ctrl: u8,
    steps: u32,
}

struct Node {
    cost: f64,
    rep: Quat,
    parent: Option<Link>,
    done: bool,
}

/// Uniform-cost search with controls `{±X, ±Y}` and time step `delta`.
///
/// Each cell keeps the exact quaternion it was first reached with; rays of
/// repeated steps leave a cell from that quaternion. The word found this way
/// ends within half a cell of the target. Its durations are then projected
/// onto the target and locally polished with the control sequence fixed, so
/// `cost_upper` is the cost of an exact decomposition.
pub fn graph_search(
    cfg: &AxisConfig,
    target: Quat,
    delta: f64,
    quant: f64,
) -> Result<OracleResult, OracleError> {
    graph_search_with_budget(cfg, target, delta, quant, DEFAULT_BUDGET)
}

pub fn graph_search_with_budget(
    cfg: &AxisConfig,
    target: Quat,
    delta: f64,
    quant: f64,
    budget: usize,
) -> Result<OracleResult, OracleError> {
    if !(delta > 0.0 && delta <= 0.1) {
        return Err(OracleError::BadDelta(delta));
    }
    if !(quant > 0.0 && quant <= 0.5) {
        return Err(OracleError::BadQuant(quant));
    }
    let settings = OracleSettings { delta: Some(delta), quant: Some(quant), ..Default::default() };
    let target = target.normalize();
    let controls: Vec<Control> =
        [Role::PlusX, Role::MinusX, Role::PlusY, Role::MinusY].map(|r| cfg.control(r)).to_vec();
    let steps: Vec<Quat> = controls.iter().map(|u| segment_rotation(cfg, u, delta)).collect();
    let weights: Vec<f64> = controls.iter().map(|u| delta * control_cost(cfg, u)).collect();
    // a micro-step landing within half a cell of the target counts as arrival
    let reach = 0.5 * quant;
    let max_run = ((4.0 * quant / delta).ceil() as u32).max(4) * 4 * RAY_CELLS;

    let start = cell_key(Quat::IDENTITY, quant);
    let mut nodes: HashMap<Key, Node> = HashMap::new();
    nodes.insert(start, Node { cost: 0.0, rep: Quat::IDENTITY, parent: None, done: false });
    let mut heap = BinaryHeap::new();
    heap.push(Entry { cost: 0.0, key: start });
    let mut expansions = 0usize;
    let mut frontier = 0.0;
    if quat_distance(Quat::IDENTITY, target) <= reach {
        let link = Link { from: start, ctrl: 0, steps: 0 };
        nodes.insert(GOAL, Node { cost: 0.0, rep: Quat::IDENTITY, parent: Some(link), done: false });
        heap.push(Entry { cost: 0.0, key: GOAL });
    }

    let offer = |nodes: &mut HashMap<Key, Node>, heap: &mut BinaryHeap<Entry>, k: Key, c: f64, q: Quat, link: Link| {
        if nodes.get(&k).map_or(true, |m| !m.done && c < m.cost) {
            nodes.insert(k, Node { cost: c, rep: q, parent: Some(link), done: false });
            heap.push(Entry { cost: c, key: k });
        }
    };

    while let Some(Entry { cost, key }) = heap.pop() {
        let node = nodes.get_mut(&key).expect("queued cells are recorded");
        if node.done || cost > node.cost {
            continue;
        }
        node.done = true;
        let rep = node.rep;
        frontier = cost;
        if key == GOAL {
            return Ok(trace(cfg, &nodes, key, &controls, delta, target, settings));
        }
        expansions += 1;
        if expansions > budget {
            return Err(OracleError::BudgetExhausted { expansions, best_partial: frontier });
        }
        for (ci, step) in steps.iter().enumerate() {
            // each ray records every cell it crosses, not just the first
            let mut q = rep;
            let mut cell = key;
            let mut changes = 0u32;
            for n in 1..=max_run {
                q = (q * *step).normalize();
                let c = cost + n as f64 * weights[ci];
                let link = Link { from: key, ctrl: ci as u8, steps: n };
                if quat_distance(q, target) <= reach {
                    offer(&mut nodes, &mut heap, GOAL, c, q, link);
                }
                let k = cell_key(q, quant);
                if k == cell {
                    continue;
                }
                cell = k;
                if k != key {
                    offer(&mut nodes, &mut heap, k, c, q, link);
                }
                changes += 1;
                if changes >= RAY_CELLS {
                    break;
                }
            }
        }
    }
    Err(OracleError::BudgetExhausted { expansions, best_partial: frontier })
}

fn trace(
    cfg: &AxisConfig,
    nodes: &HashMap<Key, Node>,
    goal: Key,
    controls: &[Control],
    delta: f64,
    target: Quat,
    settings: OracleSettings,
) -> OracleResult {
    let mut runs = Vec::new();
    let mut k = goal;
    while let Some(link) = nodes[&k].parent {
        runs.push((link.ctrl, link.steps));
        k = link.from;
    }
    runs.reverse();
    let mut plan: Vec<Segment> = Vec::new();
    for (ci, n) in runs {
        let d = n as f64 * delta;
        match plan.last_mut() {
            Some(last) if last.control == controls[ci as usize] => last.duration += d,
            _ if n == 0 => {}
            _ => plan.push(Segment { control: controls[ci as usize], duration: d }),
        }
    }
    if let Some(exact) = repair(cfg, &plan, target, REPAIR_TOL) {
        plan = exact;
    }
    OracleResult {
        cost_upper: segments_cost(cfg, &plan),
        residual: quat_distance(realize(cfg, &plan), target),
        plan_found: plan,
        settings,
    }
}

/// Residual a repaired search word must reach.
const REPAIR_TOL: f64 = 1e-10;

/// Moves the durations of `plan` onto `target` and lowers the cost with the
/// control sequence held fixed.
fn repair(cfg: &AxisConfig, plan: &[Segment], target: Quat, tol: f64) -> Option<Vec<Segment>> {
    if plan.is_empty() {
        return None;
    }
    let roles: Vec<Role> = plan.iter().map(|s| s.control.role()).collect::<Option<_>>()?;
    let mut word = Word::new(cfg, &roles);
    for (u, s) in word.upper.iter_mut().zip(plan) {
        *u = u.max(s.duration) * 2.0;
    }
    let mut t: Vec<f64> = plan.iter().map(|s| s.duration).collect();
    if !project(&word, &mut t, target, tol) {
        return None;
    }
    polish(&word, &mut t, target, tol);
    let mut out: Vec<Segment> = Vec::new();
    for (u, &d) in word.controls.iter().zip(&t) {
        if d <= 1e-12 {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.control == *u => last.duration += d,
            _ => out.push(Segment { control: *u, duration: d }),
        }
    }
    (quat_distance(realize(cfg, &out), target) < tol).then_some(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentOptions {
    pub seed: u64,
    /// Feasibility threshold on the quaternion distance.
    pub feasibility: f64,
    pub policy: ExecPolicy,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions { seed: 0x5eed, feasibility: 1e-8, policy: ExecPolicy::default() }
    }
}

/// Every sequence of the eight roles of length `1..=max_len` with no two
/// equal neighbours.
pub fn control_words(max_len: usize) -> Vec<Vec<Role>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<Role>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for r in Role::ALL {
                if w.last() != Some(&r) {
                    let mut v = w.clone();
                    v.push(r);
                    next.push(v);
                }
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

struct Word {
    half_gen: Vec<Vec3>,
    rates: Vec<f64>,
    upper: Vec<f64>,
    controls: Vec<Control>,
}

impl Word {
    fn new(cfg: &AxisConfig, roles: &[Role]) -> Word {
        let controls: Vec<Control> = roles.iter().map(|&r| cfg.control(r)).collect();
        Word {
            half_gen: controls.iter().map(|u| cfg.generator(u) * 0.5).collect(),
            rates: controls.iter().map(|u| control_cost(cfg, u)).collect(),
            upper: controls.iter().map(|u| std::f64::consts::PI / cfg.angular_rate(u)).collect(),
            controls,
        }
    }

    fn len(&self) -> usize {
        self.rates.len()
    }

    fn quat(&self, t: &[f64]) -> Quat {
        let mut q = Quat::IDENTITY;
        for (g, &ti) in self.half_gen.iter().zip(t) {
            q = q * quat_exp(*g * ti);
        }
        q
    }

    fn cost(&self, t: &[f64]) -> f64 {
        self.rates.iter().zip(t).map(|(r, t)| r * t).sum()
    }

    fn residual(&self, t: &[f64], target: Quat) -> [f64; 4] {
        let w = self.quat(t);
        let s = if w.dot(target) < 0.0 { -1.0 } else { 1.0 };
        let d = if s > 0.0 { w - target } else { w + target };
        [d.a, d.b, d.c, d.d]
    }

    fn jacobian(&self, t: &[f64], target: Quat) -> Vec<[f64; 4]> {
        let h = 1e-7;
        let mut x = t.to_vec();
        (0..t.len())
            .map(|j| {
                x[j] = t[j] + h;
                let p = self.residual(&x, target);
                x[j] = t[j] - h;
                let m = self.residual(&x, target);
                x[j] = t[j];
                [0, 1, 2, 3].map(|i| (p[i] - m[i]) / (2.0 * h))
            })
            .collect()
    }

    fn clamp(&self, t: &mut [f64]) {
        for (ti, &u) in t.iter_mut().zip(&self.upper) {
            *ti = ti.clamp(0.0, u);
        }
    }
}

/// Solves the 4×4 symmetric positive system `m y = r` by Cholesky.
fn chol4(m: [[f64; 4]; 4], r: [f64; 4]) -> Option<[f64; 4]> {
    let mut l = [[0.0f64; 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = [0.0; 4];
    for i in 0..4 {
        let mut s = r[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    for i in (0..4).rev() {
        let mut s = y[i];
        for k in i + 1..4 {
            s -= l[k][i] * y[k];
        }
        y[i] = s / l[i][i];
    }
    Some(y)
}

/// `Jᵀ (J Jᵀ + λ I)⁻¹ v` with `J` stored column-wise.
fn min_norm(jac: &[[f64; 4]], v: [f64; 4], lambda: f64) -> Option<Vec<f64>> {
    let mut m = [[0.0f64; 4]; 4];
    for col in jac {
        for i in 0..4 {
            for k in 0..4 {
                m[i][k] += col[i] * col[k];
            }
        }
    }
    for (i, row) in m.iter_mut().enumerate() {
        row[i] += lambda;
    }
    let y = chol4(m, v)?;
    Some(jac.iter().map(|col| (0..4).map(|i| col[i] * y[i]).sum()).collect())
}

/// Gauss-Newton minimum-norm steps onto `word(t) = ±target`.
fn project(word: &Word, t: &mut Vec<f64>, target: Quat, tol: f64) -> bool {
    let mut lambda = 1e-10;
    for _ in 0..60 {
        let r = word.residual(t, target);
        let f: f64 = r.iter().map(|v| v * v).sum();
        if f.sqrt() < 0.1 * tol {
            return true;
        }
        let jac = word.jacobian(t, target);
        let Some(step) = min_norm(&jac, r, lambda) else { return false };
        let mut next: Vec<f64> = t.iter().zip(&step).map(|(a, s)| a - s).collect();
        word.clamp(&mut next);
        let rn = word.residual(&next, target);
        if rn.iter().map(|v| v * v).sum::<f64>() < f {
            *t = next;
            lambda = (lambda * 0.1).max(1e-14);
        } else {
            lambda *= 100.0;
            if lambda > 1e4 {
                break;
            }
        }
    }
    quat_distance(word.quat(t), target) < tol
}

fn golden_1d(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
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
        x1
    } else {
        x2
    }
}

/// Coordinate descent on `cost + μ |residual|²` with a rising penalty.
fn penalized_descent(word: &Word, t: &mut [f64], target: Quat) {
    for (sweep, mu) in [10.0, 100.0, 1000.0].into_iter().enumerate() {
        let width = 0.5f64.powi(sweep as i32 + 1);
        for i in 0..word.len() {
            let f = |v: f64| {
                let mut x = t.to_vec();
                x[i] = v;
                let r = word.residual(&x, target);
                word.cost(&x) + mu * r.iter().map(|v| v * v).sum::<f64>()
            };
            let h = width * word.upper[i];
            let lo = (t[i] - h).max(0.0);
            let hi = (t[i] + h).min(word.upper[i]);
            t[i] = golden_1d(&f, lo, hi, 24);
        }
    }
}

/// Reduced-gradient descent of the cost along the feasible set.
fn polish(word: &Word, t: &mut Vec<f64>, target: Quat, tol: f64) {
    let n = word.len();
    let mut step = 0.25;
    for _ in 0..200 {
        let jac = word.jacobian(t, target);
        // fix coordinates pinned at a bound by the cost gradient
        let free: Vec<bool> = (0..n)
            .map(|i| !(t[i] <= 0.0 && word.rates[i] > 0.0) && !(t[i] >= word.upper[i] && word.rates[i] < 0.0))
            .collect();
        let fj: Vec<[f64; 4]> = (0..n).map(|i| if free[i] { jac[i] } else { [0.0; 4] }).collect();
        let w: Vec<f64> = (0..n).map(|i| if free[i] { word.rates[i] } else { 0.0 }).collect();
        // J w, then d = -(w - Jᵀ (J Jᵀ)⁻¹ J w)
        let mut jw = [0.0; 4];
        for (col, wi) in fj.iter().zip(&w) {
            for k in 0..4 {
                jw[k] += col[k] * wi;
            }
        }
        let Some(back) = min_norm(&fj, jw, 1e-12) else { return };
        let d: Vec<f64> = (0..n).map(|i| -(w[i] - back[i])).collect();
        let dn = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if dn < 1e-12 {
            return;
        }
        let cost0 = word.cost(t);
        let mut moved = false;
        while step * dn > 1e-13 {
            let mut cand: Vec<f64> = t.iter().zip(&d).map(|(a, di)| a + step * di / dn).collect();
            word.clamp(&mut cand);
            if project(word, &mut cand, target, tol) && word.cost(&cand) < cost0 - 1e-15 {
                *t = cand;
                moved = true;
                step = (step * 2.0).min(1.0);
                break;
            }
            step *= 0.5;
        }
        if !moved {
            return;
        }
    }
}

fn descend_word(
    cfg: &AxisConfig,
    roles: &[Role],
    target: Quat,
    restarts: usize,
    seed: u64,
    tol: f64,
) -> Option<(f64, Vec<Segment>)> {
    let word = Word::new(cfg, roles);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..restarts.max(1) {
        let mut t: Vec<f64> = word.upper.iter().map(|&u| rng.gen_range(0.0..u)).collect();
        penalized_descent(&word, &mut t, target);
        if !project(&word, &mut t, target, tol) {
            continue;
        }
        polish(&word, &mut t, target, tol);
        if quat_distance(word.quat(&t), target) >= tol {
            continue;
        }
        let c = word.cost(&t);
        if best.as_ref().map_or(true, |(b, _)| c < *b) {
            best = Some((c, t));
        }
    }
    let (_, t) = best?;
    let segs: Vec<Segment> = word
        .controls
        .iter()
        .zip(&t)
        .filter(|(_, &d)| d > 1e-12)
        .map(|(u, &d)| Segment { control: *u, duration: d })
        .collect();
    Some((segments_cost(cfg, &segs), segs))
}

/// Best decomposition found by optimizing every control word of length up to
/// `max_segments` over controls `{±X, ±Y, ±W₊, ±W₋}`.
pub fn word_descent(
    cfg: &AxisConfig,
    target: Quat,
    max_segments: usize,
    restarts: usize,
) -> Result<OracleResult, OracleError> {
    word_descent_with(cfg, target, max_segments, restarts, &DescentOptions::default())
}

pub fn word_descent_with(
    cfg: &AxisConfig,
    target: Quat,
    max_segments: usize,
    restarts: usize,
    opts: &DescentOptions,
) -> Result<OracleResult, OracleError> {
    if !(1..=8).contains(&max_segments) {
        return Err(OracleError::BadMaxSegments(max_segments));
    }
    let settings = OracleSettings {
        max_segments: Some(max_segments),
        restarts: Some(restarts),
        ..Default::default()
    };
    let target = target.normalize();
    if quat_distance(target, Quat::IDENTITY) < opts.feasibility {
        return Ok(OracleResult {
            cost_upper: 0.0,
            plan_found: Vec::new(),
            residual: quat_distance(target, Quat::IDENTITY),
            settings,
        });
    }
    let words = control_words(max_segments);
    let found = par::map(opts.policy, &words, |w| {
        let seed = w.iter().fold(opts.seed, |h, r| h.wrapping_mul(31).wrapping_add(*r as u64 + 1));
        descend_word(cfg, w, target, restarts, seed, opts.feasibility)
    });
    // first minimum in enumeration order, independent of scheduling
    let best = found
        .into_iter()
        .flatten()
        .fold(None::<(f64, Vec<Segment>)>, |acc, x| match acc {
            Some(a) if a.0 <= x.0 => Some(a),
            _ => Some(x),
        });
    Ok(match best {
        Some((cost, plan)) => OracleResult {
            cost_upper: cost,
            residual: quat_distance(realize(cfg, &plan), target),
            plan_found: plan,
            settings,
        },
        None => OracleResult::infeasible(settings),
    })
}
