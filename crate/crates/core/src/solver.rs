//! Numerical inversion of catalog subwords and global plan selection.
//!
//! Every shape has at most three free durations, so each one is solved by a
//! small Levenberg-Marquardt iteration started from a uniform grid over its
//! parameter box. The plan is the cheapest feasible solution over all shapes.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{control_cost, segment_rotation, AxisConfig, Control, Letter};
use crate::par::{self, ExecPolicy};
use crate::patterns::{all_shapes, PatternId, ShapeDuration, SubwordShape};
use crate::rotations::{quat_distance, quat_exp, Quat, Vec3, UNIT_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("parameter out of range: {name} = {value} not in [{lower}, {upper}]")]
    ParameterOutOfRange { name: String, value: f64, lower: f64, upper: f64 },
    #[error("expected {expected} parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },
    #[error("quaternion not normalized: |q| = {0}")]
    TargetNotUnit(f64),
    #[error("planner incomplete for target {0:?}")]
    Incomplete([f64; 4]),
    #[error("zero rotation axis")]
    ZeroAxis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Multistart grid points per free dimension.
    pub grid_points: usize,
    pub fd_step: f64,
    pub max_iter: usize,
    pub lambda0: f64,
    pub accept_tol: f64,
    pub bound_snap: f64,
    pub dedup_tol: f64,
    pub tie_tol: f64,
    pub policy: ExecPolicy,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            grid_points: 9,
            fd_step: 1e-6,
            max_iter: 200,
            lambda0: 1e-3,
            accept_tol: 1e-9,
            bound_snap: 1e-12,
            dedup_tol: 1e-8,
            tie_tol: 1e-10,
            policy: ExecPolicy::default(),
        }
    }
}

/// Segments at or below this duration are dropped from plans.
pub const MIN_DURATION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub control: Control,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub alpha: f64,
    pub kappa: f64,
    pub target: Quat,
    pub segments: Vec<Segment>,
    pub total_cost: f64,
    pub residual: f64,
    /// `None` for the empty plan.
    pub pattern_id: Option<PatternId>,
    pub symmetry_index: u8,
    pub window: (usize, usize),
    pub parameters: BTreeMap<String, f64>,
}

impl Plan {
    pub fn empty(cfg: &AxisConfig, target: Quat) -> Plan {
        Plan {
            alpha: cfg.alpha,
            kappa: cfg.kappa,
            target,
            segments: Vec::new(),
            total_cost: 0.0,
            residual: quat_distance(Quat::IDENTITY, target),
            pattern_id: None,
            symmetry_index: 0,
            window: (0, 0),
            parameters: BTreeMap::new(),
        }
    }

    /// Product of the segment rotations, left to right.
    pub fn realized(&self, cfg: &AxisConfig) -> Quat {
        realize(cfg, &self.segments)
    }

    pub fn pattern_label(&self) -> &'static str {
        self.pattern_id.map_or("empty", PatternId::as_str)
    }
}

pub fn realize(cfg: &AxisConfig, segments: &[Segment]) -> Quat {
    crate::rotations::quat_product(
        segments.iter().map(|s| segment_rotation(cfg, &s.control, s.duration)),
    )
}

pub fn segments_cost(cfg: &AxisConfig, segments: &[Segment]) -> f64 {
    segments.iter().map(|s| s.duration * control_cost(cfg, &s.control)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ShapeOutcome {
    Solved(Plan),
    Infeasible,
    Degenerate(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    pub pattern: PatternId,
    pub symmetry_index: u8,
    pub window: (usize, usize),
    pub outcome: ShapeOutcome,
    pub starts: usize,
    pub converged: usize,
    pub distinct: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveReport {
    pub entries: Vec<ShapeReport>,
}

impl SolveReport {
    pub fn solved(&self) -> impl Iterator<Item = &Plan> {
        self.entries.iter().filter_map(|e| match &e.outcome {
            ShapeOutcome::Solved(p) => Some(p),
            _ => None,
        })
    }
}

/// `t_X` on the tied branch through `(0, 0)` and `(π, π)`.
pub fn tied_t_x(kappa: f64, t_y: f64) -> f64 {
    let h = 0.5 * t_y;
    2.0 * (kappa * h.sin()).atan2(h.cos())
}

#[derive(Debug, Clone, Copy)]
enum CDur {
    Fixed(f64),
    Param(usize),
    PairX(usize),
    PairY(usize),
}

#[derive(Debug, Clone, Copy)]
struct CSlot {
    control: Control,
    half_gen: Vec3,
    rate_cost: f64,
    dur: CDur,
    /// Bounded above by the tied-pair value of this letter.
    pair_cap: bool,
    letter: Letter,
}

/// A shape lowered to direct evaluation.
#[derive(Debug, Clone)]
struct Compiled {
    slots: Vec<CSlot>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    names: Vec<String>,
    kappa: f64,
    pair: Option<usize>,
}

impl Compiled {
    fn new(cfg: &AxisConfig, shape: &SubwordShape) -> Compiled {
        let slots = shape
            .slots
            .iter()
            .map(|s| {
                let control = cfg.control(s.role);
                let letter = s.role.letter();
                let (dur, pair_cap) = match s.duration {
                    ShapeDuration::Fixed(v) => (CDur::Fixed(v), false),
                    ShapeDuration::Param { index, capped_by_pair } => {
                        (CDur::Param(index), capped_by_pair)
                    }
                    ShapeDuration::Pair => {
                        let i = shape.pair_param.expect("pair slot without pair parameter");
                        if letter == Letter::Y {
                            (CDur::PairY(i), false)
                        } else {
                            (CDur::PairX(i), false)
                        }
                    }
                };
                CSlot {
                    control,
                    half_gen: cfg.generator(&control) * 0.5,
                    rate_cost: control_cost(cfg, &control),
                    dur,
                    pair_cap,
                    letter,
                }
            })
            .collect();
        Compiled {
            slots,
            lower: shape.params.iter().map(|p| p.lower).collect(),
            upper: shape.params.iter().map(|p| p.upper).collect(),
            names: shape.params.iter().map(|p| p.name.clone()).collect(),
            kappa: cfg.kappa,
            pair: shape.pair_param,
        }
    }

    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn duration(&self, slot: &CSlot, x: &[f64]) -> f64 {
        match slot.dur {
            CDur::Fixed(v) => v,
            CDur::Param(i) => x[i],
            CDur::PairY(i) => x[i],
            CDur::PairX(i) => tied_t_x(self.kappa, x[i]),
        }
    }

    fn quat(&self, x: &[f64]) -> Quat {
        let mut q = Quat::IDENTITY;
        for s in &self.slots {
            q = q * quat_exp(s.half_gen * self.duration(s, x));
        }
        q
    }

    fn cost(&self, x: &[f64]) -> f64 {
        self.slots.iter().map(|s| s.rate_cost * self.duration(s, x)).sum()
    }

    /// Pair-capped end slots must not outlast the interior pair member of
    /// their letter.
    fn caps_hold(&self, x: &[f64], slack: f64) -> bool {
        let Some(p) = self.pair else { return true };
        self.slots.iter().all(|s| {
            if !s.pair_cap {
                return true;
            }
            let cap = if s.letter == Letter::Y { x[p] } else { tied_t_x(self.kappa, x[p]) };
            self.duration(s, x) <= cap + slack
        })
    }

    /// Nonzero segments, with neighbours of equal control merged.
    fn segments(&self, x: &[f64]) -> Vec<Segment> {
        let mut out: Vec<Segment> = Vec::with_capacity(self.slots.len());
        for s in &self.slots {
            let d = self.duration(s, x);
            if d <= MIN_DURATION {
                continue;
            }
            match out.last_mut() {
                Some(last) if last.control == s.control => last.duration += d,
                _ => out.push(Segment { control: s.control, duration: d }),
            }
        }
        out
    }
}

fn residual(word: Quat, target: Quat) -> [f64; 4] {
    let sigma = if word.dot(target) < 0.0 { -1.0 } else { 1.0 };
    [
        word.a - sigma * target.a,
        word.b - sigma * target.b,
        word.c - sigma * target.c,
        word.d - sigma * target.d,
    ]
}

fn sq(r: &[f64; 4]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Solves the `n × n` system (n ≤ 3) in place by Gaussian elimination with
/// partial pivoting. Returns `None` if singular.
fn solve_small(a: &mut [[f64; 3]; 3], b: &mut [f64; 3], n: usize) -> Option<()> {
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut v = b[col];
        for k in col + 1..n {
            v -= a[col][k] * b[k];
        }
        b[col] = v / a[col][col];
    }
    Some(())
}

struct LmResult {
    x: Vec<f64>,
    dist: f64,
    iterations: usize,
}

fn clamp_box(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

fn levenberg_marquardt(
    c: &Compiled,
    target: Quat,
    start: &[f64],
    opts: &SolverOptions,
) -> LmResult {
    let n = c.dim();
    let mut x = start.to_vec();
    let mut r = residual(c.quat(&x), target);
    let mut f = sq(&r);
    let mut lambda = opts.lambda0;
    let mut iterations = 0;
    let mut best_window = f;
    let tiny = opts.accept_tol * opts.accept_tol * 1e-6;

    while iterations < opts.max_iter && f > tiny {
        iterations += 1;
        // central-difference Jacobian, 4 × n
        let mut jac = [[0.0f64; 3]; 4];
        let mut xp = x.clone();
        for j in 0..n {
            let h = opts.fd_step;
            xp[j] = x[j] + h;
            let qp = c.quat(&xp);
            xp[j] = x[j] - h;
            let qm = c.quat(&xp);
            xp[j] = x[j];
            let rp = residual(qp, target);
            let rm = residual(qm, target);
            for i in 0..4 {
                jac[i][j] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let mut jtj = [[0.0f64; 3]; 3];
        let mut jtr = [0.0f64; 3];
        for a in 0..n {
            for b in 0..n {
                jtj[a][b] = (0..4).map(|i| jac[i][a] * jac[i][b]).sum();
            }
            jtr[a] = (0..4).map(|i| jac[i][a] * r[i]).sum();
        }

        let mut accepted = false;
        while lambda < 1e12 {
            let mut m = jtj;
            for a in 0..n {
                m[a][a] += lambda * (jtj[a][a] + 1e-12);
            }
            let mut step = [-jtr[0], -jtr[1], -jtr[2]];
            if solve_small(&mut m, &mut step, n).is_none() {
                lambda *= 10.0;
                continue;
            }
            let mut xn: Vec<f64> = (0..n).map(|j| x[j] + step[j]).collect();
            clamp_box(&mut xn, &c.lower, &c.upper);
            let rn = residual(c.quat(&xn), target);
            let fnew = sq(&rn);
            if fnew < f {
                let moved = (0..n).map(|j| (xn[j] - x[j]).abs()).fold(0.0, f64::max);
                x = xn;
                r = rn;
                f = fnew;
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                if moved < 1e-15 {
                    lambda = 1e12;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted || lambda >= 1e12 {
            break;
        }
        // stagnation: a basin with nonzero floor stops shrinking quickly
        if iterations % 10 == 0 {
            if f > 1e-12 && f > 0.5 * best_window {
                break;
            }
            best_window = f;
        }
    }
    LmResult { dist: quat_distance(c.quat(&x), target), x, iterations }
}

fn grid_starts(c: &Compiled, per_dim: usize) -> Vec<Vec<f64>> {
    let n = c.dim();
    let per_dim = per_dim.max(1);
    let total = per_dim.pow(n as u32);
    (0..total)
        .map(|mut k| {
            (0..n)
                .map(|j| {
                    let i = k % per_dim;
                    k /= per_dim;
                    let frac = if per_dim == 1 { 0.5 } else { i as f64 / (per_dim - 1) as f64 };
                    c.lower[j] + frac * (c.upper[j] - c.lower[j])
                })
                .collect()
        })
        .collect()
}

fn checked_params(shape: &SubwordShape, params: &[f64]) -> Result<(), SolverError> {
    if params.len() != shape.params.len() {
        return Err(SolverError::ParameterCount { expected: shape.params.len(), got: params.len() });
    }
    for (p, &v) in shape.params.iter().zip(params) {
        if !(v >= p.lower - MIN_DURATION && v <= p.upper + MIN_DURATION) {
            return Err(SolverError::ParameterOutOfRange {
                name: p.name.clone(),
                value: v,
                lower: p.lower,
                upper: p.upper,
            });
        }
    }
    Ok(())
}

/// The word of `shape` at `params`, as an SU(2) element.
pub fn word_quat(cfg: &AxisConfig, shape: &SubwordShape, params: &[f64]) -> Result<Quat, SolverError> {
    checked_params(shape, params)?;
    Ok(Compiled::new(cfg, shape).quat(params))
}

/// Segments of `shape` at `params`, zero durations included.
pub fn word_segments(
    cfg: &AxisConfig,
    shape: &SubwordShape,
    params: &[f64],
) -> Result<Vec<Segment>, SolverError> {
    checked_params(shape, params)?;
    let c = Compiled::new(cfg, shape);
    Ok(c.slots.iter().map(|s| Segment { control: s.control, duration: c.duration(s, params) }).collect())
}

struct ShapeSolution {
    x: Vec<f64>,
    cost: f64,
    dist: f64,
}

struct RawOutcome {
    best: Option<ShapeSolution>,
    starts: usize,
    converged: usize,
    distinct: usize,
    iterations: usize,
}

fn solve_compiled(c: &Compiled, target: Quat, opts: &SolverOptions) -> RawOutcome {
    let starts = grid_starts(c, opts.grid_points);
    let mut found: Vec<ShapeSolution> = Vec::new();
    let mut converged = 0;
    let mut iterations = 0;
    for s in &starts {
        let res = levenberg_marquardt(c, target, s, opts);
        iterations += res.iterations;
        if res.dist >= opts.accept_tol {
            continue;
        }
        let mut x = res.x;
        for j in 0..x.len() {
            if (x[j] - c.lower[j]).abs() <= opts.bound_snap {
                x[j] = c.lower[j];
            } else if (x[j] - c.upper[j]).abs() <= opts.bound_snap {
                x[j] = c.upper[j];
            }
        }
        let dist = quat_distance(c.quat(&x), target);
        if dist >= opts.accept_tol || !c.caps_hold(&x, opts.bound_snap) {
            continue;
        }
        converged += 1;
        let duplicate = found.iter().any(|f| {
            f.x.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) < opts.dedup_tol
        });
        if !duplicate {
            let cost = c.cost(&x);
            found.push(ShapeSolution { x, cost, dist });
        }
    }
    let distinct = found.len();
    let best = found.into_iter().min_by(|a, b| a.cost.total_cmp(&b.cost));
    RawOutcome { best, starts: starts.len(), converged, distinct, iterations }
}

fn make_plan(
    cfg: &AxisConfig,
    c: &Compiled,
    shape: &SubwordShape,
    target: Quat,
    sol: &ShapeSolution,
) -> Plan {
    let segments = c.segments(&sol.x);
    let mut parameters: BTreeMap<String, f64> =
        c.names.iter().cloned().zip(sol.x.iter().copied()).collect();
    if let Some(p) = c.pair {
        parameters.insert("t_X".to_string(), tied_t_x(c.kappa, sol.x[p]));
    }
    Plan {
        alpha: cfg.alpha,
        kappa: cfg.kappa,
        target,
        total_cost: segments_cost(cfg, &segments),
        residual: sol.dist,
        segments,
        pattern_id: Some(shape.pattern),
        symmetry_index: shape.symmetry.index(),
        window: shape.window,
        parameters,
    }
}

fn report_for(cfg: &AxisConfig, shape: &SubwordShape, target: Quat, opts: &SolverOptions) -> ShapeReport {
    let c = Compiled::new(cfg, shape);
    let raw = solve_compiled(&c, target, opts);
    finish_report(cfg, &c, shape, target, &raw)
}

fn finish_report(
    cfg: &AxisConfig,
    c: &Compiled,
    shape: &SubwordShape,
    target: Quat,
    raw: &RawOutcome,
) -> ShapeReport {
    let outcome = match &raw.best {
        Some(sol) => ShapeOutcome::Solved(make_plan(cfg, c, shape, target, sol)),
        None if c.dim() == 0 => ShapeOutcome::Degenerate("no free parameters".into()),
        None => ShapeOutcome::Infeasible,
    };
    ShapeReport {
        pattern: shape.pattern,
        symmetry_index: shape.symmetry.index(),
        window: shape.window,
        outcome,
        starts: raw.starts,
        converged: raw.converged,
        distinct: raw.distinct,
        iterations: raw.iterations,
    }
}

/// Solves one shape against `target`.
pub fn solve_shape(
    cfg: &AxisConfig,
    shape: &SubwordShape,
    target: Quat,
    opts: &SolverOptions,
) -> ShapeReport {
    report_for(cfg, shape, target, opts)
}

/// Key identifying shapes that evaluate the same function over the same box.
fn signature(c: &Compiled) -> Vec<u64> {
    let mut sig = Vec::with_capacity(c.slots.len() * 6 + c.dim() * 2);
    for s in &c.slots {
        sig.push(s.control.a.to_bits());
        sig.push(s.control.b.to_bits());
        let (tag, v) = match s.dur {
            CDur::Fixed(v) => (0u64, v.to_bits()),
            CDur::Param(i) => (1, i as u64),
            CDur::PairX(i) => (2, i as u64),
            CDur::PairY(i) => (3, i as u64),
        };
        sig.push(tag);
        sig.push(v);
        sig.push(s.pair_cap as u64);
    }
    for j in 0..c.dim() {
        sig.push(c.lower[j].to_bits());
        sig.push(c.upper[j].to_bits());
    }
    sig
}

fn check_target(target: Quat) -> Result<(), SolverError> {
    let n = target.norm();
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(SolverError::TargetNotUnit(n));
    }
    Ok(())
}

/// Solves every catalog shape. Shapes that lower to the same evaluation are
/// solved once and share the outcome.
pub fn solve_all(
    cfg: &AxisConfig,
    target: Quat,
    opts: &SolverOptions,
) -> Result<SolveReport, SolverError> {
    check_target(target)?;
    let target = target.normalize();
    let shapes = all_shapes(cfg);
    let compiled: Vec<Compiled> = shapes.iter().map(|s| Compiled::new(cfg, s)).collect();

    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut unique: Vec<usize> = Vec::new();
    let owner: Vec<usize> = compiled
        .iter()
        .enumerate()
        .map(|(i, c)| {
            *index.entry(signature(c)).or_insert_with(|| {
                unique.push(i);
                unique.len() - 1
            })
        })
        .collect();

    let raws = par::map(opts.policy, &unique, |&i| solve_compiled(&compiled[i], target, opts));
    let entries = shapes
        .iter()
        .zip(&compiled)
        .zip(&owner)
        .map(|((shape, c), &u)| finish_report(cfg, c, shape, target, &raws[u]))
        .collect();
    Ok(SolveReport { entries })
}

fn tie_key(p: &Plan) -> (usize, Option<PatternId>, u8, (usize, usize)) {
    (p.segments.len(), p.pattern_id, p.symmetry_index, p.window)
}

/// Picks the cheapest plan; near-ties go to fewer segments, then pattern,
/// symmetry index and window.
pub fn select_plan<'a>(plans: impl IntoIterator<Item = &'a Plan>, tie_tol: f64) -> Option<&'a Plan> {
    let plans: Vec<&Plan> = plans.into_iter().collect();
    let min = plans.iter().map(|p| p.total_cost).fold(f64::INFINITY, f64::min);
    plans
        .into_iter()
        .filter(|p| p.total_cost <= min + tie_tol)
        .min_by(|a, b| tie_key(a).cmp(&tie_key(b)))
}

/// Minimum-cost decomposition of `target`.
pub fn plan(cfg: &AxisConfig, target: Quat) -> Result<Plan, SolverError> {
    plan_with(cfg, target, &SolverOptions::default())
}

pub fn plan_with(cfg: &AxisConfig, target: Quat, opts: &SolverOptions) -> Result<Plan, SolverError> {
    check_target(target)?;
    let target = target.normalize();
    if quat_distance(target, Quat::IDENTITY) <= MIN_DURATION {
        return Ok(Plan::empty(cfg, target));
    }
    let report = solve_all(cfg, target, opts)?;
    select_plan(report.solved(), opts.tie_tol)
        .cloned()
        .ok_or(SolverError::Incomplete(target.to_array()))
}

/// Plan costs for rotations by each `t` about `axis`.
pub fn plan_cost_curve(
    cfg: &AxisConfig,
    axis: Vec3,
    t_grid: &[f64],
) -> Result<Vec<(f64, f64, String)>, SolverError> {
    let u = axis.normalized().ok_or(SolverError::ZeroAxis)?;
    t_grid
        .iter()
        .map(|&t| {
            let p = plan(cfg, quat_exp(u * (0.5 * t)))?;
            Ok((t, p.total_cost, p.pattern_label().to_string()))
        })
        .collect()
}
