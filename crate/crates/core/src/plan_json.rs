//! Plan interchange format.
//!
//! Floats are written with 17 significant digits so a plan read back
//! replays to the same rotation bit for bit.

use std::collections::BTreeMap;
use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use thiserror::Error;

use crate::config::{control_cost, make_config, ConfigError};
use crate::patterns::PatternId;
use crate::rotations::{Quat, Vec3};
use crate::solver::{Plan, Segment};

/// Controls read from JSON are matched to a named role within this tolerance.
const ROLE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PlanJsonError {
    #[error("malformed plan JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown pattern id {0:?}")]
    PatternId(String),
    #[error("segment {0} has a zero control")]
    ZeroControl(usize),
    #[error("symmetry index {0} out of range")]
    SymmetryIndex(u8),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetJson {
    pub quat: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentJson {
    pub a: f64,
    pub b: f64,
    pub duration: f64,
    pub axis_unit: [f64; 3],
    pub rotation_angle: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanJson {
    pub alpha: f64,
    pub kappa: f64,
    pub target: TargetJson,
    pub segments: Vec<SegmentJson>,
    pub total_cost: f64,
    pub residual: f64,
    pub pattern_id: String,
    pub symmetry_index: u8,
    pub window: [usize; 2],
}

impl PlanJson {
    pub fn from_plan(plan: &Plan) -> Result<PlanJson, PlanJsonError> {
        let cfg = make_config(plan.alpha, plan.kappa)?;
        let segments = plan
            .segments
            .iter()
            .map(|s| {
                let g = cfg.generator(&s.control);
                let axis = g.normalized().unwrap_or(Vec3::E1);
                SegmentJson {
                    a: s.control.a,
                    b: s.control.b,
                    duration: s.duration,
                    axis_unit: axis.to_array(),
                    rotation_angle: g.norm() * s.duration,
                    cost: control_cost(&cfg, &s.control) * s.duration,
                }
            })
            .collect();
        Ok(PlanJson {
            alpha: plan.alpha,
            kappa: plan.kappa,
            target: TargetJson { quat: plan.target.to_array() },
            segments,
            total_cost: plan.total_cost,
            residual: plan.residual,
            pattern_id: plan.pattern_label().to_string(),
            symmetry_index: plan.symmetry_index,
            window: [plan.window.0, plan.window.1],
        })
    }

    /// Rebuilds the plan. Derived per-segment fields are ignored; the
    /// stored totals are kept as written so a verifier can audit them.
    pub fn to_plan(&self) -> Result<Plan, PlanJsonError> {
        let cfg = make_config(self.alpha, self.kappa)?;
        let pattern_id = match self.pattern_id.as_str() {
            "empty" => None,
            s => Some(PatternId::parse(s).ok_or_else(|| PlanJsonError::PatternId(s.to_string()))?),
        };
        if self.symmetry_index > 7 {
            return Err(PlanJsonError::SymmetryIndex(self.symmetry_index));
        }
        let segments = self
            .segments
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if s.a == 0.0 && s.b == 0.0 {
                    return Err(PlanJsonError::ZeroControl(i));
                }
                Ok(Segment { control: cfg.classify(s.a, s.b, ROLE_TOL), duration: s.duration })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Plan {
            alpha: self.alpha,
            kappa: self.kappa,
            target: Quat::from_array(self.target.quat),
            segments,
            total_cost: self.total_cost,
            residual: self.residual,
            pattern_id,
            symmetry_index: self.symmetry_index,
            window: (self.window[0], self.window[1]),
            parameters: BTreeMap::new(),
        })
    }
}

/// Pretty printer that writes every float as `d.dddddddddddddddde±x`.
/// Non-finite values become `null`.
struct SigDigits(PrettyFormatter<'static>);

impl Formatter for SigDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        if v.is_finite() {
            write!(w, "{v:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes any value with the 17-digit float format.
pub fn to_string_precise<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn plan_to_json(plan: &Plan) -> Result<String, PlanJsonError> {
    Ok(to_string_precise(&PlanJson::from_plan(plan)?)?)
}

pub fn plan_from_json(text: &str) -> Result<Plan, PlanJsonError> {
    serde_json::from_str::<PlanJson>(text)?.to_plan()
}
