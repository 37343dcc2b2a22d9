//! Problem instances: the two axes, their cost ratio, and derived constants.
//!
//! The frame is fixed with `X = e1` and `Y` in the `e1 e2` plane, so
//! `Z = X × Y = sin α e3`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rotations::{quat_exp, Quat, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("axis angle out of range: {0} (expected 0 < alpha <= pi/2)")]
    AxisAngleOutOfRange(f64),
    #[error("cost ratio out of range: {0} (expected 0 <= kappa <= 1)")]
    CostRatioOutOfRange(f64),
}

/// `|κ - c|` below this is treated as the bifurcation point.
pub const BIFURCATION_WIDTH: f64 = 1e-9;

/// Axis angles this close to π/2 are snapped to `c = 0` exactly.
const RIGHT_ANGLE_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Regime {
    KappaZero,
    CZero,
    CLessKappa,
    KappaLessC,
    Bifurcation,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::KappaZero => "kappa = 0",
            Regime::CZero => "c = 0",
            Regime::CLessKappa => "c < kappa",
            Regime::KappaLessC => "kappa < c",
            Regime::Bifurcation => "kappa = c",
        };
        f.write_str(s)
    }
}

/// The eight controls that can appear in an optimal decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    PlusX,
    MinusX,
    PlusY,
    MinusY,
    PlusWp,
    MinusWp,
    PlusWm,
    MinusWm,
}

/// Axis letter of a role, ignoring sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    X,
    Y,
    Wp,
    Wm,
}

impl Role {
    pub const ALL: [Role; 8] = [
        Role::PlusX,
        Role::MinusX,
        Role::PlusY,
        Role::MinusY,
        Role::PlusWp,
        Role::MinusWp,
        Role::PlusWm,
        Role::MinusWm,
    ];

    pub fn from_parts(letter: Letter, positive: bool) -> Role {
        match (letter, positive) {
            (Letter::X, true) => Role::PlusX,
            (Letter::X, false) => Role::MinusX,
            (Letter::Y, true) => Role::PlusY,
            (Letter::Y, false) => Role::MinusY,
            (Letter::Wp, true) => Role::PlusWp,
            (Letter::Wp, false) => Role::MinusWp,
            (Letter::Wm, true) => Role::PlusWm,
            (Letter::Wm, false) => Role::MinusWm,
        }
    }

    pub fn letter(self) -> Letter {
        match self {
            Role::PlusX | Role::MinusX => Letter::X,
            Role::PlusY | Role::MinusY => Letter::Y,
            Role::PlusWp | Role::MinusWp => Letter::Wp,
            Role::PlusWm | Role::MinusWm => Letter::Wm,
        }
    }

    pub fn is_positive(self) -> bool {
        matches!(self, Role::PlusX | Role::PlusY | Role::PlusWp | Role::PlusWm)
    }

    pub fn negated(self) -> Role {
        Role::from_parts(self.letter(), !self.is_positive())
    }

    pub fn is_critical(self) -> bool {
        matches!(self.letter(), Letter::Wp | Letter::Wm)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Role::PlusX => "X",
            Role::MinusX => "-X",
            Role::PlusY => "Y",
            Role::MinusY => "-Y",
            Role::PlusWp => "W+",
            Role::MinusWp => "-W+",
            Role::PlusWm => "W-",
            Role::MinusWm => "-W-",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Tag of a stored control: one of the eight roles or a generic mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControlTag {
    Role(Role),
    General,
}

/// A control `u = aX + bY` stored with `|a| + |b| = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Control {
    pub a: f64,
    pub b: f64,
    pub tag: ControlTag,
}

impl Control {
    /// Builds an ℓ1-normalized control from arbitrary coefficients.
    /// Returns `None` for `a = b = 0`.
    pub fn general(a: f64, b: f64) -> Option<Control> {
        let n = a.abs() + b.abs();
        (n > 0.0).then(|| Control { a: a / n, b: b / n, tag: ControlTag::General })
    }

    pub fn role(self) -> Option<Role> {
        match self.tag {
            ControlTag::Role(r) => Some(r),
            ControlTag::General => None,
        }
    }
}

/// A problem instance built from the axis angle `alpha` and the cost ratio
/// `kappa = cost(Y) / cost(X)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisConfig {
    pub alpha: f64,
    pub kappa: f64,
    /// `cos α`
    pub c: f64,
    pub sin_alpha: f64,
    pub x: Vec3,
    pub y: Vec3,
    pub z: Vec3,
    /// Dual basis: `S = X - cY`, `Q = Y - cX`.
    pub s: Vec3,
    pub q: Vec3,
    /// Unnormalized `W₊ = (1 + κc)X - (κ + c)Y`.
    pub w_plus: Vec3,
    /// Unnormalized `W₋ = (1 - κc)X + (κ - c)Y`.
    pub w_minus: Vec3,
    pub t_hat_x: f64,
    pub t_hat_y: f64,
    pub regime: Regime,
}

pub fn make_config(alpha: f64, kappa: f64) -> Result<AxisConfig, ConfigError> {
    AxisConfig::new(alpha, kappa)
}

impl AxisConfig {
    pub fn new(alpha: f64, kappa: f64) -> Result<AxisConfig, ConfigError> {
        if !(alpha > 0.0 && alpha <= FRAC_PI_2 + RIGHT_ANGLE_SNAP) {
            return Err(ConfigError::AxisAngleOutOfRange(alpha));
        }
        if !(0.0..=1.0).contains(&kappa) {
            return Err(ConfigError::CostRatioOutOfRange(kappa));
        }
        let (mut sin_alpha, mut c) = alpha.sin_cos();
        if (alpha - FRAC_PI_2).abs() <= RIGHT_ANGLE_SNAP {
            c = 0.0;
            sin_alpha = 1.0;
        }
        let x = Vec3::E1;
        let y = Vec3::new(c, sin_alpha, 0.0);
        let z = x.cross(y);
        let s = x - y * c;
        let q = y - x * c;
        let w_plus = x * (1.0 + kappa * c) - y * (kappa + c);
        let w_minus = x * (1.0 - kappa * c) + y * (kappa - c);

        // Half-angle forms of t̂_X = arccos((c-κ)/(c+κ)) and
        // t̂_Y = arccos(-(1-κc)/(1+κc)); they avoid the arccos slope near ±1.
        let t_hat_x = 2.0 * kappa.sqrt().atan2(c.sqrt());
        let t_hat_y = 2.0 * 1.0f64.atan2((kappa * c).sqrt());

        let regime = if kappa == 0.0 {
            Regime::KappaZero
        } else if c == 0.0 {
            Regime::CZero
        } else if (kappa - c).abs() <= BIFURCATION_WIDTH {
            Regime::Bifurcation
        } else if c < kappa {
            Regime::CLessKappa
        } else {
            Regime::KappaLessC
        };

        Ok(AxisConfig {
            alpha,
            kappa,
            c,
            sin_alpha,
            x,
            y,
            z,
            s,
            q,
            w_plus,
            w_minus,
            t_hat_x,
            t_hat_y,
            regime,
        })
    }

    /// ℓ1-normalized `(a, b)` coefficients of a role.
    pub fn role_coefficients(&self, role: Role) -> (f64, f64) {
        let (k, c) = (self.kappa, self.c);
        let (a, b) = match role.letter() {
            Letter::X => (1.0, 0.0),
            Letter::Y => (0.0, 1.0),
            Letter::Wp => (1.0 + k * c, -(k + c)),
            Letter::Wm => (1.0 - k * c, k - c),
        };
        let n = a.abs() + b.abs();
        let sign = if role.is_positive() { 1.0 } else { -1.0 };
        (sign * a / n, sign * b / n)
    }

    pub fn control(&self, role: Role) -> Control {
        let (a, b) = self.role_coefficients(role);
        Control { a, b, tag: ControlTag::Role(role) }
    }

    /// Tags `(a, b)` with the first role it matches to within `tol`.
    pub fn classify(&self, a: f64, b: f64, tol: f64) -> Control {
        let n = a.abs() + b.abs();
        let (a, b) = if n > 0.0 { (a / n, b / n) } else { (a, b) };
        for role in Role::ALL {
            let (ra, rb) = self.role_coefficients(role);
            if (ra - a).abs() <= tol && (rb - b).abs() <= tol {
                return Control { a: ra, b: rb, tag: ControlTag::Role(role) };
            }
        }
        Control { a, b, tag: ControlTag::General }
    }

    /// The generator `aX + bY` as a vector of the ambient frame.
    pub fn generator(&self, u: &Control) -> Vec3 {
        self.x * u.a + self.y * u.b
    }

    /// Rotation angle produced per unit of parameter time.
    pub fn angular_rate(&self, u: &Control) -> f64 {
        self.generator(u).norm()
    }

    /// Parameter time at which a control has turned the body by π.
    pub fn half_turn_time(&self, role: Role) -> f64 {
        std::f64::consts::PI / self.angular_rate(&self.control(role))
    }
}

/// `|a| cost(X) + |b| cost(Y)` with `cost(X) = 1`, `cost(Y) = κ`.
pub fn control_cost(cfg: &AxisConfig, u: &Control) -> f64 {
    u.a.abs() + cfg.kappa * u.b.abs()
}

/// SU(2) lift `exp((t/2)(aX + bY))` of the rotation `R(t(aX + bY))`.
pub fn segment_rotation(cfg: &AxisConfig, u: &Control, t: f64) -> Quat {
    quat_exp(cfg.generator(u) * (0.5 * t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn right_angle_unit_cost() {
        let cfg = make_config(FRAC_PI_2, 1.0).unwrap();
        assert_eq!(cfg.c, 0.0);
        assert_eq!(cfg.regime, Regime::CZero);
        assert_eq!(cfg.w_plus, Vec3::new(1.0, -1.0, 0.0));
        assert_eq!(cfg.w_minus, Vec3::new(1.0, 1.0, 0.0));
        assert!((cfg.t_hat_x - PI).abs() < 1e-15);
        assert!((cfg.t_hat_y - PI).abs() < 1e-15);
    }

    #[test]
    fn critical_times_match_arccos_form() {
        let cfg = make_config(0.25f64.acos(), 0.5).unwrap();
        assert_eq!(cfg.regime, Regime::CLessKappa);
        // arccos(-1/3), arccos(-7/9) evaluated to 30 digits
        assert!((cfg.t_hat_x - 1.910_633_236_249_018_6).abs() < 1e-14);
        assert!((cfg.t_hat_y - 2.461_918_834_681_549_4).abs() < 1e-14);
        let (c, k) = (cfg.c, cfg.kappa);
        assert!((cfg.t_hat_x - ((c - k) / (c + k)).acos()).abs() < 1e-13);
        assert!((cfg.t_hat_y - (-(1.0 - k * c) / (1.0 + k * c)).acos()).abs() < 1e-13);
    }

    #[test]
    fn kappa_zero_collapses_critical_controls() {
        let cfg = make_config(FRAC_PI_2, 0.0).unwrap();
        assert_eq!(cfg.regime, Regime::KappaZero);
        assert_eq!(cfg.w_plus, cfg.x);
        assert_eq!(cfg.w_minus, cfg.x);
        let cfg = make_config(1.0, 0.0).unwrap();
        assert_eq!(cfg.t_hat_x, 0.0);
        assert!((cfg.t_hat_y - PI).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(matches!(make_config(0.0, 0.5), Err(ConfigError::AxisAngleOutOfRange(_))));
        assert!(matches!(make_config(2.0, 0.5), Err(ConfigError::AxisAngleOutOfRange(_))));
        assert!(matches!(make_config(1.0, 1.5), Err(ConfigError::CostRatioOutOfRange(_))));
        assert!(matches!(make_config(1.0, -0.1), Err(ConfigError::CostRatioOutOfRange(_))));
        assert!(matches!(make_config(f64::NAN, 0.5), Err(ConfigError::AxisAngleOutOfRange(_))));
    }

    #[test]
    fn regimes() {
        assert_eq!(make_config(1.0, 0.9).unwrap().regime, Regime::CLessKappa);
        assert_eq!(make_config(1.0, 0.2).unwrap().regime, Regime::KappaLessC);
        let c = 1.0f64.cos();
        assert_eq!(make_config(1.0, c).unwrap().regime, Regime::Bifurcation);
    }

    #[test]
    fn control_costs() {
        let cfg = make_config(FRAC_PI_2, 1.0).unwrap();
        assert_eq!(control_cost(&cfg, &cfg.control(Role::PlusX)), 1.0);
        let wp = cfg.control(Role::PlusWp);
        assert_eq!((wp.a, wp.b), (0.5, -0.5));
        assert_eq!(control_cost(&cfg, &wp), 1.0);
        let cfg = make_config(1.0, 0.3).unwrap();
        assert_eq!(control_cost(&cfg, &cfg.control(Role::MinusY)), 0.3);
    }

    #[test]
    fn segment_rotation_examples() {
        let cfg = make_config(1.2, 0.4).unwrap();
        let x = cfg.control(Role::PlusX);
        assert_eq!(segment_rotation(&cfg, &x, 0.7), quat_exp(cfg.x * 0.35));
        assert_eq!(segment_rotation(&cfg, &cfg.control(Role::MinusWp), 0.0), Quat::IDENTITY);

        let cfg = make_config(FRAC_PI_2, 1.0).unwrap();
        let wm = cfg.control(Role::PlusWm);
        assert_eq!((wm.a, wm.b), (0.5, 0.5));
        let t = 2f64.sqrt() * PI;
        assert!((cfg.angular_rate(&wm) * t - PI).abs() < 1e-15);
        assert!((cfg.half_turn_time(Role::PlusWm) - t).abs() < 1e-14);
        let q = segment_rotation(&cfg, &wm, t);
        assert!(q.d.abs() < 1e-15);
        let axis = q.vector();
        assert!((axis.x - axis.y).abs() < 1e-15 && axis.z.abs() < 1e-15);
    }

    #[test]
    fn classify_recovers_roles() {
        let cfg = make_config(1.1, 0.6).unwrap();
        for role in Role::ALL {
            let (a, b) = cfg.role_coefficients(role);
            assert_eq!(cfg.classify(3.0 * a, 3.0 * b, 1e-12).tag, ControlTag::Role(role));
        }
        assert_eq!(cfg.classify(0.3, 0.3, 1e-12).tag, ControlTag::General);
    }
}
