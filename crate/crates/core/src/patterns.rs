//! Catalog of candidate-optimal words, their symmetry orbits, and subwords.
//!
//! A pattern is a word `R(t_1 C_1) ... R(t_n C_n)` whose durations are fixed
//! constants, free parameters, or the tied pair `(t_X, t_Y)` bound by
//! `tan(t_X/2) = κ tan(t_Y/2)`. Optimal decompositions are subwords of the
//! catalog words for the regime of `(α, κ)`, up to the listed symmetries.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{AxisConfig, Letter, Regime, Role};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PatternError {
    #[error("symmetry not applicable to pattern {pattern} (element {element} outside {orbit:?})")]
    SymmetryNotApplicable { pattern: PatternId, element: u8, orbit: Orbit },
    #[error("invalid window ({0}, {1}) for a word of {2} slots")]
    InvalidWindow(usize, usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PatternId {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
    VIII,
    IX,
    X,
}

impl PatternId {
    pub const ALL: [PatternId; 10] = [
        PatternId::I,
        PatternId::II,
        PatternId::III,
        PatternId::IV,
        PatternId::V,
        PatternId::VI,
        PatternId::VII,
        PatternId::VIII,
        PatternId::IX,
        PatternId::X,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PatternId::I => "I",
            PatternId::II => "II",
            PatternId::III => "III",
            PatternId::IV => "IV",
            PatternId::V => "V",
            PatternId::VI => "VI",
            PatternId::VII => "VII",
            PatternId::VIII => "VIII",
            PatternId::IX => "IX",
            PatternId::X => "X",
        }
    }

    pub fn parse(s: &str) -> Option<PatternId> {
        PatternId::ALL.into_iter().find(|p| p.as_str() == s)
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Element of the dihedral group of the control square.
///
/// Acts on the prototype coefficients `(a, b)` of a role (`X = (1,0)`,
/// `Y = (0,1)`, `W₊ ~ (1,-1)`, `W₋ ~ (1,1)`) as a signed permutation:
/// bit 2 swaps the coordinates, bit 1 negates the first, bit 0 the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SymmetryElement(u8);

impl SymmetryElement {
    pub const IDENTITY: SymmetryElement = SymmetryElement(0);
    /// `X ↦ X, Y ↦ -Y, W₊ ↔ W₋`
    pub const SIGMA1: SymmetryElement = SymmetryElement(1);
    /// `X ↔ Y, W₊ ↦ -W₊, W₋ ↦ W₋`
    pub const SIGMA2: SymmetryElement = SymmetryElement(4);
    /// Negate every control.
    pub const NU: SymmetryElement = SymmetryElement(3);

    pub fn new(index: u8) -> Option<SymmetryElement> {
        (index < 8).then_some(SymmetryElement(index))
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = SymmetryElement> {
        (0..8).map(SymmetryElement)
    }

    pub fn swaps(self) -> bool {
        self.0 & 4 != 0
    }

    fn apply_ab(self, (a, b): (i8, i8)) -> (i8, i8) {
        let (a, b) = if self.swaps() { (b, a) } else { (a, b) };
        let sa = if self.0 & 2 != 0 { -1 } else { 1 };
        let sb = if self.0 & 1 != 0 { -1 } else { 1 };
        (sa * a, sb * b)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(self, other: SymmetryElement) -> SymmetryElement {
        let e1 = self.apply_ab(other.apply_ab((1, 0)));
        let e2 = self.apply_ab(other.apply_ab((0, 1)));
        SymmetryElement::all()
            .find(|g| g.apply_ab((1, 0)) == e1 && g.apply_ab((0, 1)) == e2)
            .expect("signed permutations are closed under composition")
    }

    pub fn apply_role(self, role: Role) -> Role {
        let proto = role_prototype(role);
        let image = self.apply_ab(proto);
        Role::ALL
            .into_iter()
            .find(|r| role_prototype(*r) == image)
            .expect("the control square is invariant under its symmetries")
    }
}

fn role_prototype(role: Role) -> (i8, i8) {
    let (a, b) = match role.letter() {
        Letter::X => (1, 0),
        Letter::Y => (0, 1),
        Letter::Wp => (1, -1),
        Letter::Wm => (1, 1),
    };
    if role.is_positive() {
        (a, b)
    } else {
        (-a, -b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orbit {
    /// `(X, Y) ↦ {±X, ±Y}`, all 8 elements.
    FullD4,
    /// `(X, Y) ↦ (±X, ±Y)`
    HalfMirror,
    /// `(X, Y) ↦ {-X, -Y}`
    HalfSwap,
    /// `(X, Y) ↦ (-X, -Y)`
    NegOnly,
}

impl Orbit {
    pub fn elements(self) -> Vec<SymmetryElement> {
        let idx: &[u8] = match self {
            Orbit::FullD4 => &[0, 1, 2, 3, 4, 5, 6, 7],
            Orbit::HalfMirror => &[0, 1, 2, 3],
            Orbit::HalfSwap => &[0, 3, 4, 7],
            Orbit::NegOnly => &[0, 3],
        };
        idx.iter().map(|&i| SymmetryElement(i)).collect()
    }

    pub fn contains(self, g: SymmetryElement) -> bool {
        self.elements().contains(&g)
    }

    pub fn notation(self) -> &'static str {
        match self {
            Orbit::FullD4 => "{±X,±Y}",
            Orbit::HalfMirror => "(±X,±Y)",
            Orbit::HalfSwap => "{-X,-Y}",
            Orbit::NegOnly => "(-X,-Y)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FixedKind {
    Pi,
    HatX,
    HatY,
}

/// Upper bound rule of a free duration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FreeBound {
    /// Physical rotation angle capped at π.
    HalfTurn,
    /// `2 t̂` of the slot's axis letter.
    TwiceHat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Duration {
    Fixed { kind: FixedKind, value: f64 },
    Free { lower: f64, upper: f64, bound: FreeBound },
    /// Member of the pair bound by `tan(t_X/2) = κ tan(t_Y/2)`; which member is
    /// given by the slot's axis letter.
    Tied,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub role: Role,
    pub duration: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Constraint {
    TanRelation,
}

/// Constants needed to re-resolve durations after relabeling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Resolver {
    t_hat_x: f64,
    t_hat_y: f64,
    half_turn: [f64; 4],
}

impl Resolver {
    fn new(cfg: &AxisConfig) -> Self {
        Resolver {
            t_hat_x: cfg.t_hat_x,
            t_hat_y: cfg.t_hat_y,
            half_turn: [Role::PlusX, Role::PlusY, Role::PlusWp, Role::PlusWm]
                .map(|r| cfg.half_turn_time(r)),
        }
    }

    fn hat(&self, letter: Letter) -> f64 {
        match letter {
            Letter::Y => self.t_hat_y,
            _ => self.t_hat_x,
        }
    }

    fn fixed(&self, kind: FixedKind) -> f64 {
        match kind {
            FixedKind::Pi => std::f64::consts::PI,
            FixedKind::HatX => self.t_hat_x,
            FixedKind::HatY => self.t_hat_y,
        }
    }

    fn upper(&self, bound: FreeBound, role: Role) -> f64 {
        match bound {
            FreeBound::HalfTurn => self.half_turn[role.letter() as usize],
            FreeBound::TwiceHat => 2.0 * self.hat(role.letter()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    pub id: PatternId,
    pub slots: Vec<Slot>,
    pub constraint: Option<Constraint>,
    pub orbit: Orbit,
    /// Symmetry element already applied relative to the catalog form.
    pub symmetry: SymmetryElement,
    resolver: Resolver,
}

impl Pattern {
    fn build(
        cfg: &AxisConfig,
        id: PatternId,
        orbit: Orbit,
        slots: &[(Role, SlotSpec)],
    ) -> Pattern {
        let resolver = Resolver::new(cfg);
        let slots = slots
            .iter()
            .map(|&(role, spec)| Slot {
                role,
                duration: match spec {
                    SlotSpec::Fixed(kind) => Duration::Fixed { kind, value: resolver.fixed(kind) },
                    SlotSpec::Free(bound) => {
                        Duration::Free { lower: 0.0, upper: resolver.upper(bound, role), bound }
                    }
                    SlotSpec::Tied => Duration::Tied,
                },
            })
            .collect::<Vec<_>>();
        let constraint = slots
            .iter()
            .any(|s| matches!(s.duration, Duration::Tied))
            .then_some(Constraint::TanRelation);
        Pattern { id, slots, constraint, orbit, symmetry: SymmetryElement::IDENTITY, resolver }
    }

    /// Human-readable word, e.g. `R(πX) R(t W+) R(π X)`.
    pub fn word(&self) -> String {
        self.slots.iter().map(|s| slot_label(s)).collect::<Vec<_>>().join(" ")
    }

    pub fn constraint_label(&self) -> String {
        let mut parts = Vec::new();
        if self.constraint == Some(Constraint::TanRelation) {
            parts.push("tan(t_X/2) = kappa tan(t_Y/2), 0 < t_X, t_Y <= pi".to_string());
        }
        for s in &self.slots {
            if let Duration::Free { lower, upper, bound } = s.duration {
                let rule = match bound {
                    FreeBound::HalfTurn => "half turn",
                    FreeBound::TwiceHat => "2 t_hat",
                };
                parts.push(format!("{lower} <= t <= {upper:.6} ({rule})"));
            }
        }
        parts.join("; ")
    }
}

fn slot_label(s: &Slot) -> String {
    let sign = if s.role.is_positive() { "" } else { "-" };
    let axis = match s.role.letter() {
        Letter::X => "X",
        Letter::Y => "Y",
        Letter::Wp => "W+",
        Letter::Wm => "W-",
    };
    let dur = match s.duration {
        Duration::Fixed { kind: FixedKind::Pi, .. } => "pi".to_string(),
        Duration::Fixed { kind: FixedKind::HatX, .. } => "th_X".to_string(),
        Duration::Fixed { kind: FixedKind::HatY, .. } => "th_Y".to_string(),
        Duration::Free { .. } => "t".to_string(),
        Duration::Tied => match s.role.letter() {
            Letter::Y => "t_Y".to_string(),
            _ => "t_X".to_string(),
        },
    };
    format!("R({sign}{dur} {axis})")
}

#[derive(Clone, Copy)]
enum SlotSpec {
    Fixed(FixedKind),
    Free(FreeBound),
    Tied,
}

fn pattern_by_id(cfg: &AxisConfig, id: PatternId, orbit: Orbit) -> Pattern {
    use FixedKind::*;
    use Role::*;
    use SlotSpec::*;
    let pi = Fixed(Pi);
    let free = Free(FreeBound::HalfTurn);
    let slots: Vec<(Role, SlotSpec)> = match id {
        PatternId::I => vec![(PlusX, Tied), (PlusY, Tied), (MinusX, Tied), (MinusY, Tied)],
        PatternId::II => vec![(PlusX, pi), (PlusWp, free), (PlusX, pi)],
        PatternId::III => vec![(PlusX, pi), (PlusWp, free), (MinusY, pi)],
        PatternId::IV => vec![
            (PlusY, Fixed(HatY)),
            (PlusX, Fixed(HatX)),
            (PlusWp, free),
            (PlusX, Fixed(HatX)),
            (PlusY, Fixed(HatY)),
        ],
        PatternId::V => vec![
            (PlusY, Fixed(HatY)),
            (PlusX, Fixed(HatX)),
            (PlusWp, free),
            (MinusY, Fixed(HatY)),
            (MinusX, Fixed(HatX)),
        ],
        PatternId::VI => vec![(PlusY, pi), (PlusWm, free), (PlusY, pi)],
        PatternId::VII => vec![(PlusX, pi), (PlusWm, free), (PlusY, pi)],
        PatternId::VIII => vec![(PlusY, pi), (PlusX, Free(FreeBound::TwiceHat)), (PlusY, pi)],
        PatternId::IX => vec![(PlusY, pi), (PlusWp, free), (PlusY, pi)],
        PatternId::X => vec![(PlusY, pi), (PlusWp, free), (MinusY, pi)],
    };
    Pattern::build(cfg, id, orbit, &slots)
}

/// Candidate-optimal patterns for the regime of `cfg`.
pub fn catalog(cfg: &AxisConfig) -> Vec<Pattern> {
    use Orbit::*;
    use PatternId as P;
    let entries: Vec<(PatternId, Orbit)> = match cfg.regime {
        Regime::KappaZero => vec![(P::IX, HalfMirror), (P::X, HalfMirror)],
        Regime::CZero => vec![(P::I, FullD4), (P::II, FullD4), (P::III, FullD4)],
        Regime::CLessKappa => vec![
            (P::I, FullD4),
            (P::IV, HalfSwap),
            (P::V, HalfSwap),
            (P::VI, HalfSwap),
            (P::VII, HalfSwap),
        ],
        Regime::KappaLessC => {
            vec![(P::I, FullD4), (P::IV, HalfSwap), (P::V, HalfSwap), (P::VIII, NegOnly)]
        }
        Regime::Bifurcation => vec![
            (P::I, FullD4),
            (P::IV, HalfSwap),
            (P::V, HalfSwap),
            (P::VI, HalfSwap),
            (P::VII, HalfSwap),
            (P::VIII, NegOnly),
        ],
    };
    entries.into_iter().map(|(id, orbit)| pattern_by_id(cfg, id, orbit)).collect()
}

/// Relabels the controls of `p` by `g`. Durations follow their axis letters:
/// `t̂_X`/`t̂_Y` and the tied pair swap together with `X ↔ Y`.
pub fn apply_symmetry(p: &Pattern, g: SymmetryElement) -> Result<Pattern, PatternError> {
    if !p.orbit.contains(g) {
        return Err(PatternError::SymmetryNotApplicable {
            pattern: p.id,
            element: g.index(),
            orbit: p.orbit,
        });
    }
    let r = p.resolver;
    let slots = p
        .slots
        .iter()
        .map(|s| {
            let role = g.apply_role(s.role);
            let duration = match s.duration {
                Duration::Fixed { kind, .. } => {
                    let kind = match (kind, g.swaps()) {
                        (FixedKind::HatX, true) => FixedKind::HatY,
                        (FixedKind::HatY, true) => FixedKind::HatX,
                        (k, _) => k,
                    };
                    Duration::Fixed { kind, value: r.fixed(kind) }
                }
                Duration::Free { lower, bound, .. } => {
                    Duration::Free { lower, upper: r.upper(bound, role), bound }
                }
                Duration::Tied => Duration::Tied,
            };
            Slot { role, duration }
        })
        .collect();
    Ok(Pattern {
        id: p.id,
        slots,
        constraint: p.constraint,
        orbit: p.orbit,
        symmetry: g.compose(p.symmetry),
        resolver: r,
    })
}

/// How a slot of a subword gets its duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ShapeDuration {
    Fixed(f64),
    /// Free parameter `index`; when `capped_by_pair`, additionally bounded by
    /// the tied-pair value of the slot's letter.
    Param { index: usize, capped_by_pair: bool },
    /// Interior member of the tied pair.
    Pair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeSlot {
    pub role: Role,
    pub duration: ShapeDuration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

/// A contiguous window `(k, m)` (1-based, inclusive) of a relabeled pattern
/// with its end durations demoted to free parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubwordShape {
    pub pattern: PatternId,
    pub symmetry: SymmetryElement,
    pub window: (usize, usize),
    pub slots: Vec<ShapeSlot>,
    pub params: Vec<ParamSpec>,
    /// Index into `params` of the tied symbol `t_Y`, if an interior slot uses it.
    pub pair_param: Option<usize>,
}

impl SubwordShape {
    pub fn free_count(&self) -> usize {
        self.params.len()
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn roles(&self) -> Vec<Role> {
        self.slots.iter().map(|s| s.role).collect()
    }
}

/// Builds the subword of `p` over slots `k..=m` (1-based).
pub fn subword(p: &Pattern, k: usize, m: usize) -> Result<SubwordShape, PatternError> {
    let n = p.slots.len();
    if k == 0 || k > m || m > n {
        return Err(PatternError::InvalidWindow(k, m, n));
    }
    let window = &p.slots[k - 1..m];
    let last = window.len() - 1;
    let interior_tied =
        (1..last).any(|i| matches!(window[i].duration, Duration::Tied));

    let mut params = Vec::new();
    let mut pair_param = None;
    let mut slots = Vec::with_capacity(window.len());
    for (i, s) in window.iter().enumerate() {
        let is_end = i == 0 || i == last;
        let pos = k + i;
        let duration = match (s.duration, is_end) {
            (Duration::Fixed { value, .. }, false) => ShapeDuration::Fixed(value),
            (Duration::Fixed { value, .. }, true) => {
                params.push(ParamSpec { name: format!("t'{pos}"), lower: 0.0, upper: value });
                ShapeDuration::Param { index: params.len() - 1, capped_by_pair: false }
            }
            (Duration::Free { lower, upper, .. }, _) => {
                params.push(ParamSpec { name: "t".to_string(), lower, upper });
                ShapeDuration::Param { index: params.len() - 1, capped_by_pair: false }
            }
            (Duration::Tied, false) => {
                if pair_param.is_none() {
                    params.push(ParamSpec {
                        name: "t_Y".to_string(),
                        lower: 0.0,
                        upper: std::f64::consts::PI,
                    });
                    pair_param = Some(params.len() - 1);
                }
                ShapeDuration::Pair
            }
            (Duration::Tied, true) => {
                params.push(ParamSpec {
                    name: format!("t'{pos}"),
                    lower: 0.0,
                    upper: std::f64::consts::PI,
                });
                ShapeDuration::Param { index: params.len() - 1, capped_by_pair: interior_tied }
            }
        };
        slots.push(ShapeSlot { role: s.role, duration });
    }
    Ok(SubwordShape { pattern: p.id, symmetry: p.symmetry, window: (k, m), slots, params, pair_param })
}

/// Every contiguous window of `p` relabeled by `g`.
pub fn enumerate_subwords(
    p: &Pattern,
    g: SymmetryElement,
) -> Result<Vec<SubwordShape>, PatternError> {
    let image = apply_symmetry(p, g)?;
    let n = image.slots.len();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for k in 1..=n {
        for m in k..=n {
            out.push(subword(&image, k, m)?);
        }
    }
    Ok(out)
}

/// All shapes the planner searches for `cfg`: pattern × orbit element × window.
pub fn all_shapes(cfg: &AxisConfig) -> Vec<SubwordShape> {
    let mut out = Vec::new();
    for p in catalog(cfg) {
        for g in p.orbit.elements() {
            out.extend(enumerate_subwords(&p, g).expect("orbit elements always apply"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::make_config;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn ids(cfg: &AxisConfig) -> Vec<PatternId> {
        catalog(cfg).iter().map(|p| p.id).collect()
    }

    #[test]
    fn catalog_per_regime() {
        use PatternId::*;
        assert_eq!(ids(&make_config(FRAC_PI_2, 0.0).unwrap()), vec![IX, X]);
        assert_eq!(ids(&make_config(FRAC_PI_2, 1.0).unwrap()), vec![I, II, III]);
        assert_eq!(ids(&make_config(0.25f64.acos(), 0.5).unwrap()), vec![I, IV, V, VI, VII]);
        assert_eq!(ids(&make_config(0.5f64.acos(), 0.25).unwrap()), vec![I, IV, V, VIII]);
        let c = 1.0f64.cos();
        assert_eq!(ids(&make_config(1.0, c).unwrap()), vec![I, IV, V, VI, VII, VIII]);
    }

    #[test]
    fn kappa_zero_orbits_have_four_elements() {
        let cfg = make_config(FRAC_PI_2, 0.0).unwrap();
        for p in catalog(&cfg) {
            assert_eq!(p.orbit, Orbit::HalfMirror);
            assert_eq!(p.orbit.elements().len(), 4);
        }
    }

    #[test]
    fn catalog_contents_resolve_fixed_durations() {
        let cfg = make_config(0.25f64.acos(), 0.5).unwrap();
        let cat = catalog(&cfg);
        let iv = &cat[1];
        assert_eq!(iv.id, PatternId::IV);
        assert_eq!(iv.word(), "R(th_Y Y) R(th_X X) R(t W+) R(th_X X) R(th_Y Y)");
        match iv.slots[0].duration {
            Duration::Fixed { kind: FixedKind::HatY, value } => assert_eq!(value, cfg.t_hat_y),
            other => panic!("{other:?}"),
        }
        assert_eq!(cat[2].word(), "R(th_Y Y) R(th_X X) R(t W+) R(-th_Y Y) R(-th_X X)");
        assert_eq!(cat[4].word(), "R(pi X) R(t W-) R(pi Y)");
        let cfg = make_config(0.5f64.acos(), 0.25).unwrap();
        let viii = catalog(&cfg).pop().unwrap();
        match viii.slots[1].duration {
            Duration::Free { upper, .. } => assert!((upper - 2.0 * cfg.t_hat_x).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn group_closure_and_commuting_negation() {
        for g in SymmetryElement::all() {
            for h in SymmetryElement::all() {
                let gh = g.compose(h);
                assert!(gh.index() < 8);
            }
            assert_eq!(g.compose(SymmetryElement::NU), SymmetryElement::NU.compose(g));
        }
        assert_eq!(
            SymmetryElement::SIGMA1.compose(SymmetryElement::SIGMA1),
            SymmetryElement::IDENTITY
        );
        assert_eq!(
            SymmetryElement::SIGMA2.compose(SymmetryElement::SIGMA2),
            SymmetryElement::IDENTITY
        );
    }

    #[test]
    fn orbits_are_subgroups() {
        for orbit in [Orbit::FullD4, Orbit::HalfMirror, Orbit::HalfSwap, Orbit::NegOnly] {
            let els = orbit.elements();
            for g in &els {
                for h in &els {
                    assert!(orbit.contains(g.compose(*h)), "{orbit:?}");
                }
            }
        }
        assert_eq!(Orbit::FullD4.elements().len(), 8);
        assert_eq!(Orbit::HalfMirror.elements().len(), 4);
        assert_eq!(Orbit::HalfSwap.elements().len(), 4);
        assert_eq!(Orbit::NegOnly.elements().len(), 2);
    }

    #[test]
    fn generators_act_as_described() {
        use Role::*;
        let s1 = SymmetryElement::SIGMA1;
        assert_eq!(s1.apply_role(PlusX), PlusX);
        assert_eq!(s1.apply_role(PlusY), MinusY);
        assert_eq!(s1.apply_role(PlusWp), PlusWm);
        assert_eq!(s1.apply_role(PlusWm), PlusWp);
        let s2 = SymmetryElement::SIGMA2;
        assert_eq!(s2.apply_role(PlusX), PlusY);
        assert_eq!(s2.apply_role(PlusWp), MinusWp);
        assert_eq!(s2.apply_role(PlusWm), PlusWm);
        for r in Role::ALL {
            assert_eq!(SymmetryElement::NU.apply_role(r), r.negated());
        }
    }

    #[test]
    fn pattern_one_under_swap() {
        let cfg = make_config(FRAC_PI_2, 0.5).unwrap();
        let p = &catalog(&cfg)[0];
        let q = apply_symmetry(p, SymmetryElement::SIGMA2).unwrap();
        assert_eq!(q.word(), "R(t_Y Y) R(t_X X) R(-t_Y Y) R(-t_X X)");
        assert_eq!(q.constraint, Some(Constraint::TanRelation));
    }

    #[test]
    fn identity_symmetry_is_noop() {
        let cfg = make_config(0.25f64.acos(), 0.5).unwrap();
        for p in catalog(&cfg) {
            let q = apply_symmetry(&p, SymmetryElement::IDENTITY).unwrap();
            assert_eq!(q, p);
        }
    }

    #[test]
    fn negation_of_pattern_two() {
        let cfg = make_config(FRAC_PI_2, 1.0).unwrap();
        let p = &catalog(&cfg)[1];
        let q = apply_symmetry(p, SymmetryElement::NU).unwrap();
        assert_eq!(q.word(), "R(-pi X) R(-t W+) R(-pi X)");
    }

    #[test]
    fn swap_exchanges_critical_times() {
        let cfg = make_config(0.25f64.acos(), 0.5).unwrap();
        let iv = &catalog(&cfg)[1];
        let img = apply_symmetry(iv, SymmetryElement::new(7).unwrap()).unwrap();
        assert_eq!(img.word(), "R(-th_X X) R(-th_Y Y) R(t W+) R(-th_Y Y) R(-th_X X)");
        let v = &catalog(&cfg)[2];
        let img = apply_symmetry(v, SymmetryElement::new(7).unwrap()).unwrap();
        assert_eq!(img.word(), "R(-th_X X) R(-th_Y Y) R(t W+) R(th_X X) R(th_Y Y)");
    }

    #[test]
    fn symmetry_outside_orbit_rejected() {
        let cfg = make_config(0.25f64.acos(), 0.5).unwrap();
        let iv = &catalog(&cfg)[1];
        assert!(matches!(
            apply_symmetry(iv, SymmetryElement::SIGMA1),
            Err(PatternError::SymmetryNotApplicable { .. })
        ));
    }

    #[test]
    fn orbit_images_are_distinct() {
        let cfg = make_config(0.25f64.acos(), 0.5).unwrap();
        for p in catalog(&cfg) {
            let words: Vec<String> = p
                .orbit
                .elements()
                .into_iter()
                .map(|g| apply_symmetry(&p, g).unwrap().word())
                .collect();
            for i in 0..words.len() {
                for j in i + 1..words.len() {
                    assert_ne!(words[i], words[j], "{:?}", p.id);
                }
            }
        }
    }

    #[test]
    fn window_counts() {
        let cfg = make_config(FRAC_PI_2, 1.0).unwrap();
        let ii = &catalog(&cfg)[1];
        assert_eq!(enumerate_subwords(ii, SymmetryElement::IDENTITY).unwrap().len(), 6);
        let i = &catalog(&cfg)[0];
        assert_eq!(enumerate_subwords(i, SymmetryElement::IDENTITY).unwrap().len(), 10);
    }

    #[test]
    fn pattern_one_full_window_symbols() {
        let cfg = make_config(FRAC_PI_2, 1.0).unwrap();
        let shape = subword(&catalog(&cfg)[0], 1, 4).unwrap();
        let names: Vec<&str> = shape.params.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, vec!["t'1", "t_Y", "t'4"]);
        assert_eq!(shape.pair_param, Some(1));
        assert_eq!(
            shape.slots.iter().map(|s| s.duration).collect::<Vec<_>>(),
            vec![
                ShapeDuration::Param { index: 0, capped_by_pair: true },
                ShapeDuration::Pair,
                ShapeDuration::Pair,
                ShapeDuration::Param { index: 2, capped_by_pair: true },
            ]
        );
        // no interior tied slot: plain [0, π] ends
        let shape = subword(&catalog(&cfg)[0], 2, 3).unwrap();
        assert_eq!(shape.pair_param, None);
        assert!(shape.params.iter().all(|p| p.upper == PI));
    }

    #[test]
    fn pattern_four_full_window_symbols() {
        let cfg = make_config(0.25f64.acos(), 0.5).unwrap();
        let shape = subword(&catalog(&cfg)[1], 1, 5).unwrap();
        assert_eq!(shape.free_count(), 3);
        assert_eq!(shape.params[0].upper, cfg.t_hat_y);
        assert_eq!(shape.params[1].name, "t");
        assert!((shape.params[1].upper - cfg.half_turn_time(Role::PlusWp)).abs() < 1e-15);
        assert_eq!(shape.params[2].upper, cfg.t_hat_y);
        assert_eq!(shape.slots[1].duration, ShapeDuration::Fixed(cfg.t_hat_x));
    }

    #[test]
    fn free_symbols_never_exceed_three() {
        for (a, k) in [(FRAC_PI_2, 0.0), (FRAC_PI_2, 1.0), (1.2, 0.9), (1.0, 0.2), (1.0, 1.0f64.cos())] {
            let cfg = make_config(a, k).unwrap();
            for s in all_shapes(&cfg) {
                assert!(s.free_count() <= 3 && s.free_count() >= 1);
                assert!(s.len() <= 5);
            }
        }
    }

    #[test]
    fn critical_cap_matches_right_angle_bound() {
        let cfg = make_config(FRAC_PI_2, 1.0).unwrap();
        let p = apply_symmetry(&catalog(&cfg)[1], SymmetryElement::SIGMA1).unwrap();
        assert_eq!(p.slots[1].role, Role::PlusWm);
        match p.slots[1].duration {
            Duration::Free { upper, .. } => assert!((upper - 2f64.sqrt() * PI).abs() < 1e-14),
            other => panic!("{other:?}"),
        }
    }
}
