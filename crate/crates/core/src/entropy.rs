//! Entropy surfaces `S(r, s)` of one displaced outer path, the arctic curves
//! they avoid, the maximizing trajectories and their action `∫ L(f')`.
//!
//! Aztec geometry: the path runs from `(-1-r, r)` to `(1+s, s)` above the
//! ellipse `x²/w + y² = 1/(1+w)`. ASM geometry: from `(0, r)` to `(s, 0)`
//! outside the corner cut off by `h(x) = (1 + x - √(3x(2-x)))/2`, `0 <= x <= 1/2`.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::settings::NumericSettings;
use crate::step_model::{aztec_lagrangean_closed, StepSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Model {
    Aztec { w: f64 },
    Asm,
}

impl Model {
    pub fn aztec(w: f64) -> Result<Self> {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::InvalidWeight(format!("w must be positive, got {w}")));
        }
        Ok(Model::Aztec { w })
    }

    pub fn step_set(&self) -> Result<StepSet> {
        match *self {
            Model::Aztec { w } => StepSet::aztec(w),
            Model::Asm => Ok(StepSet::asm()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Aztec { .. } => "aztec",
            Model::Asm => "asm",
        }
    }

    pub fn entropy(&self, r: f64, s: f64) -> Result<f64> {
        match *self {
            Model::Aztec { w } => aztec_s(r, s, w),
            Model::Asm => asm_s(r, s),
        }
    }

    pub fn branch(&self, r: f64, s: f64) -> Branch {
        match *self {
            Model::Aztec { w } => {
                if r * s <= 1.0 / (1.0 + w) {
                    Branch::Lower
                } else {
                    Branch::Upper
                }
            }
            Model::Asm => {
                if 2.0 * r + 2.0 * s - r * s <= 1.0 {
                    Branch::Lower
                } else {
                    Branch::Upper
                }
            }
        }
    }
}

/// Which closed form of `S` applies; the boundary belongs to `Lower`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Lower,
    Upper,
}

/// `x log x` with the value 0 at `x = 0`.
pub fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

fn check_nonneg(r: f64, s: f64) -> Result<()> {
    if r >= 0.0 && s >= 0.0 && r.is_finite() && s.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError(format!(
            "r, s must be finite and >= 0 (r={r}, s={s})"
        )))
    }
}

/// `σ(r) + σ(s)` form, valid for `rs <= 1/(1+w)`.
pub fn aztec_s_lower(r: f64, s: f64, w: f64) -> f64 {
    xlogx(r + 1.0) - xlogx(r) + xlogx(s + 1.0) - xlogx(s) + w.ln_1p()
}

/// Straight-line form `(r+s+2) L((s-r)/(r+s+2))`, valid for `rs >= 1/(1+w)`.
pub fn aztec_s_upper(r: f64, s: f64, w: f64) -> f64 {
    let span = r + s + 2.0;
    span * aztec_lagrangean_closed((s - r) / span, w)
}

pub fn aztec_s(r: f64, s: f64, w: f64) -> Result<f64> {
    check_nonneg(r, s)?;
    if !(w > 0.0) {
        return Err(Error::InvalidWeight(format!("w must be positive, got {w}")));
    }
    let model = Model::Aztec { w };
    Ok(match model.branch(r, s) {
        Branch::Lower => aztec_s_lower(r, s, w),
        Branch::Upper => aztec_s_upper(r, s, w),
    })
}

/// `s L(-r/s) = (r+s) log(r+s) - r log r - s log s`, valid for `2r+2s-rs <= 1`.
pub fn asm_s_lower(r: f64, s: f64) -> f64 {
    xlogx(r + s) - xlogx(r) - xlogx(s)
}

fn asm_sigma(r: f64) -> f64 {
    xlogx(1.0 + r) - xlogx(r) + xlogx(2.0 - r) - xlogx(1.0 - r)
}

/// Separable form, valid for `2r+2s-rs >= 1`.
pub fn asm_s_upper(r: f64, s: f64) -> f64 {
    asm_sigma(r) + asm_sigma(s) - 3.0 * 3f64.ln()
}

pub fn asm_s(r: f64, s: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&r) || !(0.0..=0.5).contains(&s) {
        return Err(Error::DomainError(format!(
            "ASM entropy needs 0 <= r, s <= 1/2 (r={r}, s={s})"
        )));
    }
    Ok(match Model::Asm.branch(r, s) {
        Branch::Lower => asm_s_lower(r, s),
        Branch::Upper => asm_s_upper(r, s),
    })
}

/// Both branch formulas evaluated at the same point.
pub fn branch_values(model: Model, r: f64, s: f64) -> (f64, f64) {
    match model {
        Model::Aztec { w } => (aztec_s_lower(r, s, w), aztec_s_upper(r, s, w)),
        Model::Asm => (asm_s_lower(r, s), asm_s_upper(r, s)),
    }
}

/// Sample of `points` locations on the branch boundary curve.
pub fn branch_boundary(model: Model, points: usize) -> Vec<(f64, f64)> {
    let points = points.max(2);
    match model {
        Model::Aztec { w } => {
            // r s = 1/(1+w), r from 0.05 to 20 geometrically
            let c = 1.0 / (1.0 + w);
            (0..points)
                .map(|i| {
                    let r = 0.05 * (400f64).powf(i as f64 / (points - 1) as f64);
                    (r, c / r)
                })
                .collect()
        }
        Model::Asm => (0..points)
            .map(|i| {
                let r = 0.5 * i as f64 / (points - 1) as f64;
                (r, (1.0 - 2.0 * r) / (2.0 - r))
            })
            .collect(),
    }
}

/// The portion of arctic curve relevant to one outer path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcticCurve {
    pub model: Model,
}

impl ArcticCurve {
    pub fn new(model: Model) -> Self {
        Self { model }
    }

    /// Abscissa interval on which `h` is defined.
    pub fn domain(&self) -> (f64, f64) {
        match self.model {
            Model::Aztec { w } => {
                let a = (w / (1.0 + w)).sqrt();
                (-a, a)
            }
            Model::Asm => (0.0, 0.5),
        }
    }

    pub fn h(&self, x: f64) -> f64 {
        match self.model {
            Model::Aztec { w } => (1.0 / (1.0 + w) - x * x / w).max(0.0).sqrt(),
            Model::Asm => 0.5 * (1.0 + x - (3.0 * x * (2.0 - x)).max(0.0).sqrt()),
        }
    }

    pub fn hprime(&self, x: f64) -> f64 {
        match self.model {
            Model::Aztec { w } => -x / (w * self.h(x)),
            Model::Asm => 0.5 * (1.0 - 3.0 * (1.0 - x) / (3.0 * x * (2.0 - x)).sqrt()),
        }
    }

    /// Abscissa where `h' = t`; infinite slopes map to the end with a
    /// vertical tangent.
    pub fn x_of_slope(&self, t: f64) -> f64 {
        match self.model {
            Model::Aztec { w } => -w * t / ((1.0 + w) * (1.0 + w * t * t)).sqrt(),
            Model::Asm => {
                if t == f64::NEG_INFINITY {
                    0.0
                } else {
                    1.0 - (1.0 - 2.0 * t) / (2.0 * (1.0 - t + t * t).sqrt())
                }
            }
        }
    }

    /// Signed residual of the conic containing the curve.
    pub fn residual(&self, x: f64, y: f64) -> f64 {
        match self.model {
            Model::Aztec { w } => x * x / w + y * y - 1.0 / (1.0 + w),
            Model::Asm => x * (1.0 - x) + y * (1.0 - y) + x * y - 0.25,
        }
    }
}

/// Tangency data of the entry and exit segments. `x1 <= x2`; on the convex
/// ASM curve `t1 <= t2`, on the concave Aztec cap `t1 >= t2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tangency {
    pub t1: f64,
    pub t2: f64,
    pub x1: f64,
    pub x2: f64,
}

/// Entry slope and abscissa for the Aztec path starting at `(-1-r, r)`.
pub fn tangency_aztec(r: f64, w: f64) -> Result<(f64, f64)> {
    if !(r >= 0.0) {
        return Err(Error::DomainError(format!("r must be >= 0, got {r}")));
    }
    let big_w = 1.0 + w;
    let t1 = (1.0 - r * r * big_w) / (1.0 + r * (2.0 + r) * big_w);
    Ok((t1, ArcticCurve::new(Model::Aztec { w }).x_of_slope(t1)))
}

/// Full tangency for `(r, s)`; `NoArc` when the chord misses the ellipse.
pub fn tangency_aztec_pair(r: f64, s: f64, w: f64) -> Result<Tangency> {
    let (t1, x1) = tangency_aztec(r, w)?;
    let (u, v) = tangency_aztec(s, w)?;
    let (t2, x2) = (-u, -v);
    // the boundary rs = 1/(1+w) gives t1 = t2 up to rounding
    if t1 < t2 - 1e-12 {
        return Err(Error::NoArc(format!(
            "aztec r={r}, s={s}: straight line misses the ellipse"
        )));
    }
    Ok(Tangency { t1, t2, x1, x2 })
}

/// Tangency for the ASM path from `(0, r)` to `(s, 0)`.
pub fn tangency_asm(r: f64, s: f64) -> Result<Tangency> {
    if !(0.0..=0.5).contains(&r) || !(0.0..=0.5).contains(&s) {
        return Err(Error::DomainError(format!(
            "ASM tangency needs 0 <= r, s <= 1/2 (r={r}, s={s})"
        )));
    }
    let curve = ArcticCurve::new(Model::Asm);
    let t1 = if r == 0.5 {
        f64::NEG_INFINITY
    } else {
        -r * (2.0 - r) / (1.0 - 2.0 * r)
    };
    let t2 = if s == 0.0 {
        f64::NEG_INFINITY
    } else {
        -(1.0 - 2.0 * s) / (s * (2.0 - s))
    };
    if t1 > t2 + 1e-12 {
        return Err(Error::NoArc(format!(
            "asm r={r}, s={s}: straight line stays off the curve"
        )));
    }
    Ok(Tangency {
        t1,
        t2,
        x1: curve.x_of_slope(t1),
        x2: curve.x_of_slope(t2),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trajectory {
    StraightLine {
        start: (f64, f64),
        end: (f64, f64),
    },
    TangentArcTangent {
        start: (f64, f64),
        end: (f64, f64),
        tangency: Tangency,
        curve: ArcticCurve,
    },
}

impl Trajectory {
    pub fn endpoints(&self) -> ((f64, f64), (f64, f64)) {
        match *self {
            Trajectory::StraightLine { start, end }
            | Trajectory::TangentArcTangent { start, end, .. } => (start, end),
        }
    }

    /// Largest mismatch at the junctions: distance of the junction from the
    /// curve along the segment, and segment slope versus `h'`. Zero for a
    /// straight line.
    pub fn junction_defect(&self) -> f64 {
        let Trajectory::TangentArcTangent {
            start,
            end,
            tangency,
            curve,
        } = *self
        else {
            return 0.0;
        };
        let mut worst: f64 = 0.0;
        for (anchor, t, x) in [
            (start, tangency.t1, tangency.x1),
            (end, tangency.t2, tangency.x2),
        ] {
            if !t.is_finite() {
                // vertical segment: the junction must share the anchor's abscissa
                worst = worst.max((x - anchor.0).abs());
                continue;
            }
            let on_line = anchor.1 + t * (x - anchor.0);
            worst = worst.max((on_line - curve.h(x)).abs());
            let (lo, hi) = curve.domain();
            if x > lo && x < hi {
                worst = worst.max((curve.hprime(x) - t).abs());
            }
        }
        worst
    }
}

/// Maximizing trajectory for the endpoint pair `(r, s)`.
pub fn build_trajectory(model: Model, r: f64, s: f64) -> Result<Trajectory> {
    match model {
        Model::Aztec { w } => {
            check_nonneg(r, s)?;
            let start = (-1.0 - r, r);
            let end = (1.0 + s, s);
            match tangency_aztec_pair(r, s, w) {
                Ok(tangency) if tangency.t1 > tangency.t2 => Ok(Trajectory::TangentArcTangent {
                    start,
                    end,
                    tangency,
                    curve: ArcticCurve::new(model),
                }),
                Ok(_) | Err(Error::NoArc(_)) => Ok(Trajectory::StraightLine { start, end }),
                Err(e) => Err(e),
            }
        }
        Model::Asm => {
            let start = (0.0, r);
            let end = (s, 0.0);
            match tangency_asm(r, s) {
                Ok(tangency) if tangency.t1 < tangency.t2 => Ok(Trajectory::TangentArcTangent {
                    start,
                    end,
                    tangency,
                    curve: ArcticCurve::new(model),
                }),
                Ok(_) | Err(Error::NoArc(_)) => Ok(Trajectory::StraightLine { start, end }),
                Err(e) => Err(e),
            }
        }
    }
}

// Action of a straight segment; vertical segments are priced per unit length.
fn segment_action(steps: &StepSet, from: (f64, f64), to: (f64, f64)) -> Result<f64> {
    let dx = to.0 - from.0;
    let dy = to.1 - from.1;
    if dx.abs() <= 1e-15 && dy.abs() <= 1e-15 {
        return Ok(0.0);
    }
    if dx.abs() <= 1e-15 {
        return Ok(dy.abs() * steps.vertical_rate(dy)?);
    }
    Ok(dx * steps.lagrangean_closure(dy / dx)?)
}

/// `∫ L(f'(x)) dx` along the trajectory, with `L` from the generic solver.
pub fn action(traj: &Trajectory, steps: &StepSet) -> Result<f64> {
    match *traj {
        Trajectory::StraightLine { start, end } => segment_action(steps, start, end),
        Trajectory::TangentArcTangent {
            start,
            end,
            tangency,
            curve,
        } => {
            let p1 = (tangency.x1, curve.h(tangency.x1));
            let p2 = (tangency.x2, curve.h(tangency.x2));
            let entry = segment_action(steps, start, p1)?;
            let exit = segment_action(steps, p2, end)?;
            let settings = NumericSettings::current();
            let arc = integrate(
                |x| steps.lagrangean_closure(curve.hprime(x)),
                tangency.x1,
                tangency.x2,
                settings.quadrature_tol,
                settings.max_subintervals,
            )?;
            Ok(entry + arc.value + exit)
        }
    }
}

/// `F(ξ; r, s)`, the exponential rate of the summand of `g` at `j = ξ n`.
pub fn saddle_f(xi: f64, r: f64, s: f64, w: f64) -> Result<f64> {
    check_nonneg(r, s)?;
    if !(xi >= 0.0 && xi <= r.min(s)) {
        return Err(Error::DomainError(format!(
            "ξ must lie in [0, min(r, s)], got {xi}"
        )));
    }
    Ok(
        (xi + 1.0) * w.ln_1p() - 2.0 * xlogx(xi + 1.0) + xlogx(r + 1.0) + xlogx(s + 1.0)
            - xlogx(r - xi)
            - xlogx(s - xi),
    )
}

/// Maximizer of `F` on `[0, min(r, s)]`: 0 when `rs(1+w) <= 1`, else the
/// smaller root of `(ξ+1)² = (1+w)(r-ξ)(s-ξ)`.
pub fn saddle_xi_star(r: f64, s: f64, w: f64) -> f64 {
    let big_w = 1.0 + w;
    let c = big_w * r * s - 1.0;
    if c <= 0.0 {
        return 0.0;
    }
    let b = 2.0 + (r + s) * big_w;
    // (b - √(b² - 4wc)) / 2w without cancellation
    (2.0 * c / (b + (b * b - 4.0 * w * c).sqrt())).min(r.min(s))
}

pub fn saddle_value(r: f64, s: f64, w: f64) -> Result<f64> {
    saddle_f(saddle_xi_star(r, s, w), r, s, w)
}

/// Result of an exhaustive search over matchings of the `r`'s and `s`'s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationMax {
    pub max: f64,
    pub argmax: Vec<Vec<usize>>,
}

impl PermutationMax {
    pub fn identity_in_argmax(&self) -> bool {
        self.argmax
            .iter()
            .any(|p| p.iter().enumerate().all(|(i, &j)| i == j))
    }

    pub fn identity_unique(&self) -> bool {
        self.argmax.len() == 1 && self.identity_in_argmax()
    }
}

pub const PERMUTATION_CAP: usize = 8;

/// Maximum over `π` of `Σ_a S(r_a, s_π(a))`; values within `1e-12·m` of the
/// maximum count as attaining it.
pub fn max_permutation_action(rvec: &[f64], svec: &[f64], model: Model) -> Result<PermutationMax> {
    let m = rvec.len();
    if svec.len() != m {
        return Err(Error::DomainError("r and s tuples differ in length".into()));
    }
    if m > PERMUTATION_CAP {
        return Err(Error::SizeCap {
            m,
            cap: PERMUTATION_CAP,
        });
    }
    if rvec.windows(2).any(|p| p[0] > p[1]) || svec.windows(2).any(|p| p[0] > p[1]) {
        return Err(Error::DomainError(
            "r and s tuples must be sorted nondecreasing".into(),
        ));
    }
    let table: Vec<Vec<f64>> = rvec
        .iter()
        .map(|&r| {
            svec.iter()
                .map(|&s| model.entropy(r, s))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let scored: Vec<(Vec<usize>, f64)> = (0..m)
        .permutations(m)
        .map(|p| {
            let v = p.iter().enumerate().map(|(a, &b)| table[a][b]).sum();
            (p, v)
        })
        .collect();
    let max = scored
        .iter()
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * m.max(1) as f64;
    let argmax = scored
        .into_iter()
        .filter(|(_, v)| max - v <= tol)
        .map(|(p, _)| p)
        .collect();
    Ok(PermutationMax { max, argmax })
}

/// Expected behaviour of `r ↦ S(r,s) - S(r,s')` on one grid interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Constant,
    StrictlyIncreasing,
    Nondecreasing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalCheck {
    pub r_lo: f64,
    pub r_hi: f64,
    pub regime: Regime,
    pub delta: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub s: f64,
    pub s_prime: f64,
    pub intervals: Vec<IntervalCheck>,
    pub passed: bool,
}

/// Tolerance for "constant" differences.
pub const CONSTANT_TOL: f64 = 1e-10;

/// Forward-difference check of the monotonicity of `S(r,s) - S(r,s')` in
/// `r` for `s > s'`, interval by interval, against the regime implied by
/// the branch structure.
pub fn appendix_b_monotonicity(
    r_grid: &[f64],
    s: f64,
    s_prime: f64,
    model: Model,
) -> Result<MonotonicityReport> {
    if !(s > s_prime && s_prime >= 0.0) {
        return Err(Error::DomainError(format!(
            "need s > s' >= 0 (s={s}, s'={s_prime})"
        )));
    }
    if r_grid.len() < 2 || r_grid.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::DomainError(
            "r grid must be strictly increasing with >= 2 points".into(),
        ));
    }
    let diff = |r: f64| -> Result<f64> { Ok(model.entropy(r, s)? - model.entropy(r, s_prime)?) };
    let mut intervals = Vec::with_capacity(r_grid.len() - 1);
    for pair in r_grid.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let regime = match model {
            Model::Aztec { w } => {
                let c = 1.0 / (1.0 + w);
                if hi * s <= c {
                    Regime::Constant
                } else if lo * s > c {
                    Regime::StrictlyIncreasing
                } else {
                    Regime::Nondecreasing
                }
            }
            Model::Asm => {
                let g = |r: f64| 2.0 * r + 2.0 * s_prime - r * s_prime;
                if g(lo) >= 1.0 {
                    Regime::Constant
                } else if g(hi) < 1.0 {
                    Regime::StrictlyIncreasing
                } else {
                    Regime::Nondecreasing
                }
            }
        };
        let delta = diff(hi)? - diff(lo)?;
        let passed = match regime {
            Regime::Constant => delta.abs() <= CONSTANT_TOL,
            Regime::StrictlyIncreasing => delta > 0.0,
            Regime::Nondecreasing => delta >= -CONSTANT_TOL,
        };
        intervals.push(IntervalCheck {
            r_lo: lo,
            r_hi: hi,
            regime,
            delta,
            passed,
        });
    }
    let passed = intervals.iter().all(|c| c.passed);
    Ok(MonotonicityReport {
        s,
        s_prime,
        intervals,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::step_model::asm_lagrangean_closed;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn aztec_entropy_values() {
        for &w in &[0.5, 1.0, 2.0] {
            assert!(close(aztec_s(0.0, 0.0, w).unwrap(), (1.0 + w).ln(), 1e-15));
        }
        let l0 = (1.0 + 2f64.sqrt()).ln();
        assert!(close(aztec_s(1.0, 1.0, 1.0).unwrap(), 4.0 * l0, 1e-13));
        assert!(close(saddle_value(1.0, 1.0, 1.0).unwrap(), 4.0 * l0, 1e-12));
        assert!(close(aztec_s(1.5, 1.5, 1.0).unwrap(), 5.0 * l0, 1e-13));
        assert!(aztec_s(-0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn asm_entropy_values() {
        assert!(close(
            asm_s(0.5, 0.5).unwrap(),
            (27.0f64 / 16.0).ln(),
            1e-14
        ));
        assert_eq!(asm_s(0.0, 0.0).unwrap(), 0.0);
        for &(r, s) in &[(0.1, 0.2), (0.05, 0.3), (0.2, 0.1)] {
            let lower = asm_s(r, s).unwrap();
            assert!(close(lower, s * asm_lagrangean_closed(-r / s), 1e-14));
        }
        assert!(asm_s(0.6, 0.1).is_err());
    }

    #[test]
    fn branches_agree_on_boundaries() {
        for model in [Model::Aztec { w: 1.0 }, Model::Aztec { w: 2.5 }, Model::Asm] {
            for (r, s) in branch_boundary(model, 50) {
                let (lo, up) = branch_values(model, r, s);
                assert!(close(lo, up, 1e-9), "{model:?} r={r} s={s}: {lo} vs {up}");
            }
        }
    }

    #[test]
    fn ellipse_and_conic_membership() {
        let az = ArcticCurve::new(Model::Aztec { w: 2.0 });
        let asm = ArcticCurve::new(Model::Asm);
        for i in 0..=20 {
            let f = i as f64 / 20.0;
            let (lo, hi) = az.domain();
            let x = lo + f * (hi - lo);
            assert!(az.residual(x, az.h(x)).abs() < 1e-12);
            let x = 0.5 * f;
            assert!(asm.residual(x, asm.h(x)).abs() < 1e-12);
        }
        // x_of_slope inverts h'
        for &t in &[-0.9, -0.2, 0.0, 0.6] {
            let x = az.x_of_slope(t);
            assert!(close(az.hprime(x), t, 1e-12));
        }
        for &t in &[-30.0, -2.0, -0.4, -0.01] {
            let x = asm.x_of_slope(t);
            assert!(close(asm.hprime(x), t, 1e-9 * t.abs().max(1.0)));
        }
    }

    #[test]
    fn tangency_cases() {
        let w = 1.0;
        // boundary rs = 1/(1+w): the arc shrinks to a point
        let r = 0.8;
        let t = tangency_aztec_pair(r, 0.5 / r, w).unwrap();
        assert!(close(t.t1, t.t2, 1e-12) && close(t.x1, t.x2, 1e-12));
        let (t1, x1) = tangency_aztec(0.0, 2.0).unwrap();
        assert_eq!(t1, 1.0);
        assert!(close(x1, -2.0 / 3.0, 1e-15));
        assert!(matches!(
            tangency_aztec_pair(2.0, 2.0, 1.0),
            Err(Error::NoArc(_))
        ));
        // asm boundary 2r + 2s - rs = 1
        let r = 0.2;
        let s = (1.0 - 2.0 * r) / (2.0 - r);
        let t = tangency_asm(r, s).unwrap();
        assert!(close(t.t1, t.t2, 1e-12));
        let full = tangency_asm(0.5, 0.5).unwrap();
        assert_eq!(full.t1, f64::NEG_INFINITY);
        assert_eq!(full.t2, 0.0);
        assert_eq!(full.x1, 0.0);
        assert!(close(full.x2, 0.5, 1e-15));
        assert!(matches!(tangency_asm(0.1, 0.1), Err(Error::NoArc(_))));
    }

    #[test]
    fn trajectories_are_c1() {
        for model in [Model::Aztec { w: 1.0 }, Model::Aztec { w: 2.0 }, Model::Asm] {
            let grid: Vec<f64> = match model {
                Model::Asm => (0..=10).map(|i| 0.05 * i as f64).collect(),
                _ => (0..=10).map(|i| 0.2 * i as f64).collect(),
            };
            for &r in &grid {
                for &s in &grid {
                    let traj = build_trajectory(model, r, s).unwrap();
                    assert!(
                        traj.junction_defect() < 1e-10,
                        "{model:?} {r} {s}: {}",
                        traj.junction_defect()
                    );
                }
            }
        }
        let straight = build_trajectory(Model::Aztec { w: 1.0 }, 2.0, 1.0).unwrap();
        assert!(matches!(straight, Trajectory::StraightLine { .. }));
        let arc = build_trajectory(Model::Aztec { w: 1.0 }, 0.2, 0.3).unwrap();
        assert!(matches!(arc, Trajectory::TangentArcTangent { .. }));
    }

    #[test]
    fn action_matches_closed_forms_spot() {
        let az = StepSet::aztec(1.0).unwrap();
        for &(r, s) in &[(0.0, 0.0), (0.3, 0.7), (2.0, 1.0), (0.0, 1.5)] {
            let traj = build_trajectory(Model::Aztec { w: 1.0 }, r, s).unwrap();
            let a = action(&traj, &az).unwrap();
            assert!(
                close(a, aztec_s(r, s, 1.0).unwrap(), 1e-8),
                "r={r} s={s}: {a}"
            );
        }
        let asm = StepSet::asm();
        for &(r, s) in &[(0.5, 0.5), (0.0, 0.0), (0.4, 0.3), (0.5, 0.0), (0.1, 0.1)] {
            let traj = build_trajectory(Model::Asm, r, s).unwrap();
            let a = action(&traj, &asm).unwrap();
            assert!(close(a, asm_s(r, s).unwrap(), 1e-8), "r={r} s={s}: {a}");
        }
    }

    #[test]
    fn straight_line_action_is_single_evaluation() {
        let az = StepSet::aztec(1.0).unwrap();
        let (r, s) = (1.7, 0.9);
        let traj = build_trajectory(Model::Aztec { w: 1.0 }, r, s).unwrap();
        let expected = (r + s + 2.0) * aztec_lagrangean_closed((s - r) / (r + s + 2.0), 1.0);
        assert!(close(action(&traj, &az).unwrap(), expected, 1e-10));
    }

    #[test]
    fn saddle_point() {
        let w = 1.0;
        assert_eq!(saddle_xi_star(0.3, 0.5, w), 0.0);
        assert!(close(
            saddle_value(0.3, 0.5, w).unwrap(),
            aztec_s_lower(0.3, 0.5, w),
            1e-15
        ));
        for &(r, s) in &[(1.0, 1.0), (0.8, 2.0), (3.0, 0.4)] {
            let xi = saddle_xi_star(r, s, w);
            let residual = (xi + 1.0).powi(2) - (1.0 + w) * (r - xi) * (s - xi);
            assert!(residual.abs() <= 1e-12, "{residual}");
            assert!(close(
                saddle_value(r, s, w).unwrap(),
                aztec_s(r, s, w).unwrap(),
                1e-9
            ));
        }
        assert!(saddle_f(0.6, 0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn permutation_examples() {
        let m = Model::Aztec { w: 1.0 };
        let res = max_permutation_action(&[0.2, 0.4], &[0.3, 0.6], m).unwrap();
        assert!(res.identity_in_argmax());
        // all pairs lower: every matching attains the maximum
        let res = max_permutation_action(&[0.1, 0.2, 0.3], &[0.1, 0.4, 0.5], m).unwrap();
        assert_eq!(res.argmax.len(), 6);
        let res = max_permutation_action(&[0.9, 1.3, 2.0], &[1.0, 1.5, 2.2], m).unwrap();
        assert!(res.identity_unique());
        assert!(matches!(
            max_permutation_action(&[0.1; 9], &[0.1; 9], m),
            Err(Error::SizeCap { .. })
        ));
        assert!(max_permutation_action(&[0.3, 0.1], &[0.1, 0.3], m).is_err());
    }

    #[test]
    fn monotonicity_regimes() {
        let grid: Vec<f64> = (1..=20).map(|i| 0.1 * i as f64).collect();
        let m = Model::Aztec { w: 1.0 };
        let report = appendix_b_monotonicity(&grid, 1.2, 0.4, m).unwrap();
        assert!(report.passed, "{report:?}");
        assert!(report
            .intervals
            .iter()
            .any(|c| c.regime == Regime::Constant));
        assert!(report
            .intervals
            .iter()
            .any(|c| c.regime == Regime::StrictlyIncreasing));
        let grid: Vec<f64> = (0..20).map(|i| 0.025 * i as f64).collect();
        let report = appendix_b_monotonicity(&grid, 0.45, 0.2, Model::Asm).unwrap();
        assert!(report.passed, "{report:?}");
        assert!(appendix_b_monotonicity(&grid, 0.2, 0.45, Model::Asm).is_err());
    }
}
