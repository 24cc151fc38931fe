//! Weighted directed step sets and their Lagrangean function.
//!
//! For a step set `S = {(u_i, v_i)}` with weights `w_i`, the characteristic
//! polynomial is `P(x, y) = Σ w_i x^u_i y^v_i`. For a slope `t` in the open
//! slope domain, `x(t), y(t)` are the unique positive solutions of
//!
//! ```text
//! P(x, y) = 1,        t·x·∂xP = y·∂yP
//! ```
//!
//! and `L(t) = -log x(t) - t·log y(t)`, `L'(t) = -log y(t)`.
//!
//! The generic solver works in logarithmic coordinates `a = log x`,
//! `b = log y`. For fixed `b`, `P = 1` has a unique root `a(b)` (P is
//! increasing in `a`); the tilted step distribution `p_i = w_i e^{u_i a + v_i b}`
//! then has a mean slope `m(b) = Σ v_i p_i / Σ u_i p_i` that increases strictly
//! with `b`, and the second equation reads `m(b) = t`. Both one-dimensional
//! problems are solved by safeguarded Newton iterations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::settings::NumericSettings;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub u: i64,
    pub v: i64,
    pub weight: f64,
}

impl Step {
    pub fn new(u: i64, v: i64, weight: f64) -> Result<Self> {
        if u < 0 {
            return Err(Error::InvalidStepSet(format!(
                "step ({u},{v}) is not directed (u < 0)"
            )));
        }
        if u == 0 && v == 0 {
            return Err(Error::InvalidStepSet("null step (0,0)".into()));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidStepSet(format!(
                "step ({u},{v}) has weight {weight}"
            )));
        }
        Ok(Self { u, v, weight })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelTag {
    Aztec { w: f64 },
    Asm,
    Custom,
}

/// One monomial `coefficient · x^x_power · y^y_power` of `P(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coefficient: f64,
    pub x_power: i64,
    pub y_power: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeSolution {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub ln_x: f64,
    pub ln_y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagrangeanEval {
    pub t: f64,
    #[serde(rename = "L")]
    pub value: f64,
    #[serde(rename = "Lprime")]
    pub derivative: f64,
}

/// Interval `(lo, hi)` of admissible `b = log y`, possibly unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
struct LogYDomain {
    lo: f64,
    hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepSet {
    steps: Vec<Step>,
    label: ModelTag,
    slope_min: f64,
    slope_max: f64,
    log_y_domain: LogYDomain,
}

/// Tilted quantities at a given `b`.
#[derive(Debug, Clone, Copy)]
struct Tilt {
    a: f64,
    mean_slope: f64,
    /// dm/db
    spread: f64,
}

impl StepSet {
    pub fn new(steps: Vec<Step>, label: ModelTag) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidStepSet("no steps".into()));
        }
        for (i, a) in steps.iter().enumerate() {
            if steps[..i].iter().any(|b| (a.u, a.v) == (b.u, b.v)) {
                return Err(Error::InvalidStepSet(format!(
                    "duplicate step ({},{})",
                    a.u, a.v
                )));
            }
        }
        let horizontal: Vec<_> = steps.iter().filter(|s| s.u > 0).collect();
        if horizontal.is_empty() {
            return Err(Error::InvalidStepSet("no step with u > 0".into()));
        }
        let ratio = |s: &&Step| s.v as f64 / s.u as f64;
        let mut slope_min = horizontal.iter().map(ratio).fold(f64::INFINITY, f64::min);
        let mut slope_max = horizontal
            .iter()
            .map(ratio)
            .fold(f64::NEG_INFINITY, f64::max);
        if steps.iter().any(|s| s.u == 0 && s.v < 0) {
            slope_min = f64::NEG_INFINITY;
        }
        if steps.iter().any(|s| s.u == 0 && s.v > 0) {
            slope_max = f64::INFINITY;
        }
        if slope_min >= slope_max {
            return Err(Error::InvalidStepSet(format!(
                "empty slope domain ({slope_min}, {slope_max})"
            )));
        }
        let mut set = Self {
            steps,
            label,
            slope_min,
            slope_max,
            log_y_domain: LogYDomain {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            },
        };
        set.log_y_domain = set.find_log_y_domain()?;
        Ok(set)
    }

    /// Aztec diamond paths: steps (1,1), (1,-1) with weight 1 and (2,0) with weight `w`.
    pub fn aztec(w: f64) -> Result<Self> {
        Self::new(
            vec![
                Step::new(1, 1, 1.0)?,
                Step::new(1, -1, 1.0)?,
                Step::new(2, 0, w)?,
            ],
            ModelTag::Aztec { w },
        )
    }

    /// ASM osculating paths: unit steps (1,0) and (0,-1).
    pub fn asm() -> Self {
        Self::new(
            vec![
                Step {
                    u: 1,
                    v: 0,
                    weight: 1.0,
                },
                Step {
                    u: 0,
                    v: -1,
                    weight: 1.0,
                },
            ],
            ModelTag::Asm,
        )
        .expect("the ASM step set is valid")
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn label(&self) -> ModelTag {
        self.label
    }

    /// Open slope domain `(t_min, t_max)`; ends may be infinite.
    pub fn slope_domain(&self) -> (f64, f64) {
        (self.slope_min, self.slope_max)
    }

    /// Open range of `L'` over the slope domain.
    pub fn lprime_range(&self) -> (f64, f64) {
        (-self.log_y_domain.hi, -self.log_y_domain.lo)
    }

    pub fn contains_slope(&self, t: f64) -> bool {
        t > self.slope_min && t < self.slope_max
    }

    // Σ over vertical steps of w e^{v b}, as 1 - Σ, computed without cancellation.
    fn vertical_gap(&self, b: f64) -> f64 {
        let mut base = 1.0;
        let mut correction = 0.0;
        for s in self.steps.iter().filter(|s| s.u == 0) {
            base -= s.weight;
            correction += s.weight * (s.v as f64 * b).exp_m1();
        }
        base - correction
    }

    fn find_log_y_domain(&self) -> Result<LogYDomain> {
        let has_down = self.steps.iter().any(|s| s.u == 0 && s.v < 0);
        let has_up = self.steps.iter().any(|s| s.u == 0 && s.v > 0);
        let budget = NumericSettings::current().max_iterations.max(200);
        // gap(b) is concave; its zero set bounds the admissible b.
        let mut centre = 0.0;
        if has_down && has_up {
            // maximise the concave gap by bisection on its slope
            let slope = |b: f64| -> f64 {
                -self
                    .steps
                    .iter()
                    .filter(|s| s.u == 0)
                    .map(|s| s.weight * s.v as f64 * (s.v as f64 * b).exp())
                    .sum::<f64>()
            };
            let (mut lo, mut hi) = (-1.0, 1.0);
            while slope(lo) <= 0.0 {
                lo *= 2.0;
            }
            while slope(hi) >= 0.0 {
                hi *= 2.0;
            }
            for _ in 0..budget {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if slope(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            centre = 0.5 * (lo + hi);
            if self.vertical_gap(centre) <= 0.0 {
                return Err(Error::InvalidStepSet(
                    "vertical steps alone have total weight >= 1 at every y".into(),
                ));
            }
        }
        let boundary = |direction: f64| -> f64 {
            // gap(centre) may be <= 0 for a one-sided set; walk inward first
            let mut inside = centre;
            let mut step = 1.0;
            while self.vertical_gap(inside) <= 0.0 {
                inside -= direction * step;
                step *= 2.0;
            }
            let mut outside = inside + direction;
            let mut step = 1.0;
            while self.vertical_gap(outside) > 0.0 {
                step *= 2.0;
                outside = inside + direction * step;
            }
            for _ in 0..budget {
                let mid = 0.5 * (inside + outside);
                if mid == inside || mid == outside {
                    break;
                }
                if self.vertical_gap(mid) > 0.0 {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            outside
        };
        let lo = if has_down {
            boundary(-1.0)
        } else {
            f64::NEG_INFINITY
        };
        let hi = if has_up { boundary(1.0) } else { f64::INFINITY };
        Ok(LogYDomain { lo, hi })
    }

    /// Solves `P(e^a, e^b) = 1` for `a` at fixed `b` inside the log-y domain.
    fn solve_log_x(&self, b: f64) -> Result<f64> {
        let gap = self.vertical_gap(b);
        if !(gap > 0.0) {
            return Err(Error::DomainError(format!(
                "log y = {b} outside the admissible range"
            )));
        }
        let ln_gap = gap.ln();
        let terms: Vec<(f64, f64, f64)> = self
            .steps
            .iter()
            .filter(|s| s.u > 0)
            .map(|s| (s.u as f64, s.weight.ln() + s.v as f64 * b, 0.0))
            .collect();
        // f(a) = logsumexp(ln w + u a + v b) - ln gap, convex and increasing.
        // Starting on the right of the root, Newton decreases monotonically.
        let mut a = terms
            .iter()
            .map(|&(u, c, _)| (ln_gap - c) / u)
            .fold(f64::NEG_INFINITY, f64::max);
        let budget = NumericSettings::current().max_iterations;
        for _ in 0..budget {
            let peak = terms
                .iter()
                .map(|&(u, c, _)| u * a + c)
                .fold(f64::NEG_INFINITY, f64::max);
            let (mut sum, mut usum) = (0.0, 0.0);
            for &(u, c, _) in &terms {
                let e = (u * a + c - peak).exp();
                sum += e;
                usum += u * e;
            }
            let f = peak + sum.ln() - ln_gap;
            let step = f / (usum / sum);
            let next = a - step;
            if step.abs() <= 4.0 * f64::EPSILON * a.abs().max(1.0) || next >= a {
                return Ok(next.min(a));
            }
            a = next;
        }
        Err(Error::NoConvergence {
            what: "log x at fixed log y",
            iterations: budget,
        })
    }

    fn tilt(&self, b: f64) -> Result<Tilt> {
        let a = self.solve_log_x(b)?;
        let mut weights = Vec::with_capacity(self.steps.len());
        let (mut total, mut usum, mut vsum) = (0.0, 0.0, 0.0);
        for s in &self.steps {
            let p = s.weight * (s.u as f64 * a + s.v as f64 * b).exp();
            weights.push(p);
            total += p;
            usum += s.u as f64 * p;
            vsum += s.v as f64 * p;
        }
        let mean_slope = vsum / usum;
        let spread = self
            .steps
            .iter()
            .zip(&weights)
            .map(|(s, p)| {
                let d = s.v as f64 - s.u as f64 * mean_slope;
                p * d * d
            })
            .sum::<f64>()
            / usum
            / total;
        Ok(Tilt {
            a,
            mean_slope,
            spread,
        })
    }

    fn check_slope(&self, t: f64) -> Result<()> {
        if self.contains_slope(t) {
            Ok(())
        } else {
            Err(Error::SlopeOutOfDomain {
                t,
                min: self.slope_min,
                max: self.slope_max,
            })
        }
    }

    /// A point strictly inside the log-y domain.
    fn interior_log_y(&self) -> f64 {
        let LogYDomain { lo, hi } = self.log_y_domain;
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo + 1.0,
            (false, true) => hi - 1.0,
            (false, false) => 0.0,
        }
    }

    /// Unique positive solution `(x(t), y(t))` of the defining system.
    pub fn solve_xy(&self, t: f64) -> Result<SlopeSolution> {
        self.check_slope(t)?;
        let budget = NumericSettings::current().max_iterations;
        let LogYDomain {
            lo: dom_lo,
            hi: dom_hi,
        } = self.log_y_domain;
        let mut iterations = 0usize;
        let mut tick = || -> Result<()> {
            iterations += 1;
            if iterations > budget {
                Err(Error::NoConvergence {
                    what: "slope equation for log y",
                    iterations: budget,
                })
            } else {
                Ok(())
            }
        };

        // bracket m(b) = t
        let mut b = self.interior_log_y();
        let mut tilt = self.tilt(b)?;
        let (mut lo, mut hi) = (dom_lo, dom_hi);
        let mut step = 1.0;
        while tilt.mean_slope < t {
            tick()?;
            lo = b;
            b = if dom_hi.is_finite() {
                0.5 * (b + dom_hi)
            } else {
                b + step
            };
            step *= 2.0;
            tilt = self.tilt(b)?;
        }
        hi = hi.min(b);
        if tilt.mean_slope == t {
            return Ok(self.finish(t, b, tilt));
        }
        step = 1.0;
        while tilt.mean_slope > t {
            tick()?;
            hi = b;
            b = if dom_lo.is_finite() {
                0.5 * (b + dom_lo)
            } else {
                b - step
            };
            step *= 2.0;
            tilt = self.tilt(b)?;
        }
        lo = lo.max(b);

        // safeguarded Newton on the increasing m(b) - t
        loop {
            let g = tilt.mean_slope - t;
            if g == 0.0 {
                break;
            }
            if g < 0.0 {
                lo = b;
            } else {
                hi = b;
            }
            let mut next = b - g / tilt.spread;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if next == b || next <= lo || next >= hi {
                break;
            }
            tick()?;
            let converged = (next - b).abs() <= 2.0 * f64::EPSILON * b.abs().max(1e-300);
            b = next;
            tilt = self.tilt(b)?;
            if converged {
                break;
            }
        }
        Ok(self.finish(t, b, tilt))
    }

    fn finish(&self, t: f64, b: f64, tilt: Tilt) -> SlopeSolution {
        SlopeSolution {
            t,
            x: tilt.a.exp(),
            y: b.exp(),
            ln_x: tilt.a,
            ln_y: b,
        }
    }

    /// Solution at prescribed `log y = b`; the slope is the tilted mean slope.
    /// This is the direct inverse of `L'`, used as an independent route.
    pub fn solve_at_log_y(&self, b: f64) -> Result<SlopeSolution> {
        let LogYDomain { lo, hi } = self.log_y_domain;
        if !(b > lo && b < hi) {
            let (min, max) = self.lprime_range();
            return Err(Error::ValueOutOfRange {
                value: -b,
                min,
                max,
            });
        }
        let tilt = self.tilt(b)?;
        Ok(self.finish(tilt.mean_slope, b, tilt))
    }

    /// `(|P(x,y) - 1|, |t·x·∂xP - y·∂yP|)`; the second residual is relative
    /// to `max(1, |t·x·∂xP|, |y·∂yP|)`.
    pub fn residuals(&self, sol: &SlopeSolution) -> (f64, f64) {
        let (mut p, mut xdx, mut ydy) = (0.0, 0.0, 0.0);
        for s in &self.steps {
            let m = s.weight * (s.u as f64 * sol.ln_x + s.v as f64 * sol.ln_y).exp();
            p += m;
            xdx += s.u as f64 * m;
            ydy += s.v as f64 * m;
        }
        let lhs = sol.t * xdx;
        let scale = lhs.abs().max(ydy.abs()).max(1.0);
        ((p - 1.0).abs(), (lhs - ydy).abs() / scale)
    }

    pub fn lagrangean(&self, t: f64) -> Result<LagrangeanEval> {
        let sol = self.solve_xy(t)?;
        Ok(LagrangeanEval {
            t,
            value: -sol.ln_x - t * sol.ln_y,
            derivative: -sol.ln_y,
        })
    }

    /// Limit of `L` at a finite end of the slope domain: only the steps of
    /// extremal slope survive and `L = -log z` with `Σ w_i z^{u_i} = 1`.
    pub fn edge_value(&self, t_edge: f64) -> Result<f64> {
        if !t_edge.is_finite() {
            return Err(Error::DomainError(
                "edge value requested at an infinite slope".into(),
            ));
        }
        let edge: Vec<&Step> = self
            .steps
            .iter()
            .filter(|s| s.u > 0 && (s.v as f64 - t_edge * s.u as f64).abs() < 1e-12 * s.u as f64)
            .collect();
        if edge.is_empty() || !(t_edge == self.slope_min || t_edge == self.slope_max) {
            return Err(Error::DomainError(format!(
                "{t_edge} is not a finite edge of the slope domain"
            )));
        }
        Ok(-solve_power_sum(
            edge.iter().map(|s| (s.u as f64, s.weight)),
        )?)
    }

    /// Action per unit vertical length of a vertical segment going in the
    /// direction `sign(dy)`: `-log z` with `Σ_{u=0, sign v = sign dy} w z^{|v|} = 1`.
    /// Zero when that direction has a single unit step of weight 1.
    pub fn vertical_rate(&self, dy: f64) -> Result<f64> {
        let vert: Vec<(f64, f64)> = self
            .steps
            .iter()
            .filter(|s| s.u == 0 && (s.v as f64) * dy > 0.0)
            .map(|s| (s.v.unsigned_abs() as f64, s.weight))
            .collect();
        if vert.is_empty() {
            return Err(Error::DomainError(
                "no vertical step in that direction".into(),
            ));
        }
        Ok(-solve_power_sum(vert.into_iter())?)
    }

    /// `L(t)` inside the domain, and the edge limit at or marginally beyond a
    /// finite edge (rounding in arc slopes can overshoot by a few ulps).
    pub fn lagrangean_closure(&self, t: f64) -> Result<f64> {
        const EDGE_SLACK: f64 = 1e-12;
        if self.slope_max.is_finite() && t >= self.slope_max {
            if t - self.slope_max <= EDGE_SLACK * self.slope_max.abs().max(1.0) {
                return self.edge_value(self.slope_max);
            }
        } else if self.slope_min.is_finite()
            && t <= self.slope_min
            && self.slope_min - t <= EDGE_SLACK * self.slope_min.abs().max(1.0)
        {
            return self.edge_value(self.slope_min);
        }
        Ok(self.lagrangean(t)?.value)
    }

    /// Inverts the strictly decreasing `L'` by bisection on `t`.
    pub fn invert_lprime(&self, v: f64) -> Result<f64> {
        let (min, max) = self.lprime_range();
        if !(v > min && v < max) {
            return Err(Error::ValueOutOfRange { value: v, min, max });
        }
        let settings = NumericSettings::current();
        let lprime = |t: f64| self.lagrangean(t).map(|e| e.derivative);
        invert_monotone(
            &lprime,
            v,
            self.slope_domain(),
            Monotone::Decreasing,
            settings.inversion_tol,
            settings.max_iterations,
        )
    }

    /// Characteristic polynomial, one monomial per step.
    pub fn char_polynomial(&self) -> Vec<Monomial> {
        self.steps
            .iter()
            .map(|s| Monomial {
                coefficient: s.weight,
                x_power: s.u,
                y_power: s.v,
            })
            .collect()
    }
}

/// Evaluates `P(x, y)` from its monomials.
pub fn eval_polynomial(poly: &[Monomial], x: f64, y: f64) -> f64 {
    poly.iter()
        .map(|m| m.coefficient * x.powi(m.x_power as i32) * y.powi(m.y_power as i32))
        .sum()
}

// Root z > 0 of Σ w z^k = 1, returned as log z.
fn solve_power_sum(terms: impl Iterator<Item = (f64, f64)>) -> Result<f64> {
    let terms: Vec<(f64, f64)> = terms.collect();
    // g(c) = log Σ w e^{k c}, convex increasing; Newton from the right.
    let mut c = terms
        .iter()
        .map(|&(k, w)| -w.ln() / k)
        .fold(f64::NEG_INFINITY, f64::max);
    let budget = NumericSettings::current().max_iterations;
    for _ in 0..budget {
        let peak = terms
            .iter()
            .map(|&(k, w)| k * c + w.ln())
            .fold(f64::NEG_INFINITY, f64::max);
        let (mut s, mut ks) = (0.0, 0.0);
        for &(k, w) in &terms {
            let e = (k * c + w.ln() - peak).exp();
            s += e;
            ks += k * e;
        }
        let g = peak + s.ln();
        let step = g / (ks / s);
        let next = c - step;
        if step.abs() <= 4.0 * f64::EPSILON * c.abs().max(1.0) || next >= c {
            return Ok(next.min(c));
        }
        c = next;
    }
    Err(Error::NoConvergence {
        what: "edge power sum",
        iterations: budget,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotone {
    Increasing,
    Decreasing,
}

/// Bisection for `f(t) = v` with `f` strictly monotone on the open interval
/// `domain`. Infinite ends are reached by doubling, finite ends by halving
/// the distance. Stops once `|f(t) - v| <= tol` or the bracket collapses.
pub fn invert_monotone<F>(
    f: &F,
    v: f64,
    domain: (f64, f64),
    direction: Monotone,
    tol: f64,
    budget: usize,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (dmin, dmax) = domain;
    // sign > 0 means t must move right
    let wants_right = |fv: f64| match direction {
        Monotone::Increasing => fv < v,
        Monotone::Decreasing => fv > v,
    };
    let mut t = match (dmin.is_finite(), dmax.is_finite()) {
        (true, true) => 0.5 * (dmin + dmax),
        (true, false) => dmin + 1.0,
        (false, true) => dmax - 1.0,
        (false, false) => 0.0,
    };
    let mut iterations = 0usize;
    let mut fv = f(t)?;
    let (mut lo, mut hi);
    if (fv - v).abs() <= tol {
        return Ok(t);
    }
    let mut step = 1.0;
    if wants_right(fv) {
        lo = t;
        loop {
            iterations += 1;
            if iterations > budget {
                return Err(Error::NoConvergence {
                    what: "bracketing for inversion",
                    iterations: budget,
                });
            }
            t = if dmax.is_finite() {
                0.5 * (t + dmax)
            } else {
                t + step
            };
            step *= 2.0;
            fv = f(t)?;
            if (fv - v).abs() <= tol {
                return Ok(t);
            }
            if wants_right(fv) {
                lo = t;
            } else {
                hi = t;
                break;
            }
        }
    } else {
        hi = t;
        loop {
            iterations += 1;
            if iterations > budget {
                return Err(Error::NoConvergence {
                    what: "bracketing for inversion",
                    iterations: budget,
                });
            }
            t = if dmin.is_finite() {
                0.5 * (t + dmin)
            } else {
                t - step
            };
            step *= 2.0;
            fv = f(t)?;
            if (fv - v).abs() <= tol {
                return Ok(t);
            }
            if wants_right(fv) {
                lo = t;
                break;
            } else {
                hi = t;
            }
        }
    }
    loop {
        iterations += 1;
        if iterations > budget {
            return Err(Error::NoConvergence {
                what: "bisection for inversion",
                iterations: budget,
            });
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        fv = f(mid)?;
        if (fv - v).abs() <= tol {
            return Ok(mid);
        }
        if wants_right(fv) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Closed form `(x(t), y(t))` for the Aztec step set, `-1 < t < 1`.
pub fn aztec_xy_closed(t: f64, w: f64) -> (f64, f64) {
    let root_w = (1.0 + w).sqrt();
    let root_t = (1.0 + w * t * t).sqrt();
    let denom = (1.0 - t * t).sqrt();
    // x = (√(1+w) - √(1+wt²)) / (w √(1-t²)), rationalised
    let x = denom / (root_w + root_t);
    let y = (t * root_w + root_t) / denom;
    (x, y)
}

/// Closed form `(x(t), y(t))` for the ASM step set, `t < 0`.
pub fn asm_xy_closed(t: f64) -> (f64, f64) {
    (1.0 / (1.0 - t), -(1.0 - t) / t)
}

/// Aztec Lagrangean in closed form; valid for any `w > -1` and `|t| <= 1`
/// (the ends take their limit value 0).
pub fn aztec_lagrangean_closed(t: f64, w: f64) -> f64 {
    if t.abs() >= 1.0 {
        return 0.0;
    }
    let root_w = (1.0 + w).sqrt();
    let root_t = (1.0 + w * t * t).sqrt();
    let denom = (1.0 - t * t).sqrt();
    // for t > 0 use (√(1+wt²) - t√(1+w)) = (1-t²)/(√(1+wt²) + t√(1+w))
    let second = if t > 0.0 {
        denom / (root_t + t * root_w)
    } else {
        (root_t - t * root_w) / denom
    };
    ((root_t + root_w) / denom).ln() + t * second.ln()
}

/// ASM Lagrangean `(1-t)log(1-t) + t log|t|` for `t <= 0`, with `L(0) = 0`.
pub fn asm_lagrangean_closed(t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    // with u = -t: log(1+u) + u log(1 + 1/u), free of cancellation
    let u = -t;
    u.ln_1p() + u * (1.0 / u).ln_1p()
}

/// Weighted count of six-vertex paths from (0,0) to (p,q), `q <= 0 <= p`,
/// with weight `w1` per straight and `w2` per turn:
/// `w1^{p-q+1} Σ_l C(p,l) C(-q,l) τ^{2l+1}`, `τ = w2/w1`.
pub fn sixvertex_exact_zpq(p: u64, q: i64, w1: f64, w2: f64) -> Result<f64> {
    check_sixvertex_args(q, w1, w2)?;
    let mq = q.unsigned_abs();
    let tau = w2 / w1;
    let mut sum = 0.0;
    let (mut cp, mut cq) = (1.0f64, 1.0f64);
    for l in 0..=p.min(mq) {
        sum += cp * cq * tau.powi(2 * l as i32 + 1);
        cp = cp * (p - l) as f64 / (l + 1) as f64;
        cq = cq * (mq - l) as f64 / (l + 1) as f64;
    }
    Ok(w1.powi((p + mq + 1) as i32) * sum)
}

/// Logarithm of [`sixvertex_exact_zpq`], stable for large `p, q`.
pub fn sixvertex_ln_zpq(p: u64, q: i64, w1: f64, w2: f64) -> Result<f64> {
    check_sixvertex_args(q, w1, w2)?;
    let mq = q.unsigned_abs();
    let ln_fact = ln_factorials(p.max(mq) as usize);
    let ln_c =
        |n: u64, k: u64| ln_fact[n as usize] - ln_fact[k as usize] - ln_fact[(n - k) as usize];
    let ln_tau = (w2 / w1).ln();
    let terms: Vec<f64> = (0..=p.min(mq))
        .map(|l| ln_c(p, l) + ln_c(mq, l) + (2 * l + 1) as f64 * ln_tau)
        .collect();
    let peak = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|x| (x - peak).exp()).sum();
    Ok((p + mq + 1) as f64 * w1.ln() + peak + sum.ln())
}

fn check_sixvertex_args(q: i64, w1: f64, w2: f64) -> Result<()> {
    if q > 0 {
        return Err(Error::DomainError(format!(
            "six-vertex endpoint needs q <= 0, got {q}"
        )));
    }
    if !(w1 > 0.0 && w2 > 0.0 && w1.is_finite() && w2.is_finite()) {
        return Err(Error::InvalidWeight(format!(
            "six-vertex weights must be positive: {w1}, {w2}"
        )));
    }
    Ok(())
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Six-vertex Lagrangean `(1-t) log w1 + (1-t) L((1+t)/(1-t); τ²-1)`, `t <= 0`.
///
/// At `t = 0` the argument of the Aztec form sits on its edge `1`, where it
/// is replaced by its limit 0, leaving `log w1`.
pub fn sixvertex_lagrangean(t: f64, w1: f64, w2: f64) -> Result<f64> {
    check_sixvertex_args(0, w1, w2)?;
    if !(t <= 0.0) || !t.is_finite() {
        return Err(Error::SlopeOutOfDomain {
            t,
            min: f64::NEG_INFINITY,
            max: 0.0,
        });
    }
    let tau = w2 / w1;
    let arg = (1.0 + t) / (1.0 - t);
    Ok((1.0 - t) * (w1.ln() + aztec_lagrangean_closed(arg, tau * tau - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn polynomial_transcription() {
        let p = StepSet::aztec(2.0).unwrap().char_polynomial();
        assert_eq!(p.len(), 3);
        assert!(p.contains(&Monomial {
            coefficient: 1.0,
            x_power: 1,
            y_power: 1
        }));
        assert!(p.contains(&Monomial {
            coefficient: 1.0,
            x_power: 1,
            y_power: -1
        }));
        assert!(p.contains(&Monomial {
            coefficient: 2.0,
            x_power: 2,
            y_power: 0
        }));
        // x y + x / y + w x² at (0.3, 1.7)
        let direct = 0.3 * 1.7 + 0.3 / 1.7 + 2.0 * 0.09;
        assert!(close(eval_polynomial(&p, 0.3, 1.7), direct, 1e-15));

        let asm = StepSet::asm().char_polynomial();
        assert!(close(eval_polynomial(&asm, 0.4, 2.0), 0.4 + 0.5, 1e-15));

        let single = StepSet::new(
            vec![Step::new(1, 0, 3.0).unwrap(), Step::new(1, 1, 1.0).unwrap()],
            ModelTag::Custom,
        )
        .unwrap();
        assert_eq!(
            single.char_polynomial()[0],
            Monomial {
                coefficient: 3.0,
                x_power: 1,
                y_power: 0
            }
        );
    }

    #[test]
    fn step_set_validation() {
        assert!(Step::new(-1, 0, 1.0).is_err());
        assert!(Step::new(0, 0, 1.0).is_err());
        assert!(Step::new(1, 0, 0.0).is_err());
        let only_vertical = StepSet::new(vec![Step::new(0, 1, 1.0).unwrap()], ModelTag::Custom);
        assert!(only_vertical.is_err());
        let one_slope = StepSet::new(
            vec![Step::new(1, 0, 1.0).unwrap(), Step::new(2, 0, 1.0).unwrap()],
            ModelTag::Custom,
        );
        assert!(one_slope.is_err());
        let dup = StepSet::new(
            vec![Step::new(1, 0, 1.0).unwrap(), Step::new(1, 0, 2.0).unwrap()],
            ModelTag::Custom,
        );
        assert!(dup.is_err());
        assert_eq!(StepSet::asm().slope_domain(), (f64::NEG_INFINITY, 0.0));
        assert_eq!(StepSet::aztec(1.0).unwrap().slope_domain(), (-1.0, 1.0));
    }

    #[test]
    fn aztec_at_zero_slope() {
        let s = StepSet::aztec(1.0).unwrap();
        let sol = s.solve_xy(0.0).unwrap();
        assert!(close(sol.x, 2f64.sqrt() - 1.0, 1e-13));
        assert!(close(sol.y, 1.0, 1e-13));
        let (r1, r2) = s.residuals(&sol);
        assert!(r1 <= 1e-12 && r2 <= 1e-12);
    }

    #[test]
    fn aztec_matches_closed_form() {
        for &w in &[0.5, 1.0, 2.0] {
            let s = StepSet::aztec(w).unwrap();
            for i in -19..=19 {
                let t = i as f64 / 20.0;
                let sol = s.solve_xy(t).unwrap();
                let (x, y) = aztec_xy_closed(t, w);
                assert!(close(sol.x, x, 1e-12 * x.max(1.0)), "w={w} t={t}");
                assert!(close(sol.y, y, 1e-12 * y.max(1.0)), "w={w} t={t}");
                let l = s.lagrangean(t).unwrap();
                assert!(close(l.value, aztec_lagrangean_closed(t, w), 1e-12));
            }
        }
    }

    #[test]
    fn asm_matches_closed_form() {
        let s = StepSet::asm();
        for &t in &[-50.0, -3.0, -1.0, -0.5, -0.1, -1e-3, -1e-8] {
            let sol = s.solve_xy(t).unwrap();
            let (x, y) = asm_xy_closed(t);
            assert!(close(sol.x, x, 1e-12 * x), "t={t}");
            assert!(close(sol.y, y, 1e-12 * y), "t={t}");
            let l = s.lagrangean(t).unwrap();
            assert!(close(l.value, asm_lagrangean_closed(t), 1e-12), "t={t}");
            assert!(close(l.derivative, -y.ln(), 1e-12 * y.ln().abs().max(1.0)));
        }
        assert!(close(asm_lagrangean_closed(-1e-14), 0.0, 1e-12));
    }

    #[test]
    fn extreme_slopes_still_solve() {
        let s = StepSet::asm();
        for &t in &[-1e12, -1e6, -1e-12] {
            let l = s.lagrangean(t).unwrap();
            assert!(
                close(
                    l.value,
                    asm_lagrangean_closed(t),
                    1e-9 * asm_lagrangean_closed(t).abs().max(1.0)
                ),
                "t={t}"
            );
        }
        let a = StepSet::aztec(1.0).unwrap();
        for &t in &[1.0 - 1e-12, -1.0 + 1e-12] {
            let l = a.lagrangean(t).unwrap();
            assert!(close(l.value, aztec_lagrangean_closed(t, 1.0), 1e-10));
        }
    }

    #[test]
    fn slope_domain_is_open() {
        let a = StepSet::aztec(1.0).unwrap();
        assert!(matches!(
            a.solve_xy(1.0),
            Err(Error::SlopeOutOfDomain { .. })
        ));
        assert!(matches!(
            a.solve_xy(-1.5),
            Err(Error::SlopeOutOfDomain { .. })
        ));
        assert!(matches!(
            StepSet::asm().solve_xy(0.0),
            Err(Error::SlopeOutOfDomain { .. })
        ));
    }

    #[test]
    fn edge_limits() {
        let a = StepSet::aztec(2.0).unwrap();
        assert_eq!(a.edge_value(1.0).unwrap(), 0.0);
        assert_eq!(a.edge_value(-1.0).unwrap(), 0.0);
        assert!(a.edge_value(0.5).is_err());
        assert_eq!(StepSet::asm().edge_value(0.0).unwrap(), 0.0);
        assert_eq!(StepSet::asm().vertical_rate(-1.0).unwrap(), 0.0);
        // two edge steps (1,1) w=1 and (2,2) w=2: z + 2 z² = 1 -> z = 1/2
        let s = StepSet::new(
            vec![
                Step::new(1, 1, 1.0).unwrap(),
                Step::new(2, 2, 2.0).unwrap(),
                Step::new(1, 0, 1.0).unwrap(),
            ],
            ModelTag::Custom,
        )
        .unwrap();
        assert!(close(s.edge_value(1.0).unwrap(), 2f64.ln(), 1e-14));
        assert!(close(s.lagrangean_closure(1.0).unwrap(), 2f64.ln(), 1e-14));
    }

    #[test]
    fn invert_lprime_cases() {
        let asm = StepSet::asm();
        let t = asm.invert_lprime(-(3f64.ln())).unwrap();
        assert!(close(t, -0.5, 1e-9));
        assert!(matches!(
            asm.invert_lprime(0.1),
            Err(Error::ValueOutOfRange { .. })
        ));
        assert!(matches!(
            asm.invert_lprime(0.0),
            Err(Error::ValueOutOfRange { .. })
        ));
        let az = StepSet::aztec(1.0).unwrap();
        for &t0 in &[-0.9, -0.3, 0.0, 0.42, 0.95] {
            let v = az.lagrangean(t0).unwrap().derivative;
            let t = az.invert_lprime(v).unwrap();
            assert!(close(t, t0, 1e-8), "t0={t0} t={t}");
            assert!(close(az.lagrangean(t).unwrap().derivative, v, 1e-10));
        }
    }

    #[test]
    fn direct_log_y_route_agrees() {
        let az = StepSet::aztec(0.5).unwrap();
        for &t0 in &[-0.7, 0.1, 0.8] {
            let sol = az.solve_xy(t0).unwrap();
            let back = az.solve_at_log_y(sol.ln_y).unwrap();
            assert!(close(back.t, t0, 1e-12));
            assert!(close(back.x, sol.x, 1e-14));
        }
        assert!(StepSet::asm().solve_at_log_y(-0.5).is_err());
    }

    #[test]
    fn two_sided_vertical_steps() {
        // steps (1,0), (0,1) w=1/4, (0,-1) w=1/4: domain of log y is bounded
        let s = StepSet::new(
            vec![
                Step::new(1, 0, 1.0).unwrap(),
                Step::new(0, 1, 0.25).unwrap(),
                Step::new(0, -1, 0.25).unwrap(),
            ],
            ModelTag::Custom,
        )
        .unwrap();
        assert_eq!(s.slope_domain(), (f64::NEG_INFINITY, f64::INFINITY));
        let (lo, hi) = s.lprime_range();
        // y/4 + 1/(4y) = 1 -> y = 2 ± √3
        assert!(close(hi, -(2.0 - 3f64.sqrt()).ln(), 1e-12));
        assert!(close(lo, -(2.0 + 3f64.sqrt()).ln(), 1e-12));
        for &t in &[-30.0, -1.0, 0.0, 0.7, 25.0] {
            let sol = s.solve_xy(t).unwrap();
            let (r1, r2) = s.residuals(&sol);
            assert!(r1 <= 1e-12 && r2 <= 1e-12, "t={t} {r1} {r2}");
        }
        // symmetric set: t = 0 gives y = 1
        assert!(close(s.solve_xy(0.0).unwrap().y, 1.0, 1e-12));
    }

    #[test]
    fn sixvertex_counts() {
        assert_eq!(sixvertex_exact_zpq(1, -1, 1.0, 1.0).unwrap(), 2.0);
        assert_eq!(sixvertex_exact_zpq(2, -2, 1.0, 1.0).unwrap(), 6.0);
        assert!(close(
            sixvertex_exact_zpq(0, 0, 1.7, 0.4).unwrap(),
            0.4,
            1e-15
        ));
        assert!(close(
            sixvertex_ln_zpq(2, -2, 1.0, 1.0).unwrap(),
            6f64.ln(),
            1e-14
        ));
        assert!(close(
            sixvertex_ln_zpq(7, -3, 1.3, 0.8).unwrap(),
            sixvertex_exact_zpq(7, -3, 1.3, 0.8).unwrap().ln(),
            1e-12
        ));
        assert!(sixvertex_exact_zpq(1, 1, 1.0, 1.0).is_err());
    }

    #[test]
    fn sixvertex_reduces_to_asm() {
        for &t in &[-5.0, -1.0, -0.3, -0.01] {
            assert!(close(
                sixvertex_lagrangean(t, 1.0, 1.0).unwrap(),
                asm_lagrangean_closed(t),
                1e-12
            ));
        }
        assert!(close(
            sixvertex_lagrangean(0.0, 2.0, 1.0).unwrap(),
            2f64.ln(),
            1e-15
        ));
        assert!(sixvertex_lagrangean(0.1, 1.0, 1.0).is_err());
    }
}
