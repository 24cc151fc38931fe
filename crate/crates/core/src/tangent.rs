//! Arctic curves recovered as envelopes of tangent lines.
//!
//! A displaced outer path starts at `P(r) = (a(r), b(r))` on a straight
//! start line and leaves it along a segment of slope `t*(r)`. Moving the
//! start point changes the action by `G(t) = -a' L(t) + (t a' - b') L'(t)`,
//! so `t*(r)` solves `G(t*) = S'(r)`. The envelope of the lines
//! `y = b + t*(x - a)` is the arctic curve.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{asm_s, aztec_s, ArcticCurve, Model};
use crate::error::{Error, Result};
use crate::exact::ln_rational;
use crate::exact_asm::z1out;
use crate::exact_aztec::{g_entry, WeightParam};
use crate::settings::NumericSettings;
use crate::step_model::{invert_monotone, Monotone, StepSet};

/// Step for the central difference of a closed-form `S`.
pub const CLOSED_DS_STEP: f64 = 1e-6;
/// Outer step of the extrapolated central difference of `t*` from a closed-form `S`.
pub const CLOSED_DT_STEP: f64 = 1e-4;
/// Points dropped at each end of a table before differencing.
pub const TABLE_TRIM: usize = 2;
pub const MIN_TABLE_POINTS: usize = 10;
/// Below this `|dt*/dr|` the envelope is reported as degenerate.
pub const DEGENERATE_SLOPE: f64 = 1e-12;
// Second differences larger than this flag a kink in a table.
const MAX_CURVATURE: f64 = 1e8;

type RateFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

#[derive(Clone)]
pub enum RateFunction {
    /// `S(r)` on the open interval `domain`.
    ClosedForm {
        f: RateFn,
        domain: (f64, f64),
    },
    Tabulated {
        r: Vec<f64>,
        s: Vec<f64>,
    },
}

impl fmt::Debug for RateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateFunction::ClosedForm { domain, .. } => f
                .debug_struct("ClosedForm")
                .field("domain", domain)
                .finish(),
            RateFunction::Tabulated { r, .. } => f
                .debug_struct("Tabulated")
                .field("points", &r.len())
                .finish(),
        }
    }
}

impl RateFunction {
    pub fn closed_form<F>(f: F, domain: (f64, f64)) -> Self
    where
        F: Fn(f64) -> Result<f64> + Send + Sync + 'static,
    {
        RateFunction::ClosedForm {
            f: Arc::new(f),
            domain,
        }
    }

    /// Validated table: at least ten points, strictly increasing abscissae,
    /// finite values and bounded second differences.
    pub fn tabulated(r: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        if r.len() != s.len() {
            return Err(Error::InvalidRateTable(format!(
                "{} abscissae but {} values",
                r.len(),
                s.len()
            )));
        }
        if r.len() < MIN_TABLE_POINTS {
            return Err(Error::InvalidRateTable(format!(
                "need >= {MIN_TABLE_POINTS} points, got {}",
                r.len()
            )));
        }
        if r.iter().chain(&s).any(|v| !v.is_finite()) {
            return Err(Error::InvalidRateTable("non-finite entry".into()));
        }
        if let Some(i) = r.windows(2).position(|p| p[0] >= p[1]) {
            return Err(Error::InvalidRateTable(format!(
                "abscissae not increasing at index {i}"
            )));
        }
        for i in 1..r.len() - 1 {
            let (h1, h2) = (r[i] - r[i - 1], r[i + 1] - r[i]);
            let second =
                2.0 * (h1 * s[i + 1] - (h1 + h2) * s[i] + h2 * s[i - 1]) / (h1 * h2 * (h1 + h2));
            if second.abs() > MAX_CURVATURE {
                return Err(Error::InvalidRateTable(format!(
                    "second difference {second:e} at r = {}",
                    r[i]
                )));
            }
        }
        Ok(RateFunction::Tabulated { r, s })
    }

    /// ASM first-row refinement, `S(r) = S_asm(r, 1/2)`.
    pub fn asm_closed() -> Self {
        Self::closed_form(|r| asm_s(r, 0.5), (0.0, 0.5))
    }

    /// Aztec boundary refinement with the exit pinned at its unrefined
    /// position `s = 0`: `S(r) = S_aztec(r, 0)`.
    pub fn aztec_closed(w: f64) -> Self {
        Self::closed_form(move |r| aztec_s(r, 0.0, w), (0.0, f64::INFINITY))
    }
}

/// Start points `origin + r·direction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartLine {
    pub origin: (f64, f64),
    pub direction: (f64, f64),
}

impl StartLine {
    /// ASM: `(0, r)` on the left edge.
    pub fn asm() -> Self {
        Self {
            origin: (0.0, 0.0),
            direction: (0.0, 1.0),
        }
    }

    /// Aztec: `(-1-r, r)` on the north-west edge.
    pub fn aztec() -> Self {
        Self {
            origin: (-1.0, 0.0),
            direction: (-1.0, 1.0),
        }
    }

    pub fn point(&self, r: f64) -> (f64, f64) {
        (
            self.origin.0 + r * self.direction.0,
            self.origin.1 + r * self.direction.1,
        )
    }
}

#[derive(Debug, Clone)]
pub struct TangentProblem {
    pub rate: RateFunction,
    pub steps: StepSet,
    pub line: StartLine,
    pub curve: ArcticCurve,
}

impl TangentProblem {
    pub fn closed(model: Model) -> Result<Self> {
        let (rate, line) = match model {
            Model::Aztec { w } => (RateFunction::aztec_closed(w), StartLine::aztec()),
            Model::Asm => (RateFunction::asm_closed(), StartLine::asm()),
        };
        Ok(Self {
            rate,
            steps: model.step_set()?,
            line,
            curve: ArcticCurve::new(model),
        })
    }

    pub fn with_table(model: Model, r: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        let line = match model {
            Model::Aztec { .. } => StartLine::aztec(),
            Model::Asm => StartLine::asm(),
        };
        Ok(Self {
            rate: RateFunction::tabulated(r, s)?,
            steps: model.step_set()?,
            line,
            curve: ArcticCurve::new(model),
        })
    }

    /// `G(t) = -a' L + (t a' - b') L'`.
    pub fn slope_relation(&self, t: f64) -> Result<f64> {
        let e = self.steps.lagrangean(t)?;
        let (da, db) = self.line.direction;
        Ok(-da * e.value + (t * da - db) * e.derivative)
    }

    /// Solves `G(t) = v`. `G' = (t a' - b') L''` and `L'' < 0`, so `G` is
    /// monotone as long as the start line is never parallel to a slope.
    pub fn invert_slope_relation(&self, v: f64) -> Result<f64> {
        let domain = self.steps.slope_domain();
        let probe = match (domain.0.is_finite(), domain.1.is_finite()) {
            (true, true) => 0.5 * (domain.0 + domain.1),
            (true, false) => domain.0 + 1.0,
            (false, true) => domain.1 - 1.0,
            (false, false) => 0.0,
        };
        let (da, db) = self.line.direction;
        let direction = if probe * da - db < 0.0 {
            Monotone::Increasing
        } else {
            Monotone::Decreasing
        };
        let settings = NumericSettings::current();
        // tolerance 0: bisect until the bracket collapses
        invert_monotone(
            &|t| self.slope_relation(t),
            v,
            domain,
            direction,
            0.0,
            settings.max_iterations.max(400),
        )
    }

    fn closed_derivative(f: &RateFn, domain: (f64, f64), r: f64, h: f64) -> Result<f64> {
        if !(r - h > domain.0 && r + h < domain.1) {
            return Err(Error::DomainError(format!(
                "r = {r} is too close to the rate domain {domain:?}"
            )));
        }
        Ok((f(r + h)? - f(r - h)?) / (2.0 * h))
    }

    fn closed_t_star(&self, f: &RateFn, domain: (f64, f64), r: f64) -> Result<f64> {
        self.invert_slope_relation(Self::closed_derivative(f, domain, r, CLOSED_DS_STEP)?)
    }

    /// `t*(r)`. For a table, `r` snaps to the nearest usable sample.
    pub fn slope_from_s(&self, r: f64) -> Result<f64> {
        match &self.rate {
            RateFunction::ClosedForm { f, domain } => self.closed_t_star(f, *domain, r),
            RateFunction::Tabulated { r: rs, s } => {
                let i = nearest(rs, r);
                if i < TABLE_TRIM || i + TABLE_TRIM >= rs.len() {
                    return Err(Error::EdgeOfTable { r });
                }
                self.invert_slope_relation(lsq_derivative(rs, s, i))
            }
        }
    }

    fn point_from(&self, r: f64, t: f64, dt: f64) -> Result<CurveSample> {
        if !(dt.abs() >= DEGENERATE_SLOPE) {
            return Err(Error::DegenerateEnvelope {
                r,
                derivative: dt.abs(),
            });
        }
        let (a, b) = self.line.point(r);
        let (da, db) = self.line.direction;
        let x = a + (t * da - db) / dt;
        let y = b + t * (x - a);
        Ok(CurveSample {
            r,
            t_star: t,
            x,
            y,
            residual: self.curve.residual(x, y),
        })
    }

    /// One envelope point per requested `r`.
    pub fn envelope_point(&self, r: f64) -> Result<CurveSample> {
        match &self.rate {
            RateFunction::ClosedForm { f, domain } => {
                let h = CLOSED_DT_STEP;
                let t = self.closed_t_star(f, *domain, r)?;
                let central = |h: f64| -> Result<f64> {
                    Ok((self.closed_t_star(f, *domain, r + h)?
                        - self.closed_t_star(f, *domain, r - h)?)
                        / (2.0 * h))
                };
                // one Richardson step: t* has a pole at the end of the ASM domain
                let dt = (4.0 * central(0.5 * h)? - central(h)?) / 3.0;
                self.point_from(r, t, dt)
            }
            RateFunction::Tabulated { r: rs, s } => {
                let i = nearest(rs, r);
                if i < TABLE_TRIM + 1 || i + TABLE_TRIM + 1 >= rs.len() {
                    return Err(Error::EdgeOfTable { r });
                }
                let t: Vec<f64> = (i - 1..=i + 1)
                    .map(|j| self.invert_slope_relation(lsq_derivative(rs, s, j)))
                    .collect::<Result<_>>()?;
                let (h1, h2) = (rs[i] - rs[i - 1], rs[i + 1] - rs[i]);
                let dt = -h2 / (h1 * (h1 + h2)) * t[0]
                    + (h2 - h1) / (h1 * h2) * t[1]
                    + h1 / (h2 * (h1 + h2)) * t[2];
                self.point_from(rs[i], t[1], dt)
            }
        }
    }

    pub fn envelope(&self, r_grid: &[f64]) -> Result<ParametricCurve> {
        let samples = r_grid
            .par_iter()
            .map(|&r| self.envelope_point(r))
            .collect::<Result<Vec<_>>>()?;
        Ok(ParametricCurve {
            samples,
            line: self.line,
        })
    }
}

fn nearest(rs: &[f64], r: f64) -> usize {
    let i = rs.partition_point(|&x| x < r);
    if i == 0 {
        0
    } else if i == rs.len() || r - rs[i - 1] <= rs[i] - r {
        i - 1
    } else {
        i
    }
}

/// Slope at `r[i]` of the least-squares quadratic through the five samples
/// centred on `i`.
fn lsq_derivative(r: &[f64], s: &[f64], i: usize) -> f64 {
    let (x0, s0) = (r[i], s[i]);
    // normal equations for s - s0 ≈ c0 + c1 d + c2 d² in the offsets d
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for j in i - TABLE_TRIM..=i + TABLE_TRIM {
        let d = r[j] - x0;
        let p = [1.0, d, d * d];
        for a in 0..3 {
            rhs[a] += p[a] * (s[j] - s0);
            for b in 0..3 {
                m[a][b] += p[a] * p[b];
            }
        }
    }
    // Cramer's rule for c1
    let det3 = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let mut m1 = m;
    for a in 0..3 {
        m1[a][1] = rhs[a];
    }
    det3(&m1) / det3(&m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub r: f64,
    pub t_star: f64,
    pub x: f64,
    pub y: f64,
    /// Signed residual of the model's arctic-curve equation at `(x, y)`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricCurve {
    pub samples: Vec<CurveSample>,
    pub line: StartLine,
}

impl ParametricCurve {
    pub const CSV_COLUMNS: [&'static str; 5] = ["r", "t_star", "x", "y", "residual"];

    pub fn max_abs_residual(&self) -> f64 {
        self.samples
            .iter()
            .map(|p| p.residual.abs())
            .fold(0.0, f64::max)
    }

    /// Largest distance (in y) of a sample from its own tangent line.
    pub fn max_line_defect(&self) -> f64 {
        self.samples
            .iter()
            .map(|p| {
                let (a, b) = self.line.point(p.r);
                (p.y - (b + p.t_star * (p.x - a))).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `(r_i, S_i)` from exact lattice data: ASM first-row counts for
/// `1 <= k <= n/2`, or Aztec `g(n, k, 1)` for `1 <= k <= r_max·n`.
pub fn lattice_table(model: Model, n: u64, r_max: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 1 {
        return Err(Error::DomainError("n must be >= 1".into()));
    }
    let ks: Vec<u64> = match model {
        Model::Asm => (1..=n / 2).collect(),
        Model::Aztec { .. } => (1..=((r_max * n as f64).floor() as u64).max(1)).collect(),
    };
    let weight = match model {
        Model::Aztec { w } => Some(weight_from_f64(w)?),
        Model::Asm => None,
    };
    let values = ks
        .par_iter()
        .map(|&k| {
            let ratio = match &weight {
                Some(w) => g_entry(n, k, 1, w)?,
                None => z1out(n, k)?,
            };
            Ok(ln_rational(&ratio) / n as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((ks.iter().map(|&k| k as f64 / n as f64).collect(), values))
}

/// Exact weight for a float given with at most nine decimals.
pub fn weight_from_f64(w: f64) -> Result<WeightParam> {
    let scale = 1_000_000_000i64;
    let num = (w * scale as f64).round();
    if !(num >= 1.0) || ((num / scale as f64) - w).abs() > 1e-12 * w.abs().max(1.0) {
        return Err(Error::InvalidWeight(format!(
            "w = {w} is not a positive decimal with <= 9 places"
        )));
    }
    WeightParam::ratio(num as i64, scale)
}

/// Rate table from order-`n` lattice data, then the envelope on `r_grid`.
pub fn reconstruct_from_lattice(model: Model, n: u64, r_grid: &[f64]) -> Result<ParametricCurve> {
    let r_max = r_grid.iter().copied().fold(0.0, f64::max) + 10.0 / n as f64;
    let (r, s) = lattice_table(model, n, r_max)?;
    TangentProblem::with_table(model, r, s)?.envelope(r_grid)
}

/// `t*(r) = r(2-r)/(2r-1)` for the ASM start line.
pub fn asm_t_star_closed(r: f64) -> f64 {
    r * (2.0 - r) / (2.0 * r - 1.0)
}

/// `(x(r), y(r)) = ((2r-1)², 3r²) / (2(1-r+r²))`.
pub fn asm_envelope_closed(r: f64) -> (f64, f64) {
    let d = 2.0 * (1.0 - r + r * r);
    ((2.0 * r - 1.0).powi(2) / d, 3.0 * r * r / d)
}

/// `n` points evenly spaced strictly inside `(lo, hi)`.
pub fn interior_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n)
        .map(|i| lo + (hi - lo) * i as f64 / (n + 1) as f64)
        .collect()
}
