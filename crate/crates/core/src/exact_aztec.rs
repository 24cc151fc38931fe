//! Exact partition functions of the Aztec diamond in its path formulation.
//!
//! Paths start at `p_i = (-i, i-n)` and end at `q_j = (j, j-n)` with steps
//! `(1,1)`, `(1,-1)` and the level step `(2,0)` of weight `w`. The weighted
//! number of single paths `p_i -> q_j` is the trinomial sum `A_{i,j}`, whose
//! semi-infinite matrix factors as `A = L U` with `L_{ij} = C(i,j)` and
//! `U_{ij} = (1+w)^i C(j,i)`.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{
    binomial, det_rational, format_rational, ln_rational, parse_rational, BinomialRows,
};

/// Default size cap `n + m` for [`lgv_oracle`].
pub const LGV_CAP: usize = 40;

/// Positive exact weight of the level step.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightParam {
    w: BigRational,
}

impl WeightParam {
    pub fn new(w: BigRational) -> Result<Self> {
        if !w.is_positive() {
            return Err(Error::InvalidWeight(format!(
                "w must be positive, got {}",
                format_rational(&w)
            )));
        }
        Ok(Self { w })
    }

    pub fn integer(w: i64) -> Result<Self> {
        Self::new(BigRational::from_integer(w.into()))
    }

    pub fn ratio(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidWeight("zero denominator".into()));
        }
        Self::new(BigRational::new(num.into(), den.into()))
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::new(parse_rational(s)?)
    }

    pub fn value(&self) -> &BigRational {
        &self.w
    }

    pub fn one_plus(&self) -> BigRational {
        &self.w + BigRational::one()
    }

    pub fn to_f64(&self) -> f64 {
        self.w.to_f64().unwrap_or(f64::NAN)
    }
}

impl std::fmt::Display for WeightParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&format_rational(&self.w))
    }
}

/// Displaced endpoints `(k_1 < … < k_m | l_1 < … < l_m)` of the outer paths.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RefinementSpec {
    kvec: Vec<u64>,
    lvec: Vec<u64>,
}

impl RefinementSpec {
    pub fn new(kvec: Vec<u64>, lvec: Vec<u64>) -> Result<Self> {
        if kvec.len() != lvec.len() {
            return Err(Error::InvalidRefinement(format!(
                "k and l have different lengths ({} vs {})",
                kvec.len(),
                lvec.len()
            )));
        }
        for (name, v) in [("k", &kvec), ("l", &lvec)] {
            if v.first().is_some_and(|&x| x < 1) {
                return Err(Error::InvalidRefinement(format!(
                    "{name} entries must be >= 1"
                )));
            }
            if v.windows(2).any(|p| p[0] >= p[1]) {
                return Err(Error::InvalidRefinement(format!(
                    "{name} must be strictly increasing"
                )));
            }
        }
        Ok(Self { kvec, lvec })
    }

    /// The empty refinement (`m = 0`).
    pub fn empty() -> Self {
        Self::default()
    }

    /// `(1, …, m | 1, …, m)`, which reproduces the order `n + m` diamond.
    pub fn consecutive(m: u64) -> Self {
        let v: Vec<u64> = (1..=m).collect();
        Self {
            kvec: v.clone(),
            lvec: v,
        }
    }

    pub fn kvec(&self) -> &[u64] {
        &self.kvec
    }

    pub fn lvec(&self) -> &[u64] {
        &self.lvec
    }

    pub fn m(&self) -> usize {
        self.kvec.len()
    }

    pub fn transposed(&self) -> Self {
        Self {
            kvec: self.lvec.clone(),
            lvec: self.kvec.clone(),
        }
    }
}

/// `A_{i,j} = Σ_p w^p (i+j-p)! / ((i-p)! (j-p)! p!)`.
pub fn trinomial_entry(i: u64, j: u64, w: &WeightParam) -> BigRational {
    let mut acc = BigRational::zero();
    let mut wp = BigRational::one();
    for p in 0..=i.min(j) {
        let c = binomial(i + j - p, p) * binomial(i + j - 2 * p, i - p);
        acc += &wp * BigRational::from_integer(BigInt::from(c));
        wp *= w.value();
    }
    acc
}

#[allow(non_snake_case)]
pub fn lu_entry_L(i: u64, j: u64) -> Result<BigInt> {
    if i < j {
        return Err(Error::IndexOrder(format!("L_{{{i},{j}}} requires i >= j")));
    }
    Ok(BigInt::from(binomial(i, j)))
}

#[allow(non_snake_case)]
pub fn lu_entry_U(i: u64, j: u64, w: &WeightParam) -> Result<BigRational> {
    if i > j {
        return Err(Error::IndexOrder(format!("U_{{{i},{j}}} requires i <= j")));
    }
    Ok(Pow::pow(w.one_plus(), i) * BigRational::from_integer(BigInt::from(binomial(j, i))))
}

/// `Z_n = (1+w)^{n(n+1)/2}`.
#[allow(non_snake_case)]
pub fn unrefined_Z(n: u64, w: &WeightParam) -> BigRational {
    Pow::pow(w.one_plus(), n * (n + 1) / 2)
}

/// `g(n,k,l) = Σ_{j=1}^{min(k,l)} (1+w)^{n+j} C(n+k, n+j) C(n+l, n+j)`.
///
/// With `1 + w = a/d` in lowest terms the sum is formed over the common
/// denominator `d^{n+min(k,l)}`, so only one rational is built.
pub fn g_entry(n: u64, k: u64, l: u64, w: &WeightParam) -> Result<BigRational> {
    if k < 1 || l < 1 {
        return Err(Error::InvalidRefinement(format!(
            "g needs k, l >= 1 (got {k}, {l})"
        )));
    }
    let base = w.one_plus();
    let (a, d) = (base.numer().clone(), base.denom().clone());
    let top = k.min(l);
    let rows = BinomialRows::global();
    let (row_k, row_l) = (rows.row(n + k), rows.row(n + l));
    let mut d_pows = Vec::with_capacity(top as usize);
    let mut dp = BigInt::one();
    for _ in 0..top {
        d_pows.push(dp.clone());
        dp *= &d;
    }
    let mut a_pow: BigInt = Pow::pow(&a, n + 1);
    let mut numer = BigInt::zero();
    for j in 1..=top {
        let c: BigUint = &row_k[(n + j) as usize] * &row_l[(n + j) as usize];
        numer += &a_pow * &d_pows[(top - j) as usize] * BigInt::from(c);
        a_pow *= &a;
    }
    let denom: BigInt = Pow::pow(&d, n + top);
    Ok(BigRational::new(numer, denom))
}

/// The `m × m` matrix of g entries for a refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct GMatrix {
    pub entries: Vec<Vec<BigRational>>,
    pub n: u64,
    pub spec: RefinementSpec,
}

impl GMatrix {
    pub fn build(n: u64, spec: &RefinementSpec, w: &WeightParam) -> Result<Self> {
        let entries = spec
            .kvec()
            .iter()
            .map(|&k| {
                spec.lvec()
                    .iter()
                    .map(|&l| g_entry(n, k, l, w))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            entries,
            n,
            spec: spec.clone(),
        })
    }

    pub fn determinant(&self) -> BigRational {
        det_rational(&self.entries)
    }
}

/// `Z_{n+m}(k|l) / Z_n = det g`; `1` for the empty refinement.
pub fn multirefined_ratio(n: u64, spec: &RefinementSpec, w: &WeightParam) -> Result<BigRational> {
    Ok(GMatrix::build(n, spec, w)?.determinant())
}

fn lgv_indices(n: u64, extra: &[u64]) -> Vec<u64> {
    (0..=n).chain(extra.iter().map(|&k| n + k)).collect()
}

/// Full LGV determinant `Z_{n+m}(k|l)` of the `(n+1+m)`-square block of `A`
/// with rows `0..=n, n+k_a` and columns `0..=n, n+l_b`.
pub fn lgv_oracle(n: u64, spec: &RefinementSpec, w: &WeightParam) -> Result<BigRational> {
    lgv_oracle_capped(n, spec, w, LGV_CAP)
}

pub fn lgv_oracle_capped(
    n: u64,
    spec: &RefinementSpec,
    w: &WeightParam,
    cap: usize,
) -> Result<BigRational> {
    if n as usize + spec.m() > cap {
        return Err(Error::CapExceeded(format!(
            "LGV oracle needs n + m <= {cap}, got {}",
            n as usize + spec.m()
        )));
    }
    let rows = lgv_indices(n, spec.kvec());
    let cols = lgv_indices(n, spec.lvec());
    let mut cache: HashMap<(u64, u64), BigRational> = HashMap::new();
    let matrix: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|&i| {
            cols.iter()
                .map(|&j| {
                    cache
                        .entry((i, j))
                        .or_insert_with(|| trinomial_entry(i, j, w))
                        .clone()
                })
                .collect()
        })
        .collect();
    Ok(det_rational(&matrix))
}

/// Caps of the brute-force oracle.
pub const BRUTE_N_CAP: u64 = 3;
pub const BRUTE_NM_CAP: u64 = 4;
pub const BRUTE_KL_CAP: u64 = 4;

/// Polynomial in `w`, indexed by the number of level steps.
type LevelPoly = Vec<u128>;

fn poly_add(acc: &mut LevelPoly, b: &[u128]) {
    if acc.len() < b.len() {
        acc.resize(b.len(), 0);
    }
    for (a, y) in acc.iter_mut().zip(b) {
        *a += y;
    }
}

const STEPS: [(i64, i64, usize); 3] = [(1, 1, 0), (1, -1, 0), (2, 0, 1)];

struct Enumerator {
    occupied: std::collections::HashSet<(i64, i64)>,
    pairs: Vec<((i64, i64), (i64, i64))>,
    /// lowest admissible y; no path can usefully go below the trivial path
    floor: i64,
}

impl Enumerator {
    // Weighted count of the paths `index..` given the current occupation.
    fn families(&mut self, index: usize) -> LevelPoly {
        if index == self.pairs.len() {
            return vec![1];
        }
        let (src, dst) = self.pairs[index];
        if self.occupied.contains(&src) || self.occupied.contains(&dst) {
            return vec![0];
        }
        if index + 1 == self.pairs.len() {
            let mut memo = HashMap::new();
            return self.last_path(src, dst, &mut memo);
        }
        let mut acc = vec![0];
        let mut trail = vec![src];
        self.occupied.insert(src);
        self.walk(index, src, dst, 0, &mut trail, &mut acc);
        self.occupied.remove(&src);
        acc
    }

    fn walk(
        &mut self,
        index: usize,
        at: (i64, i64),
        dst: (i64, i64),
        levels: usize,
        trail: &mut Vec<(i64, i64)>,
        acc: &mut LevelPoly,
    ) {
        if at == dst {
            let rest = self.families(index + 1);
            let mut shifted = vec![0u128; levels];
            shifted.extend(rest);
            poly_add(acc, &shifted);
            return;
        }
        for &(dx, dy, lv) in &STEPS {
            let next = (at.0 + dx, at.1 + dy);
            if !reachable(next, dst) || next.1 < self.floor || self.occupied.contains(&next) {
                continue;
            }
            self.occupied.insert(next);
            trail.push(next);
            self.walk(index, next, dst, levels + lv, trail, acc);
            trail.pop();
            self.occupied.remove(&next);
        }
    }

    fn last_path(
        &self,
        at: (i64, i64),
        dst: (i64, i64),
        memo: &mut HashMap<(i64, i64), LevelPoly>,
    ) -> LevelPoly {
        if at == dst {
            return vec![1];
        }
        if let Some(p) = memo.get(&at) {
            return p.clone();
        }
        let mut acc = vec![0];
        for &(dx, dy, lv) in &STEPS {
            let next = (at.0 + dx, at.1 + dy);
            if !reachable(next, dst) || next.1 < self.floor || self.occupied.contains(&next) {
                continue;
            }
            let sub = self.last_path(next, dst, memo);
            let mut shifted = vec![0u128; lv];
            shifted.extend(sub);
            poly_add(&mut acc, &shifted);
        }
        memo.insert(at, acc.clone());
        acc
    }
}

// Target still reachable with slopes in [-1, 1].
fn reachable(at: (i64, i64), dst: (i64, i64)) -> bool {
    let dx = dst.0 - at.0;
    dx >= 0 && (dst.1 - at.1).abs() <= dx
}

/// Direct enumeration of vertex-disjoint path families, independent of the
/// LGV lemma. Tiny sizes only.
pub fn brute_force_paths(n: u64, spec: &RefinementSpec, w: &WeightParam) -> Result<BigRational> {
    let m = spec.m() as u64;
    if n > BRUTE_N_CAP || n + m > BRUTE_NM_CAP {
        return Err(Error::CapExceeded(format!(
            "brute force needs n <= {BRUTE_N_CAP} and n + m <= {BRUTE_NM_CAP} (got n={n}, m={m})"
        )));
    }
    if spec
        .kvec()
        .iter()
        .chain(spec.lvec())
        .any(|&k| k > BRUTE_KL_CAP)
    {
        return Err(Error::CapExceeded(format!(
            "brute force needs k, l <= {BRUTE_KL_CAP}"
        )));
    }
    let n_i = n as i64;
    let source = |i: u64| (-(i as i64), i as i64 - n_i);
    let sink = |j: u64| (j as i64, j as i64 - n_i);
    let rows = lgv_indices(n, spec.kvec());
    let cols = lgv_indices(n, spec.lvec());
    // path 0 has zero length and only occupies its vertex
    let mut occupied = std::collections::HashSet::new();
    occupied.insert(source(0));
    let pairs = rows[1..]
        .iter()
        .zip(&cols[1..])
        .map(|(&i, &j)| (source(i), sink(j)))
        .collect();
    let mut e = Enumerator {
        occupied,
        pairs,
        floor: -n_i,
    };
    let poly = e.families(0);
    let mut total = BigRational::zero();
    let mut wp = BigRational::one();
    for c in poly {
        total += &wp * BigRational::from_integer(BigInt::from(c));
        wp *= w.value();
    }
    Ok(total)
}

/// `(1/n) log g(n, ⌊rn⌋, ⌊sn⌋)`.
pub fn aztec_rate(n: u64, r: f64, s: f64, w: &WeightParam) -> Result<f64> {
    let k = (r * n as f64).floor();
    let l = (s * n as f64).floor();
    if !(k >= 1.0 && l >= 1.0) {
        return Err(Error::DomainError(format!(
            "floor(rn), floor(sn) must be >= 1 (r={r}, s={s}, n={n})"
        )));
    }
    Ok(ln_rational(&g_entry(n, k as u64, l as u64, w)?) / n as f64)
}

/// `(1/n) log det g` for the refinement `k_a = ⌊r_a n⌋`, `l_a = ⌊s_a n⌋`.
pub fn multirefined_rate(n: u64, rvec: &[f64], svec: &[f64], w: &WeightParam) -> Result<f64> {
    let floor =
        |v: &[f64]| -> Vec<u64> { v.iter().map(|x| (x * n as f64).floor() as u64).collect() };
    let spec = RefinementSpec::new(floor(rvec), floor(svec))?;
    let ratio = multirefined_ratio(n, &spec, w)?;
    if !ratio.is_positive() {
        return Err(Error::DomainError(
            "multirefined ratio is not positive".into(),
        ));
    }
    Ok(ln_rational(&ratio) / n as f64)
}
