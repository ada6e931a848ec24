//! Eluder dimension of finite function classes under the ℓ1 and ℓ2 prefix
//! criteria, plus the pigeonhole regret bound built on it.
//!
//! A point is never independent of a prefix that already contains it (the
//! prefix sum would include `|f(z)|` itself), so longest eluder sequences
//! are repetition-free and the search runs over prefix *sets*. Prefix sums
//! are always accumulated in ascending point order, so the same set gives
//! bit-identical sums wherever it is evaluated, including in the default
//! threshold grid.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default bound on distinct prefix sets visited per threshold.
pub const DEFAULT_SEARCH_CAP: u64 = 10_000_000;

/// Value table `functions[f][x]` over a domain `0..domain_size`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawClass")]
pub struct FiniteFunctionClass {
    domain_size: usize,
    functions: Vec<Vec<f64>>,
    #[serde(skip_serializing)]
    bound: f64,
}

#[derive(Deserialize)]
struct RawClass {
    domain_size: usize,
    functions: Vec<Vec<f64>>,
}

impl TryFrom<RawClass> for FiniteFunctionClass {
    type Error = Error;

    fn try_from(raw: RawClass) -> Result<Self> {
        FiniteFunctionClass::new(raw.domain_size, raw.functions)
    }
}

impl FiniteFunctionClass {
    pub fn new(domain_size: usize, functions: Vec<Vec<f64>>) -> Result<Self> {
        if domain_size > 64 {
            return Err(Error::InvalidParameter(format!("domain of {domain_size} points exceeds 64")));
        }
        for (i, row) in functions.iter().enumerate() {
            if row.len() != domain_size {
                return Err(Error::DimensionMismatch(format!(
                    "function {i} has {} values, domain has {domain_size} points",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("function {i} has non-finite value {v}")));
            }
        }
        let bound = functions.iter().flatten().fold(0.0, |m: f64, v| m.max(v.abs()));
        Ok(FiniteFunctionClass {
            domain_size,
            functions,
            bound,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn functions(&self) -> &[Vec<f64>] {
        &self.functions
    }

    /// `C = max_{f, x} |f(x)|`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    fn check_point(&self, x: usize) -> Result<()> {
        if x >= self.domain_size {
            return Err(Error::InvalidParameter(format!("point {x} outside domain of size {}", self.domain_size)));
        }
        Ok(())
    }
}

/// Prefix criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    /// `sum_i |f(x_i)| <= eps`
    L1,
    /// `sqrt(sum_i f(x_i)^2) <= eps`
    L2,
}

impl Norm {
    fn prefix_size(self, row: &[f64], sorted_points: impl Iterator<Item = usize>) -> f64 {
        match self {
            Norm::L1 => sorted_points.map(|x| row[x].abs()).sum(),
            Norm::L2 => sorted_points.map(|x| row[x] * row[x]).sum::<f64>().sqrt(),
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps={eps} must be positive and finite")));
    }
    Ok(())
}

fn independent_sorted(class: &FiniteFunctionClass, norm: Norm, z: usize, sorted: &[usize], eps: f64) -> bool {
    class
        .functions
        .iter()
        .any(|row| row[z].abs() > eps && norm.prefix_size(row, sorted.iter().copied()) <= eps)
}

/// Whether some `f` keeps the prefix within `eps` while `|f(z)| > eps`.
pub fn is_eps_independent_with(
    class: &FiniteFunctionClass,
    norm: Norm,
    z: usize,
    prefix: &[usize],
    eps: f64,
) -> Result<bool> {
    check_eps(eps)?;
    class.check_point(z)?;
    for &x in prefix {
        class.check_point(x)?;
    }
    let mut sorted = prefix.to_vec();
    sorted.sort_unstable();
    Ok(independent_sorted(class, norm, z, &sorted, eps))
}

/// ℓ1 independence of `z` from `prefix`.
pub fn is_eps_independent(class: &FiniteFunctionClass, z: usize, prefix: &[usize], eps: f64) -> Result<bool> {
    is_eps_independent_with(class, Norm::L1, z, prefix, eps)
}

/// Whether every element is independent of the elements before it.
pub fn is_eluder_sequence_with(class: &FiniteFunctionClass, norm: Norm, seq: &[usize], eps: f64) -> Result<bool> {
    check_eps(eps)?;
    for i in 0..seq.len() {
        if !is_eps_independent_with(class, norm, seq[i], &seq[..i], eps)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// ℓ1 eluder-sequence test.
pub fn is_eluder_sequence(class: &FiniteFunctionClass, seq: &[usize], eps: f64) -> Result<bool> {
    is_eluder_sequence_with(class, Norm::L1, seq, eps)
}

/// Longest eluder sequence found and the threshold it was found at.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EluderResult {
    pub dimension: usize,
    /// Threshold `eps' >= eps` attaining the dimension (smallest on ties).
    pub eps_prime: f64,
    pub witness: Vec<usize>,
}

/// Thresholds at which independence can change, restricted to `>= eps`,
/// together with `eps` itself. Ascending and deduplicated.
///
/// Between two consecutive breakpoints the independence predicate is
/// constant and equals its value at the left end, so maximizing over this
/// grid is the same as maximizing over every `eps' >= eps`.
pub fn default_eps_grid(class: &FiniteFunctionClass, norm: Norm, eps: f64) -> Result<Vec<f64>> {
    check_eps(eps)?;
    let n = class.domain_size;
    if n > 20 {
        return Err(Error::InvalidParameter(format!(
            "default threshold grid enumerates 2^{n} subsets; pass an explicit grid"
        )));
    }
    let mut grid = vec![eps];
    for row in &class.functions {
        for mask in 1u64..(1u64 << n) {
            let v = norm.prefix_size(row, (0..n).filter(|&x| mask >> x & 1 == 1));
            if v >= eps && v > 0.0 {
                grid.push(v);
            }
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

struct Search<'a> {
    class: &'a FiniteFunctionClass,
    norm: Norm,
    eps: f64,
    cap: u64,
    memo: HashMap<u64, (usize, Option<usize>)>,
    best: usize,
}

impl Search<'_> {
    // longest extension of the set `mask`; None when the cap trips
    fn longest(&mut self, mask: u64, depth: usize) -> Option<usize> {
        if let Some(&(len, _)) = self.memo.get(&mask) {
            return Some(len);
        }
        if self.memo.len() as u64 >= self.cap {
            return None;
        }
        let n = self.class.domain_size;
        let sorted: Vec<usize> = (0..n).filter(|&x| mask >> x & 1 == 1).collect();
        let mut best = (0, None);
        for z in (0..n).filter(|&z| mask >> z & 1 == 0) {
            if independent_sorted(self.class, self.norm, z, &sorted, self.eps) {
                let len = 1 + self.longest(mask | 1 << z, depth + 1)?;
                if len > best.0 {
                    best = (len, Some(z));
                }
            }
        }
        self.best = self.best.max(depth + best.0);
        self.memo.insert(mask, best);
        Some(best.0)
    }

    fn witness(&self) -> Vec<usize> {
        let mut mask = 0u64;
        let mut out = Vec::new();
        while let Some(&(_, Some(z))) = self.memo.get(&mask) {
            out.push(z);
            mask |= 1 << z;
        }
        out
    }
}

/// Longest eluder sequence at a single threshold.
fn search_at(class: &FiniteFunctionClass, norm: Norm, eps: f64, cap: u64) -> Result<(usize, Vec<usize>)> {
    let mut s = Search {
        class,
        norm,
        eps,
        cap,
        memo: HashMap::new(),
        best: 0,
    };
    match s.longest(0, 0) {
        Some(d) => Ok((d, s.witness())),
        None => Err(Error::SearchCapExceeded {
            cap,
            lower_bound: s.best,
        }),
    }
}

/// `max_{eps' in grid, eps' >= eps}` of the longest `eps'`-eluder sequence
/// under `norm`. `grid = None` uses [`default_eps_grid`]; entries below
/// `eps` are ignored.
pub fn eluder_dimension_with(
    class: &FiniteFunctionClass,
    norm: Norm,
    eps: f64,
    grid: Option<&[f64]>,
    cap: u64,
) -> Result<EluderResult> {
    check_eps(eps)?;
    let grid: Vec<f64> = match grid {
        Some(g) => g.iter().copied().filter(|&e| e >= eps).collect(),
        None => default_eps_grid(class, norm, eps)?,
    };
    if grid.is_empty() {
        return Err(Error::InvalidParameter(format!("no threshold in the grid is >= eps={eps}")));
    }
    let results: Vec<Result<(usize, Vec<usize>)>> = grid.par_iter().map(|&e| search_at(class, norm, e, cap)).collect();
    let mut best: Option<EluderResult> = None;
    let mut lower_bound = None;
    for (&e, r) in grid.iter().zip(results) {
        match r {
            Ok((dimension, witness)) => {
                if best.as_ref().is_none_or(|b| dimension > b.dimension || (dimension == b.dimension && e < b.eps_prime)) {
                    best = Some(EluderResult {
                        dimension,
                        eps_prime: e,
                        witness,
                    });
                }
            }
            Err(Error::SearchCapExceeded { lower_bound: lb, .. }) => {
                lower_bound = Some(lower_bound.unwrap_or(0).max(lb));
            }
            Err(other) => return Err(other),
        }
    }
    match lower_bound {
        Some(lb) => Err(Error::SearchCapExceeded {
            cap,
            lower_bound: lb.max(best.map_or(0, |b| b.dimension)),
        }),
        None => Ok(best.expect("grid nonempty")),
    }
}

/// ℓ1 eluder dimension.
pub fn eluder_dimension(class: &FiniteFunctionClass, eps: f64, grid: Option<&[f64]>, cap: u64) -> Result<EluderResult> {
    eluder_dimension_with(class, Norm::L1, eps, grid, cap)
}

/// ℓ2 eluder dimension.
pub fn l2_eluder_dimension(class: &FiniteFunctionClass, eps: f64, grid: Option<&[f64]>, cap: u64) -> Result<EluderResult> {
    eluder_dimension_with(class, Norm::L2, eps, grid, cap)
}

/// `(d + 1) C + d beta ln(C / omega) + k omega`.
pub fn pigeonhole_bound(d: usize, c: f64, beta: f64, omega: f64, k: usize) -> Result<f64> {
    if !(omega > 0.0 && omega <= c) {
        return Err(Error::InvalidParameter(format!("cutoff omega={omega} must lie in (0, C={c}]")));
    }
    let d = d as f64;
    Ok((d + 1.0) * c + d * beta * (c / omega).ln() + k as f64 * omega)
}

/// Outcome of checking the pigeonhole bound on one sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PigeonholeCheck {
    /// Whether `sum_{t<k} |phi_k(x_t)| <= beta` for every `k`.
    pub precondition_ok: bool,
    /// First 1-based `k` where the precondition fails.
    pub first_violation: Option<usize>,
    /// `sum_t |phi_t(x_t)|`.
    pub lhs: f64,
    /// Bound value, computed only when the precondition holds.
    pub rhs: Option<f64>,
    pub dimension: Option<usize>,
}

impl PigeonholeCheck {
    /// `Some(lhs <= rhs)` when the precondition holds.
    pub fn holds(&self) -> Option<bool> {
        self.rhs.map(|r| self.lhs <= r)
    }
}

/// Checks the pigeonhole bound for the pairs `(phi_t, x_t)`. The bound uses
/// the ℓ1 `omega`-eluder dimension over every threshold `>= omega`.
pub fn verify_pigeonhole(
    class: &FiniteFunctionClass,
    phi_seq: &[usize],
    x_seq: &[usize],
    beta: f64,
    omega: f64,
    cap: u64,
) -> Result<PigeonholeCheck> {
    if phi_seq.len() != x_seq.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} functions but {} points",
            phi_seq.len(),
            x_seq.len()
        )));
    }
    if let Some(&f) = phi_seq.iter().find(|&&f| f >= class.functions.len()) {
        return Err(Error::InvalidParameter(format!("function index {f} out of range")));
    }
    for &x in x_seq {
        class.check_point(x)?;
    }
    let c = class.bound();
    if !(omega > 0.0 && omega <= c) {
        return Err(Error::InvalidParameter(format!("cutoff omega={omega} must lie in (0, C={c}]")));
    }
    let first_violation = (0..phi_seq.len()).find(|&k| {
        let row = &class.functions[phi_seq[k]];
        x_seq[..k].iter().map(|&x| row[x].abs()).sum::<f64>() > beta
    });
    let lhs = phi_seq
        .iter()
        .zip(x_seq)
        .map(|(&f, &x)| class.functions[f][x].abs())
        .sum();
    if let Some(k) = first_violation {
        return Ok(PigeonholeCheck {
            precondition_ok: false,
            first_violation: Some(k + 1),
            lhs,
            rhs: None,
            dimension: None,
        });
    }
    let d = eluder_dimension(class, omega, None, cap)?.dimension;
    Ok(PigeonholeCheck {
        precondition_ok: true,
        first_violation: None,
        lhs,
        rhs: Some(pigeonhole_bound(d, c, beta, omega, phi_seq.len())?),
        dimension: Some(d),
    })
}
