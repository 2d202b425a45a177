//! Exact signed-composition counts and the analytic entropy bound.
//!
//! A signed composition of `j` with `k` pairs is determined by a
//! composition `r_1 + ... + r_k = j` (with `r_i = |n_i| + m_i >= 1`) and a
//! choice of `n_i` in `-(r_i - 1)..=(r_i - 1)`, so
//! `Q(j, k) = sum over compositions of prod (2 r_i - 1)`.
//!
//! The bound chain: `Q(j, k) <= (2j/k - 1)^k C(j, k)`; the continuous
//! maximiser of `h_j(x) = (2j/x - 1)^x` is `x_j = a j` with
//! `a = 2W(1/e) / (1 + W(1/e))`, and `h_j(x_j) = ((2/a - 1)^a)^j = e^{2W(1/e) j}`.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use std::f64::consts::{E, PI};

use crate::error::CombinatoricsError;

/// Published upper bound on `(2/a - 1)^a`.
pub const BASE_BOUND: f64 = 1.7454;
/// Published upper bound on `2 (2/a - 1)^a`.
pub const ENTROPY_BASE_BOUND: f64 = 3.4908;
/// Relative upward slack applied to floating bounds before comparing with exact integers.
pub const FLOAT_SLACK: f64 = 1e-9;

/// Exact table of `Q(j, k)` for `0 <= k <= j <= j_max`.
#[derive(Clone, Debug)]
pub struct CompositionCounts {
    j_max: usize,
    table: Vec<Vec<BigUint>>,
    totals: Vec<BigUint>,
}

impl CompositionCounts {
    pub fn j_max(&self) -> usize {
        self.j_max
    }

    /// `Q(j, k)`; zero outside `1 <= k <= j` except `Q(0, 0) = 1`.
    pub fn q(&self, j: usize, k: usize) -> BigUint {
        self.table
            .get(j)
            .and_then(|row| row.get(k))
            .cloned()
            .unwrap_or_default()
    }

    /// `Q(j)`, with the empty composition counted once at `j = 0`.
    pub fn total(&self, j: usize) -> &BigUint {
        &self.totals[j]
    }

    pub fn totals(&self) -> &[BigUint] {
        &self.totals
    }

    /// `sum_{i < n} Q(i)`.
    pub fn prefix_sum(&self, n: usize) -> BigUint {
        self.totals[..n.min(self.totals.len())].iter().sum()
    }
}

/// Dynamic program `Q(j, k) = sum_r (2r - 1) Q(j - r, k - 1)`.
pub fn count_q(j_max: usize) -> CompositionCounts {
    let mut table: Vec<Vec<BigUint>> = vec![vec![BigUint::zero(); j_max + 1]; j_max + 1];
    table[0][0] = BigUint::one();
    for j in 1..=j_max {
        for k in 1..=j {
            let mut acc = BigUint::zero();
            for r in 1..=(j - k + 1) {
                let prev = &table[j - r][k - 1];
                if !prev.is_zero() {
                    acc += prev * BigUint::from(2 * r as u64 - 1);
                }
            }
            table[j][k] = acc;
        }
    }
    let totals = table.iter().map(|row| row.iter().sum()).collect();
    CompositionCounts {
        j_max,
        table,
        totals,
    }
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

pub fn to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

/// `exact <= bound * (1 + FLOAT_SLACK)`, decided in exact integer arithmetic.
pub fn exact_le_float(exact: &BigUint, bound: f64) -> bool {
    let up = bound * (1.0 + FLOAT_SLACK);
    if !up.is_finite() {
        return up > 0.0;
    }
    if up < 0.0 {
        return false;
    }
    match BigUint::from_f64_floor(up) {
        Some(b) => exact <= &b,
        None => false,
    }
}

trait FromF64Floor: Sized {
    fn from_f64_floor(x: f64) -> Option<Self>;
}

impl FromF64Floor for BigUint {
    fn from_f64_floor(x: f64) -> Option<Self> {
        num_traits::FromPrimitive::from_f64(x.floor())
    }
}

/// AM-GM bound `(2j/k - 1)^k C(j, k)` on `Q(j, k)`; this is `g_j(k)`.
pub fn q_upper_bound(j: usize, k: usize) -> Result<f64, CombinatoricsError> {
    if k < 1 || k > j {
        return Err(CombinatoricsError::Domain(format!("need 1 <= k <= j, got j={j}, k={k}")));
    }
    let base = 2.0 * j as f64 / k as f64 - 1.0;
    Ok(base.powi(k as i32) * to_f64(&binomial(j as u64, k as u64)))
}

pub fn g_fn(j: usize, k: usize) -> Result<f64, CombinatoricsError> {
    q_upper_bound(j, k)
}

fn check_x(j: f64, x: f64) -> Result<(), CombinatoricsError> {
    if !(j >= 1.0 && x > 0.0 && x <= j) {
        return Err(CombinatoricsError::Domain(format!("need 0 < x <= j, got j={j}, x={x}")));
    }
    Ok(())
}

/// `k_j(x) = -2j / (2j - x) + ln(2j/x - 1)`, the log-derivative of `h_j`.
pub fn k_fn(j: f64, x: f64) -> Result<f64, CombinatoricsError> {
    check_x(j, x)?;
    Ok(-2.0 * j / (2.0 * j - x) + (2.0 * j / x - 1.0).ln())
}

/// `h_j(x) = (2j/x - 1)^x`.
pub fn h_fn(j: f64, x: f64) -> Result<f64, CombinatoricsError> {
    check_x(j, x)?;
    Ok((x * (2.0 * j / x - 1.0).ln()).exp())
}

/// `W(1/e)`: the root of `w e^w = 1/e` by Newton iteration safeguarded to `[0.2, 0.3]`.
pub fn lambert_w_over_e() -> Result<f64, CombinatoricsError> {
    let target = 1.0 / E;
    let (lo, hi) = (0.2, 0.3);
    let mut w: f64 = 0.25;
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - target;
        let step = f / (ew * (1.0 + w));
        let mut next = w - step;
        if !(lo..=hi).contains(&next) {
            next = next.clamp(lo, hi);
        }
        if (next - w).abs() <= 1e-17 || next == w {
            return Ok(next);
        }
        w = next;
    }
    if (w * w.exp() - target).abs() < 1e-15 {
        return Ok(w);
    }
    Err(CombinatoricsError::NoConvergence("W(1/e) Newton iteration".into()))
}

/// `a = 2W(1/e) / (1 + W(1/e))`.
pub fn compute_a() -> Result<f64, CombinatoricsError> {
    let w = lambert_w_over_e()?;
    Ok(2.0 * w / (1.0 + w))
}

/// Root `x_j` of `k_j` in `(0, j)` by bisection (`k_j` is strictly decreasing there).
pub fn solve_xj(j: usize) -> Result<f64, CombinatoricsError> {
    if j < 2 {
        return Err(CombinatoricsError::Domain(format!("x_j needs j >= 2, got {j}")));
    }
    let jf = j as f64;
    let (mut lo, mut hi) = (1e-6 * jf, jf);
    if !(k_fn(jf, lo)? > 0.0 && k_fn(jf, hi)? < 0.0) {
        return Err(CombinatoricsError::Bracket(format!("k_j on (0, {j}]")));
    }
    while hi - lo > 1e-12 * jf {
        let mid = 0.5 * (lo + hi);
        if k_fn(jf, mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Exact `C(j, floor(j/2))` and its closed-form bound from the duplication
/// formula and Gautschi's inequality: `sqrt(2/j) 2^j / sqrt(pi)` for even
/// `j`, `sqrt(2/(j+1)) 2^j / sqrt(pi)` for odd `j`.
pub fn binomial_bounds(j: usize) -> Result<(BigUint, f64), CombinatoricsError> {
    if j < 2 {
        return Err(CombinatoricsError::Domain(format!("binomial bound needs j >= 2, got {j}")));
    }
    let exact = binomial(j as u64, (j / 2) as u64);
    let m = if j.is_multiple_of(2) { j } else { j + 1 } as f64;
    let bound = (2.0 / m).sqrt() * 2f64.powi(j as i32) / PI.sqrt();
    Ok((exact, bound))
}

#[derive(Clone, Debug, Serialize)]
pub struct PerJ {
    pub j: usize,
    pub x_j: Option<f64>,
    pub h_max: f64,
    pub g_max: f64,
    pub central_binomial: String,
    pub gautschi_bound: Option<f64>,
    pub q_exact: String,
    /// `(2 (2/a - 1)^a)^j sqrt(j) / sqrt(pi/2)`.
    pub closed_form_bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub w: f64,
    pub w_residual: f64,
    pub a: f64,
    /// `(2/a - 1)^a`, evaluated directly.
    pub base: f64,
    /// `e^{2W(1/e)}`, the same quantity by the closed-form identity.
    pub base_identity: f64,
    pub final_bound: f64,
    pub log_final_bound: f64,
    pub j_max: usize,
    pub per_j: Vec<PerJ>,
    pub checks: Vec<Check>,
}

impl BoundReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Exact-data range over which the bound chain is validated.
pub const CHAIN_J_MAX: usize = 40;

/// Evaluates every constant of the bound chain and validates it on exact `Q`.
/// Returns an error naming the first failed inequality.
pub fn entropy_upper_bound() -> Result<BoundReport, CombinatoricsError> {
    let report = bound_report(CHAIN_J_MAX)?;
    if let Some(c) = report.checks.iter().find(|c| !c.passed) {
        return Err(CombinatoricsError::Inequality(c.name.clone()));
    }
    Ok(report)
}

/// As [`entropy_upper_bound`] but returns the report with failed checks recorded.
pub fn bound_report(j_max: usize) -> Result<BoundReport, CombinatoricsError> {
    let w = lambert_w_over_e()?;
    let a = 2.0 * w / (1.0 + w);
    let base = (2.0 / a - 1.0).powf(a);
    let base_identity = (2.0 * w).exp();
    let final_bound = 2.0 * base;
    let mut checks = Vec::new();
    let mut check = |name: String, passed: bool| checks.push(Check { name, passed });

    check("a in (0.435, 0.436)".into(), a > 0.435 && a < 0.436);
    check(
        format!("(2/a-1)^a < {BASE_BOUND}"),
        base < BASE_BOUND,
    );
    check(
        format!("2(2/a-1)^a < {ENTROPY_BASE_BOUND}"),
        final_bound < ENTROPY_BASE_BOUND,
    );
    check(
        "(2/a-1)^a = e^{2W(1/e)}".into(),
        (base - base_identity).abs() < 1e-12,
    );

    let counts = count_q(j_max);
    let mut per_j = Vec::with_capacity(j_max);
    for j in 1..=j_max {
        let jf = j as f64;
        let q_j = counts.total(j);
        let central = binomial(j as u64, (j / 2) as u64);
        let h_max = base_identity.powi(j as i32);
        let mut g_max: f64 = 0.0;
        let mut max_qjk = BigUint::zero();
        let mut per_k_ok = true;
        for k in 1..=j {
            let g = q_upper_bound(j, k)?;
            g_max = g_max.max(g);
            let qjk = counts.q(j, k);
            per_k_ok &= exact_le_float(&qjk, g);
            if qjk > max_qjk {
                max_qjk = qjk;
            }
        }
        check(format!("Q({j},k) <= (2j/k-1)^k C(j,k) for all k"), per_k_ok);
        check(
            format!("max_k g_{j}(k) <= h_max C(j,j/2)"),
            g_max <= h_max * to_f64(&central) * (1.0 + FLOAT_SLACK),
        );
        check(
            format!("max_k g_{j}(k) <= {BASE_BOUND}^j C(j,j/2)"),
            g_max <= BASE_BOUND.powi(j as i32) * to_f64(&central) * (1.0 + FLOAT_SLACK),
        );
        check(
            format!("Q({j}) <= j max_k Q({j},k)"),
            q_j <= &(max_qjk * BigUint::from(j)),
        );
        check(
            format!("Q({j}) <= j {BASE_BOUND}^j C(j,j/2)"),
            exact_le_float(q_j, jf * BASE_BOUND.powi(j as i32) * to_f64(&central)),
        );
        let closed_form_bound = final_bound.powi(j as i32) * jf.sqrt() / (PI / 2.0).sqrt();
        check(
            format!("Q({j}) <= (2(2/a-1)^a)^j sqrt(j)/sqrt(pi/2)"),
            exact_le_float(q_j, closed_form_bound),
        );
        let (x_j, gautschi) = if j >= 2 {
            let (exact, bound) = binomial_bounds(j)?;
            check(format!("C({j},{}) <= Gautschi bound", j / 2), exact_le_float(&exact, bound));
            let x = solve_xj(j)?;
            check(format!("|x_{j}/{j} - a| < 1e-10"), (x / jf - a).abs() < 1e-10);
            (Some(x), Some(bound))
        } else {
            (None, None)
        };
        per_j.push(PerJ {
            j,
            x_j,
            h_max,
            g_max,
            central_binomial: central.to_string(),
            gautschi_bound: gautschi,
            q_exact: q_j.to_string(),
            closed_form_bound,
        });
    }

    Ok(BoundReport {
        w,
        w_residual: (w * w.exp() - 1.0 / E).abs(),
        a,
        base,
        base_identity,
        final_bound,
        log_final_bound: final_bound.ln(),
        j_max,
        per_j,
        checks,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthRow {
    pub j: usize,
    pub q: String,
    /// `Q(j+1) / Q(j)`.
    pub ratio: f64,
    /// `(sum_{i <= j} Q(i))^{1/j}`.
    pub partial_root: f64,
}

pub fn q_growth_report(j_max: usize) -> Result<Vec<GrowthRow>, CombinatoricsError> {
    if j_max < 10 {
        return Err(CombinatoricsError::Domain(format!("growth report needs j_max >= 10, got {j_max}")));
    }
    let counts = count_q(j_max + 1);
    let mut partial = BigUint::zero();
    let mut rows = Vec::with_capacity(j_max);
    partial += counts.total(0);
    for j in 1..=j_max {
        partial += counts.total(j);
        let ratio = to_f64(counts.total(j + 1)) / to_f64(counts.total(j));
        let partial_root = (to_f64(&partial).ln() / j as f64).exp();
        rows.push(GrowthRow {
            j,
            q: counts.total(j).to_string(),
            ratio,
            partial_root,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_q_values() {
        let c = count_q(6);
        let q: Vec<u64> = (0..=5).map(|j| c.total(j).to_u64().unwrap()).collect();
        assert_eq!(q, vec![1, 1, 4, 12, 36, 108]);
        for j in 1..=6 {
            assert_eq!(c.q(j, j), BigUint::one());
            assert_eq!(c.q(j, 1), BigUint::from(2 * j as u64 - 1));
        }
    }

    #[test]
    fn bound_at_extremes() {
        assert_eq!(q_upper_bound(7, 7).unwrap(), 1.0);
        assert_eq!(q_upper_bound(7, 1).unwrap(), 13.0 * 7.0);
        assert!(q_upper_bound(3, 0).is_err());
        assert!(q_upper_bound(3, 4).is_err());
    }

    #[test]
    fn k_fn_fixtures() {
        for j in [2.0, 5.0, 10.0, 100.0] {
            assert_eq!(k_fn(j, j).unwrap(), -2.0);
        }
        assert!(k_fn(3.0, 0.0).is_err());
        assert!(k_fn(3.0, 3.5).is_err());
    }

    #[test]
    fn lambert_and_a() {
        let w = lambert_w_over_e().unwrap();
        assert!((w * w.exp() - 1.0 / E).abs() < 1e-15);
        assert!((w * (w + 1.0).exp() - 1.0).abs() < 1e-14);
        let a = compute_a().unwrap();
        assert!(a > 0.435 && a < 0.436);
        assert!((2.0 / a - 1.0 - 1.0 / w).abs() < 1e-12);
    }

    #[test]
    fn solve_xj_rejects_small_j() {
        assert!(solve_xj(1).is_err());
        assert!(binomial_bounds(1).is_err());
    }

    #[test]
    fn binomial_fixtures() {
        let (c4, b4) = binomial_bounds(4).unwrap();
        assert_eq!(c4, BigUint::from(6u32));
        assert!((b4 - 0.5f64.sqrt() * 16.0 / PI.sqrt()).abs() < 1e-12);
        let (c5, b5) = binomial_bounds(5).unwrap();
        assert_eq!(c5, BigUint::from(10u32));
        assert!((b5 - (1.0f64 / 3.0).sqrt() * 32.0 / PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn exact_float_comparison() {
        assert!(exact_le_float(&BigUint::from(6u32), 6.0));
        assert!(!exact_le_float(&BigUint::from(7u32), 6.5));
        assert!(exact_le_float(&BigUint::from(1u32), f64::INFINITY));
    }

    #[test]
    fn growth_ratio_fixture() {
        let rows = q_growth_report(10).unwrap();
        assert_eq!(rows[2].j, 3);
        assert_eq!(rows[2].ratio, 3.0);
        assert!(q_growth_report(9).is_err());
    }
}
