//! Empirical language of the coded billiard and of reference shifts.
//!
//! Words over an alphabet of at most 8 symbols are packed three bits per
//! symbol into a `u64`, first symbol in the most significant position, so
//! levels up to length 21 are supported and numeric order on one level is
//! lexicographic order.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::Serialize;

use crate::coding::{code_point, CodeLetter};
use crate::dynamics::{billiard_map_inverse, billiard_step};
use crate::error::LanguageError;
use crate::geometry::{PhasePoint, StadiumTable, SINGULAR_TOL};

pub const MAX_WORD_LEN: usize = 21;
const BITS: u32 = 3;
const MASK: u64 = 0b111;

pub type Symbol = u8;

pub fn pack(word: &[Symbol]) -> u64 {
    word.iter().fold(0u64, |acc, &s| (acc << BITS) | s as u64)
}

pub fn unpack(code: u64, len: usize) -> Vec<Symbol> {
    (0..len)
        .map(|i| ((code >> (BITS * (len - 1 - i) as u32)) & MASK) as Symbol)
        .collect()
}

fn prepend(a: Symbol, code: u64, len: usize) -> u64 {
    ((a as u64) << (BITS * len as u32)) | code
}

fn append(code: u64, b: Symbol) -> u64 {
    (code << BITS) | b as u64
}

/// Where the sample came from.
#[derive(Clone, Debug, Serialize)]
pub struct SampleMeta {
    pub sampler: String,
    pub l: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    /// Orbits discarded for hitting a corner, tangency or a partition boundary.
    pub skipped: usize,
}

/// Observed words per length with saturation flags.
#[derive(Clone, Debug)]
pub struct LanguageSample {
    alphabet: usize,
    n_max: usize,
    /// `levels[n]` holds the packed words of length `n`; `levels[0]` is unused.
    levels: Vec<HashSet<u64>>,
    saturated: Vec<bool>,
    pub meta: SampleMeta,
    points: Option<Vec<PhasePoint>>,
}

impl LanguageSample {
    pub fn empty(alphabet: usize, n_max: usize, meta: SampleMeta) -> Result<Self, LanguageError> {
        if !(1..=8).contains(&alphabet) {
            return Err(LanguageError::Alphabet(alphabet));
        }
        if !(1..=MAX_WORD_LEN).contains(&n_max) {
            return Err(LanguageError::Config(format!("n_max must be in 1..={MAX_WORD_LEN}")));
        }
        Ok(Self {
            alphabet,
            n_max,
            levels: vec![HashSet::new(); n_max + 1],
            saturated: vec![true; n_max + 1],
            meta,
            points: None,
        })
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Inserts every factor of `word` up to length `n_max`, keeping the sample factorial.
    pub fn insert_word(&mut self, word: &[Symbol]) {
        insert_factors(&mut self.levels, self.n_max, word);
    }

    pub fn contains(&self, word: &[Symbol]) -> bool {
        let n = word.len();
        n >= 1 && n <= self.n_max && self.levels[n].contains(&pack(word))
    }

    pub fn words(&self, n: usize) -> Result<Vec<Vec<Symbol>>, LanguageError> {
        self.level(n)?;
        let mut codes: Vec<u64> = self.levels[n].iter().copied().collect();
        codes.sort_unstable();
        Ok(codes.into_iter().map(|c| unpack(c, n)).collect())
    }

    pub fn is_saturated(&self, n: usize) -> bool {
        n <= self.n_max && self.saturated[n]
    }

    pub fn retained_points(&self) -> Option<&[PhasePoint]> {
        self.points.as_deref()
    }

    fn level(&self, n: usize) -> Result<&HashSet<u64>, LanguageError> {
        if n == 0 || n > self.n_max {
            return Err(LanguageError::LevelUnavailable(n, self.n_max));
        }
        Ok(&self.levels[n])
    }

    /// True when every factor of every observed word is observed.
    pub fn is_factorial(&self) -> bool {
        (2..=self.n_max).all(|n| {
            self.levels[n].iter().all(|&w| {
                let prefix = w >> BITS;
                let suffix = w & ((1u64 << (BITS * (n as u32 - 1))) - 1);
                self.levels[n - 1].contains(&prefix) && self.levels[n - 1].contains(&suffix)
            })
        })
    }

    fn left_ext(&self, code: u64, n: usize) -> usize {
        (0..self.alphabet as Symbol)
            .filter(|&a| self.levels[n + 1].contains(&prepend(a, code, n)))
            .count()
    }

    fn right_ext(&self, code: u64) -> impl Fn(&HashSet<u64>) -> usize + '_ {
        move |next: &HashSet<u64>| {
            (0..self.alphabet as Symbol)
                .filter(|&b| next.contains(&append(code, b)))
                .count()
        }
    }

    fn counts_packed(&self, code: u64, n: usize) -> SpecialCounts {
        let m_left = self.left_ext(code, n);
        let m_right = self.right_ext(code)(&self.levels[n + 1]);
        let mut m_bi = 0;
        for a in 0..self.alphabet as Symbol {
            let au = prepend(a, code, n);
            m_bi += self.right_ext(au)(&self.levels[n + 2]);
        }
        SpecialCounts {
            m_left,
            m_right,
            m_bi,
        }
    }
}

fn insert_factors(levels: &mut [HashSet<u64>], n_max: usize, word: &[Symbol]) {
    let len = word.len();
    for start in 0..len {
        let mut code = 0u64;
        for (offset, &s) in word[start..].iter().enumerate().take(n_max) {
            code = append(code, s);
            levels[offset + 1].insert(code);
        }
    }
}

/// Observed extension counts of a word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SpecialCounts {
    pub m_left: usize,
    pub m_right: usize,
    pub m_bi: usize,
}

impl SpecialCounts {
    pub fn is_bispecial(&self) -> bool {
        self.m_left > 1 && self.m_right > 1
    }

    /// `m_b - m_l - m_r + 1`.
    pub fn cassaigne_term(&self) -> i64 {
        self.m_bi as i64 - self.m_left as i64 - self.m_right as i64 + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SpecialReport {
    pub counts: SpecialCounts,
    /// False when level `n+1` or `n+2` lacks its saturation flag.
    pub saturated: bool,
}

pub fn complexity(ls: &LanguageSample, n: usize) -> Result<usize, LanguageError> {
    ls.level(n).map(|s| s.len())
}

pub fn special_counts(ls: &LanguageSample, word: &[Symbol]) -> Result<SpecialReport, LanguageError> {
    let n = word.len();
    if n == 0 || n + 2 > ls.n_max {
        return Err(LanguageError::LevelUnavailable(n + 2, ls.n_max));
    }
    let code = pack(word);
    if !ls.levels[n].contains(&code) {
        return Err(LanguageError::UnknownWord);
    }
    Ok(SpecialReport {
        counts: ls.counts_packed(code, n),
        saturated: ls.is_saturated(n + 1) && ls.is_saturated(n + 2),
    })
}

/// Words of length `n` with at least two left and two right extensions.
pub fn bispecial_words(ls: &LanguageSample, n: usize) -> Result<Vec<Vec<Symbol>>, LanguageError> {
    if n + 1 > ls.n_max {
        return Err(LanguageError::LevelUnavailable(n + 1, ls.n_max));
    }
    let mut out: Vec<u64> = ls
        .level(n)?
        .iter()
        .copied()
        .filter(|&c| ls.left_ext(c, n) > 1 && ls.right_ext(c)(&ls.levels[n + 1]) > 1)
        .collect();
    out.sort_unstable();
    Ok(out.into_iter().map(|c| unpack(c, n)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CassaigneResidual {
    pub k: usize,
    /// `s(k+1) - s(k) - sum over bispecial v of (m_b - m_l - m_r + 1)`.
    pub residual: i64,
    pub num_bispecial: usize,
    pub bispecial_sum: i64,
    pub saturated: bool,
}

pub fn cassaigne_residual(ls: &LanguageSample, k: usize) -> Result<CassaigneResidual, LanguageError> {
    if k == 0 || k + 2 > ls.n_max {
        return Err(LanguageError::LevelUnavailable(k + 2, ls.n_max));
    }
    let p = |n: usize| ls.levels[n].len() as i64;
    let s = |n: usize| p(n + 1) - p(n);
    let mut num_bispecial = 0;
    let mut bispecial_sum = 0;
    for &code in &ls.levels[k] {
        let c = ls.counts_packed(code, k);
        if c.is_bispecial() {
            num_bispecial += 1;
            bispecial_sum += c.cassaigne_term();
        }
    }
    Ok(CassaigneResidual {
        k,
        residual: s(k + 1) - s(k) - bispecial_sum,
        num_bispecial,
        bispecial_sum,
        saturated: (k..=k + 2).all(|n| ls.is_saturated(n)),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyEstimate {
    pub window: (usize, usize),
    /// Least-squares slope of `ln p(n)` against `n` over the window.
    pub slope: f64,
    pub intercept: f64,
    /// `p(n+1) / p(n)` for `n = 1..n_max-1`.
    pub ratios: Vec<f64>,
    /// Natural log of the analytic upper bound `2 (2/a - 1)^a`.
    pub analytic_bound: f64,
    /// `ln(1 + sqrt 2)`, a published large-`l` lower bound, for reference only.
    pub reference_lower: f64,
}

/// Minimum mean number of samples per observed word for a level to enter the default fit.
pub const MIN_COVERAGE: usize = 20;

impl LanguageSample {
    /// Default fitting window: the last five levels with at least
    /// [`MIN_COVERAGE`] samples per word on average, or the upper half of the
    /// levels for exactly enumerated shifts.
    pub fn default_window(&self) -> (usize, usize) {
        if self.meta.samples == 0 {
            return ((self.n_max / 2).max(1), self.n_max);
        }
        let limit = self.meta.samples / MIN_COVERAGE;
        let hi = (1..=self.n_max)
            .take_while(|&n| self.levels[n].len() <= limit)
            .last()
            .unwrap_or(1)
            .max(2)
            .min(self.n_max);
        (hi.saturating_sub(4).max(1), hi)
    }
}

pub fn entropy_estimate(
    ls: &LanguageSample,
    window: Option<(usize, usize)>,
) -> Result<EntropyEstimate, LanguageError> {
    let (lo, hi) = window.unwrap_or_else(|| ls.default_window());
    if lo == 0 || hi > ls.n_max || hi <= lo {
        return Err(LanguageError::Config(format!("invalid window ({lo}, {hi})")));
    }
    let pts: Vec<(f64, f64)> = (lo..=hi)
        .map(|n| (n as f64, (ls.levels[n].len().max(1) as f64).ln()))
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let ratios = (1..ls.n_max)
        .map(|n| ls.levels[n + 1].len() as f64 / ls.levels[n].len().max(1) as f64)
        .collect();
    let analytic_bound = crate::combinatorics::lambert_w_over_e()
        .map(|w| (2.0 * (2.0 * w).exp()).ln())
        .unwrap_or(f64::NAN);
    Ok(EntropyEstimate {
        window: (lo, hi),
        slope,
        intercept: my - slope * mx,
        ratios,
        analytic_bound,
        reference_lower: (1.0 + 2f64.sqrt()).ln(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplexityRow {
    pub n: usize,
    pub p_hat: usize,
    /// `p(n+1) - p(n)`, when level `n+1` was sampled.
    pub s_hat: Option<i64>,
    pub num_bispecial: Option<usize>,
    pub cassaigne_residual: Option<i64>,
    pub saturated: bool,
}

pub fn complexity_rows(ls: &LanguageSample) -> Vec<ComplexityRow> {
    (1..=ls.n_max)
        .map(|n| {
            let p = ls.levels[n].len();
            let residual = cassaigne_residual(ls, n).ok();
            ComplexityRow {
                n,
                p_hat: p,
                s_hat: (n < ls.n_max).then(|| ls.levels[n + 1].len() as i64 - p as i64),
                num_bispecial: residual.map(|r| r.num_bispecial),
                cassaigne_residual: residual.map(|r| r.residual),
                saturated: ls.is_saturated(n),
            }
        })
        .collect()
}

/// CSV with header `n,p_hat,s_hat,num_bispecial,cassaigne_residual,saturated`;
/// undefined entries are left empty.
pub fn complexity_csv(ls: &LanguageSample) -> String {
    fn opt<T: ToString>(x: Option<T>) -> String {
        x.map(|v| v.to_string()).unwrap_or_default()
    }
    let mut out = String::from("n,p_hat,s_hat,num_bispecial,cassaigne_residual,saturated\n");
    for r in complexity_rows(ls) {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n,
            r.p_hat,
            opt(r.s_hat),
            opt(r.num_bispecial),
            opt(r.cassaigne_residual),
            r.saturated
        ));
    }
    out
}

/// Observed words of each length up to `n_max`, sorted. Symbols of a
/// six-letter sample are written as billiard letters, others as digits.
pub fn word_sets(ls: &LanguageSample, n_max: usize) -> BTreeMap<usize, Vec<String>> {
    let billiard = ls.alphabet == CodeLetter::ALL.len() && ls.meta.l.is_some();
    let render = |w: &[Symbol]| -> String {
        w.iter()
            .map(|&s| match CodeLetter::from_index(s).filter(|_| billiard) {
                Some(l) => l.as_str().to_string(),
                None => s.to_string(),
            })
            .collect()
    };
    (1..=n_max.min(ls.n_max))
        .map(|n| {
            let words = ls.words(n).unwrap_or_default();
            (n, words.iter().map(|w| render(w)).collect())
        })
        .collect()
}

/// The full shift on `alphabet` symbols, enumerated exactly up to `n_max`.
pub fn full_shift(alphabet: usize, n_max: usize) -> Result<LanguageSample, LanguageError> {
    subshift(alphabet, n_max, "full-shift", |_| true)
}

/// The golden-mean shift: binary words without `11`.
pub fn golden_mean_shift(n_max: usize) -> Result<LanguageSample, LanguageError> {
    subshift(2, n_max, "golden-mean-shift", |w| !w.windows(2).any(|p| p == [1, 1]))
}

fn subshift(
    alphabet: usize,
    n_max: usize,
    name: &str,
    allowed: impl Fn(&[Symbol]) -> bool,
) -> Result<LanguageSample, LanguageError> {
    let meta = SampleMeta {
        sampler: name.to_string(),
        l: None,
        samples: 0,
        seed: 0,
        skipped: 0,
    };
    let mut ls = LanguageSample::empty(alphabet, n_max, meta)?;
    let mut frontier: Vec<Vec<Symbol>> = vec![Vec::new()];
    for n in 1..=n_max {
        let mut next = Vec::new();
        for w in &frontier {
            for a in 0..alphabet as Symbol {
                let mut v = w.clone();
                v.push(a);
                if allowed(&v) {
                    ls.levels[n].insert(pack(&v));
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    Ok(ls)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SamplingMeasure {
    /// Uniform in `(arc length, theta)`.
    Uniform,
    /// The invariant measure `cos(theta) ds dtheta`.
    Liouville,
}

#[derive(Clone, Debug)]
pub struct SampleConfig {
    pub n_max: usize,
    pub samples: usize,
    pub seed: u64,
    pub measure: SamplingMeasure,
    /// Keep the sampled phase points (needed for [`code_separation_report`]).
    pub retain_points: bool,
}

impl SampleConfig {
    pub fn new(n_max: usize, samples: usize, seed: u64) -> Self {
        Self {
            n_max,
            samples,
            seed,
            measure: SamplingMeasure::Uniform,
            retain_points: false,
        }
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    inv = r;
    inv
}

fn seed_shift(seed: u64, salt: u64) -> f64 {
    // splitmix64 finaliser
    let mut z = seed.wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

/// The `i`-th sample point: a Halton (2, 3) point under a seeded Cranley-Patterson shift.
pub fn sample_point(
    table: &StadiumTable,
    i: u64,
    seed: u64,
    measure: SamplingMeasure,
) -> Option<PhasePoint> {
    let u = (radical_inverse(i + 1, 2) + seed_shift(seed, 1)).fract();
    let v = (radical_inverse(i + 1, 3) + seed_shift(seed, 2)).fract();
    let theta = match measure {
        SamplingMeasure::Uniform => (v - 0.5) * PI,
        SamplingMeasure::Liouville => (2.0 * v - 1.0).asin(),
    };
    if FRAC_PI_2 - theta.abs() <= SINGULAR_TOL {
        return None;
    }
    PhasePoint::from_arclength(table, u * table.perimeter(), theta).ok()
}

/// Codes `n` forward iterates; `None` if the orbit leaves the coded set.
fn forward_symbols(table: &StadiumTable, pp: &PhasePoint, n: usize) -> Option<Vec<Symbol>> {
    let mut out = Vec::with_capacity(n);
    let mut cur = *pp;
    for i in 0..n {
        let c = code_point(&cur);
        if !c.is_unique() {
            return None;
        }
        out.push(c.primary().index());
        if i + 1 < n {
            let (next, _, flags) = billiard_step(table, &cur).ok()?;
            if flags.near_tangent {
                return None;
            }
            cur = next;
        }
    }
    Some(out)
}

struct Partial {
    levels: Vec<HashSet<u64>>,
    skipped: usize,
}

fn sample_range(table: &StadiumTable, cfg: &SampleConfig, range: std::ops::Range<u64>) -> Partial {
    const CHUNK: u64 = 4096;
    let starts: Vec<u64> = range.clone().step_by(CHUNK as usize).collect();
    starts
        .into_par_iter()
        .map(|start| {
            let mut part = Partial {
                levels: vec![HashSet::new(); cfg.n_max + 1],
                skipped: 0,
            };
            for i in start..(start + CHUNK).min(range.end) {
                let word = sample_point(table, i, cfg.seed, cfg.measure)
                    .and_then(|pp| forward_symbols(table, &pp, cfg.n_max));
                match word {
                    Some(w) => insert_factors(&mut part.levels, cfg.n_max, &w),
                    None => part.skipped += 1,
                }
            }
            part
        })
        .reduce(
            || Partial {
                levels: vec![HashSet::new(); cfg.n_max + 1],
                skipped: 0,
            },
            |mut a, b| {
                for (x, y) in a.levels.iter_mut().zip(b.levels) {
                    x.extend(y);
                }
                a.skipped += b.skipped;
                a
            },
        )
}

/// Samples the billiard language with forward windows of length `n_max`.
///
/// A level is flagged saturated when the last tenth of the samples adds no
/// new word to it.
pub fn sample_language(table: &StadiumTable, cfg: &SampleConfig) -> Result<LanguageSample, LanguageError> {
    if cfg.n_max < 2 || cfg.samples < 1 {
        return Err(LanguageError::Config("need n_max >= 2 and samples >= 1".into()));
    }
    let meta = SampleMeta {
        sampler: match cfg.measure {
            SamplingMeasure::Uniform => "halton-uniform".into(),
            SamplingMeasure::Liouville => "halton-liouville".into(),
        },
        l: Some(table.l()),
        samples: cfg.samples,
        seed: cfg.seed,
        skipped: 0,
    };
    let mut ls = LanguageSample::empty(CodeLetter::ALL.len(), cfg.n_max, meta)?;
    let total = cfg.samples as u64;
    let head = total - total / 10;
    let first = sample_range(table, cfg, 0..head);
    let last = sample_range(table, cfg, head..total);
    for n in 1..=cfg.n_max {
        ls.saturated[n] = last.levels[n].is_subset(&first.levels[n]);
    }
    ls.saturated[0] = true;
    ls.meta.skipped = first.skipped + last.skipped;
    for (n, (a, b)) in first.levels.into_iter().zip(last.levels).enumerate() {
        ls.levels[n] = a;
        ls.levels[n].extend(b);
    }
    if cfg.retain_points {
        ls.points = Some(
            (0..total)
                .filter_map(|i| sample_point(table, i, cfg.seed, cfg.measure))
                .collect(),
        );
    }
    Ok(ls)
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationRow {
    pub n: usize,
    /// Cells containing at least two sampled points.
    pub groups: usize,
    pub singletons: usize,
    pub median_diameter: f64,
    pub max_diameter: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationReport {
    pub rows: Vec<SeparationRow>,
    /// Points skipped because their centred window was not uniquely coded.
    pub skipped: usize,
    /// Points whose window lies in the vertical bouncing column `(TB)^inf`.
    pub column_excluded: usize,
}

/// Diameters of sampled `n`-cells for centred windows `n = 2..=n_max`.
///
/// Uses the L1 metric in (arc length, theta). Cells coded only by flats
/// (the vertical bouncing column) are excluded.
pub fn code_separation_report(
    table: &StadiumTable,
    ls: &LanguageSample,
    n_max: usize,
) -> Result<SeparationReport, LanguageError> {
    let points = ls
        .retained_points()
        .ok_or_else(|| LanguageError::Config("sample was built without retained points".into()))?;
    if !(2..=MAX_WORD_LEN).contains(&n_max) {
        return Err(LanguageError::Config(format!("n_max must be in 2..={MAX_WORD_LEN}")));
    }
    let back = (n_max - 1) / 2;
    let fwd = n_max - 1 - back;
    let coded: Vec<Option<(Vec<Symbol>, f64, f64)>> = points
        .par_iter()
        .map(|pp| {
            let forward = forward_symbols(table, pp, fwd + 1)?;
            let mut backward = Vec::with_capacity(back);
            let mut cur = *pp;
            for _ in 0..back {
                cur = billiard_map_inverse(table, &cur).ok()?;
                let c = code_point(&cur);
                if !c.is_unique() {
                    return None;
                }
                backward.push(c.primary().index());
            }
            backward.reverse();
            backward.extend(forward);
            Some((backward, pp.point.arclength(table), pp.theta))
        })
        .collect();
    let skipped = coded.iter().filter(|c| c.is_none()).count();
    let flat = |s: &Symbol| *s == CodeLetter::T.index() || *s == CodeLetter::B.index();
    let mut column_excluded = 0;
    let mut rows = Vec::new();
    for n in 2..=n_max {
        let start = back - (n - 1) / 2;
        let mut groups: HashMap<u64, [f64; 4]> = HashMap::new();
        let mut sizes: HashMap<u64, usize> = HashMap::new();
        for (word, s, theta) in coded.iter().flatten() {
            let window = &word[start..start + n];
            if window.iter().all(flat) {
                if n == n_max {
                    column_excluded += 1;
                }
                continue;
            }
            let (u, v) = (s + theta, s - theta);
            let key = pack(window);
            let e = groups
                .entry(key)
                .or_insert([f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY]);
            e[0] = e[0].min(u);
            e[1] = e[1].max(u);
            e[2] = e[2].min(v);
            e[3] = e[3].max(v);
            *sizes.entry(key).or_default() += 1;
        }
        let mut diam: Vec<f64> = groups
            .iter()
            .filter(|(k, _)| sizes[*k] >= 2)
            .map(|(_, e)| (e[1] - e[0]).max(e[3] - e[2]))
            .collect();
        diam.sort_by(f64::total_cmp);
        let singletons = sizes.values().filter(|&&c| c == 1).count();
        rows.push(SeparationRow {
            n,
            groups: diam.len(),
            singletons,
            median_diameter: diam.get(diam.len() / 2).copied().unwrap_or(0.0),
            max_diameter: diam.last().copied().unwrap_or(0.0),
        });
    }
    Ok(SeparationReport {
        rows,
        skipped,
        column_excluded,
    })
}
