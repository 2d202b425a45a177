//! Saddle connections: orbit segments that start and end at corners.
//!
//! Each corner launches a one-parameter family of orbits. Junction corners
//! shoot rays from the junction point with direction angle `psi` measured
//! from the inward normal; centre corners start perpendicular (`theta = 0`)
//! from a point of their semicircle, parameterised by the polar angle.
//!
//! Parameter nodes are the exact rationals `a + (b - a) * k / N` with
//! `N = grid * 2^d`, so a grid and its refinements share nodes and doubling
//! the grid can only add connections.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::Serialize;

use crate::coding::{signed_composition_of_orbit, CodeLetter, SignedComposition};
use crate::combinatorics::count_q;
use crate::dynamics::{next_collision_from, reflect};
use crate::error::{CodingError, SaddleError};
use crate::geometry::{rotate, signed_angle, Corner, Side, StadiumTable, Vec2};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_GRID: usize = 200_000;
pub const DEFAULT_MAX_LEN: usize = 6;
/// Distance of the family parameter range from tangential launches.
pub const FAMILY_MARGIN: f64 = 1e-9;
const GRID_CHUNK: usize = 2048;

/// One-parameter family of orbits leaving a corner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LaunchFamily {
    pub corner: Corner,
    /// Parameter range, endpoints excluded by [`FAMILY_MARGIN`].
    pub range: (f64, f64),
}

#[derive(Clone, Copy, Debug)]
struct Launch {
    position: Vec2,
    direction: Vec2,
    from: Option<Side>,
}

pub fn launch_family(_table: &StadiumTable, corner: Corner) -> LaunchFamily {
    let range = match corner {
        Corner::CenterL => (FRAC_PI_2 + FAMILY_MARGIN, 3.0 * FRAC_PI_2 - FAMILY_MARGIN),
        Corner::CenterR => (-FRAC_PI_2 + FAMILY_MARGIN, FRAC_PI_2 - FAMILY_MARGIN),
        _ => (-FRAC_PI_2 + FAMILY_MARGIN, FRAC_PI_2 - FAMILY_MARGIN),
    };
    LaunchFamily { corner, range }
}

impl LaunchFamily {
    fn launch(&self, table: &StadiumTable, u: f64) -> Launch {
        match self.corner {
            Corner::CenterL | Corner::CenterR => {
                let (side, center) = if self.corner == Corner::CenterL {
                    (Side::L, table.left_center())
                } else {
                    (Side::R, table.right_center())
                };
                let radial = Vec2::new(u.cos(), u.sin());
                Launch {
                    position: center + radial,
                    direction: -radial,
                    from: Some(side),
                }
            }
            junction => {
                let normal = match junction {
                    Corner::B | Corner::R => Vec2::new(0.0, -1.0),
                    _ => Vec2::new(0.0, 1.0),
                };
                Launch {
                    position: table.corner_position(junction),
                    direction: rotate(&normal, u),
                    from: None,
                }
            }
        }
    }

    /// Parameter value of node `k` out of `n` intervals.
    pub fn param(&self, k: u64, n: u64) -> f64 {
        let (a, b) = self.range;
        a + (b - a) * (k as f64 / n as f64)
    }
}

#[derive(Clone, Copy, Debug)]
struct Hit {
    letter: CodeLetter,
    arclength: f64,
    theta: f64,
}

#[derive(Clone, Debug)]
struct Trace {
    hits: Vec<Hit>,
}

impl Trace {
    fn letters(&self) -> impl Iterator<Item = CodeLetter> + '_ {
        self.hits.iter().map(|h| h.letter)
    }

    fn first_difference(&self, other: &Trace) -> Option<usize> {
        let n = self.hits.len().min(other.hits.len());
        (0..n)
            .find(|&i| self.hits[i].letter != other.hits[i].letter)
            .or_else(|| (self.hits.len() != other.hits.len()).then_some(n))
    }
}

fn trace(table: &StadiumTable, family: &LaunchFamily, u: f64, max_len: usize) -> Trace {
    let Launch {
        mut position,
        mut direction,
        mut from,
    } = family.launch(table, u);
    let mut hits = Vec::with_capacity(max_len);
    while hits.len() < max_len {
        let Ok(seg) = next_collision_from(table, position, direction, from) else {
            break;
        };
        let normal = seg.end.inward_normal();
        let Ok(out) = reflect(&seg.direction, &normal) else {
            break;
        };
        let theta = signed_angle(&normal, &out);
        hits.push(Hit {
            letter: CodeLetter::arc(seg.end.side, theta >= 0.0),
            arclength: seg.end.arclength(table),
            theta,
        });
        position = seg.end_position();
        direction = out;
        from = Some(seg.end.side);
    }
    Trace { hits }
}

/// The corner separating two letters that can occur at the same collision index.
fn corner_between(a: CodeLetter, b: CodeLetter) -> Option<Corner> {
    if a.side() == b.side() {
        return match a.side() {
            Side::L if a != b => Some(Corner::CenterL),
            Side::R if a != b => Some(Corner::CenterR),
            _ => None,
        };
    }
    Corner::junction_between(a.side(), b.side())
}

fn corner_residual(table: &StadiumTable, hit: &Hit, corner: Corner) -> f64 {
    match table.junction_arclength(corner) {
        Some(s) => table.arclength_delta(hit.arclength, s).abs(),
        None => hit.theta.abs(),
    }
}

fn near_any_corner(table: &StadiumTable, hit: &Hit, tol: f64) -> bool {
    let s = table.point_at_arclength(hit.arclength);
    table.nearest_junction(&s).1 < tol || (s.side.is_arc() && hit.theta.abs() < tol)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SaddleConnection {
    pub start: Corner,
    pub end: Corner,
    /// Letters of the collisions strictly between the two corners.
    pub interior: Vec<CodeLetter>,
    /// Number of flight segments.
    pub length: usize,
    /// Interior collisions plus one per centre endpoint.
    pub weight: usize,
    pub launch_param: f64,
    pub residual: f64,
}

impl SaddleConnection {
    /// The code as corner symbols and letters, e.g. `[b]TBR+TB[p]`.
    pub fn code(&self) -> String {
        let mut s = format!("[{}]", self.start.label());
        for l in &self.interior {
            s.push_str(l.as_str());
        }
        s.push_str(&format!("[{}]", self.end.label()));
        s
    }

    /// Symbols in the code: both corners plus the interior letters.
    pub fn code_len(&self) -> usize {
        self.interior.len() + 2
    }

    fn key(&self) -> (Corner, Corner, Vec<u8>) {
        (
            self.start,
            self.end,
            self.interior.iter().map(|l| l.index()).collect(),
        )
    }
}

impl fmt::Display for SaddleConnection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SaddleConfig {
    pub max_len: usize,
    pub grid: usize,
    pub tol: f64,
}

impl Default for SaddleConfig {
    fn default() -> Self {
        Self {
            max_len: DEFAULT_MAX_LEN,
            grid: DEFAULT_GRID,
            tol: DEFAULT_TOL,
        }
    }
}

impl SaddleConfig {
    fn validate(&self) -> Result<(), SaddleError> {
        if self.grid < 1000 {
            return Err(SaddleError::Config("grid must be at least 1000".into()));
        }
        if self.max_len < 1 {
            return Err(SaddleError::Config("max_len must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol <= 1e-6) {
            return Err(SaddleError::Config("tol must lie in (0, 1e-6]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FamilyDiagnostics {
    pub corner: Option<Corner>,
    /// Grid intervals whose endpoint codes first differ by letters no single corner separates.
    pub grid_too_coarse: usize,
    /// Code changes bisected to the resolution limit without meeting `tol`.
    pub unresolved: usize,
    /// Code changes whose earlier collisions already touch a corner.
    pub through_corner: usize,
    /// Candidates before merging repeated detections of the same root.
    pub raw_candidates: usize,
}

impl FamilyDiagnostics {
    fn absorb(&mut self, other: &FamilyDiagnostics) {
        self.grid_too_coarse += other.grid_too_coarse;
        self.unresolved += other.unresolved;
        self.through_corner += other.through_corner;
        self.raw_candidates += other.raw_candidates;
    }
}

struct Search<'a> {
    table: &'a StadiumTable,
    family: LaunchFamily,
    cfg: SaddleConfig,
    /// Nodes per family at full refinement.
    n: u64,
    found: Vec<SaddleConnection>,
    diag: FamilyDiagnostics,
}

impl Search<'_> {
    fn trace_at(&self, k: u64) -> Trace {
        trace(self.table, &self.family, self.family.param(k, self.n), self.cfg.max_len)
    }

    fn refine(&mut self, ka: u64, ta: &Trace, kb: u64, tb: &Trace) {
        let Some(p) = ta.first_difference(tb) else {
            return;
        };
        if kb - ka > 1 {
            let km = ka + (kb - ka) / 2;
            let tm = self.trace_at(km);
            self.refine(ka, ta, km, &tm);
            self.refine(km, &tm, kb, tb);
            return;
        }
        self.resolve(p, ka, ta, kb, tb);
    }

    fn resolve(&mut self, p: usize, ka: u64, ta: &Trace, kb: u64, tb: &Trace) {
        let corner = match (ta.hits.get(p), tb.hits.get(p)) {
            (Some(a), Some(b)) => corner_between(a.letter, b.letter),
            _ => None,
        };
        let Some(corner) = corner else {
            self.diag.unresolved += 1;
            return;
        };
        let ra = corner_residual(self.table, &ta.hits[p], corner);
        let rb = corner_residual(self.table, &tb.hits[p], corner);
        let (k, t, residual) = if ra <= rb { (ka, ta, ra) } else { (kb, tb, rb) };
        if !(residual < self.cfg.tol) {
            self.diag.unresolved += 1;
            return;
        }
        if t.hits[..p].iter().any(|h| near_any_corner(self.table, h, self.cfg.tol)) {
            self.diag.through_corner += 1;
            return;
        }
        let start = self.family.corner;
        self.found.push(SaddleConnection {
            start,
            end: corner,
            interior: t.letters().take(p).collect(),
            length: p + 1,
            weight: p + start.is_center() as usize + corner.is_center() as usize,
            launch_param: self.family.param(k, self.n),
            residual,
        });
    }
}

fn refinement_depth(grid: usize) -> u32 {
    let bits = 64 - (grid as u64).leading_zeros();
    52u32.saturating_sub(bits)
}

/// Saddle connections from one corner with at most `max_len` links.
///
/// Repeated detections of one root (launch parameters within `10 * tol`)
/// are merged; distinct roots sharing a code are all kept so that
/// [`verify_uniqueness`] can report them.
pub fn find_saddles(
    table: &StadiumTable,
    corner: Corner,
    cfg: &SaddleConfig,
) -> Result<(Vec<SaddleConnection>, FamilyDiagnostics), SaddleError> {
    cfg.validate()?;
    let family = launch_family(table, corner);
    let depth = refinement_depth(cfg.grid);
    let step = 1u64 << depth;
    let n = cfg.grid as u64 * step;
    let chunks: Vec<usize> = (0..cfg.grid).step_by(GRID_CHUNK).collect();
    let parts: Vec<(Vec<SaddleConnection>, FamilyDiagnostics)> = chunks
        .into_par_iter()
        .map(|c0| {
            let c1 = (c0 + GRID_CHUNK).min(cfg.grid);
            let mut search = Search {
                table,
                family,
                cfg: *cfg,
                n,
                found: Vec::new(),
                diag: FamilyDiagnostics::default(),
            };
            let mut prev = search.trace_at(c0 as u64 * step);
            for i in c0..c1 {
                let next = search.trace_at((i as u64 + 1) * step);
                if let Some(p) = prev.first_difference(&next) {
                    let separable = match (prev.hits.get(p), next.hits.get(p)) {
                        (Some(a), Some(b)) => corner_between(a.letter, b.letter).is_some(),
                        _ => false,
                    };
                    if !separable {
                        search.diag.grid_too_coarse += 1;
                    }
                    search.refine(i as u64 * step, &prev, (i as u64 + 1) * step, &next);
                }
                prev = next;
            }
            (search.found, search.diag)
        })
        .collect();
    let mut diag = FamilyDiagnostics {
        corner: Some(corner),
        ..Default::default()
    };
    let mut found = Vec::new();
    for (f, d) in parts {
        diag.absorb(&d);
        found.extend(f);
    }
    diag.raw_candidates = found.len();
    Ok((merge_repeats(found, cfg.tol), diag))
}

fn merge_repeats(mut found: Vec<SaddleConnection>, tol: f64) -> Vec<SaddleConnection> {
    found.sort_by(|a, b| {
        a.key()
            .cmp(&b.key())
            .then(a.launch_param.total_cmp(&b.launch_param))
    });
    let mut out: Vec<SaddleConnection> = Vec::with_capacity(found.len());
    for sc in found {
        if let Some(last) = out.last_mut() {
            if last.key() == sc.key() && (sc.launch_param - last.launch_param).abs() <= 10.0 * tol {
                if sc.residual < last.residual {
                    *last = sc;
                }
                continue;
            }
        }
        out.push(sc);
    }
    out
}

/// Saddle connections from all six corners.
#[derive(Clone, Debug, Serialize)]
pub struct SaddleSurvey {
    pub l: f64,
    pub config: SaddleConfig,
    pub connections: Vec<SaddleConnection>,
    pub diagnostics: Vec<FamilyDiagnostics>,
}

pub fn survey(table: &StadiumTable, cfg: &SaddleConfig) -> Result<SaddleSurvey, SaddleError> {
    let results: Vec<_> = Corner::ALL
        .par_iter()
        .map(|&c| find_saddles(table, c, cfg))
        .collect::<Result<_, _>>()?;
    let mut connections = Vec::new();
    let mut diagnostics = Vec::new();
    for (f, d) in results {
        connections.extend(f);
        diagnostics.push(d);
    }
    Ok(SaddleSurvey {
        l: table.l(),
        config: *cfg,
        connections,
        diagnostics,
    })
}

impl SaddleSurvey {
    /// Distinct `(start, end, code)` classes.
    pub fn distinct(&self) -> Vec<&SaddleConnection> {
        let mut seen = BTreeMap::new();
        for sc in &self.connections {
            seen.entry(sc.key()).or_insert(sc);
        }
        seen.into_values().collect()
    }

    /// `N(n)`: distinct connections of length at most `n`.
    pub fn count_n(&self, n: usize) -> usize {
        self.distinct().iter().filter(|sc| sc.length <= n).count()
    }

    /// Distinct connections of weight at most `w`.
    pub fn count_weight(&self, w: usize) -> usize {
        self.distinct().iter().filter(|sc| sc.weight <= w).count()
    }

    pub fn total_diagnostics(&self) -> FamilyDiagnostics {
        let mut d = FamilyDiagnostics::default();
        for x in &self.diagnostics {
            d.absorb(x);
        }
        d
    }

    /// Checks `N(n) <= 36 * sum_{j<n} Q(j)` for `n = 1..=max_len`.
    pub fn bound_audit(&self) -> Vec<BoundAuditRow> {
        let max_len = self.config.max_len;
        let counts = count_q(max_len + 1);
        (1..=max_len)
            .map(|n| {
                let bound = BigUint::from(36u32) * counts.prefix_sum(n);
                let count = self.count_n(n);
                BoundAuditRow {
                    n,
                    count,
                    weight_count: self.count_weight(n - 1),
                    bound: bound.to_string(),
                    holds: BigUint::from(count) <= bound,
                }
            })
            .collect()
    }

    /// Largest number of distinct codes sharing one start corner, end corner
    /// and signed composition, with the count of connections that have no
    /// arc collision and hence no composition.
    pub fn composition_multiplicity(&self) -> (usize, usize) {
        let mut classes: BTreeMap<(Corner, Corner, String), usize> = BTreeMap::new();
        let mut without = 0;
        for sc in self.distinct() {
            match saddle_signed_composition(sc) {
                Ok(c) => *classes.entry((sc.start, sc.end, c.to_string())).or_default() += 1,
                Err(_) => without += 1,
            }
        }
        (classes.into_values().max().unwrap_or(0), without)
    }

    /// CSV with header `start,end,code,length,weight,launch_param,residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("start,end,code,length,weight,launch_param,residual\n");
        let mut rows: Vec<&SaddleConnection> = self.connections.iter().collect();
        rows.sort_by(|a, b| {
            (a.start, a.length, a.code())
                .cmp(&(b.start, b.length, b.code()))
                .then(a.launch_param.total_cmp(&b.launch_param))
        });
        for sc in rows {
            out.push_str(&format!(
                "{},{},{},{},{},{:.17e},{:.3e}\n",
                sc.start.label(),
                sc.end.label(),
                sc.code(),
                sc.length,
                sc.weight,
                sc.launch_param,
                sc.residual
            ));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundAuditRow {
    pub n: usize,
    /// Distinct connections with at most `n` links.
    pub count: usize,
    /// Distinct connections of weight at most `n - 1`.
    pub weight_count: usize,
    /// `36 * sum_{j<n} Q(j)` in decimal.
    pub bound: String,
    pub holds: bool,
}

/// `N(n)` for a single `n` by a fresh survey with `max_len = n`.
pub fn count_n(table: &StadiumTable, n: usize, grid: usize, tol: f64) -> Result<usize, SaddleError> {
    let cfg = SaddleConfig {
        max_len: n,
        grid,
        tol,
    };
    Ok(survey(table, &cfg)?.count_n(n))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub unique: bool,
    /// Codes realised by more than one distinct launch parameter.
    pub duplicates: Vec<(String, Vec<f64>)>,
}

/// True when each `(start, end, code)` class holds one launch parameter
/// after merging parameters closer than `10 * tol`.
pub fn verify_uniqueness(saddles: &[SaddleConnection], tol: f64) -> UniquenessReport {
    let mut classes: BTreeMap<_, (String, Vec<f64>)> = BTreeMap::new();
    for sc in saddles {
        classes
            .entry(sc.key())
            .or_insert_with(|| (sc.code(), Vec::new()))
            .1
            .push(sc.launch_param);
    }
    let mut duplicates = Vec::new();
    for (_, (code, mut params)) in classes {
        params.sort_by(f64::total_cmp);
        let mut clusters: Vec<f64> = Vec::new();
        for p in params {
            match clusters.last() {
                Some(&q) if (p - q).abs() <= 10.0 * tol => {}
                _ => clusters.push(p),
            }
        }
        if clusters.len() > 1 {
            duplicates.push((code, clusters));
        }
    }
    UniquenessReport {
        unique: duplicates.is_empty(),
        duplicates,
    }
}

/// Re-simulates a connection from its launch parameter.
///
/// Returns the terminal residual, or `None` if the code is not reproduced.
pub fn resimulate(table: &StadiumTable, sc: &SaddleConnection) -> Option<f64> {
    let family = launch_family(table, sc.start);
    let t = trace(table, &family, sc.launch_param, sc.length);
    if t.hits.len() < sc.length || !t.letters().take(sc.length - 1).eq(sc.interior.iter().copied()) {
        return None;
    }
    let last = &t.hits[sc.length - 1];
    let on_end_side = match sc.end {
        Corner::CenterL => last.letter.side() == Side::L,
        Corner::CenterR => last.letter.side() == Side::R,
        _ => true,
    };
    on_end_side.then(|| corner_residual(table, last, sc.end))
}

/// Signed composition of a connection, counting centre endpoints as arc collisions.
pub fn saddle_signed_composition(sc: &SaddleConnection) -> Result<SignedComposition, CodingError> {
    let mut letters = Vec::with_capacity(sc.interior.len() + 2);
    let centre = |c: Corner| match c {
        Corner::CenterL => Some(CodeLetter::LPlus),
        Corner::CenterR => Some(CodeLetter::RPlus),
        _ => None,
    };
    letters.extend(centre(sc.start));
    letters.extend(sc.interior.iter().copied());
    letters.extend(centre(sc.end));
    signed_composition_of_orbit(&letters)
}

/// Reverses a connection's code: corners swap and arc signs flip.
pub fn reversed_code(sc: &SaddleConnection) -> (Corner, Corner, Vec<CodeLetter>) {
    (
        sc.end,
        sc.start,
        sc.interior.iter().rev().map(|l| l.reversed()).collect(),
    )
}
