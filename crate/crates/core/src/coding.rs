//! Six-letter coding of billiard orbits, the sixteen-letter regrouping map
//! and signed compositions.
//!
//! Arc letters carry the sign of `theta`: `L+` for `theta >= 0`, `L-` for
//! `theta <= 0` (likewise `R+`, `R-`). Flats carry no sign.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::billiard_step;
use crate::error::CodingError;
use crate::geometry::{PhasePoint, Side, StadiumTable, SINGULAR_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CodeLetter {
    LPlus,
    LMinus,
    T,
    B,
    RPlus,
    RMinus,
}

impl CodeLetter {
    pub const ALL: [CodeLetter; 6] = [
        CodeLetter::LPlus,
        CodeLetter::LMinus,
        CodeLetter::T,
        CodeLetter::B,
        CodeLetter::RPlus,
        CodeLetter::RMinus,
    ];

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Option<CodeLetter> {
        CodeLetter::ALL.get(i as usize).copied()
    }

    pub fn side(self) -> Side {
        match self {
            CodeLetter::LPlus | CodeLetter::LMinus => Side::L,
            CodeLetter::T => Side::T,
            CodeLetter::B => Side::B,
            CodeLetter::RPlus | CodeLetter::RMinus => Side::R,
        }
    }

    /// `Some(true)` for `+`, `Some(false)` for `-`, `None` on flats.
    pub fn sign(self) -> Option<bool> {
        match self {
            CodeLetter::LPlus | CodeLetter::RPlus => Some(true),
            CodeLetter::LMinus | CodeLetter::RMinus => Some(false),
            _ => None,
        }
    }

    pub fn arc(side: Side, positive: bool) -> CodeLetter {
        match (side, positive) {
            (Side::L, true) => CodeLetter::LPlus,
            (Side::L, false) => CodeLetter::LMinus,
            (Side::R, true) => CodeLetter::RPlus,
            (Side::R, false) => CodeLetter::RMinus,
            (Side::T, _) => CodeLetter::T,
            (Side::B, _) => CodeLetter::B,
        }
    }

    /// The letter seen by the time-reversed orbit at the same collision.
    pub fn reversed(self) -> CodeLetter {
        match self {
            CodeLetter::LPlus => CodeLetter::LMinus,
            CodeLetter::LMinus => CodeLetter::LPlus,
            CodeLetter::RPlus => CodeLetter::RMinus,
            CodeLetter::RMinus => CodeLetter::RPlus,
            f => f,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CodeLetter::LPlus => "L+",
            CodeLetter::LMinus => "L-",
            CodeLetter::T => "T",
            CodeLetter::B => "B",
            CodeLetter::RPlus => "R+",
            CodeLetter::RMinus => "R-",
        }
    }
}

impl fmt::Display for CodeLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Coding of a single phase point: unique, or two-valued on `theta = 0` of an arc.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointCode {
    Unique(CodeLetter),
    Ambiguous(CodeLetter, CodeLetter),
}

impl PointCode {
    pub fn letters(&self) -> Vec<CodeLetter> {
        match *self {
            PointCode::Unique(a) => vec![a],
            PointCode::Ambiguous(a, b) => vec![a, b],
        }
    }

    pub fn is_unique(&self) -> bool {
        matches!(self, PointCode::Unique(_))
    }

    /// The letter used when a single representative is needed (`+` on ties).
    pub fn primary(&self) -> CodeLetter {
        match *self {
            PointCode::Unique(a) | PointCode::Ambiguous(a, _) => a,
        }
    }
}

pub fn code_point(pp: &PhasePoint) -> PointCode {
    let side = pp.point.side;
    if side.is_flat() {
        return PointCode::Unique(CodeLetter::arc(side, true));
    }
    if pp.theta.abs() <= SINGULAR_TOL {
        PointCode::Ambiguous(CodeLetter::arc(side, true), CodeLetter::arc(side, false))
    } else {
        PointCode::Unique(CodeLetter::arc(side, pp.theta > 0.0))
    }
}

/// A finite code word, optionally anchored at the position of time zero.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodeWord {
    pub letters: Vec<CodeLetter>,
    pub anchor: Option<usize>,
}

impl CodeWord {
    pub fn new(letters: Vec<CodeLetter>) -> Self {
        Self {
            letters,
            anchor: None,
        }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

impl fmt::Display for CodeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.letters.iter().enumerate() {
            if self.anchor == Some(i) {
                f.write_str("|")?;
            }
            f.write_str(a.as_str())?;
        }
        if self.anchor == Some(self.letters.len()) {
            f.write_str("|")?;
        }
        Ok(())
    }
}

impl FromStr for CodeWord {
    type Err = CodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut letters = Vec::new();
        let mut anchor = None;
        let mut chars = s.chars().peekable();
        while let Some(c) = chars.next() {
            let letter = match c {
                '|' => {
                    anchor = Some(letters.len());
                    continue;
                }
                'T' => CodeLetter::T,
                'B' => CodeLetter::B,
                'L' | 'R' => {
                    let side = if c == 'L' { Side::L } else { Side::R };
                    match chars.next() {
                        Some('+') => CodeLetter::arc(side, true),
                        Some('-') => CodeLetter::arc(side, false),
                        other => {
                            return Err(CodingError::UnknownLetter(format!(
                                "{c}{}",
                                other.map(String::from).unwrap_or_default()
                            )))
                        }
                    }
                }
                other => return Err(CodingError::UnknownLetter(other.to_string())),
            };
            letters.push(letter);
        }
        Ok(CodeWord { letters, anchor })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodedOrbit {
    pub word: CodeWord,
    /// False when some visited point lies on a partition boundary (`theta = 0` on an arc).
    pub valid: bool,
}

/// Codes `pp, F(pp), ..., F^{n-1}(pp)`.
pub fn code_orbit(table: &StadiumTable, pp: &PhasePoint, n: usize) -> Result<CodedOrbit, CodingError> {
    let mut letters = Vec::with_capacity(n);
    let mut valid = true;
    let mut cur = *pp;
    for i in 0..n {
        let c = code_point(&cur);
        valid &= c.is_unique();
        letters.push(c.primary());
        if i + 1 < n {
            let (next, _, flags) = billiard_step(table, &cur)?;
            valid &= !flags.near_tangent;
            cur = next;
        }
    }
    Ok(CodedOrbit {
        word: CodeWord::new(letters),
        valid,
    })
}

/// Letters of the sixteen-element partition: realizable ordered side pairs,
/// with `LL` and `RR` split by the common sign of the two arc letters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SixteenLetter {
    LLPlus,
    LLMinus,
    LT,
    LR,
    LB,
    TL,
    TR,
    TB,
    RL,
    RT,
    RRPlus,
    RRMinus,
    RB,
    BL,
    BT,
    BR,
}

impl SixteenLetter {
    pub const ALL: [SixteenLetter; 16] = [
        SixteenLetter::LLPlus,
        SixteenLetter::LLMinus,
        SixteenLetter::LT,
        SixteenLetter::LR,
        SixteenLetter::LB,
        SixteenLetter::TL,
        SixteenLetter::TR,
        SixteenLetter::TB,
        SixteenLetter::RL,
        SixteenLetter::RT,
        SixteenLetter::RRPlus,
        SixteenLetter::RRMinus,
        SixteenLetter::RB,
        SixteenLetter::BL,
        SixteenLetter::BT,
        SixteenLetter::BR,
    ];

    pub fn as_str(self) -> &'static str {
        use SixteenLetter::*;
        match self {
            LLPlus => "LL+",
            LLMinus => "LL-",
            LT => "LT",
            LR => "LR",
            LB => "LB",
            TL => "TL",
            TR => "TR",
            TB => "TB",
            RL => "RL",
            RT => "RT",
            RRPlus => "RR+",
            RRMinus => "RR-",
            RB => "RB",
            BL => "BL",
            BT => "BT",
            BR => "BR",
        }
    }

    /// Regroups an ordered pair of six-letter symbols.
    pub fn from_pair(a: CodeLetter, b: CodeLetter) -> Result<SixteenLetter, CodingError> {
        use SixteenLetter::*;
        let bad = || CodingError::UnrealizablePair(a.to_string(), b.to_string());
        Ok(match (a.side(), b.side()) {
            (Side::L, Side::L) | (Side::R, Side::R) => {
                let (sa, sb) = (a.sign().unwrap(), b.sign().unwrap());
                if sa != sb {
                    return Err(bad());
                }
                match (a.side(), sa) {
                    (Side::L, true) => LLPlus,
                    (Side::L, false) => LLMinus,
                    (_, true) => RRPlus,
                    (_, false) => RRMinus,
                }
            }
            (Side::T, Side::T) | (Side::B, Side::B) => return Err(bad()),
            (Side::L, Side::T) => LT,
            (Side::L, Side::R) => LR,
            (Side::L, Side::B) => LB,
            (Side::T, Side::L) => TL,
            (Side::T, Side::R) => TR,
            (Side::T, Side::B) => TB,
            (Side::R, Side::L) => RL,
            (Side::R, Side::T) => RT,
            (Side::R, Side::B) => RB,
            (Side::B, Side::L) => BL,
            (Side::B, Side::T) => BT,
            (Side::B, Side::R) => BR,
        })
    }
}

impl fmt::Display for SixteenLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Regroups consecutive letters into the sixteen-letter alphabet; output is one shorter.
pub fn phi_regroup(word: &[CodeLetter]) -> Result<Vec<SixteenLetter>, CodingError> {
    if word.len() < 2 {
        return Err(CodingError::TooShort {
            need: 2,
            got: word.len(),
        });
    }
    word.windows(2)
        .map(|w| SixteenLetter::from_pair(w[0], w[1]))
        .collect()
}

/// Sequence `(n_1, m_1, ..., n_k, m_k)` followed by an optional trailing flat run.
///
/// `|n_i|` counts a maximal run of flat collisions, `m_i` a maximal run of
/// collisions on one semicircle. A change of semicircle without flats in
/// between gives `n_i = 0`. The sign of a flat run is the sign of the vertical
/// velocity entering its first collision: `+` when the run starts on `T`,
/// `-` when it starts on `B`. This is the transverse direction of travel in
/// the strip obtained by unfolding the flat reflections.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignedComposition {
    pub parts: Vec<(i64, u64)>,
    pub tail: i64,
}

impl SignedComposition {
    pub fn weight(&self) -> u64 {
        self.parts
            .iter()
            .map(|&(n, m)| n.unsigned_abs() + m)
            .sum::<u64>()
            + self.tail.unsigned_abs()
    }

    /// Number of `(n_i, m_i)` pairs.
    pub fn k(&self) -> usize {
        self.parts.len()
    }

    /// Builds the composition of a sequence of collided sides.
    pub fn from_sides<I: IntoIterator<Item = Side>>(sides: I) -> Self {
        let mut parts = Vec::new();
        let mut flat_run: i64 = 0;
        let mut flat_sign: i64 = 0;
        let mut arc: Option<(Side, u64)> = None;
        for side in sides {
            if side.is_flat() {
                if let Some((_, m)) = arc.take() {
                    parts.push((flat_sign * flat_run, m));
                    flat_run = 0;
                }
                if flat_run == 0 {
                    flat_sign = if side == Side::T { 1 } else { -1 };
                }
                flat_run += 1;
            } else {
                match arc {
                    Some((s, ref mut m)) if s == side && flat_run == 0 => *m += 1,
                    Some((_, m)) => {
                        parts.push((flat_sign * flat_run, m));
                        flat_run = 0;
                        arc = Some((side, 1));
                    }
                    None => arc = Some((side, 1)),
                }
            }
        }
        if let Some((_, m)) = arc {
            parts.push((flat_sign * flat_run, m));
            flat_run = 0;
        }
        SignedComposition {
            parts,
            tail: flat_sign * flat_run,
        }
    }
}

impl fmt::Display for SignedComposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut items: Vec<String> = Vec::new();
        for &(n, m) in &self.parts {
            items.push(n.to_string());
            items.push(m.to_string());
        }
        if self.tail != 0 || self.parts.is_empty() {
            items.push(self.tail.to_string());
        }
        f.write_str(&items.join(","))
    }
}

/// Signed composition of a coded orbit segment; errors when no semicircle is visited.
pub fn signed_composition_of_orbit(word: &[CodeLetter]) -> Result<SignedComposition, CodingError> {
    if !word.iter().any(|a| a.side().is_arc()) {
        return Err(CodingError::EmptyArcRun);
    }
    Ok(SignedComposition::from_sides(word.iter().map(|a| a.side())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryPoint;
    use std::f64::consts::{FRAC_PI_4, PI};
    use CodeLetter::*;

    fn w(s: &str) -> Vec<CodeLetter> {
        s.parse::<CodeWord>().unwrap().letters
    }

    #[test]
    fn code_point_cases() {
        let t = StadiumTable::new(2.0).unwrap();
        let top = PhasePoint::new(BoundaryPoint::new(&t, Side::T, 1.0).unwrap(), -0.7).unwrap();
        assert_eq!(code_point(&top), PointCode::Unique(T));
        let left = BoundaryPoint::new(&t, Side::L, PI).unwrap();
        assert_eq!(
            code_point(&PhasePoint::new(left, 0.3).unwrap()),
            PointCode::Unique(LPlus)
        );
        assert_eq!(
            code_point(&PhasePoint::new(left, -0.3).unwrap()),
            PointCode::Unique(LMinus)
        );
        assert_eq!(
            code_point(&PhasePoint::new(left, 0.0).unwrap()),
            PointCode::Ambiguous(LPlus, LMinus)
        );
    }

    #[test]
    fn axial_orbit_is_ambiguous() {
        let t = StadiumTable::new(2.0).unwrap();
        let pp = PhasePoint::new(BoundaryPoint::new(&t, Side::L, PI).unwrap(), 0.0).unwrap();
        let c = code_orbit(&t, &pp, 4).unwrap();
        assert!(!c.valid);
    }

    #[test]
    fn rectangle_orbit_code() {
        let t = StadiumTable::new(2.0).unwrap();
        let pp = PhasePoint::new(BoundaryPoint::new(&t, Side::L, 3.0 * FRAC_PI_4).unwrap(), FRAC_PI_4)
            .unwrap();
        let c = code_orbit(&t, &pp, 4).unwrap();
        assert!(c.valid);
        assert_eq!(c.word.letters, vec![LPlus, RPlus, RPlus, LPlus]);
    }

    #[test]
    fn vertical_orbit_code() {
        let t = StadiumTable::new(2.0).unwrap();
        let pp = PhasePoint::new(BoundaryPoint::new(&t, Side::B, 1.0).unwrap(), 0.0).unwrap();
        let c = code_orbit(&t, &pp, 6).unwrap();
        assert!(c.valid);
        assert_eq!(c.word.to_string(), "BTBTBT");
    }

    #[test]
    fn word_string_roundtrip() {
        let mut word = CodeWord::new(w("L+TBR-R-"));
        word.anchor = Some(2);
        assert_eq!(word.to_string(), "L+T|BR-R-");
        assert_eq!(word.to_string().parse::<CodeWord>().unwrap(), word);
        assert!("LX".parse::<CodeWord>().is_err());
    }

    #[test]
    fn phi_examples() {
        let out = phi_regroup(&w("L-L-R-R-")).unwrap();
        assert_eq!(
            out,
            vec![SixteenLetter::LLMinus, SixteenLetter::LR, SixteenLetter::RRMinus]
        );
        let out = phi_regroup(&w("R-L-L-R-R-")).unwrap();
        assert_eq!(out[3], SixteenLetter::RRMinus);
        assert_eq!(
            phi_regroup(&w("TBT")).unwrap(),
            vec![SixteenLetter::TB, SixteenLetter::BT]
        );
    }

    #[test]
    fn phi_rejects_forbidden_pairs() {
        for bad in ["TT", "BB", "L+L-", "L-L+", "R+R-", "R-R+"] {
            assert!(matches!(
                phi_regroup(&w(bad)),
                Err(CodingError::UnrealizablePair(..))
            ));
        }
        assert!(matches!(phi_regroup(&w("T")), Err(CodingError::TooShort { .. })));
        assert_eq!(SixteenLetter::ALL.len(), 16);
    }

    #[test]
    fn compositions_of_figure_codes() {
        let red = signed_composition_of_orbit(&w("TBR+TB")).unwrap();
        assert_eq!(red.parts, vec![(2, 1)]);
        assert_eq!(red.tail, 2);
        assert_eq!(red.weight(), 5);
        assert_eq!(red.to_string(), "2,1,2");

        let blue = signed_composition_of_orbit(&w("TBTBL-BTBT")).unwrap();
        assert_eq!(blue.to_string(), "4,1,-4");
        assert_eq!(blue.weight(), 9);

        let rect = signed_composition_of_orbit(&w("L+L+R+R+")).unwrap();
        assert_eq!(rect.parts, vec![(0, 2), (0, 2)]);
        assert_eq!(rect.tail, 0);
    }

    #[test]
    fn reversal_flips_flat_signs() {
        let rev: Vec<_> = w("TBR+TB").into_iter().rev().map(CodeLetter::reversed).collect();
        assert_eq!(signed_composition_of_orbit(&rev).unwrap().to_string(), "-2,1,-2");
        let rev: Vec<_> = w("TBTBL-BTBT").into_iter().rev().map(CodeLetter::reversed).collect();
        assert_eq!(signed_composition_of_orbit(&rev).unwrap().to_string(), "4,1,-4");
    }

    #[test]
    fn flat_only_orbit_has_no_composition() {
        assert_eq!(
            signed_composition_of_orbit(&w("TBTB")),
            Err(CodingError::EmptyArcRun)
        );
    }
}
