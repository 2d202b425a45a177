use thiserror::Error;

use crate::geometry::{Corner, Side};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("flat length must be positive and finite, got {0}")]
    InvalidTable(f64),
    #[error("local coordinate {coord} out of range on side {side}")]
    InvalidBoundaryPoint { side: Side, coord: f64 },
    #[error("angle {0} is not in the open interval (-pi/2, pi/2)")]
    InvalidAngle(f64),
    #[error("ray does not meet the boundary (geometry defect)")]
    NoIntersection,
    #[error("ray meets side {0} tangentially")]
    Tangential(Side),
    #[error("grazing reflection: |v.n| = {0}")]
    Grazing(f64),
    #[error("orbit hits corner {corner} (distance {distance:e})")]
    Singular { corner: Corner, distance: f64 },
    #[error("wave front focuses exactly at the collision")]
    FocusAtCollision,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodingError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("pair {0}{1} cannot be realized by an orbit")]
    UnrealizablePair(String, String),
    #[error("word too short: need at least {need} letters, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("orbit segment has no collision with a semicircle")]
    EmptyArcRun,
    #[error("unknown letter {0:?}")]
    UnknownLetter(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LanguageError {
    #[error("level {0} is not available (sampled up to {1})")]
    LevelUnavailable(usize, usize),
    #[error("word was not observed at its level")]
    UnknownWord,
    #[error("alphabet of size {0} is not supported (1..=8)")]
    Alphabet(usize),
    #[error("invalid sampling configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CombinatoricsError {
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("bracket does not contain a sign change: {0}")]
    Bracket(String),
    #[error("inequality failed: {0}")]
    Inequality(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SaddleError {
    #[error("invalid search configuration: {0}")]
    Config(String),
}
