//! Billiard dynamics, symbolic coding and counting tools for the Bunimovich stadium.

pub mod coding;
pub mod combinatorics;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod language;
pub mod saddles;
pub mod wavefront;

pub use error::{CodingError, CombinatoricsError, DynamicsError, LanguageError, SaddleError};
pub use geometry::{BoundaryPoint, Corner, PhasePoint, Side, StadiumTable, Vec2};
