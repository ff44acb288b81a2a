//! Combinatorial topology toolkit: spot sets with Property P, 2-complex
//! collapses, intersection matrices, GPS lattices, the doubling construction,
//! state graphs with train tracks, colour changing and balancing.

pub mod balancing;
pub mod colour;
pub mod complex2;
pub mod doubling;
pub mod error;
pub mod flowmatrix;
pub mod fuzz;
pub mod generate;
pub mod gps;
pub mod graph;
pub mod io;
pub mod lava;

pub use error::{Error, Result};
