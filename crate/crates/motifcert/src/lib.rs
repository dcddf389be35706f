//! Undesignability certificates for RNA secondary-structure motifs under the
//! nearest-neighbour energy model.

pub mod db;
pub mod design;
pub mod energy;
pub mod error;
pub mod fold;
pub mod graph;
pub mod motif;
pub mod structure;

pub use error::{Error, Result};
