//! Exact arithmetic and verification routines for maximal curves over
//! GF(q^2) and their embeddings into Hermitian varieties.

pub mod embed;
pub mod error;
pub mod families;
pub mod gf;
pub mod hermitian;
pub mod linalg;
pub mod par;
pub mod pipeline;
pub mod plane;
pub mod poly;
pub mod report;
pub mod series;
pub mod wronskian;

pub use error::{Error, Result};
pub use gf::{Fe, Field, Tower, UniPoly};
pub use par::Exec;
