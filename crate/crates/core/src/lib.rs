//! Operator means, unital positive linear maps and the constants of the
//! squared Pólya–Szegő and Diaz–Metcalf type inequalities, with numerical
//! certification of each inequality in the Loewner order and a falsification
//! search for the conjectured sharper constants.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod hermitian;
pub mod instances;
pub mod maps;
pub mod means;
pub mod random;
pub mod search;
pub mod verify;

pub use error::{Error, Result};
pub use hermitian::{CMatrix, HermitianMatrix};
