pub mod cli;
pub mod diff;
pub mod discrepancy;
pub mod error;
pub mod flows;
pub mod geometry;
pub mod pde;
pub mod quad;
pub mod ry;
pub mod tensor;
pub mod verify;
