pub mod acceptance;
pub mod error;
pub mod fixtures;
pub mod limiting;
pub mod mfpt;
pub mod passage;
pub mod reduction;
pub mod simulate;
pub mod structure;
pub mod tensor;
