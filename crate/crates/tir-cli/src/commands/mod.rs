pub mod compare;
pub mod estimate;
pub mod replicate;
pub mod simulate;
