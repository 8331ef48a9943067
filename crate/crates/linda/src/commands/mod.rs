pub mod analyze;
pub mod plot;
pub mod simulate;
