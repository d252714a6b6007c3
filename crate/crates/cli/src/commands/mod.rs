pub mod audit;
pub mod lint;
pub mod montecarlo;
pub mod plan;
pub mod simulate;
