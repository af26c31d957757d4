pub mod conditions;
pub mod expansion;
pub mod isotropy;
pub mod latex;
pub mod scheme;
pub mod simulate;
pub mod symkernel;
