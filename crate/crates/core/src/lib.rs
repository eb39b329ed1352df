pub mod act;
pub mod projections;
pub mod lattice;
pub mod adoc;
pub mod guarded;
pub mod monitor;
