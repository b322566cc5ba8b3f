//! Finite-scale topological entropy: Bowen metrics, covers, spanning and
//! separated counts, and a finite order-theory kernel.

pub mod bitset;
pub mod complexity;
pub mod cover_order;
pub mod covers;
pub mod metric;
pub mod order;
pub mod solver;
pub mod systems;
