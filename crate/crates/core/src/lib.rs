//! Reordering buffers on a line: adversarial instances, online policies,
//! exact offline optima and the recurrence bounds that separate buffer sizes.
//!
//! The runnable examples under `examples/` walk through each part.

pub mod bounds;
pub mod fixed;
pub mod genesis;
pub mod harness;
pub mod model;
pub mod optsolve;
pub mod policies;
