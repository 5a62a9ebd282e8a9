//! The basic trajectory walks the line once per phase and needs a buffer of
//! exactly `ell`. One slot less and it cannot keep up.
//!
//! cargo run --example basic_trajectory

use reorder_line::genesis::build_instance;
use reorder_line::policies::{simulate, PolicyError, PolicyId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("ell phases cost per-phase        capacity ell-1");
    for ell in [1, 2, 4, 8] {
        for phases in [1, 3] {
            let instance = build_instance(ell, phases, 1, (1 << ell) + 1)?;
            let (_, report) = simulate(PolicyId::BasicTrajectory, &instance, ell as usize)?;
            let short = match simulate(PolicyId::BasicTrajectory, &instance, ell as usize - 1) {
                Err(PolicyError::CapacityViolation { step, pending }) => {
                    format!("overflows at step {step} ({pending} pending)")
                }
                Err(e) => e.to_string(),
                Ok(_) => "fits".into(),
            };
            println!(
                "{ell:>3} {phases:>6} {:>4} {:<16} {short}",
                report.total_cost,
                format!("{:?}", report.per_phase_cost.unwrap_or_default())
            );
        }
    }
    Ok(())
}
