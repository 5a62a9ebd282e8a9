//! Replacing every request by a packet of `beta` copies and the buffer by
//! `beta` times as much leaves the optimum unchanged.
//!
//! cargo run --release --example packet_scaling

use reorder_line::genesis::{build_instance, scale_packets};
use reorder_line::optsolve::{optimal_cost, SolveLimits};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let limits = SolveLimits::default();
    for ell in 1..=2u32 {
        let base = build_instance(ell, 1, 1, (1 << ell) + 1)?;
        for beta in 2..=3u32 {
            let scaled = scale_packets(&base, beta)?;
            for s in 1..=ell as usize {
                let small = optimal_cost(&base, s, limits)?.report.total_cost;
                let big = optimal_cost(&scaled, beta as usize * s, limits)?
                    .report
                    .total_cost;
                println!(
                    "ell={ell} beta={beta}: opt({} requests, buffer {s}) = {small}, \
                     opt({} requests, buffer {}) = {big}",
                    base.len(),
                    scaled.len(),
                    beta as usize * s
                );
            }
        }
    }
    Ok(())
}
