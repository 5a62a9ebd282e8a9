//! Builds one phase of depth 4, prints its regular requests by rank and
//! writes the space-time picture with the basic trajectory.
//!
//! cargo run --example figure_one -- [out.svg]

use reorder_line::genesis::build_instance;
use reorder_line::harness::svg::render_svg;
use reorder_line::model::RequestKind;
use reorder_line::policies::{simulate, PolicyId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "figure_one.svg".into());
    let instance = build_instance(4, 1, 1, 17)?;
    for rank in (0..4).rev() {
        let spots: Vec<String> = instance
            .arrivals
            .iter()
            .filter(|r| r.kind == RequestKind::Regular { rank })
            .map(|r| format!("(site {}, step {})", r.site, r.step))
            .collect();
        println!("rank {rank}: {}", spots.join(" "));
    }
    let anchors = instance
        .arrivals
        .iter()
        .filter(|r| r.kind.is_anchor())
        .count();
    println!("{} arrivals, {anchors} anchor members", instance.len());

    let (schedule, report) = simulate(PolicyId::BasicTrajectory, &instance, 4)?;
    println!("basic trajectory cost {}", report.total_cost);
    std::fs::write(&out, render_svg(&instance, Some(&schedule)))?;
    println!("wrote {out}");
    Ok(())
}
