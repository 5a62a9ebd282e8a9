//! Runs the separation experiment and prints the CSV; pass a directory to
//! also draw every configuration.
//!
//! cargo run --release --example separation_experiment -- [svg-dir]

use reorder_line::harness::experiment::{csv_string, run_separation, SeparationConfig};
use reorder_line::harness::svg::render_svg;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = SeparationConfig {
        ell_max: 3,
        phases: vec![1, 2],
        ..SeparationConfig::default()
    };
    let runs = run_separation(&config)?;
    if let Some(dir) = std::env::args().nth(1) {
        std::fs::create_dir_all(&dir)?;
        for run in &runs {
            let r = &run.row;
            let path = format!(
                "{dir}/ell{}_p{}_b{}_{}.svg",
                r.ell, r.phases, r.buffer, r.method
            );
            std::fs::write(path, render_svg(&run.instance, run.schedule.as_ref()))?;
        }
    }
    let rows: Vec<_> = runs.into_iter().map(|r| r.row).collect();
    print!("{}", csv_string(&rows));
    Ok(())
}
