//! Exact offline optima on small instances, compared with the brute-force
//! oracle and the greedy policy.
//!
//! cargo run --release --example exact_optimum

use rand::SeedableRng;
use reorder_line::genesis::{build_instance, uniform_random_instance};
use reorder_line::model::Action;
use reorder_line::optsolve::{exhaustive_oracle, optimal_cost, SolveLimits};
use reorder_line::policies::{simulate, PolicyId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let limits = SolveLimits::default();
    for (ell, phases) in [(2, 1), (2, 2), (3, 1)] {
        let instance = build_instance(ell, phases, 1, (1 << ell) + 1)?;
        for capacity in 1..=ell as usize {
            let solution = optimal_cost(&instance, capacity, limits)?;
            println!(
                "ell={ell} P={phases} buffer={capacity}: opt {} ({} states)",
                solution.report.total_cost, solution.states
            );
        }
    }

    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let instance = uniform_random_instance(&mut rng, 9, 6);
    let sites: Vec<_> = instance.arrivals.iter().map(|r| r.site).collect();
    println!("\nrandom sites {sites:?}");
    for capacity in 0..=3 {
        let solution = optimal_cost(&instance, capacity, limits)?;
        let oracle = exhaustive_oracle(&instance, capacity)?;
        let (_, greedy) = simulate(PolicyId::GreedyNearest, &instance, capacity)?;
        let serves: Vec<_> = solution
            .schedule
            .actions
            .iter()
            .filter_map(|a| match a {
                Action::Serve(id) => Some(*id),
                Action::Admit => None,
            })
            .collect();
        println!(
            "buffer {capacity}: opt {} oracle {oracle} greedy {} serve order {serves:?}",
            solution.report.total_cost, greedy.total_cost
        );
    }
    Ok(())
}
