//! The recurrence lower bound, its closed form, and the grid checks that
//! tie them together.
//!
//! cargo run --release --example recurrence_bounds

use num_rational::BigRational;
use reorder_line::bounds::{
    eta_grid, t_hat, tau, verify_f_bound, verify_induction_steps, verify_tau_dominated, BoundTable,
    Grid, TauParams,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("t_hat(p, q, 0):");
    print!("{:>6}", "q\\p");
    for p in 0..=6 {
        print!("{p:>7}");
    }
    println!();
    for q in 1..=8 {
        print!("{q:>6}");
        for p in 0..=6 {
            print!("{:>7}", t_hat(p, q, 0));
        }
        println!();
    }

    let third = TauParams::new(BigRational::new(1.into(), 3.into()))?;
    println!("\neta = 1/3, a = {}", third.a());
    for p in 0..=3 {
        let p = BigRational::from_integer(p.into());
        println!("tau({p}, 6, 0) = {:.4}", tau(&p, 6, 0, &third).to_f64());
    }

    let grid = Grid::new(12, 12, 6, eta_grid(20), 1e-9);
    let one = BigRational::from_integer(1.into());
    println!(
        "\n{}",
        verify_tau_dominated(&grid, &one, &mut BoundTable::new())?
    );
    for report in verify_induction_steps(&grid)? {
        println!("{report}");
    }
    println!("{}", verify_f_bound(64, &grid.etas, 1e-9)?);
    let inflated = BigRational::new(3.into(), 2.into());
    let mutated = verify_tau_dominated(&grid, &inflated, &mut BoundTable::new())?;
    println!("closed form inflated by 3/2: {mutated}");
    Ok(())
}
