//! Construction parameters separating buffers `k` and `(1 - delta) k`.
//!
//! cargo run --example separation_params -- K N DELTA

use reorder_line::bounds::separation_bound;
use reorder_line::genesis::separation_params;
use reorder_line::harness::{format_rational, parse_rational};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cases: Vec<(u64, u64, String)> = if args.len() == 3 {
        vec![(args[0].parse()?, args[1].parse()?, args[2].clone())]
    } else {
        vec![
            (3, 17, "1/2".into()),
            (8, 17, "1/2".into()),
            (4, 17, "1/2".into()),
            (100, (1 << 20) + 1, "2/5".into()),
            (1000, 1 << 30, "0.1".into()),
        ]
    };
    for (k, n, delta) in cases {
        let delta = parse_rational(&delta)?;
        let params = separation_params(k, n, &delta);
        print!(
            "k={k} n={n} delta={}: {:?} ell={} beta={} epsilon={}",
            format_rational(&delta),
            params.regime,
            params.ell,
            params.beta,
            format_rational(&params.epsilon)
        );
        if !params.is_degenerate() && params.ell >= 1 {
            let ratio = separation_bound(params.ell, &params.epsilon)?;
            print!(" cost ratio >= {:.4}", ratio.to_f64());
        }
        println!();
    }
    Ok(())
}
