//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails or overruns its time budget.

use std::time::{Duration, Instant};

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reorder_line::bounds::{
    eta_grid, separation_bound, t_hat, tau, verify_f_bound, verify_induction_steps,
    verify_tau_dominated, BoundTable, Grid, TauParams,
};
use reorder_line::fixed::Fixed;
use reorder_line::genesis::{
    build_instance, build_phase, scale_packets, separation_params, uniform_random_instance, Regime,
};
use reorder_line::model::{Instance, RequestKind};
use reorder_line::optsolve::{exhaustive_oracle, optimal_cost, SolveLimits, ORACLE_MAX_REQUESTS};
use reorder_line::policies::{simulate, PolicyError, PolicyId};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check, Duration);

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn opt(instance: &Instance, capacity: usize) -> Result<u64, String> {
    optimal_cost(instance, capacity, SolveLimits::default())
        .map(|s| s.report.total_cost)
        .map_err(|e| e.to_string())
}

fn figure_one() -> Check {
    let phase = build_phase(4).map_err(|e| e.to_string())?;
    let max_site = phase.iter().map(|a| a.site).max().unwrap_or(0);
    let mut anchors = std::collections::BTreeMap::new();
    let mut regular = Vec::new();
    for a in &phase {
        match a.kind {
            RequestKind::AnchorMember { anchor_id, .. } => {
                *anchors.entry(anchor_id).or_insert(0) += 1
            }
            RequestKind::Regular { rank } => regular.push((rank, a.site, a.step)),
            RequestKind::Generic => return Err("generic request in a phase".into()),
        }
    }
    ensure(max_site + 1 == 17, || format!("{} sites", max_site + 1))?;
    ensure(
        anchors.len() == 16 && anchors.values().all(|&c| c == 5),
        || format!("anchors {anchors:?}"),
    )?;
    ensure(regular.len() == 15, || format!("{} regular", regular.len()))?;
    for spot in [(3, 16, 0), (2, 8, 0), (2, 16, 8)] {
        ensure(regular.contains(&spot), || {
            format!("missing rank/site/step {spot:?}")
        })?;
    }
    Ok("17 sites, 16 anchors of 5, 15 regular, corners match".into())
}

fn basic_trajectory_exact() -> Check {
    let mut runs = 0;
    for ell in 1..=12u32 {
        for phases in 1..=4u32 {
            let instance =
                build_instance(ell, phases, 1, (1 << ell) + 1).map_err(|e| e.to_string())?;
            let (_, report) = simulate(PolicyId::BasicTrajectory, &instance, ell as usize)
                .map_err(|e| format!("ell={ell} P={phases}: {e}"))?;
            let want = phases as u64 * (1u64 << ell);
            ensure(report.total_cost == want, || {
                format!("ell={ell} P={phases}: cost {} != {want}", report.total_cost)
            })?;
            match simulate(PolicyId::BasicTrajectory, &instance, ell as usize - 1) {
                Err(PolicyError::CapacityViolation { .. }) => {}
                other => return Err(format!(
                    "ell={ell} P={phases} capacity ell-1: expected a capacity violation, got {:?}",
                    other.map(|(_, rep)| rep.total_cost)
                )),
            }
            runs += 1;
        }
    }
    Ok(format!(
        "{runs} configurations, cost P*2^ell, capacity ell-1 rejected"
    ))
}

fn oracle_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut instances = Vec::new();
    for _ in 0..40 {
        let n_sites = rng.gen_range(2..=6);
        let n_requests = rng.gen_range(1..=9);
        let mut instance = uniform_random_instance(&mut rng, n_requests, n_sites);
        instance.meta.start_site = rng.gen_range(0..n_sites);
        instances.push(instance);
    }
    for ell in 1..=2u32 {
        for phases in 1..=2u32 {
            let full = build_instance(ell, phases, 1, (1 << ell) + 1).map_err(|e| e.to_string())?;
            for len in (1..=full.len().min(ORACLE_MAX_REQUESTS)).step_by(2) {
                instances.push(full.prefix(len));
            }
        }
    }
    let mut compared = 0;
    for (i, instance) in instances.iter().enumerate() {
        for capacity in 1..=3 {
            let fast = opt(instance, capacity)?;
            let slow = exhaustive_oracle(instance, capacity).map_err(|e| e.to_string())?;
            ensure(fast == slow, || {
                format!("instance {i} capacity {capacity}: solver {fast}, oracle {slow}")
            })?;
            compared += 1;
        }
    }
    Ok(format!(
        "{} instances, {compared} comparisons, all equal",
        instances.len()
    ))
}

fn exact_optima() -> Check {
    for phases in 1..=2u32 {
        let instance = build_instance(2, phases, 1, 5).map_err(|e| e.to_string())?;
        let cost = opt(&instance, 2)?;
        ensure(cost == 4 * phases as u64, || {
            format!("ell=2 P={phases} capacity 2: {cost}")
        })?;
    }
    let three = opt(&build_instance(3, 1, 1, 9).map_err(|e| e.to_string())?, 3)?;
    ensure(three == 8, || format!("ell=3 P=1 capacity 3: {three}"))?;
    let small = opt(&build_instance(2, 2, 1, 5).map_err(|e| e.to_string())?, 1)?;
    let bound = 2 * t_hat(1, 2, 0);
    ensure(bound == 6 && small >= bound, || {
        format!("ell=2 P=2 capacity 1: {small} vs bound {bound}")
    })?;
    Ok(format!(
        "opt(2,1,2)=4, opt(2,2,2)=8, opt(3,1,3)=8, opt(2,2,1)={small} >= {bound}"
    ))
}

fn bound_domination() -> Check {
    let grid = Grid::new(16, 16, 10, eta_grid(20), 1e-9);
    let mut table = BoundTable::new();
    let real = verify_tau_dominated(&grid, &r(1, 1), &mut table).map_err(|e| e.to_string())?;
    ensure(real.passed(), || real.to_string())?;
    let mutated = verify_tau_dominated(&grid, &r(3, 2), &mut table).map_err(|e| e.to_string())?;
    ensure(!mutated.passed(), || "scaled bound was not caught".into())?;
    Ok(format!(
        "{} points clean; x1.5 mutation fails at {} points",
        real.checked,
        mutated.failures.len()
    ))
}

fn induction_identities() -> Check {
    let grid = Grid::new(16, 16, 10, eta_grid(20), 1e-9);
    let reports = verify_induction_steps(&grid).map_err(|e| e.to_string())?;
    for report in &reports {
        ensure(report.passed(), || report.to_string())?;
    }
    let exact = Grid::new(16, 16, 10, vec![r(1, 3)], 0.0);
    ensure(
        TauParams::new(r(1, 3))
            .map_err(|e| e.to_string())?
            .is_exact(),
        || "eta=1/3 should take the exact path".into(),
    )?;
    let exact_reports = verify_induction_steps(&exact).map_err(|e| e.to_string())?;
    for report in &exact_reports {
        ensure(report.passed(), || format!("exact: {report}"))?;
    }
    Ok(format!(
        "{} + {} points within 1e-9; eta=1/3 exact with tolerance 0",
        reports[0].checked, reports[1].checked
    ))
}

fn f_maximum() -> Check {
    let report = verify_f_bound(64, &eta_grid(20), 1e-9).map_err(|e| e.to_string())?;
    ensure(report.passed(), || report.to_string())?;
    Ok(format!(
        "{} etas, smallest margin {:.3e}",
        report.checked,
        report.worst_margin.unwrap_or(f64::NAN)
    ))
}

fn parameter_validity() -> Check {
    let deltas = [r(1, 10), r(1, 4), r(1, 3), r(1, 2), r(2, 3), r(9, 10)];
    let ns = [3u64, 17, 100, 1025, 1 << 20, (1 << 40) + 1];
    let mut packed = 0;
    let mut small = 0;
    for delta in &deltas {
        for &n in &ns {
            for k in 1..=400u64 {
                let params = separation_params(k, n, delta);
                let m = (n - 1).ilog2() as u64;
                let k_r = BigRational::from_integer(k.into());
                if k < m {
                    ensure(
                        params.regime == Regime::SmallBuffer
                            && params.ell as u64 == k
                            && params.beta == 1
                            && params.epsilon == *delta,
                        || format!("k={k} n={n} delta={delta}: {params:?}"),
                    )?;
                    small += 1;
                } else if k_r * delta >= r(4, 1) {
                    ensure(params.satisfies_invariants(k, delta), || {
                        format!("k={k} n={n} delta={delta}: {params:?}")
                    })?;
                    ensure(params.beta * params.ell as u64 <= k, || {
                        "beta*ell > k".into()
                    })?;
                    packed += 1;
                }
            }
        }
    }
    Ok(format!("{packed} packed and {small} small-buffer inputs"))
}

fn packet_scaling() -> Check {
    let mut checks = Vec::new();
    for ell in 1..=2u32 {
        let base = build_instance(ell, 1, 1, (1 << ell) + 1).map_err(|e| e.to_string())?;
        for beta in 2..=3u32 {
            let scaled = scale_packets(&base, beta).map_err(|e| e.to_string())?;
            for s in [1usize, ell as usize] {
                let small = opt(&base, s)?;
                let big = opt(&scaled, beta as usize * s)?;
                ensure(small == big, || {
                    format!("ell={ell} beta={beta} s={s}: base {small}, scaled {big}")
                })?;
                if scaled.len() <= ORACLE_MAX_REQUESTS {
                    let oracle =
                        exhaustive_oracle(&scaled, beta as usize * s).map_err(|e| e.to_string())?;
                    ensure(oracle == big, || {
                        format!("ell={ell} beta={beta} s={s}: oracle {oracle}, solver {big}")
                    })?;
                }
                checks.push((ell, beta, s, small));
            }
        }
    }
    Ok(format!("{} (ell, beta, s) cases equal", checks.len()))
}

fn separation_identity() -> Check {
    let tolerance = Fixed::from_f64(1e-9);
    let mut count = 0;
    for ell in 2..=16u32 {
        for eps in [r(1, 4), r(1, 3), r(1, 2)] {
            let params = TauParams::new(eps.clone()).map_err(|e| e.to_string())?;
            let lhs = separation_bound(ell, &eps)
                .map_err(|e| e.to_string())?
                .shl(ell);
            let p = (r(1, 1) - &eps) * BigRational::from_integer(ell.into());
            let rhs = tau(&p, ell, 0, &params);
            ensure((&lhs - &rhs).abs() <= tolerance, || {
                format!("ell={ell} eps={eps}: {lhs} vs {rhs}")
            })?;
            count += 1;
        }
    }
    Ok(format!("{count} (ell, eps) pairs agree"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("figure reproduction", figure_one, Duration::from_secs(1)),
        (
            "basic trajectory exactness",
            basic_trajectory_exact,
            Duration::from_secs(5),
        ),
        (
            "oracle equivalence",
            oracle_equivalence,
            Duration::from_secs(30),
        ),
        ("exact optima", exact_optima, Duration::from_secs(120)),
        (
            "bound domination",
            bound_domination,
            Duration::from_secs(10),
        ),
        (
            "induction identities",
            induction_identities,
            Duration::from_secs(10),
        ),
        ("f(r) maximum", f_maximum, Duration::from_secs(1)),
        (
            "separation parameters",
            parameter_validity,
            Duration::from_secs(1),
        ),
        ("packet scaling", packet_scaling, Duration::from_secs(120)),
        (
            "separation identity",
            separation_identity,
            Duration::from_secs(1),
        ),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let (status, detail) = match outcome {
            Ok(detail) if elapsed <= *budget => ("PASS", detail),
            Ok(detail) => ("FAIL", format!("{detail}; over budget {budget:?}")),
            Err(detail) => ("FAIL", detail),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!(
            "criterion {:>2} {status} {name} [{:.2}s]: {detail}",
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
