//! Lower-bound machinery for the block recurrence.
//!
//! `T(p, q, r)` is the least cost of serving a block of rank `q` when the
//! buffer has room for `p` new requests and already holds `r` old ones.
//! [`BoundTable`] computes `T̂`, the least integer function obeying
//!
//! ```text
//! T̂(p, 1, r) = 1
//! T̂(p, q, r) = max(2^q - 1, min(2^q + 2 T̂(p + r, q - 1, 0),
//!                              T̂(p - 1, q - 1, 0) + T̂(p - 1, q - 1, r + 1)))   q >= 2
//! ```
//!
//! where the second branch only exists for `p >= 1`. The closed form
//!
//! ```text
//! τ(p, q, r) = 2^q / a · (q - (1 + η) p - b_r),
//! a = (1 + η) log2(1 + 1/η),   b_i = 2 (2^i - 1) η
//! ```
//!
//! lies below `T̂` for every `η` in `(0, 1)`. The verifiers in this module
//! check that claim and the identities behind it on finite grids.
//!
//! `τ` is evaluated in 256-bit fixed point. When `1 + 1/η` is a power of two
//! the logarithm is an integer and `τ` is available as an exact rational.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::fixed::Fixed;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum BoundsError {
    #[error("eta must lie strictly between 0 and 1, got {0}")]
    EtaOutOfRange(BigRational),
    #[error("epsilon must lie strictly between 0 and 1, got {0}")]
    EpsilonOutOfRange(BigRational),
    #[error("ell must be at least 1")]
    ZeroEll,
}

fn int(value: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(value))
}

fn pow2(exp: u32) -> BigRational {
    BigRational::from_integer(BigInt::one() << exp)
}

/// Memoized `T̂`.
///
/// Every key reachable from `(p, q, r)` has a smaller `q` and `p' + r' <= p + r`
/// (the first branch moves `r` into `p`, the second trades one unit of `p`
/// for one unit of `r` or drops `r`), so a fill up to `(p_max, q_max, r_max)`
/// stays inside `p + r <= p_max + r_max`, `q <= q_max`.
#[derive(Clone, Debug, Default)]
pub struct BoundTable {
    memo: HashMap<(u32, u32, u32), u64>,
}

/// Ranks above this overflow the `2^q` terms of the recurrence.
pub const MAX_RANK: u32 = 48;

impl BoundTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.memo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memo.is_empty()
    }

    pub fn get(&self, p: u32, q: u32, r: u32) -> Option<u64> {
        self.memo.get(&(p, q, r)).copied()
    }

    pub fn keys(&self) -> impl Iterator<Item = (u32, u32, u32)> + '_ {
        self.memo.keys().copied()
    }

    pub fn t_hat(&mut self, p: u32, q: u32, r: u32) -> u64 {
        assert!(
            (1..=MAX_RANK).contains(&q),
            "rank {q} outside 1..={MAX_RANK}"
        );
        if let Some(&value) = self.memo.get(&(p, q, r)) {
            return value;
        }
        let value = if q == 1 {
            1
        } else {
            let side = 1u64 << q;
            let through_top = side + 2 * self.t_hat(p + r, q - 1, 0);
            let best = if p >= 1 {
                let split = self.t_hat(p - 1, q - 1, 0) + self.t_hat(p - 1, q - 1, r + 1);
                through_top.min(split)
            } else {
                through_top
            };
            best.max(side - 1)
        };
        self.memo.insert((p, q, r), value);
        value
    }

    /// Computes every entry with `p <= p_max`, `1 <= q <= q_max`, `r <= r_max`.
    pub fn fill(&mut self, p_max: u32, q_max: u32, r_max: u32) {
        for q in 1..=q_max {
            for p in 0..=p_max {
                for r in 0..=r_max {
                    self.t_hat(p, q, r);
                }
            }
        }
    }
}

/// `T̂(p, q, r)` from a fresh table.
pub fn t_hat(p: u32, q: u32, r: u32) -> u64 {
    BoundTable::new().t_hat(p, q, r)
}

/// `η` together with the derived constant `a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TauParams {
    eta: BigRational,
    /// `log2(1 + 1/η)` when it is an integer.
    exact_log: Option<u32>,
    log: Fixed,
    a: Fixed,
}

impl TauParams {
    pub fn new(eta: BigRational) -> Result<Self, BoundsError> {
        if !eta.is_positive() || eta >= BigRational::one() {
            return Err(BoundsError::EtaOutOfRange(eta));
        }
        let base = BigRational::one() + eta.recip();
        let exact_log = base
            .to_integer()
            .to_u64()
            .filter(|v| base.is_integer() && v.is_power_of_two());
        let exact_log = exact_log.map(|v| v.trailing_zeros());
        let log = match exact_log {
            Some(k) => Fixed::from_int(k as i64),
            None => Fixed::log2(&base),
        };
        let a = &Fixed::from_rational(&(BigRational::one() + &eta)) * &log;
        Ok(Self {
            eta,
            exact_log,
            log,
            a,
        })
    }

    pub fn from_ratio(numer: i64, denom: i64) -> Result<Self, BoundsError> {
        Self::new(BigRational::new(numer.into(), denom.into()))
    }

    pub fn eta(&self) -> &BigRational {
        &self.eta
    }

    /// `a = (1 + η) log2(1 + 1/η)`.
    pub fn a(&self) -> &Fixed {
        &self.a
    }

    /// `log2(1 + 1/η)`.
    pub fn log_term(&self) -> &Fixed {
        &self.log
    }

    pub fn is_exact(&self) -> bool {
        self.exact_log.is_some()
    }

    pub fn a_exact(&self) -> Option<BigRational> {
        self.exact_log
            .map(|k| (BigRational::one() + &self.eta) * int(k as i64))
    }

    /// `b_i = 2 (2^i - 1) η`.
    pub fn b(&self, i: u32) -> BigRational {
        (pow2(i) - BigRational::one()) * int(2) * &self.eta
    }

    /// `q - (1 + η) p - b_r`, the exact bracket of `τ`.
    fn bracket(&self, p: &BigRational, q: u32, r: u32) -> BigRational {
        int(q as i64) - (BigRational::one() + &self.eta) * p - self.b(r)
    }
}

/// `τ(p, q, r)` in fixed point. `p` may be fractional; the value may be
/// negative, in which case the bound is vacuous.
pub fn tau(p: &BigRational, q: u32, r: u32, params: &TauParams) -> Fixed {
    let scaled = pow2(q) * params.bracket(p, q, r);
    &Fixed::from_rational(&scaled) / params.a()
}

/// `τ(p, q, r)` as an exact rational, when `a` is rational.
pub fn tau_exact(p: &BigRational, q: u32, r: u32, params: &TauParams) -> Option<BigRational> {
    let a = params.a_exact()?;
    Some(pow2(q) * params.bracket(p, q, r) / a)
}

/// `f(r) = (1 + η) r - b_r + 1`; the first induction step needs `f(r) <= a`.
pub fn f_bound(r: u32, params: &TauParams) -> BigRational {
    (BigRational::one() + params.eta()) * int(r as i64) - params.b(r) + BigRational::one()
}

/// `ℓ ε² / ((1 + ε) log2(1 + 1/ε))`, the per-phase cost ratio guaranteed by
/// the construction between buffers `ℓ` and `(1 - ε) ℓ`.
pub fn separation_bound(ell: u32, epsilon: &BigRational) -> Result<Fixed, BoundsError> {
    if ell == 0 {
        return Err(BoundsError::ZeroEll);
    }
    if !epsilon.is_positive() || *epsilon >= BigRational::one() {
        return Err(BoundsError::EpsilonOutOfRange(epsilon.clone()));
    }
    let params = TauParams::new(epsilon.clone())?;
    let numer = int(ell as i64) * epsilon * epsilon;
    Ok(&Fixed::from_rational(&numer) / params.a())
}

/// The η grid `{step, 2·step, …}` below 1, with `step = 1/denom`.
pub fn eta_grid(denom: i64) -> Vec<BigRational> {
    (1..denom)
        .map(|k| BigRational::new(k.into(), denom.into()))
        .collect()
}

/// One grid point where a checked inequality fails.
#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub family: &'static str,
    pub p: BigRational,
    pub q: u32,
    pub r: u32,
    pub eta: BigRational,
    /// `lhs - rhs`; the check wants it `>= -tolerance` (or `|·| <= tolerance`
    /// for identities).
    pub margin: f64,
}

/// Outcome of a grid verification.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub family: &'static str,
    pub checked: usize,
    pub failures: Vec<Failure>,
    /// Smallest `lhs - rhs` over the grid (largest `|lhs - rhs|` for
    /// identities), `None` when nothing was checked.
    pub worst_margin: Option<f64>,
    pub tolerance: f64,
}

impl VerifyReport {
    fn new(family: &'static str, tolerance: f64) -> Self {
        Self {
            family,
            checked: 0,
            failures: Vec::new(),
            worst_margin: None,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn record_inequality(&mut self, margin: f64, ok: bool, failure: impl FnOnce() -> Failure) {
        self.checked += 1;
        self.worst_margin = Some(self.worst_margin.map_or(margin, |w| w.min(margin)));
        if !ok {
            self.failures.push(failure());
        }
    }

    fn record_identity(&mut self, gap: f64, ok: bool, failure: impl FnOnce() -> Failure) {
        self.checked += 1;
        self.worst_margin = Some(self.worst_margin.map_or(gap.abs(), |w| w.max(gap.abs())));
        if !ok {
            self.failures.push(failure());
        }
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} ({} points, {} failures, worst margin {}, tolerance {:e})",
            self.family,
            if self.passed() { "pass" } else { "FAIL" },
            self.checked,
            self.failures.len(),
            self.worst_margin
                .map_or_else(|| "n/a".to_string(), |m| format!("{m:.3e}")),
            self.tolerance
        )
    }
}

/// A rectangular `(p, q, r, η)` grid with a tolerance.
#[derive(Clone, Debug)]
pub struct Grid {
    pub p_max: u32,
    pub q_max: u32,
    pub r_max: u32,
    pub etas: Vec<BigRational>,
    pub tolerance: f64,
}

impl Grid {
    pub fn new(p_max: u32, q_max: u32, r_max: u32, etas: Vec<BigRational>, tolerance: f64) -> Self {
        Self {
            p_max,
            q_max,
            r_max,
            etas,
            tolerance,
        }
    }

    fn params(&self) -> Result<Vec<TauParams>, BoundsError> {
        self.etas.iter().cloned().map(TauParams::new).collect()
    }
}

/// Checks `T̂(p, q, r) >= scale · τ(p, q, r) - tolerance` over the grid.
/// `tau_scale` is 1 for the real check; other values deliberately weaken or
/// strengthen the claim.
pub fn verify_tau_dominated(
    grid: &Grid,
    tau_scale: &BigRational,
    table: &mut BoundTable,
) -> Result<VerifyReport, BoundsError> {
    const FAMILY: &str = "t_hat >= tau";
    let mut report = VerifyReport::new(FAMILY, grid.tolerance);
    let tolerance = Fixed::from_f64(grid.tolerance);
    let scale = Fixed::from_rational(tau_scale);
    for params in grid.params()? {
        for q in 1..=grid.q_max {
            for p in 0..=grid.p_max {
                for r in 0..=grid.r_max {
                    let lower = Fixed::from_int(table.t_hat(p, q, r) as i64);
                    let bound = &scale * &tau(&int(p as i64), q, r, &params);
                    let margin = &lower - &bound;
                    let ok = margin >= -&tolerance;
                    report.record_inequality(margin.to_f64(), ok, || Failure {
                        family: FAMILY,
                        p: int(p as i64),
                        q,
                        r,
                        eta: params.eta().clone(),
                        margin: margin.to_f64(),
                    });
                }
            }
        }
    }
    Ok(report)
}

/// The two induction-step relations for `q >= 2`:
///
/// * `2^q + 2 τ(p + r, q - 1, 0) >= τ(p, q, r)` for `p >= 0`;
/// * `τ(p - 1, q - 1, 0) + τ(p - 1, q - 1, r + 1) = τ(p, q, r)` for `p >= 1`.
///
/// For η with an integral `log2(1 + 1/η)` both are checked in exact rational
/// arithmetic, so a zero tolerance is meaningful there.
pub fn verify_induction_steps(grid: &Grid) -> Result<[VerifyReport; 2], BoundsError> {
    const TOP: &str = "first branch: 2^q + 2 tau(p+r,q-1,0) >= tau(p,q,r)";
    const SPLIT: &str = "second branch: tau(p-1,q-1,0) + tau(p-1,q-1,r+1) = tau(p,q,r)";
    let mut top = VerifyReport::new(TOP, grid.tolerance);
    let mut split = VerifyReport::new(SPLIT, grid.tolerance);
    let tolerance_exact = BigRational::from_float(grid.tolerance).expect("finite tolerance");
    let tolerance = Fixed::from_rational(&tolerance_exact);

    for params in grid.params()? {
        let failure = |family, p: u32, q, r, margin: f64| Failure {
            family,
            p: int(p as i64),
            q,
            r,
            eta: params.eta().clone(),
            margin,
        };
        for q in 2..=grid.q_max {
            for p in 0..=grid.p_max {
                for r in 0..=grid.r_max {
                    let pr = int(p as i64);
                    let target_exact = tau_exact(&pr, q, r, &params);

                    // first branch
                    let shifted = int((p + r) as i64);
                    let (margin, ok) = match &target_exact {
                        Some(target) => {
                            let lhs =
                                pow2(q) + int(2) * tau_exact(&shifted, q - 1, 0, &params).unwrap();
                            let m = lhs - target;
                            let ok = m >= -tolerance_exact.clone();
                            (m.to_f64().unwrap_or(f64::NAN), ok)
                        }
                        None => {
                            let lhs = &Fixed::from_rational(&pow2(q))
                                + &tau(&shifted, q - 1, 0, &params).shl(1);
                            let m = &lhs - &tau(&pr, q, r, &params);
                            let ok = m >= -&tolerance;
                            (m.to_f64(), ok)
                        }
                    };
                    top.record_inequality(margin, ok, || failure(TOP, p, q, r, margin));

                    if p == 0 {
                        continue;
                    }
                    // second branch
                    let less = int(p as i64 - 1);
                    let (gap, ok) = match &target_exact {
                        Some(target) => {
                            let lhs = tau_exact(&less, q - 1, 0, &params).unwrap()
                                + tau_exact(&less, q - 1, r + 1, &params).unwrap();
                            let g = lhs - target;
                            let ok = g.abs() <= tolerance_exact;
                            (g.to_f64().unwrap_or(f64::NAN), ok)
                        }
                        None => {
                            let lhs =
                                &tau(&less, q - 1, 0, &params) + &tau(&less, q - 1, r + 1, &params);
                            let g = &lhs - &tau(&pr, q, r, &params);
                            let ok = g.abs() <= tolerance;
                            (g.to_f64(), ok)
                        }
                    };
                    split.record_identity(gap, ok, || failure(SPLIT, p, q, r, gap));
                }
            }
        }
    }
    Ok([top, split])
}

/// Checks `max_{r <= r_max} f(r) <= a + tolerance` for every η of the grid.
/// The reported margin is `a - max f`.
pub fn verify_f_bound(
    r_max: u32,
    etas: &[BigRational],
    tolerance: f64,
) -> Result<VerifyReport, BoundsError> {
    const FAMILY: &str = "max f(r) <= a";
    let mut report = VerifyReport::new(FAMILY, tolerance);
    let tol = Fixed::from_f64(tolerance);
    for eta in etas {
        let params = TauParams::new(eta.clone())?;
        let (best_r, best) = (0..=r_max)
            .map(|r| (r, f_bound(r, &params)))
            .max_by(|a, b| a.1.cmp(&b.1))
            .expect("r range is non-empty");
        let margin = params.a() - &Fixed::from_rational(&best);
        let ok = margin >= -&tol;
        report.record_inequality(margin.to_f64(), ok, || Failure {
            family: FAMILY,
            p: BigRational::zero(),
            q: 0,
            r: best_r,
            eta: eta.clone(),
            margin: margin.to_f64(),
        });
    }
    Ok(report)
}
