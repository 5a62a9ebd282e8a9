//! Adversarial input sequences on a line of `2^ell + 1` sites.
//!
//! One phase spans `2^ell` steps. For every block `(q, s)` (a square of side
//! `2^q` in space-time) a regular request of rank `q - 1` arrives at the
//! block's top boundary site `2^q (s + 1)` in the block's first step
//! `2^q s`. In step `j` an anchor of `ell + 1` co-sited requests arrives at
//! site `j`. Odd phases reverse the site numbering so consecutive phases
//! sweep the line back and forth.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use thiserror::Error;

use crate::model::{Instance, InstanceMeta, Request, RequestKind, SeparationHeader, Site};

/// Largest construction depth accepted by the builders. A phase of depth
/// `ell` has about `(ell + 2) * 2^ell` requests.
pub const MAX_ELL: u32 = 24;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum GenesisError {
    #[error("ell must be in 1..={MAX_ELL}, got {0}")]
    EllOutOfRange(u32),
    #[error("phases must be at least 1")]
    NoPhases,
    #[error("beta must be at least 1")]
    ZeroBeta,
    #[error("line has {n_sites} sites but the construction needs {required}")]
    TooFewSites { n_sites: usize, required: usize },
    #[error("instance is already packet-scaled (beta = {0})")]
    AlreadyScaled(u32),
}

/// The `(q, s)`-block: times and sites in `(2^q s, 2^q (s+1)]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockId {
    pub rank: u32,
    pub index: u64,
}

impl BlockId {
    pub fn side(&self) -> u64 {
        1 << self.rank
    }

    /// Exclusive lower and inclusive upper end of the block, shared by its
    /// time span and its site span.
    pub fn span(&self) -> (u64, u64) {
        (self.side() * self.index, self.side() * (self.index + 1))
    }

    pub fn contains(&self, step_time: u64, site: u64) -> bool {
        let (lo, hi) = self.span();
        lo < step_time && step_time <= hi && lo < site && site <= hi
    }

    /// Site and step of the block's own regular request.
    pub fn corner(&self) -> (u64, u64) {
        let (lo, hi) = self.span();
        (hi, lo)
    }

    pub fn sub_blocks(&self) -> Option<[BlockId; 2]> {
        (self.rank > 1).then(|| {
            [
                BlockId {
                    rank: self.rank - 1,
                    index: 2 * self.index,
                },
                BlockId {
                    rank: self.rank - 1,
                    index: 2 * self.index + 1,
                },
            ]
        })
    }
}

/// All blocks of a phase of depth `ell`, by decreasing rank.
pub fn blocks(ell: u32) -> impl Iterator<Item = BlockId> {
    (1..=ell)
        .rev()
        .flat_map(move |rank| (0..1u64 << (ell - rank)).map(move |index| BlockId { rank, index }))
}

/// One arrival of a phase in phase-local coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhaseArrival {
    pub site: u64,
    pub step: u64,
    /// Anchor ids are phase-local (equal to the anchor's step).
    pub kind: RequestKind,
}

fn check_ell(ell: u32) -> Result<(), GenesisError> {
    if ell == 0 || ell > MAX_ELL {
        return Err(GenesisError::EllOutOfRange(ell));
    }
    Ok(())
}

/// Canonical order within a step: increasing site, anchor members before a
/// co-sited regular request, members by index.
fn sort_key(a: &PhaseArrival) -> (u64, u64, u8, u32) {
    match a.kind {
        RequestKind::AnchorMember { member, .. } => (a.step, a.site, 0, member),
        RequestKind::Regular { rank } => (a.step, a.site, 1, rank),
        RequestKind::Generic => (a.step, a.site, 2, 0),
    }
}

/// The arrivals of a single unmirrored phase over sites `0..=2^ell`.
pub fn build_phase(ell: u32) -> Result<Vec<PhaseArrival>, GenesisError> {
    check_ell(ell)?;
    let len = 1u64 << ell;
    let mut arrivals = Vec::with_capacity((len as usize) * (ell as usize + 2));
    for j in 0..len {
        for member in 0..=ell {
            arrivals.push(PhaseArrival {
                site: j,
                step: j,
                kind: RequestKind::AnchorMember {
                    anchor_id: j,
                    member,
                },
            });
        }
    }
    for block in blocks(ell) {
        let (site, step) = block.corner();
        arrivals.push(PhaseArrival {
            site,
            step,
            kind: RequestKind::Regular {
                rank: block.rank - 1,
            },
        });
    }
    arrivals.sort_by_key(sort_key);
    Ok(arrivals)
}

/// Reverses the site numbering of a phase (`x -> 2^ell - x`) and restores
/// the canonical intra-step order. Applying it twice gives the input back.
pub fn mirror_phase(ell: u32, phase: &[PhaseArrival]) -> Vec<PhaseArrival> {
    let top = 1u64 << ell;
    let mut mirrored: Vec<_> = phase
        .iter()
        .map(|a| PhaseArrival {
            site: top - a.site,
            ..*a
        })
        .collect();
    mirrored.sort_by_key(sort_key);
    mirrored
}

/// Builds `phases` consecutive phases of depth `ell` on a line of `n_sites`
/// sites, scaled to packets of `beta` requests.
pub fn build_instance(
    ell: u32,
    phases: u32,
    beta: u32,
    n_sites: usize,
) -> Result<Instance, GenesisError> {
    check_ell(ell)?;
    if phases == 0 {
        return Err(GenesisError::NoPhases);
    }
    if beta == 0 {
        return Err(GenesisError::ZeroBeta);
    }
    let required = (1usize << ell) + 1;
    if n_sites < required {
        return Err(GenesisError::TooFewSites { n_sites, required });
    }

    let len = 1u64 << ell;
    let even = build_phase(ell)?;
    let odd = mirror_phase(ell, &even);
    let mut arrivals = Vec::with_capacity(even.len() * phases as usize);
    for phase in 0..phases as u64 {
        let source = if phase % 2 == 0 { &even } else { &odd };
        for a in source {
            let kind = match a.kind {
                RequestKind::AnchorMember { anchor_id, member } => RequestKind::AnchorMember {
                    anchor_id: anchor_id + phase * len,
                    member,
                },
                other => other,
            };
            arrivals.push(Request {
                id: arrivals.len(),
                site: a.site as Site,
                step: a.step + phase * len,
                kind,
                packet_id: None,
            });
        }
    }

    let base = Instance {
        n_sites,
        arrivals,
        meta: InstanceMeta {
            ell: Some(ell),
            phases: Some(phases),
            beta: 1,
            start_site: 0,
            separation: None,
        },
    };
    scale_packets(&base, beta)
}

/// Replaces every request by `beta` consecutive copies at the same site and
/// step, grouped under one packet id. `beta = 1` returns the instance as is.
pub fn scale_packets(instance: &Instance, beta: u32) -> Result<Instance, GenesisError> {
    if beta == 0 {
        return Err(GenesisError::ZeroBeta);
    }
    if instance.meta.beta != 1 {
        return Err(GenesisError::AlreadyScaled(instance.meta.beta));
    }
    if beta == 1 {
        return Ok(instance.clone());
    }
    let mut arrivals = Vec::with_capacity(instance.arrivals.len() * beta as usize);
    for (packet_id, request) in instance.arrivals.iter().enumerate() {
        for _ in 0..beta {
            arrivals.push(Request {
                id: arrivals.len(),
                packet_id: Some(packet_id),
                ..request.clone()
            });
        }
    }
    Ok(Instance {
        n_sites: instance.n_sites,
        arrivals,
        meta: InstanceMeta {
            beta,
            ..instance.meta.clone()
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `k < m`: the construction is used directly with `ell = k`.
    SmallBuffer,
    /// `k >= m` and `k >= 4 / delta`: packets of `beta` requests on a
    /// construction of depth `ceil(m delta / 4)`.
    Packed,
    /// `k >= m` but `k < 4 / delta`; the separation is a constant and no
    /// construction is needed.
    Trivial,
}

/// Parameters of the construction separating buffers `k` and `(1-delta) k`
/// on a line of `n` sites.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeparationParams {
    pub ell: u32,
    pub beta: u64,
    pub epsilon: BigRational,
    /// `floor(log2(n - 1))`, the deepest construction that fits the line.
    pub m: u32,
    pub regime: Regime,
}

impl SeparationParams {
    pub fn is_degenerate(&self) -> bool {
        self.regime == Regime::Trivial
    }

    /// The packed buffer `beta * ell`.
    pub fn large_buffer(&self) -> u64 {
        self.beta * self.ell as u64
    }

    /// Checks `beta * ell <= k` and that the smaller buffer of the
    /// construction, `(1 - epsilon) beta ell`, exceeds `(1 - delta) k`.
    /// With `ell = k` the two smaller buffers coincide, so that regime is
    /// held to equality instead.
    pub fn satisfies_invariants(&self, k: u64, delta: &BigRational) -> bool {
        let one = BigRational::one();
        let large = BigRational::from_integer(BigInt::from(self.large_buffer()));
        let k_r = BigRational::from_integer(BigInt::from(k));
        let small = (&one - &self.epsilon) * &large;
        let target = (&one - delta) * &k_r;
        let fits = large <= k_r;
        match self.regime {
            Regime::Packed => fits && small > target,
            Regime::SmallBuffer => fits && small == target,
            Regime::Trivial => true,
        }
    }
}

fn ceil_rational(x: &BigRational) -> BigInt {
    let (q, r) = x.numer().div_mod_floor(x.denom());
    if r.is_zero() {
        q
    } else {
        q + 1
    }
}

/// Derives `(ell, beta, epsilon)` for buffer `k`, line size `n >= 3` and
/// `delta` in `(0, 1)`, in exact arithmetic.
pub fn separation_params(k: u64, n: u64, delta: &BigRational) -> SeparationParams {
    assert!(n >= 3, "line must have at least 3 sites");
    assert!(
        delta.is_positive() && *delta < BigRational::one(),
        "delta must lie in (0, 1)"
    );
    let m = (n - 1).ilog2();
    let k_r = BigRational::from_integer(BigInt::from(k));
    if k < m as u64 {
        return SeparationParams {
            ell: k as u32,
            beta: 1,
            epsilon: delta.clone(),
            m,
            regime: Regime::SmallBuffer,
        };
    }
    let four = BigRational::from_integer(BigInt::from(4));
    if &k_r * delta >= four {
        let ell = ceil_rational(&(BigRational::from_integer(BigInt::from(m)) * delta / &four))
            .to_u32()
            .expect("ell fits in u32");
        let beta = k / ell as u64;
        return SeparationParams {
            ell,
            beta,
            epsilon: delta / BigRational::from_integer(BigInt::from(2)),
            m,
            regime: Regime::Packed,
        };
    }
    SeparationParams {
        ell: 1,
        beta: 1,
        epsilon: delta.clone(),
        m,
        regime: Regime::Trivial,
    }
}

impl SeparationParams {
    pub fn header(&self, k: u64, n: u64, delta: &BigRational) -> SeparationHeader {
        SeparationHeader {
            k,
            n,
            delta: delta.clone(),
            epsilon: self.epsilon.clone(),
        }
    }
}

/// Uniformly random generic requests, all in step 0.
pub fn uniform_random_instance<R: Rng + ?Sized>(
    rng: &mut R,
    n_requests: usize,
    n_sites: usize,
) -> Instance {
    let sites: Vec<Site> = (0..n_requests).map(|_| rng.gen_range(0..n_sites)).collect();
    Instance::from_sites(n_sites, &sites)
}
