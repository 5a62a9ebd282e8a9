//! Binary fixed-point reals with 256 fractional bits.
//!
//! Only what the bound checks need: ring operations, division, conversion
//! from exact rationals and a base-2 logarithm of a positive rational.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub const FRAC_BITS: u32 = 256;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Fixed {
    raw: BigInt,
}

fn unit() -> BigInt {
    BigInt::one() << FRAC_BITS
}

/// `n / d` rounded to the nearest integer, ties away from zero.
fn div_round(n: &BigInt, d: &BigInt) -> BigInt {
    let (q, r) = n.div_mod_floor(d);
    if (r << 1u32) >= d.abs() {
        q + 1
    } else {
        q
    }
}

impl Fixed {
    pub fn zero() -> Self {
        Fixed {
            raw: BigInt::zero(),
        }
    }

    pub fn from_int(value: i64) -> Self {
        Fixed {
            raw: BigInt::from(value) << FRAC_BITS,
        }
    }

    pub fn from_rational(value: &BigRational) -> Self {
        Fixed {
            raw: div_round(&(value.numer() << FRAC_BITS), value.denom()),
        }
    }

    /// Exact value of an `f64`, rounded to the fixed grid.
    pub fn from_f64(value: f64) -> Self {
        let exact = BigRational::from_float(value).expect("finite float");
        Self::from_rational(&exact)
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.raw.clone(), unit())
    }

    pub fn to_f64(&self) -> f64 {
        self.to_rational().to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_negative(&self) -> bool {
        self.raw.is_negative()
    }

    pub fn abs(&self) -> Self {
        Fixed {
            raw: self.raw.abs(),
        }
    }

    /// `self * 2^shift`.
    pub fn shl(&self, shift: u32) -> Self {
        Fixed {
            raw: &self.raw << shift,
        }
    }

    /// Base-2 logarithm of a positive rational.
    pub fn log2(x: &BigRational) -> Fixed {
        assert!(x.is_positive(), "log2 of a non-positive number");
        // x = y * 2^k with y in [1, 2)
        let mut k = x.numer().bits() as i64 - x.denom().bits() as i64;
        let pow = |e: i64| -> BigRational {
            let p = BigRational::from_integer(BigInt::one() << e.unsigned_abs());
            if e >= 0 {
                p
            } else {
                p.recip()
            }
        };
        let mut y = x / pow(k);
        let two = BigRational::from_integer(BigInt::from(2));
        if y < BigRational::one() {
            k -= 1;
            y *= &two;
        } else if y >= two {
            k += 1;
            y /= &two;
        }
        let ln_y = ln_near_one(&y);
        let ln_2 = ln_near_one(&two);
        &Fixed::from_int(k) + &(&ln_y / &ln_2)
    }
}

/// `ln(y) = 2 atanh((y - 1) / (y + 1))` for `y` in `[1, 2]`, where the
/// series argument is at most 1/3.
fn ln_near_one(y: &BigRational) -> Fixed {
    let one = BigRational::one();
    let z = Fixed::from_rational(&((y - &one) / (y + &one)));
    let z2 = &z * &z;
    let mut power = z.clone();
    let mut sum = Fixed::zero();
    let mut k = 1i64;
    while !power.raw.is_zero() {
        sum = &sum
            + &Fixed {
                raw: &power.raw / BigInt::from(k),
            };
        power = &power * &z2;
        k += 2;
    }
    Fixed {
        raw: sum.raw << 1u32,
    }
}

impl Add for &Fixed {
    type Output = Fixed;
    fn add(self, rhs: &Fixed) -> Fixed {
        Fixed {
            raw: &self.raw + &rhs.raw,
        }
    }
}

impl Sub for &Fixed {
    type Output = Fixed;
    fn sub(self, rhs: &Fixed) -> Fixed {
        Fixed {
            raw: &self.raw - &rhs.raw,
        }
    }
}

impl Neg for &Fixed {
    type Output = Fixed;
    fn neg(self) -> Fixed {
        Fixed { raw: -&self.raw }
    }
}

impl Mul for &Fixed {
    type Output = Fixed;
    fn mul(self, rhs: &Fixed) -> Fixed {
        Fixed {
            raw: div_round(&(&self.raw * &rhs.raw), &unit()),
        }
    }
}

impl Div for &Fixed {
    type Output = Fixed;
    fn div(self, rhs: &Fixed) -> Fixed {
        assert!(!rhs.raw.is_zero(), "fixed-point division by zero");
        Fixed {
            raw: div_round(&(&self.raw << FRAC_BITS), &rhs.raw),
        }
    }
}

impl PartialOrd for Fixed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fixed {
    fn cmp(&self, other: &Self) -> Ordering {
        self.raw.cmp(&other.raw)
    }
}

impl fmt::Debug for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fixed({})", self.to_f64())
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}
