use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

/// `log2(arg)` for a positive rational `arg`, kept exact.
///
/// Distortions such as `log|S|` are irrational for most set sizes, so they are
/// stored by their argument and compared exactly against rational radii.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Log2 {
    arg: BigRational,
}

impl Log2 {
    pub fn of(arg: BigRational) -> Log2 {
        assert!(arg.is_positive(), "log2 of a non-positive number");
        Log2 { arg }
    }

    pub fn of_int(n: &BigUint) -> Log2 {
        Log2::of(BigRational::from_integer(BigInt::from(n.clone())))
    }

    pub fn of_usize(n: usize) -> Log2 {
        Log2::of(BigRational::from_integer(BigInt::from(n)))
    }

    /// Exactly `n` bits.
    pub fn bits(n: u32) -> Log2 {
        Log2::of(BigRational::from_integer(BigInt::one() << n))
    }

    pub fn arg(&self) -> &BigRational {
        &self.arg
    }

    pub fn to_f64(&self) -> f64 {
        fn lg(n: &BigInt) -> f64 {
            let bits = n.bits();
            if bits < 1000 {
                n.to_f64().expect("finite").log2()
            } else {
                let shift = bits - 64;
                (n >> shift).to_f64().expect("finite").log2() + shift as f64
            }
        }
        lg(self.arg.numer()) - lg(self.arg.denom())
    }

    /// Exact comparison of `log2(arg)` with the rational `r`.
    pub fn cmp_rational(&self, r: &BigRational) -> Ordering {
        let q = r.denom().to_u32().expect("radius denominator fits in u32");
        let p = r.numer();
        let lhs_n = num_traits::pow(self.arg.numer().clone(), q as usize);
        let lhs_d = num_traits::pow(self.arg.denom().clone(), q as usize);
        let shift = p.abs().to_usize().expect("radius numerator fits in usize");
        if p.is_negative() {
            (lhs_n << shift).cmp(&lhs_d)
        } else {
            lhs_n.cmp(&(lhs_d << shift))
        }
    }

    pub fn cmp_int(&self, n: i64) -> Ordering {
        self.cmp_rational(&BigRational::from_integer(BigInt::from(n)))
    }

    /// Smallest integer `m` with `log2(arg) ≤ m`.
    pub fn ceil(&self) -> i64 {
        let (n, d) = (self.arg.numer(), self.arg.denom());
        // Start from the bit-length estimate and correct by at most one step either way.
        let mut m = n.bits() as i64 - d.bits() as i64;
        while self.cmp_int(m - 1) != Ordering::Greater {
            m -= 1;
        }
        while self.cmp_int(m) == Ordering::Greater {
            m += 1;
        }
        m
    }

    /// The integer value when `arg` is a power of two.
    pub fn exact_integer(&self) -> Option<i64> {
        let m = self.ceil();
        (self.cmp_int(m) == Ordering::Equal).then_some(m)
    }

    pub fn is_zero(&self) -> bool {
        self.arg.is_one()
    }

    pub fn zero() -> Log2 {
        Log2::of(BigRational::one())
    }
}

impl PartialOrd for Log2 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Log2 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.arg.cmp(&other.arg)
    }
}

impl fmt::Display for Log2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact_integer() {
            Some(m) => write!(f, "{m}"),
            None => write!(f, "log2({})", self.arg),
        }
    }
}
