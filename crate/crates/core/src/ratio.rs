use core::cmp::Ordering;
use core::fmt;

/// A non-negative fraction kept as integers until it is displayed or
/// converted, so that likelihoods and smoothed priors compare exactly.
#[derive(Debug, Clone, Copy)]
pub struct Ratio {
    numer: u64,
    denom: u64,
}

const fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Ratio {
    pub const ZERO: Ratio = Ratio { numer: 0, denom: 1 };
    pub const ONE: Ratio = Ratio { numer: 1, denom: 1 };

    /// Panics if `denom` is zero.
    pub const fn new(numer: u64, denom: u64) -> Ratio {
        assert!(denom != 0, "zero denominator");
        Ratio { numer, denom }
    }

    pub const fn numer(&self) -> u64 {
        self.numer
    }

    pub const fn denom(&self) -> u64 {
        self.denom
    }

    pub const fn reduced(&self) -> Ratio {
        let g = gcd(self.numer, self.denom);
        if g == 0 {
            return Ratio::ZERO;
        }
        Ratio {
            numer: self.numer / g,
            denom: self.denom / g,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.numer as f64 / self.denom as f64
    }

    pub const fn is_zero(&self) -> bool {
        self.numer == 0
    }
}

impl PartialEq for Ratio {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ratio {}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.numer as u128 * other.denom as u128).cmp(&(other.numer as u128 * self.denom as u128))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer, self.denom)
    }
}
