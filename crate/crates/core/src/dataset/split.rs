use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// A rational number in (0, 1), e.g. `2/3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    num: u64,
    den: u64,
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num == 0 || num >= den {
            return Err(Error::InvalidFraction(format!("{num}/{den}")));
        }
        let g = gcd(num, den);
        Ok(Fraction {
            num: num / g,
            den: den / g,
        })
    }

    pub fn two_thirds() -> Self {
        Fraction { num: 2, den: 3 }
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `round(self * n)` with halves rounded up, in exact integer arithmetic.
    pub fn round_mul(self, n: usize) -> usize {
        let n = n as u64;
        ((2 * self.num * n + self.den) / (2 * self.den)) as usize
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Fraction {
    type Err = Error;

    /// Accepts `a/b` or a decimal such as `0.75`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidFraction(s.to_string());
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let a = a.trim().parse().map_err(|_| bad())?;
            let b = b.trim().parse().map_err(|_| bad())?;
            return Fraction::new(a, b);
        }
        let (int, frac) = s.split_once('.').ok_or_else(bad)?;
        if int.trim_start_matches('0') != "" || frac.is_empty() || frac.len() > 12 {
            return Err(bad());
        }
        let num = frac.parse().map_err(|_| bad())?;
        Fraction::new(num, 10u64.pow(frac.len() as u32))
    }
}

impl Serialize for Fraction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A random partition of `0..n` into training and test indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
    pub seed: u64,
    pub train_fraction: Fraction,
}

impl SplitIndices {
    pub fn n(&self) -> usize {
        self.train_ids.len() + self.test_ids.len()
    }
}

/// Shuffles `0..n` with the seeded stream and takes the first
/// `round(fraction * n)` indices (clamped to `1..n`) as the training set.
/// Both index lists are returned in ascending order.
pub fn split_train_test(n: usize, train_fraction: Fraction, seed: u64) -> Result<SplitIndices> {
    if n < 2 {
        return Err(Error::TooFewSamples(format!("cannot split {n} records")));
    }
    let n_train = train_fraction.round_mul(n).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, 0));
    let mut train_ids = order[..n_train].to_vec();
    let mut test_ids = order[n_train..].to_vec();
    train_ids.sort_unstable();
    test_ids.sort_unstable();
    Ok(SplitIndices {
        train_ids,
        test_ids,
        seed,
        train_fraction,
    })
}
