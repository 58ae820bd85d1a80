//! Exact rational distance parameters.
//!
//! Farness thresholds are compared via `ceil(eps * m)`, so epsilon is kept as
//! an exact rational end to end; floating point enters only for display and
//! for round-budget formulas.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

/// A distance parameter in `(0, 1]`, stored exactly.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Eps(Ratio<u64>);

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EpsError {
    #[error("cannot parse {0:?} as a rational in (0, 1]")]
    Parse(String),
    #[error("epsilon must lie in (0, 1], got {0}/{1}")]
    OutOfRange(u64, u64),
}

impl Eps {
    pub fn new(num: u64, den: u64) -> Result<Self, EpsError> {
        if den == 0 || num == 0 || num > den {
            return Err(EpsError::OutOfRange(num, den));
        }
        Ok(Eps(Ratio::new(num, den)))
    }

    pub fn numer(&self) -> u64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u64 {
        *self.0.denom()
    }

    pub fn as_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    /// `ceil(eps * x)`, computed exactly.
    pub fn ceil_mul(&self, x: u64) -> u64 {
        let prod = self.numer() as u128 * x as u128;
        let den = self.denom() as u128;
        prod.div_ceil(den) as u64
    }

    /// `ceil(c / eps)`, the usual iteration-count formula.
    pub fn ceil_div_into(&self, c: u64) -> u64 {
        let num = c as u128 * self.denom() as u128;
        let den = self.numer() as u128;
        num.div_ceil(den) as u64
    }

    /// Halve epsilon exactly; used when a construction splits its budget.
    pub fn half(&self) -> Eps {
        Eps(Ratio::new(self.numer(), self.denom() * 2))
    }
}

impl fmt::Display for Eps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Eps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Eps {
    type Err = EpsError;

    /// Accepts `"1/3"`, decimals like `"0.25"`, and `"1"`.
    fn from_str(s: &str) -> Result<Self, EpsError> {
        let s = s.trim();
        let err = || EpsError::Parse(s.to_string());
        if let Some((a, b)) = s.split_once('/') {
            let num: u64 = a.trim().parse().map_err(|_| err())?;
            let den: u64 = b.trim().parse().map_err(|_| err())?;
            return Eps::new(num, den);
        }
        if let Some((whole, frac)) = s.split_once('.') {
            if frac.is_empty() || frac.len() > 9 || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(err());
            }
            let whole: u64 = if whole.is_empty() {
                0
            } else {
                whole.parse().map_err(|_| err())?
            };
            let frac_val: u64 = frac.parse().map_err(|_| err())?;
            let den = 10u64.pow(frac.len() as u32);
            return Eps::new(whole * den + frac_val, den);
        }
        let num: u64 = s.parse().map_err(|_| err())?;
        Eps::new(num, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!("1/3".parse::<Eps>().unwrap(), Eps::new(1, 3).unwrap());
        assert_eq!("0.25".parse::<Eps>().unwrap(), Eps::new(1, 4).unwrap());
        assert_eq!("1".parse::<Eps>().unwrap(), Eps::new(1, 1).unwrap());
        assert_eq!("0.2".parse::<Eps>().unwrap(), Eps::new(1, 5).unwrap());
    }

    #[test]
    fn rejects_out_of_range() {
        assert!("0".parse::<Eps>().is_err());
        assert!("3/2".parse::<Eps>().is_err());
        assert!("-1/2".parse::<Eps>().is_err());
        assert!("abc".parse::<Eps>().is_err());
    }

    #[test]
    fn ceil_mul_is_exact_at_thresholds() {
        let e = Eps::new(1, 3).unwrap();
        assert_eq!(e.ceil_mul(90), 30);
        assert_eq!(e.ceil_mul(91), 31);
        assert_eq!(e.ceil_div_into(4), 12);
        assert_eq!(Eps::new(1, 4).unwrap().ceil_div_into(16), 64);
    }

    #[test]
    fn display_is_canonical() {
        assert_eq!(Eps::new(2, 6).unwrap().to_string(), "1/3");
        assert_eq!(Eps::new(1, 1).unwrap().to_string(), "1");
    }
}
