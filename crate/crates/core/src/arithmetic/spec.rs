use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// An irrational rotation number given in a form that supports exact
/// continued-fraction expansion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IrrationalSpec {
    /// `(p + q·√r) / den`.
    QuadraticSurd { p: i64, q: i64, r: u64, den: i64 },
    /// `Σ 10^{-e_n}` over the listed exponents, evaluated exactly.
    RationalSeries { exponents: Vec<u32> },
    /// Decimal digits `0.d_1 d_2 …`; the value is known to within one unit
    /// of the last digit.
    DecimalLiteral { digits: String },
}

impl IrrationalSpec {
    pub fn golden_mean() -> Self {
        IrrationalSpec::QuadraticSurd { p: -1, q: 1, r: 5, den: 2 }
    }

    /// `Σ_{n=1}^{terms} 10^{-n!}`.
    pub fn liouville(terms: u32) -> Result<Self> {
        if terms == 0 || terms > 8 {
            return Err(Error::InvalidIrrational(format!("liouville terms must be in 1..=8, got {terms}")));
        }
        let mut exps = Vec::new();
        let mut f: u32 = 1;
        for n in 1..=terms {
            f *= n;
            exps.push(f);
        }
        Ok(IrrationalSpec::RationalSeries { exponents: exps })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            IrrationalSpec::QuadraticSurd { q, r, den, .. } => {
                if *q == 0 || *den == 0 {
                    return Err(Error::InvalidIrrational("surd needs q != 0 and den != 0".into()));
                }
                let s = (*r as f64).sqrt().round() as u64;
                if (s.saturating_sub(1)..=s + 1).any(|t| t.checked_mul(t) == Some(*r)) {
                    return Err(Error::InvalidIrrational(format!("r = {r} is a perfect square")));
                }
                let st = SurdValue::from_spec(self).expect("surd");
                if !st.floor().is_zero() {
                    return Err(Error::InvalidIrrational(format!("{self} is not in (0, 1)")));
                }
            }
            IrrationalSpec::RationalSeries { exponents } => {
                if exponents.is_empty() || exponents.windows(2).any(|w| w[0] >= w[1]) || exponents[0] == 0 {
                    return Err(Error::InvalidIrrational("series exponents must be positive and strictly increasing".into()));
                }
            }
            IrrationalSpec::DecimalLiteral { digits } => {
                if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.bytes().all(|b| b == b'0') {
                    return Err(Error::InvalidIrrational(format!("bad decimal digits {digits:?}")));
                }
            }
        }
        Ok(())
    }

    /// Closest `f64` to the value.
    pub fn to_f64(&self) -> f64 {
        match self {
            IrrationalSpec::QuadraticSurd { p, q, r, den } => {
                let s = (*r as f64).sqrt();
                let num = *p as f64 + *q as f64 * s;
                if (*p < 0) != (*q < 0) && *p != 0 {
                    // (p + q√r) = (p² − q²r)/(p − q√r) avoids cancellation
                    let pp = *p as i128;
                    let qq = *q as i128;
                    let n2 = pp * pp - qq * qq * (*r as i128);
                    n2 as f64 / (*p as f64 - *q as f64 * s) / *den as f64
                } else {
                    num / *den as f64
                }
            }
            _ => self.exact_bounds().0.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// Rational enclosure `[lo, hi]` for the non-surd kinds (equal for series).
    pub(crate) fn exact_bounds(&self) -> (BigRational, BigRational) {
        match self {
            IrrationalSpec::RationalSeries { exponents } => {
                let mut s = BigRational::zero();
                for e in exponents {
                    s += BigRational::new(BigInt::one(), BigInt::from(10u32).pow(*e));
                }
                (s.clone(), s)
            }
            IrrationalSpec::DecimalLiteral { digits } => {
                let den = BigInt::from(10u32).pow(digits.len() as u32);
                let num = BigInt::from_str(digits).expect("validated digits");
                let lo = BigRational::new(num.clone(), den.clone());
                let hi = BigRational::new(num + 1, den);
                (lo, hi)
            }
            IrrationalSpec::QuadraticSurd { .. } => unreachable!("surds have no rational enclosure"),
        }
    }
}

impl fmt::Display for IrrationalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IrrationalSpec::QuadraticSurd { p, q, r, den } => write!(f, "surd:{q},{p},{r},{den}"),
            IrrationalSpec::RationalSeries { exponents } => {
                let e: Vec<String> = exponents.iter().map(|e| e.to_string()).collect();
                write!(f, "series:{}", e.join(","))
            }
            IrrationalSpec::DecimalLiteral { digits } => write!(f, "dec:0.{digits}"),
        }
    }
}

impl FromStr for IrrationalSpec {
    type Err = Error;

    /// Grammar: `surd:s,c,r,den` for `(s·√r + c)/den`, `liouville:N`, `series:e1,e2,…`, `dec:0.ddd…`,
    /// plus the alias `golden`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: &str| Error::InvalidIrrational(format!("{s:?}: {m}"));
        let s = s.trim();
        if s == "golden" {
            return Ok(IrrationalSpec::golden_mean());
        }
        let (kind, body) = s.split_once(':').ok_or_else(|| bad("expected kind:body"))?;
        let spec = match kind {
            "surd" => {
                let v: Vec<&str> = body.split(',').map(str::trim).collect();
                if v.len() != 4 {
                    return Err(bad("surd needs s,c,r,den for (s·√r + c)/den"));
                }
                let int = |t: &str| t.parse::<i64>().map_err(|_| bad("not an integer"));
                let r = v[2].parse::<u64>().map_err(|_| bad("r must be a positive integer"))?;
                IrrationalSpec::QuadraticSurd { q: int(v[0])?, p: int(v[1])?, r, den: int(v[3])? }
            }
            "liouville" => IrrationalSpec::liouville(body.trim().parse().map_err(|_| bad("not an integer"))?)?,
            "series" => IrrationalSpec::RationalSeries {
                exponents: body
                    .split(',')
                    .map(|t| t.trim().parse::<u32>().map_err(|_| bad("exponent must be a positive integer")))
                    .collect::<Result<_>>()?,
            },
            "dec" => {
                let d = body.trim().strip_prefix("0.").or_else(|| body.trim().strip_prefix('.')).ok_or_else(|| bad("decimal must start with 0."))?;
                IrrationalSpec::DecimalLiteral { digits: d.to_string() }
            }
            _ => return Err(bad("unknown kind")),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// `(P + √N) / Q` with `Q | N − P²`, the classical normal form for
/// continued fractions of quadratic irrationals.
#[derive(Debug, Clone)]
pub(crate) struct SurdValue {
    pub p: BigInt,
    pub n: BigInt,
    pub q: BigInt,
}

impl SurdValue {
    pub fn from_spec(spec: &IrrationalSpec) -> Option<Self> {
        let IrrationalSpec::QuadraticSurd { p, q, r, den } = spec else { return None };
        Some(Self::new(BigInt::from(*p), BigInt::from(*q), BigInt::from(*r), BigInt::from(*den)))
    }

    /// Normal form of `(p + q√r)/den`.
    pub fn new(p: BigInt, q: BigInt, r: BigInt, den: BigInt) -> Self {
        let n = &q * &q * r;
        let (mut p, mut qd) = if q.is_negative() { (-p, -den) } else { (p, den) };
        let mut n = n;
        if !(&n - &p * &p).is_multiple_of(&qd) {
            let a = qd.abs();
            p *= &a;
            n *= &qd * &qd;
            qd *= &a;
        }
        SurdValue { p, n, q: qd }
    }

    pub fn floor(&self) -> BigInt {
        let s = self.n.sqrt();
        if self.q.is_positive() {
            (&self.p + &s).div_floor(&self.q)
        } else {
            let t: BigInt = -&self.p - &s - 1;
            t.div_floor(&(-&self.q))
        }
    }

    /// Replace `x` by `1 / (x − a)`.
    pub fn invert_after(&mut self, a: &BigInt) {
        let p1 = a * &self.q - &self.p;
        let q1 = (&self.n - &p1 * &p1) / &self.q;
        self.p = p1;
        self.q = q1;
    }
}

/// Natural log of a positive big integer.
pub(crate) fn ln_big(x: &BigInt) -> f64 {
    debug_assert!(x.is_positive());
    let bits = x.bits();
    if bits < 1000 {
        x.to_f64().expect("finite").ln()
    } else {
        let shift = bits - 64;
        let top: BigInt = x >> shift;
        top.to_f64().expect("finite").ln() + shift as f64 * std::f64::consts::LN_2
    }
}

pub(crate) fn ln_ratio(num: &BigInt, den: &BigInt) -> f64 {
    ln_big(&num.abs()) - ln_big(&den.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trips() {
        for s in ["surd:1,-1,5,2", "series:1,2,6", "dec:0.1415926535", "surd:1,-1,2,1", "surd:-1,3,5,2"] {
            let a: IrrationalSpec = s.parse().unwrap();
            assert_eq!(a.to_string(), s);
        }
        assert_eq!("golden".parse::<IrrationalSpec>().unwrap(), IrrationalSpec::golden_mean());
    }

    #[test]
    fn rejects_bad_specs() {
        for s in ["surd:1,1,4,3", "surd:1,1,5,2", "surd:0,1,5,2", "surd:1,-1,5,0", "series:2,1", "dec:0.000", "foo:1", "liouville:0"] {
            assert!(s.parse::<IrrationalSpec>().is_err(), "{s}");
        }
    }

    #[test]
    fn values_are_accurate() {
        let g = IrrationalSpec::golden_mean().to_f64();
        assert!((g - (5f64.sqrt() - 1.0) / 2.0).abs() < 2e-16);
        let l = IrrationalSpec::liouville(3).unwrap().to_f64();
        assert!((l - 0.110001).abs() < 1e-15);
    }

    #[test]
    fn surd_floor_handles_negative_denominators() {
        // (1 - √5)/(-2) = golden mean, floor 0
        let s = SurdValue::new(1.into(), (-1).into(), 5.into(), (-2).into());
        assert_eq!(s.floor(), BigInt::zero());
        let s = SurdValue::new(0.into(), 1.into(), 2.into(), 1.into());
        assert_eq!(s.floor(), BigInt::one());
    }

    #[test]
    fn ln_big_matches_float_log() {
        let x = BigInt::from(10u32).pow(400);
        assert!((ln_big(&x) - 400.0 * 10f64.ln()).abs() < 1e-9);
    }
}
