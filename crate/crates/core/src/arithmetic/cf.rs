use super::spec::{ln_big, ln_ratio, IrrationalSpec, SurdValue};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Continued fraction `α = [0; a_1, a_2, …, a_N]` with convergents.
///
/// `convergents[n] = (p_n, q_n)` for `n = 0..=N`, with `(p_0, q_0) = (0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuedFraction {
    pub alpha: IrrationalSpec,
    #[serde(with = "big_vec")]
    pub partial_quotients: Vec<BigInt>,
    #[serde(with = "big_pairs")]
    pub convergents: Vec<(BigInt, BigInt)>,
    pub depth: usize,
}

impl ContinuedFraction {
    pub fn q(&self, n: usize) -> &BigInt {
        &self.convergents[n].1
    }

    pub fn p(&self, n: usize) -> &BigInt {
        &self.convergents[n].0
    }

    /// `ln q_n`, exact to double precision for any size.
    pub fn ln_q(&self, n: usize) -> f64 {
        ln_big(self.q(n))
    }

    /// `q_n` as `f64` (`inf` once it exceeds the double range).
    pub fn q_f64(&self, n: usize) -> f64 {
        self.q(n).to_f64().unwrap_or(f64::INFINITY)
    }

    /// `q_n` as `u64`, if it fits.
    pub fn q_u64(&self, n: usize) -> Option<u64> {
        self.q(n).to_u64()
    }

    /// `ln(q_{n+1}) / q_n`.
    pub fn brjuno_term(&self, n: usize) -> f64 {
        let ln_next = self.ln_q(n + 1);
        let ln_q = self.ln_q(n);
        (ln_next.ln() - ln_q).exp()
    }

    /// Verify the recurrence, the unimodular determinant and alternation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let (mut pm, mut qm) = (BigInt::one(), BigInt::zero());
        let (mut p, mut q) = (BigInt::zero(), BigInt::one());
        if self.convergents[0] != (p.clone(), q.clone()) {
            return Err("convergent 0 must be 0/1".into());
        }
        for (i, a) in self.partial_quotients.iter().enumerate() {
            if !a.is_positive() {
                return Err(format!("a_{} = {a} is not positive", i + 1));
            }
            let pn = a * &p + &pm;
            let qn = a * &q + &qm;
            let (cp, cq) = &self.convergents[i + 1];
            if *cp != pn || *cq != qn {
                return Err(format!("recurrence fails at n = {}", i + 1));
            }
            let det = &pn * &q - &p * &qn;
            if det.abs() != BigInt::one() {
                return Err(format!("determinant {det} at n = {}", i + 1));
            }
            if qn <= q && i > 0 {
                return Err(format!("q not increasing at n = {}", i + 1));
            }
            pm = std::mem::replace(&mut p, pn);
            qm = std::mem::replace(&mut q, qn);
        }
        Ok(())
    }
}

enum Engine {
    Surd(SurdValue),
    Exact(BigRational),
    Interval(BigRational, BigRational),
}

impl Engine {
    fn new(alpha: &IrrationalSpec) -> Self {
        match alpha {
            IrrationalSpec::QuadraticSurd { .. } => Engine::Surd(SurdValue::from_spec(alpha).unwrap()),
            IrrationalSpec::RationalSeries { .. } => Engine::Exact(alpha.exact_bounds().0),
            IrrationalSpec::DecimalLiteral { .. } => {
                let (lo, hi) = alpha.exact_bounds();
                Engine::Interval(lo, hi)
            }
        }
    }

    /// Next quotient, then advance; `None` once the data cannot resolve it.
    fn next(&mut self) -> Option<BigInt> {
        match self {
            Engine::Surd(s) => {
                let a = s.floor();
                s.invert_after(&a);
                Some(a)
            }
            Engine::Exact(x) => {
                let a = x.floor().to_integer();
                let frac = &*x - BigRational::from_integer(a.clone());
                if frac.is_zero() {
                    return None;
                }
                *x = frac.recip();
                Some(a)
            }
            Engine::Interval(lo, hi) => {
                let a = lo.floor().to_integer();
                let b = hi.floor().to_integer();
                let flo = &*lo - BigRational::from_integer(a.clone());
                let fhi = &*hi - BigRational::from_integer(a.clone());
                if a != b || flo.is_zero() || fhi.is_zero() {
                    return None;
                }
                let (nlo, nhi) = (fhi.recip(), flo.recip());
                *lo = nlo;
                *hi = nhi;
                Some(a)
            }
        }
    }
}

/// Expand `alpha` to `depth` partial quotients.
pub fn cf_expand(alpha: &IrrationalSpec, depth: usize) -> Result<ContinuedFraction> {
    expand(alpha, depth, false)
}

/// Expand as far as the data resolves, up to `max_depth` quotients.
pub fn cf_expand_available(alpha: &IrrationalSpec, max_depth: usize) -> Result<ContinuedFraction> {
    expand(alpha, max_depth, true)
}

fn expand(alpha: &IrrationalSpec, depth: usize, allow_short: bool) -> Result<ContinuedFraction> {
    if depth == 0 {
        return Err(Error::InvalidParameter("depth must be at least 1".into()));
    }
    alpha.validate()?;
    let mut eng = Engine::new(alpha);
    let a0 = eng.next().ok_or_else(|| Error::PrecisionExhausted("cannot resolve the integer part".into()))?;
    if !a0.is_zero() {
        return Err(Error::InvalidIrrational(format!("{alpha} is not in (0, 1)")));
    }
    let mut quotients = Vec::with_capacity(depth);
    let mut convergents = vec![(BigInt::zero(), BigInt::one())];
    let (mut pm, mut qm) = (BigInt::one(), BigInt::zero());
    for n in 1..=depth {
        let Some(a) = eng.next() else {
            if allow_short && n > 1 {
                break;
            }
            return Err(Error::PrecisionExhausted(format!(
                "{alpha} resolves only {} partial quotients, {depth} requested",
                n - 1
            )));
        };
        let (p, q) = convergents.last().unwrap().clone();
        let pn = &a * &p + &pm;
        let qn = &a * &q + &qm;
        pm = p;
        qm = q;
        quotients.push(a);
        convergents.push((pn, qn));
    }
    let depth = quotients.len();
    Ok(ContinuedFraction { alpha: alpha.clone(), partial_quotients: quotients, convergents, depth })
}

/// `‖qα‖` with its natural log (the log stays finite when the value underflows).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegerDistance {
    pub value: f64,
    #[serde(with = "crate::format::ext_f64")]
    pub ln: f64,
}

/// Distance from `q·α` to the nearest integer.
pub fn distance_to_integers(alpha: &IrrationalSpec, q: &BigInt) -> Result<IntegerDistance> {
    if !q.is_positive() {
        return Err(Error::InvalidParameter("q must be positive".into()));
    }
    alpha.validate()?;
    match alpha {
        IrrationalSpec::QuadraticSurd { p, q: qs, r, den } => {
            let (p, qs, r, den) = (BigInt::from(*p), BigInt::from(*qs), BigInt::from(*r), BigInt::from(*den));
            let sv = SurdValue::new(q * &p, q * &qs, r.clone(), den.clone());
            let m = sv.floor();
            // d_lo = qα − m, d_hi = m + 1 − qα, both as (A + B√r)/den
            let lo = surd_value(&(q * &p - &m * &den), &(q * &qs), &r, &den);
            let hi = surd_value(&(&(&m + 1) * &den - q * &p), &(-(q * &qs)), &r, &den);
            Ok(if lo.ln <= hi.ln { lo } else { hi })
        }
        IrrationalSpec::RationalSeries { .. } => {
            let (x, _) = alpha.exact_bounds();
            Ok(rational_distance(&(x * BigRational::from_integer(q.clone()))))
        }
        IrrationalSpec::DecimalLiteral { .. } => {
            let (lo, hi) = alpha.exact_bounds();
            let qq = BigRational::from_integer(q.clone());
            let (xl, xh) = (&lo * &qq, &hi * &qq);
            let near = |x: &BigRational| (x + BigRational::new(BigInt::one(), BigInt::from(2))).floor();
            let width = (&xh - &xl).to_f64().unwrap_or(f64::INFINITY);
            let d = rational_distance(&xl);
            if near(&xl) != near(&xh) || width > 1e-6 * d.value {
                return Err(Error::PrecisionExhausted(format!(
                    "{alpha}: ‖{q}α‖ is not resolved by the available digits"
                )));
            }
            Ok(d)
        }
    }
}

/// Positive value of `(A + B√r)/den` evaluated without cancellation.
fn surd_value(a: &BigInt, b: &BigInt, r: &BigInt, den: &BigInt) -> IntegerDistance {
    let sign_den = if den.is_negative() { -1.0 } else { 1.0 };
    let (ln, sign) = if a.is_zero() {
        (ln_big(&b.abs()) + 0.5 * ln_big(r), b.signum().to_f64().unwrap())
    } else if b.is_zero() || a.is_negative() == b.is_negative() {
        // same signs: no cancellation
        let ln_a = ln_big(&a.abs());
        let ln_b = ln_big(&b.abs()) + 0.5 * ln_big(r);
        let (hi, lo) = if ln_a >= ln_b { (ln_a, ln_b) } else { (ln_b, ln_a) };
        (hi + (lo - hi).exp().ln_1p(), a.signum().to_f64().unwrap())
    } else {
        // A + B√r = (A² − B²r)/(A − B√r), denominator has no cancellation
        let num = a * a - b * b * r;
        let ln_a = ln_big(&a.abs());
        let ln_b = ln_big(&b.abs()) + 0.5 * ln_big(r);
        let (hi, lo) = if ln_a >= ln_b { (ln_a, ln_b) } else { (ln_b, ln_a) };
        let ln_den = hi + (lo - hi).exp().ln_1p();
        let s_num = num.signum().to_f64().unwrap();
        let s_den = a.signum().to_f64().unwrap();
        (ln_big(&num.abs()) - ln_den, s_num * s_den)
    };
    let ln = ln - ln_big(&den.abs());
    debug_assert!(sign * sign_den > 0.0, "distance must be positive");
    IntegerDistance { value: ln.exp(), ln }
}

fn rational_distance(x: &BigRational) -> IntegerDistance {
    let frac = x - BigRational::from_integer(x.floor().to_integer());
    let other = BigRational::one() - &frac;
    let d = if frac <= other { frac } else { other };
    if d.is_zero() {
        return IntegerDistance { value: 0.0, ln: f64::NEG_INFINITY };
    }
    let ln = ln_ratio(d.numer(), d.denom());
    let value = d.to_f64().filter(|v| *v > 0.0).unwrap_or_else(|| ln.exp());
    IntegerDistance { value, ln }
}

mod big_vec {
    use num_bigint::BigInt;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        Vec::<String>::deserialize(d)?.iter().map(|s| s.parse().map_err(D::Error::custom)).collect()
    }
}

mod big_pairs {
    use num_bigint::BigInt;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[(BigInt, BigInt)], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|(p, q)| [p.to_string(), q.to_string()]))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(BigInt, BigInt)>, D::Error> {
        Vec::<[String; 2]>::deserialize(d)?
            .iter()
            .map(|[p, q]| Ok((p.parse().map_err(D::Error::custom)?, q.parse().map_err(D::Error::custom)?)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qs(cf: &ContinuedFraction) -> Vec<u64> {
        (1..=cf.depth).map(|n| cf.q_u64(n).unwrap()).collect()
    }

    #[test]
    fn golden_mean_is_fibonacci() {
        let cf = cf_expand(&IrrationalSpec::golden_mean(), 10).unwrap();
        assert!(cf.partial_quotients.iter().all(|a| *a == BigInt::one()));
        assert_eq!(qs(&cf), vec![1, 2, 3, 5, 8, 13, 21, 34, 55, 89]);
        cf.check_invariants().unwrap();
    }

    #[test]
    fn sqrt2_minus_one_is_all_twos() {
        let a: IrrationalSpec = "surd:1,-1,2,1".parse().unwrap();
        let cf = cf_expand(&a, 5).unwrap();
        assert!(cf.partial_quotients.iter().all(|a| *a == BigInt::from(2)));
        assert_eq!(qs(&cf), vec![2, 5, 12, 29, 70]);
    }

    #[test]
    fn distances_match_closed_forms() {
        let g = IrrationalSpec::golden_mean();
        let d = distance_to_integers(&g, &BigInt::from(8)).unwrap();
        let direct = (8.0 * (5f64.sqrt() - 1.0) / 2.0 - 5.0).abs();
        assert!((d.value - direct).abs() < 1e-14);
        assert!((d.value - 0.0557).abs() < 1e-4);
        let s2: IrrationalSpec = "surd:1,-1,2,1".parse().unwrap();
        assert!(distance_to_integers(&s2, &BigInt::from(12)).unwrap().value < 1.0 / 29.0);
    }

    #[test]
    fn distance_of_large_fibonacci_has_no_cancellation() {
        let g = IrrationalSpec::golden_mean();
        let cf = cf_expand(&g, 80).unwrap();
        // ‖q_n φ‖ = φ^{n+1} for the golden mean with this indexing
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for n in [10usize, 40, 79] {
            let d = distance_to_integers(&g, cf.q(n)).unwrap();
            let expect_ln = (n as f64 + 1.0) * phi.ln();
            assert!((d.ln - expect_ln).abs() < 1e-9 * expect_ln.abs(), "n={n}: {} vs {}", d.ln, expect_ln);
        }
    }

    #[test]
    fn liouville_truncation_has_explosive_quotients() {
        let a = IrrationalSpec::liouville(6).unwrap();
        let cf = cf_expand(&a, 8).unwrap();
        cf.check_invariants().unwrap();
        let max_bits = cf.partial_quotients.iter().map(|a| a.bits()).max().unwrap();
        assert!(max_bits > 30, "largest quotient has {max_bits} bits");
    }

    #[test]
    fn decimal_literal_exhausts_precision() {
        let a: IrrationalSpec = "dec:0.61803398874989484820".parse().unwrap();
        let cf = cf_expand(&a, 20).unwrap();
        assert!(cf.partial_quotients.iter().all(|a| *a == BigInt::one()));
        assert!(matches!(cf_expand(&a, 200), Err(Error::PrecisionExhausted(_))));
        assert!(distance_to_integers(&a, &BigInt::from(10u64).pow(19)).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let cf = cf_expand(&IrrationalSpec::golden_mean(), 12).unwrap();
        let s = serde_json::to_string(&cf).unwrap();
        let back: ContinuedFraction = serde_json::from_str(&s).unwrap();
        assert_eq!(cf, back);
    }
}
