//! Exact coefficient arithmetic.
//!
//! Every [`Coefficient`] carries the [`CoeffDomain`] it lives in. Mixing
//! domains is an error rather than an implicit conversion.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoeffError {
    #[error("domain mismatch: {0} vs {1}")]
    DomainMismatch(CoeffDomain, CoeffDomain),
    #[error("division by zero")]
    ZeroInverse,
    #[error("{value} is not invertible in {domain}")]
    NotInvertible { value: String, domain: CoeffDomain },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("cannot parse coefficient {text:?} in {domain}")]
    Parse { text: String, domain: CoeffDomain },
}

/// The ring a scheme's coefficients are taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoeffDomain {
    Gf2,
    /// Prime field of odd characteristic `p`.
    Gfp(u64),
    /// Integers modulo `2^k`, `1 <= k <= 64`.
    Zpow2(u32),
    Rational,
    Integer,
}

impl CoeffDomain {
    pub fn gfp(p: u64) -> Result<Self, CoeffError> {
        if p < 3 || !is_prime_u64(p) {
            return Err(CoeffError::InvalidDomain(format!("Zp:{p} needs an odd prime")));
        }
        Ok(CoeffDomain::Gfp(p))
    }

    pub fn zpow2(k: u32) -> Result<Self, CoeffError> {
        if !(1..=64).contains(&k) {
            return Err(CoeffError::InvalidDomain(format!("Z2^{k} needs 1 <= k <= 64")));
        }
        Ok(CoeffDomain::Zpow2(k))
    }

    pub fn is_field(self) -> bool {
        matches!(self, CoeffDomain::Gf2 | CoeffDomain::Gfp(_) | CoeffDomain::Rational)
    }

    /// Number of elements, if finite and representable.
    pub fn order(self) -> Option<u128> {
        match self {
            CoeffDomain::Gf2 => Some(2),
            CoeffDomain::Gfp(p) => Some(p as u128),
            CoeffDomain::Zpow2(k) => Some(1u128 << k),
            CoeffDomain::Rational | CoeffDomain::Integer => None,
        }
    }

    fn mask(self) -> u64 {
        match self {
            CoeffDomain::Zpow2(64) => u64::MAX,
            CoeffDomain::Zpow2(k) => (1u64 << k) - 1,
            CoeffDomain::Gf2 => 1,
            _ => u64::MAX,
        }
    }

    pub fn zero(self) -> Coefficient {
        self.from_i64(0)
    }

    pub fn one(self) -> Coefficient {
        self.from_i64(1)
    }

    pub fn from_i64(self, x: i64) -> Coefficient {
        self.from_bigint(&BigInt::from(x))
    }

    /// Image of an integer under the canonical map `Z -> domain`.
    pub fn from_bigint(self, x: &BigInt) -> Coefficient {
        let repr = match self {
            CoeffDomain::Gf2 => Repr::Small(if x.is_odd() { 1 } else { 0 }),
            CoeffDomain::Gfp(p) => Repr::Small(x.mod_floor(&BigInt::from(p)).to_u64().unwrap()),
            CoeffDomain::Zpow2(k) => {
                let m = BigInt::one() << k;
                Repr::Small(x.mod_floor(&m).to_u64().unwrap())
            }
            CoeffDomain::Rational => Repr::Rat(BigRational::from_integer(x.clone())),
            CoeffDomain::Integer => Repr::Int(x.clone()),
        };
        Coefficient { domain: self, repr }
    }

    /// Image of `num/den`; fails when `den` is not a unit of the domain.
    pub fn from_ratio(self, num: &BigInt, den: &BigInt) -> Result<Coefficient, CoeffError> {
        if den.is_zero() {
            return Err(CoeffError::ZeroInverse);
        }
        match self {
            CoeffDomain::Rational => Ok(Coefficient {
                domain: self,
                repr: Repr::Rat(BigRational::new(num.clone(), den.clone())),
            }),
            CoeffDomain::Integer => {
                let (q, r) = num.div_rem(den);
                if !r.is_zero() {
                    return Err(CoeffError::NotInvertible { value: den.to_string(), domain: self });
                }
                Ok(self.from_bigint(&q))
            }
            _ => {
                let d = self.from_bigint(den).inverse()?;
                self.from_bigint(num).mul(&d)
            }
        }
    }

    /// Parse a coefficient in this domain: a decimal integer or `p/q`.
    pub fn parse_coeff(self, text: &str) -> Result<Coefficient, CoeffError> {
        let err = || CoeffError::Parse { text: text.to_string(), domain: self };
        let t = text.trim();
        match t.split_once('/') {
            None => Ok(self.from_bigint(&BigInt::from_str(t).map_err(|_| err())?)),
            Some((p, q)) => {
                let p = BigInt::from_str(p.trim()).map_err(|_| err())?;
                let q = BigInt::from_str(q.trim()).map_err(|_| err())?;
                if q.is_zero() {
                    return Err(err());
                }
                self.from_ratio(&p, &q).map_err(|_| err())
            }
        }
    }

    /// Iterate the elements of a finite field in the order 0, 1, 2, ...
    pub fn small_elements(self) -> Option<impl Iterator<Item = Coefficient>> {
        let order = match self {
            CoeffDomain::Gf2 | CoeffDomain::Gfp(_) => self.order()? as u64,
            _ => return None,
        };
        Some((0..order).map(move |x| Coefficient { domain: self, repr: Repr::Small(x) }))
    }
}

impl fmt::Display for CoeffDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoeffDomain::Gf2 => write!(f, "Z2"),
            CoeffDomain::Gfp(p) => write!(f, "Zp:{p}"),
            CoeffDomain::Zpow2(k) => write!(f, "Z2^{k}"),
            CoeffDomain::Rational => write!(f, "Q"),
            CoeffDomain::Integer => write!(f, "Z"),
        }
    }
}

impl FromStr for CoeffDomain {
    type Err = CoeffError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CoeffError::InvalidDomain(s.to_string());
        match s.trim() {
            "Z2" => Ok(CoeffDomain::Gf2),
            "Q" => Ok(CoeffDomain::Rational),
            "Z" => Ok(CoeffDomain::Integer),
            t => {
                if let Some(p) = t.strip_prefix("Zp:") {
                    CoeffDomain::gfp(p.parse().map_err(|_| bad())?)
                } else if let Some(k) = t.strip_prefix("Z2^") {
                    CoeffDomain::zpow2(k.parse().map_err(|_| bad())?)
                } else {
                    Err(bad())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Repr {
    Small(u64),
    Int(BigInt),
    Rat(BigRational),
}

/// An element of a [`CoeffDomain`], always stored in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coefficient {
    domain: CoeffDomain,
    repr: Repr,
}

impl Coefficient {
    pub fn domain(&self) -> CoeffDomain {
        self.domain
    }

    pub fn is_zero(&self) -> bool {
        match &self.repr {
            Repr::Small(x) => *x == 0,
            Repr::Int(x) => x.is_zero(),
            Repr::Rat(x) => x.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match &self.repr {
            Repr::Small(x) => *x == 1,
            Repr::Int(x) => x.is_one(),
            Repr::Rat(x) => x.is_one(),
        }
    }

    /// Residue for GF2/GFp/Zpow2 coefficients.
    pub fn residue(&self) -> Option<u64> {
        match self.repr {
            Repr::Small(x) => Some(x),
            _ => None,
        }
    }

    /// Exact rational value for Q and Z coefficients.
    pub fn to_rational(&self) -> Option<BigRational> {
        match &self.repr {
            Repr::Int(x) => Some(BigRational::from_integer(x.clone())),
            Repr::Rat(x) => Some(x.clone()),
            Repr::Small(_) => None,
        }
    }

    /// Integer value for Z coefficients and integral rationals.
    pub fn to_bigint(&self) -> Option<BigInt> {
        match &self.repr {
            Repr::Int(x) => Some(x.clone()),
            Repr::Rat(x) if x.is_integer() => Some(x.to_integer()),
            _ => None,
        }
    }

    fn check(&self, other: &Coefficient) -> Result<(), CoeffError> {
        if self.domain != other.domain {
            return Err(CoeffError::DomainMismatch(self.domain, other.domain));
        }
        Ok(())
    }

    pub fn add(&self, other: &Coefficient) -> Result<Coefficient, CoeffError> {
        self.check(other)?;
        Ok(self.add_unchecked(other))
    }

    pub fn sub(&self, other: &Coefficient) -> Result<Coefficient, CoeffError> {
        self.check(other)?;
        Ok(self.add_unchecked(&other.neg()))
    }

    pub fn mul(&self, other: &Coefficient) -> Result<Coefficient, CoeffError> {
        self.check(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub fn neg(&self) -> Coefficient {
        let repr = match (&self.repr, self.domain) {
            (Repr::Small(x), CoeffDomain::Gf2) => Repr::Small(*x),
            (Repr::Small(x), CoeffDomain::Gfp(p)) => Repr::Small(if *x == 0 { 0 } else { p - x }),
            (Repr::Small(x), d) => Repr::Small(x.wrapping_neg() & d.mask()),
            (Repr::Int(x), _) => Repr::Int(-x),
            (Repr::Rat(x), _) => Repr::Rat(-x),
        };
        Coefficient { domain: self.domain, repr }
    }

    pub(crate) fn add_unchecked(&self, other: &Coefficient) -> Coefficient {
        let repr = match (&self.repr, &other.repr, self.domain) {
            (Repr::Small(a), Repr::Small(b), CoeffDomain::Gf2) => Repr::Small(a ^ b),
            (Repr::Small(a), Repr::Small(b), CoeffDomain::Gfp(p)) => {
                Repr::Small(((*a as u128 + *b as u128) % p as u128) as u64)
            }
            (Repr::Small(a), Repr::Small(b), d) => Repr::Small(a.wrapping_add(*b) & d.mask()),
            (Repr::Int(a), Repr::Int(b), _) => Repr::Int(a + b),
            (Repr::Rat(a), Repr::Rat(b), _) => Repr::Rat(a + b),
            _ => unreachable!("coefficient representation does not match its domain"),
        };
        Coefficient { domain: self.domain, repr }
    }

    pub(crate) fn mul_unchecked(&self, other: &Coefficient) -> Coefficient {
        let repr = match (&self.repr, &other.repr, self.domain) {
            (Repr::Small(a), Repr::Small(b), CoeffDomain::Gf2) => Repr::Small(a & b),
            (Repr::Small(a), Repr::Small(b), CoeffDomain::Gfp(p)) => {
                Repr::Small(((*a as u128 * *b as u128) % p as u128) as u64)
            }
            (Repr::Small(a), Repr::Small(b), d) => Repr::Small(a.wrapping_mul(*b) & d.mask()),
            (Repr::Int(a), Repr::Int(b), _) => Repr::Int(a * b),
            (Repr::Rat(a), Repr::Rat(b), _) => Repr::Rat(a * b),
            _ => unreachable!("coefficient representation does not match its domain"),
        };
        Coefficient { domain: self.domain, repr }
    }

    /// Multiplicative inverse.
    ///
    /// Zpow2 elements are inverted by Newton iteration `x <- x(2 - ax)`,
    /// which doubles the number of correct low bits per step.
    pub fn inverse(&self) -> Result<Coefficient, CoeffError> {
        if self.is_zero() {
            return Err(CoeffError::ZeroInverse);
        }
        let not_inv = || CoeffError::NotInvertible { value: self.to_string(), domain: self.domain };
        let repr = match (&self.repr, self.domain) {
            (Repr::Small(_), CoeffDomain::Gf2) => Repr::Small(1),
            (Repr::Small(a), CoeffDomain::Gfp(p)) => Repr::Small(pow_mod(*a, p - 2, p)),
            (Repr::Small(a), d @ CoeffDomain::Zpow2(_)) => {
                if a % 2 == 0 {
                    return Err(not_inv());
                }
                let mut x: u64 = 1;
                for _ in 0..7 {
                    x = x.wrapping_mul(2u64.wrapping_sub(a.wrapping_mul(x)));
                }
                Repr::Small(x & d.mask())
            }
            (Repr::Int(a), _) => {
                if a.abs().is_one() {
                    Repr::Int(a.clone())
                } else {
                    return Err(not_inv());
                }
            }
            (Repr::Rat(a), _) => Repr::Rat(a.recip()),
            _ => unreachable!("coefficient representation does not match its domain"),
        };
        Ok(Coefficient { domain: self.domain, repr })
    }

    pub fn is_invertible(&self) -> bool {
        self.inverse().is_ok()
    }

    pub fn div(&self, other: &Coefficient) -> Result<Coefficient, CoeffError> {
        self.check(other)?;
        Ok(self.mul_unchecked(&other.inverse()?))
    }

    pub fn pow(&self, mut e: u32) -> Coefficient {
        let mut base = self.clone();
        let mut acc = self.domain.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_unchecked(&base);
            }
            base = base.mul_unchecked(&base);
            e >>= 1;
        }
        acc
    }

    /// Reinterpret a Z2^k residue as an element of Z2^j for `j <= k`, or
    /// reduce an integer into a residue domain.
    pub fn reduce_into(&self, target: CoeffDomain) -> Result<Coefficient, CoeffError> {
        match (&self.repr, self.domain, target) {
            (Repr::Small(x), CoeffDomain::Zpow2(k), CoeffDomain::Zpow2(j)) if j <= k => {
                Ok(Coefficient { domain: target, repr: Repr::Small(x & target.mask()) })
            }
            (Repr::Small(x), CoeffDomain::Zpow2(_), CoeffDomain::Gf2) => {
                Ok(Coefficient { domain: target, repr: Repr::Small(x & 1) })
            }
            (Repr::Small(x), CoeffDomain::Gf2, _) => Ok(target.from_i64(*x as i64)),
            (Repr::Int(x), _, _) => Ok(target.from_bigint(x)),
            (Repr::Rat(x), _, _) => target.from_ratio(x.numer(), x.denom()),
            _ => Err(CoeffError::DomainMismatch(self.domain, target)),
        }
    }

    /// Canonical ordering within one domain (residues numerically,
    /// integers and rationals by value).
    pub fn cmp_value(&self, other: &Coefficient) -> Ordering {
        match (&self.repr, &other.repr) {
            (Repr::Small(a), Repr::Small(b)) => a.cmp(b),
            (Repr::Int(a), Repr::Int(b)) => a.cmp(b),
            (Repr::Rat(a), Repr::Rat(b)) => a.cmp(b),
            _ => self.domain.to_string().cmp(&other.domain.to_string()),
        }
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Small(x) => write!(f, "{x}"),
            Repr::Int(x) => write!(f, "{x}"),
            Repr::Rat(x) if x.is_integer() => write!(f, "{}", x.numer()),
            Repr::Rat(x) => write!(f, "{}/{}", x.numer(), x.denom()),
        }
    }
}

/// Binary arithmetic entry point mirroring the four ring operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Neg,
}

pub fn arith(op: ArithOp, a: &Coefficient, b: &Coefficient) -> Result<Coefficient, CoeffError> {
    match op {
        ArithOp::Add => a.add(b),
        ArithOp::Sub => a.sub(b),
        ArithOp::Mul => a.mul(b),
        ArithOp::Neg => {
            a.check(b)?;
            Ok(a.neg())
        }
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin; the witness set is exact for all 64-bit inputs.
pub fn is_prime_u64(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'outer: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Extended Euclid on i128, independent of the Newton inversion above.
    fn egcd_inverse(a: i128, m: i128) -> Option<i128> {
        let (mut r0, mut r1) = (m, a.rem_euclid(m));
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        (r0 == 1).then(|| t0.rem_euclid(m))
    }

    #[test]
    fn small_examples() {
        let z2 = CoeffDomain::Gf2;
        assert!(z2.one().add(&z2.one()).unwrap().is_zero());

        let q = CoeffDomain::Rational;
        let half = q.parse_coeff("1/2").unwrap();
        assert!(half.add(&half).unwrap().is_one());

        let z20 = CoeffDomain::zpow2(20).unwrap();
        let inv3 = egcd_inverse(3, 1 << 20).unwrap();
        assert_eq!(inv3, 699051);
        let prod = z20.from_i64(3).mul(&z20.from_i64(699051)).unwrap();
        assert!(prod.is_one());
        assert_eq!(z20.from_i64(3).inverse().unwrap().residue(), Some(699051));

        let f5 = CoeffDomain::gfp(5).unwrap();
        assert_eq!(f5.from_i64(2).inverse().unwrap(), f5.from_i64(3));
        assert_eq!(z2.one().inverse().unwrap(), z2.one());
    }

    #[test]
    fn inverse_errors() {
        let z20 = CoeffDomain::zpow2(20).unwrap();
        assert!(matches!(z20.from_i64(6).inverse(), Err(CoeffError::NotInvertible { .. })));
        assert_eq!(CoeffDomain::Rational.zero().inverse(), Err(CoeffError::ZeroInverse));
        let z = CoeffDomain::Integer;
        assert!(z.from_i64(2).inverse().is_err());
        assert_eq!(z.from_i64(-1).inverse().unwrap(), z.from_i64(-1));
    }

    #[test]
    fn domain_mismatch_rejected() {
        let a = CoeffDomain::Gf2.one();
        let b = CoeffDomain::Rational.one();
        assert!(matches!(a.add(&b), Err(CoeffError::DomainMismatch(..))));
        assert!(arith(ArithOp::Mul, &a, &b).is_err());
    }

    #[test]
    fn domain_syntax() {
        for s in ["Z2", "Zp:5", "Z2^20", "Q", "Z", "Z2^64", "Zp:7"] {
            let d: CoeffDomain = s.parse().unwrap();
            assert_eq!(d.to_string(), s);
        }
        for s in ["Zp:4", "Zp:2", "Z2^0", "Z2^65", "R", "Zp:x"] {
            assert!(s.parse::<CoeffDomain>().is_err(), "{s}");
        }
    }

    #[test]
    fn zpow2_inverse_matches_euclid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in [1u32, 5, 20, 33, 63, 64] {
            let d = CoeffDomain::zpow2(k).unwrap();
            for _ in 0..200 {
                let a = rng.gen::<u64>() | 1;
                let c = d.from_bigint(&BigInt::from(a));
                let inv = c.inverse().unwrap();
                assert!(c.mul(&inv).unwrap().is_one());
                if k <= 62 {
                    let m = 1i128 << k;
                    let expect = egcd_inverse(a as i128, m).unwrap();
                    assert_eq!(inv.residue().unwrap() as i128, expect);
                }
            }
        }
    }

    #[test]
    fn canonical_parse() {
        let f7 = CoeffDomain::gfp(7).unwrap();
        assert_eq!(f7.parse_coeff("-1").unwrap().to_string(), "6");
        assert_eq!(f7.parse_coeff("1/2").unwrap().to_string(), "4");
        let q = CoeffDomain::Rational;
        assert_eq!(q.parse_coeff("4/-6").unwrap().to_string(), "-2/3");
        assert_eq!(q.parse_coeff("6/3").unwrap().to_string(), "2");
        assert!(q.parse_coeff("1/0").is_err());
        assert!(CoeffDomain::Integer.parse_coeff("1/2").is_err());
        let z8 = CoeffDomain::zpow2(3).unwrap();
        assert_eq!(z8.parse_coeff("-1").unwrap().to_string(), "7");
    }

    #[test]
    fn primality() {
        let primes: Vec<u64> = (0..60).filter(|&n| is_prime_u64(n)).collect();
        assert_eq!(primes, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]);
        assert!(is_prime_u64(18446744073709551557));
        assert!(!is_prime_u64(3215031751));
    }
}
