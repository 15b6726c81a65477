//! Hensel lifting of GF(2) schemes to `Z/2^k`, rational reconstruction,
//! and classification of the resulting denominators.
//!
//! Lifting solves the Brent equations `Σ_t u_t[i] v_t[j] w_t[l] = δ_{i+j,l}`
//! stage by stage. At stage `t` the residual is `2^t g`; the correction
//! `Δ` solves `J Δ ≡ g (mod 2)` with `J` the Jacobian at the GF(2) scheme,
//! and the point moves by `2^t Δ`.
//!
//! Pivot rule: Jacobian columns are ordered w-block, u-block, v-block
//! (term-major inside each block); the particular solution sets every
//! non-pivot variable to zero. Non-pivot coordinates therefore keep their
//! GF(2) values throughout, and when every w-coordinate is a pivot the
//! lifted w solves a linear system over `Z` with odd determinant, which is
//! what makes rational reconstruction succeed.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use thiserror::Error;

use crate::coeff::{CoeffDomain, CoeffError};
use crate::gf2::{BitMatrix, Gf2Solver};
use crate::tensor::{is_multiplication_tensor, CoeffVector, Scheme, TensorError, Term};

pub const PIVOT_RULE: &str = "columns w,u,v term-major; free variables fixed at their GF(2) values";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LiftError {
    #[error("expected a scheme over {expected}, got {found}")]
    Domain { expected: String, found: CoeffDomain },
    #[error("input does not contract to the multiplication tensor")]
    NotVerified,
    #[error("lifting target 2^{0} outside 1..=64")]
    Exponent(u32),
    #[error("Jacobian system inconsistent at stage {stage}")]
    Singular { stage: u32 },
    #[error("coefficient {value} has no fraction with numerator and denominator at most {bound}")]
    NoFraction { value: u64, bound: u64 },
    #[error("reconstructed scheme fails exact verification over Q")]
    ReconstructionInvalid,
    #[error("denominator {0} is even, impossible for a lift from GF(2)")]
    EvenDenominator(BigInt),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

struct Layout {
    n: usize,
    m: usize,
    r: usize,
}

impl Layout {
    fn lens(&self) -> [usize; 3] {
        [self.n + 1, self.m + 1, self.n + self.m + 1]
    }

    fn vars(&self) -> usize {
        self.r * (2 * (self.n + self.m) + 3)
    }

    /// Column of coordinate `idx` of slot `slot` (0 = u, 1 = v, 2 = w) of term `t`.
    fn var(&self, t: usize, slot: usize, idx: usize) -> usize {
        let [lu, lv, lw] = self.lens();
        match slot {
            2 => t * lw + idx,
            0 => self.r * lw + t * lu + idx,
            _ => self.r * (lw + lu) + t * lv + idx,
        }
    }

    fn eq(&self, i: usize, j: usize, l: usize) -> usize {
        let [_, lv, lw] = self.lens();
        (i * lv + j) * lw + l
    }

    fn eqs(&self) -> usize {
        let [lu, lv, lw] = self.lens();
        lu * lv * lw
    }
}

/// Brent residuals `Σ_t u v w − δ` modulo `2^64` (callers mask).
fn residuals(lay: &Layout, x: &[u64]) -> Vec<u64> {
    let [lu, lv, lw] = lay.lens();
    let mut res = vec![0u64; lay.eqs()];
    for t in 0..lay.r {
        for i in 0..lu {
            let a = x[lay.var(t, 0, i)];
            if a == 0 {
                continue;
            }
            for j in 0..lv {
                let ab = a.wrapping_mul(x[lay.var(t, 1, j)]);
                if ab == 0 {
                    continue;
                }
                for l in 0..lw {
                    let e = lay.eq(i, j, l);
                    res[e] = res[e].wrapping_add(ab.wrapping_mul(x[lay.var(t, 2, l)]));
                }
            }
        }
    }
    for i in 0..lu {
        for j in 0..lv {
            let e = lay.eq(i, j, i + j);
            res[e] = res[e].wrapping_sub(1);
        }
    }
    res
}

fn mask(k: u32) -> u64 {
    if k == 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

/// Lift a verified GF(2) scheme to one over `Z/2^k` congruent to it mod 2.
pub fn hensel_lift(s: &Scheme, k: u32) -> Result<Scheme, LiftError> {
    if s.domain() != CoeffDomain::Gf2 {
        return Err(LiftError::Domain { expected: "Z2".into(), found: s.domain() });
    }
    if !(1..=64).contains(&k) {
        return Err(LiftError::Exponent(k));
    }
    if !is_multiplication_tensor(s) {
        return Err(LiftError::NotVerified);
    }
    let lay = Layout { n: s.n(), m: s.m(), r: s.rank() };
    let lens = lay.lens();
    let mut x = vec![0u64; lay.vars()];
    for (t, term) in s.terms().iter().enumerate() {
        for (slot, v) in [&term.u, &term.v, &term.w].into_iter().enumerate() {
            for idx in 0..v.len() {
                x[lay.var(t, slot, idx)] = v.get(idx).residue().expect("GF(2) residue");
            }
        }
    }

    let mut jac = BitMatrix::zeros(lay.eqs(), lay.vars());
    for t in 0..lay.r {
        for i in 0..lens[0] {
            for j in 0..lens[1] {
                for l in 0..lens[2] {
                    let (a, b, c) = (x[lay.var(t, 0, i)], x[lay.var(t, 1, j)], x[lay.var(t, 2, l)]);
                    let e = lay.eq(i, j, l);
                    jac.set(e, lay.var(t, 0, i), b & c == 1);
                    jac.set(e, lay.var(t, 1, j), a & c == 1);
                    jac.set(e, lay.var(t, 2, l), a & b == 1);
                }
            }
        }
    }
    let solver = Gf2Solver::new(&jac);

    for stage in 1..k {
        let res = residuals(&lay, &x);
        debug_assert!(res.iter().all(|&r| r & mask(stage) == 0), "residual not divisible by 2^{stage}");
        let g: Vec<bool> = res.iter().map(|&r| (r >> stage) & 1 == 1).collect();
        if g.iter().all(|&b| !b) {
            continue;
        }
        let delta = solver.solve(&g).ok_or(LiftError::Singular { stage })?;
        for (xv, d) in x.iter_mut().zip(delta) {
            if d {
                *xv = xv.wrapping_add(1u64 << stage);
            }
        }
    }
    if residuals(&lay, &x).iter().any(|&r| r & mask(k) != 0) {
        return Err(LiftError::Singular { stage: k });
    }

    let d = CoeffDomain::zpow2(k)?;
    let mut out = Scheme::empty(s.n(), s.m(), d);
    for t in 0..lay.r {
        let vec = |slot: usize| {
            let entries = (0..lens[slot]).map(|idx| d.from_bigint(&BigInt::from(x[lay.var(t, slot, idx)] & mask(k)))).collect();
            CoeffVector::from_entries(d, entries)
        };
        out.push(Term::new(vec(0)?, vec(1)?, vec(2)?))?;
    }
    Ok(out)
}

/// `⌊√((2^k − 1)/2)⌋`.
pub fn reconstruction_bound(k: u32) -> u64 {
    let half = (((1u128 << k) - 1) / 2) as u64;
    let mut b = (half as f64).sqrt() as u64;
    while (b as u128 + 1) * (b as u128 + 1) <= half as u128 {
        b += 1;
    }
    while b as u128 * b as u128 > half as u128 {
        b -= 1;
    }
    b
}

/// The fraction `p/q` with `|p|, q <= bound`, `q` odd, `p ≡ a q (mod 2^k)`.
pub fn rational_reconstruct(a: u64, k: u32) -> Option<(i128, i128)> {
    let modulus = 1i128 << k;
    let bound = reconstruction_bound(k) as i128;
    let (mut r0, mut r1) = (modulus, (a as i128).rem_euclid(modulus));
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 > bound {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if s1.abs() > bound || s1 % 2 == 0 || r1.gcd(&s1) != 1 {
        return None;
    }
    Some(if s1 < 0 { (-r1, -s1) } else { (r1, s1) })
}

/// Replace every coefficient by its reconstructed fraction and verify the
/// result exactly over `Q`.
pub fn rational_reconstruct_scheme(s: &Scheme) -> Result<Scheme, LiftError> {
    let CoeffDomain::Zpow2(k) = s.domain() else {
        return Err(LiftError::Domain { expected: "Z2^k".into(), found: s.domain() });
    };
    let q = CoeffDomain::Rational;
    let conv = |v: &CoeffVector| -> Result<CoeffVector, LiftError> {
        let mut entries = Vec::with_capacity(v.len());
        for c in v.entries() {
            let a = c.residue().expect("residue");
            let (p, d) = rational_reconstruct(a, k).ok_or(LiftError::NoFraction { value: a, bound: reconstruction_bound(k) })?;
            entries.push(q.from_ratio(&BigInt::from(p), &BigInt::from(d))?);
        }
        Ok(CoeffVector::from_entries(q, entries)?)
    };
    let mut out = Scheme::empty(s.n(), s.m(), q);
    for t in s.terms() {
        out.push(Term::new(conv(&t.u)?, conv(&t.v)?, conv(&t.w)?))?;
    }
    if !is_multiplication_tensor(&out) {
        return Err(LiftError::ReconstructionInvalid);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    Integer,
    /// Coefficients in `Z[1/d]`.
    Localized { d: BigInt, primes: Vec<u64> },
}

fn prime_factors(d: &BigInt) -> Vec<u64> {
    let mut x = d.to_u64().expect("denominator fits in 64 bits");
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= x {
        if x.is_multiple_of(p) {
            out.push(p);
            while x.is_multiple_of(p) {
                x /= p;
            }
        }
        p += 1;
    }
    if x > 1 {
        out.push(x);
    }
    out
}

/// Least common multiple of all denominators and its prime support.
pub fn classify_coefficients(s: &Scheme) -> Result<Classification, LiftError> {
    if s.domain() != CoeffDomain::Rational {
        return Err(LiftError::Domain { expected: "Q".into(), found: s.domain() });
    }
    let mut d = BigInt::one();
    for t in s.terms() {
        for v in [&t.u, &t.v, &t.w] {
            for c in v.entries() {
                d = d.lcm(c.to_rational().expect("rational").denom());
            }
        }
    }
    if d.is_one() {
        return Ok(Classification::Integer);
    }
    if d.is_even() {
        return Err(LiftError::EvenDenominator(d));
    }
    let primes = prime_factors(&d);
    Ok(Classification::Localized { d, primes })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LiftOutcome {
    LiftedToZ,
    LiftedToQ { denominator_lcm: BigInt },
    LiftedMod2kOnly,
    Failed { stage: u32, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftReport {
    pub outcome: LiftOutcome,
    pub k: u32,
    pub pivot_rule: &'static str,
    /// The `Z/2^k` scheme when lifting succeeded.
    pub modular: Option<Scheme>,
    /// The final scheme over `Z` or `Q` when reconstruction succeeded.
    pub scheme: Option<Scheme>,
}

/// Lift, reconstruct, classify; integral results are returned over `Z`
/// and re-verified there.
pub fn lift_pipeline(s: &Scheme, k: u32) -> LiftReport {
    let report = |outcome, modular, scheme| LiftReport { outcome, k, pivot_rule: PIVOT_RULE, modular, scheme };
    let modular = match hensel_lift(s, k) {
        Ok(m) => m,
        Err(LiftError::Singular { stage }) => {
            return report(LiftOutcome::Failed { stage, reason: "Jacobian system inconsistent".into() }, None, None)
        }
        Err(e) => return report(LiftOutcome::Failed { stage: 0, reason: e.to_string() }, None, None),
    };
    let Ok(rational) = rational_reconstruct_scheme(&modular) else {
        return report(LiftOutcome::LiftedMod2kOnly, Some(modular), None);
    };
    match classify_coefficients(&rational) {
        Ok(Classification::Integer) => match rational.map_domain(CoeffDomain::Integer) {
            Ok(z) if is_multiplication_tensor(&z) => report(LiftOutcome::LiftedToZ, Some(modular), Some(z)),
            _ => report(LiftOutcome::Failed { stage: k, reason: "integer scheme fails verification".into() }, Some(modular), None),
        },
        Ok(Classification::Localized { d, .. }) => {
            report(LiftOutcome::LiftedToQ { denominator_lcm: d }, Some(modular), Some(rational))
        }
        Err(e) => report(LiftOutcome::Failed { stage: k, reason: e.to_string() }, Some(modular), None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{karatsuba, standard_scheme};
    use num_traits::Signed;

    // Extended-Euclid oracle for inverses modulo 2^k.
    fn inv_mod(a: i128, m: i128) -> i128 {
        let (mut r0, mut r1, mut s0, mut s1) = (m, a, 0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (s0, s1) = (s1, s0 - q * s1);
        }
        s0.rem_euclid(m)
    }

    #[test]
    fn bound_for_twenty_bits() {
        assert_eq!(reconstruction_bound(20), 724);
    }

    #[test]
    fn reconstruction_examples() {
        assert_eq!(rational_reconstruct((1 << 20) - 1, 20), Some((-1, 1)));
        assert_eq!(inv_mod(3, 1 << 20), 699051);
        assert_eq!(rational_reconstruct(699051, 20), Some((1, 3)));
        assert_eq!(rational_reconstruct(0, 20), Some((0, 1)));
        let a = 724 * 1000;
        assert_eq!(rational_reconstruct(a, 20), None);
        // exhaustive oracle: no odd q <= 724 gives a small numerator
        let m = 1i128 << 20;
        for q in (1..=724i128).step_by(2) {
            let p = (a as i128 * q).rem_euclid(m);
            let centred = if p > m / 2 { p - m } else { p };
            assert!(centred.abs() > 724, "q = {q}");
        }
    }

    #[test]
    fn reconstruction_matches_oracle_on_small_fractions() {
        let m = 1i128 << 20;
        for p in -30i128..=30 {
            for q in (1..=31i128).step_by(2) {
                if p.gcd(&q) != 1 {
                    continue;
                }
                let a = (p.rem_euclid(m) * inv_mod(q, m)).rem_euclid(m) as u64;
                assert_eq!(rational_reconstruct(a, 20), Some((p, q)));
            }
        }
    }

    #[test]
    fn karatsuba_lifts_to_integers() {
        let g = karatsuba(CoeffDomain::Gf2);
        let lifted = hensel_lift(&g, 20).unwrap();
        assert!(is_multiplication_tensor(&lifted));
        assert_eq!(lifted.map_domain(CoeffDomain::Gf2).unwrap(), g);
        let q = rational_reconstruct_scheme(&lifted).unwrap();
        for t in q.terms() {
            for v in [&t.u, &t.v, &t.w] {
                for c in v.entries() {
                    let r = c.to_rational().unwrap();
                    assert!(r.is_integer() && r.numer().abs() <= BigInt::from(1));
                }
            }
        }
        assert_eq!(classify_coefficients(&q).unwrap(), Classification::Integer);
        let rep = lift_pipeline(&g, 20);
        assert_eq!(rep.outcome, LiftOutcome::LiftedToZ);
        assert_eq!(rep.scheme.unwrap(), karatsuba(CoeffDomain::Integer));
    }

    #[test]
    fn integral_gf2_scheme_is_stationary() {
        let s = standard_scheme(2, 1, CoeffDomain::Gf2);
        let lifted = hensel_lift(&s, 20).unwrap();
        assert_eq!(lifted, standard_scheme(2, 1, CoeffDomain::zpow2(20).unwrap()));
    }

    #[test]
    fn classification() {
        let q = CoeffDomain::Rational;
        let mk = |dens: &[i64]| {
            let mut s = standard_scheme(0, 0, q);
            for &d in dens {
                let c = q.from_ratio(&BigInt::from(1), &BigInt::from(d)).unwrap();
                let v = CoeffVector::from_entries(q, vec![c]).unwrap();
                s.push(Term::new(v.clone(), v.clone(), v)).unwrap();
            }
            s
        };
        assert_eq!(classify_coefficients(&mk(&[])).unwrap(), Classification::Integer);
        assert_eq!(
            classify_coefficients(&mk(&[3, 5, 7, 15])).unwrap(),
            Classification::Localized { d: BigInt::from(105), primes: vec![3, 5, 7] }
        );
        assert!(matches!(classify_coefficients(&mk(&[2])), Err(LiftError::EvenDenominator(_))));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(hensel_lift(&karatsuba(CoeffDomain::Integer), 20), Err(LiftError::Domain { .. })));
        let mut broken = standard_scheme(1, 1, CoeffDomain::Gf2).terms().to_vec();
        broken.pop();
        let broken = Scheme::new(1, 1, CoeffDomain::Gf2, broken).unwrap();
        assert_eq!(hensel_lift(&broken, 20), Err(LiftError::NotVerified));
        assert!(matches!(rational_reconstruct_scheme(&karatsuba(CoeffDomain::Gf2)), Err(LiftError::Domain { .. })));
    }
}
