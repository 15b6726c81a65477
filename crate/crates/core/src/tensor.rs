//! Schemes: sums of rank-one terms `u ⊗ v ⊗ w` representing the
//! polynomial multiplication tensor `T_{n,m} = Σ a_i ⊗ b_j ⊗ c_{i+j}`.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::coeff::{CoeffDomain, CoeffError, Coefficient};
use crate::gf2::BitMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TensorError {
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error("term {term}: slot {slot} has length {found}, expected {expected}")]
    Length { term: usize, slot: Slot, found: usize, expected: usize },
    #[error("term {0} is not over the scheme domain")]
    TermDomain(usize),
    #[error("operation needs a field, got {0}")]
    NotAField(CoeffDomain),
}

/// One of the three tensor factors of a term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    U,
    V,
    W,
}

impl Slot {
    pub const ALL: [Slot; 3] = [Slot::U, Slot::V, Slot::W];

    pub fn index(self) -> usize {
        self as usize
    }

    /// The two slots other than `self`, in U, V, W order.
    pub fn others(self) -> [Slot; 2] {
        match self {
            Slot::U => [Slot::V, Slot::W],
            Slot::V => [Slot::U, Slot::W],
            Slot::W => [Slot::U, Slot::V],
        }
    }

    /// The slot different from both `a` and `b`.
    pub fn third(a: Slot, b: Slot) -> Slot {
        debug_assert_ne!(a, b);
        Slot::ALL.into_iter().find(|&s| s != a && s != b).unwrap()
    }

    pub fn name(self) -> &'static str {
        match self {
            Slot::U => "u",
            Slot::V => "v",
            Slot::W => "w",
        }
    }

    pub fn from_name(s: &str) -> Option<Slot> {
        match s {
            "u" => Some(Slot::U),
            "v" => Some(Slot::V),
            "w" => Some(Slot::W),
            _ => None,
        }
    }

    /// Exchange the roles of the a- and b-sides.
    pub fn swap_uv(self) -> Slot {
        match self {
            Slot::U => Slot::V,
            Slot::V => Slot::U,
            Slot::W => Slot::W,
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Coordinates of one tensor factor in the monomial basis
/// (`a_0..a_n`, `b_0..b_m` or `c_0..c_{n+m}`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoeffVector {
    domain: CoeffDomain,
    entries: Vec<Coefficient>,
}

impl CoeffVector {
    pub fn zeros(domain: CoeffDomain, len: usize) -> Self {
        CoeffVector { domain, entries: vec![domain.zero(); len] }
    }

    pub fn unit(domain: CoeffDomain, len: usize, idx: usize) -> Self {
        let mut v = Self::zeros(domain, len);
        v.entries[idx] = domain.one();
        v
    }

    pub fn from_entries(domain: CoeffDomain, entries: Vec<Coefficient>) -> Result<Self, CoeffError> {
        if let Some(bad) = entries.iter().find(|c| c.domain() != domain) {
            return Err(CoeffError::DomainMismatch(domain, bad.domain()));
        }
        Ok(CoeffVector { domain, entries })
    }

    pub fn from_i64s(domain: CoeffDomain, xs: &[i64]) -> Self {
        CoeffVector { domain, entries: xs.iter().map(|&x| domain.from_i64(x)).collect() }
    }

    /// GF(2) vector from the low `len` bits of `bits`.
    pub fn from_bits(len: usize, bits: u64) -> Self {
        let d = CoeffDomain::Gf2;
        CoeffVector { domain: d, entries: (0..len).map(|i| d.from_i64(((bits >> i) & 1) as i64)).collect() }
    }

    pub fn domain(&self) -> CoeffDomain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Coefficient] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> &Coefficient {
        &self.entries[i]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Coefficient::is_zero)
    }

    pub fn first_nonzero(&self) -> Option<(usize, &Coefficient)> {
        self.entries.iter().enumerate().find(|(_, c)| !c.is_zero())
    }

    /// Bit pattern of a GF(2) vector (entry `i` is bit `i`).
    pub fn to_bits(&self) -> Option<u64> {
        if self.domain != CoeffDomain::Gf2 || self.len() > 64 {
            return None;
        }
        Some(self.entries.iter().enumerate().fold(0, |acc, (i, c)| acc | (c.residue().unwrap() << i)))
    }

    fn check(&self, other: &CoeffVector) -> Result<(), CoeffError> {
        if self.domain != other.domain {
            return Err(CoeffError::DomainMismatch(self.domain, other.domain));
        }
        assert_eq!(self.len(), other.len(), "vector length mismatch");
        Ok(())
    }

    pub fn add(&self, other: &CoeffVector) -> Result<CoeffVector, CoeffError> {
        self.check(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a.add_unchecked(b)).collect();
        Ok(CoeffVector { domain: self.domain, entries })
    }

    pub fn sub(&self, other: &CoeffVector) -> Result<CoeffVector, CoeffError> {
        self.check(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a.add_unchecked(&b.neg())).collect();
        Ok(CoeffVector { domain: self.domain, entries })
    }

    pub fn scale(&self, s: &Coefficient) -> Result<CoeffVector, CoeffError> {
        if s.domain() != self.domain {
            return Err(CoeffError::DomainMismatch(self.domain, s.domain()));
        }
        Ok(CoeffVector { domain: self.domain, entries: self.entries.iter().map(|a| a.mul_unchecked(s)).collect() })
    }

    /// `self + s * other`
    pub fn axpy(&self, s: &Coefficient, other: &CoeffVector) -> Result<CoeffVector, CoeffError> {
        self.add(&other.scale(s)?)
    }

    pub fn neg(&self) -> CoeffVector {
        CoeffVector { domain: self.domain, entries: self.entries.iter().map(Coefficient::neg).collect() }
    }

    /// Value of the polynomial `Σ e_i x^i` at `x`.
    pub fn eval(&self, x: &Coefficient) -> Result<Coefficient, CoeffError> {
        let mut acc = self.domain.zero();
        for c in self.entries.iter().rev() {
            acc = acc.mul(x)?.add(c)?;
        }
        Ok(acc)
    }

    /// Zero-padded copy with entries moved up by `offset`.
    pub fn shifted(&self, offset: usize, new_len: usize) -> Option<CoeffVector> {
        if self.len() + offset > new_len {
            // allow trailing zeros to be dropped
            let last = self.entries.iter().rposition(|c| !c.is_zero()).map_or(0, |p| p + 1);
            if last + offset > new_len {
                return None;
            }
        }
        let mut out = Self::zeros(self.domain, new_len);
        for (i, c) in self.entries.iter().enumerate() {
            if !c.is_zero() {
                out.entries[i + offset] = c.clone();
            }
        }
        Some(out)
    }

    pub fn map_domain(&self, target: CoeffDomain) -> Result<CoeffVector, CoeffError> {
        let entries = self.entries.iter().map(|c| c.reduce_into(target)).collect::<Result<_, _>>()?;
        Ok(CoeffVector { domain: target, entries })
    }

    fn cmp_lex(&self, other: &CoeffVector) -> Ordering {
        for (a, b) in self.entries.iter().zip(&other.entries) {
            match a.cmp_value(b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        self.len().cmp(&other.len())
    }
}

impl fmt::Display for CoeffVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

/// A rank-one tensor `u ⊗ v ⊗ w`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    pub u: CoeffVector,
    pub v: CoeffVector,
    pub w: CoeffVector,
}

impl Term {
    pub fn new(u: CoeffVector, v: CoeffVector, w: CoeffVector) -> Self {
        Term { u, v, w }
    }

    pub fn slot(&self, s: Slot) -> &CoeffVector {
        match s {
            Slot::U => &self.u,
            Slot::V => &self.v,
            Slot::W => &self.w,
        }
    }

    pub fn slot_mut(&mut self, s: Slot) -> &mut CoeffVector {
        match s {
            Slot::U => &mut self.u,
            Slot::V => &mut self.v,
            Slot::W => &mut self.w,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.u.is_zero() || self.v.is_zero() || self.w.is_zero()
    }

    pub fn domain(&self) -> CoeffDomain {
        self.u.domain()
    }

    fn cmp_lex(&self, other: &Term) -> Ordering {
        self.u
            .cmp_lex(&other.u)
            .then_with(|| self.v.cmp_lex(&other.v))
            .then_with(|| self.w.cmp_lex(&other.w))
    }
}

/// A list of rank-one terms meant to sum to `T_{n,m}`. Zero terms are
/// never stored, so `rank()` is the term count.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scheme {
    n: usize,
    m: usize,
    domain: CoeffDomain,
    terms: Vec<Term>,
}

impl Scheme {
    pub fn empty(n: usize, m: usize, domain: CoeffDomain) -> Self {
        Scheme { n, m, domain, terms: Vec::new() }
    }

    /// Validate lengths and domains; zero terms are dropped.
    pub fn new(n: usize, m: usize, domain: CoeffDomain, terms: Vec<Term>) -> Result<Self, TensorError> {
        let mut s = Scheme::empty(n, m, domain);
        for t in terms {
            s.push(t)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, t: Term) -> Result<(), TensorError> {
        let idx = self.terms.len();
        for (slot, expected) in [(Slot::U, self.n + 1), (Slot::V, self.m + 1), (Slot::W, self.n + self.m + 1)] {
            let found = t.slot(slot).len();
            if found != expected {
                return Err(TensorError::Length { term: idx, slot, found, expected });
            }
            if t.slot(slot).domain() != self.domain {
                return Err(TensorError::TermDomain(idx));
            }
        }
        if !t.is_zero() {
            self.terms.push(t);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn domain(&self) -> CoeffDomain {
        self.domain
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    pub fn slot_len(&self, s: Slot) -> usize {
        match s {
            Slot::U => self.n + 1,
            Slot::V => self.m + 1,
            Slot::W => self.n + self.m + 1,
        }
    }

    pub(crate) fn terms_mut(&mut self) -> &mut Vec<Term> {
        &mut self.terms
    }

    /// Concatenate the terms of two schemes of the same shape.
    pub fn union(&self, other: &Scheme) -> Result<Scheme, TensorError> {
        assert_eq!((self.n, self.m), (other.n, other.m), "shape mismatch");
        let mut out = self.clone();
        for t in other.terms() {
            out.push(t.clone())?;
        }
        Ok(out)
    }

    /// Reinterpret all coefficients in another domain (e.g. Z -> Z2).
    pub fn map_domain(&self, target: CoeffDomain) -> Result<Scheme, TensorError> {
        let mut out = Scheme::empty(self.n, self.m, target);
        for t in &self.terms {
            out.push(Term::new(t.u.map_domain(target)?, t.v.map_domain(target)?, t.w.map_domain(target)?))?;
        }
        Ok(out)
    }

    /// Swap the a- and b-sides, giving a scheme for `T_{m,n}`.
    pub fn transpose(&self) -> Scheme {
        Scheme {
            n: self.m,
            m: self.n,
            domain: self.domain,
            terms: self.terms.iter().map(|t| Term::new(t.v.clone(), t.u.clone(), t.w.clone())).collect(),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scheme ({}, {}) over {}, rank {}", self.n, self.m, self.domain, self.rank())?;
        for t in &self.terms {
            writeln!(f, "  {} ⊗ {} ⊗ {}", t.u, t.v, t.w)?;
        }
        Ok(())
    }
}

/// Dense `(n+1) x (m+1) x (n+m+1)` coefficient array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseTensor {
    n: usize,
    m: usize,
    entries: Vec<Coefficient>,
}

impl DenseTensor {
    pub fn zeros(n: usize, m: usize, domain: CoeffDomain) -> Self {
        DenseTensor { n, m, entries: vec![domain.zero(); (n + 1) * (m + 1) * (n + m + 1)] }
    }

    /// The polynomial multiplication tensor: `t[i][j][k] = [k == i + j]`.
    pub fn multiplication(n: usize, m: usize, domain: CoeffDomain) -> Self {
        let mut t = Self::zeros(n, m, domain);
        for i in 0..=n {
            for j in 0..=m {
                let idx = t.index(i, j, i + j);
                t.entries[idx] = domain.one();
            }
        }
        t
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * (self.m + 1) + j) * (self.n + self.m + 1) + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &Coefficient {
        &self.entries[self.index(i, j, k)]
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n + 1, self.m + 1, self.n + self.m + 1)
    }

    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor, CoeffError> {
        assert_eq!(self.shape(), other.shape());
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a.add(b)).collect::<Result<_, _>>()?;
        Ok(DenseTensor { n: self.n, m: self.m, entries })
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Coefficient::is_zero)
    }
}

/// Expand a scheme multilinearly: `t[i][j][k] = Σ u[i] v[j] w[k]`.
pub fn contract(s: &Scheme) -> DenseTensor {
    let mut t = DenseTensor::zeros(s.n, s.m, s.domain);
    let nk = s.n + s.m + 1;
    for term in &s.terms {
        for (i, ui) in term.u.entries().iter().enumerate() {
            if ui.is_zero() {
                continue;
            }
            for (j, vj) in term.v.entries().iter().enumerate() {
                if vj.is_zero() {
                    continue;
                }
                let uv = ui.mul_unchecked(vj);
                let base = (i * (s.m + 1) + j) * nk;
                for (k, wk) in term.w.entries().iter().enumerate() {
                    if !wk.is_zero() {
                        let e = &mut t.entries[base + k];
                        *e = e.add_unchecked(&uv.mul_unchecked(wk));
                    }
                }
            }
        }
    }
    t
}

pub fn is_multiplication_tensor(s: &Scheme) -> bool {
    contract(s) == DenseTensor::multiplication(s.n, s.m, s.domain)
}

/// Rank of the matrix whose rows are the chosen slot of every term.
/// Integer schemes are ranked over Q; Z2^k is rejected.
pub fn flattening_rank(s: &Scheme, slot: Slot) -> Result<usize, TensorError> {
    let rows: Vec<&CoeffVector> = s.terms.iter().map(|t| t.slot(slot)).collect();
    let cols = s.slot_len(slot);
    match s.domain {
        CoeffDomain::Zpow2(_) => Err(TensorError::NotAField(s.domain)),
        CoeffDomain::Gf2 => {
            let mut mat = BitMatrix::zeros(rows.len(), cols);
            for (r, v) in rows.iter().enumerate() {
                for (c, x) in v.entries().iter().enumerate() {
                    if !x.is_zero() {
                        mat.set(r, c, true);
                    }
                }
            }
            Ok(mat.rank())
        }
        CoeffDomain::Integer => {
            let q = CoeffDomain::Rational;
            let mapped: Vec<CoeffVector> = rows.iter().map(|v| v.map_domain(q)).collect::<Result<_, _>>()?;
            Ok(field_rank(mapped))
        }
        _ => Ok(field_rank(rows.into_iter().cloned().collect())),
    }
}

/// Gaussian elimination rank over a field.
pub(crate) fn field_rank(mut rows: Vec<CoeffVector>) -> usize {
    let Some(cols) = rows.first().map(CoeffVector::len) else {
        return 0;
    };
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&r| !rows[r].get(c).is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let inv = rows[rank].get(c).inverse().expect("field element");
        let pivot = rows[rank].scale(&inv).expect("same domain");
        for r in (rank + 1)..rows.len() {
            let f = rows[r].get(c).clone();
            if !f.is_zero() {
                rows[r] = rows[r].axpy(&f.neg(), &pivot).expect("same domain");
            }
        }
        rows[rank] = pivot;
        rank += 1;
    }
    rank
}

/// Normal form for deduplication: over fields each term is rescaled so the
/// leading entries of `u` and `v` are one, the factors going into `w`;
/// terms are then sorted. Non-field domains are only sorted.
pub fn canonicalize(s: &Scheme) -> Scheme {
    let mut terms = s.terms.clone();
    if s.domain.is_field() {
        for t in &mut terms {
            for slot in [Slot::U, Slot::V] {
                let lead = t.slot(slot).first_nonzero().map(|(_, c)| c.clone()).expect("nonzero slot");
                if !lead.is_one() {
                    let inv = lead.inverse().expect("field element");
                    *t.slot_mut(slot) = t.slot(slot).scale(&inv).expect("same domain");
                    t.w = t.w.scale(&lead).expect("same domain");
                }
            }
        }
    }
    terms.sort_by(Term::cmp_lex);
    Scheme { n: s.n, m: s.m, domain: s.domain, terms }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{karatsuba, standard_scheme, toom_cook_scheme, EvalPoints};

    #[test]
    fn standard_contracts_to_delta() {
        let s = standard_scheme(1, 1, CoeffDomain::Integer);
        assert_eq!(s.rank(), 4);
        assert!(is_multiplication_tensor(&s));
        assert!(is_multiplication_tensor(&standard_scheme(3, 4, CoeffDomain::Rational)));
    }

    #[test]
    fn empty_scheme_is_zero() {
        let s = Scheme::empty(2, 1, CoeffDomain::Rational);
        assert!(contract(&s).is_zero());
        assert!(!is_multiplication_tensor(&s));
        assert_eq!(flattening_rank(&s, Slot::W).unwrap(), 0);
    }

    #[test]
    fn karatsuba_contracts_to_delta() {
        for d in [CoeffDomain::Integer, CoeffDomain::Gf2, CoeffDomain::Rational] {
            let k = karatsuba(d);
            assert_eq!(k.rank(), 3);
            assert!(is_multiplication_tensor(&k));
        }
    }

    #[test]
    fn missing_term_breaks_tensor() {
        let s = standard_scheme(2, 2, CoeffDomain::Gf2);
        let mut t = s.terms().to_vec();
        t.remove(4);
        let s2 = Scheme::new(2, 2, CoeffDomain::Gf2, t).unwrap();
        assert!(!is_multiplication_tensor(&s2));
    }

    #[test]
    fn flattening_ranks() {
        let q = CoeffDomain::Rational;
        let pts = EvalPoints::new(q, vec![q.from_i64(0), q.from_i64(1), q.from_i64(-1)]).unwrap();
        let tc = toom_cook_scheme(1, 1, &pts).unwrap();
        assert_eq!(flattening_rank(&tc, Slot::W).unwrap(), 3);
        let st = standard_scheme(2, 3, q);
        assert_eq!(flattening_rank(&st, Slot::W).unwrap(), 6);
        assert_eq!(flattening_rank(&st, Slot::U).unwrap(), 3);
        let z = standard_scheme(1, 1, CoeffDomain::zpow2(20).unwrap());
        assert!(matches!(flattening_rank(&z, Slot::W), Err(TensorError::NotAField(_))));
        assert_eq!(flattening_rank(&standard_scheme(2, 3, CoeffDomain::Integer), Slot::W).unwrap(), 6);
    }

    #[test]
    fn zero_terms_pruned_and_lengths_checked() {
        let d = CoeffDomain::Rational;
        let z = Term::new(CoeffVector::zeros(d, 2), CoeffVector::unit(d, 2, 0), CoeffVector::unit(d, 3, 0));
        let s = Scheme::new(1, 1, d, vec![z]).unwrap();
        assert_eq!(s.rank(), 0);
        let bad = Term::new(CoeffVector::unit(d, 3, 0), CoeffVector::unit(d, 2, 0), CoeffVector::unit(d, 3, 0));
        assert!(matches!(Scheme::new(1, 1, d, vec![bad]), Err(TensorError::Length { slot: Slot::U, .. })));
    }

    #[test]
    fn canonicalize_pushes_scalars_into_w() {
        let q = CoeffDomain::Rational;
        let t = Term::new(
            CoeffVector::from_i64s(q, &[2, 0]),
            CoeffVector::from_i64s(q, &[1, 0]),
            CoeffVector::from_i64s(q, &[1, 0, 0]),
        );
        let s = Scheme::new(1, 1, q, vec![t]).unwrap();
        let c = canonicalize(&s);
        assert_eq!(c.terms()[0].u, CoeffVector::from_i64s(q, &[1, 0]));
        assert_eq!(c.terms()[0].w, CoeffVector::from_i64s(q, &[2, 0, 0]));
        assert_eq!(contract(&c), contract(&s));
    }

    #[test]
    fn canonicalize_gf2_only_sorts() {
        let s = karatsuba(CoeffDomain::Gf2);
        let c = canonicalize(&s);
        let mut a: Vec<_> = s.terms().to_vec();
        let mut b: Vec<_> = c.terms().to_vec();
        a.sort_by(Term::cmp_lex);
        b.sort_by(Term::cmp_lex);
        assert_eq!(a, b);
        assert_eq!(canonicalize(&c), c);
    }

    #[test]
    fn eval_horner() {
        let q = CoeffDomain::Rational;
        let p = CoeffVector::from_i64s(q, &[1, -2, 3]);
        assert_eq!(p.eval(&q.from_i64(2)).unwrap(), q.from_i64(9));
    }
}
