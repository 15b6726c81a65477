//! Edges of the flip graph: flips, reductions, splits and scalar
//! rebalancing between the factors of one term.
//!
//! Slot equality is exact vector equality. Callers working over fields
//! larger than GF(2) should canonicalize first if they want scalar
//! multiples to match.

use rand::Rng;
use thiserror::Error;

use crate::coeff::{CoeffDomain, CoeffError, Coefficient};
use crate::construct::standard_scheme;
use crate::tensor::{CoeffVector, Scheme, Slot, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MoveError {
    #[error("term index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("a move needs two distinct terms, got {0} twice")]
    SameTerm(usize),
    #[error("terms {i} and {j} differ in slot {slot}")]
    SlotMismatch { i: usize, j: usize, slot: Slot },
    #[error("slot {slot} of term {term} would become zero")]
    ZeroSlot { term: usize, slot: Slot },
    #[error("orientation {orient} must differ from the shared slot {shared}")]
    BadOrientation { shared: Slot, orient: Slot },
    #[error("rebalance needs two different slots")]
    SameSlot,
    #[error("split part must be nonzero and differ from the slot")]
    DegenerateSplit,
    #[error("{0} is not invertible")]
    NotInvertible(String),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
}

/// `u⊗v_i⊗w_i + u⊗v_j⊗w_j -> u⊗(v_i−λv_j)⊗w_i + u⊗v_j⊗(w_j+λw_i)`,
/// generalised to any shared slot. `orient` is the slot of term `i` that is
/// decremented; the remaining slot of term `j` is incremented.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flip {
    pub i: usize,
    pub j: usize,
    pub shared: Slot,
    pub orient: Slot,
    pub lambda: Coefficient,
}

impl Flip {
    /// The slot of term `j` that absorbs `λ` times term `i`'s copy.
    pub fn target(&self) -> Slot {
        Slot::third(self.shared, self.orient)
    }

    /// The flip undoing this one when applied to its result.
    pub fn inverse(&self) -> Flip {
        Flip { lambda: self.lambda.neg(), ..self.clone() }
    }
}

/// Merge terms `i` and `j` that agree in both `shared` slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reduction {
    pub i: usize,
    pub j: usize,
    pub shared: (Slot, Slot),
}

impl Reduction {
    pub fn merged(&self) -> Slot {
        Slot::third(self.shared.0, self.shared.1)
    }
}

/// Replace term `i` by two terms whose `slot` entries are `part` and
/// `slot − part`; the second one is appended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub i: usize,
    pub slot: Slot,
    pub part: CoeffVector,
}

/// Scale slot `from` of term `i` by `α⁻¹` and slot `to` by `α`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rebalance {
    pub i: usize,
    pub from: Slot,
    pub to: Slot,
    pub alpha: Coefficient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    Flip(Flip),
    Reduction(Reduction),
    Split(Split),
    Rebalance(Rebalance),
}

impl Move {
    /// Change in term count when the move succeeds (reductions may remove
    /// two terms when the merged slot cancels).
    pub fn nominal_rank_delta(&self) -> isize {
        match self {
            Move::Flip(_) | Move::Rebalance(_) => 0,
            Move::Reduction(_) => -1,
            Move::Split(_) => 1,
        }
    }

    /// Exchange the a- and b-sides in every slot reference.
    pub fn swap_uv(&self) -> Move {
        match self {
            Move::Flip(f) => Move::Flip(Flip { shared: f.shared.swap_uv(), orient: f.orient.swap_uv(), ..f.clone() }),
            Move::Reduction(r) => {
                let (a, b) = (r.shared.0.swap_uv(), r.shared.1.swap_uv());
                Move::Reduction(Reduction { shared: (a.min(b), a.max(b)), ..*r })
            }
            Move::Split(s) => Move::Split(Split { slot: s.slot.swap_uv(), ..s.clone() }),
            Move::Rebalance(r) => Move::Rebalance(Rebalance { from: r.from.swap_uv(), to: r.to.swap_uv(), ..r.clone() }),
        }
    }

    pub fn with_indices(&self, i: usize, j: Option<usize>) -> Move {
        match self {
            Move::Flip(f) => Move::Flip(Flip { i, j: j.expect("flip has two terms"), ..f.clone() }),
            Move::Reduction(r) => Move::Reduction(Reduction { i, j: j.expect("reduction has two terms"), ..*r }),
            Move::Split(s) => Move::Split(Split { i, ..s.clone() }),
            Move::Rebalance(r) => Move::Rebalance(Rebalance { i, ..r.clone() }),
        }
    }

    pub fn indices(&self) -> (usize, Option<usize>) {
        match self {
            Move::Flip(f) => (f.i, Some(f.j)),
            Move::Reduction(r) => (r.i, Some(r.j)),
            Move::Split(s) => (s.i, None),
            Move::Rebalance(r) => (r.i, None),
        }
    }
}

/// Where a trace starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceStart {
    Standard,
    Explicit(Scheme),
}

/// A replayable move sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoveTrace {
    pub n: usize,
    pub m: usize,
    pub domain: CoeffDomain,
    pub start: TraceStart,
    pub moves: Vec<Move>,
}

impl MoveTrace {
    pub fn from_standard(n: usize, m: usize, domain: CoeffDomain) -> Self {
        MoveTrace { n, m, domain, start: TraceStart::Standard, moves: Vec::new() }
    }

    pub fn start_scheme(&self) -> Scheme {
        match &self.start {
            TraceStart::Standard => standard_scheme(self.n, self.m, self.domain),
            TraceStart::Explicit(s) => s.clone(),
        }
    }
}

fn check_pair(s: &Scheme, i: usize, j: usize) -> Result<(), MoveError> {
    for k in [i, j] {
        if k >= s.rank() {
            return Err(MoveError::IndexOutOfRange(k));
        }
    }
    if i == j {
        return Err(MoveError::SameTerm(i));
    }
    Ok(())
}

pub fn apply_flip(s: &Scheme, mv: &Flip) -> Result<Scheme, MoveError> {
    let mut out = s.clone();
    flip_in_place(&mut out, mv)?;
    Ok(out)
}

pub(crate) fn flip_in_place(s: &mut Scheme, mv: &Flip) -> Result<(), MoveError> {
    let Flip { i, j, shared, orient, ref lambda } = *mv;
    check_pair(s, i, j)?;
    if orient == shared {
        return Err(MoveError::BadOrientation { shared, orient });
    }
    let terms = s.terms_mut();
    if terms[i].slot(shared) != terms[j].slot(shared) {
        return Err(MoveError::SlotMismatch { i, j, slot: shared });
    }
    if lambda.is_zero() {
        return Ok(());
    }
    let target = mv.target();
    let new_ti = terms[i].slot(orient).axpy(&lambda.neg(), terms[j].slot(orient))?;
    let new_rj = terms[j].slot(target).axpy(lambda, terms[i].slot(target))?;
    if new_ti.is_zero() {
        return Err(MoveError::ZeroSlot { term: i, slot: orient });
    }
    if new_rj.is_zero() {
        return Err(MoveError::ZeroSlot { term: j, slot: target });
    }
    *terms[i].slot_mut(orient) = new_ti;
    *terms[j].slot_mut(target) = new_rj;
    Ok(())
}

pub fn apply_reduction(s: &Scheme, mv: &Reduction) -> Result<Scheme, MoveError> {
    let mut out = s.clone();
    reduction_in_place(&mut out, mv)?;
    Ok(out)
}

pub(crate) fn reduction_in_place(s: &mut Scheme, mv: &Reduction) -> Result<(), MoveError> {
    let Reduction { i, j, shared: (a, b) } = *mv;
    check_pair(s, i, j)?;
    if a == b {
        return Err(MoveError::SameSlot);
    }
    let terms = s.terms_mut();
    for slot in [a, b] {
        if terms[i].slot(slot) != terms[j].slot(slot) {
            return Err(MoveError::SlotMismatch { i, j, slot });
        }
    }
    let merged = mv.merged();
    let sum = terms[i].slot(merged).add(terms[j].slot(merged))?;
    if sum.is_zero() {
        let (hi, lo) = (i.max(j), i.min(j));
        terms.remove(hi);
        terms.remove(lo);
    } else {
        *terms[i].slot_mut(merged) = sum;
        terms.remove(j);
    }
    Ok(())
}

pub fn apply_split(s: &Scheme, mv: &Split) -> Result<Scheme, MoveError> {
    let mut out = s.clone();
    split_in_place(&mut out, mv)?;
    Ok(out)
}

pub(crate) fn split_in_place(s: &mut Scheme, mv: &Split) -> Result<(), MoveError> {
    let Split { i, slot, ref part } = *mv;
    if i >= s.rank() {
        return Err(MoveError::IndexOutOfRange(i));
    }
    let terms = s.terms_mut();
    let whole = terms[i].slot(slot);
    if part.len() != whole.len() {
        return Err(MoveError::DegenerateSplit);
    }
    let rest = whole.sub(part)?;
    if part.is_zero() || rest.is_zero() {
        return Err(MoveError::DegenerateSplit);
    }
    let mut second: Term = terms[i].clone();
    *second.slot_mut(slot) = rest;
    *terms[i].slot_mut(slot) = part.clone();
    terms.push(second);
    Ok(())
}

pub fn apply_rebalance(s: &Scheme, mv: &Rebalance) -> Result<Scheme, MoveError> {
    let mut out = s.clone();
    rebalance_in_place(&mut out, mv)?;
    Ok(out)
}

pub(crate) fn rebalance_in_place(s: &mut Scheme, mv: &Rebalance) -> Result<(), MoveError> {
    let Rebalance { i, from, to, ref alpha } = *mv;
    if i >= s.rank() {
        return Err(MoveError::IndexOutOfRange(i));
    }
    if from == to {
        return Err(MoveError::SameSlot);
    }
    let inv = alpha.inverse().map_err(|_| MoveError::NotInvertible(alpha.to_string()))?;
    let t = &mut s.terms_mut()[i];
    *t.slot_mut(from) = t.slot(from).scale(&inv)?;
    *t.slot_mut(to) = t.slot(to).scale(alpha)?;
    Ok(())
}

/// Apply any move, asserting the rank accounting in debug builds.
pub fn apply_move(s: &Scheme, mv: &Move) -> Result<Scheme, MoveError> {
    let mut out = s.clone();
    apply_move_in_place(&mut out, mv)?;
    Ok(out)
}

pub fn apply_move_in_place(s: &mut Scheme, mv: &Move) -> Result<(), MoveError> {
    let before = s.rank() as isize;
    match mv {
        Move::Flip(f) => flip_in_place(s, f)?,
        Move::Reduction(r) => reduction_in_place(s, r)?,
        Move::Split(sp) => split_in_place(s, sp)?,
        Move::Rebalance(r) => rebalance_in_place(s, r)?,
    }
    let delta = s.rank() as isize - before;
    debug_assert!(
        delta == mv.nominal_rank_delta() || (matches!(mv, Move::Reduction(_)) && delta == -2),
        "rank delta {delta} for {mv:?}"
    );
    Ok(())
}

/// Every unordered pair agreeing in at least two slots, labelled with the
/// first two agreeing slots.
pub fn enumerate_reductions(s: &Scheme) -> Vec<Reduction> {
    let terms = s.terms();
    let mut out = Vec::new();
    for i in 0..terms.len() {
        for j in (i + 1)..terms.len() {
            let eq: Vec<Slot> = Slot::ALL.into_iter().filter(|&sl| terms[i].slot(sl) == terms[j].slot(sl)).collect();
            if eq.len() >= 2 {
                out.push(Reduction { i, j, shared: (eq[0], eq[1]) });
            }
        }
    }
    out
}

/// A flip without its coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FlipShape {
    pub i: usize,
    pub j: usize,
    pub shared: Slot,
    pub orient: Slot,
}

impl FlipShape {
    pub fn with_lambda(self, lambda: Coefficient) -> Flip {
        Flip { i: self.i, j: self.j, shared: self.shared, orient: self.orient, lambda }
    }
}

/// All `(i < j, shared slot, orientation)` with exact equality in the
/// shared slot. `(j, i)` shapes are omitted: flipping `(i, j, t)` with `λ`
/// equals flipping `(j, i, r)` with `−λ`.
pub fn enumerate_flips(s: &Scheme) -> Vec<FlipShape> {
    let terms = s.terms();
    let mut out = Vec::new();
    for i in 0..terms.len() {
        for j in (i + 1)..terms.len() {
            for shared in Slot::ALL {
                if terms[i].slot(shared) == terms[j].slot(shared) {
                    for orient in shared.others() {
                        out.push(FlipShape { i, j, shared, orient });
                    }
                }
            }
        }
    }
    out
}

fn small_coeff(d: CoeffDomain, rng: &mut impl Rng) -> Coefficient {
    d.from_i64(rng.gen_range(-3..=3))
}

/// A uniformly drawn legal move on `s`: reductions, flips with random
/// nonzero `λ`, splits while the rank is below `max_rank`, and rebalances by
/// units. Coefficients are drawn from `-3..=3`. Returns `None` when 20 draws
/// all fail to apply.
pub fn random_move(s: &Scheme, rng: &mut impl Rng, max_rank: usize) -> Option<Move> {
    let d = s.domain();
    for _ in 0..20 {
        let kind = rng.gen_range(0..10);
        let mv = if kind < 3 {
            let reds = enumerate_reductions(s);
            if reds.is_empty() {
                continue;
            }
            Move::Reduction(reds[rng.gen_range(0..reds.len())])
        } else if kind < 8 {
            let shapes = enumerate_flips(s);
            let lambda = small_coeff(d, rng);
            if shapes.is_empty() || lambda.is_zero() {
                continue;
            }
            Move::Flip(shapes[rng.gen_range(0..shapes.len())].with_lambda(lambda))
        } else if s.rank() == 0 {
            continue;
        } else if kind == 8 {
            if s.rank() >= max_rank {
                continue;
            }
            let slot = Slot::ALL[rng.gen_range(0..3)];
            let part = CoeffVector::from_entries(d, (0..s.slot_len(slot)).map(|_| small_coeff(d, rng)).collect()).ok()?;
            Move::Split(Split { i: rng.gen_range(0..s.rank()), slot, part })
        } else {
            let alpha = small_coeff(d, rng);
            if !alpha.is_invertible() {
                continue;
            }
            let from = Slot::ALL[rng.gen_range(0..3)];
            let to = from.others()[rng.gen_range(0..2)];
            Move::Rebalance(Rebalance { i: rng.gen_range(0..s.rank()), from, to, alpha })
        };
        if apply_move(s, &mv).is_ok() {
            return Some(mv);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoeffDomain;
    use crate::construct::{karatsuba, standard_scheme};
    use crate::tensor::{contract, is_multiplication_tensor};

    fn z() -> CoeffDomain {
        CoeffDomain::Integer
    }

    fn v(xs: &[i64]) -> CoeffVector {
        CoeffVector::from_i64s(z(), xs)
    }

    #[test]
    fn intro_flip_example() {
        // standard (1,1) order: (0,0), (0,1), (1,0), (1,1)
        let s = standard_scheme(1, 1, z());
        let f = Flip { i: 0, j: 2, shared: Slot::V, orient: Slot::W, lambda: z().one() };
        let out = apply_flip(&s, &f).unwrap();
        assert_eq!(out.terms()[0], Term::new(v(&[1, 0]), v(&[1, 0]), v(&[1, -1, 0])));
        assert_eq!(out.terms()[2], Term::new(v(&[1, 1]), v(&[1, 0]), v(&[0, 1, 0])));
        assert_eq!(contract(&out), contract(&s));
    }

    #[test]
    fn intro_derivation_to_karatsuba() {
        let s = standard_scheme(1, 1, z());
        let s = apply_flip(&s, &Flip { i: 0, j: 2, shared: Slot::V, orient: Slot::W, lambda: z().one() }).unwrap();
        let s = apply_flip(&s, &Flip { i: 3, j: 1, shared: Slot::V, orient: Slot::W, lambda: z().one() }).unwrap();
        let reds = enumerate_reductions(&s);
        assert_eq!(reds.len(), 1);
        assert_eq!(reds[0].merged(), Slot::V);
        let s = apply_reduction(&s, &reds[0]).unwrap();
        assert_eq!(s.rank(), 3);
        assert!(is_multiplication_tensor(&s));
        let mut got = s.terms().to_vec();
        let mut want = karatsuba(z()).terms().to_vec();
        got.sort_by_key(|t| format!("{t:?}"));
        want.sort_by_key(|t| format!("{t:?}"));
        assert_eq!(got, want);
    }

    #[test]
    fn zero_lambda_is_identity() {
        let s = standard_scheme(1, 1, z());
        let f = Flip { i: 0, j: 1, shared: Slot::U, orient: Slot::V, lambda: z().zero() };
        assert_eq!(apply_flip(&s, &f).unwrap(), s);
    }

    #[test]
    fn flip_then_inverse_restores() {
        let s = standard_scheme(1, 1, z());
        let f = Flip { i: 0, j: 1, shared: Slot::U, orient: Slot::W, lambda: z().from_i64(3) };
        let t = apply_flip(&s, &f).unwrap();
        assert_ne!(t, s);
        assert_eq!(apply_flip(&t, &f.inverse()).unwrap(), s);
    }

    #[test]
    fn flip_errors() {
        let s = standard_scheme(1, 1, z());
        let bad = Flip { i: 0, j: 3, shared: Slot::U, orient: Slot::V, lambda: z().one() };
        assert!(matches!(apply_flip(&s, &bad), Err(MoveError::SlotMismatch { .. })));
        let same = Flip { i: 1, j: 1, shared: Slot::U, orient: Slot::V, lambda: z().one() };
        assert!(matches!(apply_flip(&s, &same), Err(MoveError::SameTerm(1))));
        let orient = Flip { i: 0, j: 1, shared: Slot::U, orient: Slot::U, lambda: z().one() };
        assert!(matches!(apply_flip(&s, &orient), Err(MoveError::BadOrientation { .. })));
        // two copies of one term: the flip would zero a slot
        let t = s.terms()[0].clone();
        let dup = Scheme::new(1, 1, z(), vec![t.clone(), t]).unwrap();
        let zero = Flip { i: 0, j: 1, shared: Slot::U, orient: Slot::V, lambda: z().one() };
        assert!(matches!(apply_flip(&dup, &zero), Err(MoveError::ZeroSlot { .. })));
    }

    #[test]
    fn reduction_examples() {
        let t1 = Term::new(v(&[1, 0]), v(&[0, 1]), v(&[0, 1, 0]));
        let t2 = Term::new(v(&[0, 1]), v(&[0, 1]), v(&[0, 1, 0]));
        let s = Scheme::new(1, 1, z(), vec![t1, t2]).unwrap();
        let r = enumerate_reductions(&s);
        assert_eq!(r, vec![Reduction { i: 0, j: 1, shared: (Slot::V, Slot::W) }]);
        let out = apply_reduction(&s, &r[0]).unwrap();
        assert_eq!(out.terms(), &[Term::new(v(&[1, 1]), v(&[0, 1]), v(&[0, 1, 0]))]);

        let g = CoeffDomain::Gf2;
        let t = standard_scheme(1, 1, g).terms()[0].clone();
        let dup = Scheme::new(1, 1, g, vec![t.clone(), t]).unwrap();
        let r = enumerate_reductions(&dup);
        assert_eq!(r.len(), 1);
        assert_eq!(apply_reduction(&dup, &r[0]).unwrap().rank(), 0);

        let k1 = Term::new(v(&[1, 1]), v(&[1, 0]), v(&[0, 1, 0]));
        let k2 = Term::new(v(&[1, 1]), v(&[0, 1]), v(&[0, 0, 1]));
        let one_shared = Scheme::new(1, 1, z(), vec![k1, k2]).unwrap();
        let bad = Reduction { i: 0, j: 1, shared: (Slot::U, Slot::W) };
        assert!(matches!(apply_reduction(&one_shared, &bad), Err(MoveError::SlotMismatch { .. })));
        assert!(enumerate_reductions(&standard_scheme(1, 1, z())).is_empty());
    }

    #[test]
    fn split_examples() {
        let t = Term::new(v(&[1, 1]), v(&[1, 0]), v(&[0, 1, 0]));
        let s = Scheme::new(1, 1, z(), vec![t]).unwrap();
        let sp = Split { i: 0, slot: Slot::U, part: v(&[1, 0]) };
        let out = apply_split(&s, &sp).unwrap();
        assert_eq!(out.rank(), 2);
        assert_eq!(out.terms()[1].u, v(&[0, 1]));
        assert_eq!(contract(&out), contract(&s));
        let back = apply_reduction(&out, &Reduction { i: 0, j: 1, shared: (Slot::V, Slot::W) }).unwrap();
        assert_eq!(back, s);
        assert!(apply_split(&s, &Split { i: 0, slot: Slot::U, part: v(&[0, 0]) }).is_err());
        assert!(apply_split(&s, &Split { i: 0, slot: Slot::U, part: v(&[1, 1]) }).is_err());
    }

    #[test]
    fn rebalance_examples() {
        let q = CoeffDomain::Rational;
        let s = standard_scheme(1, 1, q);
        let one = Rebalance { i: 0, from: Slot::W, to: Slot::U, alpha: q.one() };
        assert_eq!(apply_rebalance(&s, &one).unwrap(), s);
        let three = Rebalance { i: 1, from: Slot::W, to: Slot::U, alpha: q.from_i64(3) };
        let out = apply_rebalance(&s, &three).unwrap();
        assert_eq!(out.terms()[1].u, CoeffVector::from_i64s(q, &[3, 0]));
        assert_eq!(out.terms()[1].w, CoeffVector::from_entries(q, vec![q.zero(), q.parse_coeff("1/3").unwrap(), q.zero()]).unwrap());
        assert_eq!(contract(&out), contract(&s));
        let zero = Rebalance { i: 0, from: Slot::W, to: Slot::U, alpha: q.zero() };
        assert!(matches!(apply_rebalance(&s, &zero), Err(MoveError::NotInvertible(_))));
        let g = CoeffDomain::Gf2;
        let sg = standard_scheme(1, 1, g);
        assert_eq!(apply_rebalance(&sg, &Rebalance { i: 2, from: Slot::U, to: Slot::V, alpha: g.one() }).unwrap(), sg);
    }

    // Brute-force oracle: count (unordered pair, shared slot) incidences
    // directly from the term list, two orientations each.
    #[test]
    fn standard_flip_shapes() {
        let s = standard_scheme(1, 1, z());
        let terms = s.terms();
        let mut incidences = 0;
        for a in 0..terms.len() {
            for b in 0..terms.len() {
                if a < b {
                    incidences += Slot::ALL.iter().filter(|&&sl| terms[a].slot(sl) == terms[b].slot(sl)).count();
                }
            }
        }
        // u: {a0}x2 pairs, v: {b0},{b1}, w: {c1} shared by a0⊗b1 and a1⊗b0
        assert_eq!(incidences, 5);
        let shapes = enumerate_flips(&s);
        assert_eq!(shapes.len(), 2 * incidences);
        assert!(shapes.iter().any(|f| f.i == 0 && f.j == 1 && f.shared == Slot::U));
        assert!(enumerate_flips(&Scheme::empty(1, 1, z())).is_empty());
    }
}
