//! GF(2) walk on bit-packed terms: each slot is a `u32` with bit `k` set
//! when coordinate `k` is one, so slot equality is a word compare.

use rand::Rng;

use super::{Attempt, SearchConfig, SplitPolicy, TranscriptRng};
use crate::coeff::CoeffDomain;
use crate::tensor::{CoeffVector, Scheme, Term};

type BitTerm = [u32; 3];

#[derive(Clone)]
struct State {
    n: usize,
    m: usize,
    terms: Vec<BitTerm>,
}

impl State {
    fn from_scheme(s: &Scheme) -> Self {
        let bits = |v: &CoeffVector| v.to_bits().expect("GF(2) vector") as u32;
        State { n: s.n(), m: s.m(), terms: s.terms().iter().map(|t| [bits(&t.u), bits(&t.v), bits(&t.w)]).collect() }
    }

    fn to_scheme(&self) -> Scheme {
        let (n, m) = (self.n, self.m);
        let terms = self
            .terms
            .iter()
            .map(|t| {
                Term::new(
                    CoeffVector::from_bits(n + 1, t[0] as u64),
                    CoeffVector::from_bits(m + 1, t[1] as u64),
                    CoeffVector::from_bits(n + m + 1, t[2] as u64),
                )
            })
            .collect();
        Scheme::new(n, m, CoeffDomain::Gf2, terms).expect("consistent lengths")
    }

    fn is_multiplication(&self) -> bool {
        let cols = self.m + 1;
        let mut t = vec![0u32; (self.n + 1) * cols];
        for term in &self.terms {
            for i in ones(term[0]) {
                for j in ones(term[1]) {
                    t[i * cols + j] ^= term[2];
                }
            }
        }
        t.iter().enumerate().all(|(k, &w)| w == 1 << (k / cols + k % cols))
    }

    fn shares_two(&self, i: usize, j: usize) -> bool {
        let (a, b) = (&self.terms[i], &self.terms[j]);
        (a[0] == b[0]) as u8 + (a[1] == b[1]) as u8 + (a[2] == b[2]) as u8 >= 2
    }

    fn all_reductions(&self, out: &mut Vec<(usize, usize)>) {
        out.clear();
        for i in 0..self.terms.len() {
            for j in (i + 1)..self.terms.len() {
                if self.shares_two(i, j) {
                    out.push((i, j));
                }
            }
        }
    }

    /// Reductions involving `a` or `b`, assuming none existed elsewhere.
    fn reductions_touching(&self, a: usize, b: usize, out: &mut Vec<(usize, usize)>) {
        out.clear();
        for k in 0..self.terms.len() {
            for &x in &[a, b] {
                if k != x && !(x == b && k == a) && self.shares_two(x, k) {
                    out.push((x.min(k), x.max(k)));
                }
            }
        }
    }

    fn reduce(&mut self, i: usize, j: usize) {
        let (a, b) = (self.terms[i], self.terms[j]);
        let merged = (0..3).rev().find(|&s| a[s] != b[s]).unwrap_or(2);
        self.terms[i][merged] ^= b[merged];
        let vanished = self.terms[i][merged] == 0;
        self.terms.swap_remove(j);
        if vanished {
            self.terms.swap_remove(i);
        }
    }

    fn flip_shapes(&self, out: &mut Vec<(usize, usize, usize)>) {
        out.clear();
        let t = &self.terms;
        for i in 0..t.len() {
            for j in (i + 1)..t.len() {
                for s in 0..3 {
                    if t[i][s] == t[j][s] {
                        out.push((i, j, s));
                    }
                }
            }
        }
    }

    /// `orient` of `i` absorbs `j`'s copy; the third slot of `j` absorbs `i`'s.
    fn flip(&mut self, i: usize, j: usize, shared: usize, orient: usize) {
        let third = 3 - shared - orient;
        let oj = self.terms[j][orient];
        let ti = self.terms[i][third];
        self.terms[i][orient] ^= oj;
        self.terms[j][third] ^= ti;
    }
}

fn ones(mut x: u32) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if x == 0 {
            return None;
        }
        let k = x.trailing_zeros() as usize;
        x &= x - 1;
        Some(k)
    })
}

/// A random nonempty proper subset of the set bits of `x`, or `None` for
/// single-bit `x`.
fn random_part(x: u32, rng: &mut TranscriptRng) -> Option<u32> {
    if x.count_ones() < 2 {
        return None;
    }
    loop {
        let mut part = 0;
        for k in ones(x) {
            if rng.gen::<bool>() {
                part |= 1 << k;
            }
        }
        if part != 0 && part != x {
            return Some(part);
        }
    }
}

/// Split a random term along a random slot, then flip the new term with
/// some other term so the two halves no longer share two slots.
fn excursion(st: &mut State, rng: &mut TranscriptRng, shapes: &mut Vec<(usize, usize, usize)>) -> bool {
    let r = st.terms.len();
    let (i, s) = (rng.gen_range(0..r), rng.gen_range(0..3));
    let Some(part) = random_part(st.terms[i][s], rng) else {
        return false;
    };
    let mut fresh = st.terms[i];
    fresh[s] ^= part;
    st.terms[i][s] = part;
    st.terms.push(fresh);
    let k = r;
    shapes.clear();
    for t in 0..r {
        if t == i {
            continue;
        }
        let eq: Vec<usize> = (0..3).filter(|&sh| st.terms[t][sh] == st.terms[k][sh]).collect();
        if let [sh] = eq[..] {
            shapes.push((k, t, sh));
        }
    }
    if shapes.is_empty() {
        return true;
    }
    let (k, t, sh) = shapes[rng.gen_range(0..shapes.len())];
    // change one of the two slots k still shares with i
    let orient = match [0, 1, 2].into_iter().filter(|&o| o != s && o != sh).collect::<Vec<_>>()[..] {
        [o] => o,
        [a, b] => {
            if rng.gen::<bool>() {
                a
            } else {
                b
            }
        }
        _ => unreachable!(),
    };
    st.flip(k, t, sh, orient);
    true
}

pub(super) fn attempt(start: &Scheme, cfg: &SearchConfig, seed: u64) -> Attempt {
    let mut rng = TranscriptRng::new(seed);
    let mut st = State::from_scheme(start);
    let mut best = st.clone();
    let mut found_at = 0;
    let mut since = 0u64;
    let mut reds = Vec::new();
    let mut shapes = Vec::new();
    st.all_reductions(&mut reds);
    let mut steps = 0;
    while steps < cfg.max_steps {
        if cfg.target_rank.is_some_and(|t| best.terms.len() <= t) {
            break;
        }
        steps += 1;
        since += 1;
        let escape = match cfg.split_policy {
            SplitPolicy::On { excursion_budget, probability } => {
                since >= cfg.plateau_limit
                    && st.terms.len() < best.terms.len() + excursion_budget
                    && rng.gen_bool(probability.clamp(0.0, 1.0))
            }
            SplitPolicy::Off => false,
        };
        if !reds.is_empty() {
            let (i, j) = reds[rng.gen_range(0..reds.len())];
            st.reduce(i, j);
            st.all_reductions(&mut reds);
        } else if escape {
            since = 0;
            if excursion(&mut st, &mut rng, &mut shapes) {
                st.all_reductions(&mut reds);
            }
        } else {
            st.flip_shapes(&mut shapes);
            if shapes.is_empty() {
                // isolated state: only an excursion can leave it
                if matches!(cfg.split_policy, SplitPolicy::Off) {
                    break;
                }
                since = 0;
                if excursion(&mut st, &mut rng, &mut shapes) {
                    st.all_reductions(&mut reds);
                }
                continue;
            }
            let k = rng.gen_range(0..2 * shapes.len());
            let (i, j, s) = shapes[k / 2];
            let orient = if k % 2 == 0 { (s + 1) % 3 } else { (s + 2) % 3 };
            st.flip(i, j, s, orient);
            st.reductions_touching(i, j, &mut reds);
        }
        if cfg.verify_each {
            assert!(st.is_multiplication(), "walk left the multiplication tensor at step {steps}");
        }
        if st.terms.len() < best.terms.len() {
            best = st.clone();
            found_at = steps;
            since = 0;
        }
    }
    Attempt { best: best.to_scheme(), steps, found_at, hash: rng.hash() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{karatsuba, standard_scheme};

    #[test]
    fn bit_round_trip_and_contraction() {
        let s = standard_scheme(3, 2, CoeffDomain::Gf2);
        let st = State::from_scheme(&s);
        assert!(st.is_multiplication());
        assert_eq!(st.to_scheme(), s);
        assert!(State::from_scheme(&karatsuba(CoeffDomain::Gf2)).is_multiplication());
    }

    #[test]
    fn flips_match_generic_moves() {
        use crate::moves::{apply_flip, Flip};
        use crate::tensor::Slot;
        let s = standard_scheme(2, 2, CoeffDomain::Gf2);
        let mut st = State::from_scheme(&s);
        // terms 0 = (0,0) and 1 = (0,1) share u
        st.flip(0, 1, 0, 2);
        let f = Flip { i: 0, j: 1, shared: Slot::U, orient: Slot::W, lambda: CoeffDomain::Gf2.one() };
        assert_eq!(st.to_scheme(), apply_flip(&s, &f).unwrap());
    }

    #[test]
    fn duplicate_terms_cancel() {
        let t = [1, 1, 1];
        let mut st = State { n: 0, m: 0, terms: vec![t, t, t] };
        st.reduce(0, 1);
        assert_eq!(st.terms, vec![t]);
    }
}
