//! Walk over GF(p) on full schemes. The state is canonicalized after every
//! move so that scalar-collinear u- and v-slots compare equal.

use rand::Rng;

use super::{Attempt, SearchConfig, SplitPolicy, TranscriptRng};
use crate::coeff::Coefficient;
use crate::moves::{apply_move_in_place, enumerate_flips, enumerate_reductions, Move, Split};
use crate::tensor::{canonicalize, is_multiplication_tensor, CoeffVector, Scheme, Slot};

fn random_nonzero(s: &Scheme, rng: &mut TranscriptRng) -> Coefficient {
    let p = s.domain().order().expect("finite field") as u64;
    s.domain().from_i64(rng.gen_range(1..p) as i64)
}

fn random_split(s: &Scheme, rng: &mut TranscriptRng) -> Option<Split> {
    let i = rng.gen_range(0..s.rank());
    let slot = Slot::ALL[rng.gen_range(0..3)];
    let v = s.terms()[i].slot(slot);
    let support: Vec<usize> = (0..v.len()).filter(|&k| !v.get(k).is_zero()).collect();
    if support.len() < 2 {
        return None;
    }
    loop {
        let keep: Vec<bool> = support.iter().map(|_| rng.gen::<bool>()).collect();
        let count = keep.iter().filter(|&&b| b).count();
        if count == 0 || count == support.len() {
            continue;
        }
        let mut entries = vec![s.domain().zero(); v.len()];
        for (&k, &b) in support.iter().zip(&keep) {
            if b {
                entries[k] = v.get(k).clone();
            }
        }
        let part = CoeffVector::from_entries(s.domain(), entries).expect("same domain");
        return Some(Split { i, slot, part });
    }
}

pub(super) fn attempt(start: &Scheme, cfg: &SearchConfig, seed: u64) -> Attempt {
    let mut rng = TranscriptRng::new(seed);
    let mut st = canonicalize(start);
    let mut best = start.clone();
    let mut found_at = 0;
    let mut since = 0;
    let mut steps = 0;
    while steps < cfg.max_steps {
        if cfg.target_rank.is_some_and(|t| best.rank() <= t) {
            break;
        }
        steps += 1;
        since += 1;
        let reds = enumerate_reductions(&st);
        let escape = match cfg.split_policy {
            SplitPolicy::On { excursion_budget, probability } => {
                reds.is_empty()
                    && since >= cfg.plateau_limit
                    && st.rank() < best.rank() + excursion_budget
                    && rng.gen_bool(probability.clamp(0.0, 1.0))
            }
            SplitPolicy::Off => false,
        };
        let mv = if !reds.is_empty() {
            Some(Move::Reduction(reds[rng.gen_range(0..reds.len())]))
        } else if escape {
            since = 0;
            random_split(&st, &mut rng).map(Move::Split)
        } else {
            let shapes = enumerate_flips(&st);
            if shapes.is_empty() {
                break;
            }
            let shape = shapes[rng.gen_range(0..shapes.len())];
            Some(Move::Flip(shape.with_lambda(random_nonzero(&st, &mut rng))))
        };
        if let Some(mv) = mv {
            let mut next = st.clone();
            // flips that would zero a slot are simply not taken
            if apply_move_in_place(&mut next, &mv).is_ok() {
                st = canonicalize(&next);
            }
        }
        if cfg.verify_each {
            assert!(is_multiplication_tensor(&st), "walk left the multiplication tensor at step {steps}");
        }
        if st.rank() < best.rank() {
            best = st.clone();
            found_at = steps;
            since = 0;
        }
    }
    Attempt { best, steps, found_at, hash: rng.hash() }
}
