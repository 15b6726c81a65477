//! Seeded random walks on the flip graph looking for low-rank schemes.
//!
//! A walk repeatedly applies a uniformly chosen reduction if one exists,
//! otherwise a uniformly chosen flip. After `plateau_limit` steps without
//! improving its best rank, a walk may take a split excursion (a split
//! followed by a flip of the new term) to leave the current level.
//!
//! Seeds: walk `w` of a campaign uses `derive_seed(cfg.seed, w)`, attempt
//! `a` of a walk uses `derive_seed(walk_seed, a)`, and each attempt drives
//! its own ChaCha8 stream seeded with that value. Extending `max_steps`
//! therefore extends every attempt's trajectory without changing its
//! prefix.

mod bits;
mod field;

use std::sync::mpsc;
use std::thread;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::coeff::CoeffDomain;
use crate::construct::standard_scheme;
use crate::tensor::{is_multiplication_tensor, Scheme};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("search runs over Z2 or Zp:p, not {0}")]
    Domain(CoeffDomain),
    #[error("start scheme does not contract to the multiplication tensor")]
    InvalidStart,
    #[error("GF(2) walks support vectors of at most 32 entries")]
    TooLarge,
    #[error("walk {walk} returned an invalid scheme")]
    Unsound { walk: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitPolicy {
    Off,
    /// Allow a split excursion while the current rank is below
    /// `best + excursion_budget`, taken with the given probability when a
    /// plateau is hit.
    On { excursion_budget: usize, probability: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub seed: u64,
    pub domain: CoeffDomain,
    /// Steps per attempt.
    pub max_steps: u64,
    pub plateau_limit: u64,
    pub split_policy: SplitPolicy,
    /// Extra attempts per walk, each restarting from the start scheme.
    pub restarts: u32,
    pub walks: usize,
    pub target_rank: Option<usize>,
    /// Check the contraction after every move.
    pub verify_each: bool,
    /// Worker threads; 0 uses the available parallelism.
    pub threads: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            seed: 0,
            domain: CoeffDomain::Gf2,
            max_steps: 1_000_000,
            plateau_limit: 20_000,
            split_policy: SplitPolicy::On { excursion_budget: 2, probability: 1.0 },
            restarts: 0,
            walks: 8,
            target_rank: None,
            verify_each: false,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchResult {
    pub best: Scheme,
    pub rank: usize,
    pub steps_taken: u64,
    pub walk_id: usize,
    pub rng_transcript_hash: u64,
}

/// Per-walk line of a campaign report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkSummary {
    pub walk_id: usize,
    pub seed: u64,
    pub rank: usize,
    pub steps_taken: u64,
    /// Global step index (over all attempts) at which `rank` was first reached.
    pub found_at_step: u64,
    pub rng_transcript_hash: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CampaignReport {
    pub result: SearchResult,
    pub walks: Vec<WalkSummary>,
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Child seed `index` of `parent`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    splitmix64(parent ^ splitmix64(index))
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv_mix(h: u64, x: u64) -> u64 {
    x.to_le_bytes().iter().fold(h, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// ChaCha8 stream that folds every output word into an FNV-1a hash.
pub(crate) struct TranscriptRng {
    inner: ChaCha8Rng,
    hash: u64,
}

impl TranscriptRng {
    pub(crate) fn new(seed: u64) -> Self {
        TranscriptRng { inner: ChaCha8Rng::seed_from_u64(seed), hash: FNV_OFFSET }
    }

    pub(crate) fn hash(&self) -> u64 {
        self.hash
    }
}

impl RngCore for TranscriptRng {
    fn next_u32(&mut self) -> u32 {
        let x = self.inner.next_u32();
        self.hash = fnv_mix(self.hash, x as u64);
        x
    }

    fn next_u64(&mut self) -> u64 {
        let x = self.inner.next_u64();
        self.hash = fnv_mix(self.hash, x);
        x
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let x = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&x[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

/// Outcome of one attempt.
pub(crate) struct Attempt {
    pub best: Scheme,
    pub steps: u64,
    pub found_at: u64,
    pub hash: u64,
}

/// Run all attempts of one walk from `start`.
pub fn random_walk(start: &Scheme, cfg: &SearchConfig, walk_seed: u64) -> Result<SearchResult, SearchError> {
    let summary = walk(start, cfg, 0, walk_seed)?;
    Ok(summary.0)
}

fn walk(start: &Scheme, cfg: &SearchConfig, walk_id: usize, walk_seed: u64) -> Result<(SearchResult, WalkSummary), SearchError> {
    let domain = start.domain();
    if !matches!(domain, CoeffDomain::Gf2 | CoeffDomain::Gfp(_)) {
        return Err(SearchError::Domain(domain));
    }
    if !is_multiplication_tensor(start) {
        return Err(SearchError::InvalidStart);
    }
    if domain == CoeffDomain::Gf2 && start.n() + start.m() + 1 > 32 {
        return Err(SearchError::TooLarge);
    }
    let mut best = start.clone();
    let mut found_at = 0;
    let mut steps = 0;
    let mut hash = FNV_OFFSET;
    for a in 0..=cfg.restarts as u64 {
        if cfg.target_rank.is_some_and(|t| best.rank() <= t) {
            break;
        }
        let seed = derive_seed(walk_seed, a);
        let at = match domain {
            CoeffDomain::Gf2 => bits::attempt(start, cfg, seed),
            _ => field::attempt(start, cfg, seed),
        };
        if at.best.rank() < best.rank() {
            best = at.best;
            found_at = steps + at.found_at;
        }
        steps += at.steps;
        hash = fnv_mix(hash, at.hash);
    }
    if !is_multiplication_tensor(&best) {
        return Err(SearchError::Unsound { walk: walk_id });
    }
    let rank = best.rank();
    let summary = WalkSummary { walk_id, seed: walk_seed, rank, steps_taken: steps, found_at_step: found_at, rng_transcript_hash: hash };
    Ok((SearchResult { best, rank, steps_taken: steps, walk_id, rng_transcript_hash: hash }, summary))
}

type WalkOutcome = Result<(SearchResult, WalkSummary), SearchError>;

/// Run `cfg.walks` independent walks from `start` and keep the best
/// (lowest rank, then lowest walk id).
pub fn search_from(start: &Scheme, cfg: &SearchConfig) -> Result<CampaignReport, SearchError> {
    let walks = cfg.walks.max(1);
    let threads = match cfg.threads {
        0 => thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        t => t,
    }
    .min(walks);
    let (tx, rx) = mpsc::channel();
    thread::scope(|scope| {
        for worker in 0..threads {
            let tx = tx.clone();
            scope.spawn(move || {
                for w in (worker..walks).step_by(threads) {
                    let out = walk(start, cfg, w, derive_seed(cfg.seed, w as u64));
                    if tx.send((w, out)).is_err() {
                        return;
                    }
                }
            });
        }
    });
    drop(tx);
    let mut results: Vec<(usize, WalkOutcome)> = rx.into_iter().collect();
    results.sort_by_key(|(w, _)| *w);
    let mut best: Option<SearchResult> = None;
    let mut summaries = Vec::with_capacity(walks);
    for (_, r) in results {
        let (res, summary) = r?;
        summaries.push(summary);
        if best.as_ref().is_none_or(|b| res.rank < b.rank) {
            best = Some(res);
        }
    }
    Ok(CampaignReport { result: best.expect("at least one walk"), walks: summaries })
}

/// Campaign from the standard representation of `(n, m)` over `cfg.domain`.
pub fn search_campaign(n: usize, m: usize, cfg: &SearchConfig) -> Result<CampaignReport, SearchError> {
    search_from(&standard_scheme(n, m, cfg.domain), cfg)
}
