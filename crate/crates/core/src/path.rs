//! An explicit flip/reduction path from the standard representation of
//! `T_{n,m}` to its Toom-Cook representation.
//!
//! Notation: `N = n+m`, points `x_0..x_N`, `X = x_N`, `A_x = Σ x^i a_i`,
//! `B_x = Σ x^j b_j`, and `c^(ℓ)` the Lagrange basis of the c-side. The
//! `c^(ℓ)` coordinate of a w-vector is its value as a polynomial at `x_ℓ`.
//!
//! The construction for `m >= n >= 1`:
//!
//! 1. Stage one rewrites the standard scheme so that the terms with `j >= 1`
//!    form an embedded copy of the standard scheme of `(n, m-1)`, and the
//!    `j = 0` terms become rows `a_i⊗B_X⊗(c_i − X^i c_0)` plus
//!    `A_X⊗B_X⊗c_0`.
//! 2. The `(n, m-1)` path on `x_0..x_{N-1}` is replayed on the embedded copy,
//!    producing `S_ℓ = A_{x_ℓ}⊗(B_{x_ℓ} − B_X)⊗c^(ℓ)` after rebalancing.
//! 3. Stage two moves the `c^(ℓ)` part of the rows into `S_ℓ`, one point
//!    at a time, using the pivot row `i = 1`.
//!
//! `n > m` is handled by transposing the a- and b-sides.

use thiserror::Error;

use crate::coeff::{CoeffDomain, Coefficient};
use crate::construct::{standard_scheme, EvalPoints};
use crate::moves::{apply_move_in_place, Flip, Move, MoveError, MoveTrace, Rebalance, Reduction, TraceStart};
use crate::tensor::{is_multiplication_tensor, CoeffVector, Scheme, Slot};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("path construction needs a field, got {0}")]
    NotAField(CoeffDomain),
    #[error("need {needed} evaluation points, got {found}")]
    InsufficientPoints { needed: usize, found: usize },
    #[error("evaluation points are over {found}, scheme is over {expected}")]
    PointDomain { expected: CoeffDomain, found: CoeffDomain },
    #[error("step {step}: {source}")]
    Move { step: usize, source: MoveError },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("step {step}: {source}")]
    Illegal { step: usize, source: MoveError },
    #[error("step {step}: scheme no longer contracts to the multiplication tensor")]
    Broken { step: usize },
    #[error("start scheme does not contract to the multiplication tensor")]
    BadStart,
}

/// Counts for one emitted path, alongside the reference formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PathStats {
    pub flips: usize,
    pub reductions: usize,
    pub rebalances: usize,
    /// The proof's recurrence with `F(n,0) = F(0,m) = 0`.
    pub recurrence_flips: u64,
    /// `nm(2n+2m+1)`.
    pub closed_form_flips: u64,
    /// Flips the construction emits when no point coincidences occur.
    pub generic_flips: u64,
    /// `nm(n+m)(n+m+1)^2`, length of the path that multiplies out terms by splits.
    pub split_path_length: u64,
    pub final_rank: usize,
}

/// `F(n,m) = nm + (n−1)(m−1) + n + F(n,m−1) + (n+m−1)(2n+1) + 1` for
/// `m >= n`, symmetric, `F(n,0) = F(0,m) = 0`.
pub fn recurrence_flips(n: usize, m: usize) -> u64 {
    let (n, m) = (n.min(m) as u64, n.max(m) as u64);
    if n == 0 {
        return 0;
    }
    n * m + (n - 1) * (m - 1) + n + recurrence_flips(n as usize, m as usize - 1) + (n + m - 1) * (2 * n + 1) + 1
}

pub fn closed_form_flips(n: usize, m: usize) -> u64 {
    let (n, m) = (n as u64, m as u64);
    n * m * (2 * n + 2 * m + 1)
}

/// Flip count of [`toomcook_path`] when every stage-two row is active at
/// every point. Stage one costs `(n+1)m + n`; the `n = 0` floor costs `m`
/// per level.
pub fn generic_flips(n: usize, m: usize) -> u64 {
    let (n, m) = (n.min(m) as u64, n.max(m) as u64);
    if m == 0 {
        return 0;
    }
    if n == 0 {
        return m * (m + 1);
    }
    (n + 1) * m + n + generic_flips(n as usize, m as usize - 1) + (n + m - 1) * (2 * n + 1) + 1
}

pub fn split_path_length(n: usize, m: usize) -> u64 {
    let (n, m) = (n as u64, m as u64);
    n * m * (n + m) * (n + m + 1) * (n + m + 1)
}

/// Applies moves by stable term id, recording them by position.
struct Builder {
    scheme: Scheme,
    ids: Vec<usize>,
    next_id: usize,
    moves: Vec<Move>,
    flips: usize,
    reductions: usize,
    rebalances: usize,
}

impl Builder {
    fn new(scheme: Scheme) -> Self {
        let r = scheme.rank();
        Builder { scheme, ids: (0..r).collect(), next_id: r, moves: Vec::new(), flips: 0, reductions: 0, rebalances: 0 }
    }

    fn pos(&self, id: usize) -> Result<usize, PathError> {
        self.ids.iter().position(|&x| x == id).ok_or_else(|| PathError::Invariant(format!("term id {id} is gone")))
    }

    fn alive(&self, id: usize) -> bool {
        self.ids.contains(&id)
    }

    fn slot(&self, id: usize, s: Slot) -> Result<&CoeffVector, PathError> {
        Ok(self.scheme.terms()[self.pos(id)?].slot(s))
    }

    fn apply(&mut self, mv: Move) -> Result<(), PathError> {
        let step = self.moves.len();
        apply_move_in_place(&mut self.scheme, &mv).map_err(|source| PathError::Move { step, source })?;
        match &mv {
            Move::Flip(_) => self.flips += 1,
            Move::Rebalance(_) => self.rebalances += 1,
            Move::Reduction(r) => {
                self.reductions += 1;
                let expected = self.ids.len() - 1;
                let (i, j) = (self.ids[r.i], self.ids[r.j]);
                if self.scheme.rank() == expected {
                    self.ids.retain(|&x| x != j);
                } else {
                    self.ids.retain(|&x| x != i && x != j);
                }
            }
            Move::Split(_) => {
                self.ids.push(self.next_id);
                self.next_id += 1;
            }
        }
        self.moves.push(mv);
        Ok(())
    }

    fn flip(&mut self, i: usize, j: usize, shared: Slot, orient: Slot, lambda: Coefficient) -> Result<(), PathError> {
        if lambda.is_zero() {
            return Ok(());
        }
        let f = Flip { i: self.pos(i)?, j: self.pos(j)?, shared, orient, lambda };
        self.apply(Move::Flip(f))
    }

    /// Would flipping `i` against `j` zero slot `orient` of `i`?
    fn flip_cancels(&self, i: usize, j: usize, orient: Slot, lambda: &Coefficient) -> Result<bool, PathError> {
        let t = self.slot(i, orient)?.axpy(&lambda.neg(), self.slot(j, orient)?).map_err(inv)?;
        Ok(t.is_zero())
    }

    fn reduce(&mut self, i: usize, j: usize, shared: (Slot, Slot)) -> Result<(), PathError> {
        let r = Reduction { i: self.pos(i)?, j: self.pos(j)?, shared };
        self.apply(Move::Reduction(r))
    }

    fn rebalance(&mut self, i: usize, from: Slot, to: Slot, alpha: Coefficient) -> Result<(), PathError> {
        if alpha.is_one() {
            return Ok(());
        }
        let r = Rebalance { i: self.pos(i)?, from, to, alpha };
        self.apply(Move::Rebalance(r))
    }

    /// Replay moves made for a smaller problem whose terms are the ids in
    /// `sub_ids` (in that problem's index order). The embedding must be
    /// injective and linear on every slot, which is what makes the moves
    /// transfer verbatim; `swap` exchanges the a- and b-slots.
    fn embed(&mut self, moves: &[Move], mut sub_ids: Vec<usize>, swap: bool) -> Result<Vec<usize>, PathError> {
        for mv in moves {
            let mv = if swap { mv.swap_uv() } else { mv.clone() };
            if matches!(mv, Move::Split(_)) {
                return Err(PathError::Invariant("path traces contain no splits".into()));
            }
            let (i, j) = mv.indices();
            let bi = self.pos(sub_ids[i])?;
            let bj = j.map(|j| self.pos(sub_ids[j])).transpose()?;
            self.apply(mv.with_indices(bi, bj))?;
            sub_ids.retain(|id| self.ids.contains(id));
        }
        Ok(sub_ids)
    }
}

fn inv(e: impl std::fmt::Display) -> PathError {
    PathError::Invariant(e.to_string())
}

fn check_points(n: usize, m: usize, pts: &EvalPoints, domain: CoeffDomain) -> Result<(), PathError> {
    if !domain.is_field() {
        return Err(PathError::NotAField(domain));
    }
    if pts.domain() != domain {
        return Err(PathError::PointDomain { expected: domain, found: pts.domain() });
    }
    if pts.len() < n + m + 1 {
        return Err(PathError::InsufficientPoints { needed: n + m + 1, found: pts.len() });
    }
    Ok(())
}

/// Emit and apply the path from `standard_scheme(n, m)`; the first `n+m+1`
/// points are used.
pub fn toomcook_path(n: usize, m: usize, pts: &EvalPoints) -> Result<(MoveTrace, PathStats), PathError> {
    let domain = pts.domain();
    check_points(n, m, pts, domain)?;
    let pts = pts.prefix(n + m + 1);
    let b = build(n, m, &pts)?;
    let stats = PathStats {
        flips: b.flips,
        reductions: b.reductions,
        rebalances: b.rebalances,
        recurrence_flips: recurrence_flips(n, m),
        closed_form_flips: closed_form_flips(n, m),
        generic_flips: generic_flips(n, m),
        split_path_length: split_path_length(n, m),
        final_rank: b.scheme.rank(),
    };
    Ok((MoveTrace { n, m, domain, start: TraceStart::Standard, moves: b.moves }, stats))
}

fn build(n: usize, m: usize, pts: &EvalPoints) -> Result<Builder, PathError> {
    let domain = pts.domain();
    let mut b = Builder::new(standard_scheme(n, m, domain));
    if n > m {
        let sub = build(m, n, pts)?;
        // standard (m, n) term (j, i) is standard (n, m) term (i, j)
        let ids = (0..=m).flat_map(|j| (0..=n).map(move |i| i * (m + 1) + j)).collect();
        b.embed(&sub.moves, ids, true)?;
        return Ok(b);
    }
    if m == 0 {
        return Ok(b);
    }
    let roles = stage_one(&mut b, n, m, pts)?;
    stage_two(&mut b, &roles, pts)?;
    Ok(b)
}

/// Term ids at the start of stage two.
#[derive(Debug, Clone)]
struct Roles {
    row0: usize,
    rows: Vec<usize>,
    /// `targets[ℓ]` holds `S_ℓ` for `ℓ < N`.
    targets: Vec<usize>,
}

fn stage_one(b: &mut Builder, n: usize, m: usize, pts: &EvalPoints) -> Result<Roles, PathError> {
    let id = |i: usize, j: usize| i * (m + 1) + j;
    let big_n = n + m;
    let x = pts.get(big_n).clone();
    let flips_before = b.flips;
    for i in 0..=n {
        for j in (1..=m).rev() {
            b.flip(id(i, j), id(i, j - 1), Slot::U, Slot::W, x.clone())?;
        }
    }
    for i in 1..=n {
        b.flip(id(i, 0), id(0, 0), Slot::V, Slot::W, x.pow(i as u32))?;
    }
    debug_assert!(b.flips - flips_before <= (n + 1) * m + n);

    let sub_pts = pts.prefix(big_n);
    let sub = build(n, m - 1, &sub_pts)?;
    let sub_ids: Vec<usize> = (0..=n).flat_map(|i| (0..m).map(move |j| id(i, j + 1))).collect();
    let result = b.embed(&sub.moves, sub_ids, false)?;
    if result.len() != big_n {
        return Err(inv(format!("sub-path left {} terms, expected {big_n}", result.len())));
    }

    let mut targets = vec![usize::MAX; big_n];
    for &t in &result {
        let w = b.slot(t, Slot::W)?.clone();
        let support: Vec<usize> =
            (0..=big_n).filter(|&l| !w.eval(pts.get(l)).map(|c| c.is_zero()).unwrap_or(true)).collect();
        match support[..] {
            [l] if l < big_n && targets[l] == usize::MAX => targets[l] = t,
            _ => return Err(inv(format!("sub-path term {t} is not a single Lagrange direction"))),
        }
        let lead = b.slot(t, Slot::U)?.get(0).clone();
        b.rebalance(t, Slot::U, Slot::W, lead)?;
        let wl = b.slot(t, Slot::W)?.eval(pts.get(support[0])).map_err(inv)?;
        b.rebalance(t, Slot::W, Slot::V, wl)?;
    }
    for (l, &t) in targets.iter().enumerate() {
        let xl = pts.get(l);
        let want_v = pts.powers(l, m).sub(&pts.powers(big_n, m)).map_err(inv)?;
        if *b.slot(t, Slot::U)? != pts.powers(l, n) || *b.slot(t, Slot::V)? != want_v {
            return Err(inv(format!("target for point {xl} has unexpected factors")));
        }
    }
    Ok(Roles { row0: id(0, 0), rows: (1..=n).map(|i| id(i, 0)).collect(), targets })
}

fn coord(b: &Builder, t: usize, x: &Coefficient) -> Result<Coefficient, PathError> {
    b.slot(t, Slot::W)?.eval(x).map_err(inv)
}

fn stage_two(b: &mut Builder, roles: &Roles, pts: &EvalPoints) -> Result<(), PathError> {
    let big_n = roles.targets.len();
    if roles.rows.is_empty() {
        for (l, &s) in roles.targets.iter().enumerate() {
            let lam = coord(b, roles.row0, pts.get(l))?;
            b.flip(roles.row0, s, Slot::U, Slot::W, lam)?;
        }
        return Ok(());
    }
    let mut rows = roles.rows.clone();
    for l in 0..big_n - 1 {
        point_step(b, roles.row0, &mut rows, roles.targets[l], pts.get(l))?;
    }

    let xl = pts.get(big_n - 1);
    let pivot = rows[0];
    let c = coord(b, pivot, xl)?;
    b.rebalance(pivot, Slot::W, Slot::U, c)?;
    for &r in &rows[1..] {
        let c = coord(b, r, xl)?;
        b.rebalance(r, Slot::W, Slot::U, c)?;
        b.reduce(pivot, r, (Slot::V, Slot::W))?;
    }
    let lam = coord(b, roles.row0, xl)?;
    b.flip(roles.row0, pivot, Slot::V, Slot::W, lam)?;
    let s = roles.targets[big_n - 1];
    b.reduce(s, pivot, (Slot::U, Slot::W))?;
    if !b.slot(s, Slot::W)?.eval(xl).map_err(inv)?.is_one() || !coord(b, roles.row0, xl)?.is_zero() {
        return Err(inv("final merge left a stray component"));
    }
    Ok(())
}

/// Move the `c^(ℓ)` component of every row into the target `S_ℓ`.
/// Costs `2|I| + 1` flips where `I` is the set of rows with a nonzero
/// coordinate at `x`, minus flips replaced by early merges.
fn point_step(b: &mut Builder, row0: usize, rows: &mut Vec<usize>, target: usize, x: &Coefficient) -> Result<(), PathError> {
    let pivot = rows[0];
    let c = coord(b, pivot, x)?;
    if c.is_zero() {
        return Err(inv("pivot row lost its component"));
    }
    b.rebalance(pivot, Slot::W, Slot::U, c)?;

    let mut undo = Vec::new();
    for &r in &rows.clone()[1..] {
        let lam = coord(b, r, x)?;
        if lam.is_zero() {
            continue;
        }
        if b.flip_cancels(r, pivot, Slot::W, &lam)? {
            b.rebalance(r, Slot::W, Slot::U, lam)?;
            b.reduce(pivot, r, (Slot::V, Slot::W))?;
        } else {
            b.flip(r, pivot, Slot::V, Slot::W, lam.clone())?;
            undo.push((r, lam));
        }
    }
    rows.retain(|&r| b.alive(r));

    let lam0 = coord(b, row0, x)?;
    b.flip(row0, pivot, Slot::V, Slot::W, lam0.clone())?;
    b.flip(pivot, target, Slot::U, Slot::W, x.domain().one())?;
    b.flip(row0, pivot, Slot::V, Slot::W, lam0.neg())?;

    for (r, lam) in undo {
        let back = lam.neg();
        if b.flip_cancels(r, pivot, Slot::W, &back)? {
            b.rebalance(r, Slot::W, Slot::U, back)?;
            b.reduce(pivot, r, (Slot::V, Slot::W))?;
        } else {
            b.flip(r, pivot, Slot::V, Slot::W, back)?;
        }
    }
    rows.retain(|&r| b.alive(r));
    Ok(())
}

/// State after stage one of the `(n, m)` construction, `1 <= n <= m`,
/// together with the positions of its roles: `(scheme, row0, rows, targets)`.
pub fn stage_two_source(n: usize, m: usize, pts: &EvalPoints) -> Result<(Scheme, usize, Vec<usize>, Vec<usize>), PathError> {
    check_points(n, m, pts, pts.domain())?;
    if n == 0 || m < n {
        return Err(inv(format!("stage two needs 1 <= n <= m, got ({n}, {m})")));
    }
    let pts = pts.prefix(n + m + 1);
    let mut b = Builder::new(standard_scheme(n, m, pts.domain()));
    let roles = stage_one(&mut b, n, m, &pts)?;
    let row0 = b.pos(roles.row0)?;
    let rows = roles.rows.iter().map(|&r| b.pos(r)).collect::<Result<_, _>>()?;
    let targets = roles.targets.iter().map(|&t| b.pos(t)).collect::<Result<_, _>>()?;
    Ok((b.scheme, row0, rows, targets))
}

/// Stage one alone on `standard_scheme(n, m)`: returns the rewritten
/// scheme and its flip count, `(n+1)m + n` for nonzero `x_{n+m}`. The
/// embedded copy of the `(n, m−1)` problem is not solved.
pub fn lemma_b_flips(n: usize, m: usize, pts: &EvalPoints) -> Result<(Scheme, usize), PathError> {
    check_points(n, m, pts, pts.domain())?;
    let mut b = Builder::new(standard_scheme(n, m, pts.domain()));
    if m == 0 {
        return Ok((b.scheme, 0));
    }
    let x = pts.get(n + m).clone();
    let id = |i: usize, j: usize| i * (m + 1) + j;
    for i in 0..=n {
        for j in (1..=m).rev() {
            b.flip(id(i, j), id(i, j - 1), Slot::U, Slot::W, x.clone())?;
        }
    }
    for i in 1..=n {
        b.flip(id(i, 0), id(0, 0), Slot::V, Slot::W, x.pow(i as u32))?;
    }
    Ok((b.scheme, b.flips))
}

/// Move the `c^(ℓ)` components of `row0` and `rows` (positions in `s`)
/// into `target`, returning the new scheme and the flip count. Positions
/// in the result shift when rows merge early.
pub fn lemma_c_flips(
    s: &Scheme,
    row0: usize,
    rows: &[usize],
    target: usize,
    x: &Coefficient,
) -> Result<(Scheme, usize), PathError> {
    if rows.is_empty() {
        return Err(inv("no pivot row"));
    }
    let mut b = Builder::new(s.clone());
    let mut rows = rows.to_vec();
    point_step(&mut b, row0, &mut rows, target, x)?;
    Ok((b.scheme, b.flips))
}

/// Replay a trace; with `verify_each`, every intermediate scheme must
/// contract to the multiplication tensor.
pub fn replay(trace: &MoveTrace, verify_each: bool) -> Result<Scheme, ReplayError> {
    let mut s = trace.start_scheme();
    if verify_each && !is_multiplication_tensor(&s) {
        return Err(ReplayError::BadStart);
    }
    for (step, mv) in trace.moves.iter().enumerate() {
        apply_move_in_place(&mut s, mv).map_err(|source| ReplayError::Illegal { step, source })?;
        if verify_each && !is_multiplication_tensor(&s) {
            return Err(ReplayError::Broken { step });
        }
    }
    Ok(s)
}
