//! Brent equations over GF(2), their CNF encoding and SAT-based
//! certification of rank bounds.
//!
//! A rank-`r` scheme for `(n, m)` exists over GF(2) exactly when the Brent
//! system `Σ_ℓ α_{ℓ,i} β_{ℓ,j} γ_{ℓ,k} = δ_{i+j,k}` has a solution. The
//! encoding introduces `p = α ∧ β` and `q = p ∧ γ` for every product, then
//! enforces each equation's parity with a chain of 3-literal XOR windows.

mod dpll;
mod external;

use std::fmt::Write as _;
use std::time::Instant;

use serde_json::{json, Value};
use thiserror::Error;

use crate::coeff::CoeffDomain;
use crate::tensor::{is_multiplication_tensor, CoeffVector, Scheme, Term};

pub use dpll::{dpll, DpllOutcome, INTERNAL_CLAUSE_LIMIT};
pub use external::{parse_solver_output, run_external, ExternalAnswer, SOLVER_ENV};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BrentError {
    #[error("candidate rank must be at least 1")]
    ZeroRank,
    #[error("assignment has {found} values, expected {expected}")]
    AssignmentLength { found: usize, expected: usize },
    #[error("assignment violates clause {0}")]
    Violated(usize),
    #[error("decoded scheme fails verification")]
    DecodedInvalid,
    #[error("internal solver limited to {limit} clauses, instance has {found}")]
    TooLarge { found: usize, limit: usize },
    #[error("external solver failed: {0}")]
    External(String),
    #[error("malformed solver output: {0}")]
    Malformed(String),
}

/// The Brent system for a candidate rank `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BrentSystem {
    pub n: usize,
    pub m: usize,
    pub r: usize,
}

impl BrentSystem {
    pub fn equations(&self) -> usize {
        (self.n + 1) * (self.m + 1) * (self.n + self.m + 1)
    }

    pub fn base_vars(&self) -> usize {
        self.r * self.block()
    }

    fn block(&self) -> usize {
        2 * (self.n + self.m) + 3
    }

    /// 0-based index of `α_{ℓ,i}`, `β_{ℓ,j}` or `γ_{ℓ,k}` (slot 0, 1, 2).
    pub fn base_index(&self, l: usize, slot: usize, idx: usize) -> usize {
        let off = match slot {
            0 => 0,
            1 => self.n + 1,
            _ => self.n + self.m + 2,
        };
        l * self.block() + off + idx
    }

    /// Evaluate every equation at a base assignment.
    pub fn satisfied_by(&self, base: &[bool]) -> bool {
        let (lu, lv, lw) = (self.n + 1, self.m + 1, self.n + self.m + 1);
        for i in 0..lu {
            for j in 0..lv {
                for k in 0..lw {
                    let mut acc = false;
                    for l in 0..self.r {
                        acc ^= base[self.base_index(l, 0, i)] & base[self.base_index(l, 1, j)] & base[self.base_index(l, 2, k)];
                    }
                    if acc != (i + j == k) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Base assignment of a GF(2) scheme, padded with zero terms.
    pub fn assignment_of(&self, s: &Scheme) -> Option<Vec<bool>> {
        if s.domain() != CoeffDomain::Gf2 || s.n() != self.n || s.m() != self.m || s.rank() > self.r {
            return None;
        }
        let mut base = vec![false; self.base_vars()];
        for (l, t) in s.terms().iter().enumerate() {
            for (slot, v) in [&t.u, &t.v, &t.w].into_iter().enumerate() {
                for idx in 0..v.len() {
                    base[self.base_index(l, slot, idx)] = !v.get(idx).is_zero();
                }
            }
        }
        Some(base)
    }
}

pub fn build_brent(n: usize, m: usize, r: usize) -> Result<BrentSystem, BrentError> {
    if r == 0 {
        return Err(BrentError::ZeroRank);
    }
    Ok(BrentSystem { n, m, r })
}

/// DIMACS literal: positive for the variable, negative for its negation.
pub type Lit = i32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfInstance {
    pub system: BrentSystem,
    pub num_vars: usize,
    pub clauses: Vec<Vec<Lit>>,
    /// DIMACS variables of the `α∧β` products.
    pub product_vars: std::ops::Range<usize>,
    /// DIMACS variables of the `α∧β∧γ` products.
    pub triple_vars: std::ops::Range<usize>,
    /// DIMACS variables of the parity chains.
    pub parity_vars: std::ops::Range<usize>,
}

impl CnfInstance {
    /// DIMACS variable of base index `b` (base variables come first).
    pub fn var_of_base(&self, b: usize) -> usize {
        b + 1
    }

    pub fn to_dimacs(&self) -> String {
        let s = &self.system;
        let mut out = String::new();
        let _ = writeln!(out, "c brent n={} m={} r={}", s.n, s.m, s.r);
        for l in 0..s.r {
            for (slot, name, len) in [(0, "alpha", s.n + 1), (1, "beta", s.m + 1), (2, "gamma", s.n + s.m + 1)] {
                let first = self.var_of_base(s.base_index(l, slot, 0));
                let _ = writeln!(out, "c varmap {name} term={l} vars={}..{}", first, first + len - 1);
            }
        }
        let _ = writeln!(out, "c aux products {}..{}", self.product_vars.start, self.product_vars.end - 1);
        let _ = writeln!(out, "c aux triples {}..{}", self.triple_vars.start, self.triple_vars.end - 1);
        if !self.parity_vars.is_empty() {
            let _ = writeln!(out, "c aux parity {}..{}", self.parity_vars.start, self.parity_vars.end - 1);
        }
        let _ = writeln!(out, "p cnf {} {}", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                let _ = write!(out, "{l} ");
            }
            out.push_str("0\n");
        }
        out
    }

    /// True when the full assignment (index 0 unused) satisfies every clause.
    pub fn check(&self, full: &[bool]) -> Result<(), BrentError> {
        for (ci, c) in self.clauses.iter().enumerate() {
            if !c.iter().any(|&l| full[l.unsigned_abs() as usize] == (l > 0)) {
                return Err(BrentError::Violated(ci));
            }
        }
        Ok(())
    }

    /// Extend a base assignment through the auxiliary definitions.
    pub fn complete(&self, base: &[bool]) -> Result<Vec<bool>, BrentError> {
        let sys = &self.system;
        if base.len() != sys.base_vars() {
            return Err(BrentError::AssignmentLength { found: base.len(), expected: sys.base_vars() });
        }
        let mut full = vec![false; self.num_vars + 1];
        full[1..=base.len()].copy_from_slice(base);
        // auxiliaries are defined in increasing variable order, each from
        // earlier ones, so one pass over the defining clauses suffices
        for (v, def) in self.definitions() {
            full[v] = match def {
                Def::And(a, b) => full[a] & full[b],
                Def::Xor(a, b) => full[a] ^ full[b],
            };
        }
        Ok(full)
    }

    fn definitions(&self) -> Vec<(usize, Def)> {
        encode_layout(&self.system).defs
    }
}

#[derive(Debug, Clone, Copy)]
enum Def {
    And(usize, usize),
    Xor(usize, usize),
}

struct Layout {
    num_vars: usize,
    defs: Vec<(usize, Def)>,
    clauses: Vec<Vec<Lit>>,
    products: std::ops::Range<usize>,
    triples: std::ops::Range<usize>,
    parity: std::ops::Range<usize>,
}

fn encode_layout(sys: &BrentSystem) -> Layout {
    let (lu, lv, lw) = (sys.n + 1, sys.m + 1, sys.n + sys.m + 1);
    let base = |l, slot, idx| sys.base_index(l, slot, idx) + 1;
    let mut next = sys.base_vars() + 1;
    let mut defs = Vec::new();
    let mut clauses: Vec<Vec<Lit>> = Vec::new();
    let and = |z: usize, a: usize, b: usize, clauses: &mut Vec<Vec<Lit>>| {
        let (z, a, b) = (z as Lit, a as Lit, b as Lit);
        clauses.push(vec![-z, a]);
        clauses.push(vec![-z, b]);
        clauses.push(vec![z, -a, -b]);
    };

    let products_start = next;
    let mut prod = vec![0usize; sys.r * lu * lv];
    for l in 0..sys.r {
        for i in 0..lu {
            for j in 0..lv {
                let z = next;
                next += 1;
                prod[(l * lu + i) * lv + j] = z;
                defs.push((z, Def::And(base(l, 0, i), base(l, 1, j))));
                and(z, base(l, 0, i), base(l, 1, j), &mut clauses);
            }
        }
    }
    let products = products_start..next;

    let triples_start = next;
    let mut triple = vec![0usize; sys.r * lu * lv * lw];
    for l in 0..sys.r {
        for i in 0..lu {
            for j in 0..lv {
                for k in 0..lw {
                    let z = next;
                    next += 1;
                    let p = prod[(l * lu + i) * lv + j];
                    triple[((l * lu + i) * lv + j) * lw + k] = z;
                    defs.push((z, Def::And(p, base(l, 2, k))));
                    and(z, p, base(l, 2, k), &mut clauses);
                }
            }
        }
    }
    let triples = triples_start..next;

    let parity_start = next;
    for i in 0..lu {
        for j in 0..lv {
            for k in 0..lw {
                let mut acc = triple[((i * lv) + j) * lw + k];
                for l in 1..sys.r {
                    let x = triple[((l * lu + i) * lv + j) * lw + k];
                    let z = next;
                    next += 1;
                    defs.push((z, Def::Xor(acc, x)));
                    xor_window(z, acc, x, &mut clauses);
                    acc = z;
                }
                let lit = acc as Lit;
                clauses.push(vec![if i + j == k { lit } else { -lit }]);
            }
        }
    }
    let parity = parity_start..next;
    Layout { num_vars: next - 1, defs, clauses, products, triples, parity }
}

/// Clauses for `z = a ⊕ b`, i.e. `z ⊕ a ⊕ b = 0`.
fn xor_window(z: usize, a: usize, b: usize, clauses: &mut Vec<Vec<Lit>>) {
    let (z, a, b) = (z as Lit, a as Lit, b as Lit);
    clauses.push(vec![-z, a, b]);
    clauses.push(vec![z, -a, b]);
    clauses.push(vec![z, a, -b]);
    clauses.push(vec![-z, -a, -b]);
}

pub fn encode_cnf(sys: &BrentSystem) -> CnfInstance {
    let lay = encode_layout(sys);
    CnfInstance {
        system: *sys,
        num_vars: lay.num_vars,
        clauses: lay.clauses,
        product_vars: lay.products,
        triple_vars: lay.triples,
        parity_vars: lay.parity,
    }
}

/// Read a scheme from a full assignment (index 0 unused).
pub fn decode_assignment(cnf: &CnfInstance, full: &[bool]) -> Result<Scheme, BrentError> {
    if full.len() != cnf.num_vars + 1 {
        return Err(BrentError::AssignmentLength { found: full.len(), expected: cnf.num_vars + 1 });
    }
    cnf.check(full)?;
    let sys = &cnf.system;
    let lens = [sys.n + 1, sys.m + 1, sys.n + sys.m + 1];
    let mut terms = Vec::with_capacity(sys.r);
    for l in 0..sys.r {
        let slot = |s: usize| {
            let bits = (0..lens[s]).filter(|&i| full[cnf.var_of_base(sys.base_index(l, s, i))]).fold(0u64, |acc, i| acc | 1 << i);
            CoeffVector::from_bits(lens[s], bits)
        };
        terms.push(Term::new(slot(0), slot(1), slot(2)));
    }
    let s = Scheme::new(sys.n, sys.m, CoeffDomain::Gf2, terms).map_err(|_| BrentError::DecodedInvalid)?;
    if !is_multiplication_tensor(&s) {
        return Err(BrentError::DecodedInvalid);
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveMode {
    /// Built-in DPLL with a decision budget.
    Internal { max_decisions: u64 },
    /// Command template; `{}` is replaced by the DIMACS path, otherwise the
    /// path is appended.
    External { command: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// Verified scheme decoded from the model.
    Sat(Scheme),
    /// Refuted by exhaustive internal search.
    Unsat,
    /// Reported unsatisfiable by an external solver, not independently checked.
    ClaimedUnsat,
    Unknown,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Sat(_) => "sat",
            Verdict::Unsat => "unsat",
            Verdict::ClaimedUnsat => "claimed-unsat",
            Verdict::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub verdict: Verdict,
    pub solver: String,
    pub time_s: f64,
}

impl Certificate {
    pub fn to_value(&self) -> Value {
        let mut v = json!({
            "n": self.n,
            "m": self.m,
            "r": self.r,
            "verdict": self.verdict.label(),
            "solver": self.solver,
            "time": self.time_s,
        });
        if let Verdict::Sat(s) = &self.verdict {
            v["scheme"] = crate::io::scheme_to_value(s);
        }
        v
    }
}

/// Solve `cnf` and verify the answer where possible.
pub fn solve(cnf: &CnfInstance, mode: &SolveMode) -> Result<Certificate, BrentError> {
    let started = Instant::now();
    let (verdict, solver) = match mode {
        SolveMode::Internal { max_decisions } => {
            if cnf.clauses.len() > INTERNAL_CLAUSE_LIMIT {
                return Err(BrentError::TooLarge { found: cnf.clauses.len(), limit: INTERNAL_CLAUSE_LIMIT });
            }
            let base = cnf.system.base_vars();
            let v = match dpll(cnf.num_vars, &cnf.clauses, base, *max_decisions) {
                DpllOutcome::Sat(full) => Verdict::Sat(decode_assignment(cnf, &full)?),
                DpllOutcome::Unsat => Verdict::Unsat,
                DpllOutcome::Budget => Verdict::Unknown,
            };
            (v, "internal-dpll".to_string())
        }
        SolveMode::External { command } => {
            let (answer, identity) = run_external(command, &cnf.to_dimacs())?;
            let v = match answer {
                ExternalAnswer::Sat(model) => {
                    let mut full = vec![false; cnf.num_vars + 1];
                    for lit in model {
                        let idx = lit.unsigned_abs() as usize;
                        if idx <= cnf.num_vars {
                            full[idx] = lit > 0;
                        }
                    }
                    Verdict::Sat(decode_assignment(cnf, &full)?)
                }
                ExternalAnswer::Unsat => Verdict::ClaimedUnsat,
                ExternalAnswer::Unknown => Verdict::Unknown,
            };
            (v, identity)
        }
    };
    let sys = cnf.system;
    Ok(Certificate { n: sys.n, m: sys.m, r: sys.r, verdict, solver, time_s: started.elapsed().as_secs_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{karatsuba, standard_scheme};

    #[test]
    fn counts() {
        let s = build_brent(1, 1, 3).unwrap();
        assert_eq!((s.equations(), s.base_vars()), (12, 21));
        let s = build_brent(2, 2, 5).unwrap();
        assert_eq!((s.equations(), s.base_vars()), (45, 55));
        assert_eq!(build_brent(1, 1, 0), Err(BrentError::ZeroRank));
    }

    #[test]
    fn karatsuba_satisfies_equations_and_clauses() {
        let sys = build_brent(1, 1, 3).unwrap();
        let base = sys.assignment_of(&karatsuba(CoeffDomain::Gf2)).unwrap();
        assert!(sys.satisfied_by(&base));
        let cnf = encode_cnf(&sys);
        let full = cnf.complete(&base).unwrap();
        cnf.check(&full).unwrap();
        assert_eq!(decode_assignment(&cnf, &full).unwrap(), karatsuba(CoeffDomain::Gf2));
    }

    #[test]
    fn zero_assignment_rejected() {
        let cnf = encode_cnf(&build_brent(1, 1, 3).unwrap());
        let full = cnf.complete(&[false; 21]).unwrap();
        assert!(matches!(decode_assignment(&cnf, &full), Err(BrentError::Violated(_))));
    }

    #[test]
    fn clause_shapes() {
        let cnf = encode_cnf(&build_brent(1, 1, 3).unwrap());
        // 3 clauses per product, 4 per window, one unit per equation
        let products = 3 * 4 + 3 * 12;
        let windows = 12 * 2;
        assert_eq!(cnf.clauses.len(), 3 * products + 4 * windows + 12);
        assert_eq!(cnf.num_vars, 21 + products + windows);
        assert!(cnf.clauses.iter().all(|c| c.len() <= 3));
    }

    #[test]
    fn dimacs_header_and_varmap() {
        let cnf = encode_cnf(&build_brent(1, 1, 2).unwrap());
        let text = cnf.to_dimacs();
        assert!(text.contains(&format!("p cnf {} {}", cnf.num_vars, cnf.clauses.len())));
        assert!(text.contains("c varmap alpha term=0 vars=1..2"));
        assert!(text.contains("c varmap gamma term=1 vars=12..14"));
        assert_eq!(text.lines().filter(|l| l.ends_with(" 0")).count(), cnf.clauses.len());
    }

    #[test]
    fn exhaustive_rank_two_oracle() {
        // no assignment of the 14 base variables satisfies the (1,1) system
        let sys = build_brent(1, 1, 2).unwrap();
        assert!((0u32..1 << 14).all(|x| {
            let base: Vec<bool> = (0..14).map(|b| x >> b & 1 == 1).collect();
            !sys.satisfied_by(&base)
        }));
    }

    #[test]
    fn internal_verdicts_for_degree_one() {
        let mode = SolveMode::Internal { max_decisions: 1 << 20 };
        let c2 = solve(&encode_cnf(&build_brent(1, 1, 2).unwrap()), &mode).unwrap();
        assert_eq!(c2.verdict, Verdict::Unsat);
        let c3 = solve(&encode_cnf(&build_brent(1, 1, 3).unwrap()), &mode).unwrap();
        let Verdict::Sat(s) = c3.verdict else { panic!("expected sat") };
        assert_eq!(s.rank(), 3);
        let c4 = solve(&encode_cnf(&build_brent(1, 1, 4).unwrap()), &mode).unwrap();
        assert!(matches!(c4.verdict, Verdict::Sat(_)));
    }

    #[test]
    fn padded_standard_scheme_satisfies_larger_rank() {
        let sys = build_brent(2, 1, 7).unwrap();
        let base = sys.assignment_of(&standard_scheme(2, 1, CoeffDomain::Gf2)).unwrap();
        let cnf = encode_cnf(&sys);
        cnf.check(&cnf.complete(&base).unwrap()).unwrap();
    }

    #[test]
    fn certificate_json_fields() {
        let cert = solve(&encode_cnf(&build_brent(1, 1, 2).unwrap()), &SolveMode::Internal { max_decisions: 1 << 20 }).unwrap();
        let v = cert.to_value();
        for key in ["n", "m", "r", "verdict", "solver", "time"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["verdict"], "unsat");
    }
}
