//! Minimal DPLL: chronological backtracking with unit propagation, no
//! learning. Decisions are made on base variables only; every auxiliary is
//! forced by propagation once the base variables are fixed.

use super::Lit;

pub const INTERNAL_CLAUSE_LIMIT: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DpllOutcome {
    /// Full assignment, index 0 unused.
    Sat(Vec<bool>),
    Unsat,
    Budget,
}

struct Solver<'a> {
    clauses: &'a [Vec<Lit>],
    occurs: Vec<Vec<usize>>,
    value: Vec<i8>,
    trail: Vec<usize>,
}

impl<'a> Solver<'a> {
    fn lit_value(&self, l: Lit) -> i8 {
        let v = self.value[l.unsigned_abs() as usize];
        if l > 0 {
            v
        } else {
            -v
        }
    }

    fn assign(&mut self, l: Lit) {
        self.value[l.unsigned_abs() as usize] = if l > 0 { 1 } else { -1 };
        self.trail.push(l.unsigned_abs() as usize);
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            let v = self.trail.pop().expect("nonempty trail");
            self.value[v] = 0;
        }
    }

    /// Propagate from trail position `from`; false on conflict.
    fn propagate(&mut self, mut from: usize) -> bool {
        while from < self.trail.len() {
            let var = self.trail[from];
            from += 1;
            for k in 0..self.occurs[var].len() {
                let c = &self.clauses[self.occurs[var][k]];
                let mut unassigned = None;
                let mut open = 0;
                let mut sat = false;
                for &l in c {
                    match self.lit_value(l) {
                        1 => {
                            sat = true;
                            break;
                        }
                        0 => {
                            open += 1;
                            unassigned = Some(l);
                        }
                        _ => {}
                    }
                }
                if sat {
                    continue;
                }
                match (open, unassigned) {
                    (0, _) => return false,
                    (1, Some(l)) => self.assign(l),
                    _ => {}
                }
            }
        }
        true
    }
}

/// Decide satisfiability, branching on variables `1..=branch_vars`.
pub fn dpll(num_vars: usize, clauses: &[Vec<Lit>], branch_vars: usize, max_decisions: u64) -> DpllOutcome {
    let mut occurs = vec![Vec::new(); num_vars + 1];
    for (ci, c) in clauses.iter().enumerate() {
        for &l in c {
            occurs[l.unsigned_abs() as usize].push(ci);
        }
    }
    let mut s = Solver { clauses, occurs, value: vec![0; num_vars + 1], trail: Vec::new() };
    for c in clauses {
        match c[..] {
            [] => return DpllOutcome::Unsat,
            [l] => match s.lit_value(l) {
                -1 => return DpllOutcome::Unsat,
                0 => s.assign(l),
                _ => {}
            },
            _ => {}
        }
    }
    if !s.propagate(0) {
        return DpllOutcome::Unsat;
    }
    // stack of (trail length before decision, decided literal, tried both)
    let mut stack: Vec<(usize, Lit, bool)> = Vec::new();
    let mut decisions = 0u64;
    loop {
        let next = (1..=branch_vars.min(num_vars)).find(|&v| s.value[v] == 0);
        let Some(var) = next else {
            if let Some(v) = (1..=num_vars).find(|&v| s.value[v] == 0) {
                // auxiliaries left free: any value works once all clauses hold
                let lit = v as Lit;
                let mark = s.trail.len();
                s.assign(-lit);
                if s.propagate(mark) {
                    continue;
                }
                s.undo_to(mark);
                s.assign(lit);
                if s.propagate(mark) {
                    continue;
                }
                s.undo_to(mark);
            } else if clauses.iter().all(|c| c.iter().any(|&l| s.lit_value(l) == 1)) {
                return DpllOutcome::Sat(s.value.iter().map(|&v| v == 1).collect());
            }
            if !backtrack(&mut s, &mut stack) {
                return DpllOutcome::Unsat;
            }
            continue;
        };
        decisions += 1;
        if decisions > max_decisions {
            return DpllOutcome::Budget;
        }
        let mark = s.trail.len();
        stack.push((mark, -(var as Lit), false));
        s.assign(-(var as Lit));
        if !s.propagate(mark) && !backtrack(&mut s, &mut stack) {
            return DpllOutcome::Unsat;
        }
    }
}

/// Flip the most recent untried decision; false when none remain.
fn backtrack(s: &mut Solver, stack: &mut Vec<(usize, Lit, bool)>) -> bool {
    while let Some((mark, lit, tried)) = stack.pop() {
        s.undo_to(mark);
        if tried {
            continue;
        }
        stack.push((mark, -lit, true));
        s.assign(-lit);
        if s.propagate(mark) {
            return true;
        }
    }
    false
}
