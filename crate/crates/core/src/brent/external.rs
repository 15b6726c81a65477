//! Bridge to an external DIMACS solver run as a separate process.

use std::process::Command;

use super::{BrentError, Lit};

/// Environment variable holding the default solver command template.
pub const SOLVER_ENV: &str = "BILIN_SOLVER_CMD";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExternalAnswer {
    Sat(Vec<Lit>),
    Unsat,
    Unknown,
}

/// Parse competition-style output: an `s ...` status line and `v ...`
/// model lines.
pub fn parse_solver_output(text: &str) -> Result<ExternalAnswer, BrentError> {
    let mut status = None;
    let mut model = Vec::new();
    for line in text.lines().map(str::trim) {
        if let Some(rest) = line.strip_prefix("s ") {
            status = Some(match rest.trim() {
                "SATISFIABLE" => ExternalAnswer::Sat(Vec::new()),
                "UNSATISFIABLE" => ExternalAnswer::Unsat,
                "UNKNOWN" | "INDETERMINATE" => ExternalAnswer::Unknown,
                other => return Err(BrentError::Malformed(format!("status {other:?}"))),
            });
        } else if let Some(rest) = line.strip_prefix("v ") {
            for tok in rest.split_whitespace() {
                let lit: Lit = tok.parse().map_err(|_| BrentError::Malformed(format!("model token {tok:?}")))?;
                if lit != 0 {
                    model.push(lit);
                }
            }
        }
    }
    match status {
        Some(ExternalAnswer::Sat(_)) => Ok(ExternalAnswer::Sat(model)),
        Some(other) => Ok(other),
        None => Err(BrentError::Malformed("no status line".into())),
    }
}

/// Write `dimacs` to a temporary file and run `template` on it. Returns the
/// answer and a solver identity string (program name plus the first
/// comment line of its output, which solvers use for their version).
pub fn run_external(template: &str, dimacs: &str) -> Result<(ExternalAnswer, String), BrentError> {
    let dir = std::env::temp_dir();
    let path = dir.join(format!("bilin-{}-{}.cnf", std::process::id(), unique()));
    std::fs::write(&path, dimacs).map_err(|e| BrentError::External(e.to_string()))?;
    let path_str = path.to_string_lossy().into_owned();
    let mut words: Vec<String> = template.split_whitespace().map(str::to_string).collect();
    if words.is_empty() {
        return Err(BrentError::External("empty solver command".into()));
    }
    if words.iter().any(|w| w.contains("{}")) {
        for w in &mut words {
            *w = w.replace("{}", &path_str);
        }
    } else {
        words.push(path_str);
    }
    let out = Command::new(&words[0]).args(&words[1..]).output();
    let _ = std::fs::remove_file(&path);
    let out = out.map_err(|e| BrentError::External(format!("{}: {e}", words[0])))?;
    let stdout = String::from_utf8_lossy(&out.stdout);
    // exit codes 10 and 20 are the SAT and UNSAT conventions
    if !out.status.success() && !matches!(out.status.code(), Some(10 | 20)) {
        return Err(BrentError::External(format!("{} exited with {}", words[0], out.status)));
    }
    let answer = parse_solver_output(&stdout)?;
    let mut identity = words[0].clone();
    if let Some(c) = stdout.lines().find_map(|l| l.strip_prefix("c ")) {
        identity = format!("{identity} ({})", c.trim());
    }
    Ok((answer, identity))
}

fn unique() -> u64 {
    use std::sync::atomic::{AtomicU64, Ordering};
    static NEXT: AtomicU64 = AtomicU64::new(0);
    NEXT.fetch_add(1, Ordering::Relaxed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_outputs() {
        let sat = parse_solver_output("c hello\ns SATISFIABLE\nv 1 -2\nv 3 0\n").unwrap();
        assert_eq!(sat, ExternalAnswer::Sat(vec![1, -2, 3]));
        assert_eq!(parse_solver_output("s UNSATISFIABLE\n").unwrap(), ExternalAnswer::Unsat);
        assert!(parse_solver_output("v 1 0\n").is_err());
        assert!(parse_solver_output("s MAYBE\n").is_err());
        assert!(parse_solver_output("s SATISFIABLE\nv x 0\n").is_err());
    }

    #[test]
    fn missing_program_is_an_error() {
        let r = run_external("/nonexistent/solver", "p cnf 1 1\n1 0\n");
        assert!(matches!(r, Err(BrentError::External(_))));
    }
}
