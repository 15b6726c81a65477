//! DIMACS front end for varisat printing competition-style output:
//! `s SATISFIABLE` with `v` model lines, or `s UNSATISFIABLE`.

use std::fs::File;
use std::io::{BufReader, Write};
use std::process::ExitCode;

fn main() -> ExitCode {
    let Some(path) = std::env::args().nth(1) else {
        eprintln!("usage: bilin-sat <file.cnf>");
        return ExitCode::from(2);
    };
    let file = match File::open(&path) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("{path}: {e}");
            return ExitCode::from(2);
        }
    };
    let mut solver = varisat::Solver::new();
    if let Err(e) = solver.add_dimacs_cnf(BufReader::new(file)) {
        eprintln!("{path}: {e}");
        return ExitCode::from(2);
    }
    let out = std::io::stdout();
    let mut out = out.lock();
    let _ = writeln!(out, "c bilin-sat varisat 0.2");
    match solver.solve() {
        Ok(true) => {
            let _ = writeln!(out, "s SATISFIABLE");
            let model = solver.model().unwrap_or_default();
            for chunk in model.chunks(16) {
                let line: Vec<String> = chunk.iter().map(|l| l.to_dimacs().to_string()).collect();
                let _ = writeln!(out, "v {}", line.join(" "));
            }
            let _ = writeln!(out, "v 0");
            ExitCode::from(10)
        }
        Ok(false) => {
            let _ = writeln!(out, "s UNSATISFIABLE");
            ExitCode::from(20)
        }
        Err(e) => {
            eprintln!("solver error: {e}");
            let _ = writeln!(out, "s UNKNOWN");
            ExitCode::from(1)
        }
    }
}
