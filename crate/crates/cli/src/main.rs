//! `bilin`: build, verify, transform, search, lift and certify schemes for
//! the polynomial multiplication tensor.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error,
//! 3 external tool failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use bilin_core::brent::{self, SolveMode, Verdict, SOLVER_ENV};
use bilin_core::construct::{self, EvalPoints};
use bilin_core::io;
use bilin_core::lift::{self, Classification, LiftOutcome};
use bilin_core::path;
use bilin_core::search::{self, SearchConfig, SplitPolicy};
use bilin_core::tensor::{flattening_rank, Slot};
use bilin_core::{is_multiplication_tensor, CoeffDomain, Scheme};

#[derive(Parser)]
#[command(name = "bilin", version, about = "Low-rank schemes for polynomial multiplication")]
struct Cli {
    /// Print a machine-readable JSON summary on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Skip verification of inputs, intermediate states and outputs.
    #[arg(long, global = true)]
    no_verify: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Standard,
    Karatsuba,
    ToomCook,
    Deg1,
    Deg2,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a known scheme.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, value_enum, default_value = "standard")]
        kind: Kind,
        #[arg(long, default_value = "Q", value_parser = parse_domain)]
        domain: CoeffDomain,
        /// Comma-separated evaluation points for toom-cook.
        #[arg(long)]
        points: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check that a scheme file contracts to the multiplication tensor.
    Verify { file: PathBuf },
    /// Emit the flip path from the standard scheme to Toom-Cook, or replay a trace.
    Path {
        #[arg(long, required_unless_present = "replay")]
        n: Option<usize>,
        #[arg(long, required_unless_present = "replay")]
        m: Option<usize>,
        #[arg(long, default_value = "Q", value_parser = parse_domain)]
        domain: CoeffDomain,
        #[arg(long)]
        points: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Report move counts and reference formulas.
        #[arg(long)]
        stats: bool,
        /// Replay a trace file instead of emitting one.
        #[arg(long, conflicts_with_all = ["n", "m", "points"])]
        replay: Option<PathBuf>,
    },
    /// Random flip-graph search for low-rank schemes.
    Search {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value = "Z2", value_parser = parse_domain)]
        domain: CoeffDomain,
        /// Master seed; a time-based seed is generated and reported when absent.
        #[arg(long)]
        seed: Option<u64>,
        /// Steps per attempt.
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: u64,
        #[arg(long, default_value_t = 20_000)]
        plateau: u64,
        #[arg(long, default_value_t = 8)]
        walks: usize,
        #[arg(long, default_value_t = 0)]
        restarts: u32,
        /// Stop a walk once this rank is reached.
        #[arg(long)]
        target: Option<usize>,
        /// Disable split excursions.
        #[arg(long)]
        no_splits: bool,
        /// Worker threads, 0 for all cores.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Start from this scheme instead of the standard one.
        #[arg(long)]
        from: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Hensel-lift a GF(2) scheme, reconstruct rationals and classify.
    Lift {
        file: PathBuf,
        #[arg(long, default_value_t = 20)]
        k: u32,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Rational reconstruction of a Z2^k scheme.
    Ratrecon {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write the Brent-equation CNF for rank r in DIMACS format.
    BrentCnf {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        r: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Decide whether a rank-r GF(2) scheme exists and write a certificate.
    BrentSolve {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        r: usize,
        /// External solver command; `{}` is replaced by the CNF path.
        #[arg(long, env = SOLVER_ENV)]
        solver_cmd: Option<String>,
        /// Use the built-in solver even when a solver command is configured.
        #[arg(long)]
        internal: bool,
        #[arg(long, default_value_t = 1 << 24)]
        max_decisions: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Rank, flattening ranks and verification status of a scheme file.
    Stats { file: PathBuf },
}

fn parse_domain(s: &str) -> Result<CoeffDomain, String> {
    s.parse().map_err(|e: bilin_core::coeff::CoeffError| e.to_string())
}

enum Failure {
    Verify(String),
    Usage(String),
    External(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verify(_) => 1,
            Failure::Usage(_) => 2,
            Failure::External(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verify(m) | Failure::Usage(m) | Failure::External(m) => m,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

type Outcome = Result<Value, Failure>;

fn read_scheme(p: &Path) -> Result<Scheme, Failure> {
    let text = std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
    io::scheme_from_json(&text).map_err(|e| usage(format!("{}: {e}", p.display())))
}

fn write_out(output: &Option<PathBuf>, text: &str, json_mode: bool) -> Result<(), Failure> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None if !json_mode => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
        None => Ok(()),
    }
}

/// Scalar fields of a summary as one `key=value` line on stderr.
fn note(v: &Value) {
    let Some(obj) = v.as_object() else { return };
    let parts: Vec<String> = obj
        .iter()
        .filter(|(_, x)| !x.is_array() && !x.is_object())
        .map(|(k, x)| format!("{k}={}", x.as_str().map(str::to_string).unwrap_or_else(|| x.to_string())))
        .collect();
    eprintln!("{}", parts.join(" "));
}

fn check(s: &Scheme, verify: bool, what: &str) -> Result<(), Failure> {
    if verify && !is_multiplication_tensor(s) {
        return Err(Failure::Verify(format!("{what} does not contract to the multiplication tensor")));
    }
    Ok(())
}

fn points_for(domain: CoeffDomain, count: usize, text: &Option<String>) -> Result<EvalPoints, Failure> {
    match text {
        Some(t) => EvalPoints::parse(domain, t).map_err(usage),
        None => EvalPoints::default_for(domain, count).map_err(usage),
    }
}

fn run(cli: Cli) -> Outcome {
    let verify = !cli.no_verify;
    let json_mode = cli.json;
    match cli.cmd {
        Cmd::Gen { n, m, kind, domain, points, output } => {
            let s = match kind {
                Kind::Standard => construct::standard_scheme(n, m.ok_or_else(|| usage("--m is required"))?, domain),
                Kind::Karatsuba => {
                    if n != 1 || m.is_some_and(|m| m != 1) {
                        return Err(usage("karatsuba is defined for n = m = 1"));
                    }
                    construct::karatsuba(domain)
                }
                Kind::ToomCook => {
                    let m = m.ok_or_else(|| usage("--m is required"))?;
                    let pts = points_for(domain, n + m + 1, &points)?;
                    construct::toom_cook_scheme(n, m, &pts).map_err(usage)?
                }
                Kind::Deg1 => {
                    if m.is_some_and(|m| m != 1) {
                        return Err(usage("deg1 schemes have m = 1"));
                    }
                    construct::deg1_scheme(n, domain).map_err(usage)?
                }
                Kind::Deg2 => {
                    if m.is_some_and(|m| m != 2) {
                        return Err(usage("deg2 schemes have m = 2"));
                    }
                    construct::deg2_scheme(n, domain).map_err(usage)?
                }
            };
            check(&s, verify, "generated scheme")?;
            write_out(&output, &io::scheme_to_json(&s), json_mode)?;
            Ok(json!({"n": s.n(), "m": s.m(), "domain": s.domain().to_string(), "rank": s.rank()}))
        }
        Cmd::Verify { file } => {
            let s = read_scheme(&file)?;
            let ok = is_multiplication_tensor(&s);
            let summary = json!({"n": s.n(), "m": s.m(), "domain": s.domain().to_string(), "rank": s.rank(), "verified": ok});
            if !ok {
                if json_mode {
                    println!("{summary}");
                }
                return Err(Failure::Verify(format!("{}: does not contract to the multiplication tensor", file.display())));
            }
            Ok(summary)
        }
        Cmd::Path { n, m, domain, points, output, stats, replay } => {
            if let Some(p) = replay {
                let text = std::fs::read_to_string(&p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
                let trace = io::trace_from_json(&text).map_err(usage)?;
                let fin = path::replay(&trace, verify).map_err(|e| Failure::Verify(e.to_string()))?;
                check(&fin, verify, "final scheme")?;
                write_out(&output, &io::scheme_to_json(&fin), json_mode)?;
                return Ok(json!({
                    "n": trace.n, "m": trace.m, "domain": trace.domain.to_string(),
                    "moves": trace.moves.len(), "final_rank": fin.rank(), "verified": verify,
                }));
            }
            let (n, m) = (n.expect("required"), m.expect("required"));
            let pts = points_for(domain, n + m + 1, &points)?;
            let (trace, st) = path::toomcook_path(n, m, &pts).map_err(usage)?;
            if verify {
                let fin = path::replay(&trace, true).map_err(|e| Failure::Verify(e.to_string()))?;
                let tc = construct::toom_cook_scheme(n, m, &pts.prefix(n + m + 1)).map_err(usage)?;
                if bilin_core::tensor::canonicalize(&fin) != bilin_core::tensor::canonicalize(&tc) {
                    return Err(Failure::Verify("path does not end at the Toom-Cook scheme".into()));
                }
            }
            write_out(&output, &io::trace_to_json(&trace), json_mode || stats)?;
            let mut v = json!({"n": n, "m": m, "domain": domain.to_string(), "moves": trace.moves.len(), "final_rank": st.final_rank});
            if stats {
                v["flips"] = json!(st.flips);
                v["reductions"] = json!(st.reductions);
                v["rebalances"] = json!(st.rebalances);
                v["recurrence_flips"] = json!(st.recurrence_flips);
                v["closed_form_flips"] = json!(st.closed_form_flips);
                v["generic_flips"] = json!(st.generic_flips);
                v["split_path_length"] = json!(st.split_path_length);
                if !json_mode {
                    for key in ["flips", "reductions", "rebalances", "final_rank", "recurrence_flips", "closed_form_flips", "generic_flips", "split_path_length"] {
                        println!("{key}={}", v[key]);
                    }
                }
            }
            Ok(v)
        }
        Cmd::Search { n, m, domain, seed, max_steps, plateau, walks, restarts, target, no_splits, threads, from, output } => {
            let seed = seed.unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos() as u64).unwrap_or(0));
            let cfg = SearchConfig {
                seed,
                domain,
                max_steps,
                plateau_limit: plateau,
                split_policy: if no_splits { SplitPolicy::Off } else { SearchConfig::default().split_policy },
                restarts,
                walks,
                target_rank: target,
                verify_each: false,
                threads,
            };
            let rep = match from {
                Some(p) => {
                    let start = read_scheme(&p)?;
                    if start.n() != n || start.m() != m || start.domain() != domain {
                        return Err(usage("--from scheme does not match --n, --m and --domain"));
                    }
                    search::search_from(&start, &cfg)
                }
                None => search::search_campaign(n, m, &cfg),
            }
            .map_err(usage)?;
            check(&rep.result.best, verify, "search result")?;
            write_out(&output, &io::scheme_to_json(&rep.result.best), json_mode)?;
            let walks: Vec<Value> = rep
                .walks
                .iter()
                .map(|w| {
                    json!({
                        "walk_id": w.walk_id, "seed": w.seed, "rank": w.rank, "steps_taken": w.steps_taken,
                        "found_at_step": w.found_at_step, "rng_transcript_hash": format!("{:016x}", w.rng_transcript_hash),
                    })
                })
                .collect();
            let v = json!({
                "n": n, "m": m, "domain": domain.to_string(), "seed": seed,
                "rank": rep.result.rank, "walk_id": rep.result.walk_id, "steps_taken": rep.result.steps_taken,
                "rng_transcript_hash": format!("{:016x}", rep.result.rng_transcript_hash), "walks": walks,
            });
            if !json_mode {
                note(&v);
            }
            Ok(v)
        }
        Cmd::Lift { file, k, output } => {
            let s = read_scheme(&file)?;
            let rep = lift::lift_pipeline(&s, k);
            let mut v = json!({"k": rep.k, "pivot_rule": rep.pivot_rule});
            let artifact = rep.scheme.as_ref().or(rep.modular.as_ref());
            match &rep.outcome {
                LiftOutcome::LiftedToZ => v["outcome"] = json!("lifted_to_Z"),
                LiftOutcome::LiftedToQ { denominator_lcm } => {
                    v["outcome"] = json!("lifted_to_Q");
                    v["denominator_lcm"] = json!(denominator_lcm.to_string());
                }
                LiftOutcome::LiftedMod2kOnly => v["outcome"] = json!("lifted_mod_2k_only"),
                LiftOutcome::Failed { stage, reason } => {
                    v["outcome"] = json!("failed");
                    v["stage"] = json!(stage);
                    v["reason"] = json!(reason);
                }
            }
            if let Some(a) = artifact {
                check(a, verify, "lifted scheme")?;
                v["domain"] = json!(a.domain().to_string());
                write_out(&output, &io::scheme_to_json(a), json_mode)?;
            }
            if !json_mode {
                note(&v);
            }
            if let LiftOutcome::Failed { reason, .. } = &rep.outcome {
                if json_mode {
                    println!("{v}");
                }
                return Err(Failure::Verify(reason.clone()));
            }
            Ok(v)
        }
        Cmd::Ratrecon { file, output } => {
            let s = read_scheme(&file)?;
            let q = lift::rational_reconstruct_scheme(&s).map_err(|e| Failure::Verify(e.to_string()))?;
            let class = lift::classify_coefficients(&q).map_err(|e| Failure::Verify(e.to_string()))?;
            write_out(&output, &io::scheme_to_json(&q), json_mode)?;
            let mut v = json!({"n": q.n(), "m": q.m(), "rank": q.rank(), "bound": lift::reconstruction_bound(match s.domain() { CoeffDomain::Zpow2(k) => k, _ => unreachable!() })});
            match class {
                Classification::Integer => v["class"] = json!("Z"),
                Classification::Localized { d, primes } => {
                    v["class"] = json!(format!("Z[1/{d}]"));
                    v["primes"] = json!(primes);
                }
            }
            if !json_mode {
                note(&v);
            }
            Ok(v)
        }
        Cmd::BrentCnf { n, m, r, output } => {
            let sys = brent::build_brent(n, m, r).map_err(usage)?;
            let cnf = brent::encode_cnf(&sys);
            write_out(&output, &cnf.to_dimacs(), json_mode)?;
            Ok(json!({
                "n": n, "m": m, "r": r, "equations": sys.equations(), "base_vars": sys.base_vars(),
                "vars": cnf.num_vars, "clauses": cnf.clauses.len(),
            }))
        }
        Cmd::BrentSolve { n, m, r, solver_cmd, internal, max_decisions, output } => {
            let sys = brent::build_brent(n, m, r).map_err(usage)?;
            let cnf = brent::encode_cnf(&sys);
            let mode = match solver_cmd {
                Some(command) if !internal => SolveMode::External { command },
                _ => SolveMode::Internal { max_decisions },
            };
            let cert = brent::solve(&cnf, &mode).map_err(|e| match e {
                brent::BrentError::External(_) | brent::BrentError::Malformed(_) => Failure::External(e.to_string()),
                brent::BrentError::DecodedInvalid | brent::BrentError::Violated(_) => Failure::Verify(e.to_string()),
                _ => usage(e),
            })?;
            let v = cert.to_value();
            let text = serde_json::to_string_pretty(&v).expect("serializable");
            write_out(&output, &text, json_mode)?;
            if matches!(cert.verdict, Verdict::Unknown) && !json_mode {
                eprintln!("solver budget exhausted");
            }
            Ok(v)
        }
        Cmd::Stats { file } => {
            let s = read_scheme(&file)?;
            let mut v = json!({
                "n": s.n(), "m": s.m(), "domain": s.domain().to_string(), "rank": s.rank(),
                "verified": is_multiplication_tensor(&s), "lower_bound": s.n() + s.m() + 1,
            });
            for slot in Slot::ALL {
                if let Ok(r) = flattening_rank(&s, slot) {
                    v[format!("flattening_rank_{}", slot.name())] = json!(r);
                }
            }
            if !json_mode {
                let keys = ["n", "m", "domain", "rank", "verified", "lower_bound", "flattening_rank_u", "flattening_rank_v", "flattening_rank_w"];
                for key in keys {
                    if let Some(x) = v.get(key) {
                        println!("{key}={}", x.as_str().map(str::to_string).unwrap_or_else(|| x.to_string()));
                    }
                }
            }
            Ok(v)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json_mode = cli.json;
    match run(cli) {
        Ok(v) => {
            if json_mode {
                println!("{v}");
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
