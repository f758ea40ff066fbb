//! `fraclap` — kernel dumps, operator application, validation, semigroup
//! evaluation, time evolution and localization ensembles.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 argument or parse error,
//! 3 budget or stability violation.

mod manifest;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use fraclap::localization::{self, EnsembleConfig, HamiltonianConfig, Probe, Sign};
use fraclap::operator::{self, EvalPath, OperatorSpec};
use fraclap::validation::{self, Level};
use fraclap::{kernel, Error, Sequence};

use manifest::{emit, RunManifest};

#[derive(Parser)]
#[command(name = "fraclap", version, about = "Discrete fractional Laplacian on the integer lattice")]
struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "FRACLAP_THREADS")]
    threads: Option<usize>,

    /// Leave the elapsed-time line out of the manifest so reruns are byte-identical.
    #[arg(long, global = true)]
    no_timing: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump K_s(k) for 0 ≤ k ≤ radius as CSV.
    Kernel {
        #[arg(long, value_parser = positive)]
        s: f64,
        #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(2..))]
        radius: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply (-Δ)^s to a sequence file.
    Apply {
        #[arg(long, value_parser = positive)]
        s: f64,
        /// Sequence in text format (`offset <n>` then one value per line).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 4096, value_parser = clap::value_parser!(u64).range(1..))]
        radius: u64,
        #[arg(long, value_enum, default_value_t = PathArg::Series)]
        path: PathArg,
        /// Admissible sup-norm truncation error.
        #[arg(long, default_value_t = 1e-2)]
        budget: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the cross-check suite and print a pass/fail table.
    Validate {
        #[arg(long, value_enum, default_value_t = LevelArg::Quick)]
        level: LevelArg,
        /// Perturb Γ(z) by a factor 1 + δz in the partial-sum check (fault injection).
        #[arg(long, hide = true, default_value_t = 0.0)]
        tamper_gamma: f64,
    },
    /// Heat semigroup S_z applied to a sequence file.
    Semigroup {
        #[arg(long)]
        z: f64,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 64)]
        radius: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Krylov-residual ensemble over disorder seeds.
    Localize {
        #[arg(long, value_parser = positive)]
        s: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Comma-separated seeds and inclusive ranges, e.g. `1,2,3` or `1..32`.
        #[arg(long, default_value = "1", value_parser = parse_seeds)]
        seeds: Seeds,
        #[arg(long, default_value_t = 2048)]
        window: usize,
        #[arg(long, default_value_t = 256)]
        kernel_radius: usize,
        #[arg(long, default_value_t = 32)]
        depth: usize,
        /// `odd`, `even` or `delta:<n>`; repeatable.
        #[arg(long = "probe", default_value = "odd", value_parser = parse_probe)]
        probes: Vec<Probe>,
        #[arg(long, default_value_t = localization::RESIDUAL_TOL)]
        residual_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate u' = ±H u by RK4.
    Evolve {
        #[arg(long, value_parser = positive)]
        s: f64,
        #[arg(long, default_value_t = 0.0)]
        c: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 256)]
        window: usize,
        #[arg(long, default_value_t = 64)]
        kernel_radius: usize,
        /// Final time.
        #[arg(long = "t")]
        t_end: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, value_enum, default_value_t = SignArg::Plus)]
        sign: SignArg,
        /// Initial state; δ_0 when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Also record this many equally spaced intermediate states.
        #[arg(long, default_value_t = 0)]
        snapshots: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PathArg {
    Series,
    Binomial,
    Quadrature,
    Composed,
}

impl PathArg {
    fn eval_path(self) -> EvalPath {
        match self {
            PathArg::Series => EvalPath::Series,
            PathArg::Binomial => EvalPath::Binomial,
            PathArg::Quadrature => EvalPath::Quadrature,
            PathArg::Composed => EvalPath::Composed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Plus,
    Minus,
}

#[derive(Clone)]
struct Seeds(Vec<u64>);

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        Ok(x) => Err(format!("must be positive and finite, got {x}")),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.parse().map_err(|e| format!("`{part}`: {e}"))?;
            let b: u64 = b.trim_start_matches('=').parse().map_err(|e| format!("`{part}`: {e}"))?;
            if b < a {
                return Err(format!("empty seed range `{part}`"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|e| format!("`{part}`: {e}"))?);
        }
    }
    if out.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(Seeds(out))
}

fn parse_probe(s: &str) -> Result<Probe, String> {
    match s {
        "odd" => Ok(Probe::odd()),
        "even" => Ok(Probe::even()),
        _ => s
            .strip_prefix("delta:")
            .and_then(|n| n.parse().ok())
            .map(Probe::delta)
            .ok_or_else(|| format!("unknown probe `{s}` (expected odd, even or delta:<n>)")),
    }
}

enum Failure {
    Usage(String),
    Numerical(String),
    Violation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::Domain(_) | Error::NearIntegerOrder { .. } => Failure::Usage(e.to_string()),
            Error::BudgetExceeded { .. } | Error::Stability { .. } => Failure::Violation(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

fn io_failure(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Numerical(format!("{}: {e}", path.display()))
}

fn read_sequence(path: &Path) -> Result<Sequence, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(Sequence::parse_text(&text)?)
}

fn write_output(path: Option<&Path>, body: &str) -> Result<(), Failure> {
    match path {
        Some(p) => emit(Some(p), body).map_err(io_failure(p)),
        None => emit(None, body).map_err(|e| Failure::Numerical(e.to_string())),
    }
}

fn sequence_csv(u: &Sequence) -> String {
    let mut out = String::from("n,value\n");
    if let Some((lo, hi)) = u.support() {
        for n in lo..=hi {
            writeln!(out, "{n},{:?}", u.get(n)).unwrap();
        }
    }
    out
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let started = Instant::now();
    let timing = |m: &RunManifest| m.render((!cli.no_timing).then(|| started.elapsed()));

    match cli.command {
        Command::Kernel { s, radius, out } => {
            let table = kernel::build_table(s, radius as usize)?;
            let m = RunManifest::new("kernel").param("s", format!("{s:?}")).param("radius", radius);
            let body = format!("{}{}", timing(&m), table.to_csv());
            write_output(out.as_deref(), &body)?;
            let summary = format!("A_s = {:?}\ntail_bound = {:?}", table.total_sum, table.tail_bound);
            if out.is_some() {
                println!("{summary}");
            } else {
                eprintln!("{summary}");
            }
        }
        Command::Apply { s, input, radius, path, budget, out } => {
            let u = read_sequence(&input)?;
            let spec = OperatorSpec::new(s, radius as usize).with_path(path.eval_path()).with_budget(budget);
            let applied = operator::apply(&u, &spec)?;
            let m = RunManifest::new("apply")
                .param("s", format!("{s:?}"))
                .param("input", input.display())
                .param("radius", radius)
                .param("path", format!("{:?}", spec.path).to_lowercase())
                .param("budget", format!("{budget:?}"))
                .param("certificate_pointwise", format!("{:?}", applied.certificate.pointwise))
                .param("certificate_discarded_l1", format!("{:?}", applied.certificate.discarded_l1));
            let body = format!("{}{}", timing(&m), sequence_csv(&applied.sequence));
            write_output(out.as_deref(), &body)?;
        }
        Command::Validate { level, tamper_gamma } => {
            let level = match level {
                LevelArg::Quick => Level::Quick,
                LevelArg::Full => Level::Full,
            };
            let report = validation::run(level, tamper_gamma)?;
            print!("{report}");
            if !cli.no_timing {
                println!("elapsed: {:.2}s", started.elapsed().as_secs_f64());
            }
            if !report.passed() {
                return Err(Failure::Numerical("validation failed".into()));
            }
        }
        Command::Semigroup { z, input, radius, out } => {
            let u = read_sequence(&input)?;
            let result = operator::heat_semigroup(&u, z, radius)?;
            let m = RunManifest::new("semigroup")
                .param("z", format!("{z:?}"))
                .param("input", input.display())
                .param("radius", radius);
            let body = format!("{}{}", timing(&m), sequence_csv(&result));
            write_output(out.as_deref(), &body)?;
        }
        Command::Localize { s, c, seeds, window, kernel_radius, depth, probes, residual_tol, out } => {
            let config = EnsembleConfig { s, amplitude: c, window_radius: window, kernel_radius, depth, residual_tol };
            let report = localization::monte_carlo(&config, &seeds.0, &probes)?;
            let seed_list: Vec<String> = seeds.0.iter().map(u64::to_string).collect();
            let probe_list: Vec<&str> = probes.iter().map(|p| p.id.as_str()).collect();
            let m = RunManifest::new("localize")
                .param("seed_list", seed_list.join(","))
                .param("probes", probe_list.join(","));
            let body = format!("{}{}", timing(&m), report.to_csv());
            write_output(out.as_deref(), &body)?;
        }
        Command::Evolve { s, c, seed, window, kernel_radius, t_end, dt, sign, input, snapshots, out } => {
            let u0 = match &input {
                Some(p) => read_sequence(p)?,
                None => Sequence::delta(0),
            };
            let disorder = localization::sample_disorder(c, seed, window)?;
            let config = HamiltonianConfig::new(s, kernel_radius, disorder);
            let sign_flag = match sign {
                SignArg::Plus => Sign::Plus,
                SignArg::Minus => Sign::Minus,
            };
            let mut rows = String::from("t,n,value\n");
            let mut u = u0;
            let mut t = 0.0;
            let segments = snapshots + 1;
            for i in 1..=segments {
                let target = t_end * i as f64 / segments as f64;
                u = localization::evolve(&u, &config, target - t, dt, sign_flag)?;
                t = target;
                if let Some((lo, hi)) = u.support() {
                    for n in lo..=hi {
                        writeln!(rows, "{t:?},{n},{:?}", u.get(n)).unwrap();
                    }
                }
            }
            let m = RunManifest::new("evolve")
                .param("s", format!("{s:?}"))
                .param("c", format!("{c:?}"))
                .param("seed", seed)
                .param("window", window)
                .param("kernel_radius", kernel_radius)
                .param("t", format!("{t_end:?}"))
                .param("dt", format!("{dt:?}"))
                .param("sign", if sign_flag == Sign::Plus { "plus" } else { "minus" })
                .param("input", input.as_ref().map_or("delta:0".to_string(), |p| p.display().to_string()))
                .param("snapshots", snapshots);
            let body = format!("{}{rows}", timing(&m));
            write_output(out.as_deref(), &body)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Violation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
