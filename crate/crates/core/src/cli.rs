//! Command-line front end: solve or synthesize single instances, generate
//! counter benchmarks, and batch-compare the four solver variants with
//! CSV output.
//!
//! Exit codes follow the synthesis-competition convention: 10 realizable,
//! 20 unrealizable, 2 out of resources, 1 usage or input error, 3
//! internal error.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use clap::{ArgAction, Parser, Subcommand, ValueEnum};
use log::info;

use crate::aiger::{
    parse_aag, split_inputs, write_aag, write_controlled_aag, AigFile, AndGate,
    CircuitSpec, Lit,
};
use crate::bdd::{BddError, BddRef};
use crate::cegar::{abs_synth, AbsImpl, CegarOpts};
use crate::game::{
    EncodeOpts, GameError, GameResult, Limits, Status, SymbolicGame, UpreImpl,
};
use crate::oracle::ExplicitGame;
use crate::strategy::{
    det_strat, eve_quasi_strategy, rerun_with_reachable, verify_controller,
    winning_region, Controller, DetOpts, Verdict,
};

/// Environment variable overriding the BDD node cap when no flag is given.
pub const NODE_LIMIT_ENV: &str = "AIGSYNTH_NODE_LIMIT";

const EXIT_REALIZABLE: i32 = 10;
const EXIT_UNREALIZABLE: i32 = 20;
const EXIT_RESOURCE: i32 = 2;
const EXIT_USAGE: i32 = 1;
const EXIT_INTERNAL: i32 = 3;

#[derive(Parser)]
#[command(
    name = "aigsynth",
    about = "Safety-game solver and controller synthesizer for AIGER circuits",
    version
)]
struct Cli {
    /// More logging per repetition (info, debug, trace)
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide whether a controller exists for the specification
    Solve(SolveArgs),
    /// Extract a controller, verify it, and write the controlled circuit
    Synth(SynthArgs),
    /// Generate an n-bit counter benchmark instance
    GenCnt(GenCntArgs),
    /// Run algorithms over a directory of instances and emit CSV
    Bench(BenchArgs),
    /// Solve by explicit-state enumeration (diagnostics only)
    #[command(hide = true)]
    Explicit(ExplicitArgs),
}

/// Solver variant selection; CSV names are C, C-TL, A, A-TL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    /// Classic fixpoint against the monolithic transition relation
    C,
    /// Classic fixpoint by substituting the update functions
    Ctl,
    /// Abstraction refinement with the monolithic abstract relation
    A,
    /// Abstraction refinement with partitioned abstract operators
    Atl,
}

impl Algo {
    pub fn csv_name(self) -> &'static str {
        match self {
            Algo::C => "C",
            Algo::Ctl => "C-TL",
            Algo::A => "A",
            Algo::Atl => "A-TL",
        }
    }
}

#[derive(Parser)]
struct SolveArgs {
    /// Specification in ASCII AIGER format
    path: PathBuf,
    /// Solver variant
    #[arg(long, value_enum, default_value_t = Algo::C)]
    algo: Algo,
    /// Time budget in seconds
    #[arg(long, default_value_t = 500)]
    timeout: u64,
    /// Abort once the BDD table reaches this many nodes
    #[arg(long)]
    node_limit: Option<usize>,
}

#[derive(Parser)]
struct SynthArgs {
    /// Specification in ASCII AIGER format
    path: PathBuf,
    /// Where to write the controlled circuit
    #[arg(long)]
    out: PathBuf,
    /// Solver variant
    #[arg(long, value_enum, default_value_t = Algo::C)]
    algo: Algo,
    /// Time budget in seconds
    #[arg(long, default_value_t = 500)]
    timeout: u64,
    /// Abort once the BDD table reaches this many nodes
    #[arg(long)]
    node_limit: Option<usize>,
    /// Re-extract with the care set narrowed to the reachable states
    #[arg(long)]
    rerun_reach: bool,
    /// Minimize against the negated zero-cofactor instead
    #[arg(long)]
    alt_restrict: bool,
}

#[derive(Parser)]
struct GenCntArgs {
    /// Counter width in bits
    #[arg(value_parser = clap::value_parser!(u32).range(1..=30))]
    n: u32,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Parser)]
struct BenchArgs {
    /// Directory containing .aag instances
    dir: PathBuf,
    /// Comma-separated solver variants to run
    #[arg(long, value_enum, value_delimiter = ',',
          default_values_t = [Algo::C, Algo::Ctl, Algo::A, Algo::Atl])]
    algos: Vec<Algo>,
    /// Time budget in seconds, per run
    #[arg(long, default_value_t = 500)]
    timeout: u64,
    /// Abort a run once its BDD table reaches this many nodes
    #[arg(long)]
    node_limit: Option<usize>,
    /// CSV output path (stdout when omitted)
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Parser)]
struct ExplicitArgs {
    /// Specification in ASCII AIGER format
    path: PathBuf,
}

/// One benchmark result row; empty fields mean "not applicable".
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub instance: String,
    pub algo: &'static str,
    pub status: String,
    pub time_ms: Option<u128>,
    pub iterations: Option<u32>,
    pub rounds: Option<u32>,
    pub peak_nodes: Option<usize>,
    pub gates: Option<usize>,
}

pub const CSV_HEADER: [&str; 8] = [
    "instance", "algo", "status", "time_ms", "iterations", "rounds", "peak_nodes",
    "gates",
];

impl RunRecord {
    pub fn csv_fields(&self) -> [String; 8] {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(|x| x.to_string()).unwrap_or_default()
        }
        [
            self.instance.clone(),
            self.algo.to_string(),
            self.status.clone(),
            opt(&self.time_ms),
            opt(&self.iterations),
            opt(&self.rounds),
            opt(&self.peak_nodes),
            opt(&self.gates),
        ]
    }
}

/// Builds the n-bit counter benchmark: the adversary increments the
/// counter with `up`, the controller clears it with `controllable_reset`,
/// and a latched error fires once every bit is set. Realizable for every
/// width, since resetting in time always avoids the overflow.
pub fn gen_cnt(n: u32) -> AigFile {
    assert!((1..=30).contains(&n), "counter width out of range");
    let u = Lit::from_var(1, false);
    let c = Lit::from_var(2, false);
    let bits: Vec<Lit> = (0..n).map(|i| Lit::from_var(3 + i, false)).collect();
    let err = Lit::from_var(3 + n, false);
    let mut next_var = 3 + n;
    let mut ands: Vec<AndGate> = Vec::new();
    let mut and = |a: Lit, b: Lit, ands: &mut Vec<AndGate>| -> Lit {
        if a == Lit::FALSE || b == Lit::FALSE {
            return Lit::FALSE;
        }
        if a == Lit::TRUE {
            return b;
        }
        if b == Lit::TRUE {
            return a;
        }
        next_var += 1;
        let lhs = Lit::from_var(next_var, false);
        ands.push(AndGate { lhs, rhs0: a, rhs1: b });
        lhs
    };

    let mut latches = Vec::with_capacity(n as usize + 1);
    // carry into bit i: up and every lower bit set
    let mut carry = u;
    for (i, &b) in bits.iter().enumerate() {
        // b xor carry, as three and gates
        let l = and(b, carry.negate(), &mut ands);
        let r = and(b.negate(), carry, &mut ands);
        let flipped = and(l.negate(), r.negate(), &mut ands).negate();
        let next = and(c.negate(), flipped, &mut ands);
        latches.push((b, next));
        if i + 1 < bits.len() {
            carry = and(carry, b, &mut ands);
        }
    }
    let mut all_ones = Lit::TRUE;
    for &b in &bits {
        all_ones = and(all_ones, b, &mut ands);
    }
    let err_next = and(err.negate(), all_ones.negate(), &mut ands).negate();
    latches.push((err, err_next));

    let mut latch_names: Vec<Option<String>> =
        (0..n).map(|i| Some(format!("cnt{i}"))).collect();
    latch_names.push(Some("err".into()));
    AigFile {
        max_var: next_var,
        inputs: vec![u, c],
        latches,
        outputs: vec![err],
        ands,
        input_names: vec![Some("up".into()), Some("controllable_reset".into())],
        latch_names,
        output_names: vec![Some("bad".into())],
        comments: Vec::new(),
    }
}

/// Node cap from the flag, falling back to the environment override.
fn effective_node_limit(flag: Option<usize>) -> Result<Option<usize>, String> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(NODE_LIMIT_ENV) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| format!("{NODE_LIMIT_ENV} must be a node count, got {s:?}")),
        Err(_) => Ok(None),
    }
}

/// Outcome and cost counters of a single solver run.
pub struct RunStats {
    pub status: Status,
    pub iterations: u32,
    pub rounds: Option<u32>,
    pub peak_nodes: usize,
}

/// Runs one solver variant over an encoded specification. Returns the
/// game and its losing set alongside the stats except when encoding
/// itself blew the node cap.
pub fn solve_spec(
    spec: &CircuitSpec,
    algo: Algo,
    timeout: Duration,
    node_limit: Option<usize>,
) -> GameResult<(RunStats, Option<(SymbolicGame, BddRef)>)> {
    let opts = EncodeOpts { monolithic_t: false, node_limit };
    let mut game = match SymbolicGame::encode(spec, &opts) {
        Ok(g) => g,
        Err(GameError::Bdd(BddError::NodeLimit { limit })) => {
            let stats = RunStats {
                status: Status::NodeLimit,
                iterations: 0,
                rounds: None,
                peak_nodes: limit,
            };
            return Ok((stats, None));
        }
        Err(e) => return Err(e),
    };
    let limits = Limits::with_timeout(timeout);
    let (status, losing, iterations, rounds) = match algo {
        Algo::C | Algo::Ctl => {
            let variant =
                if algo == Algo::C { UpreImpl::Monolithic } else { UpreImpl::Substitution };
            let res = game.solve_classic(variant, &limits)?;
            (res.status, res.losing, res.iterations, None)
        }
        Algo::A | Algo::Atl => {
            let variant =
                if algo == Algo::A { AbsImpl::Monolithic } else { AbsImpl::Partitioned };
            let res = abs_synth(&mut game, variant, &CegarOpts::default(), &limits)?;
            (res.status, res.losing, res.iterations, Some(res.rounds))
        }
    };
    let stats = RunStats {
        status,
        iterations,
        rounds,
        peak_nodes: game.manager.node_count(),
    };
    Ok((stats, Some((game, losing))))
}

fn status_exit(status: Status) -> i32 {
    match status {
        Status::Realizable => EXIT_REALIZABLE,
        Status::Unrealizable => EXIT_UNREALIZABLE,
        Status::Timeout | Status::NodeLimit => EXIT_RESOURCE,
    }
}

fn instance_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| {
        path.display().to_string()
    })
}

fn read_spec(path: &Path) -> Result<(AigFile, CircuitSpec), String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let file =
        parse_aag(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let spec =
        split_inputs(&file).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((file, spec))
}

fn internal_error(context: &str, e: &GameError) -> i32 {
    eprintln!("internal error during {context}: {e}");
    EXIT_INTERNAL
}

fn cmd_solve(args: &SolveArgs) -> i32 {
    let node_limit = match effective_node_limit(args.node_limit) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("{msg}");
            return EXIT_USAGE;
        }
    };
    let (_, spec) = match read_spec(&args.path) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("{msg}");
            return EXIT_USAGE;
        }
    };
    let started = Instant::now();
    let (stats, _) =
        match solve_spec(&spec, args.algo, Duration::from_secs(args.timeout), node_limit)
        {
            Ok(v) => v,
            Err(e) => return internal_error("solve", &e),
        };
    let record = RunRecord {
        instance: instance_name(&args.path),
        algo: args.algo.csv_name(),
        status: stats.status.to_string(),
        time_ms: Some(started.elapsed().as_millis()),
        iterations: Some(stats.iterations),
        rounds: stats.rounds,
        peak_nodes: Some(stats.peak_nodes),
        gates: None,
    };
    println!("{}", stats.status);
    println!("{}", record.csv_fields().join(","));
    status_exit(stats.status)
}

/// Extracts a verified controller from a solved realizable game.
fn build_controller(
    game: &mut SymbolicGame,
    losing: BddRef,
    timeout: Duration,
    rerun_reach: bool,
    alt_restrict: bool,
) -> GameResult<Controller> {
    let limits = Limits::with_timeout(timeout);
    let region = winning_region(game, losing, &limits)?;
    let lambda = eve_quasi_strategy(game, region)?;
    let opts = DetOpts { alt_restrict, check_invariants: false };
    let first = det_strat(game, &lambda, region, &opts)?;
    if !rerun_reach {
        return Ok(first);
    }
    let (second, _) = rerun_with_reachable(game, &lambda, &first, &opts, &limits)?;
    info!(
        "controller gates: {} full region, {} reachable-only",
        first.gates, second.gates
    );
    Ok(second)
}

/// Result of the full synthesis pipeline.
pub enum SynthOutcome {
    /// The circuit with the controller spliced in, and its gate count.
    Controlled { file: Box<AigFile>, gates: usize },
    /// No controller was produced: unrealizable or out of resources.
    Unfinished(Status),
    /// The extracted controller failed its own model check (a bug trap).
    VerificationFailed,
}

/// Solves, extracts, verifies, and splices a controller into the circuit.
/// Shared by the binary and the C interface.
pub fn synthesize(
    file: &AigFile,
    spec: &CircuitSpec,
    algo: Algo,
    timeout: Duration,
    node_limit: Option<usize>,
    rerun_reach: bool,
    alt_restrict: bool,
) -> GameResult<SynthOutcome> {
    let (stats, solved) = solve_spec(spec, algo, timeout, node_limit)?;
    if stats.status != Status::Realizable {
        return Ok(SynthOutcome::Unfinished(stats.status));
    }
    let (mut game, losing) = solved.expect("realizable run keeps its game");
    let ctrl =
        match build_controller(&mut game, losing, timeout, rerun_reach, alt_restrict) {
            Ok(c) => c,
            Err(GameError::Timeout) => return Ok(SynthOutcome::Unfinished(Status::Timeout)),
            Err(GameError::Bdd(BddError::NodeLimit { .. })) => {
                return Ok(SynthOutcome::Unfinished(Status::NodeLimit))
            }
            Err(e) => return Err(e),
        };
    match verify_controller(&mut game, &ctrl, &Limits::with_timeout(timeout))? {
        Verdict::Safe => {}
        Verdict::Counterexample(trace) => {
            eprintln!(
                "extracted controller reaches the error in {} steps",
                trace.moves.len()
            );
            return Ok(SynthOutcome::VerificationFailed);
        }
    }
    let pairs: Vec<_> = spec
        .controllable
        .iter()
        .copied()
        .zip(ctrl.networks.iter().cloned())
        .collect();
    let controlled = write_controlled_aag(file, &pairs)
        .expect("extracted controller covers the controllable inputs");
    Ok(SynthOutcome::Controlled { file: Box::new(controlled), gates: ctrl.gates })
}

fn cmd_synth(args: &SynthArgs) -> i32 {
    let node_limit = match effective_node_limit(args.node_limit) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("{msg}");
            return EXIT_USAGE;
        }
    };
    let (file, spec) = match read_spec(&args.path) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("{msg}");
            return EXIT_USAGE;
        }
    };
    let timeout = Duration::from_secs(args.timeout);
    let outcome = match synthesize(
        &file,
        &spec,
        args.algo,
        timeout,
        node_limit,
        args.rerun_reach,
        args.alt_restrict,
    ) {
        Ok(o) => o,
        Err(e) => return internal_error("synthesis", &e),
    };
    match outcome {
        SynthOutcome::Unfinished(status) => {
            println!("{status}");
            status_exit(status)
        }
        SynthOutcome::VerificationFailed => {
            eprintln!("refusing to write a controller that failed its model check");
            EXIT_INTERNAL
        }
        SynthOutcome::Controlled { file: controlled, gates } => {
            if let Err(e) = fs::write(&args.out, write_aag(&controlled)) {
                eprintln!("cannot write {}: {e}", args.out.display());
                return EXIT_USAGE;
            }
            println!("REALIZABLE");
            println!("controller: {gates} gates -> {}", args.out.display());
            EXIT_REALIZABLE
        }
    }
}

fn cmd_gen_cnt(args: &GenCntArgs) -> i32 {
    let text = write_aag(&gen_cnt(args.n));
    match &args.out {
        Some(path) => {
            if let Err(e) = fs::write(path, text) {
                eprintln!("cannot write {}: {e}", path.display());
                return EXIT_USAGE;
            }
            0
        }
        None => {
            print!("{text}");
            0
        }
    }
}

fn bench_one(
    path: &Path,
    algo: Algo,
    timeout: Duration,
    node_limit: Option<usize>,
) -> RunRecord {
    let instance = instance_name(path);
    let started = Instant::now();
    let error_record = |status: String, started: &Instant| RunRecord {
        instance: instance.clone(),
        algo: algo.csv_name(),
        status,
        time_ms: Some(started.elapsed().as_millis()),
        iterations: None,
        rounds: None,
        peak_nodes: None,
        gates: None,
    };
    let spec = match read_spec(path) {
        Ok((_, spec)) => spec,
        Err(msg) => {
            eprintln!("{msg}");
            return error_record("ERROR".into(), &started);
        }
    };
    match solve_spec(&spec, algo, timeout, node_limit) {
        Ok((stats, _)) => RunRecord {
            instance,
            algo: algo.csv_name(),
            status: stats.status.to_string(),
            time_ms: Some(started.elapsed().as_millis()),
            iterations: Some(stats.iterations),
            rounds: stats.rounds,
            peak_nodes: Some(stats.peak_nodes),
            gates: None,
        },
        Err(e) => {
            eprintln!("{instance}: {e}");
            error_record("ERROR".into(), &started)
        }
    }
}

fn cmd_bench(args: &BenchArgs) -> i32 {
    let node_limit = match effective_node_limit(args.node_limit) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("{msg}");
            return EXIT_USAGE;
        }
    };
    let entries = match fs::read_dir(&args.dir) {
        Ok(it) => it,
        Err(e) => {
            eprintln!("cannot read {}: {e}", args.dir.display());
            return EXIT_USAGE;
        }
    };
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "aag"))
        .collect();
    files.sort();
    if files.is_empty() {
        eprintln!("no .aag instances under {}", args.dir.display());
        return EXIT_USAGE;
    }
    let timeout = Duration::from_secs(args.timeout);
    let tasks: Vec<(&PathBuf, Algo)> = files
        .iter()
        .flat_map(|f| args.algos.iter().map(move |&a| (f, a)))
        .collect();
    let results: Mutex<Vec<Option<RunRecord>>> = Mutex::new(vec![None; tasks.len()]);
    let cursor = AtomicUsize::new(0);
    let workers = args.jobs.max(1).min(tasks.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = cursor.fetch_add(1, Ordering::Relaxed);
                if i >= tasks.len() {
                    break;
                }
                let (path, algo) = tasks[i];
                let record = bench_one(path, algo, timeout, node_limit);
                results.lock().unwrap()[i] = Some(record);
            });
        }
    });
    let rows = results.into_inner().unwrap();
    let out: Box<dyn std::io::Write> = match &args.csv {
        Some(path) => match fs::File::create(path) {
            Ok(f) => Box::new(f),
            Err(e) => {
                eprintln!("cannot write {}: {e}", path.display());
                return EXIT_USAGE;
            }
        },
        None => Box::new(std::io::stdout()),
    };
    let mut writer = csv::Writer::from_writer(out);
    if writer.write_record(CSV_HEADER).is_err() {
        eprintln!("cannot write CSV header");
        return EXIT_INTERNAL;
    }
    for row in rows {
        let row = row.expect("every task ran");
        if writer.write_record(row.csv_fields()).is_err() {
            eprintln!("cannot write CSV row");
            return EXIT_INTERNAL;
        }
    }
    if writer.flush().is_err() {
        eprintln!("cannot flush CSV output");
        return EXIT_INTERNAL;
    }
    0
}

fn cmd_explicit(args: &ExplicitArgs) -> i32 {
    let (_, spec) = match read_spec(&args.path) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("{msg}");
            return EXIT_USAGE;
        }
    };
    let game = match ExplicitGame::from_circuit(&spec) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_USAGE;
        }
    };
    let solved = game.solve();
    let attractor_size = solved.attractor.iter().filter(|&&b| b).count();
    let status = if solved.adam_wins { Status::Unrealizable } else { Status::Realizable };
    println!("{status}");
    println!(
        "states: {}, environment attractor: {attractor_size}",
        solved.game.num_states()
    );
    status_exit(status)
}

/// Parses the command line and runs the chosen command; the return value
/// is the process exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
    match &cli.cmd {
        Cmd::Solve(args) => cmd_solve(args),
        Cmd::Synth(args) => cmd_synth(args),
        Cmd::GenCnt(args) => cmd_gen_cnt(args),
        Cmd::Bench(args) => cmd_bench(args),
        Cmd::Explicit(args) => cmd_explicit(args),
    }
}
