//! Command-line front end: parameter checks, simulations, sweeps, adversary
//! witnesses, exhaustive exploration, and symmetry reports, all emitting
//! versioned JSON.
//!
//! Exit codes: 0 = all requested contracts satisfied, 1 = a violation was
//! found where feasibility predicted success, 2 = configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use anonelect::harness::{
    check_class_symmetry, check_symmetry, check_trace_invariants, classify_with,
    default_step_bound, replay, ring_witness, run_config, sweep, AlgorithmId, ExecutionTrace,
    PermutationSpec, Problem, RunConfig, SweepConfig, SweepError, TRACE_SCHEMA_VERSION,
};
use anonelect::harness::sweep::{ParticipationMode, TableRow, REPORT_SCHEMA_VERSION};
use anonelect::memory::{AnonymousMemory, Permutation, Pid};
use anonelect::numth::{bezout_pair, divides, gcd, in_m, Params};
use anonelect::procs::rwlib::standard_rw_machines;
use anonelect::procs::StepMachine;
use anonelect::sched::explore::{explore, ExploreError};
use anonelect::sched::SchedulePolicy;

const OUT_DIR_ENV: &str = "ANONELECT_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "anonelect",
    about = "Simulator and verifier for leader election in fully anonymous shared-memory systems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report the feasibility conditions for (n, m, d).
    Check(CheckArgs),
    /// Run one election and emit a replayable JSON trace.
    Simulate(SimulateArgs),
    /// Sweep parameter ranges and reproduce the feasibility table.
    Sweep(SweepArgs),
    /// Build a ring-adversary witness for infeasible parameters.
    Witness(WitnessArgs),
    /// Exhaustively enumerate all interleavings of a small instance.
    Explore(ExploreArgs),
    /// Lock-step symmetry checks: the RW library plus a CAS contrast.
    Symmetry(SymmetryArgs),
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    m: u64,
    #[arg(long)]
    d: u64,
    /// Write the JSON report here as well as printing it.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Replay a previously emitted trace file and verify byte identity.
    #[arg(long, conflicts_with_all = ["algorithm", "n", "m", "d", "config"])]
    replay: Option<PathBuf>,

    /// Base configuration file (JSON RunConfig); flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,

    /// alg1, alg2, alg3, or gcd-composition.
    #[arg(long)]
    algorithm: Option<AlgorithmId>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    d: Option<u64>,

    /// Schedule: "seeded:SEED" or "lockstep" (pid order) .
    #[arg(long)]
    schedule: Option<String>,

    /// Permutations: "identity", "rotation:STRIDE", "seeded:SEED", "ring:K".
    #[arg(long)]
    perms: Option<String>,

    /// Participation: "all", a pid list "0,2,4", or "random:P:SEED" where
    /// each pid joins with probability P (never empty).
    #[arg(long)]
    participation: Option<String>,

    #[arg(long)]
    step_bound: Option<u64>,

    /// Record full local-state encodings in the trace.
    #[arg(long)]
    full_states: bool,

    /// Trace output path.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Inclusive range "LO:HI" (or a single value).
    #[arg(long, default_value = "2:6")]
    n: String,
    #[arg(long, default_value = "1:8")]
    m: String,
    #[arg(long, default_value = "1:5")]
    d: String,
    /// Number of schedule seeds (0..count).
    #[arg(long, default_value_t = 50)]
    seeds: u64,
    /// Comma list of permutation policies: identity, seeded, rotation.
    #[arg(long, default_value = "identity,seeded")]
    perms: String,
    /// Comma list of participation modes: all, half, singleton.
    #[arg(long, default_value = "all,half,singleton")]
    participation_modes: String,
    /// Comma list of rows: row1, row2, row3 (or "all").
    #[arg(long, default_value = "all")]
    rows: String,
    #[arg(long)]
    step_bound: Option<u64>,
    /// Maximum total runs.
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    /// Embed full witness traces in the report.
    #[arg(long)]
    attach_witness_traces: bool,
    /// Worker threads (0 = rayon default).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WitnessArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    m: u64,
    #[arg(long)]
    d: u64,
    #[arg(long, default_value = "alg1")]
    algorithm: AlgorithmId,
    #[arg(long, default_value_t = 10_000)]
    step_bound: u64,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExploreArgs {
    #[arg(long)]
    algorithm: AlgorithmId,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    m: u64,
    #[arg(long)]
    d: u64,
    /// Participants (exhaustive runs default to all n processes).
    #[arg(long)]
    participants: Option<u64>,
    #[arg(long, default_value_t = 1_000_000)]
    state_bound: usize,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SymmetryArgs {
    /// Process counts to test.
    #[arg(long, default_value = "2,3,5")]
    n_list: String,
    /// Register count for the RW machines.
    #[arg(long, default_value_t = 3)]
    m: usize,
    /// Lock-step round bound.
    #[arg(long, default_value_t = 1_000)]
    round_bound: u64,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Check(args) => cmd_check(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Witness(args) => cmd_witness(args),
        Command::Explore(args) => cmd_explore(args),
        Command::Symmetry(args) => cmd_symmetry(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

// --- output plumbing --------------------------------------------------------

fn resolve_out_path(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) => PathBuf::from(dir).join(path),
        None => path.to_path_buf(),
    }
}

/// Atomic write: temp file in the target directory, then rename.
fn write_json(path: &Path, json: &str) -> Result<PathBuf> {
    let path = resolve_out_path(path);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, json).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, &path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(path)
}

fn emit<T: Serialize>(value: &T, out: &Option<PathBuf>) -> Result<()> {
    if let Some(path) = out {
        let json = serde_json::to_string_pretty(value)?;
        let path = write_json(path, &json)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

// --- check -------------------------------------------------------------------

#[derive(Serialize)]
struct CheckReport {
    schema_version: u32,
    n: u64,
    m: u64,
    d: u64,
    gcd_mn: u64,
    in_m: bool,
    gcd_divides_d: bool,
    gcd_le_d: bool,
    rows: CheckRows,
    bezout: Option<BezoutOut>,
}

#[derive(Serialize)]
struct CheckRows {
    delection_not_required: bool,
    exact_delection_required: bool,
    delection_required: bool,
}

#[derive(Serialize)]
struct BezoutOut {
    u: u64,
    v: u64,
}

fn cmd_check(args: CheckArgs) -> Result<ExitCode> {
    let p = Params::new(args.n, args.m, args.d)?;
    let g = gcd(p.m, p.n);
    let report = CheckReport {
        schema_version: 1,
        n: p.n,
        m: p.m,
        d: p.d,
        gcd_mn: g,
        in_m: in_m(p.m, p.n, p.d),
        gcd_divides_d: divides(g, p.d),
        gcd_le_d: g <= p.d,
        rows: CheckRows {
            delection_not_required: in_m(p.m, p.n, p.d),
            exact_delection_required: divides(g, p.d),
            delection_required: g <= p.d,
        },
        bezout: bezout_pair(&p).ok().map(|b| BezoutOut { u: b.u, v: b.v }),
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    emit(&report, &args.out)?;
    Ok(ExitCode::SUCCESS)
}

// --- simulate ------------------------------------------------------------------

fn parse_schedule(s: &str, participation: &[Pid]) -> Result<SchedulePolicy> {
    if s == "lockstep" || s == "lock-step" {
        return Ok(SchedulePolicy::LockStep {
            order: participation.to_vec(),
        });
    }
    if let Some(seed) = s.strip_prefix("seeded:") {
        return Ok(SchedulePolicy::SeededRandom { seed: seed.parse()? });
    }
    Err(anyhow!("unknown schedule '{s}' (expected seeded:SEED or lockstep)"))
}

fn parse_perms(s: &str) -> Result<PermutationSpec> {
    if s == "identity" {
        return Ok(PermutationSpec::Identity);
    }
    if let Some(stride) = s.strip_prefix("rotation:") {
        return Ok(PermutationSpec::RotationByPid { stride: stride.parse()? });
    }
    if let Some(seed) = s.strip_prefix("seeded:") {
        return Ok(PermutationSpec::SeededRandom { seed: seed.parse()? });
    }
    if let Some(k) = s.strip_prefix("ring:") {
        return Ok(PermutationSpec::RingAdversary { k: k.parse()? });
    }
    Err(anyhow!(
        "unknown permutation policy '{s}' (expected identity, rotation:STRIDE, seeded:SEED, or ring:K)"
    ))
}

fn parse_participation(s: &str, n: u64) -> Result<Vec<Pid>> {
    if s == "all" {
        return Ok((0..n as usize).collect());
    }
    if let Some(rest) = s.strip_prefix("random:") {
        let (prob, seed) = rest
            .split_once(':')
            .ok_or_else(|| anyhow!("expected random:P:SEED"))?;
        let prob: f64 = prob.parse()?;
        if !(0.0..=1.0).contains(&prob) {
            return Err(anyhow!("probability {prob} outside [0, 1]"));
        }
        let seed: u64 = seed.parse()?;
        let mut rng = SplitMix64(seed);
        let mut pids: Vec<Pid> = (0..n as usize)
            .filter(|_| ((rng.next() >> 11) as f64 / (1u64 << 53) as f64) < prob)
            .collect();
        if pids.is_empty() {
            pids.push((seed % n) as usize);
        }
        return Ok(pids);
    }
    let mut pids = s
        .split(',')
        .map(|p| p.trim().parse::<Pid>().map_err(Into::into))
        .collect::<Result<Vec<_>>>()?;
    pids.sort_unstable();
    pids.dedup();
    Ok(pids)
}

// Deterministic stream for participation sampling.
struct SplitMix64(u64);

impl SplitMix64 {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
}

#[derive(Serialize)]
struct SimulateSummary {
    algorithm: AlgorithmId,
    n: u64,
    m: u64,
    d: u64,
    participants: usize,
    steps: u64,
    termination: anonelect::harness::Termination,
    leaders: usize,
    classification: anonelect::harness::OutcomeClass,
    invariant_violations: usize,
    max_register_value: u64,
}

fn summarize(trace: &ExecutionTrace) -> Result<SimulateSummary> {
    let p = trace.config.params;
    let problem = match trace.config.algorithm {
        AlgorithmId::Alg2 | AlgorithmId::GcdComposition => Problem::ExactDElection,
        _ => Problem::DElection,
    };
    let target = match trace.config.algorithm {
        AlgorithmId::GcdComposition => gcd(p.m, p.n),
        _ => p.d,
    };
    let classification = classify_with(trace, problem, target);
    let violations = check_trace_invariants(trace)?;
    Ok(SimulateSummary {
        algorithm: trace.config.algorithm,
        n: p.n,
        m: p.m,
        d: p.d,
        participants: trace.config.participation.len(),
        steps: trace.steps.len() as u64,
        termination: trace.termination.clone(),
        leaders: trace.leaders(),
        classification,
        invariant_violations: violations.len(),
    max_register_value: trace.max_register_value,
    })
}

/// Feasibility prediction for the algorithm actually run; violations only
/// fail the command when the parameters predicted success.
fn predicted_feasible(config: &RunConfig) -> bool {
    let p = config.params;
    match config.algorithm {
        AlgorithmId::Alg1 => in_m(p.m, p.n, p.d),
        AlgorithmId::Alg2 => divides(gcd(p.m, p.n), p.d),
        AlgorithmId::Alg3 => true,
        AlgorithmId::GcdComposition => gcd(p.m, p.n) <= p.d,
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode> {
    if let Some(trace_path) = &args.replay {
        return cmd_replay(trace_path, &args.out);
    }

    let mut config: RunConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).context("parsing run config")?
        }
        None => {
            let algorithm = args
                .algorithm
                .ok_or_else(|| anyhow!("--algorithm is required without --config"))?;
            let (n, m, d) = match (args.n, args.m, args.d) {
                (Some(n), Some(m), Some(d)) => (n, m, d),
                _ => return Err(anyhow!("--n, --m, --d are required without --config")),
            };
            let params = Params::new(n, m, d)?;
            RunConfig {
                algorithm,
                params,
                schedule: SchedulePolicy::SeededRandom { seed: 0 },
                permutations: PermutationSpec::Identity,
                participation: (0..n as usize).collect(),
                step_bound: default_step_bound(&params),
                record_full_states: false,
            }
        }
    };

    // Flags win over the config file, field by field.
    if let Some(algorithm) = args.algorithm {
        config.algorithm = algorithm;
    }
    if args.n.is_some() || args.m.is_some() || args.d.is_some() {
        let old = config.params;
        config.params = Params::new(
            args.n.unwrap_or(old.n),
            args.m.unwrap_or(old.m),
            args.d.unwrap_or(old.d),
        )?;
        if args.participation.is_none() && args.config.is_none() {
            config.participation = (0..config.params.n as usize).collect();
        }
    }
    if let Some(s) = &args.participation {
        config.participation = parse_participation(s, config.params.n)?;
    }
    if let Some(s) = &args.perms {
        config.permutations = parse_perms(s)?;
        if let PermutationSpec::RingAdversary { k } = config.permutations {
            if args.participation.is_none() {
                config.participation = (0..k).collect();
            }
        }
    }
    if let Some(s) = &args.schedule {
        config.schedule = parse_schedule(s, &config.participation)?;
    }
    if let Some(bound) = args.step_bound {
        config.step_bound = bound;
    } else if args.config.is_none() {
        config.step_bound = default_step_bound(&config.params);
    }
    config.record_full_states |= args.full_states;

    let trace = run_config(&config)?;
    let summary = summarize(&trace)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    emit(&trace, &args.out)?;

    let violated = !summary.classification.is_ok() || summary.invariant_violations > 0;
    if violated && predicted_feasible(&config) {
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_replay(trace_path: &Path, out: &Option<PathBuf>) -> Result<ExitCode> {
    let text = std::fs::read_to_string(trace_path)
        .with_context(|| format!("reading {}", trace_path.display()))?;
    let original = ExecutionTrace::from_json(&text).context("parsing trace")?;
    if original.schema_version != TRACE_SCHEMA_VERSION {
        return Err(anyhow!(
            "trace schema version {} unsupported (expected {})",
            original.schema_version,
            TRACE_SCHEMA_VERSION
        ));
    }
    let rerun = replay(&original)?;
    let summary = summarize(&rerun)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    emit(&rerun, out)?;
    if rerun.to_json() == original.to_json() {
        println!("replay: byte-identical");
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("replay: trace mismatch");
        Ok(ExitCode::from(1))
    }
}

// --- sweep ---------------------------------------------------------------------

fn parse_range(s: &str) -> Result<(u64, u64)> {
    if let Some((lo, hi)) = s.split_once(':') {
        Ok((lo.parse()?, hi.parse()?))
    } else {
        let v = s.parse()?;
        Ok((v, v))
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    if args.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs)
            .build_global()
            .ok();
    }

    let mut perm_specs = Vec::new();
    for name in args.perms.split(',') {
        perm_specs.push(match name.trim() {
            "identity" => PermutationSpec::Identity,
            "seeded" => PermutationSpec::SeededRandom { seed: 0 },
            "rotation" => PermutationSpec::RotationByPid { stride: 1 },
            other => return Err(anyhow!("unknown permutation policy '{other}'")),
        });
    }
    let mut participation_modes = Vec::new();
    for name in args.participation_modes.split(',') {
        participation_modes.push(match name.trim() {
            "all" => ParticipationMode::All,
            "half" => ParticipationMode::RandomHalf,
            "singleton" => ParticipationMode::Singleton,
            other => return Err(anyhow!("unknown participation mode '{other}'")),
        });
    }
    let rows = if args.rows.trim() == "all" {
        TableRow::all()
    } else {
        let mut rows = Vec::new();
        for name in args.rows.split(',') {
            rows.push(match name.trim() {
                "row1" => TableRow::DElectionNotRequired,
                "row2" => TableRow::ExactDElectionRequired,
                "row3" => TableRow::DElectionRequired,
                other => return Err(anyhow!("unknown row '{other}'")),
            });
        }
        rows
    };

    let cfg = SweepConfig {
        n_range: parse_range(&args.n)?,
        m_range: parse_range(&args.m)?,
        d_range: parse_range(&args.d)?,
        seeds: (0..args.seeds).collect(),
        perm_specs,
        participation_modes,
        rows,
        step_bound: args.step_bound,
        budget: args.budget,
        attach_witness_traces: args.attach_witness_traces,
    };

    let report = match sweep(&cfg) {
        Ok(report) => report,
        Err(SweepError::BudgetExceeded { projected, budget }) => {
            return Err(anyhow!(
                "projected {projected} runs exceed the budget of {budget}"
            ));
        }
        Err(SweepError::Config(e)) => return Err(e.into()),
    };

    println!(
        "sweep: {} cells, {} runs, schema v{}, all_expected = {}",
        report.cells.len(),
        report.total_runs,
        REPORT_SCHEMA_VERSION,
        report.all_expected
    );
    for cell in report.cells.iter().filter(|c| !c.all_as_expected()) {
        println!("  unexpected: n={} m={} d={}", cell.n, cell.m, cell.d);
    }
    emit(&report, &args.out)?;
    Ok(if report.all_expected {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

// --- witness ---------------------------------------------------------------------

fn cmd_witness(args: WitnessArgs) -> Result<ExitCode> {
    let p = Params::new(args.n, args.m, args.d)?;
    if in_m(p.m, p.n, p.d) {
        eprintln!(
            "parameters feasible: m = {} is in M(n = {}, d = {}); no witness exists",
            p.m, p.n, p.d
        );
        return Ok(ExitCode::from(2));
    }
    let w = ring_witness(&p, args.algorithm, Some(args.step_bound))?;
    println!(
        "witness: k = {}, delta = {}, symmetric Q-classes = {}, outcome = {:?} ({} leaders)",
        w.k,
        w.ring.delta,
        w.q_class_symmetric,
        w.trace.termination,
        w.trace.leaders()
    );
    for (i, q) in w.ring.q_sets.iter().enumerate() {
        println!("  Q_{i} = {q:?}");
    }
    for (i, pset) in w.ring.p_sets.iter().enumerate() {
        println!("  P_{i} = {pset:?} starting at ring offset {}", w.ring.initial_offsets[pset[0]]);
    }
    emit(&w, &args.out)?;
    Ok(if w.violates_delection && w.q_class_symmetric {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

// --- explore ---------------------------------------------------------------------

#[derive(Serialize)]
struct ExploreOut {
    schema_version: u32,
    algorithm: AlgorithmId,
    n: u64,
    m: u64,
    d: u64,
    participants: u64,
    state_bound: usize,
    report: anonelect::sched::explore::ExploreReport,
    expected_outcomes_ok: bool,
}

fn cmd_explore(args: ExploreArgs) -> Result<ExitCode> {
    let p = Params::new(args.n, args.m, args.d)?;
    let participants = args.participants.unwrap_or(p.n).min(p.n).max(1);
    if args.algorithm.requires_full_participation() && participants != p.n {
        return Err(anyhow!("{} requires all {} processes", args.algorithm, p.n));
    }

    let machines = (0..participants)
        .map(|_| anonelect::harness::machine_for(args.algorithm, &p))
        .collect::<Result<Vec<Box<dyn StepMachine>>, _>>()?;
    let mem = AnonymousMemory::new(
        p.m as usize,
        vec![Permutation::identity(p.m as usize); participants as usize],
    )?;

    let report = match explore(machines, mem, args.state_bound) {
        Ok(report) => report,
        Err(ExploreError::StateBoundExceeded { bound, partial }) => {
            eprintln!("state bound {bound} exceeded; partial results: {partial:?}");
            return Ok(ExitCode::from(2));
        }
    };

    let expected_ok = match args.algorithm {
        AlgorithmId::Alg1 => {
            if in_m(p.m, p.n, p.d) {
                report
                    .outcomes
                    .iter()
                    .all(|&l| l >= 1 && l as u64 <= p.d)
            } else {
                true // no prediction for infeasible parameters
            }
        }
        AlgorithmId::Alg2 => report.outcomes.iter().all(|&l| l as u64 == p.d),
        AlgorithmId::Alg3 => report
            .outcomes
            .iter()
            .all(|&l| l as u64 == participants.min(p.d)),
        AlgorithmId::GcdComposition => {
            let g = gcd(p.m, p.n);
            report.outcomes.iter().all(|&l| l as u64 == g)
        }
    };

    let out = ExploreOut {
        schema_version: 1,
        algorithm: args.algorithm,
        n: p.n,
        m: p.m,
        d: p.d,
        participants,
        state_bound: args.state_bound,
        report,
        expected_outcomes_ok: expected_ok,
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    emit(&out, &args.out)?;
    Ok(if expected_ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

// --- symmetry ---------------------------------------------------------------------

#[derive(Serialize)]
struct SymmetryOut {
    schema_version: u32,
    m: usize,
    round_bound: u64,
    rw_reports: Vec<RwSymmetryOut>,
    cas_contrast: CasContrastOut,
    rw_all_symmetric: bool,
}

#[derive(Serialize)]
struct RwSymmetryOut {
    machine: String,
    n: usize,
    report: anonelect::harness::SymmetryReport,
}

#[derive(Serialize)]
struct CasContrastOut {
    n: usize,
    report: anonelect::harness::SymmetryReport,
    diverged_on_cas: bool,
}

fn cmd_symmetry(args: SymmetryArgs) -> Result<ExitCode> {
    let ns: Vec<usize> = args
        .n_list
        .split(',')
        .map(|s| s.trim().parse().map_err(Into::into))
        .collect::<Result<Vec<_>>>()?;

    let mut rw_reports = Vec::new();
    let mut rw_all_symmetric = true;
    for spec in standard_rw_machines() {
        for &n in &ns {
            let machines: Vec<Box<dyn StepMachine>> = (0..n).map(|_| spec.build(args.m)).collect();
            let mem = AnonymousMemory::with_uniform_perm(args.m, n, Permutation::identity(args.m))?;
            let report = check_symmetry(machines, mem, args.round_bound)?;
            rw_all_symmetric &= report.symmetric && !report.used_cas;
            rw_reports.push(RwSymmetryOut {
                machine: spec.name.to_string(),
                n,
                report,
            });
        }
    }

    // Contrast: the single-register CAS election diverges at its first CAS.
    let n = 2;
    let machines: Vec<Box<dyn StepMachine>> = (0..n)
        .map(|_| Box::new(anonelect::procs::alg3_machine(1)) as Box<dyn StepMachine>)
        .collect();
    let mem = AnonymousMemory::with_uniform_perm(1, n, Permutation::identity(1))?;
    let report = check_class_symmetry(machines, mem, &[(0..n).collect()], args.round_bound);
    let diverged_on_cas = report.used_cas && !report.symmetric;
    let cas_contrast = CasContrastOut { n, report, diverged_on_cas };

    let out = SymmetryOut {
        schema_version: 1,
        m: args.m,
        round_bound: args.round_bound,
        rw_reports,
        cas_contrast,
        rw_all_symmetric,
    };
    println!(
        "symmetry: {} RW reports, all symmetric = {}, CAS contrast diverged = {}",
        out.rw_reports.len(),
        out.rw_all_symmetric,
        out.cas_contrast.diverged_on_cas
    );
    emit(&out, &args.out)?;
    Ok(if out.rw_all_symmetric && out.cas_contrast.diverged_on_cas {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
