//! Parameter sweeps: empirical reproduction of the feasibility table.
//!
//! For every `(n, m, d)` cell in range the sweep computes the three
//! feasibility conditions and exercises the matching algorithm:
//!
//! * d-election without required participation — feasible iff `m` is in
//!   `M(n, d)`; infeasible cells get a ring-adversary witness instead.
//! * exact d-election with required participation — feasible iff
//!   `gcd(m, n)` divides `d`.
//! * d-election with required participation — feasible iff
//!   `gcd(m, n) <= d`, solved by exact `gcd(m, n)`-election; infeasible
//!   cells must be refused at construction time.
//!
//! Every feasible run must classify clean and pass the trace invariant
//! suite. Workers fan out per cell; results merge in cell order, so reports
//! are deterministic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use rand_core::{RngCore, SeedableRng};

use crate::harness::config::{
    default_step_bound, AlgorithmId, ConfigError, PermutationSpec, RunConfig,
};
use crate::harness::invariants::check_trace_invariants;
use crate::harness::trace::Termination;
use crate::harness::witness::{ring_witness, violating_k};
use crate::harness::{classify_with, run_config, Contract, OutcomeClass, Problem};
use crate::memory::Pid;
use crate::numth::{divides, gcd, in_m, Params};
use crate::sched::SchedulePolicy;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableRow {
    DElectionNotRequired,
    ExactDElectionRequired,
    DElectionRequired,
}

impl TableRow {
    pub fn all() -> Vec<TableRow> {
        vec![
            TableRow::DElectionNotRequired,
            TableRow::ExactDElectionRequired,
            TableRow::DElectionRequired,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParticipationMode {
    All,
    RandomHalf,
    Singleton,
}

impl ParticipationMode {
    /// Deterministic participant selection for a given run seed.
    pub fn select(&self, n: u64, seed: u64) -> Vec<Pid> {
        let n = n as usize;
        match self {
            ParticipationMode::All => (0..n).collect(),
            ParticipationMode::RandomHalf => {
                let mut rng =
                    rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x6861_6c66_6861_6c66);
                let mut pids: Vec<Pid> = (0..n).collect();
                for i in (1..n).rev() {
                    let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                    pids.swap(i, j);
                }
                pids.truncate((n / 2).max(1));
                pids.sort_unstable();
                pids
            }
            ParticipationMode::Singleton => vec![(seed % n as u64) as usize],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Inclusive ranges.
    pub n_range: (u64, u64),
    pub m_range: (u64, u64),
    pub d_range: (u64, u64),
    /// Schedule seeds; permutation seeds are derived from them.
    pub seeds: Vec<u64>,
    pub perm_specs: Vec<PermutationSpec>,
    /// Participation variants for the optional-participation row.
    pub participation_modes: Vec<ParticipationMode>,
    pub rows: Vec<TableRow>,
    /// Per-run step bound; default when absent.
    pub step_bound: Option<u64>,
    /// Maximum total number of runs the sweep may launch.
    pub budget: u64,
    #[serde(default)]
    pub attach_witness_traces: bool,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("projected {projected} runs exceed the budget of {budget}")]
    BudgetExceeded { projected: u64, budget: u64 },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// One run that failed its expectation, with its full (replayable) config.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunFailure {
    pub config: RunConfig,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub k: usize,
    pub delta: usize,
    pub classification: OutcomeClass,
    pub termination: Termination,
    pub q_class_symmetric: bool,
    pub violates_delection: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<crate::harness::trace::ExecutionTrace>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowReport {
    pub feasible: bool,
    pub runs: u64,
    pub passes: u64,
    /// Expected exact leader count, when the row has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_leaders: Option<u64>,
    /// True when the cell behaved exactly as the feasibility condition predicts.
    pub as_expected: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<RunFailure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessSummary>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityCell {
    pub n: u64,
    pub m: u64,
    pub d: u64,
    pub gcd_mn: u64,
    pub in_m: bool,
    pub gcd_divides_d: bool,
    pub gcd_le_d: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delection_not_required: Option<RowReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_delection_required: Option<RowReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delection_required: Option<RowReport>,
}

impl FeasibilityCell {
    pub fn all_as_expected(&self) -> bool {
        [
            &self.delection_not_required,
            &self.exact_delection_required,
            &self.delection_required,
        ]
        .into_iter()
        .flatten()
        .all(|r| r.as_expected)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub schema_version: u32,
    pub config: SweepConfig,
    pub cells: Vec<FeasibilityCell>,
    pub total_runs: u64,
    pub all_expected: bool,
}

const MAX_RECORDED_FAILURES: usize = 3;

fn derive_perm_spec(spec: &PermutationSpec, run_seed: u64) -> PermutationSpec {
    match spec {
        PermutationSpec::SeededRandom { seed } => PermutationSpec::SeededRandom {
            seed: seed ^ run_seed.wrapping_mul(0x9e37_79b9_7f4a_7c15),
        },
        other => other.clone(),
    }
}

fn cells_in_range(cfg: &SweepConfig) -> Vec<Params> {
    let mut cells = Vec::new();
    for n in cfg.n_range.0..=cfg.n_range.1 {
        for m in cfg.m_range.0..=cfg.m_range.1 {
            for d in cfg.d_range.0..=cfg.d_range.1 {
                if d <= n.saturating_sub(1) {
                    if let Ok(p) = Params::new(n, m, d) {
                        cells.push(p);
                    }
                }
            }
        }
    }
    cells
}

fn projected_runs_for_cell(cfg: &SweepConfig, p: &Params) -> u64 {
    let seeds = cfg.seeds.len() as u64;
    let perms = cfg.perm_specs.len() as u64;
    let mut total = 0;
    for row in &cfg.rows {
        total += match row {
            TableRow::DElectionNotRequired => {
                if in_m(p.m, p.n, p.d) {
                    seeds * perms * cfg.participation_modes.len() as u64
                } else {
                    1 // the witness run
                }
            }
            TableRow::ExactDElectionRequired => {
                if divides(gcd(p.m, p.n), p.d) {
                    seeds * perms
                } else {
                    0
                }
            }
            TableRow::DElectionRequired => {
                if gcd(p.m, p.n) <= p.d {
                    seeds * perms
                } else {
                    0
                }
            }
        };
    }
    total
}

/// Runs the sweep. Fails fast with [`SweepError::BudgetExceeded`] before
/// launching anything if the projected run count is over budget.
pub fn sweep(cfg: &SweepConfig) -> Result<FeasibilityReport, SweepError> {
    let cells = cells_in_range(cfg);
    let projected: u64 = cells.iter().map(|p| projected_runs_for_cell(cfg, p)).sum();
    if projected > cfg.budget {
        return Err(SweepError::BudgetExceeded {
            projected,
            budget: cfg.budget,
        });
    }

    let cell_reports: Vec<FeasibilityCell> = cells
        .par_iter()
        .map(|p| sweep_cell(cfg, p))
        .collect::<Result<_, _>>()?;

    let total_runs = cell_reports
        .iter()
        .flat_map(|c| {
            [
                &c.delection_not_required,
                &c.exact_delection_required,
                &c.delection_required,
            ]
        })
        .flatten()
        .map(|r| r.runs)
        .sum();
    let all_expected = cell_reports.iter().all(|c| c.all_as_expected());

    Ok(FeasibilityReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: cfg.clone(),
        cells: cell_reports,
        total_runs,
        all_expected,
    })
}

fn sweep_cell(cfg: &SweepConfig, p: &Params) -> Result<FeasibilityCell, SweepError> {
    let g = gcd(p.m, p.n);
    let mut cell = FeasibilityCell {
        n: p.n,
        m: p.m,
        d: p.d,
        gcd_mn: g,
        in_m: in_m(p.m, p.n, p.d),
        gcd_divides_d: divides(g, p.d),
        gcd_le_d: g <= p.d,
        delection_not_required: None,
        exact_delection_required: None,
        delection_required: None,
    };

    for row in &cfg.rows {
        match row {
            TableRow::DElectionNotRequired => {
                cell.delection_not_required = Some(if cell.in_m {
                    run_feasible_row(cfg, p, AlgorithmId::Alg1, Problem::DElection, None, true)?
                } else {
                    run_witness_row(cfg, p)?
                });
            }
            TableRow::ExactDElectionRequired => {
                cell.exact_delection_required = Some(if cell.gcd_divides_d {
                    run_feasible_row(
                        cfg,
                        p,
                        AlgorithmId::Alg2,
                        Problem::ExactDElection,
                        Some(p.d),
                        false,
                    )?
                } else {
                    RowReport {
                        feasible: false,
                        runs: 0,
                        passes: 0,
                        expected_leaders: None,
                        as_expected: true,
                        failures: Vec::new(),
                        witness: None,
                    }
                });
            }
            TableRow::DElectionRequired => {
                cell.delection_required = Some(if cell.gcd_le_d {
                    run_feasible_row(
                        cfg,
                        p,
                        AlgorithmId::GcdComposition,
                        Problem::ExactDElection,
                        Some(g),
                        false,
                    )?
                } else {
                    // The composition must refuse to build at all.
                    let refused = crate::procs::gcd_composition_machine(p).is_err();
                    RowReport {
                        feasible: false,
                        runs: 0,
                        passes: 0,
                        expected_leaders: None,
                        as_expected: refused,
                        failures: Vec::new(),
                        witness: None,
                    }
                });
            }
        }
    }
    Ok(cell)
}

fn run_feasible_row(
    cfg: &SweepConfig,
    p: &Params,
    algorithm: AlgorithmId,
    problem: Problem,
    expected_leaders: Option<u64>,
    vary_participation: bool,
) -> Result<RowReport, SweepError> {
    let modes: &[ParticipationMode] = if vary_participation {
        &cfg.participation_modes
    } else {
        &[ParticipationMode::All]
    };
    let step_bound = cfg.step_bound.unwrap_or_else(|| default_step_bound(p));

    let mut runs = 0;
    let mut passes = 0;
    let mut failures = Vec::new();
    for &seed in &cfg.seeds {
        for perm_spec in &cfg.perm_specs {
            for mode in modes {
                let config = RunConfig {
                    algorithm,
                    params: *p,
                    schedule: SchedulePolicy::SeededRandom { seed },
                    permutations: derive_perm_spec(perm_spec, seed),
                    participation: mode.select(p.n, seed),
                    step_bound,
                    record_full_states: false,
                };
                runs += 1;
                match evaluate_run(&config, problem, expected_leaders) {
                    Ok(()) => passes += 1,
                    Err(reason) => {
                        if failures.len() < MAX_RECORDED_FAILURES {
                            failures.push(RunFailure { config, reason });
                        }
                    }
                }
            }
        }
    }

    Ok(RowReport {
        feasible: true,
        runs,
        passes,
        expected_leaders,
        as_expected: passes == runs,
        failures,
        witness: None,
    })
}

fn evaluate_run(
    config: &RunConfig,
    problem: Problem,
    expected_leaders: Option<u64>,
) -> Result<(), String> {
    let trace = run_config(config).map_err(|e| format!("config error: {e}"))?;
    let target = expected_leaders.unwrap_or(config.params.d);
    let outcome = classify_with(&trace, problem, target);
    if let Contract::Violation { reason } = &outcome.contract {
        return Err(format!("contract violation: {reason}"));
    }
    let violations = check_trace_invariants(&trace).map_err(|e| format!("config error: {e}"))?;
    if !violations.is_empty() {
        return Err(format!("invariant violations: {violations:?}"));
    }
    Ok(())
}

fn run_witness_row(cfg: &SweepConfig, p: &Params) -> Result<RowReport, SweepError> {
    debug_assert!(violating_k(p).is_some());
    let w = ring_witness(p, AlgorithmId::Alg1, cfg.step_bound)?;
    let ok = w.violates_delection && w.q_class_symmetric;
    Ok(RowReport {
        feasible: false,
        runs: 1,
        passes: u64::from(ok),
        expected_leaders: None,
        as_expected: ok,
        failures: Vec::new(),
        witness: Some(WitnessSummary {
            k: w.k,
            delta: w.ring.delta,
            classification: w.classification.clone(),
            termination: w.trace.termination.clone(),
            q_class_symmetric: w.q_class_symmetric,
            violates_delection: w.violates_delection,
            trace: cfg.attach_witness_traces.then(|| w.trace.clone()),
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SweepConfig {
        SweepConfig {
            n_range: (2, 3),
            m_range: (1, 4),
            d_range: (1, 2),
            seeds: (0..3).collect(),
            perm_specs: vec![PermutationSpec::Identity, PermutationSpec::SeededRandom { seed: 0 }],
            participation_modes: vec![
                ParticipationMode::All,
                ParticipationMode::RandomHalf,
                ParticipationMode::Singleton,
            ],
            rows: TableRow::all(),
            step_bound: None,
            budget: 10_000,
            attach_witness_traces: false,
        }
    }

    #[test]
    fn small_sweep_is_all_expected() {
        let report = sweep(&small_config()).unwrap();
        assert!(report.all_expected, "{:#?}", report
            .cells
            .iter()
            .filter(|c| !c.all_as_expected())
            .collect::<Vec<_>>());
        assert!(report.total_runs > 0);
        // Spot-check the known infeasible cell (n=2, m=2, d=1).
        let cell = report
            .cells
            .iter()
            .find(|c| c.n == 2 && c.m == 2 && c.d == 1)
            .unwrap();
        assert!(!cell.in_m);
        let row = cell.delection_not_required.as_ref().unwrap();
        assert!(!row.feasible);
        let w = row.witness.as_ref().unwrap();
        assert!(w.violates_delection && w.q_class_symmetric);
    }

    #[test]
    fn budget_is_enforced_before_running() {
        let mut cfg = small_config();
        cfg.budget = 5;
        assert!(matches!(
            sweep(&cfg),
            Err(SweepError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn empty_range_is_empty_report() {
        let mut cfg = small_config();
        cfg.n_range = (3, 2);
        let report = sweep(&cfg).unwrap();
        assert!(report.cells.is_empty());
        assert_eq!(report.total_runs, 0);
        assert!(report.all_expected);
    }

    #[test]
    fn participation_modes_are_deterministic_and_valid() {
        for mode in [
            ParticipationMode::All,
            ParticipationMode::RandomHalf,
            ParticipationMode::Singleton,
        ] {
            for n in 1..=6 {
                for seed in 0..10 {
                    let a = mode.select(n, seed);
                    let b = mode.select(n, seed);
                    assert_eq!(a, b);
                    assert!(!a.is_empty());
                    assert!(a.windows(2).all(|w| w[0] < w[1]));
                    assert!(a.iter().all(|&p| (p as u64) < n));
                }
            }
        }
    }
}
