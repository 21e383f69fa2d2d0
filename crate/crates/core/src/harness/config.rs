//! Run configuration: everything needed to reproduce an execution
//! byte-for-byte, and its resolution into machines, memory, and a
//! scheduler.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memory::{
    make_permutations, AnonymousMemory, MemoryError, Permutation, PermutationPolicy, Pid,
};
use crate::numth::{bezout_pair, InfeasibleParams, Params, ParamsError};
use crate::procs::{
    alg1_machine, alg2_machine, alg3_machine, gcd_composition_machine, StepMachine,
};
use crate::sched::{ring_adversary, SchedulePolicy, Scheduler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmId {
    /// Round-ladder d-election, participation optional.
    Alg1,
    /// Bezout square-capture exact d-election, participation required.
    Alg2,
    /// Single-register d-election (m = 1).
    Alg3,
    /// d-election by exact gcd(m, n)-election, participation required.
    GcdComposition,
}

impl AlgorithmId {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmId::Alg1 => "alg1",
            AlgorithmId::Alg2 => "alg2",
            AlgorithmId::Alg3 => "alg3",
            AlgorithmId::GcdComposition => "gcd-composition",
        }
    }

    /// True when the algorithm's contract requires all `n` processes to
    /// participate.
    pub fn requires_full_participation(&self) -> bool {
        matches!(self, AlgorithmId::Alg2 | AlgorithmId::GcdComposition)
    }
}

impl std::str::FromStr for AlgorithmId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alg1" => Ok(AlgorithmId::Alg1),
            "alg2" => Ok(AlgorithmId::Alg2),
            "alg3" => Ok(AlgorithmId::Alg3),
            "gcd-composition" => Ok(AlgorithmId::GcdComposition),
            other => Err(format!(
                "unknown algorithm '{other}' (expected alg1, alg2, alg3, or gcd-composition)"
            )),
        }
    }
}

impl std::fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the adversary assigns register-name permutations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum PermutationSpec {
    Identity,
    RotationByPid { stride: usize },
    SeededRandom { seed: u64 },
    /// The ring placement for `k` participants; implies participation
    /// `0..k` (see `sched::ring_adversary`).
    RingAdversary { k: usize },
    Explicit { maps: Vec<Vec<usize>> },
}

/// Complete, replayable description of one execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: AlgorithmId,
    pub params: Params,
    pub schedule: SchedulePolicy,
    pub permutations: PermutationSpec,
    /// Sorted, duplicate-free pids that invoke the election.
    pub participation: Vec<Pid>,
    pub step_bound: u64,
    #[serde(default)]
    pub record_full_states: bool,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Infeasible(#[from] InfeasibleParams),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("participation must be non-empty")]
    EmptyParticipation,
    #[error("participant {pid} out of range for n = {n}")]
    BadParticipant { pid: Pid, n: u64 },
    #[error("participation must be sorted and duplicate-free")]
    UnsortedParticipation,
    #[error("this algorithm runs on a single register (m = 1), got m = {m}")]
    SingleRegisterOnly { m: u64 },
    #[error("{algorithm} requires participation of all {n} processes")]
    FullParticipationRequired { algorithm: AlgorithmId, n: u64 },
    #[error("lock-step order must be a permutation of the participation set")]
    LockStepOrderMismatch,
    #[error("ring adversary with k = {k} requires participation exactly 0..{k}")]
    RingParticipationMismatch { k: usize },
    #[error("ring adversary k = {k} exceeds n = {n}")]
    RingTooManyParticipants { k: usize, n: u64 },
    #[error("explicit permutations must supply one map per process (n = {n}, got {got})")]
    ExplicitPermCount { n: u64, got: usize },
    #[error("step bound must be at least 1")]
    ZeroStepBound,
    #[error("symmetry check requires identical permutations for all processes")]
    NonUniformPermutations,
    #[error("parameters are feasible; no adversary witness applies")]
    ParametersFeasible,
}

/// Generous default step bound: a large multiple of the worst-case number
/// of productive steps at desk scale.
pub fn default_step_bound(p: &Params) -> u64 {
    200 * p.n * p.m * (p.n - p.d + 2)
}

/// Builds one step machine for `algorithm` under `p`.
pub fn machine_for(algorithm: AlgorithmId, p: &Params) -> Result<Box<dyn StepMachine>, ConfigError> {
    Ok(match algorithm {
        AlgorithmId::Alg1 => Box::new(alg1_machine(p)),
        AlgorithmId::Alg2 => Box::new(alg2_machine(p, &bezout_pair(p)?)),
        AlgorithmId::Alg3 => {
            if p.m != 1 {
                return Err(ConfigError::SingleRegisterOnly { m: p.m });
            }
            Box::new(alg3_machine(p.d))
        }
        AlgorithmId::GcdComposition => Box::new(gcd_composition_machine(p)?),
    })
}

/// Permutations implied by the config, one per registered process. All
/// policies except the ring adversary register all `n` processes; the ring
/// registers exactly its `k` participants.
pub fn resolve_permutations(config: &RunConfig) -> Result<Vec<Permutation>, ConfigError> {
    let n = config.params.n as usize;
    let m = config.params.m as usize;
    match &config.permutations {
        PermutationSpec::Identity => Ok(make_permutations(n, m, &PermutationPolicy::Identity)),
        PermutationSpec::RotationByPid { stride } => Ok(make_permutations(
            n,
            m,
            &PermutationPolicy::RotationByPid { stride: *stride },
        )),
        PermutationSpec::SeededRandom { seed } => Ok(make_permutations(
            n,
            m,
            &PermutationPolicy::SeededRandom { seed: *seed },
        )),
        PermutationSpec::RingAdversary { k } => {
            if *k as u64 > config.params.n {
                return Err(ConfigError::RingTooManyParticipants {
                    k: *k,
                    n: config.params.n,
                });
            }
            Ok(ring_adversary(m, *k).1)
        }
        PermutationSpec::Explicit { maps } => {
            if maps.len() != n {
                return Err(ConfigError::ExplicitPermCount {
                    n: config.params.n,
                    got: maps.len(),
                });
            }
            maps.iter()
                .map(|map| {
                    let p = Permutation::from_map(map.clone())?;
                    if p.size() != m {
                        return Err(MemoryError::SizeMismatch {
                            got: p.size(),
                            expected: m,
                        });
                    }
                    Ok(p)
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(Into::into)
        }
    }
}

/// A validated run ready to execute.
pub struct ResolvedRun {
    pub config: RunConfig,
    pub machines: Vec<(Pid, Box<dyn StepMachine>)>,
    pub memory: AnonymousMemory,
    pub scheduler: Scheduler,
}

/// Validates the configuration and builds the executable parts.
pub fn resolve(config: &RunConfig) -> Result<ResolvedRun, ConfigError> {
    config.params.validate()?;
    if config.step_bound == 0 {
        return Err(ConfigError::ZeroStepBound);
    }

    let n = config.params.n;
    if config.participation.is_empty() {
        return Err(ConfigError::EmptyParticipation);
    }
    if !config.participation.windows(2).all(|w| w[0] < w[1]) {
        return Err(ConfigError::UnsortedParticipation);
    }
    if let Some(&pid) = config.participation.iter().find(|&&p| p as u64 >= n) {
        return Err(ConfigError::BadParticipant { pid, n });
    }
    if config.algorithm.requires_full_participation()
        && config.participation.len() as u64 != n
    {
        return Err(ConfigError::FullParticipationRequired {
            algorithm: config.algorithm,
            n,
        });
    }
    if let PermutationSpec::RingAdversary { k } = config.permutations {
        if config.participation != (0..k).collect::<Vec<_>>() {
            return Err(ConfigError::RingParticipationMismatch { k });
        }
    }
    if let SchedulePolicy::LockStep { order } = &config.schedule {
        let mut sorted = order.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted != config.participation {
            return Err(ConfigError::LockStepOrderMismatch);
        }
        if order.len() != config.participation.len() {
            return Err(ConfigError::LockStepOrderMismatch);
        }
    }

    let perms = resolve_permutations(config)?;
    let memory = AnonymousMemory::new(config.params.m as usize, perms)?;
    let machines = config
        .participation
        .iter()
        .map(|&pid| Ok((pid, machine_for(config.algorithm, &config.params)?)))
        .collect::<Result<Vec<_>, ConfigError>>()?;
    let scheduler = Scheduler::new(&config.schedule);

    Ok(ResolvedRun {
        config: config.clone(),
        machines,
        memory,
        scheduler,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> RunConfig {
        RunConfig {
            algorithm: AlgorithmId::Alg1,
            params: Params::new(3, 5, 1).unwrap(),
            schedule: SchedulePolicy::SeededRandom { seed: 1 },
            permutations: PermutationSpec::Identity,
            participation: vec![0, 1, 2],
            step_bound: 1000,
            record_full_states: false,
        }
    }

    #[test]
    fn valid_config_resolves() {
        assert!(resolve(&base_config()).is_ok());
    }

    #[test]
    fn alg3_requires_single_register() {
        let mut c = base_config();
        c.algorithm = AlgorithmId::Alg3;
        assert!(matches!(
            resolve(&c),
            Err(ConfigError::SingleRegisterOnly { m: 5 })
        ));
    }

    #[test]
    fn alg2_requires_full_participation() {
        let mut c = base_config();
        c.algorithm = AlgorithmId::Alg2;
        c.participation = vec![0, 2];
        assert!(matches!(
            resolve(&c),
            Err(ConfigError::FullParticipationRequired { .. })
        ));
    }

    #[test]
    fn participation_validation() {
        let mut c = base_config();
        c.participation = vec![];
        assert!(matches!(resolve(&c), Err(ConfigError::EmptyParticipation)));

        let mut c = base_config();
        c.participation = vec![2, 1];
        assert!(matches!(resolve(&c), Err(ConfigError::UnsortedParticipation)));

        let mut c = base_config();
        c.participation = vec![0, 3];
        assert!(matches!(
            resolve(&c),
            Err(ConfigError::BadParticipant { pid: 3, .. })
        ));
    }

    #[test]
    fn lock_step_order_must_match_participation() {
        let mut c = base_config();
        c.schedule = SchedulePolicy::LockStep { order: vec![0, 1] };
        assert!(matches!(resolve(&c), Err(ConfigError::LockStepOrderMismatch)));
        c.schedule = SchedulePolicy::LockStep { order: vec![2, 0, 1] };
        assert!(resolve(&c).is_ok());
    }

    #[test]
    fn ring_participation_must_be_prefix() {
        let mut c = base_config();
        c.permutations = PermutationSpec::RingAdversary { k: 2 };
        c.schedule = SchedulePolicy::LockStep { order: vec![0, 1] };
        c.participation = vec![0, 2];
        assert!(matches!(
            resolve(&c),
            Err(ConfigError::RingParticipationMismatch { k: 2 })
        ));
        c.participation = vec![0, 1];
        assert!(resolve(&c).is_ok());
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = base_config();
        let s = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(c, back);
    }
}
