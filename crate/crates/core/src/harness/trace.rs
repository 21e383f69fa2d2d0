//! Replayable execution traces: the total order of atomic operations with
//! per-step snapshots and final verdicts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::harness::config::RunConfig;
use crate::memory::{MemoryOp, OpResult, Pid};
use crate::procs::Verdict;

pub const TRACE_SCHEMA_VERSION: u32 = 1;

/// One atomic step: which process did what, where it physically landed, and
/// the state of the world immediately afterwards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub index: u64,
    pub pid: Pid,
    /// The operation at its logical address.
    pub op: MemoryOp,
    /// Physical register the permutation routed it to.
    pub physical_addr: usize,
    pub result: OpResult,
    /// Physical register values after this step.
    pub registers: Vec<u64>,
    /// Stable 64-bit digest (hex) of the acting process's local state after
    /// this step.
    pub state_digest: String,
    /// Full canonical local-state encoding (hex), kept only when the run
    /// was configured to record full states.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_state: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Termination {
    AllHalted,
    StepBoundExhausted { bound: u64 },
    /// A deterministic schedule revisited a global state: the run would
    /// loop forever.
    CycleDetected { step: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub schema_version: u32,
    pub config: RunConfig,
    pub steps: Vec<TraceStep>,
    pub verdicts: BTreeMap<Pid, Verdict>,
    pub termination: Termination,
    /// Largest register value ever observed (register width is unbounded in
    /// the model; this records how much was actually used).
    pub max_register_value: u64,
}

impl ExecutionTrace {
    pub fn leaders(&self) -> usize {
        self.verdicts
            .values()
            .filter(|v| **v == Verdict::Leader)
            .count()
    }

    pub fn not_leaders(&self) -> usize {
        self.verdicts
            .values()
            .filter(|v| **v == Verdict::NotLeader)
            .count()
    }

    /// Final physical register values (all zeroes when no step executed).
    pub fn final_registers(&self) -> Vec<u64> {
        self.steps
            .last()
            .map(|s| s.registers.clone())
            .unwrap_or_else(|| vec![0; self.config.params.m as usize])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

pub(crate) fn hex_bytes(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}
