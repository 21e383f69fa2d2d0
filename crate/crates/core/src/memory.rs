//! The anonymous shared memory: `m` atomic integer registers accessed
//! through per-process name permutations.
//!
//! Logical register names and physical indices both range over `1..=m`. A
//! process never learns its permutation; for a fixed process the same
//! logical name always resolves to the same physical register for the whole
//! execution. All registers start at 0.

use std::sync::Arc;

use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Process identifier. Processes are anonymous to each other; pids exist
/// only for the simulator's bookkeeping.
pub type Pid = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MemoryError {
    #[error("unknown process {pid}")]
    UnknownProcess { pid: Pid },
    #[error("address {addr} out of range 1..={m}")]
    AddressOutOfRange { addr: usize, m: usize },
    #[error("permutation is not a bijection over 1..={m}")]
    NotABijection { m: usize },
    #[error("permutation has size {got}, expected {expected}")]
    SizeMismatch { got: usize, expected: usize },
}

/// A bijection from logical register names `1..=m` to physical indices
/// `1..=m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(m: usize) -> Self {
        Self {
            map: (1..=m).collect(),
        }
    }

    /// Clockwise rotation: logical `x` resolves to `((x - 1 + offset) mod m) + 1`.
    pub fn rotation(m: usize, offset: usize) -> Self {
        Self {
            map: (0..m).map(|x| (x + offset) % m + 1).collect(),
        }
    }

    pub fn from_map(map: Vec<usize>) -> Result<Self, MemoryError> {
        let m = map.len();
        let mut seen = vec![false; m];
        for &phys in &map {
            if phys < 1 || phys > m || seen[phys - 1] {
                return Err(MemoryError::NotABijection { m });
            }
            seen[phys - 1] = true;
        }
        Ok(Self { map })
    }

    /// Physical index for a logical name.
    pub fn apply(&self, logical: usize) -> Result<usize, MemoryError> {
        if logical < 1 || logical > self.map.len() {
            return Err(MemoryError::AddressOutOfRange {
                addr: logical,
                m: self.map.len(),
            });
        }
        Ok(self.map[logical - 1])
    }

    pub fn size(&self) -> usize {
        self.map.len()
    }

    pub fn as_map(&self) -> &[usize] {
        &self.map
    }
}

/// One atomic shared-memory operation, addressed by logical name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MemoryOp {
    Read { addr: usize },
    Write { addr: usize, value: u64 },
    CompareAndSwap { addr: usize, old: u64, new: u64 },
}

impl MemoryOp {
    pub fn addr(&self) -> usize {
        match *self {
            MemoryOp::Read { addr }
            | MemoryOp::Write { addr, .. }
            | MemoryOp::CompareAndSwap { addr, .. } => addr,
        }
    }

    /// True for plain read/write operations (the RW model).
    pub fn is_rw(&self) -> bool {
        !matches!(self, MemoryOp::CompareAndSwap { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OpResult {
    ReadValue { value: u64 },
    WriteAck,
    CasOutcome { success: bool },
}

/// Permutation assignment policies for plain runs. The ring adversary builds
/// its permutations directly (see `sched::ring_adversary`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum PermutationPolicy {
    Identity,
    /// Process `i` sees the memory rotated by `i * stride`.
    RotationByPid { stride: usize },
    /// Independent Fisher-Yates shuffle per process from one seeded stream.
    SeededRandom { seed: u64 },
}

/// Builds one permutation per process under `policy`. Deterministic for a
/// fixed `(n, m, policy)`.
pub fn make_permutations(n: usize, m: usize, policy: &PermutationPolicy) -> Vec<Permutation> {
    match policy {
        PermutationPolicy::Identity => (0..n).map(|_| Permutation::identity(m)).collect(),
        PermutationPolicy::RotationByPid { stride } => (0..n)
            .map(|i| Permutation::rotation(m, (i * stride) % m.max(1)))
            .collect(),
        PermutationPolicy::SeededRandom { seed } => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
            (0..n).map(|_| random_permutation(m, &mut rng)).collect()
        }
    }
}

// Fisher-Yates with explicit modulo draws so the result is stable across
// dependency upgrades.
fn random_permutation(m: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Permutation {
    let mut map: Vec<usize> = (1..=m).collect();
    for i in (1..m).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        map.swap(i, j);
    }
    Permutation { map }
}

/// The shared memory itself. All mutation flows through [`AnonymousMemory::apply`],
/// one atomic operation at a time, which is what makes executions
/// linearizable by construction. Permutations are fixed for the whole
/// execution.
#[derive(Debug, Clone)]
pub struct AnonymousMemory {
    registers: Vec<u64>,
    perms: Arc<Vec<Permutation>>,
    op_count: u64,
}

impl AnonymousMemory {
    /// Fresh memory of `m` zeroed registers with one permutation per process.
    pub fn new(m: usize, perms: Vec<Permutation>) -> Result<Self, MemoryError> {
        for p in &perms {
            if p.size() != m {
                return Err(MemoryError::SizeMismatch {
                    got: p.size(),
                    expected: m,
                });
            }
        }
        Ok(Self {
            registers: vec![0; m],
            perms: Arc::new(perms),
            op_count: 0,
        })
    }

    /// Fresh memory where all `n` processes share one permutation (the
    /// identical-views reduction used by the RW symmetry checker).
    pub fn with_uniform_perm(m: usize, n: usize, perm: Permutation) -> Result<Self, MemoryError> {
        Self::new(m, vec![perm; n])
    }

    pub fn register_count(&self) -> usize {
        self.registers.len()
    }

    pub fn process_count(&self) -> usize {
        self.perms.len()
    }

    pub fn op_count(&self) -> u64 {
        self.op_count
    }

    pub fn permutation(&self, pid: Pid) -> Result<&Permutation, MemoryError> {
        self.perms.get(pid).ok_or(MemoryError::UnknownProcess { pid })
    }

    /// Physical index process `pid` actually touches when it names `addr`.
    pub fn physical(&self, pid: Pid, addr: usize) -> Result<usize, MemoryError> {
        self.permutation(pid)?.apply(addr)
    }

    /// Executes one operation atomically for `pid` through its permutation.
    /// Returns the result together with the physical index touched.
    pub fn apply(&mut self, pid: Pid, op: &MemoryOp) -> Result<(OpResult, usize), MemoryError> {
        let phys = self.physical(pid, op.addr())?;
        let slot = &mut self.registers[phys - 1];
        let result = match *op {
            MemoryOp::Read { .. } => OpResult::ReadValue { value: *slot },
            MemoryOp::Write { value, .. } => {
                *slot = value;
                OpResult::WriteAck
            }
            MemoryOp::CompareAndSwap { old, new, .. } => {
                if *slot == old {
                    *slot = new;
                    OpResult::CasOutcome { success: true }
                } else {
                    OpResult::CasOutcome { success: false }
                }
            }
        };
        self.op_count += 1;
        Ok((result, phys))
    }

    /// Copy of the physical register values. Observer-only: does not count
    /// as a process step and does not bump `op_count`.
    pub fn snapshot(&self) -> Vec<u64> {
        self.registers.clone()
    }
}
