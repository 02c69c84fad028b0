//! Change vectors and kill vectors from paired original/mutant executions.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fnv::Fnv;
use crate::minilang::{
    default_step_limit, execute, ElementId, ExecutionResult, Program, TestInput, Value,
    MIN_STEP_LIMIT,
};
use crate::mutation::{apply, Mutant, MutantId, MutationError};

/// Fixed-length bit vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bits {
    len: usize,
    words: Vec<u64>,
}

impl Bits {
    pub fn zeros(len: usize) -> Bits {
        Bits {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Bits {
        let mut b = Bits::zeros(bits.len());
        for (i, v) in bits.iter().enumerate() {
            b.set(i, *v);
        }
        b
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn any(&self) -> bool {
        self.words.iter().any(|w| *w != 0)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |i| self.get(*i))
    }

    pub fn and(&self, other: &Bits) -> Bits {
        assert_eq!(self.len, other.len);
        Bits {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    /// True when every set bit of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Bits) -> bool {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    /// FNV-1a over the packed words; stable across platforms.
    pub fn digest(&self) -> u64 {
        let mut h = Fnv::new();
        h.write(&(self.len as u64).to_le_bytes());
        for w in &self.words {
            h.write(&w.to_le_bytes());
        }
        h.finish()
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// One flag per program element: did its value stream change on this test?
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChangeVector(pub Bits);

impl ChangeVector {
    pub fn changed(&self, e: ElementId) -> bool {
        self.0.get(e.index())
    }
}

/// One flag per test: does the test kill the mutant?
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KillVector(pub Bits);

impl KillVector {
    pub fn killed_by(&self, test: usize) -> bool {
        self.0.get(test)
    }

    pub fn kill_count(&self) -> usize {
        self.0.count_ones()
    }

    pub fn is_live(&self) -> bool {
        !self.0.any()
    }
}

/// Order-sensitive hash of the values element `e` produced. The sequence
/// length is hashed first, so an unexecuted element hashes to the hash of
/// length zero.
pub fn element_signature(r: &ExecutionResult, e: ElementId) -> u64 {
    trace_signature(r.element_trace(e))
}

fn trace_signature(values: &[Value]) -> u64 {
    let mut h = Fnv::new();
    h.write(&(values.len() as u64).to_le_bytes());
    for v in values {
        match v.canonical() {
            Some(c) => {
                h.write(&[0]);
                h.write(&c.to_le_bytes());
            }
            None => h.write(&[1]),
        }
    }
    h.finish()
}

fn signatures(r: &ExecutionResult) -> Vec<u64> {
    r.trace.iter().map(|t| trace_signature(t)).collect()
}

/// Bit `e` is set iff element `e`'s signature differs between the runs,
/// including when it executed in only one of them.
pub fn change_vector(original: &ExecutionResult, mutated: &ExecutionResult) -> ChangeVector {
    changes_against(&signatures(original), mutated)
}

fn changes_against(original_sigs: &[u64], mutated: &ExecutionResult) -> ChangeVector {
    let mut bits = Bits::zeros(original_sigs.len());
    for (i, sig) in original_sigs.iter().enumerate() {
        if trace_signature(mutated.element_trace(ElementId(i))) != *sig {
            bits.set(i, true);
        }
    }
    ChangeVector(bits)
}

/// Strong kill: observable output or status differs, or the mutant errored
/// or ran out of steps.
pub fn is_killed(original: &ExecutionResult, mutated: &ExecutionResult) -> bool {
    mutated.status.is_abnormal()
        || original.status != mutated.status
        || original.output != mutated.output
}

/// Step budget for runs of the unmutated program.
pub const ORIGINAL_STEP_LIMIT: u64 = 1_000 * MIN_STEP_LIMIT;

/// Runs mutants against a fixed program and suite, reusing the original runs.
#[derive(Clone, Debug)]
pub struct Evaluator {
    program: Program,
    suite: Vec<TestInput>,
    originals: Vec<ExecutionResult>,
    original_sigs: Vec<Vec<u64>>,
    limits: Vec<u64>,
}

impl Evaluator {
    pub fn new(program: Program, suite: Vec<TestInput>) -> Evaluator {
        let originals: Vec<ExecutionResult> = suite
            .iter()
            .map(|t| execute(&program, t, ORIGINAL_STEP_LIMIT))
            .collect();
        let original_sigs = originals.iter().map(signatures).collect();
        let limits = originals
            .iter()
            .map(|r| default_step_limit(r.steps))
            .collect();
        Evaluator {
            program,
            suite,
            originals,
            original_sigs,
            limits,
        }
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn suite(&self) -> &[TestInput] {
        &self.suite
    }

    pub fn originals(&self) -> &[ExecutionResult] {
        &self.originals
    }

    pub fn element_count(&self) -> usize {
        self.program.element_count()
    }

    /// Executed elements ordered so that `a` precedes `b` whenever some
    /// original run executes `a` first and none executes `b` first; the
    /// remaining ties go by id. Never-executed elements follow in id order.
    pub fn execution_order(&self) -> Vec<ElementId> {
        let n = self.element_count();
        let mut before = vec![vec![false; n]; n];
        let mut executed = vec![false; n];
        for r in &self.originals {
            let seq = &r.first_execution;
            for (k, a) in seq.iter().enumerate() {
                executed[a.index()] = true;
                for b in &seq[k + 1..] {
                    before[a.index()][b.index()] = true;
                }
            }
        }
        let precedes = |a: usize, b: usize| before[a][b] && !before[b][a];
        let mut indegree = vec![0usize; n];
        for a in 0..n {
            for b in 0..n {
                if precedes(a, b) {
                    indegree[b] += 1;
                }
            }
        }
        let mut placed = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let pending = executed.iter().filter(|x| **x).count();
        while order.len() < pending {
            // a cycle of precedences can only stall here if runs disagree
            // transitively; the smallest id then goes first
            let next = (0..n)
                .find(|&v| executed[v] && !placed[v] && indegree[v] == 0)
                .or_else(|| (0..n).find(|&v| executed[v] && !placed[v]))
                .expect("pending element");
            placed[next] = true;
            order.push(ElementId(next));
            for b in 0..n {
                if !placed[b] && precedes(next, b) {
                    indegree[b] -= 1;
                }
            }
        }
        order.extend((0..n).filter(|v| !executed[*v]).map(ElementId));
        order
    }

    pub fn run(&self, m: &Mutant) -> Result<Vec<ExecutionResult>, MutationError> {
        let mutated = apply(&self.program, m)?;
        Ok(self
            .suite
            .iter()
            .zip(&self.limits)
            .map(|(t, l)| execute(&mutated, t, *l))
            .collect())
    }

    pub fn kill_vector(&self, m: &Mutant) -> Result<KillVector, MutationError> {
        Ok(self.evaluate(m)?.0)
    }

    pub fn change_vectors(&self, m: &Mutant) -> Result<Vec<ChangeVector>, MutationError> {
        Ok(self.evaluate(m)?.1)
    }

    /// Kill vector and per-test change vectors from one pass over the suite.
    pub fn evaluate(&self, m: &Mutant) -> Result<(KillVector, Vec<ChangeVector>), MutationError> {
        let runs = self.run(m)?;
        let mut kills = Bits::zeros(self.suite.len());
        let mut changes = Vec::with_capacity(runs.len());
        for (i, r) in runs.iter().enumerate() {
            kills.set(i, is_killed(&self.originals[i], r));
            changes.push(changes_against(&self.original_sigs[i], r));
        }
        Ok((KillVector(kills), changes))
    }

    /// Kill vectors for many mutants. Each distinct mutant is executed once;
    /// work is spread over the current rayon pool and results are returned in
    /// input order.
    pub fn kill_vectors(&self, mutants: &[Mutant]) -> Result<Vec<KillVector>, MutationError> {
        let unique: BTreeMap<MutantId, &Mutant> = mutants.iter().map(|m| (m.id(), m)).collect();
        let unique: Vec<(MutantId, &Mutant)> = unique.into_iter().collect();
        let computed = unique
            .par_iter()
            .map(|(id, m)| self.kill_vector(m).map(|v| (*id, v)))
            .collect::<Result<BTreeMap<_, _>, _>>()?;
        Ok(mutants.iter().map(|m| computed[&m.id()].clone()).collect())
    }
}

/// Kill vector of `m` over `suite`.
pub fn kill_vector(
    p: &Program,
    m: &Mutant,
    suite: &[TestInput],
) -> Result<KillVector, MutationError> {
    Evaluator::new(p.clone(), suite.to_vec()).kill_vector(m)
}

/// CSV with a header row of identifiers: `mutant,<test names...>`.
pub fn kill_matrix_csv(rows: &[(MutantId, KillVector)], tests: &[TestInput]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["mutant".to_string()];
    header.extend(tests.iter().map(|t| t.name.clone()));
    w.write_record(&header).expect("in-memory write");
    for (id, kv) in rows {
        let mut rec = vec![id.to_string()];
        rec.extend((0..kv.0.len()).map(|i| if kv.killed_by(i) { "1" } else { "0" }.to_string()));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}
