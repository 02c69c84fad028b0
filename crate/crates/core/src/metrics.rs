//! SSHOM classification, SSR, dScore, survival and CE bucketing.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cpda::CEMatrix;
use crate::minilang::ElementId;
use crate::mutation::{Mutant, MutantId};
use crate::trace_eval::KillVector;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("mutant {0} is not second order")]
    NotSecondOrder(MutantId),
    #[error("mutant {0}: kill vectors have different lengths")]
    Length(MutantId),
    #[error("empty mutant set")]
    Empty,
}

/// A mutant's kill vector together with those of its constituents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MutantEvaluation {
    pub id: MutantId,
    pub order: usize,
    pub kills: KillVector,
    pub constituents: Option<(KillVector, KillVector)>,
}

impl MutantEvaluation {
    pub fn first_order(m: &Mutant, kills: KillVector) -> MutantEvaluation {
        MutantEvaluation {
            id: m.id(),
            order: m.order(),
            kills,
            constituents: None,
        }
    }

    pub fn second_order(
        m: &Mutant,
        kills: KillVector,
        f1: KillVector,
        f2: KillVector,
    ) -> Result<MutantEvaluation, MetricsError> {
        if m.order() != 2 {
            return Err(MetricsError::NotSecondOrder(m.id()));
        }
        if f1.0.len() != kills.0.len() || f2.0.len() != kills.0.len() {
            return Err(MetricsError::Length(m.id()));
        }
        Ok(MutantEvaluation {
            id: m.id(),
            order: 2,
            kills,
            constituents: Some((f1, f2)),
        })
    }
}

/// Killable, and every killing test also kills both constituents, with at
/// least one test killing both constituents but not the mutant.
pub fn classify_sshom(e: &MutantEvaluation) -> Result<bool, MetricsError> {
    let (f1, f2) = e
        .constituents
        .as_ref()
        .ok_or(MetricsError::NotSecondOrder(e.id))?;
    let both = f1.0.and(&f2.0);
    Ok(e.kills.0.any() && e.kills.0.is_subset_of(&both) && e.kills.0 != both)
}

fn is_sshom(e: &MutantEvaluation) -> bool {
    classify_sshom(e).unwrap_or(false)
}

pub fn sshom_count(evals: &[MutantEvaluation]) -> usize {
    evals.iter().filter(|e| is_sshom(e)).count()
}

/// Strongly subsuming rate.
pub fn ssr(evals: &[MutantEvaluation]) -> Result<f64, MetricsError> {
    if evals.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(sshom_count(evals) as f64 / evals.len() as f64)
}

/// Distinct kill vectors over mutant count.
pub fn dscore(evals: &[MutantEvaluation]) -> Result<f64, MetricsError> {
    if evals.is_empty() {
        return Err(MetricsError::Empty);
    }
    let distinct: BTreeSet<&KillVector> = evals.iter().map(|e| &e.kills).collect();
    Ok(distinct.len() as f64 / evals.len() as f64)
}

pub fn unique_sshom_count(evals: &[MutantEvaluation]) -> usize {
    evals
        .iter()
        .filter(|e| is_sshom(e))
        .map(|e| &e.kills)
        .collect::<BTreeSet<_>>()
        .len()
}

/// Mutants no test kills.
pub fn survival_count(evals: &[MutantEvaluation]) -> usize {
    evals.iter().filter(|e| e.kills.is_live()).count()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    pub pairs: Vec<(ElementId, ElementId)>,
}

pub const BUCKETS: usize = 10;

/// Bucket 0 holds the zero-CE ordered pairs; positive pairs are sorted by
/// (CE, i, j) and cut into ten runs whose sizes differ by at most one, the
/// larger runs on top.
pub fn bucketize(ce: &CEMatrix) -> Vec<Bucket> {
    let zero: Vec<_> = ce
        .pairs()
        .filter(|p| p.2 <= 0.0)
        .map(|p| (p.0, p.1))
        .collect();
    let mut pos = ce.positive_pairs();
    pos.sort_by(|a, b| a.2.total_cmp(&b.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut out = vec![Bucket {
        index: 0,
        lo: 0.0,
        hi: 0.0,
        pairs: zero,
    }];
    let (base, rem) = (pos.len() / BUCKETS, pos.len() % BUCKETS);
    let mut start = 0;
    for b in 0..BUCKETS {
        let size = base + usize::from(b >= BUCKETS - rem);
        let slice = &pos[start..start + size];
        start += size;
        out.push(Bucket {
            index: b + 1,
            lo: slice.first().map_or(0.0, |p| p.2),
            hi: slice.last().map_or(0.0, |p| p.2),
            pairs: slice.iter().map(|p| (p.0, p.1)).collect(),
        });
    }
    out
}

/// Per-mutant CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MutantRow {
    pub seed: u64,
    pub trial: usize,
    pub heuristic: String,
    pub mutant: MutantId,
    pub first: Option<ElementId>,
    pub second: Option<ElementId>,
    pub killed: usize,
    pub sshom: bool,
    pub kill_vector: String,
}

impl MutantRow {
    pub fn new(
        seed: u64,
        trial: usize,
        heuristic: &str,
        m: &Mutant,
        e: &MutantEvaluation,
    ) -> MutantRow {
        let els = m.elements();
        MutantRow {
            seed,
            trial,
            heuristic: heuristic.to_string(),
            mutant: e.id,
            first: els.first().copied(),
            second: els.get(1).copied(),
            killed: e.kills.kill_count(),
            sshom: is_sshom(e),
            kill_vector: format!("{:016x}", e.kills.0.digest()),
        }
    }
}

pub fn mutant_rows_csv(rows: &[MutantRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    if rows.is_empty() {
        w.write_record([
            "seed",
            "trial",
            "heuristic",
            "mutant",
            "first",
            "second",
            "killed",
            "sshom",
            "kill_vector",
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}
