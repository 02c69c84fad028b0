//! Second-order mutant pair selection: Random, Prop, Dsort and MWM.

pub mod matching;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::Float;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cpda::{CEMatrix, CausalStructure};
use crate::minilang::ElementId;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HeuristicError {
    #[error("need at least two elements to form a pair")]
    TooFewElements,
    #[error("every causal effect is zero")]
    AllZero,
    #[error("budget must be positive")]
    ZeroBudget,
    #[error("pair count must be positive")]
    ZeroPairs,
    #[error("the matching is empty")]
    EmptyMatching,
    #[error("unknown heuristic `{0}`")]
    Unknown(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Heuristic {
    Random,
    Prop,
    Dsort,
    #[serde(rename = "MWM")]
    Mwm,
}

impl Heuristic {
    pub const ALL: [Heuristic; 4] = [
        Heuristic::Random,
        Heuristic::Prop,
        Heuristic::Dsort,
        Heuristic::Mwm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Heuristic::Random => "Random",
            Heuristic::Prop => "Prop",
            Heuristic::Dsort => "Dsort",
            Heuristic::Mwm => "MWM",
        }
    }
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Heuristic {
    type Err = HeuristicError;

    fn from_str(s: &str) -> Result<Heuristic, HeuristicError> {
        Heuristic::ALL
            .into_iter()
            .find(|h| h.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| HeuristicError::Unknown(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocationEntry {
    pub pair: (ElementId, ElementId),
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ce: Option<f64>,
}

/// How many second-order mutants to draw for each element pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairAllocation {
    pub heuristic: Heuristic,
    pub seed: Option<u64>,
    pub budget: usize,
    pub entries: Vec<AllocationEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl PairAllocation {
    pub fn total(&self) -> usize {
        self.entries.iter().map(|e| e.count).sum()
    }

    pub fn with_seed(mut self, seed: u64) -> PairAllocation {
        self.seed = Some(seed);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: ElementId,
    pub v: ElementId,
    pub weight: f64,
}

/// Undirected graph with positive edge weights, `u < v` on every edge.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightedGraph {
    pub vertex_count: usize,
    pub edges: Vec<Edge>,
}

impl WeightedGraph {
    pub fn new(vertex_count: usize) -> WeightedGraph {
        WeightedGraph {
            vertex_count,
            edges: Vec::new(),
        }
    }

    /// Adds `{a, b}` or raises an existing edge's weight to `w`.
    pub fn add_edge(&mut self, a: ElementId, b: ElementId, w: f64) {
        assert!(a != b, "self-loop at {a}");
        assert!(w > 0.0 && w.is_finite(), "edge weight {w}");
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        match self.edges.iter_mut().find(|e| e.u == u && e.v == v) {
            Some(e) => e.weight = e.weight.max(w),
            None => self.edges.push(Edge { u, v, weight: w }),
        }
    }

    pub fn weight(&self, u: ElementId, v: ElementId) -> Option<f64> {
        let (u, v) = if u < v { (u, v) } else { (v, u) };
        self.edges
            .iter()
            .find(|e| e.u == u && e.v == v)
            .map(|e| e.weight)
    }
}

/// Every unordered pair of distinct `elements`, in index order.
fn unordered_pairs(elements: &[ElementId]) -> Vec<(ElementId, ElementId)> {
    let mut sorted = elements.to_vec();
    sorted.sort();
    sorted.dedup();
    let mut out = Vec::new();
    for (a, x) in sorted.iter().enumerate() {
        for y in &sorted[a + 1..] {
            out.push((*x, *y));
        }
    }
    out
}

fn accumulate(
    draws: impl Iterator<Item = (ElementId, ElementId)>,
    ce: impl Fn(ElementId, ElementId) -> Option<f64>,
) -> Vec<AllocationEntry> {
    let mut counts: BTreeMap<(ElementId, ElementId), usize> = BTreeMap::new();
    for p in draws {
        *counts.entry(p).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(pair, count)| AllocationEntry {
            pair,
            count,
            ce: ce(pair.0, pair.1),
        })
        .collect()
}

/// `k` uniform draws over unordered element pairs, duplicates allowed.
pub fn select_random<R: Rng + ?Sized>(
    elements: &[ElementId],
    k: usize,
    rng: &mut R,
) -> Result<PairAllocation, HeuristicError> {
    if k == 0 {
        return Err(HeuristicError::ZeroBudget);
    }
    let pairs = unordered_pairs(elements);
    if pairs.is_empty() {
        return Err(HeuristicError::TooFewElements);
    }
    let draws: Vec<_> = (0..k)
        .map(|_| pairs[rng.gen_range(0..pairs.len() as u64) as usize])
        .collect();
    Ok(PairAllocation {
        heuristic: Heuristic::Random,
        seed: None,
        budget: k,
        entries: accumulate(draws.into_iter(), |_, _| None),
        warnings: Vec::new(),
    })
}

/// As [`select_random`], recording each pair's larger directed effect.
pub fn select_random_with_ce<R: Rng + ?Sized>(
    elements: &[ElementId],
    ce: &CEMatrix,
    k: usize,
    rng: &mut R,
) -> Result<PairAllocation, HeuristicError> {
    let mut a = select_random(elements, k, rng)?;
    for e in &mut a.entries {
        e.ce = Some(ce.get(e.pair.0, e.pair.1).max(ce.get(e.pair.1, e.pair.0)));
    }
    Ok(a)
}

/// `k` draws over ordered pairs with probability proportional to CE.
pub fn select_prop<R: Rng + ?Sized>(
    ce: &CEMatrix,
    k: usize,
    rng: &mut R,
) -> Result<PairAllocation, HeuristicError> {
    if k == 0 {
        return Err(HeuristicError::ZeroBudget);
    }
    let pos = ce.positive_pairs();
    if pos.is_empty() {
        return Err(HeuristicError::AllZero);
    }
    let dist = WeightedIndex::new(pos.iter().map(|p| p.2)).map_err(|_| HeuristicError::AllZero)?;
    let draws: Vec<_> = (0..k)
        .map(|_| {
            let p = pos[dist.sample(rng)];
            (p.0, p.1)
        })
        .collect();
    Ok(PairAllocation {
        heuristic: Heuristic::Prop,
        seed: None,
        budget: k,
        entries: accumulate(draws.into_iter(), |i, j| Some(ce.get(i, j))),
        warnings: Vec::new(),
    })
}

/// Splits `k` evenly over pairs already ranked best first; the remainder
/// goes one each to the best pairs. Zero-count pairs are dropped.
fn split_evenly(ranked: &[(ElementId, ElementId, f64)], k: usize) -> Vec<AllocationEntry> {
    let n = ranked.len();
    let (base, rem) = (k / n, k % n);
    ranked
        .iter()
        .enumerate()
        .map(|(r, p)| AllocationEntry {
            pair: (p.0, p.1),
            count: base + usize::from(r < rem),
            ce: Some(p.2),
        })
        .filter(|e| e.count > 0)
        .collect()
}

/// Positive pairs by descending CE, ties by ascending (i, j).
fn ranked_positive(ce: &CEMatrix) -> Vec<(ElementId, ElementId, f64)> {
    let mut pos = ce.positive_pairs();
    pos.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    pos
}

/// The `n` highest-CE ordered pairs, sharing `k` equally.
pub fn select_dsort(ce: &CEMatrix, n: usize, k: usize) -> Result<PairAllocation, HeuristicError> {
    if k == 0 {
        return Err(HeuristicError::ZeroBudget);
    }
    if n == 0 {
        return Err(HeuristicError::ZeroPairs);
    }
    let mut ranked = ranked_positive(ce);
    if ranked.is_empty() {
        return Err(HeuristicError::AllZero);
    }
    let mut warnings = Vec::new();
    if ranked.len() < n {
        warnings.push(format!(
            "only {} pairs have positive causal effect, fewer than {n}",
            ranked.len()
        ));
    }
    ranked.truncate(n);
    if k < ranked.len() {
        warnings.push(format!(
            "budget {k} is smaller than the {} selected pairs",
            ranked.len()
        ));
    }
    Ok(PairAllocation {
        heuristic: Heuristic::Dsort,
        seed: None,
        budget: k,
        entries: split_evenly(&ranked, k),
        warnings,
    })
}

/// Undirected closure graph: an edge for every reachable ordered pair with
/// positive CE, keeping the heavier direction.
pub fn build_mwm_graph(s: &CausalStructure, ce: &CEMatrix) -> WeightedGraph {
    let reach = s.transitive_closure();
    let n = s.element_count();
    let mut g = WeightedGraph::new(n);
    for (u, row) in reach.iter().enumerate() {
        for (v, r) in row.iter().enumerate() {
            let w = ce.values[u][v];
            if *r && u != v && w > 0.0 {
                g.add_edge(ElementId(u), ElementId(v), w);
            }
        }
    }
    g.edges.sort_by_key(|e| (e.u, e.v));
    g
}

/// Scales weights to integers exactly when every weight's lowest set bit is
/// at least 2^-`WEIGHT_BITS` of the largest power of two above the maximum.
const WEIGHT_BITS: i32 = 100;

fn integer_weights(g: &WeightedGraph) -> Vec<i128> {
    let decoded: Vec<(u64, i32)> = g
        .edges
        .iter()
        .map(|e| {
            let (m, exp, _) = e.weight.integer_decode();
            (m, exp as i32)
        })
        .collect();
    let top = decoded
        .iter()
        .map(|(m, exp)| exp + (64 - m.leading_zeros()) as i32)
        .max()
        .unwrap_or(0);
    let shift = WEIGHT_BITS - top;
    decoded
        .into_iter()
        .map(|(m, exp)| {
            let e2 = exp + shift;
            let m = m as i128;
            if e2 >= 0 {
                m << e2
            } else if e2 > -64 {
                (m + (1 << (-e2 - 1))) >> -e2
            } else {
                0
            }
        })
        .collect()
}

/// Exact maximum-weight matching. Among optimal matchings the one whose
/// sorted edge list is lexicographically smallest is returned.
pub fn max_weight_matching(g: &WeightedGraph) -> Vec<(ElementId, ElementId)> {
    let mut edges: Vec<(usize, usize, i128)> = g
        .edges
        .iter()
        .zip(integer_weights(g))
        .map(|(e, w)| {
            (
                e.u.index().min(e.v.index()),
                e.u.index().max(e.v.index()),
                w,
            )
        })
        .filter(|e| e.2 > 0)
        .collect();
    edges.sort();
    let optimum = matching_weight(&edges, &[]);
    let mut removed = vec![
        false;
        g.vertex_count
            .max(edges.iter().map(|e| e.1 + 1).max().unwrap_or(0))
    ];
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    let mut chosen_weight: i128 = 0;
    // a known optimal completion of the current choice
    let mut witness = optimal_edges(&edges, &removed);
    for &(u, v, w) in &edges {
        if removed[u] || removed[v] {
            continue;
        }
        let extendable = if witness.contains(&(u, v)) {
            true
        } else {
            removed[u] = true;
            removed[v] = true;
            let rest = matching_weight(&edges, &removed);
            removed[u] = false;
            removed[v] = false;
            chosen_weight + w + rest == optimum
        };
        if extendable {
            removed[u] = true;
            removed[v] = true;
            chosen.push((u, v));
            chosen_weight += w;
            if !witness.contains(&(u, v)) {
                witness = optimal_edges(&edges, &removed);
            }
        }
    }
    debug_assert_eq!(chosen_weight, optimum);
    chosen
        .into_iter()
        .map(|(u, v)| (ElementId(u), ElementId(v)))
        .collect()
}

fn remaining(edges: &[(usize, usize, i128)], removed: &[bool]) -> Vec<(usize, usize, i128)> {
    edges
        .iter()
        .copied()
        .filter(|(u, v, _)| {
            !removed.get(*u).copied().unwrap_or(false) && !removed.get(*v).copied().unwrap_or(false)
        })
        .collect()
}

fn optimal_edges(edges: &[(usize, usize, i128)], removed: &[bool]) -> Vec<(usize, usize)> {
    let rest = remaining(edges, removed);
    let mate = matching::max_weight_matching(&rest);
    rest.iter()
        .filter(|(u, v, _)| mate[*u] == Some(*v))
        .map(|(u, v, _)| (*u, *v))
        .collect()
}

fn matching_weight(edges: &[(usize, usize, i128)], removed: &[bool]) -> i128 {
    let rest = remaining(edges, removed);
    let mate = matching::max_weight_matching(&rest);
    rest.iter()
        .filter(|(u, v, _)| mate[*u] == Some(*v))
        .map(|e| e.2)
        .sum()
}

/// Matched pairs oriented along the larger effect, sharing `k` equally.
pub fn select_mwm(
    s: &CausalStructure,
    ce: &CEMatrix,
    k: usize,
) -> Result<PairAllocation, HeuristicError> {
    if k == 0 {
        return Err(HeuristicError::ZeroBudget);
    }
    let g = build_mwm_graph(s, ce);
    let matched = max_weight_matching(&g);
    if matched.is_empty() {
        return Err(HeuristicError::EmptyMatching);
    }
    let mut ranked: Vec<(ElementId, ElementId, f64)> = matched
        .into_iter()
        .map(|(u, v)| {
            let (a, b) = (ce.get(u, v), ce.get(v, u));
            if a >= b {
                (u, v, a)
            } else {
                (v, u, b)
            }
        })
        .collect();
    ranked.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut warnings = Vec::new();
    if k < ranked.len() {
        warnings.push(format!(
            "budget {k} is smaller than the {} matched pairs",
            ranked.len()
        ));
    }
    Ok(PairAllocation {
        heuristic: Heuristic::Mwm,
        seed: None,
        budget: k,
        entries: split_evenly(&ranked, k),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e(i: usize) -> ElementId {
        ElementId(i)
    }

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> WeightedGraph {
        let mut g = WeightedGraph::new(n);
        for (u, v, w) in edges {
            g.add_edge(e(*u), e(*v), *w);
        }
        g
    }

    fn exact(w: f64) -> BigRational {
        BigRational::from_float(w).unwrap()
    }

    /// Every matching, with its exact weight.
    fn all_matchings(g: &WeightedGraph) -> Vec<(Vec<(ElementId, ElementId)>, BigRational)> {
        fn go(
            k: usize,
            g: &WeightedGraph,
            used: &mut Vec<bool>,
            cur: &mut Vec<(ElementId, ElementId)>,
            w: BigRational,
            out: &mut Vec<(Vec<(ElementId, ElementId)>, BigRational)>,
        ) {
            if k == g.edges.len() {
                let mut m = cur.clone();
                m.sort();
                out.push((m, w));
                return;
            }
            go(k + 1, g, used, cur, w.clone(), out);
            let ed = g.edges[k];
            if !used[ed.u.index()] && !used[ed.v.index()] {
                used[ed.u.index()] = true;
                used[ed.v.index()] = true;
                cur.push((ed.u, ed.v));
                go(k + 1, g, used, cur, w + exact(ed.weight), out);
                cur.pop();
                used[ed.u.index()] = false;
                used[ed.v.index()] = false;
            }
        }
        let mut out = Vec::new();
        go(
            0,
            g,
            &mut vec![false; g.vertex_count],
            &mut Vec::new(),
            BigRational::from_integer(BigInt::from(0)),
            &mut out,
        );
        out
    }

    fn weight_of(g: &WeightedGraph, m: &[(ElementId, ElementId)]) -> BigRational {
        m.iter()
            .map(|(u, v)| exact(g.weight(*u, *v).unwrap()))
            .sum()
    }

    #[test]
    fn matching_examples() {
        // path a-b-c-d: {ab, cd} and {bc} both weigh 2
        let g = graph(4, &[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0)]);
        assert_eq!(max_weight_matching(&g), vec![(e(0), e(1)), (e(2), e(3))]);
        let g = graph(4, &[(0, 1, 2.0), (1, 2, 3.0), (2, 3, 2.0), (3, 0, 3.0)]);
        assert_eq!(max_weight_matching(&g), vec![(e(0), e(3)), (e(1), e(2))]);
        let g = graph(5, &[(3, 4, 0.5)]);
        assert_eq!(max_weight_matching(&g), vec![(e(3), e(4))]);
        assert!(max_weight_matching(&WeightedGraph::new(3)).is_empty());
    }

    #[test]
    fn tiny_and_huge_weights_stay_exact() {
        let g = graph(4, &[(0, 1, 1e-20), (1, 2, 1e-20), (2, 3, 1e-20)]);
        assert_eq!(max_weight_matching(&g), vec![(e(0), e(1)), (e(2), e(3))]);
        let g = graph(3, &[(0, 1, 1.0 + f64::EPSILON), (1, 2, 1.0)]);
        assert_eq!(max_weight_matching(&g), vec![(e(0), e(1))]);
        let g = graph(3, &[(0, 1, 1.0), (1, 2, 1.0 + f64::EPSILON)]);
        assert_eq!(max_weight_matching(&g), vec![(e(1), e(2))]);
    }

    #[test]
    fn closure_graphs() {
        let ce = CEMatrix::new(vec![
            vec![0.0, 0.5, 0.2, 0.1],
            vec![0.3, 0.0, 0.4, 0.1],
            vec![0.0; 4],
            vec![0.9, 0.0, 0.0, 0.0],
        ]);
        let mut s = CausalStructure::empty((0..4).map(ElementId).collect());
        s.parents[1] = vec![e(0)];
        s.parents[2] = vec![e(1)];
        let g = build_mwm_graph(&s, &ce);
        let edges: Vec<_> = g
            .edges
            .iter()
            .map(|x| (x.u.index(), x.v.index(), x.weight))
            .collect();
        assert_eq!(edges, vec![(0, 1, 0.5), (0, 2, 0.2), (1, 2, 0.4)]);
        assert!(build_mwm_graph(
            &CausalStructure::empty((0..4).map(ElementId).collect()),
            &ce
        )
        .edges
        .is_empty());
        // diamond
        let full = CEMatrix::new(vec![vec![0.5; 4]; 4]);
        let mut d = CausalStructure::empty((0..4).map(ElementId).collect());
        d.parents[1] = vec![e(0)];
        d.parents[2] = vec![e(0)];
        d.parents[3] = vec![e(1), e(2)];
        assert_eq!(build_mwm_graph(&d, &full).edges.len(), 5);
    }

    #[test]
    fn select_mwm_orients_and_splits() {
        let ce = CEMatrix::new(vec![vec![0.0, 0.2, 0.0], vec![0.6, 0.0, 0.0], vec![0.0; 3]]);
        let mut s = CausalStructure::empty(vec![e(1), e(0), e(2)]);
        s.parents[0] = vec![e(1)];
        let a = select_mwm(&s, &ce, 7).unwrap();
        assert_eq!(
            a.entries,
            vec![AllocationEntry {
                pair: (e(1), e(0)),
                count: 7,
                ce: Some(0.6)
            }]
        );
        let none = CausalStructure::empty(vec![e(0), e(1), e(2)]);
        assert_eq!(
            select_mwm(&none, &ce, 7),
            Err(HeuristicError::EmptyMatching)
        );
    }

    fn ce_from(values: &[f64], n: usize) -> CEMatrix {
        let mut m = CEMatrix::zeros(n);
        let mut it = values.iter();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m.values[i][j] = *it.next().unwrap_or(&0.0);
                }
            }
        }
        m
    }

    #[test]
    fn dsort_split() {
        let values: Vec<f64> = (1..=30).map(|v| v as f64 / 100.0).collect();
        let ce = ce_from(&values, 6);
        let a = select_dsort(&ce, 21, 1000).unwrap();
        assert_eq!(a.entries.len(), 21);
        assert_eq!(a.entries.iter().filter(|x| x.count == 48).count(), 13);
        assert_eq!(a.entries.iter().filter(|x| x.count == 47).count(), 8);
        assert!(a.entries[..13].iter().all(|x| x.count == 48));
        assert_eq!(a.total(), 1000);
        let one = select_dsort(&ce, 1, 1000).unwrap();
        assert_eq!(one.entries.len(), 1);
        assert_eq!(one.entries[0].ce, Some(0.30));
        let few = select_dsort(&ce_from(&[0.5, 0.2], 3), 5, 10).unwrap();
        assert_eq!(few.entries.len(), 2);
        assert_eq!(few.warnings.len(), 1);
        assert_eq!(
            select_dsort(&CEMatrix::zeros(3), 2, 10),
            Err(HeuristicError::AllZero)
        );
    }

    #[test]
    fn random_and_prop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = select_random(&[e(3), e(9)], 5, &mut rng).unwrap();
        assert_eq!(a.entries.len(), 1);
        assert_eq!(a.entries[0].count, 5);
        assert_eq!(
            select_random(&[e(1)], 5, &mut rng),
            Err(HeuristicError::TooFewElements)
        );
        let els: Vec<_> = (0..40).map(ElementId).collect();
        let a = select_random(&els, 1000, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(a.total(), 1000);
        assert_eq!(
            a,
            select_random(&els, 1000, &mut ChaCha8Rng::seed_from_u64(2)).unwrap()
        );

        let ce = ce_from(&[1.0, 1.0], 3);
        let p = select_prop(&ce, 10_000, &mut rng).unwrap();
        assert_eq!(p.entries.len(), 2);
        // binomial(10000, 0.5): sd = 50
        assert!(
            (p.entries[0].count as i64 - 5000).abs() <= 150,
            "{}",
            p.entries[0].count
        );
        assert_eq!(
            select_prop(&CEMatrix::zeros(3), 10, &mut rng),
            Err(HeuristicError::AllZero)
        );
        // CEs already summing to one are the selection probabilities
        let ce = ce_from(&[0.2, 0.3, 0.5], 3);
        let p = select_prop(&ce, 20_000, &mut rng).unwrap();
        for (x, q) in p.entries.iter().zip([0.2, 0.3, 0.5]) {
            let sd = (20_000.0 * q * (1.0 - q)).sqrt();
            assert!((x.count as f64 - 20_000.0 * q).abs() <= 3.0 * sd);
        }
    }

    #[test]
    fn json_shape() {
        let a = select_dsort(&ce_from(&[0.5, 0.2], 3), 1, 10)
            .unwrap()
            .with_seed(42);
        let json = serde_json::to_string(&a).unwrap();
        assert!(json.contains("\"heuristic\":\"Dsort\""));
        assert!(json.contains("\"seed\":42"));
        assert_eq!(serde_json::from_str::<PairAllocation>(&json).unwrap(), a);
        assert_eq!("mwm".parse::<Heuristic>().unwrap(), Heuristic::Mwm);
    }

    fn arb_graph() -> impl Strategy<Value = WeightedGraph> {
        (2usize..=10).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n, 1u32..=8), 0..20).prop_map(move |raw| {
                let mut g = WeightedGraph::new(n);
                for (u, v, w) in raw {
                    if u != v && g.weight(e(u), e(v)).is_none() {
                        // coarse weights force ties
                        g.add_edge(e(u), e(v), w as f64 / 8.0);
                    }
                }
                g.edges.sort_by_key(|x| (x.u, x.v));
                g
            })
        })
    }

    proptest! {
        #[test]
        fn matching_is_optimal_and_lexicographically_least(g in arb_graph()) {
            let m = max_weight_matching(&g);
            let all = all_matchings(&g);
            let best = all.iter().map(|x| x.1.clone()).max().unwrap();
            prop_assert_eq!(weight_of(&g, &m), best.clone());
            let least = all.iter().filter(|x| x.1 == best).map(|x| x.0.clone()).min().unwrap();
            prop_assert_eq!(m, least);
        }

        #[test]
        fn allocations_conserve_budget(values in proptest::collection::vec(0.0f64..1.0, 12), k in 1usize..300, n in 1usize..12, seed in 0u64..100) {
            let ce = ce_from(&values, 4);
            prop_assume!(values.iter().any(|v| *v > 0.0));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let prop = select_prop(&ce, k, &mut rng).unwrap();
            prop_assert_eq!(prop.total(), k);
            prop_assert!(prop.entries.iter().all(|x| x.ce.unwrap() > 0.0));
            let d = select_dsort(&ce, n, k).unwrap();
            prop_assert_eq!(d.total(), k);
            let chosen_min = d.entries.iter().map(|x| x.ce.unwrap()).fold(f64::INFINITY, f64::min);
            let picked: Vec<_> = d.entries.iter().map(|x| x.pair).collect();
            if k >= n {
                for (i, j, c) in ce.positive_pairs() {
                    if !picked.contains(&(i, j)) {
                        prop_assert!(c <= chosen_min);
                    }
                }
            }
            let r = select_random(&(0..4).map(ElementId).collect::<Vec<_>>(), k, &mut rng).unwrap();
            prop_assert_eq!(r.total(), k);
        }

        #[test]
        fn mwm_allocation_is_vertex_disjoint(values in proptest::collection::vec(0.0f64..1.0, 30), k in 1usize..200) {
            let ce = ce_from(&values, 6);
            let mut s = CausalStructure::empty((0..6).map(ElementId).collect());
            for c in 1..6 {
                s.parents[c] = vec![e(c - 1)];
            }
            if let Ok(a) = select_mwm(&s, &ce, k) {
                let mut seen = std::collections::BTreeSet::new();
                for x in &a.entries {
                    prop_assert!(seen.insert(x.pair.0));
                    prop_assert!(seen.insert(x.pair.1));
                }
                prop_assert_eq!(a.total(), k);
            }
        }
    }
}
