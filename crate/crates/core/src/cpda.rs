//! Association data, causal structure discovery and pairwise causal effects.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minilang::{ElementId, Program, TestInput};
use crate::mutation::{generate_foms, Mutant, MutantId};
use crate::trace_eval::{Bits, ChangeVector, Evaluator};

pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_CAP: usize = 5;

#[derive(Debug, Error)]
pub enum CpdaError {
    #[error("observation row {row}: vector length {found}, expected {expected}")]
    RowLength {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("observation row {row}: element {element} out of range")]
    Element { row: usize, element: ElementId },
    #[error("observation row {row}: test index {test} out of range")]
    Test { row: usize, test: usize },
    #[error("execution order is not a permutation of the elements")]
    Order,
    #[error("parent {parent} of {child} does not precede it")]
    Cyclic { parent: ElementId, child: ElementId },
    #[error("{0} parents exceed the cap")]
    Cap(ElementId),
    #[error("matrix is {found} wide, expected {expected}")]
    Shape { found: usize, expected: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservationRow {
    pub intervened: ElementId,
    pub test: usize,
    pub changes: ChangeVector,
}

/// Association data: one change vector per (first-order mutant, test) run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservationMatrix {
    element_count: usize,
    test_names: Vec<String>,
    execution_order: Vec<ElementId>,
    rows: Vec<ObservationRow>,
}

impl ObservationMatrix {
    pub fn new(
        element_count: usize,
        test_names: Vec<String>,
        execution_order: Vec<ElementId>,
        rows: Vec<ObservationRow>,
    ) -> Result<ObservationMatrix, CpdaError> {
        let mut seen = vec![false; element_count];
        for e in &execution_order {
            if e.index() >= element_count || std::mem::replace(&mut seen[e.index()], true) {
                return Err(CpdaError::Order);
            }
        }
        if execution_order.len() != element_count {
            return Err(CpdaError::Order);
        }
        for (i, r) in rows.iter().enumerate() {
            if r.changes.0.len() != element_count {
                return Err(CpdaError::RowLength {
                    row: i,
                    found: r.changes.0.len(),
                    expected: element_count,
                });
            }
            if r.intervened.index() >= element_count {
                return Err(CpdaError::Element {
                    row: i,
                    element: r.intervened,
                });
            }
            if r.test >= test_names.len() {
                return Err(CpdaError::Test {
                    row: i,
                    test: r.test,
                });
            }
        }
        Ok(ObservationMatrix {
            element_count,
            test_names,
            execution_order,
            rows,
        })
    }

    pub fn element_count(&self) -> usize {
        self.element_count
    }

    pub fn test_count(&self) -> usize {
        self.test_names.len()
    }

    pub fn test_names(&self) -> &[String] {
        &self.test_names
    }

    pub fn execution_order(&self) -> &[ElementId] {
        &self.execution_order
    }

    pub fn rows(&self) -> &[ObservationRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Elements that have at least one row as the intervention target.
    pub fn intervened(&self) -> Vec<bool> {
        let mut out = vec![false; self.element_count];
        for r in &self.rows {
            out[r.intervened.index()] = true;
        }
        out
    }

    /// Distinct change vectors with their multiplicities, in vector order.
    fn weighted(&self) -> Vec<(&Bits, u64)> {
        let mut m: BTreeMap<&Bits, u64> = BTreeMap::new();
        for r in &self.rows {
            *m.entry(&r.changes.0).or_default() += 1;
        }
        m.into_iter().collect()
    }

    /// CSV: `intervened,test,<element ids...>`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["intervened".to_string(), "test".to_string()];
        header.extend((0..self.element_count).map(|e| ElementId(e).to_string()));
        w.write_record(&header).expect("in-memory write");
        for r in &self.rows {
            let mut rec = vec![r.intervened.to_string(), self.test_names[r.test].clone()];
            rec.extend(
                (0..self.element_count)
                    .map(|e| if r.changes.0.get(e) { "1" } else { "0" }.to_string()),
            );
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
    }
}

/// Runs `k` sampled first-order mutants per mutable element on every test.
pub fn build_association_data<R: Rng + ?Sized>(
    p: &Program,
    suite: &[TestInput],
    k: usize,
    rng: &mut R,
) -> ObservationMatrix {
    build_association_data_with(&Evaluator::new(p.clone(), suite.to_vec()), k, rng)
}

/// As [`build_association_data`], reusing an existing evaluator. Sampling is
/// sequential; execution runs on the current rayon pool.
pub fn build_association_data_with<R: Rng + ?Sized>(
    ev: &Evaluator,
    k: usize,
    rng: &mut R,
) -> ObservationMatrix {
    let n = ev.element_count();
    let mut foms: Vec<(ElementId, Mutant)> = Vec::new();
    for e in (0..n).map(ElementId) {
        foms.extend(
            generate_foms(ev.program(), e, k, rng)
                .into_iter()
                .map(|m| (e, m)),
        );
    }
    let mut unique: BTreeMap<MutantId, &Mutant> = BTreeMap::new();
    for (_, m) in &foms {
        unique.insert(m.id(), m);
    }
    let unique: Vec<(MutantId, &Mutant)> = unique.into_iter().collect();
    let changes: HashMap<MutantId, Vec<ChangeVector>> = unique
        .par_iter()
        .map(|(id, m)| {
            (
                *id,
                ev.change_vectors(m)
                    .expect("sites come from the same program"),
            )
        })
        .collect();
    let mut rows = Vec::with_capacity(foms.len() * ev.suite().len());
    for (e, m) in &foms {
        for (t, cv) in changes[&m.id()].iter().enumerate() {
            rows.push(ObservationRow {
                intervened: *e,
                test: t,
                changes: cv.clone(),
            });
        }
    }
    let names = ev.suite().iter().map(|t| t.name.clone()).collect();
    ObservationMatrix::new(n, names, ev.execution_order(), rows)
        .expect("rows built from the evaluator")
}

/// Parent sets of a DAG over program elements.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalStructure {
    pub parents: Vec<Vec<ElementId>>,
    pub canonical_order: Vec<ElementId>,
}

impl CausalStructure {
    pub fn empty(canonical_order: Vec<ElementId>) -> CausalStructure {
        CausalStructure {
            parents: vec![Vec::new(); canonical_order.len()],
            canonical_order,
        }
    }

    pub fn element_count(&self) -> usize {
        self.parents.len()
    }

    pub fn parents(&self, e: ElementId) -> &[ElementId] {
        &self.parents[e.index()]
    }

    pub fn children(&self, e: ElementId) -> Vec<ElementId> {
        (0..self.parents.len())
            .map(ElementId)
            .filter(|c| self.parents[c.index()].contains(&e))
            .collect()
    }

    /// Kahn's algorithm over the parent lists.
    pub fn is_acyclic(&self) -> bool {
        let n = self.parents.len();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut children = vec![Vec::new(); n];
        for (c, ps) in self.parents.iter().enumerate() {
            for p in ps {
                if p.index() >= n {
                    return false;
                }
                children[p.index()].push(c);
            }
        }
        let mut ready: Vec<usize> = (0..n).filter(|i| indegree[*i] == 0).collect();
        let mut done = 0;
        while let Some(v) = ready.pop() {
            done += 1;
            for c in &children[v] {
                indegree[*c] -= 1;
                if indegree[*c] == 0 {
                    ready.push(*c);
                }
            }
        }
        done == n
    }

    pub fn validate(&self, cap: usize) -> Result<(), CpdaError> {
        let n = self.parents.len();
        let mut pos = vec![usize::MAX; n];
        for (k, e) in self.canonical_order.iter().enumerate() {
            if e.index() >= n || pos[e.index()] != usize::MAX {
                return Err(CpdaError::Order);
            }
            pos[e.index()] = k;
        }
        if self.canonical_order.len() != n {
            return Err(CpdaError::Order);
        }
        for (c, ps) in self.parents.iter().enumerate() {
            if ps.len() > cap {
                return Err(CpdaError::Cap(ElementId(c)));
            }
            for p in ps {
                if p.index() >= n || pos[p.index()] >= pos[c] {
                    return Err(CpdaError::Cyclic {
                        parent: *p,
                        child: ElementId(c),
                    });
                }
            }
        }
        Ok(())
    }

    /// Reachability over parent → child edges; `reach[u][v]` iff a directed
    /// path of length ≥ 1 leads from u to v.
    pub fn transitive_closure(&self) -> Vec<Vec<bool>> {
        let n = self.parents.len();
        let mut reach = vec![vec![false; n]; n];
        // canonical order is topological, so children come later
        for c in self.canonical_order.iter().map(|e| e.index()) {
            for p in &self.parents[c] {
                reach[p.index()][c] = true;
            }
        }
        for c in self.canonical_order.iter().map(|e| e.index()) {
            for p in self.parents[c].iter().map(|e| e.index()) {
                for u in 0..n {
                    if reach[u][p] {
                        reach[u][c] = true;
                    }
                }
            }
        }
        reach
    }
}

/// Greedy conditional-mutual-information parent selection. Candidate parents
/// of an element are the elements before it in the execution order.
pub fn discover_structure(o: &ObservationMatrix, epsilon: f64, cap: usize) -> CausalStructure {
    let rows = o.weighted();
    let order = o.execution_order().to_vec();
    let parents: Vec<Vec<ElementId>> = (0..order.len())
        .into_par_iter()
        .map(|k| {
            let j = order[k].index();
            let candidates: Vec<usize> = order[..k].iter().map(|e| e.index()).collect();
            greedy_parents(&rows, j, &candidates, epsilon, cap)
        })
        .collect();
    let mut by_element = vec![Vec::new(); order.len()];
    for (k, ps) in parents.into_iter().enumerate() {
        by_element[order[k].index()] = ps;
    }
    CausalStructure {
        parents: by_element,
        canonical_order: order,
    }
}

fn greedy_parents(
    rows: &[(&Bits, u64)],
    j: usize,
    candidates: &[usize],
    epsilon: f64,
    cap: usize,
) -> Vec<ElementId> {
    let mut chosen: Vec<usize> = Vec::new();
    let mut strata: Vec<usize> = vec![0; rows.len()];
    while chosen.len() < cap {
        let mut best: Option<(usize, f64)> = None;
        for &i in candidates {
            if chosen.contains(&i) {
                continue;
            }
            let gain = conditional_mi(rows, &strata, chosen.len(), j, i);
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((i, gain));
            }
        }
        match best {
            Some((i, gain)) if gain >= epsilon => {
                for (s, (bits, _)) in strata.iter_mut().zip(rows) {
                    *s |= (bits.get(i) as usize) << chosen.len();
                }
                chosen.push(i);
            }
            _ => break,
        }
    }
    chosen.into_iter().map(ElementId).collect()
}

/// I(S_j; S_i | Z) in bits, where Z is the stratum index of each row.
fn conditional_mi(
    rows: &[(&Bits, u64)],
    strata: &[usize],
    depth: usize,
    j: usize,
    i: usize,
) -> f64 {
    let mut counts = vec![[[0u64; 2]; 2]; 1 << depth];
    let mut total = 0u64;
    for ((bits, w), z) in rows.iter().zip(strata) {
        counts[*z][bits.get(i) as usize][bits.get(j) as usize] += w;
        total += w;
    }
    if total == 0 {
        return 0.0;
    }
    let mut mi = 0.0;
    for c in &counts {
        let nz = (c[0][0] + c[0][1] + c[1][0] + c[1][1]) as f64;
        for x in 0..2 {
            for y in 0..2 {
                let nxy = c[x][y] as f64;
                if nxy == 0.0 {
                    continue;
                }
                let nx = (c[x][0] + c[x][1]) as f64;
                let ny = (c[0][y] + c[1][y]) as f64;
                mi += nxy / total as f64 * ((nxy * nz) / (nx * ny)).log2();
            }
        }
    }
    mi.max(0.0)
}

/// Per-stratum counts for one intervened element.
struct Strata {
    /// rows per stratum
    n: Vec<u64>,
    /// rows per stratum with S_i = s
    ns: Vec<[u64; 2]>,
    /// rows per stratum with S_i = s and S_j = 1, indexed by j
    nsj: Vec<[Vec<u64>; 2]>,
}

impl Strata {
    fn new(rows: &[(&Bits, u64)], i: usize, parents: &[ElementId], width: usize) -> Strata {
        let k = 1 << parents.len();
        let mut st = Strata {
            n: vec![0; k],
            ns: vec![[0; 2]; k],
            nsj: (0..k).map(|_| [vec![0; width], vec![0; width]]).collect(),
        };
        for (bits, w) in rows {
            let z = parents
                .iter()
                .enumerate()
                .fold(0usize, |z, (b, p)| z | (bits.get(p.index()) as usize) << b);
            let s = bits.get(i) as usize;
            st.n[z] += w;
            st.ns[z][s] += w;
            for j in bits.ones() {
                st.nsj[z][s][j] += w;
            }
        }
        st
    }

    fn prob(&self, s: usize, j: usize) -> BigRational {
        let supported: Vec<usize> = (0..self.n.len()).filter(|z| self.ns[*z][s] > 0).collect();
        let denom: u64 = supported.iter().map(|z| self.n[*z]).sum();
        if denom == 0 {
            return BigRational::zero();
        }
        let mut acc = BigRational::zero();
        for z in supported {
            acc += BigRational::new(
                BigInt::from(self.nsj[z][s][j]) * BigInt::from(self.n[z]),
                BigInt::from(self.ns[z][s]),
            );
        }
        acc / BigRational::from_integer(BigInt::from(denom))
    }
}

/// P(S_j = 1 | do(S_i = s)) by backdoor adjustment over the parents of i,
/// renormalised over strata that contain a row with S_i = s.
pub fn interventional_prob(
    o: &ObservationMatrix,
    s: &CausalStructure,
    i: ElementId,
    value: bool,
    j: ElementId,
) -> BigRational {
    Strata::new(&o.weighted(), i.index(), s.parents(i), o.element_count())
        .prob(value as usize, j.index())
}

/// CE(i, j) = P(S_j = 1 | do(S_i = 1)) × (1 − P(S_j = 1 | do(S_i = 0))), exact.
pub fn causal_effect_exact(
    o: &ObservationMatrix,
    s: &CausalStructure,
    i: ElementId,
    j: ElementId,
) -> BigRational {
    if i == j || !o.intervened()[i.index()] {
        return BigRational::zero();
    }
    let st = Strata::new(&o.weighted(), i.index(), s.parents(i), o.element_count());
    effect(&st, j.index())
}

fn effect(st: &Strata, j: usize) -> BigRational {
    st.prob(1, j) * (BigRational::one() - st.prob(0, j))
}

pub fn causal_effect(
    o: &ObservationMatrix,
    s: &CausalStructure,
    i: ElementId,
    j: ElementId,
) -> f64 {
    to_f64(&causal_effect_exact(o, s, i, j))
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("probabilities are finite")
}

/// Dense causal-effect grid; `values[i][j]` is the effect of i on j.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CEMatrix {
    pub values: Vec<Vec<f64>>,
}

impl CEMatrix {
    pub fn new(values: Vec<Vec<f64>>) -> CEMatrix {
        CEMatrix { values }
    }

    pub fn zeros(n: usize) -> CEMatrix {
        CEMatrix {
            values: vec![vec![0.0; n]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: ElementId, j: ElementId) -> f64 {
        self.values[i.index()][j.index()]
    }

    /// Ordered off-diagonal pairs in (i, j) order.
    pub fn pairs(&self) -> impl Iterator<Item = (ElementId, ElementId, f64)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| {
            (0..n)
                .filter(move |j| *j != i)
                .map(move |j| (ElementId(i), ElementId(j), self.values[i][j]))
        })
    }

    pub fn positive_pairs(&self) -> Vec<(ElementId, ElementId, f64)> {
        self.pairs().filter(|p| p.2 > 0.0).collect()
    }

    pub fn check(&self) -> Result<(), CpdaError> {
        for row in &self.values {
            if row.len() != self.len() {
                return Err(CpdaError::Shape {
                    found: row.len(),
                    expected: self.len(),
                });
            }
        }
        Ok(())
    }
}

/// CE for every ordered pair; targets are processed in parallel.
pub fn causal_effect_matrix(o: &ObservationMatrix, s: &CausalStructure) -> CEMatrix {
    let n = o.element_count();
    let rows = o.weighted();
    let intervened = o.intervened();
    let values = (0..n)
        .into_par_iter()
        .map(|i| {
            if !intervened[i] {
                return vec![0.0; n];
            }
            let st = Strata::new(&rows, i, s.parents(ElementId(i)), n);
            (0..n)
                .map(|j| if i == j { 0.0 } else { to_f64(&effect(&st, j)) })
                .collect()
        })
        .collect();
    CEMatrix { values }
}

/// Structure plus effects, the unit persisted between runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CausalModel {
    pub epsilon: f64,
    pub cap: usize,
    pub rows: usize,
    pub structure: CausalStructure,
    pub ce: CEMatrix,
}

impl CausalModel {
    pub fn fit(o: &ObservationMatrix, epsilon: f64, cap: usize) -> CausalModel {
        let structure = discover_structure(o, epsilon, cap);
        let ce = causal_effect_matrix(o, &structure);
        CausalModel {
            epsilon,
            cap,
            rows: o.rows().len(),
            structure,
            ce,
        }
    }

    pub fn validate(&self) -> Result<(), CpdaError> {
        self.structure.validate(self.cap)?;
        self.ce.check()?;
        if self.ce.len() != self.structure.element_count() {
            return Err(CpdaError::Shape {
                found: self.ce.len(),
                expected: self.structure.element_count(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::{parse, Value};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ALG1: &str = "func main(b) {\n  a = 1;\n  a = a + 1;\n  if (b % 2 == 0) {\n    a = a * 2;\n  }\n  c = 100;\n  return a;\n}\n";

    fn alg1_suite() -> Vec<TestInput> {
        (0..10)
            .map(|b| TestInput::new(format!("b{b}"), vec![Value::Int(b)]))
            .collect()
    }

    fn matrix(width: usize, raw: &[(usize, &[u8])]) -> ObservationMatrix {
        let rows = raw
            .iter()
            .map(|(e, bits)| ObservationRow {
                intervened: ElementId(*e),
                test: 0,
                changes: ChangeVector(Bits::from_bools(
                    &bits.iter().map(|b| *b == 1).collect::<Vec<_>>(),
                )),
            })
            .collect();
        ObservationMatrix::new(
            width,
            vec!["t".into()],
            (0..width).map(ElementId).collect(),
            rows,
        )
        .unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    /// Z confounds X and Y: columns are (Z, X, Y).
    const CONFOUNDED: [(usize, &[u8]); 8] = [
        (1, &[0, 0, 0]),
        (1, &[0, 0, 0]),
        (1, &[0, 1, 1]),
        (1, &[0, 1, 0]),
        (1, &[1, 1, 1]),
        (1, &[1, 1, 1]),
        (1, &[1, 0, 1]),
        (1, &[1, 1, 0]),
    ];

    /// Direct frequency computation over raw rows.
    fn brute_adjusted(
        rows: &[(usize, &[u8])],
        x: usize,
        parents: &[usize],
        s: u8,
        y: usize,
    ) -> BigRational {
        let mut strata: Vec<Vec<u8>> = rows
            .iter()
            .map(|(_, r)| parents.iter().map(|p| r[*p]).collect())
            .collect();
        strata.sort();
        strata.dedup();
        let supported: Vec<&Vec<u8>> = strata
            .iter()
            .filter(|z| {
                rows.iter()
                    .any(|(_, r)| r[x] == s && parents.iter().map(|p| r[*p]).eq(z.iter().copied()))
            })
            .collect();
        let in_z = |r: &[u8], z: &Vec<u8>| parents.iter().map(|p| r[*p]).eq(z.iter().copied());
        let total: i64 = supported
            .iter()
            .map(|z| rows.iter().filter(|(_, r)| in_z(r, z)).count() as i64)
            .sum();
        let mut acc = BigRational::zero();
        for z in supported {
            let nz = rows.iter().filter(|(_, r)| in_z(r, z)).count() as i64;
            let nzs = rows.iter().filter(|(_, r)| in_z(r, z) && r[x] == s).count() as i64;
            let nzsy = rows
                .iter()
                .filter(|(_, r)| in_z(r, z) && r[x] == s && r[y] == 1)
                .count() as i64;
            acc += rat(nzsy, nzs) * rat(nz, total);
        }
        acc
    }

    #[test]
    fn backdoor_confounder_fixture() {
        let o = matrix(3, &CONFOUNDED);
        let mut s = CausalStructure::empty((0..3).map(ElementId).collect());
        s.parents[1] = vec![ElementId(0)];
        let p1 = interventional_prob(&o, &s, ElementId(1), true, ElementId(2));
        let p0 = interventional_prob(&o, &s, ElementId(1), false, ElementId(2));
        // Z=0: P(Y|X=1)=1/2, P(Y|X=0)=0; Z=1: P(Y|X=1)=2/3, P(Y|X=0)=1; P(Z)=1/2
        assert_eq!(p1, rat(7, 12));
        assert_eq!(p0, rat(1, 2));
        assert_eq!(p1, brute_adjusted(&CONFOUNDED, 1, &[0], 1, 2));
        assert_eq!(p0, brute_adjusted(&CONFOUNDED, 1, &[0], 0, 2));
        assert_eq!(
            causal_effect_exact(&o, &s, ElementId(1), ElementId(2)),
            rat(7, 24)
        );
        // unadjusted frequency differs: 3/5
        let naive = CausalStructure::empty((0..3).map(ElementId).collect());
        assert_eq!(
            interventional_prob(&o, &naive, ElementId(1), true, ElementId(2)),
            rat(3, 5)
        );
    }

    #[test]
    fn unsupported_strata_are_renormalised() {
        // no row has Z=1 and X=0
        let raw: [(usize, &[u8]); 5] = [
            (1, &[0, 0, 1]),
            (1, &[0, 1, 1]),
            (1, &[0, 0, 0]),
            (1, &[1, 1, 0]),
            (1, &[1, 1, 1]),
        ];
        let o = matrix(3, &raw);
        let mut s = CausalStructure::empty((0..3).map(ElementId).collect());
        s.parents[1] = vec![ElementId(0)];
        assert_eq!(
            interventional_prob(&o, &s, ElementId(1), false, ElementId(2)),
            rat(1, 2)
        );
        assert_eq!(
            interventional_prob(&o, &s, ElementId(1), false, ElementId(2)),
            brute_adjusted(&raw, 1, &[0], 0, 2)
        );
        assert_eq!(
            interventional_prob(&o, &s, ElementId(1), true, ElementId(2)),
            brute_adjusted(&raw, 1, &[0], 1, 2)
        );
        // nothing supports X=0 at all
        let o = matrix(3, &[(1, &[0, 1, 1]), (1, &[1, 1, 0])]);
        assert!(interventional_prob(&o, &s, ElementId(1), false, ElementId(2)).is_zero());
    }

    #[test]
    fn copy_and_independence() {
        let o = matrix(2, &[(0, &[1, 1]), (0, &[0, 0]), (0, &[1, 1]), (0, &[0, 0])]);
        let s = CausalStructure::empty(vec![ElementId(0), ElementId(1)]);
        assert!(interventional_prob(&o, &s, ElementId(0), true, ElementId(1)).is_one());
        assert!(interventional_prob(&o, &s, ElementId(0), false, ElementId(1)).is_zero());
        assert_eq!(causal_effect(&o, &s, ElementId(0), ElementId(1)), 1.0);
        let o = matrix(2, &[(0, &[1, 1]), (0, &[1, 0]), (0, &[0, 1]), (0, &[0, 0])]);
        assert_eq!(causal_effect(&o, &s, ElementId(0), ElementId(1)), 0.25);
        // never intervened
        assert_eq!(causal_effect(&o, &s, ElementId(1), ElementId(0)), 0.0);
        // S_j never changes
        let o = matrix(2, &[(0, &[1, 0]), (0, &[0, 0])]);
        assert_eq!(causal_effect(&o, &s, ElementId(0), ElementId(1)), 0.0);
    }

    #[test]
    fn discovery_basics() {
        // column 2 is constant, column 1 copies column 0
        let o = matrix(
            3,
            &[
                (0, &[1, 1, 0]),
                (0, &[0, 0, 0]),
                (0, &[1, 1, 0]),
                (0, &[0, 0, 0]),
            ],
        );
        let s = discover_structure(&o, DEFAULT_EPSILON, DEFAULT_CAP);
        assert_eq!(s.parents(ElementId(1)), &[ElementId(0)]);
        assert!(s.parents(ElementId(2)).is_empty());
        assert!(s.children(ElementId(2)).is_empty());
        assert!(s.is_acyclic());
        s.validate(DEFAULT_CAP).unwrap();
        let none = discover_structure(&o, DEFAULT_EPSILON, 0);
        assert!(none.parents.iter().all(Vec::is_empty));
    }

    #[test]
    fn closure_of_chain_and_cycle_detection() {
        let mut s = CausalStructure::empty((0..4).map(ElementId).collect());
        s.parents[1] = vec![ElementId(0)];
        s.parents[2] = vec![ElementId(1)];
        let reach = s.transitive_closure();
        assert!(reach[0][1] && reach[1][2] && reach[0][2]);
        assert!(!reach[2][0] && !reach[0][3] && !reach[0][0]);
        s.parents[0] = vec![ElementId(2)];
        assert!(!s.is_acyclic());
        assert!(s.validate(5).is_err());
    }

    #[test]
    fn motivating_example_ordering() {
        let p = parse(ALG1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let o = build_association_data(&p, &alg1_suite(), 50, &mut rng);
        // every element has mutation sites
        assert_eq!(o.rows().len(), 6 * 50 * 10);
        let model = CausalModel::fit(&o, DEFAULT_EPSILON, DEFAULT_CAP);
        model.validate().unwrap();
        let ce = |i, j| model.ce.get(ElementId(i), ElementId(j));
        assert!(ce(0, 1) > ce(0, 3), "{} {}", ce(0, 1), ce(0, 3));
        assert!(ce(0, 3) > ce(0, 4));
        assert_eq!(ce(0, 4), 0.0);
        assert!(model
            .structure
            .parents(ElementId(1))
            .contains(&ElementId(0)));
        assert!(build_association_data(&p, &alg1_suite(), 0, &mut rng).is_empty());
    }

    #[test]
    fn csv_and_json() {
        let o = matrix(3, &CONFOUNDED);
        let csv = o.to_csv();
        assert!(csv.starts_with("intervened,test,e0,e1,e2\ne1,t,0,0,0\n"));
        let model = CausalModel::fit(&o, DEFAULT_EPSILON, DEFAULT_CAP);
        let json = serde_json::to_string(&model).unwrap();
        assert_eq!(serde_json::from_str::<CausalModel>(&json).unwrap(), model);
    }

    fn arb_rows() -> impl Strategy<Value = Vec<(usize, Vec<u8>)>> {
        proptest::collection::vec((0usize..5, proptest::collection::vec(0u8..2, 5)), 1..40)
    }

    fn to_matrix(rows: &[(usize, Vec<u8>)]) -> ObservationMatrix {
        let raw: Vec<(usize, &[u8])> = rows.iter().map(|(e, r)| (*e, r.as_slice())).collect();
        matrix(5, &raw)
    }

    proptest! {
        #[test]
        fn ce_in_unit_interval_and_structure_acyclic(rows in arb_rows(), cap in 0usize..4) {
            let o = to_matrix(&rows);
            let m = CausalModel::fit(&o, 0.0, cap);
            prop_assert!(m.structure.is_acyclic());
            m.validate().unwrap();
            for i in 0..5 {
                prop_assert_eq!(m.ce.values[i][i], 0.0);
                for j in 0..5 {
                    prop_assert!((0.0..=1.0).contains(&m.ce.values[i][j]));
                }
            }
        }

        #[test]
        fn duplication_leaves_everything_unchanged(rows in arb_rows()) {
            let o = to_matrix(&rows);
            let mut doubled = rows.clone();
            doubled.extend(rows.iter().cloned());
            let d = to_matrix(&doubled);
            let a = CausalModel::fit(&o, DEFAULT_EPSILON, DEFAULT_CAP);
            let b = CausalModel::fit(&d, DEFAULT_EPSILON, DEFAULT_CAP);
            prop_assert_eq!(&a.structure, &b.structure);
            prop_assert_eq!(&a.ce, &b.ce);
        }

        #[test]
        fn adjustment_matches_brute_force(rows in arb_rows(), x in 1usize..5, y in 0usize..5, mask in 0u8..4, s in 0u8..2) {
            prop_assume!(x != y);
            let parents: Vec<usize> = (0..x).filter(|p| mask >> p & 1 == 1).take(2).collect();
            let o = to_matrix(&rows);
            let mut st = CausalStructure::empty((0..5).map(ElementId).collect());
            st.parents[x] = parents.iter().map(|p| ElementId(*p)).collect();
            let raw: Vec<(usize, &[u8])> = rows.iter().map(|(e, r)| (*e, r.as_slice())).collect();
            prop_assert_eq!(
                interventional_prob(&o, &st, ElementId(x), s == 1, ElementId(y)),
                brute_adjusted(&raw, x, &parents, s, y)
            );
        }
    }
}
