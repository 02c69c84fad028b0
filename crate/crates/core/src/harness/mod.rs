//! Experiment orchestration: model caching, the three research questions and
//! their CSV/JSON reports.

mod config;

pub use config::{parse_config, ConfigError, ConfigOverrides, ExperimentConfig, SEED_ENV};

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchmarks::{load_benchmark, BenchmarkCase, BenchmarkError};
use crate::cpda::{
    build_association_data_with, CEMatrix, CausalModel, CpdaError, ObservationMatrix,
};
use crate::fnv::Fnv;
use crate::heuristics::{
    build_mwm_graph, max_weight_matching, select_dsort, select_mwm, select_prop,
    select_random_with_ce, Heuristic, HeuristicError, PairAllocation,
};
use crate::metrics::{
    bucketize, dscore, mutant_rows_csv, sshom_count, ssr, survival_count, unique_sshom_count,
    MetricsError, MutantEvaluation, MutantRow,
};
use crate::minilang::{format_suite, ElementId};
use crate::mutation::{
    compose_som, enumerate_fom_sites, Mutant, MutantId, MutationError, MutationInstance,
};
use crate::trace_eval::{Evaluator, KillVector};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Benchmark(#[from] BenchmarkError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Heuristic(#[from] HeuristicError),
    #[error(transparent)]
    Mutation(#[from] MutationError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Cpda(#[from] CpdaError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("no CPDA model for this benchmark, seed and per-element count (looked for {0}); run `cpda build` first")]
    MissingModel(PathBuf),
    #[error("model at {path} was built for {found} elements, the program has {expected}")]
    StaleModel {
        path: PathBuf,
        found: usize,
        expected: usize,
    },
    #[error("element {0} has no mutation sites")]
    NoSites(ElementId),
    #[error("thread pool: {0}")]
    Pool(String),
}

type Result<T> = std::result::Result<T, HarnessError>;

/// Independent random stream for `label` under `seed`.
pub fn stream(seed: u64, label: &str) -> ChaCha8Rng {
    let mut h = Fnv::new();
    h.write(&seed.to_le_bytes());
    h.write(label.as_bytes());
    ChaCha8Rng::seed_from_u64(h.finish())
}

/// Runs `f` on a pool of `jobs` threads, or on the global pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HarnessError::Pool(e.to_string()))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| HarnessError::Json {
        path: path.into(),
        source,
    })?;
    text.push('\n');
    write_file(path, &text)
}

fn csv_text<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}

/// Persisted CPDA model with the parameters it was built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub benchmark: String,
    pub seed: u64,
    pub per_element: usize,
    pub element_count: usize,
    pub test_count: usize,
    pub model: CausalModel,
}

/// The parameters that determine an experiment's outputs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunParameters {
    pub benchmark: String,
    pub seed: u64,
    pub per_element: usize,
    pub budget: usize,
    pub pairs_per_bucket: usize,
    pub homs_per_pair: usize,
    pub rq1_trials: usize,
    pub rq2_trials: usize,
    pub epsilon: f64,
    pub cap: usize,
}

/// A loaded benchmark plus everything reused across experiments.
pub struct Session {
    pub cfg: ExperimentConfig,
    pub case: BenchmarkCase,
    pub evaluator: Evaluator,
    sites: Vec<Vec<MutationInstance>>,
    cache: HashMap<MutantId, KillVector>,
}

impl Session {
    pub fn new(cfg: ExperimentConfig) -> Result<Session> {
        let case = load_benchmark(&cfg.benchmark)?;
        Ok(Session::with_case(cfg, case))
    }

    pub fn with_case(cfg: ExperimentConfig, case: BenchmarkCase) -> Session {
        let evaluator = Evaluator::new(case.program.clone(), case.suite.clone());
        let sites = (0..case.program.element_count())
            .map(|e| enumerate_fom_sites(&case.program, ElementId(e)))
            .collect();
        Session {
            cfg,
            case,
            evaluator,
            sites,
            cache: HashMap::new(),
        }
    }

    pub fn per_element(&self) -> usize {
        self.cfg.per_element.unwrap_or(self.case.per_element)
    }

    pub fn parameters(&self) -> RunParameters {
        RunParameters {
            benchmark: self.case.name.clone(),
            seed: self.cfg.seed,
            per_element: self.per_element(),
            budget: self.cfg.budget,
            pairs_per_bucket: self.cfg.pairs_per_bucket,
            homs_per_pair: self.cfg.homs_per_pair,
            rq1_trials: self.cfg.rq1_trials,
            rq2_trials: self.cfg.rq2_trials,
            epsilon: self.cfg.epsilon,
            cap: self.cfg.cap,
        }
    }

    /// Elements with at least one mutation site.
    pub fn mutable(&self) -> Vec<bool> {
        self.sites.iter().map(|s| !s.is_empty()).collect()
    }

    pub fn sites(&self, e: ElementId) -> &[MutationInstance] {
        &self.sites[e.index()]
    }

    pub fn model_path(&self) -> PathBuf {
        let mut h = Fnv::new();
        for part in [
            self.case.name.as_str(),
            self.case.source.as_str(),
            &format_suite(&self.case.suite),
            &self.per_element().to_string(),
            &self.cfg.seed.to_string(),
            &self.cfg.epsilon.to_string(),
            &self.cfg.cap.to_string(),
        ] {
            h.write(part.as_bytes());
            h.write(&[0]);
        }
        self.cfg
            .out
            .join("cache")
            .join(format!("cpda-{:016x}.json", h.finish()))
    }

    pub fn build_model(&self) -> (ObservationMatrix, ModelFile) {
        let mut rng = stream(self.cfg.seed, "cpda");
        let o = build_association_data_with(&self.evaluator, self.per_element(), &mut rng);
        let model = CausalModel::fit(&o, self.cfg.epsilon, self.cfg.cap);
        let file = ModelFile {
            benchmark: self.case.name.clone(),
            seed: self.cfg.seed,
            per_element: self.per_element(),
            element_count: o.element_count(),
            test_count: o.test_count(),
            model,
        };
        (o, file)
    }

    pub fn load_model(&self) -> Result<Option<ModelFile>> {
        let path = self.model_path();
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(|source| HarnessError::Io {
            path: path.clone(),
            source,
        })?;
        let file: ModelFile = serde_json::from_str(&text).map_err(|source| HarnessError::Json {
            path: path.clone(),
            source,
        })?;
        file.model.validate()?;
        if file.element_count != self.case.program.element_count() {
            return Err(HarnessError::StaleModel {
                path,
                found: file.element_count,
                expected: self.case.program.element_count(),
            });
        }
        Ok(Some(file))
    }

    pub fn save_model(&self, file: &ModelFile) -> Result<()> {
        write_json(&self.model_path(), file)
    }

    /// Cached model, built and cached first unless `no_build` is set.
    pub fn model(&self) -> Result<ModelFile> {
        if let Some(m) = self.load_model()? {
            return Ok(m);
        }
        if self.cfg.no_build {
            return Err(HarnessError::MissingModel(self.model_path()));
        }
        let (_, file) = self.build_model();
        self.save_model(&file)?;
        Ok(file)
    }

    /// CE with every pair involving an unmutable element set to zero, since
    /// no second-order mutant can be made for it.
    pub fn masked_ce(&self, ce: &CEMatrix) -> CEMatrix {
        let mutable = self.mutable();
        let mut out = ce.clone();
        for (i, row) in out.values.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                if !mutable[i] || !mutable[j] {
                    *v = 0.0;
                }
            }
        }
        out
    }

    /// Kill vectors for `mutants`, executing only ones not seen before.
    pub fn kill_vectors(&mut self, mutants: &[Mutant]) -> Result<Vec<KillVector>> {
        let missing: BTreeMap<MutantId, &Mutant> = mutants
            .iter()
            .filter(|m| !self.cache.contains_key(&m.id()))
            .map(|m| (m.id(), m))
            .collect();
        let missing: Vec<(MutantId, &Mutant)> = missing.into_iter().collect();
        let ev = &self.evaluator;
        let computed = missing
            .par_iter()
            .map(|(id, m)| ev.kill_vector(m).map(|k| (*id, k)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        self.cache.extend(computed);
        Ok(mutants
            .iter()
            .map(|m| self.cache[&m.id()].clone())
            .collect())
    }

    pub fn evaluate_foms(&mut self, foms: &[Mutant]) -> Result<Vec<MutantEvaluation>> {
        let kills = self.kill_vectors(foms)?;
        Ok(foms
            .iter()
            .zip(kills)
            .map(|(m, k)| MutantEvaluation::first_order(m, k))
            .collect())
    }

    pub fn evaluate_soms(&mut self, soms: &[Mutant]) -> Result<Vec<MutantEvaluation>> {
        let mut all = Vec::with_capacity(soms.len() * 3);
        for m in soms {
            let (f1, f2) = m.constituents().ok_or(MutationError::BadOrder(m.order()))?;
            all.push(m.clone());
            all.push(f1);
            all.push(f2);
        }
        let kills = self.kill_vectors(&all)?;
        soms.iter()
            .zip(kills.chunks(3))
            .map(|(m, k)| {
                Ok(MutantEvaluation::second_order(
                    m,
                    k[0].clone(),
                    k[1].clone(),
                    k[2].clone(),
                )?)
            })
            .collect()
    }

    /// One second-order mutant per unit of count: a uniformly drawn
    /// first-order mutant at each element of the pair, combined.
    pub fn generate_soms<R: Rng + ?Sized>(
        &self,
        alloc: &PairAllocation,
        rng: &mut R,
    ) -> Result<Vec<Mutant>> {
        let mut out = Vec::with_capacity(alloc.total());
        for e in &alloc.entries {
            for _ in 0..e.count {
                out.push(self.som(e.pair, rng)?);
            }
        }
        Ok(out)
    }

    fn som<R: Rng + ?Sized>(&self, (a, b): (ElementId, ElementId), rng: &mut R) -> Result<Mutant> {
        let pick = |e: ElementId, rng: &mut R| -> Result<Mutant> {
            let sites = self.sites(e);
            if sites.is_empty() {
                return Err(HarnessError::NoSites(e));
            }
            Ok(Mutant::first_order(
                sites[rng.gen_range(0..sites.len() as u64) as usize].clone(),
            ))
        };
        let f1 = pick(a, rng)?;
        let f2 = pick(b, rng)?;
        Ok(compose_som(&f1, &f2)?)
    }

    /// `count` first-order mutants drawn uniformly over every site.
    pub fn sample_foms<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<Mutant> {
        let all: Vec<&MutationInstance> = self.sites.iter().flatten().collect();
        if all.is_empty() {
            return Vec::new();
        }
        (0..count)
            .map(|_| Mutant::first_order(all[rng.gen_range(0..all.len() as u64) as usize].clone()))
            .collect()
    }

    /// Pairs selected by `h` from a fitted model; `n_mwm` sizes Dsort.
    pub fn allocate<R: Rng + ?Sized>(
        &self,
        h: Heuristic,
        model: &CausalModel,
        ce: &CEMatrix,
        n_mwm: usize,
        rng: &mut R,
    ) -> Result<PairAllocation> {
        let k = self.cfg.budget;
        let alloc = match h {
            Heuristic::Random => {
                let mutable: Vec<ElementId> = self
                    .mutable()
                    .iter()
                    .enumerate()
                    .filter(|(_, m)| **m)
                    .map(|(i, _)| ElementId(i))
                    .collect();
                select_random_with_ce(&mutable, ce, k, rng)?
            }
            Heuristic::Prop => select_prop(ce, k, rng)?,
            Heuristic::Dsort => select_dsort(ce, n_mwm, k)?,
            Heuristic::Mwm => select_mwm(&model.structure, ce, k)?,
        };
        Ok(alloc.with_seed(self.cfg.seed))
    }
}

/// Number of matched pairs on the closure graph, used as Dsort's n.
pub fn matching_size(model: &CausalModel, ce: &CEMatrix) -> usize {
    max_weight_matching(&build_mwm_graph(&model.structure, ce)).len()
}

/// Draws `n` items without replacement (all of them when fewer), keeping
/// their original order.
fn sample_without_replacement<T: Clone, R: Rng + ?Sized>(
    items: &[T],
    n: usize,
    rng: &mut R,
) -> Vec<T> {
    let mut idx: Vec<usize> = (0..items.len()).collect();
    let take = n.min(items.len());
    for i in 0..take {
        let j = i + rng.gen_range(0..(idx.len() - i) as u64) as usize;
        idx.swap(i, j);
    }
    let mut chosen = idx[..take].to_vec();
    chosen.sort_unstable();
    chosen.into_iter().map(|i| items[i].clone()).collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rq1Bucket {
    pub seed: u64,
    pub bucket: usize,
    pub pairs: usize,
    pub ce_lo: f64,
    pub ce_hi: f64,
    pub sampled_pairs: usize,
    pub avg_sshom: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rq1Trial {
    pub seed: u64,
    pub trial: usize,
    pub bucket: usize,
    pub sampled_pairs: usize,
    pub homs: usize,
    pub sshom: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rq1Report {
    pub seed: u64,
    pub parameters: RunParameters,
    pub buckets: Vec<Rq1Bucket>,
    pub trials: Vec<Rq1Trial>,
    pub sampled: Vec<Vec<Vec<(ElementId, ElementId)>>>,
}

/// SSHOM yield per CE bucket.
pub fn rq1(s: &mut Session) -> Result<(Rq1Report, Vec<MutantRow>)> {
    let model = s.model()?;
    let ce = s.masked_ce(&model.model.ce);
    let buckets = bucketize(&ce);
    let mutable = s.mutable();
    let seed = s.cfg.seed;
    let mut trials = Vec::new();
    let mut sampled = Vec::new();
    let mut rows = Vec::new();
    for t in 0..s.cfg.rq1_trials {
        let mut per_bucket = Vec::new();
        let mut soms: Vec<(usize, Mutant)> = Vec::new();
        for b in &buckets {
            let candidates: Vec<(ElementId, ElementId)> = b
                .pairs
                .iter()
                .copied()
                .filter(|(i, j)| mutable[i.index()] && mutable[j.index()])
                .collect();
            let mut rng = stream(seed, &format!("rq1/trial{t}/bucket{}", b.index));
            let chosen = sample_without_replacement(&candidates, s.cfg.pairs_per_bucket, &mut rng);
            for p in &chosen {
                for _ in 0..s.cfg.homs_per_pair {
                    soms.push((b.index, s.som(*p, &mut rng)?));
                }
            }
            per_bucket.push(chosen);
        }
        let mutants: Vec<Mutant> = soms.iter().map(|x| x.1.clone()).collect();
        let evals = s.evaluate_soms(&mutants)?;
        for b in &buckets {
            let idx: Vec<usize> = (0..soms.len()).filter(|k| soms[*k].0 == b.index).collect();
            let bucket_evals: Vec<MutantEvaluation> =
                idx.iter().map(|k| evals[*k].clone()).collect();
            trials.push(Rq1Trial {
                seed,
                trial: t,
                bucket: b.index,
                sampled_pairs: per_bucket[b.index].len(),
                homs: bucket_evals.len(),
                sshom: sshom_count(&bucket_evals),
            });
            for k in idx {
                rows.push(MutantRow::new(
                    seed,
                    t,
                    &format!("bucket{}", b.index),
                    &soms[k].1,
                    &evals[k],
                ));
            }
        }
        sampled.push(per_bucket);
    }
    let summary = buckets
        .iter()
        .map(|b| {
            let mine: Vec<&Rq1Trial> = trials.iter().filter(|t| t.bucket == b.index).collect();
            Rq1Bucket {
                seed,
                bucket: b.index,
                pairs: b.pairs.len(),
                ce_lo: b.lo,
                ce_hi: b.hi,
                sampled_pairs: mine.first().map_or(0, |t| t.sampled_pairs),
                avg_sshom: mean(mine.iter().map(|t| t.sshom as f64)),
            }
        })
        .collect();
    Ok((
        Rq1Report {
            seed,
            parameters: s.parameters(),
            buckets: summary,
            trials,
            sampled,
        },
        rows,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeuristicTrial {
    pub seed: u64,
    pub trial: usize,
    pub heuristic: String,
    pub pairs: usize,
    pub homs: usize,
    pub dscore: f64,
    pub sshom: usize,
    pub unique_sshom: usize,
    pub ssr: f64,
    pub survived: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeuristicSummary {
    pub seed: u64,
    pub heuristic: String,
    pub trials: usize,
    pub homs: f64,
    pub dscore: f64,
    pub sshom: f64,
    pub unique_sshom: f64,
    pub ssr: f64,
    pub survived: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rq2Report {
    pub seed: u64,
    pub parameters: RunParameters,
    pub n_mwm: usize,
    pub summary: Vec<HeuristicSummary>,
    pub trials: Vec<HeuristicTrial>,
    #[serde(skip)]
    pub allocations: Vec<(usize, PairAllocation)>,
}

/// Allocation and evaluated mutants of one heuristic in one trial. RQ2 and
/// RQ3 draw from the same streams, so they see the same mutants.
fn heuristic_trial(
    s: &mut Session,
    model: &CausalModel,
    ce: &CEMatrix,
    n_mwm: usize,
    h: Heuristic,
    t: usize,
) -> Result<(PairAllocation, Vec<Mutant>, Vec<MutantEvaluation>)> {
    let seed = s.cfg.seed;
    let mut pair_rng = stream(seed, &format!("heuristic/{}/trial{t}/pairs", h.name()));
    let alloc = s.allocate(h, model, ce, n_mwm, &mut pair_rng)?;
    let mut som_rng = stream(seed, &format!("heuristic/{}/trial{t}/mutants", h.name()));
    let soms = s.generate_soms(&alloc, &mut som_rng)?;
    let evals = s.evaluate_soms(&soms)?;
    Ok((alloc, soms, evals))
}

fn summarise(seed: u64, name: &str, trials: &[HeuristicTrial]) -> HeuristicSummary {
    HeuristicSummary {
        seed,
        heuristic: name.to_string(),
        trials: trials.len(),
        homs: mean(trials.iter().map(|t| t.homs as f64)),
        dscore: mean(trials.iter().map(|t| t.dscore)),
        sshom: mean(trials.iter().map(|t| t.sshom as f64)),
        unique_sshom: mean(trials.iter().map(|t| t.unique_sshom as f64)),
        ssr: mean(trials.iter().map(|t| t.ssr)),
        survived: mean(trials.iter().map(|t| t.survived as f64)),
    }
}

/// Diversity and SSHOM yield of each heuristic.
pub fn rq2(s: &mut Session) -> Result<(Rq2Report, Vec<MutantRow>)> {
    let model = s.model()?.model;
    let ce = s.masked_ce(&model.ce);
    let n_mwm = matching_size(&model, &ce);
    let seed = s.cfg.seed;
    let mut trials = Vec::new();
    let mut allocations = Vec::new();
    let mut rows = Vec::new();
    for t in 0..s.cfg.rq2_trials {
        for h in Heuristic::ALL {
            let (alloc, soms, evals) = heuristic_trial(s, &model, &ce, n_mwm, h, t)?;
            trials.push(HeuristicTrial {
                seed,
                trial: t,
                heuristic: h.name().into(),
                pairs: alloc.entries.len(),
                homs: evals.len(),
                dscore: dscore(&evals)?,
                sshom: sshom_count(&evals),
                unique_sshom: unique_sshom_count(&evals),
                ssr: ssr(&evals)?,
                survived: survival_count(&evals),
            });
            rows.extend(
                soms.iter()
                    .zip(&evals)
                    .map(|(m, e)| MutantRow::new(seed, t, h.name(), m, e)),
            );
            allocations.push((t, alloc));
        }
    }
    let summary = Heuristic::ALL
        .iter()
        .map(|h| {
            let mine: Vec<HeuristicTrial> = trials
                .iter()
                .filter(|t| t.heuristic == h.name())
                .cloned()
                .collect();
            summarise(seed, h.name(), &mine)
        })
        .collect();
    Ok((
        Rq2Report {
            seed,
            parameters: s.parameters(),
            n_mwm,
            summary,
            trials,
            allocations,
        },
        rows,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurvivalTrial {
    pub seed: u64,
    pub trial: usize,
    pub group: String,
    pub mutants: usize,
    pub survived: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurvivalSummary {
    pub seed: u64,
    pub group: String,
    pub trials: usize,
    pub mutants: f64,
    pub survived: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rq3Report {
    pub seed: u64,
    pub parameters: RunParameters,
    pub summary: Vec<SurvivalSummary>,
    pub trials: Vec<SurvivalTrial>,
}

pub const FOM_GROUP: &str = "FOM";

/// Surviving mutants per heuristic against the same number of first-order
/// mutants.
pub fn rq3(s: &mut Session) -> Result<Rq3Report> {
    let model = s.model()?.model;
    let ce = s.masked_ce(&model.ce);
    let n_mwm = matching_size(&model, &ce);
    let seed = s.cfg.seed;
    let mut trials = Vec::new();
    for t in 0..s.cfg.rq2_trials {
        for h in Heuristic::ALL {
            let (_, _, evals) = heuristic_trial(s, &model, &ce, n_mwm, h, t)?;
            trials.push(SurvivalTrial {
                seed,
                trial: t,
                group: h.name().into(),
                mutants: evals.len(),
                survived: survival_count(&evals),
            });
        }
        let mut rng = stream(seed, &format!("fom/trial{t}"));
        let foms = s.sample_foms(s.cfg.budget, &mut rng);
        let evals = s.evaluate_foms(&foms)?;
        trials.push(SurvivalTrial {
            seed,
            trial: t,
            group: FOM_GROUP.into(),
            mutants: evals.len(),
            survived: survival_count(&evals),
        });
    }
    let groups: Vec<&str> = Heuristic::ALL
        .iter()
        .map(|h| h.name())
        .chain([FOM_GROUP])
        .collect();
    let summary = groups
        .iter()
        .map(|g| {
            let mine: Vec<&SurvivalTrial> = trials.iter().filter(|t| t.group == *g).collect();
            SurvivalSummary {
                seed,
                group: g.to_string(),
                trials: mine.len(),
                mutants: mean(mine.iter().map(|t| t.mutants as f64)),
                survived: mean(mine.iter().map(|t| t.survived as f64)),
            }
        })
        .collect();
    Ok(Rq3Report {
        seed,
        parameters: s.parameters(),
        summary,
        trials,
    })
}

/// Runs RQ1 and writes `rq1.csv`, `rq1_trials.csv`, `rq1_mutants.csv` and
/// `rq1.json` under the output directory.
pub fn run_rq1(cfg: &ExperimentConfig) -> Result<Rq1Report> {
    let mut s = Session::new(cfg.clone())?;
    let (report, rows) = with_jobs(cfg.jobs, || rq1(&mut s))??;
    write_file(&cfg.out.join("rq1.csv"), &csv_text(&report.buckets))?;
    write_file(&cfg.out.join("rq1_trials.csv"), &csv_text(&report.trials))?;
    write_file(&cfg.out.join("rq1_mutants.csv"), &mutant_rows_csv(&rows))?;
    write_json(&cfg.out.join("rq1.json"), &report)?;
    Ok(report)
}

/// Runs RQ2 and writes `rq2.csv`, `rq2_trials.csv`, `rq2_mutants.csv`,
/// `rq2.json` and one allocation file per heuristic and trial.
pub fn run_rq2(cfg: &ExperimentConfig) -> Result<Rq2Report> {
    let mut s = Session::new(cfg.clone())?;
    let (report, rows) = with_jobs(cfg.jobs, || rq2(&mut s))??;
    write_file(&cfg.out.join("rq2.csv"), &csv_text(&report.summary))?;
    write_file(&cfg.out.join("rq2_trials.csv"), &csv_text(&report.trials))?;
    write_file(&cfg.out.join("rq2_mutants.csv"), &mutant_rows_csv(&rows))?;
    write_json(&cfg.out.join("rq2.json"), &report)?;
    for (t, a) in &report.allocations {
        let name = format!("{}-trial{t}.json", a.heuristic.name().to_lowercase());
        write_json(&cfg.out.join("allocations").join(name), a)?;
    }
    Ok(report)
}

/// Runs RQ3 and writes `rq3.csv`, `rq3_trials.csv` and `rq3.json`.
pub fn run_rq3(cfg: &ExperimentConfig) -> Result<Rq3Report> {
    let mut s = Session::new(cfg.clone())?;
    let report = with_jobs(cfg.jobs, || rq3(&mut s))??;
    write_file(&cfg.out.join("rq3.csv"), &csv_text(&report.summary))?;
    write_file(&cfg.out.join("rq3_trials.csv"), &csv_text(&report.trials))?;
    write_json(&cfg.out.join("rq3.json"), &report)?;
    Ok(report)
}

/// Builds the CPDA model, writes `observations.csv` and `model.json`, and
/// refreshes the cache entry.
pub fn build_and_save_model(cfg: &ExperimentConfig) -> Result<ModelFile> {
    let s = Session::new(cfg.clone())?;
    let (o, file) = with_jobs(cfg.jobs, || s.build_model())?;
    let csv: String = o
        .to_csv()
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 {
                format!("seed,{l}\n")
            } else {
                format!("{},{l}\n", file.seed)
            }
        })
        .collect();
    write_file(&cfg.out.join("observations.csv"), &csv)?;
    write_json(&cfg.out.join("model.json"), &file)?;
    s.save_model(&file)?;
    Ok(file)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LongRow {
    pub experiment: String,
    pub seed: String,
    pub trial: String,
    pub group: String,
    pub metric: String,
    pub value: String,
}

/// Long-format `report.csv` from whichever `rq*_trials.csv` files exist
/// under `out`. Returns the number of rows written.
pub fn write_report(out: &Path) -> Result<usize> {
    let mut rows = Vec::new();
    for (experiment, group_col) in [("rq1", "bucket"), ("rq2", "heuristic"), ("rq3", "group")] {
        let path = out.join(format!("{experiment}_trials.csv"));
        if !path.exists() {
            continue;
        }
        let csv_err = |source| HarnessError::Csv {
            path: path.clone(),
            source,
        };
        let mut r = csv::Reader::from_path(&path).map_err(csv_err)?;
        let headers = r.headers().map_err(csv_err)?.clone();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let field = |name: &str| {
                headers
                    .iter()
                    .position(|h| h == name)
                    .and_then(|i| rec.get(i))
                    .unwrap_or("")
                    .to_string()
            };
            for (h, v) in headers.iter().zip(rec.iter()) {
                if ["seed", "trial", group_col].contains(&h) {
                    continue;
                }
                rows.push(LongRow {
                    experiment: experiment.into(),
                    seed: field("seed"),
                    trial: field("trial"),
                    group: field(group_col),
                    metric: h.into(),
                    value: v.into(),
                });
            }
        }
    }
    write_file(&out.join("report.csv"), &csv_text(&rows))?;
    Ok(rows.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(out: &Path) -> ExperimentConfig {
        ExperimentConfig {
            benchmark: "motivating".into(),
            seed: 7,
            per_element: Some(10),
            budget: 40,
            pairs_per_bucket: 2,
            homs_per_pair: 5,
            rq1_trials: 2,
            rq2_trials: 2,
            out: out.to_path_buf(),
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn streams_are_independent_and_stable() {
        let a: u64 = stream(1, "x").gen();
        assert_eq!(a, stream(1, "x").gen::<u64>());
        assert_ne!(a, stream(1, "y").gen::<u64>());
        assert_ne!(a, stream(2, "x").gen::<u64>());
    }

    #[test]
    fn without_replacement() {
        let mut rng = stream(0, "t");
        let items: Vec<usize> = (0..20).collect();
        let s = sample_without_replacement(&items, 5, &mut rng);
        assert_eq!(s.len(), 5);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(
            sample_without_replacement(&items[..3], 5, &mut rng),
            vec![0, 1, 2]
        );
    }

    #[test]
    fn model_cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg(dir.path());
        c.no_build = true;
        let s = Session::new(c.clone()).unwrap();
        assert!(matches!(s.model(), Err(HarnessError::MissingModel(_))));
        let built = build_and_save_model(&c).unwrap();
        assert_eq!(s.model().unwrap(), built);
        assert!(dir.path().join("observations.csv").exists());
    }

    #[test]
    fn experiments_on_the_motivating_example() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(dir.path());
        let r1 = run_rq1(&c).unwrap();
        assert_eq!(r1.buckets.len(), 11);
        for t in &r1.trials {
            assert!(t.sshom <= t.sampled_pairs * c.homs_per_pair);
        }
        let r2 = run_rq2(&c).unwrap();
        assert!(r2.trials.iter().all(|t| t.homs == c.budget));
        let r3 = run_rq3(&c).unwrap();
        assert_eq!(r3.summary.len(), 5);
        // the same mutants are seen by both experiments
        for t in &r2.trials {
            let s = r3
                .trials
                .iter()
                .find(|x| x.trial == t.trial && x.group == t.heuristic)
                .unwrap();
            assert_eq!(s.survived, t.survived);
        }
        assert!(write_report(dir.path()).unwrap() > 0);
        let report = fs::read_to_string(dir.path().join("report.csv")).unwrap();
        assert!(report.starts_with("experiment,seed,trial,group,metric,value\n"));
        let csv = fs::read_to_string(dir.path().join("rq1.csv")).unwrap();
        assert!(csv.starts_with("seed,bucket,pairs,ce_lo,ce_hi,sampled_pairs,avg_sshom\n"));
        assert!(dir.path().join("allocations/mwm-trial1.json").exists());
    }
}
