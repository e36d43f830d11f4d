// Copyright 2026 The grarule Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Evaluation scenarios, repeated random splits and parameter sweeps.
//!
//! Accuracy is `N / M`: `M` counts the items a user is recommended (the
//! union of the recommended granules' extensions over the test items) and
//! `N` the recommended items the user actually rated in the test relation.
//! Users who receive no items add nothing to either count and are reported
//! as abstaining.
//!
//! Every repeat draws its randomness from a generator seeded by
//! `(seed, repeat)`, so repeats can run in parallel, and every cell of a
//! sweep sees the same splits as a standalone [`evaluate`] call.

use std::borrow::Cow;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::granulation::validate_threshold;
use crate::mmer::Mmer;
use crate::recommend::{items_matching, recommend_object};
use crate::rules::{train, RuleStore, TrainConfig};

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.6;
pub const DEFAULT_REPEATS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    /// One uniformly random item per user, no training.
    Random,
    /// Train on everything, recommend to the same users and items.
    OnTraining,
    /// Held-out users.
    NewUser,
    /// Held-out items.
    NewItem,
    /// Held-out users and held-out items.
    BothNew,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::Random,
        ScenarioKind::OnTraining,
        ScenarioKind::NewUser,
        ScenarioKind::NewItem,
        ScenarioKind::BothNew,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Random => "random",
            ScenarioKind::OnTraining => "on-training",
            ScenarioKind::NewUser => "new-user",
            ScenarioKind::NewItem => "new-item",
            ScenarioKind::BothNew => "both-new",
        }
    }

    pub fn is_split(self) -> bool {
        matches!(self, ScenarioKind::NewUser | ScenarioKind::NewItem | ScenarioKind::BothNew)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                format!(
                    "unknown scenario `{s}` (expected one of: {})",
                    ScenarioKind::ALL.map(|k| k.as_str()).join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    /// Fraction of the split side(s) used for training.
    pub train_fraction: f64,
    pub repeats: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn new(kind: ScenarioKind) -> Self {
        Scenario {
            kind,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            repeats: DEFAULT_REPEATS,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_repeats(mut self, repeats: usize) -> Self {
        self.repeats = repeats;
        self
    }

    pub fn with_fraction(mut self, fraction: f64) -> Self {
        self.train_fraction = fraction;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidSchema("repeats must be at least 1".into()));
        }
        if self.kind.is_split() && !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::EmptySplit {
                fraction: self.train_fraction,
                side: "train or test",
                total: 0,
            });
        }
        Ok(())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Generator for repeat `repeat` under master seed `seed`.
pub fn repeat_rng(seed: u64, repeat: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(repeat as u64)))
}

/// Shuffles `0..n` and keeps the first `floor(fraction · n)` for training.
/// Both halves come back sorted.
fn partition<R: Rng>(n: usize, fraction: f64, side: &'static str, rng: &mut R) -> Result<(Vec<usize>, Vec<usize>)> {
    let n_train = (fraction * n as f64).floor() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::EmptySplit {
            fraction,
            side,
            total: n,
        });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut test = idx.split_off(n_train);
    idx.sort_unstable();
    test.sort_unstable();
    Ok((idx, test))
}

/// Train/test MMERs for a cold-start scenario.
pub fn split<R: Rng>(es: &Mmer, kind: ScenarioKind, fraction: f64, rng: &mut R) -> Result<(Mmer, Mmer)> {
    let all_users: Vec<usize> = (0..es.users.len()).collect();
    let all_items: Vec<usize> = (0..es.items.len()).collect();
    match kind {
        ScenarioKind::NewUser => {
            let (tr, te) = partition(es.users.len(), fraction, "user", rng)?;
            Ok((es.restrict(&tr, &all_items)?, es.restrict(&te, &all_items)?))
        }
        ScenarioKind::NewItem => {
            let (tr, te) = partition(es.items.len(), fraction, "item", rng)?;
            Ok((es.restrict(&all_users, &tr)?, es.restrict(&all_users, &te)?))
        }
        ScenarioKind::BothNew => {
            let (tru, teu) = partition(es.users.len(), fraction, "user", rng)?;
            let (tri, tei) = partition(es.items.len(), fraction, "item", rng)?;
            Ok((es.restrict(&tru, &tri)?, es.restrict(&teu, &tei)?))
        }
        other => Err(Error::NotASplit(other.to_string())),
    }
}

/// Counts for one repeat.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RepeatOutcome {
    /// Recommended items.
    pub m: u64,
    /// Recommended items the user rated.
    pub n: u64,
    pub test_users: usize,
    /// Test users who were recommended no item.
    pub abstaining_users: usize,
    pub source_granules: usize,
    pub target_granules: usize,
    /// `(M, N)` of the rank-`r` granule alone, for `r = 1..=k`.
    pub per_rank: Vec<(u64, u64)>,
}

impl RepeatOutcome {
    /// `N / M`, or `None` when nothing was recommended.
    pub fn accuracy(&self) -> Option<f64> {
        (self.m > 0).then(|| self.n as f64 / self.m as f64)
    }

    pub fn rank_accuracy(&self, rank: usize) -> Option<f64> {
        let &(m, n) = self.per_rank.get(rank.checked_sub(1)?)?;
        (m > 0).then(|| n as f64 / m as f64)
    }

    /// Items per user who received at least one item.
    pub fn mean_items_per_recommendation(&self) -> Option<f64> {
        let served = self.test_users - self.abstaining_users;
        (served > 0).then(|| self.m as f64 / served as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub kind: ScenarioKind,
    pub ms: f64,
    pub mt: f64,
    pub k: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub repeats: Vec<RepeatOutcome>,
}

/// Mean and sample standard deviation of the defined values.
pub fn mean_std(values: impl IntoIterator<Item = Option<f64>>) -> Option<(f64, f64)> {
    let xs: Vec<f64> = values.into_iter().flatten().collect();
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, std))
}

impl AccuracyReport {
    pub fn mean_accuracy(&self) -> Option<f64> {
        mean_std(self.repeats.iter().map(RepeatOutcome::accuracy)).map(|m| m.0)
    }

    pub fn std_accuracy(&self) -> Option<f64> {
        mean_std(self.repeats.iter().map(RepeatOutcome::accuracy)).map(|m| m.1)
    }

    /// Mean over repeats of the rank-`rank` accuracy.
    pub fn mean_rank_accuracy(&self, rank: usize) -> Option<f64> {
        mean_std(self.repeats.iter().map(|r| r.rank_accuracy(rank))).map(|m| m.0)
    }

    /// Mean over repeats of the Spearman correlation between rank and
    /// per-rank accuracy (ranks with no recommended items are skipped).
    pub fn mean_rank_spearman(&self) -> Option<f64> {
        mean_std(self.repeats.iter().map(|r| {
            let (ranks, accs): (Vec<f64>, Vec<f64>) = (1..=r.per_rank.len())
                .filter_map(|k| r.rank_accuracy(k).map(|a| (k as f64, a)))
                .unzip();
            spearman(&ranks, &accs)
        }))
        .map(|m| m.0)
    }

    pub fn mean_items_per_recommendation(&self) -> Option<f64> {
        mean_std(self.repeats.iter().map(RepeatOutcome::mean_items_per_recommendation)).map(|m| m.0)
    }

    pub fn mean_granules(&self) -> (f64, f64) {
        let n = self.repeats.len().max(1) as f64;
        (
            self.repeats.iter().map(|r| r.source_granules as f64).sum::<f64>() / n,
            self.repeats.iter().map(|r| r.target_granules as f64).sum::<f64>() / n,
        )
    }
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. `None` for fewer
/// than two points or when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

/// Scores a store on a test MMER for every `k` in `ks` at once: the top-`k`
/// list is a prefix of the top-`max k` list.
fn test_extensions(store: &RuleStore, test: &Mmer) -> Vec<BitSet> {
    store
        .targets()
        .granules()
        .iter()
        .map(|g| items_matching(g.intension(), &test.items))
        .collect()
}

// `test_ext[j]` is target j's extension over the test items.
fn score(store: &RuleStore, test: &Mmer, test_ext: &[BitSet], ks: &[usize]) -> Result<Vec<RepeatOutcome>> {
    let kmax = ks.iter().copied().max().unwrap_or(1);
    let (s, t) = store.dims();
    let mut out: Vec<RepeatOutcome> = ks
        .iter()
        .map(|&k| RepeatOutcome {
            test_users: test.users.len(),
            source_granules: s,
            target_granules: t,
            per_rank: vec![(0, 0); k],
            ..RepeatOutcome::default()
        })
        .collect();
    for u in 0..test.users.len() {
        let rec = recommend_object(store, &test.users, u, kmax)?;
        let rated = test.relation.row(u);
        let rank_counts: Vec<(u64, u64)> = rec
            .entries
            .iter()
            .map(|e| {
                let ext = &test_ext[e.target];
                (ext.count_ones() as u64, ext.intersection_count(rated) as u64)
            })
            .collect();
        for (o, &k) in out.iter_mut().zip(ks) {
            let mut items = BitSet::new(test.items.len());
            for e in rec.entries.iter().take(k) {
                items.union_with(&test_ext[e.target]);
            }
            let m = items.count_ones() as u64;
            if m == 0 {
                o.abstaining_users += 1;
                continue;
            }
            o.m += m;
            o.n += items.intersection_count(rated) as u64;
            for (slot, &(rm, rn)) in o.per_rank.iter_mut().zip(&rank_counts) {
                slot.0 += rm;
                slot.1 += rn;
            }
        }
    }
    Ok(out)
}

fn random_repeat(es: &Mmer, seed: u64, repeat: usize) -> RepeatOutcome {
    let mut rng = repeat_rng(seed, repeat);
    let n_items = es.items.len();
    let mut hits = 0u64;
    for u in 0..es.users.len() {
        let j = rng.gen_range(0..n_items);
        hits += es.relation.contains(u, j) as u64;
    }
    let m = es.users.len() as u64;
    RepeatOutcome {
        m,
        n: hits,
        test_users: es.users.len(),
        per_rank: vec![(m, hits)],
        ..RepeatOutcome::default()
    }
}

type Grid = Vec<Vec<Vec<Result<RepeatOutcome, String>>>>;

/// One repeat over a threshold × k grid: `out[ms][mt][k]`.
fn grid_repeat(
    es: &Mmer,
    scenario: &Scenario,
    repeat: usize,
    base: &TrainConfig,
    ms_grid: &[f64],
    mt_grid: &[f64],
    ks: &[usize],
) -> Grid {
    let fill = |e: String| -> Grid { vec![vec![vec![Err(e); ks.len()]; mt_grid.len()]; ms_grid.len()] };
    if scenario.kind == ScenarioKind::Random {
        let r = random_repeat(es, scenario.seed, repeat);
        return vec![vec![vec![Ok(r); ks.len()]; mt_grid.len()]; ms_grid.len()];
    }
    let (train_es, test_es): (Cow<Mmer>, Cow<Mmer>) = if scenario.kind == ScenarioKind::OnTraining {
        (Cow::Borrowed(es), Cow::Borrowed(es))
    } else {
        let mut rng = repeat_rng(scenario.seed, repeat);
        match split(es, scenario.kind, scenario.train_fraction, &mut rng) {
            Ok((a, b)) => (Cow::Owned(a), Cow::Owned(b)),
            Err(e) => return fill(e.to_string()),
        }
    };
    let ms_min = ms_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let mt_min = mt_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let root = train(&train_es, &base.with_thresholds(ms_min, mt_min));
    let root_ext = root.as_ref().map(|r| test_extensions(r, &test_es)).unwrap_or_default();
    ms_grid
        .iter()
        .map(|&ms| {
            mt_grid
                .iter()
                .map(|&mt| {
                    let store = match &root {
                        Ok(r) if ms == r.ms() && mt == r.mt() => Ok(Cow::Borrowed(r)),
                        Ok(r) => r.restrict(ms, mt).map(Cow::Owned),
                        // retrain so the error names the side this cell fails on
                        Err(_) => train(&train_es, &base.with_thresholds(ms, mt)).map(Cow::Owned),
                    };
                    let scored = store.and_then(|s| match &root {
                        Ok(r) => {
                            let ext: Vec<BitSet> =
                                r.targets().indices_clearing(mt).into_iter().map(|j| root_ext[j].clone()).collect();
                            score(&s, &test_es, &ext, ks)
                        }
                        Err(_) => score(&s, &test_es, &test_extensions(&s, &test_es), ks),
                    });
                    match scored {
                        Ok(v) => v.into_iter().map(Ok).collect(),
                        Err(e) => vec![Err(e.to_string()); ks.len()],
                    }
                })
                .collect()
        })
        .collect()
}

fn validate_grid(ms_grid: &[f64], mt_grid: &[f64], ks: &[usize]) -> Result<()> {
    if ms_grid.is_empty() || mt_grid.is_empty() || ks.is_empty() {
        return Err(Error::InvalidSchema("sweep grids must be non-empty".into()));
    }
    for &t in ms_grid.iter().chain(mt_grid) {
        validate_threshold(t)?;
    }
    if ks.contains(&0) {
        return Err(Error::InvalidK);
    }
    Ok(())
}

/// One cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub ms: f64,
    pub mt: f64,
    pub k: usize,
    pub result: std::result::Result<AccuracyReport, String>,
}

/// Evaluates every `(ms, mt, k)` combination. Cells that fail (for example
/// because a threshold admits no granules) carry the error and the sweep
/// continues.
pub fn sweep(
    es: &Mmer,
    scenario: &Scenario,
    base: &TrainConfig,
    ms_grid: &[f64],
    mt_grid: &[f64],
    k_grid: &[usize],
) -> Result<Vec<SweepCell>> {
    scenario.validate()?;
    validate_grid(ms_grid, mt_grid, k_grid)?;
    let per_repeat: Vec<Grid> = if scenario.kind == ScenarioKind::OnTraining {
        // no sampling: every repeat is identical
        vec![grid_repeat(es, scenario, 0, base, ms_grid, mt_grid, k_grid); scenario.repeats]
    } else {
        (0..scenario.repeats)
            .into_par_iter()
            .map(|r| grid_repeat(es, scenario, r, base, ms_grid, mt_grid, k_grid))
            .collect()
    };
    let mut cells = Vec::with_capacity(ms_grid.len() * mt_grid.len() * k_grid.len());
    for (a, &ms) in ms_grid.iter().enumerate() {
        for (b, &mt) in mt_grid.iter().enumerate() {
            for (c, &k) in k_grid.iter().enumerate() {
                let outcomes: std::result::Result<Vec<RepeatOutcome>, String> =
                    per_repeat.iter().map(|g| g[a][b][c].clone()).collect();
                cells.push(SweepCell {
                    ms,
                    mt,
                    k,
                    result: outcomes.map(|repeats| AccuracyReport {
                        kind: scenario.kind,
                        ms,
                        mt,
                        k,
                        train_fraction: scenario.train_fraction,
                        seed: scenario.seed,
                        repeats,
                    }),
                });
            }
        }
    }
    Ok(cells)
}

/// Runs all repeats of one scenario at one parameter setting.
pub fn evaluate(es: &Mmer, scenario: &Scenario, cfg: &TrainConfig, k: usize) -> Result<AccuracyReport> {
    scenario.validate()?;
    validate_grid(&[cfg.ms()], &[cfg.mt()], &[k])?;
    let n = if scenario.kind == ScenarioKind::OnTraining { 1 } else { scenario.repeats };
    let mut repeats = (0..n)
        .into_par_iter()
        .map(|r| {
            if scenario.kind == ScenarioKind::Random {
                return Ok(random_repeat(es, scenario.seed, r));
            }
            let (train_es, test_es): (Cow<Mmer>, Cow<Mmer>) = if scenario.kind == ScenarioKind::OnTraining {
                (Cow::Borrowed(es), Cow::Borrowed(es))
            } else {
                let (a, b) = split(es, scenario.kind, scenario.train_fraction, &mut repeat_rng(scenario.seed, r))?;
                (Cow::Owned(a), Cow::Owned(b))
            };
            let store = train(&train_es, cfg)?;
            let ext = test_extensions(&store, &test_es);
            Ok(score(&store, &test_es, &ext, &[k])?.remove(0))
        })
        .collect::<Result<Vec<_>>>()?;
    if n < scenario.repeats {
        repeats = vec![repeats.remove(0); scenario.repeats];
    }
    Ok(AccuracyReport {
        kind: scenario.kind,
        ms: cfg.ms(),
        mt: cfg.mt(),
        k,
        train_fraction: scenario.train_fraction,
        seed: scenario.seed,
        repeats,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub const REPORT_COLUMNS: [&str; 11] = [
    "scenario",
    "ms",
    "mt",
    "k",
    "repeat",
    "M",
    "N",
    "accuracy",
    "abstaining_users",
    "mean_items_per_recommendation",
    "error",
];

/// Per-repeat rows followed by `mean` and `std` rows for every cell. An
/// empty accuracy means no item was recommended.
pub fn write_report_csv<W: Write>(out: W, kind: ScenarioKind, cells: &[SweepCell]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_COLUMNS)?;
    for cell in cells {
        let head = [kind.to_string(), cell.ms.to_string(), cell.mt.to_string(), cell.k.to_string()];
        let report = match &cell.result {
            Ok(r) => r,
            Err(e) => {
                let mut rec = head.to_vec();
                rec.extend(["mean", "", "", "", "", ""].map(String::from));
                rec.push(e.clone());
                w.write_record(&rec)?;
                continue;
            }
        };
        for (i, r) in report.repeats.iter().enumerate() {
            let mut rec = head.to_vec();
            rec.extend([
                i.to_string(),
                r.m.to_string(),
                r.n.to_string(),
                opt(r.accuracy()),
                r.abstaining_users.to_string(),
                opt(r.mean_items_per_recommendation()),
                String::new(),
            ]);
            w.write_record(&rec)?;
        }
        let col = |f: &dyn Fn(&RepeatOutcome) -> Option<f64>| mean_std(report.repeats.iter().map(f));
        let stats = [
            col(&|r| Some(r.m as f64)),
            col(&|r| Some(r.n as f64)),
            col(&|r| r.accuracy()),
            col(&|r| Some(r.abstaining_users as f64)),
            col(&|r| r.mean_items_per_recommendation()),
        ];
        for (label, pick) in [("mean", 0usize), ("std", 1)] {
            let mut rec = head.to_vec();
            rec.push(label.to_string());
            rec.extend(stats.iter().map(|s| opt(s.map(|p| if pick == 0 { p.0 } else { p.1 }))));
            rec.push(String::new());
            w.write_record(&rec)?;
        }
    }
    w.flush()
}

/// `scenario,ms,mt,k,rank,M,N,accuracy,mean_accuracy`: counts pooled over
/// repeats, and the mean of the per-repeat rank accuracies.
pub fn write_per_rank_csv<W: Write>(out: W, kind: ScenarioKind, cells: &[SweepCell]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario", "ms", "mt", "k", "rank", "M", "N", "accuracy", "mean_accuracy"])?;
    for cell in cells {
        let Ok(report) = &cell.result else { continue };
        for rank in 1..=cell.k {
            let (m, n) = report
                .repeats
                .iter()
                .filter_map(|r| r.per_rank.get(rank - 1))
                .fold((0u64, 0u64), |a, b| (a.0 + b.0, a.1 + b.1));
            w.write_record([
                kind.to_string(),
                cell.ms.to_string(),
                cell.mt.to_string(),
                cell.k.to_string(),
                rank.to_string(),
                m.to_string(),
                n.to_string(),
                opt((m > 0).then(|| n as f64 / m as f64)),
                opt(report.mean_rank_accuracy(rank)),
            ])?;
        }
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmer::{Attribute, AttributeSchema, BinaryRelation, InformationSystem};
    use std::sync::Arc;

    fn synthetic(n_users: usize, n_items: usize, rated: impl Fn(usize, usize) -> bool) -> Mmer {
        let us = Arc::new(
            AttributeSchema::new(vec![Attribute::new("g", ["a", "b"]), Attribute::new("h", ["x", "y", "z"])]).unwrap(),
        );
        let is = Arc::new(AttributeSchema::new(vec![Attribute::new("c", ["p", "q"]), Attribute::flag("f", "grp")]).unwrap());
        let users = InformationSystem::new(
            us,
            (0..n_users).map(|i| format!("u{i}")).collect(),
            (0..n_users).map(|i| vec![(i % 2) as u32, (i % 3) as u32]).collect(),
        )
        .unwrap();
        let items = InformationSystem::new(
            is,
            (0..n_items).map(|i| format!("i{i}")).collect(),
            (0..n_items).map(|i| vec![(i % 2) as u32, ((i / 2) % 2) as u32]).collect(),
        )
        .unwrap();
        let rel = BinaryRelation::from_pairs(
            n_users,
            n_items,
            (0..n_users).flat_map(|u| (0..n_items).map(move |i| (u, i))).filter(|&(u, i)| rated(u, i)),
        )
        .unwrap();
        Mmer::new(users, items, rel).unwrap()
    }

    #[test]
    fn split_sizes_floor_convention() {
        let es = synthetic(943, 10, |_, _| false);
        let (tr, te) = split(&es, ScenarioKind::NewUser, 0.6, &mut repeat_rng(1, 0)).unwrap();
        assert_eq!((tr.users.len(), te.users.len()), (565, 378));
        assert_eq!((tr.items.len(), te.items.len()), (10, 10));
    }

    #[test]
    fn both_new_is_disjoint_and_new_user_complete() {
        let es = synthetic(20, 15, |u, i| (u * 7 + i * 3) % 5 == 0);
        let (tr, te) = split(&es, ScenarioKind::BothNew, 0.6, &mut repeat_rng(3, 2)).unwrap();
        for id in tr.users.ids() {
            assert!(!te.users.ids().contains(id));
        }
        for id in tr.items.ids() {
            assert!(!te.items.ids().contains(id));
        }

        let (tr, te) = split(&es, ScenarioKind::NewUser, 0.6, &mut repeat_rng(3, 2)).unwrap();
        let mut pairs: Vec<(String, String)> = Vec::new();
        for part in [&tr, &te] {
            for (u, i) in part.relation.pairs() {
                pairs.push((part.users.id(u).to_string(), part.items.id(i).to_string()));
            }
        }
        pairs.sort();
        let mut orig: Vec<(String, String)> =
            es.relation.pairs().map(|(u, i)| (es.users.id(u).to_string(), es.items.id(i).to_string())).collect();
        orig.sort();
        assert_eq!(pairs, orig);
    }

    #[test]
    fn split_rejects_empty_side() {
        let es = synthetic(3, 3, |_, _| false);
        assert!(matches!(
            split(&es, ScenarioKind::NewUser, 0.2, &mut repeat_rng(0, 0)),
            Err(Error::EmptySplit { .. })
        ));
        assert!(matches!(
            split(&es, ScenarioKind::Random, 0.5, &mut repeat_rng(0, 0)),
            Err(Error::NotASplit(_))
        ));
    }

    #[test]
    fn on_training_complete_relation_is_perfect() {
        let es = synthetic(12, 8, |_, _| true);
        let rep = evaluate(&es, &Scenario::new(ScenarioKind::OnTraining), &TrainConfig::new(0.2, 0.2), 2).unwrap();
        assert_eq!(rep.mean_accuracy(), Some(1.0));
        assert_eq!(rep.repeats.len(), DEFAULT_REPEATS);
    }

    #[test]
    fn empty_relation_abstains_everyone() {
        let es = synthetic(12, 8, |_, _| false);
        let rep = evaluate(&es, &Scenario::new(ScenarioKind::OnTraining).with_repeats(1), &TrainConfig::new(0.2, 0.2), 1)
            .unwrap();
        let r = &rep.repeats[0];
        assert_eq!((r.m, r.n, r.abstaining_users), (0, 0, 12));
        assert_eq!(r.accuracy(), None);
        assert_eq!(rep.mean_accuracy(), None);
    }

    /// 8 users × 8 items. Users: g = u % 2 (a/b), h = u % 3 (x/y/z).
    /// Items: c = i % 2 (p/q), flag f = (i / 2) % 2. User u rated item i iff
    /// (u + i) % 3 == 0 or u == i.
    ///
    /// Seed 11, repeat 0 trains on users {0, 3, 4, 6} and tests on
    /// {1, 2, 5, 7} (floor(0.6 · 8) = 4). At ms = mt = 0.5:
    ///   sources: g=a {0,4,6}, h=x {0,3,6}, g=a&h=x {0,6}
    ///   targets: c=p {0,2,4,6}, c=q {1,3,5,7}, f=1 {2,3,6,7}
    ///   (f=0 is excluded: presence-only flag)
    /// Training rows: u0 {0,3,6}, u3 {0,3,6}, u4 {2,4,5}, u6 {0,3,6}.
    ///   g=a:     c=p 6/12, c=q 3/12, f=1 5/12
    ///   h=x:     c=p 6/12, c=q 3/12, f=1 6/12
    ///   g=a&h=x: c=p 4/8,  c=q 2/8,  f=1 4/8
    /// Test users 1 (b,y), 5 (b,z), 7 (b,y) match nothing and abstain.
    /// User 2 (a,z) matches g=a only: rank 1 c=p (6/12), rank 2 f=1 (5/12).
    /// User 2 rated {1,2,4,7}.
    ///   k = 1: items {0,2,4,6}, hits {2,4}         → M = 4, N = 2
    ///   k = 2: items {0,2,3,4,6,7}, hits {2,4,7}   → M = 6, N = 3
    ///   rank 2 alone: items {2,3,6,7}, hits {2,7}  → (4, 2)
    #[test]
    fn new_user_golden_trace() {
        let es = synthetic(8, 8, |u, i| (u + i) % 3 == 0 || u == i);
        let (tr, te) = split(&es, ScenarioKind::NewUser, 0.6, &mut repeat_rng(11, 0)).unwrap();
        assert_eq!(tr.users.ids(), ["u0", "u3", "u4", "u6"]);
        assert_eq!(te.users.ids(), ["u1", "u2", "u5", "u7"]);
        let scenario = Scenario::new(ScenarioKind::NewUser).with_seed(11).with_repeats(1);
        let cfg = TrainConfig::new(0.5, 0.5);
        let r = evaluate(&es, &scenario, &cfg, 1).unwrap().repeats.remove(0);
        assert_eq!((r.source_granules, r.target_granules), (3, 3));
        assert_eq!((r.m, r.n, r.abstaining_users), (4, 2, 3));
        let r = evaluate(&es, &scenario, &cfg, 2).unwrap().repeats.remove(0);
        assert_eq!((r.m, r.n, r.abstaining_users), (6, 3, 3));
        assert_eq!(r.per_rank, [(4, 2), (4, 2)]);
    }

    #[test]
    fn random_matches_density_in_expectation() {
        let es = synthetic(400, 50, |u, i| (u * 31 + i * 17) % 10 == 0);
        let rep = evaluate(&es, &Scenario::new(ScenarioKind::Random).with_seed(5), &TrainConfig::new(0.1, 0.1), 1).unwrap();
        assert!((rep.mean_accuracy().unwrap() - es.relation.density()).abs() < 0.02);
        let again = evaluate(&es, &Scenario::new(ScenarioKind::Random).with_seed(5), &TrainConfig::new(0.1, 0.1), 1).unwrap();
        assert_eq!(rep, again);
    }

    #[test]
    fn sweep_cell_equals_evaluate() {
        let es = synthetic(30, 20, |u, i| (u * 5 + i * 7) % 4 == 0 || (u + i) % 7 == 1);
        for kind in [ScenarioKind::NewUser, ScenarioKind::NewItem, ScenarioKind::BothNew, ScenarioKind::OnTraining] {
            let scenario = Scenario::new(kind).with_seed(9).with_repeats(4);
            let base = TrainConfig::new(0.1, 0.1);
            let cells = sweep(&es, &scenario, &base, &[0.1, 0.3], &[0.1, 0.25], &[1, 2]).unwrap();
            assert_eq!(cells.len(), 8);
            for cell in &cells {
                let direct = evaluate(&es, &scenario, &base.with_thresholds(cell.ms, cell.mt), cell.k);
                match (&cell.result, direct) {
                    (Ok(a), Ok(b)) => assert_eq!(a, &b, "{kind} {} {} {}", cell.ms, cell.mt, cell.k),
                    (Err(_), Err(_)) => {}
                    (a, b) => panic!("{kind}: {a:?} vs {b:?}"),
                }
            }
            let single = sweep(&es, &scenario, &base, &[0.3], &[0.25], &[2]).unwrap();
            assert_eq!(
                single[0].result.as_ref().unwrap(),
                &evaluate(&es, &scenario, &base.with_thresholds(0.3, 0.25), 2).unwrap()
            );
        }
    }

    #[test]
    fn sweep_records_cell_errors() {
        let es = synthetic(30, 20, |u, i| (u + i) % 3 == 0);
        let scenario = Scenario::new(ScenarioKind::NewUser).with_repeats(2);
        let cells = sweep(&es, &scenario, &TrainConfig::new(0.1, 0.1), &[0.1, 0.9], &[0.1], &[1]).unwrap();
        assert!(cells[0].result.is_ok());
        assert!(cells[1].result.as_ref().unwrap_err().contains("no source granules"));
        let mut buf = Vec::new();
        write_report_csv(&mut buf, scenario.kind, &cells).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), REPORT_COLUMNS.join(","));
        assert!(text.lines().last().unwrap().contains("no source granules"));
        assert!(sweep(&es, &scenario, &TrainConfig::new(0.1, 0.1), &[], &[0.1], &[1]).is_err());
    }

    #[test]
    fn per_rank_bookkeeping() {
        let es = synthetic(40, 24, |u, i| (u * 3 + i) % 5 < 2);
        let scenario = Scenario::new(ScenarioKind::NewUser).with_repeats(3);
        let cells = sweep(&es, &scenario, &TrainConfig::new(0.1, 0.1), &[0.1], &[0.1], &[1, 3]).unwrap();
        let k1 = cells[0].result.as_ref().unwrap();
        let k3 = cells[1].result.as_ref().unwrap();
        for (a, b) in k1.repeats.iter().zip(&k3.repeats) {
            // rank-1 bookkeeping only differs by users who abstain at k = 1
            // but not at k = 3; the rank-1 granule is the same
            assert!(a.per_rank[0].0 <= b.per_rank[0].0);
            assert_eq!(a.accuracy(), a.rank_accuracy(1));
            assert_eq!(b.per_rank.len(), 3);
        }
    }

    #[test]
    fn spearman_known_values() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[0.3, 0.2, 0.1]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[1.0, 4.0, 9.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0], &[5.0, 5.0]), None);
        // ties: y ranks [1.5, 1.5, 3]
        let r = spearman(&[1.0, 2.0, 3.0], &[1.0, 1.0, 2.0]).unwrap();
        assert!((r - 0.8660254037844386).abs() < 1e-12);
    }

    #[test]
    fn training_never_sees_test_users() {
        // test-side users get a sentinel occupation and a sentinel rating row
        let base = synthetic(30, 12, |u, i| (u + 2 * i) % 4 == 0);
        let (_, te) = split(&base, ScenarioKind::NewUser, 0.6, &mut repeat_rng(4, 0)).unwrap();
        let test_rows: Vec<usize> =
            te.users.ids().iter().map(|id| base.users.ids().iter().position(|x| x == id).unwrap()).collect();
        let us = Arc::new(
            AttributeSchema::new(vec![
                Attribute::new("g", ["a", "b"]),
                Attribute::new("h", ["x", "y", "z", "SENTINEL"]),
            ])
            .unwrap(),
        );
        let users = InformationSystem::new(
            us,
            base.users.ids().to_vec(),
            (0..30)
                .map(|u| vec![base.users.value(u, 0), if test_rows.contains(&u) { 3 } else { base.users.value(u, 1) }])
                .collect(),
        )
        .unwrap();
        let mut rel = BinaryRelation::new(30, 12);
        for (u, i) in base.relation.pairs() {
            if !test_rows.contains(&u) {
                rel.insert(u, i).unwrap();
            }
        }
        for &u in &test_rows {
            for i in 0..12 {
                rel.insert(u, i).unwrap();
            }
        }
        let planted = Mmer::new(users, base.items.clone(), rel).unwrap();
        let (tr, _) = split(&planted, ScenarioKind::NewUser, 0.6, &mut repeat_rng(4, 0)).unwrap();
        let store = train(&tr, &TrainConfig::new(0.05, 0.05)).unwrap();
        assert!(store.sources().granules().iter().all(|g| g.intension().value_of(1) != Some(3)));
        let (clean_tr, _) = split(&base, ScenarioKind::NewUser, 0.6, &mut repeat_rng(4, 0)).unwrap();
        let clean = train(&clean_tr, &TrainConfig::new(0.05, 0.05)).unwrap();
        assert_eq!(store.pair_counts(), clean.pair_counts());
        assert_eq!(store.dims(), clean.dims());
    }

    #[test]
    fn seed_determinism() {
        let es = synthetic(40, 24, |u, i| (u * 3 + i) % 5 < 2);
        let s = Scenario::new(ScenarioKind::BothNew).with_seed(77).with_repeats(5);
        let cfg = TrainConfig::new(0.1, 0.1);
        assert_eq!(evaluate(&es, &s, &cfg, 2).unwrap(), evaluate(&es, &s, &cfg, 2).unwrap());
        let other = evaluate(&es, &s.with_seed(78), &cfg, 2).unwrap();
        assert_ne!(evaluate(&es, &s, &cfg, 2).unwrap().repeats, other.repeats);
    }
}
