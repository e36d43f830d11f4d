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

//! Rule set construction: every source granule paired with every target
//! granule, with confidence `|(LH × RH) ∩ R| / (|LH| · |RH|)`.

use std::cmp::Ordering;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::granulation::{enumerate_granules, validate_threshold, GranulationConfig, GranuleSet};
use crate::mmer::{AttributeSchema, Granule, Mmer, Side};

/// Exact non-negative fraction `num / den`, `den > 0`.
#[derive(Debug, Clone, Copy)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "zero denominator");
        Ratio { num, den }
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }
}

impl PartialEq for Ratio {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ratio {}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Thresholds and enumeration knobs for both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub source: GranulationConfig,
    pub target: GranulationConfig,
}

/// Default cap on item-side intension size.
pub const DEFAULT_MAX_TARGET_ATTRS: usize = 4;

impl TrainConfig {
    /// Unlimited source intensions, target intensions capped at
    /// [`DEFAULT_MAX_TARGET_ATTRS`], presence-only group conditions.
    pub fn new(ms: f64, mt: f64) -> Self {
        TrainConfig {
            source: GranulationConfig::new(ms),
            target: GranulationConfig::new(mt).with_max_attrs(Some(DEFAULT_MAX_TARGET_ATTRS)),
        }
    }

    pub fn ms(&self) -> f64 {
        self.source.threshold
    }

    pub fn mt(&self) -> f64 {
        self.target.threshold
    }

    pub fn with_thresholds(mut self, ms: f64, mt: f64) -> Self {
        self.source.threshold = ms;
        self.target.threshold = mt;
        self
    }
}

/// One rule `i(source) ⇒ i(target)` as a view into a [`RuleStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GranularRule {
    pub source: usize,
    pub target: usize,
    /// `|(LH × RH) ∩ R|`
    pub pairs: u64,
    pub source_size: u64,
    pub target_size: u64,
}

impl GranularRule {
    pub fn ratio(&self) -> Ratio {
        Ratio::new(self.pairs, self.source_size * self.target_size)
    }

    pub fn confidence(&self) -> f64 {
        self.ratio().value()
    }
}

/// Source granules, target granules and the dense matrix of relation pair
/// counts between them; confidences are derived exactly from the counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleStore {
    source_schema: Arc<AttributeSchema>,
    target_schema: Arc<AttributeSchema>,
    sources: GranuleSet,
    targets: GranuleSet,
    pairs: Vec<u64>,
}

impl RuleStore {
    pub(crate) fn from_parts(
        source_schema: Arc<AttributeSchema>,
        target_schema: Arc<AttributeSchema>,
        sources: GranuleSet,
        targets: GranuleSet,
        pairs: Vec<u64>,
    ) -> Result<Self> {
        if pairs.len() != sources.len() * targets.len() {
            return Err(Error::StoreFormat(format!(
                "matrix has {} entries, expected {} x {}",
                pairs.len(),
                sources.len(),
                targets.len()
            )));
        }
        let store = RuleStore {
            source_schema,
            target_schema,
            sources,
            targets,
            pairs,
        };
        for rule in store.rules() {
            if rule.pairs > rule.source_size * rule.target_size {
                return Err(Error::StoreFormat(format!(
                    "rule ({}, {}) has more pairs than its granule product",
                    rule.source, rule.target
                )));
            }
        }
        Ok(store)
    }

    pub fn ms(&self) -> f64 {
        self.sources.threshold()
    }

    pub fn mt(&self) -> f64 {
        self.targets.threshold()
    }

    pub fn source_schema(&self) -> &Arc<AttributeSchema> {
        &self.source_schema
    }

    pub fn target_schema(&self) -> &Arc<AttributeSchema> {
        &self.target_schema
    }

    pub fn sources(&self) -> &GranuleSet {
        &self.sources
    }

    pub fn targets(&self) -> &GranuleSet {
        &self.targets
    }

    /// `(|SG(ms)|, |TG(mt)|)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.sources.len(), self.targets.len())
    }

    pub fn pair_counts(&self) -> &[u64] {
        &self.pairs
    }

    /// Pair-count row for source granule `i`, one entry per target granule.
    pub fn row(&self, i: usize) -> &[u64] {
        let t = self.targets.len();
        &self.pairs[i * t..(i + 1) * t]
    }

    pub fn rule(&self, i: usize, j: usize) -> Result<GranularRule> {
        let (s, t) = self.dims();
        if i >= s {
            return Err(Error::IndexOutOfRange {
                what: "source granule",
                index: i,
                len: s,
            });
        }
        if j >= t {
            return Err(Error::IndexOutOfRange {
                what: "target granule",
                index: j,
                len: t,
            });
        }
        Ok(self.rule_unchecked(i, j))
    }

    #[inline]
    pub(crate) fn rule_unchecked(&self, i: usize, j: usize) -> GranularRule {
        GranularRule {
            source: i,
            target: j,
            pairs: self.pairs[i * self.targets.len() + j],
            source_size: self.sources.granules()[i].size() as u64,
            target_size: self.targets.granules()[j].size() as u64,
        }
    }

    /// All `|SG| · |TG|` rules, row-major.
    pub fn rules(&self) -> impl Iterator<Item = GranularRule> + '_ {
        let (s, t) = self.dims();
        (0..s).flat_map(move |i| (0..t).map(move |j| self.rule_unchecked(i, j)))
    }

    /// The store that training at the higher thresholds `ms`, `mt` would
    /// produce. Both must be at least the store's own thresholds.
    pub fn restrict(&self, ms: f64, mt: f64) -> Result<RuleStore> {
        validate_threshold(ms)?;
        validate_threshold(mt)?;
        if ms < self.ms() {
            return Err(Error::InvalidThreshold(ms));
        }
        if mt < self.mt() {
            return Err(Error::InvalidThreshold(mt));
        }
        let si = self.sources.indices_clearing(ms);
        let ti = self.targets.indices_clearing(mt);
        if si.is_empty() {
            return Err(Error::NoGranules {
                side: Side::Source,
                threshold: ms,
            });
        }
        if ti.is_empty() {
            return Err(Error::NoGranules {
                side: Side::Target,
                threshold: mt,
            });
        }
        let pick = |set: &GranuleSet, idx: &[usize], t: f64| {
            GranuleSet::from_parts(set.side(), t, idx.iter().map(|&i| set.granules()[i].clone()).collect())
        };
        let t = self.targets.len();
        let pairs = si
            .iter()
            .flat_map(|&i| ti.iter().map(move |&j| self.pairs[i * t + j]))
            .collect();
        Ok(RuleStore {
            source_schema: Arc::clone(&self.source_schema),
            target_schema: Arc::clone(&self.target_schema),
            sources: pick(&self.sources, &si, ms),
            targets: pick(&self.targets, &ti, mt),
            pairs,
        })
    }
}

/// Confidence of rule `(i, j)`.
pub fn rule_confidence(store: &RuleStore, i: usize, j: usize) -> Result<f64> {
    store.rule(i, j).map(|r| r.confidence())
}

/// Builds the rule store for `es` at the configured thresholds.
pub fn train(es: &Mmer, cfg: &TrainConfig) -> Result<RuleStore> {
    let sources = enumerate_granules(&es.users, Side::Source, &cfg.source)?;
    if sources.is_empty() {
        return Err(Error::NoGranules {
            side: Side::Source,
            threshold: cfg.ms(),
        });
    }
    let targets = enumerate_granules(&es.items, Side::Target, &cfg.target)?;
    if targets.is_empty() {
        return Err(Error::NoGranules {
            side: Side::Target,
            threshold: cfg.mt(),
        });
    }
    let pairs = pair_matrix(es, sources.granules(), targets.granules());
    RuleStore::from_parts(
        Arc::clone(es.users.schema_arc()),
        Arc::clone(es.items.schema_arc()),
        sources,
        targets,
        pairs,
    )
}

// One target at a time: per-user counts |R(u) ∩ e(target)|, then summed
// over each source extension. Memory stays O(|U| + |SG| · |TG|).
fn pair_matrix(es: &Mmer, sources: &[Granule], targets: &[Granule]) -> Vec<u64> {
    let (s, t) = (sources.len(), targets.len());
    let columns: Vec<Vec<u64>> = targets
        .par_iter()
        .map(|target| {
            let per_user: Vec<u64> = es
                .relation
                .rows()
                .iter()
                .map(|r| r.intersection_count(target.extension()) as u64)
                .collect();
            sources
                .iter()
                .map(|g| g.extension().ones().map(|u| per_user[u]).sum())
                .collect()
        })
        .collect();
    let mut pairs = vec![0u64; s * t];
    for (j, col) in columns.iter().enumerate() {
        for (i, &c) in col.iter().enumerate() {
            pairs[i * t + j] = c;
        }
    }
    pairs
}
