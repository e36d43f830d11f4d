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

//! Enumeration of all granules whose coverage clears a threshold.
//!
//! Candidates are generated level by level over the number of constrained
//! attributes. A level-`l` granule is only extended with attributes after
//! its last one, so each intension is produced once, and only granules that
//! already clear the threshold are extended: adding conditions can only
//! shrink an extension.

use rayon::prelude::*;

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::mmer::{Granule, InformationSystem, Intension, Side};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GranulationConfig {
    /// Minimum coverage `|e(g)| / |U|`, in `(0, 1]`.
    pub threshold: f64,
    /// Upper bound on the number of attributes in an intension.
    pub max_attrs: Option<usize>,
    /// Also emit `⟨flag: 0⟩` conditions on multi-valued group attributes.
    pub allow_absence: bool,
}

impl GranulationConfig {
    pub fn new(threshold: f64) -> Self {
        GranulationConfig {
            threshold,
            max_attrs: None,
            allow_absence: false,
        }
    }

    pub fn with_max_attrs(mut self, max_attrs: Option<usize>) -> Self {
        self.max_attrs = max_attrs;
        self
    }

    pub fn with_allow_absence(mut self, allow: bool) -> Self {
        self.allow_absence = allow;
        self
    }
}

pub fn validate_threshold(threshold: f64) -> Result<()> {
    // NaN fails both comparisons
    if threshold > 0.0 && threshold <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidThreshold(threshold))
    }
}

/// `count / n >= threshold`, evaluated the same way everywhere.
#[inline]
pub fn clears(count: usize, n: usize, threshold: f64) -> bool {
    count as f64 / n as f64 >= threshold
}

/// All granules on one side that clear a coverage threshold, in canonical
/// order (fewer attributes first, then lexicographic).
#[derive(Debug, Clone, PartialEq)]
pub struct GranuleSet {
    side: Side,
    threshold: f64,
    granules: Vec<Granule>,
}

impl GranuleSet {
    pub(crate) fn from_parts(side: Side, threshold: f64, granules: Vec<Granule>) -> Self {
        GranuleSet {
            side,
            threshold,
            granules,
        }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn granules(&self) -> &[Granule] {
        &self.granules
    }

    pub fn len(&self) -> usize {
        self.granules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.granules.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Granule> {
        self.granules.get(index)
    }

    /// Indices of the granules that also clear `threshold`.
    pub(crate) fn indices_clearing(&self, threshold: f64) -> Vec<usize> {
        self.granules
            .iter()
            .enumerate()
            .filter(|(_, g)| clears(g.size(), g.extension().len(), threshold))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Values an attribute may take in a granule condition.
fn admissible_values(is: &InformationSystem, attr: usize, allow_absence: bool) -> Vec<u32> {
    let a = &is.schema().attrs()[attr];
    match (&a.group, allow_absence) {
        (Some(_), false) => a.value_index("1").into_iter().collect(),
        _ => (0..a.domain.len() as u32).collect(),
    }
}

fn value_extensions(is: &InformationSystem) -> Vec<Vec<BitSet>> {
    let schema = is.schema();
    let mut out: Vec<Vec<BitSet>> = schema
        .attrs()
        .iter()
        .map(|a| vec![BitSet::new(is.len()); a.domain.len()])
        .collect();
    for row in 0..is.len() {
        for (attr, &v) in is.row(row).iter().enumerate() {
            out[attr][v as usize].insert(row);
        }
    }
    out
}

struct Candidate {
    attrs: Vec<usize>,
    values: Vec<u32>,
    extension: BitSet,
}

pub fn enumerate_granules(is: &InformationSystem, side: Side, cfg: &GranulationConfig) -> Result<GranuleSet> {
    validate_threshold(cfg.threshold)?;
    let n = is.len();
    let m = is.schema().len();
    let fp = is.schema().fingerprint();
    let max_attrs = cfg.max_attrs.unwrap_or(m).min(m);
    let columns = value_extensions(is);
    let admissible: Vec<Vec<u32>> = (0..m)
        .map(|a| admissible_values(is, a, cfg.allow_absence))
        .collect();

    let mut level: Vec<Candidate> = Vec::new();
    if max_attrs >= 1 {
        for attr in 0..m {
            for &v in &admissible[attr] {
                let ext = &columns[attr][v as usize];
                if clears(ext.count_ones(), n, cfg.threshold) {
                    level.push(Candidate {
                        attrs: vec![attr],
                        values: vec![v],
                        extension: ext.clone(),
                    });
                }
            }
        }
    }

    let mut all: Vec<Candidate> = Vec::new();
    let mut size = 1;
    while !level.is_empty() {
        let next: Vec<Candidate> = if size < max_attrs {
            level
                .par_iter()
                .flat_map_iter(|parent| {
                    let last = *parent.attrs.last().expect("non-empty intension");
                    let columns = &columns;
                    let admissible = &admissible;
                    (last + 1..m).flat_map(move |attr| {
                        admissible[attr].iter().filter_map(move |&v| {
                            let col = &columns[attr][v as usize];
                            if !clears(parent.extension.intersection_count(col), n, cfg.threshold) {
                                return None;
                            }
                            let mut attrs = parent.attrs.clone();
                            attrs.push(attr);
                            let mut values = parent.values.clone();
                            values.push(v);
                            Some(Candidate {
                                attrs,
                                values,
                                extension: parent.extension.intersection(col),
                            })
                        })
                    })
                })
                .collect()
        } else {
            Vec::new()
        };
        all.append(&mut level);
        level = next;
        size += 1;
    }

    let mut granules: Vec<Granule> = all
        .into_iter()
        .map(|c| Granule::from_parts(side, Intension::from_sorted(c.attrs, c.values), c.extension, fp))
        .collect();
    granules.sort_by(|a, b| a.intension().cmp(b.intension()));
    Ok(GranuleSet::from_parts(side, cfg.threshold, granules))
}

/// Whether object `row` of `is` satisfies every condition of `g`.
pub fn matches(g: &Granule, is: &InformationSystem, row: usize) -> Result<bool> {
    if g.schema_fingerprint() != is.schema().fingerprint() {
        return Err(Error::SchemaMismatch);
    }
    if row >= is.len() {
        return Err(Error::IndexOutOfRange {
            what: "object",
            index: row,
            len: is.len(),
        });
    }
    Ok(g.intension().matches_row(is.row(row)))
}
