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

//! Top-k recommendation from a trained [`RuleStore`].
//!
//! For one user, every matching source granule contributes one candidate
//! rule per target granule. Each target keeps the strongest confidence it
//! receives from any matching source, and the `k` strongest targets with
//! positive confidence are returned. Ties go to the target that comes first
//! in canonical granule order.

use std::io::Write;

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::mmer::{AttributeSchema, InformationSystem, Intension, Profile};
use crate::rules::{Ratio, RuleStore};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecEntry {
    /// Index into the store's target granules.
    pub target: usize,
    pub intension: Intension,
    /// Best confidence over all matching source granules.
    pub confidence: Ratio,
    /// Source granule that produced `confidence` (the first one in canonical
    /// order when several tie).
    pub source: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recommendation {
    pub user: usize,
    pub entries: Vec<RecEntry>,
    target_schema_fp: u64,
}

impl Recommendation {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// The first `k` entries, which are the top-`k` recommendation.
    pub fn truncated(&self, k: usize) -> Recommendation {
        Recommendation {
            user: self.user,
            entries: self.entries.iter().take(k).cloned().collect(),
            target_schema_fp: self.target_schema_fp,
        }
    }
}

/// Bounded buffer of the best `k` (confidence, target) pairs, best first.
struct TopK {
    k: usize,
    buf: Vec<(Ratio, usize, usize)>,
}

impl TopK {
    fn new(k: usize) -> Self {
        TopK {
            k,
            buf: Vec::with_capacity(k + 1),
        }
    }

    // (confidence desc, target asc)
    fn better(a: &(Ratio, usize, usize), b: &(Ratio, usize, usize)) -> bool {
        a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
    }

    fn offer(&mut self, cand: (Ratio, usize, usize)) {
        if self.buf.len() == self.k && !Self::better(&cand, self.buf.last().expect("k >= 1")) {
            return;
        }
        let pos = self.buf.iter().position(|e| Self::better(&cand, e)).unwrap_or(self.buf.len());
        self.buf.insert(pos, cand);
        self.buf.truncate(self.k);
    }
}

/// Top-`k` target granules for `profile`.
pub fn recommend(store: &RuleStore, profile: &Profile, user: usize, k: usize) -> Result<Recommendation> {
    if k == 0 {
        return Err(Error::InvalidK);
    }
    if profile.schema_fingerprint() != store.source_schema().fingerprint() {
        return Err(Error::SchemaMismatch);
    }
    let (_, t) = store.dims();
    let pairs = store.pair_counts();
    // Per target j: best pair count and its source's size. For a fixed
    // target the denominator's |e(t)| factor cancels, so comparing
    // p / |e(s)| is enough: p·|e(s')| > p'·|e(s)|.
    let mut best_p = vec![0u64; t];
    let mut best_size = vec![1u64; t];
    let mut best_src = vec![usize::MAX; t];
    for (i, g) in store.sources().granules().iter().enumerate() {
        if !g.intension().matches_profile(profile) {
            continue;
        }
        let size = g.size() as u64;
        let row = &pairs[i * t..(i + 1) * t];
        for j in 0..t {
            let p = row[j];
            // zero-count rules never win: best starts at 0 / 1
            if p as u128 * best_size[j] as u128 > best_p[j] as u128 * size as u128 {
                best_p[j] = p;
                best_size[j] = size;
                best_src[j] = i;
            }
        }
    }
    let targets = store.targets().granules();
    let mut top = TopK::new(k);
    for j in 0..t {
        if best_src[j] != usize::MAX {
            let den = best_size[j] * targets[j].size() as u64;
            top.offer((Ratio::new(best_p[j], den), j, best_src[j]));
        }
    }
    Ok(Recommendation {
        user,
        entries: top
            .buf
            .into_iter()
            .map(|(confidence, target, source)| RecEntry {
                target,
                intension: targets[target].intension().clone(),
                confidence,
                source,
            })
            .collect(),
        target_schema_fp: store.target_schema().fingerprint(),
    })
}

/// Recommendation for row `row` of `users`.
pub fn recommend_object(store: &RuleStore, users: &InformationSystem, row: usize, k: usize) -> Result<Recommendation> {
    if row >= users.len() {
        return Err(Error::IndexOutOfRange {
            what: "user",
            index: row,
            len: users.len(),
        });
    }
    recommend(store, &users.profile(row), row, k)
}

/// Items of `item_universe` matched by any recommended target granule.
pub fn recommended_items(rec: &Recommendation, item_universe: &InformationSystem) -> Result<BitSet> {
    if rec.target_schema_fp != item_universe.schema().fingerprint() {
        return Err(Error::SchemaMismatch);
    }
    let mut out = BitSet::new(item_universe.len());
    for row in 0..item_universe.len() {
        let values = item_universe.row(row);
        if rec.entries.iter().any(|e| e.intension.matches_row(values)) {
            out.insert(row);
        }
    }
    Ok(out)
}

/// Items of `item_universe` matched by one intension.
pub fn items_matching(intension: &Intension, item_universe: &InformationSystem) -> BitSet {
    BitSet::from_indices(
        item_universe.len(),
        (0..item_universe.len()).filter(|&r| intension.matches_row(item_universe.row(r))),
    )
}

/// Writes `user,rank,target,confidence` rows. `user_ids[rec.user]` names
/// the user.
pub fn write_recommendations_csv<W: Write>(
    out: W,
    recs: &[Recommendation],
    user_ids: &[String],
    target_schema: &AttributeSchema,
) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user", "rank", "target", "confidence"])?;
    for rec in recs {
        let uid = user_ids.get(rec.user).map(String::as_str).unwrap_or("?");
        for (rank, e) in rec.entries.iter().enumerate() {
            w.write_record([
                uid.to_string(),
                (rank + 1).to_string(),
                e.intension.render(target_schema),
                e.confidence.value().to_string(),
            ])?;
        }
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::granulation::GranuleSet;
    use crate::mmer::{Attribute, BinaryRelation, Granule, Mmer, Side};
    use crate::rules::{train, TrainConfig};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn schema(attrs: Vec<Attribute>) -> Arc<AttributeSchema> {
        Arc::new(AttributeSchema::new(attrs).unwrap())
    }

    /// Two rules sharing the target "adventure movies of the 1990s":
    /// young women at 35/100 and young students at 38/100.
    fn duplicate_target_store() -> (RuleStore, Profile) {
        let users = schema(vec![
            Attribute::new("age", ["young", "old"]),
            Attribute::new("gender", ["F", "M"]),
            Attribute::new("occupation", ["student", "other"]),
        ]);
        let items = schema(vec![
            Attribute::new("decade", ["1990s", "older"]),
            Attribute::flag("Adventure", "genre"),
        ]);
        // 5 young female students, 5 young women, 5 young male students, 5 old men
        let rows: Vec<Vec<u32>> = [[0, 0, 0], [0, 0, 1], [0, 1, 0], [1, 1, 1]]
            .iter()
            .flat_map(|r| std::iter::repeat_n(r.to_vec(), 5))
            .collect();
        let uis = InformationSystem::new(users.clone(), (0..20).map(|i| i.to_string()).collect(), rows).unwrap();
        let iis = InformationSystem::new(items.clone(), (0..10).map(|i| i.to_string()).collect(), vec![vec![0, 1]; 10])
            .unwrap();
        let young_women = Granule::new(&uis, Side::Source, Intension::new([(0, 0), (1, 0)]).unwrap()).unwrap();
        let young_students = Granule::new(&uis, Side::Source, Intension::new([(0, 0), (2, 0)]).unwrap()).unwrap();
        let adv90 = Granule::new(&iis, Side::Target, Intension::new([(0, 0), (1, 1)]).unwrap()).unwrap();
        assert_eq!((young_women.size(), young_students.size(), adv90.size()), (10, 10, 10));
        let sources = GranuleSet::from_parts(Side::Source, 0.1, vec![young_women, young_students]);
        let targets = GranuleSet::from_parts(Side::Target, 0.1, vec![adv90]);
        let store = RuleStore::from_parts(users.clone(), items, sources, targets, vec![35, 38]).unwrap();
        let profile = users.profile([("age", "young"), ("gender", "F"), ("occupation", "student")]).unwrap();
        (store, profile)
    }

    #[test]
    fn duplicate_target_keeps_higher_confidence() {
        let (store, profile) = duplicate_target_store();
        let rec = recommend(&store, &profile, 0, 3).unwrap();
        assert_eq!(rec.len(), 1);
        assert_eq!(rec.entries[0].confidence.value(), 0.38);
        assert_eq!(rec.entries[0].source, 1);
    }

    #[test]
    fn no_matching_source_is_empty() {
        let (store, _) = duplicate_target_store();
        let old = store
            .source_schema()
            .profile([("age", "old"), ("gender", "M"), ("occupation", "other")])
            .unwrap();
        let rec = recommend(&store, &old, 0, 2).unwrap();
        assert!(rec.is_empty());
    }

    #[test]
    fn rejects_k_zero_and_foreign_profile() {
        let (store, profile) = duplicate_target_store();
        assert!(matches!(recommend(&store, &profile, 0, 0), Err(Error::InvalidK)));
        let other = schema(vec![Attribute::new("x", ["a"])]).profile([("x", "a")]).unwrap();
        assert!(matches!(recommend(&store, &other, 0, 1), Err(Error::SchemaMismatch)));
    }

    fn items_system() -> InformationSystem {
        InformationSystem::new(
            schema(vec![
                Attribute::new("decade", ["a", "b"]),
                Attribute::flag("Action", "genre"),
                Attribute::flag("Drama", "genre"),
            ]),
            (0..5).map(|i| i.to_string()).collect(),
            vec![vec![0, 1, 0], vec![0, 1, 1], vec![1, 0, 1], vec![1, 0, 0], vec![0, 0, 0]],
        )
        .unwrap()
    }

    fn rec_with(intensions: Vec<Intension>, items: &InformationSystem) -> Recommendation {
        Recommendation {
            user: 0,
            entries: intensions
                .into_iter()
                .enumerate()
                .map(|(i, intension)| RecEntry {
                    target: i,
                    intension,
                    confidence: Ratio::new(1, 2),
                    source: 0,
                })
                .collect(),
            target_schema_fp: items.schema().fingerprint(),
        }
    }

    #[test]
    fn recommended_items_examples() {
        let items = items_system();
        let empty = rec_with(vec![], &items);
        assert!(recommended_items(&empty, &items).unwrap().is_empty());

        let everything = items.select(&[0, 1]).unwrap();
        let all = rec_with(vec![Intension::new([(0, 0)]).unwrap()], &everything);
        assert_eq!(recommended_items(&all, &everything).unwrap(), BitSet::full(2));

        let action = Intension::new([(1, 1)]).unwrap();
        let drama = Intension::new([(2, 1)]).unwrap();
        let both = rec_with(vec![action.clone(), drama.clone()], &items);
        let got = recommended_items(&both, &items).unwrap();
        let mut expected = BitSet::new(items.len());
        for r in 0..items.len() {
            if action.matches_row(items.row(r)) || drama.matches_row(items.row(r)) {
                expected.insert(r);
            }
        }
        assert_eq!(got, expected);
        assert_eq!(got.count_ones(), 3);
        let mut or = items_matching(&action, &items);
        or.union_with(&items_matching(&drama, &items));
        assert_eq!(got, or);

        let foreign = InformationSystem::new(
            schema(vec![Attribute::new("x", ["a"])]),
            vec!["0".into()],
            vec![vec![0]],
        )
        .unwrap();
        assert!(matches!(recommended_items(&both, &foreign), Err(Error::SchemaMismatch)));
    }

    fn random_store() -> impl Strategy<Value = (Mmer, RuleStore)> {
        (
            2usize..=12,
            2usize..=12,
            proptest::collection::vec(1usize..=3, 1..=4),
            proptest::collection::vec(1usize..=3, 1..=4),
            proptest::collection::vec(0u32..9, 48),
            proptest::collection::vec(any::<bool>(), 144),
        )
            .prop_filter_map("no granules", |(n, m, du, di, cells, bits)| {
                let sys = |n: usize, d: &[usize], off: usize| {
                    let attrs = d
                        .iter()
                        .enumerate()
                        .map(|(i, &k)| Attribute::new(format!("a{i}"), (0..k).map(|v| format!("v{v}"))))
                        .collect();
                    let rows = (0..n)
                        .map(|r| d.iter().enumerate().map(|(a, &k)| cells[(off + r * 5 + a * 3) % cells.len()] % k as u32).collect())
                        .collect();
                    InformationSystem::new(schema(attrs), (0..n).map(|i| i.to_string()).collect(), rows).unwrap()
                };
                let rel = BinaryRelation::from_pairs(
                    n,
                    m,
                    (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).filter(|&(i, j)| bits[i * 12 + j]),
                )
                .unwrap();
                let es = Mmer::new(sys(n, &du, 0), sys(m, &di, 11), rel).unwrap();
                let store = train(&es, &TrainConfig::new(0.1, 0.1)).ok()?;
                Some((es, store))
            })
    }

    /// Per-target max over matched sources, positives only, full sort.
    fn oracle(store: &RuleStore, profile: &Profile) -> Vec<(usize, Ratio)> {
        let (s, t) = store.dims();
        let mut out = Vec::new();
        for j in 0..t {
            let mut best: Option<Ratio> = None;
            for i in 0..s {
                if store.sources().granules()[i].intension().matches_profile(profile) {
                    let r = store.rule(i, j).unwrap().ratio();
                    best = Some(best.map_or(r, |b| b.max(r)));
                }
            }
            if let Some(b) = best.filter(|b| !b.is_zero()) {
                out.push((j, b));
            }
        }
        out.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        out
    }

    proptest! {
        #[test]
        fn full_k_matches_sorting_oracle((es, store) in random_store()) {
            let t = store.dims().1;
            for u in 0..es.users.len() {
                let rec = recommend_object(&store, &es.users, u, t).unwrap();
                let got: Vec<(usize, Ratio)> = rec.entries.iter().map(|e| (e.target, e.confidence)).collect();
                prop_assert_eq!(got, oracle(&store, &es.users.profile(u)));
            }
        }

        #[test]
        fn top_k_is_prefix_and_stable((es, store) in random_store(), k in 1usize..6) {
            for u in 0..es.users.len() {
                let a = recommend_object(&store, &es.users, u, k).unwrap();
                let b = recommend_object(&store, &es.users, u, k + 1).unwrap();
                prop_assert_eq!(&a.entries[..], &b.entries[..a.len()]);
                prop_assert_eq!(&a, &recommend_object(&store, &es.users, u, k).unwrap());
                let mut targets: Vec<usize> = a.entries.iter().map(|e| e.target).collect();
                targets.sort_unstable();
                targets.dedup();
                prop_assert_eq!(targets.len(), a.len());
                for e in &a.entries {
                    prop_assert!(!e.confidence.is_zero());
                    prop_assert!(store.sources().granules()[e.source].intension().matches_row(es.users.row(u)));
                    prop_assert_eq!(store.rule(e.source, e.target).unwrap().ratio(), e.confidence);
                }
            }
        }
    }
}
