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

//! Top-k granular association rules for cold-start recommendation.
//!
//! Users and items are described by categorical attributes. A *granule* is
//! the set of objects sharing values on some attribute subset; a *granular
//! association rule* links a user granule to an item granule with a
//! confidence, the probability that a user of the first granule rated an
//! item of the second. Training enumerates every granule above a coverage
//! threshold on each side and stores the confidence of every pair
//! ([`rules::train`]). A new user, described only by attributes, is
//! matched against the user granules and receives the `k` strongest distinct
//! item granules ([`recommend::recommend`]).
//!
//! ```
//! use std::sync::Arc;
//! use grarule::mmer::{Attribute, AttributeSchema, BinaryRelation, InformationSystem, Mmer};
//! use grarule::rules::{train, TrainConfig};
//! use grarule::recommend::recommend;
//!
//! let users = Arc::new(AttributeSchema::new(vec![Attribute::new("gender", ["F", "M"])]).unwrap());
//! let items = Arc::new(AttributeSchema::new(vec![Attribute::flag("Drama", "genre")]).unwrap());
//! let users = InformationSystem::new(users, vec!["u1".into(), "u2".into()], vec![vec![0], vec![1]]).unwrap();
//! let items = InformationSystem::new(items, vec!["i1".into(), "i2".into()], vec![vec![1], vec![0]]).unwrap();
//! let rel = BinaryRelation::from_pairs(2, 2, [(0, 0)]).unwrap();
//! let es = Mmer::new(users, items, rel).unwrap();
//!
//! let store = train(&es, &TrainConfig::new(0.5, 0.5)).unwrap();
//! let profile = es.users.schema().profile([("gender", "F")]).unwrap();
//! let rec = recommend(&store, &profile, 0, 1).unwrap();
//! assert_eq!(rec.entries[0].intension.render(es.items.schema()), "Drama=1");
//! assert_eq!(rec.entries[0].confidence.value(), 1.0);
//! ```

pub mod bitset;
pub mod datasets;
pub mod error;
pub mod experiments;
pub mod granulation;
pub mod mmer;
pub mod recommend;
pub mod rules;
pub mod store_io;

pub use bitset::BitSet;
pub use error::{Error, Result};
pub use granulation::{enumerate_granules, GranulationConfig, GranuleSet};
pub use mmer::{
    finer_than, pair_count, Attribute, AttributeSchema, BinaryRelation, Granule, InformationSystem, Intension, Mmer,
    Profile, Side,
};
pub use recommend::{recommend, recommended_items, RecEntry, Recommendation};
pub use rules::{rule_confidence, train, GranularRule, Ratio, RuleStore, TrainConfig};
