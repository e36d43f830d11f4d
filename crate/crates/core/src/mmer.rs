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

//! Information systems, binary relations, many-to-many entity-relationship
//! systems (MMERs) and granules.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use crate::bitset::BitSet;
use crate::error::{Error, Result};

/// Which side of a rule a granule lives on: users (source) or items (target).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Source,
    Target,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Source => "source",
            Side::Target => "target",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    /// Ordered categorical values; cells store indices into this list.
    pub domain: Vec<String>,
    /// Tag shared by the boolean attributes scaled from one multi-valued
    /// attribute (e.g. the genre flags). Grouped attributes have domain
    /// `["0", "1"]`.
    pub group: Option<String>,
}

impl Attribute {
    pub fn new<S: Into<String>>(name: impl Into<String>, domain: impl IntoIterator<Item = S>) -> Self {
        Attribute {
            name: name.into(),
            domain: domain.into_iter().map(Into::into).collect(),
            group: None,
        }
    }

    /// A `0`/`1` attribute belonging to multi-valued group `group`.
    pub fn flag(name: impl Into<String>, group: impl Into<String>) -> Self {
        Attribute {
            name: name.into(),
            domain: vec!["0".into(), "1".into()],
            group: Some(group.into()),
        }
    }

    pub fn value_index(&self, value: &str) -> Option<u32> {
        self.domain.iter().position(|v| v == value).map(|i| i as u32)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSchema {
    attrs: Vec<Attribute>,
    fingerprint: u64,
}

impl AttributeSchema {
    pub fn new(attrs: Vec<Attribute>) -> Result<Self> {
        if attrs.is_empty() {
            return Err(Error::InvalidSchema("no attributes".into()));
        }
        let mut seen = HashSet::new();
        for a in &attrs {
            if !seen.insert(a.name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate attribute `{}`", a.name)));
            }
            if a.domain.is_empty() {
                return Err(Error::InvalidSchema(format!("attribute `{}` has an empty domain", a.name)));
            }
            let distinct: HashSet<&str> = a.domain.iter().map(String::as_str).collect();
            if distinct.len() != a.domain.len() {
                return Err(Error::InvalidSchema(format!(
                    "attribute `{}` repeats a domain value",
                    a.name
                )));
            }
            if a.group.is_some() && a.domain != ["0", "1"] {
                return Err(Error::InvalidSchema(format!(
                    "grouped attribute `{}` must have domain [0, 1]",
                    a.name
                )));
            }
        }
        let fingerprint = fingerprint(&attrs);
        Ok(AttributeSchema { attrs, fingerprint })
    }

    pub fn len(&self) -> usize {
        self.attrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attrs.is_empty()
    }

    pub fn attrs(&self) -> &[Attribute] {
        &self.attrs
    }

    pub fn attr(&self, index: usize) -> Result<&Attribute> {
        self.attrs.get(index).ok_or(Error::AttributeOutOfRange {
            index,
            count: self.attrs.len(),
        })
    }

    pub fn attr_index(&self, name: &str) -> Option<usize> {
        self.attrs.iter().position(|a| a.name == name)
    }

    /// Stable content hash; two schemas with equal names, domains and groups
    /// share a fingerprint.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Builds a profile from `(attribute, value)` pairs. Every attribute must
    /// be present; values outside the frozen domain become "unknown" and
    /// match no granule condition on that attribute.
    pub fn profile<'a, I>(&self, pairs: I) -> Result<Profile>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut values: Vec<Option<Option<u32>>> = vec![None; self.attrs.len()];
        for (name, value) in pairs {
            let idx = self.attr_index(name).ok_or_else(|| {
                Error::InvalidSchema(format!("profile names unknown attribute `{name}`"))
            })?;
            values[idx] = Some(self.attrs[idx].value_index(value));
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| {
                    Error::InvalidSchema(format!("profile lacks attribute `{}`", self.attrs[i].name))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Profile {
            values,
            schema_fp: self.fingerprint,
        })
    }
}

// FNV-1a over a length-prefixed encoding of the schema.
fn fingerprint(attrs: &[Attribute]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let mut eat = |bytes: &[u8]| {
        for &b in (bytes.len() as u64).to_le_bytes().iter().chain(bytes) {
            h ^= b as u64;
            h = h.wrapping_mul(PRIME);
        }
    };
    for a in attrs {
        eat(a.name.as_bytes());
        eat(a.group.as_deref().unwrap_or("\0").as_bytes());
        for v in &a.domain {
            eat(v.as_bytes());
        }
        eat(b"|");
    }
    h
}

/// One object's attribute values, possibly from outside the training data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    /// `None` marks a value that is not in the frozen domain.
    pub values: Vec<Option<u32>>,
    schema_fp: u64,
}

impl Profile {
    pub fn schema_fingerprint(&self) -> u64 {
        self.schema_fp
    }
}

/// Objects × categorical attributes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InformationSystem {
    schema: Arc<AttributeSchema>,
    ids: Vec<String>,
    cells: Vec<u32>,
}

impl InformationSystem {
    pub fn new(schema: Arc<AttributeSchema>, ids: Vec<String>, rows: Vec<Vec<u32>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyUniverse);
        }
        if ids.len() != rows.len() {
            return Err(Error::InvalidSchema(format!(
                "{} ids for {} rows",
                ids.len(),
                rows.len()
            )));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate object id `{id}`")));
            }
        }
        let m = schema.len();
        let mut cells = Vec::with_capacity(rows.len() * m);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != m {
                return Err(Error::RowShape {
                    row: r,
                    expected: m,
                    found: row.len(),
                });
            }
            for (a, &v) in row.iter().enumerate() {
                check_value(&schema, a, v)?;
            }
            cells.extend(row);
        }
        Ok(InformationSystem { schema, ids, cells })
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn schema_arc(&self) -> &Arc<AttributeSchema> {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, row: usize) -> &str {
        &self.ids[row]
    }

    pub fn row(&self, row: usize) -> &[u32] {
        let m = self.schema.len();
        &self.cells[row * m..(row + 1) * m]
    }

    #[inline]
    pub fn value(&self, row: usize, attr: usize) -> u32 {
        self.cells[row * self.schema.len() + attr]
    }

    pub fn profile(&self, row: usize) -> Profile {
        Profile {
            values: self.row(row).iter().map(|&v| Some(v)).collect(),
            schema_fp: self.schema.fingerprint(),
        }
    }

    /// Sub-table of the given rows, in the given order, sharing the schema.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyUniverse);
        }
        let m = self.schema.len();
        let mut cells = Vec::with_capacity(rows.len() * m);
        let mut ids = Vec::with_capacity(rows.len());
        for &r in rows {
            if r >= self.len() {
                return Err(Error::IndexOutOfRange {
                    what: "object",
                    index: r,
                    len: self.len(),
                });
            }
            cells.extend_from_slice(self.row(r));
            ids.push(self.ids[r].clone());
        }
        Ok(InformationSystem {
            schema: Arc::clone(&self.schema),
            ids,
            cells,
        })
    }

    /// Objects whose value on `attr` is `value`.
    pub fn value_extension(&self, attr: usize, value: u32) -> Result<BitSet> {
        extension(self, &[attr], &[value])
    }
}

fn check_value(schema: &AttributeSchema, attr: usize, value: u32) -> Result<()> {
    let a = schema.attr(attr)?;
    if value as usize >= a.domain.len() {
        return Err(Error::ValueOutOfDomain {
            attr: a.name.clone(),
            value,
            domain_size: a.domain.len(),
        });
    }
    Ok(())
}

/// The set of objects whose value on every `attrs[i]` equals `values[i]`.
pub fn extension(is: &InformationSystem, attrs: &[usize], values: &[u32]) -> Result<BitSet> {
    if attrs.len() != values.len() {
        return Err(Error::InvalidSchema(format!(
            "{} attributes but {} values",
            attrs.len(),
            values.len()
        )));
    }
    for (&a, &v) in attrs.iter().zip(values) {
        check_value(is.schema(), a, v)?;
    }
    let mut out = BitSet::new(is.len());
    for row in 0..is.len() {
        if attrs.iter().zip(values).all(|(&a, &v)| is.value(row, a) == v) {
            out.insert(row);
        }
    }
    Ok(out)
}

/// A conjunction of attribute-value conditions, attributes strictly ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Intension {
    attrs: Vec<usize>,
    values: Vec<u32>,
}

impl Intension {
    /// Pairs may come in any order; they are sorted by attribute. Repeating
    /// an attribute or passing no pairs is an error.
    pub fn new(pairs: impl IntoIterator<Item = (usize, u32)>) -> Result<Self> {
        let mut pairs: Vec<(usize, u32)> = pairs.into_iter().collect();
        if pairs.is_empty() {
            return Err(Error::EmptyIntension);
        }
        pairs.sort_unstable();
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidSchema("intension repeats an attribute".into()));
        }
        let (attrs, values) = pairs.into_iter().unzip();
        Ok(Intension { attrs, values })
    }

    pub(crate) fn from_sorted(attrs: Vec<usize>, values: Vec<u32>) -> Self {
        debug_assert!(!attrs.is_empty() && attrs.windows(2).all(|w| w[0] < w[1]));
        Intension { attrs, values }
    }

    pub fn attrs(&self) -> &[usize] {
        &self.attrs
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.attrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attrs.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.attrs.iter().copied().zip(self.values.iter().copied())
    }

    pub fn value_of(&self, attr: usize) -> Option<u32> {
        self.attrs
            .binary_search(&attr)
            .ok()
            .map(|i| self.values[i])
    }

    /// `true` iff `self` has strictly more conditions than `other` and agrees
    /// with it on every attribute `other` constrains.
    pub fn refines(&self, other: &Intension) -> bool {
        self.len() > other.len() && other.pairs().all(|(a, v)| self.value_of(a) == Some(v))
    }

    pub fn matches_row(&self, row: &[u32]) -> bool {
        self.pairs().all(|(a, v)| row.get(a) == Some(&v))
    }

    pub fn matches_profile(&self, profile: &Profile) -> bool {
        self.pairs()
            .all(|(a, v)| profile.values.get(a).copied().flatten() == Some(v))
    }

    /// `attr=value&attr=value` with schema names.
    pub fn render(&self, schema: &AttributeSchema) -> String {
        self.pairs()
            .map(|(a, v)| match schema.attrs().get(a) {
                Some(attr) => format!(
                    "{}={}",
                    attr.name,
                    attr.domain.get(v as usize).map(String::as_str).unwrap_or("?")
                ),
                None => format!("#{a}={v}"),
            })
            .collect::<Vec<_>>()
            .join("&")
    }
}

impl Ord for Intension {
    /// Fewer conditions first, then lexicographic on attributes, then values.
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.attrs.cmp(&other.attrs))
            .then_with(|| self.values.cmp(&other.values))
    }
}

impl PartialOrd for Intension {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// An information granule: its intension and the extension it has in the
/// information system it was built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Granule {
    side: Side,
    intension: Intension,
    extension: BitSet,
    schema_fp: u64,
}

impl Granule {
    pub fn new(is: &InformationSystem, side: Side, intension: Intension) -> Result<Self> {
        let extension = extension(is, intension.attrs(), intension.values())?;
        Ok(Granule {
            side,
            intension,
            extension,
            schema_fp: is.schema().fingerprint(),
        })
    }

    /// Trusted constructor for enumeration and deserialization, where the
    /// extension is already known.
    pub(crate) fn from_parts(side: Side, intension: Intension, extension: BitSet, schema_fp: u64) -> Self {
        Granule {
            side,
            intension,
            extension,
            schema_fp,
        }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn intension(&self) -> &Intension {
        &self.intension
    }

    pub fn extension(&self) -> &BitSet {
        &self.extension
    }

    pub fn schema_fingerprint(&self) -> u64 {
        self.schema_fp
    }

    /// `|e(g)|`.
    pub fn size(&self) -> usize {
        self.extension.count_ones()
    }

    /// `|e(g)| / |universe|`.
    pub fn coverage(&self) -> f64 {
        self.size() as f64 / self.extension.len() as f64
    }
}

/// Strict refinement: `g1` adds conditions to `g2` and agrees on the rest.
pub fn finer_than(g1: &Granule, g2: &Granule) -> Result<bool> {
    if g1.side != g2.side {
        return Err(Error::SideMismatch);
    }
    if g1.schema_fp != g2.schema_fp {
        return Err(Error::SchemaMismatch);
    }
    Ok(g1.intension.refines(&g2.intension))
}

/// `R ⊆ U × V` stored as one bitset over `V` per object of `U`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryRelation {
    n_right: usize,
    rows: Vec<BitSet>,
}

impl BinaryRelation {
    pub fn new(n_left: usize, n_right: usize) -> Self {
        BinaryRelation {
            n_right,
            rows: vec![BitSet::new(n_right); n_left],
        }
    }

    pub fn full(n_left: usize, n_right: usize) -> Self {
        BinaryRelation {
            n_right,
            rows: vec![BitSet::full(n_right); n_left],
        }
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, usize)>>(
        n_left: usize,
        n_right: usize,
        pairs: I,
    ) -> Result<Self> {
        let mut rel = BinaryRelation::new(n_left, n_right);
        for (i, j) in pairs {
            rel.insert(i, j)?;
        }
        Ok(rel)
    }

    pub fn insert(&mut self, left: usize, right: usize) -> Result<()> {
        if left >= self.rows.len() {
            return Err(Error::IndexOutOfRange {
                what: "left object",
                index: left,
                len: self.rows.len(),
            });
        }
        if right >= self.n_right {
            return Err(Error::IndexOutOfRange {
                what: "right object",
                index: right,
                len: self.n_right,
            });
        }
        self.rows[left].insert(right);
        Ok(())
    }

    pub fn contains(&self, left: usize, right: usize) -> bool {
        self.rows.get(left).is_some_and(|r| r.contains(right))
    }

    pub fn n_left(&self) -> usize {
        self.rows.len()
    }

    pub fn n_right(&self) -> usize {
        self.n_right
    }

    pub fn row(&self, left: usize) -> &BitSet {
        &self.rows[left]
    }

    pub fn rows(&self) -> &[BitSet] {
        &self.rows
    }

    /// `|R|`.
    pub fn n_pairs(&self) -> usize {
        self.rows.iter().map(BitSet::count_ones).sum()
    }

    /// `|R| / (|U| · |V|)`.
    pub fn density(&self) -> f64 {
        self.n_pairs() as f64 / (self.n_left() as f64 * self.n_right as f64)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.ones().map(move |j| (i, j)))
    }

    /// Relation restricted to `left × right`, re-indexed by position in the
    /// given slices.
    pub fn restrict(&self, left: &[usize], right: &[usize]) -> BinaryRelation {
        let rows = left
            .iter()
            .map(|&i| {
                let src = &self.rows[i];
                BitSet::from_indices(right.len(), right.iter().enumerate().filter_map(|(k, &j)| src.contains(j).then_some(k)))
            })
            .collect();
        BinaryRelation {
            n_right: right.len(),
            rows,
        }
    }
}

/// `|(lh × rh) ∩ R|`.
pub fn pair_count(rel: &BinaryRelation, lh: &BitSet, rh: &BitSet) -> Result<u64> {
    if lh.len() != rel.n_left() {
        return Err(Error::WidthMismatch {
            expected: rel.n_left(),
            found: lh.len(),
        });
    }
    if rh.len() != rel.n_right() {
        return Err(Error::WidthMismatch {
            expected: rel.n_right(),
            found: rh.len(),
        });
    }
    Ok(lh
        .ones()
        .map(|i| rel.rows[i].intersection_count(rh) as u64)
        .sum())
}

/// `ES = (U, A, V, B, R)`: users, items and the relation between them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mmer {
    pub users: InformationSystem,
    pub items: InformationSystem,
    pub relation: BinaryRelation,
}

impl Mmer {
    pub fn new(users: InformationSystem, items: InformationSystem, relation: BinaryRelation) -> Result<Self> {
        if relation.n_left() != users.len() {
            return Err(Error::WidthMismatch {
                expected: users.len(),
                found: relation.n_left(),
            });
        }
        if relation.n_right() != items.len() {
            return Err(Error::WidthMismatch {
                expected: items.len(),
                found: relation.n_right(),
            });
        }
        Ok(Mmer {
            users,
            items,
            relation,
        })
    }

    /// The MMER induced by a subset of users and a subset of items.
    pub fn restrict(&self, users: &[usize], items: &[usize]) -> Result<Self> {
        Ok(Mmer {
            users: self.users.select(users)?,
            items: self.items.select(items)?,
            relation: self.relation.restrict(users, items),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// MovieLens users 1, 2, 3 and 943 (age, gender, occupation).
    fn table_users() -> InformationSystem {
        let schema = AttributeSchema::new(vec![
            Attribute::new("age", ["18-24", "50-55"]),
            Attribute::new("gender", ["M", "F"]),
            Attribute::new("occupation", ["technician", "other", "writer", "student"]),
        ])
        .unwrap();
        InformationSystem::new(
            Arc::new(schema),
            vec!["1".into(), "2".into(), "3".into(), "943".into()],
            vec![vec![0, 0, 0], vec![1, 1, 1], vec![0, 0, 2], vec![0, 0, 3]],
        )
        .unwrap()
    }

    #[test]
    fn gender_m_extension_on_table_rows() {
        let is = table_users();
        let e = extension(&is, &[1], &[0]).unwrap();
        let ids: Vec<&str> = e.ones().map(|r| is.id(r)).collect();
        assert_eq!(ids, ["1", "3", "943"]);
    }

    #[test]
    fn full_intension_extension_is_equivalence_class() {
        let is = table_users();
        for x in 0..is.len() {
            let e = extension(&is, &[0, 1, 2], is.row(x)).unwrap();
            assert!(e.contains(x));
            for y in e.ones() {
                assert_eq!(is.row(y), is.row(x));
            }
        }
    }

    #[test]
    fn extension_errors() {
        let is = table_users();
        assert!(matches!(
            extension(&is, &[3], &[0]),
            Err(Error::AttributeOutOfRange { index: 3, count: 3 })
        ));
        assert!(matches!(
            extension(&is, &[1], &[2]),
            Err(Error::ValueOutOfDomain { value: 2, .. })
        ));
    }

    #[test]
    fn schema_validation() {
        assert!(AttributeSchema::new(vec![Attribute::new("a", ["x"]), Attribute::new("a", ["y"])]).is_err());
        assert!(AttributeSchema::new(vec![Attribute::new("a", Vec::<String>::new())]).is_err());
        let mut bad = Attribute::flag("g", "genre");
        bad.domain = vec!["1".into(), "0".into()];
        assert!(AttributeSchema::new(vec![bad]).is_err());
    }

    #[test]
    fn finer_than_examples() {
        let is = table_users();
        let young_men = Granule::new(&is, Side::Source, Intension::new([(0, 0), (1, 0)]).unwrap()).unwrap();
        let men = Granule::new(&is, Side::Source, Intension::new([(1, 0)]).unwrap()).unwrap();
        assert!(finer_than(&young_men, &men).unwrap());
        assert!(!finer_than(&men, &young_men).unwrap());
        assert!(!finer_than(&men, &men).unwrap());
        let target = Granule::from_parts(Side::Target, men.intension().clone(), men.extension().clone(), men.schema_fp);
        assert!(matches!(finer_than(&men, &target), Err(Error::SideMismatch)));
    }

    #[test]
    fn intension_rejects_repeats_and_empty() {
        assert!(matches!(Intension::new([]), Err(Error::EmptyIntension)));
        assert!(Intension::new([(1, 0), (1, 1)]).is_err());
        assert_eq!(Intension::new([(2, 1), (0, 3)]).unwrap().attrs(), [0, 2]);
    }

    #[test]
    fn pair_count_complete_and_empty() {
        let full = BinaryRelation::full(5, 7);
        let lh = BitSet::from_indices(5, [0, 2, 4]);
        let rh = BitSet::from_indices(7, [1, 6]);
        assert_eq!(pair_count(&full, &lh, &rh).unwrap(), 6);
        assert_eq!(pair_count(&BinaryRelation::new(5, 7), &lh, &rh).unwrap(), 0);
        assert!(matches!(
            pair_count(&full, &rh, &lh),
            Err(Error::WidthMismatch { .. })
        ));
    }

    #[test]
    fn profile_unknown_value_matches_nothing() {
        let is = table_users();
        let p = is.schema().profile([("age", "18-24"), ("gender", "X"), ("occupation", "writer")]).unwrap();
        assert_eq!(p.values, [Some(0), None, Some(2)]);
        assert!(!Intension::new([(1, 0)]).unwrap().matches_profile(&p));
        assert!(Intension::new([(0, 0)]).unwrap().matches_profile(&p));
        assert!(is.schema().profile([("age", "18-24")]).is_err());
    }

    fn random_table(n: usize, domains: &[usize], cells: &[u32]) -> InformationSystem {
        let attrs = domains
            .iter()
            .enumerate()
            .map(|(i, &d)| Attribute::new(format!("a{i}"), (0..d).map(|v| format!("v{v}"))))
            .collect();
        let schema = Arc::new(AttributeSchema::new(attrs).unwrap());
        let rows = (0..n)
            .map(|r| {
                domains
                    .iter()
                    .enumerate()
                    .map(|(a, &d)| cells[(r * domains.len() + a) % cells.len()] % d as u32)
                    .collect()
            })
            .collect();
        InformationSystem::new(schema, (0..n).map(|i| i.to_string()).collect(), rows).unwrap()
    }

    fn table_strategy() -> impl Strategy<Value = InformationSystem> {
        (
            1usize..=12,
            proptest::collection::vec(1usize..=3, 1..=4),
            proptest::collection::vec(0u32..6, 48),
        )
            .prop_map(|(n, d, c)| random_table(n, &d, &c))
    }

    fn subsets(m: usize) -> Vec<Vec<usize>> {
        (1u32..(1 << m))
            .map(|mask| (0..m).filter(|&a| mask & (1 << a) != 0).collect())
            .collect()
    }

    proptest! {
        #[test]
        fn extension_matches_linear_scan(is in table_strategy()) {
            for attrs in subsets(is.schema().len()).into_iter().filter(|s| s.len() <= 2) {
                for x in 0..is.len() {
                    let values: Vec<u32> = attrs.iter().map(|&a| is.value(x, a)).collect();
                    let e = extension(&is, &attrs, &values).unwrap();
                    for y in 0..is.len() {
                        let scan = attrs.iter().zip(&values).all(|(&a, &v)| is.row(y)[a] == v);
                        prop_assert_eq!(e.contains(y), scan);
                    }
                }
            }
        }

        #[test]
        fn classes_partition_universe(is in table_strategy()) {
            for attrs in subsets(is.schema().len()) {
                let mut classes: Vec<(Vec<u32>, BitSet)> = Vec::new();
                for x in 0..is.len() {
                    let values: Vec<u32> = attrs.iter().map(|&a| is.value(x, a)).collect();
                    if classes.iter().all(|(v, _)| *v != values) {
                        let e = extension(&is, &attrs, &values).unwrap();
                        classes.push((values, e));
                    }
                }
                let mut union = BitSet::new(is.len());
                for (i, (_, a)) in classes.iter().enumerate() {
                    for (_, b) in &classes[i + 1..] {
                        prop_assert!(a.is_disjoint(b));
                    }
                    union.union_with(a);
                }
                prop_assert_eq!(union, BitSet::full(is.len()));
            }
        }

        #[test]
        fn finer_implies_subset_extension(is in table_strategy(), x in 0usize..12, m1 in 1u32..16, m2 in 1u32..16) {
            let m = is.schema().len();
            let x = x % is.len();
            let mask = |bits: u32| -> Vec<(usize, u32)> {
                (0..m).filter(|&a| bits & (1 << a) != 0).map(|a| (a, is.value(x, a))).collect()
            };
            let (p1, p2) = (mask(m1), mask(m2));
            prop_assume!(!p1.is_empty() && !p2.is_empty());
            let g1 = Granule::new(&is, Side::Source, Intension::new(p1).unwrap()).unwrap();
            let g2 = Granule::new(&is, Side::Source, Intension::new(p2).unwrap()).unwrap();
            if finer_than(&g1, &g2).unwrap() {
                prop_assert!(g1.extension().is_subset(g2.extension()));
            }
            if finer_than(&g2, &g1).unwrap() {
                prop_assert!(g2.extension().is_subset(g1.extension()));
            }
        }

        #[test]
        fn pair_count_matches_nested_loop(
            n in 1usize..=12, m in 1usize..=12,
            bits in proptest::collection::vec(any::<bool>(), 144),
            lhb in proptest::collection::vec(any::<bool>(), 12),
            rhb in proptest::collection::vec(any::<bool>(), 12),
        ) {
            let rel = BinaryRelation::from_pairs(n, m,
                (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).filter(|&(i, j)| bits[i * 12 + j])).unwrap();
            let lh = BitSet::from_indices(n, (0..n).filter(|&i| lhb[i]));
            let rh = BitSet::from_indices(m, (0..m).filter(|&j| rhb[j]));
            let mut oracle = 0u64;
            for i in 0..n {
                for j in 0..m {
                    if lhb[i] && rhb[j] && bits[i * 12 + j] {
                        oracle += 1;
                    }
                }
            }
            prop_assert_eq!(pair_count(&rel, &lh, &rh).unwrap(), oracle);
        }
    }
}
