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

//! Generic CSV layout for an MMER.
//!
//! * users and items: a header row `id,<attr>,<attr>,...`, then one row per
//!   object. The first column is the object id; every other column is a
//!   categorical attribute whose domain is the sorted set of values seen.
//! * relation: a header row (names ignored), then `left_id,right_id` rows.
//!   Repeated pairs collapse to one.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mmer::{Attribute, AttributeSchema, BinaryRelation, InformationSystem, Mmer, Profile};

fn open(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            Error::parse(path, line, format!("expected {expected_len} fields, found {len}"))
        }
        csv::ErrorKind::Utf8 { err, .. } => Error::parse(path, line, format!("invalid UTF-8: {err}")),
        kind => Error::parse(path, line, format!("{kind:?}")),
    }
}

// header, then (line, fields) per data row
type Records = (Vec<String>, Vec<(usize, Vec<String>)>);

fn records(path: &Path) -> Result<Records> {
    let mut rdr = open(path)?;
    let header: Vec<String> = rdr.headers().map_err(|e| csv_err(path, e))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok((header, rows))
}

fn load_table(path: &Path) -> Result<InformationSystem> {
    let (header, rows) = records(path)?;
    if header.len() < 2 {
        return Err(Error::parse(path, 1, "need an id column and at least one attribute"));
    }
    let m = header.len() - 1;
    let mut domains: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); m];
    for (_, r) in &rows {
        for (a, v) in r[1..].iter().enumerate() {
            domains[a].insert(v);
        }
    }
    let domains: Vec<Vec<String>> = domains.into_iter().map(|d| d.into_iter().map(str::to_string).collect()).collect();
    let schema = AttributeSchema::new(
        header[1..]
            .iter()
            .zip(&domains)
            .map(|(name, d)| Attribute::new(name.clone(), d.clone()))
            .collect(),
    )
    .map_err(|e| Error::parse(path, 1, e.to_string()))?;
    let mut ids = Vec::with_capacity(rows.len());
    let mut cells = Vec::with_capacity(rows.len());
    let mut seen = HashMap::new();
    for (line, r) in rows {
        if let Some(prev) = seen.insert(r[0].clone(), line) {
            return Err(Error::parse(path, line, format!("id `{}` already used on line {prev}", r[0])));
        }
        cells.push(
            r[1..]
                .iter()
                .zip(&domains)
                .map(|(v, d)| d.binary_search(v).expect("domain built from data") as u32)
                .collect(),
        );
        ids.push(r[0].clone());
    }
    if ids.is_empty() {
        return Err(Error::parse(path, 1, "no objects"));
    }
    InformationSystem::new(Arc::new(schema), ids, cells)
}

pub fn load_csv_mmer(users_path: &Path, items_path: &Path, relation_path: &Path) -> Result<Mmer> {
    let users = load_table(users_path)?;
    let items = load_table(items_path)?;
    let ui: HashMap<&str, usize> = users.ids().iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let ii: HashMap<&str, usize> = items.ids().iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let (header, rows) = records(relation_path)?;
    if header.len() != 2 {
        return Err(Error::parse(relation_path, 1, "relation needs exactly two columns"));
    }
    let mut rel = BinaryRelation::new(users.len(), items.len());
    for (line, r) in rows {
        let u = *ui
            .get(r[0].as_str())
            .ok_or_else(|| Error::parse(relation_path, line, format!("unknown left id `{}`", r[0])))?;
        let i = *ii
            .get(r[1].as_str())
            .ok_or_else(|| Error::parse(relation_path, line, format!("unknown right id `{}`", r[1])))?;
        rel.insert(u, i)?;
    }
    Mmer::new(users, items, rel)
}

fn write_table(is: &InformationSystem, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut header = vec!["id".to_string()];
    header.extend(is.schema().attrs().iter().map(|a| a.name.clone()));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for r in 0..is.len() {
        let mut rec = vec![is.id(r).to_string()];
        rec.extend(
            is.row(r)
                .iter()
                .zip(is.schema().attrs())
                .map(|(&v, a)| a.domain[v as usize].clone()),
        );
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_csv_mmer(es: &Mmer, users_path: &Path, items_path: &Path, relation_path: &Path) -> Result<()> {
    write_table(&es.users, users_path)?;
    write_table(&es.items, items_path)?;
    let mut w = csv::Writer::from_path(relation_path).map_err(|e| csv_err(relation_path, e))?;
    w.write_record(["left_id", "right_id"]).map_err(|e| csv_err(relation_path, e))?;
    for (u, i) in es.relation.pairs() {
        w.write_record([es.users.id(u), es.items.id(i)]).map_err(|e| csv_err(relation_path, e))?;
    }
    w.flush().map_err(|e| Error::io(relation_path, e))
}

/// User profiles in the users-table layout (`id,<attr>,...`), mapped onto
/// `schema`. Columns may come in any order; values outside a frozen domain
/// are kept as unknown.
pub fn read_profiles(path: &Path, schema: &AttributeSchema) -> Result<(Vec<String>, Vec<Profile>)> {
    let (header, rows) = records(path)?;
    if header.is_empty() {
        return Err(Error::parse(path, 1, "empty header"));
    }
    let mut ids = Vec::with_capacity(rows.len());
    let mut profiles = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        let pairs = header[1..].iter().map(String::as_str).zip(r[1..].iter().map(String::as_str));
        let profile = schema.profile(pairs).map_err(|e| Error::parse(path, line, e.to_string()))?;
        ids.push(r[0].clone());
        profiles.push(profile);
    }
    Ok((ids, profiles))
}
