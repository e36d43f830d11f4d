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

//! MovieLens 100k (`u.user`, `u.item`, `u.data`).
//!
//! Users get three attributes: an age interval, gender and occupation.
//! Movies get a release-decade interval and 18 genre flags; the raw file's
//! leading "unknown" genre flag is not used. A rating of any value becomes
//! one relation pair.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mmer::{Attribute, AttributeSchema, BinaryRelation, InformationSystem, Mmer};

pub const GENRES: [&str; 18] = [
    "Action",
    "Adventure",
    "Animation",
    "Children's",
    "Comedy",
    "Crime",
    "Documentary",
    "Drama",
    "Fantasy",
    "Film-Noir",
    "Horror",
    "Musical",
    "Mystery",
    "Romance",
    "Sci-Fi",
    "Thriller",
    "War",
    "Western",
];

pub const RELEASE_DECADES: [&str; 3] = ["before-1970s", "1970s-1980s", "1990s"];

const GENRE_GROUP: &str = "genre";
const RAW_GENRE_FLAGS: usize = 19;

/// Index into [`RELEASE_DECADES`] for a release year.
pub fn release_bin(year: u32) -> usize {
    match year {
        ..=1969 => 0,
        1970..=1989 => 1,
        _ => 2,
    }
}

/// Inclusive age interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgeBin {
    pub label: String,
    pub min: u32,
    pub max: u32,
}

impl AgeBin {
    pub fn new(label: impl Into<String>, min: u32, max: u32) -> Self {
        AgeBin {
            label: label.into(),
            min,
            max,
        }
    }
}

/// Nine age groups: under 18, 18-24, then five-year groups to 49, 50-55 and
/// 56+.
pub fn default_age_bins() -> Vec<AgeBin> {
    vec![
        AgeBin::new("under-18", 0, 17),
        AgeBin::new("18-24", 18, 24),
        AgeBin::new("25-29", 25, 29),
        AgeBin::new("30-34", 30, 34),
        AgeBin::new("35-39", 35, 39),
        AgeBin::new("40-44", 40, 44),
        AgeBin::new("45-49", 45, 49),
        AgeBin::new("50-55", 50, 55),
        AgeBin::new("56+", 56, u32::MAX),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenreMode {
    /// Genre flags form one multi-valued group: granules may only require a
    /// genre to be present.
    PresenceOnly,
    /// Genre flags are ordinary boolean attributes.
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MovieLensConfig {
    pub data_dir: PathBuf,
    pub age_bins: Vec<AgeBin>,
    pub genre_mode: GenreMode,
}

impl MovieLensConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        MovieLensConfig {
            data_dir: data_dir.into(),
            age_bins: default_age_bins(),
            genre_mode: GenreMode::PresenceOnly,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.age_bins.is_empty() {
            return Err(Error::InvalidSchema("no age bins".into()));
        }
        for b in &self.age_bins {
            if b.min > b.max {
                return Err(Error::InvalidSchema(format!("age bin `{}` is empty", b.label)));
            }
        }
        for w in self.age_bins.windows(2) {
            if w[1].min <= w[0].max {
                return Err(Error::InvalidSchema(format!(
                    "age bins `{}` and `{}` overlap or are out of order",
                    w[0].label, w[1].label
                )));
            }
        }
        Ok(())
    }

    fn age_bin(&self, age: u32) -> Option<u32> {
        self.age_bins
            .iter()
            .position(|b| (b.min..=b.max).contains(&age))
            .map(|i| i as u32)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    /// Movies without a release date, assigned to the 1990s interval.
    pub undated_movies: Vec<String>,
    pub rating_lines: usize,
    pub distinct_pairs: usize,
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    // u.item is Latin-1; titles are never interpreted, so lossy decoding is fine
    let text = String::from_utf8_lossy(&bytes);
    Ok(text
        .lines()
        .map(|l| l.trim_end_matches('\r').to_string())
        .filter(|l| !l.is_empty())
        .collect())
}

fn parse_num<T: std::str::FromStr>(path: &Path, line: usize, field: &str, what: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::parse(path, line, format!("invalid {what} `{field}`")))
}

pub fn load_movielens(cfg: &MovieLensConfig) -> Result<(Mmer, LoadReport)> {
    cfg.validate()?;
    let mut report = LoadReport::default();

    let users_path = cfg.data_dir.join("u.user");
    let user_lines = read_lines(&users_path)?;
    let mut raw_users = Vec::with_capacity(user_lines.len());
    for (n, line) in user_lines.iter().enumerate() {
        let f: Vec<&str> = line.split('|').collect();
        if f.len() != 5 {
            return Err(Error::parse(&users_path, n + 1, format!("expected 5 fields, found {}", f.len())));
        }
        let age: u32 = parse_num(&users_path, n + 1, f[1], "age")?;
        let bin = cfg
            .age_bin(age)
            .ok_or_else(|| Error::parse(&users_path, n + 1, format!("age {age} falls in no age bin")))?;
        raw_users.push((f[0].trim().to_string(), bin, f[2].trim().to_string(), f[3].trim().to_string()));
    }
    let genders: Vec<String> = raw_users.iter().map(|u| u.2.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let occupations: Vec<String> = raw_users.iter().map(|u| u.3.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let user_schema = Arc::new(AttributeSchema::new(vec![
        Attribute::new("age", cfg.age_bins.iter().map(|b| b.label.clone())),
        Attribute::new("gender", genders.clone()),
        Attribute::new("occupation", occupations.clone()),
    ])?);
    let index_of = |domain: &[String], v: &str| domain.iter().position(|d| d == v).expect("domain built from data") as u32;
    let mut user_ids = Vec::with_capacity(raw_users.len());
    let mut user_rows = Vec::with_capacity(raw_users.len());
    for (id, age, gender, occupation) in raw_users {
        user_rows.push(vec![age, index_of(&genders, &gender), index_of(&occupations, &occupation)]);
        user_ids.push(id);
    }
    let users = InformationSystem::new(user_schema, user_ids, user_rows)?;

    let items_path = cfg.data_dir.join("u.item");
    let item_lines = read_lines(&items_path)?;
    let mut item_attrs = vec![Attribute::new("release-decade", RELEASE_DECADES)];
    for g in GENRES {
        item_attrs.push(match cfg.genre_mode {
            GenreMode::PresenceOnly => Attribute::flag(g, GENRE_GROUP),
            GenreMode::Full => Attribute::new(g, ["0", "1"]),
        });
    }
    let item_schema = Arc::new(AttributeSchema::new(item_attrs)?);
    let mut item_ids = Vec::with_capacity(item_lines.len());
    let mut item_rows = Vec::with_capacity(item_lines.len());
    for (n, line) in item_lines.iter().enumerate() {
        let f: Vec<&str> = line.split('|').collect();
        if f.len() != 5 + RAW_GENRE_FLAGS {
            return Err(Error::parse(
                &items_path,
                n + 1,
                format!("expected {} fields, found {}", 5 + RAW_GENRE_FLAGS, f.len()),
            ));
        }
        let id = f[0].trim().to_string();
        let date = f[2].trim();
        let decade = if date.is_empty() {
            report.undated_movies.push(id.clone());
            release_bin(1990)
        } else {
            let year = date.rsplit('-').next().unwrap_or(date);
            release_bin(parse_num(&items_path, n + 1, year, "release year")?)
        };
        let mut row = Vec::with_capacity(1 + GENRES.len());
        row.push(decade as u32);
        // f[5] is the "unknown" flag
        for flag in &f[6..] {
            match flag.trim() {
                "0" => row.push(0),
                "1" => row.push(1),
                other => return Err(Error::parse(&items_path, n + 1, format!("invalid genre flag `{other}`"))),
            }
        }
        item_ids.push(id);
        item_rows.push(row);
    }
    let items = InformationSystem::new(item_schema, item_ids, item_rows)?;

    let user_index: HashMap<&str, usize> = users.ids().iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let item_index: HashMap<&str, usize> = items.ids().iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let ratings_path = cfg.data_dir.join("u.data");
    let rating_lines = read_lines(&ratings_path)?;
    let mut relation = BinaryRelation::new(users.len(), items.len());
    for (n, line) in rating_lines.iter().enumerate() {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(Error::parse(&ratings_path, n + 1, format!("expected 4 fields, found {}", f.len())));
        }
        let u = *user_index
            .get(f[0].trim())
            .ok_or_else(|| Error::parse(&ratings_path, n + 1, format!("unknown user id `{}`", f[0])))?;
        let i = *item_index
            .get(f[1].trim())
            .ok_or_else(|| Error::parse(&ratings_path, n + 1, format!("unknown movie id `{}`", f[1])))?;
        relation.insert(u, i)?;
    }
    report.rating_lines = rating_lines.len();
    report.distinct_pairs = relation.n_pairs();
    Ok((Mmer::new(users, items, relation)?, report))
}
