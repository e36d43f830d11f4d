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

//! Line-oriented text format for [`RuleStore`].
//!
//! ```text
//! grarule-store	1
//! ms	0.05
//! mt	0.1
//! schema	source	3
//! attr	age	-	<18	18-24	...
//! ...
//! schema	target	19
//! attr	Action	genre	0	1
//! granules	source	943	57
//! g	0	3	<hex extension>
//! g	0,1	3,0	<hex extension>
//! granules	target	1682	40
//! ...
//! matrix	57	40
//! <40 tab-separated pair counts>
//! ...
//! end
//! ```
//!
//! Fields are tab-separated. Inside names and values, `\` escapes a tab
//! (`\t`), newline (`\n`), carriage return (`\r`) or backslash (`\\`); a lone
//! `-` in the group column means "no group" and a literal `-` group is
//! written `\-`. Thresholds use the shortest decimal that parses back to the
//! same `f64`, so a write/read cycle reproduces the store exactly.

#![allow(clippy::tabs_in_doc_comments)]

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::granulation::{clears, GranuleSet};
use crate::mmer::{Attribute, AttributeSchema, Granule, Intension, Side};
use crate::rules::RuleStore;

const MAGIC: &str = "grarule-store";
const VERSION: u32 = 1;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> std::result::Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('-') => out.push('-'),
            other => return Err(format!("bad escape `\\{}`", other.map(String::from).unwrap_or_default())),
        }
    }
    Ok(out)
}

fn join<T: ToString>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn write_store<W: Write>(store: &RuleStore, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{MAGIC}\t{VERSION}")?;
    writeln!(w, "ms\t{}", store.ms())?;
    writeln!(w, "mt\t{}", store.mt())?;
    for (side, schema) in [(Side::Source, store.source_schema()), (Side::Target, store.target_schema())] {
        writeln!(w, "schema\t{side}\t{}", schema.len())?;
        for a in schema.attrs() {
            let group = match a.group.as_deref() {
                None => "-".to_string(),
                Some("-") => "\\-".to_string(),
                Some(g) => escape(g),
            };
            write!(w, "attr\t{}\t{group}", escape(&a.name))?;
            for v in &a.domain {
                write!(w, "\t{}", escape(v))?;
            }
            writeln!(w)?;
        }
    }
    for set in [store.sources(), store.targets()] {
        let universe = set.granules().first().map_or(0, |g| g.extension().len());
        writeln!(w, "granules\t{}\t{universe}\t{}", set.side(), set.len())?;
        for g in set.granules() {
            let i = g.intension();
            writeln!(w, "g\t{}\t{}\t{}", join(i.attrs()), join(i.values()), g.extension().to_hex())?;
        }
    }
    let (s, t) = store.dims();
    writeln!(w, "matrix\t{s}\t{t}")?;
    for i in 0..s {
        writeln!(w, "{}", store.row(i).iter().map(u64::to_string).collect::<Vec<_>>().join("\t"))?;
    }
    writeln!(w, "end")?;
    w.flush()
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn err(&self, msg: impl AsRef<str>) -> Error {
        Error::StoreFormat(format!("line {}: {}", self.line, msg.as_ref()))
    }

    fn next_line(&mut self) -> Result<String> {
        self.line += 1;
        match self.inner.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(self.err(e.to_string())),
            None => Err(self.err("unexpected end of file")),
        }
    }

    /// Next line split on tabs, checking the leading keyword.
    fn record(&mut self, keyword: &str) -> Result<Vec<String>> {
        let line = self.next_line()?;
        let mut fields: Vec<String> = line.split('\t').map(str::to_string).collect();
        if fields[0] != keyword {
            return Err(self.err(format!("expected `{keyword}`, found `{}`", fields[0])));
        }
        fields.remove(0);
        Ok(fields)
    }

    fn parse<T: std::str::FromStr>(&self, s: &str, what: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("invalid {what} `{s}`")))
    }

    fn exactly(&self, fields: &[String], n: usize) -> Result<()> {
        if fields.len() == n {
            Ok(())
        } else {
            Err(self.err(format!("expected {n} fields, found {}", fields.len())))
        }
    }
}

fn parse_list<T: std::str::FromStr, R: BufRead>(lines: &Lines<R>, s: &str) -> Result<Vec<T>> {
    s.split(',').map(|x| lines.parse(x, "index")).collect()
}

pub fn read_store<R: BufRead>(reader: R) -> Result<RuleStore> {
    let mut lines = Lines {
        inner: reader.lines(),
        line: 0,
    };
    let header = lines.record(MAGIC)?;
    lines.exactly(&header, 1)?;
    let version: u32 = lines.parse(&header[0], "version")?;
    if version != VERSION {
        return Err(lines.err(format!("unsupported version {version}")));
    }
    let ms_f = lines.record("ms")?;
    lines.exactly(&ms_f, 1)?;
    let ms: f64 = lines.parse(&ms_f[0], "threshold")?;
    let mt_f = lines.record("mt")?;
    lines.exactly(&mt_f, 1)?;
    let mt: f64 = lines.parse(&mt_f[0], "threshold")?;

    let mut schemas = Vec::with_capacity(2);
    for side in [Side::Source, Side::Target] {
        let f = lines.record("schema")?;
        lines.exactly(&f, 2)?;
        if f[0] != side.to_string() {
            return Err(lines.err(format!("expected {side} schema")));
        }
        let n: usize = lines.parse(&f[1], "attribute count")?;
        let mut attrs = Vec::with_capacity(n);
        for _ in 0..n {
            let f = lines.record("attr")?;
            if f.len() < 3 {
                return Err(lines.err("attribute needs a name, group and at least one value"));
            }
            let un = |s: &str| unescape(s).map_err(|e| lines.err(e));
            let group = if f[1] == "-" { None } else { Some(un(&f[1])?) };
            attrs.push(Attribute {
                name: un(&f[0])?,
                domain: f[2..].iter().map(|v| un(v)).collect::<Result<_>>()?,
                group,
            });
        }
        let schema = AttributeSchema::new(attrs).map_err(|e| lines.err(e.to_string()))?;
        schemas.push(Arc::new(schema));
    }
    let target_schema = schemas.pop().expect("two schemas");
    let source_schema = schemas.pop().expect("two schemas");

    let mut sets = Vec::with_capacity(2);
    for (side, schema, threshold) in [(Side::Source, &source_schema, ms), (Side::Target, &target_schema, mt)] {
        let f = lines.record("granules")?;
        lines.exactly(&f, 3)?;
        if f[0] != side.to_string() {
            return Err(lines.err(format!("expected {side} granules")));
        }
        let universe: usize = lines.parse(&f[1], "universe size")?;
        let count: usize = lines.parse(&f[2], "granule count")?;
        let mut granules: Vec<Granule> = Vec::with_capacity(count);
        for _ in 0..count {
            let f = lines.record("g")?;
            lines.exactly(&f, 3)?;
            let attrs: Vec<usize> = parse_list(&lines, &f[0])?;
            let values: Vec<u32> = parse_list(&lines, &f[1])?;
            if attrs.len() != values.len() {
                return Err(lines.err("attribute and value lists differ in length"));
            }
            let intension = Intension::new(attrs.iter().copied().zip(values.iter().copied()))
                .map_err(|e| lines.err(e.to_string()))?;
            if intension.attrs() != attrs.as_slice() {
                return Err(lines.err("intension attributes not in ascending order"));
            }
            for (a, v) in intension.pairs() {
                let attr = schema.attr(a).map_err(|e| lines.err(e.to_string()))?;
                if v as usize >= attr.domain.len() {
                    return Err(lines.err(format!("value {v} outside domain of `{}`", attr.name)));
                }
            }
            let extension = BitSet::from_hex(universe, &f[2]).ok_or_else(|| lines.err("malformed extension"))?;
            if !clears(extension.count_ones(), universe, threshold) {
                return Err(lines.err("granule coverage below threshold"));
            }
            if let Some(prev) = granules.last() {
                if prev.intension() >= &intension {
                    return Err(lines.err("granules not in canonical order"));
                }
            }
            granules.push(Granule::from_parts(side, intension, extension, schema.fingerprint()));
        }
        sets.push(GranuleSet::from_parts(side, threshold, granules));
    }
    let targets = sets.pop().expect("two sets");
    let sources = sets.pop().expect("two sets");

    let f = lines.record("matrix")?;
    lines.exactly(&f, 2)?;
    let rows: usize = lines.parse(&f[0], "row count")?;
    let cols: usize = lines.parse(&f[1], "column count")?;
    if rows != sources.len() || cols != targets.len() {
        return Err(lines.err("matrix dimensions differ from granule counts"));
    }
    let mut pairs = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let line = lines.next_line()?;
        let before = pairs.len();
        if cols > 0 {
            for x in line.split('\t') {
                pairs.push(lines.parse::<u64>(x, "pair count")?);
            }
        }
        if pairs.len() - before != cols {
            return Err(lines.err(format!("expected {cols} pair counts")));
        }
    }
    let f = lines.record("end")?;
    lines.exactly(&f, 0)?;
    RuleStore::from_parts(source_schema, target_schema, sources, targets, pairs)
}

pub fn save_store(store: &RuleStore, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_store(store, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn load_store(path: &Path) -> Result<RuleStore> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_store(BufReader::new(file))
}
