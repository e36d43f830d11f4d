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

use std::path::PathBuf;

use thiserror::Error;

use crate::mmer::Side;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("attribute index {index} out of range (schema has {count} attributes)")]
    AttributeOutOfRange { index: usize, count: usize },

    #[error("value index {value} outside the domain of attribute `{attr}` ({domain_size} values)")]
    ValueOutOfDomain {
        attr: String,
        value: u32,
        domain_size: usize,
    },

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("row {row} has {found} cells, expected {expected}")]
    RowShape {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("information system must contain at least one object")]
    EmptyUniverse,

    #[error("bitset width {found} does not match universe size {expected}")]
    WidthMismatch { expected: usize, found: usize },

    #[error("granules are on different sides")]
    SideMismatch,

    #[error("granule or profile was built over a different attribute schema")]
    SchemaMismatch,

    #[error("granule must constrain at least one attribute")]
    EmptyIntension,

    #[error("coverage threshold must satisfy 0 < t <= 1, got {0}")]
    InvalidThreshold(f64),

    #[error("no {side} granules at threshold {threshold}")]
    NoGranules { side: Side, threshold: f64 },

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("k must be at least 1")]
    InvalidK,

    #[error("train fraction {fraction} leaves an empty {side} partition of {total} objects")]
    EmptySplit {
        fraction: f64,
        side: &'static str,
        total: usize,
    },

    #[error("scenario {0} does not split the data")]
    NotASplit(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("rule store: {0}")]
    StoreFormat(String),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
