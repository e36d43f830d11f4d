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

//! Loaders that turn raw files into an [`Mmer`](crate::mmer::Mmer).

mod csv_mmer;
mod movielens;

pub use csv_mmer::{load_csv_mmer, read_profiles, write_csv_mmer};
pub use movielens::{
    default_age_bins, load_movielens, release_bin, AgeBin, GenreMode, LoadReport, MovieLensConfig, GENRES,
    RELEASE_DECADES,
};
