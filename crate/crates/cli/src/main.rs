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


//! `grarule` command-line tool.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use grarule::datasets::{load_csv_mmer, load_movielens, read_profiles, MovieLensConfig};
use grarule::experiments::{evaluate, sweep, write_per_rank_csv, write_report_csv, Scenario, ScenarioKind, SweepCell};
use grarule::granulation::validate_threshold;
use grarule::recommend::write_recommendations_csv;
use grarule::rules::DEFAULT_MAX_TARGET_ATTRS;
use grarule::store_io::{load_store, save_store};
use grarule::{enumerate_granules, recommend, Mmer, RuleStore, Side, TrainConfig};

#[derive(Parser)]
#[command(name = "grarule", version, about = "Granular association rules for cold-start recommendation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a rule store from a dataset.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        thresholds: Thresholds,
        #[command(flatten)]
        knobs: Knobs,
        /// Where to write the rule store.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Recommend target granules to the users of a profile CSV.
    Recommend {
        #[arg(long)]
        store: PathBuf,
        /// CSV with an `id` column and one column per user attribute.
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Output CSV (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the repeats of one scenario at one setting.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        /// Source coverage threshold; not needed for `--scenario random`.
        #[arg(long)]
        ms: Option<f64>,
        /// Target coverage threshold; not needed for `--scenario random`.
        #[arg(long)]
        mt: Option<f64>,
        #[command(flatten)]
        knobs: Knobs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Report CSV (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Evaluate a grid of thresholds and k values.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        knobs: Knobs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.02,0.05,0.1,0.15,0.2")]
        ms_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.02,0.05,0.1,0.15,0.2")]
        mt_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        k_grid: Vec<usize>,
        /// Report CSV (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Per-rank accuracy CSV.
        #[arg(long)]
        per_rank_output: Option<PathBuf>,
    },
    /// Print granule counts and store dimensions.
    Inspect {
        /// Summarise a saved store instead of enumerating from data.
        #[arg(long, conflicts_with_all = ["movielens", "users"])]
        store: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        ms: Option<f64>,
        #[arg(long)]
        mt: Option<f64>,
        #[command(flatten)]
        knobs: Knobs,
    },
}

#[derive(Args)]
struct DataArgs {
    /// MovieLens 100k directory (u.user, u.item, u.data).
    #[arg(long, conflicts_with_all = ["users", "items", "relation"])]
    movielens: Option<PathBuf>,
    /// Users CSV: `id,<attribute>...`.
    #[arg(long, requires_all = ["items", "relation"])]
    users: Option<PathBuf>,
    /// Items CSV: `id,<attribute>...`.
    #[arg(long, requires_all = ["users", "relation"])]
    items: Option<PathBuf>,
    /// Relation CSV: `user,item` pairs.
    #[arg(long, requires_all = ["users", "items"])]
    relation: Option<PathBuf>,
}

#[derive(Args)]
struct Thresholds {
    /// Source (user) coverage threshold.
    #[arg(long)]
    ms: f64,
    /// Target (item) coverage threshold.
    #[arg(long)]
    mt: f64,
}

#[derive(Args)]
struct Knobs {
    /// Cap on attributes per source intension.
    #[arg(long)]
    source_max_attrs: Option<usize>,
    /// Cap on attributes per target intension; 0 removes the cap.
    #[arg(long, default_value_t = DEFAULT_MAX_TARGET_ATTRS)]
    target_max_attrs: usize,
    /// Allow `flag=0` conditions on multi-valued group attributes.
    #[arg(long)]
    allow_absence: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "new-user")]
    scenario: ScenarioKind,
    /// Training fraction of the split side(s).
    #[arg(long, default_value_t = 0.6)]
    fraction: f64,
    #[arg(long, default_value_t = 20)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<grarule::Error> for Failure {
    fn from(e: grarule::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn io_failure(path: Option<&Path>, e: io::Error) -> Failure {
    match path {
        Some(p) => Failure::Data(format!("{}: {e}", p.display())),
        None => Failure::Data(e.to_string()),
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

impl Knobs {
    fn config(&self, ms: f64, mt: f64) -> TrainConfig {
        let mut cfg = TrainConfig::new(ms, mt);
        cfg.source = cfg.source.with_max_attrs(self.source_max_attrs).with_allow_absence(self.allow_absence);
        let cap = (self.target_max_attrs > 0).then_some(self.target_max_attrs);
        cfg.target = cfg.target.with_max_attrs(cap).with_allow_absence(self.allow_absence);
        cfg
    }

    fn check(&self) -> Result<(), Failure> {
        if self.source_max_attrs == Some(0) {
            return Err(usage("--source-max-attrs must be at least 1"));
        }
        Ok(())
    }
}

impl DataArgs {
    fn check(&self) -> Result<(), Failure> {
        if self.movielens.is_none() && self.users.is_none() {
            return Err(usage("a data source is required: --movielens DIR or --users/--items/--relation"));
        }
        Ok(())
    }

    fn load(&self) -> Result<Mmer, Failure> {
        if let Some(dir) = &self.movielens {
            let (es, report) = load_movielens(&MovieLensConfig::new(dir))?;
            if !report.undated_movies.is_empty() {
                eprintln!(
                    "note: {} movie(s) without a release date placed in the latest decade: {}",
                    report.undated_movies.len(),
                    report.undated_movies.join(", ")
                );
            }
            return Ok(es);
        }
        match (&self.users, &self.items, &self.relation) {
            (Some(u), Some(i), Some(r)) => Ok(load_csv_mmer(u, i, r)?),
            _ => Err(usage("--users, --items and --relation go together")),
        }
    }
}

impl RunArgs {
    fn scenario(&self) -> Result<Scenario, Failure> {
        if self.repeats == 0 {
            return Err(usage("--repeats must be at least 1"));
        }
        if !(self.fraction > 0.0 && self.fraction < 1.0) {
            return Err(usage(format!("--fraction must be in (0, 1), got {}", self.fraction)));
        }
        Ok(Scenario::new(self.scenario)
            .with_fraction(self.fraction)
            .with_repeats(self.repeats)
            .with_seed(self.seed))
    }
}

fn check_threshold(flag: &str, t: f64) -> Result<(), Failure> {
    validate_threshold(t).map_err(|_| usage(format!("{flag} must be in (0, 1], got {t}")))
}

fn check_k(flag: &str, k: usize) -> Result<(), Failure> {
    if k == 0 {
        return Err(usage(format!("{flag} must be at least 1")));
    }
    Ok(())
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_failure(Some(p), e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn finish(mut w: Box<dyn Write>, path: Option<&Path>) -> Result<(), Failure> {
    w.flush().map_err(|e| io_failure(path, e))
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into())
}

fn print_store(store: &RuleStore) {
    let (s, t) = store.dims();
    let (mut nonzero, mut max) = (0usize, 0.0f64);
    for r in store.rules() {
        let c = r.confidence();
        if c > 0.0 {
            nonzero += 1;
        }
        max = max.max(c);
    }
    println!("ms\t{}", store.ms());
    println!("mt\t{}", store.mt());
    println!("source_granules\t{s}");
    println!("target_granules\t{t}");
    println!("dimensions\t{s}x{t}");
    println!("nonzero_rules\t{nonzero}");
    println!("max_confidence\t{max}");
}

fn summary(cells: &[SweepCell]) -> String {
    let mut out = String::new();
    for c in cells {
        let line = match &c.result {
            Ok(r) => format!(
                "ms={} mt={} k={} mean_accuracy={} std={}\n",
                c.ms,
                c.mt,
                c.k,
                fmt_opt(r.mean_accuracy()),
                fmt_opt(r.std_accuracy())
            ),
            Err(e) => format!("ms={} mt={} k={} error: {e}\n", c.ms, c.mt, c.k),
        };
        out.push_str(&line);
    }
    out
}

// The summary goes to stdout when the report has its own file.
fn report_summary(text: &str, to_file: bool) {
    if to_file {
        print!("{text}");
    } else {
        eprint!("{text}");
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Train {
            data,
            thresholds,
            knobs,
            output,
        } => {
            check_threshold("--ms", thresholds.ms)?;
            check_threshold("--mt", thresholds.mt)?;
            knobs.check()?;
            data.check()?;
            let es = data.load()?;
            let store = grarule::train(&es, &knobs.config(thresholds.ms, thresholds.mt))?;
            save_store(&store, &output)?;
            let (s, t) = store.dims();
            eprintln!("wrote {} ({s} source x {t} target granules)", output.display());
        }
        Command::Recommend {
            store,
            profiles,
            k,
            output,
        } => {
            check_k("--k", k)?;
            let store = load_store(&store)?;
            let (ids, profiles) = read_profiles(&profiles, store.source_schema())?;
            let recs = profiles
                .iter()
                .enumerate()
                .map(|(u, p)| recommend(&store, p, u, k))
                .collect::<grarule::Result<Vec<_>>>()?;
            let out = output.as_deref();
            let mut w = sink(out)?;
            write_recommendations_csv(&mut w, &recs, &ids, store.target_schema()).map_err(|e| io_failure(out, e))?;
            finish(w, out)?;
        }
        Command::Evaluate {
            data,
            ms,
            mt,
            knobs,
            run,
            k,
            output,
        } => {
            let random = run.scenario == ScenarioKind::Random;
            let (ms, mt) = match (ms, mt) {
                (Some(ms), Some(mt)) => (ms, mt),
                // thresholds are unused by the random baseline
                (None, None) if random => (1.0, 1.0),
                _ => return Err(usage("evaluate needs --ms and --mt")),
            };
            check_threshold("--ms", ms)?;
            check_threshold("--mt", mt)?;
            check_k("--k", k)?;
            knobs.check()?;
            let scenario = run.scenario()?;
            data.check()?;
            let es = data.load()?;
            let report = evaluate(&es, &scenario, &knobs.config(ms, mt), k)?;
            let cells = [SweepCell {
                ms: report.ms,
                mt: report.mt,
                k,
                result: Ok(report),
            }];
            let out = output.as_deref();
            let mut w = sink(out)?;
            write_report_csv(&mut w, scenario.kind, &cells).map_err(|e| io_failure(out, e))?;
            finish(w, out)?;
            report_summary(&summary(&cells), out.is_some());
        }
        Command::Sweep {
            data,
            knobs,
            run,
            ms_grid,
            mt_grid,
            k_grid,
            output,
            per_rank_output,
        } => {
            for &t in &ms_grid {
                check_threshold("--ms-grid", t)?;
            }
            for &t in &mt_grid {
                check_threshold("--mt-grid", t)?;
            }
            for &k in &k_grid {
                check_k("--k-grid", k)?;
            }
            knobs.check()?;
            let scenario = run.scenario()?;
            data.check()?;
            let es = data.load()?;
            let lo = |g: &[f64]| g.iter().copied().fold(f64::INFINITY, f64::min);
            let base = knobs.config(lo(&ms_grid), lo(&mt_grid));
            let cells = sweep(&es, &scenario, &base, &ms_grid, &mt_grid, &k_grid)?;
            let out = output.as_deref();
            let mut w = sink(out)?;
            write_report_csv(&mut w, scenario.kind, &cells).map_err(|e| io_failure(out, e))?;
            finish(w, out)?;
            if let Some(p) = per_rank_output.as_deref() {
                let mut w = sink(Some(p))?;
                write_per_rank_csv(&mut w, scenario.kind, &cells).map_err(|e| io_failure(Some(p), e))?;
                finish(w, Some(p))?;
            }
            report_summary(&summary(&cells), out.is_some());
        }
        Command::Inspect {
            store,
            data,
            ms,
            mt,
            knobs,
        } => {
            if let Some(path) = store {
                print_store(&load_store(&path)?);
                return Ok(());
            }
            let (Some(ms), Some(mt)) = (ms, mt) else {
                return Err(usage("inspect needs --store, or a data source with --ms and --mt"));
            };
            check_threshold("--ms", ms)?;
            check_threshold("--mt", mt)?;
            knobs.check()?;
            data.check()?;
            let es = data.load()?;
            let cfg = knobs.config(ms, mt);
            let sg = enumerate_granules(&es.users, Side::Source, &cfg.source)?;
            let tg = enumerate_granules(&es.items, Side::Target, &cfg.target)?;
            println!("users\t{}", es.users.len());
            println!("items\t{}", es.items.len());
            println!("pairs\t{}", es.relation.n_pairs());
            println!("density\t{}", es.relation.density());
            println!("source_granules\t{}", sg.len());
            println!("target_granules\t{}", tg.len());
            println!("dimensions\t{}x{}", sg.len(), tg.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
