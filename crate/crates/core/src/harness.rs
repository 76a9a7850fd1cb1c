//! Batch runs over a sweep, aggregation and report files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, QlkPlay};
use crate::error::{Error, Result};
use crate::game::{build_tree, GameTree, PayoffTree, PureProfile, StrategyProfile};
use crate::scenario::{expand_sweep, GameSetup, Scenario};
use crate::solvers::{solve_qlk_level1, solve_spene, Concept, SolverResult};
use crate::taxonomy::{classify_outcome, Category, OutcomeRecord, RowStatus};
use crate::utility::{evaluate_payoffs, UtilityContext};

/// Version tag written in the comment line of the per-game CSV.
pub const CSV_VERSION: &str = "rowgame-games v1";

pub const CSV_COLUMNS: [&str; 17] = [
    "game_id",
    "scenario_id",
    "concept",
    "v1_init",
    "v2_init",
    "gamma1",
    "gamma2",
    "row_holder_id",
    "symbols_agent1",
    "symbols_agent2",
    "category_agent1",
    "category_agent2",
    "deadlock",
    "fallback_used",
    "param_fingerprint",
    "row_holder_index",
    "error",
];

#[derive(Debug, Clone, PartialEq)]
pub struct GameRecord {
    pub game_id: usize,
    pub scenario_id: String,
    pub concept: Concept,
    pub speeds: [f64; 2],
    pub gammas: [f64; 2],
    pub row_holder_id: String,
    /// Index of the right-of-way holder among the two agents.
    pub holder: usize,
    /// Space-separated symbol tokens; empty when the game failed.
    pub symbols: [String; 2],
    pub categories: Option<[Category; 2]>,
    pub deadlock: bool,
    pub fallback_used: bool,
    pub param_fingerprint: String,
    pub error: Option<String>,
}

impl GameRecord {
    /// `(holder category, non-holder category)`.
    pub fn joint(&self) -> Option<(Category, Category)> {
        self.categories
            .map(|c| (c[self.holder], c[1 - self.holder]))
    }

    pub fn category(&self, role: RowStatus) -> Option<Category> {
        let c = self.categories?;
        Some(match role {
            RowStatus::Holder => c[self.holder],
            RowStatus::NonHolder => c[1 - self.holder],
        })
    }

    pub fn gamma(&self, role: RowStatus) -> f64 {
        match role {
            RowStatus::Holder => self.gammas[self.holder],
            RowStatus::NonHolder => self.gammas[1 - self.holder],
        }
    }
}

/// A built and evaluated game, ready for any solver.
#[derive(Debug, Clone)]
pub struct PreparedGame {
    pub setup: GameSetup,
    pub tree: GameTree,
    pub payoffs: PayoffTree,
}

pub fn prepare_game(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
    setup: &GameSetup,
) -> Result<PreparedGame> {
    let tree = build_tree(scenario, setup, &cfg.game, &cfg.trajectory)?;
    let ctx = UtilityContext::new(scenario, setup, &cfg.game, &cfg.utility, &cfg.trajectory);
    let payoffs = evaluate_payoffs(&tree, &ctx)?;
    Ok(PreparedGame {
        setup: *setup,
        tree,
        payoffs,
    })
}

pub fn solve(game: &PreparedGame, cfg: &ExperimentConfig, concept: Concept) -> SolverResult {
    match concept {
        Concept::Spene => solve_spene(&game.payoffs, &cfg.game),
        Concept::Qlk => solve_qlk_level1(&game.payoffs, &cfg.game),
    }
}

/// Pure play used for classification.
pub fn realized_profile(result: &SolverResult, cfg: &ExperimentConfig, seed: u64) -> PureProfile {
    match (&result.profile, cfg.solver.qlk_play) {
        (StrategyProfile::Quantal(q), QlkPlay::Sample) => {
            q.sample(&mut ChaCha8Rng::seed_from_u64(seed))
        }
        (p, _) => p.resolve(),
    }
}

fn classify(
    game: &PreparedGame,
    scenario: &Scenario,
    cfg: &ExperimentConfig,
    result: &SolverResult,
) -> Result<OutcomeRecord> {
    let profile = realized_profile(result, cfg, game.setup.seed);
    classify_outcome(&game.tree, &profile, scenario, &cfg.game, &cfg.trajectory)
}

fn record(
    scenario: &Scenario,
    setup: &GameSetup,
    concept: Concept,
    fingerprint: &str,
    outcome: Result<(OutcomeRecord, bool)>,
) -> GameRecord {
    let holder = scenario.holder();
    let mut rec = GameRecord {
        game_id: setup.index,
        scenario_id: scenario.scenario_id.clone(),
        concept,
        speeds: setup.speeds,
        gammas: setup.gammas,
        row_holder_id: scenario.agents[holder].agent_id.clone(),
        holder,
        symbols: [String::new(), String::new()],
        categories: None,
        deadlock: false,
        fallback_used: false,
        param_fingerprint: fingerprint.to_string(),
        error: None,
    };
    match outcome {
        Ok((o, fallback)) => {
            rec.symbols = [o.symbols[0].to_tokens(), o.symbols[1].to_tokens()];
            rec.categories = Some([o.labels[0].category, o.labels[1].category]);
            rec.deadlock = o.deadlock;
            rec.fallback_used = fallback;
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

/// Fingerprint of `cfg` with the solver concept set to `concept`.
pub fn batch_fingerprint(cfg: &ExperimentConfig, concept: Concept) -> String {
    let mut c = cfg.clone();
    c.solver.concept = concept;
    c.fingerprint()
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Validation(format!("cannot start worker pool: {e}")))
}

/// Runs every game of the sweep once per concept, building each game tree
/// a single time. Returns one record list per concept, in setup order.
pub fn run_batch_concepts(
    cfg: &ExperimentConfig,
    concepts: &[Concept],
    workers: usize,
) -> Result<Vec<Vec<GameRecord>>> {
    let scenario = cfg.scenario()?;
    let setups = expand_sweep(&scenario, &cfg.sweep)?;
    let fingerprints: Vec<String> = concepts
        .iter()
        .map(|&c| batch_fingerprint(cfg, c))
        .collect();
    let per_game: Vec<Vec<GameRecord>> = pool(workers)?.install(|| {
        setups
            .par_iter()
            .map(|setup| {
                let game = prepare_game(cfg, &scenario, setup);
                concepts
                    .iter()
                    .zip(&fingerprints)
                    .map(|(&concept, fp)| {
                        let outcome = match &game {
                            Ok(g) => {
                                let result = solve(g, cfg, concept);
                                classify(g, &scenario, cfg, &result)
                                    .map(|o| (o, result.diagnostics.fallback_used()))
                            }
                            Err(e) => Err(Error::Validation(e.to_string())),
                        };
                        record(&scenario, setup, concept, fp, outcome)
                    })
                    .collect()
            })
            .collect()
    });
    let mut out: Vec<Vec<GameRecord>> = concepts
        .iter()
        .map(|_| Vec::with_capacity(setups.len()))
        .collect();
    for game in per_game {
        for (k, rec) in game.into_iter().enumerate() {
            out[k].push(rec);
        }
    }
    Ok(out)
}

pub fn run_batch(
    cfg: &ExperimentConfig,
    concept: Concept,
    workers: usize,
) -> Result<Vec<GameRecord>> {
    Ok(run_batch_concepts(cfg, &[concept], workers)?.remove(0))
}

/// Joint `(holder, non-holder)` category counts.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionTable {
    pub total: usize,
    pub counts: BTreeMap<(Category, Category), usize>,
}

impl DistributionTable {
    pub fn fraction(&self, holder: Category, non_holder: Category) -> f64 {
        self.counts.get(&(holder, non_holder)).copied().unwrap_or(0) as f64 / self.total as f64
    }

    /// Cells by descending count, ties in category order.
    pub fn ranked(&self) -> Vec<((Category, Category), usize)> {
        let mut v: Vec<_> = self.counts.iter().map(|(&k, &c)| (k, c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    }

    pub fn collapse(&self) -> DistributionTable {
        let mut counts = BTreeMap::new();
        for (&(h, n), &c) in &self.counts {
            *counts.entry((h.collapse(), n.collapse())).or_insert(0) += c;
        }
        DistributionTable {
            total: self.total,
            counts,
        }
    }
}

/// Counts over the records that completed; failed games are left out.
pub fn aggregate_distribution(records: &[GameRecord]) -> Result<DistributionTable> {
    let mut counts = BTreeMap::new();
    let mut total = 0;
    for (h, n) in records.iter().filter_map(GameRecord::joint) {
        *counts.entry((h, n)).or_insert(0) += 1;
        total += 1;
    }
    if total == 0 {
        return Err(Error::EmptyRecords);
    }
    Ok(DistributionTable { total, counts })
}

/// For each γ of the agent in `role`, the fraction of that γ's games the
/// filter accepts. Values of γ with no completed game are absent.
pub fn type_conditional(
    records: &[GameRecord],
    filter: impl Fn(&GameRecord) -> bool,
    role: RowStatus,
) -> Result<Vec<(f64, f64)>> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let mut cells: Vec<(f64, usize, usize)> = Vec::new();
    for r in records.iter().filter(|r| r.categories.is_some()) {
        let g = r.gamma(role);
        let hit = filter(r) as usize;
        match cells.iter_mut().find(|c| c.0 == g) {
            Some(c) => {
                c.1 += hit;
                c.2 += 1;
            }
            None => cells.push((g, hit, 1)),
        }
    }
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(cells
        .into_iter()
        .map(|(g, hit, n)| (g, hit as f64 / n as f64))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub holder: Category,
    pub non_holder: Category,
    pub count: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaFraction {
    pub gamma: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub version: &'static str,
    pub scenario_id: String,
    pub concept: String,
    pub param_fingerprint: String,
    pub records: usize,
    pub failed: usize,
    pub fallback_rate: f64,
    pub deadlock_rate: f64,
    pub distribution: Vec<Cell>,
    pub distribution_collapsed: Vec<Cell>,
    /// role → collapsed category → fraction per γ of that role.
    pub type_conditional: BTreeMap<String, BTreeMap<String, Vec<GammaFraction>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Value>,
}

fn cells(t: &DistributionTable) -> Vec<Cell> {
    t.counts
        .iter()
        .map(|(&(h, n), &c)| Cell {
            holder: h,
            non_holder: n,
            count: c,
            fraction: c as f64 / t.total as f64,
        })
        .collect()
}

const ROLE_CATEGORIES: [(RowStatus, [Category; 4]); 2] = [
    (
        RowStatus::Holder,
        [Category::UA, Category::RA, Category::UR, Category::RR],
    ),
    (
        RowStatus::NonHolder,
        [Category::UA, Category::RA, Category::UV, Category::RV],
    ),
];

/// Aggregates a record list. `params` is echoed verbatim when given.
pub fn summarize(records: &[GameRecord], params: Option<&ExperimentConfig>) -> Result<Summary> {
    let table = aggregate_distribution(records)?;
    let first = &records[0];
    let done = table.total as f64;
    let mut tc = BTreeMap::new();
    for (role, cats) in ROLE_CATEGORIES {
        let mut by_cat = BTreeMap::new();
        for cat in cats {
            let series = type_conditional(
                records,
                |r| r.category(role).map(Category::collapse) == Some(cat),
                role,
            )?;
            by_cat.insert(
                cat.to_string(),
                series
                    .into_iter()
                    .map(|(gamma, fraction)| GammaFraction { gamma, fraction })
                    .collect(),
            );
        }
        tc.insert(role.as_str().to_string(), by_cat);
    }
    let params = params.map(serde_json::to_value).transpose()?;
    Ok(Summary {
        version: CSV_VERSION,
        scenario_id: first.scenario_id.clone(),
        concept: first.concept.to_string(),
        param_fingerprint: first.param_fingerprint.clone(),
        records: records.len(),
        failed: records.len() - table.total,
        fallback_rate: records.iter().filter(|r| r.fallback_used).count() as f64
            / records.len() as f64,
        deadlock_rate: records
            .iter()
            .filter(|r| r.categories.is_some() && r.deadlock)
            .count() as f64
            / done,
        distribution: cells(&table),
        distribution_collapsed: cells(&table.collapse()),
        type_conditional: tc,
        params,
    })
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Per-game CSV: a version comment line, the header, one row per record.
pub fn records_to_csv(records: &[GameRecord]) -> Result<Vec<u8>> {
    let mut buf = format!("# {CSV_VERSION}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(CSV_COLUMNS)?;
        for r in records {
            let cat = |i: usize| r.categories.map(|c| c[i].to_string()).unwrap_or_default();
            w.write_record([
                r.game_id.to_string(),
                r.scenario_id.clone(),
                r.concept.to_string(),
                fmt_f64(r.speeds[0]),
                fmt_f64(r.speeds[1]),
                fmt_f64(r.gammas[0]),
                fmt_f64(r.gammas[1]),
                r.row_holder_id.clone(),
                r.symbols[0].clone(),
                r.symbols[1].clone(),
                cat(0),
                cat(1),
                r.deadlock.to_string(),
                r.fallback_used.to_string(),
                r.param_fingerprint.clone(),
                (r.holder + 1).to_string(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
    }
    Ok(buf)
}

fn field<T: std::str::FromStr>(row: &csv::StringRecord, i: usize, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = row.get(i).ok_or_else(|| Error::MalformedRow {
        row: line,
        message: format!("missing column {}", CSV_COLUMNS[i]),
    })?;
    raw.parse().map_err(|e: T::Err| Error::MalformedRow {
        row: line,
        message: format!("{}: {e}", CSV_COLUMNS[i]),
    })
}

/// Reads records written by [`records_to_csv`].
pub fn records_from_csv(mut input: impl Read) -> Result<Vec<GameRecord>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_COLUMNS {
        return Err(Error::MalformedRow {
            row: 0,
            message: "unexpected header".into(),
        });
    }
    let mut out = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let row = row?;
        let line = k + 1;
        let holder: usize = field(&row, 15, line)?;
        if !(1..=2).contains(&holder) {
            return Err(Error::MalformedRow {
                row: line,
                message: format!("row_holder_index {holder} is not 1 or 2"),
            });
        }
        let holder = holder - 1;
        let c1: String = field(&row, 10, line)?;
        let c2: String = field(&row, 11, line)?;
        let categories = if c1.is_empty() && c2.is_empty() {
            None
        } else {
            let parse = |s: &str| {
                s.parse::<Category>().map_err(|e| Error::MalformedRow {
                    row: line,
                    message: e.to_string(),
                })
            };
            Some([parse(&c1)?, parse(&c2)?])
        };
        let err: String = field(&row, 16, line)?;
        let concept: String = field(&row, 2, line)?;
        out.push(GameRecord {
            game_id: field(&row, 0, line)?,
            scenario_id: field(&row, 1, line)?,
            concept: concept.parse().map_err(|e: String| Error::MalformedRow {
                row: line,
                message: e,
            })?,
            speeds: [field(&row, 3, line)?, field(&row, 4, line)?],
            gammas: [field(&row, 5, line)?, field(&row, 6, line)?],
            row_holder_id: field(&row, 7, line)?,
            holder,
            symbols: [field(&row, 8, line)?, field(&row, 9, line)?],
            categories,
            deadlock: field(&row, 12, line)?,
            fallback_used: field(&row, 13, line)?,
            param_fingerprint: field(&row, 14, line)?,
            error: (!err.is_empty()).then_some(err),
        });
    }
    Ok(out)
}

/// Long-format rows `panel,series,x,value` for bar charts.
pub fn plot_csv(summary: &Summary) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["panel", "series", "x", "value"])?;
        for (panel, table) in [
            ("joint", &summary.distribution),
            ("joint_collapsed", &summary.distribution_collapsed),
        ] {
            for c in table {
                w.write_record([
                    panel,
                    c.holder.as_str(),
                    c.non_holder.as_str(),
                    &fmt_f64(c.fraction),
                ])?;
            }
        }
        for (role, by_cat) in &summary.type_conditional {
            let panel = format!("type_{role}");
            for (cat, series) in by_cat {
                for gf in series {
                    w.write_record([
                        panel.as_str(),
                        cat,
                        &fmt_f64(gf.gamma),
                        &fmt_f64(gf.fraction),
                    ])?;
                }
            }
        }
        w.flush()?;
    }
    Ok(buf)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub games: PathBuf,
    pub summary: PathBuf,
    pub plot: PathBuf,
}

/// Writes `games.csv`, `summary.json` and `plot.csv` into `dir`.
pub fn emit_report(records: &[GameRecord], summary: &Summary, dir: &Path) -> Result<ReportFiles> {
    fs::create_dir_all(dir)?;
    let files = ReportFiles {
        games: dir.join("games.csv"),
        summary: dir.join("summary.json"),
        plot: dir.join("plot.csv"),
    };
    fs::write(&files.games, records_to_csv(records)?)?;
    let mut json = serde_json::to_string_pretty(summary)?;
    json.push('\n');
    fs::write(&files.summary, json)?;
    fs::write(&files.plot, plot_csv(summary)?)?;
    Ok(files)
}
