//! Empirical stability boundary: the smallest exploration rate at which every
//! initial condition converges, located by bisection on a grid.

use std::collections::BTreeMap;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::config::{BoundaryConfig, Protocol};
use super::output::{ensure_dir, num, write_text, CsvOutput};
use super::run::seeded_initial;
use super::svg::{line_plot, Series};
use super::{HarnessError, RunContext};
use crate::catalog::NetworkKind;
use crate::error::{Error, Result};
use crate::game::{ExplorationRates, JointStrategy, NetworkGame};
use crate::spectral::stability_threshold;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    /// A failing and a passing grid point one step apart were found.
    Resolved,
    /// Even the smallest rate tried passed; the boundary is at or below it.
    AllPass,
    /// Even the largest rate tried failed.
    AllFail,
}

/// Outcome of [`grid_bisect`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSearch {
    pub status: SearchStatus,
    /// Smallest passing grid point found.
    pub lowest_pass: Option<f64>,
    /// Largest failing grid point found.
    pub highest_fail: Option<f64>,
    /// Every probe in evaluation order.
    pub probes: Vec<(f64, bool)>,
}

/// Grid of multiples of `resolution`, rendered exactly when `1 / resolution` is an integer.
#[derive(Debug, Clone, Copy)]
struct Grid {
    resolution: f64,
    per_unit: Option<f64>,
}

impl Grid {
    fn new(resolution: f64) -> Self {
        let inv = 1.0 / resolution;
        let per_unit = ((inv - inv.round()).abs() < 1e-9 * inv).then(|| inv.round());
        Self {
            resolution,
            per_unit,
        }
    }

    fn value(&self, i: u64) -> f64 {
        match self.per_unit {
            Some(p) => i as f64 / p,
            None => i as f64 * self.resolution,
        }
    }
}

/// Bisection for the smallest grid point where `passes` holds, assuming `passes` is
/// monotone in the rate. The bracket `[lo, hi]` is snapped outward to the grid. If it
/// does not straddle the boundary, it is widened once (`hi` times 4 or `lo` divided
/// by 4) before giving up.
pub fn grid_bisect<F>(lo: f64, hi: f64, resolution: f64, mut passes: F) -> Result<GridSearch>
where
    F: FnMut(f64) -> Result<bool>,
{
    if !(resolution > 0.0 && lo > 0.0 && hi > lo) {
        return Err(Error::InvalidParameter(format!(
            "bisection needs 0 < lo < hi and a positive resolution, got [{lo}, {hi}] at {resolution}"
        )));
    }
    let grid = Grid::new(resolution);
    let mut seen: BTreeMap<u64, bool> = BTreeMap::new();
    let mut probes = Vec::new();
    let mut probe = |i: u64, probes: &mut Vec<(f64, bool)>| -> Result<bool> {
        if let Some(&p) = seen.get(&i) {
            return Ok(p);
        }
        let p = passes(grid.value(i))?;
        seen.insert(i, p);
        probes.push((grid.value(i), p));
        Ok(p)
    };

    let mut lo_i = ((lo / resolution + 1e-9).floor() as u64).max(1);
    let mut hi_i = ((hi / resolution - 1e-9).ceil() as u64).max(lo_i + 1);
    let mut status = None;
    for attempt in 0..2 {
        if !probe(hi_i, &mut probes)? {
            status = Some(SearchStatus::AllFail);
            if attempt == 0 {
                lo_i = hi_i;
                hi_i *= 4;
            }
            continue;
        }
        if probe(lo_i, &mut probes)? {
            status = Some(SearchStatus::AllPass);
            if attempt == 0 && lo_i > 1 {
                hi_i = lo_i;
                lo_i = (lo_i / 4).max(1);
                continue;
            }
            break;
        }
        while hi_i - lo_i > 1 {
            let mid = lo_i + (hi_i - lo_i) / 2;
            if probe(mid, &mut probes)? {
                hi_i = mid;
            } else {
                lo_i = mid;
            }
        }
        status = Some(SearchStatus::Resolved);
        break;
    }
    let status = status.expect("at least one attempt runs");
    let lowest_pass = seen.iter().find(|(_, &p)| p).map(|(&i, _)| grid.value(i));
    let highest_fail = seen
        .iter()
        .rev()
        .find(|(_, &p)| !p)
        .map(|(&i, _)| grid.value(i));
    Ok(GridSearch {
        status,
        lowest_pass,
        highest_fail,
        probes,
    })
}

/// One trajectory of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub t: f64,
    pub init: usize,
    pub converged: bool,
    /// `None` when the trajectory left the finite range.
    pub statistic: Option<f64>,
}

/// Empirical and theoretical boundary for one `(network, N)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryRow {
    pub network: NetworkKind,
    pub n: usize,
    pub status: SearchStatus,
    /// Smallest passing rate when resolved.
    pub empirical_boundary: Option<f64>,
    pub highest_fail: Option<f64>,
    pub theoretical_threshold: f64,
    pub delta_s: f64,
    pub g_inf_norm: f64,
    pub g_two_norm: f64,
    pub runs: Vec<RunRecord>,
}

impl BoundaryRow {
    /// The empirical boundary lies at or below the certified threshold, up to one grid step.
    pub fn within_certificate(&self, resolution: f64) -> Option<bool> {
        self.empirical_boundary
            .map(|b| b <= self.theoretical_threshold + resolution + 1e-12)
    }
}

/// A rate passes when every start converges. Starts run in order and the first
/// failure ends the probe.
fn probe_rate(
    game: &NetworkGame,
    protocol: &Protocol,
    starts: &[JointStrategy],
    t: f64,
    runs: &mut Vec<RunRecord>,
) -> Result<bool> {
    let rates = ExplorationRates::uniform(t, game.num_agents())?;
    for (i, x0) in starts.iter().enumerate() {
        let (converged, statistic) = match protocol.run(game, &rates, x0, 1, Some(protocol.window))
        {
            Ok(rec) => (rec.converged, Some(rec.per_component_relative_range)),
            Err(Error::Diverged { step }) => {
                warn!("trajectory diverged at step {step} (T = {t}, init {i})");
                (false, None)
            }
            Err(e) => return Err(e),
        };
        runs.push(RunRecord {
            t,
            init: i,
            converged,
            statistic,
        });
        if !converged {
            return Ok(false);
        }
    }
    Ok(true)
}

fn network_id(kind: NetworkKind) -> u64 {
    match kind {
        NetworkKind::Ring => 0,
        NetworkKind::Star => 1,
        NetworkKind::Full => 2,
    }
}

/// Sweeps every `(network, N)` pair and writes `boundary.csv`, `runs.csv` and
/// `boundary.svg`.
pub fn boundary(
    cfg: &BoundaryConfig,
    ctx: &RunContext,
) -> std::result::Result<Vec<BoundaryRow>, HarnessError> {
    cfg.validate()?;
    let protocol = cfg.protocol.resolve(Protocol::SWEEP)?;
    let mut pairs = Vec::new();
    for &kind in &cfg.networks {
        for &n in &cfg.agent_counts {
            let spec = cfg
                .game
                .with_network(kind, n)
                .map_err(HarnessError::config)?;
            let game = spec.build().map_err(HarnessError::config)?;
            pairs.push((kind, n, game));
        }
    }
    ensure_dir(&ctx.out)?;
    let meta = ctx.metadata("boundary", json!({ "config": cfg, "protocol": protocol }));

    info!("boundary sweep over {} (network, N) pairs", pairs.len());
    let rows: Vec<BoundaryRow> = pairs
        .par_iter()
        .map(|(kind, n, game)| {
            let report = stability_threshold(game)?;
            let starts: Vec<JointStrategy> = (0..cfg.inits)
                .map(|i| {
                    seeded_initial(
                        ctx.seed,
                        &[network_id(*kind), *n as u64],
                        i,
                        game.action_counts(),
                    )
                })
                .collect();
            let [lo, hi] = cfg
                .bracket
                .unwrap_or([cfg.resolution, 1.25 * report.threshold + 0.05]);
            let mut runs = Vec::new();
            let search = grid_bisect(lo, hi.max(lo + cfg.resolution), cfg.resolution, |t| {
                probe_rate(game, &protocol, &starts, t, &mut runs)
            })?;
            info!(
                "{kind} N={n}: {:?} at {:?}",
                search.status, search.lowest_pass
            );
            Ok(BoundaryRow {
                network: *kind,
                n: *n,
                status: search.status,
                empirical_boundary: match search.status {
                    SearchStatus::Resolved => search.lowest_pass,
                    _ => None,
                },
                highest_fail: search.highest_fail,
                theoretical_threshold: report.threshold,
                delta_s: report.delta_s,
                g_inf_norm: report.g_inf_norm,
                g_two_norm: report.g_two_norm,
                runs,
            })
        })
        .collect::<Result<_>>()
        .map_err(HarnessError::runtime)?;

    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    let mut csv = CsvOutput::create(
        ctx.out.join("boundary.csv"),
        &meta,
        &[
            "network",
            "n",
            "status",
            "empirical_boundary",
            "highest_fail",
            "theoretical_threshold",
            "within_certificate",
            "delta_s",
            "g_inf_norm",
            "g_two_norm",
        ],
    )?;
    for r in &rows {
        let status = serde_json::to_value(r.status).expect("status serializes");
        csv.row([
            r.network.to_string(),
            r.n.to_string(),
            status.as_str().unwrap_or_default().to_owned(),
            opt(r.empirical_boundary),
            opt(r.highest_fail),
            num(r.theoretical_threshold),
            r.within_certificate(cfg.resolution)
                .map(|b| b.to_string())
                .unwrap_or_default(),
            num(r.delta_s),
            num(r.g_inf_norm),
            num(r.g_two_norm),
        ])?;
    }
    csv.finish()?;

    let mut csv = CsvOutput::create(
        ctx.out.join("runs.csv"),
        &meta,
        &["network", "n", "T", "init", "converged", "relative_range"],
    )?;
    for r in &rows {
        for run in &r.runs {
            csv.row([
                r.network.to_string(),
                r.n.to_string(),
                num(run.t),
                run.init.to_string(),
                run.converged.to_string(),
                opt(run.statistic),
            ])?;
        }
    }
    csv.finish()?;

    let mut series = Vec::new();
    for &kind in &cfg.networks {
        let of_kind: Vec<&BoundaryRow> = rows.iter().filter(|r| r.network == kind).collect();
        series.push(Series {
            label: format!("{kind} empirical"),
            points: of_kind
                .iter()
                .map(|r| (r.n as f64, r.empirical_boundary.unwrap_or(f64::NAN)))
                .collect(),
            dashed: false,
            markers: true,
        });
        series.push(Series {
            label: format!("{kind} threshold"),
            points: of_kind
                .iter()
                .map(|r| (r.n as f64, r.theoretical_threshold))
                .collect(),
            dashed: true,
            markers: false,
        });
    }
    write_text(
        &ctx.out.join("boundary.svg"),
        &line_plot(
            &format!("{}: stability boundary", cfg.game.name()),
            "number of agents N",
            "exploration rate T",
            &series,
            &meta.comment_lines(),
        ),
    )?;
    Ok(rows)
}
