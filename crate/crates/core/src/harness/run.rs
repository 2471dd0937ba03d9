//! Single-game subcommands: stability report, trajectories and QRE.

use log::info;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{AnalyzeConfig, Protocol, QreRunConfig, SimulateConfig};
use super::output::{ensure_dir, num, write_json, write_text, CsvOutput};
use super::svg::{line_plot, Series};
use super::{build_game, initial_strategy, HarnessError, RunContext};
use crate::dynamics::{solve_qre, QreSolution, TrajectoryRecord};
use crate::game::{JointStrategy, INTERIOR_FLOOR};
use crate::sampling::{random_joint_strategy, stream_id, stream_rng};
use crate::spectral::stability_threshold;

/// Stability report as JSON, with run metadata under `"metadata"`.
pub fn analyze(cfg: &AnalyzeConfig, ctx: &RunContext) -> Result<Value, HarnessError> {
    let game = build_game(&cfg.game)?;
    let report = stability_threshold(&game).map_err(HarnessError::runtime)?;
    let mut out = json!(report);
    out["metadata"] = ctx.metadata("analyze", json!(cfg)).to_json();
    Ok(out)
}

/// Initial condition `index` of a seeded family; identical across exploration rates.
pub(crate) fn seeded_initial(
    seed: u64,
    family: &[u64],
    index: usize,
    counts: &[usize],
) -> JointStrategy {
    let mut key = family.to_vec();
    key.push(index as u64);
    random_joint_strategy(
        &mut stream_rng(seed, stream_id(&key)),
        counts,
        INTERIOR_FLOOR,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub init: usize,
    pub converged: bool,
    pub relative_range: f64,
    pub final_state: JointStrategy,
}

const MAX_PLOT_POINTS: usize = 2_000;

fn thinned<T: Copy>(v: &[T]) -> impl Iterator<Item = T> + '_ {
    let step = v.len().div_ceil(MAX_PLOT_POINTS).max(1);
    v.iter()
        .copied()
        .step_by(step)
        .chain(v.last().copied().filter(|_| (v.len() - 1) % step != 0))
}

/// Runs the configured dynamics from each initial condition and writes
/// `trajectory_<init>.csv`, `summary.csv` and SVG previews.
pub fn simulate(
    cfg: &SimulateConfig,
    ctx: &RunContext,
) -> Result<Vec<TrajectorySummary>, HarnessError> {
    let game = build_game(&cfg.game)?;
    let rates = cfg.rates.resolve(game.num_agents())?;
    let protocol = cfg.protocol.resolve(Protocol::TRAJECTORY)?;
    protocol
        .recording(cfg.stride, None)
        .validate()
        .map_err(HarnessError::config)?;
    let starts: Vec<JointStrategy> = match &cfg.initial {
        Some(blocks) => vec![initial_strategy(&game, blocks)?],
        None if cfg.inits == 0 => {
            return Err(HarnessError::Config("inits must be positive".into()))
        }
        None => (0..cfg.inits)
            .map(|i| seeded_initial(ctx.seed, &[], i, game.action_counts()))
            .collect(),
    };
    ensure_dir(&ctx.out)?;
    let meta = ctx.metadata("simulate", json!({ "config": cfg, "protocol": protocol }));

    info!(
        "simulating {} trajectories of {} steps",
        starts.len(),
        protocol.steps
    );
    let records: Vec<TrajectoryRecord> = starts
        .par_iter()
        .map(|x0| protocol.run(&game, &rates, x0, cfg.stride, None))
        .collect::<Result<_, _>>()
        .map_err(HarnessError::runtime)?;

    let mut summary = CsvOutput::create(
        ctx.out.join("summary.csv"),
        &meta,
        &["init", "converged", "relative_range"],
    )?;
    let mut summaries = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        let mut csv = CsvOutput::create(
            ctx.out.join(format!("trajectory_{i:03}.csv")),
            &meta,
            &["t", "agent", "action", "prob"],
        )?;
        for (t, x) in rec.time_points.iter().zip(&rec.states) {
            let t = num(*t);
            for (k, block) in x.blocks().enumerate() {
                for (a, p) in block.iter().enumerate() {
                    csv.row([t.as_str(), &k.to_string(), &a.to_string(), &num(*p)])?;
                }
            }
        }
        csv.finish()?;
        summary.row([
            i.to_string(),
            rec.converged.to_string(),
            num(rec.per_component_relative_range),
        ])?;
        summaries.push(TrajectorySummary {
            init: i,
            converged: rec.converged,
            relative_range: rec.per_component_relative_range,
            final_state: rec.final_state().clone(),
        });
    }
    summary.finish()?;

    let comment = meta.comment_lines();
    let first = &records[0];
    let series: Vec<Series> = (0..game.num_agents().min(10))
        .map(|k| {
            let pts: Vec<(f64, f64)> = first
                .time_points
                .iter()
                .zip(&first.states)
                .map(|(t, x)| (*t, x.agent(k)[0]))
                .collect();
            Series::line(format!("agent {k}"), thinned(&pts).collect())
        })
        .collect();
    write_text(
        &ctx.out.join("trajectory.svg"),
        &line_plot(
            "First-action probability, initial condition 0",
            "t",
            "x_k0",
            &series,
            &comment,
        ),
    )?;
    if game.num_agents() == 3 && game.action_counts().iter().all(|&n| n == 2) {
        let series: Vec<Series> = records
            .iter()
            .enumerate()
            .map(|(i, rec)| {
                let pts: Vec<(f64, f64)> = rec
                    .states
                    .iter()
                    .map(|x| (x.agent(0)[0], x.agent(1)[0]))
                    .collect();
                Series::line(
                    if i < 8 {
                        format!("init {i}")
                    } else {
                        String::new()
                    },
                    thinned(&pts).collect(),
                )
            })
            .collect();
        write_text(
            &ctx.out.join("projection.svg"),
            &line_plot(
                "Agents 0 and 1, first-action probabilities",
                "x_00",
                "x_10",
                &series,
                &comment,
            ),
        )?;
    }
    Ok(summaries)
}

/// Solves for the QRE and writes `qre.json`.
pub fn qre(cfg: &QreRunConfig, ctx: &RunContext) -> Result<QreSolution, HarnessError> {
    let game = build_game(&cfg.game)?;
    let rates = cfg.rates.resolve(game.num_agents())?;
    let x0 = match &cfg.initial {
        Some(blocks) => initial_strategy(&game, blocks)?,
        None => JointStrategy::uniform(game.action_counts()),
    };
    let sol = solve_qre(&game, &rates, &x0, &cfg.solver).map_err(|e| match e {
        crate::Error::InvalidParameter(_) => HarnessError::config(e),
        e => HarnessError::runtime(e),
    })?;
    ensure_dir(&ctx.out)?;
    let mut out = json!(sol);
    out["metadata"] = ctx.metadata("qre", json!(cfg)).to_json();
    write_json(&ctx.out.join("qre.json"), &out)?;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thinning_keeps_endpoints() {
        let v: Vec<usize> = (0..5001).collect();
        let t: Vec<usize> = thinned(&v).collect();
        assert!(t.len() <= MAX_PLOT_POINTS + 1);
        assert_eq!(t.first(), Some(&0));
        assert_eq!(t.last(), Some(&5000));
        let short = [1, 2, 3];
        assert_eq!(thinned(&short).collect::<Vec<_>>(), vec![1, 2, 3]);
    }
}
