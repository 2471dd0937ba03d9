//! Final-window strategy samples over a grid of exploration rates.

use log::info;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::config::{BoxplotConfig, Protocol};
use super::output::{ensure_dir, num, write_text, CsvOutput};
use super::run::seeded_initial;
use super::svg::{box_plot, BoxStats};
use super::{build_game, HarnessError, RunContext};
use crate::game::ExplorationRates;

/// Spread of one agent's first-action probability at one `T`, pooled over
/// initial conditions and the final window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxSummary {
    pub t: f64,
    pub agent: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    /// `max - min` over all pooled samples.
    pub spread: f64,
    /// Every initial condition passed the convergence test.
    pub all_converged: bool,
}

struct Cell {
    converged: bool,
    /// `samples[a]` is the final window of `agents[a]`'s first-action probability.
    samples: Vec<Vec<f64>>,
}

/// Writes `boxplot.csv` (long form), `boxplot_summary.csv` and `boxplot.svg`.
pub fn boxplot(cfg: &BoxplotConfig, ctx: &RunContext) -> Result<Vec<BoxSummary>, HarnessError> {
    let game = build_game(&cfg.game)?;
    let protocol = cfg.protocol.resolve(Protocol::TRAJECTORY)?;
    if cfg.temperatures.is_empty()
        || cfg
            .temperatures
            .iter()
            .any(|t| !(*t > 0.0 && t.is_finite()))
    {
        return Err(HarnessError::Config(
            "temperatures must be a non-empty list of positive rates".into(),
        ));
    }
    if cfg.inits == 0 {
        return Err(HarnessError::Config("inits must be positive".into()));
    }
    if let Some(&k) = cfg.agents.iter().find(|&&k| k >= game.num_agents()) {
        return Err(HarnessError::Config(format!(
            "agent {k} out of range for {} agents",
            game.num_agents()
        )));
    }
    ensure_dir(&ctx.out)?;
    let meta = ctx.metadata("boxplot", json!({ "config": cfg, "protocol": protocol }));

    let starts: Vec<_> = (0..cfg.inits)
        .map(|i| seeded_initial(ctx.seed, &[], i, game.action_counts()))
        .collect();
    let tasks: Vec<(usize, usize)> = (0..cfg.temperatures.len())
        .flat_map(|ti| (0..cfg.inits).map(move |i| (ti, i)))
        .collect();
    info!("boxplot: {} trajectories", tasks.len());
    let cells: Vec<Cell> = tasks
        .par_iter()
        .map(|&(ti, i)| {
            let rates = ExplorationRates::uniform(cfg.temperatures[ti], game.num_agents())?;
            let rec = protocol.run(&game, &rates, &starts[i], 1, Some(protocol.window))?;
            let window = rec.final_window();
            Ok(Cell {
                converged: rec.converged,
                samples: cfg
                    .agents
                    .iter()
                    .map(|&k| window.iter().map(|x| x.agent(k)[0]).collect())
                    .collect(),
            })
        })
        .collect::<crate::Result<_>>()
        .map_err(HarnessError::runtime)?;

    let mut csv = CsvOutput::create(
        ctx.out.join("boxplot.csv"),
        &meta,
        &["T", "init", "agent", "sample_index", "prob"],
    )?;
    for (&(ti, i), cell) in tasks.iter().zip(&cells) {
        let t = num(cfg.temperatures[ti]);
        let init = i.to_string();
        for (a, samples) in cfg.agents.iter().zip(&cell.samples) {
            let agent = a.to_string();
            for (s, p) in samples.iter().enumerate() {
                csv.row([t.as_str(), &init, &agent, &s.to_string(), &num(*p)])?;
            }
        }
    }
    csv.finish()?;

    let mut summaries = Vec::new();
    let mut groups = Vec::new();
    for (ti, &t) in cfg.temperatures.iter().enumerate() {
        let row: Vec<&Cell> = cells[ti * cfg.inits..(ti + 1) * cfg.inits].iter().collect();
        let all_converged = row.iter().all(|c| c.converged);
        let mut boxes = Vec::new();
        for (a, &agent) in cfg.agents.iter().enumerate() {
            let pooled: Vec<f64> = row
                .iter()
                .flat_map(|c| c.samples[a].iter().copied())
                .collect();
            let b = BoxStats::from_sample(&pooled);
            if let Some(b) = b {
                summaries.push(BoxSummary {
                    t,
                    agent,
                    min: b.min,
                    median: b.median,
                    max: b.max,
                    spread: b.max - b.min,
                    all_converged,
                });
            }
            boxes.push(b);
        }
        groups.push((format!("{t}"), boxes));
    }

    let mut csv = CsvOutput::create(
        ctx.out.join("boxplot_summary.csv"),
        &meta,
        &[
            "T",
            "agent",
            "min",
            "median",
            "max",
            "spread",
            "all_converged",
        ],
    )?;
    for s in &summaries {
        csv.row([
            num(s.t),
            s.agent.to_string(),
            num(s.min),
            num(s.median),
            num(s.max),
            num(s.spread),
            s.all_converged.to_string(),
        ])?;
    }
    csv.finish()?;

    let members: Vec<String> = cfg.agents.iter().map(|k| format!("agent {k}")).collect();
    write_text(
        &ctx.out.join("boxplot.svg"),
        &box_plot(
            &format!(
                "{}: final-window first-action probabilities",
                cfg.game.name()
            ),
            "exploration rate T",
            "x_k0",
            &groups,
            &members,
            &meta.comment_lines(),
        ),
    )?;
    Ok(summaries)
}
