//! Scoring and the benchmark runner.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use tabprep_agent::episode::{default_preamble, run_episode, EpisodeConfig, TaskSpec};
use tabprep_agent::policy::Policy;
use tabprep_agent::reward::{hybrid_reward, outcome_reward, partial_reward, PartialScores, ProcessJudge, RewardBreakdown};
use tabprep_agent::trajectory::{read_log, write_log, Trajectory, Usage};
use tabprep_core::synthesis::{read_bundle, TaskBundle};

use crate::config::{HarnessConfig, TokenPricing};
use crate::report::{BenchmarkReport, CaseRow, MISSING_LOG, UNREADABLE};

pub fn gpu_cost(hourly_price: f64, wall_time: f64) -> f64 {
    hourly_price * wall_time / 3600.0
}

pub fn token_cost(p: &TokenPricing, u: &Usage) -> f64 {
    let cached = u.cached_input_tokens.min(u.input_tokens) as f64;
    let fresh = u.input_tokens as f64 - cached;
    (fresh * p.input_per_mtok + cached * p.cached_input_per_mtok + u.output_tokens as f64 * p.output_per_mtok) / 1e6
}

pub fn task_from_bundle(b: &TaskBundle, config: &HarnessConfig) -> TaskSpec {
    let mut task = TaskSpec::new(b.task_id.clone(), b.sources.clone(), b.target_schema.clone());
    task.max_turns = config.max_turns;
    task
}

pub fn episode_config(config: &HarnessConfig) -> EpisodeConfig {
    EpisodeConfig { sample_rows: config.sample_rows, history_window: config.history_window, preamble: default_preamble(), ..EpisodeConfig::default() }
}

/// Scores one finished trajectory against its bundle.
pub fn score_case(traj: &Trajectory, bundle: &TaskBundle, config: &HarnessConfig, judge: &dyn ProcessJudge) -> (CaseRow, RewardBreakdown) {
    let completed = traj.completed();
    let target = &bundle.target_table;
    let r_out = match &traj.final_table {
        Some(t) if completed => outcome_reward(t, target),
        _ => 0.0,
    };
    let partial = traj.final_table.as_ref().map_or(PartialScores::ZERO, |t| partial_reward(t, target));
    let (r_llm, judge_error) = match judge.judge(traj) {
        Ok(s) => (s.score(), None),
        Err(e) => (0.0, Some(format!("judge: {e}"))),
    };
    let reward = hybrid_reward(r_out, partial, r_llm, config.weights);
    let cost = match &config.token_pricing {
        Some(p) => token_cost(p, &traj.usage),
        None => gpu_cost(config.gpu_hourly_price, traj.wall_time),
    };
    let row = CaseRow {
        task_id: traj.task_id.clone(),
        status: traj.status.as_str().to_string(),
        completed,
        r_out,
        r_part: reward.r_part,
        r_llm,
        total: reward.total,
        wall_time: traj.wall_time,
        cost,
        error: traj.error.clone().or(judge_error),
    };
    (row, reward)
}

/// Bundle directories under `task_dir`, in name order.
pub fn bundle_dirs(task_dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(task_dir)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    dirs.sort();
    Ok(dirs)
}

fn dir_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

pub fn log_path(out_dir: &Path, task_id: &str) -> PathBuf {
    out_dir.join("trajectories").join(format!("{task_id}.jsonl"))
}

fn pool(parallelism: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(parallelism).build().expect("thread pool")
}

/// Runs every bundle under `task_dir`, writes `trajectories/<task>.jsonl`,
/// `report.json`, `report.txt` and the resolved `config.json` under
/// `out_dir`, and returns the report.
pub fn run_benchmark(
    task_dir: &Path,
    out_dir: &Path,
    policy: &dyn Policy,
    judge: &dyn ProcessJudge,
    config: &HarnessConfig,
) -> anyhow::Result<BenchmarkReport> {
    config.validate().map_err(anyhow::Error::msg)?;
    let dirs = bundle_dirs(task_dir)?;
    fs::create_dir_all(out_dir.join("trajectories"))?;
    fs::write(out_dir.join("config.json"), serde_json::to_string_pretty(config)? + "\n")?;
    let episode = episode_config(config);
    let rows: Vec<CaseRow> = pool(config.parallelism).install(|| {
        dirs.par_iter()
            .map(|dir| {
                let bundle = match read_bundle(dir) {
                    Ok(b) => b,
                    Err(e) => return CaseRow::failed(dir_name(dir), UNREADABLE, e.to_string()),
                };
                let traj = run_episode(&task_from_bundle(&bundle, config), policy, &episode);
                let (row, reward) = score_case(&traj, &bundle, config, judge);
                let path = log_path(out_dir, &bundle.task_id);
                match fs::write(&path, write_log(&traj, Some(&reward))) {
                    Ok(()) => row,
                    Err(e) => CaseRow { error: Some(format!("{}: {e}", path.display())), ..row },
                }
            })
            .collect()
    });
    let report = BenchmarkReport::from_rows(rows);
    write_report(out_dir, &report)?;
    Ok(report)
}

pub fn write_report(out_dir: &Path, report: &BenchmarkReport) -> std::io::Result<()> {
    fs::write(out_dir.join("report.json"), report.to_json())?;
    fs::write(out_dir.join("report.txt"), report.render_text())
}

/// Recomputes the report from stored trajectories and the bundles.
pub fn rescore(task_dir: &Path, run_dir: &Path, judge: &dyn ProcessJudge, config: &HarnessConfig) -> anyhow::Result<BenchmarkReport> {
    config.validate().map_err(anyhow::Error::msg)?;
    let rows = bundle_dirs(task_dir)?
        .iter()
        .map(|dir| {
            let bundle = match read_bundle(dir) {
                Ok(b) => b,
                Err(e) => return CaseRow::failed(dir_name(dir), UNREADABLE, e.to_string()),
            };
            let path = log_path(run_dir, &bundle.task_id);
            let log = fs::read_to_string(&path).map_err(|e| e.to_string()).and_then(|text| read_log(&text).map_err(|e| e.to_string()));
            match log {
                Ok((traj, _)) => score_case(&traj, &bundle, config, judge).0,
                Err(e) => CaseRow::failed(bundle.task_id.clone(), MISSING_LOG, format!("{}: {e}", path.display())),
            }
        })
        .collect();
    Ok(BenchmarkReport::from_rows(rows))
}
