use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tabprep_agent::episode::run_episode;
use tabprep_agent::policy::{ChatClient, ChatConfig, ChatPolicy, HeuristicPolicy, Policy, ScriptedPolicy};
use tabprep_agent::reward::{LlmJudge, ProcessJudge, RuleJudge};
use tabprep_agent::trajectory::write_log;
use tabprep_core::io::{csv_to_string, read_table, read_table_dir, Format};
use tabprep_core::pipeline::parse_pipeline;
use tabprep_core::synthesis::{
    read_bundle, select_shortest_valid_pipeline, synthesize_task, verify_bundle, write_bundle, Corruption,
    CorruptionLibrary, SynthesisInput, TemplateDescriber,
};
use tabprep_harness::bench::{bundle_dirs, episode_config, rescore, run_benchmark, score_case, task_from_bundle, write_report};
use tabprep_harness::{HarnessConfig, TokenPricing};

#[derive(Parser)]
#[command(name = "tabprep", version, about = "Table preparation agent benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a policy over a directory of task bundles and report metrics.
    Run {
        /// Directory holding one bundle directory per task.
        #[arg(long)]
        tasks: PathBuf,
        /// Where trajectories and the report are written.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        judge: JudgeArgs,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Solve one task and print the answered table as CSV.
    Solve {
        #[arg(long)]
        task: PathBuf,
        /// Also write the trajectory log here.
        #[arg(long)]
        log: Option<PathBuf>,
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        judge: JudgeArgs,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Build a task bundle from clean sources, a task pipeline and a
    /// corruption plan.
    Synth {
        /// Directory of clean source tables (csv or json rows).
        #[arg(long)]
        sources: PathBuf,
        /// Task pipeline file; repeat to give candidates.
        #[arg(long, required = true)]
        pipeline: Vec<PathBuf>,
        /// Target table. With it, the shortest candidate reproducing it is used.
        #[arg(long)]
        target: Option<PathBuf>,
        /// JSON list of corruptions.
        #[arg(long)]
        corruptions: Option<PathBuf>,
        #[arg(long)]
        task_id: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-score stored trajectories of an earlier run.
    Score {
        #[arg(long)]
        tasks: PathBuf,
        /// Output directory of the earlier run.
        #[arg(long)]
        run: PathBuf,
        /// Write report.json and report.txt here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        judge: JudgeArgs,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Re-drive one episode from a scripted reply file and print its log.
    Replay {
        #[arg(long)]
        task: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Check that bundles reproduce their target tables.
    Validate {
        /// Bundle directories, or directories of bundles.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyKind {
    Heuristic,
    Scripted,
    Chat,
}

#[derive(Args)]
struct PolicyArgs {
    #[arg(long, value_enum, default_value = "heuristic")]
    policy: PolicyKind,
    /// Script file, or directory of `<task_id>.txt` scripts.
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long)]
    url: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Environment variable holding the bearer token.
    #[arg(long)]
    api_key_env: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    timeout_secs: Option<u64>,
}

#[derive(Args)]
struct JudgeArgs {
    /// Chat endpoint for the process judge; the rule judge is used without it.
    #[arg(long)]
    judge_url: Option<String>,
    #[arg(long)]
    judge_model: Option<String>,
    #[arg(long)]
    judge_api_key_env: Option<String>,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    max_turns: Option<usize>,
    #[arg(long)]
    sample_rows: Option<usize>,
    #[arg(long)]
    history_window: Option<usize>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// USD per GPU hour.
    #[arg(long)]
    gpu_price: Option<f64>,
    /// USD per million tokens as `input,output[,cached_input]`.
    #[arg(long)]
    token_pricing: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<HarnessConfig> {
        let mut c = match &self.config {
            Some(p) => serde_json::from_str(&fs::read_to_string(p).with_context(|| p.display().to_string())?)
                .with_context(|| format!("parsing {}", p.display()))?,
            None => HarnessConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:expr),*) => { $(if let Some(v) = self.$flag { $field = v; })* };
        }
        set!(max_turns => c.max_turns, sample_rows => c.sample_rows, parallelism => c.parallelism, seed => c.seed,
             gpu_price => c.gpu_hourly_price, alpha => c.weights.alpha, beta => c.weights.beta, gamma => c.weights.gamma);
        if self.history_window.is_some() {
            c.history_window = self.history_window;
        }
        if let Some(text) = &self.token_pricing {
            c.token_pricing = Some(parse_pricing(text)?);
        }
        c.validate().map_err(anyhow::Error::msg)?;
        Ok(c)
    }
}

fn parse_pricing(text: &str) -> Result<TokenPricing> {
    let parts: Vec<f64> = text.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().context("token pricing")?;
    match parts[..] {
        [i, o] => Ok(TokenPricing { input_per_mtok: i, output_per_mtok: o, cached_input_per_mtok: i }),
        [i, o, c] => Ok(TokenPricing { input_per_mtok: i, output_per_mtok: o, cached_input_per_mtok: c }),
        _ => bail!("token pricing takes two or three numbers"),
    }
}

fn env_key(var: &Option<String>) -> Result<Option<String>> {
    var.as_ref().map(|v| std::env::var(v).with_context(|| format!("environment variable {v}"))).transpose()
}

fn chat_config(url: &Option<String>, model: &Option<String>, key_env: &Option<String>) -> Result<ChatConfig> {
    let url = url.clone().context("--url is required for a chat endpoint")?;
    let mut c = ChatConfig::new(url, model.clone().unwrap_or_default());
    c.api_key = env_key(key_env)?;
    Ok(c)
}

fn build_policy(a: &PolicyArgs) -> Result<Box<dyn Policy>> {
    Ok(match a.policy {
        PolicyKind::Heuristic => Box::new(HeuristicPolicy),
        PolicyKind::Scripted => {
            let p = a.script.as_ref().context("--script is required for the scripted policy")?;
            let policy = if p.is_dir() { ScriptedPolicy::from_dir(p) } else { ScriptedPolicy::from_file(p) };
            Box::new(policy.with_context(|| p.display().to_string())?)
        }
        PolicyKind::Chat => {
            let mut c = chat_config(&a.url, &a.model, &a.api_key_env)?;
            if let Some(t) = a.temperature {
                c.temperature = t;
            }
            if let Some(t) = a.timeout_secs {
                c.timeout_secs = t;
            }
            Box::new(ChatPolicy::new(ChatClient::new(c).map_err(|e| anyhow::anyhow!(e.0))?))
        }
    })
}

fn build_judge(a: &JudgeArgs) -> Result<Box<dyn ProcessJudge>> {
    if a.judge_url.is_none() {
        return Ok(Box::new(RuleJudge));
    }
    let c = chat_config(&a.judge_url, &a.judge_model, &a.judge_api_key_env)?;
    Ok(Box::new(LlmJudge::new(ChatClient::new(c).map_err(|e| anyhow::anyhow!(e.0))?)))
}

fn read_text(p: &Path) -> Result<String> {
    fs::read_to_string(p).with_context(|| p.display().to_string())
}

fn synth(
    sources: &Path,
    pipelines: &[PathBuf],
    target: Option<&Path>,
    corruptions: Option<&Path>,
    task_id: &str,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let clean = read_table_dir(sources)?;
    let candidates = pipelines
        .iter()
        .map(|p| parse_pipeline(&read_text(p)?).with_context(|| p.display().to_string()))
        .collect::<Result<Vec<_>>>()?;
    let task_pipeline = match target {
        Some(t) => {
            let format = Format::from_path(t).context("target must be .csv or .json")?;
            let target = read_table(t, format)?;
            select_shortest_valid_pipeline(&candidates, &clean, &target).context("no candidate pipeline reproduces the target")?
        }
        None if candidates.len() == 1 => &candidates[0][..],
        None => bail!("several pipelines given without --target to choose among them"),
    };
    let plan: Vec<Corruption> = match corruptions {
        Some(p) => serde_json::from_str(&read_text(p)?).with_context(|| p.display().to_string())?,
        None => Vec::new(),
    };
    let input = SynthesisInput { task_id, clean_sources: &clean, task_pipeline, corruptions: &plan, seed };
    let bundle = synthesize_task(&input, &CorruptionLibrary::default(), &TemplateDescriber)?;
    write_bundle(out, &bundle)?;
    let accepted = bundle.provenance.corruptions.iter().filter(|c| c.accepted).count();
    println!("wrote {} ({} of {} corruptions kept, {} operators)", out.display(), accepted, plan.len(), bundle.gt_pipeline.len());
    for r in bundle.provenance.corruptions.iter().filter(|c| !c.accepted) {
        println!("rejected {}: {}", r.id, r.reason.as_deref().unwrap_or(""));
    }
    Ok(())
}

fn validate(paths: &[PathBuf]) -> Result<bool> {
    let mut dirs = Vec::new();
    for p in paths {
        if p.join("target_schema.json").exists() {
            dirs.push(p.clone());
        } else {
            dirs.extend(bundle_dirs(p).with_context(|| p.display().to_string())?);
        }
    }
    let mut ok = true;
    for d in dirs {
        match read_bundle(&d).map_err(|e| e.to_string()).and_then(|b| verify_bundle(&b)) {
            Ok(()) => println!("ok    {}", d.display()),
            Err(e) => {
                ok = false;
                println!("FAIL  {}: {e}", d.display());
            }
        }
    }
    Ok(ok)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { tasks, out, policy, judge, config } => {
            let config = config.resolve()?;
            let report = run_benchmark(&tasks, &out, build_policy(&policy)?.as_ref(), build_judge(&judge)?.as_ref(), &config)?;
            print!("{}", report.render_text());
            Ok(report.all_attempted())
        }
        Command::Solve { task, log, policy, judge, config } => {
            let config = config.resolve()?;
            let bundle = read_bundle(&task)?;
            let traj = run_episode(&task_from_bundle(&bundle, &config), build_policy(&policy)?.as_ref(), &episode_config(&config));
            let (row, reward) = score_case(&traj, &bundle, &config, build_judge(&judge)?.as_ref());
            if let Some(p) = log {
                fs::write(&p, write_log(&traj, Some(&reward))).with_context(|| p.display().to_string())?;
            }
            if let Some(t) = &traj.final_table {
                print!("{}", csv_to_string(t)?);
            }
            eprintln!("status: {}  r_out: {}  total: {:.3}", row.status, row.r_out, row.total);
            Ok(true)
        }
        Command::Synth { sources, pipeline, target, corruptions, task_id, seed, out } => {
            synth(&sources, &pipeline, target.as_deref(), corruptions.as_deref(), &task_id, seed, &out)?;
            Ok(true)
        }
        Command::Score { tasks, run, out, judge, config } => {
            let report = rescore(&tasks, &run, build_judge(&judge)?.as_ref(), &config.resolve()?)?;
            if let Some(out) = out {
                fs::create_dir_all(&out)?;
                write_report(&out, &report)?;
            }
            print!("{}", report.render_text());
            Ok(report.all_attempted())
        }
        Command::Replay { task, script, config } => {
            let config = config.resolve()?;
            let bundle = read_bundle(&task)?;
            let policy = ScriptedPolicy::from_file(&script).with_context(|| script.display().to_string())?;
            let traj = run_episode(&task_from_bundle(&bundle, &config), &policy, &episode_config(&config));
            let (_, reward) = score_case(&traj, &bundle, &config, &RuleJudge);
            print!("{}", write_log(&traj, Some(&reward)));
            Ok(true)
        }
        Command::Validate { paths } => validate(&paths),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
