//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde_json::json;

use decoyrl_core::irl::{
    counterfactual_evaluate, evd, policy_agreement, visited_states, InitStrategy, IrlConfig,
};
use decoyrl_core::mdp::{compile, FeatureMode, FeatureVector, ScenarioMdp};
use decoyrl_core::profiler::{compute_metrics, infer_profile, ProfilerConfig};
use decoyrl_core::scenario::strip_deceptions;
use decoyrl_core::sim::{
    first_real_foothold_step, run_batch, run_episode_reactive, DefenderRule, SoftAttacker,
    SummaryStats, TrajectorySet,
};
use decoyrl_core::softrl::{
    boltzmann_policy, evaluate_policy, greedy_policy, hard_value_iteration, soft_value_iteration,
    Policy,
};
use decoyrl_core::trajlog::{read_log_file, write_log_file};

use crate::docs::{
    self, load_params, write_doc, write_series, CounterfactualBlock, EvalDoc, FitBlock,
    ParamsDoc, ProfileDoc, ReportDoc, StatsDoc, VariantBlock,
};
use crate::ScenarioInput;

fn builtin_psi() -> Vec<f64> {
    let doc: ParamsDoc =
        serde_json::from_str(crate::BUILTIN_PSI_STAR).expect("builtin params parse");
    doc.ordered_psi().expect("builtin params are complete")
}

fn load_psi_arg(path: &Option<PathBuf>) -> Result<(Vec<f64>, String)> {
    match path {
        Some(path) => {
            let doc = load_params(path)?;
            Ok((doc.ordered_psi()?, path.display().to_string()))
        }
        None => Ok((builtin_psi(), "builtin:psi_star.json".to_string())),
    }
}

fn solve_policy(mdp: &ScenarioMdp, psi: &[f64], gamma: f64, temperature: f64) -> Result<Policy> {
    let attacker = SoftAttacker {
        psi: psi.to_vec(),
        gamma,
        temperature,
        tol: 1e-9,
        max_iter: 100_000,
    };
    Ok(attacker.solve(mdp)?)
}

// ── simulate ────────────────────────────────────────────────────────────

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Number of episodes.
    #[arg(long, default_value_t = 10)]
    pub episodes: usize,
    /// Base seed; episode i uses seed + i.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Step cap per episode.
    #[arg(long, default_value_t = 60)]
    pub horizon: usize,
    /// Attacker reward weights (params document); defaults to the shipped
    /// ground truth.
    #[arg(long)]
    pub psi: Option<PathBuf>,
    #[arg(long, default_value_t = 0.95)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    /// Scripted reactive defender, e.g. launch_decoy_after_alert:medium.
    /// Episodes run under a rule are tagged non-stationary.
    #[arg(long)]
    pub defender_rule: Option<String>,
    /// Strip decoys, phantom hosts, spoofed services, and response
    /// manipulations before simulating.
    #[arg(long, default_value_t = false)]
    pub no_deception: bool,
    /// Trajectory log path.
    #[arg(long)]
    pub out: PathBuf,
    /// Stats document path (default: <out>.stats.json).
    #[arg(long)]
    pub stats_out: Option<PathBuf>,
}

pub fn simulate(input: &ScenarioInput, args: &SimulateArgs) -> Result<()> {
    if args.episodes == 0 {
        bail!("--episodes must be >= 1");
    }
    let scenario = if args.no_deception {
        strip_deceptions(&input.scenario)?
    } else {
        input.scenario.clone()
    };
    let mdp = compile(&scenario)?;
    let (psi, psi_label) = load_psi_arg(&args.psi)?;

    let config = json!({
        "command": "simulate",
        "scenario": input.label,
        "episodes": args.episodes,
        "seed": args.seed,
        "horizon": args.horizon,
        "psi": psi_label,
        "gamma": args.gamma,
        "temperature": args.temperature,
        "defender_rule": args.defender_rule,
        "no_deception": args.no_deception,
    });

    let (set, stats) = match &args.defender_rule {
        None => {
            let policy = solve_policy(&mdp, &psi, args.gamma, args.temperature)?;
            run_batch(&mdp, &policy, args.episodes, args.seed, args.horizon)?
        }
        Some(rule_text) => {
            let rule: DefenderRule = rule_text.parse()?;
            let attacker = SoftAttacker {
                psi: psi.clone(),
                gamma: args.gamma,
                temperature: args.temperature,
                tol: 1e-9,
                max_iter: 100_000,
            };
            let mut trajectories = Vec::with_capacity(args.episodes);
            for i in 0..args.episodes {
                trajectories.push(run_episode_reactive(
                    &scenario,
                    &attacker,
                    &rule,
                    args.seed + i as u64,
                    args.horizon,
                )?);
            }
            let stats = SummaryStats::compute(&scenario, &trajectories, args.horizon);
            (TrajectorySet::new(trajectories)?, stats)
        }
    };

    write_log_file(&set, &args.out)
        .with_context(|| format!("cannot write log {}", args.out.display()))?;
    let stats_path = args
        .stats_out
        .clone()
        .unwrap_or_else(|| append_ext(&args.out, "stats.json"));
    let doc = StatsDoc {
        format_version: docs::DOC_FORMAT_VERSION,
        kind: "decoyrl-summary-stats".to_string(),
        scenario_hash: mdp.scenario_hash.clone(),
        config,
        num_hosts: scenario.num_hosts(),
        num_decoys: scenario.num_decoys(),
        stats,
    };
    write_doc(&doc, &stats_path)?;
    println!(
        "wrote {} episodes to {} (stats: {})",
        args.episodes,
        args.out.display(),
        stats_path.display()
    );
    Ok(())
}

fn append_ext(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

// ── irl-fit ─────────────────────────────────────────────────────────────

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Trajectory log to fit on.
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    /// Gradient max-norm tolerance.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub l2: f64,
    /// Forward-pass horizon (default: longest episode in the log).
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, default_value_t = 0.95)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    /// Initialization: "zeros" or "uniform:<seed>".
    #[arg(long, default_value = "zeros")]
    pub init: String,
    /// Include non-stationary (reactive-defender) trajectories.
    #[arg(long, default_value_t = false)]
    pub include_nonstationary: bool,
    /// Params document output path.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_init(text: &str) -> Result<InitStrategy> {
    if text == "zeros" {
        return Ok(InitStrategy::Zeros);
    }
    if let Some(seed) = text.strip_prefix("uniform:") {
        return Ok(InitStrategy::SeededUniform { seed: seed.parse()? });
    }
    bail!("unknown init {text:?} (expected zeros or uniform:<seed>)");
}

pub fn irl_fit_config(args: &FitArgs, observed_horizon: usize) -> Result<IrlConfig> {
    Ok(IrlConfig {
        learning_rate: args.lr,
        max_epochs: args.epochs,
        grad_tol: args.tol,
        l2_reg: args.l2,
        horizon: args.horizon.unwrap_or(observed_horizon.max(1)),
        gamma: args.gamma,
        temperature: args.temperature,
        init: parse_init(&args.init)?,
        include_nonstationary: args.include_nonstationary,
        ..IrlConfig::default()
    })
}

pub fn irl_fit(input: &ScenarioInput, args: &FitArgs) -> Result<()> {
    let mdp = compile(&input.scenario)?;
    let set = read_log_file(&args.log)
        .with_context(|| format!("cannot read log {}", args.log.display()))?;
    if set.is_empty() {
        bail!("empty trajectory set in {}", args.log.display());
    }
    if set.scenario_hash != mdp.scenario_hash {
        bail!(
            "log {} was produced from scenario {}, but {} hashes to {}",
            args.log.display(),
            set.scenario_hash,
            input.label,
            mdp.scenario_hash
        );
    }
    let observed_horizon = set
        .trajectories
        .iter()
        .map(|t| t.records.len())
        .max()
        .unwrap_or(1);
    let cfg = irl_fit_config(args, observed_horizon)?;
    let result = decoyrl_core::irl::irl_fit(&mdp, &set, &cfg)?;
    let config = json!({
        "command": "irl-fit",
        "scenario": input.label,
        "log": args.log.display().to_string(),
        "lr": cfg.learning_rate,
        "epochs": cfg.max_epochs,
        "tol": cfg.grad_tol,
        "l2": cfg.l2_reg,
        "horizon": cfg.horizon,
        "gamma": cfg.gamma,
        "temperature": cfg.temperature,
        "init": args.init,
        "include_nonstationary": cfg.include_nonstationary,
        "trajectories": set.len(),
    });
    let doc = ParamsDoc::from_fit(&result, &mdp.scenario_hash, config);
    write_doc(&doc, &args.out)?;
    println!(
        "fit {} trajectories: converged={} epochs={} grad_norm={:.6} -> {}",
        set.len(),
        result.converged,
        result.epochs_run,
        result.grad_norm_final,
        args.out.display()
    );
    Ok(())
}

// ── eval ────────────────────────────────────────────────────────────────

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Reference (ground-truth) reward weights; defaults to the shipped
    /// ground truth.
    #[arg(long)]
    pub psi_true: Option<PathBuf>,
    /// Recovered reward weights.
    #[arg(long)]
    pub psi_hat: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    /// Evaluation document output path.
    #[arg(long)]
    pub out: PathBuf,
}

/// Counterfactual what-if: the attacker's Boltzmann policy under `psi` on
/// each variant, valued in ground-truth payoff mode.
fn paired_counterfactual(
    present: &ScenarioMdp,
    absent: &ScenarioMdp,
    psi: &[f64],
    gamma: f64,
    temperature: f64,
) -> Result<CounterfactualBlock> {
    let mut values = Vec::new();
    for mdp in [present, absent] {
        let sv = soft_value_iteration(
            &mdp.tab,
            psi,
            FeatureMode::AttackerVisible,
            gamma,
            temperature,
            1e-10,
            100_000,
            None,
        )?;
        let pi = boltzmann_policy(&mdp.tab, &sv);
        values.push(counterfactual_evaluate(
            &mdp.tab,
            psi,
            &pi,
            gamma,
            FeatureMode::GroundTruth,
            1e-10,
        )?);
    }
    Ok(CounterfactualBlock {
        present_value: values[0],
        absent_value: values[1],
        defender_zero_sum_present: -values[0],
        defender_zero_sum_absent: -values[1],
        deception_reduces_value: values[0] <= values[1],
    })
}

fn optimal_value(mdp: &ScenarioMdp, psi: &[f64], gamma: f64) -> Result<f64> {
    let opt = hard_value_iteration(&mdp.tab, psi, FeatureMode::GroundTruth, gamma, 1e-10, 100_000)?;
    let pi = greedy_policy(&mdp.tab, &opt.q);
    let v = evaluate_policy(
        &mdp.tab,
        psi,
        FeatureMode::GroundTruth,
        &pi,
        gamma,
        1e-10,
        100_000,
    )?;
    Ok(v.v[mdp.tab.initial_state()])
}

pub fn eval(input: &ScenarioInput, args: &EvalArgs) -> Result<()> {
    let present = compile(&input.scenario)?;
    let absent = compile(&strip_deceptions(&input.scenario)?)?;
    let (psi_true, true_label) = load_psi_arg(&args.psi_true)?;
    let hat_doc = load_params(&args.psi_hat)?;
    if let Some(hash) = &hat_doc.scenario_hash {
        if hash != &present.scenario_hash {
            bail!(
                "psi-hat {} was fit against scenario {}, but {} hashes to {}",
                args.psi_hat.display(),
                hash,
                input.label,
                present.scenario_hash
            );
        }
    }
    let psi_hat = hat_doc.ordered_psi()?;

    let evd_value = evd(&present.tab, &psi_true, &psi_hat, args.gamma, 1e-10)?;
    let v_opt = optimal_value(&present, &psi_true, args.gamma)?;
    let counterfactual =
        paired_counterfactual(&present, &absent, &psi_hat, args.gamma, args.temperature)?;

    let doc = EvalDoc {
        format_version: docs::DOC_FORMAT_VERSION,
        kind: "decoyrl-eval".to_string(),
        scenario_hash: present.scenario_hash.clone(),
        config: json!({
            "command": "eval",
            "scenario": input.label,
            "psi_true": true_label,
            "psi_hat": args.psi_hat.display().to_string(),
            "gamma": args.gamma,
            "temperature": args.temperature,
        }),
        evd: evd_value,
        optimal_value: v_opt,
        evd_fraction_of_optimal: if v_opt.abs() > 1e-12 { evd_value / v_opt } else { 0.0 },
        counterfactual,
    };
    write_doc(&doc, &args.out)?;
    println!("evd = {evd_value:.6} ({:.3}% of optimal {v_opt:.4})", 100.0 * doc.evd_fraction_of_optimal);
    println!(
        "counterfactual: present {:.4} vs absent {:.4} -> {}",
        doc.counterfactual.present_value,
        doc.counterfactual.absent_value,
        if doc.counterfactual.deception_reduces_value {
            "deception reduces attacker value"
        } else {
            "deception does NOT reduce attacker value"
        }
    );
    Ok(())
}

// ── profile ─────────────────────────────────────────────────────────────

#[derive(Args, Debug)]
pub struct ProfileArgs {
    /// Trajectory log to profile.
    #[arg(long)]
    pub log: PathBuf,
    /// Heuristic thresholds (JSON file); defaults are built in.
    #[arg(long)]
    pub profiler_config: Option<PathBuf>,
    /// Report output path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn profile(input: &ScenarioInput, args: &ProfileArgs) -> Result<()> {
    let scenario = &input.scenario;
    let hash = scenario.content_hash();
    let set = read_log_file(&args.log)
        .with_context(|| format!("cannot read log {}", args.log.display()))?;
    if set.is_empty() {
        bail!("empty trajectory set in {}", args.log.display());
    }
    if set.scenario_hash != hash {
        bail!(
            "log {} was produced from scenario {}, but {} hashes to {}",
            args.log.display(),
            set.scenario_hash,
            input.label,
            hash
        );
    }
    let cfg: ProfilerConfig = match &args.profiler_config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read profiler config {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("invalid profiler config {}", path.display()))?
        }
        None => ProfilerConfig::default(),
    };
    let metrics = set
        .trajectories
        .iter()
        .map(|t| compute_metrics(t, scenario))
        .collect::<Result<Vec<_>, _>>()?;
    let inferred = infer_profile(&set, scenario, &cfg)?;
    let doc = ProfileDoc {
        format_version: docs::DOC_FORMAT_VERSION,
        kind: "decoyrl-profile".to_string(),
        scenario_hash: hash,
        config: json!({
            "command": "profile",
            "scenario": input.label,
            "log": args.log.display().to_string(),
            "thresholds": cfg,
        }),
        ground_truth_metrics: metrics,
        inferred,
    };
    write_doc(&doc, &args.out)?;
    println!("profiled {} trajectories -> {}", set.len(), args.out.display());
    Ok(())
}

// ── report ──────────────────────────────────────────────────────────────

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Episodes per variant and horizon block.
    #[arg(long, default_value_t = 500)]
    pub episodes: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Unconstrained horizon (steps-to-foothold, success rate).
    #[arg(long, default_value_t = 60)]
    pub horizon: usize,
    /// Fixed engagement window for the alert comparison.
    #[arg(long, default_value_t = 20)]
    pub window: usize,
    /// Trajectories used for the embedded reward fit.
    #[arg(long, default_value_t = 800)]
    pub fit_episodes: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 150)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.95)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    /// Output directory (created if absent).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn report(input: &ScenarioInput, args: &ReportArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create output directory {}", args.out.display()))?;
    let present = compile(&input.scenario)?;
    let absent = compile(&strip_deceptions(&input.scenario)?)?;
    let psi_star = builtin_psi();
    let pi_present = solve_policy(&present, &psi_star, args.gamma, args.temperature)?;
    let pi_absent = solve_policy(&absent, &psi_star, args.gamma, args.temperature)?;

    // paired batches at both horizons
    let (window_p, window_stats_p) =
        run_batch(&present, &pi_present, args.episodes, args.seed, args.window)?;
    let (window_a, window_stats_a) =
        run_batch(&absent, &pi_absent, args.episodes, args.seed, args.window)?;
    let (full_p, full_stats_p) =
        run_batch(&present, &pi_present, args.episodes, args.seed, args.horizon)?;
    let (full_a, full_stats_a) =
        run_batch(&absent, &pi_absent, args.episodes, args.seed, args.horizon)?;

    let alert_ratio = if window_stats_p.mean_real_host_ids_alerts > 0.0 {
        window_stats_a.mean_real_host_ids_alerts / window_stats_p.mean_real_host_ids_alerts
    } else {
        f64::INFINITY
    };
    let diffs: Vec<f64> = full_p
        .trajectories
        .iter()
        .zip(full_a.trajectories.iter())
        .map(|(p, a)| {
            let fp = first_real_foothold_step(&present.scenario, p).unwrap_or(args.horizon) as f64;
            let fa = first_real_foothold_step(&absent.scenario, a).unwrap_or(args.horizon) as f64;
            fp - fa
        })
        .collect();
    let n = diffs.len() as f64;
    let delay_mean = diffs.iter().sum::<f64>() / n;
    let delay_var =
        diffs.iter().map(|d| (d - delay_mean) * (d - delay_mean)).sum::<f64>() / (n - 1.0);
    let delay_se = (delay_var / n).sqrt();

    // reward recovery on a slice of the full-horizon present data
    let fit_episodes = args.fit_episodes.min(full_p.trajectories.len());
    let fit_set = TrajectorySet::new(full_p.trajectories[..fit_episodes].to_vec())?;
    let cfg = IrlConfig {
        learning_rate: args.lr,
        max_epochs: args.epochs,
        horizon: args.horizon,
        gamma: args.gamma,
        temperature: args.temperature,
        ..IrlConfig::default()
    };
    let fit = decoyrl_core::irl::irl_fit(&present, &fit_set, &cfg)?;
    let psi_hat = fit.psi_hat.psi.clone();

    let sv_hat = soft_value_iteration(
        &present.tab,
        &psi_hat,
        FeatureMode::AttackerVisible,
        args.gamma,
        args.temperature,
        1e-10,
        100_000,
        None,
    )?;
    let pi_hat = boltzmann_policy(&present.tab, &sv_hat);
    let visited = visited_states(&present, &fit_set);
    let agreement = policy_agreement(&pi_hat, &pi_present, &visited);
    let evd_value = evd(&present.tab, &psi_star, &psi_hat, args.gamma, 1e-10)?;
    let v_opt = optimal_value(&present, &psi_star, args.gamma)?;
    let counterfactual =
        paired_counterfactual(&present, &absent, &psi_hat, args.gamma, args.temperature)?;

    let config = json!({
        "command": "report",
        "scenario": input.label,
        "episodes": args.episodes,
        "seed": args.seed,
        "horizon": args.horizon,
        "window": args.window,
        "fit_episodes": fit_episodes,
        "lr": args.lr,
        "epochs": args.epochs,
        "gamma": args.gamma,
        "temperature": args.temperature,
    });
    let doc = ReportDoc {
        format_version: docs::DOC_FORMAT_VERSION,
        kind: "decoyrl-report".to_string(),
        scenario_hash: present.scenario_hash.clone(),
        config,
        window_horizon: args.window,
        full_horizon: args.horizon,
        present: VariantBlock {
            num_hosts: present.scenario.num_hosts(),
            num_decoys: present.scenario.num_decoys(),
            window_stats: window_stats_p,
            full_stats: full_stats_p,
        },
        absent: VariantBlock {
            num_hosts: absent.scenario.num_hosts(),
            num_decoys: absent.scenario.num_decoys(),
            window_stats: window_stats_a,
            full_stats: full_stats_a,
        },
        alert_ratio_absent_over_present: alert_ratio,
        foothold_delay_mean: delay_mean,
        foothold_delay_se: delay_se,
        fit: FitBlock {
            episodes: fit_episodes,
            converged: fit.converged,
            epochs_run: fit.epochs_run,
            grad_norm_final: fit.grad_norm_final,
            psi: FeatureVector::NAMES
                .iter()
                .zip(psi_hat.iter())
                .map(|(name, w)| (name.to_string(), *w))
                .collect(),
        },
        policy_agreement: agreement,
        evd: evd_value,
        optimal_value: v_opt,
        counterfactual,
    };
    write_doc(&doc, &args.out.join("comparison.json"))?;

    let table = comparison_table(&doc);
    std::fs::write(args.out.join("comparison.txt"), &table)
        .with_context(|| format!("cannot write {}", args.out.join("comparison.txt").display()))?;
    print!("{table}");

    // plot-ready series
    let curve: Vec<(f64, f64)> = fit
        .log_likelihood_curve
        .iter()
        .enumerate()
        .map(|(i, v)| (i as f64, *v))
        .collect();
    write_series(&args.out.join("likelihood_curve.tsv"), ("epoch", "log_likelihood"), &curve)?;
    write_series(
        &args.out.join("alert_hist_present.tsv"),
        ("real_host_ids_alerts", "episodes"),
        &alert_histogram(&present, &window_p),
    )?;
    write_series(
        &args.out.join("alert_hist_absent.tsv"),
        ("real_host_ids_alerts", "episodes"),
        &alert_histogram(&absent, &window_a),
    )?;
    Ok(())
}

fn alert_histogram(mdp: &ScenarioMdp, set: &TrajectorySet) -> Vec<(f64, f64)> {
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for t in &set.trajectories {
        let count = t
            .records
            .iter()
            .flat_map(|r| r.alerts.iter())
            .filter(|a| {
                matches!(a.source, decoyrl_core::sim::AlertSource::Ids)
                    && mdp
                        .scenario
                        .host(&a.host_id)
                        .map(|h| h.is_real())
                        .unwrap_or(false)
            })
            .count();
        *hist.entry(count).or_insert(0) += 1;
    }
    hist.into_iter().map(|(k, v)| (k as f64, v as f64)).collect()
}

fn comparison_table(doc: &ReportDoc) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "deception comparison (window H={}, full H={})\n",
        doc.window_horizon, doc.full_horizon
    ));
    out.push_str(&format!(
        "{:<38} {:>12} {:>12}\n",
        "metric", "present", "absent"
    ));
    let rows: Vec<(&str, f64, f64)> = vec![
        (
            "hosts",
            doc.present.num_hosts as f64,
            doc.absent.num_hosts as f64,
        ),
        (
            "decoys",
            doc.present.num_decoys as f64,
            doc.absent.num_decoys as f64,
        ),
        (
            "real-host IDS alerts (window)",
            doc.present.window_stats.mean_real_host_ids_alerts,
            doc.absent.window_stats.mean_real_host_ids_alerts,
        ),
        (
            "decoy alerts (window)",
            doc.present.window_stats.mean_alerts_decoy,
            doc.absent.window_stats.mean_alerts_decoy,
        ),
        (
            "steps to first real foothold",
            doc.present.full_stats.mean_steps_to_first_real_foothold,
            doc.absent.full_stats.mean_steps_to_first_real_foothold,
        ),
        (
            "goal success rate",
            doc.present.full_stats.success_rate,
            doc.absent.full_stats.success_rate,
        ),
        (
            "attacker value (ground truth)",
            doc.counterfactual.present_value,
            doc.counterfactual.absent_value,
        ),
    ];
    for (name, p, a) in rows {
        out.push_str(&format!("{name:<38} {p:>12.3} {a:>12.3}\n"));
    }
    out.push_str(&format!(
        "alert ratio absent/present: {:.3}\n",
        doc.alert_ratio_absent_over_present
    ));
    out.push_str(&format!(
        "foothold delay (present - absent): {:.3} +- {:.3} steps\n",
        doc.foothold_delay_mean, doc.foothold_delay_se
    ));
    out.push_str(&format!(
        "recovered-policy agreement with ground truth: {:.4}\n",
        doc.policy_agreement
    ));
    out.push_str(&format!(
        "evd: {:.6} ({:.3}% of optimal {:.4})\n",
        doc.evd,
        100.0 * doc.evd / doc.optimal_value,
        doc.optimal_value
    ));
    out
}
