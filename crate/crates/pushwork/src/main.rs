//! Command-line front end: train policies, evaluate checkpoints, run the
//! ablation matrix, verify the rotation-work oracle, and convert metric
//! files between formats.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};

use pushwork::cost::{quadrature_oracle, rotation_shape_integral};
use pushwork::harness::{
    ablation_suite, evaluate, export_ablation_csv, export_ablation_json, export_eval_csv,
    export_eval_json, export_runlog_csv, export_runlog_json, import_eval_csv, import_eval_json,
    import_runlog_csv, import_runlog_json, train, FullConfig, Variant,
};
use pushwork::ppo::Checkpoint;

#[derive(Parser)]
#[command(
    name = "pushwork",
    version,
    about = "Planar pushing simulator and PPO harness with friction-work reward shaping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one run per seed under the configured variant.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed list (repeatable).
        #[arg(long)]
        seed: Vec<u64>,
        /// Override the config's variant: ours|nocost|fixedbounds|robotenergy.
        #[arg(long)]
        variant: Option<String>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Evaluate a trained checkpoint with frozen cost bounds.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 30)]
        episodes: u32,
        /// Take argmax actions instead of sampling.
        #[arg(long)]
        deterministic: bool,
        /// Evaluation seed; use the training seed to keep the same
        /// configuration on the variable-mass task.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "eval_out")]
        out: PathBuf,
        /// Output format: csv|json (both are written when omitted).
        #[arg(long)]
        format: Option<String>,
    },
    /// Train and compare all four cost variants on shared seeds.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated seed list override.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long, default_value = "ablation_out")]
        out: PathBuf,
        /// Evaluation episodes per seed.
        #[arg(long)]
        episodes: Option<u32>,
    },
    /// Compare the closed-form rotation-work integral against the
    /// quadrature estimate over random contact patches.
    OracleCheck {
        #[arg(long, default_value_t = 200)]
        cases: u32,
        #[arg(long, default_value_t = 4096)]
        resolution: u32,
        #[arg(long, default_value = "oracle.csv")]
        out: PathBuf,
    },
    /// Convert a metrics file (run log or eval report) between formats.
    Export {
        #[arg(long)]
        input: PathBuf,
        /// Target format: csv|json.
        #[arg(long)]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train {
            config,
            seed,
            variant,
            out,
        } => cmd_train(&config, seed, variant, &out),
        Command::Eval {
            config,
            checkpoint,
            episodes,
            deterministic,
            seed,
            out,
            format,
        } => cmd_eval(&config, &checkpoint, episodes, deterministic, seed, &out, format),
        Command::Ablate {
            config,
            seeds,
            out,
            episodes,
        } => cmd_ablate(&config, seeds, &out, episodes),
        Command::OracleCheck {
            cases,
            resolution,
            out,
        } => cmd_oracle_check(cases, resolution, &out),
        Command::Export { input, format, out } => cmd_export(&input, &format, &out),
    }
}

fn load_config(path: &Path) -> Result<FullConfig> {
    FullConfig::load(path).map_err(|e| anyhow::anyhow!(e))
}

fn cmd_train(config: &Path, seeds: Vec<u64>, variant: Option<String>, out: &Path) -> Result<()> {
    let mut cfg = load_config(config)?;
    if !seeds.is_empty() {
        cfg.run.seeds = seeds;
    }
    if let Some(v) = variant {
        cfg.run.variant =
            Variant::parse(&v).with_context(|| format!("unknown variant {v:?}"))?;
    }
    println!(
        "training {:?} / {} on {} seed(s), {} env steps each",
        cfg.task.kind(),
        cfg.run.variant.name(),
        cfg.run.seeds.len(),
        cfg.ppo.total_env_steps
    );
    let runs = train(&cfg)?;
    for run in &runs {
        let dir = out
            .join(cfg.run.variant.name())
            .join(format!("seed{}", run.log.seed));
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("creating {}", dir.display()))?;
        export_runlog_json(&run.log, &dir.join("runlog.json"))?;
        export_runlog_csv(&run.log, &dir.join("runlog.csv"))?;
        run.checkpoint.save(&dir.join("checkpoint.bin"))?;
        println!(
            "seed {}: {} episodes, final success rate {:.2}, wrote {}",
            run.log.seed,
            run.log.episodes.len(),
            run.log.final_success_rate(50),
            dir.display()
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    config: &Path,
    checkpoint: &Path,
    episodes: u32,
    deterministic: bool,
    seed: u64,
    out: &Path,
    format: Option<String>,
) -> Result<()> {
    let cfg = load_config(config)?;
    let ck = Checkpoint::load(checkpoint)?;
    let report = evaluate(&ck, &cfg, episodes, deterministic, seed)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let (want_json, want_csv) = match format.as_deref() {
        None => (true, true),
        Some("json") => (true, false),
        Some("csv") => (false, true),
        Some(other) => bail!("unknown format {other:?} (expected csv or json)"),
    };
    if want_json {
        export_eval_json(&report, &out.join("eval.json"))?;
    }
    if want_csv {
        export_eval_csv(&report, &out.join("eval.csv"))?;
    }
    println!(
        "{} episodes: success rate {:.2}, mean successful-episode work {:.2} J",
        report.n_episodes, report.success_rate, report.mean_success_work
    );
    if !report.alphas.is_empty() {
        let mean_alpha = report.alphas.iter().sum::<f64>() / report.alphas.len() as f64;
        println!("mean low-friction path ratio: {mean_alpha:.3}");
    }
    if !report.mass_choices.is_empty() {
        println!(
            "heavy box chosen in {} of {} configuration(s)",
            report.heavy_choice_count,
            report.mass_choices.len()
        );
    }
    Ok(())
}

fn cmd_ablate(
    config: &Path,
    seeds: Option<String>,
    out: &Path,
    episodes: Option<u32>,
) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(list) = seeds {
        cfg.run.seeds = list
            .split(',')
            .map(|s| s.trim().parse::<u64>().with_context(|| format!("bad seed {s:?}")))
            .collect::<Result<Vec<u64>>>()?;
    }
    if let Some(n) = episodes {
        cfg.run.eval_episodes = n;
    }
    println!(
        "ablation over {:?}: 4 variants x {} seed(s)",
        cfg.task.kind(),
        cfg.run.seeds.len()
    );
    let table = ablation_suite(&cfg)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    export_ablation_json(&table, &out.join("ablation.json"))?;
    export_ablation_csv(&table, &out.join("ablation.csv"))?;
    for ve in &table.evals {
        export_eval_json(&ve.report, &out.join(format!("eval_{}.json", ve.variant.name())))?;
        let final_success = table
            .final_success
            .iter()
            .find(|(v, _)| *v == ve.variant)
            .map(|(_, s)| *s)
            .unwrap_or(0.0);
        let mut extra = String::new();
        if !ve.report.alphas.is_empty() {
            let mean_alpha =
                ve.report.alphas.iter().sum::<f64>() / ve.report.alphas.len() as f64;
            extra = format!(", mean alpha {mean_alpha:.3}");
        }
        if !ve.report.mass_choices.is_empty() {
            extra = format!(
                ", heavy chosen {}/{}",
                ve.report.heavy_choice_count,
                ve.report.mass_choices.len()
            );
        }
        println!(
            "{:>12}: train success {:.2}, eval success {:.2}, mean successful work {:.2} J{}",
            ve.variant.name(),
            final_success,
            ve.report.success_rate,
            ve.report.mean_success_work,
            extra
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_oracle_check(cases: u32, resolution: u32, out: &Path) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let mut writer = csv::Writer::from_path(out)
        .with_context(|| format!("creating {}", out.display()))?;
    writer.write_record(["width_x", "length_y", "closed_form", "quadrature", "rel_err"])?;
    let mut max_err = 0.0f64;
    for _ in 0..cases {
        let x: f64 = rng.gen_range(0.01..10.0);
        let aspect: f64 = rng.gen_range(1.0..100.0);
        let y = (x / aspect).max(0.01);
        let (x, y) = if rng.gen::<bool>() { (x, y) } else { (y, x) };
        let closed = rotation_shape_integral(x, y)?;
        let quad = quadrature_oracle(x, y, resolution)?;
        let rel = (closed - quad).abs() / quad.abs().max(1e-300);
        max_err = max_err.max(rel);
        writer.write_record([
            x.to_string(),
            y.to_string(),
            closed.to_string(),
            quad.to_string(),
            rel.to_string(),
        ])?;
    }
    writer.flush()?;
    println!(
        "{cases} patches at resolution {resolution}: max relative error {max_err:.3e} (wrote {})",
        out.display()
    );
    if max_err > 1e-5 {
        bail!("closed form and quadrature disagree beyond 1e-5");
    }
    Ok(())
}

fn cmd_export(input: &Path, format: &str, out: &Path) -> Result<()> {
    let is_json_input = input.extension().map(|e| e == "json").unwrap_or(false);
    match (is_json_input, format) {
        (true, "csv") => {
            if let Ok(log) = import_runlog_json(input) {
                export_runlog_csv(&log, out)?;
            } else if let Ok(report) = import_eval_json(input) {
                export_eval_csv(&report, out)?;
            } else {
                bail!("{} is neither a run log nor an eval report", input.display());
            }
        }
        (false, "json") => {
            if let Ok(log) = import_runlog_csv(input) {
                export_runlog_json(&log, out)?;
            } else if let Ok(report) = import_eval_csv(input) {
                export_eval_json(&report, out)?;
            } else {
                bail!("{} is neither a run log nor an eval report", input.display());
            }
        }
        (true, "json") | (false, "csv") => {
            bail!("input is already in the requested format")
        }
        (_, other) => bail!("unknown format {other:?} (expected csv or json)"),
    }
    println!("wrote {}", out.display());
    Ok(())
}
