//! Experiment orchestration: seeded training runs, the four-variant
//! ablation matrix, evaluation metrics, and file export.

mod ablate;
mod config;
mod eval;
mod export;
mod train;

pub use ablate::{ablation_suite, AblationRow, AblationTable, VariantEval};
pub use config::{default_friction_config, default_mass_config, FullConfig, RunSettings};
pub use eval::{
    alpha_ratio, chosen_box, evaluate, merge_mass_choices, BoxLabel, ChoiceRecord, EvalEpisode,
    EvalReport, HistBin, TrajStep, TrajectoryLog, ALPHA_HISTOGRAM_BINS,
};
pub use export::{
    export_ablation_csv, export_ablation_json, export_eval_csv, export_eval_json,
    export_runlog_csv, export_runlog_json, import_eval_csv, import_eval_json, import_runlog_csv,
    import_runlog_json, ExportError,
};
pub use train::{train, train_seed, HarnessError, RunLog, SeedRun};

use serde::{Deserialize, Serialize};

use crate::envs::{BoundMode, CostSource, RewardConfig};

/// The four policies compared in the ablation: each variant pins the cost
/// source and normalization mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Pushing energy normalized by running bounds.
    Ours,
    /// No physical cost: step cost pinned to 1, episode cost to 0.
    NoCost,
    /// Pushing energy normalized by fixed, prior-knowledge bounds.
    FixedBounds,
    /// Robot output energy normalized by running bounds.
    RobotEnergy,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Ours,
        Variant::NoCost,
        Variant::FixedBounds,
        Variant::RobotEnergy,
    ];

    pub fn apply(self, reward: &mut RewardConfig) {
        let (source, mode) = match self {
            Variant::Ours => (CostSource::PushingEnergy, BoundMode::Running),
            Variant::NoCost => (CostSource::None, BoundMode::Running),
            Variant::FixedBounds => (CostSource::PushingEnergy, BoundMode::Fixed),
            Variant::RobotEnergy => (CostSource::RobotEnergy, BoundMode::Running),
        };
        reward.cost_source = source;
        reward.bound_mode = mode;
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Ours => "ours",
            Variant::NoCost => "nocost",
            Variant::FixedBounds => "fixedbounds",
            Variant::RobotEnergy => "robotenergy",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        match s.to_ascii_lowercase().as_str() {
            "ours" => Some(Variant::Ours),
            "nocost" | "no-cost" | "no_cost" => Some(Variant::NoCost),
            "fixedbounds" | "fixed-bounds" | "fixed_bounds" => Some(Variant::FixedBounds),
            "robotenergy" | "robot-energy" | "robot_energy" => Some(Variant::RobotEnergy),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_switch_table() {
        let mut r = RewardConfig::default();
        Variant::Ours.apply(&mut r);
        assert_eq!(
            (r.cost_source, r.bound_mode),
            (CostSource::PushingEnergy, BoundMode::Running)
        );
        Variant::NoCost.apply(&mut r);
        assert_eq!(r.cost_source, CostSource::None);
        Variant::FixedBounds.apply(&mut r);
        assert_eq!(
            (r.cost_source, r.bound_mode),
            (CostSource::PushingEnergy, BoundMode::Fixed)
        );
        Variant::RobotEnergy.apply(&mut r);
        assert_eq!(
            (r.cost_source, r.bound_mode),
            (CostSource::RobotEnergy, BoundMode::Running)
        );
    }

    #[test]
    fn variant_names_roundtrip() {
        for v in Variant::ALL {
            assert_eq!(Variant::parse(v.name()), Some(v));
        }
        assert_eq!(Variant::parse("no-cost"), Some(Variant::NoCost));
        assert_eq!(Variant::parse("bogus"), None);
    }
}
