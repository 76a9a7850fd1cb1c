//! Fixtures shared by the criterion benches.

use rowgame::harness::{prepare_game, PreparedGame};
use rowgame::{expand_sweep, ExperimentConfig};

/// Builds game `index` of a preset's sweep.
pub fn preset_game(cfg: &ExperimentConfig, index: usize) -> PreparedGame {
    let scenario = cfg.scenario().expect("preset scenario is valid");
    let setups = expand_sweep(&scenario, &cfg.sweep).expect("preset sweep is valid");
    prepare_game(cfg, &scenario, &setups[index % setups.len()]).expect("preset game builds")
}
