//! Game-theoretic simulation of right-of-way conflicts between road users.
//!
//! Two agents (pedestrian or vehicle) on fixed paths play a sequence of
//! simultaneous-move stage games over a short horizon. Each node offers a
//! handful of kinematically feasible trajectories; utilities combine a safety
//! term and a progress term through a risk-tolerance threshold. The tree is
//! solved either for a subgame-perfect ε-Nash equilibrium or with quantal
//! level-1 reasoning over an optimistic level-0 opponent, and the realized
//! play is mapped onto a strategy taxonomy.
//!
//! ```no_run
//! use rowgame::{run_batch, summarize, Concept, ExperimentConfig};
//!
//! let cfg = ExperimentConfig::pedestrian_vehicle();
//! let records = run_batch(&cfg, Concept::Qlk, 4)?;
//! let summary = summarize(&records, Some(&cfg))?;
//! println!("{}", summary.distribution_collapsed.len());
//! # Ok::<(), rowgame::Error>(())
//! ```

pub mod config;
pub mod error;
pub mod game;
pub mod geom;
pub mod harness;
pub mod scenario;
pub mod solvers;
pub mod taxonomy;
pub mod trajectory;
pub mod utility;

pub use config::{ExperimentConfig, QlkPlay, SolverConfig};
pub use error::{Error, Result};
pub use game::{
    build_tree, GameNode, GameParams, GameTree, JointAction, NodeId, PayoffTree, PureProfile,
    QuantalProfile, StrategyProfile, TreeShape,
};
pub use geom::{ConvexPolygon, Point, Polyline};
pub use harness::{
    aggregate_distribution, emit_report, prepare_game, records_from_csv, records_to_csv, run_batch,
    run_batch_concepts, summarize, type_conditional, DistributionTable, GameRecord, PreparedGame,
    Summary,
};
pub use scenario::{
    expand_sweep, AgentDoc, AgentKind, AgentSpec, GameSetup, Scenario, ScenarioKind, SweepConfig,
};
pub use solvers::{
    solve_level0_maxmax, solve_qlk_level1, solve_spene, verify_epsilon_equilibrium, Concept,
    SolverDiagnostics, SolverResult, VerifyReport,
};
pub use taxonomy::{
    classify_outcome, classify_strategy, detect_deadlock, extract_symbols, Category, OutcomeRecord,
    RowStatus, SymbolSequence, TaxonomyLabel,
};
pub use trajectory::{AgentState, KinematicLimits, Maneuver, Trajectory, TrajectoryConfig};
pub use utility::{evaluate_payoffs, node_value, UtilityContext, UtilityParams};
