//! Goal-oriented action planning and Monte Carlo tree search over macro
//! actions.

pub mod goal;
pub mod goap;
pub mod macros;
pub mod mcts;

pub use goal::{goap_heuristic, Fact, Goal, ItemKind};
pub use goap::{goap_plan, Plan, PlanError, DEFAULT_NODE_CAP};
pub use macros::{expand_macro, legal_macros, MacroAction};
pub use mcts::{mcts_plan, mcts_plan_cached, ExpansionCache, MacroPlan, MctsConfig, ServeValues};
