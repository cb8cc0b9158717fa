//! Core of the cooperative kitchen simulator: game rules, the chef's
//! hierarchical planners, and the heuristic and apprentice chef agents.

pub mod agents;
pub mod game;
pub mod layout;
pub mod log;
pub mod planning;
pub mod rules;
pub mod scenario;
pub mod world;

pub use game::{
    new_game, ChefObservation, Customer, CustomerStatus, GameError, GameState, Phase, RecommendationEntry,
    RuleConfig, WaiterObservation, WaiterRecommendation,
};
pub use layout::{load_layout, Direction, Pos, Pose, TileKind, TileMap, DEFAULT_LAYOUT};
pub use log::{replay, Episode, EpisodeLog, LogRecord};
pub use rules::{compute_tip, CustomerProfile, DishType, Ingredient};
pub use scenario::{normalize_tip, sample_scenario, ScenarioConfig};
pub use world::{ChefAction, ChefWorld, CustomerId, HeldItem, WorldEvent};
