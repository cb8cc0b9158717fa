//! Upper-confidence tree search over macro-action chains.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::goal::{Fact, Goal};
use super::goap::{PlanError, DEFAULT_NODE_CAP};
use super::macros::{expand_macro, legal_macros, MacroAction};
use crate::layout::TileMap;
use crate::rules::DishType;
use crate::world::{ChefWorld, CustomerId, SeatStatus};

/// Estimated value of serving a customer a dish.
pub type ServeValues = BTreeMap<(CustomerId, DishType), f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MctsConfig {
    /// Simulations to run.
    pub iterations: usize,
    pub exploration: f64,
    /// Expansion limit for each A* call.
    pub node_cap: usize,
    /// Longest macro chain a single simulation may build.
    pub max_chain: usize,
    /// Stop as soon as some simulated chain satisfies every candidate goal.
    pub stop_when_complete: bool,
    pub seed: u64,
}

impl Default for MctsConfig {
    fn default() -> Self {
        MctsConfig {
            iterations: 10_000,
            exploration: std::f64::consts::SQRT_2,
            node_cap: DEFAULT_NODE_CAP,
            max_chain: 48,
            stop_when_complete: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroPlan {
    pub chain: Vec<MacroAction>,
    /// Value of the serves the chain achieves.
    pub expected_tip: f64,
    /// Action points the chain consumes.
    pub expected_cost: u32,
    /// Candidate goals satisfied at the end of the chain.
    pub goals_satisfied: usize,
    pub simulations: usize,
    /// The world after executing the whole chain.
    #[serde(skip)]
    pub final_world: Option<ChefWorld>,
}

impl MacroPlan {
    pub fn satisfies_all(&self, candidates: &[Goal]) -> bool {
        self.goals_satisfied == candidates.len()
    }
}

struct Node {
    world: ChefWorld,
    cost: u32,
    parent: Option<usize>,
    via: Option<MacroAction>,
    children: Vec<usize>,
    untried: Vec<MacroAction>,
    visits: u32,
    value: f64,
    exhausted: bool,
}

type Expansion = Result<(u32, ChefWorld), PlanError>;

/// Macro expansions remembered across searches in one layout.
#[derive(Debug, Default)]
pub struct ExpansionCache {
    node_cap: usize,
    map: FxHashMap<(ChefWorld, MacroAction), Expansion>,
}

impl ExpansionCache {
    pub fn new() -> Self {
        ExpansionCache::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

struct Search<'a> {
    layout: &'a TileMap,
    candidates: &'a [Goal],
    values: &'a ServeValues,
    start: &'a ChefWorld,
    cfg: MctsConfig,
    cache: &'a mut FxHashMap<(ChefWorld, MacroAction), Expansion>,
    max_value: f64,
}

impl Search<'_> {
    fn expand(&mut self, w: &ChefWorld, m: MacroAction) -> Expansion {
        let key = (w.clone(), m);
        if let Some(hit) = self.cache.get(&key) {
            return hit.clone();
        }
        let out = expand_macro(self.layout, w, m, self.cfg.node_cap).map(|plan| {
            let mut next = w.clone();
            for a in &plan.actions {
                next.step(self.layout, *a).expect("planned actions are legal");
            }
            (plan.cost, next)
        });
        self.cache.insert(key, out.clone());
        out
    }

    fn complete(&self, w: &ChefWorld) -> bool {
        self.candidates.iter().all(|g| g.is_satisfied(self.layout, w))
    }

    fn options(&self, w: &ChefWorld) -> Vec<MacroAction> {
        if self.complete(w) {
            Vec::new()
        } else {
            legal_macros(self.layout, w, self.candidates)
        }
    }

    /// Value of serves made since the start, and candidate goals satisfied.
    fn score(&self, w: &ChefWorld) -> (f64, usize) {
        let tip = w
            .seats
            .iter()
            .filter_map(|s| match s.status {
                SeatStatus::Served(d) if self.start.customer(s.id).is_some_and(|c| c.status == SeatStatus::Waiting) => {
                    Some(self.values.get(&(s.id, d)).copied().unwrap_or(0.0))
                }
                _ => None,
            })
            .sum();
        let goals = self.candidates.iter().filter(|g| g.is_satisfied(self.layout, w)).count();
        (tip, goals)
    }

    /// Reward in [0, 1] used for the tree statistics.
    fn reward(&self, tip: f64, goals: usize, cost: u32) -> f64 {
        let tip_part = if self.max_value > 0.0 { tip / self.max_value } else { 0.0 };
        let goal_part = if self.candidates.is_empty() { 0.0 } else { goals as f64 / self.candidates.len() as f64 };
        let budget = self.start.ap_remaining.max(1) as f64;
        0.9 * tip_part + 0.09 * goal_part + 0.01 * (1.0 - cost as f64 / budget)
    }
}

/// Search for the macro chain that maximizes the value of serves made, then
/// the number of candidate goals satisfied, then minimizes action points.
///
/// The result only improves as `cfg.iterations` grows: every run with a
/// larger cap replays the smaller run's simulations first.
pub fn mcts_plan(
    layout: &TileMap,
    world: &ChefWorld,
    candidates: &[Goal],
    values: &ServeValues,
    cfg: &MctsConfig,
) -> Result<MacroPlan, PlanError> {
    mcts_plan_cached(layout, world, candidates, values, cfg, &mut ExpansionCache::new())
}

/// `mcts_plan` reusing expansions from earlier searches in the same layout.
pub fn mcts_plan_cached(
    layout: &TileMap,
    world: &ChefWorld,
    candidates: &[Goal],
    values: &ServeValues,
    cfg: &MctsConfig,
    cache: &mut ExpansionCache,
) -> Result<MacroPlan, PlanError> {
    if cache.node_cap != cfg.node_cap {
        cache.map.clear();
        cache.node_cap = cfg.node_cap;
    }
    let max_value = candidates
        .iter()
        .flat_map(|g| &g.facts)
        .filter_map(|f| match f {
            Fact::Served(c, d) => values.get(&(*c, *d)).copied(),
            _ => None,
        })
        .sum();
    let mut s = Search {
        layout,
        candidates,
        values,
        start: world,
        cfg: *cfg,
        cache: &mut cache.map,
        max_value,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let root_untried = s.options(world);
    let mut nodes = vec![Node {
        world: world.clone(),
        cost: 0,
        parent: None,
        via: None,
        children: Vec::new(),
        exhausted: root_untried.is_empty(),
        untried: root_untried,
        visits: 0,
        value: 0.0,
    }];
    let (tip0, goals0) = s.score(world);
    let mut best = MacroPlan {
        chain: Vec::new(),
        expected_tip: tip0,
        expected_cost: 0,
        goals_satisfied: goals0,
        simulations: 0,
        final_world: Some(world.clone()),
    };
    let mut simulations = 0;

    while simulations < cfg.iterations && !nodes[0].exhausted {
        simulations += 1;
        // selection and expansion
        let mut id = 0;
        loop {
            if !nodes[id].untried.is_empty() {
                let pick = rng.gen_range(0..nodes[id].untried.len());
                let m = nodes[id].untried.swap_remove(pick);
                let from = nodes[id].world.clone();
                if let Ok((cost, next)) = s.expand(&from, m) {
                    let untried = s.options(&next);
                    nodes.push(Node {
                        exhausted: untried.is_empty(),
                        untried,
                        world: next,
                        cost: nodes[id].cost + cost,
                        parent: Some(id),
                        via: Some(m),
                        children: Vec::new(),
                        visits: 0,
                        value: 0.0,
                    });
                    let child = nodes.len() - 1;
                    nodes[id].children.push(child);
                    id = child;
                    break;
                }
                continue;
            }
            let parent_visits = nodes[id].visits.max(1) as f64;
            let next = nodes[id]
                .children
                .iter()
                .copied()
                .filter(|c| !nodes[*c].exhausted)
                .map(|c| {
                    let n = &nodes[c];
                    let mean = if n.visits == 0 { f64::INFINITY } else { n.value / n.visits as f64 };
                    let bonus = cfg.exploration * (parent_visits.ln() / n.visits.max(1) as f64).sqrt();
                    (mean + bonus, c)
                })
                .fold(None, |acc: Option<(f64, usize)>, x| match acc {
                    Some(a) if a.0 >= x.0 => Some(a),
                    _ => Some(x),
                });
            match next {
                Some((_, c)) => id = c,
                None => {
                    nodes[id].exhausted = true;
                    break;
                }
            }
        }

        // rollout
        let mut w = nodes[id].world.clone();
        let mut cost = nodes[id].cost;
        let mut tail = Vec::new();
        let depth = chain_to(&nodes, id).len();
        while depth + tail.len() < cfg.max_chain {
            let mut options = s.options(&w);
            let mut stepped = false;
            while !options.is_empty() {
                let m = options.swap_remove(rng.gen_range(0..options.len()));
                if let Ok((c, next)) = s.expand(&w, m) {
                    w = next;
                    cost += c;
                    tail.push(m);
                    stepped = true;
                    break;
                }
            }
            if !stepped {
                break;
            }
        }

        let (tip, goals) = s.score(&w);
        let better = (tip, goals, std::cmp::Reverse(cost))
            .partial_cmp(&(best.expected_tip, best.goals_satisfied, std::cmp::Reverse(best.expected_cost)))
            == Some(std::cmp::Ordering::Greater);
        if better {
            let mut chain = chain_to(&nodes, id);
            chain.extend(tail);
            best = MacroPlan {
                chain,
                expected_tip: tip,
                expected_cost: cost,
                goals_satisfied: goals,
                simulations: 0,
                final_world: Some(w),
            };
        }

        // backpropagation
        let r = s.reward(tip, goals, cost);
        let mut cur = Some(id);
        while let Some(c) = cur {
            nodes[c].visits += 1;
            nodes[c].value += r;
            if !nodes[c].exhausted
                && nodes[c].untried.is_empty()
                && nodes[c].children.iter().all(|k| nodes[*k].exhausted)
            {
                nodes[c].exhausted = true;
            }
            cur = nodes[c].parent;
        }

        if cfg.stop_when_complete && best.goals_satisfied == candidates.len() {
            break;
        }
    }
    best.simulations = simulations;
    if nodes.len() == 1 && !s.complete(world) {
        return Err(PlanError::NoFeasibleMacro);
    }
    Ok(best)
}

fn chain_to(nodes: &[Node], mut id: usize) -> Vec<MacroAction> {
    let mut chain = Vec::new();
    while let Some(m) = nodes[id].via {
        chain.push(m);
        id = nodes[id].parent.expect("nodes with a macro have a parent");
    }
    chain.reverse();
    chain
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{load_layout, DEFAULT_LAYOUT};
    use crate::rules::{CustomerProfile, Ingredient};
    use crate::world::SeatedCustomer;

    fn setup(potatoes: u32, seats: &[(u8, u32)]) -> (TileMap, ChefWorld) {
        let map = load_layout(DEFAULT_LAYOUT).unwrap();
        let mut w = ChefWorld::new(&map, potatoes);
        let seated = seats
            .iter()
            .map(|(seat, patience)| SeatedCustomer {
                id: CustomerId(seat - 1),
                seat: *seat,
                patience: *patience,
                status: SeatStatus::Waiting,
            })
            .collect();
        w.start_round(135, seated, true);
        (map, w)
    }

    fn cfg(iterations: usize) -> MctsConfig {
        MctsConfig { iterations, seed: 3, ..MctsConfig::default() }
    }

    #[test]
    fn serves_a_single_tourist() {
        let (map, w) = setup(2, &[(1, 120)]);
        let c = CustomerId(0);
        let values: ServeValues = DishType::ALL.iter().map(|d| ((c, *d), CustomerProfile::Tourist.tip(*d) as f64)).collect();
        let goals: Vec<Goal> = DishType::ALL.iter().map(|d| Goal::serve(c, *d)).collect();
        let plan = mcts_plan(&map, &w, &goals, &values, &cfg(300)).unwrap();
        assert_eq!(plan.expected_tip, 20.0);
        assert!(plan.simulations <= 300);
        assert!(plan.chain.contains(&MacroAction::ServeDish(c)));
    }

    #[test]
    fn more_iterations_never_hurt() {
        let (map, w) = setup(3, &[(1, 120), (2, 120), (3, 70), (4, 70)]);
        let goals: Vec<Goal> = [(0, DishType::P), (1, DishType::O), (2, DishType::P), (3, DishType::TTTT)]
            .into_iter()
            .map(|(c, d)| Goal::serve(CustomerId(c), d))
            .collect();
        let values: ServeValues = goals
            .iter()
            .map(|g| match g.facts[0] {
                Fact::Served(c, d) => ((c, d), 1.0),
                _ => unreachable!(),
            })
            .collect();
        let mut last: Option<MacroPlan> = None;
        for iterations in [1, 10, 100, 400] {
            let plan = mcts_plan(&map, &w, &goals, &values, &cfg(iterations)).unwrap();
            assert!(plan.simulations <= iterations);
            if let Some(prev) = &last {
                let key = |p: &MacroPlan| (p.expected_tip, p.goals_satisfied, std::cmp::Reverse(p.expected_cost));
                assert!(key(&plan) >= key(prev), "{iterations} iterations did worse");
            }
            last = Some(plan);
        }
        let again = mcts_plan(&map, &w, &goals, &values, &cfg(400)).unwrap();
        assert_eq!(again.chain, last.unwrap().chain);
    }

    #[test]
    fn staging_goal_places_an_ingredient() {
        let (map, w) = setup(0, &[]);
        let goals = [Goal::stage(Ingredient::Tomato, 1), Goal::at_center()];
        let cfg = MctsConfig { stop_when_complete: true, ..cfg(200) };
        let plan = mcts_plan(&map, &w, &goals, &ServeValues::new(), &cfg).unwrap();
        assert!(plan.satisfies_all(&goals));
        assert_eq!(plan.final_world.unwrap().staged(Ingredient::Tomato), 1);
    }

    #[test]
    fn one_iteration_yields_a_legal_chain() {
        let (map, w) = setup(2, &[(1, 120), (2, 120)]);
        let goals = [Goal::serve(CustomerId(0), DishType::P), Goal::serve(CustomerId(1), DishType::O)];
        let values: ServeValues = [((CustomerId(0), DishType::P), 1.0), ((CustomerId(1), DishType::O), 1.0)].into();
        let plan = mcts_plan(&map, &w, &goals, &values, &cfg(1)).unwrap();
        assert_eq!(plan.simulations, 1);
        let mut world = w.clone();
        for m in &plan.chain {
            let p = expand_macro(&map, &world, *m, DEFAULT_NODE_CAP).unwrap();
            for a in p.actions {
                world.step(&map, a).unwrap();
            }
        }
        assert_eq!(Some(world), plan.final_world);
    }

    #[test]
    fn satisfied_goals_need_no_chain() {
        let (map, w) = setup(0, &[]);
        let plan = mcts_plan(&map, &w, &[Goal::at_center()], &ServeValues::new(), &cfg(50)).unwrap();
        assert!(plan.chain.is_empty());
        assert_eq!(plan.goals_satisfied, 1);
    }

    #[test]
    fn impossible_goal_reports_no_macro() {
        let (map, w) = setup(0, &[(1, 120)]);
        let goals = [Goal::serve(CustomerId(0), DishType::PP)];
        let values: ServeValues = [((CustomerId(0), DishType::PP), 1.0)].into();
        let err = mcts_plan(&map, &w, &goals, &values, &cfg(50)).unwrap_err();
        assert_eq!(err, PlanError::NoFeasibleMacro);
    }
}
