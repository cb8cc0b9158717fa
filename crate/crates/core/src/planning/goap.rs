//! A* over chef world states for a conjunctive goal.
//!
//! Walking is collapsed into single edges that jump straight to a pose where
//! an interaction is possible, costed by the precomputed pose distances. Path
//! cost is compared lexicographically as (action points, move actions) so
//! that, among equally fast plans, waiting is preferred over wandering.

use std::cmp::Ordering;
use std::collections::hash_map::Entry as Slot;
use std::collections::BinaryHeap;

use rustc_hash::FxHashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::goal::{goap_heuristic, Goal};
use crate::layout::{Pose, TileKind, TileMap};
use crate::world::{ChefAction, ChefWorld, HeldItem};

pub const DEFAULT_NODE_CAP: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub actions: Vec<ChefAction>,
    /// Action points consumed, equal to `actions.len()`.
    pub cost: u32,
    pub achieved: Goal,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("goal cannot be reached from this state")]
    PlanNotFound,
    #[error("search budget exhausted after {0} expansions")]
    BudgetExhausted(usize),
    #[error("no macro action can be expanded from the root state")]
    NoFeasibleMacro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Edge {
    GoTo(Pose),
    Act(ChefAction),
}

struct Node {
    world: ChefWorld,
    parent: Option<usize>,
    edge: Option<Edge>,
    g: (u32, u32),
}

#[derive(PartialEq, Eq)]
struct Entry {
    f: (u32, u32),
    depth: u32,
    seq: u64,
    node: usize,
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .cmp(&self.f)
            .then_with(|| self.depth.cmp(&other.depth))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Cheapest action sequence from `start` that satisfies `goal`.
///
/// Among entries with equal estimated cost the deepest is expanded first;
/// remaining ties go to successor order (walking edges by pose, then
/// Interact, Clear and Wait) and then insertion order.
pub fn goap_plan(layout: &TileMap, start: &ChefWorld, goal: &Goal, node_cap: usize) -> Result<Plan, PlanError> {
    if goal.is_satisfied(layout, start) {
        return Ok(Plan { actions: Vec::new(), cost: 0, achieved: goal.clone() });
    }
    let Some(h0) = goap_heuristic(layout, start, goal) else {
        return Err(PlanError::PlanNotFound);
    };
    let mut nodes = vec![Node { world: start.clone(), parent: None, edge: None, g: (0, 0) }];
    let mut best: FxHashMap<ChefWorld, (u32, u32)> = FxHashMap::default();
    best.insert(start.clone(), (0, 0));
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    open.push(Entry { f: (h0, 0), depth: 0, seq, node: 0 });
    let mut expansions = 0usize;
    let targets = goto_candidates(layout);

    while let Some(Entry { node: id, .. }) = open.pop() {
        let g = nodes[id].g;
        if best.get(&nodes[id].world).is_some_and(|b| *b < g) {
            continue;
        }
        if goal.is_satisfied(layout, &nodes[id].world) {
            return Ok(reconstruct(layout, &nodes, id, goal));
        }
        if expansions >= node_cap {
            return Err(PlanError::BudgetExhausted(expansions));
        }
        expansions += 1;
        for (edge, next, cost) in successors(layout, &nodes[id].world, &targets) {
            let ng = (g.0 + cost.0, g.1 + cost.1);
            let slot = match best.entry(next.clone()) {
                Slot::Occupied(e) if *e.get() <= ng => continue,
                slot => slot,
            };
            let Some(h) = goap_heuristic(layout, &next, goal) else {
                continue;
            };
            match slot {
                Slot::Occupied(mut e) => {
                    e.insert(ng);
                }
                Slot::Vacant(e) => {
                    e.insert(ng);
                }
            }
            nodes.push(Node { world: next, parent: Some(id), edge: Some(edge), g: ng });
            seq += 1;
            open.push(Entry { f: (ng.0 + h, ng.1), depth: ng.0, seq, node: nodes.len() - 1 });
        }
    }
    Err(PlanError::PlanNotFound)
}

/// Poses worth walking to: every pose facing an interaction target, plus the
/// poses on the center tile.
fn goto_candidates(layout: &TileMap) -> Vec<(Pose, Option<TileKind>)> {
    layout
        .poses()
        .iter()
        .filter_map(|pose| {
            if pose.pos == layout.center() {
                return Some((*pose, None));
            }
            let faced = layout.neighbor(pose.pos, pose.facing)?;
            let kind = layout.tile(faced);
            (!kind.is_walkable()).then_some((*pose, Some(kind)))
        })
        .collect()
}

/// Whether an interaction with the tile faced from `pose` could become
/// possible without the chef doing anything else first.
fn worth_visiting(layout: &TileMap, w: &ChefWorld, pose: Pose, kind: TileKind) -> bool {
    let faced = layout.neighbor(pose.pos, pose.facing).expect("candidate faces a tile");
    let held = w.chef.held;
    match kind {
        TileKind::Counter => w.counters.contains_key(&faced) == held.is_nothing(),
        TileKind::Pot => {
            let pot = &w.pots[layout.pot_index(faced).expect("pot tile is indexed")];
            !pot.contents.is_empty()
                || matches!(held, HeldItem::Ingredient(k) if pot.accepts(k))
        }
        TileKind::Dispenser(k) => held.is_nothing() && (!k.is_limited() || w.potato_inventory > 0),
        TileKind::PlateStation => held.is_nothing() || held == HeldItem::Plate,
        TileKind::CustomerSeat(_) => matches!(held, HeldItem::Dish(..)),
        _ => false,
    }
}

fn successors(
    layout: &TileMap,
    w: &ChefWorld,
    targets: &[(Pose, Option<TileKind>)],
) -> Vec<(Edge, ChefWorld, (u32, u32))> {
    let mut out = Vec::new();
    let here = w.chef.pose;
    for (pose, kind) in targets {
        if *pose == here || !kind.map_or(true, |k| worth_visiting(layout, w, *pose, k)) {
            continue;
        }
        let Some(d) = layout.pose_distance(here, *pose) else {
            continue;
        };
        if d == 0 || d > w.ap_remaining {
            continue;
        }
        let mut next = w.clone();
        next.pass_time(d, *pose);
        out.push((Edge::GoTo(*pose), next, (d, d)));
    }
    for action in [ChefAction::Interact, ChefAction::Clear, ChefAction::Wait] {
        let mut next = w.clone();
        if next.step(layout, action).is_ok() {
            out.push((Edge::Act(action), next, (1, 0)));
        }
    }
    out
}

fn reconstruct(layout: &TileMap, nodes: &[Node], mut id: usize, goal: &Goal) -> Plan {
    let mut edges = Vec::new();
    while let Some(parent) = nodes[id].parent {
        edges.push((nodes[parent].world.chef.pose, nodes[id].edge.expect("non-root has edge")));
        id = parent;
    }
    edges.reverse();
    let mut actions = Vec::new();
    for (from, edge) in edges {
        match edge {
            Edge::GoTo(to) => actions.extend(
                layout
                    .path(from, to)
                    .expect("distance table and path agree")
                    .into_iter()
                    .map(ChefAction::Move),
            ),
            Edge::Act(a) => actions.push(a),
        }
    }
    Plan { cost: actions.len() as u32, actions, achieved: goal.clone() }
}
