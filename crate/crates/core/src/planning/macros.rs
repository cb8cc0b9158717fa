//! Macro actions: short, goal-shaped chunks of chef behaviour that the tree
//! search composes and A* expands into primitive actions.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::goal::{Fact, Goal, ItemKind};
use super::goap::{goap_plan, Plan, PlanError};
use crate::layout::{Pos, TileMap};
use crate::rules::{Contents, DishType, Ingredient};
use crate::world::{ChefWorld, CustomerId, HeldItem, SeatStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MacroAction {
    /// Take a fresh ingredient from its dispenser.
    GetIngredient(Ingredient),
    /// Pick up whatever sits on this counter.
    RetrieveStaged(Pos),
    GetPlate,
    PutInPot(usize),
    WaitForCook(usize),
    PlateDish(usize),
    ServeDish(CustomerId),
    /// Put the held item down on this counter.
    Stage(Pos),
    ReturnToCenter,
}

impl fmt::Display for MacroAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MacroAction::GetIngredient(k) => write!(f, "get_ingredient({})", k.glyph()),
            MacroAction::RetrieveStaged(p) => write!(f, "retrieve_staged{p}"),
            MacroAction::GetPlate => f.write_str("get_plate"),
            MacroAction::PutInPot(p) => write!(f, "put_in_pot({p})"),
            MacroAction::WaitForCook(p) => write!(f, "wait_for_cook({p})"),
            MacroAction::PlateDish(p) => write!(f, "plate_dish({p})"),
            MacroAction::ServeDish(c) => write!(f, "serve_dish({c})"),
            MacroAction::Stage(p) => write!(f, "stage{p}"),
            MacroAction::ReturnToCenter => f.write_str("return_to_center"),
        }
    }
}

impl MacroAction {
    /// The goal this macro stands for when taken in world `w`.
    pub fn induced_goal(self, w: &ChefWorld) -> Option<Goal> {
        let held = ItemKind::of(w.chef.held);
        let goal = match self {
            MacroAction::GetIngredient(k) => {
                let staged = w.staged(k);
                let mut facts = vec![Fact::Holding(ItemKind::Ingredient(k))];
                if staged > 0 {
                    facts.push(Fact::Staged(k, staged));
                }
                Goal::new(facts)
            }
            MacroAction::RetrieveStaged(pos) => {
                let kind = ItemKind::of(*w.counters.get(&pos)?)?;
                Goal::new([Fact::Holding(kind), Fact::CounterEmpty(pos)])
            }
            MacroAction::GetPlate => Goal::new([Fact::Holding(ItemKind::Plate)]),
            MacroAction::PutInPot(p) => match w.chef.held {
                HeldItem::Ingredient(k) => Goal::new([
                    Fact::PotContents(p, w.pots.get(p)?.contents.with(k)),
                    Fact::HandEmpty,
                ]),
                _ => return None,
            },
            MacroAction::WaitForCook(p) => Goal::new([Fact::PotReady(p, w.pots.get(p)?.recipe()?)]),
            MacroAction::PlateDish(p) => {
                let dish = w.pots.get(p)?.recipe()?;
                Goal::new([Fact::Holding(ItemKind::Dish(dish)), Fact::PotContents(p, Contents::default())])
            }
            MacroAction::ServeDish(c) => match w.chef.held {
                HeldItem::Dish(d, _) => Goal::serve(c, d),
                _ => return None,
            },
            MacroAction::Stage(pos) => Goal::new([Fact::CounterHolds(pos, held?), Fact::HandEmpty]),
            MacroAction::ReturnToCenter => Goal::at_center(),
        };
        Some(goal)
    }
}

/// Expand a macro into primitive actions with A*.
pub fn expand_macro(layout: &TileMap, w: &ChefWorld, m: MacroAction, node_cap: usize) -> Result<Plan, PlanError> {
    let goal = m.induced_goal(w).ok_or(PlanError::PlanNotFound)?;
    goap_plan(layout, w, &goal, node_cap)
}

/// What the still-unsatisfied target goals ask for.
struct Demand {
    serves: Vec<(CustomerId, DishType)>,
    /// Servings still to be produced per dish, beyond those already plated
    /// or complete in a pot.
    to_cook: BTreeMap<DishType, i32>,
    stage: Vec<Ingredient>,
    center: bool,
}

impl Demand {
    fn new(layout: &TileMap, w: &ChefWorld, targets: &[Goal]) -> Demand {
        let mut d = Demand { serves: Vec::new(), to_cook: BTreeMap::new(), stage: Vec::new(), center: false };
        for fact in targets.iter().flat_map(|g| &g.facts) {
            if fact.holds(layout, w) {
                continue;
            }
            match *fact {
                Fact::Served(c, dish) => {
                    if w.customer(c).is_some_and(|s| s.status == SeatStatus::Waiting) && !d.serves.contains(&(c, dish)) {
                        d.serves.push((c, dish));
                        *d.to_cook.entry(dish).or_default() += 1;
                    }
                }
                Fact::Staged(k, _) => {
                    if !d.stage.contains(&k) {
                        d.stage.push(k);
                    }
                }
                Fact::AtCenter => d.center = true,
                _ => {}
            }
        }
        let mut have = |dish: DishType, n: i32| {
            if let Some(v) = d.to_cook.get_mut(&dish) {
                *v -= n;
            }
        };
        if let HeldItem::Dish(dish, s) = w.chef.held {
            have(dish, s as i32);
        }
        for item in w.counters.values() {
            if let HeldItem::Dish(dish, s) = item {
                have(*dish, *s as i32);
            }
        }
        for pot in &w.pots {
            if let Some(dish) = pot.recipe() {
                have(dish, dish.servings() as i32);
            }
        }
        d
    }

    fn served_dish(&self, dish: DishType) -> bool {
        self.serves.iter().any(|(_, d)| *d == dish)
    }

    fn cooking(&self) -> impl Iterator<Item = DishType> + '_ {
        self.to_cook.iter().filter(|(_, n)| **n > 0).map(|(d, _)| *d)
    }

    /// Whether adding `k` to a pot holding `contents` moves it towards a
    /// dish that still has to be cooked.
    fn pot_wants(&self, contents: Contents, k: Ingredient) -> bool {
        let next = contents.with(k);
        self.cooking().any(|d| next.is_subset_of(&d.recipe()))
    }
}

/// Nearest empty counter to the chef.
fn nearest_free_counter(layout: &TileMap, w: &ChefWorld) -> Option<Pos> {
    layout
        .usable_counters()
        .into_iter()
        .filter(|p| !w.counters.contains_key(p))
        .filter_map(|p| Some((layout.moves_to(w.chef.pose, p)?, p)))
        .min()
        .map(|(_, p)| p)
}

/// Empty counter closest to a pot among those the chef can still reach and
/// use with the remaining budget.
fn staging_counter(layout: &TileMap, w: &ChefWorld) -> Option<Pos> {
    layout
        .usable_counters()
        .into_iter()
        .filter(|p| !w.counters.contains_key(p))
        .filter(|p| layout.moves_to(w.chef.pose, *p).is_some_and(|d| d < w.ap_remaining))
        .filter_map(|p| {
            let to_pot = layout.pots().iter().filter_map(|pot| layout.moves_between(p, *pot)).min()?;
            Some((to_pot, p))
        })
        .min()
        .map(|(_, p)| p)
}

/// Macros worth considering from `w` in pursuit of the unsatisfied facts of
/// `targets`, in a fixed order.
pub fn legal_macros(layout: &TileMap, w: &ChefWorld, targets: &[Goal]) -> Vec<MacroAction> {
    let mut out = Vec::new();
    if w.ap_remaining == 0 {
        return out;
    }
    let demand = Demand::new(layout, w, targets);
    let wanted_by_pot = |k: Ingredient| w.pots.iter().any(|p| demand.pot_wants(p.contents, k));
    let plate_useful = w
        .pots
        .iter()
        .any(|p| p.recipe().is_some_and(|d| demand.served_dish(d)));
    match w.chef.held {
        HeldItem::Nothing => {
            for k in Ingredient::ALL {
                let stocked = !k.is_limited() || w.potato_inventory > 0;
                if stocked && (wanted_by_pot(k) || demand.stage.contains(&k)) {
                    out.push(MacroAction::GetIngredient(k));
                }
            }
            for (pos, item) in &w.counters {
                let useful = match *item {
                    HeldItem::Ingredient(k) => wanted_by_pot(k),
                    HeldItem::Dish(d, _) => demand.served_dish(d),
                    HeldItem::Plate => plate_useful,
                    HeldItem::Nothing => false,
                };
                if useful {
                    out.push(MacroAction::RetrieveStaged(*pos));
                }
            }
            if plate_useful {
                out.push(MacroAction::GetPlate);
            }
        }
        HeldItem::Ingredient(k) => {
            for (i, pot) in w.pots.iter().enumerate() {
                if pot.accepts(k) && demand.pot_wants(pot.contents, k) {
                    out.push(MacroAction::PutInPot(i));
                }
            }
            if demand.stage.contains(&k) {
                for c in [staging_counter(layout, w), nearest_free_counter(layout, w)].into_iter().flatten() {
                    if !out.contains(&MacroAction::Stage(c)) {
                        out.push(MacroAction::Stage(c));
                    }
                }
            }
        }
        HeldItem::Plate => {
            for (i, pot) in w.pots.iter().enumerate() {
                if pot.recipe().is_some_and(|d| demand.served_dish(d)) {
                    out.push(MacroAction::PlateDish(i));
                }
            }
        }
        HeldItem::Dish(d, _) => {
            for (c, dish) in &demand.serves {
                if *dish == d {
                    out.push(MacroAction::ServeDish(*c));
                }
            }
        }
    }
    let put_down = match w.chef.held {
        HeldItem::Nothing => false,
        HeldItem::Ingredient(_) => out.is_empty(),
        _ => true,
    };
    if put_down {
        if let Some(c) = nearest_free_counter(layout, w) {
            if !out.contains(&MacroAction::Stage(c)) {
                out.push(MacroAction::Stage(c));
            }
        }
    }
    for (i, pot) in w.pots.iter().enumerate() {
        if pot.is_cooking() && pot.recipe().is_some_and(|d| demand.served_dish(d)) {
            out.push(MacroAction::WaitForCook(i));
        }
    }
    if demand.center && w.chef.pose.pos != layout.center() {
        out.push(MacroAction::ReturnToCenter);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{load_layout, DEFAULT_LAYOUT};
    use crate::planning::goap::DEFAULT_NODE_CAP;
    use crate::world::SeatedCustomer;

    fn world(potatoes: u32) -> (TileMap, ChefWorld) {
        let map = load_layout(DEFAULT_LAYOUT).unwrap();
        let mut w = ChefWorld::new(&map, potatoes);
        let seat = SeatedCustomer { id: CustomerId(0), seat: 1, patience: 120, status: SeatStatus::Waiting };
        w.start_round(135, vec![seat], true);
        (map, w)
    }

    fn run(map: &TileMap, w: &mut ChefWorld, m: MacroAction) -> u32 {
        let plan = expand_macro(map, w, m, DEFAULT_NODE_CAP).unwrap();
        for a in &plan.actions {
            w.step(map, *a).unwrap();
        }
        plan.cost
    }

    #[test]
    fn macro_chain_serves_a_potato() {
        let (map, mut w) = world(1);
        let targets = [Goal::serve(CustomerId(0), DishType::P)];
        let chain = [
            MacroAction::GetIngredient(Ingredient::Potato),
            MacroAction::PutInPot(1),
            MacroAction::GetPlate,
            MacroAction::PlateDish(1),
            MacroAction::ServeDish(CustomerId(0)),
        ];
        for m in chain {
            assert!(legal_macros(&map, &w, &targets).contains(&m), "{m} not offered");
            run(&map, &mut w, m);
        }
        assert!(targets[0].is_satisfied(&map, &w));
        assert!(legal_macros(&map, &w, &targets).is_empty());
    }

    #[test]
    fn wait_for_cook_is_only_waits() {
        let (map, mut w) = world(0);
        run(&map, &mut w, MacroAction::GetIngredient(Ingredient::Onion));
        run(&map, &mut w, MacroAction::PutInPot(0));
        let progress = w.pots[0].progress;
        let plan = expand_macro(&map, &w, MacroAction::WaitForCook(0), DEFAULT_NODE_CAP).unwrap();
        assert_eq!(plan.cost, DishType::O.cook_time() - progress);
        assert!(plan.actions.iter().all(|a| *a == crate::world::ChefAction::Wait));
    }

    #[test]
    fn get_ingredient_leaves_staged_items_alone() {
        let (map, mut w) = world(0);
        run(&map, &mut w, MacroAction::GetIngredient(Ingredient::Tomato));
        let c = staging_counter(&map, &w).unwrap();
        run(&map, &mut w, MacroAction::Stage(c));
        assert_eq!(w.staged(Ingredient::Tomato), 1);
        run(&map, &mut w, MacroAction::GetIngredient(Ingredient::Tomato));
        assert_eq!(w.staged(Ingredient::Tomato), 1);
        assert_eq!(w.chef.held, HeldItem::Ingredient(Ingredient::Tomato));
    }
}
