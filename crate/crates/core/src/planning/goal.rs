//! Goals as conjunctions of facts about the chef's world, and an admissible
//! lower bound on the action points needed to satisfy them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::layout::{Direction, Pos, Pose, TileMap};
use crate::rules::{Contents, DishType, Ingredient};
use crate::world::{ChefWorld, CustomerId, HeldItem, SeatStatus};

/// An item class, ignoring remaining servings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ItemKind {
    Ingredient(Ingredient),
    Plate,
    Dish(DishType),
}

impl ItemKind {
    pub fn of(item: HeldItem) -> Option<ItemKind> {
        match item {
            HeldItem::Nothing => None,
            HeldItem::Ingredient(k) => Some(ItemKind::Ingredient(k)),
            HeldItem::Plate => Some(ItemKind::Plate),
            HeldItem::Dish(d, _) => Some(ItemKind::Dish(d)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Fact {
    /// The customer has been served this dish.
    Served(CustomerId, DishType),
    /// At least `n` ingredients of a kind sit on counters.
    Staged(Ingredient, u32),
    AtCenter,
    Holding(ItemKind),
    HandEmpty,
    /// The pot holds exactly these contents.
    PotContents(usize, Contents),
    /// The pot holds this dish, fully cooked.
    PotReady(usize, DishType),
    CounterHolds(Pos, ItemKind),
    CounterEmpty(Pos),
}

impl Fact {
    pub fn holds(&self, layout: &TileMap, w: &ChefWorld) -> bool {
        match *self {
            Fact::Served(c, d) => w.customer(c).is_some_and(|s| s.status == SeatStatus::Served(d)),
            Fact::Staged(k, n) => w.staged(k) >= n,
            Fact::AtCenter => w.chef.pose.pos == layout.center(),
            Fact::Holding(kind) => ItemKind::of(w.chef.held) == Some(kind),
            Fact::HandEmpty => w.chef.held.is_nothing(),
            Fact::PotContents(p, c) => w.pots[p].contents == c,
            Fact::PotReady(p, d) => w.pots[p].ready == Some(d),
            Fact::CounterHolds(pos, kind) => w.counters.get(&pos).and_then(|i| ItemKind::of(*i)) == Some(kind),
            Fact::CounterEmpty(pos) => !w.counters.contains_key(&pos),
        }
    }
}

/// A conjunction of facts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Goal {
    pub facts: Vec<Fact>,
}

impl Goal {
    pub fn new(facts: impl IntoIterator<Item = Fact>) -> Goal {
        Goal { facts: facts.into_iter().collect() }
    }

    pub fn serve(customer: CustomerId, dish: DishType) -> Goal {
        Goal::new([Fact::Served(customer, dish)])
    }

    /// Raise the number of staged ingredients of `kind` to `n`.
    pub fn stage(kind: Ingredient, n: u32) -> Goal {
        Goal::new([Fact::Staged(kind, n)])
    }

    pub fn at_center() -> Goal {
        Goal::new([Fact::AtCenter])
    }

    pub fn is_satisfied(&self, layout: &TileMap, w: &ChefWorld) -> bool {
        self.facts.iter().all(|f| f.holds(layout, w))
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, fact) in self.facts.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            match fact {
                Fact::Served(c, d) => write!(f, "served({c},{d})")?,
                Fact::Staged(k, n) => write!(f, "staged({}>={n})", k.glyph())?,
                other => write!(f, "{other:?}")?,
            }
        }
        Ok(())
    }
}

/// Lower bound on the action points needed to satisfy `goal` from `w`, or
/// `None` when the goal provably cannot be satisfied within the remaining
/// budget, potato supply or customer patience.
pub fn goap_heuristic(layout: &TileMap, w: &ChefWorld, goal: &Goal) -> Option<u32> {
    let mut h = 0;
    for fact in &goal.facts {
        if fact.holds(layout, w) {
            continue;
        }
        h = h.max(fact_bound(layout, w, fact)?);
    }
    (h <= w.ap_remaining).then_some(h)
}

fn held_busy(w: &ChefWorld) -> u32 {
    u32::from(!w.chef.held.is_nothing())
}

fn moves(layout: &TileMap, w: &ChefWorld, target: Pos) -> Option<u32> {
    layout.moves_to(w.chef.pose, target)
}

/// Potatoes still obtainable: in stock, held or staged.
fn free_potatoes(w: &ChefWorld) -> u32 {
    w.potato_inventory
        + u32::from(w.chef.held == HeldItem::Ingredient(Ingredient::Potato))
        + w.staged(Ingredient::Potato)
}

/// Earliest action index at which an ingredient or plate could be picked up
/// from each of its sources, paired with the source tile.
fn fetch_options(layout: &TileMap, w: &ChefWorld, kind: ItemKind) -> Vec<(u32, Pos)> {
    let busy = held_busy(w);
    let mut sources: Vec<Pos> = w
        .counters
        .iter()
        .filter(|(_, i)| ItemKind::of(**i) == Some(kind))
        .map(|(p, _)| *p)
        .collect();
    match kind {
        ItemKind::Ingredient(k) if !k.is_limited() || w.potato_inventory > 0 => sources.push(layout.dispenser(k)),
        ItemKind::Plate => sources.extend(layout.plate_stations()),
        _ => {}
    }
    sources
        .into_iter()
        .filter_map(|s| Some((moves(layout, w, s)? + 1 + busy, s)))
        .collect()
}

/// Earliest action index at which the pot at `pot` can hold exactly
/// `target`, or `None` if the potato supply rules it out.
fn fill_time(layout: &TileMap, w: &ChefWorld, pot: usize, target: Contents) -> Option<u32> {
    let at = layout.pots()[pot];
    let cur = w.pots[pot].contents;
    let (clear, base) = match cur.missing_for(&target) {
        Some(_) => (0, cur),
        None => (1, Contents::default()),
    };
    let m = base.missing_for(&target).unwrap_or(0) as u32;
    let potatoes = target.count(Ingredient::Potato).saturating_sub(base.count(Ingredient::Potato)) as u32;
    if potatoes > free_potatoes(w) {
        return None;
    }
    if m == 0 {
        return Some(moves(layout, w, at)? + clear);
    }
    let needed = |k: Ingredient| target.count(k) > base.count(k);
    let first_add = match w.chef.held {
        HeldItem::Ingredient(k) if needed(k) => moves(layout, w, at)? + 1,
        _ => Ingredient::ALL
            .into_iter()
            .filter(|k| needed(*k))
            .flat_map(|k| fetch_options(layout, w, ItemKind::Ingredient(k)))
            .filter_map(|(t, s)| Some(t + layout.moves_between(s, at)? + 1))
            .min()?,
    };
    Some(first_add + clear + 2 * (m - 1))
}

/// Ways of coming to hold a plated `dish`: the earliest action index at
/// which it can be in hand, and the tile it is taken from (`None` when it is
/// already held).
fn dish_options(layout: &TileMap, w: &ChefWorld, dish: DishType) -> Vec<(u32, Option<Pos>)> {
    if let HeldItem::Dish(d, _) = w.chef.held {
        if d == dish {
            return vec![(0, None)];
        }
    }
    let busy = held_busy(w);
    let mut out = Vec::new();
    for (pos, item) in &w.counters {
        if matches!(item, HeldItem::Dish(d, _) if *d == dish) {
            if let Some(m) = moves(layout, w, *pos) {
                out.push((m + 1 + busy, Some(*pos)));
            }
        }
    }
    let recipe = dish.recipe();
    for (i, pot) in w.pots.iter().enumerate() {
        let at = layout.pots()[i];
        if pot.contents == recipe {
            let arrival = if w.chef.held == HeldItem::Plate {
                moves(layout, w, at)
            } else {
                fetch_options(layout, w, ItemKind::Plate)
                    .into_iter()
                    .filter_map(|(t, s)| Some(t + layout.moves_between(s, at)?))
                    .min()
            };
            if let Some(arrival) = arrival {
                let rem = pot.remaining().unwrap_or(0);
                out.push((rem.max(arrival + 1), Some(at)));
            }
        } else if let Some(last_add) = fill_time(layout, w, i, recipe) {
            // plating needs the cook time and at least a plate pickup
            out.push((last_add + dish.cook_time().max(2), Some(at)));
        }
    }
    out
}

fn fact_bound(layout: &TileMap, w: &ChefWorld, fact: &Fact) -> Option<u32> {
    let busy = held_busy(w);
    match *fact {
        Fact::Served(c, d) => {
            let seat = w.customer(c)?;
            if seat.status != SeatStatus::Waiting {
                return None;
            }
            let seat_pos = layout.seat(seat.seat);
            let bound = dish_options(layout, w, d)
                .into_iter()
                .filter_map(|(t, from)| {
                    let walk = match from {
                        Some(p) => layout.moves_between(p, seat_pos)?,
                        None => moves(layout, w, seat_pos)?,
                    };
                    Some(t + walk + 1)
                })
                .min()?;
            if w.patience_clock && w.actions_this_round + bound > seat.patience {
                return None;
            }
            Some(bound)
        }
        Fact::Staged(k, n) => {
            let missing = n.saturating_sub(w.staged(k));
            let holding = w.chef.held == HeldItem::Ingredient(k);
            if k.is_limited() && missing - u32::from(holding) > w.potato_inventory {
                return None;
            }
            let empty: Vec<Pos> = layout
                .usable_counters()
                .into_iter()
                .filter(|p| !w.counters.contains_key(p))
                .collect();
            if (empty.len() as u32) < missing {
                return None;
            }
            let first = if holding {
                empty.iter().filter_map(|c| moves(layout, w, *c)).min()? + 1
            } else {
                let disp = layout.dispenser(k);
                let fetch = moves(layout, w, disp)? + 1 + busy;
                fetch + empty.iter().filter_map(|c| layout.moves_between(disp, *c)).min()? + 1
            };
            Some(first + 2 * (missing - 1))
        }
        Fact::AtCenter => Direction::ALL
            .into_iter()
            .filter_map(|facing| layout.pose_distance(w.chef.pose, Pose { pos: layout.center(), facing }))
            .min(),
        Fact::Holding(ItemKind::Dish(d)) => dish_options(layout, w, d).into_iter().map(|(t, _)| t).min(),
        Fact::Holding(kind) => fetch_options(layout, w, kind).into_iter().map(|(t, _)| t).min(),
        Fact::HandEmpty => Some(1),
        Fact::PotContents(p, target) => fill_time(layout, w, p, target),
        Fact::PotReady(p, d) => {
            if w.pots[p].contents == d.recipe() {
                Some(w.pots[p].remaining().unwrap_or(0).max(1))
            } else {
                Some(fill_time(layout, w, p, d.recipe())? + d.cook_time())
            }
        }
        Fact::CounterHolds(pos, kind) => {
            let occupied = u32::from(w.counters.contains_key(&pos));
            if ItemKind::of(w.chef.held) == Some(kind) {
                return Some(moves(layout, w, pos)? + 1 + 2 * occupied);
            }
            match kind {
                ItemKind::Dish(_) => Some(moves(layout, w, pos)? + 2),
                _ => fetch_options(layout, w, kind)
                    .into_iter()
                    .filter(|(_, s)| *s != pos)
                    .filter_map(|(t, s)| Some(t + layout.moves_between(s, pos)? + 1))
                    .min(),
            }
        }
        Fact::CounterEmpty(pos) => Some(moves(layout, w, pos)? + 1 + busy),
    }
}
