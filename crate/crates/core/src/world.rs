//! Physical kitchen state as seen by the chef, and the per-action transition
//! rules shared by the game engine and the planners.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::{Direction, Pos, Pose, TileKind, TileMap};
use crate::rules::{Contents, DishType, Ingredient};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CustomerId(pub u8);

impl CustomerId {
    /// Chef performance round (1..=3) this customer is seated in.
    pub fn chef_round(self) -> u8 {
        self.0 / 4 + 1
    }

    pub fn seat(self) -> u8 {
        self.0 % 4 + 1
    }

    pub fn from_round_seat(chef_round: u8, seat: u8) -> CustomerId {
        CustomerId((chef_round - 1) * 4 + seat - 1)
    }
}

impl fmt::Display for CustomerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChefAction {
    Move(Direction),
    Interact,
    Clear,
    Wait,
}

impl ChefAction {
    /// Tie-break order used by the planners.
    pub const ALL: [ChefAction; 7] = [
        ChefAction::Move(Direction::N),
        ChefAction::Move(Direction::S),
        ChefAction::Move(Direction::E),
        ChefAction::Move(Direction::W),
        ChefAction::Interact,
        ChefAction::Clear,
        ChefAction::Wait,
    ];

    pub fn kind_index(self) -> usize {
        match self {
            ChefAction::Move(_) => 0,
            ChefAction::Interact => 1,
            ChefAction::Clear => 2,
            ChefAction::Wait => 3,
        }
    }
}

/// Something the chef holds, or that sits on a counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HeldItem {
    Nothing,
    Ingredient(Ingredient),
    Plate,
    /// A plated dish with the servings it has left.
    Dish(DishType, u8),
}

impl HeldItem {
    pub fn is_nothing(&self) -> bool {
        matches!(self, HeldItem::Nothing)
    }

    /// Potatoes embodied in this item.
    pub fn potatoes(&self) -> u32 {
        match self {
            HeldItem::Ingredient(Ingredient::Potato) => 1,
            HeldItem::Dish(d, _) => d.recipe().count(Ingredient::Potato) as u32,
            _ => 0,
        }
    }

    /// Whether the item survives the end of a round.
    pub fn persists_between_rounds(&self) -> bool {
        !matches!(self, HeldItem::Dish(d, _) if *d != DishType::TTTT)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PotState {
    pub contents: Contents,
    /// Action points elapsed since the last ingredient was added.
    pub progress: u32,
    pub ready: Option<DishType>,
}

impl PotState {
    /// Dish being cooked or ready, when the contents match a recipe.
    pub fn recipe(&self) -> Option<DishType> {
        DishType::matching(&self.contents)
    }

    pub fn is_cooking(&self) -> bool {
        self.ready.is_none() && self.recipe().is_some()
    }

    /// Ticks until ready; zero when ready, `None` when not cooking anything.
    pub fn remaining(&self) -> Option<u32> {
        self.recipe().map(|d| d.cook_time().saturating_sub(self.progress))
    }

    pub fn accepts(&self, ing: Ingredient) -> bool {
        DishType::any_recipe_admits(&self.contents.with(ing))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SeatStatus {
    Waiting,
    Served(DishType),
    Left,
}

/// A customer in the current chef round, without profile information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeatedCustomer {
    pub id: CustomerId,
    pub seat: u8,
    pub patience: u32,
    pub status: SeatStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChefState {
    pub pose: Pose,
    pub held: HeldItem,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChefWorld {
    pub chef: ChefState,
    pub ap_remaining: u32,
    pub actions_this_round: u32,
    /// Indexed like `TileMap::pots`.
    pub pots: Vec<PotState>,
    pub counters: BTreeMap<Pos, HeldItem>,
    pub potato_inventory: u32,
    /// Potatoes served, cleared or discarded.
    pub potatoes_spent: u32,
    pub seats: Vec<SeatedCustomer>,
    /// Whether customer patience is ticking (chef performance rounds only).
    pub patience_clock: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorldEvent {
    PotReady { pot: usize, dish: DishType },
    CustomerLeft { customer: CustomerId, seat: u8 },
    PickedUp { at: Pos, item: HeldItem },
    Placed { at: Pos, item: HeldItem },
    AddedToPot { pot: usize, ingredient: Ingredient },
    Plated { pot: usize, dish: DishType },
    Served { customer: CustomerId, seat: u8, dish: DishType, actions_used: u32 },
    ServeRejected { customer: CustomerId, seat: u8 },
    Cleared { pot: usize, contents: Contents },
    PlateReturned,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WorldError {
    #[error("no action points remaining")]
    OutOfActionPoints,
    #[error("illegal action {0:?}")]
    IllegalAction(ChefAction),
}

impl ChefWorld {
    pub fn new(layout: &TileMap, potato_inventory: u32) -> Self {
        ChefWorld {
            chef: ChefState {
                pose: Pose { pos: layout.center(), facing: Direction::N },
                held: HeldItem::Nothing,
            },
            ap_remaining: 0,
            actions_this_round: 0,
            pots: vec![PotState::default(); layout.pots().len()],
            counters: BTreeMap::new(),
            potato_inventory,
            potatoes_spent: 0,
            seats: Vec::new(),
            patience_clock: false,
        }
    }

    pub fn faced_tile(&self, layout: &TileMap) -> Option<Pos> {
        layout.neighbor(self.chef.pose.pos, self.chef.pose.facing)
    }

    pub fn seat_customer(&self, seat: u8) -> Option<&SeatedCustomer> {
        self.seats.iter().find(|c| c.seat == seat)
    }

    pub fn customer(&self, id: CustomerId) -> Option<&SeatedCustomer> {
        self.seats.iter().find(|c| c.id == id)
    }

    /// Potatoes currently held, cooking, plated or staged.
    pub fn potatoes_in_play(&self) -> u32 {
        self.chef.held.potatoes()
            + self.pots.iter().map(|p| p.contents.count(Ingredient::Potato) as u32).sum::<u32>()
            + self.counters.values().map(|i| i.potatoes()).sum::<u32>()
    }

    /// Ingredients of `kind` staged on counters.
    pub fn staged(&self, kind: Ingredient) -> u32 {
        self.counters
            .values()
            .filter(|i| **i == HeldItem::Ingredient(kind))
            .count() as u32
    }

    /// Begin a round with a fresh budget.
    pub fn start_round(&mut self, budget: u32, seats: Vec<SeatedCustomer>, patience_clock: bool) {
        self.ap_remaining = budget;
        self.actions_this_round = 0;
        self.seats = seats;
        self.patience_clock = patience_clock;
    }

    /// Clear pots and non-persistent dishes; remaining waiting customers leave.
    pub fn end_round(&mut self) -> Vec<WorldEvent> {
        let mut events = Vec::new();
        for (i, pot) in self.pots.iter_mut().enumerate() {
            if !pot.contents.is_empty() {
                self.potatoes_spent += pot.contents.count(Ingredient::Potato) as u32;
                events.push(WorldEvent::Cleared { pot: i, contents: pot.contents });
            }
            *pot = PotState::default();
        }
        let spent: u32 = self
            .counters
            .values()
            .filter(|i| !i.persists_between_rounds())
            .map(|i| i.potatoes())
            .sum();
        self.potatoes_spent += spent;
        self.counters.retain(|_, i| i.persists_between_rounds());
        if !self.chef.held.persists_between_rounds() {
            self.potatoes_spent += self.chef.held.potatoes();
            self.chef.held = HeldItem::Nothing;
        }
        for c in &mut self.seats {
            if c.status == SeatStatus::Waiting {
                c.status = SeatStatus::Left;
                events.push(WorldEvent::CustomerLeft { customer: c.id, seat: c.seat });
            }
        }
        self.ap_remaining = 0;
        events
    }

    /// Actions that `step` would accept from this state, in planner order.
    pub fn legal_actions(&self, layout: &TileMap) -> Vec<ChefAction> {
        if self.ap_remaining == 0 {
            return Vec::new();
        }
        ChefAction::ALL
            .into_iter()
            .filter(|a| self.clone().step(layout, *a).is_ok())
            .collect()
    }

    /// Apply one action: deduct a point, advance cooking and patience, then
    /// resolve the action itself. Leaves `self` untouched on error.
    pub fn step(&mut self, layout: &TileMap, action: ChefAction) -> Result<Vec<WorldEvent>, WorldError> {
        if self.ap_remaining == 0 {
            return Err(WorldError::OutOfActionPoints);
        }
        let new_pose = match action {
            ChefAction::Move(dir) => {
                Some(layout.move_pose(self.chef.pose, dir).ok_or(WorldError::IllegalAction(action))?)
            }
            _ => None,
        };
        if action == ChefAction::Clear {
            let pot = self.faced_pot(layout).ok_or(WorldError::IllegalAction(action))?;
            if self.pots[pot].contents.is_empty() {
                return Err(WorldError::IllegalAction(action));
            }
        }
        let mut next = self.clone();
        let mut events = next.tick();
        match action {
            ChefAction::Move(_) => next.chef.pose = new_pose.expect("checked above"),
            ChefAction::Wait => {}
            ChefAction::Clear => {
                let pot = next.faced_pot(layout).expect("checked above");
                let contents = next.pots[pot].contents;
                next.potatoes_spent += contents.count(Ingredient::Potato) as u32;
                next.pots[pot] = PotState::default();
                events.push(WorldEvent::Cleared { pot, contents });
            }
            ChefAction::Interact => {
                let ev = next.interact(layout).ok_or(WorldError::IllegalAction(action))?;
                events.push(ev);
            }
        }
        *self = next;
        Ok(events)
    }

    /// Let `n` action points pass without any interaction, exactly as `n`
    /// moves or waits would, then place the chef at `pose`.
    pub fn pass_time(&mut self, n: u32, pose: Pose) {
        debug_assert!(n <= self.ap_remaining);
        self.ap_remaining -= n;
        self.actions_this_round += n;
        for pot in &mut self.pots {
            if let (None, Some(dish)) = (pot.ready, pot.recipe()) {
                pot.progress = (pot.progress + n).min(dish.cook_time());
                if pot.progress >= dish.cook_time() {
                    pot.ready = Some(dish);
                }
            }
        }
        if self.patience_clock {
            for c in &mut self.seats {
                if c.status == SeatStatus::Waiting && c.patience < self.actions_this_round {
                    c.status = SeatStatus::Left;
                }
            }
        }
        self.chef.pose = pose;
    }

    fn faced_pot(&self, layout: &TileMap) -> Option<usize> {
        self.faced_tile(layout).and_then(|p| layout.pot_index(p))
    }

    fn tick(&mut self) -> Vec<WorldEvent> {
        let mut events = Vec::new();
        self.ap_remaining -= 1;
        self.actions_this_round += 1;
        for (i, pot) in self.pots.iter_mut().enumerate() {
            if let (None, Some(dish)) = (pot.ready, pot.recipe()) {
                pot.progress += 1;
                if pot.progress >= dish.cook_time() {
                    pot.ready = Some(dish);
                    events.push(WorldEvent::PotReady { pot: i, dish });
                }
            }
        }
        if self.patience_clock {
            for c in &mut self.seats {
                if c.status == SeatStatus::Waiting && c.patience < self.actions_this_round {
                    c.status = SeatStatus::Left;
                    events.push(WorldEvent::CustomerLeft { customer: c.id, seat: c.seat });
                }
            }
        }
        events
    }

    fn interact(&mut self, layout: &TileMap) -> Option<WorldEvent> {
        let target = self.faced_tile(layout)?;
        let held = self.chef.held;
        match (layout.tile(target), held) {
            (TileKind::Dispenser(kind), HeldItem::Nothing) => {
                if kind.is_limited() {
                    if self.potato_inventory == 0 {
                        return None;
                    }
                    self.potato_inventory -= 1;
                }
                self.chef.held = HeldItem::Ingredient(kind);
                Some(WorldEvent::PickedUp { at: target, item: self.chef.held })
            }
            (TileKind::PlateStation, HeldItem::Nothing) => {
                self.chef.held = HeldItem::Plate;
                Some(WorldEvent::PickedUp { at: target, item: HeldItem::Plate })
            }
            (TileKind::PlateStation, HeldItem::Plate) => {
                self.chef.held = HeldItem::Nothing;
                Some(WorldEvent::PlateReturned)
            }
            (TileKind::Counter, HeldItem::Nothing) => {
                let item = self.counters.remove(&target)?;
                self.chef.held = item;
                Some(WorldEvent::PickedUp { at: target, item })
            }
            (TileKind::Counter, item) => {
                if self.counters.contains_key(&target) {
                    return None;
                }
                self.counters.insert(target, item);
                self.chef.held = HeldItem::Nothing;
                Some(WorldEvent::Placed { at: target, item })
            }
            (TileKind::Pot, HeldItem::Ingredient(kind)) => {
                let pot_id = layout.pot_index(target)?;
                let pot = &mut self.pots[pot_id];
                if !pot.accepts(kind) {
                    return None;
                }
                pot.contents = pot.contents.with(kind);
                pot.progress = 0;
                pot.ready = None;
                self.chef.held = HeldItem::Nothing;
                Some(WorldEvent::AddedToPot { pot: pot_id, ingredient: kind })
            }
            (TileKind::Pot, HeldItem::Plate) => {
                let pot_id = layout.pot_index(target)?;
                let dish = self.pots[pot_id].ready?;
                self.pots[pot_id] = PotState::default();
                self.chef.held = HeldItem::Dish(dish, dish.servings());
                Some(WorldEvent::Plated { pot: pot_id, dish })
            }
            (TileKind::CustomerSeat(seat), HeldItem::Dish(dish, servings)) => {
                let actions_used = self.actions_this_round;
                let customer = self.seats.iter_mut().find(|c| c.seat == seat)?;
                if customer.status != SeatStatus::Waiting {
                    return Some(WorldEvent::ServeRejected { customer: customer.id, seat });
                }
                customer.status = SeatStatus::Served(dish);
                let id = customer.id;
                if servings > 1 {
                    self.chef.held = HeldItem::Dish(dish, servings - 1);
                } else {
                    self.potatoes_spent += held.potatoes();
                    self.chef.held = HeldItem::Nothing;
                }
                Some(WorldEvent::Served { customer: id, seat, dish, actions_used })
            }
            _ => None,
        }
    }
}
