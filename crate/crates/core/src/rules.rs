//! Fixed game economics: ingredients, dishes, customer profiles and budgets.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Action points available during the opening staging round.
pub const PREP_BUDGET: u32 = 15;
/// Action points available during each chef performance round.
pub const CHEF_BUDGET: u32 = 135;
/// Patience values a customer can be assigned.
pub const PATIENCE_VALUES: [u32; 2] = [70, 120];
/// Rounds in a game: prep, then waiter/chef alternating three times.
pub const ROUNDS: u8 = 7;
/// Customers seated per chef performance round.
pub const SEATS: usize = 4;
/// Chef performance rounds per game.
pub const CHEF_ROUNDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Ingredient {
    Onion,
    Tomato,
    Potato,
}

impl Ingredient {
    pub const ALL: [Ingredient; 3] = [Ingredient::Onion, Ingredient::Tomato, Ingredient::Potato];

    /// Only potatoes are drawn from a finite per-game stock.
    pub fn is_limited(self) -> bool {
        matches!(self, Ingredient::Potato)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn glyph(self) -> char {
        match self {
            Ingredient::Onion => 'O',
            Ingredient::Tomato => 'T',
            Ingredient::Potato => 'P',
        }
    }
}

/// Ingredient multiset stored as per-kind counts (onion, tomato, potato).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Contents(pub [u8; 3]);

impl Contents {
    pub const EMPTY: Contents = Contents([0, 0, 0]);

    pub fn of(kind: Ingredient, n: u8) -> Self {
        let mut c = [0; 3];
        c[kind.index()] = n;
        Contents(c)
    }

    pub fn count(&self, kind: Ingredient) -> u8 {
        self.0[kind.index()]
    }

    pub fn total(&self) -> u8 {
        self.0.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn with(mut self, kind: Ingredient) -> Self {
        self.0[kind.index()] += 1;
        self
    }

    /// True when every count is no larger than the other's.
    pub fn is_subset_of(&self, other: &Contents) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }

    /// Ingredients still missing to reach `target`; `None` when not a subset.
    pub fn missing_for(&self, target: &Contents) -> Option<u8> {
        self.is_subset_of(target)
            .then(|| target.total() - self.total())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DishType {
    PP,
    P,
    O,
    TTTT,
}

impl DishType {
    pub const ALL: [DishType; 4] = [DishType::PP, DishType::P, DishType::O, DishType::TTTT];

    pub fn recipe(self) -> Contents {
        match self {
            DishType::PP => Contents::of(Ingredient::Potato, 2),
            DishType::P => Contents::of(Ingredient::Potato, 1),
            DishType::O => Contents::of(Ingredient::Onion, 1),
            DishType::TTTT => Contents::of(Ingredient::Tomato, 4),
        }
    }

    pub fn cook_time(self) -> u32 {
        match self {
            DishType::O => 55,
            _ => 1,
        }
    }

    pub fn servings(self) -> u8 {
        match self {
            DishType::TTTT => 4,
            _ => 1,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Dish whose recipe is exactly `contents`.
    pub fn matching(contents: &Contents) -> Option<DishType> {
        DishType::ALL.into_iter().find(|d| d.recipe() == *contents)
    }

    /// True when `contents` can still grow into some recipe.
    pub fn any_recipe_admits(contents: &Contents) -> bool {
        DishType::ALL.iter().any(|d| contents.is_subset_of(&d.recipe()))
    }

    pub fn name(self) -> &'static str {
        match self {
            DishType::PP => "PP",
            DishType::P => "P",
            DishType::O => "O",
            DishType::TTTT => "TTTT",
        }
    }
}

impl fmt::Display for DishType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CustomerProfile {
    Executive,
    Hipster,
    Tourist,
}

impl CustomerProfile {
    pub const ALL: [CustomerProfile; 3] = [
        CustomerProfile::Executive,
        CustomerProfile::Hipster,
        CustomerProfile::Tourist,
    ];

    /// Tip for each dish in `DishType::ALL` order (PP, P, O, TTTT).
    pub fn tip_table(self) -> [u32; 4] {
        match self {
            CustomerProfile::Executive => [100, 0, 100, 0],
            CustomerProfile::Hipster => [20, 20, 0, 10],
            CustomerProfile::Tourist => [20, 20, 20, 10],
        }
    }

    pub fn tip(self, dish: DishType) -> u32 {
        self.tip_table()[dish.index()]
    }

    pub fn max_tip(self) -> u32 {
        self.tip_table().into_iter().max().unwrap_or(0)
    }
}

/// Tip for a serve event: nothing once the chef has used more actions than
/// the customer's patience.
pub fn compute_tip(profile: CustomerProfile, dish: DishType, actions_used: u32, patience: u32) -> u32 {
    if actions_used > patience {
        0
    } else {
        profile.tip(dish)
    }
}
