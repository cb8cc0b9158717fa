//! Whole-game properties of the chef agents.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use hybs_core::agents::{
    label_goals, play_episode, train_apprentice, ApprenticeChef, GoalLabel, HeuristicChef, HeuristicChefConfig,
    LabeledDataset, ScriptedWaiter, StagingVariant, TrainConfig,
};
use hybs_core::game::RuleConfig;
use hybs_core::log::kinds;
use hybs_core::planning::MctsConfig;
use hybs_core::world::HeldItem;
use hybs_core::*;

struct Game {
    seed: u64,
    variant: StagingVariant,
    log: EpisodeLog,
    tips: u32,
}

fn layout() -> Arc<TileMap> {
    Arc::new(load_layout(DEFAULT_LAYOUT).unwrap())
}

fn waiter_for(seed: u64) -> ScriptedWaiter {
    if seed % 4 < 2 {
        ScriptedWaiter::greedy()
    } else {
        ScriptedWaiter::random(seed)
    }
}

fn heuristic_game(seed: u64, cfg: HeuristicChefConfig) -> (EpisodeLog, u32) {
    let mut chef = HeuristicChef::new(cfg);
    let mut waiter = waiter_for(seed);
    let ep = play_episode(layout(), sample_scenario(seed), seed, RuleConfig::default(), &mut chef, &mut waiter).unwrap();
    (ep.log, ep.state.tips_total)
}

/// One hundred heuristic games, alternating staging variants and waiters.
fn corpus() -> &'static [Game] {
    static CORPUS: OnceLock<Vec<Game>> = OnceLock::new();
    CORPUS.get_or_init(|| {
        (0..100u64)
            .map(|seed| {
                let variant = if seed % 2 == 0 { StagingVariant::TomatoStaging } else { StagingVariant::OnionStaging };
                let (log, tips) = heuristic_game(seed, HeuristicChefConfig { staging_variant: variant, ..Default::default() });
                Game { seed, variant, log, tips }
            })
            .collect()
    })
}

#[test]
fn staging_variants_never_stage_the_other_ingredient() {
    for g in corpus() {
        let wrong = match g.variant {
            StagingVariant::TomatoStaging => Ingredient::Onion,
            StagingVariant::OnionStaging => Ingredient::Tomato,
        };
        for r in g.log.iter().filter(|r| r.event_kind == "placed") {
            let item: HeldItem = serde_json::from_value(r.payload["item"].clone()).unwrap();
            assert_ne!(item, HeldItem::Ingredient(wrong), "seed {} staged {wrong:?}", g.seed);
        }
        assert!(replay(&g.log).is_ok());
        assert_eq!(g.log.final_tips(), Some(g.tips));
    }
}

#[test]
fn heuristic_does_at_least_as_well_as_single_recommendation_baseline() {
    let games = corpus();
    let full: u32 = games.iter().map(|g| g.tips).sum();
    let baseline: u32 = games
        .iter()
        .map(|g| {
            let cfg = HeuristicChefConfig { staging_variant: g.variant, service_limit: Some(1), ..Default::default() };
            heuristic_game(g.seed, cfg).1
        })
        .sum();
    assert!(full >= baseline, "heuristic {full} < baseline {baseline}");
}

#[test]
fn apprentice_trained_on_obedient_teacher_follows_recommendations() {
    let mut samples = Vec::new();
    for g in &corpus()[..40] {
        samples.extend(label_goals(&g.log).unwrap());
    }
    let data = LabeledDataset {
        users: [("teacher".to_string(), samples)].into(),
        clusters: [("teacher".to_string(), 0)].into(),
    };
    let model = train_apprentice(&data, &TrainConfig { epochs: 10, seed: 3, ..TrainConfig::default() }).unwrap();
    let embedding = model.user_embeddings["teacher"];

    let (mut matched, mut serves) = (0usize, 0usize);
    for seed in 1000..1010u64 {
        let search = MctsConfig { iterations: 200, ..MctsConfig::default() };
        let mut chef = ApprenticeChef::new(model.predictor.clone(), embedding, search);
        let mut waiter = ScriptedWaiter::greedy();
        let ep = play_episode(layout(), sample_scenario(seed), seed, RuleConfig::default(), &mut chef, &mut waiter).unwrap();
        let recs: BTreeMap<u8, Vec<(CustomerId, DishType)>> = ep
            .log
            .iter()
            .filter(|r| r.event_kind == kinds::RECOMMENDATION)
            .map(|r| {
                let rec: WaiterRecommendation = serde_json::from_value(r.payload.clone()).unwrap();
                (r.round, rec.entries.iter().map(|e| (e.customer_id, e.dish)).collect())
            })
            .collect();
        for (round, goal) in chef.executed_goals() {
            if let GoalLabel::Serve { seat, dish } = goal {
                serves += 1;
                let chef_round = hybs_core::game::chef_round_of(*round).unwrap();
                let id = CustomerId::from_round_seat(chef_round, *seat);
                if recs[round].contains(&(id, *dish)) {
                    matched += 1;
                }
            }
        }
    }
    assert!(serves > 0);
    let rate = matched as f64 / serves as f64;
    assert!(rate >= 0.8, "{matched} of {serves} serve goals matched the recommendation");
}
