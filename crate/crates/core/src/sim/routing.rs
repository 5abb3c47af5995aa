//! Routing decisions and the two deterministic guards.

use crate::model::AgentId;

use super::rng::SplitMix64;
use super::WorldState;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PayRoute {
    /// Hand off to the review agent as the workflow expects.
    Review,
    /// The cart-items guard fired: return to the entry agent, run fails.
    Suppressed,
    /// A wrong agent was chosen instead of the review agent.
    Misrouted(AgentId),
}

/// Review dispatch at the payment supervisor.
///
/// With guards on and an empty cart the review path is suppressed without
/// touching `rng`. Otherwise one misroute draw is taken and, if it fires, a
/// second draw picks uniformly from `wrong_agents`.
pub fn route_pay_supervisor(
    world: &WorldState,
    guards_enabled: bool,
    misroute_prob: f64,
    wrong_agents: &[AgentId],
    rng: &mut SplitMix64,
) -> PayRoute {
    if guards_enabled && world.cart_items.is_empty() {
        return PayRoute::Suppressed;
    }
    if rng.bernoulli(misroute_prob) && !wrong_agents.is_empty() {
        return PayRoute::Misrouted(wrong_agents[rng.index(wrong_agents.len())].clone());
    }
    PayRoute::Review
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CardPath {
    Registration,
    Retrieval,
}

impl CardPath {
    pub fn other(self) -> Self {
        match self {
            CardPath::Registration => CardPath::Retrieval,
            CardPath::Retrieval => CardPath::Registration,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CardDecision {
    pub path: CardPath,
    /// True when the card-view keyword match decided the route.
    pub by_guard: bool,
}

/// True when the lowercased utterance contains any keyword.
pub fn matches_card_view(intent_text: &str, keywords: &[String]) -> bool {
    let text = intent_text.to_lowercase();
    keywords.iter().any(|k| text.contains(&k.to_lowercase()))
}

/// Card-intent dispatch at the entry agent.
///
/// With guards on, a keyword hit routes to retrieval deterministically and
/// consumes no randomness. Otherwise one misroute draw decides whether the
/// intended path is swapped for the other one.
pub fn route_card_intent(
    intent_text: &str,
    intended: CardPath,
    keywords: &[String],
    guards_enabled: bool,
    misroute_prob: f64,
    rng: &mut SplitMix64,
) -> CardDecision {
    if guards_enabled && matches_card_view(intent_text, keywords) {
        return CardDecision {
            path: CardPath::Retrieval,
            by_guard: true,
        };
    }
    let path = if rng.bernoulli(misroute_prob) {
        intended.other()
    } else {
        intended
    };
    CardDecision {
        path,
        by_guard: false,
    }
}
