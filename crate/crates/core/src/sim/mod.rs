//! Deterministic workflow simulator with fault injection and routing guards.
//!
//! Each run walks its scenario's expected trajectory and applies the faults of
//! a [`ModelProfile`]. Every run owns a [`SplitMix64`] seeded from the corpus
//! seed and the run's enumeration ordinal, and consumes it in this order:
//!
//! 1. world setup: the empty-cart draw (payment scenario only), then the
//!    intent pick (scenarios with configured intents only);
//! 2. payment scenario only: the shortcut draw, then the redundant draw
//!    (ignored when the shortcut fired);
//! 3. routing decisions in trajectory order: the card-intent dispatch for the
//!    registration/retrieval scenarios, the review dispatch for the payment
//!    scenario. A guard that decides a route draws nothing; an unguarded
//!    decision draws once for misroute and once more to pick the wrong agent
//!    when one has to be chosen;
//! 4. the info-error draw.
//!
//! A misrouted run hops to the wrong agent, returns to the entry agent and
//! ends unsuccessfully. All other handoffs follow the expected trajectory.

pub mod rng;
pub mod routing;

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logio::{RunRecord, WorkflowSpec};
use crate::model::{AgentId, Trajectory};

pub use rng::{bernoulli, splitmix64_next, SplitMix64};
pub use routing::{route_card_intent, route_pay_supervisor, CardDecision, CardPath, PayRoute};

/// Fault rates standing in for one model's behaviour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelProfile {
    pub name: String,
    /// Probability of skipping the payment confirmation round trip.
    #[serde(default)]
    pub shortcut_prob: f64,
    /// Probability of a wrong next agent at each routing decision.
    #[serde(default)]
    pub misroute_prob: f64,
    /// Probability of repeating the confirmation round trip once.
    #[serde(default)]
    pub redundant_prob: f64,
    /// Probability of a wrong outcome on an otherwise correct run.
    #[serde(default)]
    pub info_error_prob: f64,
    #[serde(default = "default_true")]
    pub guards_enabled: bool,
}

fn default_true() -> bool {
    true
}

impl ModelProfile {
    /// A profile with every fault rate at zero and guards on.
    pub fn fault_free(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            shortcut_prob: 0.0,
            misroute_prob: 0.0,
            redundant_prob: 0.0,
            info_error_prob: 0.0,
            guards_enabled: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Config("profile name is empty".into()));
        }
        for (field, p) in [
            ("shortcut_prob", self.shortcut_prob),
            ("misroute_prob", self.misroute_prob),
            ("redundant_prob", self.redundant_prob),
            ("info_error_prob", self.info_error_prob),
        ] {
            check_prob(&format!("profile {:?} {field}", self.name), p)?;
        }
        Ok(())
    }
}

fn check_prob(what: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("{what} = {p} is not a probability")));
    }
    Ok(())
}

/// Parses a JSON list of profiles and validates them.
pub fn parse_profiles(text: &str) -> Result<Vec<ModelProfile>> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let profiles: Vec<ModelProfile> = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::from_json(e.into_inner(), path)
    })?;
    validate_profiles(&profiles)?;
    Ok(profiles)
}

fn validate_profiles(profiles: &[ModelProfile]) -> Result<()> {
    let mut names = HashSet::new();
    for p in profiles {
        p.validate()?;
        if !names.insert(p.name.as_str()) {
            return Err(Error::Config(format!(
                "duplicate profile name {:?}",
                p.name
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaymentSettings {
    pub scenario: String,
    pub supervisor: AgentId,
    pub review_agent: AgentId,
    /// Index of the first step of the confirmation round trip: the expected
    /// trajectory reads `X, Y, X` at `index - 1 ..= index + 1`.
    pub confirmation_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CardSettings {
    pub registration: String,
    pub retrieval: String,
}

/// The `sim` block of a workflow spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    #[serde(default = "default_keywords")]
    pub card_keywords: Vec<String>,
    /// Probability that a payment run starts with an empty cart.
    #[serde(default)]
    pub empty_cart_prob: f64,
    #[serde(default)]
    pub payment: Option<PaymentSettings>,
    #[serde(default)]
    pub card: Option<CardSettings>,
    /// Synthetic user utterances per scenario.
    #[serde(default)]
    pub intents: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub profiles: Vec<ModelProfile>,
}

fn default_keywords() -> Vec<String> {
    ["show", "view", "list", "saved"].map(String::from).to_vec()
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            card_keywords: default_keywords(),
            empty_cart_prob: 0.0,
            payment: None,
            card: None,
            intents: BTreeMap::new(),
            profiles: Vec::new(),
        }
    }
}

impl SimSettings {
    pub(crate) fn validate(&self, spec: &WorkflowSpec) -> Result<()> {
        check_prob("sim.empty_cart_prob", self.empty_cart_prob)?;
        Plan::build(spec, self)?;
        for (scenario, list) in &self.intents {
            if spec.scenario(scenario).is_none() {
                return Err(Error::Config(format!(
                    "sim.intents names unknown scenario {scenario:?}"
                )));
            }
            if list.is_empty() {
                return Err(Error::Config(format!("sim.intents.{scenario} is empty")));
            }
        }
        validate_profiles(&self.profiles)
    }
}

/// Mutable world facts that guards inspect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldState {
    pub cart_items: Vec<String>,
    pub saved_cards: Vec<String>,
    pub intent_text: String,
}

impl Default for WorldState {
    fn default() -> Self {
        Self {
            cart_items: vec!["item-1".into()],
            saved_cards: vec!["card-1".into()],
            intent_text: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub seed: u64,
    pub runs_per_scenario: usize,
    pub repeats: usize,
    /// Scenarios to simulate, in order; empty means every spec scenario.
    pub scenarios: Vec<String>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            runs_per_scenario: 250,
            repeats: 5,
            scenarios: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
struct PaymentPlan {
    scenario: String,
    confirmation: usize,
    review_dispatch: usize,
    wrong_agents: Vec<AgentId>,
}

#[derive(Debug, Clone)]
struct CardPlan {
    registration: String,
    retrieval: String,
    divergence: usize,
    registration_agent: AgentId,
    retrieval_agent: AgentId,
}

/// (seed, profile, scenario, repeat, run index) for one simulated run.
type Slot<'p> = (u64, &'p ModelProfile, String, u32, usize);

/// Decision points derived from the spec and its sim block.
#[derive(Debug, Clone)]
struct Plan {
    payment: Option<PaymentPlan>,
    card: Option<CardPlan>,
}

impl Plan {
    fn build(spec: &WorkflowSpec, sim: &SimSettings) -> Result<Self> {
        let payment = sim
            .payment
            .as_ref()
            .map(|p| Self::payment(spec, p))
            .transpose()?;
        let card = sim.card.as_ref().map(|c| Self::card(spec, c)).transpose()?;
        Ok(Self { payment, card })
    }

    fn payment(spec: &WorkflowSpec, p: &PaymentSettings) -> Result<PaymentPlan> {
        let expected = spec.expected(&p.scenario).ok_or_else(|| {
            Error::Config(format!(
                "sim.payment.scenario {:?} is not a scenario",
                p.scenario
            ))
        })?;
        let steps = expected.steps();
        for agent in [&p.supervisor, &p.review_agent] {
            if !spec.contains_agent(agent) {
                return Err(Error::Config(format!(
                    "sim.payment agent {agent} is not in the roster"
                )));
            }
        }
        let ci = p.confirmation_index;
        if ci == 0 || ci + 1 >= steps.len() || steps[ci - 1] != steps[ci + 1] {
            return Err(Error::Config(format!(
                "sim.payment.confirmation_index {ci} does not mark a round trip in {}",
                p.scenario
            )));
        }
        let review_dispatch = (ci + 2..steps.len())
            .find(|&j| steps[j] == p.review_agent && steps[j - 1] == p.supervisor)
            .ok_or_else(|| {
                Error::Config(format!(
                    "{} has no {} -> {} handoff after the confirmation round trip",
                    p.scenario, p.supervisor, p.review_agent
                ))
            })?;
        let entry = expected.first();
        let wrong_agents = spec
            .agents()
            .iter()
            .filter(|a| *a != &p.supervisor && *a != &p.review_agent && *a != entry)
            .cloned()
            .collect();
        Ok(PaymentPlan {
            scenario: p.scenario.clone(),
            confirmation: ci,
            review_dispatch,
            wrong_agents,
        })
    }

    fn card(spec: &WorkflowSpec, c: &CardSettings) -> Result<CardPlan> {
        let lookup = |id: &str| {
            spec.expected(id)
                .ok_or_else(|| Error::Config(format!("sim.card scenario {id:?} is not a scenario")))
        };
        let reg = lookup(&c.registration)?.steps();
        let ret = lookup(&c.retrieval)?.steps();
        let divergence = reg
            .iter()
            .zip(ret)
            .position(|(a, b)| a != b)
            .filter(|&d| d > 0)
            .ok_or_else(|| {
                Error::Config(format!(
                    "{} and {} never diverge after their first step",
                    c.registration, c.retrieval
                ))
            })?;
        Ok(CardPlan {
            registration: c.registration.clone(),
            retrieval: c.retrieval.clone(),
            divergence,
            registration_agent: reg[divergence].clone(),
            retrieval_agent: ret[divergence].clone(),
        })
    }
}

/// Identity of one simulated run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSlot {
    pub run_id: String,
    pub repeat: u32,
}

/// Simulator bound to one spec. Building it validates the sim block once.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    spec: &'a WorkflowSpec,
    settings: SimSettings,
    plan: Plan,
}

impl<'a> Simulator<'a> {
    pub fn new(spec: &'a WorkflowSpec) -> Result<Self> {
        let settings = spec.sim().cloned().unwrap_or_default();
        let plan = Plan::build(spec, &settings)?;
        Ok(Self {
            spec,
            settings,
            plan,
        })
    }

    pub fn settings(&self) -> &SimSettings {
        &self.settings
    }

    fn is_payment(&self, scenario: &str) -> bool {
        self.plan
            .payment
            .as_ref()
            .is_some_and(|p| p.scenario == scenario)
    }

    /// Draws the starting world for one run.
    pub fn world(&self, scenario: &str, rng: &mut SplitMix64) -> WorldState {
        let mut world = WorldState::default();
        if self.is_payment(scenario) && rng.bernoulli(self.settings.empty_cart_prob) {
            world.cart_items.clear();
        }
        if let Some(intents) = self.settings.intents.get(scenario) {
            world.intent_text = intents[rng.index(intents.len())].clone();
        }
        world
    }

    pub fn run(
        &self,
        profile: &ModelProfile,
        scenario: &str,
        world: &WorldState,
        rng: &mut SplitMix64,
        slot: RunSlot,
    ) -> Result<RunRecord> {
        let expected = self
            .spec
            .expected(scenario)
            .ok_or_else(|| Error::UnknownScenario {
                scenario: scenario.to_string(),
                run_id: slot.run_id.clone(),
            })?;
        let entry = expected.first().clone();
        let mut steps = expected.steps().to_vec();
        let mut success = true;
        let mut meta = BTreeMap::new();
        if !world.intent_text.is_empty() {
            meta.insert("intent".to_string(), world.intent_text.clone());
        }

        let mut review_dispatch = None;
        if let Some(pay) = self
            .plan
            .payment
            .as_ref()
            .filter(|p| p.scenario == scenario)
        {
            let shortcut = rng.bernoulli(profile.shortcut_prob);
            let redundant = rng.bernoulli(profile.redundant_prob);
            let ci = pay.confirmation;
            let mut dispatch = pay.review_dispatch;
            if shortcut {
                steps.drain(ci..ci + 2);
                dispatch -= 2;
                meta.insert("deviation".into(), "shortcut".into());
            } else if redundant {
                let round_trip = steps[ci..ci + 2].to_vec();
                steps.splice(ci + 2..ci + 2, round_trip);
                dispatch += 2;
                meta.insert("deviation".into(), "redundant".into());
            }
            review_dispatch = Some((pay, dispatch));
        }

        let mut terminated = false;
        if let Some(card) = &self.plan.card {
            let intended = if scenario == card.registration {
                Some(CardPath::Registration)
            } else if scenario == card.retrieval {
                Some(CardPath::Retrieval)
            } else {
                None
            };
            if let Some(intended) = intended {
                let decision = route_card_intent(
                    &world.intent_text,
                    intended,
                    &self.settings.card_keywords,
                    profile.guards_enabled,
                    profile.misroute_prob,
                    rng,
                );
                if decision.by_guard {
                    meta.insert("guard".into(), "card_view".into());
                }
                if decision.path != intended {
                    let wrong = match decision.path {
                        CardPath::Registration => card.registration_agent.clone(),
                        CardPath::Retrieval => card.retrieval_agent.clone(),
                    };
                    meta.insert("misroute".into(), wrong.to_string());
                    steps.truncate(card.divergence);
                    steps.push(wrong);
                    steps.push(entry.clone());
                    success = false;
                    terminated = true;
                }
            }
        }

        if let Some((pay, dispatch)) = review_dispatch.filter(|_| !terminated) {
            match route_pay_supervisor(
                world,
                profile.guards_enabled,
                profile.misroute_prob,
                &pay.wrong_agents,
                rng,
            ) {
                PayRoute::Review => {
                    if world.cart_items.is_empty() {
                        meta.insert("empty_cart".into(), "unguarded".into());
                        success = false;
                    }
                }
                PayRoute::Suppressed => {
                    meta.insert("guard".into(), "cart_suppressed".into());
                    steps.truncate(dispatch);
                    steps.push(entry.clone());
                    success = false;
                }
                PayRoute::Misrouted(wrong) => {
                    meta.insert("misroute".into(), wrong.to_string());
                    steps.truncate(dispatch);
                    steps.push(wrong);
                    steps.push(entry.clone());
                    success = false;
                }
            }
        }

        if rng.bernoulli(profile.info_error_prob) && success {
            meta.insert("info_error".into(), "true".into());
            success = false;
        }

        Ok(RunRecord {
            run_id: slot.run_id,
            model: profile.name.clone(),
            scenario: scenario.to_string(),
            repeat: slot.repeat,
            trajectory: Trajectory::new(steps)?,
            success,
            meta: (!meta.is_empty()).then_some(meta),
        })
    }

    fn scenarios(&self, config: &SimConfig) -> Result<Vec<String>> {
        if config.runs_per_scenario == 0 || config.repeats == 0 {
            return Err(Error::Config(
                "runs_per_scenario and repeats must be at least 1".into(),
            ));
        }
        if config.scenarios.is_empty() {
            return Ok(self.spec.scenario_ids().map(String::from).collect());
        }
        for s in &config.scenarios {
            if self.spec.scenario(s).is_none() {
                return Err(Error::Config(format!(
                    "scenario {s:?} is not in the workflow spec"
                )));
            }
        }
        Ok(config.scenarios.clone())
    }

    fn slots<'p>(&self, profiles: &'p [ModelProfile], config: &SimConfig) -> Result<Vec<Slot<'p>>> {
        validate_profiles(profiles)?;
        let scenarios = self.scenarios(config)?;
        let mut slots = Vec::with_capacity(
            profiles.len() * scenarios.len() * config.repeats * config.runs_per_scenario,
        );
        let mut ordinal = 0u64;
        for profile in profiles {
            for scenario in &scenarios {
                for repeat in 0..config.repeats {
                    for run in 0..config.runs_per_scenario {
                        slots.push((ordinal, profile, scenario.clone(), repeat as u32, run));
                        ordinal += 1;
                    }
                }
            }
        }
        Ok(slots)
    }

    fn simulate_slot(
        &self,
        seed: u64,
        (ordinal, profile, scenario, repeat, run): &(u64, &ModelProfile, String, u32, usize),
    ) -> Result<RunRecord> {
        let mut rng = SplitMix64::for_run(seed, *ordinal);
        let world = self.world(scenario, &mut rng);
        let slot = RunSlot {
            run_id: format!("{}-{}-{}-{}", profile.name, scenario, repeat, run),
            repeat: *repeat,
        };
        self.run(profile, scenario, &world, &mut rng, slot)
    }

    /// Runs are enumerated by profile, scenario, repeat, then run index.
    pub fn corpus(&self, profiles: &[ModelProfile], config: &SimConfig) -> Result<Vec<RunRecord>> {
        self.slots(profiles, config)?
            .iter()
            .map(|slot| self.simulate_slot(config.seed, slot))
            .collect()
    }

    /// Same output as [`Simulator::corpus`], computed on the rayon pool.
    pub fn corpus_par(
        &self,
        profiles: &[ModelProfile],
        config: &SimConfig,
    ) -> Result<Vec<RunRecord>> {
        self.slots(profiles, config)?
            .par_iter()
            .map(|slot| self.simulate_slot(config.seed, slot))
            .collect()
    }
}

pub fn simulate_run(
    spec: &WorkflowSpec,
    profile: &ModelProfile,
    scenario: &str,
    world: &WorldState,
    rng: &mut SplitMix64,
    slot: RunSlot,
) -> Result<RunRecord> {
    Simulator::new(spec)?.run(profile, scenario, world, rng, slot)
}

pub fn simulate_corpus(
    spec: &WorkflowSpec,
    profiles: &[ModelProfile],
    config: &SimConfig,
) -> Result<Vec<RunRecord>> {
    Simulator::new(spec)?.corpus(profiles, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_util::traj;

    const SHORTCUT: [&str; 9] = [
        "CPA", "PaySup", "CartAg", "PaySup", "ReviewAg", "PaySup", "ExecAg", "PaySup", "CPA",
    ];

    fn slot() -> RunSlot {
        RunSlot {
            run_id: "r".into(),
            repeat: 0,
        }
    }

    fn run_with(
        profile: &ModelProfile,
        scenario: &str,
        world: &WorldState,
        seed: u64,
    ) -> RunRecord {
        let spec = WorkflowSpec::default_spec();
        let mut rng = SplitMix64::new(seed);
        simulate_run(&spec, profile, scenario, world, &mut rng, slot()).unwrap()
    }

    #[test]
    fn fault_free_run_follows_expected() {
        let spec = WorkflowSpec::default_spec();
        let p = ModelProfile::fault_free("ok");
        for id in ["T1", "T2", "T3", "T4"] {
            let r = run_with(&p, id, &WorldState::default(), 3);
            assert_eq!(&r.trajectory, spec.expected(id).unwrap());
            assert!(r.success);
        }
    }

    #[test]
    fn shortcut_yields_canonical_nine_hops() {
        let p = ModelProfile {
            shortcut_prob: 1.0,
            ..ModelProfile::fault_free("s")
        };
        let r = run_with(&p, "T3", &WorldState::default(), 1);
        assert_eq!(r.trajectory, traj(&SHORTCUT));
        assert!(r.success);
    }

    #[test]
    fn redundant_repeats_round_trip_once() {
        let p = ModelProfile {
            redundant_prob: 1.0,
            ..ModelProfile::fault_free("s")
        };
        let r = run_with(&p, "T3", &WorldState::default(), 1);
        assert_eq!(
            r.trajectory,
            traj(&[
                "CPA", "PaySup", "CartAg", "PaySup", "CPA", "PaySup", "CPA", "PaySup", "ReviewAg",
                "PaySup", "ExecAg", "PaySup", "CPA"
            ])
        );
        assert!(r.success);
    }

    #[test]
    fn guarded_empty_cart_is_suppressed() {
        let world = WorldState {
            cart_items: vec![],
            ..WorldState::default()
        };
        let r = run_with(&ModelProfile::fault_free("g"), "T3", &world, 1);
        assert_eq!(
            r.trajectory,
            traj(&["CPA", "PaySup", "CartAg", "PaySup", "CPA", "PaySup", "CPA"])
        );
        assert!(!r.success);
        assert_eq!(r.meta.unwrap()["guard"], "cart_suppressed");
    }

    #[test]
    fn unguarded_empty_cart_completes_wrongly() {
        let world = WorldState {
            cart_items: vec![],
            ..WorldState::default()
        };
        let p = ModelProfile {
            guards_enabled: false,
            ..ModelProfile::fault_free("g")
        };
        let r = run_with(&p, "T3", &world, 1);
        assert_eq!(r.trajectory.len(), 11);
        assert!(!r.success);
    }

    #[test]
    fn card_misroute_returns_to_entry() {
        let world = WorldState {
            intent_text: "Add a new card".into(),
            ..WorldState::default()
        };
        let p = ModelProfile {
            misroute_prob: 1.0,
            ..ModelProfile::fault_free("m")
        };
        let r = run_with(&p, "T1", &world, 1);
        assert_eq!(r.trajectory, traj(&["CPA", "CardSup", "RetrAg", "CPA"]));
        assert!(!r.success);
    }

    #[test]
    fn info_error_keeps_trajectory() {
        let p = ModelProfile {
            info_error_prob: 1.0,
            ..ModelProfile::fault_free("i")
        };
        let r = run_with(&p, "T2", &WorldState::default(), 1);
        assert_eq!(r.trajectory.len(), 5);
        assert!(!r.success);
    }

    #[test]
    fn draw_order_is_fixed() {
        // Fault-free T3 run with guards on: shortcut, redundant, review misroute, info error.
        let spec = WorkflowSpec::default_spec();
        let sim = Simulator::new(&spec).unwrap();
        let mut rng = SplitMix64::new(0);
        sim.run(
            &ModelProfile::fault_free("p"),
            "T3",
            &WorldState::default(),
            &mut rng,
            slot(),
        )
        .unwrap();
        assert_eq!(rng.draws(), 4);
        let mut rng = SplitMix64::new(0);
        sim.world("T3", &mut rng);
        assert_eq!(rng.draws(), 2);
        // T4: info error only.
        let mut rng = SplitMix64::new(0);
        sim.run(
            &ModelProfile::fault_free("p"),
            "T4",
            &WorldState::default(),
            &mut rng,
            slot(),
        )
        .unwrap();
        assert_eq!(rng.draws(), 1);
    }

    #[test]
    fn corpus_size_and_order() {
        let spec = WorkflowSpec::default_spec();
        let profiles = [ModelProfile::fault_free("a"), ModelProfile::fault_free("b")];
        let runs = simulate_corpus(&spec, &profiles, &SimConfig::default()).unwrap();
        assert_eq!(runs.len(), 10_000);
        assert_eq!(runs[0].run_id, "a-T1-0-0");
        assert_eq!(runs[9_999].run_id, "b-T4-4-249");
    }

    #[test]
    fn parallel_matches_sequential() {
        let spec = WorkflowSpec::default_spec();
        let profiles = [ModelProfile {
            shortcut_prob: 0.3,
            misroute_prob: 0.2,
            redundant_prob: 0.1,
            info_error_prob: 0.05,
            guards_enabled: false,
            name: "noisy".into(),
        }];
        let config = SimConfig {
            seed: 99,
            runs_per_scenario: 40,
            ..SimConfig::default()
        };
        let sim = Simulator::new(&spec).unwrap();
        assert_eq!(
            sim.corpus(&profiles, &config).unwrap(),
            sim.corpus_par(&profiles, &config).unwrap()
        );
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let spec = WorkflowSpec::default_spec();
        let bad = ModelProfile {
            shortcut_prob: 1.5,
            ..ModelProfile::fault_free("x")
        };
        assert!(simulate_corpus(&spec, &[bad], &SimConfig::default()).is_err());
        let dup = [ModelProfile::fault_free("x"), ModelProfile::fault_free("x")];
        assert!(simulate_corpus(&spec, &dup, &SimConfig::default()).is_err());
        let config = SimConfig {
            scenarios: vec!["T9".into()],
            ..SimConfig::default()
        };
        assert!(simulate_corpus(&spec, &[ModelProfile::fault_free("x")], &config).is_err());
    }

    #[test]
    fn profiles_parse_with_defaults() {
        let p = parse_profiles(r#"[{"name":"a","shortcut_prob":0.2}]"#).unwrap();
        assert_eq!(p[0].shortcut_prob, 0.2);
        assert_eq!(p[0].misroute_prob, 0.0);
        assert!(p[0].guards_enabled);
        assert!(parse_profiles(r#"[{"name":"a","misroute_prob":-0.1}]"#).is_err());
    }

    #[test]
    fn bad_confirmation_index_is_rejected() {
        let text = crate::logio::DEFAULT_SPEC_JSON
            .replace("\"confirmation_index\": 4", "\"confirmation_index\": 3");
        assert!(crate::logio::parse_workflow_spec(&text).is_err());
    }
}
