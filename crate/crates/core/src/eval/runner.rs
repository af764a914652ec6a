use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{EvalConfig, EvalMode, Pipeline};
use super::failure::{classify_failure, FailureEvidence, FailureTaxonomy};
use super::log::{inf_as_null, LogHeader, Operator, StepEvent, StepRecord, TrajectoryLog};
use super::metrics::max_dynamic_steps;
use crate::enhance::{dynamic_goal_select, record_motion, remap_check, untrap_step, EnhancementState};
use crate::error::{Error, Result};
use crate::perception::map::crop_into;
use crate::perception::{detect, project_to_map, Augmenter, SemanticMap};
use crate::policy::reward::compute_reward_as;
use crate::policy::{target_override, GoalSource, LongTermGoal, Planner, Policy, RewardState, RewardType};
use crate::world::{
    geodesic_distance, obstacle_distance, render_observation, step, Action, AgentPose, DistanceField, EpisodeSpec,
    Observation, Scene, Target,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub spec: EpisodeSpec,
    pub success: bool,
    /// The agent ended the episode with Stop.
    pub stopped: bool,
    /// Meters actually travelled.
    pub path_length: f64,
    /// Shortest-path distance from the start, meters.
    pub shortest: f64,
    pub steps_used: usize,
    #[serde(with = "inf_as_null")]
    pub final_distance: f64,
    pub final_pose: AgentPose,
    pub failure_label: Option<FailureTaxonomy>,
    /// Where the trajectory log was written, if anywhere.
    pub log: Option<String>,
}

/// Outcome of one episode under both step budgets.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRun {
    pub fixed: EpisodeResult,
    pub dynamic: EpisodeResult,
    pub log: TrajectoryLog,
}

/// Whether an episode ending at `pose` counts as a success.
pub fn success_check(scene: &Scene, pose: &AgentPose, goal_category: usize, stopped: bool, config: &EvalConfig) -> bool {
    (stopped || !config.require_stop)
        && geodesic_distance(scene, pose, Target::Category(goal_category)) <= config.success_radius
}

/// Sensor data of the current step, as produced by perception.
#[derive(Debug, Clone, PartialEq)]
pub struct Perceived {
    pub obs: Observation,
    pub labels: Vec<Option<usize>>,
    /// Target override in global map cells.
    pub target: Option<LongTermGoal>,
    pub events: Vec<StepEvent>,
}

/// Action chosen for one step plus what the agent was aiming at.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub action: Action,
    pub goal: Option<LongTermGoal>,
    pub policy_goal: Option<LongTermGoal>,
    pub d_goal: f64,
    pub events: Vec<StepEvent>,
}

impl Decision {
    /// An externally chosen action (human operator or replay).
    pub fn manual(action: Action) -> Self {
        Self { action, goal: None, policy_goal: None, d_goal: f64::INFINITY, events: Vec::new() }
    }
}

const DETECTOR_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

/// Step-by-step episode execution shared by the autonomous agent and the
/// interactive session server.
pub struct EpisodeDriver<'a> {
    scene: &'a Scene,
    spec: EpisodeSpec,
    pipeline: &'a Pipeline,
    eval: EvalConfig,
    operator: Operator,
    field: DistanceField,
    target_floors: Vec<bool>,
    near_target: Vec<bool>,
    global: SemanticMap,
    augmented: SemanticMap,
    local: SemanticMap,
    augmenter: Augmenter,
    planner: Planner,
    policy: Policy,
    state: EnhancementState,
    det_rng: ChaCha8Rng,
    pose: AgentPose,
    step: usize,
    path_length: f64,
    prev_action: Option<Action>,
    obstacle_distance: f64,
    last_d_goal: f64,
    latest_prediction: Option<LongTermGoal>,
    prev_reward: RewardState,
    target_mapped: bool,
    perceived: Option<Perceived>,
    steps: Vec<StepRecord>,
    fixed_cap: usize,
    dynamic_cap: usize,
    dynamic: Option<EpisodeResult>,
    fixed: Option<EpisodeResult>,
}

impl<'a> EpisodeDriver<'a> {
    pub fn new(
        scene: &'a Scene,
        spec: &EpisodeSpec,
        pipeline: &'a Pipeline,
        eval: &EvalConfig,
        operator: Operator,
    ) -> Result<Self> {
        pipeline.validate()?;
        eval.validate()?;
        if spec.scene_id != scene.id() {
            return Err(Error::Config(format!("episode is for scene '{}', got '{}'", spec.scene_id, scene.id())));
        }
        if !spec.start.is_valid_in(scene) {
            return Err(Error::Config("episode start pose is not on a traversable cell".into()));
        }
        if pipeline.detector.categories() <= spec.goal_category {
            return Err(Error::Config(format!(
                "goal category {} outside the detector's {} categories",
                spec.goal_category,
                pipeline.detector.categories()
            )));
        }
        let field = DistanceField::new(scene, Target::Category(spec.goal_category));
        let mut target_floors = vec![false; scene.floor_count()];
        let goal_cells = scene.category_cells(spec.goal_category);
        if goal_cells.is_empty() {
            return Err(Error::MissingCategory(spec.goal_category));
        }
        for &(f, _) in &goal_cells {
            target_floors[f] = true;
        }
        let c = pipeline.detector.categories();
        let global = SemanticMap::covering(c, scene.width(), scene.height(), scene.cell_size());
        let near_target = near_target_mask(&global, &goal_cells, eval.failure.map_error_radius);
        let fixed_cap = eval.max_steps_fixed;
        let dynamic_cap = max_dynamic_steps(spec.shortest_distance, &pipeline.motion, eval.alpha)?.min(fixed_cap);
        Ok(Self {
            scene,
            spec: spec.clone(),
            pipeline,
            eval: *eval,
            operator,
            field,
            target_floors,
            near_target,
            augmented: global.clone(),
            local: SemanticMap::new(c, pipeline.map.local_size, scene.cell_size(), (0.0, 0.0)),
            global,
            augmenter: Augmenter::default(),
            planner: Planner::default(),
            policy: Policy::new(pipeline.policy.clone(), spec.seed)?,
            state: EnhancementState::default(),
            det_rng: ChaCha8Rng::seed_from_u64(spec.seed ^ DETECTOR_STREAM),
            pose: spec.start,
            step: 0,
            path_length: 0.0,
            prev_action: None,
            obstacle_distance: obstacle_distance(scene, &spec.start),
            last_d_goal: f64::INFINITY,
            latest_prediction: None,
            prev_reward: RewardState { area: 0.0, distance: spec.shortest_distance },
            target_mapped: false,
            perceived: None,
            steps: Vec::new(),
            fixed_cap,
            dynamic_cap,
            dynamic: None,
            fixed: None,
        })
    }

    pub fn is_done(&self) -> bool {
        self.fixed.is_some()
    }

    pub fn pose(&self) -> AgentPose {
        self.pose
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn fixed_cap(&self) -> usize {
        self.fixed_cap
    }

    pub fn dynamic_cap(&self) -> usize {
        self.dynamic_cap
    }

    pub fn spec(&self) -> &EpisodeSpec {
        &self.spec
    }

    pub fn global_map(&self) -> &SemanticMap {
        &self.global
    }

    /// Egocentric map of the current step (after [`Self::perceive`]).
    pub fn local_map(&self) -> &SemanticMap {
        &self.local
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    /// Global cell of the local map's `(0, 0)`.
    fn local_offset(&self) -> (i64, i64) {
        let (ar, ac) = self.global.cell_of(self.pose.x, self.pose.y);
        let half = (self.pipeline.map.local_size / 2) as i64;
        (ar - half, ac - half)
    }

    /// Sense, update the map and build the local crop for this step.
    /// Repeated calls within one step return the same data.
    pub fn perceive(&mut self) -> Result<&Perceived> {
        if self.is_done() {
            return Err(Error::Invariant("episode already finished".into()));
        }
        if self.perceived.is_none() {
            let p = self.run_perception()?;
            self.perceived = Some(p);
        }
        Ok(self.perceived.as_ref().expect("just set"))
    }

    fn run_perception(&mut self) -> Result<Perceived> {
        let obs = render_observation(self.scene, &self.pose, &self.pipeline.sensor);
        let labels = detect(&obs, &self.pipeline.detector, &mut self.det_rng);
        project_to_map(&mut self.global, &obs, &labels, &self.pose);
        let mut events = Vec::new();
        if self.pipeline.enhance.remap
            && remap_check(self.pose.on_stairs(self.scene), &mut self.state, &self.pipeline.enhance)
        {
            self.global.clear();
            project_to_map(&mut self.global, &obs, &labels, &self.pose);
            events.push(StepEvent::Remap);
        }
        let goal_ch = SemanticMap::category_channel(self.spec.goal_category);
        if !self.target_mapped && self.global.channel(goal_ch).iter().any(|&v| v != 0) {
            self.target_mapped = true;
        }
        let m = self.pipeline.map.local_size;
        if self.pipeline.map.augment {
            self.augmenter.augment_into(&self.global, &mut self.augmented, &self.pipeline.map.augment_params);
            crop_into(&self.augmented, &self.pose, m, &mut self.local)?;
        } else {
            crop_into(&self.global, &self.pose, m, &mut self.local)?;
        }
        let half = (m / 2) as i64;
        let off = self.local_offset();
        let target = target_override(&self.local, self.spec.goal_category, (half, half)).map(|g| g.shifted(off.0, off.1));
        if let Some(t) = target {
            events.push(StepEvent::Override { row: t.row, col: t.col, true_target: self.is_true_target(t.row, t.col) });
        }
        Ok(Perceived { obs, labels, target, events })
    }

    fn is_true_target(&self, r: i64, c: i64) -> bool {
        self.scene.in_bounds(r, c)
            && (0..self.scene.floor_count()).any(|f| {
                self.scene
                    .object_at(f, (r as usize, c as usize))
                    .is_some_and(|o| o.category == self.spec.goal_category)
            })
    }

    /// The autonomous agent's choice for this step.
    pub fn decide(&mut self) -> Result<Decision> {
        self.perceive()?;
        let target = self.perceived.as_ref().and_then(|p| p.target);
        let off = self.local_offset();
        let enh = self.pipeline.enhance;
        let mut events = Vec::new();

        let prediction = if self.step % self.pipeline.policy.goal_update_frequency == 0 {
            Some(self.policy.predict(&self.local)?.shifted(off.0, off.1))
        } else {
            None
        };
        if prediction.is_some() {
            self.latest_prediction = prediction;
        }
        let policy_goal = if enh.dynamic_goal {
            let before = self.state.current_goal;
            let g = dynamic_goal_select(self.step, prediction, self.last_d_goal, &mut self.state, &enh)?;
            events.push(StepEvent::DynamicGoal { d_goal_in: self.last_d_goal, switched: before != Some(g) });
            g
        } else {
            self.latest_prediction.ok_or(Error::MissingInitialGoal)?
        };
        let goal = target.unwrap_or(policy_goal);
        let local_goal = goal.shifted(-off.0, -off.1);
        let plan = self.planner.plan(&self.local, &self.pose, &local_goal, &self.pipeline.motion, &self.pipeline.planner);

        let mut action = plan.action;
        if enh.untrap {
            if let Some(a) = untrap_step(self.prev_action, self.obstacle_distance, &mut self.state, &enh) {
                action = a;
                events.push(StepEvent::Untrap { action: a });
            }
        }
        Ok(Decision { action, goal: Some(goal), policy_goal: Some(policy_goal), d_goal: plan.d_goal, events })
    }

    /// Executes one action and records it.
    pub fn apply(&mut self, decision: Decision) -> Result<()> {
        let perceived = match self.perceived.take() {
            Some(p) => p,
            None => {
                self.perceive()?;
                self.perceived.take().expect("perceived")
            }
        };
        let action = decision.action;
        let mut collided = false;
        let mut moved = 0.0;
        if action != Action::Stop {
            let out = step(self.scene, &self.pose, action, &self.pipeline.motion);
            if self.pipeline.enhance.untrap {
                record_motion(&mut self.state, action, out.collided);
            }
            self.pose = out.pose;
            collided = out.collided;
            moved = out.moved;
            self.obstacle_distance = out.obstacle_distance;
        }
        self.path_length += moved;
        self.prev_action = Some(action);
        self.last_d_goal = decision.d_goal;
        self.step += 1;

        let stopped = action == Action::Stop;
        let distance = self.field.distance(&self.pose);
        let within = distance <= self.eval.success_radius;
        let success = within && (stopped || !self.eval.require_stop);

        let curr = RewardState {
            area: self.global.explored_area(),
            distance: if distance.is_finite() { distance } else { self.prev_reward.distance },
        };
        let r1 = compute_reward_as(self.prev_reward, curr, success, &self.pipeline.reward, RewardType::R1);
        let r2 = compute_reward_as(self.prev_reward, curr, success, &self.pipeline.reward, RewardType::R2);
        self.prev_reward = curr;

        let mut events = perceived.events;
        events.extend(decision.events);
        self.steps.push(StepRecord {
            step: self.step - 1,
            pose: self.pose,
            action,
            collided,
            moved,
            goal: decision.goal,
            policy_goal: decision.policy_goal,
            events,
            r1,
            r2,
            d_goal: decision.d_goal,
        });

        let done = stopped || success || self.step >= self.fixed_cap;
        if done {
            let r = self.snapshot(success, stopped, distance);
            if self.dynamic.is_none() {
                self.dynamic = Some(r.clone());
            }
            self.fixed = Some(r);
        } else if self.step == self.dynamic_cap && self.dynamic.is_none() {
            self.dynamic = Some(self.snapshot(false, false, distance));
        }
        Ok(())
    }

    fn snapshot(&self, success: bool, stopped: bool, distance: f64) -> EpisodeResult {
        let mut result = EpisodeResult {
            spec: self.spec.clone(),
            success,
            stopped,
            path_length: self.path_length,
            shortest: self.spec.shortest_distance,
            steps_used: self.step,
            final_distance: distance,
            final_pose: self.pose,
            failure_label: None,
            log: None,
        };
        let goal_ch = SemanticMap::category_channel(self.spec.goal_category);
        let map_error = self
            .global
            .channel(goal_ch)
            .iter()
            .zip(&self.near_target)
            .any(|(&v, &near)| v != 0 && !near);
        let evidence = FailureEvidence::from_steps(
            &self.steps,
            &self.eval.failure,
            self.target_mapped,
            self.target_floors[self.pose.floor],
            map_error,
        );
        result.failure_label = classify_failure(&result, &evidence, &self.eval.failure, self.eval.success_radius);
        result
    }

    /// Finished episode with its log. Fails if the episode is still running.
    pub fn finish(self) -> Result<EpisodeRun> {
        let (Some(fixed), Some(dynamic)) = (self.fixed, self.dynamic) else {
            return Err(Error::Invariant("episode has not finished".into()));
        };
        let results = match self.eval.mode {
            EvalMode::Fixed => vec![(EvalMode::Fixed, fixed.clone())],
            EvalMode::Dynamic => vec![(EvalMode::Dynamic, dynamic.clone())],
            EvalMode::Both => vec![(EvalMode::Fixed, fixed.clone()), (EvalMode::Dynamic, dynamic.clone())],
        };
        let header = LogHeader {
            spec: self.spec,
            config_digest: String::new(),
            operator: self.operator,
            fixed_cap: self.fixed_cap,
            dynamic_cap: self.dynamic_cap,
        };
        Ok(EpisodeRun { fixed, dynamic, log: TrajectoryLog { header, steps: self.steps, results } })
    }
}

/// Map cells within `radius` meters (center to center) of a goal cell on
/// any floor.
fn near_target_mask(map: &SemanticMap, goal_cells: &[(usize, (usize, usize))], radius: f64) -> Vec<bool> {
    let m = map.size();
    let mut mask = vec![false; m * m];
    let rc = (radius / map.cell_size()).floor() as i64;
    let r2 = (radius / map.cell_size()).powi(2);
    for &(_, (r, c)) in goal_cells {
        for dr in -rc..=rc {
            for dc in -rc..=rc {
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if ((dr * dr + dc * dc) as f64) <= r2 && map.in_bounds(nr, nc) {
                    mask[nr as usize * m + nc as usize] = true;
                }
            }
        }
    }
    mask
}

/// Runs one autonomous episode to completion.
pub fn run_episode(scene: &Scene, spec: &EpisodeSpec, pipeline: &Pipeline, eval: &EvalConfig) -> Result<EpisodeRun> {
    let mut driver = EpisodeDriver::new(scene, spec, pipeline, eval, Operator::Agent)?;
    while !driver.is_done() {
        let d = driver.decide()?;
        driver.apply(d)?;
    }
    driver.finish()
}

impl GoalSource {
    pub fn name(self) -> &'static str {
        match self {
            GoalSource::Corner => "corner",
            GoalSource::Frontier => "frontier",
            GoalSource::Discrete => "discrete",
            GoalSource::Continuous => "continuous",
            GoalSource::TargetOverride => "target_override",
        }
    }
}
