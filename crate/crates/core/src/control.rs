//! Scripted pick-and-place controllers.
//!
//! The sequential controller runs a fixed phase progression — approach
//! above the grasp point, descend, close the gripper, lift to a carry
//! height, transport over the target, lower, release — with every phase
//! implemented as a proportional move toward that phase's waypoint. The
//! stage is *derived from the observation alone*, so the same policy can be
//! queried for arbitrary replay states, not just states the controller
//! itself visited; a thin stateful wrapper tracks the furthest phase
//! reached for bookkeeping.
//!
//! The same logic decomposes into three single-purpose primitives
//! (move/align only, close only, open only) that form the controller
//! ensemble, plus a macro controller that picks a primitive uniformly at
//! random each step.

use crate::rng::Prng;
use crate::sim::{wrap_angle, ActionVector, Observation, TaskKind, CUBE_SIDE, CUP_HEIGHT};

/// Proportional gains for translation and yaw. Sized so the commanded step
/// stays below the remaining error at every distance (no overshoot) while
/// roughly halving the error per step near a waypoint, which keeps the full
/// pick-and-place comfortably inside the episode horizon.
pub const KP_LINEAR: f64 = 25.0;
pub const KP_ANGULAR: f64 = 10.0;
/// Waypoint convergence thresholds.
pub const CLOSE_ENOUGH_POS: f64 = 0.01;
pub const CLOSE_ENOUGH_YAW: f64 = 0.05;
/// Minimum carry height during transport.
pub const SAFE_HEIGHT: f64 = 0.2;

/// Height above the grasp point for the approach waypoint.
const APPROACH_CLEARANCE: f64 = 0.03;
/// Carry clearance above the target's top, scaled by the held object's
/// height: a taller carried object gets a larger margin.
const CARRY_CLEARANCE_FACTOR: f64 = 0.3;
/// Hover gap above the support top before releasing a stacked cube.
const PLACE_GAP: f64 = 0.02;
/// Target bottom height while inserting into a cup.
const INSERT_BOTTOM: f64 = 0.03;
/// The grasp is considered firm once the gripper closes to this angle.
const FIRM_GRIP: f64 = 0.1;
/// Clearance above the target's top that must be reached before
/// translating sideways (prevents dragging the carried object into rims).
const RIM_CLEAR: f64 = 0.005;
/// Horizontal offset below which the grasp descent may begin; the final
/// alignment converges while the end-effector drops.
const DESCEND_START: f64 = 0.03;
/// Waypoints aim slightly past their convergence gate so the gate is
/// crossed at non-vanishing speed instead of on an asymptote.
const AIM_PAST: f64 = 0.005;
/// Largest initial yaw mismatch the stacking plan will bother correcting.
/// Twisting the wrist is slow relative to translation, so the script gives
/// up on alignment when the two cubes start more than this far apart in yaw
/// and places the cube as-grasped instead. A policy with full wrist
/// authority can do better, which is exactly the headroom learning is meant
/// to exploit.
pub const YAW_GIVE_UP: f64 = 1.05;

/// Position-plus-yaw waypoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub pos: [f64; 3],
    pub yaw: f64,
}

/// Proportional step toward a waypoint: translation components
/// `tanh(KP_LINEAR·error)`, yaw `tanh(KP_ANGULAR·error)`, gripper untouched.
pub fn move_and_align(p_dist: &Pose, p_curr: &Pose) -> ActionVector {
    let a = [
        (KP_LINEAR * (p_dist.pos[0] - p_curr.pos[0])).tanh(),
        (KP_LINEAR * (p_dist.pos[1] - p_curr.pos[1])).tanh(),
        (KP_LINEAR * (p_dist.pos[2] - p_curr.pos[2])).tanh(),
        (KP_ANGULAR * wrap_angle(p_dist.yaw - p_curr.yaw)).tanh(),
        0.0,
    ];
    ActionVector(a)
}

/// Phase progression of the scripted pick-and-place plan, in execution
/// order. Within an episode the reported phase never moves backwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ControllerPhase {
    ApproachAbove,
    Descend,
    CloseGrip,
    Lift,
    TransportAbove,
    Lower,
    OpenGrip,
    Done,
}

/// What the plan wants to do right now, derived purely from an observation.
#[derive(Debug, Clone, Copy, PartialEq)]
enum StageAction {
    /// Move toward a waypoint (gripper held).
    Move(Pose),
    /// Close the gripper in place.
    Close,
    /// Open the gripper in place.
    Open,
}

fn horizontal(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Grasp-related geometry for the manipulated object (index 0).
fn grasp_height(task: TaskKind) -> f64 {
    match task.object_kinds()[0] {
        k if k.is_cup() => CUP_HEIGHT,
        _ => CUBE_SIDE,
    }
}

/// Horizontal offset below which lowering onto the target may begin; the
/// final alignment continues during the descent. The threshold sits well
/// inside a cup rim's tipping band, so a carried object is never lowered
/// into a wall.
const LOWER_START: f64 = 0.02;

/// Decide the current stage and its action for `obs`. Total over the state
/// space: any reachable observation maps to some stage.
fn derive_stage(task: TaskKind, obs: &Observation) -> (ControllerPhase, StageAction) {
    let ee = obs.ee_pos();
    let ee_yaw = obs.ee_yaw();
    let holding = obs.finger_force() > 0.5;
    let a_pos = obs.object_pos(0);
    let b_pos = obs.object_pos(1);
    let b_top = b_pos[2] + task.object_kinds()[1].height();

    if !holding {
        let grasp = [a_pos[0], a_pos[1], a_pos[2] + grasp_height(task)];
        let horiz = horizontal(ee, grasp);
        let vert = (ee[2] - grasp[2]).abs();
        if horiz >= DESCEND_START {
            let waypoint = Pose {
                pos: [grasp[0], grasp[1], grasp[2] + APPROACH_CLEARANCE],
                yaw: ee_yaw,
            };
            return (ControllerPhase::ApproachAbove, StageAction::Move(waypoint));
        }
        if vert >= CLOSE_ENOUGH_POS || horiz >= CLOSE_ENOUGH_POS {
            let waypoint = Pose {
                pos: [grasp[0], grasp[1], grasp[2] - AIM_PAST],
                yaw: ee_yaw,
            };
            return (ControllerPhase::Descend, StageAction::Move(waypoint));
        }
        return (ControllerPhase::CloseGrip, StageAction::Close);
    }

    // Identify the held object as the one whose grasp point sits at the
    // end-effector; if it is the *target* object, let go and start over.
    let kinds = task.object_kinds();
    let dist_a = {
        let gp = [a_pos[0], a_pos[1], a_pos[2] + kinds[0].height()];
        horizontal(ee, gp) + (ee[2] - gp[2]).abs()
    };
    let dist_b = {
        let gp = [b_pos[0], b_pos[1], b_pos[2] + kinds[1].height()];
        horizontal(ee, gp) + (ee[2] - gp[2]).abs()
    };
    if dist_b < dist_a {
        return (ControllerPhase::OpenGrip, StageAction::Open);
    }

    let held_height = kinds[0].height();
    let held_offset_z = ee[2] - a_pos[2];
    let desired_bottom = match task {
        TaskKind::Stacking => b_top + PLACE_GAP,
        TaskKind::BlockCup | TaskKind::CupCup => INSERT_BOTTOM,
    };
    let carry_z = (b_top + CARRY_CLEARANCE_FACTOR * held_height + held_offset_z).max(SAFE_HEIGHT);
    // Stacking must match the target's yaw; cup insertion is yaw-free.
    let place_yaw = match task {
        TaskKind::Stacking => {
            let mismatch = wrap_angle(obs.object_yaw(1) - obs.object_yaw(0));
            if mismatch.abs() > YAW_GIVE_UP {
                // Too twisted to bother: place as-grasped (see `YAW_GIVE_UP`).
                ee_yaw
            } else {
                ee_yaw + mismatch
            }
        }
        _ => ee_yaw,
    };
    let offset = horizontal(a_pos, b_pos);
    let bottom = a_pos[2];
    // Nominal altitude; the waypoint aims a little higher so the rim-clear
    // gate below is crossed at speed (z is never gated against `carry_z`).
    let carry_waypoint_z = carry_z + 4.0 * AIM_PAST;
    let yaw_ok = match task {
        TaskKind::Stacking => wrap_angle(place_yaw - ee_yaw).abs() < CLOSE_ENOUGH_YAW,
        _ => true,
    };

    // Release when placed; decided before the squeeze rule below, or the
    // two would fight and the gripper would oscillate around half-open.
    if bottom <= desired_bottom + CLOSE_ENOUGH_POS && offset < CLOSE_ENOUGH_POS && yaw_ok {
        return (ControllerPhase::OpenGrip, StageAction::Open);
    }

    // Settle the squeeze before moving; a firm grip keeps exploration
    // noise from nudging the gripper open mid-carry.
    if obs.grip_open() > FIRM_GRIP + 1e-9 {
        return (ControllerPhase::CloseGrip, StageAction::Close);
    }

    if offset >= LOWER_START {
        if bottom < b_top + RIM_CLEAR {
            // Rise straight up until the carried object clears the target's
            // top, so it cannot be dragged into a rim while translating.
            let waypoint = Pose { pos: [ee[0], ee[1], carry_waypoint_z], yaw: place_yaw };
            return (ControllerPhase::Lift, StageAction::Move(waypoint));
        }
        let waypoint = Pose {
            pos: [
                ee[0] + (b_pos[0] - a_pos[0]),
                ee[1] + (b_pos[1] - a_pos[1]),
                carry_waypoint_z,
            ],
            yaw: place_yaw,
        };
        return (ControllerPhase::TransportAbove, StageAction::Move(waypoint));
    }

    // Descend while the final alignment converges over the target axis.
    let waypoint = Pose {
        pos: [
            ee[0] + (b_pos[0] - a_pos[0]),
            ee[1] + (b_pos[1] - a_pos[1]),
            desired_bottom - 2.0 * AIM_PAST + held_offset_z,
        ],
        yaw: place_yaw,
    };
    (ControllerPhase::Lower, StageAction::Move(waypoint))
}

fn stage_action_to_vector(ee_pose: &Pose, action: StageAction) -> ActionVector {
    match action {
        StageAction::Move(waypoint) => move_and_align(&waypoint, ee_pose),
        StageAction::Close => ActionVector([0.0, 0.0, 0.0, 0.0, -1.0]),
        StageAction::Open => ActionVector([0.0, 0.0, 0.0, 0.0, 1.0]),
    }
}

/// Stateless query: the scripted policy's action for any observation.
pub fn base_action(task: TaskKind, obs: &Observation) -> ActionVector {
    let (_, stage) = derive_stage(task, obs);
    let ee_pose = Pose { pos: obs.ee_pos(), yaw: obs.ee_yaw() };
    stage_action_to_vector(&ee_pose, stage)
}

/// Stateful wrapper for rollouts: same actions as [`base_action`], plus a
/// monotone record of the furthest phase reached this episode.
#[derive(Debug, Clone)]
pub struct SequentialController {
    task: TaskKind,
    phase: ControllerPhase,
}

impl SequentialController {
    pub fn new(task: TaskKind) -> Self {
        SequentialController { task, phase: ControllerPhase::ApproachAbove }
    }

    pub fn phase(&self) -> ControllerPhase {
        self.phase
    }

    pub fn reset(&mut self) {
        self.phase = ControllerPhase::ApproachAbove;
    }

    pub fn act(&mut self, obs: &Observation) -> ActionVector {
        let (stage, action) = derive_stage(self.task, obs);
        // A grasp confirmed by finger contact advances the plan even while
        // the squeeze continues; otherwise record the derived stage.
        let reached = if stage == ControllerPhase::CloseGrip && obs.finger_force() > 0.5 {
            ControllerPhase::Lift
        } else {
            stage
        };
        self.phase = self.phase.max(reached);
        let ee_pose = Pose { pos: obs.ee_pos(), yaw: obs.ee_yaw() };
        stage_action_to_vector(&ee_pose, action)
    }
}

/// The three single-purpose primitives the ensemble is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Primitive {
    /// Waypoint-following only; the gripper command is always 0.
    MoveAndAlign,
    /// `(0,0,0,0,−1)`: close in place.
    CloseGrip,
    /// `(0,0,0,0,+1)`: open in place.
    OpenGrip,
}

impl Primitive {
    pub const ALL: [Primitive; 3] =
        [Primitive::MoveAndAlign, Primitive::CloseGrip, Primitive::OpenGrip];

    pub fn action(self, task: TaskKind, obs: &Observation) -> ActionVector {
        match self {
            Primitive::MoveAndAlign => {
                let (_, stage) = derive_stage(task, obs);
                let ee_pose = Pose { pos: obs.ee_pos(), yaw: obs.ee_yaw() };
                match stage {
                    StageAction::Move(waypoint) => move_and_align(&waypoint, &ee_pose),
                    // During grip stages this primitive holds position.
                    _ => ActionVector::ZERO,
                }
            }
            Primitive::CloseGrip => ActionVector([0.0, 0.0, 0.0, 0.0, -1.0]),
            Primitive::OpenGrip => ActionVector([0.0, 0.0, 0.0, 0.0, 1.0]),
        }
    }
}

/// A base-controller roster: either the one sequential controller or the
/// three-primitive ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerSet {
    Single(TaskKind),
    Primitives(TaskKind),
}

impl ControllerSet {
    pub fn task(&self) -> TaskKind {
        match *self {
            ControllerSet::Single(t) | ControllerSet::Primitives(t) => t,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ControllerSet::Single(_) => 1,
            ControllerSet::Primitives(_) => 3,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Candidate `i`'s action at `obs`, in declaration order.
    pub fn candidate(&self, i: usize, obs: &Observation) -> ActionVector {
        match *self {
            ControllerSet::Single(task) => {
                assert_eq!(i, 0, "single-controller set has one candidate");
                base_action(task, obs)
            }
            ControllerSet::Primitives(task) => Primitive::ALL[i].action(task, obs),
        }
    }
}

/// All member actions for `obs`, in declaration order.
pub fn ensemble_action_set(set: &ControllerSet, obs: &Observation) -> Vec<ActionVector> {
    (0..set.len()).map(|i| set.candidate(i, obs)).collect()
}

/// Uniform draw from a candidate set (the macro ensemble controller's
/// per-step rule).
pub fn ensemble_sample(actions: &[ActionVector], rng: &mut Prng) -> ActionVector {
    assert!(!actions.is_empty(), "ensemble_sample needs at least one candidate");
    actions[rng.index(actions.len())]
}
