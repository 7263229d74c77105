//! Desk-scale kinematic manipulation environment.
//!
//! Three tabletop tasks share one mechanic set: a yaw-only end-effector
//! moves in a box workspace, grasps are kinematic attachments triggered by
//! proximity plus a closed gripper, releases drop the object straight down,
//! and carrying an object into a cup wall tips the cup and ends the episode.
//! Rewards are sparse: 1 on task success, else 0, with a 100-step horizon.
//!
//! Everything is deterministic: `step` is a pure function of `(state,
//! action)` and `reset` consumes a seeded stream, so identical seeds give
//! identical trajectories bit for bit.

use crate::rng::Prng;

pub const OBS_DIM: usize = 20;
pub const ACTION_DIM: usize = 5;
/// Episode length cap.
pub const HORIZON: usize = 100;

/// Meters of end-effector translation per unit action component.
pub const POS_STEP: f64 = 0.02;
/// Radians of end-effector yaw per unit action component.
pub const YAW_STEP: f64 = 0.05;
/// Gripper open-angle change per unit action component.
pub const GRIP_STEP: f64 = 0.1;

/// Workspace half-extent in x and y.
pub const WORKSPACE_XY_HALF: f64 = 0.3;
pub const WORKSPACE_Z_MAX: f64 = 0.5;
/// Objects are placed uniformly inside this half-extent at reset.
pub const PLACEMENT_HALF: f64 = 0.2;
/// Minimum center distance between the two objects at reset.
pub const MIN_OBJECT_SEPARATION: f64 = 0.12;
/// Initial object yaws are uniform in ± this bound.
pub const PLACEMENT_YAW_HALF: f64 = std::f64::consts::FRAC_PI_4;

/// Horizontal and vertical capture range around a graspable point.
pub const GRASP_RANGE: f64 = 0.02;
/// Gripper counts as closed (can capture) below this open angle.
pub const GRIP_CLOSED_BELOW: f64 = 0.3;
/// Gripper counts as open (releases) above this open angle.
pub const GRIP_OPEN_ABOVE: f64 = 0.5;

pub const CUBE_SIDE: f64 = 0.05;
pub const CUP_HEIGHT: f64 = 0.15;
/// Slack added to the geometric insertion clearance when judging success.
pub const INSERT_MARGIN: f64 = 0.005;
/// Width of the tipping band outside a cup's opening radius.
pub const WALL_BAND: f64 = 0.02;

/// Stacking success tolerances: horizontal offset, height window around the
/// cube-on-cube resting height, and yaw misalignment.
pub const STACK_OFFSET_TOL: f64 = 0.025;
pub const STACK_REST_HEIGHT: f64 = 0.05;
pub const STACK_HEIGHT_TOL: f64 = 0.01;
pub const STACK_YAW_TOL: f64 = 0.3;

/// Wrap an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a % std::f64::consts::TAU;
    if x <= -std::f64::consts::PI {
        x += std::f64::consts::TAU;
    } else if x > std::f64::consts::PI {
        x -= std::f64::consts::TAU;
    }
    x
}

fn horizontal_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// 5-component action: dx, dy, dz, dyaw, dgrip, each meant to lie in
/// [−1, 1]; `clamped` enforces the range before the scales are applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionVector(pub [f64; 5]);

impl ActionVector {
    pub const ZERO: ActionVector = ActionVector([0.0; 5]);

    pub fn clamped(&self) -> ActionVector {
        let mut out = self.0;
        for v in &mut out {
            *v = v.clamp(-1.0, 1.0);
        }
        ActionVector(out)
    }

    pub fn dgrip(&self) -> f64 {
        self.0[4]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Task roster. Object A is always the manipulated green object, object B
/// the placement target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    /// Green cube onto purple cube.
    Stacking,
    /// Green cube into blue cup.
    BlockCup,
    /// Green cup into blue cup.
    CupCup,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::Stacking, TaskKind::BlockCup, TaskKind::CupCup];

    pub fn object_kinds(self) -> [ObjectKind; 2] {
        match self {
            TaskKind::Stacking => [ObjectKind::Cube, ObjectKind::PurpleCube],
            TaskKind::BlockCup => [ObjectKind::Cube, ObjectKind::BlueCup],
            TaskKind::CupCup => [ObjectKind::GreenCup, ObjectKind::BlueCup],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Stacking => "stacking",
            TaskKind::BlockCup => "block-cup",
            TaskKind::CupCup => "cup-cup",
        }
    }

    pub fn from_name(name: &str) -> Option<TaskKind> {
        match name {
            "stacking" => Some(TaskKind::Stacking),
            "block-cup" => Some(TaskKind::BlockCup),
            "cup-cup" => Some(TaskKind::CupCup),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectKind {
    /// Green cube, side 0.05 m.
    Cube,
    /// Purple cube, side 0.05 m (stacking target).
    PurpleCube,
    /// Green cup, opening 0.05 m, outer width 0.06 m, height 0.15 m.
    GreenCup,
    /// Blue cup, opening 0.065 m, outer width 0.075 m, height 0.15 m
    /// (placement target). The opening clears a cube by 7.5 mm per side but
    /// the green cup by only 2.5 mm, so cup-in-cup needs the finest
    /// alignment of the three tasks.
    BlueCup,
}

impl ObjectKind {
    pub fn height(self) -> f64 {
        match self {
            ObjectKind::Cube | ObjectKind::PurpleCube => CUBE_SIDE,
            ObjectKind::GreenCup | ObjectKind::BlueCup => CUP_HEIGHT,
        }
    }

    /// Opening diameter for cups.
    pub fn opening(self) -> Option<f64> {
        match self {
            ObjectKind::GreenCup => Some(0.05),
            ObjectKind::BlueCup => Some(0.065),
            _ => None,
        }
    }

    /// Footprint width used when judging whether this object fits through
    /// an opening: side length for cubes, opening diameter for cups.
    pub fn width(self) -> f64 {
        match self {
            ObjectKind::Cube | ObjectKind::PurpleCube => CUBE_SIDE,
            ObjectKind::GreenCup => 0.06,
            ObjectKind::BlueCup => 0.075,
        }
    }

    pub fn is_cup(self) -> bool {
        matches!(self, ObjectKind::GreenCup | ObjectKind::BlueCup)
    }
}

/// One rigid object. `pos` is the bottom-center point; cubes are grasped at
/// their top center, cups at rim height on the axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectSpec {
    pub kind: ObjectKind,
    pub pos: [f64; 3],
    pub yaw: f64,
}

impl ObjectSpec {
    pub fn bottom_z(&self) -> f64 {
        self.pos[2]
    }

    pub fn top_z(&self) -> f64 {
        self.pos[2] + self.kind.height()
    }

    /// The point the gripper must reach to capture this object.
    pub fn grasp_point(&self) -> [f64; 3] {
        [self.pos[0], self.pos[1], self.top_z()]
    }
}

/// Rigid attachment of one object to the end-effector: the object's pose is
/// reproduced from the end-effector pose plus these grasp-time offsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attachment {
    pub index: usize,
    /// Object position relative to the end-effector, in the end-effector's
    /// yaw frame at grasp time.
    local_offset: [f64; 3],
    yaw_offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationCause {
    Running,
    Success,
    Tipped,
    Timeout,
}

/// Flat 20-value observation:
/// `[ee_pos ×3, roll=0, pitch=0, ee_yaw, grip_open, finger_force,
///   objA pos ×3, 0, 0, objA yaw, objB pos ×3, 0, 0, objB yaw]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation(pub [f64; OBS_DIM]);

impl Observation {
    pub fn ee_pos(&self) -> [f64; 3] {
        [self.0[0], self.0[1], self.0[2]]
    }

    pub fn ee_yaw(&self) -> f64 {
        self.0[5]
    }

    pub fn grip_open(&self) -> f64 {
        self.0[6]
    }

    pub fn finger_force(&self) -> f64 {
        self.0[7]
    }

    pub fn object_pos(&self, index: usize) -> [f64; 3] {
        let base = 8 + 6 * index;
        [self.0[base], self.0[base + 1], self.0[base + 2]]
    }

    pub fn object_yaw(&self, index: usize) -> f64 {
        self.0[8 + 6 * index + 5]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub termination_cause: TerminationCause,
}

/// Full simulator state.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub task: TaskKind,
    pub ee_pos: [f64; 3],
    pub ee_yaw: f64,
    /// Gripper open angle in [0, 1]: 0 closed, 1 open.
    pub grip_open: f64,
    /// Binary contact proxy: 1 exactly while an object is attached.
    pub finger_force: f64,
    pub objects: [ObjectSpec; 2],
    pub attached: Option<Attachment>,
    pub time_step: usize,
    pub tipped: bool,
    finished: bool,
}

impl WorldState {
    pub fn attached_index(&self) -> Option<usize> {
        self.attached.map(|a| a.index)
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }
}

/// Place both objects and home the end-effector. Object placement rejects
/// and redraws the second object's position until the separation constraint
/// holds, so the first object's marginal distribution stays exactly uniform.
pub fn reset(task: TaskKind, rng: &mut Prng) -> (WorldState, Observation) {
    let kinds = task.object_kinds();
    let ax = rng.range(-PLACEMENT_HALF, PLACEMENT_HALF);
    let ay = rng.range(-PLACEMENT_HALF, PLACEMENT_HALF);
    let ayaw = rng.range(-PLACEMENT_YAW_HALF, PLACEMENT_YAW_HALF);
    let mut b_pos = None;
    for _ in 0..1000 {
        let bx = rng.range(-PLACEMENT_HALF, PLACEMENT_HALF);
        let by = rng.range(-PLACEMENT_HALF, PLACEMENT_HALF);
        if ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt() >= MIN_OBJECT_SEPARATION {
            b_pos = Some((bx, by));
            break;
        }
    }
    let (bx, by) = b_pos.expect("object placement failed 1000 rejection attempts");
    let byaw = rng.range(-PLACEMENT_YAW_HALF, PLACEMENT_YAW_HALF);
    let state = WorldState {
        task,
        ee_pos: [0.0, 0.0, 0.3],
        ee_yaw: 0.0,
        grip_open: 1.0,
        finger_force: 0.0,
        objects: [
            ObjectSpec { kind: kinds[0], pos: [ax, ay, 0.0], yaw: ayaw },
            ObjectSpec { kind: kinds[1], pos: [bx, by, 0.0], yaw: byaw },
        ],
        attached: None,
        time_step: 0,
        tipped: false,
        finished: false,
    };
    let obs = observe(&state);
    (state, obs)
}

/// Advance one step. Panics if the episode already terminated.
pub fn step(state: &mut WorldState, action: &ActionVector) -> StepResult {
    assert!(!state.finished, "stepping a finished episode");
    let a = action.clamped();

    // End-effector kinematics.
    state.ee_pos[0] = (state.ee_pos[0] + POS_STEP * a.0[0])
        .clamp(-WORKSPACE_XY_HALF, WORKSPACE_XY_HALF);
    state.ee_pos[1] = (state.ee_pos[1] + POS_STEP * a.0[1])
        .clamp(-WORKSPACE_XY_HALF, WORKSPACE_XY_HALF);
    state.ee_pos[2] = (state.ee_pos[2] + POS_STEP * a.0[2]).clamp(0.0, WORKSPACE_Z_MAX);
    state.ee_yaw += YAW_STEP * a.0[3];
    state.grip_open = (state.grip_open + GRIP_STEP * a.0[4]).clamp(0.0, 1.0);

    // Attached object follows rigidly.
    if let Some(att) = state.attached {
        let (s, c) = state.ee_yaw.sin_cos();
        let local = att.local_offset;
        state.objects[att.index].pos = [
            state.ee_pos[0] + c * local[0] - s * local[1],
            state.ee_pos[1] + s * local[0] + c * local[1],
            state.ee_pos[2] + local[2],
        ];
        state.objects[att.index].yaw = state.ee_yaw + att.yaw_offset;
    }

    // Release: an open gripper lets go and the object falls straight down.
    if state.grip_open > GRIP_OPEN_ABOVE {
        if let Some(att) = state.attached.take() {
            let z = rest_height(&state.objects, att.index);
            state.objects[att.index].pos[2] = z;
            state.finger_force = 0.0;
        }
    }

    // Grasp: closed gripper near a graspable point captures the object.
    // Object A is checked first so the pick is deterministic when both
    // grasp points are in range (nested cups share a rim height).
    if state.attached.is_none() && state.grip_open < GRIP_CLOSED_BELOW {
        for index in 0..state.objects.len() {
            let gp = state.objects[index].grasp_point();
            let horiz = horizontal_distance(state.ee_pos, gp);
            let vert = (state.ee_pos[2] - gp[2]).abs();
            if horiz <= GRASP_RANGE && vert <= GRASP_RANGE {
                let delta = [
                    state.objects[index].pos[0] - state.ee_pos[0],
                    state.objects[index].pos[1] - state.ee_pos[1],
                    state.objects[index].pos[2] - state.ee_pos[2],
                ];
                let (s, c) = (-state.ee_yaw).sin_cos();
                state.attached = Some(Attachment {
                    index,
                    local_offset: [
                        c * delta[0] - s * delta[1],
                        s * delta[0] + c * delta[1],
                        delta[2],
                    ],
                    yaw_offset: state.objects[index].yaw - state.ee_yaw,
                });
                state.finger_force = 1.0;
                break;
            }
        }
    }

    // Tipping: carrying an object into a cup wall knocks the cup over.
    if let Some(att) = state.attached {
        let held = &state.objects[att.index];
        for (j, other) in state.objects.iter().enumerate() {
            if j == att.index || !other.kind.is_cup() {
                continue;
            }
            let opening = other.kind.opening().expect("cup has an opening");
            let offset = horizontal_distance(held.pos, other.pos);
            let inner = opening / 2.0 - INSERT_MARGIN;
            let outer = opening / 2.0 + WALL_BAND;
            if held.bottom_z() < other.top_z() && offset > inner && offset < outer {
                state.tipped = true;
            }
        }
    }

    state.time_step += 1;

    let cause = if state.tipped {
        TerminationCause::Tipped
    } else if check_success(state, state.task) {
        TerminationCause::Success
    } else if state.time_step >= HORIZON {
        TerminationCause::Timeout
    } else {
        TerminationCause::Running
    };
    let done = cause != TerminationCause::Running;
    state.finished = done;
    StepResult {
        observation: observe(state),
        reward: if cause == TerminationCause::Success { 1.0 } else { 0.0 },
        done,
        termination_cause: cause,
    }
}

/// Height a dropped object comes to rest at: stacked on a cube if dropped
/// over one from above, otherwise the table plane (cup interiors sit at
/// table height).
fn rest_height(objects: &[ObjectSpec; 2], dropped: usize) -> f64 {
    let obj = &objects[dropped];
    for (j, other) in objects.iter().enumerate() {
        if j == dropped || other.kind.is_cup() {
            continue;
        }
        let close = horizontal_distance(obj.pos, other.pos) < CUBE_SIDE / 2.0;
        let above = obj.bottom_z() >= other.top_z() - 1e-9;
        if close && above {
            return other.top_z();
        }
    }
    0.0
}

/// Task-completion predicate, evaluated on the post-step state.
pub fn check_success(state: &WorldState, task: TaskKind) -> bool {
    if state.tipped {
        return false;
    }
    let [a, b] = &state.objects;
    if state.attached_index() == Some(0) {
        return false;
    }
    let offset = horizontal_distance(a.pos, b.pos);
    match task {
        TaskKind::Stacking => {
            offset < STACK_OFFSET_TOL
                && (a.bottom_z() - STACK_REST_HEIGHT).abs() < STACK_HEIGHT_TOL
                && wrap_angle(a.yaw - b.yaw).abs() < STACK_YAW_TOL
        }
        TaskKind::BlockCup | TaskKind::CupCup => {
            let opening = b.kind.opening().expect("target is a cup");
            let fit_tol = (opening - a.kind.width()) / 2.0 + INSERT_MARGIN;
            offset < fit_tol && a.bottom_z() < b.top_z()
        }
    }
}

/// Project the world state onto the 20-value observation the networks see.
pub fn observe(state: &WorldState) -> Observation {
    let mut o = [0.0; OBS_DIM];
    o[0..3].copy_from_slice(&state.ee_pos);
    // o[3], o[4]: roll and pitch, fixed at zero.
    o[5] = state.ee_yaw;
    o[6] = state.grip_open;
    o[7] = state.finger_force;
    for (i, obj) in state.objects.iter().enumerate() {
        let base = 8 + 6 * i;
        o[base..base + 3].copy_from_slice(&obj.pos);
        // base+3, base+4: object roll and pitch, fixed at zero.
        o[base + 5] = obj.yaw;
    }
    Observation(o)
}

/// Serialize one step as a trajectory-dump line:
/// `time_step, obs[0..20], action[0..5], reward, done(0/1)`.
pub fn trajectory_line(
    time_step: usize,
    obs: &Observation,
    action: &ActionVector,
    reward: f64,
    done: bool,
) -> String {
    let mut fields = Vec::with_capacity(1 + OBS_DIM + ACTION_DIM + 2);
    fields.push(time_step.to_string());
    fields.extend(obs.0.iter().map(|v| v.to_string()));
    fields.extend(action.0.iter().map(|v| v.to_string()));
    fields.push(reward.to_string());
    fields.push(if done { "1".into() } else { "0".into() });
    fields.join(",")
}

/// Parse one trajectory-dump line back into its parts.
pub fn parse_trajectory_line(
    line: &str,
) -> Result<(usize, Observation, ActionVector, f64, bool), String> {
    let parts: Vec<&str> = line.split(',').map(str::trim).collect();
    let expect = 1 + OBS_DIM + ACTION_DIM + 2;
    if parts.len() != expect {
        return Err(format!("expected {expect} fields, found {}", parts.len()));
    }
    let time_step: usize =
        parts[0].parse().map_err(|_| format!("bad time_step {:?}", parts[0]))?;
    let mut obs = [0.0; OBS_DIM];
    for (i, v) in obs.iter_mut().enumerate() {
        *v = parts[1 + i].parse().map_err(|_| format!("bad obs field {i}"))?;
    }
    let mut act = [0.0; ACTION_DIM];
    for (i, v) in act.iter_mut().enumerate() {
        *v = parts[1 + OBS_DIM + i].parse().map_err(|_| format!("bad action field {i}"))?;
    }
    let reward: f64 = parts[1 + OBS_DIM + ACTION_DIM]
        .parse()
        .map_err(|_| "bad reward field".to_string())?;
    let done = match parts[1 + OBS_DIM + ACTION_DIM + 1] {
        "0" => false,
        "1" => true,
        other => return Err(format!("bad done field {other:?}")),
    };
    Ok((time_step, Observation(obs), ActionVector(act), reward, done))
}
