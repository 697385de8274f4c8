//! Closed-form truth trajectories and exact inverse-mechanization IMU
//! synthesis.
//!
//! Truth is evaluated analytically per segment (no numerical integration), so
//! determinism is trivial and the only closure error against re-mechanized
//! IMU is the trapezoid position rule over curved arcs, well under a
//! millimeter per two-minute run.

use crate::ins::{ImuSample, NominalState};
use crate::{Error, Quat, Result, Vec3};

/// One piece of the motion profile. Angles are signed: positive circular
/// turns are counterclockwise seen from above, positive pitch ramps raise
/// the nose.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrajectorySegment {
    Accelerate { accel: f64, duration: f64 },
    /// Two full circles of opposite handedness, equal split of the duration,
    /// flown at the entry speed.
    EightShape { duration: f64 },
    PitchRamp { delta_deg: f64, duration: f64 },
    ConstantVelocity { duration: f64 },
    CircularTurn { angle_deg: f64, duration: f64 },
    DecelerateToHover { duration: f64 },
}

impl TrajectorySegment {
    pub fn duration(&self) -> f64 {
        match *self {
            TrajectorySegment::Accelerate { duration, .. }
            | TrajectorySegment::EightShape { duration }
            | TrajectorySegment::PitchRamp { duration, .. }
            | TrajectorySegment::ConstantVelocity { duration }
            | TrajectorySegment::CircularTurn { duration, .. }
            | TrajectorySegment::DecelerateToHover { duration } => duration,
        }
    }
}

/// The 120 s benchmark profile: accelerate, fly an 8, climb, cruise,
/// descend, cruise, turn back, cruise, hover.
pub fn default_profile() -> Vec<TrajectorySegment> {
    vec![
        TrajectorySegment::Accelerate { accel: 0.4, duration: 10.0 },
        TrajectorySegment::EightShape { duration: 26.0 },
        TrajectorySegment::PitchRamp { delta_deg: 15.0, duration: 1.0 },
        TrajectorySegment::ConstantVelocity { duration: 19.0 },
        TrajectorySegment::PitchRamp { delta_deg: -15.0, duration: 1.0 },
        TrajectorySegment::ConstantVelocity { duration: 13.0 },
        TrajectorySegment::CircularTurn { angle_deg: -180.0, duration: 20.0 },
        TrajectorySegment::ConstantVelocity { duration: 20.0 },
        TrajectorySegment::DecelerateToHover { duration: 10.0 },
    ]
}

/// Initial pose of the truth trajectory; roll and pitch start level.
#[derive(Clone, Copy, Debug)]
pub struct StartPose {
    pub position: Vec3,
    pub yaw: f64,
}

/// Segment-entry kinematic state.
#[derive(Clone, Copy, Debug)]
struct Waypoint {
    position: Vec3,
    speed: f64,
    yaw: f64,
    pitch: f64,
}

fn direction(yaw: f64, pitch: f64) -> Vec3 {
    Vec3::new(pitch.cos() * yaw.cos(), pitch.cos() * yaw.sin(), pitch.sin())
}

fn attitude(yaw: f64, pitch: f64) -> Quat {
    Quat::from_axis_angle(&Vec3::z_axis(), yaw) * Quat::from_axis_angle(&Vec3::y_axis(), -pitch)
}

fn state_of(w: &Waypoint) -> NominalState {
    NominalState::new(
        w.position,
        w.speed * direction(w.yaw, w.pitch),
        attitude(w.yaw, w.pitch),
    )
}

/// Primitive segments after expanding composites; every primitive has a
/// closed-form evaluation.
#[derive(Clone, Copy, Debug)]
enum Primitive {
    Accelerate { accel: f64, duration: f64 },
    PitchRamp { delta: f64, duration: f64 },
    Coast { duration: f64 },
    Turn { angle: f64, duration: f64 },
    Hover { duration: f64 },
}

impl Primitive {
    fn duration(&self) -> f64 {
        match *self {
            Primitive::Accelerate { duration, .. }
            | Primitive::PitchRamp { duration, .. }
            | Primitive::Coast { duration }
            | Primitive::Turn { duration, .. }
            | Primitive::Hover { duration } => duration,
        }
    }

    /// Kinematic state `tau` seconds into the segment starting at `w`.
    fn eval(&self, w: &Waypoint, tau: f64) -> Waypoint {
        match *self {
            Primitive::Accelerate { accel, .. } => {
                let dir = direction(w.yaw, w.pitch);
                Waypoint {
                    position: w.position + dir * (w.speed * tau + 0.5 * accel * tau * tau),
                    speed: w.speed + accel * tau,
                    ..*w
                }
            }
            Primitive::Coast { .. } => Waypoint {
                position: w.position + direction(w.yaw, w.pitch) * (w.speed * tau),
                ..*w
            },
            Primitive::Turn { angle, duration } => {
                let rate = angle / duration;
                let yaw = w.yaw + rate * tau;
                // Level turn at constant speed: the horizontal position is
                // the integral of speed·[cos ψ, sin ψ].
                let radius = w.speed / rate;
                let dp = Vec3::new(
                    radius * (yaw.sin() - w.yaw.sin()),
                    radius * (w.yaw.cos() - yaw.cos()),
                    0.0,
                );
                Waypoint { position: w.position + dp, yaw, ..*w }
            }
            Primitive::PitchRamp { delta, duration } => {
                let rate = delta / duration;
                let pitch = w.pitch + rate * tau;
                let horizontal = (pitch.sin() - w.pitch.sin()) / rate;
                let vertical = (w.pitch.cos() - pitch.cos()) / rate;
                let dp = Vec3::new(
                    w.speed * w.yaw.cos() * horizontal,
                    w.speed * w.yaw.sin() * horizontal,
                    w.speed * vertical,
                );
                Waypoint { position: w.position + dp, pitch, ..*w }
            }
            Primitive::Hover { duration } => {
                // Linear deceleration from the entry speed to rest.
                let dir = direction(w.yaw, w.pitch);
                let decel = w.speed / duration;
                Waypoint {
                    position: w.position + dir * (w.speed * tau - 0.5 * decel * tau * tau),
                    speed: w.speed - decel * tau,
                    ..*w
                }
            }
        }
    }
}

fn expand(segments: &[TrajectorySegment]) -> Result<Vec<Primitive>> {
    let mut out = Vec::new();
    for seg in segments {
        if !(seg.duration() > 0.0) {
            return Err(Error::InvalidSegment(format!("non-positive duration in {seg:?}")));
        }
        match *seg {
            TrajectorySegment::Accelerate { accel, duration } => {
                out.push(Primitive::Accelerate { accel, duration });
            }
            TrajectorySegment::EightShape { duration } => {
                let half = duration / 2.0;
                let turn = 2.0 * std::f64::consts::PI;
                out.push(Primitive::Turn { angle: turn, duration: half });
                out.push(Primitive::Turn { angle: -turn, duration: half });
            }
            TrajectorySegment::PitchRamp { delta_deg, duration } => {
                if delta_deg == 0.0 {
                    return Err(Error::InvalidSegment("zero pitch ramp".into()));
                }
                out.push(Primitive::PitchRamp {
                    delta: delta_deg.to_radians(),
                    duration,
                });
            }
            TrajectorySegment::ConstantVelocity { duration } => {
                out.push(Primitive::Coast { duration });
            }
            TrajectorySegment::CircularTurn { angle_deg, duration } => {
                if angle_deg == 0.0 {
                    return Err(Error::InvalidSegment("zero turn angle".into()));
                }
                out.push(Primitive::Turn { angle: angle_deg.to_radians(), duration });
            }
            TrajectorySegment::DecelerateToHover { duration } => {
                out.push(Primitive::Hover { duration });
            }
        }
    }
    Ok(out)
}

/// Kinematically consistent truth at the IMU rate, one state per sample
/// instant including both endpoints.
pub fn generate_truth(
    segments: &[TrajectorySegment],
    start: &StartPose,
    imu_rate: f64,
) -> Result<Vec<NominalState>> {
    if !(imu_rate > 0.0) {
        return Err(Error::InvalidSegment("non-positive IMU rate".into()));
    }
    let primitives = expand(segments)?;
    let dt = 1.0 / imu_rate;

    // Segment boundaries must land on sample instants so closed forms are
    // evaluated without cross-segment interpolation.
    let mut steps = Vec::with_capacity(primitives.len());
    for p in &primitives {
        let exact = p.duration() * imu_rate;
        let n = exact.round();
        if (exact - n).abs() > 1e-6 || n < 1.0 {
            return Err(Error::InvalidSegment(format!(
                "duration {} s does not align with the {imu_rate} Hz grid",
                p.duration()
            )));
        }
        steps.push(n as usize);
    }

    let mut waypoint = Waypoint {
        position: start.position,
        speed: 0.0,
        yaw: start.yaw,
        pitch: 0.0,
    };
    let total: usize = steps.iter().sum();
    let mut out = Vec::with_capacity(total + 1);
    out.push(state_of(&waypoint));
    for (prim, n) in primitives.iter().zip(&steps) {
        for k in 1..=*n {
            out.push(state_of(&prim.eval(&waypoint, k as f64 * dt)));
        }
        waypoint = prim.eval(&waypoint, *n as f64 * dt);
    }
    Ok(out)
}

/// Exact inverse mechanization: IMU samples that reproduce consecutive truth
/// attitudes and velocities bit-near-exactly when fed back through
/// [`crate::ins::mechanize`]. Specific force includes the gravity reaction.
pub fn ideal_imu(truth: &[NominalState], dt: f64, gravity: f64) -> Vec<ImuSample> {
    let mut out = Vec::with_capacity(truth.len().saturating_sub(1));
    for pair in truth.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let angular_rate = (a.attitude.inverse() * b.attitude).scaled_axis() / dt;
        let accel = (b.velocity - a.velocity) / dt - Vec3::new(0.0, 0.0, -gravity);
        let specific_force = a.rotation().transpose() * accel;
        out.push(ImuSample { specific_force, angular_rate, dt });
    }
    out
}
