//! Strapdown mechanization, discrete error-state propagation, and the
//! weighting-matrix builder derived from the INS error propagation rule.
//!
//! Error-state ordering is `[δp, δv, φ, δb_g, δb_a]` (indices 0, 3, 6, 9, 12).
//! Position, velocity, and attitude errors are estimate-minus-truth (see
//! [`crate::attitude`] for the φ convention); the bias error states are
//! truth-minus-estimate, which is the convention under which the continuous
//! model has `∂δv̇/∂δb_a = +C` and `∂φ̇/∂δb_g = -C`.
//! [`NominalState::apply_error_feedback`] applies corrections consistently
//! with those signs.

use nalgebra::SMatrix;

use crate::attitude::{correct_attitude, quat_to_rotmat, skew};
use crate::{Cov15, Mat3, Quat, Vec15, Vec3};

/// Start column of the position error block.
pub const POS: usize = 0;
/// Start column of the velocity error block.
pub const VEL: usize = 3;
/// Start column of the attitude error block.
pub const ATT: usize = 6;
/// Start column of the gyroscope bias error block.
pub const BG: usize = 9;
/// Start column of the accelerometer bias error block.
pub const BA: usize = 12;

/// Sensitivity of the horizon position error to the initial error state, 3×15.
pub type Sensitivity = SMatrix<f64, 3, 15>;

/// Nominal strapdown state of one agent.
#[derive(Clone, Debug, PartialEq)]
pub struct NominalState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub attitude: Quat,
    pub gyro_bias: Vec3,
    pub accel_bias: Vec3,
}

impl NominalState {
    pub fn new(position: Vec3, velocity: Vec3, attitude: Quat) -> Self {
        NominalState {
            position,
            velocity,
            attitude,
            gyro_bias: Vec3::zeros(),
            accel_bias: Vec3::zeros(),
        }
    }

    pub fn rotation(&self) -> Mat3 {
        quat_to_rotmat(&self.attitude)
    }

    /// Applies an estimated error state produced by a filter update.
    ///
    /// Position, velocity, and attitude corrections remove an
    /// estimate-minus-truth error; bias corrections add a
    /// truth-minus-estimate error. Attitude feedback goes through the exact
    /// exponential map so no norm drift accumulates over long runs.
    pub fn apply_error_feedback(&mut self, dx: &Vec15) {
        self.position -= dx.fixed_rows::<3>(POS).into_owned();
        self.velocity -= dx.fixed_rows::<3>(VEL).into_owned();
        let phi = dx.fixed_rows::<3>(ATT).into_owned();
        self.attitude = correct_attitude(&self.attitude, &-phi);
        self.gyro_bias += dx.fixed_rows::<3>(BG).into_owned();
        self.accel_bias += dx.fixed_rows::<3>(BA).into_owned();
    }
}

/// One IMU reading: specific force `f^b`, angular rate `ω^b`, and the
/// integration interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImuSample {
    pub specific_force: Vec3,
    pub angular_rate: Vec3,
    pub dt: f64,
}

/// IMU stochastic model, SI units.
///
/// Defaults follow ADIS16465-class figures: 0.15 °/√h angular random walk,
/// 0.012 m/s/√h velocity random walk, 2 °/h initial gyro bias, 300 µg initial
/// accelerometer bias. Biases are modeled as per-run random constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImuNoiseModel {
    /// Angular random walk driving the gyro white noise [rad/√s].
    pub gyro_arw: f64,
    /// Velocity random walk driving the accelerometer white noise [m/s/√s].
    pub accel_vrw: f64,
    /// Standard deviation of the constant gyro bias [rad/s].
    pub gyro_bias_sigma0: f64,
    /// Standard deviation of the constant accelerometer bias [m/s²].
    pub accel_bias_sigma0: f64,
    /// Gravity magnitude; the navigation frame is z-up with gravity
    /// `[0, 0, -g]` [m/s²].
    pub gravity: f64,
}

pub const DEG: f64 = std::f64::consts::PI / 180.0;

impl Default for ImuNoiseModel {
    fn default() -> Self {
        ImuNoiseModel {
            gyro_arw: 0.15 * DEG / 60.0,
            accel_vrw: 0.012 / 60.0,
            gyro_bias_sigma0: 2.0 * DEG / 3600.0,
            accel_bias_sigma0: 300e-6 * 9.80665,
            gravity: 9.80665,
        }
    }
}

impl ImuNoiseModel {
    pub fn gravity_vector(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, -self.gravity)
    }
}

/// One strapdown integration step.
///
/// The attitude advances by the bias-corrected body angular increment through
/// the exponential map; velocity by the rotated bias-corrected specific force
/// plus gravity; position by the trapezoid of the velocity change. Biases are
/// random constants and stay untouched.
pub fn mechanize(x: &NominalState, imu: &ImuSample, gravity: f64) -> NominalState {
    let dt = imu.dt;
    let c = x.rotation();
    let f_corrected = imu.specific_force - x.accel_bias;
    let w_corrected = imu.angular_rate - x.gyro_bias;

    let dv = (c * f_corrected + Vec3::new(0.0, 0.0, -gravity)) * dt;
    let position = x.position + x.velocity * dt + 0.5 * dv * dt;
    let velocity = x.velocity + dv;
    let attitude = x.attitude * Quat::from_scaled_axis(w_corrected * dt);

    NominalState {
        position,
        velocity,
        attitude: Quat::new_normalize(*attitude.as_ref()),
        gyro_bias: x.gyro_bias,
        accel_bias: x.accel_bias,
    }
}

/// Continuous error model matrix F for the simplified INS error dynamics.
///
/// Nonzero blocks: `δṗ = δv`, `δv̇ = (f^n)×φ + C δb_a`, `φ̇ = -C δb_g`;
/// biases are random constants.
pub fn error_model_matrix(x: &NominalState, imu: &ImuSample) -> Cov15 {
    let c = x.rotation();
    let f_n = c * (imu.specific_force - x.accel_bias);
    let mut f = Cov15::zeros();
    f.fixed_view_mut::<3, 3>(POS, VEL).copy_from(&Mat3::identity());
    f.fixed_view_mut::<3, 3>(VEL, ATT).copy_from(&skew(&f_n));
    f.fixed_view_mut::<3, 3>(VEL, BA).copy_from(&c);
    f.fixed_view_mut::<3, 3>(ATT, BG).copy_from(&(-c));
    f
}

/// First-order discrete transition and process noise: `Φ = I + F·dt`,
/// `Q_d = G Q_c Gᵀ dt` with white gyro/accel noise mapped through the
/// attitude.
pub fn error_transition(x: &NominalState, imu: &ImuSample, noise: &ImuNoiseModel) -> (Cov15, Cov15) {
    let dt = imu.dt;
    let phi = Cov15::identity() + error_model_matrix(x, imu) * dt;

    let c = x.rotation();
    let mut g = SMatrix::<f64, 15, 6>::zeros();
    g.fixed_view_mut::<3, 3>(ATT, 0).copy_from(&(-c));
    g.fixed_view_mut::<3, 3>(VEL, 3).copy_from(&c);
    let mut qc = SMatrix::<f64, 6, 6>::zeros();
    let gyro_psd = noise.gyro_arw * noise.gyro_arw;
    let accel_psd = noise.accel_vrw * noise.accel_vrw;
    for i in 0..3 {
        qc[(i, i)] = gyro_psd;
        qc[(i + 3, i + 3)] = accel_psd;
    }
    let qd = g * qc * g.transpose() * dt;
    (phi, qd)
}

/// Standard covariance time update `P' = Φ P Φᵀ + Q_d`, resymmetrized.
pub fn propagate_covariance(p: &Cov15, phi: &Cov15, qd: &Cov15) -> Cov15 {
    let mut out = phi * p * phi.transpose() + qd;
    symmetrize(&mut out);
    out
}

pub fn symmetrize(m: &mut Cov15) {
    *m = (*m + m.transpose()) * 0.5;
}

/// Sensitivity `S` of the position error after a straight constant-velocity
/// horizon `T_a` to the initial error state:
/// `S = [I, I·T_a, ½(C f^b)× T_a², -⅙(C f^b)× C T_a³, ½ C T_a²]`.
pub fn ins_error_sensitivity(c_bn: &Mat3, f_b: &Vec3, t_a: f64) -> Sensitivity {
    let f_cross = skew(&(c_bn * f_b));
    let mut s = Sensitivity::zeros();
    s.fixed_view_mut::<3, 3>(0, POS).copy_from(&Mat3::identity());
    s.fixed_view_mut::<3, 3>(0, VEL).copy_from(&(Mat3::identity() * t_a));
    s.fixed_view_mut::<3, 3>(0, ATT).copy_from(&(0.5 * f_cross * t_a * t_a));
    s.fixed_view_mut::<3, 3>(0, BG)
        .copy_from(&(-(1.0 / 6.0) * f_cross * c_bn * t_a.powi(3)));
    s.fixed_view_mut::<3, 3>(0, BA).copy_from(&(0.5 * c_bn * t_a * t_a));
    s
}

/// Weighting matrix `W = SᵀS` for the weighted-trace criterion; Gram matrix,
/// hence symmetric PSD with rank at most 3, and
/// `tr(W P) = tr(S P Sᵀ)` is the horizon mean-square position error.
pub fn wci_weight_matrix(s: &Sensitivity) -> Cov15 {
    s.transpose() * s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;

    fn stationary_sample(noise: &ImuNoiseModel, q: &Quat, dt: f64) -> ImuSample {
        // Specific force exactly cancels gravity.
        ImuSample {
            specific_force: quat_to_rotmat(q).transpose() * Vec3::new(0.0, 0.0, noise.gravity),
            angular_rate: Vec3::zeros(),
            dt,
        }
    }

    #[test]
    fn stationary_state_stays_put() {
        let noise = ImuNoiseModel::default();
        let q = Quat::from_euler_angles(0.0, 0.0, 0.7);
        let mut x = NominalState::new(Vec3::new(1.0, 2.0, 3.0), Vec3::zeros(), q);
        let imu = stationary_sample(&noise, &q, 0.005);
        for _ in 0..200 {
            x = mechanize(&x, &imu, noise.gravity);
        }
        assert!((x.position - Vec3::new(1.0, 2.0, 3.0)).norm() < 1e-12);
        assert!(x.velocity.norm() < 1e-13);
    }

    #[test]
    fn constant_acceleration_reaches_expected_speed() {
        let noise = ImuNoiseModel::default();
        let mut x = NominalState::new(Vec3::zeros(), Vec3::zeros(), Quat::identity());
        // 0.4 m/s² along x for 10 s plus the gravity reaction.
        let imu = ImuSample {
            specific_force: Vec3::new(0.4, 0.0, noise.gravity),
            angular_rate: Vec3::zeros(),
            dt: 0.005,
        };
        for _ in 0..2000 {
            x = mechanize(&x, &imu, noise.gravity);
        }
        assert_abs_diff_eq!(x.velocity.x, 4.0, epsilon = 1e-9);
        assert!(x.velocity.yz().norm() < 1e-12);
    }

    #[test]
    fn circular_motion_matches_closed_form() {
        // Constant-rate level circle: yaw rate w, speed s, radius s/w.
        let noise = ImuNoiseModel::default();
        let speed = 4.0;
        let rate = 0.5;
        let dt = 0.005;
        let mut x = NominalState::new(Vec3::zeros(), Vec3::new(speed, 0.0, 0.0), Quat::identity());
        // Body frame: x forward, z up. Centripetal acceleration is w×v,
        // pointing along +y in body axes for positive yaw rate.
        let imu = ImuSample {
            specific_force: Vec3::new(0.0, rate * speed, noise.gravity),
            angular_rate: Vec3::new(0.0, 0.0, rate),
            dt,
        };
        let steps = (10.0 / dt) as usize;
        for _ in 0..steps {
            x = mechanize(&x, &imu, noise.gravity);
        }
        let t = 10.0;
        let expected = Vec3::new(
            speed / rate * (rate * t).sin(),
            speed / rate * (1.0 - (rate * t).cos()),
            0.0,
        );
        assert!(
            (x.position - expected).norm() < 1e-3,
            "closure error {}",
            (x.position - expected).norm()
        );
    }

    #[test]
    fn transition_degenerates_at_zero_dt() {
        let noise = ImuNoiseModel::default();
        let x = NominalState::new(Vec3::zeros(), Vec3::zeros(), Quat::identity());
        let imu = ImuSample {
            specific_force: Vec3::new(1.0, 2.0, 9.0),
            angular_rate: Vec3::new(0.1, 0.0, 0.0),
            dt: 0.0,
        };
        let (phi, qd) = error_transition(&x, &imu, &noise);
        assert_eq!(phi, Cov15::identity());
        assert_eq!(qd, Cov15::zeros());
    }

    #[test]
    fn zero_specific_force_removes_attitude_coupling() {
        let noise = ImuNoiseModel::default();
        let x = NominalState::new(Vec3::zeros(), Vec3::zeros(), Quat::identity());
        let imu = ImuSample {
            specific_force: Vec3::zeros(),
            angular_rate: Vec3::zeros(),
            dt: 0.01,
        };
        let (phi, _) = error_transition(&x, &imu, &noise);
        let dv_datt = phi.fixed_view::<3, 3>(VEL, ATT).into_owned();
        assert_eq!(dv_datt, Mat3::zeros());
        // Velocity integration and bias couplings remain.
        assert_eq!(
            phi.fixed_view::<3, 3>(POS, VEL).into_owned(),
            Mat3::identity() * 0.01
        );
        assert_eq!(phi.fixed_view::<3, 3>(VEL, BA).into_owned(), Mat3::identity() * 0.01);
        assert_eq!(phi.fixed_view::<3, 3>(ATT, BG).into_owned(), -Mat3::identity() * 0.01);
    }

    /// Truncated-series matrix exponential, independent of the implementation.
    fn expm6(m: &Cov15) -> Cov15 {
        let mut acc = Cov15::identity();
        let mut term = Cov15::identity();
        for k in 1..=6 {
            term = term * m / k as f64;
            acc += term;
        }
        acc
    }

    #[test]
    fn first_order_phi_matches_exponential_at_small_dt() {
        // With flight-scale specific force (|f| ≈ g) the second-order term is
        // ~(|F| dt)²/2 per element, so the 1e-6 agreement holds at dt = 1e-4.
        let noise = ImuNoiseModel::default();
        let x = NominalState::new(
            Vec3::zeros(),
            Vec3::new(4.0, 0.0, 0.0),
            Quat::from_euler_angles(0.0, 0.0, 0.9),
        );
        let imu = ImuSample {
            specific_force: Vec3::new(0.4, 2.0, noise.gravity),
            angular_rate: Vec3::new(0.0, 0.0, 0.3),
            dt: 1e-4,
        };
        let f = error_model_matrix(&x, &imu);
        let (phi, _) = error_transition(&x, &imu, &noise);
        let exact = expm6(&(f * imu.dt));
        assert!((phi - exact).abs().max() < 1e-6);
    }

    #[test]
    fn first_order_phi_error_is_second_order_at_filter_dt() {
        let noise = ImuNoiseModel::default();
        let x = NominalState::new(Vec3::zeros(), Vec3::zeros(), Quat::identity());
        let imu = ImuSample {
            specific_force: Vec3::new(0.0, 0.0, noise.gravity),
            angular_rate: Vec3::zeros(),
            dt: 0.01,
        };
        let f = error_model_matrix(&x, &imu);
        let (phi, _) = error_transition(&x, &imu, &noise);
        let exact = expm6(&(f * imu.dt));
        let fdt_norm = (f * imu.dt).norm();
        assert!((phi - exact).norm() <= 0.6 * fdt_norm * fdt_norm);
    }

    #[test]
    fn propagate_identity_keeps_covariance() {
        let p = Cov15::identity() * 0.3;
        let out = propagate_covariance(&p, &Cov15::identity(), &Cov15::zeros());
        assert_eq!(out, p);
    }

    #[test]
    fn process_noise_only_grows_trace() {
        let noise = ImuNoiseModel::default();
        let x = NominalState::new(Vec3::zeros(), Vec3::zeros(), Quat::identity());
        let imu = stationary_sample(&noise, &Quat::identity(), 0.005);
        let (phi, qd) = error_transition(&x, &imu, &noise);
        let p = Cov15::identity() * 1e-4;
        let propagated = propagate_covariance(&p, &phi, &qd);
        let no_noise = propagate_covariance(&p, &phi, &Cov15::zeros());
        assert!(propagated.trace() >= no_noise.trace());
    }

    #[test]
    fn noise_free_stationary_propagation_stays_bounded() {
        // The stationary Φ has spectral radius 1 (nilpotent F); with zero
        // noise the covariance grows polynomially, not exponentially.
        let noise = ImuNoiseModel::default();
        let x = NominalState::new(Vec3::zeros(), Vec3::zeros(), Quat::identity());
        let imu = stationary_sample(&noise, &Quat::identity(), 0.005);
        let (phi, _) = error_transition(&x, &imu, &noise);
        let eigs = phi.complex_eigenvalues();
        let rho = eigs.iter().map(|l| l.norm()).fold(0.0, f64::max);
        assert!((rho - 1.0).abs() < 1e-9, "spectral radius {rho}");

        let mut p = Cov15::identity() * 1e-6;
        for _ in 0..1000 {
            p = propagate_covariance(&p, &phi, &Cov15::zeros());
        }
        assert!(p.trace().is_finite());
        assert!(p.trace() < 1.0);
    }

    #[test]
    fn sensitivity_at_zero_horizon_is_position_selector() {
        let s = ins_error_sensitivity(&Mat3::identity(), &Vec3::new(1.0, 2.0, 3.0), 0.0);
        let mut expected = Sensitivity::zeros();
        expected.fixed_view_mut::<3, 3>(0, POS).copy_from(&Mat3::identity());
        assert_eq!(s, expected);
    }

    #[test]
    fn sensitivity_without_specific_force_drops_attitude_blocks() {
        let c = quat_to_rotmat(&Quat::from_euler_angles(0.1, 0.2, 0.3));
        let t_a = 4.0;
        let s = ins_error_sensitivity(&c, &Vec3::zeros(), t_a);
        assert_eq!(s.fixed_view::<3, 3>(0, ATT).into_owned(), Mat3::zeros());
        assert_eq!(s.fixed_view::<3, 3>(0, BG).into_owned(), Mat3::zeros());
        assert_abs_diff_eq!(
            s.fixed_view::<3, 3>(0, BA).into_owned(),
            0.5 * c * t_a * t_a,
            epsilon = 1e-15
        );
    }

    /// RK4 integration of the continuous error dynamics, assembled here from
    /// the model equations rather than from `error_model_matrix`.
    fn propagate_error_rk4(c: &Mat3, f_b: &Vec3, dx0: &Vec15, t: f64, steps: usize) -> Vec15 {
        let f_n = c * f_b;
        let deriv = |x: &Vec15| -> Vec15 {
            let dv = x.fixed_rows::<3>(VEL).into_owned();
            let phi = x.fixed_rows::<3>(ATT).into_owned();
            let bg = x.fixed_rows::<3>(BG).into_owned();
            let ba = x.fixed_rows::<3>(BA).into_owned();
            let mut out = Vec15::zeros();
            out.fixed_rows_mut::<3>(POS).copy_from(&dv);
            out.fixed_rows_mut::<3>(VEL).copy_from(&(f_n.cross(&phi) + c * ba));
            out.fixed_rows_mut::<3>(ATT).copy_from(&(-(c * bg)));
            out
        };
        let h = t / steps as f64;
        let mut x = *dx0;
        for _ in 0..steps {
            let k1 = deriv(&x);
            let k2 = deriv(&(x + k1 * (h / 2.0)));
            let k3 = deriv(&(x + k2 * (h / 2.0)));
            let k4 = deriv(&(x + k3 * h));
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        x
    }

    #[test]
    fn sensitivity_matches_integrated_error_dynamics() {
        let c = quat_to_rotmat(&Quat::from_euler_angles(0.05, -0.1, 1.2));
        let f_b = Vec3::new(0.3, -0.2, 9.8);
        let t_a = 5.0;
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut dx0 = Vec15::zeros();
        for i in 0..15 {
            dx0[i] = rng.sample::<f64, _>(StandardNormal) * 1e-3;
        }
        let s = ins_error_sensitivity(&c, &f_b, t_a);
        let predicted = s * dx0;
        let integrated = propagate_error_rk4(&c, &f_b, &dx0, t_a, 2000);
        let pos = integrated.fixed_rows::<3>(POS).into_owned();
        let rel = (predicted - pos).norm() / pos.norm();
        assert!(rel < 1e-6, "relative error {rel}");
    }

    #[test]
    fn weight_matrix_reduces_to_position_block_at_zero_horizon() {
        let s = ins_error_sensitivity(&Mat3::identity(), &Vec3::new(0.0, 0.0, 9.8), 0.0);
        let w = wci_weight_matrix(&s);
        let mut expected = Cov15::zeros();
        expected.fixed_view_mut::<3, 3>(POS, POS).copy_from(&Mat3::identity());
        assert_eq!(w, expected);
    }

    #[test]
    fn weight_matrix_rank_is_at_most_three() {
        let c = quat_to_rotmat(&Quat::from_euler_angles(0.2, 0.1, -0.8));
        let s = ins_error_sensitivity(&c, &Vec3::new(1.0, -2.0, 9.5), 5.0);
        let w = wci_weight_matrix(&s);
        let eigs = w.symmetric_eigenvalues();
        let mut sorted: Vec<f64> = eigs.iter().copied().collect();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let tol = sorted[0] * 1e-12;
        assert!(sorted[3..].iter().all(|&l| l.abs() <= tol));
        assert!(sorted.iter().all(|&l| l >= -tol));
    }

    fn random_psd(rng: &mut ChaCha12Rng) -> Cov15 {
        let a = Cov15::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        a * a.transpose() + Cov15::identity() * 1e-3
    }

    #[test]
    fn trace_identity_between_routes() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let c = quat_to_rotmat(&Quat::from_euler_angles(0.3, -0.2, 0.4));
        let s = ins_error_sensitivity(&c, &Vec3::new(0.5, 1.0, 9.7), 5.0);
        let w = wci_weight_matrix(&s);
        for _ in 0..50 {
            let p = random_psd(&mut rng);
            let via_w = (w * p).trace();
            let via_s = (s * p * s.transpose()).trace();
            let rel = (via_w - via_s).abs() / via_s.abs();
            assert!(rel < 1e-10, "relative gap {rel}");
        }
    }

    #[test]
    fn weighted_trace_matches_monte_carlo_horizon_error() {
        let c = quat_to_rotmat(&Quat::from_euler_angles(0.0, 0.1, 0.6));
        let f_b = Vec3::new(0.4, 0.0, 9.8);
        let s = ins_error_sensitivity(&c, &f_b, 5.0);
        let w = wci_weight_matrix(&s);

        let mut rng = ChaCha12Rng::seed_from_u64(99);
        // Diagonal P keeps the sampling simple and exact.
        let mut p = Cov15::zeros();
        for i in 0..15 {
            p[(i, i)] = 1e-4 * (1.0 + (i as f64) / 5.0);
        }
        let expected = (w * p).trace();

        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let mut dx = Vec15::zeros();
            for i in 0..15 {
                dx[i] = p[(i, i)].sqrt() * rng.sample::<f64, _>(StandardNormal);
            }
            acc += (s * dx).norm_squared();
        }
        let mc = acc / n as f64;
        let rel = (mc - expected).abs() / expected;
        assert!(rel < 0.02, "relative error {rel}");
    }

    #[test]
    fn gyro_bias_position_error_grows_cubically() {
        let c = quat_to_rotmat(&Quat::from_euler_angles(0.0, 0.0, 0.3));
        let f_b = Vec3::new(0.2, 0.1, 9.8);
        let mut dx0 = Vec15::zeros();
        dx0.fixed_rows_mut::<3>(BG).copy_from(&Vec3::new(1e-5, -2e-5, 1e-5));

        let horizons: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let norms: Vec<f64> = horizons
            .iter()
            .map(|&t| (ins_error_sensitivity(&c, &f_b, t) * dx0).norm())
            .collect();
        // Least-squares slope in log-log coordinates.
        let xs: Vec<f64> = horizons.iter().map(|t| t.ln()).collect();
        let ys: Vec<f64> = norms.iter().map(|n| n.ln()).collect();
        let xm = xs.iter().sum::<f64>() / xs.len() as f64;
        let ym = ys.iter().sum::<f64>() / ys.len() as f64;
        let slope = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - xm) * (y - ym))
            .sum::<f64>()
            / xs.iter().map(|x| (x - xm).powi(2)).sum::<f64>();
        assert!((slope - 3.0).abs() < 0.05, "log-log slope {slope}");
    }
}
