//! Range measurement geometry and observation models.
//!
//! Ranging modules sit at a body-frame lever arm from the IMU. Differential
//! measurements `z = d_hat - d_tilde` are linear in the error state to first
//! order; rows observe position directly and attitude through the rotated
//! lever arm, never velocity or biases.
//!
//! Inter-agent rows also carry the neighbor's estimation error. Its nominal
//! variance enters through the row's noise Jacobian `G` applied to a
//! diagonal, doubled copy of the neighbor's broadcast variances, which keeps
//! the stacked nominal covariance diagonal while dominating the true one.

use nalgebra::{DMatrix, DVector, RowSVector};

use crate::attitude::{quat_to_rotmat, skew};
use crate::ins::{NominalState, ATT, POS};
use crate::{Error, Mat3, Quat, Result, Vec3};

/// Separations below this are considered degenerate geometry [m].
const MIN_SEPARATION: f64 = 1e-6;

/// Body-frame offset from the IMU to the ranging module.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeverArm(pub Vec3);

/// One observation row over the 15-dim error state.
pub type ObsRow = RowSVector<f64, 15>;
/// Noise Jacobian of an inter-agent row over `[δp_j, φ_j, n_d]`.
pub type NoiseRow = RowSVector<f64, 7>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RangeKind {
    AgentToAnchor,
    AgentToAgent,
}

/// A single distance measurement taken by `source_id`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeMeasurement {
    pub kind: RangeKind,
    pub source_id: u32,
    pub target_id: u32,
    /// Measured distance `d_tilde` [m].
    pub distance: f64,
    /// Measurement noise standard deviation [m].
    pub sigma: f64,
}

/// The broadcast state of a neighboring agent: position and attitude
/// estimates with their per-axis nominal variances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeighborInfo {
    pub agent_id: u32,
    pub position: Vec3,
    pub attitude: Quat,
    /// Diagonal position variances [m²].
    pub pos_var: Vec3,
    /// Diagonal attitude variances [rad²].
    pub att_var: Vec3,
}

/// Stacked differential ranges with Jacobians and nominal noise covariance.
#[derive(Clone, Debug)]
pub struct RangeObservationBatch {
    /// Differential measurements `d_hat - d_tilde` [m].
    pub z: DVector<f64>,
    /// Stacked observation rows, one per measurement.
    pub h: DMatrix<f64>,
    /// Nominal noise covariance; diagonal by construction.
    pub r_nominal: DMatrix<f64>,
}

impl RangeObservationBatch {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn r_diagonal(&self) -> DVector<f64> {
        self.r_nominal.diagonal()
    }

    fn from_rows(rows: Vec<(f64, ObsRow, f64)>) -> Self {
        let m = rows.len();
        let mut z = DVector::zeros(m);
        let mut h = DMatrix::zeros(m, 15);
        let mut r = DMatrix::zeros(m, m);
        for (i, (zi, hi, ri)) in rows.into_iter().enumerate() {
            z[i] = zi;
            h.row_mut(i).copy_from(&hi);
            r[(i, i)] = ri;
        }
        RangeObservationBatch { z, h, r_nominal: r }
    }
}

/// Position of the ranging module: `p_R = p_I + C_b^n l^b`.
pub fn ranging_module_position(p_imu: &Vec3, c_bn: &Mat3, lever: &LeverArm) -> Vec3 {
    p_imu + c_bn * lever.0
}

/// Predicted range and unit direction from the other module toward this one.
pub fn predict_range_and_direction(p_own: &Vec3, p_other: &Vec3) -> Result<(f64, Vec3)> {
    let diff = p_own - p_other;
    let d = diff.norm();
    if d < MIN_SEPARATION {
        return Err(Error::DegenerateGeometry);
    }
    Ok((d, diff / d))
}

fn observation_row(direction: &Vec3, c_bn: &Mat3, lever: &LeverArm) -> ObsRow {
    let mut h = ObsRow::zeros();
    h.fixed_columns_mut::<3>(POS).copy_from(&direction.transpose());
    h.fixed_columns_mut::<3>(ATT)
        .copy_from(&(direction.transpose() * skew(&(c_bn * lever.0))));
    h
}

/// Observation row for a range to an anchor at a known position:
/// `H = [r̂ᵀ, 0, r̂ᵀ (C l)×, 0, 0]`.
pub fn anchor_observation_row(
    x_hat: &NominalState,
    lever: &LeverArm,
    anchor_pos: &Vec3,
) -> Result<(ObsRow, f64)> {
    let c = x_hat.rotation();
    let p_r = ranging_module_position(&x_hat.position, &c, lever);
    let (d_hat, direction) = predict_range_and_direction(&p_r, anchor_pos)?;
    Ok((observation_row(&direction, &c, lever), d_hat))
}

/// Observation and noise rows for a range to another agent.
///
/// `H` is the anchor row shape; `G = [-r̂ᵀ, -r̂ᵀ (C_j l)×, -1]` maps the
/// neighbor's position error, the neighbor's attitude error, and the range
/// noise into the differential measurement.
pub fn agent_observation_row(
    x_hat: &NominalState,
    info: &NeighborInfo,
    lever: &LeverArm,
) -> Result<(ObsRow, NoiseRow, f64)> {
    let c_own = x_hat.rotation();
    let c_other = quat_to_rotmat(&info.attitude);
    let p_own = ranging_module_position(&x_hat.position, &c_own, lever);
    let p_other = ranging_module_position(&info.position, &c_other, lever);
    let (d_hat, direction) = predict_range_and_direction(&p_own, &p_other)?;

    let h = observation_row(&direction, &c_own, lever);
    let mut g = NoiseRow::zeros();
    g.fixed_columns_mut::<3>(0).copy_from(&(-direction.transpose()));
    g.fixed_columns_mut::<3>(3)
        .copy_from(&(-direction.transpose() * skew(&(c_other * lever.0))));
    g[6] = -1.0;
    Ok((h, g, d_hat))
}

/// Stacks anchor ranges into one batch with `R = σ_r² I`.
///
/// `measurements[k].target_id` indexes into `anchors`.
pub fn build_anchor_batch(
    x_hat: &NominalState,
    lever: &LeverArm,
    anchors: &[Vec3],
    measurements: &[RangeMeasurement],
) -> Result<RangeObservationBatch> {
    let mut rows = Vec::with_capacity(measurements.len());
    for meas in measurements {
        debug_assert_eq!(meas.kind, RangeKind::AgentToAnchor);
        let anchor = anchors
            .get(meas.target_id as usize)
            .ok_or_else(|| Error::Config(format!("unknown anchor id {}", meas.target_id)))?;
        let (h, d_hat) = anchor_observation_row(x_hat, lever, anchor)?;
        rows.push((d_hat - meas.distance, h, meas.sigma * meas.sigma));
    }
    Ok(RangeObservationBatch::from_rows(rows))
}

/// Stacks inter-agent ranges into one batch.
///
/// Each row's nominal variance is `G diag(2 σ²_p, 2 σ²_φ, σ_r²) Gᵀ`: the
/// neighbor variance doubling keeps the stacked covariance consistent
/// without tracking cross-agent correlations, and the zero off-diagonal
/// blocks reduce it to a diagonal matrix.
pub fn build_agent_batch(
    x_hat: &NominalState,
    lever: &LeverArm,
    infos: &[NeighborInfo],
    measurements: &[RangeMeasurement],
) -> Result<RangeObservationBatch> {
    let mut rows = Vec::with_capacity(measurements.len());
    for meas in measurements {
        debug_assert_eq!(meas.kind, RangeKind::AgentToAgent);
        let info = infos
            .iter()
            .find(|i| i.agent_id == meas.target_id)
            .ok_or_else(|| Error::Config(format!("no broadcast from agent {}", meas.target_id)))?;
        let (h, g, d_hat) = agent_observation_row(x_hat, info, lever)?;

        let mut inflated = RowSVector::<f64, 7>::zeros();
        for k in 0..3 {
            inflated[k] = 2.0 * info.pos_var[k];
            inflated[k + 3] = 2.0 * info.att_var[k];
        }
        inflated[6] = meas.sigma * meas.sigma;
        let variance: f64 = (0..7).map(|k| g[k] * g[k] * inflated[k]).sum();
        rows.push((d_hat - meas.distance, h, variance));
    }
    Ok(RangeObservationBatch::from_rows(rows))
}
