//! The per-agent distributed filter: IMU prediction, EKF update from anchor
//! ranges, CI-family correlated update from inter-agent ranges, and the
//! broadcast payload other agents consume.
//!
//! Within one measurement epoch the update order is fixed: prediction, then
//! anchor ranges (independent noise, plain EKF), then inter-agent ranges
//! (correlated noise, CI). The filter asserts that order.

use nalgebra::{DMatrix, DVector, Quaternion};

use crate::fusion::{
    kf_style_ci_update, optimize_omega_costfn, weighted_trace, FusionWeight, PartialFusion,
    OMEGA_MAX,
};
use crate::ins::{
    error_transition, ins_error_sensitivity, mechanize, propagate_covariance, symmetrize,
    wci_weight_matrix, ImuNoiseModel, ImuSample, NominalState, ATT, POS,
};
use crate::ranging::{LeverArm, NeighborInfo, RangeObservationBatch};
use crate::{Cov15, Error, Quat, Result, Vec15, Vec3};

/// Fusion rule for the correlated (inter-agent) update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FusionMethod {
    /// Classical CI minimizing the trace of the fused covariance.
    CiTrace,
    /// Classical CI minimizing the determinant of the fused covariance.
    CiDet,
    /// Weighted CI minimizing `tr(W P)` with the INS-error weighting matrix
    /// built for this error horizon [s].
    Wci { horizon: f64 },
    /// Inter-agent ranges are discarded entirely.
    NoCooperation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum EpochStage {
    Predicted,
    AnchorsDone,
    AgentsDone,
}

/// Outcome of one correlated update, for telemetry.
#[derive(Clone, Copy, Debug, Default)]
pub struct CorrelatedOutcome {
    /// Chosen weight, `None` for an empty batch.
    pub omega: Option<f64>,
    /// The optimum hit the upper clip, so the update was skipped.
    pub skipped: bool,
}

/// Error-state filter owned by a single agent.
#[derive(Clone, Debug)]
pub struct AgentFilter {
    pub id: u32,
    pub state: NominalState,
    pub cov: Cov15,
    pub lever: LeverArm,
    pub method: FusionMethod,
    pub noise: ImuNoiseModel,
    last_imu: Option<ImuSample>,
    /// Correlated updates skipped because the weight hit the upper clip.
    pub skipped_updates: u64,
    stage: EpochStage,
}

impl AgentFilter {
    pub fn new(
        id: u32,
        state: NominalState,
        cov: Cov15,
        lever: LeverArm,
        method: FusionMethod,
        noise: ImuNoiseModel,
    ) -> Self {
        AgentFilter {
            id,
            state,
            cov,
            lever,
            method,
            noise,
            last_imu: None,
            skipped_updates: 0,
            stage: EpochStage::Predicted,
        }
    }

    /// Strapdown prediction: mechanizes the nominal state and propagates the
    /// error covariance. The sample is cached for the weighting matrix of a
    /// later correlated update.
    pub fn predict(&mut self, imu: &ImuSample) {
        let (phi, qd) = error_transition(&self.state, imu, &self.noise);
        self.state = mechanize(&self.state, imu, self.noise.gravity);
        self.cov = propagate_covariance(&self.cov, &phi, &qd);
        self.last_imu = Some(*imu);
        self.stage = EpochStage::Predicted;
    }

    /// EKF update from anchor ranges, whose noise is independent of any
    /// agent's state. Error feedback is applied immediately.
    pub fn independent_update(&mut self, batch: &RangeObservationBatch) -> Result<()> {
        assert!(
            self.stage != EpochStage::AgentsDone,
            "anchor updates must precede correlated updates within an epoch"
        );
        self.stage = EpochStage::AnchorsDone;
        if batch.is_empty() {
            return Ok(());
        }

        let p = cov_to_dyn(&self.cov);
        let p_ht = &p * batch.h.transpose();
        let innovation_cov = &batch.h * &p_ht + &batch.r_nominal;
        let k = crate::fusion::spd_solve_dyn(&innovation_cov, &p_ht.transpose())?.transpose();
        let dx_dyn = &k * &batch.z;
        let p_post = (DMatrix::<f64>::identity(15, 15) - &k * &batch.h) * &p;

        self.cov = dyn_to_cov(&p_post);
        symmetrize(&mut self.cov);
        let dx = Vec15::from_iterator(dx_dyn.iter().copied());
        self.state.apply_error_feedback(&dx);
        Ok(())
    }

    /// CI-family update from inter-agent ranges.
    ///
    /// The weight is optimized under the method's criterion over the fused
    /// covariance; a weight at the upper clip means the stacked source is
    /// worthless, so the update is skipped and counted.
    pub fn correlated_update(&mut self, batch: &RangeObservationBatch) -> Result<CorrelatedOutcome> {
        assert!(
            self.method != FusionMethod::NoCooperation,
            "correlated update called on a non-cooperating filter"
        );
        self.stage = EpochStage::AgentsDone;
        if batch.is_empty() {
            return Ok(CorrelatedOutcome::default());
        }

        let weight_matrix = match self.method {
            FusionMethod::Wci { horizon } => {
                // Algorithm step: build W from the predicted attitude and the
                // raw measured specific force.
                let f_meas = self.last_imu.map(|s| s.specific_force).unwrap_or_else(Vec3::zeros);
                let s = ins_error_sensitivity(&self.state.rotation(), &f_meas, horizon);
                Some(wci_weight_matrix(&s))
            }
            _ => None,
        };

        let fusion = PartialFusion::new(&self.cov, &batch.h, &batch.r_diagonal())?;
        let method = self.method;
        let omega = optimize_omega_costfn(|w| {
            let p = match fusion.fused_cov(w) {
                Ok(p) => p,
                Err(_) => return f64::NAN,
            };
            match (&method, &weight_matrix) {
                (FusionMethod::CiTrace, _) => p.trace(),
                // log-det is monotone in det, so the argmin is unchanged and
                // the tiny bias-block eigenvalues cannot underflow.
                (FusionMethod::CiDet, _) => log_det(&p),
                (FusionMethod::Wci { .. }, Some(w_mat)) => weighted_trace(w_mat, &p),
                _ => unreachable!("NoCooperation rejected above"),
            }
        });

        if omega.value() >= OMEGA_MAX - 1e-12 {
            self.skipped_updates += 1;
            return Ok(CorrelatedOutcome { omega: Some(omega.value()), skipped: true });
        }

        let (dx, p_post) =
            kf_style_ci_update(&self.cov, &batch.h, &batch.r_nominal, &batch.z, omega)?;
        self.cov = p_post;
        self.state.apply_error_feedback(&dx);
        Ok(CorrelatedOutcome { omega: Some(omega.value()), skipped: false })
    }

    /// The broadcast payload: position and attitude estimates with their
    /// nominal diagonal variances. Off-diagonal structure is intentionally
    /// not shared.
    pub fn make_broadcast(&self) -> NeighborInfo {
        NeighborInfo {
            agent_id: self.id,
            position: self.state.position,
            attitude: self.state.attitude,
            pos_var: Vec3::new(
                self.cov[(POS, POS)],
                self.cov[(POS + 1, POS + 1)],
                self.cov[(POS + 2, POS + 2)],
            ),
            att_var: Vec3::new(
                self.cov[(ATT, ATT)],
                self.cov[(ATT + 1, ATT + 1)],
                self.cov[(ATT + 2, ATT + 2)],
            ),
        }
    }
}

fn log_det(p: &Cov15) -> f64 {
    match nalgebra::Cholesky::new(*p) {
        Some(chol) => 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>(),
        None => f64::NAN,
    }
}

pub(crate) fn cov_to_dyn(p: &Cov15) -> DMatrix<f64> {
    DMatrix::from_fn(15, 15, |i, j| p[(i, j)])
}

pub(crate) fn dyn_to_cov(p: &DMatrix<f64>) -> Cov15 {
    Cov15::from_fn(|i, j| p[(i, j)])
}

/// Broadcast wire size: u32 id + 13 little-endian f64 fields.
pub const NEIGHBOR_INFO_WIRE_LEN: usize = 108;

/// Encodes a broadcast into its fixed little-endian layout:
/// `u32 agent_id, 3×f64 position, 4×f64 quaternion (w,x,y,z), 3×f64 pos_var,
/// 3×f64 att_var`.
pub fn encode_neighbor_info(info: &NeighborInfo) -> [u8; NEIGHBOR_INFO_WIRE_LEN] {
    let mut out = [0u8; NEIGHBOR_INFO_WIRE_LEN];
    out[0..4].copy_from_slice(&info.agent_id.to_le_bytes());
    let q = info.attitude.as_ref();
    let fields = [
        info.position.x,
        info.position.y,
        info.position.z,
        q.w,
        q.i,
        q.j,
        q.k,
        info.pos_var.x,
        info.pos_var.y,
        info.pos_var.z,
        info.att_var.x,
        info.att_var.y,
        info.att_var.z,
    ];
    for (k, v) in fields.iter().enumerate() {
        out[4 + 8 * k..12 + 8 * k].copy_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes the 108-byte broadcast layout. Exact inverse of
/// [`encode_neighbor_info`]: no renormalization, so round-trips are
/// bit-exact.
pub fn decode_neighbor_info(bytes: &[u8]) -> Result<NeighborInfo> {
    if bytes.len() != NEIGHBOR_INFO_WIRE_LEN {
        return Err(Error::Config(format!(
            "neighbor info payload must be {NEIGHBOR_INFO_WIRE_LEN} bytes, got {}",
            bytes.len()
        )));
    }
    let agent_id = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
    let mut f = [0.0f64; 13];
    for (k, v) in f.iter_mut().enumerate() {
        *v = f64::from_le_bytes(bytes[4 + 8 * k..12 + 8 * k].try_into().unwrap());
    }
    Ok(NeighborInfo {
        agent_id,
        position: Vec3::new(f[0], f[1], f[2]),
        attitude: Quat::new_unchecked(Quaternion::new(f[3], f[4], f[5], f[6])),
        pos_var: Vec3::new(f[7], f[8], f[9]),
        att_var: Vec3::new(f[10], f[11], f[12]),
    })
}

/// Splits a stacked batch into single-row batches, preserving order. Used by
/// the sequential update mode.
pub fn split_batch(batch: &RangeObservationBatch) -> Vec<RangeObservationBatch> {
    (0..batch.len())
        .map(|i| RangeObservationBatch {
            z: DVector::from_element(1, batch.z[i]),
            h: DMatrix::from_fn(1, 15, |_, c| batch.h[(i, c)]),
            r_nominal: DMatrix::from_element(1, 1, batch.r_nominal[(i, i)]),
        })
        .collect()
}
