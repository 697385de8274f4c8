//! Centralized cooperative localization: one joint EKF over every agent's
//! error state, tracking all inter-agent correlations. Serves as the
//! performance ceiling; the no-cooperation baseline lives here too as the
//! floor.

use nalgebra::{DMatrix, DVector};

use crate::agent::AgentFilter;
use crate::ins::{error_transition, mechanize, ImuNoiseModel, ImuSample, NominalState};
use crate::ranging::{
    agent_observation_row, anchor_observation_row, LeverArm, NeighborInfo, ObsRow,
    RangeObservationBatch,
};
use crate::{Cov15, Result, Vec15, Vec3};

/// How the center propagates an agent's block when that agent's IMU data
/// failed to arrive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossHandling {
    /// Predict with the last received IMU sample held constant.
    ZeroOrderHold,
    /// Leave the block untouched until data returns.
    Freeze,
}

/// One scalar range row of the joint observation model.
#[derive(Clone, Debug)]
pub enum JointObservation {
    /// Anchor range measured by `agent`; touches one block-row of the model.
    Anchor { agent: usize, row: ObsRow, z: f64, var: f64 },
    /// Inter-agent range measured by `observer` toward `target`; both
    /// agents' blocks carry sensitivities since the center knows both
    /// states, which is what tracking the correlations means.
    InterAgent {
        observer: usize,
        target: usize,
        row_observer: ObsRow,
        row_target: ObsRow,
        z: f64,
        var: f64,
    },
}

/// Joint filter over `N` agents: nominal states plus a `15N × 15N`
/// covariance.
#[derive(Clone, Debug)]
pub struct JointFilter {
    pub states: Vec<NominalState>,
    pub cov: DMatrix<f64>,
    pub lever: LeverArm,
    pub noise: ImuNoiseModel,
    pub loss_handling: LossHandling,
    last_imu: Vec<Option<ImuSample>>,
}

impl JointFilter {
    /// Builds the joint filter from independent per-agent initial estimates;
    /// cross-covariance starts at zero.
    pub fn new(
        states: Vec<NominalState>,
        initial_covs: &[Cov15],
        lever: LeverArm,
        noise: ImuNoiseModel,
        loss_handling: LossHandling,
    ) -> Self {
        let n = states.len();
        assert_eq!(initial_covs.len(), n);
        let mut cov = DMatrix::zeros(15 * n, 15 * n);
        for (a, p) in initial_covs.iter().enumerate() {
            cov.view_mut((15 * a, 15 * a), (15, 15))
                .copy_from(&crate::agent::cov_to_dyn(p));
        }
        JointFilter {
            states,
            cov,
            lever,
            noise,
            loss_handling,
            last_imu: vec![None; n],
        }
    }

    pub fn n_agents(&self) -> usize {
        self.states.len()
    }

    pub fn block(&self, i: usize, j: usize) -> Cov15 {
        Cov15::from_fn(|r, c| self.cov[(15 * i + r, 15 * j + c)])
    }

    /// One joint prediction step. `samples[i] = None` marks an agent whose
    /// data did not reach the center; its block follows the configured loss
    /// handling. Diagonal blocks get each agent's `Φ P Φᵀ + Q`, off-diagonal
    /// blocks transform as `Φ_i P_ij Φ_jᵀ`.
    pub fn joint_predict(&mut self, samples: &[Option<ImuSample>]) {
        let n = self.n_agents();
        assert_eq!(samples.len(), n);

        let mut phis: Vec<Cov15> = Vec::with_capacity(n);
        let mut qds: Vec<Cov15> = Vec::with_capacity(n);
        for i in 0..n {
            let effective = match samples[i] {
                Some(s) => {
                    self.last_imu[i] = Some(s);
                    Some(s)
                }
                None => match self.loss_handling {
                    LossHandling::ZeroOrderHold => self.last_imu[i],
                    LossHandling::Freeze => None,
                },
            };
            match effective {
                Some(imu) => {
                    let (phi, qd) = error_transition(&self.states[i], &imu, &self.noise);
                    self.states[i] = mechanize(&self.states[i], &imu, self.noise.gravity);
                    phis.push(phi);
                    qds.push(qd);
                }
                None => {
                    phis.push(Cov15::identity());
                    qds.push(Cov15::zeros());
                }
            }
        }

        // P ← blockdiag(Φ) P blockdiag(Φ)ᵀ, block by block and in place.
        for i in 0..n {
            for j in 0..n {
                let block = Cov15::from_fn(|r, c| self.cov[(15 * i + r, 15 * j + c)]);
                let transformed = phis[i] * block;
                self.cov
                    .view_mut((15 * i, 15 * j), (15, 15))
                    .copy_from(&crate::agent::cov_to_dyn(&transformed));
            }
        }
        for j in 0..n {
            for i in 0..n {
                let block = Cov15::from_fn(|r, c| self.cov[(15 * i + r, 15 * j + c)]);
                let transformed = block * phis[j].transpose();
                let target = if i == j { transformed + qds[i] } else { transformed };
                self.cov
                    .view_mut((15 * i, 15 * j), (15, 15))
                    .copy_from(&crate::agent::cov_to_dyn(&target));
            }
        }
        let sym = (&self.cov + self.cov.transpose()) * 0.5;
        self.cov = sym;
    }

    /// Joint EKF update over stacked range rows; error feedback is applied
    /// per agent block immediately.
    pub fn joint_update(&mut self, rows: &[JointObservation]) -> Result<()> {
        if rows.is_empty() {
            return Ok(());
        }
        let n = self.n_agents();
        let m = rows.len();
        let mut h = DMatrix::zeros(m, 15 * n);
        let mut z = DVector::zeros(m);
        let mut r = DMatrix::zeros(m, m);
        for (k, obs) in rows.iter().enumerate() {
            match obs {
                JointObservation::Anchor { agent, row, z: zi, var } => {
                    h.view_mut((k, 15 * agent), (1, 15)).copy_from(row);
                    z[k] = *zi;
                    r[(k, k)] = *var;
                }
                JointObservation::InterAgent {
                    observer,
                    target,
                    row_observer,
                    row_target,
                    z: zi,
                    var,
                } => {
                    h.view_mut((k, 15 * observer), (1, 15)).copy_from(row_observer);
                    h.view_mut((k, 15 * target), (1, 15)).copy_from(row_target);
                    z[k] = *zi;
                    r[(k, k)] = *var;
                }
            }
        }

        let p_ht = &self.cov * h.transpose();
        let innovation_cov = &h * &p_ht + r;
        let k_gain = crate::fusion::spd_solve_dyn(&innovation_cov, &p_ht.transpose())?.transpose();
        let dx = &k_gain * z;
        let p_post = (DMatrix::<f64>::identity(15 * n, 15 * n) - &k_gain * &h) * &self.cov;
        self.cov = (&p_post + p_post.transpose()) * 0.5;

        for i in 0..n {
            let block = Vec15::from_iterator(dx.rows(15 * i, 15).iter().copied());
            self.states[i].apply_error_feedback(&block);
        }
        Ok(())
    }
}

/// Joint observation row for an inter-agent range, built from the center's
/// estimates of both agents. The observer block is the standard range row;
/// the target block carries the negated position and its own attitude
/// sensitivity.
pub fn inter_agent_observation(
    state_i: &NominalState,
    state_j: &NominalState,
    lever: &LeverArm,
) -> Result<(ObsRow, ObsRow, f64)> {
    // Reuse the distributed row builder: G's first six entries are exactly
    // the target block's position and attitude sensitivities.
    let info_j = NeighborInfo {
        agent_id: 0,
        position: state_j.position,
        attitude: state_j.attitude,
        pos_var: Vec3::zeros(),
        att_var: Vec3::zeros(),
    };
    let (row_i, g, d_hat) = agent_observation_row(state_i, &info_j, lever)?;
    let mut row_j = ObsRow::zeros();
    for k in 0..3 {
        row_j[crate::ins::POS + k] = g[k];
        row_j[crate::ins::ATT + k] = g[3 + k];
    }
    Ok((row_i, row_j, d_hat))
}

/// Builds the anchor rows of the joint model for one agent.
pub fn anchor_rows(
    agent: usize,
    state: &NominalState,
    lever: &LeverArm,
    anchors: &[Vec3],
    measurements: &[crate::ranging::RangeMeasurement],
) -> Result<Vec<JointObservation>> {
    let mut rows = Vec::with_capacity(measurements.len());
    for meas in measurements {
        let pos = &anchors[meas.target_id as usize];
        let (row, d_hat) = anchor_observation_row(state, lever, pos)?;
        rows.push(JointObservation::Anchor {
            agent,
            row,
            z: d_hat - meas.distance,
            var: meas.sigma * meas.sigma,
        });
    }
    Ok(rows)
}

/// One no-cooperation epoch: anchor-only EKF updates, inter-agent ranges
/// discarded. Delegates to the per-agent filter.
pub fn ncl_epoch(
    filters: &mut [AgentFilter],
    anchor_batches: &[Option<RangeObservationBatch>],
) -> Result<()> {
    for (filter, batch) in filters.iter_mut().zip(anchor_batches) {
        if let Some(b) = batch {
            filter.independent_update(b)?;
        }
    }
    Ok(())
}
