//! Covariance intersection: full and partial-observation forms, a KF-style
//! update for error-state filters, cost criteria for the weight parameter,
//! and the scalar weight optimizer.
//!
//! All fused covariances here are nominal in the CI sense: they dominate the
//! actual error covariance for any admissible cross-correlation between the
//! two sources. [`actual_fused_covariance`] evaluates what the fusion rule
//! really produces for a known cross-covariance, which is how the
//! conservativeness and correlation-mismatch analyses are run.

use nalgebra::{Cholesky, DMatrix, DVector, RowSVector};

use crate::{Cov15, Error, Result, Vec15};

/// Lower clip of the weight search domain; keeps `1/ω` finite in the
/// KF-style form.
pub const OMEGA_MIN: f64 = 1e-6;
/// Upper clip of the weight search domain; an optimum at this boundary means
/// the measurement source is worthless and the caller should skip the update.
pub const OMEGA_MAX: f64 = 1.0 - 1e-6;

/// Condition-number guard for symmetric positive-definite inversions.
const MAX_CONDITION: f64 = 1e12;

/// A mean/covariance pair as consumed and produced by CI fusion.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianEstimate {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianEstimate {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        assert_eq!(mean.len(), cov.nrows());
        assert!(cov.is_square());
        GaussianEstimate { mean, cov }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// CI weight parameter, held in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FusionWeight(f64);

impl FusionWeight {
    pub fn new(omega: f64) -> Result<Self> {
        if !omega.is_finite() || !(0.0..=1.0).contains(&omega) {
            return Err(Error::Config(format!("fusion weight {omega} outside [0, 1]")));
        }
        Ok(FusionWeight(omega))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Scalar cost over the fused covariance used to select the weight.
#[derive(Clone, Debug)]
pub enum CostCriterion {
    Trace,
    Determinant,
    /// `tr(W P)` with a symmetric PSD weight matrix.
    WeightedTrace(DMatrix<f64>),
}

/// Inverse of a symmetric positive-definite matrix through Cholesky, with a
/// cheap condition estimate from the factor diagonal.
pub(crate) fn spd_inverse_dyn(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = Cholesky::new(m.clone()).ok_or(Error::SingularCovariance)?;
    check_condition_from_factor_diag(chol.l_dirty().diagonal().iter())?;
    Ok(chol.inverse())
}

pub(crate) fn spd_inverse_fixed(m: &Cov15) -> Result<Cov15> {
    let chol = Cholesky::new(*m).ok_or(Error::SingularCovariance)?;
    check_condition_from_factor_diag(chol.l_dirty().diagonal().iter())?;
    Ok(chol.inverse())
}

pub(crate) fn spd_solve_dyn(m: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = Cholesky::new(m.clone()).ok_or(Error::SingularCovariance)?;
    check_condition_from_factor_diag(chol.l_dirty().diagonal().iter())?;
    Ok(chol.solve(rhs))
}

fn check_condition_from_factor_diag<'a>(diag: impl Iterator<Item = &'a f64>) -> Result<()> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &d in diag {
        if !d.is_finite() || d <= 0.0 {
            return Err(Error::SingularCovariance);
        }
        lo = lo.min(d);
        hi = hi.max(d);
    }
    // The squared diagonal ratio of the Cholesky factor estimates the
    // condition number of the original matrix.
    if (hi / lo).powi(2) > MAX_CONDITION {
        return Err(Error::SingularCovariance);
    }
    Ok(())
}

fn symmetrize_dyn(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Full-state CI fusion:
/// `P = (ω P₁⁻¹ + (1-ω) P₂⁻¹)⁻¹`, `x = P (ω P₁⁻¹ x₁ + (1-ω) P₂⁻¹ x₂)`.
///
/// The boundaries return the surviving estimate bit-for-bit without forming
/// the excluded inverse.
pub fn ci_fuse(
    e1: &GaussianEstimate,
    e2: &GaussianEstimate,
    w: FusionWeight,
) -> Result<GaussianEstimate> {
    assert_eq!(e1.dim(), e2.dim(), "fusion dimensions must agree");
    let omega = w.value();
    if omega == 1.0 {
        return Ok(e1.clone());
    }
    if omega == 0.0 {
        return Ok(e2.clone());
    }
    let i1 = spd_inverse_dyn(&e1.cov)?;
    let i2 = spd_inverse_dyn(&e2.cov)?;
    let info = &i1 * omega + &i2 * (1.0 - omega);
    let mut cov = spd_inverse_dyn(&info)?;
    symmetrize_dyn(&mut cov);
    let mean = &cov * (&i1 * omega * &e1.mean + &i2 * (1.0 - omega) * &e2.mean);
    Ok(GaussianEstimate { mean, cov })
}

/// Partial-observation CI fusion for a second estimate `x₂ ≈ H x`:
/// `P = (ω P₁⁻¹ + (1-ω) Hᵀ P₂⁻¹ H)⁻¹`,
/// `x = P (ω P₁⁻¹ x₁ + (1-ω) Hᵀ P₂⁻¹ x₂)`.
pub fn ci_fuse_partial(
    e1: &GaussianEstimate,
    h: &DMatrix<f64>,
    e2: &GaussianEstimate,
    w: FusionWeight,
) -> Result<GaussianEstimate> {
    assert_eq!(h.ncols(), e1.dim());
    assert_eq!(h.nrows(), e2.dim());
    let omega = w.value();
    if omega == 1.0 {
        return Ok(e1.clone());
    }
    let i1 = spd_inverse_dyn(&e1.cov)?;
    let i2 = spd_inverse_dyn(&e2.cov)?;
    let info = &i1 * omega + h.transpose() * &i2 * h * (1.0 - omega);
    let mut cov = spd_inverse_dyn(&info)?;
    symmetrize_dyn(&mut cov);
    let mean = &cov * (&i1 * omega * &e1.mean + h.transpose() * (&i2 * (1.0 - omega) * &e2.mean));
    Ok(GaussianEstimate { mean, cov })
}

/// KF-style CI update for an error-state filter with partial observations:
/// inflate `P₁ = P/ω` and `P₂ = R/(1-ω)`, then run one Kalman step.
///
/// Returns the estimated error state `K z` and the posterior covariance
/// `(I - K H) P₁`, resymmetrized. Requires `0 < ω < 1`; the boundaries are
/// degenerate (skip the update, or replace the estimate) and belong to the
/// caller.
pub fn kf_style_ci_update(
    p_prior: &Cov15,
    h: &DMatrix<f64>,
    r_nominal: &DMatrix<f64>,
    z: &DVector<f64>,
    w: FusionWeight,
) -> Result<(Vec15, Cov15)> {
    let omega = w.value();
    debug_assert!(omega > 0.0 && omega < 1.0, "boundary ω belongs to the caller");
    let m = h.nrows();
    assert_eq!(h.ncols(), 15);
    assert_eq!(r_nominal.nrows(), m);
    assert_eq!(z.len(), m);

    let p1 = DMatrix::from_fn(15, 15, |i, j| p_prior[(i, j)] / omega);
    let p2 = r_nominal / (1.0 - omega);
    let p1_ht = &p1 * h.transpose();
    let innovation_cov = h * &p1_ht + p2;
    // K = P₁ Hᵀ S⁻¹ via Sᵀ solve; S is symmetric.
    let k = spd_solve_dyn(&innovation_cov, &p1_ht.transpose())?.transpose();
    let dx_dyn = &k * z;
    let mut p_post_dyn = (DMatrix::<f64>::identity(15, 15) - &k * h) * &p1;
    symmetrize_dyn(&mut p_post_dyn);

    let dx = Vec15::from_iterator(dx_dyn.iter().copied());
    let p_post = Cov15::from_iterator(p_post_dyn.iter().copied());
    Ok((dx, p_post))
}

/// Information-form route to the fused covariance of the KF-style update,
/// `P(ω) = (ω P⁻¹ + (1-ω) Hᵀ R⁻¹ H)⁻¹`, algebraically identical to
/// [`kf_style_ci_update`]'s posterior but far cheaper to re-evaluate while
/// optimizing ω: both information matrices are assembled once.
pub struct PartialFusion {
    prior_info: Cov15,
    meas_info: Cov15,
}

impl PartialFusion {
    /// `r_diag` holds the diagonal of the nominal measurement covariance
    /// (stacked range rows are uncorrelated by construction).
    pub fn new(p_prior: &Cov15, h: &DMatrix<f64>, r_diag: &DVector<f64>) -> Result<Self> {
        assert_eq!(h.ncols(), 15);
        assert_eq!(h.nrows(), r_diag.len());
        let prior_info = spd_inverse_fixed(p_prior)?;
        let mut meas_info = Cov15::zeros();
        for row in 0..h.nrows() {
            let var = r_diag[row];
            if var <= 0.0 {
                return Err(Error::SingularCovariance);
            }
            let hr = RowSVector::<f64, 15>::from_iterator(h.row(row).iter().copied());
            meas_info.syger(1.0 / var, &hr.transpose(), &hr.transpose(), 1.0);
        }
        // syger fills the lower triangle only.
        meas_info.fill_upper_triangle_with_lower_triangle();
        Ok(PartialFusion { prior_info, meas_info })
    }

    pub fn fused_cov(&self, omega: f64) -> Result<Cov15> {
        let info = self.prior_info * omega + self.meas_info * (1.0 - omega);
        let mut p = spd_inverse_fixed(&info)?;
        crate::ins::symmetrize(&mut p);
        Ok(p)
    }
}

/// Evaluates a cost criterion on a covariance matrix.
pub fn evaluate_cost(criterion: &CostCriterion, p: &DMatrix<f64>) -> f64 {
    match criterion {
        CostCriterion::Trace => p.trace(),
        CostCriterion::Determinant => p.determinant(),
        CostCriterion::WeightedTrace(w) => weighted_trace_dyn(w, p),
    }
}

fn weighted_trace_dyn(w: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    let mut acc = 0.0;
    for i in 0..w.nrows() {
        for j in 0..w.ncols() {
            acc += w[(i, j)] * p[(j, i)];
        }
    }
    acc
}

/// `tr(W P)` without forming the product, for the fixed-size hot path.
pub fn weighted_trace(w: &Cov15, p: &Cov15) -> f64 {
    let mut acc = 0.0;
    for i in 0..15 {
        for j in 0..15 {
            acc += w[(i, j)] * p[(j, i)];
        }
    }
    acc
}

/// Minimizes a scalar cost over the clipped weight domain.
///
/// A 101-point coarse grid over `[OMEGA_MIN, OMEGA_MAX]` guards against local
/// minima, then golden-section refinement shrinks the bracket below 1e-6.
/// Non-finite costs exclude their point; ties break toward larger ω,
/// trusting the prior more.
pub fn optimize_omega_costfn<F>(mut cost_at: F) -> FusionWeight
where
    F: FnMut(f64) -> f64,
{
    const GRID: usize = 101;
    let span = OMEGA_MAX - OMEGA_MIN;
    let grid_w = |i: usize| OMEGA_MIN + span * (i as f64) / ((GRID - 1) as f64);

    let mut best: Option<(usize, f64)> = None;
    for i in 0..GRID {
        let c = cost_at(grid_w(i));
        if !c.is_finite() {
            continue;
        }
        match best {
            Some((_, bc)) if c > bc => {}
            _ => best = Some((i, c)),
        }
    }
    let Some((best_idx, _)) = best else {
        // Every point failed to evaluate; report the skip boundary.
        return FusionWeight(OMEGA_MAX);
    };

    let a0 = grid_w(best_idx.saturating_sub(1));
    let b0 = grid_w((best_idx + 1).min(GRID - 1));
    let guarded = |w: f64, f: &mut F| {
        let c = f(w);
        if c.is_finite() {
            c
        } else {
            f64::INFINITY
        }
    };

    // Golden-section search on the bracket.
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (a0, b0);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = guarded(x1, &mut cost_at);
    let mut f2 = guarded(x2, &mut cost_at);
    while b - a > 1e-6 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = guarded(x1, &mut cost_at);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = guarded(x2, &mut cost_at);
        }
    }

    // Pick among the refined point, the bracket ends, and the grid winner so
    // a boundary optimum is returned exactly.
    let mut candidates = [0.5 * (a + b), a0, b0, grid_w(best_idx)];
    candidates.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut w_best = OMEGA_MAX;
    let mut c_best = f64::INFINITY;
    for &w in &candidates {
        let c = guarded(w, &mut cost_at);
        if c <= c_best {
            c_best = c;
            w_best = w;
        }
    }
    FusionWeight(w_best)
}

/// Spec-shaped wrapper of [`optimize_omega_costfn`]: the closure maps ω to
/// the fused covariance (`None` when fusion fails at that ω).
pub fn optimize_omega<F>(cost: &CostCriterion, fuse: F) -> FusionWeight
where
    F: Fn(f64) -> Option<DMatrix<f64>>,
{
    optimize_omega_costfn(|w| fuse(w).map(|p| evaluate_cost(cost, &p)).unwrap_or(f64::NAN))
}

/// Actual covariance of the full-state CI estimate for known actual
/// covariances and cross-covariance:
/// `P* = P [ω² P₁⁻¹P₁*P₁⁻¹ + ω(1-ω) P₁⁻¹P₁₂*P₂⁻¹ + ω(1-ω) P₂⁻¹P₁₂*ᵀP₁⁻¹
///        + (1-ω)² P₂⁻¹P₂*P₂⁻¹] P`.
#[allow(clippy::too_many_arguments)]
pub fn actual_fused_covariance(
    p1_star: &DMatrix<f64>,
    p2_star: &DMatrix<f64>,
    p12_star: &DMatrix<f64>,
    p1: &DMatrix<f64>,
    p2: &DMatrix<f64>,
    w: FusionWeight,
) -> Result<DMatrix<f64>> {
    let h = DMatrix::<f64>::identity(p1.nrows(), p1.ncols());
    actual_fused_covariance_partial(p1_star, p2_star, p12_star, p1, p2, &h, w)
}

/// Generalization of [`actual_fused_covariance`] to the partial-observation
/// fusion rule with observation matrix `H` (the full form is `H = I`).
#[allow(clippy::too_many_arguments)]
pub fn actual_fused_covariance_partial(
    p1_star: &DMatrix<f64>,
    p2_star: &DMatrix<f64>,
    p12_star: &DMatrix<f64>,
    p1: &DMatrix<f64>,
    p2: &DMatrix<f64>,
    h: &DMatrix<f64>,
    w: FusionWeight,
) -> Result<DMatrix<f64>> {
    let omega = w.value();
    let i1 = spd_inverse_dyn(p1)?;
    let i2 = spd_inverse_dyn(p2)?;
    let info = &i1 * omega + h.transpose() * &i2 * h * (1.0 - omega);
    let p = spd_inverse_dyn(&info)?;

    let cross = &i1 * p12_star * &i2 * h * (omega * (1.0 - omega));
    let inner = &i1 * p1_star * &i1 * (omega * omega)
        + &cross
        + cross.transpose()
        + h.transpose() * &i2 * p2_star * &i2 * h * ((1.0 - omega) * (1.0 - omega));
    let mut out = &p * inner * &p;
    symmetrize_dyn(&mut out);
    Ok(out)
}
