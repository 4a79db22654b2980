use crate::dual::Scalar;
use crate::variant::{sx, ux, Variant};
use crate::vehicle::{ControlInput, PredictionModel, PredictionState, VerticalLoads};

/// Slack of the axle friction inequalities; every entry is >= 0 when feasible.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrictionResiduals<T> {
    pub front_lower: T,
    pub front_upper: T,
    pub rear_lower: T,
    pub rear_upper: T,
}

impl FrictionResiduals<f64> {
    pub fn is_feasible(&self) -> bool {
        self.front_lower >= 0.0
            && self.front_upper >= 0.0
            && self.rear_lower >= 0.0
            && self.rear_upper >= 0.0
    }
}

/// Axle longitudinal forces net of the yaw-moment braking share, each
/// bounded by `mu_id * Fz` of its axle. The yaw-moment term only exists for
/// the variants that command a yaw moment.
pub fn friction_constraints_generic<T: Scalar>(
    model: &PredictionModel,
    variant: Variant,
    x: &[T; sx::LEN],
    u: &[T; ux::LEN],
    loads: &VerticalLoads,
    mu_id: f64,
) -> FrictionResiduals<T> {
    let fx_f = x[sx::FX_F];
    let fx_r = model.rear_force(fx_f, model.braking_split(variant, u));
    let (net_f, net_r) = if variant.has_yaw_moment() {
        let fx_mz = model.yaw_moment_force(x[sx::MZ]);
        (
            fx_f - fx_mz * loads.front_share(),
            fx_r - fx_mz * loads.rear_share(),
        )
    } else {
        (fx_f, fx_r)
    };
    let cap_f = mu_id * loads.fz_f;
    let cap_r = mu_id * loads.fz_r;
    FrictionResiduals {
        front_lower: net_f + cap_f,
        front_upper: T::cst(cap_f) - net_f,
        rear_lower: net_r + cap_r,
        rear_upper: T::cst(cap_r) - net_r,
    }
}

pub fn friction_constraints(
    model: &PredictionModel,
    variant: Variant,
    x: &PredictionState,
    u: &ControlInput,
    loads: &VerticalLoads,
    mu_id: f64,
) -> FrictionResiduals<f64> {
    friction_constraints_generic(model, variant, &x.to_array(), &u.to_array(), loads, mu_id)
}

/// Largest friction violation of either axle, relative to that axle's budget.
pub fn normalized_friction_violation(
    res: &FrictionResiduals<f64>,
    loads: &VerticalLoads,
    mu_id: f64,
) -> f64 {
    let f = (-res.front_lower.min(res.front_upper)).max(0.0) / (mu_id * loads.fz_f).max(1.0);
    let r = (-res.rear_lower.min(res.rear_upper)).max(0.0) / (mu_id * loads.fz_r).max(1.0);
    f.max(r)
}

/// Residuals `(lower, upper)` of `Mz_min - eps <= Mz <= Mz_max + eps`.
pub fn mz_soft_constraint(mz: f64, eps_mz: f64, mz_min: f64, mz_max: f64) -> (f64, f64) {
    (mz + eps_mz - mz_min, mz_max + eps_mz - mz)
}

/// Smallest slack that makes `mz` admissible.
pub fn minimal_slack(mz: f64, mz_min: f64, mz_max: f64) -> f64 {
    (mz - mz_max).max(mz_min - mz).max(0.0)
}
