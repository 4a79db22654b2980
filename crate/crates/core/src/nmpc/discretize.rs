//! Explicit RK4 discretisation of the prediction model and its exact
//! first-order sensitivities via forward-mode dual numbers.

use nalgebra::DMatrix;

use crate::dual::{Dual, Scalar};
use crate::error::{Error, Result};
use crate::variant::{sx, ux, Variant};
use crate::vehicle::{ControlInput, PredictionModel, PredictionState, StageData};

/// Number of dual directions: full state then full input.
pub(crate) const ND: usize = sx::LEN + ux::LEN;
pub(crate) type D = Dual<ND>;

fn axpy<T: Scalar>(x: &[T; sx::LEN], h: f64, k: &[T; sx::LEN]) -> [T; sx::LEN] {
    let mut o = *x;
    for i in 0..sx::LEN {
        o[i] = o[i] + k[i] * h;
    }
    o
}

/// One RK4 step with the input and stage data held constant.
pub fn rk4<T: Scalar>(
    model: &PredictionModel,
    variant: Variant,
    x: &[T; sx::LEN],
    u: &[T; ux::LEN],
    w: &StageData,
    ts: f64,
) -> Result<[T; sx::LEN]> {
    let k1 = model.dynamics(variant, x, u, w)?;
    let k2 = model.dynamics(variant, &axpy(x, 0.5 * ts, &k1), u, w)?;
    let k3 = model.dynamics(variant, &axpy(x, 0.5 * ts, &k2), u, w)?;
    let k4 = model.dynamics(variant, &axpy(x, ts, &k3), u, w)?;
    let mut next = *x;
    for i in 0..variant.nx() {
        next[i] = next[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (ts / 6.0);
        if !next[i].re().is_finite() {
            return Err(Error::SingularKinematics {
                vx: f64::NAN,
                floor: model.config.speed_floor,
            });
        }
    }
    Ok(next)
}

/// Next prediction state after one stage of duration `ts`.
pub fn discretize(
    model: &PredictionModel,
    variant: Variant,
    x: &PredictionState,
    u: &ControlInput,
    w: &StageData,
    ts: f64,
) -> Result<PredictionState> {
    if !(ts > 0.0) {
        return Err(Error::Config(format!("stage duration must be > 0, got {ts}")));
    }
    let x = x.restricted(variant).to_array();
    let next = rk4(model, variant, &x, &u.to_array(), w, ts)?;
    Ok(PredictionState::from_array(&next))
}

/// Discrete step and its Jacobians `A = dx+/dx` (nx x nx) and
/// `B = dx+/du` (nx x nu) for the variant's dimensions.
pub fn step_jacobians(
    model: &PredictionModel,
    variant: Variant,
    x: &[f64; sx::LEN],
    u: &[f64; ux::LEN],
    w: &StageData,
    ts: f64,
) -> Result<([f64; sx::LEN], DMatrix<f64>, DMatrix<f64>)> {
    let (nx, nu) = (variant.nx(), variant.nu());
    let xd: [D; sx::LEN] = std::array::from_fn(|i| D::variable(x[i], i));
    let ud: [D; ux::LEN] = std::array::from_fn(|j| D::variable(u[j], sx::LEN + j));
    let next = rk4(model, variant, &xd, &ud, w, ts)?;
    let a = DMatrix::from_fn(nx, nx, |i, j| next[i].eps[j]);
    let b = DMatrix::from_fn(nx, nu, |i, j| next[i].eps[sx::LEN + j]);
    Ok((std::array::from_fn(|i| next[i].re), a, b))
}
