use serde::{Deserialize, Serialize};

use crate::vehicle::VehicleParams;

/// Axle vertical forces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerticalLoads {
    pub fz_f: f64,
    pub fz_r: f64,
}

impl VerticalLoads {
    pub fn total(&self) -> f64 {
        self.fz_f + self.fz_r
    }

    pub fn front_share(&self) -> f64 {
        self.fz_f / self.total()
    }

    pub fn rear_share(&self) -> f64 {
        self.fz_r / self.total()
    }
}

/// Static axle loads plus longitudinal load transfer driven by the measured
/// longitudinal acceleration. Each axle is clamped at zero, the other one
/// carrying the full weight.
pub fn vertical_loads(ax_meas: f64, p: &VehicleParams) -> VerticalLoads {
    let (fz_f, fz_r) = unclamped_axle_loads(ax_meas, p);
    let w = p.weight();
    if fz_f < 0.0 {
        VerticalLoads { fz_f: 0.0, fz_r: w }
    } else if fz_r < 0.0 {
        VerticalLoads { fz_f: w, fz_r: 0.0 }
    } else {
        VerticalLoads { fz_f, fz_r }
    }
}

pub(crate) fn unclamped_axle_loads(ax: f64, p: &VehicleParams) -> (f64, f64) {
    let l = p.wheelbase();
    let fz_f = p.weight() * p.lr / l - p.mass * ax * p.cg_height / l;
    (fz_f, p.weight() - fz_f)
}

/// Per-wheel loads `[fl, fr, rl, rr]` with longitudinal and lateral load
/// transfer. The lateral transfer is split between the axles in proportion
/// to their static load.
pub fn wheel_loads(ax: f64, ay: f64, p: &VehicleParams) -> [f64; 4] {
    let axle = vertical_loads(ax, p);
    let l = p.wheelbase();
    let transfer = p.mass * ay * p.cg_height / p.track_width;
    let split = |fz_axle: f64, share: f64| {
        let d = transfer * share;
        let left = 0.5 * fz_axle - d;
        let right = 0.5 * fz_axle + d;
        if left < 0.0 {
            (0.0, fz_axle)
        } else if right < 0.0 {
            (fz_axle, 0.0)
        } else {
            (left, right)
        }
    };
    let (fl, fr) = split(axle.fz_f, p.lr / l);
    let (rl, rr) = split(axle.fz_r, p.lf / l);
    [fl, fr, rl, rr]
}
