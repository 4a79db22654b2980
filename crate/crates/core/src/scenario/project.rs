use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::scenario::PathRef;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub s: f64,
    /// Positive to the left of the path.
    pub e_y: f64,
    pub e_psi: f64,
    pub distance: f64,
}

/// Wrap to (-pi, pi].
pub(crate) fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

fn dist2(path: &PathRef, s: f64, x: f64, y: f64) -> f64 {
    let (px, py) = path.position(s);
    (x - px).powi(2) + (y - py).powi(2)
}

/// Closest point of the path. `window` restricts the coarse scan to
/// `[centre - half, centre + half]`; the grid minimiser is then refined by
/// golden-section search on the two adjacent grid intervals.
pub fn project_to_path(
    x: f64,
    y: f64,
    heading: f64,
    path: &PathRef,
    window: Option<(f64, f64)>,
    corridor: f64,
) -> Result<Projection> {
    let n = path.s.len();
    let (lo, hi) = match window {
        Some((c, half)) => {
            let h = path.s[1] - path.s[0];
            let lo = (((c - half) / h).floor().max(0.0) as usize).min(n - 1);
            let hi = (((c + half) / h).ceil().max(0.0) as usize).min(n - 1);
            (lo, hi)
        }
        None => (0, n - 1),
    };
    let mut best = lo;
    let mut best_d = f64::INFINITY;
    for i in lo..=hi {
        let d = (x - path.x[i]).powi(2) + (y - path.y[i]).powi(2);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    let a0 = path.s[best.saturating_sub(1)];
    let b0 = path.s[(best + 1).min(n - 1)];

    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (a0, b0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = dist2(path, c, x, y);
    let mut fd = dist2(path, d, x, y);
    while b - a > 1e-7 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = dist2(path, c, x, y);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = dist2(path, d, x, y);
        }
    }
    let mut s = 0.5 * (a + b);
    // The bracket ends are candidates too (path ends, grid-point minima).
    for cand in [a0, b0] {
        if dist2(path, cand, x, y) < dist2(path, s, x, y) {
            s = cand;
        }
    }

    let (px, py) = path.position(s);
    let psi = path.heading(s);
    let (dx, dy) = (x - px, y - py);
    let e_y = -psi.sin() * dx + psi.cos() * dy;
    let distance = (dx * dx + dy * dy).sqrt();
    if distance > corridor {
        return Err(Error::OffPath { distance, corridor });
    }
    Ok(Projection {
        s,
        e_y,
        e_psi: wrap_angle(heading - psi),
        distance,
    })
}
