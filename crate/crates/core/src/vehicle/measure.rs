use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::vehicle::PlantState;

/// Zero-mean Gaussian noise standard deviations per channel.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub enabled: bool,
    #[serde(rename = "velocity_std_m_s")]
    pub velocity: f64,
    #[serde(rename = "yaw_rate_std_rad_s")]
    pub yaw_rate: f64,
    #[serde(rename = "acceleration_std_m_s2")]
    pub acceleration: f64,
    #[serde(rename = "position_std_m")]
    pub position: f64,
    #[serde(rename = "heading_std_rad")]
    pub heading: f64,
    #[serde(rename = "wheel_speed_std_rad_s")]
    pub wheel_speed: f64,
}

/// Sensor bundle available to the controller.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub vx: f64,
    pub vy: f64,
    pub yaw_rate: f64,
    pub ax: f64,
    pub ay: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub omega: [f64; 4],
    /// Sideslip angle, atan(vy / vx).
    pub beta: f64,
}

pub fn sideslip(vx: f64, vy: f64) -> f64 {
    if vx == 0.0 && vy == 0.0 {
        0.0
    } else {
        (vy / vx).atan()
    }
}

pub fn measure<R: Rng + ?Sized>(ps: &PlantState, noise: &NoiseConfig, rng: &mut R) -> Measurement {
    let mut m = Measurement {
        vx: ps.vx,
        vy: ps.vy,
        yaw_rate: ps.yaw_rate,
        ax: ps.ax,
        ay: ps.ay,
        x: ps.x,
        y: ps.y,
        psi: ps.psi,
        omega: ps.omega,
        beta: 0.0,
    };
    if noise.enabled {
        let mut add = |v: &mut f64, std: f64| {
            if std > 0.0 {
                *v += Normal::new(0.0, std).expect("finite std").sample(rng);
            }
        };
        add(&mut m.vx, noise.velocity);
        add(&mut m.vy, noise.velocity);
        add(&mut m.yaw_rate, noise.yaw_rate);
        add(&mut m.ax, noise.acceleration);
        add(&mut m.ay, noise.acceleration);
        add(&mut m.x, noise.position);
        add(&mut m.y, noise.position);
        add(&mut m.psi, noise.heading);
        for w in m.omega.iter_mut() {
            add(w, noise.wheel_speed);
        }
    }
    m.beta = sideslip(m.vx, m.vy);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn state(vx: f64, vy: f64) -> PlantState {
        PlantState {
            x: 3.0,
            y: -1.0,
            psi: 0.2,
            vx,
            vy,
            yaw_rate: 0.1,
            omega: [30.0, 31.0, 29.0, 30.5],
            ax: -2.0,
            ay: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn sideslip_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let off = NoiseConfig::default();
        assert_eq!(measure(&state(10.0, 0.0), &off, &mut rng).beta, 0.0);
        let b = measure(&state(10.0, 10.0), &off, &mut rng).beta;
        assert!((b.to_degrees() - 45.0).abs() < 1e-12);
    }

    #[test]
    fn noise_off_is_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = state(9.0, -0.4);
        let m = measure(&s, &NoiseConfig::default(), &mut rng);
        assert_eq!(
            (m.vx, m.vy, m.yaw_rate, m.ax, m.ay, m.x, m.y, m.psi, m.omega),
            (s.vx, s.vy, s.yaw_rate, s.ax, s.ay, s.x, s.y, s.psi, s.omega)
        );
    }

    #[test]
    fn noise_is_seeded() {
        let noise = NoiseConfig {
            enabled: true,
            velocity: 0.1,
            yaw_rate: 0.01,
            ..Default::default()
        };
        let s = state(9.0, -0.4);
        let a = measure(&s, &noise, &mut ChaCha8Rng::seed_from_u64(7));
        let b = measure(&s, &noise, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
        assert_ne!(a.vx, s.vx);
    }
}
