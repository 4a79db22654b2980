//! Reference paths: straight, clothoid, arc, clothoid, straight.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "turn135")]
    Turn135,
    #[serde(rename = "uturn")]
    UTurn,
}

impl Scenario {
    pub const ALL: [Scenario; 2] = [Scenario::Turn135, Scenario::UTurn];

    pub fn heading_change(self) -> f64 {
        match self {
            Scenario::Turn135 => 0.75 * PI,
            Scenario::UTurn => PI,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Turn135 => "turn135",
            Scenario::UTurn => "uturn",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "turn135" | "135" | "135deg" => Ok(Scenario::Turn135),
            "uturn" => Ok(Scenario::UTurn),
            _ => Err(Error::UnknownScenario(s.to_string())),
        }
    }
}

/// Curvature varies linearly from `rho0` to `rho1` over the segment.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Segment {
    s0: f64,
    len: f64,
    rho0: f64,
    rho1: f64,
    psi0: f64,
}

impl Segment {
    fn rho(&self, s: f64) -> f64 {
        let t = ((s - self.s0) / self.len).clamp(0.0, 1.0);
        self.rho0 + (self.rho1 - self.rho0) * t
    }

    fn psi(&self, s: f64) -> f64 {
        let d = s - self.s0;
        let k = (self.rho1 - self.rho0) / self.len;
        self.psi0 + self.rho0 * d + 0.5 * k * d * d
    }
}

/// Constant-deceleration approach speed: `v0` until `brake_start`, then
/// `v^2 = v0^2 - 2 a (s - brake_start)` down to `corner`, then held.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedProfile {
    pub v0: f64,
    pub corner: f64,
    pub decel: f64,
    pub brake_start: f64,
}

impl SpeedProfile {
    pub fn at(&self, s: f64) -> f64 {
        if self.decel <= 0.0 || s <= self.brake_start {
            return self.v0;
        }
        let v2 = self.v0 * self.v0 - 2.0 * self.decel * (s - self.brake_start);
        v2.max(self.corner * self.corner).sqrt()
    }

    /// Length of the ramp.
    pub fn braking_distance(&self) -> f64 {
        if self.decel <= 0.0 {
            0.0
        } else {
            (self.v0 * self.v0 - self.corner * self.corner).max(0.0) / (2.0 * self.decel)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathRef {
    pub scenario: Option<Scenario>,
    /// Arclength grid.
    pub s: Vec<f64>,
    pub rho: Vec<f64>,
    pub vx_ref: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub psi: Vec<f64>,
    pub heading_change: f64,
    pub radius: f64,
    pub speed: SpeedProfile,
    segments: Vec<Segment>,
}

// 5-point Gauss-Legendre on [-1, 1].
const GL_X: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_W: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

impl PathRef {
    /// Build from `(length, rho_start, rho_end)` pieces.
    pub fn from_pieces(pieces: &[(f64, f64, f64)], grid_step: f64, speed: SpeedProfile) -> Result<Self> {
        if !(grid_step > 0.0) {
            return Err(Error::Config("grid step must be > 0".into()));
        }
        let mut segments = Vec::new();
        let mut s0 = 0.0;
        let mut psi0 = 0.0;
        for &(len, rho0, rho1) in pieces {
            if !(len >= 0.0) {
                return Err(Error::Config(format!("segment length {len} must be >= 0")));
            }
            if len == 0.0 {
                continue;
            }
            let seg = Segment {
                s0,
                len,
                rho0,
                rho1,
                psi0,
            };
            psi0 = seg.psi(s0 + len);
            s0 += len;
            segments.push(seg);
        }
        if segments.is_empty() {
            return Err(Error::Config("path has zero length".into()));
        }
        let total = s0;
        let n = (total / grid_step).ceil() as usize;
        let mut path = PathRef {
            scenario: None,
            s: Vec::with_capacity(n + 1),
            rho: Vec::with_capacity(n + 1),
            vx_ref: Vec::with_capacity(n + 1),
            x: Vec::with_capacity(n + 1),
            y: Vec::with_capacity(n + 1),
            psi: Vec::with_capacity(n + 1),
            heading_change: psi0,
            radius: 0.0,
            speed,
            segments,
        };
        let (mut x, mut y) = (0.0, 0.0);
        let mut prev = 0.0;
        for i in 0..=n {
            let s = (i as f64 * grid_step).min(total);
            if i > 0 {
                let (dx, dy) = path.integrate(prev, s);
                x += dx;
                y += dy;
            }
            path.s.push(s);
            path.rho.push(path.curvature(s));
            path.vx_ref.push(speed.at(s));
            path.x.push(x);
            path.y.push(y);
            path.psi.push(path.heading(s));
            prev = s;
        }
        Ok(path)
    }

    pub fn length(&self) -> f64 {
        *self.s.last().expect("path has points")
    }

    fn segment(&self, s: f64) -> &Segment {
        let i = self.segments.partition_point(|g| g.s0 <= s);
        &self.segments[i.saturating_sub(1)]
    }

    /// Curvature, extended as the end values beyond the path.
    pub fn curvature(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.length_exact());
        self.segment(s).rho(s)
    }

    /// Heading, extended linearly beyond the ends.
    pub fn heading(&self, s: f64) -> f64 {
        let end = self.length_exact();
        if s < 0.0 {
            self.segments[0].psi0 + self.segments[0].rho0 * s
        } else if s > end {
            let last = self.segments.last().unwrap();
            last.psi(end) + last.rho1 * (s - end)
        } else {
            self.segment(s).psi(s)
        }
    }

    fn length_exact(&self) -> f64 {
        let last = self.segments.last().unwrap();
        last.s0 + last.len
    }

    /// Displacement from `a` to `b` along the path.
    fn integrate(&self, a: f64, b: f64) -> (f64, f64) {
        let (mut dx, mut dy) = (0.0, 0.0);
        // Split at segment joints so each piece has a polynomial heading.
        let mut cuts = vec![a];
        for g in &self.segments {
            if g.s0 > a.min(b) && g.s0 < a.max(b) {
                cuts.push(g.s0);
            }
        }
        cuts.push(b);
        if b < a {
            let n = cuts.len();
            cuts[1..n - 1].reverse();
        }
        for w in cuts.windows(2) {
            // Sub-intervals of at most 1 m keep the rule at machine precision.
            let m = ((w[1] - w[0]).abs().ceil() as usize).max(1);
            let step = (w[1] - w[0]) / m as f64;
            for j in 0..m {
                let lo = w[0] + j as f64 * step;
                let half = 0.5 * step;
                let mid = lo + half;
                for k in 0..5 {
                    let psi = self.heading(mid + half * GL_X[k]);
                    dx += half * GL_W[k] * psi.cos();
                    dy += half * GL_W[k] * psi.sin();
                }
            }
        }
        (dx, dy)
    }

    /// Position at arclength `s` (straight extension beyond the ends).
    pub fn position(&self, s: f64) -> (f64, f64) {
        let h = self.s[1] - self.s[0];
        let i = ((s / h).floor().max(0.0) as usize).min(self.s.len() - 1);
        let (dx, dy) = self.integrate(self.s[i], s);
        (self.x[i] + dx, self.y[i] + dy)
    }

    pub fn vx_ref_at(&self, s: f64) -> f64 {
        self.speed.at(s)
    }
}

/// Reference path of a scenario. The arc radius makes the entry speed
/// demand `lateral_accel_factor * mu * g` unless overridden.
pub fn build_path(scenario: Scenario, cfg: &ScenarioConfig) -> Result<PathRef> {
    cfg.validate()?;
    let radius = cfg.arc_radius();
    let kappa = 1.0 / radius;
    let theta = scenario.heading_change();
    let lc = cfg.clothoid_m;
    let arc = theta / kappa - lc;
    if arc < 0.0 {
        return Err(Error::Config(format!(
            "clothoids of {lc} m turn more than {theta:.3} rad at radius {radius:.2} m"
        )));
    }
    let pieces = [
        (cfg.entry_straight_m, 0.0, 0.0),
        (lc, 0.0, kappa),
        (arc, kappa, kappa),
        (lc, kappa, 0.0),
        (cfg.exit_straight_m, 0.0, 0.0),
    ];
    let mut p = PathRef::from_pieces(&pieces, cfg.grid_step_m, speed_profile_config(cfg))?;
    p.scenario = Some(scenario);
    p.radius = radius;
    Ok(p)
}

fn speed_profile_config(cfg: &ScenarioConfig) -> SpeedProfile {
    SpeedProfile {
        v0: cfg.v0_m_s,
        corner: cfg.corner_speed_m_s,
        decel: cfg.decel_m_s2,
        brake_start: cfg.brake_start_m,
    }
}

/// Reference speed per grid point; also stored on the path.
pub fn speed_profile(path: &mut PathRef, v0: f64, corner: f64, decel: f64, brake_start: f64) -> Result<Vec<f64>> {
    if !(v0 > 0.0 && corner > 0.0 && decel >= 0.0) {
        return Err(Error::Config("speed profile needs v0 > 0, corner > 0, decel >= 0".into()));
    }
    let sp = SpeedProfile {
        v0,
        corner,
        decel,
        brake_start,
    };
    path.speed = sp;
    path.vx_ref = path.s.iter().map(|&s| sp.at(s)).collect();
    Ok(path.vx_ref.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    fn cfg() -> ScenarioConfig {
        Config::default().scenario
    }

    #[test]
    fn heading_changes() {
        let c = cfg();
        let p = build_path(Scenario::Turn135, &c).unwrap();
        assert!((p.heading_change - 2.356_194_490_192_345).abs() < 1e-9);
        let p = build_path(Scenario::UTurn, &c).unwrap();
        assert!((p.heading_change - PI).abs() < 1e-9);
    }

    #[test]
    fn integrated_curvature_gives_heading() {
        for sc in Scenario::ALL {
            let p = build_path(sc, &cfg()).unwrap();
            // Trapezoid on a 1 mm grid: exact on the linear pieces, O(h^2)
            // only on the few intervals containing a joint.
            let n = (p.length() / 1e-3).round() as usize;
            let h = p.length() / n as f64;
            let mut integral = 0.0;
            for i in 0..n {
                let a = p.curvature(i as f64 * h);
                let b = p.curvature((i + 1) as f64 * h);
                integral += 0.5 * h * (a + b);
            }
            assert!((integral - sc.heading_change()).abs() < 1e-6, "{sc}: {integral}");
        }
    }

    #[test]
    fn arc_only_curvature() {
        let r = 20.0;
        let sp = SpeedProfile {
            v0: 10.0,
            corner: 10.0,
            decel: 0.0,
            brake_start: 0.0,
        };
        let p = PathRef::from_pieces(&[(30.0, 1.0 / r, 1.0 / r)], 0.1, sp).unwrap();
        assert!(p.rho.iter().all(|&k| k == 1.0 / r));
        // Points lie on the circle centred at (0, r).
        for i in (0..p.s.len()).step_by(17) {
            let d = (p.x[i].powi(2) + (p.y[i] - r).powi(2)).sqrt();
            assert!((d - r).abs() < 1e-9, "{d}");
        }
    }

    #[test]
    fn radius_forces_drift() {
        let c = cfg();
        let p = build_path(Scenario::Turn135, &c).unwrap();
        let g = Config::default().vehicle.g;
        assert!(c.v0_m_s.powi(2) / p.radius > c.mu * g);
    }

    #[test]
    fn arclength_strictly_increasing() {
        let p = build_path(Scenario::UTurn, &cfg()).unwrap();
        assert!(p.s.windows(2).all(|w| w[1] > w[0]));
        assert!(p.vx_ref.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn speed_profile_values() {
        let mut p = build_path(Scenario::Turn135, &cfg()).unwrap();
        let v = speed_profile(&mut p, 12.5, 8.0, 0.0, 20.0).unwrap();
        assert!(v.iter().all(|&x| x == 12.5));

        let v = speed_profile(&mut p, 12.5, 8.0, 3.0, 20.0).unwrap();
        assert_eq!(v[0], 12.5);
        let d = (12.5f64 * 12.5 - 64.0) / 6.0;
        assert!((p.speed.braking_distance() - d).abs() < 1e-12);
        assert!((p.vx_ref_at(20.0 + d) - 8.0).abs() < 1e-9);
        let mean_slope = (p.vx_ref_at(20.0) - p.vx_ref_at(20.0 + d)) / d;
        assert!((mean_slope - (12.5 - 8.0) / d).abs() < 1e-9);
        assert_eq!(p.vx_ref_at(20.0 + d + 5.0), 8.0);
        // v dv/ds = -a on the ramp.
        let s = 20.0 + 0.5 * d;
        let h = 1e-5;
        let dv = (p.vx_ref_at(s + h) - p.vx_ref_at(s - h)) / (2.0 * h);
        assert!((p.vx_ref_at(s) * dv + 3.0).abs() < 1e-6);
    }

    #[test]
    fn invalid_geometry() {
        let mut c = cfg();
        c.radius_m = Some(-3.0);
        assert!(build_path(Scenario::Turn135, &c).is_err());
        let mut c = cfg();
        c.clothoid_m = -1.0;
        assert!(build_path(Scenario::Turn135, &c).is_err());
    }

    #[test]
    fn position_between_grid_points() {
        let p = build_path(Scenario::Turn135, &cfg()).unwrap();
        for i in [0usize, 100, 555, 700] {
            let (x, y) = p.position(p.s[i]);
            assert!((x - p.x[i]).abs() < 1e-12 && (y - p.y[i]).abs() < 1e-12);
        }
        // Integrating in one go agrees with the grid accumulation.
        let s = p.length() * 0.73;
        let (dx, dy) = p.integrate(0.0, s);
        let (x, y) = p.position(s);
        assert!((dx - x).abs() < 1e-9 && (dy - y).abs() < 1e-9);
    }

    #[test]
    fn scenario_names() {
        assert_eq!("turn135".parse::<Scenario>().unwrap(), Scenario::Turn135);
        assert_eq!("U-turn".parse::<Scenario>().unwrap(), Scenario::UTurn);
        assert!(matches!("slalom".parse::<Scenario>(), Err(Error::UnknownScenario(_))));
    }
}
