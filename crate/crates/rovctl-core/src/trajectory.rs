//! Reference trajectories for the depth loop. Both kinds are smooth, so the
//! controller's feedforward acceleration is always defined.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    /// x_d(t) = amplitude * (1 - cos(omega t)): starts at rest at 0 and
    /// oscillates between 0 and 2 * amplitude.
    Harmonic,
    /// x_d(t) = amplitude for all t.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySpec {
    pub kind: TrajectoryKind,
    pub amplitude: f64,
    pub omega: f64,
}

impl TrajectorySpec {
    pub fn harmonic(amplitude: f64, omega: f64) -> Self {
        Self {
            kind: TrajectoryKind::Harmonic,
            amplitude,
            omega,
        }
    }

    pub fn constant(level: f64) -> Self {
        Self {
            kind: TrajectoryKind::Constant,
            amplitude: level,
            omega: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(Error::InvalidConfig(
                "trajectory.amplitude: must be finite".into(),
            ));
        }
        if !self.omega.is_finite() {
            return Err(Error::InvalidConfig(
                "trajectory.omega: must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Desired position, velocity and acceleration at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub position: f64,
    pub velocity: f64,
    pub acceleration: f64,
}

pub fn desired_trajectory(t: f64, spec: &TrajectorySpec) -> TrajectorySample {
    match spec.kind {
        TrajectoryKind::Harmonic => {
            let (s, c) = (spec.omega * t).sin_cos();
            TrajectorySample {
                position: spec.amplitude * (1.0 - c),
                velocity: spec.amplitude * spec.omega * s,
                acceleration: spec.amplitude * spec.omega * spec.omega * c,
            }
        }
        TrajectoryKind::Constant => TrajectorySample {
            position: spec.amplitude,
            velocity: 0.0,
            acceleration: 0.0,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn depth_reference() -> TrajectorySpec {
        TrajectorySpec::harmonic(0.5, 0.1 * PI)
    }

    #[test]
    fn harmonic_start_at_rest() {
        let s = desired_trajectory(0.0, &depth_reference());
        assert_eq!(s.position, 0.0);
        assert_eq!(s.velocity, 0.0);
        assert_relative_eq!(s.acceleration, 0.04934802200544679, max_relative = 1e-12);
    }

    #[test]
    fn harmonic_half_period() {
        let s = desired_trajectory(10.0, &depth_reference());
        assert_relative_eq!(s.position, 1.0, max_relative = 1e-12);
        assert!(s.velocity.abs() < 1e-15);
        assert_relative_eq!(s.acceleration, -0.04934802200544679, max_relative = 1e-12);
    }

    #[test]
    fn harmonic_full_period() {
        let s = desired_trajectory(20.0, &depth_reference());
        assert!(s.position.abs() < 1e-15);
        assert!(s.velocity.abs() < 1e-15);
        assert_relative_eq!(s.acceleration, 0.04934802200544679, max_relative = 1e-12);
    }

    #[test]
    fn constant_reference() {
        let spec = TrajectorySpec::constant(1.5);
        for t in [0.0, 3.7, 100.0] {
            let s = desired_trajectory(t, &spec);
            assert_eq!(s.position, 1.5);
            assert_eq!(s.velocity, 0.0);
            assert_eq!(s.acceleration, 0.0);
        }
    }
}
