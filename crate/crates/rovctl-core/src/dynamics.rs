//! Reduced 4-DOF plant model of a tethered underwater vehicle.
//!
//! Body-frame equation of motion (roll and pitch self-stabilize and are
//! dropped; restoring forces are assumed passively compensated):
//!
//!   M nu' + k(nu) + h(nu) + d = tau,     nu = [vx, vy, vz, wz]
//!
//! with M the diagonal total inertia (rigid body plus added mass C_M rho V
//! per axis), h the quadratic damping Cd_i v|v| and d the lumped tether
//! disturbance. Mapped to the inertial frame x = [x, y, z, yaw] through the
//! yaw Jacobian J:
//!
//!   Mb x'' + kb + hb + db = taub
//!   Mb = J^-T M J^-1,  kb = J^-T M (dJ^-1/dt) x',  hb = J^-T h(J^-1 x')
//!
//! Coriolis coupling k(nu) is zero for this diagonal low-speed model; the
//! convective term above is kept and vanishes whenever the yaw rate is zero.

use nalgebra::{Matrix4, Vector4};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// True physical parameters of the vehicle and surrounding fluid.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantParams {
    /// Rigid-body mass (kg).
    pub mass_rb: f64,
    /// Rigid-body yaw inertia (kg m^2).
    pub inertia_z: f64,
    /// Added-mass coefficients per axis [surge, sway, heave, yaw].
    pub cm: [f64; 4],
    /// Lumped quadratic damping coefficients per axis (N s^2/m^2 for the
    /// translations, N m s^2/rad^2 for yaw): damping force = cd_i * v|v|.
    pub cd: [f64; 4],
    /// Fluid density (kg/m^3).
    pub rho: f64,
    /// Displaced volume (m^3).
    pub vol: f64,
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("plant.mass_rb", self.mass_rb),
            ("plant.inertia_z", self.inertia_z),
            ("plant.rho", self.rho),
            ("plant.vol", self.vol),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "{name}: must be > 0, got {v}"
                )));
            }
        }
        for (i, c) in self.cm.iter().enumerate() {
            if *c < 0.0 || !c.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "plant.cm[{i}]: must be >= 0, got {c}"
                )));
            }
        }
        for (i, c) in self.cd.iter().enumerate() {
            if *c < 0.0 || !c.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "plant.cd[{i}]: must be >= 0, got {c}"
                )));
            }
        }
        for axis in 0..4 {
            let m = self.dof_inertia(axis);
            if m.is_nan() || m <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "total inertia of axis {axis} must be > 0, got {m}"
                )));
            }
        }
        Ok(())
    }

    /// Total inertia of one axis: rigid-body term plus added mass.
    pub fn dof_inertia(&self, axis: usize) -> f64 {
        let rigid = if axis == 3 {
            self.inertia_z
        } else {
            self.mass_rb
        };
        rigid + self.cm[axis] * self.rho * self.vol
    }

    /// Total heave inertia; the depth controller's exact belief.
    pub fn depth_inertia(&self) -> f64 {
        self.dof_inertia(2)
    }
}

impl Default for PlantParams {
    /// Reference vehicle used by the built-in scenarios: 50 kg total heave
    /// inertia (35 kg rigid + 15 kg added) and 250 N s^2/m^2 heave damping.
    fn default() -> Self {
        Self {
            mass_rb: 35.0,
            inertia_z: 5.0,
            cm: [1.5, 1.5, 1.5, 1.0],
            cd: [200.0, 200.0, 250.0, 30.0],
            rho: 1000.0,
            vol: 0.01,
        }
    }
}

/// Body-frame velocities [vx, vy, vz, wz] (m/s, m/s, m/s, rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    pub nu: Vector4<f64>,
}

impl BodyState {
    pub fn new(nu: Vector4<f64>) -> Self {
        Self { nu }
    }

    /// Body velocities recovered from inertial rates: nu = J^-1 x'.
    pub fn from_inertial(pose: &InertialPose) -> Self {
        Self {
            nu: inverse_jacobian(pose.position[3]) * pose.velocity,
        }
    }
}

/// Inertial-frame pose [x, y, z, yaw] and its time derivative. Yaw is kept
/// unwrapped for continuity; use [`InertialPose::yaw_wrapped`] for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertialPose {
    pub position: Vector4<f64>,
    pub velocity: Vector4<f64>,
}

impl InertialPose {
    pub fn new(position: Vector4<f64>, velocity: Vector4<f64>) -> Self {
        Self { position, velocity }
    }

    /// Yaw angle wrapped to (-pi, pi].
    pub fn yaw_wrapped(&self) -> f64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut yaw = self.position[3] % two_pi;
        if yaw <= -std::f64::consts::PI {
            yaw += two_pi;
        } else if yaw > std::f64::consts::PI {
            yaw -= two_pi;
        }
        yaw
    }
}

/// Quadratic damping h(nu): per-axis cd_i * nu_i |nu_i|.
pub fn quadratic_damping(state: &BodyState, p: &PlantParams) -> Vector4<f64> {
    Vector4::from_fn(|i, _| p.cd[i] * state.nu[i] * state.nu[i].abs())
}

/// Added inertia diag(C_M_i rho V).
pub fn added_inertia(p: &PlantParams) -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::from_fn(|i, _| p.cm[i] * p.rho * p.vol))
}

/// Total inertia: rigid body plus added mass, diagonal.
pub fn total_inertia(p: &PlantParams) -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::from_fn(|i, _| p.dof_inertia(i)))
}

/// Kinematic map from body velocities to inertial rates: planar yaw rotation
/// for surge/sway, identity for heave and yaw.
pub fn jacobian(yaw: f64) -> Matrix4<f64> {
    let (s, c) = yaw.sin_cos();
    Matrix4::new(
        c, -s, 0.0, 0.0, //
        s, c, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    )
}

/// Inverse of the kinematic map; the rotation block is orthogonal, so this
/// is the transpose.
pub fn inverse_jacobian(yaw: f64) -> Matrix4<f64> {
    jacobian(yaw).transpose()
}

/// d(J^-1)/dt for yaw rate `yaw_rate`.
fn inverse_jacobian_rate(yaw: f64, yaw_rate: f64) -> Matrix4<f64> {
    let (s, c) = yaw.sin_cos();
    // derivative of J(yaw)^T with respect to time
    Matrix4::new(
        -s, c, 0.0, 0.0, //
        -c, -s, 0.0, 0.0, //
        0.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 0.0,
    ) * yaw_rate
}

/// Frame in which the commanded force vector is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForceFrame {
    /// The controller commands inertial-frame forces directly.
    #[default]
    Inertial,
    /// Body-frame forces, mapped through J^-T.
    Body,
}

/// Inertial-frame accelerations x'' = Mb^-1 (taub - kb - hb - db).
///
/// The disturbance `d` is body-frame (it rides on the vehicle), the control
/// force frame is selectable. `nu` must be kinematically consistent with the
/// pose (nu = J^-1 x').
pub fn body_to_inertial_dynamics(
    pose: &InertialPose,
    body: &BodyState,
    tau: &Vector4<f64>,
    d: &Vector4<f64>,
    p: &PlantParams,
    tau_frame: ForceFrame,
) -> Result<Vector4<f64>> {
    let yaw = pose.position[3];
    let j = jacobian(yaw);
    let m = total_inertia(p);
    // J is orthogonal: J^-T = J.
    let m_bar = j * m * j.transpose();
    let convective = j * (m * (inverse_jacobian_rate(yaw, pose.velocity[3]) * pose.velocity));
    let h_bar = j * quadratic_damping(body, p);
    let d_bar = j * d;
    let tau_bar = match tau_frame {
        ForceFrame::Inertial => *tau,
        ForceFrame::Body => j * tau,
    };
    let rhs = tau_bar - convective - h_bar - d_bar;
    let inverse = m_bar
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameter("inertia matrix is singular".into()))?;
    Ok(inverse * rhs)
}

/// Scalar equation of motion of one decoupled axis:
/// x'' = (tau - k - cd v|v| - d) / m.
pub fn dof_acceleration(
    inertia: f64,
    coriolis: f64,
    damping_coeff: f64,
    tau: f64,
    disturbance: f64,
    velocity: f64,
) -> f64 {
    (tau - coriolis - damping_coeff * velocity * velocity.abs() - disturbance) / inertia
}

/// Exogenous tether force model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisturbanceKind {
    None,
    Constant,
    Sinusoid,
    FilteredNoise,
}

/// Specification of the tether disturbance acting on the four axes.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceSpec {
    pub kind: DisturbanceKind,
    /// Force amplitude per axis (N, N, N, N m). For `FilteredNoise` this is
    /// the stationary standard deviation per axis.
    pub amplitude: [f64; 4],
    /// Angular frequency (rad/s), sinusoid only.
    pub frequency: f64,
    /// Low-pass corner frequency (rad/s), filtered noise only.
    pub corner_freq: f64,
    pub seed: u64,
}

impl DisturbanceSpec {
    pub fn none() -> Self {
        Self {
            kind: DisturbanceKind::None,
            amplitude: [0.0; 4],
            frequency: 0.0,
            corner_freq: 1.0,
            seed: 0,
        }
    }

    pub fn constant(amplitude: [f64; 4]) -> Self {
        Self {
            kind: DisturbanceKind::Constant,
            amplitude,
            ..Self::none()
        }
    }

    pub fn sinusoid(amplitude: [f64; 4], frequency: f64) -> Self {
        Self {
            kind: DisturbanceKind::Sinusoid,
            amplitude,
            frequency,
            ..Self::none()
        }
    }

    pub fn filtered_noise(amplitude: [f64; 4], corner_freq: f64, seed: u64) -> Self {
        Self {
            kind: DisturbanceKind::FilteredNoise,
            amplitude,
            corner_freq,
            seed,
            ..Self::none()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.amplitude.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidConfig(
                "disturbance.amplitude: entries must be finite".into(),
            ));
        }
        if !self.frequency.is_finite() {
            return Err(Error::InvalidConfig(
                "disturbance.frequency: must be finite".into(),
            ));
        }
        if self.kind == DisturbanceKind::FilteredNoise
            && (self.corner_freq.is_nan() || self.corner_freq <= 0.0)
        {
            return Err(Error::InvalidConfig(format!(
                "disturbance.corner_freq: must be > 0 for filtered noise, got {}",
                self.corner_freq
            )));
        }
        Ok(())
    }
}

/// Seeded disturbance source owned by one simulation run. Deterministic
/// kinds are pure functions of `t`; filtered noise advances one filter step
/// per call, so call it once per integrator step.
#[derive(Debug, Clone)]
pub struct DisturbanceGenerator {
    spec: DisturbanceSpec,
    rng: ChaCha12Rng,
    filter_state: Vector4<f64>,
    /// One-step autoregression factor exp(-corner_freq * dt).
    decay: f64,
    /// Drive standard deviation giving a stationary std of 1 per axis.
    drive_std: f64,
}

impl DisturbanceGenerator {
    pub fn new(spec: DisturbanceSpec, dt: f64) -> Result<Self> {
        spec.validate()?;
        if dt.is_nan() || dt <= 0.0 {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        let decay = (-spec.corner_freq * dt).exp();
        // stationary variance of s_{k+1} = a s_k + w_k is var(w)/(1 - a^2)
        let drive_std = (1.0 - decay * decay).sqrt();
        Ok(Self {
            rng: ChaCha12Rng::seed_from_u64(spec.seed),
            spec,
            filter_state: Vector4::zeros(),
            decay,
            drive_std,
        })
    }

    pub fn spec(&self) -> &DisturbanceSpec {
        &self.spec
    }

    pub fn sample(&mut self, t: f64) -> Vector4<f64> {
        match self.spec.kind {
            DisturbanceKind::None => Vector4::zeros(),
            DisturbanceKind::Constant => Vector4::from_row_slice(&self.spec.amplitude),
            DisturbanceKind::Sinusoid => {
                let s = (self.spec.frequency * t).sin();
                Vector4::from_fn(|i, _| self.spec.amplitude[i] * s)
            }
            DisturbanceKind::FilteredNoise => {
                for i in 0..4 {
                    let w = self.drive_std * standard_normal(&mut self.rng);
                    self.filter_state[i] = self.decay * self.filter_state[i] + w;
                }
                Vector4::from_fn(|i, _| self.spec.amplitude[i] * self.filter_state[i])
            }
        }
    }
}

/// Box-Muller draw of one standard normal variate.
fn standard_normal(rng: &mut ChaCha12Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
