//! Tracking controllers for nth-order systems of the form
//!
//!   x^(n) = f(x) + b(x) u + d
//!
//! The tracking error vector xt = [xt, xt', ..., xt^(n-1)] (xt = x - x_d) is
//! collapsed onto the scalar measure
//!
//!   eps = c' * xt,    c = [C(n-1,n-1) L^(n-1), ..., C(n-1,1) L, 1]
//!
//! whose coefficient polynomial factors as (s + L)^(n-1), so eps -> 0 forces
//! every error component to zero. The generic law cancels the model terms and
//! imposes eps' = -kappa * eps; the per-DOF law does the same for the reduced
//! vehicle equation m * x'' = tau - k - h - d.

use crate::error::{Error, Result};

/// Gains of one tracking loop: order `n`, pole location `lambda`, feedback
/// gain `kappa`, and the derived coefficient vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSet {
    order: usize,
    lambda: f64,
    kappa: f64,
    coeffs: Vec<f64>,
    shifted: Vec<f64>,
}

impl GainSet {
    pub fn new(order: usize, lambda: f64, kappa: f64) -> Result<Self> {
        if kappa.is_nan() || kappa <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "kappa must be > 0, got {kappa}"
            )));
        }
        let coeffs = binomial_coefficients(order, lambda)?;
        // eps' = xt^(n) + cbar' * xt, with cbar the coefficients of c shifted
        // one derivative up: drop the multiplier of xt^(n-1) (always 1) and
        // prepend a zero for the xt slot.
        let mut shifted = Vec::with_capacity(order);
        shifted.push(0.0);
        shifted.extend_from_slice(&coeffs[..order - 1]);
        Ok(Self {
            order,
            lambda,
            kappa,
            coeffs,
            shifted,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Coefficients multiplying [xt, xt', ..., xt^(n-1)] in eps.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficients multiplying the same vector in eps' - xt^(n).
    pub fn shifted_coeffs(&self) -> &[f64] {
        &self.shifted
    }
}

/// Tracking error vector [xt, xt', ..., xt^(n-1)] for one degree of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorVector {
    components: Vec<f64>,
}

impl ErrorVector {
    pub fn new(components: Vec<f64>) -> Self {
        Self { components }
    }

    /// Second-order error vector [position error, velocity error].
    pub fn pair(position: f64, velocity: f64) -> Self {
        Self {
            components: vec![position, velocity],
        }
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// Controller-side estimate of one degree of freedom of the vehicle:
/// total inertia (rigid body plus added mass), Coriolis/centrifugal force
/// and quadratic damping coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofPlantBelief {
    /// Believed total inertia (kg or kg m^2), > 0.
    pub inertia: f64,
    /// Believed Coriolis/centrifugal force (N); zero for a decoupled axis.
    pub coriolis: f64,
    /// Believed quadratic damping coefficient (N s^2/m^2), >= 0; the damping
    /// force is `damping_coeff * v * |v|` at the measured velocity.
    pub damping_coeff: f64,
}

impl DofPlantBelief {
    pub fn new(inertia: f64, coriolis: f64, damping_coeff: f64) -> Result<Self> {
        if inertia <= 0.0 || !inertia.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "belief inertia must be > 0, got {inertia}"
            )));
        }
        if !coriolis.is_finite() {
            return Err(Error::InvalidParameter(
                "belief coriolis must be finite".into(),
            ));
        }
        if damping_coeff < 0.0 || !damping_coeff.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "belief damping coefficient must be >= 0, got {damping_coeff}"
            )));
        }
        Ok(Self {
            inertia,
            coriolis,
            damping_coeff,
        })
    }
}

/// How the feedback gain enters the per-DOF law.
///
/// `AsWritten` applies `-kappa * eps` directly, which closes the loop as
/// `m eps' = -kappa eps` (decay rate kappa/m). `InertiaNormalized` scales the
/// term by the believed inertia so the decay rate is kappa itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainScaling {
    #[default]
    AsWritten,
    InertiaNormalized,
}

/// Coefficients `[C(n-1,n-1) lambda^(n-1), ..., C(n-1,1) lambda, 1]` of the
/// combined error measure; the polynomial they define is (s + lambda)^(n-1).
pub fn binomial_coefficients(order: usize, lambda: f64) -> Result<Vec<f64>> {
    if order < 1 {
        return Err(Error::InvalidParameter(format!(
            "controller order must be >= 1, got {order}"
        )));
    }
    if lambda <= 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be > 0, got {lambda}"
        )));
    }
    let n = order - 1;
    let coeffs = (0..order)
        .map(|i| binomial(n, i) * lambda.powi((n - i) as i32))
        .collect();
    Ok(coeffs)
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    let mut acc = 1.0;
    for i in 1..=k {
        acc = acc * (n - k + i) as f64 / i as f64;
    }
    acc
}

/// Combined tracking error eps = c' * xt.
pub fn combined_error(errors: &ErrorVector, gains: &GainSet) -> Result<f64> {
    if errors.len() != gains.order() {
        return Err(Error::InvalidParameter(format!(
            "error vector has length {}, controller order is {}",
            errors.len(),
            gains.order()
        )));
    }
    Ok(dot(gains.coeffs(), errors.components()))
}

/// Generic nth-order tracking law
///
///   u = (1/b) (-f - d + x_d^(n) - cbar' * xt - kappa * eps)
///
/// which, substituted into x^(n) = f + b u + d, yields eps' = -kappa eps.
pub fn generic_control(
    f: f64,
    b: f64,
    d: f64,
    target_nth_derivative: f64,
    errors: &ErrorVector,
    gains: &GainSet,
) -> Result<f64> {
    if b == 0.0 {
        return Err(Error::SingularGain);
    }
    let eps = combined_error(errors, gains)?;
    let shifted = dot(gains.shifted_coeffs(), errors.components());
    Ok((-f - d + target_nth_derivative - shifted - gains.kappa() * eps) / b)
}

/// Per-DOF vehicle law
///
///   tau = k + h(v) + d_hat + m (x_d'' - lambda xt') - kappa eps
///
/// with h(v) the believed damping force at the measured velocity and
/// eps = xt' + lambda xt recomputed from the supplied error vector. With an
/// exact belief and d_hat equal to the true disturbance this closes the loop
/// as m eps' = -kappa eps.
pub fn dof_control(
    belief: &DofPlantBelief,
    disturbance_estimate: f64,
    target_accel: f64,
    errors: &ErrorVector,
    measured_velocity: f64,
    gains: &GainSet,
    scaling: GainScaling,
) -> Result<f64> {
    if gains.order() != 2 {
        return Err(Error::InvalidParameter(format!(
            "per-DOF law needs a second-order gain set, got order {}",
            gains.order()
        )));
    }
    if errors.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "per-DOF law needs [position, velocity] errors, got length {}",
            errors.len()
        )));
    }
    let position_error = errors.components()[0];
    let velocity_error = errors.components()[1];
    let eps = velocity_error + gains.lambda() * position_error;
    let damping = belief.damping_coeff * measured_velocity * measured_velocity.abs();
    let feedback = match scaling {
        GainScaling::AsWritten => gains.kappa() * eps,
        GainScaling::InertiaNormalized => belief.inertia * gains.kappa() * eps,
    };
    Ok(belief.coriolis
        + damping
        + disturbance_estimate
        + belief.inertia * (target_accel - gains.lambda() * velocity_error)
        - feedback)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn binomial_coefficients_first_order() {
        assert_eq!(binomial_coefficients(1, 3.5).unwrap(), vec![1.0]);
    }

    #[test]
    fn binomial_coefficients_second_order() {
        assert_eq!(binomial_coefficients(2, 3.5).unwrap(), vec![3.5, 1.0]);
    }

    #[test]
    fn binomial_coefficients_third_order() {
        assert_eq!(binomial_coefficients(3, 2.0).unwrap(), vec![4.0, 4.0, 1.0]);
    }

    #[test]
    fn binomial_coefficients_last_entry_exactly_one() {
        for order in 1..=6 {
            let c = binomial_coefficients(order, 0.73).unwrap();
            assert_eq!(*c.last().unwrap(), 1.0);
            assert_eq!(c.len(), order);
        }
    }

    #[test]
    fn binomial_coefficients_rejects_bad_inputs() {
        assert!(binomial_coefficients(0, 1.0).is_err());
        assert!(binomial_coefficients(2, 0.0).is_err());
        assert!(binomial_coefficients(2, -1.0).is_err());
        assert!(binomial_coefficients(2, f64::NAN).is_err());
    }

    /// The coefficient polynomial must factor as (s + lambda)^(n-1): -lambda
    /// is a root of full multiplicity. Repeated deflation by (s + lambda) is
    /// the well-conditioned way to find that root; each synthetic-division
    /// remainder is the value of the current quotient polynomial at -lambda
    /// and must vanish.
    #[test]
    fn coefficient_polynomial_roots_all_at_minus_lambda() {
        for (order, lambda) in [(2usize, 3.5), (3, 2.0), (4, 1.25)] {
            let coeffs = binomial_coefficients(order, lambda).unwrap();
            let scale: f64 = coeffs.iter().fold(1.0, |m, c| m.max(c.abs()));
            // coeffs[i] multiplies s^i; the leading (s^m) coefficient is 1.
            let mut poly = coeffs;
            for pass in 0..order - 1 {
                let m = poly.len() - 1;
                // divide by (s + lambda): quotient[j] built top-down
                let mut quotient = vec![0.0; m];
                let mut carry = poly[m];
                for j in (0..m).rev() {
                    quotient[j] = carry;
                    carry = poly[j] - lambda * carry;
                }
                assert!(
                    carry.abs() <= 1e-9 * scale,
                    "order {order}, deflation {pass}: remainder {carry} at root {}",
                    -lambda
                );
                poly = quotient;
            }
            assert_eq!(poly, vec![1.0]);
        }
    }

    #[test]
    fn combined_error_zero_vector() {
        let gains = GainSet::new(2, 3.5, 3.5).unwrap();
        let eps = combined_error(&ErrorVector::pair(0.0, 0.0), &gains).unwrap();
        assert_eq!(eps, 0.0);
    }

    #[test]
    fn combined_error_initial_offset() {
        let gains = GainSet::new(2, 3.5, 3.5).unwrap();
        let eps = combined_error(&ErrorVector::pair(0.1, 0.0), &gains).unwrap();
        assert_relative_eq!(eps, 0.35, max_relative = 1e-15);
    }

    #[test]
    fn combined_error_on_manifold() {
        let gains = GainSet::new(2, 3.5, 3.5).unwrap();
        let eps = combined_error(&ErrorVector::pair(0.1, -0.35), &gains).unwrap();
        assert!(eps.abs() < 1e-15);
    }

    #[test]
    fn combined_error_rejects_length_mismatch() {
        let gains = GainSet::new(3, 2.0, 1.0).unwrap();
        assert!(combined_error(&ErrorVector::pair(0.1, 0.0), &gains).is_err());
    }

    #[test]
    fn combined_error_is_linear() {
        let gains = GainSet::new(3, 1.7, 2.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
            let b: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
            let s: f64 = rng.random_range(-3.0..3.0);
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let scaled: Vec<f64> = a.iter().map(|x| s * x).collect();
            let ea = combined_error(&ErrorVector::new(a.clone()), &gains).unwrap();
            let eb = combined_error(&ErrorVector::new(b), &gains).unwrap();
            let esum = combined_error(&ErrorVector::new(sum), &gains).unwrap();
            let escaled = combined_error(&ErrorVector::new(scaled), &gains).unwrap();
            assert_relative_eq!(esum, ea + eb, epsilon = 1e-12);
            assert_relative_eq!(escaled, s * ea, epsilon = 1e-12);
        }
    }

    #[test]
    fn generic_control_equilibrium() {
        let gains = GainSet::new(2, 3.5, 3.5).unwrap();
        let u = generic_control(0.0, 1.0, 0.0, 0.0, &ErrorVector::pair(0.0, 0.0), &gains).unwrap();
        assert_eq!(u, 0.0);
    }

    #[test]
    fn generic_control_pure_feedback() {
        let gains = GainSet::new(2, 3.5, 3.5).unwrap();
        let u = generic_control(0.0, 1.0, 0.0, 0.0, &ErrorVector::pair(0.1, 0.0), &gains).unwrap();
        assert_relative_eq!(u, -1.225, max_relative = 1e-12);
    }

    #[test]
    fn generic_control_cancels_model_terms() {
        let gains = GainSet::new(2, 3.5, 3.5).unwrap();
        let u = generic_control(2.0, 2.0, 1.0, 0.0, &ErrorVector::pair(0.0, 0.0), &gains).unwrap();
        assert_relative_eq!(u, -1.5, max_relative = 1e-12);
    }

    #[test]
    fn generic_control_rejects_zero_gain() {
        let gains = GainSet::new(2, 3.5, 3.5).unwrap();
        assert_eq!(
            generic_control(0.0, 0.0, 0.0, 0.0, &ErrorVector::pair(0.0, 0.0), &gains),
            Err(Error::SingularGain)
        );
    }

    #[test]
    fn dof_control_all_zero() {
        let gains = GainSet::new(2, 3.5, 3.5).unwrap();
        let belief = DofPlantBelief::new(50.0, 0.0, 250.0).unwrap();
        let tau = dof_control(
            &belief,
            0.0,
            0.0,
            &ErrorVector::pair(0.0, 0.0),
            0.0,
            &gains,
            GainScaling::AsWritten,
        )
        .unwrap();
        assert_eq!(tau, 0.0);
    }

    #[test]
    fn dof_control_feedforward_only() {
        let gains = GainSet::new(2, 3.5, 3.5).unwrap();
        let belief = DofPlantBelief::new(50.0, 0.0, 0.0).unwrap();
        let target_accel = 0.005 * std::f64::consts::PI.powi(2);
        let tau = dof_control(
            &belief,
            0.0,
            target_accel,
            &ErrorVector::pair(0.0, 0.0),
            0.0,
            &gains,
            GainScaling::AsWritten,
        )
        .unwrap();
        assert_relative_eq!(tau, 2.4674011002723395, max_relative = 1e-12);
    }

    #[test]
    fn dof_control_damping_compensation() {
        let gains = GainSet::new(2, 3.5, 3.5).unwrap();
        let belief = DofPlantBelief::new(50.0, 0.0, 250.0).unwrap();
        let tau = dof_control(
            &belief,
            0.0,
            0.0,
            &ErrorVector::pair(0.0, 0.0),
            1.0,
            &gains,
            GainScaling::AsWritten,
        )
        .unwrap();
        assert_relative_eq!(tau, 250.0, max_relative = 1e-12);
    }

    #[test]
    fn dof_control_normalized_gain_scaling() {
        let gains = GainSet::new(2, 3.5, 3.5).unwrap();
        let belief = DofPlantBelief::new(50.0, 0.0, 0.0).unwrap();
        let errors = ErrorVector::pair(0.1, 0.0);
        let written = dof_control(
            &belief,
            0.0,
            0.0,
            &errors,
            0.0,
            &gains,
            GainScaling::AsWritten,
        )
        .unwrap();
        let normalized = dof_control(
            &belief,
            0.0,
            0.0,
            &errors,
            0.0,
            &gains,
            GainScaling::InertiaNormalized,
        )
        .unwrap();
        assert_relative_eq!(written, -1.225, max_relative = 1e-12);
        assert_relative_eq!(normalized, 50.0 * written, max_relative = 1e-12);
    }

    #[test]
    fn dof_control_rejects_wrong_order() {
        let gains = GainSet::new(3, 3.5, 3.5).unwrap();
        let belief = DofPlantBelief::new(50.0, 0.0, 250.0).unwrap();
        assert!(dof_control(
            &belief,
            0.0,
            0.0,
            &ErrorVector::new(vec![0.0, 0.0, 0.0]),
            0.0,
            &gains,
            GainScaling::AsWritten,
        )
        .is_err());
    }

    #[test]
    fn belief_rejects_nonpositive_inertia() {
        assert!(DofPlantBelief::new(0.0, 0.0, 10.0).is_err());
        assert!(DofPlantBelief::new(-5.0, 0.0, 10.0).is_err());
        assert!(DofPlantBelief::new(5.0, 0.0, -1.0).is_err());
    }

    /// Substituting the generic law into x''' = f + b u + d with f, b and d
    /// known exactly must leave eps' = -kappa eps, whatever the model terms
    /// are. Third-order loop, nonlinear f, time-varying known disturbance.
    #[test]
    fn generic_law_cancels_third_order_nonlinear_model() {
        use crate::ode::rk4_step;
        use nalgebra::Vector3;

        let gains = GainSet::new(3, 2.0, 3.0).unwrap();
        let f = |y: &Vector3<f64>| y[0].sin() - 0.5 * y[1];
        let b = 2.0;
        let d = |t: f64| 0.3 * (2.0 * t).sin();
        let mut derivative = |t: f64, y: &Vector3<f64>| {
            let errors = ErrorVector::new(vec![y[0], y[1], y[2]]);
            let u = generic_control(f(y), b, d(t), 0.0, &errors, &gains).unwrap();
            Vector3::new(y[1], y[2], f(y) + b * u + d(t))
        };

        let dt = 1e-3;
        let mut y = Vector3::new(0.05, 0.0, 0.0);
        let eps0 = combined_error(&ErrorVector::new(vec![0.05, 0.0, 0.0]), &gains).unwrap();
        assert_relative_eq!(eps0, 0.2, max_relative = 1e-12);
        for k in 0..2000 {
            let t = k as f64 * dt;
            let eps = combined_error(&ErrorVector::new(vec![y[0], y[1], y[2]]), &gains).unwrap();
            let expected = eps0 * (-gains.kappa() * t).exp();
            assert!(
                (eps - expected).abs() <= 1e-6 * expected.abs(),
                "t = {t}: eps {eps} vs closed form {expected}"
            );
            y = rk4_step(&mut derivative, t, dt, &y).unwrap();
        }
    }
}
