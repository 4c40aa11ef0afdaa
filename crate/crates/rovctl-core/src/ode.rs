//! Fixed-step classical Runge-Kutta integration.

use nalgebra::SVector;

use crate::error::{Error, Result};

/// One classical fourth-order Runge-Kutta step of `y' = f(t, y)`.
///
/// Whatever the derivative closure captures (control force, disturbance) is
/// held by the caller for the whole step; this routine only evaluates the
/// four stages. A non-finite stage aborts with a diagnostic.
pub fn rk4_step<const N: usize, F>(
    derivative: &mut F,
    t: f64,
    dt: f64,
    state: &SVector<f64, N>,
) -> Result<SVector<f64, N>>
where
    F: FnMut(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    let half = 0.5 * dt;
    let k1 = derivative(t, state);
    let k2 = derivative(t + half, &(state + k1 * half));
    let k3 = derivative(t + half, &(state + k2 * half));
    let k4 = derivative(t + dt, &(state + k3 * dt));
    for k in [&k1, &k2, &k3, &k4] {
        if !k.iter().all(|v| v.is_finite()) {
            return Err(Error::Diverged {
                t,
                detail: "non-finite derivative".into(),
            });
        }
    }
    Ok(state + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}
