use crate::error::Result;

/// One classical fourth-order Runge–Kutta step of `x' = f(t, x)`.
///
/// `f` writes the derivative into its output slice and may fail (the
/// transient simulator solves the network inside it).
pub fn rk4_step<F>(t: f64, x: &[f64], dt: f64, mut f: F) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = x.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    f(t, x, &mut k1)?;
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k1[i];
    }
    f(t + 0.5 * dt, &tmp, &mut k2)?;
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k2[i];
    }
    f(t + 0.5 * dt, &tmp, &mut k3)?;
    for i in 0..n {
        tmp[i] = x[i] + dt * k3[i];
    }
    f(t + dt, &tmp, &mut k4)?;
    Ok((0..n).map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
}
