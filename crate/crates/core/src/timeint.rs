//! Five-stage fourth-order low-storage Runge-Kutta (2N storage) and the
//! advective time-step estimate.

use crate::error::{Error, Result};
use crate::field::ConservedField;
use crate::physics::{State, NVAR};
use crate::spatial::Discretization;

/// Stage coefficients of the Carpenter-Kennedy five-stage scheme.
pub const RK_A: [f64; 5] = [
    0.0,
    -567301805773.0 / 1357537059087.0,
    -2404267990393.0 / 2016746695238.0,
    -3550918686646.0 / 2091501179385.0,
    -1275806237668.0 / 842570457699.0,
];
pub const RK_B: [f64; 5] = [
    1432997174477.0 / 9575080441755.0,
    5161836677717.0 / 13612068292357.0,
    1720146321549.0 / 2090206949498.0,
    3134564353537.0 / 4481467310338.0,
    2277821191437.0 / 14882151754819.0,
];
pub const RK_C: [f64; 5] = [
    0.0,
    1432997174477.0 / 9575080441755.0,
    2526269341429.0 / 6820363962896.0,
    2006345519317.0 / 3224310063776.0,
    2802321613138.0 / 2924317926251.0,
];

/// One low-storage step on a flat state vector. `rhs(t, u, du_dt)` fills
/// the time derivative; `acc` is the second register and is overwritten.
pub fn lsrk_step_flat<E>(
    u: &mut [f64],
    acc: &mut [f64],
    rate: &mut [f64],
    t: f64,
    dt: f64,
    mut rhs: impl FnMut(f64, &[f64], &mut [f64]) -> std::result::Result<(), E>,
) -> std::result::Result<(), (usize, E)> {
    for s in 0..5 {
        rhs(t + RK_C[s] * dt, u, rate).map_err(|e| (s, e))?;
        let a = RK_A[s];
        let b = RK_B[s];
        for ((ui, ai), ri) in u.iter_mut().zip(acc.iter_mut()).zip(rate.iter()) {
            *ai = a * *ai + dt * ri;
            *ui += b * *ai;
        }
    }
    Ok(())
}

/// Integrator owning the accumulator and stage-rate buffers.
pub struct TimeIntegrator {
    acc: Vec<State>,
    rate: Vec<State>,
}

impl TimeIntegrator {
    pub fn new(n_nodes: usize) -> Self {
        Self {
            acc: vec![[0.0; NVAR]; n_nodes],
            rate: vec![[0.0; NVAR]; n_nodes],
        }
    }

    /// Advances `field` by `dt` with `disc` as the right-hand side.
    pub fn step(&mut self, disc: &Discretization, field: &mut ConservedField, dt: f64) -> Result<()> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        let t0 = field.time;
        let mesh = field.mesh.clone();
        let degree = field.degree;
        let data = std::mem::take(&mut field.data);
        let mut stage = ConservedField {
            mesh,
            degree,
            time: t0,
            data,
        };
        let n = stage.data.len();
        self.acc.resize(n, [0.0; NVAR]);
        self.rate.resize(n, [0.0; NVAR]);
        self.acc.iter_mut().for_each(|a| *a = [0.0; NVAR]);
        let mut result = Ok(());
        for s in 0..5 {
            stage.time = t0 + RK_C[s] * dt;
            if let Err(e) = disc.compute_rhs(&stage, &mut self.rate) {
                result = Err(e.with_context(format!("t = {:.6e}, RK stage {}", stage.time, s + 1)));
                break;
            }
            let a = RK_A[s];
            let b = RK_B[s];
            let u = stage.data.as_flattened_mut();
            let acc = self.acc.as_flattened_mut();
            let rate = self.rate.as_flattened();
            for ((ui, ai), ri) in u.iter_mut().zip(acc.iter_mut()).zip(rate) {
                *ai = a * *ai + dt * ri;
                *ui += b * *ai;
            }
        }
        field.data = stage.data;
        if result.is_ok() {
            field.time = t0 + dt;
        }
        result
    }
}

/// `CFL * min (dx_l / 2) / ((|v_l| + c) (N + 1)^2)` over nodes and
/// directions.
pub fn compute_dt(field: &ConservedField, disc: &Discretization, cfl: f64) -> Result<f64> {
    if !(cfl > 0.0) {
        return Err(Error::InvalidArgument(format!("CFL must be positive, got {cfl}")));
    }
    let npe = field.nodes_per_element();
    let np2 = ((field.degree + 1) * (field.degree + 1)) as f64;
    let mut dt = f64::INFINITY;
    for (k, u) in field.data.iter().enumerate() {
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("state at element {}, node {}", k / npe, k % npe)));
        }
        let p = disc.gas.primitive(u).map_err(|b| Error::InvalidState {
            element: k / npe,
            node: k % npe,
            density: b.density,
            pressure: b.pressure,
            context: Some("time-step estimate".into()),
        })?;
        let c = disc.gas.sound_speed(&p);
        let size = field.mesh.cell_size(k / npe);
        for d in 0..3 {
            let local = 0.5 * size[d] / ((p.v[d].abs() + c) * np2);
            dt = dt.min(local);
        }
    }
    Ok(cfl * dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(n: usize) -> f64 {
        let dt = 1.0 / n as f64;
        let mut u = vec![1.0];
        let mut acc = vec![0.0];
        let mut rate = vec![0.0];
        for i in 0..n {
            lsrk_step_flat::<()>(&mut u, &mut acc, &mut rate, i as f64 * dt, dt, |_, u, r| {
                r[0] = -u[0];
                Ok(())
            })
            .unwrap();
        }
        u[0]
    }

    #[test]
    fn order_four_on_decay() {
        let exact = (-1.0f64).exp();
        let e1 = (integrate(8) - exact).abs();
        let e2 = (integrate(16) - exact).abs();
        let order = (e1 / e2).log2();
        assert!((order - 4.0).abs() < 0.2, "order {order}");
    }

    #[test]
    fn constant_rate_exact() {
        let mut u = vec![2.0];
        let mut acc = vec![0.0];
        let mut rate = vec![0.0];
        lsrk_step_flat::<()>(&mut u, &mut acc, &mut rate, 0.0, 0.25, |_, _, r| {
            r[0] = 3.0;
            Ok(())
        })
        .unwrap();
        assert!((u[0] - 2.75).abs() < 1e-15);
    }

    #[test]
    fn zero_rate_bitwise() {
        let mut u = vec![0.1, 1.0 / 3.0];
        let before = u.clone();
        let mut acc = vec![0.0; 2];
        let mut rate = vec![0.0; 2];
        lsrk_step_flat::<()>(&mut u, &mut acc, &mut rate, 0.0, 0.1, |_, _, r| {
            r.iter_mut().for_each(|v| *v = 0.0);
            Ok(())
        })
        .unwrap();
        assert_eq!(u, before);
    }

    #[test]
    fn time_dependent_rate_uses_stage_times() {
        // u' = 4 t^3 integrates exactly by an order-4 scheme
        let mut u = vec![0.0];
        let mut acc = vec![0.0];
        let mut rate = vec![0.0];
        lsrk_step_flat::<()>(&mut u, &mut acc, &mut rate, 0.0, 1.0, |t, _, r| {
            r[0] = 4.0 * t * t * t;
            Ok(())
        })
        .unwrap();
        assert!((u[0] - 1.0).abs() < 1e-12);
    }
}
