//! Perfect-gas model, state conversions and the flux functions.
//!
//! Directions are zero-based: `dir = 0, 1, 2` for `x, y, z`.

use std::fmt;

use serde::{Deserialize, Serialize};

pub const NVAR: usize = 5;

/// Conservative state `(rho, rho v1, rho v2, rho v3, rho e)`.
pub type State = [f64; NVAR];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GasModel {
    /// Ratio of specific heats.
    pub kappa: f64,
    /// Gas constant.
    pub r: f64,
    /// Dynamic viscosity (constant).
    pub mu: f64,
    /// Prandtl number.
    pub pr: f64,
}

impl Default for GasModel {
    fn default() -> Self {
        Self {
            kappa: 1.4,
            r: 1.0,
            mu: 0.0,
            pr: 0.72,
        }
    }
}

/// Nonpositive density or pressure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BadState {
    pub density: f64,
    pub pressure: f64,
}

impl fmt::Display for BadState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "density {:e}, pressure {:e}", self.density, self.pressure)
    }
}

impl std::error::Error for BadState {}

/// Primitive view of a state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Primitive {
    pub rho: f64,
    pub v: [f64; 3],
    pub p: f64,
    /// Specific total enthalpy `(rho e + p) / rho`.
    pub h: f64,
}

impl GasModel {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.kappa > 1.0) {
            return Err(format!("kappa must exceed 1, got {}", self.kappa));
        }
        if !(self.r > 0.0) {
            return Err(format!("gas constant must be positive, got {}", self.r));
        }
        if !(self.mu >= 0.0) {
            return Err(format!("viscosity must be non-negative, got {}", self.mu));
        }
        if !(self.pr > 0.0) {
            return Err(format!("Prandtl number must be positive, got {}", self.pr));
        }
        Ok(())
    }

    #[inline]
    pub fn cv(&self) -> f64 {
        self.r / (self.kappa - 1.0)
    }

    #[inline]
    pub fn cp(&self) -> f64 {
        self.kappa * self.cv()
    }

    /// Thermal conductivity `mu c_p / Pr`.
    #[inline]
    pub fn conductivity(&self) -> f64 {
        self.mu * self.cp() / self.pr
    }

    #[inline]
    pub fn primitive(&self, u: &State) -> Result<Primitive, BadState> {
        let rho = u[0];
        let inv = 1.0 / rho;
        let v = [u[1] * inv, u[2] * inv, u[3] * inv];
        let kinetic = 0.5 * (u[1] * v[0] + u[2] * v[1] + u[3] * v[2]);
        let p = (self.kappa - 1.0) * (u[4] - kinetic);
        // written so that NaN fails the check as well
        if !(rho > 0.0) || !(p > 0.0) {
            return Err(BadState {
                density: rho,
                pressure: p,
            });
        }
        Ok(Primitive {
            rho,
            v,
            p,
            h: (u[4] + p) * inv,
        })
    }

    #[inline]
    pub fn conservative(&self, rho: f64, v: [f64; 3], p: f64) -> State {
        let ke = 0.5 * rho * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        [rho, rho * v[0], rho * v[1], rho * v[2], p / (self.kappa - 1.0) + ke]
    }

    #[inline]
    pub fn temperature(&self, prim: &Primitive) -> f64 {
        prim.p / (prim.rho * self.r)
    }

    #[inline]
    pub fn sound_speed(&self, prim: &Primitive) -> f64 {
        (self.kappa * prim.p / prim.rho).sqrt()
    }
}

/// Advective flux in direction `dir`.
#[inline]
pub fn euler_flux(prim: &Primitive, dir: usize) -> State {
    let vn = prim.v[dir];
    let mass = prim.rho * vn;
    let mut f = [
        mass,
        mass * prim.v[0],
        mass * prim.v[1],
        mass * prim.v[2],
        mass * prim.h,
    ];
    f[1 + dir] += prim.p;
    f
}

/// Symmetric kinetic-energy-preserving two-point flux: products of
/// arithmetic means `{{rho}} {{u}}`, `{{rho}} {{u}} {{v_j}} + {{p}}`,
/// `{{rho}} {{u}} {{h}}`, with `u` the velocity in `dir`.
#[inline]
pub fn pi_two_point_flux(a: &Primitive, b: &Primitive, dir: usize) -> State {
    let rho = 0.5 * (a.rho + b.rho);
    let v = [
        0.5 * (a.v[0] + b.v[0]),
        0.5 * (a.v[1] + b.v[1]),
        0.5 * (a.v[2] + b.v[2]),
    ];
    let p = 0.5 * (a.p + b.p);
    let h = 0.5 * (a.h + b.h);
    let mass = rho * v[dir];
    let mut f = [mass, mass * v[0], mass * v[1], mass * v[2], mass * h];
    f[1 + dir] += p;
    f
}

/// Which interface dissipation is added to the central flux.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfaceFlux {
    /// No dissipation.
    CentralPi,
    LaxFriedrichs,
    Roe,
    /// Roe with velocity jumps scaled by the interface Mach number.
    L2roe,
}

/// Central part of an interface flux.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentralPart {
    /// Two-point flux of the two traces.
    Pi,
    /// Arithmetic mean of the physical fluxes.
    Mean,
}

#[inline]
fn mean_flux(l: &Primitive, r: &Primitive, dir: usize) -> State {
    let fl = euler_flux(l, dir);
    let fr = euler_flux(r, dir);
    std::array::from_fn(|k| 0.5 * (fl[k] + fr[k]))
}

#[inline]
fn sub(a: State, b: State) -> State {
    std::array::from_fn(|k| a[k] - b[k])
}

/// `1/2 lambda_max (U_R - U_L)` with `lambda_max = max |v_dir| + c`.
pub fn lax_friedrichs_dissipation(
    gas: &GasModel,
    ul: &State,
    ur: &State,
    l: &Primitive,
    r: &Primitive,
    dir: usize,
) -> State {
    let lam = (l.v[dir].abs() + gas.sound_speed(l)).max(r.v[dir].abs() + gas.sound_speed(r));
    std::array::from_fn(|k| 0.5 * lam * (ur[k] - ul[k]))
}

/// Harten entropy fix width relative to `|u| + c`.
pub const ENTROPY_FIX: f64 = 0.05;

#[inline]
fn harten(lambda: f64, delta: f64) -> f64 {
    let a = lambda.abs();
    if a >= delta {
        a
    } else {
        (lambda * lambda + delta * delta) / (2.0 * delta)
    }
}

/// Roe matrix dissipation `1/2 |A_roe| dU`, written in wave strengths of the
/// primitive jumps. `velocity_scale` multiplies the normal and tangential
/// velocity jumps; `None` selects `min(1, M_roe)` (low-Mach variant).
pub fn roe_dissipation(
    gas: &GasModel,
    l: &Primitive,
    r: &Primitive,
    dir: usize,
    velocity_scale: Option<f64>,
) -> State {
    let sl = l.rho.sqrt();
    let sr = r.rho.sqrt();
    let inv = 1.0 / (sl + sr);
    let v: [f64; 3] = std::array::from_fn(|k| (sl * l.v[k] + sr * r.v[k]) * inv);
    let h = (sl * l.h + sr * r.h) * inv;
    let q2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    let c2 = (gas.kappa - 1.0) * (h - 0.5 * q2);
    let c = c2.sqrt();
    let rho = sl * sr;
    let un = v[dir];

    let z = velocity_scale.unwrap_or_else(|| (q2.sqrt() / c).min(1.0));
    let dv: [f64; 3] = std::array::from_fn(|k| z * (r.v[k] - l.v[k]));
    let drho = r.rho - l.rho;
    let dp = r.p - l.p;

    let delta = ENTROPY_FIX * (un.abs() + c);
    let lam1 = harten(un - c, delta);
    let lam2 = un.abs();
    let lam5 = harten(un + c, delta);

    let a1 = (dp - rho * c * dv[dir]) / (2.0 * c2);
    let a5 = (dp + rho * c * dv[dir]) / (2.0 * c2);
    let a2 = drho - dp / c2;

    let mut d = [0.0; NVAR];
    // acoustic waves
    let w1 = lam1 * a1;
    let w5 = lam5 * a5;
    d[0] += w1 + w5;
    for k in 0..3 {
        d[1 + k] += w1 * v[k] + w5 * v[k];
    }
    d[1 + dir] += -w1 * c + w5 * c;
    d[4] += w1 * (h - un * c) + w5 * (h + un * c);
    // entropy wave
    let w2 = lam2 * a2;
    d[0] += w2;
    for k in 0..3 {
        d[1 + k] += w2 * v[k];
    }
    d[4] += w2 * 0.5 * q2;
    // shear waves
    for m in (0..3).filter(|&m| m != dir) {
        let wt = lam2 * rho * dv[m];
        d[1 + m] += wt;
        d[4] += wt * v[m];
    }
    d.map(|x| 0.5 * x)
}

/// Lax-Friedrichs flux.
pub fn lax_friedrichs_flux(gas: &GasModel, ul: &State, ur: &State, dir: usize) -> Result<State, BadState> {
    let l = gas.primitive(ul)?;
    let r = gas.primitive(ur)?;
    Ok(sub(mean_flux(&l, &r, dir), lax_friedrichs_dissipation(gas, ul, ur, &l, &r, dir)))
}

/// Roe flux with Harten entropy fix on the acoustic waves.
pub fn roe_flux(gas: &GasModel, ul: &State, ur: &State, dir: usize) -> Result<State, BadState> {
    let l = gas.primitive(ul)?;
    let r = gas.primitive(ur)?;
    Ok(sub(mean_flux(&l, &r, dir), roe_dissipation(gas, &l, &r, dir, Some(1.0))))
}

/// Low-dissipation Roe flux: velocity jumps scaled by `min(1, M_roe)`.
pub fn l2roe_flux(gas: &GasModel, ul: &State, ur: &State, dir: usize) -> Result<State, BadState> {
    let l = gas.primitive(ul)?;
    let r = gas.primitive(ur)?;
    Ok(sub(mean_flux(&l, &r, dir), roe_dissipation(gas, &l, &r, dir, None)))
}

/// Interface flux from traces already converted to primitives.
#[inline]
pub fn interface_flux(
    gas: &GasModel,
    kind: InterfaceFlux,
    central: CentralPart,
    ul: &State,
    ur: &State,
    l: &Primitive,
    r: &Primitive,
    dir: usize,
) -> State {
    let c = match central {
        CentralPart::Pi => pi_two_point_flux(l, r, dir),
        CentralPart::Mean => mean_flux(l, r, dir),
    };
    match kind {
        InterfaceFlux::CentralPi => c,
        InterfaceFlux::LaxFriedrichs => sub(c, lax_friedrichs_dissipation(gas, ul, ur, l, r, dir)),
        InterfaceFlux::Roe => sub(c, roe_dissipation(gas, l, r, dir, Some(1.0))),
        InterfaceFlux::L2roe => sub(c, roe_dissipation(gas, l, r, dir, None)),
    }
}

/// Velocity and temperature gradients. `dv[i][j] = d v_i / d x_j`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FlowGradient {
    pub dv: [[f64; 3]; 3],
    pub dt: [f64; 3],
}

impl FlowGradient {
    /// Chain rule from conservative-variable gradients; `grad[j]` holds
    /// `dU/dx_j`.
    #[inline]
    pub fn from_conservative(gas: &GasModel, prim: &Primitive, grad: &[State; 3]) -> Self {
        let inv = 1.0 / prim.rho;
        let v = prim.v;
        let q2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        let mut out = FlowGradient::default();
        for j in 0..3 {
            let g = &grad[j];
            for i in 0..3 {
                out.dv[i][j] = (g[1 + i] - v[i] * g[0]) * inv;
            }
            // dp = (k-1) (d(rho e) - v . d(rho v) + 1/2 |v|^2 d rho)
            let dp = (gas.kappa - 1.0)
                * (g[4] - (v[0] * g[1] + v[1] * g[2] + v[2] * g[3]) + 0.5 * q2 * g[0]);
            out.dt[j] = (dp - prim.p * inv * g[0]) * inv / gas.r;
        }
        out
    }

    #[inline]
    pub fn divergence(&self) -> f64 {
        self.dv[0][0] + self.dv[1][1] + self.dv[2][2]
    }

    /// Strain rate `S_ij = (dv_i/dx_j + dv_j/dx_i) / 2`.
    #[inline]
    pub fn strain(&self) -> [[f64; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (self.dv[i][j] + self.dv[j][i])))
    }
}

/// Viscous flux column for direction `dir` with effective viscosity and
/// conductivity (molecular plus eddy contributions).
#[inline]
pub fn viscous_flux_kernel(v: &[f64; 3], g: &FlowGradient, dir: usize, mu: f64, conductivity: f64) -> State {
    let div = g.divergence();
    let mut f = [0.0; NVAR];
    let mut work = 0.0;
    for i in 0..3 {
        let mut tau = mu * (g.dv[i][dir] + g.dv[dir][i]);
        if i == dir {
            tau -= mu * (2.0 / 3.0) * div;
        }
        f[1 + i] = tau;
        work += tau * v[i];
    }
    f[4] = work + conductivity * g.dt[dir];
    f
}

/// Newtonian viscous flux (Stokes hypothesis, Fourier heat flux) in `dir`.
pub fn viscous_flux(gas: &GasModel, u: &State, grad: &[State; 3], dir: usize) -> Result<State, BadState> {
    let prim = gas.primitive(u)?;
    let g = FlowGradient::from_conservative(gas, &prim, grad);
    Ok(viscous_flux_kernel(&prim.v, &g, dir, gas.mu, gas.conductivity()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gas() -> GasModel {
        GasModel::default()
    }

    #[test]
    fn stagnant_state() {
        let p = gas().primitive(&[1.0, 0.0, 0.0, 0.0, 2.5]).unwrap();
        assert_eq!(p.v, [0.0; 3]);
        assert!((p.p - 1.0).abs() < 1e-15);
        let f = euler_flux(&p, 0);
        let expect = [0.0, 1.0, 0.0, 0.0, 0.0];
        for k in 0..5 {
            assert!((f[k] - expect[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn moving_state_pressure_and_flux() {
        let p = gas().primitive(&[2.0, 2.0, 0.0, 0.0, 3.5]).unwrap();
        assert_eq!(p.v, [1.0, 0.0, 0.0]);
        assert!((p.p - 1.0).abs() < 1e-15);
        let f = euler_flux(&p, 0);
        let expect = [2.0, 3.0, 0.0, 0.0, 4.5];
        for k in 0..5 {
            assert!((f[k] - expect[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn negative_internal_energy_rejected() {
        assert!(gas().primitive(&[1.0, 2.0, 0.0, 0.0, 1.0]).is_err());
        assert!(gas().primitive(&[-1.0, 0.0, 0.0, 0.0, 1.0]).is_err());
        assert!(gas().primitive(&[f64::NAN, 0.0, 0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn pi_flux_hand_evaluation() {
        // L: rho=1,u=1,p=1 ; R: rho=3,u=2,p=2 ; kappa 1.4
        // h_L = (p/(k-1) + rho u^2/2 + p)/rho = 4, h_R = 13/3
        let g = gas();
        let ul = g.conservative(1.0, [1.0, 0.0, 0.0], 1.0);
        let ur = g.conservative(3.0, [2.0, 0.0, 0.0], 2.0);
        let l = g.primitive(&ul).unwrap();
        let r = g.primitive(&ur).unwrap();
        assert!((l.h - 4.0).abs() < 1e-14);
        assert!((r.h - 13.0 / 3.0).abs() < 1e-14);
        let f = pi_two_point_flux(&l, &r, 0);
        assert!((f[0] - 3.0).abs() < 1e-14);
        assert!((f[1] - 6.0).abs() < 1e-14);
        assert_eq!(f[2], 0.0);
        assert_eq!(f[3], 0.0);
        assert!((f[4] - 12.5).abs() < 1e-13);
    }

    #[test]
    fn lax_friedrichs_density_jump() {
        let g = gas();
        let ul = g.conservative(1.0, [0.0; 3], 1.0);
        let ur = g.conservative(2.0, [0.0; 3], 1.0);
        let f = lax_friedrichs_flux(&g, &ul, &ur, 0).unwrap();
        let lam = (1.4f64 / 1.0).sqrt();
        assert!((f[0] + 0.5 * lam * 1.0).abs() < 1e-14);
        assert!((f[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn stationary_contact_is_exact() {
        let g = gas();
        let ul = g.conservative(1.0, [0.0; 3], 1.0);
        let ur = g.conservative(5.0, [0.0; 3], 1.0);
        for f in [roe_flux(&g, &ul, &ur, 0).unwrap(), l2roe_flux(&g, &ul, &ur, 0).unwrap()] {
            assert!(f[0].abs() < 1e-15);
            assert!((f[1] - 1.0).abs() < 1e-15);
            assert!(f[4].abs() < 1e-15);
        }
    }

    #[test]
    fn supersonic_roe_is_upwind() {
        let g = gas();
        let ul = g.conservative(1.0, [3.0, 0.1, 0.0], 1.0);
        let ur = g.conservative(1.1, [3.1, 0.0, 0.2], 1.05);
        let f = roe_flux(&g, &ul, &ur, 0).unwrap();
        let fl = euler_flux(&g.primitive(&ul).unwrap(), 0);
        for k in 0..5 {
            assert!((f[k] - fl[k]).abs() < 1e-12, "{k}: {} vs {}", f[k], fl[k]);
        }
    }

    #[test]
    fn l2roe_matches_roe_above_mach_one() {
        let g = gas();
        let ul = g.conservative(1.0, [2.0, 0.3, 0.0], 1.0);
        let ur = g.conservative(1.2, [1.8, 0.0, -0.2], 1.3);
        assert_eq!(roe_flux(&g, &ul, &ur, 0).unwrap(), l2roe_flux(&g, &ul, &ur, 0).unwrap());
    }

    #[test]
    fn zero_gradient_zero_viscous_flux() {
        let g = GasModel { mu: 0.1, ..gas() };
        let u = g.conservative(1.2, [0.3, -0.1, 0.5], 2.0);
        for d in 0..3 {
            assert_eq!(viscous_flux(&g, &u, &[[0.0; 5]; 3], d).unwrap(), [0.0; 5]);
        }
    }

    #[test]
    fn pure_shear_stress() {
        let mu = 0.3;
        let a = 2.0;
        let v = [0.7, 0.0, 0.0];
        let mut grad = FlowGradient::default();
        grad.dv[0][1] = a;
        let f = viscous_flux_kernel(&v, &grad, 1, mu, 0.0);
        assert!((f[1] - mu * a).abs() < 1e-15);
        assert!((f[4] - mu * a * v[0]).abs() < 1e-15);
        let f0 = viscous_flux_kernel(&v, &grad, 0, mu, 0.0);
        assert!((f0[2] - mu * a).abs() < 1e-15);
        assert_eq!(f0[1], 0.0);
    }

    #[test]
    fn isotropic_dilation_has_no_normal_stress() {
        let mut grad = FlowGradient::default();
        for i in 0..3 {
            grad.dv[i][i] = 1.5;
        }
        for d in 0..3 {
            let f = viscous_flux_kernel(&[0.0; 3], &grad, d, 1.0, 0.0);
            assert!(f[1 + d].abs() < 1e-15);
        }
    }
}
