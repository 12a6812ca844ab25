//! Sub-grid-scale models.
//!
//! Every model produces a symmetric, trace-free SGS stress per node that
//! the viscous path adds to the molecular stress. Stresses follow the
//! kinematic convention `tau = -2 nu_t S^d`; the viscous path adds
//! `-rho tau`. The coefficient slot is used with the exponent each model
//! is written with: `C_S^2` for Smagorinsky and the high-pass (VMS)
//! variant, `C_S` and `C_cusp` linearly for plateau-cusp.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{Matrix, OperatorSet};
use crate::physics::{FlowGradient, Primitive};
use crate::tensor::{apply_3d, apply_xz};

pub type Tensor = [[f64; 3]; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SgsModelKind {
    #[default]
    None,
    Smagorinsky,
    Vms,
    PlateauCusp,
    DynamicSmagorinsky,
}

/// Averaging set for the dynamic coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Each plane of constant `y` node index inside a cell.
    #[default]
    YPlanes,
    /// Whole cell.
    Cell,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SgsConfig {
    pub model: SgsModelKind,
    /// Smagorinsky constant. Defaults per model: 0.12 (Smagorinsky, VMS),
    /// 0.13^2 (plateau-cusp, used linearly).
    pub c_s: Option<f64>,
    /// Cusp constant (used linearly).
    pub c_cusp: f64,
    /// Highest mode kept by the VMS low-pass; modes above feed the model.
    pub n_filter: usize,
    /// Test-filter degree of the dynamic procedure.
    pub n_testfilter: usize,
    /// Filter-width ratio factor multiplying the test-filtered term of `M_ij`.
    pub filter_ratio: f64,
    pub averaging: Averaging,
    /// Cut-off degree of the cusp profile; defaults to the solution degree.
    pub cusp_cutoff: Option<usize>,
    /// Turbulent Prandtl number; `None` means no turbulent heat flux.
    pub turbulent_prandtl: Option<f64>,
}

impl Default for SgsConfig {
    fn default() -> Self {
        Self {
            model: SgsModelKind::None,
            c_s: None,
            c_cusp: 0.33 * 0.33,
            n_filter: 3,
            n_testfilter: 3,
            filter_ratio: 2.3,
            averaging: Averaging::YPlanes,
            cusp_cutoff: None,
            turbulent_prandtl: None,
        }
    }
}

impl SgsConfig {
    pub fn c_s(&self) -> f64 {
        self.c_s.unwrap_or(match self.model {
            SgsModelKind::PlateauCusp => 0.13 * 0.13,
            _ => 0.12,
        })
    }

    pub fn validate(&self, degree: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.c_s() < 0.0 || self.c_cusp < 0.0 || self.filter_ratio < 0.0 {
            return bad("SGS constants must be non-negative".into());
        }
        match self.model {
            SgsModelKind::Vms if self.n_filter >= degree => {
                bad(format!("n_filter {} must be below degree {degree}", self.n_filter))
            }
            SgsModelKind::DynamicSmagorinsky if self.n_testfilter >= degree => bad(format!(
                "n_testfilter {} must be below degree {degree}",
                self.n_testfilter
            )),
            SgsModelKind::PlateauCusp if self.cusp_cutoff.is_some_and(|c| c > degree) => {
                bad("cusp cut-off exceeds the solution degree".into())
            }
            _ => Ok(()),
        }
    }
}

/// `(dx dy dz / (N+1)^3)^(1/3)`.
pub fn filter_width(cell_size: [f64; 3], degree: usize) -> f64 {
    (cell_size[0] * cell_size[1] * cell_size[2]).cbrt() / (degree + 1) as f64
}

/// `|S| = sqrt(2 S_ij S_ij)`.
#[inline]
pub fn strain_magnitude(s: &Tensor) -> f64 {
    let mut acc = 0.0;
    for row in s {
        for v in row {
            acc += v * v;
        }
    }
    (2.0 * acc).sqrt()
}

#[inline]
fn deviatoric(s: &Tensor) -> Tensor {
    let tr = (s[0][0] + s[1][1] + s[2][2]) / 3.0;
    let mut d = *s;
    for (i, row) in d.iter_mut().enumerate() {
        row[i] -= tr;
    }
    d
}

/// `-2 coeff |S| (S_ij - delta_ij S_kk / 3)`.
#[inline]
pub fn eddy_viscosity_stress(g: &FlowGradient, coeff: f64) -> Tensor {
    let s = g.strain();
    let mag = strain_magnitude(&s);
    let d = deviatoric(&s);
    d.map(|row| row.map(|v| -2.0 * coeff * mag * v))
}

/// Smagorinsky stress with coefficient `C_S^2 Delta^2`.
pub fn smagorinsky_stress(g: &FlowGradient, delta: f64, c_s: f64) -> Tensor {
    eddy_viscosity_stress(g, c_s * c_s * delta * delta)
}

/// Smagorinsky formula applied to high-pass filtered gradients.
pub fn vms_stress(filtered: &FlowGradient, delta: f64, c_s: f64) -> Tensor {
    smagorinsky_stress(filtered, delta, c_s)
}

/// Cusp part of the spectral eddy-viscosity profile,
/// `9.21 exp(-3.03 x)` with `x` the cut-off-to-mode ratio.
pub fn cusp_profile(cutoff_over_mode: f64) -> f64 {
    9.21 * (-3.03 * cutoff_over_mode).exp()
}

/// Modal amplitudes of the cusp high-pass: the profile evaluated at
/// `(N_c + 1) / (m + 1)` and normalized to one at `m = N_c`.
pub fn cusp_mode_weights(degree: usize, cutoff: usize) -> Vec<f64> {
    let top = cusp_profile(1.0);
    (0..=degree)
        .map(|m| cusp_profile((cutoff + 1) as f64 / (m + 1) as f64) / top)
        .collect()
}

/// Plateau-cusp stress: linear-coefficient Smagorinsky on the full
/// gradients plus the cusp term on the profile-filtered gradients.
pub fn plateau_cusp_stress(g: &FlowGradient, filtered: &FlowGradient, delta: f64, c_s: f64, c_cusp: f64) -> Tensor {
    let a = eddy_viscosity_stress(g, c_s * delta * delta);
    let b = eddy_viscosity_stress(filtered, c_cusp * delta * delta);
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] + b[i][j]))
}

/// SGS output at one node: stress added to the viscous stress
/// (`-rho tau`) and the eddy viscosity used for a turbulent heat flux.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SgsNode {
    pub stress: Tensor,
    pub mu_t: f64,
}

fn grad_to_array(g: &FlowGradient) -> [f64; 9] {
    std::array::from_fn(|q| g.dv[q / 3][q % 3])
}

fn array_to_grad(a: &[f64; 9]) -> FlowGradient {
    FlowGradient {
        dv: std::array::from_fn(|i| std::array::from_fn(|j| a[3 * i + j])),
        dt: [0.0; 3],
    }
}

/// Per-element evaluation of the configured model.
#[derive(Clone, Debug)]
pub struct SgsModel {
    pub config: SgsConfig,
    degree: usize,
    weights: Vec<f64>,
    /// Tensor-product low-pass for VMS.
    low_pass: Option<Matrix>,
    /// Modal transforms and per-mode weights for the cusp filter.
    cusp: Option<(Matrix, Matrix, Vec<f64>)>,
    /// 1D test filter for the dynamic model.
    test_filter: Option<Matrix>,
}

impl SgsModel {
    pub fn new(config: SgsConfig, ops: &OperatorSet) -> Result<Self> {
        config.validate(ops.degree)?;
        let degree = ops.degree;
        let low_pass = match config.model {
            SgsModelKind::Vms => Some(ops.cutoff_filter(config.n_filter)?),
            _ => None,
        };
        let cusp = match config.model {
            SgsModelKind::PlateauCusp => Some((
                ops.vandermonde.clone(),
                ops.vandermonde_inv.clone(),
                cusp_mode_weights(degree, config.cusp_cutoff.unwrap_or(degree)),
            )),
            _ => None,
        };
        let test_filter = match config.model {
            SgsModelKind::DynamicSmagorinsky => Some(ops.cutoff_filter(config.n_testfilter)?),
            _ => None,
        };
        Ok(Self {
            config,
            degree,
            weights: ops.weights.clone(),
            low_pass,
            cusp,
            test_filter,
        })
    }

    pub fn is_active(&self) -> bool {
        self.config.model != SgsModelKind::None
    }

    fn dims(&self) -> [usize; 3] {
        [self.degree + 1; 3]
    }

    /// High-pass `(I - L x L x L)` applied to the element velocity gradients.
    pub fn high_pass(&self, grads: &[FlowGradient]) -> Vec<FlowGradient> {
        let low = self.low_pass.as_ref().expect("VMS filter");
        let data: Vec<[f64; 9]> = grads.iter().map(grad_to_array).collect();
        let smooth = apply_3d(low, self.dims(), &data);
        data.iter()
            .zip(&smooth)
            .map(|(a, b)| array_to_grad(&std::array::from_fn(|q| a[q] - b[q])))
            .collect()
    }

    /// Modal weighting by the cusp profile of the largest mode index.
    pub fn cusp_filter(&self, grads: &[FlowGradient]) -> Vec<FlowGradient> {
        let (v, vinv, w) = self.cusp.as_ref().expect("cusp filter");
        let np = self.degree + 1;
        let data: Vec<[f64; 9]> = grads.iter().map(grad_to_array).collect();
        let mut modal = apply_3d(vinv, self.dims(), &data);
        for c in 0..np {
            for b in 0..np {
                for a in 0..np {
                    let s = w[a.max(b).max(c)];
                    modal[a + np * (b + np * c)].iter_mut().for_each(|x| *x *= s);
                }
            }
        }
        apply_3d(v, self.dims(), &modal).iter().map(array_to_grad).collect()
    }

    /// Dynamic coefficient `C Delta^2` per averaging set of one element
    /// (one value per `y` node plane, or a single value for cell
    /// averaging), clipped at zero.
    pub fn dynamic_coefficients(&self, prims: &[Primitive], grads: &[FlowGradient]) -> Vec<f64> {
        let filt = self.test_filter.as_ref().expect("test filter");
        let np = self.degree + 1;
        let dims = self.dims();
        let u: Vec<[f64; 3]> = prims.iter().map(|p| p.v).collect();
        let uu: Vec<[f64; 6]> = u
            .iter()
            .map(|v| [v[0] * v[0], v[0] * v[1], v[0] * v[2], v[1] * v[1], v[1] * v[2], v[2] * v[2]])
            .collect();
        let ss: Vec<[f64; 6]> = grads
            .iter()
            .map(|g| {
                let s = g.strain();
                let m = strain_magnitude(&s);
                let d = deviatoric(&s);
                [d[0][0], d[0][1], d[0][2], d[1][1], d[1][2], d[2][2]].map(|x| m * x)
            })
            .collect();
        let gr: Vec<[f64; 9]> = grads.iter().map(grad_to_array).collect();
        let fu = apply_xz(filt, dims, &u);
        let fuu = apply_xz(filt, dims, &uu);
        let fss = apply_xz(filt, dims, &ss);
        let fg = apply_xz(filt, dims, &gr);
        let ratio = self.config.filter_ratio;
        const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
        const MULT: [f64; 6] = [1.0, 2.0, 2.0, 1.0, 2.0, 1.0];
        let n_sets = match self.config.averaging {
            Averaging::YPlanes => np,
            Averaging::Cell => 1,
        };
        let mut num = vec![0.0; n_sets];
        let mut den = vec![0.0; n_sets];
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    let n = i + np * (j + np * k);
                    let g = array_to_grad(&fg[n]);
                    let s = g.strain();
                    let m = strain_magnitude(&s);
                    let d = deviatoric(&s);
                    let w = self.weights[i] * self.weights[k]
                        * if n_sets == 1 { self.weights[j] } else { 1.0 };
                    let set = if n_sets == 1 { 0 } else { j };
                    let mut lm = 0.0;
                    let mut mm = 0.0;
                    for (q, &(a, b)) in PAIRS.iter().enumerate() {
                        let l = fuu[n][q] - fu[n][a] * fu[n][b];
                        let mq = fss[n][q] - ratio * m * d[a][b];
                        lm += MULT[q] * l * mq;
                        mm += MULT[q] * mq * mq;
                    }
                    num[set] += w * lm;
                    den[set] += w * mm;
                }
            }
        }
        num.iter()
            .zip(&den)
            .map(|(&n, &d)| if d > 1e-30 { (0.5 * n / d).max(0.0) } else { 0.0 })
            .collect()
    }

    /// Fills `out` with the SGS stress of every node of one element.
    pub fn element(&self, cell_size: [f64; 3], prims: &[Primitive], grads: &[FlowGradient], out: &mut [SgsNode]) {
        let delta = filter_width(cell_size, self.degree);
        let c_s = self.config.c_s();
        let finish = |tau: Tensor, nu_t: f64, rho: f64| SgsNode {
            stress: tau.map(|row| row.map(|v| -rho * v)),
            mu_t: rho * nu_t,
        };
        match self.config.model {
            SgsModelKind::None => out.iter_mut().for_each(|o| *o = SgsNode::default()),
            SgsModelKind::Smagorinsky => {
                let c = c_s * c_s * delta * delta;
                for ((o, p), g) in out.iter_mut().zip(prims).zip(grads) {
                    let mag = strain_magnitude(&g.strain());
                    *o = finish(smagorinsky_stress(g, delta, c_s), c * mag, p.rho);
                }
            }
            SgsModelKind::Vms => {
                let c = c_s * c_s * delta * delta;
                let hp = self.high_pass(grads);
                for ((o, p), g) in out.iter_mut().zip(prims).zip(&hp) {
                    let mag = strain_magnitude(&g.strain());
                    *o = finish(vms_stress(g, delta, c_s), c * mag, p.rho);
                }
            }
            SgsModelKind::PlateauCusp => {
                let c_cusp = self.config.c_cusp;
                let cf = self.cusp_filter(grads);
                for (((o, p), g), f) in out.iter_mut().zip(prims).zip(grads).zip(&cf) {
                    let nu = delta * delta
                        * (c_s * strain_magnitude(&g.strain()) + c_cusp * strain_magnitude(&f.strain()));
                    *o = finish(plateau_cusp_stress(g, f, delta, c_s, c_cusp), nu, p.rho);
                }
            }
            SgsModelKind::DynamicSmagorinsky => {
                let coeffs = self.dynamic_coefficients(prims, grads);
                let np = self.degree + 1;
                for (n, ((o, p), g)) in out.iter_mut().zip(prims).zip(grads).enumerate() {
                    let j = (n / np) % np;
                    let c = if coeffs.len() == 1 { coeffs[0] } else { coeffs[j] };
                    let mag = strain_magnitude(&g.strain());
                    *o = finish(eddy_viscosity_stress(g, c), c * mag, p.rho);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shear(a: f64) -> FlowGradient {
        let mut g = FlowGradient::default();
        g.dv[0][1] = a;
        g
    }

    #[test]
    fn width_of_cube_cell() {
        assert!((filter_width([0.3; 3], 7) - 0.3 / 8.0).abs() < 1e-16);
        assert!((filter_width([0.3; 3], 0) - 0.3).abs() < 1e-16);
        let h = std::f64::consts::PI / 3.0;
        assert!((filter_width([h; 3], 7) - h / 8.0).abs() < 1e-15);
    }

    #[test]
    fn smagorinsky_pure_shear() {
        let (c, d) = (0.12, 0.05);
        for a in [2.0, -3.0] {
            let t = smagorinsky_stress(&shear(a), d, c);
            let expect = -c * c * d * d * a * a.abs();
            assert!((t[0][1] - expect).abs() < 1e-16);
            assert!((t[1][0] - expect).abs() < 1e-16);
        }
    }

    #[test]
    fn zero_gradient_zero_stress() {
        let g = FlowGradient::default();
        assert_eq!(smagorinsky_stress(&g, 0.1, 0.12), [[0.0; 3]; 3]);
        assert_eq!(plateau_cusp_stress(&g, &g, 0.1, 0.0169, 0.1089), [[0.0; 3]; 3]);
    }

    #[test]
    fn cusp_profile_value_at_cutoff() {
        assert!((cusp_profile(1.0) - 0.4450).abs() < 5e-5);
        let w = cusp_mode_weights(7, 7);
        assert!((w[7] - 1.0).abs() < 1e-15);
        assert!(w.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn defaults_match_model() {
        let mut c = SgsConfig {
            model: SgsModelKind::PlateauCusp,
            ..Default::default()
        };
        assert!((c.c_s() - 0.0169).abs() < 1e-15);
        assert!((c.c_cusp - 0.1089).abs() < 1e-15);
        c.model = SgsModelKind::Smagorinsky;
        assert_eq!(c.c_s(), 0.12);
    }

    #[test]
    fn filter_degrees_validated() {
        let c = SgsConfig {
            model: SgsModelKind::Vms,
            n_filter: 7,
            ..Default::default()
        };
        assert!(c.validate(7).is_err());
        let c = SgsConfig {
            model: SgsModelKind::DynamicSmagorinsky,
            n_testfilter: 3,
            ..Default::default()
        };
        assert!(c.validate(7).is_ok());
    }
}
