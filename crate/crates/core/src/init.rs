//! Initial conditions and case setup for the Taylor-Green vortex, decaying
//! isotropic turbulence and the turbulent channel.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{node_position, ConservedField};
use crate::mesh::{BoundaryKind, Mesh};
use crate::operators::lgl_nodes_weights;
use crate::physics::GasModel;
use crate::spatial::WallCondition;

fn require_periodic_box(mesh: &Mesh, what: &str) -> Result<()> {
    if !mesh.is_fully_periodic() {
        return Err(Error::InvalidArgument(format!("{what} needs a fully periodic mesh")));
    }
    Ok(())
}

/// Taylor-Green vortex with `rho0 = 1`, velocity scale `v0` and
/// background pressure `rho0 v0^2 / (kappa Ma^2)`.
pub fn init_taylor_green(mesh: Arc<Mesh>, degree: usize, gas: &GasModel, mach: f64, v0: f64) -> Result<ConservedField> {
    require_periodic_box(&mesh, "Taylor-Green vortex")?;
    let rho0 = 1.0;
    let (v0, p0) = if mach > 0.0 {
        (v0, rho0 * v0 * v0 / (gas.kappa * mach * mach))
    } else {
        log::warn!("Taylor-Green vortex at Mach {mach}: velocity set to zero");
        (0.0, rho0 / gas.kappa)
    };
    let (nodes, _) = lgl_nodes_weights(degree)?;
    let mut field = ConservedField::zeros(mesh, degree);
    field.fill(&nodes, |x| {
        let (sx, cx) = x[0].sin_cos();
        let (sy, cy) = x[1].sin_cos();
        let cz = x[2].cos();
        let v = [v0 * sx * cy * cz, -v0 * cx * sy * cz, 0.0];
        let p = p0
            + rho0 * v0 * v0 / 16.0 * ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) * ((2.0 * x[2]).cos() + 2.0);
        gas.conservative(rho0, v, p)
    });
    Ok(field)
}

/// Model spectrum `E0 (k/kp)^4 exp(-2 (k/kp)^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumShape {
    pub k_peak: f64,
    pub e0: f64,
}

impl SpectrumShape {
    pub fn energy(&self, k: f64) -> f64 {
        let r = k / self.k_peak;
        self.e0 * r.powi(4) * (-2.0 * r * r).exp()
    }
}

/// Real periodic velocity field stored as Fourier coefficients on the
/// `2 pi`-periodic cube, `v(x) = sum c(kappa) exp(i kappa . x)`.
#[derive(Clone, Debug)]
pub struct FourierVelocity {
    /// Largest wavenumber component kept.
    pub k_max: i32,
    pub modes: Vec<([i32; 3], [Complex64; 3])>,
}

impl FourierVelocity {
    /// Shell energies `sum 1/2 |c|^2` over `round(|kappa|) = k`.
    pub fn shell_energy(&self) -> Vec<f64> {
        let n = (self.k_max as f64 * 3f64.sqrt()).ceil() as usize + 2;
        let mut e = vec![0.0; n];
        for (k, c) in &self.modes {
            let s = shell_of(k);
            e[s] += 0.5 * c.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        e
    }

    /// Evaluates the series on the tensor grid `xs[0] x xs[1] x xs[2]`
    /// (index `i + n0 (j + n1 k)`), separably one direction at a time.
    pub fn evaluate(&self, xs: [&[f64]; 3]) -> Vec<[f64; 3]> {
        let km = self.k_max;
        let nk = (2 * km + 1) as usize;
        let idx = |k: i32| (k + km) as usize;
        // dense coefficient cube c[kx][ky][kz]
        let mut cube = vec![[Complex64::new(0.0, 0.0); 3]; nk * nk * nk];
        for (k, c) in &self.modes {
            cube[idx(k[0]) + nk * (idx(k[1]) + nk * idx(k[2]))] = *c;
        }
        let phase = |x: f64| -> Vec<Complex64> {
            (-km..=km).map(|k| Complex64::from_polar(1.0, k as f64 * x)).collect()
        };
        let [n0, n1, n2] = [xs[0].len(), xs[1].len(), xs[2].len()];
        // sum over kz: t1[kx][ky][z]
        let mut t1 = vec![[Complex64::new(0.0, 0.0); 3]; nk * nk * n2];
        for (zi, &z) in xs[2].iter().enumerate() {
            let ph = phase(z);
            for ky in 0..nk {
                for kx in 0..nk {
                    let mut acc = [Complex64::new(0.0, 0.0); 3];
                    for (kz, p) in ph.iter().enumerate() {
                        let c = &cube[kx + nk * (ky + nk * kz)];
                        for q in 0..3 {
                            acc[q] += c[q] * p;
                        }
                    }
                    t1[kx + nk * (ky + nk * zi)] = acc;
                }
            }
        }
        // sum over ky: t2[kx][y][z]
        let mut t2 = vec![[Complex64::new(0.0, 0.0); 3]; nk * n1 * n2];
        for (yi, &y) in xs[1].iter().enumerate() {
            let ph = phase(y);
            for zi in 0..n2 {
                for kx in 0..nk {
                    let mut acc = [Complex64::new(0.0, 0.0); 3];
                    for (ky, p) in ph.iter().enumerate() {
                        let c = &t1[kx + nk * (ky + nk * zi)];
                        for q in 0..3 {
                            acc[q] += c[q] * p;
                        }
                    }
                    t2[kx + nk * (yi + n1 * zi)] = acc;
                }
            }
        }
        let mut out = vec![[0.0; 3]; n0 * n1 * n2];
        for (xi, &x) in xs[0].iter().enumerate() {
            let ph = phase(x);
            for zi in 0..n2 {
                for yi in 0..n1 {
                    let mut acc = [0.0; 3];
                    for (kx, p) in ph.iter().enumerate() {
                        let c = &t2[kx + nk * (yi + n1 * zi)];
                        for q in 0..3 {
                            acc[q] += (c[q] * p).re;
                        }
                    }
                    out[xi + n0 * (yi + n1 * zi)] = acc;
                }
            }
        }
        out
    }
}

#[inline]
pub fn shell_of(k: &[i32; 3]) -> usize {
    let r2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
    r2.sqrt().round() as usize
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Random solenoidal field whose shell energies equal the model spectrum
/// exactly for shells `1..=k_max`. Only modes with `round(|kappa|) <= k_max`
/// are populated, so every populated shell is complete.
pub fn synthesize_dhit(shape: &SpectrumShape, k_max: i32, seed: u64) -> Result<FourierVelocity> {
    if !(shape.k_peak > 0.0) || !(shape.e0 > 0.0) {
        return Err(Error::InvalidArgument("spectrum peak and amplitude must be positive".into()));
    }
    if k_max < 1 {
        return Err(Error::InvalidArgument("at least one wavenumber shell is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes: Vec<([i32; 3], [Complex64; 3])> = Vec::new();
    // one representative of each +/- pair, in a fixed order
    for kz in -k_max..=k_max {
        for ky in -k_max..=k_max {
            for kx in -k_max..=k_max {
                let k = [kx, ky, kz];
                let positive = kz > 0 || (kz == 0 && (ky > 0 || (ky == 0 && kx > 0)));
                let s = shell_of(&k);
                if !positive || s == 0 || s > k_max as usize {
                    continue;
                }
                let mut a: [Complex64; 3] =
                    std::array::from_fn(|_| Complex64::new(gaussian(&mut rng), gaussian(&mut rng)));
                let kf = k.map(|v| v as f64);
                let k2 = kf.iter().map(|v| v * v).sum::<f64>();
                let dot = (0..3).fold(Complex64::new(0.0, 0.0), |acc, q| acc + a[q] * kf[q]);
                for q in 0..3 {
                    a[q] -= dot * (kf[q] / k2);
                }
                modes.push((k, a));
            }
        }
    }
    let n_shells = k_max as usize + 1;
    let mut shell = vec![0.0; n_shells];
    for (k, a) in &modes {
        // the mirrored mode carries the same energy
        shell[shell_of(k)] += a.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    let scale: Vec<f64> = (0..n_shells)
        .map(|s| {
            if s == 0 || shell[s] == 0.0 {
                0.0
            } else {
                (shape.energy(s as f64) / shell[s]).sqrt()
            }
        })
        .collect();
    let mut all = Vec::with_capacity(2 * modes.len());
    for (k, a) in modes {
        let c = a.map(|z| z * scale[shell_of(&k)]);
        all.push((k, c));
        all.push((k.map(|v| -v), c.map(|z| z.conj())));
    }
    Ok(FourierVelocity { k_max, modes: all })
}

/// Parameters of the synthetic isotropic field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DhitParams {
    pub k_peak: f64,
    /// Spectrum amplitude before rescaling to `urms`.
    pub e0: f64,
    /// RMS speed `sqrt(<|v|^2>)` after rescaling; `None` keeps `e0`.
    pub urms: Option<f64>,
    /// `urms / c`.
    pub mach: f64,
    pub seed: u64,
}

impl Default for DhitParams {
    fn default() -> Self {
        Self {
            k_peak: 4.0,
            e0: 1.0,
            urms: Some(1.0),
            mach: 0.1,
            seed: 1,
        }
    }
}

/// Physical coordinates of all node positions along one direction.
pub fn node_lines(mesh: &Mesh, nodes_1d: &[f64]) -> [Vec<f64>; 3] {
    std::array::from_fn(|d| {
        mesh.edges(d)
            .windows(2)
            .flat_map(|w| nodes_1d.iter().map(move |x| w[0] + 0.5 * (w[1] - w[0]) * (x + 1.0)))
            .collect()
    })
}

/// Synthetic decaying-turbulence field sampled at the LGL nodes. The
/// generation resolution is `cells (N + 1)` points per direction; shells up
/// to half of that minus one are populated.
pub fn init_dhit_synthetic(
    mesh: Arc<Mesh>,
    degree: usize,
    gas: &GasModel,
    params: &DhitParams,
) -> Result<ConservedField> {
    require_periodic_box(&mesh, "synthetic isotropic turbulence")?;
    let lengths = mesh.lengths();
    if lengths.iter().any(|&l| (l - 2.0 * PI).abs() > 1e-12) {
        return Err(Error::InvalidArgument("synthetic isotropic turbulence needs a 2 pi box".into()));
    }
    let cells = mesh.cells();
    let m = cells.iter().min().copied().unwrap_or(1) * (degree + 1);
    if params.k_peak > m as f64 / 4.0 {
        return Err(Error::InvalidArgument(format!(
            "spectrum peak {} beyond the resolvable range (at most {} for {m} points)",
            params.k_peak,
            m as f64 / 4.0
        )));
    }
    if !(params.mach > 0.0) {
        return Err(Error::InvalidArgument("Mach number must be positive".into()));
    }
    let k_max = (m / 2) as i32 - 1;
    let shape = SpectrumShape {
        k_peak: params.k_peak,
        e0: params.e0,
    };
    let mut fv = synthesize_dhit(&shape, k_max.max(1), params.seed)?;
    let ke: f64 = fv.shell_energy().iter().sum();
    let urms_now = (2.0 * ke).sqrt();
    let urms = match params.urms {
        Some(u) => {
            let s = u / urms_now;
            for (_, c) in fv.modes.iter_mut() {
                c.iter_mut().for_each(|z| *z *= s);
            }
            u
        }
        None => urms_now,
    };
    let (nodes, _) = lgl_nodes_weights(degree)?;
    let lines = node_lines(&mesh, &nodes);
    let vel = fv.evaluate([&lines[0], &lines[1], &lines[2]]);
    let rho = 1.0;
    let c = urms / params.mach;
    let p = rho * c * c / gas.kappa;
    let np = degree + 1;
    let n0 = lines[0].len();
    let n1 = lines[1].len();
    let mut field = ConservedField::zeros(mesh.clone(), degree);
    for e in 0..mesh.n_cells() {
        let cc = mesh.cell_coords(e);
        let block = field.element_mut(e);
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    let g = [cc[0] * np + i, cc[1] * np + j, cc[2] * np + k];
                    let v = vel[g[0] + n0 * (g[1] + n1 * g[2])];
                    block[i + np * (j + np * k)] = gas.conservative(rho, v, p);
                }
            }
        }
    }
    Ok(field)
}

/// Reads an external field; it must be a periodic box of the given degree.
pub fn dhit_import(path: &Path, degree: usize, gas: &GasModel) -> Result<ConservedField> {
    let field = ConservedField::read(path)?;
    if field.degree != degree {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("field has degree {}, expected {degree}", field.degree),
        });
    }
    require_periodic_box(&field.mesh, "imported turbulence field")?;
    field.validate(gas)?;
    Ok(field)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    pub re_tau: f64,
    pub mach_bulk: f64,
    /// Perturbation amplitude relative to the bulk velocity.
    pub perturbation: f64,
    pub seed: u64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            re_tau: 590.0,
            mach_bulk: 0.1,
            perturbation: 0.1,
            seed: 1,
        }
    }
}

/// Derived channel quantities (half height 1, bulk velocity 1, density 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelSetup {
    pub gas: GasModel,
    pub wall: WallCondition,
    pub u_tau: f64,
    pub nu: f64,
    /// Driving force per unit volume, `rho u_tau^2 / delta`.
    pub forcing: f64,
}

/// Bulk Reynolds number `2 u_b delta / nu` from Dean's correlation
/// `Re_tau = 0.09 Re_b^0.88`.
pub fn bulk_reynolds_from_re_tau(re_tau: f64) -> f64 {
    (re_tau / 0.09).powf(1.0 / 0.88)
}

pub fn channel_setup(gas: &GasModel, params: &ChannelParams) -> Result<ChannelSetup> {
    if !(params.re_tau > 0.0) || !(params.mach_bulk > 0.0) {
        return Err(Error::InvalidArgument("Re_tau and bulk Mach number must be positive".into()));
    }
    let nu = 2.0 / bulk_reynolds_from_re_tau(params.re_tau);
    let u_tau = params.re_tau * nu;
    let rho = 1.0;
    let c = 1.0 / params.mach_bulk;
    let p = rho * c * c / gas.kappa;
    let temperature = p / (rho * gas.r);
    Ok(ChannelSetup {
        gas: GasModel { mu: rho * nu, ..*gas },
        wall: WallCondition { temperature },
        u_tau,
        nu,
        forcing: rho * u_tau * u_tau,
    })
}

fn require_channel(mesh: &Mesh) -> Result<()> {
    let ok = mesh.boundary(0) == BoundaryKind::Periodic
        && mesh.boundary(1) == BoundaryKind::Wall
        && mesh.boundary(2) == BoundaryKind::Periodic
        && (mesh.edges(1)[0] + 1.0).abs() < 1e-12
        && (mesh.edges(1)[mesh.cells()[1]] - 1.0).abs() < 1e-12;
    if !ok {
        return Err(Error::InvalidArgument(
            "channel case needs walls at y = -1 and y = 1 and periodic x, z".into(),
        ));
    }
    Ok(())
}

/// Laminar parabola with bulk velocity 1 plus seeded sinusoidal
/// perturbations that vanish at the walls.
pub fn init_channel(mesh: Arc<Mesh>, degree: usize, gas: &GasModel, params: &ChannelParams) -> Result<(ConservedField, ChannelSetup)> {
    require_channel(&mesh)?;
    let setup = channel_setup(gas, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let phases: Vec<[f64; 3]> = (0..3)
        .map(|_| std::array::from_fn(|_| 2.0 * PI * rng.gen::<f64>()))
        .collect();
    let lx = mesh.lengths()[0];
    let lz = mesh.lengths()[2];
    let a = params.perturbation;
    let rho = 1.0;
    let p = rho * setup.gas.r * setup.wall.temperature;
    let (nodes, _) = lgl_nodes_weights(degree)?;
    let mut field = ConservedField::zeros(mesh, degree);
    field.fill(&nodes, |x| {
        let y = x[1];
        let wall = 1.0 - y * y;
        let mut v = [1.5 * wall, 0.0, 0.0];
        for (m, ph) in phases.iter().enumerate() {
            let kx = 2.0 * PI * (m + 1) as f64 / lx;
            let kz = 2.0 * PI * (m + 1) as f64 / lz;
            let s = a / 3.0;
            v[0] += s * wall * (kx * x[0] + ph[0]).sin() * (kz * x[2] + ph[1]).cos();
            v[1] += s * wall * wall * (kx * x[0] + ph[1]).cos() * (kz * x[2] + ph[2]).sin();
            v[2] += s * wall * (kx * x[0] + ph[2]).cos() * (kz * x[2] + ph[0]).sin();
        }
        setup.gas.conservative(rho, v, p)
    });
    Ok((field, setup))
}

/// Node spacings `dx / (N + 1)` in wall units: `[x, y_min, y_max, z]`.
pub fn wall_unit_spacings(mesh: &Mesh, degree: usize, re_tau: f64) -> [f64; 4] {
    let np = (degree + 1) as f64;
    let sizes = |d: usize| -> Vec<f64> { mesh.edges(d).windows(2).map(|w| w[1] - w[0]).collect() };
    let hy = sizes(1);
    let ymin = hy.iter().cloned().fold(f64::INFINITY, f64::min);
    let ymax = hy.iter().cloned().fold(0.0, f64::max);
    [
        sizes(0)[0] / np * re_tau,
        ymin / np * re_tau,
        ymax / np * re_tau,
        sizes(2)[0] / np * re_tau,
    ]
}

/// Position of a node (convenience re-export for diagnostics).
pub fn position(mesh: &Mesh, nodes_1d: &[f64], cell: usize, idx: [usize; 3]) -> [f64; 3] {
    node_position(mesh.cell_origin(cell), mesh.cell_size(cell), nodes_1d, idx)
}
