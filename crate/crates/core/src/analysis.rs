//! Turbulence diagnostics: uniform resampling, shell spectra, dissipation
//! rates, pressure-dilatation, kinetic energy and channel statistics.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::field::ConservedField;
use crate::mesh::{BoundaryKind, Mesh};
use crate::operators::{interpolation_matrix, Matrix, OperatorSet};
use crate::physics::{GasModel, Primitive};
use crate::spatial::lift_nodal;
use crate::tensor::apply_along;

/// Primitive values on an equispaced periodic grid, index `i + M (j + M k)`.
#[derive(Clone, Debug)]
pub struct UniformFields {
    pub m: usize,
    pub lengths: [f64; 3],
    pub density: Vec<f64>,
    pub velocity: [Vec<f64>; 3],
    pub pressure: Vec<f64>,
}

fn primitives(field: &ConservedField, gas: &GasModel) -> Result<Vec<Primitive>> {
    let npe = field.nodes_per_element();
    field
        .data
        .iter()
        .enumerate()
        .map(|(k, u)| {
            gas.primitive(u).map_err(|b| Error::InvalidState {
                element: k / npe,
                node: k % npe,
                density: b.density,
                pressure: b.pressure,
                context: Some("diagnostics".into()),
            })
        })
        .collect()
}

/// Evaluates the nodal polynomials of `rho, v, p` at `x_j = L j / M` in
/// every direction; each point belongs to the cell `[a, b)` containing it.
pub fn resample_to_uniform(field: &ConservedField, gas: &GasModel, m: usize) -> Result<UniformFields> {
    let mesh = &field.mesh;
    if !mesh.is_fully_periodic() {
        return Err(Error::InvalidArgument("resampling needs a periodic box".into()));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("resampling needs at least one point".into()));
    }
    let cells = mesh.cells();
    let np = field.degree + 1;
    if cells.iter().any(|&c| m < c * np) {
        log::warn!("resampling to {m} points per direction loses resolved content");
    }
    let ops = OperatorSet::new(field.degree)?;
    let prims = primitives(field, gas)?;
    let lengths = mesh.lengths();
    // per direction and cell: uniform indices inside the cell and the
    // interpolation matrix to their reference coordinates
    let mut plan: [Vec<(Vec<usize>, Matrix)>; 3] = Default::default();
    for d in 0..3 {
        let edges = mesh.edges(d);
        let origin = edges[0];
        for c in 0..cells[d] {
            let (a, b) = (edges[c], edges[c + 1]);
            let mut idx = Vec::new();
            let mut xi = Vec::new();
            for j in 0..m {
                let x = origin + lengths[d] * j as f64 / m as f64;
                if x >= a && (x < b || (c + 1 == cells[d] && x <= b)) {
                    idx.push(j);
                    xi.push((2.0 * (x - a) / (b - a) - 1.0).clamp(-1.0, 1.0));
                }
            }
            let mat = if xi.is_empty() {
                Matrix::zeros(0, np)
            } else {
                interpolation_matrix(&ops.nodes, &xi)?
            };
            plan[d].push((idx, mat));
        }
    }
    let n = m * m * m;
    let mut out = UniformFields {
        m,
        lengths,
        density: vec![0.0; n],
        velocity: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        pressure: vec![0.0; n],
    };
    let npe = np * np * np;
    let mut t1 = Vec::new();
    let mut t2 = Vec::new();
    let mut t3 = Vec::new();
    for e in 0..mesh.n_cells() {
        let cc = mesh.cell_coords(e);
        let (ix, mx) = &plan[0][cc[0]];
        let (iy, my) = &plan[1][cc[1]];
        let (iz, mz) = &plan[2][cc[2]];
        if ix.is_empty() || iy.is_empty() || iz.is_empty() {
            continue;
        }
        let vals: Vec<[f64; 5]> = prims[e * npe..(e + 1) * npe]
            .iter()
            .map(|p| [p.rho, p.v[0], p.v[1], p.v[2], p.p])
            .collect();
        let d1 = apply_along(mx, 0, [np; 3], &vals, &mut t1);
        let d2 = apply_along(my, 1, d1, &t1, &mut t2);
        let d3 = apply_along(mz, 2, d2, &t2, &mut t3);
        for (c, &gz) in iz.iter().enumerate() {
            for (b, &gy) in iy.iter().enumerate() {
                for (a, &gx) in ix.iter().enumerate() {
                    let v = t3[a + d3[0] * (b + d3[1] * c)];
                    let g = gx + m * (gy + m * gz);
                    out.density[g] = v[0];
                    out.velocity[0][g] = v[1];
                    out.velocity[1][g] = v[2];
                    out.velocity[2][g] = v[3];
                    out.pressure[g] = v[4];
                }
            }
        }
    }
    Ok(out)
}

/// Shell-summed kinetic energy spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumResult {
    /// `energy[k]` for shell `k = 0, 1, ...`.
    pub energy: Vec<f64>,
    pub time: f64,
    /// Grid points per direction of the transformed arrays.
    pub m: usize,
    /// Resolvability marker `DOF / pi` for the generating DG grid.
    pub k_ppw: Option<f64>,
}

impl SpectrumResult {
    pub fn total(&self) -> f64 {
        self.energy.iter().sum()
    }
}

/// Signed integer wavenumber of FFT index `i` on `m` points.
#[inline]
pub fn wavenumber(i: usize, m: usize) -> i64 {
    if i <= m / 2 {
        i as i64
    } else {
        i as i64 - m as i64
    }
}

/// In-place 3D forward FFT of a cube of `m^3` values, index `i + m (j + m k)`.
pub fn fft3(data: &mut [Complex64], m: usize) {
    let fft = FftPlanner::new().plan_fft_forward(m);
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    let strides = [1, m, m * m];
    for d in 0..3 {
        let (o1, o2) = match d {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for b in 0..m {
            for a in 0..m {
                let base = a * strides[o1] + b * strides[o2];
                for (i, l) in line.iter_mut().enumerate() {
                    *l = data[base + i * strides[d]];
                }
                fft.process(&mut line);
                for (i, l) in line.iter().enumerate() {
                    data[base + i * strides[d]] = *l;
                }
            }
        }
    }
}

/// `E(k) = sum_{round(|kappa|) = k} 1/2 |v_hat(kappa)|^2` with
/// `v_hat = FFT(v) / M^3`, so that `sum_k E(k) = <1/2 |v|^2>`.
pub fn energy_spectrum(m: usize, velocity: [&[f64]; 3]) -> Result<SpectrumResult> {
    let n = m * m * m;
    if m == 0 || velocity.iter().any(|v| v.len() != n) {
        return Err(Error::InvalidArgument(format!(
            "spectrum needs three cubic arrays of {m}^3 values"
        )));
    }
    let n_shells = ((3.0f64).sqrt() * (m / 2) as f64).round() as usize + 2;
    let mut energy = vec![0.0; n_shells];
    let norm = 1.0 / n as f64;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let kwave: Vec<i64> = (0..m).map(|i| wavenumber(i, m)).collect();
    for comp in velocity {
        for (b, v) in buf.iter_mut().zip(comp) {
            *b = Complex64::new(*v, 0.0);
        }
        fft3(&mut buf, m);
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    let r2 = kwave[i] * kwave[i] + kwave[j] * kwave[j] + kwave[k] * kwave[k];
                    let s = (r2 as f64).sqrt().round() as usize;
                    energy[s] += 0.5 * (buf[i + m * (j + m * k)] * norm).norm_sqr();
                }
            }
        }
    }
    Ok(SpectrumResult {
        energy,
        time: 0.0,
        m,
        k_ppw: None,
    })
}

/// Resamples at `cells (N + 1)` points and computes the spectrum; the
/// result carries the field time and the `DOF / pi` marker.
pub fn field_spectrum(field: &ConservedField, gas: &GasModel) -> Result<SpectrumResult> {
    let cells = field.mesh.cells();
    if cells[0] != cells[1] || cells[1] != cells[2] {
        return Err(Error::InvalidArgument("spectrum needs a cubic cell layout".into()));
    }
    let m = cells[0] * (field.degree + 1);
    let u = resample_to_uniform(field, gas, m)?;
    let mut s = energy_spectrum(m, [&u.velocity[0], &u.velocity[1], &u.velocity[2]])?;
    s.time = field.time;
    s.k_ppw = Some(m as f64 / std::f64::consts::PI);
    Ok(s)
}

/// `(2 nu sum_{k=1}^{k_max} k^2 E(k), sum_{k=1}^{k_max} E(k))`.
pub fn spectral_dissipation_and_ke(spec: &SpectrumResult, nu: f64, k_max: usize) -> Result<(f64, f64)> {
    if k_max >= spec.energy.len() {
        return Err(Error::InvalidArgument(format!(
            "k_max {k_max} beyond the spectrum range {}",
            spec.energy.len() - 1
        )));
    }
    let mut eps = 0.0;
    let mut ke = 0.0;
    for k in 1..=k_max {
        eps += (k * k) as f64 * spec.energy[k];
        ke += spec.energy[k];
    }
    Ok((2.0 * nu * eps, ke))
}

/// Taylor-microscale Reynolds number `u' lambda / nu` with
/// `u'^2 = 2/3 sum E`, `lambda = sqrt(15 nu u'^2 / eps)`.
pub fn taylor_reynolds(spec: &SpectrumResult, nu: f64) -> Result<f64> {
    let kmax = spec.energy.len() - 1;
    let (eps, _) = spectral_dissipation_and_ke(spec, nu, kmax)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("Taylor Reynolds number undefined for zero dissipation".into()));
    }
    let u2 = 2.0 / 3.0 * spec.total();
    let lambda = (15.0 * nu * u2 / eps).sqrt();
    Ok(u2.sqrt() * lambda / nu)
}

/// Quadrature weight `w_i w_j w_k |cell| / 8` per node of one element.
fn element_weights(ops: &OperatorSet, size: [f64; 3]) -> Vec<f64> {
    let np = ops.n_points();
    let w = &ops.weights;
    let jac = size[0] * size[1] * size[2] / 8.0;
    (0..np * np * np)
        .map(|n| w[n % np] * w[(n / np) % np] * w[n / (np * np)] * jac)
        .collect()
}

/// Domain integral of `1/2 rho |v|^2`.
pub fn kinetic_energy(field: &ConservedField) -> f64 {
    let ops = OperatorSet::new(field.degree).expect("valid degree");
    let npe = field.nodes_per_element();
    let mut total = 0.0;
    for e in 0..field.mesh.n_cells() {
        let w = element_weights(&ops, field.mesh.cell_size(e));
        for (n, u) in field.element(e).iter().enumerate() {
            total += w[n] * 0.5 * (u[1] * u[1] + u[2] * u[2] + u[3] * u[3]) / u[0];
        }
        debug_assert_eq!(w.len(), npe);
    }
    total
}

/// Domain integrals of the conservative variables.
pub fn conserved_totals(field: &ConservedField) -> [f64; 5] {
    let ops = OperatorSet::new(field.degree).expect("valid degree");
    let mut total = [0.0; 5];
    for e in 0..field.mesh.n_cells() {
        let w = element_weights(&ops, field.mesh.cell_size(e));
        for (n, u) in field.element(e).iter().enumerate() {
            for q in 0..5 {
                total[q] += w[n] * u[q];
            }
        }
    }
    total
}

/// BR1-lifted gradient of the nodal velocity, `g[i][j] = d v_i / d x_j`;
/// walls impose zero velocity.
pub fn velocity_gradients(field: &ConservedField, gas: &GasModel) -> Result<Vec<[[f64; 3]; 3]>> {
    let prims = primitives(field, gas)?;
    let ops = OperatorSet::new(field.degree)?;
    let v: Vec<[f64; 3]> = prims.iter().map(|p| p.v).collect();
    let (g, _) = lift_nodal(&field.mesh, &ops, &v, |_| [0.0; 3], false);
    Ok(g.iter()
        .map(|gd| std::array::from_fn(|i| std::array::from_fn(|j| gd[j][i])))
        .collect())
}

/// Domain integral of `p (div v)` with the lifted velocity gradient.
pub fn pressure_dilatation(field: &ConservedField, gas: &GasModel) -> Result<f64> {
    let prims = primitives(field, gas)?;
    let grads = velocity_gradients(field, gas)?;
    let ops = OperatorSet::new(field.degree)?;
    let npe = field.nodes_per_element();
    let mut total = 0.0;
    for e in 0..field.mesh.n_cells() {
        let w = element_weights(&ops, field.mesh.cell_size(e));
        for n in 0..npe {
            let k = e * npe + n;
            let g = &grads[k];
            total += w[n] * prims[k].p * (g[0][0] + g[1][1] + g[2][2]);
        }
    }
    Ok(total)
}

/// Volume average of `2 nu S_ij S_ij` with the lifted velocity gradient.
pub fn volume_dissipation_rate(field: &ConservedField, gas: &GasModel, nu: f64) -> Result<f64> {
    let grads = velocity_gradients(field, gas)?;
    let ops = OperatorSet::new(field.degree)?;
    let npe = field.nodes_per_element();
    let mut total = 0.0;
    for e in 0..field.mesh.n_cells() {
        let w = element_weights(&ops, field.mesh.cell_size(e));
        for n in 0..npe {
            let g = &grads[e * npe + n];
            let mut ss = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    let s = 0.5 * (g[i][j] + g[j][i]);
                    ss += s * s;
                }
            }
            total += w[n] * ss;
        }
    }
    Ok(2.0 * nu * total / field.mesh.volume())
}

/// Running sums of wall-parallel plane averages on the node planes of a
/// wall-bounded mesh.
#[derive(Clone, Debug)]
pub struct ChannelAccumulator {
    degree: usize,
    /// `y` of every node plane, bottom to top.
    pub y: Vec<f64>,
    sums: Vec<[f64; 9]>,
    samples: usize,
}

/// Plane-averaged, symmetrized channel profiles in wall units.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelStats {
    pub y: Vec<f64>,
    pub y_plus: Vec<f64>,
    pub u_plus: Vec<f64>,
    pub uu: Vec<f64>,
    pub vv: Vec<f64>,
    pub ww: Vec<f64>,
    pub uv: Vec<f64>,
    pub u_tau: f64,
    pub samples: usize,
}

impl ChannelAccumulator {
    pub fn new(mesh: &Mesh, degree: usize) -> Result<Self> {
        if mesh.boundary(1) != BoundaryKind::Wall || mesh.boundary(0) != BoundaryKind::Periodic || mesh.boundary(2) != BoundaryKind::Periodic {
            return Err(Error::InvalidArgument("channel statistics need walls in y only".into()));
        }
        let ops = OperatorSet::new(degree)?;
        let y = crate::init::node_lines(mesh, &ops.nodes)[1].clone();
        Ok(Self {
            degree,
            sums: vec![[0.0; 9]; y.len()],
            y,
            samples: 0,
        })
    }

    /// Adds one snapshot: quadrature-weighted `x-z` plane means of
    /// `u, v, w, uu, vv, ww, uv` on every node plane.
    pub fn add(&mut self, field: &ConservedField, gas: &GasModel) -> Result<()> {
        if field.degree != self.degree {
            return Err(Error::InvalidArgument("snapshot degree differs from the accumulator".into()));
        }
        let prims = primitives(field, gas)?;
        let ops = OperatorSet::new(field.degree)?;
        let np = field.degree + 1;
        let npe = np * np * np;
        let mesh = &field.mesh;
        let area = mesh.lengths()[0] * mesh.lengths()[2];
        let mut snap = vec![[0.0; 9]; self.y.len()];
        for e in 0..mesh.n_cells() {
            let cc = mesh.cell_coords(e);
            let s = mesh.cell_size(e);
            for k in 0..np {
                for j in 0..np {
                    for i in 0..np {
                        let w = ops.weights[i] * ops.weights[k] * s[0] * s[2] / 4.0 / area;
                        let v = prims[e * npe + i + np * (j + np * k)].v;
                        let row = &mut snap[cc[1] * np + j];
                        let vals = [v[0], v[1], v[2], v[0] * v[0], v[1] * v[1], v[2] * v[2], v[0] * v[1], 1.0, 0.0];
                        for q in 0..8 {
                            row[q] += w * vals[q];
                        }
                    }
                }
            }
        }
        for (acc, s) in self.sums.iter_mut().zip(&snap) {
            for q in 0..8 {
                acc[q] += s[q];
            }
        }
        self.samples += 1;
        Ok(())
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Symmetrized statistics; `u_tau` from the mean-profile wall
    /// gradient `sqrt(nu |dU/dy|)` using the nodal derivative in the wall cells.
    pub fn finish(&self, mesh: &Mesh, nu: f64) -> Result<ChannelStats> {
        if self.samples == 0 {
            return Err(Error::InvalidArgument("empty averaging window".into()));
        }
        let n = self.y.len();
        let inv = 1.0 / self.samples as f64;
        let mean: Vec<[f64; 7]> = self
            .sums
            .iter()
            .map(|s| std::array::from_fn(|q| s[q] * inv))
            .collect();
        // fluctuation moments from raw moments
        let raw: Vec<[f64; 5]> = mean
            .iter()
            .map(|m| {
                [
                    m[0],
                    m[3] - m[0] * m[0],
                    m[4] - m[1] * m[1],
                    m[5] - m[2] * m[2],
                    m[6] - m[0] * m[1],
                ]
            })
            .collect();
        // symmetrize: u and normal stresses even, uv odd about the centerline
        let sym: Vec<[f64; 5]> = (0..n)
            .map(|g| {
                let a = raw[g];
                let b = raw[n - 1 - g];
                [
                    0.5 * (a[0] + b[0]),
                    0.5 * (a[1] + b[1]),
                    0.5 * (a[2] + b[2]),
                    0.5 * (a[3] + b[3]),
                    0.5 * (a[4] - b[4]),
                ]
            })
            .collect();
        let ops = OperatorSet::new(self.degree)?;
        let np = self.degree + 1;
        let dy0 = mesh.edges(1)[1] - mesh.edges(1)[0];
        let dudy: f64 = (0..np).map(|m| ops.derivative[(0, m)] * sym[m][0]).sum::<f64>() * 2.0 / dy0;
        let u_tau = (nu * dudy.abs()).sqrt();
        if !(u_tau > 0.0) {
            return Err(Error::InvalidArgument("zero wall shear: friction velocity undefined".into()));
        }
        let y_plus = self
            .y
            .iter()
            .map(|&y| (1.0 - y.abs()) * u_tau / nu)
            .collect();
        let t2 = u_tau * u_tau;
        Ok(ChannelStats {
            y: self.y.clone(),
            y_plus,
            u_plus: sym.iter().map(|s| s[0] / u_tau).collect(),
            uu: sym.iter().map(|s| s[1] / t2).collect(),
            vv: sym.iter().map(|s| s[2] / t2).collect(),
            ww: sym.iter().map(|s| s[3] / t2).collect(),
            uv: sym.iter().map(|s| s[4] / t2).collect(),
            u_tau,
            samples: self.samples,
        })
    }

    /// Plane-mean velocity of the current window on the plane nearest to
    /// each wall (the wall nodes themselves).
    pub fn wall_plane_mean(&self) -> Option<[[f64; 3]; 2]> {
        if self.samples == 0 {
            return None;
        }
        let inv = 1.0 / self.samples as f64;
        let n = self.y.len();
        let pick = |g: usize| std::array::from_fn(|q| self.sums[g][q] * inv);
        Some([pick(0), pick(n - 1)])
    }
}

/// Plane means of `u` on the two wall node planes of one snapshot.
pub fn wall_velocity(field: &ConservedField, gas: &GasModel) -> Result<[[f64; 3]; 2]> {
    let mut acc = ChannelAccumulator::new(&field.mesh, field.degree)?;
    acc.add(field, gas)?;
    Ok(acc.wall_plane_mean().expect("one sample"))
}

/// Volume-averaged time-series sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeSample {
    pub t: f64,
    pub kinetic_energy: f64,
    pub eps_spectral: Option<f64>,
    pub eps_volume: f64,
    pub pressure_dilatation: f64,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn write_spectrum_csv(path: &Path, spec: &SpectrumResult, nu: f64) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# time={:.9e} nu={:e} m={} k_ppw={} normalization=sum_k_E_equals_mean_half_v2",
        spec.time,
        nu,
        spec.m,
        spec.k_ppw.map(|k| format!("{k:.4}")).unwrap_or_else(|| "none".into())
    );
    s.push_str("k,E\n");
    for (k, e) in spec.energy.iter().enumerate() {
        let _ = writeln!(s, "{k},{e:.12e}");
    }
    write_text(path, &s)
}

pub fn write_timeseries_csv(path: &Path, samples: &[TimeSample], nu: f64) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "# nu={nu:e} normalization=volume_average");
    s.push_str("t,KE,eps_spectral,eps_volume,pressure_dilatation\n");
    for x in samples {
        let es = x.eps_spectral.map(|v| format!("{v:.12e}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "{:.9e},{:.12e},{},{:.12e},{:.12e}",
            x.t, x.kinetic_energy, es, x.eps_volume, x.pressure_dilatation
        );
    }
    write_text(path, &s)
}

pub fn write_channel_csv(path: &Path, stats: &ChannelStats, nu: f64) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "# nu={nu:e} u_tau={:.9e} samples={}", stats.u_tau, stats.samples);
    s.push_str("y,y_plus,u_plus,uu,vv,ww,uv\n");
    for g in 0..stats.y.len() {
        let _ = writeln!(
            s,
            "{:.12e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}",
            stats.y[g], stats.y_plus[g], stats.u_plus[g], stats.uu[g], stats.vv[g], stats.ww[g], stats.uv[g]
        );
    }
    write_text(path, &s)
}
