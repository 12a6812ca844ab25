//! Semi-discrete right-hand side: strong-form DGSEM on Cartesian cells.
//!
//! With `xi in [-1, 1]` and metric `2 / dx_d`, the advective residual of
//! node `i` along a line in direction `d` is
//!
//! ```text
//! A_i = 2/dx_d [ sum_m D_im F_m + (delta_iN (F* - F)_N - delta_i0 (F* - F)_0) / w_i ]
//! ```
//!
//! and `dU/dt = -A + V + S` with `V` the viscous residual in the same
//! layout and `S` the sources. Constant subtractions (`F_m - F_i`) inside
//! the derivative sums make constant states map to exactly zero.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ConservedField, GradientField};
use crate::mesh::{BoundaryKind, Mesh, Neighbor};
use crate::operators::{over_integration_degree, Matrix, OperatorSet};
use crate::physics::{
    euler_flux, interface_flux, pi_two_point_flux, viscous_flux_kernel, CentralPart, FlowGradient,
    GasModel, InterfaceFlux, Primitive, State, NVAR,
};
use crate::sgs::{SgsConfig, SgsModel, SgsNode};
use crate::tensor::{apply_3d, apply_along, face_nodes};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMode {
    /// Two-point split form with the kinetic-energy-preserving flux.
    #[default]
    SplitPi,
    /// Fluxes on a finer LGL grid, projected back by a modal cut-off.
    OverIntegration,
    /// Fluxes at the solution nodes (standard collocation).
    Interpolation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ViscousScheme {
    #[default]
    Br1,
    Br2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeConfig {
    pub volume: VolumeMode,
    /// Over-integration degree `Q`; defaults to `3 (N + 1) / 2 - 1`.
    pub over_integration_degree: Option<usize>,
    pub interface_flux: InterfaceFlux,
    pub central_part: CentralPart,
    pub viscous: ViscousScheme,
    /// BR2 penalty at interior faces.
    pub eta_br: f64,
    /// BR2 penalty at wall faces; defaults to `eta_br`.
    pub eta_wall: Option<f64>,
    pub cfl: f64,
    pub sgs: SgsConfig,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            volume: VolumeMode::SplitPi,
            over_integration_degree: None,
            interface_flux: InterfaceFlux::CentralPi,
            central_part: CentralPart::Pi,
            viscous: ViscousScheme::Br1,
            eta_br: 1.0,
            eta_wall: None,
            cfl: 0.5,
            sgs: SgsConfig::default(),
        }
    }
}

impl SchemeConfig {
    pub fn q_degree(&self, degree: usize) -> usize {
        self.over_integration_degree
            .unwrap_or_else(|| over_integration_degree(degree))
    }

    pub fn validate(&self, degree: usize) -> Result<()> {
        if self.viscous == ViscousScheme::Br2 && !(self.eta_br >= 1.0 && self.eta_wall.unwrap_or(1.0) >= 1.0) {
            return Err(Error::Config("BR2 penalty must be >= 1".into()));
        }
        if self.volume == VolumeMode::OverIntegration && self.q_degree(degree) < degree {
            return Err(Error::Config(format!(
                "over-integration degree {} below solution degree {degree}",
                self.q_degree(degree)
            )));
        }
        if !(self.cfl > 0.0) {
            return Err(Error::Config(format!("CFL must be positive, got {}", self.cfl)));
        }
        self.sgs.validate(degree)
    }
}

/// Isothermal no-slip wall.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallCondition {
    pub temperature: f64,
}

impl WallCondition {
    /// Wall state used for gradient lifting: interior pressure, zero
    /// velocity, wall temperature.
    #[inline]
    pub fn wall_state(&self, gas: &GasModel, p_in: f64) -> State {
        [p_in / (gas.r * self.temperature), 0.0, 0.0, 0.0, p_in / (gas.kappa - 1.0)]
    }

    /// Mirror state for the advective flux: interior pressure, reversed
    /// velocity, wall temperature.
    #[inline]
    pub fn ghost_state(&self, gas: &GasModel, p: &Primitive) -> State {
        gas.conservative(p.p / (gas.r * self.temperature), p.v.map(|v| -v), p.p)
    }
}

struct OverIntegration {
    ops_q: OperatorSet,
    interp: Matrix,
    project: Matrix,
    faces_q: Vec<Vec<usize>>,
}

/// Complete spatial operator for one mesh, degree, gas and scheme.
pub struct Discretization {
    pub mesh: Arc<Mesh>,
    pub ops: OperatorSet,
    pub gas: GasModel,
    pub scheme: SchemeConfig,
    pub wall: Option<WallCondition>,
    /// Constant force per unit volume in `x` (momentum source `f`, energy
    /// source `f v_1`).
    pub body_force: f64,
    sgs: SgsModel,
    d2: Vec<f64>,
    faces: Vec<Vec<usize>>,
    overint: Option<OverIntegration>,
}

#[inline]
fn face_id(dir: usize, side: usize) -> usize {
    2 * dir + side
}

#[inline]
fn strides(np: usize) -> [usize; 3] {
    [1, np, np * np]
}

/// First node of tensor line `line` in direction `dir`.
#[inline]
fn line_base(np: usize, dir: usize, line: usize) -> usize {
    let st = strides(np);
    let (o1, o2) = match dir {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    (line % np) * st[o1] + (line / np) * st[o2]
}

#[inline]
fn add_scaled(acc: &mut State, s: f64, v: &State) {
    for q in 0..NVAR {
        acc[q] += s * v[q];
    }
}

fn invalid(element: usize, node: usize, bad: crate::physics::BadState, ctx: &str) -> Error {
    Error::InvalidState {
        element,
        node,
        density: bad.density,
        pressure: bad.pressure,
        context: Some(ctx.to_string()),
    }
}

/// Strong-form BR1 lifting of arbitrary nodal data. Interface values are
/// arithmetic means; wall faces take `wall(own)`. Returns the lifted
/// gradient and, when requested, the broken (volume-only) gradient.
pub fn lift_nodal<const K: usize>(
    mesh: &Mesh,
    ops: &OperatorSet,
    data: &[[f64; K]],
    wall: impl Fn(&[f64; K]) -> [f64; K],
    keep_broken: bool,
) -> (Vec<[[f64; K]; 3]>, Option<Vec<[[f64; K]; 3]>>) {
    let np = ops.n_points();
    let npe = np * np * np;
    let st = strides(np);
    let d = &ops.derivative;
    let faces: Vec<Vec<usize>> = (0..6).map(|f| face_nodes(np, f / 2, f % 2)).collect();
    let mut grad = vec![[[0.0; K]; 3]; data.len()];
    for e in 0..mesh.n_cells() {
        let size = mesh.cell_size(e);
        let u = &data[e * npe..(e + 1) * npe];
        let g = &mut grad[e * npe..(e + 1) * npe];
        for dir in 0..3 {
            let scale = 2.0 / size[dir];
            for line in 0..np * np {
                let base = line_base(np, dir, line);
                for i in 0..np {
                    let ni = base + i * st[dir];
                    let row = d.row(i);
                    let mut acc = [0.0; K];
                    for (m, c) in row.iter().enumerate() {
                        if m == i {
                            continue;
                        }
                        let um = &u[base + m * st[dir]];
                        for q in 0..K {
                            acc[q] += c * (um[q] - u[ni][q]);
                        }
                    }
                    g[ni][dir] = acc.map(|v| scale * v);
                }
            }
        }
    }
    let broken = keep_broken.then(|| grad.clone());
    let w_end = ops.weights[0];
    for e in 0..mesh.n_cells() {
        let size = mesh.cell_size(e);
        for dir in 0..3 {
            let scale = 2.0 / size[dir];
            for side in 0..2 {
                let f = face_id(dir, side);
                let sgn = if side == 1 { 1.0 } else { -1.0 };
                let nb = mesh.neighbor(e, f);
                for (a, &n) in faces[f].iter().enumerate() {
                    let own = data[e * npe + n];
                    let ustar = match nb {
                        Neighbor::Cell(r) => {
                            let other = data[r * npe + faces[face_id(dir, 1 - side)][a]];
                            std::array::from_fn(|q| 0.5 * (own[q] + other[q]))
                        }
                        Neighbor::Wall => wall(&own),
                    };
                    let gq = &mut grad[e * npe + n][dir];
                    for q in 0..K {
                        gq[q] += scale * sgn / w_end * (ustar[q] - own[q]);
                    }
                }
            }
        }
    }
    (grad, broken)
}

impl Discretization {
    pub fn new(
        mesh: Arc<Mesh>,
        degree: usize,
        gas: GasModel,
        scheme: SchemeConfig,
        wall: Option<WallCondition>,
    ) -> Result<Self> {
        gas.validate().map_err(Error::Config)?;
        scheme.validate(degree)?;
        let has_walls = (0..3).any(|d| mesh.boundary(d) == BoundaryKind::Wall);
        if has_walls && wall.is_none() {
            return Err(Error::Config("mesh has walls but no wall condition was given".into()));
        }
        if let Some(w) = wall {
            if !(w.temperature > 0.0) {
                return Err(Error::Config("wall temperature must be positive".into()));
            }
        }
        let ops = OperatorSet::new(degree)?;
        let np = ops.n_points();
        let d2 = (0..np * np)
            .map(|k| 2.0 * ops.derivative[(k / np, k % np)])
            .collect();
        let faces = (0..6).map(|f| face_nodes(np, f / 2, f % 2)).collect();
        let overint = if scheme.volume == VolumeMode::OverIntegration {
            let ops_q = OperatorSet::new(scheme.q_degree(degree))?;
            let interp = ops.interpolation_to(&ops_q.nodes);
            let project = ops_q.projection_to(&ops);
            let nq = ops_q.n_points();
            Some(OverIntegration {
                faces_q: (0..6).map(|f| face_nodes(nq, f / 2, f % 2)).collect(),
                ops_q,
                interp,
                project,
            })
        } else {
            None
        };
        let sgs = SgsModel::new(scheme.sgs.clone(), &ops)?;
        Ok(Self {
            mesh,
            ops,
            gas,
            scheme,
            wall,
            body_force: 0.0,
            sgs,
            d2,
            faces,
            overint,
        })
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.ops.degree
    }

    #[inline]
    pub fn nodes_per_element(&self) -> usize {
        self.ops.n_points().pow(3)
    }

    pub fn sgs_model(&self) -> &SgsModel {
        &self.sgs
    }

    /// Whether gradients are needed (molecular viscosity or an SGS model).
    pub fn is_viscous(&self) -> bool {
        self.gas.mu > 0.0 || self.sgs.is_active()
    }

    fn check_field(&self, field: &ConservedField) -> Result<()> {
        if field.degree != self.degree() || field.data.len() != self.mesh.n_cells() * self.nodes_per_element() {
            return Err(Error::InvalidArgument(format!(
                "field (degree {}, {} nodes) does not match the discretization (degree {}, {} nodes)",
                field.degree,
                field.data.len(),
                self.degree(),
                self.mesh.n_cells() * self.nodes_per_element()
            )));
        }
        Ok(())
    }

    /// Primitive variables at every node; the first invalid node is reported.
    pub fn primitives(&self, field: &ConservedField) -> Result<Vec<Primitive>> {
        self.check_field(field)?;
        let npe = self.nodes_per_element();
        field
            .data
            .iter()
            .enumerate()
            .map(|(k, u)| {
                self.gas
                    .primitive(u)
                    .map_err(|b| invalid(k / npe, k % npe, b, "solution node"))
            })
            .collect()
    }

    fn wall_fn(&self) -> impl Fn(&State) -> State + '_ {
        move |u: &State| {
            let w = self.wall.expect("wall condition");
            let ke = 0.5 * (u[1] * u[1] + u[2] * u[2] + u[3] * u[3]) / u[0];
            let p = (self.gas.kappa - 1.0) * (u[4] - ke);
            w.wall_state(&self.gas, p)
        }
    }

    /// BR1-lifted gradients of the conservative variables.
    pub fn lift_gradients(&self, field: &ConservedField) -> Result<GradientField> {
        self.primitives(field)?;
        let (grad, _) = lift_nodal(&self.mesh, &self.ops, &field.data, self.wall_fn(), false);
        Ok(GradientField {
            degree: self.degree(),
            data: grad,
        })
    }

    /// BR2 face gradient: broken gradient plus `eta` times the lifting of
    /// this face only (which only touches the face-normal component).
    pub fn br2_face_gradient(
        &self,
        broken: &[State; 3],
        own: &State,
        ustar: &State,
        dir: usize,
        side: usize,
        dx: f64,
        eta: f64,
    ) -> [State; 3] {
        let sgn = if side == 1 { 1.0 } else { -1.0 };
        let c = eta * (2.0 / dx) * sgn / self.ops.weights[0];
        let mut g = *broken;
        for q in 0..NVAR {
            g[dir][q] += c * (ustar[q] - own[q]);
        }
        g
    }

    /// Advective volume residual of one element (positive divergence,
    /// enters `dU/dt` with a minus sign). For over-integration the volume
    /// part alone is projected back.
    pub fn volume_divergence(&self, cell: usize, elem: &[State]) -> Result<Vec<State>> {
        let prims = elem
            .iter()
            .enumerate()
            .map(|(n, u)| self.gas.primitive(u).map_err(|b| invalid(cell, n, b, "solution node")))
            .collect::<Result<Vec<_>>>()?;
        let mut out = vec![[0.0; NVAR]; elem.len()];
        match self.scheme.volume {
            VolumeMode::SplitPi => self.split_volume(cell, &prims, &mut out),
            VolumeMode::Interpolation => self.standard_volume(cell, &prims, &mut out),
            VolumeMode::OverIntegration => {
                let oi = self.overint.as_ref().expect("over-integration operators");
                let nq = oi.ops_q.n_points();
                let (_, pq) = self.to_q_grid(cell, elem)?;
                let mut rq = vec![[0.0; NVAR]; nq * nq * nq];
                self.q_volume(cell, &pq, &mut rq);
                out = apply_3d(&oi.project, [nq; 3], &rq);
            }
        }
        Ok(out)
    }

    fn split_volume(&self, cell: usize, prims: &[Primitive], out: &mut [State]) {
        let np = self.ops.n_points();
        let st = strides(np);
        let size = self.mesh.cell_size(cell);
        let mut fi = vec![[0.0; NVAR]; np];
        let mut acc = vec![[0.0; NVAR]; np];
        for dir in 0..3 {
            let scale = 2.0 / size[dir];
            for line in 0..np * np {
                let base = line_base(np, dir, line);
                for i in 0..np {
                    fi[i] = euler_flux(&prims[base + i * st[dir]], dir);
                    acc[i] = [0.0; NVAR];
                }
                for i in 0..np {
                    let pi = &prims[base + i * st[dir]];
                    for m in i + 1..np {
                        let f = pi_two_point_flux(pi, &prims[base + m * st[dir]], dir);
                        let ci = self.d2[i * np + m];
                        let cm = self.d2[m * np + i];
                        for q in 0..NVAR {
                            acc[i][q] += ci * (f[q] - fi[i][q]);
                            acc[m][q] += cm * (f[q] - fi[m][q]);
                        }
                    }
                }
                for i in 0..np {
                    add_scaled(&mut out[base + i * st[dir]], scale, &acc[i]);
                }
            }
        }
    }

    fn derivative_volume(d: &Matrix, np: usize, scale: [f64; 3], prims: &[Primitive], out: &mut [State]) {
        let st = strides(np);
        let mut f = vec![[0.0; NVAR]; np];
        for dir in 0..3 {
            for line in 0..np * np {
                let base = line_base(np, dir, line);
                for m in 0..np {
                    f[m] = euler_flux(&prims[base + m * st[dir]], dir);
                }
                for i in 0..np {
                    let row = d.row(i);
                    let mut acc = [0.0; NVAR];
                    for m in 0..np {
                        if m == i {
                            continue;
                        }
                        for q in 0..NVAR {
                            acc[q] += row[m] * (f[m][q] - f[i][q]);
                        }
                    }
                    add_scaled(&mut out[base + i * st[dir]], scale[dir], &acc);
                }
            }
        }
    }

    fn standard_volume(&self, cell: usize, prims: &[Primitive], out: &mut [State]) {
        let size = self.mesh.cell_size(cell);
        let np = self.ops.n_points();
        Self::derivative_volume(&self.ops.derivative, np, size.map(|h| 2.0 / h), prims, out);
    }

    fn q_volume(&self, cell: usize, pq: &[Primitive], rq: &mut [State]) {
        let oi = self.overint.as_ref().expect("over-integration operators");
        let size = self.mesh.cell_size(cell);
        Self::derivative_volume(&oi.ops_q.derivative, oi.ops_q.n_points(), size.map(|h| 2.0 / h), pq, rq);
    }

    /// Interpolates one element to the over-integration grid as
    /// `U_ref + I (U - U_ref)` so constants are reproduced exactly.
    fn to_q_grid(&self, cell: usize, elem: &[State]) -> Result<(Vec<State>, Vec<Primitive>)> {
        let oi = self.overint.as_ref().expect("over-integration operators");
        let np = self.ops.n_points();
        let uref = elem[0];
        let delta: Vec<State> = elem
            .iter()
            .map(|u| std::array::from_fn(|q| u[q] - uref[q]))
            .collect();
        let mut uq = apply_3d(&oi.interp, [np; 3], &delta);
        for u in uq.iter_mut() {
            for q in 0..NVAR {
                u[q] += uref[q];
            }
        }
        let pq = uq
            .iter()
            .enumerate()
            .map(|(n, u)| self.gas.primitive(u).map_err(|b| invalid(cell, n, b, "over-integration node")))
            .collect::<Result<Vec<_>>>()?;
        Ok((uq, pq))
    }

    /// Face trace of an element on the over-integration grid, by 2D
    /// interpolation of the nodal trace with the element's reference state.
    fn q_trace(&self, elem: &[State], face: usize) -> Vec<State> {
        let oi = self.overint.as_ref().expect("over-integration operators");
        let np = self.ops.n_points();
        let uref = elem[0];
        let tr: Vec<State> = self.faces[face]
            .iter()
            .map(|&n| std::array::from_fn(|q| elem[n][q] - uref[q]))
            .collect();
        let mut t1 = Vec::new();
        let mut t2 = Vec::new();
        let d1 = apply_along(&oi.interp, 0, [np, np, 1], &tr, &mut t1);
        apply_along(&oi.interp, 1, d1, &t1, &mut t2);
        for u in t2.iter_mut() {
            for q in 0..NVAR {
                u[q] += uref[q];
            }
        }
        t2
    }

    #[inline]
    fn numerical_flux(&self, ul: &State, ur: &State, l: &Primitive, r: &Primitive, dir: usize) -> State {
        interface_flux(
            &self.gas,
            self.scheme.interface_flux,
            self.scheme.central_part,
            ul,
            ur,
            l,
            r,
            dir,
        )
    }

    /// Interface flux on one face seen from the owning element, with the
    /// lower element always passed as the left state.
    fn face_flux(&self, own: &State, own_p: &Primitive, other: Option<(&State, &Primitive)>, dir: usize, side: usize) -> Result<State, crate::physics::BadState> {
        let (ghost, ghost_p);
        let (ou, op) = match other {
            Some(x) => x,
            None => {
                let w = self.wall.expect("wall condition");
                ghost = w.ghost_state(&self.gas, own_p);
                ghost_p = self.gas.primitive(&ghost)?;
                (&ghost, &ghost_p)
            }
        };
        Ok(if side == 1 {
            self.numerical_flux(own, ou, own_p, op, dir)
        } else {
            self.numerical_flux(ou, own, op, own_p, dir)
        })
    }

    /// Advective surface residual (nodal grid), for all elements.
    pub fn surface_terms(&self, field: &ConservedField) -> Result<Vec<State>> {
        let prims = self.primitives(field)?;
        let mut out = vec![[0.0; NVAR]; field.data.len()];
        if self.overint.is_some() {
            for e in 0..self.mesh.n_cells() {
                let r = self.q_surface_projected(field, e)?;
                let npe = self.nodes_per_element();
                out[e * npe..(e + 1) * npe].copy_from_slice(&r);
            }
        } else {
            self.advective_surface(field, &prims, &mut out)?;
        }
        Ok(out)
    }

    fn q_surface_projected(&self, field: &ConservedField, e: usize) -> Result<Vec<State>> {
        let oi = self.overint.as_ref().expect("over-integration operators");
        let nq = oi.ops_q.n_points();
        let mut rq = vec![[0.0; NVAR]; nq * nq * nq];
        self.q_surface(field, e, &mut rq)?;
        Ok(apply_3d(&oi.project, [nq; 3], &rq))
    }

    fn advective_surface(&self, field: &ConservedField, prims: &[Primitive], out: &mut [State]) -> Result<()> {
        let npe = self.nodes_per_element();
        let w_end = self.ops.weights[0];
        for e in 0..self.mesh.n_cells() {
            let size = self.mesh.cell_size(e);
            for dir in 0..3 {
                for side in 0..2 {
                    let f = face_id(dir, side);
                    let coef = (2.0 / size[dir]) * if side == 1 { 1.0 } else { -1.0 } / w_end;
                    let nb = self.mesh.neighbor(e, f);
                    for (a, &n) in self.faces[f].iter().enumerate() {
                        let k = e * npe + n;
                        let other = match nb {
                            Neighbor::Cell(r) => {
                                let m = r * npe + self.faces[face_id(dir, 1 - side)][a];
                                Some((&field.data[m], &prims[m]))
                            }
                            Neighbor::Wall => None,
                        };
                        let fstar = self
                            .face_flux(&field.data[k], &prims[k], other, dir, side)
                            .map_err(|b| invalid(e, n, b, "wall ghost state"))?;
                        let fown = euler_flux(&prims[k], dir);
                        for q in 0..NVAR {
                            out[k][q] += coef * (fstar[q] - fown[q]);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn q_surface(&self, field: &ConservedField, e: usize, rq: &mut [State]) -> Result<()> {
        let oi = self.overint.as_ref().expect("over-integration operators");
        let size = self.mesh.cell_size(e);
        let w_end = oi.ops_q.weights[0];
        let npe = self.nodes_per_element();
        let elem = field.element(e);
        for dir in 0..3 {
            for side in 0..2 {
                let f = face_id(dir, side);
                let coef = (2.0 / size[dir]) * if side == 1 { 1.0 } else { -1.0 } / w_end;
                let own = self.q_trace(elem, f);
                let other = match self.mesh.neighbor(e, f) {
                    Neighbor::Cell(r) => Some(self.q_trace(&field.data[r * npe..(r + 1) * npe], face_id(dir, 1 - side))),
                    Neighbor::Wall => None,
                };
                for (a, &n) in oi.faces_q[f].iter().enumerate() {
                    let op = self
                        .gas
                        .primitive(&own[a])
                        .map_err(|b| invalid(e, n, b, "over-integration face node"))?;
                    let fstar = match &other {
                        Some(tr) => {
                            let rp = self
                                .gas
                                .primitive(&tr[a])
                                .map_err(|b| invalid(e, n, b, "over-integration neighbor face node"))?;
                            self.face_flux(&own[a], &op, Some((&tr[a], &rp)), dir, side)
                        }
                        None => self.face_flux(&own[a], &op, None, dir, side),
                    }
                    .map_err(|b| invalid(e, n, b, "wall ghost state"))?;
                    let fown = euler_flux(&op, dir);
                    for q in 0..NVAR {
                        rq[n][q] += coef * (fstar[q] - fown[q]);
                    }
                }
            }
        }
        Ok(())
    }

    fn turbulent_conductivity(&self, mu_t: f64) -> f64 {
        match self.scheme.sgs.turbulent_prandtl {
            Some(prt) => mu_t * self.gas.cp() / prt,
            None => 0.0,
        }
    }

    /// Viscous flux in `dir` including the SGS stress.
    #[inline]
    fn full_viscous_flux(&self, v: &[f64; 3], g: &FlowGradient, sgs: &SgsNode, dir: usize) -> State {
        let k = self.gas.conductivity() + self.turbulent_conductivity(sgs.mu_t);
        let mut f = viscous_flux_kernel(v, g, dir, self.gas.mu, k);
        for i in 0..3 {
            let s = sgs.stress[i][dir];
            f[1 + i] += s;
            f[4] += s * v[i];
        }
        f
    }

    /// SGS stresses at every node from the lifted gradients.
    pub fn sgs_stresses(&self, prims: &[Primitive], flow: &[FlowGradient]) -> Vec<SgsNode> {
        let npe = self.nodes_per_element();
        let mut out = vec![SgsNode::default(); prims.len()];
        if !self.sgs.is_active() {
            return out;
        }
        for e in 0..self.mesh.n_cells() {
            let r = e * npe..(e + 1) * npe;
            self.sgs.element(
                self.mesh.cell_size(e),
                &prims[r.clone()],
                &flow[r.clone()],
                &mut out[r],
            );
        }
        out
    }

    fn viscous_terms(&self, field: &ConservedField, prims: &[Primitive], out: &mut [State]) {
        let npe = self.nodes_per_element();
        let np = self.ops.n_points();
        let st = strides(np);
        let br2 = self.scheme.viscous == ViscousScheme::Br2;
        let (grad, broken) = lift_nodal(&self.mesh, &self.ops, &field.data, self.wall_fn(), br2);
        let flow: Vec<FlowGradient> = prims
            .iter()
            .zip(&grad)
            .map(|(p, g)| FlowGradient::from_conservative(&self.gas, p, g))
            .collect();
        let sgs = self.sgs_stresses(prims, &flow);
        let g_nodes: Vec<[State; 3]> = (0..prims.len())
            .map(|k| std::array::from_fn(|d| self.full_viscous_flux(&prims[k].v, &flow[k], &sgs[k], d)))
            .collect();
        let d = &self.ops.derivative;
        let w_end = self.ops.weights[0];
        let eta = self.scheme.eta_br;
        let eta_wall = self.scheme.eta_wall.unwrap_or(eta);
        let wall_fn = self.wall_fn();
        for e in 0..self.mesh.n_cells() {
            let size = self.mesh.cell_size(e);
            let off = e * npe;
            for dir in 0..3 {
                let scale = 2.0 / size[dir];
                for line in 0..np * np {
                    let base = off + line_base(np, dir, line);
                    for i in 0..np {
                        let ni = base + i * st[dir];
                        let row = d.row(i);
                        let mut acc = [0.0; NVAR];
                        for m in 0..np {
                            if m == i {
                                continue;
                            }
                            let gm = &g_nodes[base + m * st[dir]][dir];
                            for q in 0..NVAR {
                                acc[q] += row[m] * (gm[q] - g_nodes[ni][dir][q]);
                            }
                        }
                        add_scaled(&mut out[ni], scale, &acc);
                    }
                }
                for side in 0..2 {
                    let f = face_id(dir, side);
                    let coef = scale * if side == 1 { 1.0 } else { -1.0 } / w_end;
                    let nb = self.mesh.neighbor(e, f);
                    for (a, &n) in self.faces[f].iter().enumerate() {
                        let k = off + n;
                        let gstar = match nb {
                            Neighbor::Cell(r) => {
                                let m = r * npe + self.faces[face_id(dir, 1 - side)][a];
                                let (gl, gr) = if br2 {
                                    let b = broken.as_ref().expect("broken gradient");
                                    let ustar: State =
                                        std::array::from_fn(|q| 0.5 * (field.data[k][q] + field.data[m][q]));
                                    let side_flux = |idx: usize, s: usize, dx: f64| {
                                        let fg = self.br2_face_gradient(&b[idx], &field.data[idx], &ustar, dir, s, dx, eta);
                                        let fl = FlowGradient::from_conservative(&self.gas, &prims[idx], &fg);
                                        self.full_viscous_flux(&prims[idx].v, &fl, &sgs[idx], dir)
                                    };
                                    (
                                        side_flux(k, side, size[dir]),
                                        side_flux(m, 1 - side, self.mesh.cell_size(r)[dir]),
                                    )
                                } else {
                                    (g_nodes[k][dir], g_nodes[m][dir])
                                };
                                std::array::from_fn(|q| 0.5 * (gl[q] + gr[q]))
                            }
                            Neighbor::Wall => {
                                let fl = if br2 {
                                    let b = broken.as_ref().expect("broken gradient");
                                    let ustar = wall_fn(&field.data[k]);
                                    let fg = self.br2_face_gradient(&b[k], &field.data[k], &ustar, dir, side, size[dir], eta_wall);
                                    FlowGradient::from_conservative(&self.gas, &prims[k], &fg)
                                } else {
                                    flow[k]
                                };
                                self.full_viscous_flux(&[0.0; 3], &fl, &sgs[k], dir)
                            }
                        };
                        let gown = &g_nodes[k][dir];
                        for q in 0..NVAR {
                            out[k][q] += coef * (gstar[q] - gown[q]);
                        }
                    }
                }
            }
        }
    }

    /// `dU/dt` for the whole field, written into `out`.
    pub fn compute_rhs(&self, field: &ConservedField, out: &mut [State]) -> Result<()> {
        let prims = self.primitives(field)?;
        let npe = self.nodes_per_element();
        let mut adv = vec![[0.0; NVAR]; field.data.len()];
        match self.scheme.volume {
            VolumeMode::SplitPi => {
                for e in 0..self.mesh.n_cells() {
                    self.split_volume(e, &prims[e * npe..(e + 1) * npe], &mut adv[e * npe..(e + 1) * npe]);
                }
                self.advective_surface(field, &prims, &mut adv)?;
            }
            VolumeMode::Interpolation => {
                for e in 0..self.mesh.n_cells() {
                    self.standard_volume(e, &prims[e * npe..(e + 1) * npe], &mut adv[e * npe..(e + 1) * npe]);
                }
                self.advective_surface(field, &prims, &mut adv)?;
            }
            VolumeMode::OverIntegration => {
                let oi = self.overint.as_ref().expect("over-integration operators");
                let nq = oi.ops_q.n_points();
                let mut rq = vec![[0.0; NVAR]; nq * nq * nq];
                for e in 0..self.mesh.n_cells() {
                    let (_, pq) = self.to_q_grid(e, field.element(e))?;
                    rq.iter_mut().for_each(|r| *r = [0.0; NVAR]);
                    self.q_volume(e, &pq, &mut rq);
                    self.q_surface(field, e, &mut rq)?;
                    let r = apply_3d(&oi.project, [nq; 3], &rq);
                    adv[e * npe..(e + 1) * npe].copy_from_slice(&r);
                }
            }
        }
        for (o, a) in out.iter_mut().zip(&adv) {
            *o = a.map(|v| -v);
        }
        if self.is_viscous() {
            self.viscous_terms(field, &prims, out);
        }
        if self.body_force != 0.0 {
            let f = self.body_force;
            for (o, p) in out.iter_mut().zip(&prims) {
                o[1] += f;
                o[4] += f * p.v[0];
            }
        }
        Ok(())
    }

    /// Allocating convenience wrapper around [`Self::compute_rhs`].
    pub fn rhs(&self, field: &ConservedField) -> Result<Vec<State>> {
        let mut out = vec![[0.0; NVAR]; field.data.len()];
        self.compute_rhs(field, &mut out)?;
        Ok(out)
    }

    /// `w_i w_j w_k dx dy dz / 8` for node `n` of element `e`.
    #[inline]
    pub fn quadrature_weight(&self, e: usize, n: usize) -> f64 {
        let np = self.ops.n_points();
        let s = self.mesh.cell_size(e);
        let w = &self.ops.weights;
        w[n % np] * w[(n / np) % np] * w[n / (np * np)] * s[0] * s[1] * s[2] / 8.0
    }
}
