//! Structured Cartesian hexahedral meshes.
//!
//! Cells are stored lexicographically, `cell = c0 + n0 * (c1 + n1 * c2)`.
//! Faces of a cell are numbered `2 * dir + side` with `side = 0` the lower
//! face and `side = 1` the upper face in direction `dir`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Periodic,
    Wall,
}

/// Neighbor across a cell face.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Neighbor {
    Cell(usize),
    Wall,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    cells: [usize; 3],
    edges: [Vec<f64>; 3],
    boundary: [BoundaryKind; 3],
    neighbors: Vec<[Neighbor; 6]>,
}

impl Mesh {
    /// Builds a mesh from explicit edge coordinates.
    pub fn from_edges(edges: [Vec<f64>; 3], boundary: [BoundaryKind; 3]) -> Result<Self> {
        for (d, e) in edges.iter().enumerate() {
            if e.len() < 2 {
                return Err(Error::InvalidArgument(format!(
                    "direction {d} needs at least one cell"
                )));
            }
            if !e.windows(2).all(|w| w[1] > w[0]) || e.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "cell edges in direction {d} must be finite and strictly increasing"
                )));
            }
        }
        let cells = [edges[0].len() - 1, edges[1].len() - 1, edges[2].len() - 1];
        let mut mesh = Self {
            cells,
            edges,
            boundary,
            neighbors: Vec::new(),
        };
        mesh.neighbors = (0..mesh.n_cells())
            .map(|c| {
                let idx = mesh.cell_coords(c);
                let mut nb = [Neighbor::Wall; 6];
                for d in 0..3 {
                    for side in 0..2 {
                        nb[2 * d + side] = mesh.neighbor_of(idx, d, side);
                    }
                }
                nb
            })
            .collect();
        Ok(mesh)
    }

    fn neighbor_of(&self, idx: [usize; 3], dir: usize, side: usize) -> Neighbor {
        let n = self.cells[dir];
        let i = idx[dir];
        let j = if side == 0 {
            if i == 0 {
                match self.boundary[dir] {
                    BoundaryKind::Periodic => n - 1,
                    BoundaryKind::Wall => return Neighbor::Wall,
                }
            } else {
                i - 1
            }
        } else if i + 1 == n {
            match self.boundary[dir] {
                BoundaryKind::Periodic => 0,
                BoundaryKind::Wall => return Neighbor::Wall,
            }
        } else {
            i + 1
        };
        let mut other = idx;
        other[dir] = j;
        Neighbor::Cell(self.cell_index(other))
    }

    #[inline]
    pub fn cells(&self) -> [usize; 3] {
        self.cells
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.cells.iter().product()
    }

    #[inline]
    pub fn edges(&self, dir: usize) -> &[f64] {
        &self.edges[dir]
    }

    #[inline]
    pub fn boundary(&self, dir: usize) -> BoundaryKind {
        self.boundary[dir]
    }

    pub fn is_fully_periodic(&self) -> bool {
        self.boundary.iter().all(|b| *b == BoundaryKind::Periodic)
    }

    /// Domain extent `last edge - first edge` per direction.
    pub fn lengths(&self) -> [f64; 3] {
        std::array::from_fn(|d| self.edges[d][self.cells[d]] - self.edges[d][0])
    }

    pub fn volume(&self) -> f64 {
        self.lengths().iter().product()
    }

    #[inline]
    pub fn cell_index(&self, idx: [usize; 3]) -> usize {
        idx[0] + self.cells[0] * (idx[1] + self.cells[1] * idx[2])
    }

    #[inline]
    pub fn cell_coords(&self, cell: usize) -> [usize; 3] {
        let c0 = cell % self.cells[0];
        let rest = cell / self.cells[0];
        [c0, rest % self.cells[1], rest / self.cells[1]]
    }

    /// Cell size `(dx, dy, dz)`.
    #[inline]
    pub fn cell_size(&self, cell: usize) -> [f64; 3] {
        let idx = self.cell_coords(cell);
        std::array::from_fn(|d| self.edges[d][idx[d] + 1] - self.edges[d][idx[d]])
    }

    /// Lower corner of a cell.
    pub fn cell_origin(&self, cell: usize) -> [f64; 3] {
        let idx = self.cell_coords(cell);
        std::array::from_fn(|d| self.edges[d][idx[d]])
    }

    #[inline]
    pub fn neighbor(&self, cell: usize, face: usize) -> Neighbor {
        self.neighbors[cell][face]
    }

    pub fn min_cell_size(&self) -> f64 {
        (0..3)
            .flat_map(|d| self.edges[d].windows(2).map(|w| w[1] - w[0]))
            .fold(f64::INFINITY, f64::min)
    }
}

fn uniform_edges(n: usize, start: f64, length: f64) -> Vec<f64> {
    (0..=n)
        .map(|i| {
            if i == n {
                start + length
            } else {
                start + length * i as f64 / n as f64
            }
        })
        .collect()
}

/// Fully periodic box `[0, L0] x [0, L1] x [0, L2]` with uniform cells.
pub fn build_periodic_box(cells: [usize; 3], lengths: [f64; 3]) -> Result<Mesh> {
    if cells.iter().any(|&n| n == 0) {
        return Err(Error::InvalidArgument("periodic box needs at least one cell per direction".into()));
    }
    if lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::InvalidArgument("domain lengths must be positive".into()));
    }
    Mesh::from_edges(
        std::array::from_fn(|d| uniform_edges(cells[d], 0.0, lengths[d])),
        [BoundaryKind::Periodic; 3],
    )
}

/// Channel cell sizes across `[-1, 1]`: symmetric bell profile
/// `h ~ 1 + (r - 1) g`, with `g` the min/max-normalized `sin(pi s)` of the
/// cell-center coordinate `s in (0, 1)`. The largest cell is exactly `r`
/// times the smallest; the smallest cells touch the walls.
pub fn bell_cell_sizes(n: usize, ratio: f64) -> Vec<f64> {
    let g: Vec<f64> = (0..n)
        .map(|c| (PI * (c as f64 + 0.5) / n as f64).sin())
        .collect();
    let gmin = g.iter().cloned().fold(f64::INFINITY, f64::min);
    let gmax = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = gmax - gmin;
    let raw: Vec<f64> = g
        .iter()
        .map(|&v| {
            let s = if span > 0.0 { (v - gmin) / span } else { 0.0 };
            1.0 + (ratio - 1.0) * s
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|h| 2.0 * h / total).collect()
}

/// Channel box `[0, 2pi] x [-1, 1] x [0, pi]`, walls in `y`.
pub fn build_channel_box(cells: [usize; 3], stretch_ratio: f64) -> Result<Mesh> {
    if cells[0] == 0 || cells[2] == 0 {
        return Err(Error::InvalidArgument("channel needs at least one cell in x and z".into()));
    }
    if cells[1] < 2 {
        return Err(Error::InvalidArgument("channel needs at least two cells across".into()));
    }
    if !(stretch_ratio >= 1.0) || !stretch_ratio.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "stretch ratio must be >= 1, got {stretch_ratio}"
        )));
    }
    let sizes = bell_cell_sizes(cells[1], stretch_ratio);
    let n = cells[1];
    let mut y = vec![0.0; n + 1];
    // build from both walls towards the center so the edges are exactly
    // antisymmetric
    y[0] = -1.0;
    y[n] = 1.0;
    for c in 0..n / 2 {
        y[c + 1] = y[c] + sizes[c];
        y[n - c - 1] = -y[c + 1];
    }
    if n % 2 == 0 {
        y[n / 2] = 0.0;
    }
    Mesh::from_edges(
        [
            uniform_edges(cells[0], 0.0, 2.0 * PI),
            y,
            uniform_edges(cells[2], 0.0, PI),
        ],
        [BoundaryKind::Periodic, BoundaryKind::Wall, BoundaryKind::Periodic],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn face_sides_consistent(mesh: &Mesh) {
        for c in 0..mesh.n_cells() {
            for d in 0..3 {
                for side in 0..2 {
                    if let Neighbor::Cell(nb) = mesh.neighbor(c, 2 * d + side) {
                        assert_eq!(mesh.neighbor(nb, 2 * d + (1 - side)), Neighbor::Cell(c));
                    }
                }
            }
        }
    }

    #[test]
    fn dhit_box() {
        let m = build_periodic_box([6, 6, 6], [2.0 * PI; 3]).unwrap();
        assert_eq!(m.n_cells(), 216);
        for c in 0..m.n_cells() {
            for h in m.cell_size(c) {
                assert!((h - PI / 3.0).abs() < 1e-14);
            }
        }
        face_sides_consistent(&m);
    }

    #[test]
    fn single_cell_is_its_own_neighbor() {
        let m = build_periodic_box([1, 1, 1], [1.0; 3]).unwrap();
        for f in 0..6 {
            assert_eq!(m.neighbor(0, f), Neighbor::Cell(0));
        }
    }

    #[test]
    fn zero_cells_rejected() {
        assert!(build_periodic_box([0, 2, 2], [1.0; 3]).is_err());
        assert!(build_periodic_box([2, 2, 2], [1.0, -1.0, 1.0]).is_err());
    }

    #[test]
    fn dof_per_direction() {
        let m = build_periodic_box([18, 18, 18], [2.0 * PI; 3]).unwrap();
        assert_eq!(m.cells()[0] * (7 + 1), 144);
    }

    #[test]
    fn channel_stretching() {
        let m = build_channel_box([8, 8, 8], 4.0).unwrap();
        assert_eq!(m.n_cells(), 512);
        let y = m.edges(1);
        let h: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
        for i in 0..8 {
            assert!((y[i] + y[8 - i]).abs() < 1e-15);
            assert!((h[i] - h[7 - i]).abs() < 1e-14);
        }
        let hmin = h.iter().cloned().fold(f64::INFINITY, f64::min);
        let hmax = h.iter().cloned().fold(0.0, f64::max);
        assert!((hmax / hmin - 4.0).abs() < 1e-12);
        assert_eq!(hmin, h[0]);
        assert!((h.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        face_sides_consistent(&m);
        // walls only in y
        assert_eq!(m.neighbor(0, 2), Neighbor::Wall);
        assert!(matches!(m.neighbor(0, 0), Neighbor::Cell(_)));
    }

    #[test]
    fn channel_wall_units_match_reported_spacings() {
        // equidistant inner-cell spacing h/(N+1), N = 7, Re_tau = 590
        let m = build_channel_box([8, 8, 8], 4.0).unwrap();
        let h: Vec<f64> = m.edges(1).windows(2).map(|w| w[1] - w[0]).collect();
        let re_tau = 590.0;
        let dy_min = h[0] / 8.0 * re_tau;
        let dy_max = h[3] / 8.0 * re_tau;
        let dx = 2.0 * PI / 8.0 / 8.0 * re_tau;
        let dz = PI / 8.0 / 8.0 * re_tau;
        assert!((dy_min / 7.0 - 1.0).abs() < 0.2, "dy+min {dy_min}");
        assert!((dy_max / 28.0 - 1.0).abs() < 0.2, "dy+max {dy_max}");
        assert!((dx - 58.0).abs() < 1.0);
        assert!((dz - 29.0).abs() < 1.0);
    }

    #[test]
    fn unit_ratio_is_uniform() {
        let m = build_channel_box([2, 5, 2], 1.0).unwrap();
        for w in m.edges(1).windows(2) {
            assert!((w[1] - w[0] - 0.4).abs() < 1e-14);
        }
        assert!(build_channel_box([2, 4, 2], 0.5).is_err());
        assert!(build_channel_box([2, 1, 2], 2.0).is_err());
    }
}
