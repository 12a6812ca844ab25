//! Nodal solution storage and the binary field/checkpoint format.
//!
//! Node order inside an element is `i + n (j + n k)` with `n = N + 1` and
//! `i` running along `x`. Elements follow the mesh cell order.
//!
//! File layout (little-endian):
//!
//! ```text
//! magic    8 bytes  "SPLITDG\0"
//! version  u32      1
//! n1 n2 n3 N        u64 x 4
//! time     f64
//! boundary u8 x 3   0 = periodic, 1 = wall
//! edges    f64 x (n_d + 1) for d = 0, 1, 2
//! values   f64 x 5 per node, nodes in element order then node order
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{BoundaryKind, Mesh};
use crate::physics::{GasModel, State, NVAR};

pub const FIELD_MAGIC: &[u8; 8] = b"SPLITDG\0";
pub const FIELD_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct ConservedField {
    pub mesh: Arc<Mesh>,
    pub degree: usize,
    pub time: f64,
    pub data: Vec<State>,
}

impl ConservedField {
    pub fn zeros(mesh: Arc<Mesh>, degree: usize) -> Self {
        let n = mesh.n_cells() * (degree + 1).pow(3);
        Self {
            mesh,
            degree,
            time: 0.0,
            data: vec![[0.0; NVAR]; n],
        }
    }

    #[inline]
    pub fn nodes_per_element(&self) -> usize {
        (self.degree + 1).pow(3)
    }

    pub fn element(&self, e: usize) -> &[State] {
        let n = self.nodes_per_element();
        &self.data[e * n..(e + 1) * n]
    }

    pub fn element_mut(&mut self, e: usize) -> &mut [State] {
        let n = self.nodes_per_element();
        &mut self.data[e * n..(e + 1) * n]
    }

    /// Fill every node from a function of physical position.
    pub fn fill(&mut self, nodes_1d: &[f64], f: impl Fn([f64; 3]) -> State) {
        let np = self.degree + 1;
        for e in 0..self.mesh.n_cells() {
            let origin = self.mesh.cell_origin(e);
            let size = self.mesh.cell_size(e);
            let block = &mut self.data[e * np * np * np..(e + 1) * np * np * np];
            for k in 0..np {
                for j in 0..np {
                    for i in 0..np {
                        let x = node_position(origin, size, nodes_1d, [i, j, k]);
                        block[i + np * (j + np * k)] = f(x);
                    }
                }
            }
        }
    }

    /// Checks every node for positive density and pressure.
    pub fn validate(&self, gas: &GasModel) -> Result<()> {
        let npe = self.nodes_per_element();
        for (idx, u) in self.data.iter().enumerate() {
            if let Err(bad) = gas.primitive(u) {
                return Err(Error::InvalidState {
                    element: idx / npe,
                    node: idx % npe,
                    density: bad.density,
                    pressure: bad.pressure,
                    context: None,
                });
            }
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut write = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
        write(FIELD_MAGIC)?;
        write(&FIELD_VERSION.to_le_bytes())?;
        for n in self.mesh.cells() {
            write(&(n as u64).to_le_bytes())?;
        }
        write(&(self.degree as u64).to_le_bytes())?;
        write(&self.time.to_le_bytes())?;
        for d in 0..3 {
            let b: u8 = match self.mesh.boundary(d) {
                BoundaryKind::Periodic => 0,
                BoundaryKind::Wall => 1,
            };
            write(&[b])?;
        }
        for d in 0..3 {
            for x in self.mesh.edges(d) {
                write(&x.to_le_bytes())?;
            }
        }
        for u in &self.data {
            for v in u {
                write(&v.to_le_bytes())?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let fmt_err = |message: String| Error::Format {
            path: path.to_path_buf(),
            message,
        };
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|_| fmt_err("file too short for header".into()))?;
        if &magic != FIELD_MAGIC {
            return Err(fmt_err(format!(
                "bad magic {:?}, expected {:?} (version {FIELD_VERSION})",
                String::from_utf8_lossy(&magic),
                String::from_utf8_lossy(FIELD_MAGIC)
            )));
        }
        let mut read = |buf: &mut [u8]| {
            r.read_exact(buf)
                .map_err(|_| fmt_err("unexpected end of file".into()))
        };
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        read(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != FIELD_VERSION {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!("unsupported version {version}, expected {FIELD_VERSION}"),
            });
        }
        let mut dims = [0usize; 4];
        for d in dims.iter_mut() {
            read(&mut b8)?;
            *d = u64::from_le_bytes(b8) as usize;
        }
        read(&mut b8)?;
        let time = f64::from_le_bytes(b8);
        let mut boundary = [BoundaryKind::Periodic; 3];
        for b in boundary.iter_mut() {
            let mut one = [0u8; 1];
            read(&mut one)?;
            *b = match one[0] {
                0 => BoundaryKind::Periodic,
                1 => BoundaryKind::Wall,
                other => {
                    return Err(Error::Format {
                        path: path.to_path_buf(),
                        message: format!("unknown boundary tag {other}"),
                    })
                }
            };
        }
        if dims[..3].iter().any(|&n| n == 0 || n > 1 << 20) || dims[3] == 0 || dims[3] > 64 {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!("implausible dimensions {dims:?}"),
            });
        }
        let mut edges: [Vec<f64>; 3] = Default::default();
        for d in 0..3 {
            for _ in 0..=dims[d] {
                read(&mut b8)?;
                edges[d].push(f64::from_le_bytes(b8));
            }
        }
        let mesh = Mesh::from_edges(edges, boundary).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut field = ConservedField::zeros(Arc::new(mesh), dims[3]);
        field.time = time;
        for u in field.data.iter_mut() {
            for v in u.iter_mut() {
                read(&mut b8)?;
                *v = f64::from_le_bytes(b8);
            }
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest).map_err(|e| Error::io(path, e))? != 0 {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: "trailing data after field values".into(),
            });
        }
        Ok(field)
    }
}

/// Physical position of node `(i, j, k)` of a cell.
#[inline]
pub fn node_position(origin: [f64; 3], size: [f64; 3], nodes_1d: &[f64], idx: [usize; 3]) -> [f64; 3] {
    std::array::from_fn(|d| origin[d] + 0.5 * size[d] * (nodes_1d[idx[d]] + 1.0))
}

/// Gradients of the conservative variables at every node; entry `[d]`
/// holds `dU/dx_d`.
#[derive(Clone, Debug)]
pub struct GradientField {
    pub degree: usize,
    pub data: Vec<[State; 3]>,
}

impl GradientField {
    pub fn zeros(n_nodes: usize, degree: usize) -> Self {
        Self {
            degree,
            data: vec![[[0.0; NVAR]; 3]; n_nodes],
        }
    }
}
