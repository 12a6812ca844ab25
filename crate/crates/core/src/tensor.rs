//! Tensor-product application of 1D matrices to nodal element blocks.

use crate::operators::Matrix;

/// Applies `a` (`m x n`) along direction `dir` of a block stored with
/// dimensions `dims` (index `i + d0 (j + d1 k)`), producing a block whose
/// `dir` extent is `m`. Each node carries `K` components.
pub fn apply_along<const K: usize>(
    a: &Matrix,
    dir: usize,
    dims: [usize; 3],
    input: &[[f64; K]],
    output: &mut Vec<[f64; K]>,
) -> [usize; 3] {
    debug_assert_eq!(a.cols(), dims[dir]);
    debug_assert_eq!(input.len(), dims.iter().product::<usize>());
    let mut out_dims = dims;
    out_dims[dir] = a.rows();
    output.clear();
    output.resize(out_dims.iter().product(), [0.0; K]);
    let in_stride = [1, dims[0], dims[0] * dims[1]];
    let out_stride = [1, out_dims[0], out_dims[0] * out_dims[1]];
    let (o1, o2) = match dir {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    for b in 0..dims[o2] {
        for c in 0..dims[o1] {
            let in_base = c * in_stride[o1] + b * in_stride[o2];
            let out_base = c * out_stride[o1] + b * out_stride[o2];
            for r in 0..a.rows() {
                let row = a.row(r);
                let mut acc = [0.0; K];
                for (m, coeff) in row.iter().enumerate() {
                    if *coeff == 0.0 {
                        continue;
                    }
                    let v = &input[in_base + m * in_stride[dir]];
                    for q in 0..K {
                        acc[q] += coeff * v[q];
                    }
                }
                output[out_base + r * out_stride[dir]] = acc;
            }
        }
    }
    out_dims
}

/// Applies `a` along all three directions (`a x a x a`).
pub fn apply_3d<const K: usize>(a: &Matrix, dims: [usize; 3], input: &[[f64; K]]) -> Vec<[f64; K]> {
    let mut t1 = Vec::new();
    let mut t2 = Vec::new();
    let d1 = apply_along(a, 0, dims, input, &mut t1);
    let d2 = apply_along(a, 1, d1, &t1, &mut t2);
    apply_along(a, 2, d2, &t2, &mut t1);
    t1
}

/// Applies `a` along `x` and `z` only.
pub fn apply_xz<const K: usize>(a: &Matrix, dims: [usize; 3], input: &[[f64; K]]) -> Vec<[f64; K]> {
    let mut t1 = Vec::new();
    let mut t2 = Vec::new();
    let d1 = apply_along(a, 0, dims, input, &mut t1);
    apply_along(a, 2, d1, &t1, &mut t2);
    t2
}

/// Node indices of a face: `dir` fixed at `0` (`side = 0`) or `n - 1`
/// (`side = 1`), ordered by the remaining two directions in increasing
/// direction order. Two elements sharing a face list matching nodes at
/// the same position.
pub fn face_nodes(n: usize, dir: usize, side: usize) -> Vec<usize> {
    let fixed = side * (n - 1);
    let mut out = Vec::with_capacity(n * n);
    for b in 0..n {
        for a in 0..n {
            let idx = match dir {
                0 => [fixed, a, b],
                1 => [a, fixed, b],
                _ => [a, b, fixed],
            };
            out.push(idx[0] + n * (idx[1] + n * idx[2]));
        }
    }
    out
}
