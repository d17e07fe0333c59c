use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

struct Inner {
    nz: usize,
    depth: f64,
    nodes: Vec<f64>,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
    weights: Vec<f64>,
    d1t: DMatrix<f64>,
    d2t: DMatrix<f64>,
    // row-major inverse of the bordered collocation matrix for (d_z^2 - |xi|^2), keyed by |xi|^2
    flat_inverse: RwLock<HashMap<i64, Arc<Vec<f64>>>>,
}

/// Chebyshev-Gauss-Lobatto nodes on `[-h, 0]`, ordered from the surface
/// `z_0 = 0` down to the bottom `z_{Nz-1} = -h`.
#[derive(Clone)]
pub struct VerticalGrid {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for VerticalGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VerticalGrid")
            .field("nz", &self.inner.nz)
            .field("depth", &self.inner.depth)
            .finish()
    }
}

impl PartialEq for VerticalGrid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.nz == other.inner.nz && self.inner.depth.to_bits() == other.inner.depth.to_bits()
    }
}

/// Differentiation matrix on `x_j = cos(pi j / n)`, `j = 0..=n`.
fn cheb_diff(n: usize) -> DMatrix<f64> {
    let np = n + 1;
    let c = |i: usize| {
        let base = if i == 0 || i == n { 2.0 } else { 1.0 };
        if i % 2 == 0 { base } else { -base }
    };
    let mut d = DMatrix::zeros(np, np);
    for i in 0..np {
        for j in 0..np {
            if i != j {
                // x_i - x_j via product of sines, avoids cancellation
                let diff = -2.0
                    * ((PI * (i + j) as f64) / (2.0 * n as f64)).sin()
                    * ((PI * (i as f64 - j as f64)) / (2.0 * n as f64)).sin();
                d[(i, j)] = c(i) / c(j) / diff;
            }
        }
    }
    negative_sum_diagonal(&mut d);
    d
}

fn negative_sum_diagonal(d: &mut DMatrix<f64>) {
    for i in 0..d.nrows() {
        let mut s = 0.0;
        for j in 0..d.ncols() {
            if i != j {
                s += d[(i, j)];
            }
        }
        d[(i, i)] = -s;
    }
}

/// Clenshaw-Curtis weights on `x_j = cos(pi j / n)` for `[-1, 1]`.
fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut w = vec![0.0; n + 1];
    let theta = |j: usize| PI * j as f64 / nf;
    let end = if n % 2 == 0 { 1.0 / (nf * nf - 1.0) } else { 1.0 / (nf * nf) };
    w[0] = end;
    w[n] = end;
    for (i, wi) in w.iter_mut().enumerate().take(n).skip(1) {
        let mut v = 1.0;
        for k in 1..=(n - 1) / 2 {
            let kf = k as f64;
            v -= 2.0 * (2.0 * kf * theta(i)).cos() / (4.0 * kf * kf - 1.0);
        }
        if n % 2 == 0 {
            v -= (nf * theta(i)).cos() / (nf * nf - 1.0);
        }
        *wi = 2.0 * v / nf;
    }
    w
}

impl VerticalGrid {
    pub fn new(nz: usize, depth: f64) -> Result<Self> {
        if nz < 8 {
            return Err(Error::InvalidParameter {
                key: "Nz".into(),
                reason: format!("need at least 8 vertical nodes, got {nz}"),
            });
        }
        if !(depth > 0.0 && depth.is_finite()) {
            return Err(Error::InvalidParameter {
                key: "h".into(),
                reason: format!("depth must be positive, got {depth}"),
            });
        }
        let n = nz - 1;
        let scale = 2.0 / depth;
        let dx = cheb_diff(n);
        let mut d2 = &dx * &dx;
        negative_sum_diagonal(&mut d2);
        let d1 = dx * scale;
        let d2 = d2 * (scale * scale);
        let nodes = (0..nz)
            .map(|j| 0.5 * depth * ((PI * j as f64 / n as f64).cos() - 1.0))
            .collect();
        let weights = clenshaw_curtis(n).into_iter().map(|w| w * 0.5 * depth).collect();
        Ok(VerticalGrid {
            inner: Arc::new(Inner {
                nz,
                depth,
                nodes,
                d1t: d1.transpose(),
                d2t: d2.transpose(),
                d1,
                d2,
                weights,
                flat_inverse: RwLock::new(HashMap::new()),
            }),
        })
    }

    pub fn nz(&self) -> usize {
        self.inner.nz
    }

    pub fn depth(&self) -> f64 {
        self.inner.depth
    }

    pub fn nodes(&self) -> &[f64] {
        &self.inner.nodes
    }

    /// `d/dz` on the nodes.
    pub fn d1(&self) -> &DMatrix<f64> {
        &self.inner.d1
    }

    /// `d^2/dz^2` on the nodes.
    pub fn d2(&self) -> &DMatrix<f64> {
        &self.inner.d2
    }

    pub(crate) fn d1t(&self) -> &DMatrix<f64> {
        &self.inner.d1t
    }

    pub(crate) fn d2t(&self) -> &DMatrix<f64> {
        &self.inner.d2t
    }

    /// Clenshaw-Curtis weights for `int_{-h}^0 dz`.
    pub fn weights(&self) -> &[f64] {
        &self.inner.weights
    }

    /// Inverse of the collocation matrix of `d_z^2 - k2` with a Dirichlet row
    /// at `z = 0` and a Neumann row at `z = -h`, stored row-major.
    pub(crate) fn flat_inverse(&self, k2: i64) -> Result<Arc<Vec<f64>>> {
        if let Some(m) = self.inner.flat_inverse.read().unwrap().get(&k2) {
            return Ok(m.clone());
        }
        let nz = self.inner.nz;
        let mut a = self.inner.d2.clone();
        for i in 0..nz {
            a[(i, i)] -= k2 as f64;
        }
        for j in 0..nz {
            a[(0, j)] = if j == 0 { 1.0 } else { 0.0 };
            a[(nz - 1, j)] = self.inner.d1[(nz - 1, j)];
        }
        let inv = a.try_inverse().ok_or(Error::SingularCollocation { xi_norm_sq: k2 })?;
        if inv.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularCollocation { xi_norm_sq: k2 });
        }
        let inv = Arc::new(inv.transpose().as_slice().to_vec());
        self.inner.flat_inverse.write().unwrap().insert(k2, inv.clone());
        Ok(inv)
    }
}
