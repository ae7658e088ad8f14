//! Landmark preprocessing, polar decomposition and shape coordinates.
//!
//! A configuration `X` (N landmarks × K coordinates) is whitened on the right
//! by `Θ^{-1/2}` and centered on the left by the Helmert submatrix `L`, giving
//! `Y = L X Θ^{-1/2}` of size `n × K` with `n = N − 1`. Its polar factors are
//! `Y = R H` with `R = (Y Yᵀ)^{1/2}` and `H` on the Stiefel manifold. The
//! shape is `W = R / r`, `r = ‖R‖_F`.
//!
//! Shape coordinates use the weighted half-vectorization of `W`: the lower
//! triangle read column by column, with off-diagonal entries scaled by √2 so
//! that the vector's Euclidean norm equals `‖W‖_F = 1`. Its `p = n(n+1)/2`
//! entries are then written in hyperspherical angles
//!
//! ```text
//! x_1 = cos θ_1,  x_k = sin θ_1 ⋯ sin θ_{k-1} cos θ_k,  x_p = sin θ_1 ⋯ sin θ_{p-1}
//! ```
//!
//! giving `m = p − 1` angles `u`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Landmark count `N` and coordinate dimension `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub landmarks: usize,
    pub coords: usize,
}

impl Dims {
    pub fn new(landmarks: usize, coords: usize) -> Result<Self> {
        if landmarks < 3 {
            return Err(Error::invalid(format!(
                "at least 3 landmarks are needed, got {landmarks}"
            )));
        }
        if coords + 1 < landmarks {
            return Err(Error::invalid(format!(
                "polar shape needs K ≥ N − 1, got N = {landmarks}, K = {coords}"
            )));
        }
        Ok(Dims { landmarks, coords })
    }

    /// `n = N − 1`, the order of `R` and `W`.
    pub fn n(&self) -> usize {
        self.landmarks - 1
    }

    /// `p = n(n+1)/2`, the number of free entries of `W`.
    pub fn p(&self) -> usize {
        let n = self.n();
        n * (n + 1) / 2
    }

    /// `m = p − 1`, the number of shape angles.
    pub fn m(&self) -> usize {
        self.p() - 1
    }

    /// `nK`, the dimension of the reduced configuration `Y`.
    pub fn reduced_dim(&self) -> usize {
        self.n() * self.coords
    }
}

/// One raw configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkMatrix {
    values: DMatrix<f64>,
}

impl LandmarkMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        Dims::new(values.nrows(), values.ncols())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("landmark matrix has non-finite entries"));
        }
        Ok(LandmarkMatrix { values })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn dims(&self) -> Dims {
        Dims {
            landmarks: self.values.nrows(),
            coords: self.values.ncols(),
        }
    }
}

/// Helmert-reduced, whitened configuration `Y = L X Θ^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredConfig {
    pub y: DMatrix<f64>,
}

/// `Y = R H`, with a flag raised when `Y` is rank deficient.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarFactors {
    pub r: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub degenerate: bool,
}

/// Size `r`, shape `W` and shape angles `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarShape {
    pub w: DMatrix<f64>,
    pub r: f64,
    pub u: Vec<f64>,
}

impl PolarShape {
    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    /// Unit-size shape with angles `u`, failing outside the positive definite
    /// region.
    pub fn from_angles(u: &[f64]) -> Result<Self> {
        let w = angles_to_shape(u)?;
        Ok(PolarShape {
            w,
            r: 1.0,
            u: u.to_vec(),
        })
    }

    /// Unit-size shape from a unit-norm symmetric matrix.
    pub fn from_shape_matrix(w: &DMatrix<f64>) -> Result<Self> {
        let u = shape_to_angles(w)?;
        Ok(PolarShape {
            w: (w + w.transpose()) * 0.5,
            r: 1.0,
            u,
        })
    }

    /// Eigenvalues of `W`, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        sorted_eigenvalues(&self.w)
    }
}

/// The `(N−1) × N` Helmert submatrix; row `j` is
/// `(−1, …, −1, j, 0, …, 0) / √(j(j+1))`.
pub fn helmert_submatrix(n_landmarks: usize) -> Result<DMatrix<f64>> {
    if n_landmarks < 2 {
        return Err(Error::invalid(format!(
            "Helmert submatrix needs N ≥ 2, got {n_landmarks}"
        )));
    }
    let mut l = DMatrix::zeros(n_landmarks - 1, n_landmarks);
    for j in 1..n_landmarks {
        let norm = ((j * (j + 1)) as f64).sqrt();
        for c in 0..j {
            l[(j - 1, c)] = -1.0 / norm;
        }
        l[(j - 1, j)] = j as f64 / norm;
    }
    Ok(l)
}

pub(crate) fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// `S^power` for a symmetric positive definite `S`, through its
/// eigendecomposition.
pub fn spd_power(s: &DMatrix<f64>, power: f64, what: &str) -> Result<DMatrix<f64>> {
    if !s.is_square() {
        return Err(Error::invalid(format!("{what} must be square")));
    }
    let scale = s.norm().max(f64::MIN_POSITIVE);
    if (s - s.transpose()).norm() > 1e-10 * scale {
        return Err(Error::invalid(format!("{what} must be symmetric")));
    }
    let sym = (s + s.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::NotPositiveDefinite {
                what: what.to_string(),
                index: i,
                eigenvalue: v,
            });
        }
    }
    let d = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|v| v.powf(power)),
    );
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&d) * q.transpose())
}

/// `Y = L X Θ^{-1/2}`.
pub fn whiten_and_center(x: &LandmarkMatrix, theta: &DMatrix<f64>) -> Result<CenteredConfig> {
    let k = x.dims().coords;
    if theta.nrows() != k || theta.ncols() != k {
        return Err(Error::invalid(format!(
            "Θ must be {k}×{k}, got {}×{}",
            theta.nrows(),
            theta.ncols()
        )));
    }
    let l = helmert_submatrix(x.dims().landmarks)?;
    let inv_sqrt = spd_power(theta, -0.5, "Θ")?;
    Ok(CenteredConfig {
        y: l * x.values() * inv_sqrt,
    })
}

/// Helmert centering without whitening.
pub fn center(x: &LandmarkMatrix) -> CenteredConfig {
    let l = helmert_submatrix(x.dims().landmarks).expect("landmark matrices have N ≥ 3");
    CenteredConfig { y: l * x.values() }
}

/// Polar factors from the SVD `Y = P D Qᵀ`: `R = P D Pᵀ`, `H = P Qᵀ`.
pub fn polar_decompose(y: &CenteredConfig) -> Result<PolarFactors> {
    let (n, k) = y.y.shape();
    if n == 0 || n > k {
        return Err(Error::invalid(format!(
            "polar decomposition needs 1 ≤ rows ≤ columns, got {n}×{k}"
        )));
    }
    let svd = y.y.clone().svd(true, true);
    let p = svd.u.as_ref().expect("left vectors requested");
    let qt = svd.v_t.as_ref().expect("right vectors requested");
    let d = &svd.singular_values;
    let r = p * DMatrix::from_diagonal(d) * p.transpose();
    let h = p * qt;
    let smax = d.iter().cloned().fold(0.0, f64::max);
    let smin = d.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(PolarFactors {
        r: (&r + r.transpose()) * 0.5,
        h,
        degenerate: !(smin > 1e-12 * smax),
    })
}

/// Weighted half-vectorization: lower triangle by columns, off-diagonals × √2.
pub fn weighted_vech(w: &DMatrix<f64>) -> Vec<f64> {
    let n = w.nrows();
    let mut v = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        v.push(w[(j, j)]);
        for i in (j + 1)..n {
            v.push(std::f64::consts::SQRT_2 * 0.5 * (w[(i, j)] + w[(j, i)]));
        }
    }
    v
}

/// Inverse of [`weighted_vech`].
pub fn weighted_unvech(v: &[f64], n: usize) -> Result<DMatrix<f64>> {
    if v.len() != n * (n + 1) / 2 {
        return Err(Error::invalid(format!(
            "expected {} coordinates for order {n}, got {}",
            n * (n + 1) / 2,
            v.len()
        )));
    }
    let mut w = DMatrix::zeros(n, n);
    let mut it = v.iter();
    for j in 0..n {
        w[(j, j)] = *it.next().unwrap();
        for i in (j + 1)..n {
            let x = it.next().unwrap() / std::f64::consts::SQRT_2;
            w[(i, j)] = x;
            w[(j, i)] = x;
        }
    }
    Ok(w)
}

/// Order `n` with `n(n+1)/2 = p`.
pub fn order_from_coordinates(p: usize) -> Result<usize> {
    let mut n = 1;
    while n * (n + 1) / 2 < p {
        n += 1;
    }
    if n * (n + 1) / 2 != p {
        return Err(Error::invalid(format!("{p} is not a triangular number")));
    }
    Ok(n)
}

/// `r = ‖R‖_F`, `W = R / r` and the angles of `W`.
pub fn shape_of(r_mat: &DMatrix<f64>) -> Result<PolarShape> {
    if !r_mat.is_square() {
        return Err(Error::invalid("R must be square"));
    }
    let r = r_mat.norm();
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::invalid("R must be a nonzero finite matrix"));
    }
    let w = (r_mat + r_mat.transpose()) * (0.5 / r);
    let u = shape_to_angles(&w)?;
    Ok(PolarShape { w, r, u })
}

/// Full pipeline from a raw configuration to its polar shape.
pub fn shape_from_landmarks(x: &LandmarkMatrix, theta: Option<&DMatrix<f64>>) -> Result<(PolarShape, bool)> {
    let y = match theta {
        Some(t) => whiten_and_center(x, t)?,
        None => center(x),
    };
    let f = polar_decompose(&y)?;
    Ok((shape_of(&f.r)?, f.degenerate))
}

/// Hyperspherical angles of a unit vector (`p ≥ 2` entries → `p − 1` angles).
/// All angles lie in `[0, π]` except the last, which lies in `[0, 2π)`.
pub fn sphere_angles(x: &[f64]) -> Vec<f64> {
    let p = x.len();
    let mut u = Vec::with_capacity(p.saturating_sub(1));
    let mut tail: Vec<f64> = vec![0.0; p + 1];
    for k in (0..p).rev() {
        tail[k] = tail[k + 1].hypot(x[k]);
    }
    for k in 0..p.saturating_sub(1) {
        if k + 2 == p {
            let mut a = x[p - 1].atan2(x[p - 2]);
            if a < 0.0 {
                a += 2.0 * std::f64::consts::PI;
            }
            u.push(a);
        } else {
            u.push(tail[k + 1].atan2(x[k]));
        }
    }
    u
}

/// Unit vector with the given hyperspherical angles.
pub fn sphere_point(u: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(u.len() + 1);
    let mut s = 1.0;
    for &t in u {
        x.push(s * t.cos());
        s *= t.sin();
    }
    x.push(s);
    x
}

/// Angles of a unit-norm symmetric `W`.
pub fn shape_to_angles(w: &DMatrix<f64>) -> Result<Vec<f64>> {
    if !w.is_square() || w.nrows() < 2 {
        return Err(Error::invalid("shape matrix must be square of order ≥ 2"));
    }
    let norm = w.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("shape matrix must have unit norm, got {norm}")));
    }
    Ok(sphere_angles(&weighted_vech(w)))
}

/// `W(u)` without the positive-definiteness check.
pub fn angles_to_shape_unchecked(u: &[f64], n: usize) -> Result<DMatrix<f64>> {
    weighted_unvech(&sphere_point(u), n)
}

/// `W(u)`, failing outside the positive definite region.
pub fn angles_to_shape(u: &[f64]) -> Result<DMatrix<f64>> {
    let n = order_from_coordinates(u.len() + 1)?;
    let w = angles_to_shape_unchecked(u, n)?;
    if let Some((i, v)) = sorted_eigenvalues(&w)
        .into_iter()
        .enumerate()
        .find(|(_, v)| !(*v > 0.0))
    {
        return Err(Error::OutsideDomain(format!(
            "eigenvalue {i} of W(u) is {v:e}; all must be positive"
        )));
    }
    Ok(w)
}

/// Smallest eigenvalue of `W(u)`, positive exactly on the shape domain.
pub fn min_eigenvalue_at(u: &[f64], n: usize) -> f64 {
    match angles_to_shape_unchecked(u, n) {
        Ok(w) => sorted_eigenvalues(&w)[0],
        Err(_) => f64::NEG_INFINITY,
    }
}

/// `J(u) = Π_{i=1}^{m} sin^{m−i} θ_i`.
pub fn jacobian_j(u: &[f64]) -> f64 {
    let m = u.len();
    u.iter()
        .enumerate()
        .map(|(i, t)| t.sin().powi((m - 1 - i) as i32))
        .product()
}

/// `Π_{i<j} (λ_i + λ_j)`; 1 for a single eigenvalue.
pub fn pair_sum_product(eigenvalues: &[f64]) -> f64 {
    let mut acc = 1.0;
    for i in 0..eigenvalues.len() {
        for j in (i + 1)..eigenvalues.len() {
            acc *= eigenvalues[i] + eigenvalues[j];
        }
    }
    acc
}
