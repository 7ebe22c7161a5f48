//! Dense nonsymmetric eigendecomposition with paired left eigenvectors.
//!
//! Eigenvalues come from the real Schur form `A = Q T Q^T`. Right eigenvectors
//! are back-substituted on the quasi-triangular `T`; eigenvalues that are
//! repeated (semisimple clusters, e.g. uncoupled lag states sharing a decay
//! rate) get an orthonormal null-space basis of `A - lambda I` instead. Left
//! eigenvectors are the rows of `V^{-1}`, which makes `Psi^H Phi = I` hold by
//! construction over the whole spectrum.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Default upper bound on the dense problem size.
pub const DENSE_LIMIT: usize = 4096;

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const C1: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Full spectrum of a real matrix.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<Complex64>,
    /// Right eigenvectors as columns, each scaled to unit infinity norm.
    pub right: CMatrix,
    /// Left eigenvectors as columns; `left^H * right = I`.
    pub left: CMatrix,
    /// Index of the complex-conjugate partner of each eigenvalue, if any.
    pub conjugate: Vec<Option<usize>>,
    /// Largest `||A phi - lambda phi|| / ||phi||` over the spectrum.
    pub max_residual: f64,
}

/// Diagonal similarity `D^-1 A D` with power-of-two scalings that equalise
/// row and column norms. Returns the balanced matrix and the diagonal of `D`.
pub fn balance(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let n = a.nrows();
    let mut b = a.clone();
    let mut d = vec![1.0; n];
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += b[(j, i)].abs();
                    r += b[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let (mut cc, mut rr) = (c, r);
            while cc < rr / 2.0 {
                cc *= 2.0;
                rr /= 2.0;
                f *= 2.0;
            }
            while cc >= rr * 2.0 {
                cc /= 2.0;
                rr *= 2.0;
                f /= 2.0;
            }
            if (cc + rr) < 0.95 * s {
                converged = false;
                d[i] *= f;
                for j in 0..n {
                    b[(i, j)] /= f;
                    b[(j, i)] *= f;
                }
            }
        }
    }
    (b, d)
}

fn schur(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (q, h) = nalgebra::linalg::Hessenberg::new(a.clone()).unpack();
    real_schur(h, q)
}

/// Francis double-shift QR on an upper Hessenberg `h`, accumulating the
/// transformations into `v`. Returns `(Q, T)` with real eigenvalue pairs
/// split into 1x1 blocks and exactly zero subdiagonals at deflation points.
fn real_schur(mut h: DMatrix<f64>, mut v: DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let nn = h.nrows();
    if nn == 0 {
        return Ok((v, h));
    }
    let eps = f64::EPSILON;
    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }
    let mut exshift = 0.0;
    let mut iter = 0usize;
    let mut n = nn as isize - 1;
    let (mut p, mut q, mut r, mut s, mut z);
    let (mut x, mut y, mut w);
    while n >= 0 {
        let nu = n as usize;
        let mut l = nu;
        while l > 0 {
            s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].abs() < eps * s {
                h[(l, l - 1)] = 0.0;
                break;
            }
            l -= 1;
        }

        if l == nu {
            h[(nu, nu)] += exshift;
            n -= 1;
            iter = 0;
        } else if l + 1 == nu {
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            p = (h[(nu - 1, nu - 1)] - h[(nu, nu)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[(nu, nu)] += exshift;
            h[(nu - 1, nu - 1)] += exshift;
            if q >= 0.0 {
                // Real pair: rotate to upper triangular.
                z = if p >= 0.0 { p + z } else { p - z };
                x = h[(nu, nu - 1)];
                s = x.abs() + z.abs();
                p = x / s;
                q = z / s;
                r = (p * p + q * q).sqrt();
                p /= r;
                q /= r;
                for j in (nu - 1)..nn {
                    z = h[(nu - 1, j)];
                    h[(nu - 1, j)] = q * z + p * h[(nu, j)];
                    h[(nu, j)] = q * h[(nu, j)] - p * z;
                }
                for i in 0..=nu {
                    z = h[(i, nu - 1)];
                    h[(i, nu - 1)] = q * z + p * h[(i, nu)];
                    h[(i, nu)] = q * h[(i, nu)] - p * z;
                }
                for i in 0..nn {
                    z = v[(i, nu - 1)];
                    v[(i, nu - 1)] = q * z + p * v[(i, nu)];
                    v[(i, nu)] = q * v[(i, nu)] - p * z;
                }
                h[(nu, nu - 1)] = 0.0;
            }
            n -= 2;
            iter = 0;
        } else {
            x = h[(nu, nu)];
            y = h[(nu - 1, nu - 1)];
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            if iter == 10 {
                exshift += x;
                for i in 0..=nu {
                    h[(i, i)] -= x;
                }
                s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=nu {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            if iter > 200 {
                return Err(Error::Reduction("Schur iteration did not converge".into()));
            }

            let mut m = nu - 2;
            loop {
                z = h[(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[(m, m - 1)].abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nu {
                h[(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[(i, i - 3)] = 0.0;
                }
            }

            for k in m..nu {
                let notlast = k + 1 != nu;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[(k, k - 1)] = -h[(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..nn {
                        p = h[(k, j)] + q * h[(k + 1, j)];
                        if notlast {
                            p += r * h[(k + 2, j)];
                            h[(k + 2, j)] -= p * z;
                        }
                        h[(k, j)] -= p * x;
                        h[(k + 1, j)] -= p * y;
                    }
                    for i in 0..=nu.min(k + 3) {
                        p = x * h[(i, k)] + y * h[(i, k + 1)];
                        if notlast {
                            p += z * h[(i, k + 2)];
                            h[(i, k + 2)] -= p * r;
                        }
                        h[(i, k)] -= p;
                        h[(i, k + 1)] -= p * q;
                    }
                    for i in 0..nn {
                        p = x * v[(i, k)] + y * v[(i, k + 1)];
                        if notlast {
                            p += z * v[(i, k + 2)];
                            v[(i, k + 2)] -= p * r;
                        }
                        v[(i, k)] -= p;
                        v[(i, k + 1)] -= p * q;
                    }
                }
            }
        }
    }
    for j in 0..nn {
        for i in (j + 2)..nn {
            h[(i, j)] = 0.0;
        }
    }
    Ok((v, h))
}

/// Diagonal blocks of a real quasi-triangular matrix as `(start, size)`.
fn blocks(t: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            out.push((i, 2));
            i += 2;
        } else {
            out.push((i, 1));
            i += 1;
        }
    }
    out
}

fn block_eigs(t: &DMatrix<f64>, s: usize) -> [Complex64; 2] {
    let (p, q, r, d) = (t[(s, s)], t[(s, s + 1)], t[(s + 1, s)], t[(s + 1, s + 1)]);
    let half_tr = 0.5 * (p + d);
    let disc = 0.25 * (p - d) * (p - d) + q * r;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        [Complex64::new(half_tr + sq, 0.0), Complex64::new(half_tr - sq, 0.0)]
    } else {
        let sq = (-disc).sqrt();
        // A repeated real root split by round-off into a spurious pair.
        let scale = p.abs().max(d.abs()).max((q * r).abs().sqrt());
        if sq <= 1e-9 * scale {
            return [Complex64::new(half_tr, 0.0), Complex64::new(half_tr, 0.0)];
        }
        [Complex64::new(half_tr, sq), Complex64::new(half_tr, -sq)]
    }
}

/// Eigenvalues only, in Schur order.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    check_input(a)?;
    let (_, t) = schur(&balance(a).0)?;
    let mut out = Vec::with_capacity(a.nrows());
    for (s, size) in blocks(&t) {
        if size == 1 {
            out.push(Complex64::new(t[(s, s)], 0.0));
        } else {
            out.extend(block_eigs(&t, s));
        }
    }
    Ok(out)
}

fn check_input(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension {
            what: "square matrix",
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    if a.nrows() > DENSE_LIMIT {
        return Err(Error::Reduction(format!(
            "matrix of size {} exceeds the dense limit {DENSE_LIMIT}",
            a.nrows()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Reduction("matrix has non-finite entries".into()));
    }
    Ok(())
}

fn solve2(m: [[Complex64; 2]; 2], rhs: [Complex64; 2]) -> Option<[Complex64; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    if det.norm() <= 1e-13 * scale * scale {
        return None;
    }
    Some([
        (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det,
        (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det,
    ])
}

/// Back-substitution for an eigenvector of quasi-triangular `t` whose
/// eigenvalue `mu` sits in the block starting at `own`. Returns `None` when a
/// near-singular pivot indicates a repeated eigenvalue.
fn triangular_eigvec(
    t: &DMatrix<f64>,
    blocks: &[(usize, usize)],
    own: usize,
    mu: Complex64,
    pivot_tol: f64,
) -> Option<DVector<Complex64>> {
    let n = t.nrows();
    let mut y = DVector::from_element(n, C0);
    let (s, size) = blocks[own];
    if size == 1 {
        y[s] = C1;
    } else {
        let (p, q, r, d) = (t[(s, s)], t[(s, s + 1)], t[(s + 1, s)], t[(s + 1, s + 1)]);
        let v1 = (Complex64::new(q, 0.0), mu - p);
        let v2 = (mu - d, Complex64::new(r, 0.0));
        let n1 = v1.0.norm_sqr() + v1.1.norm_sqr();
        let n2 = v2.0.norm_sqr() + v2.1.norm_sqr();
        let v = if n1 >= n2 { v1 } else { v2 };
        y[s] = v.0;
        y[s + 1] = v.1;
    }
    let end = s + size;
    for &(bs, bsize) in blocks[..own].iter().rev() {
        let mut rhs = [C0; 2];
        for (k, r) in rhs.iter_mut().enumerate().take(bsize) {
            let row = bs + k;
            let mut acc = C0;
            for col in (bs + bsize)..end {
                acc += y[col] * t[(row, col)];
            }
            *r = -acc;
        }
        if bsize == 1 {
            let d = Complex64::new(t[(bs, bs)], 0.0) - mu;
            if d.norm() <= pivot_tol {
                return None;
            }
            y[bs] = rhs[0] / d;
        } else {
            let m = [
                [Complex64::new(t[(bs, bs)], 0.0) - mu, Complex64::new(t[(bs, bs + 1)], 0.0)],
                [Complex64::new(t[(bs + 1, bs)], 0.0), Complex64::new(t[(bs + 1, bs + 1)], 0.0) - mu],
            ];
            let sol = solve2(m, rhs)?;
            // Pivot check mirrors the scalar case.
            let smin = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm()
                / m.iter().flatten().map(|z| z.norm()).fold(1e-300, f64::max);
            if smin <= pivot_tol {
                return None;
            }
            y[bs] = sol[0];
            y[bs + 1] = sol[1];
        }
    }
    let _ = n;
    Some(y)
}

fn normalize_columns(v: &mut CMatrix) {
    for mut col in v.column_iter_mut() {
        let (idx, _) = col
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc });
        let pivot = col[idx];
        if pivot.norm() > 0.0 {
            let f = pivot.norm() / pivot / pivot.norm();
            col.iter_mut().for_each(|z| *z *= f);
        }
    }
}

/// Orthonormal basis (columns) of the numerical null space of `a - mu I`.
fn null_space(a: &DMatrix<f64>, mu: Complex64, k: usize, norm_a: f64) -> Result<CMatrix> {
    let n = a.nrows();
    let shifted = CMatrix::from_fn(n, n, |i, j| {
        let v = Complex64::new(a[(i, j)], 0.0);
        if i == j {
            v - mu
        } else {
            v
        }
    });
    let svd = shifted.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Reduction("SVD failed".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
    let tol = 1e-7 * norm_a.max(1.0);
    let mut out = CMatrix::zeros(n, k);
    for (c, &i) in order.iter().take(k).enumerate() {
        if svd.singular_values[i] > tol {
            return Err(Error::Defective {
                mode: c,
                lambda: format!("{mu}"),
            });
        }
        for r in 0..n {
            out[(r, c)] = vt[(i, r)].conj();
        }
    }
    Ok(out)
}

/// Full eigendecomposition of a real, diagonalizable matrix.
pub fn eig_full(a: &DMatrix<f64>) -> Result<Spectrum> {
    check_input(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(Spectrum {
            values: vec![],
            right: CMatrix::zeros(0, 0),
            left: CMatrix::zeros(0, 0),
            conjugate: vec![],
            max_residual: 0.0,
        });
    }
    let norm_a = a.norm().max(f64::MIN_POSITIVE);
    // Everything up to the eigenvector back-transform works on the balanced matrix.
    let (bal, scaling) = balance(a);
    let norm_b = bal.norm().max(f64::MIN_POSITIVE);
    let (q, t) = schur(&bal)?;
    let blks = blocks(&t);

    // (eigenvalue, owning block) in Schur order; complex pairs adjacent, +Im first.
    let mut values = Vec::with_capacity(n);
    let mut owner = Vec::with_capacity(n);
    for (b, &(s, size)) in blks.iter().enumerate() {
        if size == 1 {
            values.push(Complex64::new(t[(s, s)], 0.0));
            owner.push(b);
        } else {
            let e = block_eigs(&t, s);
            values.extend(e);
            owner.extend([b, b]);
        }
    }

    // Cluster (near-)equal eigenvalues.
    let cluster_tol = 1e-9 * norm_b;
    let mut cluster_id = vec![usize::MAX; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if cluster_id[i] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        let mut members = vec![i];
        cluster_id[i] = id;
        for j in (i + 1)..n {
            if cluster_id[j] == usize::MAX && (values[j] - values[i]).norm() <= cluster_tol {
                cluster_id[j] = id;
                members.push(j);
            }
        }
        clusters.push(members);
    }

    let qc = q.map(|x| Complex64::new(x, 0.0));
    let mut right = CMatrix::zeros(n, n);
    let mut done = vec![false; n];
    let pivot_tol = 1e-11 * norm_b;
    let conj_index = |i: usize| -> Option<usize> {
        if values[i].im == 0.0 {
            return None;
        }
        (0..n).find(|&j| j != i && owner[j] == owner[i])
    };

    for members in &clusters {
        if done[members[0]] {
            continue;
        }
        let lead = members[0];
        let mu = values[lead];
        let mut vectors: Option<CMatrix> = None;
        if members.len() == 1 {
            if let Some(y) = triangular_eigvec(&t, &blks, owner[lead], mu, pivot_tol) {
                vectors = Some(CMatrix::from_columns(&[&qc * y]));
            }
        }
        let vectors = match vectors {
            Some(v) => v,
            None => {
                let mean = members.iter().map(|&i| values[i]).sum::<Complex64>() / members.len() as f64;
                let mean = if mu.im == 0.0 { Complex64::new(mean.re, 0.0) } else { mean };
                null_space(&bal, mean, members.len(), norm_b)?
            }
        };
        for (c, &i) in members.iter().enumerate() {
            right.set_column(i, &vectors.column(c));
            done[i] = true;
            if let Some(j) = conj_index(i) {
                if !done[j] {
                    // Exact conjugate partner.
                    right.set_column(j, &vectors.column(c).map(|z| z.conj()));
                    done[j] = true;
                }
            }
        }
    }

    for (k, &dk) in scaling.iter().enumerate() {
        right.row_mut(k).iter_mut().for_each(|z| *z *= dk);
    }

    // Real eigenvalues get exactly real vectors.
    for i in 0..n {
        if values[i].im == 0.0 {
            let mut col = right.column_mut(i);
            let (idx, _) = col
                .iter()
                .enumerate()
                .fold((0, -1.0), |acc, (k, z)| if z.norm() > acc.1 { (k, z.norm()) } else { acc });
            let ph = col[idx];
            if ph.norm() > 0.0 {
                let f = ph.norm() / ph;
                col.iter_mut().for_each(|z| *z = Complex64::new((*z * f).re, 0.0));
            }
        }
    }
    normalize_columns(&mut right);
    for i in 0..n {
        if let Some(j) = conj_index(i) {
            if values[i].im > 0.0 {
                let c = right.column(i).map(|z| z.conj());
                right.set_column(j, &c);
            }
        }
    }

    let inv = right
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::Defective {
            mode: 0,
            lambda: "eigenvector matrix is singular".into(),
        })?;
    let left = inv.adjoint();
    for i in 0..n {
        let nrm = left.column(i).norm();
        if !(nrm.is_finite() && nrm < 1e12) {
            return Err(Error::Defective {
                mode: i,
                lambda: format!("{}", values[i]),
            });
        }
    }

    let ac = a.map(|x| Complex64::new(x, 0.0));
    let mut max_residual: f64 = 0.0;
    let av = &ac * &right;
    for i in 0..n {
        let r = (av.column(i) - right.column(i) * values[i]).norm() / right.column(i).norm();
        max_residual = max_residual.max(r);
    }
    if max_residual > 1e-6 * norm_a.max(1.0) {
        return Err(Error::Reduction(format!(
            "eigenvector residual {max_residual:e} too large"
        )));
    }
    let conjugate = (0..n).map(conj_index).collect();
    Ok(Spectrum {
        values,
        right,
        left,
        conjugate,
        max_residual,
    })
}
