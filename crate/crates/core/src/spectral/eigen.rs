//! Dense complex eigenvalues: Householder reduction to Hessenberg form followed
//! by single-shift QR sweeps with Givens rotations and Wilkinson shifts.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result, C64, EPS};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Descending modulus, then ascending argument. Moduli are compared after
/// rounding to `1e−12` relative to the largest, so roundoff does not split ties.
pub fn sort_spectrum(values: &mut [C64]) {
    let top = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if top == 0.0 {
        return;
    }
    let key = |v: &C64| (v.norm() / (top * 1e-12)).round();
    values.sort_by(|x, y| key(y).total_cmp(&key(x)).then(x.arg().total_cmp(&y.arg())));
}

/// All eigenvalues of a square complex matrix, sorted by [`sort_spectrum`].
///
/// Matrices that are triangular up to `n·ε·‖A‖_F` return their diagonal.
pub fn eigenvalues(a: &DMatrix<C64>) -> Result<Vec<C64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigenvalues need a square matrix");
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut values = if is_triangular(a) {
        (0..n).map(|k| a[(k, k)]).collect()
    } else {
        let mut h = a.clone();
        hessenberg(&mut h);
        hessenberg_qr(&mut h)?
    };
    sort_spectrum(&mut values);
    Ok(values)
}

fn is_triangular(a: &DMatrix<C64>) -> bool {
    let n = a.nrows();
    let tol = n as f64 * EPS * a.norm();
    let (mut upper, mut lower) = (0.0f64, 0.0f64);
    for k in 0..n {
        for j in 0..n {
            let m = a[(j, k)].norm_sqr();
            if j < k {
                upper += m;
            } else if j > k {
                lower += m;
            }
        }
    }
    upper.sqrt() <= tol || lower.sqrt() <= tol
}

/// In-place Householder reduction to upper Hessenberg form (similarity).
pub fn hessenberg(a: &mut DMatrix<C64>) {
    let n = a.nrows();
    for k in 0..n.saturating_sub(2) {
        let x_norm = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if x_norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() == 0.0 { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let mut v: Vec<C64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        v[0] += phase * x_norm;
        let v_norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in &mut v {
            *c /= v_norm;
        }
        // A ← (I − 2vvᴴ) A on rows k+1.., then A ← A (I − 2vvᴴ) on columns k+1...
        for j in k..n {
            let dot: C64 = v.iter().enumerate().map(|(i, vi)| vi.conj() * a[(k + 1 + i, j)]).sum();
            for (i, vi) in v.iter().enumerate() {
                a[(k + 1 + i, j)] -= 2.0 * vi * dot;
            }
        }
        for i in 0..n {
            let dot: C64 = v.iter().enumerate().map(|(j, vj)| a[(i, k + 1 + j)] * vj).sum();
            for (j, vj) in v.iter().enumerate() {
                a[(i, k + 1 + j)] -= 2.0 * dot * vj.conj();
            }
        }
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }
    }
}

fn givens(a: C64, b: C64) -> (f64, C64) {
    let an = a.norm();
    let nrm = an.hypot(b.norm());
    if nrm == 0.0 {
        return (1.0, ZERO);
    }
    if an == 0.0 {
        return (0.0, C64::new(1.0, 0.0));
    }
    (an / nrm, (a / an) * b.conj() / nrm)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m1 = (a + d) * 0.5 + disc;
    let m2 = (a + d) * 0.5 - disc;
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// Eigenvalues of an upper Hessenberg matrix (destroyed).
fn hessenberg_qr(h: &mut DMatrix<C64>) -> Result<Vec<C64>> {
    let n = h.nrows();
    let max_iter = 100 * n;
    let fro = h.norm();
    let mut values = vec![ZERO; n];
    let mut hi = n - 1;
    let mut total = 0usize;
    let mut since_deflation = 0usize;
    loop {
        if hi == 0 {
            values[0] = h[(0, 0)];
            break;
        }
        // Locate the start of the unreduced block ending at `hi`.
        let mut lo = hi;
        while lo > 0 {
            let scale = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            let scale = if scale == 0.0 { fro } else { scale };
            if h[(lo, lo - 1)].norm() <= EPS * scale {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            values[hi] = h[(hi, hi)];
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        total += 1;
        since_deflation += 1;
        if total > max_iter {
            return Err(Error::EigenNonConvergence { iterations: total - 1, index: hi });
        }
        let mu = if since_deflation % 11 == 10 {
            h[(hi, hi)] + h[(hi, hi - 1)].norm() * 0.75
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for k in lo..=hi {
            h[(k, k)] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..=hi {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            h[(k + 1, k)] = ZERO;
            rots.push((c, s));
        }
        for (off, &(c, s)) in rots.iter().enumerate() {
            let k = lo + off;
            for i in lo..=(k + 1).min(hi) {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + y * s.conj();
                h[(i, k + 1)] = -x * s + y * c;
            }
        }
        for k in lo..=hi {
            h[(k, k)] += mu;
        }
    }
    Ok(values)
}

/// Unit eigenvector for an eigenvalue estimate by inverse iteration.
pub fn eigenvector(a: &DMatrix<C64>, lambda: C64) -> DVector<C64> {
    let n = a.nrows();
    let shift = lambda + C64::new(EPS * a.norm().max(1.0) * 16.0, EPS * a.norm().max(1.0) * 8.0);
    let shifted = a - DMatrix::<C64>::identity(n, n) * shift;
    let lu = shifted.lu();
    let mut x = DVector::from_fn(n, |i, _| C64::new(1.0 / (1.0 + i as f64), 0.0));
    x /= C64::new(x.norm(), 0.0);
    for _ in 0..4 {
        match lu.solve(&x) {
            Some(y) if y.iter().all(|c| c.is_finite()) && y.norm() > 0.0 => {
                let nrm = y.norm();
                x = y / C64::new(nrm, 0.0);
            }
            _ => break,
        }
    }
    // Fix the phase: largest component real and positive.
    let (imax, _) =
        x.iter().enumerate().fold((0, 0.0), |acc, (i, c)| if c.norm() > acc.1 { (i, c.norm()) } else { acc });
    let ph = x[imax] / x[imax].norm();
    x / ph
}
