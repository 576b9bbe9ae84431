use num_complex::Complex64;

use crate::{Error, Result};

/// Relative tolerance on `|m_ij - conj(m_ji)|` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// `ln det M` for a Hermitian positive-definite `n×n` matrix stored
/// row-major, via the Cholesky factor `M = L Lᴴ` (`ln det M = Σ ln L_ii²`).
pub fn logdet_hermitian(n: usize, m: &[Complex64]) -> Result<f64> {
    if m.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: format!("{} entries for a {n}x{n} matrix", n * n),
            actual: m.len().to_string(),
        });
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut asym: f64 = 0.0;
    for i in 0..n {
        for j in 0..=i {
            asym = asym.max((m[i * n + j] - m[j * n + i].conj()).norm());
        }
    }
    if asym > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian {
            asymmetry: if scale > 0.0 { asym / scale } else { asym },
        });
    }
    let mut work = m.to_vec();
    cholesky_logdet_lower(n, &mut work)
}

/// Factorises in place using only the lower triangle of `a` (row-major) and
/// returns `ln det`. The strict upper triangle is ignored.
pub(crate) fn cholesky_logdet_lower(n: usize, a: &mut [Complex64]) -> Result<f64> {
    let mut logdet = 0.0;
    for j in 0..n {
        let (head, tail) = a.split_at_mut((j + 1) * n);
        let row_j = &mut head[j * n..(j + 1) * n];
        let mut d = row_j[j].re;
        for z in &row_j[..j] {
            d -= z.norm_sqr();
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        row_j[j] = Complex64::new(ljj, 0.0);
        logdet += d.ln();
        let inv = 1.0 / ljj;
        let lj = &row_j[..j];
        for row_i in tail.chunks_exact_mut(n) {
            let mut s = row_i[j];
            for (x, y) in row_i[..j].iter().zip(lj) {
                s -= x * y.conj();
            }
            row_i[j] = s * inv;
        }
    }
    Ok(logdet)
}
