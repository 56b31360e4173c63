//! Discretizations on the interval (-L, L).
//!
//! Navier data is handled spectrally through its odd extension to a periodic
//! domain of length 4L; clamped data uses second-order finite differences with
//! even-reflection ghost nodes (so Dv = 0 at the ends).

use nalgebra::DMatrix;

/// Odd extension of nodal values `v_0..v_M` to `2M` periodic samples.
pub(crate) fn odd_extend(values: &[f64]) -> Vec<f64> {
    let m = values.len() - 1;
    let mut w = vec![0.0; 2 * m];
    w[1..m].copy_from_slice(&values[1..m]);
    for j in 1..m {
        w[2 * m - j] = -values[j];
    }
    w
}

/// Inverse of `odd_extend` on the physical nodes.
pub(crate) fn restrict(extended: &[f64]) -> Vec<f64> {
    let m = extended.len() / 2;
    extended[..=m].to_vec()
}

fn reflect(j: isize, m: isize) -> usize {
    let j = if j < 0 { -j } else { j };
    let j = if j > m { 2 * m - j } else { j };
    j as usize
}

/// Finite-difference derivative of clamped nodal data. Odd orders above one
/// at the two end nodes are not meaningful (the reflection makes them vanish).
pub(crate) fn clamped_derivative(values: &[f64], h: f64, order: u32) -> Vec<f64> {
    let m = values.len() as isize - 1;
    let at = |j: isize| values[reflect(j, m)];
    (0..=m)
        .map(|j| match order {
            1 => (at(j + 1) - at(j - 1)) / (2.0 * h),
            2 => (at(j + 1) - 2.0 * at(j) + at(j - 1)) / (h * h),
            3 => (at(j + 2) - 2.0 * at(j + 1) + 2.0 * at(j - 1) - at(j - 2)) / (2.0 * h * h * h),
            _ => {
                (at(j + 2) - 4.0 * at(j + 1) + 6.0 * at(j) - 4.0 * at(j - 1) + at(j - 2)) / (h * h * h * h)
            }
        })
        .collect()
}

/// Matrix of `-D⁴ - D²` acting on the interior unknowns `v_1..v_{M-1}`.
pub(crate) fn clamped_kse_matrix(m: usize, h: f64) -> DMatrix<f64> {
    let n = m - 1;
    let mut a = DMatrix::zeros(n, n);
    let h2 = h * h;
    let h4 = h2 * h2;
    let d4 = [1.0, -4.0, 6.0, -4.0, 1.0];
    let d2 = [1.0, -2.0, 1.0];
    for row in 1..m {
        for (o, c) in d4.iter().enumerate() {
            let col = reflect(row as isize + o as isize - 2, m as isize);
            if col != 0 && col != m {
                a[(row - 1, col - 1)] -= c / h4;
            }
        }
        for (o, c) in d2.iter().enumerate() {
            let col = row + o - 1;
            if col != 0 && col != m {
                a[(row - 1, col - 1)] -= c / h2;
            }
        }
    }
    a
}
