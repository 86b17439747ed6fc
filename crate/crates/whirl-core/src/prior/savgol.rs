//! Savitzky-Golay smoothing weights via least-squares polynomial fits.

use crate::prior::PriorError;

/// Solve a small symmetric linear system by Gaussian elimination with
/// partial pivoting. Sizes here are at most (polyorder + 1) <= window.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).expect("finite")
        })?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Smoothing weights for a centered window. Convolving a sequence that is a
/// polynomial of degree <= `polyorder` reproduces it exactly at interior
/// points.
pub fn savgol_coefficients(window: usize, polyorder: usize) -> Result<Vec<f64>, PriorError> {
    if window < 3 || window % 2 == 0 {
        return Err(PriorError::InvalidSavgolParams { window, polyorder });
    }
    if polyorder >= window {
        return Err(PriorError::InvalidSavgolParams { window, polyorder });
    }
    let half = (window / 2) as i64;
    let p = polyorder + 1;

    // Normal equations G u = e0 with G_jk = sum_i x_i^(j+k); the weight for
    // sample i is then the fitted polynomial's constant term contribution,
    // h_i = sum_j u_j x_i^j.
    let mut g = vec![vec![0.0; p]; p];
    for j in 0..p {
        for k in 0..p {
            let mut s = 0.0;
            for i in -half..=half {
                s += (i as f64).powi((j + k) as i32);
            }
            g[j][k] = s;
        }
    }
    let mut e0 = vec![0.0; p];
    e0[0] = 1.0;
    let u = solve(g, e0).ok_or(PriorError::InvalidSavgolParams { window, polyorder })?;

    let mut weights = Vec::with_capacity(window);
    for i in -half..=half {
        let mut h = 0.0;
        for (j, uj) in u.iter().enumerate() {
            h += uj * (i as f64).powi(j as i32);
        }
        weights.push(h);
    }
    Ok(weights)
}

/// Filter a sequence with mirrored padding (index -k maps to k and
/// T-1+k maps to T-1-k).
pub fn filter_mirrored(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let t_len = values.len() as i64;
    let half = (weights.len() / 2) as i64;
    let mirror = |idx: i64| -> usize {
        let mut i = idx;
        if i < 0 {
            i = -i;
        }
        if i >= t_len {
            i = 2 * (t_len - 1) - i;
        }
        i.clamp(0, t_len - 1) as usize
    };
    (0..t_len)
        .map(|t| {
            weights
                .iter()
                .enumerate()
                .map(|(j, w)| w * values[mirror(t + j as i64 - half)])
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_even_window_and_big_polyorder() {
        assert!(savgol_coefficients(4, 2).is_err());
        assert!(savgol_coefficients(5, 5).is_err());
        assert!(savgol_coefficients(1, 0).is_err());
    }

    #[test]
    fn constant_sequence_center_value() {
        let w = savgol_coefficients(5, 2).unwrap();
        let seq = [3.0; 5];
        let v: f64 = seq.iter().zip(&w).map(|(s, c)| s * c).sum();
        assert!((v - 3.0).abs() < 1e-12);
    }

    #[test]
    fn linear_sequence_center_value() {
        let w = savgol_coefficients(5, 2).unwrap();
        let seq = [0.0, 1.0, 2.0, 3.0, 4.0];
        let v: f64 = seq.iter().zip(&w).map(|(s, c)| s * c).sum();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_center_value_matches_direct_fit() {
        // Samples of t^2 at 0..6; the exact center value is 9.
        let w = savgol_coefficients(7, 3).unwrap();
        let seq: Vec<f64> = (0..7).map(|t| (t * t) as f64).collect();
        let v: f64 = seq.iter().zip(&w).map(|(s, c)| s * c).sum();
        assert!((v - 9.0).abs() < 1e-9, "got {v}");
    }

    #[test]
    fn known_52_weights() {
        let w = savgol_coefficients(5, 2).unwrap();
        let expected = [-3.0 / 35.0, 12.0 / 35.0, 17.0 / 35.0, 12.0 / 35.0, -3.0 / 35.0];
        for (a, b) in w.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn polynomial_reproduction_interior() {
        for (window, polyorder) in [(5usize, 2usize), (7, 2), (7, 3), (9, 3)] {
            let w = savgol_coefficients(window, polyorder).unwrap();
            for degree in 0..=polyorder {
                let seq: Vec<f64> = (0..40).map(|t| (t as f64 * 0.37 - 3.0).powi(degree as i32)).collect();
                let filtered = filter_mirrored(&seq, &w);
                let half = window / 2;
                for t in half..seq.len() - half {
                    assert!(
                        (filtered[t] - seq[t]).abs() < 1e-9,
                        "w{window} p{polyorder} d{degree} t{t}: {} vs {}",
                        filtered[t],
                        seq[t]
                    );
                }
            }
        }
    }
}
