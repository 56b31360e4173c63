//! The Volterra inequality behind the global bounds for the non-divergent
//! model: V(t) = 1 + ∫₀^t e^{(p-1)s/4}(t-s)^{β-1} V(s) ds, β = (4m-2-N(p-1))/(4m).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolterraReport {
    pub beta: f64,
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub v: Vec<f64>,
    /// exp{[4/(β(p-1)) + ε] t^β e^{(p-1)t/4}}
    pub v_hat: Vec<f64>,
    pub bounded: bool,
}

pub fn volterra_beta(p: f64, m: u32, n: u32) -> f64 {
    let m = m as f64;
    (4.0 * m - 2.0 - n as f64 * (p - 1.0)) / (4.0 * m)
}

/// Moments of (t_n - s)^{β-1} against the two hat functions of the
/// subinterval lying `u` steps back from t_n, for u = 0..=steps.
fn product_weights(beta: f64, h: f64, steps: usize) -> (Vec<f64>, Vec<f64>) {
    let hb = h.powf(beta);
    let moments = |u: usize| {
        let (a, b) = ((u - 1) as f64, u as f64);
        let m0 = (b.powf(beta) - a.powf(beta)) / beta;
        let m1 = (b.powf(beta + 1.0) - a.powf(beta + 1.0)) / (beta + 1.0);
        (hb * (m1 - a * m0), hb * (b * m0 - m1))
    };
    std::iter::once((0.0, 0.0)).chain((1..=steps).map(moments)).unzip()
}

pub fn volterra_bound(p: f64, m: u32, n: u32, t_end: f64) -> Result<VolterraReport> {
    volterra_bound_with(p, m, n, t_end, 2000, 0.01)
}

/// Solves the equality case with product trapezoidal weights (piecewise
/// linear integrand, exact kernel moments) and compares with the bound.
pub fn volterra_bound_with(p: f64, m: u32, n: u32, t_end: f64, steps: usize, epsilon: f64) -> Result<VolterraReport> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::param("p", "p must exceed 1"));
    }
    if m == 0 || n == 0 {
        return Err(Error::param("m, N", "must be positive"));
    }
    if !(t_end.is_finite() && t_end > 0.0) || steps < 2 {
        return Err(Error::param("t_end", "need t_end > 0 and at least 2 steps"));
    }
    let beta = volterra_beta(p, m, n);
    if beta <= 0.0 {
        return Err(Error::NonPositiveBeta(beta));
    }
    let h = t_end / steps as f64;
    let (w_left, w_right) = product_weights(beta, h, steps);
    let growth = |t: f64| ((p - 1.0) * t / 4.0).exp();
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 * h).collect();
    let mut v = vec![1.0];
    let mut g = vec![1.0];
    for nn in 1..=steps {
        let mut acc = 1.0;
        for k in 0..nn {
            acc += w_left[nn - k] * g[k];
            if k + 1 < nn {
                acc += w_right[nn - k] * g[k + 1];
            }
        }
        let e = growth(times[nn]);
        let denom = 1.0 - w_right[1] * e;
        if denom <= 0.0 {
            return Err(Error::param("steps", "too few steps for the implicit solve"));
        }
        let vn = acc / denom;
        if !vn.is_finite() || vn > 1e300 {
            break;
        }
        v.push(vn);
        g.push(vn * e);
    }
    let c = 4.0 / (beta * (p - 1.0)) + epsilon;
    let times: Vec<f64> = times[..v.len()].to_vec();
    let v_hat: Vec<f64> = times
        .iter()
        .map(|&t| (c * t.powf(beta) * growth(t)).exp())
        .collect();
    let bounded = v.len() == steps + 1 && v.iter().zip(&v_hat).all(|(a, b)| *a <= b * (1.0 + 1e-12));
    Ok(VolterraReport {
        beta,
        epsilon,
        times,
        v,
        v_hat,
        bounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_examples() {
        assert_eq!(volterra_beta(2.0, 2, 1), 5.0 / 8.0);
        assert!(matches!(volterra_bound(5.0, 1, 2, 1.0), Err(Error::NonPositiveBeta(_))));
    }

    #[test]
    fn weights_integrate_the_kernel() {
        let (beta, h, n) = (0.625, 0.01, 300);
        let (l, r) = product_weights(beta, h, n);
        let total: f64 = (1..=n).map(|u| l[u] + r[u]).sum();
        let exact = (n as f64 * h).powf(beta) / beta;
        assert!((total - exact).abs() < 1e-12 * exact);
        // first moment: ∫ (t-s)^{β-1} s ds with t = nh
        let t = n as f64 * h;
        let first: f64 = (1..=n).map(|u| l[u] * ((n - u) as f64 * h) + r[u] * ((n - u + 1) as f64 * h)).sum();
        let exact1 = t.powf(beta + 1.0) / (beta * (beta + 1.0));
        assert!((first - exact1).abs() < 1e-10 * exact1);
    }

    #[test]
    fn solution_is_monotone_and_converges() {
        let a = volterra_bound_with(2.0, 2, 1, 1.0, 500, 0.01).unwrap();
        let b = volterra_bound_with(2.0, 2, 1, 1.0, 2000, 0.01).unwrap();
        assert!(a.v.windows(2).all(|w| w[1] >= w[0]));
        let (va, vb) = (a.v[500], b.v[2000]);
        assert!((va - vb).abs() < 1e-4 * vb);
        assert!(a.bounded && b.bounded);
    }
}
