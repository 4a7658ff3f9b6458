//! Finite differences and quadrature on uniformly spaced samples.
//!
//! Second-order finite differences and trapezoid quadrature. Higher
//! derivatives use a single direct stencil per node rather than repeated
//! first differences, which keeps them second order up to the ends.

use num_complex::Complex64;

/// First derivative of uniformly spaced samples.
pub fn derivative(samples: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = samples.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    match n {
        0 | 1 => {}
        2 => {
            let d = (samples[1] - samples[0]) / h;
            out[0] = d;
            out[1] = d;
        }
        _ => {
            let inv2h = 0.5 / h;
            out[0] = (-3.0 * samples[0] + 4.0 * samples[1] - samples[2]) * inv2h;
            for k in 1..n - 1 {
                out[k] = (samples[k + 1] - samples[k - 1]) * inv2h;
            }
            out[n - 1] = (3.0 * samples[n - 1] - 4.0 * samples[n - 2] + samples[n - 3]) * inv2h;
        }
    }
    out
}

/// Weights of the `order`-th derivative at `x0` from samples at `nodes`.
pub fn stencil_weights(x0: f64, nodes: &[f64], order: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] *= c4 / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// `order`-th derivative of uniformly spaced samples, second order at every
/// node: centred stencils in the interior, shifted stencils near the ends.
pub fn nth_derivative(samples: &[Complex64], h: f64, order: u32) -> Vec<Complex64> {
    if order == 0 {
        return samples.to_vec();
    }
    if order == 1 {
        return derivative(samples, h);
    }
    let n = samples.len();
    let order = order as usize;
    let width = (order + 2) | 1;
    if n < width {
        return vec![Complex64::new(0.0, 0.0); n];
    }
    let half = width / 2;
    let scale = h.powi(-(order as i32));
    let offsets: Vec<f64> = (0..width).map(|k| k as f64).collect();
    let mut cache: Vec<Option<Vec<f64>>> = vec![None; width];
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let first = k.saturating_sub(half).min(n - width);
        let shift = k - first;
        let w = cache[shift]
            .get_or_insert_with(|| stencil_weights(shift as f64, &offsets, order));
        let value: Complex64 = w
            .iter()
            .zip(&samples[first..first + width])
            .map(|(wk, s)| s * *wk)
            .sum();
        out.push(value * scale);
    }
    out
}

/// Trapezoid rule for real integrands sampled with spacing `h`.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            h * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Cumulative tail integral `-∫_x^{end} f`, trapezoid rule, evaluated at every sample.
pub fn negative_tail_integral(samples: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = samples.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for k in (0..n.saturating_sub(1)).rev() {
        out[k] = out[k + 1] - 0.5 * h * (samples[k] + samples[k + 1]);
    }
    out
}

pub fn sup_norm(values: &[Complex64]) -> f64 {
    values.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Observed convergence order from errors at spacings `h` and `h/ratio`.
pub fn observed_order(coarse: f64, fine: f64, ratio: f64) -> f64 {
    (coarse / fine).ln() / ratio.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn derivative_is_exact_on_quadratics() {
        let h = 0.1;
        let s: Vec<_> = (0..20).map(|k| c((k as f64 * h).powi(2))).collect();
        let d = derivative(&s, h);
        for (k, dk) in d.iter().enumerate() {
            assert!((dk.re - 2.0 * k as f64 * h).abs() < 1e-12);
        }
    }

    #[test]
    fn trapezoid_and_tail() {
        let h = 0.5;
        let f: Vec<f64> = (0..5).map(|k| k as f64 * h).collect();
        assert!((trapezoid(&f, h) - 2.0).abs() < 1e-14);
        assert_eq!(trapezoid(&[3.0], h), 0.0);
        let s: Vec<_> = f.iter().map(|&x| c(x)).collect();
        let tail = negative_tail_integral(&s, h);
        assert_eq!(tail[4], c(0.0));
        assert!((tail[0].re + 2.0).abs() < 1e-14);
    }

    #[test]
    fn direct_higher_derivatives_hold_to_the_ends() {
        let w = stencil_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_eq!(w, vec![1.0, -2.0, 1.0]);
        for &(n, h) in &[(400usize, 0.01), (800, 0.005)] {
            let s: Vec<_> = (0..=n).map(|k| c((-(k as f64) * h).exp())).collect();
            for order in 2..=4u32 {
                let d = nth_derivative(&s, h, order);
                let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
                let err = d
                    .iter()
                    .enumerate()
                    .map(|(k, dk)| (dk.re - sign * (-(k as f64) * h).exp()).abs())
                    .fold(0.0, f64::max);
                assert!(err < 20.0 * h * h, "order {order}: {err}");
            }
        }
    }

    #[test]
    fn order_estimate() {
        assert!((observed_order(4.0, 1.0, 2.0) - 2.0).abs() < 1e-14);
    }
}
