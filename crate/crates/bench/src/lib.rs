//! Shared fixtures for the benchmarks.

use ern_core::{BlackHole, Complex64, GridSpec, Region};

pub fn black_hole() -> BlackHole {
    BlackHole::new(1.0).expect("unit mass")
}

pub fn exterior_grid(n: usize) -> GridSpec {
    GridSpec::square(0.0, 40.0, n, Region::Exterior).expect("valid grid")
}

/// Gaussian pulse on the outgoing line and zero on the ingoing one.
pub fn pulse_lines(n: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let g = exterior_grid(n);
    let u_line = (0..=n)
        .map(|j| {
            let x = (g.v(j) - 10.0) / 1.5;
            Complex64::new((-x * x).exp(), 0.0)
        })
        .collect();
    let mut v_line = vec![Complex64::new(0.0, 0.0); n + 1];
    v_line[0] = Complex64::new((-(10.0f64 / 1.5).powi(2)).exp(), 0.0);
    (u_line, v_line)
}
