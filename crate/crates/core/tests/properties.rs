//! Property tests for the structural invariants of the evolution.

use ern_core::energies::{sigma0_norm, t_flux, InitialPair, LineSegment};
use ern_core::*;
use proptest::prelude::*;

const N: usize = 24;

fn bh() -> BlackHole {
    BlackHole::new(1.0).unwrap()
}

fn grid() -> GridSpec {
    GridSpec::square(0.0, 12.0, N, Region::Exterior).unwrap()
}

fn line() -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), N + 1)
        .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
}

fn lines() -> impl Strategy<Value = (Vec<Complex64>, Vec<Complex64>)> {
    (line(), line()).prop_map(|(u, mut v)| {
        v[0] = u[0];
        (u, v)
    })
}

fn coefficient() -> impl Strategy<Value = Complex64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| Complex64::new(a, b))
}

fn combine(a: Complex64, x: &[Complex64], b: Complex64, y: &[Complex64]) -> Vec<Complex64> {
    x.iter().zip(y).map(|(p, q)| a * p + b * q).collect()
}

fn max_diff(x: &[Complex64], y: &[Complex64]) -> f64 {
    x.iter().zip(y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

fn future_lines(field: &ModeField) -> (Vec<Complex64>, Vec<Complex64>) {
    let g = field.grid();
    let u_line = (0..=g.n_v).map(|j| field.at(g.n_u, j)).collect();
    let v_line = (0..=g.n_u).map(|i| field.at(i, g.n_v)).collect();
    (u_line, v_line)
}

fn past_lines(field: &ModeField) -> (Vec<Complex64>, Vec<Complex64>) {
    let g = field.grid();
    let u_line = (0..=g.n_v).map(|j| field.at(0, j)).collect();
    let v_line = (0..=g.n_u).map(|i| field.at(i, 0)).collect();
    (u_line, v_line)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn evolution_is_linear(
        (xu, xv) in lines(),
        (yu, yv) in lines(),
        a in coefficient(),
        b in coefficient(),
        ell in 0u32..=3,
    ) {
        let s = Stencil::new(bh(), ell, grid()).unwrap();
        let fx = s.forward_from_lines(&xu, &xv).unwrap();
        let fy = s.forward_from_lines(&yu, &yv).unwrap();
        let fz = s
            .forward_from_lines(&combine(a, &xu, b, &yu), &combine(a, &xv, b, &yv))
            .unwrap();
        let expected = combine(a, fx.values(), b, fy.values());
        let scale = 1.0f64.max(fz.max_abs());
        prop_assert!(max_diff(fz.values(), &expected) <= 1e-12 * scale);
    }

    #[test]
    fn energies_are_quadratic(
        (xu, xv) in lines(),
        a in coefficient(),
        ell in 0u32..=2,
    ) {
        let s = Stencil::new(bh(), ell, grid()).unwrap();
        let f = s.forward_from_lines(&xu, &xv).unwrap();
        let scaled = f.map_values(|z| a * z);
        let k = a.norm_sqr();
        let seg = LineSegment::full(f.grid(), Orientation::ConstantU, N / 2);
        let e = t_flux(&f, &seg).unwrap();
        prop_assert!((t_flux(&scaled, &seg).unwrap() - k * e).abs() <= 1e-12 * (1.0 + k * e));
        let pair = InitialPair::past();
        let n = sigma0_norm(&f, &pair).unwrap();
        prop_assert!((sigma0_norm(&scaled, &pair).unwrap() - k * n).abs() <= 1e-12 * (1.0 + k * n));
    }

    #[test]
    fn backward_inverts_forward((xu, xv) in lines(), ell in 0u32..=4) {
        let s = Stencil::new(bh(), ell, grid()).unwrap();
        let f = s.forward_from_lines(&xu, &xv).unwrap();
        let (fu, fv) = future_lines(&f);
        let b = s.backward_from_lines(&fu, &fv).unwrap();
        let scale = 1.0f64.max(f.max_abs());
        prop_assert!(max_diff(b.values(), f.values()) <= 1e-12 * scale);
        let (pu, pv) = past_lines(&b);
        prop_assert!(max_diff(&pu, &xu) <= 1e-12 * scale);
        prop_assert!(max_diff(&pv, &xv) <= 1e-12 * scale);
    }

    #[test]
    fn free_stencil_is_exact_for_dalembert_solutions(
        cu in prop::collection::vec(-1.0f64..1.0, 4),
        cv in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let g = grid();
        let left = |u: f64| cu[0] * (0.3 * u).sin() + cu[1] * (0.1 * u).cos() + cu[2] * u + cu[3];
        let right = |v: f64| cv[0] * (0.2 * v).cos() + cv[1] * (-0.1 * v).exp() + cv[2] * v * v + cv[3];
        let exact = ModeField::from_fn(bh(), 0, g, |u, v| Complex64::new(left(u) + right(v), 0.0)).unwrap();
        let (eu, ev) = past_lines(&exact);
        let f = Stencil::free(bh(), 0, g).unwrap().forward_from_lines(&eu, &ev).unwrap();
        let scale = 1.0f64.max(exact.max_abs());
        prop_assert!(max_diff(f.values(), exact.values()) <= 1e-12 * scale);
    }

    #[test]
    fn perturbations_stay_in_their_domain_of_dependence(
        (xu, xv) in lines(),
        j0 in 1usize..N,
        kick in coefficient(),
    ) {
        let s = Stencil::new(bh(), 1, grid()).unwrap();
        let base = s.forward_from_lines(&xu, &xv).unwrap();
        let mut pu = xu.clone();
        pu[j0] += kick;
        let perturbed = s.forward_from_lines(&pu, &xv).unwrap();
        for i in 0..=N {
            for j in 0..j0 {
                prop_assert_eq!(base.at(i, j), perturbed.at(i, j));
            }
        }
    }

    #[test]
    fn tortoise_inversion_round_trips(exterior in -200.0f64..200.0, interior in 1e-6f64..200.0) {
        let hole = bh();
        for (rstar, region) in [(exterior, Region::Exterior), (interior, Region::Interior)] {
            let r = hole.invert_tortoise(rstar, region).unwrap();
            let back = hole.tortoise(r, region).unwrap();
            prop_assert!((back - rstar).abs() <= 1e-9 * (1.0 + rstar.abs()));
        }
    }
}
