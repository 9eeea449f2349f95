//! Property tests across modules: homogeneity and symmetry of ν, the
//! exponent's scaling, lattice transforms and convolutions of `p₁`.

use proptest::prelude::*;

use crate::geometry::{dot, neg, norm, scale, Point};
use crate::potential::PotentialProfile;
use crate::{DensityGrid, ExponentEvaluator, StableModel};

const MODELS: [&str; 4] = [
    r#"{"d": 2, "alpha": 1.0, "spectral": {"atoms": [[[1, 0], 1.0], [[0, 1], 1.0]]}}"#,
    r#"{"d": 2, "alpha": 0.75, "spectral": {"caps": [{"center": [0.6, 0.8], "radius": 0.4, "density": 2.0}], "uniform_mass": 0.3}}"#,
    r#"{"d": 3, "alpha": 0.5, "spectral": {"caps": [{"center": [1, 0, 0], "radius": 0.3, "density": 1.0}]}}"#,
    r#"{"d": 3, "alpha": 1.5, "spectral": {"atoms": [[[0, 0, 1], 1.0]], "caps": [{"center": [0, 1, 0], "radius": 0.5, "density": 0.5}]}}"#,
];

fn model(i: usize) -> StableModel {
    StableModel::from_json(MODELS[i]).unwrap()
}

/// A point with `0.5 ≤ |x| ≤ 3` in the model's dimension.
fn point_in(d: usize) -> impl Strategy<Value = Point> {
    (prop::array::uniform3(-1.0f64..1.0), 0.5f64..3.0).prop_filter_map("nonzero", move |(v, r)| {
        let mut p = [0.0; 3];
        p[..d].copy_from_slice(&v[..d]);
        let n = norm(&p);
        (n > 1e-3).then(|| scale(&p, r / n))
    })
}

fn case() -> impl Strategy<Value = (usize, Point, f64)> {
    (0..MODELS.len()).prop_flat_map(|i| {
        let d = model(i).dim();
        (Just(i), point_in(d), 0.05f64..0.9)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ball_mass_is_homogeneous((i, x, f) in case(), r in prop::sample::select(vec![0.5, 2.0, 5.0])) {
        let m = model(i);
        let v = m.levy();
        let rho = f * norm(&x);
        let base = v.nu_ball_mass(&x, rho);
        let scaled = v.nu_ball_mass(&scale(&x, r), r * rho);
        prop_assert!((scaled - r.powf(-m.alpha()) * base).abs() <= 1e-6 * base + 1e-300, "{scaled} vs {base}");
    }

    #[test]
    fn ball_mass_is_symmetric((i, x, f) in case()) {
        let m = model(i);
        let v = m.levy();
        let rho = f * norm(&x);
        let a = v.nu_ball_mass(&x, rho);
        let b = v.nu_ball_mass(&neg(&x), rho);
        prop_assert!((a - b).abs() <= 1e-7 * a.max(b) + 1e-300, "{a} vs {b}");
    }

    #[test]
    fn ball_mass_grows_with_radius((i, x, f) in case(), g in 0.0f64..1.0) {
        let m = model(i);
        let v = m.levy();
        let r_big = f * norm(&x);
        let r_small = g * r_big;
        let big = v.nu_ball_mass(&x, r_big);
        let small = v.nu_ball_mass(&x, r_small);
        prop_assert!(small <= big * (1.0 + 1e-9), "{small} > {big}");
    }

    /// `|y − v|^{α−d} ≥ 1` on `B(y, 1/2)`, so the Riesz integral dominates the
    /// ball mass.
    #[test]
    fn riesz_integral_dominates_ball_mass((i, y, _f) in case()) {
        let m = model(i);
        let v = m.levy();
        prop_assume!(norm(&y) > 0.6);
        let riesz = v.riesz_ball_integral(&y, 0.5);
        let mass = v.nu_ball_mass(&y, 0.5);
        prop_assert!(riesz >= mass * (1.0 - 1e-6), "{riesz} < {mass}");
        if let Some(ratio) = v.rk_ratio(&y, 0.5) {
            prop_assert!(ratio >= 1.0 - 1e-6, "{ratio}");
        }
    }

    #[test]
    fn exponent_is_even_and_homogeneous((i, u, _f) in case(), r in 0.1f64..10.0) {
        let m = model(i);
        let eval = ExponentEvaluator::new(&m).unwrap();
        let base = eval.phi_eval(&u);
        prop_assert!(base > 0.0);
        let flipped = eval.phi_eval(&neg(&u));
        prop_assert!((flipped - base).abs() <= 1e-9 * base);
        let scaled = eval.phi_eval(&scale(&u, r));
        prop_assert!((scaled - r.powf(m.alpha()) * base).abs() <= 1e-8 * scaled, "{scaled} vs {base}");
    }
}

fn lattice_transform(grid: &DensityGrid, u: &Point) -> f64 {
    let h = grid.spacing.powi(grid.dim as i32);
    (0..grid.len()).map(|k| dot(u, &grid.position(k)).cos() * grid.values[k]).sum::<f64>() * h
}

/// A long line lattice for a 1-D model: the tail beyond the extent is below
/// 2·10⁻⁵, so the lattice transform must reproduce `e^{−Φ}` closely.
#[test]
fn line_lattice_transform_is_the_characteristic_function() {
    let m = StableModel::from_json(r#"{"d": 1, "alpha": 1.5, "spectral": {"atoms": [[[1], 1.0]]}}"#).unwrap();
    let eval = ExponentEvaluator::new(&m).unwrap();
    let grid = DensityGrid::build(&eval, 2000.0, 0.05).unwrap();
    let (_, tail) = grid.normalization(m.total_mass());
    assert!(tail < 2e-5);
    for k in 0..20 {
        let u = [0.15 * (k + 1) as f64, 0.0, 0.0];
        let got = lattice_transform(&grid, &u);
        let want = (-eval.phi_eval(&u)).exp();
        assert!((got - want).abs() < 1e-3, "u = {}: {got} vs {want}", u[0]);
    }
    // p₂(0) = ∫p₁(x)p₁(−x)dx = ∫p₁²
    let conv: f64 = grid.values.iter().map(|p| p * p).sum::<f64>() * grid.spacing;
    let p2 = eval.density_t(2.0, &[0.0; 3]);
    assert!((conv - p2).abs() < 1e-3 * p2, "{conv} vs {p2}");
}

/// Planar lattice: the transform matches up to the mass outside the lattice.
/// The lattice reaches ten spreads of `p₁` so that `∫p₁²` is resolved.
#[test]
fn planar_lattice_transform_and_convolution() {
    let m = model(0);
    let eval = ExponentEvaluator::new(&m).unwrap();
    let grid = DensityGrid::build(&eval, 32.0, 0.25).unwrap();
    let (ball, tail) = grid.normalization(m.total_mass());
    let outside = tail.max((1.0 - ball).abs());
    for k in 0..20 {
        let a = 2.0 * std::f64::consts::PI * k as f64 / 20.0;
        let r = 0.15 * (k + 1) as f64;
        let u = [r * a.cos(), r * a.sin(), 0.0];
        let got = lattice_transform(&grid, &u);
        let want = (-eval.phi_eval(&u)).exp();
        assert!((got - want).abs() < outside + 1e-3, "{u:?}: {got} vs {want}");
    }
    let conv: f64 = grid.values.iter().map(|p| p * p).sum::<f64>() * grid.spacing.powi(2);
    let p2 = eval.density_t(2.0, &[0.0; 3]);
    assert!((conv - p2).abs() < 1e-3 * p2, "{conv} vs {p2}");
}

#[test]
fn potential_is_positive_on_the_sphere() {
    for i in [0, 1] {
        let m = model(i);
        let eval = ExponentEvaluator::new(&m).unwrap();
        let p = PotentialProfile::uniform(&eval, 16).unwrap();
        assert!(p.min_value() > 0.0, "model {i}: {}", p.min_value());
    }
}
