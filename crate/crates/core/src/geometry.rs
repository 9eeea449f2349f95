//! Small fixed-size vector helpers. Points live in `[f64; 3]`; coordinates
//! beyond the model dimension are kept at zero.

pub type Point = [f64; 3];

pub const ORIGIN: Point = [0.0; 3];

/// Pads a slice of up to three coordinates into a [`Point`].
pub fn point(coords: &[f64]) -> Point {
    let mut p = ORIGIN;
    for (dst, src) in p.iter_mut().zip(coords) {
        *dst = *src;
    }
    p
}

#[inline]
pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn neg(a: &Point) -> Point {
    [-a[0], -a[1], -a[2]]
}

#[inline]
pub fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn normalize(a: &Point) -> Option<Point> {
    let n = norm(a);
    (n > 0.0 && n.is_finite()).then(|| scale(a, 1.0 / n))
}

/// Angle between two unit vectors, accurate near 0 and π.
#[inline]
pub fn angle_between(a: &Point, b: &Point) -> f64 {
    norm(&cross(a, b)).atan2(dot(a, b))
}

/// Two unit vectors completing `c` to an orthonormal frame of R^3.
pub fn orthonormal_frame(c: &Point) -> (Point, Point) {
    let helper = if c[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let e1 = normalize(&cross(&helper, c)).expect("non-parallel helper");
    let e2 = cross(c, &e1);
    (e1, e2)
}

/// Unit vector in the plane at angle `theta` (d = 2 directions).
#[inline]
pub fn polar2(theta: f64) -> Point {
    [theta.cos(), theta.sin(), 0.0]
}

/// Surface area of the unit sphere in R^d (counting measure for d = 1).
pub fn sphere_area(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * PI.powf(d as f64 / 2.0) / statrs::function::gamma::gamma(d as f64 / 2.0),
    }
}

/// Roughly uniform directions on S^2 (Fibonacci lattice).
pub fn fibonacci_sphere(n: usize) -> Vec<Point> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}
