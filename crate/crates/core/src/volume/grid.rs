//! Direction quadratures on the unit sphere `S^{n-1}`.

use crate::error::{Error, Result};
use serde::Serialize;
use std::f64::consts::PI;

/// `Γ(k/2)` for a positive integer `k`.
pub(crate) fn gamma_half(k: usize) -> f64 {
    let (mut x, mut g) = if k % 2 == 0 { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    while 2.0 * x < k as f64 {
        g *= x;
        x += 1.0;
    }
    g
}

/// `|S^{n-1}| = 2π^{n/2} / Γ(n/2)`.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n)
}

/// Unit directions in `ℝⁿ` with quadrature weights summing to `|S^{n-1}|`.
#[derive(Clone, Debug, Serialize)]
pub struct SphereGrid {
    pub dim: usize,
    pub directions: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SphereGrid {
    /// Uniform trapezoid rule on the circle.
    pub fn circle(m: usize) -> Result<Self> {
        if m < 3 {
            return Err(Error::Invalid("circle grid needs at least 3 points".into()));
        }
        let dt = 2.0 * PI / m as f64;
        let directions = (0..m)
            .map(|k| {
                let t = k as f64 * dt;
                vec![t.cos(), t.sin()]
            })
            .collect();
        Ok(SphereGrid {
            dim: 2,
            directions,
            weights: vec![dt; m],
        })
    }

    /// 26-point octahedral rule on `S²` (exact through degree 7).
    ///
    /// Weights, as fractions of `4π`: 1/21 on the 6 axis points, 4/105 on
    /// the 12 edge midpoints, 9/280 on the 8 cube corners.
    pub fn octahedral26() -> Self {
        let mut b = OrbitBuilder::default();
        b.axes(1.0 / 21.0);
        b.edges(4.0 / 105.0);
        b.corners(9.0 / 280.0);
        b.finish()
    }

    /// 50-point octahedral rule on `S²` (exact through degree 11).
    ///
    /// Weights, as fractions of `4π`: 4/315 (axes), 64/2835 (edges),
    /// 27/1280 (corners), 14641/725760 on the 24 points `(±1, ±1, ±3)/√11`.
    pub fn octahedral50() -> Self {
        let mut b = OrbitBuilder::default();
        b.axes(4.0 / 315.0);
        b.edges(64.0 / 2835.0);
        b.corners(27.0 / 1280.0);
        let (a, c) = (1.0 / 11f64.sqrt(), 3.0 / 11f64.sqrt());
        for slot in 0..3 {
            for s in signs(3) {
                let mut v = [a * s[0], a * s[1], a * s[2]];
                v[slot] = c * s[slot];
                b.push(&v, 14641.0 / 725760.0);
            }
        }
        b.finish()
    }

    /// Product grid in hyperspherical angles: `m` midpoints on each polar
    /// angle in `(0, π)` and `2m` trapezoid points on the azimuth.
    pub fn product(n: usize, m: usize) -> Result<Self> {
        if n < 3 || m < 2 {
            return Err(Error::Invalid("product grid needs n >= 3 and m >= 2".into()));
        }
        // polar angle θ_k (k = 1..n-2) carries the weight sin^{n-1-k} θ_k
        let polar: Vec<(Vec<f64>, Vec<f64>)> = (1..=n - 2)
            .map(|k| {
                let p = n - 1 - k;
                let dt = PI / m as f64;
                let t: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) * dt).collect();
                let mut w: Vec<f64> = t.iter().map(|&x| x.sin().powi(p as i32) * dt).collect();
                // rescale to the exact ∫₀^π sin^p so the total weight is exact
                let s: f64 = w.iter().sum();
                let exact = PI.sqrt() * gamma_half(p + 1) / gamma_half(p + 2);
                w.iter_mut().for_each(|v| *v *= exact / s);
                (t, w)
            })
            .collect();
        let naz = 2 * m;
        let daz = 2.0 * PI / naz as f64;
        let mut directions = Vec::new();
        let mut weights = Vec::new();
        let mut idx = vec![0usize; n - 2];
        loop {
            for j in 0..naz {
                let phi = j as f64 * daz;
                let mut x = vec![0.0; n];
                let mut sin_prod = 1.0;
                let mut w = daz;
                for (k, &i) in idx.iter().enumerate() {
                    let t = polar[k].0[i];
                    x[k] = sin_prod * t.cos();
                    sin_prod *= t.sin();
                    w *= polar[k].1[i];
                }
                x[n - 2] = sin_prod * phi.cos();
                x[n - 1] = sin_prod * phi.sin();
                directions.push(x);
                weights.push(w);
            }
            let mut k = 0;
            loop {
                if k == idx.len() {
                    return Ok(SphereGrid {
                        dim: n,
                        directions,
                        weights,
                    });
                }
                idx[k] += 1;
                if idx[k] < m {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    /// Default grid: 64-point circle, 26-point rule on `S²`, product grids
    /// with `m = 6` for `n = 4` and `m = 4` above.
    pub fn default_for(n: usize) -> Result<Self> {
        match n {
            2 => Self::circle(64),
            3 => Ok(Self::octahedral26()),
            4 => Self::product(n, 6),
            _ => Self::product(n, 4),
        }
    }

    /// Next finer grid in the default family (roughly twice the points).
    pub fn refined_for(n: usize) -> Result<Self> {
        match n {
            2 => Self::circle(128),
            3 => Ok(Self::octahedral50()),
            4 => Self::product(n, 12),
            _ => Self::product(n, 8),
        }
    }

    /// Coarser grid used at low resolution.
    pub fn coarse_for(n: usize) -> Result<Self> {
        match n {
            2 => Self::circle(32),
            3 => Ok(Self::octahedral26()),
            4 => Self::product(n, 4),
            _ => Self::product(n, 3),
        }
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Quadrature of `g` over the sphere.
    pub fn integrate(&self, mut g: impl FnMut(&[f64]) -> f64) -> f64 {
        self.directions
            .iter()
            .zip(&self.weights)
            .map(|(d, w)| w * g(d))
            .sum()
    }
}

fn signs(k: usize) -> impl Iterator<Item = Vec<f64>> {
    (0..1usize << k).map(move |bits| {
        (0..k)
            .map(|i| if bits >> i & 1 == 1 { -1.0 } else { 1.0 })
            .collect()
    })
}

#[derive(Default)]
struct OrbitBuilder {
    directions: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl OrbitBuilder {
    fn push(&mut self, v: &[f64; 3], w: f64) {
        self.directions.push(v.to_vec());
        self.weights.push(4.0 * PI * w);
    }

    fn axes(&mut self, w: f64) {
        for k in 0..3 {
            for s in [1.0, -1.0] {
                let mut v = [0.0; 3];
                v[k] = s;
                self.push(&v, w);
            }
        }
    }

    fn edges(&mut self, w: f64) {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        for zero in 0..3 {
            for s in signs(2) {
                let mut v = [0.0; 3];
                let mut it = s.iter();
                for (k, c) in v.iter_mut().enumerate() {
                    if k != zero {
                        *c = a * it.next().unwrap();
                    }
                }
                self.push(&v, w);
            }
        }
    }

    fn corners(&mut self, w: f64) {
        let a = 1.0 / 3f64.sqrt();
        for s in signs(3) {
            self.push(&[a * s[0], a * s[1], a * s[2]], w);
        }
    }

    fn finish(self) -> SphereGrid {
        SphereGrid {
            dim: 3,
            directions: self.directions,
            weights: self.weights,
        }
    }
}
