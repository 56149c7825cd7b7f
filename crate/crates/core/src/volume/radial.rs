//! Running integrals of uniformly sampled radial profiles.

/// `h·∫_a^b q(t) dt` for the quadratic `q` through `(0, f0), (1, f1), (2, f2)`.
fn quad(f: [f64; 3], a: f64, b: f64, h: f64) -> f64 {
    let d1 = f[1] - f[0];
    let d2 = f[2] - 2.0 * f[1] + f[0];
    let p1 = b - a;
    let p2 = (b * b - a * a) / 2.0;
    let p3 = (b * b * b - a * a * a) / 3.0;
    h * (f[0] * p1 + d1 * p2 + 0.5 * d2 * (p3 - p2))
}

fn three(v: &[f64], start: usize) -> [f64; 3] {
    [v[start], v[start + 1], v[start + 2]]
}

/// `c[k] = ∫₀^{kh}` of the samples `v[k] = g(kh)`: composite Simpson at even
/// `k`, plus one quadratic panel at odd `k`.
pub fn cumulative(v: &[f64], h: f64) -> Vec<f64> {
    let m = v.len();
    let mut c = vec![0.0; m];
    if m < 2 {
        return c;
    }
    if m == 2 {
        c[1] = 0.5 * h * (v[0] + v[1]);
        return c;
    }
    for k in 1..m {
        c[k] = if k % 2 == 0 {
            c[k - 2] + h / 3.0 * (v[k - 2] + 4.0 * v[k - 1] + v[k])
        } else if k + 1 < m {
            c[k - 1] + quad(three(v, k - 1), 0.0, 1.0, h)
        } else {
            c[k - 1] + quad(three(v, k - 2), 1.0, 2.0, h)
        };
    }
    c
}

/// `∫₀^u g` from samples and their running integral; the partial last
/// panel uses the quadratic through the nearest three samples.
pub fn integral_to(v: &[f64], cum: &[f64], h: f64, u: f64) -> f64 {
    let m = v.len();
    if m == 0 || u <= 0.0 {
        return 0.0;
    }
    let t = u / h;
    let k = (t.floor() as usize).min(m - 1);
    let frac = t - k as f64;
    if frac <= 1e-12 || m < 3 {
        return cum[k];
    }
    let start = k.min(m - 3);
    let off = (k - start) as f64;
    cum[k] + quad(three(v, start), off, off + frac, h)
}

/// Quadratic interpolation of the samples at `u`.
pub fn interpolate(v: &[f64], h: f64, u: f64) -> f64 {
    let m = v.len();
    let t = u / h;
    let k = (t.floor().max(0.0) as usize).min(m.saturating_sub(1));
    if m < 3 {
        return v[k];
    }
    let start = k.min(m - 3);
    let [f0, f1, f2] = three(v, start);
    let x = t - start as f64;
    f0 + (f1 - f0) * x + 0.5 * (f2 - 2.0 * f1 + f0) * x * (x - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_running_integral() {
        let h = 0.01;
        let v: Vec<f64> = (0..=301).map(|k| (k as f64 * h).powi(3)).collect();
        let c = cumulative(&v, h);
        // Simpson is exact on cubics; the odd-k quadratic panel is off by h⁴·g'''/24
        let panel = h.powi(4) * 6.0 / 24.0;
        for k in [2, 3, 100, 101, 301] {
            let x = k as f64 * h;
            let tol = if k % 2 == 0 { 1e-12 } else { panel * (1.0 + 1e-6) + 1e-12 };
            assert!((c[k] - x.powi(4) / 4.0).abs() <= tol, "{k}: {}", c[k] - x.powi(4) / 4.0);
        }
        for u in [0.005, 1.234, 2.999] {
            let got = integral_to(&v, &c, h, u);
            assert!((got - u.powi(4) / 4.0).abs() <= 2.0 * panel, "{u}");
        }
        assert!((interpolate(&v, h, 1.234) - 1.234f64.powi(3)).abs() < 1e-6);
    }
}
