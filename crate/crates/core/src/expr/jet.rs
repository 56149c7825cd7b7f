//! Second-order forward-mode dual numbers.

use super::MAX_DIM;
use std::ops::{Add, Mul, Neg, Sub};

/// Packed length of the upper triangle of a `MAX_DIM × MAX_DIM` matrix.
pub const HESS_LEN: usize = MAX_DIM * (MAX_DIM + 1) / 2;

#[inline]
pub(crate) fn tri(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * (2 * MAX_DIM - i - 1) / 2 + j
}

/// Value, gradient and (symmetric) Hessian of a scalar function at a point.
///
/// The Hessian is stored as a packed upper triangle, so it is symmetric by
/// construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    dim: usize,
    value: f64,
    grad: [f64; MAX_DIM],
    hess: [f64; HESS_LEN],
}

impl Jet {
    pub fn constant(dim: usize, value: f64) -> Self {
        debug_assert!(dim <= MAX_DIM);
        Jet {
            dim,
            value,
            grad: [0.0; MAX_DIM],
            hess: [0.0; HESS_LEN],
        }
    }

    /// The coordinate function `x_{index+1}` evaluated at `value`.
    pub fn variable(dim: usize, index: usize, value: f64) -> Self {
        let mut j = Jet::constant(dim, value);
        j.grad[index] = 1.0;
        j
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn gradient(&self) -> &[f64] {
        &self.grad[..self.dim]
    }

    pub fn hessian(&self, i: usize, j: usize) -> f64 {
        self.hess[tri(i, j)]
    }

    /// Dense row-major copy of the Hessian.
    pub fn hessian_matrix(&self) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.hessian(i, j);
            }
        }
        out
    }

    /// True when every derivative is exactly zero.
    pub fn is_constant(&self) -> bool {
        self.gradient().iter().all(|&g| g == 0.0)
            && (0..self.dim).all(|i| (i..self.dim).all(|j| self.hessian(i, j) == 0.0))
    }

    /// Compose with a scalar function `φ` given `φ(a)`, `φ'(a)`, `φ''(a)`.
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Jet {
        let n = self.dim;
        let mut out = Jet::constant(n, f0);
        for i in 0..n {
            out.grad[i] = f1 * self.grad[i];
        }
        for i in 0..n {
            for j in i..n {
                let k = tri(i, j);
                out.hess[k] = f1 * self.hess[k] + f2 * self.grad[i] * self.grad[j];
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> Jet {
        let mut out = *self;
        out.value *= c;
        for g in out.grad.iter_mut() {
            *g *= c;
        }
        for h in out.hess.iter_mut() {
            *h *= c;
        }
        out
    }

    pub fn recip(&self) -> Option<Jet> {
        let a = self.value;
        if a == 0.0 {
            return None;
        }
        let r = 1.0 / a;
        Some(self.chain(r, -r * r, 2.0 * r * r * r))
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        self.value += rhs.value;
        for i in 0..MAX_DIM {
            self.grad[i] += rhs.grad[i];
        }
        for k in 0..HESS_LEN {
            self.hess[k] += rhs.hess[k];
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: Jet) -> Jet {
        self.value -= rhs.value;
        for i in 0..MAX_DIM {
            self.grad[i] -= rhs.grad[i];
        }
        for k in 0..HESS_LEN {
            self.hess[k] -= rhs.hess[k];
        }
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let n = self.dim.max(rhs.dim);
        let (u, v) = (self.value, rhs.value);
        let mut out = Jet::constant(n, u * v);
        for i in 0..n {
            out.grad[i] = self.grad[i] * v + u * rhs.grad[i];
        }
        for i in 0..n {
            for j in i..n {
                let k = tri(i, j);
                out.hess[k] = self.hess[k] * v
                    + u * rhs.hess[k]
                    + self.grad[i] * rhs.grad[j]
                    + self.grad[j] * rhs.grad[i];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_index_is_a_bijection_on_the_upper_triangle() {
        let mut seen = vec![false; HESS_LEN];
        for i in 0..MAX_DIM {
            for j in i..MAX_DIM {
                let k = tri(i, j);
                assert!(!seen[k]);
                seen[k] = true;
                assert_eq!(tri(j, i), k);
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn product_rule_second_order() {
        // (x y)(2,3): grad (3,2), hess [[0,1],[1,0]]
        let x = Jet::variable(2, 0, 2.0);
        let y = Jet::variable(2, 1, 3.0);
        let p = x * y;
        assert_eq!(p.value(), 6.0);
        assert_eq!(p.gradient(), &[3.0, 2.0]);
        assert_eq!(p.hessian(0, 0), 0.0);
        assert_eq!(p.hessian(0, 1), 1.0);
        assert_eq!(p.hessian(1, 1), 0.0);
    }
}
