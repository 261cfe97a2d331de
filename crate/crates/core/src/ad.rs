//! Forward-mode automatic differentiation.
//!
//! Model equations are written once against the [`Scalar`] trait and evaluated
//! with three number types:
//!
//! * `f64` for plain values,
//! * [`Dual`] for values plus a gradient over `N` seed directions,
//! * [`HyperDual`] for values, gradients and the full Hessian.
//!
//! Both derivative types carry fixed-size arrays, so they are meant for small
//! local blocks (one collocation interval) rather than the whole decision vector.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed by the crane model.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
}

/// Value with first derivatives along `N` directions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<const N: usize> {
    pub v: f64,
    pub g: [f64; N],
}

impl<const N: usize> Dual<N> {
    /// Independent variable number `i` with value `v`.
    pub fn var(v: f64, i: usize) -> Self {
        let mut g = [0.0; N];
        g[i] = 1.0;
        Self { v, g }
    }

    #[inline]
    fn chain(self, f0: f64, f1: f64) -> Self {
        let mut g = self.g;
        g.iter_mut().for_each(|x| *x *= f1);
        Self { v: f0, g }
    }
}

impl<const N: usize> Scalar for Dual<N> {
    fn cst(v: f64) -> Self {
        Self { v, g: [0.0; N] }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s)
    }
}

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..N {
            self.g[i] += o.g[i];
        }
        self
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, o: Self) -> Self {
        self.v -= o.v;
        for i in 0..N {
            self.g[i] -= o.g[i];
        }
        self
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let mut g = [0.0; N];
        for i in 0..N {
            g[i] = self.v * o.g[i] + o.v * self.g[i];
        }
        Self { v: self.v * o.v, g }
    }
}

impl<const N: usize> Div for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        let v = self.v * inv;
        let mut g = [0.0; N];
        for i in 0..N {
            g[i] = (self.g[i] - v * o.g[i]) * inv;
        }
        Self { v, g }
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl<const N: usize> Add<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, o: f64) -> Self {
        self.v += o;
        self
    }
}

impl<const N: usize> Sub<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, o: f64) -> Self {
        self.v -= o;
        self
    }
}

impl<const N: usize> Mul<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(mut self, o: f64) -> Self {
        self.v *= o;
        self.g.iter_mut().for_each(|x| *x *= o);
        self
    }
}

impl<const N: usize> Div<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, o: f64) -> Self {
        self * (1.0 / o)
    }
}

/// Value, gradient and Hessian along `N` directions.
///
/// The Hessian is stored dense; only use this for small `N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperDual<const N: usize> {
    pub v: f64,
    pub g: [f64; N],
    pub h: [[f64; N]; N],
}

impl<const N: usize> HyperDual<N> {
    pub fn var(v: f64, i: usize) -> Self {
        let mut g = [0.0; N];
        g[i] = 1.0;
        Self { v, g, h: [[0.0; N]; N] }
    }

    #[inline]
    fn chain(mut self, f0: f64, f1: f64, f2: f64) -> Self {
        for i in 0..N {
            let gi = self.g[i];
            for j in 0..N {
                self.h[i][j] = f1 * self.h[i][j] + f2 * gi * self.g[j];
            }
        }
        self.g.iter_mut().for_each(|x| *x *= f1);
        self.v = f0;
        self
    }

    #[inline]
    fn recip(self) -> Self {
        let inv = 1.0 / self.v;
        self.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }
}

impl<const N: usize> Scalar for HyperDual<N> {
    fn cst(v: f64) -> Self {
        Self {
            v,
            g: [0.0; N],
            h: [[0.0; N]; N],
        }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
}

impl<const N: usize> Add for HyperDual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..N {
            self.g[i] += o.g[i];
            for j in 0..N {
                self.h[i][j] += o.h[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Sub for HyperDual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, o: Self) -> Self {
        self.v -= o.v;
        for i in 0..N {
            self.g[i] -= o.g[i];
            for j in 0..N {
                self.h[i][j] -= o.h[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Mul for HyperDual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let mut r = Self::cst(self.v * o.v);
        for i in 0..N {
            r.g[i] = self.v * o.g[i] + o.v * self.g[i];
            for j in 0..N {
                r.h[i][j] = self.v * o.h[i][j] + o.v * self.h[i][j] + self.g[i] * o.g[j] + o.g[i] * self.g[j];
            }
        }
        r
    }
}

impl<const N: usize> Div for HyperDual<N> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<const N: usize> Neg for HyperDual<N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl<const N: usize> Add<f64> for HyperDual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, o: f64) -> Self {
        self.v += o;
        self
    }
}

impl<const N: usize> Sub<f64> for HyperDual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, o: f64) -> Self {
        self.v -= o;
        self
    }
}

impl<const N: usize> Mul<f64> for HyperDual<N> {
    type Output = Self;
    #[inline]
    fn mul(mut self, o: f64) -> Self {
        self.v *= o;
        for i in 0..N {
            self.g[i] *= o;
            for j in 0..N {
                self.h[i][j] *= o;
            }
        }
        self
    }
}

impl<const N: usize> Div<f64> for HyperDual<N> {
    type Output = Self;
    #[inline]
    fn div(self, o: f64) -> Self {
        self * (1.0 / o)
    }
}

/// Dependency set over at most 64 inputs; arithmetic takes unions. Running
/// model code on it yields the structural sparsity of the outputs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Pattern(pub u64);

impl Pattern {
    pub fn var(i: usize) -> Self {
        Pattern(1 << i)
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }
}

impl Scalar for Pattern {
    fn cst(_: f64) -> Self {
        Pattern(0)
    }
    fn value(&self) -> f64 {
        0.0
    }
    fn sin(self) -> Self {
        self
    }
    fn cos(self) -> Self {
        self
    }
}

macro_rules! pattern_ops {
    ($($tr:ident $f:ident),*) => {$(
        impl $tr for Pattern {
            type Output = Pattern;
            fn $f(self, o: Pattern) -> Pattern {
                Pattern(self.0 | o.0)
            }
        }
        impl $tr<f64> for Pattern {
            type Output = Pattern;
            fn $f(self, _: f64) -> Pattern {
                self
            }
        }
    )*};
}
pattern_ops!(Add add, Sub sub, Mul mul, Div div);

impl Neg for Pattern {
    type Output = Pattern;
    fn neg(self) -> Pattern {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample<T: Scalar>(x: T, y: T) -> T {
        x * y.sin() / (x * x + 1.0) - y.cos() * 3.0 + x / y
    }

    #[test]
    fn dual_matches_central_differences() {
        let (x, y) = (0.7, 1.3);
        let d = sample(Dual::<2>::var(x, 0), Dual::<2>::var(y, 1));
        let h = 1e-6;
        let dx = (sample(x + h, y) - sample(x - h, y)) / (2.0 * h);
        let dy = (sample(x, y + h) - sample(x, y - h)) / (2.0 * h);
        assert_relative_eq!(d.v, sample(x, y));
        assert_relative_eq!(d.g[0], dx, max_relative = 1e-8);
        assert_relative_eq!(d.g[1], dy, max_relative = 1e-8);
    }

    #[test]
    fn hyperdual_hessian_matches_gradient_differences() {
        let (x, y) = (0.7, 1.3);
        let hd = sample(HyperDual::<2>::var(x, 0), HyperDual::<2>::var(y, 1));
        let grad = |x: f64, y: f64| sample(Dual::<2>::var(x, 0), Dual::<2>::var(y, 1)).g;
        let h = 1e-6;
        let (gxp, gxm) = (grad(x + h, y), grad(x - h, y));
        let (gyp, gym) = (grad(x, y + h), grad(x, y - h));
        for j in 0..2 {
            assert_relative_eq!(hd.h[0][j], (gxp[j] - gxm[j]) / (2.0 * h), max_relative = 1e-7);
            assert_relative_eq!(hd.h[1][j], (gyp[j] - gym[j]) / (2.0 * h), max_relative = 1e-7);
        }
        assert_relative_eq!(hd.h[0][1], hd.h[1][0], max_relative = 1e-14);
    }
}
