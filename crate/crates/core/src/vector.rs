//! Dense vector kernels on plain slices.

use crate::scalar::Real;

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    // Four accumulators let the compiler vectorise without reassociation.
    let mut acc = [T::zero(); 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] = acc[0] + a[j] * b[j];
        acc[1] = acc[1] + a[j + 1] * b[j + 1];
        acc[2] = acc[2] + a[j + 2] * b[j + 2];
        acc[3] = acc[3] + a[j + 3] * b[j + 3];
    }
    let mut tail = T::zero();
    for j in 4 * chunks..a.len() {
        tail = tail + a[j] * b[j];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub fn norm_sq<T: Real>(a: &[T]) -> T {
    dot(a, a)
}

#[inline]
pub fn norm<T: Real>(a: &[T]) -> T {
    norm_sq(a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

#[inline]
pub fn scale<T: Real>(alpha: T, x: &mut [T]) {
    for xi in x.iter_mut() {
        *xi = *xi * alpha;
    }
}

/// `y += x`
#[inline]
pub fn add_assign<T: Real>(y: &mut [T], x: &[T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + xi;
    }
}

/// Cosine between `a` and a vector `b` whose norm is already known.
/// A zero `b` gives 0.
#[inline]
pub fn cosine_with<T: Real>(a: &[T], b: &[T], b_norm: T) -> T {
    if b_norm == T::zero() {
        return T::zero();
    }
    dot(a, b) / (norm(a) * b_norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels() {
        let a = [1.0f64, 2.0, 3.0, 4.0, 5.0];
        let mut b = [1.0f64; 5];
        assert_eq!(dot(&a, &b), 15.0);
        assert_eq!(norm_sq(&a), 55.0);
        axpy(2.0, &a, &mut b);
        assert_eq!(b, [3.0, 5.0, 7.0, 9.0, 11.0]);
        scale(0.5, &mut b);
        assert_eq!(b[4], 5.5);
        add_assign(&mut b, &a);
        assert_eq!(b[0], 2.5);
        assert_eq!(cosine_with(&a, &[0.0; 5], 0.0), 0.0);
        let c = cosine_with(&a, &a, norm(&a));
        assert!((c - 1.0).abs() < 1e-15);
    }
}
