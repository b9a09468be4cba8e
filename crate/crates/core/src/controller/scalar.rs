use std::cell::RefCell;
use std::fmt::Debug;
use std::thread::LocalKey;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Floating-point element type of a network.
pub trait Scalar:
    Copy
    + Debug
    + Default
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    const ZERO: Self;
    const ONE: Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn is_finite(self) -> bool;
    fn sqrt(self) -> Self;
    /// Per-thread pool of scratch buffers of this type.
    fn scratch() -> &'static LocalKey<RefCell<Vec<Vec<Self>>>>;

    /// `C = alpha * A B + beta * C` with arbitrary strides.
    ///
    /// # Safety
    /// Every strided index implied by the dimensions must be in bounds of the
    /// corresponding pointer.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );
}

thread_local! {
    static SCRATCH_F32: RefCell<Vec<Vec<f32>>> = const { RefCell::new(Vec::new()) };
}

impl Scalar for f32 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }
    fn sqrt(self) -> Self {
        f32::sqrt(self)
    }
    fn scratch() -> &'static LocalKey<RefCell<Vec<Vec<Self>>>> {
        &SCRATCH_F32
    }
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        unsafe { matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc) }
    }
}

thread_local! {
    static SCRATCH_F64: RefCell<Vec<Vec<f64>>> = const { RefCell::new(Vec::new()) };
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn scratch() -> &'static LocalKey<RefCell<Vec<Vec<Self>>>> {
        &SCRATCH_F64
    }
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        unsafe { matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc) }
    }
}

/// Row/column strides of a matrix operand.
#[derive(Debug, Clone, Copy)]
pub struct Strides {
    pub row: usize,
    pub col: usize,
}

impl Strides {
    /// Row-major with `cols` columns.
    pub fn rm(cols: usize) -> Self {
        Self { row: cols, col: 1 }
    }

    /// Transpose of a row-major matrix with `cols` columns.
    pub fn tr(cols: usize) -> Self {
        Self { row: 1, col: cols }
    }

    fn last(&self, rows: usize, cols: usize) -> usize {
        if rows == 0 || cols == 0 {
            0
        } else {
            (rows - 1) * self.row + (cols - 1) * self.col
        }
    }
}

/// Bounds-checked `C (m x n) = A (m x k) B (k x n) + beta C`.
#[allow(clippy::too_many_arguments)]
pub fn gemm<T: Scalar>(
    m: usize,
    k: usize,
    n: usize,
    a: &[T],
    sa: Strides,
    b: &[T],
    sb: Strides,
    beta: T,
    c: &mut [T],
    sc: Strides,
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(k == 0 || sa.last(m, k) < a.len(), "gemm: A out of bounds");
    assert!(k == 0 || sb.last(k, n) < b.len(), "gemm: B out of bounds");
    assert!(sc.last(m, n) < c.len(), "gemm: C out of bounds");
    // SAFETY: the assertions above bound every index the kernel touches.
    unsafe {
        T::gemm_raw(
            m,
            k,
            n,
            T::ONE,
            a.as_ptr(),
            sa.row as isize,
            sa.col as isize,
            b.as_ptr(),
            sb.row as isize,
            sb.col as isize,
            beta,
            c.as_mut_ptr(),
            sc.row as isize,
            sc.col as isize,
        )
    }
}

const POOL_SLOTS: usize = 24;
const POOL_MIN_LEN: usize = 4096;

/// Empty vector with room for `len`, reusing the smallest pooled allocation that fits.
pub(crate) fn pooled<T: Scalar>(len: usize) -> Vec<T> {
    let mut v: Vec<T> = T::scratch().with(|p| {
        let mut p = p.borrow_mut();
        let best = p
            .iter()
            .enumerate()
            .filter(|(_, b)| b.capacity() >= len)
            .min_by_key(|(_, b)| b.capacity())
            .map(|(i, _)| i);
        best.map(|i| p.swap_remove(i)).unwrap_or_default()
    });
    v.clear();
    v.reserve(len);
    v
}

/// Zeroed vector of `len` from the pool.
pub(crate) fn zeroed<T: Scalar>(len: usize) -> Vec<T> {
    let mut v = pooled(len);
    v.resize(len, T::ZERO);
    v
}

/// Returns a buffer to the pool, dropping the smallest one when full.
pub(crate) fn recycle<T: Scalar>(v: Vec<T>) {
    if v.capacity() < POOL_MIN_LEN {
        return;
    }
    T::scratch().with(|p| {
        let mut p = p.borrow_mut();
        p.push(v);
        if p.len() > POOL_SLOTS {
            let (i, _) = p.iter().enumerate().min_by_key(|(_, b)| b.capacity()).expect("non-empty");
            p.swap_remove(i);
        }
    });
}
