//! Thread-local floating-point operation accounting.
//!
//! Active only in instrumented builds (`debug_assertions`); release builds
//! compile the counter away. Counts scalar multiplies and adds separately,
//! so one fused multiply-add in the math contributes 2.

#[cfg(debug_assertions)]
use std::cell::Cell;

#[cfg(debug_assertions)]
thread_local! {
    static FLOPS: Cell<u64> = const { Cell::new(0) };
}

/// Reset this thread's counter to zero. No-op without `debug_assertions`.
pub fn reset() {
    #[cfg(debug_assertions)]
    FLOPS.with(|c| c.set(0));
}

/// Total operations recorded on this thread since the last [`reset`].
/// Always zero without `debug_assertions`.
pub fn total() -> u64 {
    #[cfg(debug_assertions)]
    return FLOPS.with(|c| c.get());
    #[cfg(not(debug_assertions))]
    return 0;
}

#[inline]
#[allow(unused_variables)]
pub(crate) fn add(n: u64) {
    #[cfg(debug_assertions)]
    FLOPS.with(|c| c.set(c.get() + n));
}
