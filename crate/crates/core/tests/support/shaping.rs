use suber_core::postprocess::shape;

use super::{ensure, Check};

/// Exact `max(1, floor(r * (k/10)^(n/dt)))` for `n > 0`, `r` otherwise.
///
/// `m <= r q^(n/dt)` iff `m^dt * 10^n <= k^n * r^dt`, so the floor is the
/// largest such integer `m`. On the grid below every product stays under
/// 10^30, well inside `u128`.
pub fn oracle(r: u32, n: u32, dt: u32, k: u32) -> u32 {
    if n == 0 {
        return r;
    }
    let rhs = u128::from(k).pow(n) * u128::from(r).pow(dt);
    let ten_n = 10u128.pow(n);
    (1..=r)
        .filter(|&m| u128::from(m).pow(dt) * ten_n <= rhs)
        .max()
        .unwrap_or(1)
}

/// r in 1..=10, n in 0..=10, dt in 1..=20, q in {0.1, ..., 0.9}.
pub fn check_grid() -> Check {
    let mut checked = 0;
    for r in 1..=10u32 {
        for n in 0..=10u32 {
            for dt in 1..=20u32 {
                for k in 1..=9u32 {
                    let want = oracle(r, n, dt, k);
                    let got = shape(r as u8, n as usize, u64::from(dt), f64::from(k) / 10.0);
                    ensure(u32::from(got) == want, || {
                        format!("r={r} n={n} dt={dt} q=0.{k}: got {got}, want {want}")
                    })?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} grid points exact"))
}
