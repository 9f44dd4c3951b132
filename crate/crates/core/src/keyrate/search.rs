use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Bisection stops once the bracket is narrower than this.
    pub resolution: f64,
    /// Coarse scan step used to find the first sign change.
    pub scan_step: f64,
}

impl SearchOptions {
    pub fn distance() -> Self {
        Self {
            resolution: 0.01,
            scan_step: 5.0,
        }
    }

    pub fn threshold() -> Self {
        Self {
            resolution: 1e-3,
            scan_step: 0.01,
        }
    }
}

/// Largest distance in `[0, max_km]` with a positive raw rate, to
/// `options.resolution`. Returns 0 when the rate is not positive at `L = 0`
/// and `max_km` when it stays positive throughout.
pub fn max_secure_distance(
    mut rate: impl FnMut(f64) -> Result<f64>,
    max_km: f64,
    options: SearchOptions,
) -> Result<f64> {
    if rate(0.0)? <= 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = None;
    let mut l = options.scan_step.min(max_km);
    loop {
        if rate(l)? <= 0.0 {
            hi = Some(l);
            break;
        }
        lo = l;
        if l >= max_km {
            break;
        }
        l = (l + options.scan_step).min(max_km);
    }
    let Some(mut hi) = hi else {
        return Ok(max_km);
    };
    while hi - lo > options.resolution {
        let mid = 0.5 * (lo + hi);
        if rate(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Smallest parameter value in `[lo, hi]` giving a positive rate, assuming
/// the rate grows with the parameter. Errors if `[lo, hi]` does not bracket
/// a sign change.
pub fn find_threshold(mut rate: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64, options: SearchOptions) -> Result<f64> {
    if rate(hi)? <= 0.0 || rate(lo)? > 0.0 {
        return Err(Error::NoBracket { lo, hi });
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > options.resolution {
        let mid = 0.5 * (a + b);
        if rate(mid)? > 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(b)
}
