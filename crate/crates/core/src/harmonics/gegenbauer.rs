use crate::error::{Error, Result};

/// Normalized ultraspherical polynomial P_{ℓ,d}(t) with P_{ℓ,d}(1) = 1.
///
/// d = 2 gives Chebyshev T_ℓ, d = 3 gives Legendre P_ℓ.
pub fn gegenbauer(ell: usize, d: usize, t: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::invalid(format!("dimension {d} < 2")));
    }
    if !(t.abs() <= 1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "gegenbauer argument {t} outside [-1, 1]"
        )));
    }
    Ok(gegenbauer_unchecked(ell, d, t.clamp(-1.0, 1.0)))
}

pub(crate) fn gegenbauer_unchecked(ell: usize, d: usize, t: f64) -> f64 {
    if ell == 0 {
        return 1.0;
    }
    let df = d as f64;
    let mut prev = 1.0;
    let mut cur = t;
    for l in 2..=ell {
        let lf = l as f64;
        let next = ((2.0 * lf + df - 4.0) * t * cur - (lf - 1.0) * prev) / (lf + df - 3.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// All P_{0,d}(t), ..., P_{L,d}(t).
pub fn gegenbauer_all(l_max: usize, d: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(l_max + 1);
    out.push(1.0);
    if l_max == 0 {
        return out;
    }
    out.push(t);
    let df = d as f64;
    for l in 2..=l_max {
        let lf = l as f64;
        let v =
            ((2.0 * lf + df - 4.0) * t * out[l - 1] - (lf - 1.0) * out[l - 2]) / (lf + df - 3.0);
        out.push(v);
    }
    out
}
