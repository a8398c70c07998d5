//! Numerically stable scalar primitives shared by the loss and its
//! derivatives. Step sizes here can reach 10^6 and per-example margins
//! |a| > 709, so every formula goes through `exp(-|a|)`.

/// Stable `log(1 + exp(x))`.
///
/// `log(1+exp(x)) = max(x,0) + log(1+exp(-|x|))`; the exponential argument is
/// never positive, so this cannot overflow.
#[inline]
pub fn log1pexp(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    x.max(0.0) + e.ln_1p()
}

/// Logistic loss of a signed margin: `log(1 + exp(-z))`.
#[inline]
pub fn logistic_loss(z: f64) -> f64 {
    log1pexp(-z)
}

/// Per-example gradient weight `1/(exp(a) + 1)`, the magnitude of the
/// logistic loss derivative at margin `a`.
///
/// `a >= 0`: `e/(1+e)` with `e = exp(-a)`; `a < 0`: `1/(1+exp(a))`.
#[inline]
pub fn grad_weight(a: f64) -> f64 {
    let e = (-a.abs()).exp();
    if a >= 0.0 {
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + e)
    }
}

/// Fused `(logistic_loss(a), grad_weight(a))` with a single `exp` call.
#[inline]
pub fn loss_and_weight(a: f64) -> (f64, f64) {
    let e = (-a.abs()).exp();
    let loss = (-a).max(0.0) + e.ln_1p();
    let weight = if a >= 0.0 { e / (1.0 + e) } else { 1.0 / (1.0 + e) };
    (loss, weight)
}

/// Euclidean norm of a slice, summed left-to-right in index order for
/// reproducibility.
#[inline]
pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Dot product summed left-to-right in index order.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Formats a double with 17 significant digits, enough to round-trip
/// exactly through text.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
