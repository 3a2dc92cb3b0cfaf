//! Text formatting shared by report writers.

/// Nine significant digits in scientific notation, e.g. `1.26947347e0`.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.8e}")
    } else {
        x.to_string()
    }
}
