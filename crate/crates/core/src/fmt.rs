//! Deterministic number formatting for CSV artifacts.
//!
//! Two fixed formats are used everywhere:
//!
//! * [`full`] — 17 significant digits in scientific notation, enough to
//!   round-trip any `f64` exactly; used for path files.
//! * [`report`] — fixed six decimal places; used for summary reports.
//!
//! Both produce identical bytes for identical values on every platform.

/// Full-precision scientific notation (17 significant digits).
pub fn full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Fixed six-decimal formatting for report tables.
///
/// The value is truncated toward zero, not rounded, so the printed digits
/// are always a prefix of the value's decimal expansion: a bound of
/// `41.4465316…` prints as `41.446531`. Non-finite values keep their
/// standard renderings (`inf`, `NaN`).
pub fn report(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x:.6}");
    }
    format!("{:.6}", (x * 1e6).trunc() / 1e6)
}
