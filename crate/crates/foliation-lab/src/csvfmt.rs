//! Numeric formatting for CSV emission: 17 significant digits, `.` decimal
//! separator, LF line endings (writers use `\n` exclusively).

use crate::expr::C;

/// 17 significant digits, sign-normalized zero.
pub fn fmt_f64(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{:.16e}", x)
}

/// Real and imaginary parts as two CSV cells.
pub fn fmt_c(z: C) -> String {
    format!("{},{}", fmt_f64(z.re), fmt_f64(z.im))
}

pub fn fmt_point(coords: &[C]) -> String {
    coords.iter().map(|&z| fmt_c(z)).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(-0.0), "0.0000000000000000e0");
    }
}
