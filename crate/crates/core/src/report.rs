//! Output formatting shared by the file exporters.

/// Rounds to 10 significant digits so exported numbers diff cleanly.
pub fn round10(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.9e}").parse().unwrap_or(x)
}

/// A CSV field for a float, at 10 significant digits.
pub fn field(x: f64) -> String {
    round10(x).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_digits() {
        assert_eq!(field(-0.82842712474619), "-0.8284271247");
        assert_eq!(field(1234567.891234), "1234567.891");
        assert_eq!(field(0.0), "0");
        assert_eq!(round10(1e-20 / 3.0), 3.333333333e-21);
    }
}
