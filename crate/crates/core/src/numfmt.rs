/// Canonical text form of a float: rounded to 12 significant digits, then
/// printed in shortest round-trip form. Zero (including -0) prints as `0`.
pub fn canonical_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    rounded.to_string()
}

#[cfg(test)]
mod tests {
    use super::canonical_float;

    #[test]
    fn rounds_to_twelve_significant_digits() {
        assert_eq!(canonical_float(std::f64::consts::PI), "3.14159265359");
        assert_eq!(canonical_float(0.5), "0.5");
        assert_eq!(canonical_float(-0.0), "0");
        assert_eq!(canonical_float(1.0 - 1e-15), "1");
        assert_eq!(canonical_float(1.234e-20), "0.00000000000000000001234");
    }
}
