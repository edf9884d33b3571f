//! Text encodings shared by the CSV writers.

/// 17 significant digits in scientific notation; round-trips every `f64`.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string().to_lowercase()
    }
}

/// Splits one CSV line of numbers written by [`fmt17`].
pub fn parse_row(line: &str) -> Result<Vec<f64>, std::num::ParseFloatError> {
    line.split(',').map(|field| field.trim().parse::<f64>()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_encodings() {
        assert_eq!(fmt17(0.15), "1.4999999999999999e-1");
        assert_eq!(fmt17(1.0), "1.0000000000000000e0");
        assert_eq!(fmt17(-0.0), "-0.0000000000000000e0");
        assert_eq!(fmt17(f64::NAN), "nan");
    }

    proptest! {
        #[test]
        fn fmt17_round_trips(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            let parsed: f64 = fmt17(x).parse().unwrap();
            prop_assert_eq!(parsed.to_bits(), x.to_bits());
        }
    }
}
