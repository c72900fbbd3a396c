use proptest::prelude::*;
use qkam_cli::export::{fmt_f64, fmt_opt, Table};

proptest! {
    #[test]
    fn floats_round_trip_through_text(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
        let s = fmt_f64(x);
        prop_assert!(!s.contains(',') && !s.contains(' '));
        prop_assert_eq!(s.parse::<f64>().unwrap(), x);
    }

    #[test]
    fn rows_are_newline_terminated(cells in proptest::collection::vec(-1e6f64..1e6, 1..6)) {
        let header: Vec<String> = (0..cells.len()).map(|i| format!("c{i}")).collect();
        let hrefs: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut t = Table::new(&hrefs);
        t.push(cells.iter().map(|&x| fmt_f64(x)).collect());
        let text = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        prop_assert_eq!(text.lines().count(), 2);
        prop_assert!(text.ends_with('\n') && !text.contains('\r'));
    }
}

#[test]
fn missing_and_non_finite_values_are_empty_fields() {
    assert_eq!(fmt_opt(None), "");
    assert_eq!(fmt_f64(f64::NAN), "");
    assert_eq!(fmt_f64(f64::INFINITY), "");
    assert_eq!(fmt_f64(0.0), "0");
}
