use super::*;

#[test]
fn decimals_parse_exactly() {
    use num::{BigInt, BigRational};
    assert_eq!(decimal("0.125"), Some(BigRational::new(BigInt::from(1), BigInt::from(8))));
    assert_eq!(decimal("1"), Some(BigRational::from_integer(BigInt::from(1))));
    assert_eq!(decimal("x"), None);
}

#[test]
fn tra_validation() {
    assert!(validate_tra("STATES 1\nTRANSITIONS 2\n1 1 0.5\n1 1 0.5\n").is_ok());
    assert!(validate_tra("STATES 2\nTRANSITIONS 2\n1 2 0.5\n2 2 1\n").is_err());
    assert!(validate_tra("TRANSITIONS 0\n").is_err());
}

#[test]
fn trace_bits() {
    assert_eq!(parse_bits("1 0 1", 3).unwrap(), 5);
    assert!(parse_bits("1 0", 3).is_err());
    assert!(parse_bits("1 2 0", 3).is_err());
}
