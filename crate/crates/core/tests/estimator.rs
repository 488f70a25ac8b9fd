mod common;

fn ok(c: common::Check) {
    match c {
        Ok(msg) => eprintln!("{msg}"),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn empirical_coefficients_are_unbiased() {
    ok(common::check_unbiasedness(common::PROPERTY_RUNS));
}

#[test]
fn concentration_bounds_hold() {
    ok(common::check_concentration(common::PROPERTY_RUNS));
}

#[test]
fn bruteforce_selection_equals_thresholding() {
    ok(common::check_bruteforce_equivalence(200));
}

#[test]
fn superposition_matches_doubled_n() {
    ok(common::check_scaling_consistency(4000));
}
