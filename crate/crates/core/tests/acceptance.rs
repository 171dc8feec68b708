//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criterion 1 compares the key decomposition on K^(1) with closed-form
//! expressions whose inner-edge term contradicts the cycle part and the
//! weighted Kirchhoff balance; it is expected to fail on exactly those sub-checks, while the
//! consistent forms (reported as notes) hold to rounding.

use std::io::Write;

use kirchhoff_core::verify::{run_all, CriterionReport};

const KNOWN_INCONSISTENT: [&str; 3] =
    ["w_i closed form (1/9 weights)", "3w_i − 4z_i closed form", "★⁻¹∂u on the inner edges (z_i − z_i x)"];

fn failing(r: &CriterionReport) -> Vec<&str> {
    r.checks.iter().filter(|c| !c.passed && !c.informational).map(|c| c.name.as_str()).collect()
}

#[test]
fn acceptance_criteria() {
    let report = run_all();
    // straight to the stderr handle so the lines survive output capture
    let mut err = std::io::stderr().lock();
    writeln!(err).unwrap();
    for r in &report.criteria {
        writeln!(err, "{}", r.summary_line()).unwrap();
    }
    for r in &report.criteria {
        assert!(r.error.is_none(), "criterion {} errored: {:?}", r.id, r.error);
        if r.id == 1 {
            assert_eq!(failing(r), KNOWN_INCONSISTENT.to_vec());
            assert!(r.checks.iter().filter(|c| c.informational).all(|c| c.passed));
        } else {
            assert!(r.passed, "{}", r.summary_line());
        }
    }
    let total: f64 = report.criteria.iter().map(|r| r.seconds).sum();
    writeln!(err, "total {total:.1} s").unwrap();
    assert!(total < 60.0);
}
