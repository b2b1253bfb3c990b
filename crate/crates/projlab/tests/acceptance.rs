//! Acceptance suite: one test per criterion, printing a pass/fail line with
//! the measured quantities. Run with `cargo test --test acceptance`
//! (`-- --nocapture` to see the lines for passing criteria too).

use projlab::verify::run_criterion;
use projlab::Tolerances;

fn check(id: u8) {
    let report = run_criterion(id, &Tolerances::default()).expect("criterion id exists");
    println!("{}", report.summary_line());
    assert!(report.passed, "{}", report.summary_line());
}

#[test]
fn criterion_01_l2_closed_form_agreement() {
    check(1);
}

#[test]
fn criterion_02_l2_lower_bound() {
    check(2);
}

#[test]
fn criterion_03_flat_recurrence_fidelity() {
    check(3);
}

#[test]
fn criterion_04_flat_asymptotics() {
    check(4);
}

#[test]
fn criterion_05_conified_structure() {
    check(5);
}

#[test]
fn criterion_06_cross_section_consistency() {
    check(6);
}

#[test]
fn criterion_07_polyhedral_positive_case() {
    check(7);
}

#[test]
fn criterion_08_face_machinery() {
    check(8);
}

#[test]
fn criterion_09_decomposition_identity() {
    check(9);
}

#[test]
fn criterion_10_psi_solver_certification() {
    check(10);
}
