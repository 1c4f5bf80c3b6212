mod common;

use conebr::Error;

#[test]
fn corpus_has_fifty_cases() {
    assert_eq!(common::corpus().len(), 50);
}

#[test]
fn error_estimates_cover_true_errors() {
    for tol in [1e-6, 1e-10, 1e-13] {
        for c in common::corpus() {
            match common::run_case(&c, tol) {
                Ok((v, e)) => {
                    let true_err = (v - c.truth).abs();
                    assert!(true_err <= 3.0 * e, "{} tol={tol:e}: |err|={true_err:e} est={e:e}", c.name);
                    assert!(true_err <= 10.0 * tol * (1.0 + c.truth.abs()), "{} tol={tol:e}: |err|={true_err:e}", c.name);
                }
                // An unmet target must still report an honest estimate.
                Err(Error::Quadrature { value, err_est, .. }) => {
                    assert!(tol < 1e-10, "{} missed a loose target", c.name);
                    assert!((value - c.truth).abs() <= 3.0 * err_est, "{} tol={tol:e}", c.name);
                }
                Err(e) => panic!("{}: {e}", c.name),
            }
        }
    }
}
