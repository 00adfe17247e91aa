//! Mann-Whitney U on per-fold F1 scores: exact for small samples, normal
//! approximation otherwise.

use cyberbully_dnn::evaluation::mann_whitney::{mann_whitney_exact, mann_whitney_normal};
use cyberbully_dnn::evaluation::mann_whitney_u;

fn main() -> cyberbully_dnn::Result<()> {
    let original = [0.81, 0.79, 0.84, 0.80, 0.83];
    let oversampled = [0.90, 0.88, 0.93, 0.91, 0.89];
    let r = mann_whitney_u(&oversampled, &original)?;
    println!("5 vs 5 folds: U = {}, p = {:.4} (exact: {})", r.u, r.p_value, r.exact);
    let approx = mann_whitney_normal(&oversampled, &original)?;
    println!("  normal approximation would give p = {:.4}", approx.p_value);

    let a = [1.0, 2.0, 3.0];
    let b = [4.0, 5.0, 6.0];
    let exact = mann_whitney_exact(&a, &b)?;
    println!("[1,2,3] vs [4,5,6]: U = {}, p = {:.4}", exact.u, exact.p_value);

    let big_a: Vec<f64> = (0..10).map(|i| 0.80 + 0.01 * f64::from(i)).collect();
    let big_b: Vec<f64> = (0..10).map(|i| 0.78 + 0.01 * f64::from(i)).collect();
    let r = mann_whitney_u(&big_a, &big_b)?;
    println!("10 vs 10: U = {}, p = {:.4} (exact: {})", r.u, r.p_value, r.exact);
    Ok(())
}
