//! Reference values for the t-test, computed with scipy.stats
//! (`ttest_ind(..., equal_var=False)` and `2 * t.sf(t, df)`).

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Sample with standard deviation ~0.284.
pub const NOISE: [f64; 10] = [0.12, -0.35, 0.08, 0.41, -0.27, 0.19, -0.05, 0.33, -0.44, 0.02];
/// Roughly ten standard deviations above `NOISE`.
pub const SHIFTED: [f64; 10] = [2.91, 3.22, 2.75, 3.05, 2.68, 3.31, 2.87, 3.12, 2.96, 2.79];
pub const SHIFTED_T: f64 = -26.658373219837635;
pub const SHIFTED_P: f64 = 5.669_054_195_111_730_4e-15;
pub const SHIFTED_DF: f64 = 16.45712115394628;

/// `(t, df, two-sided p)`.
pub const TAILS: [(f64, f64, f64); 4] = [
    (0.5, 3.0, 0.651447964848151),
    (2.0, 10.0, 0.07338803477074039),
    (2.5, 7.3, 0.039650234665600415),
    (4.0, 25.5, 0.00048106884108795896),
];

/// Two-sided p from statrs' Student-t CDF.
pub fn statrs_two_sided(t: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).unwrap();
    // lower tail: 1 - cdf(|t|) cancels to noise far out
    2.0 * dist.cdf(-t.abs())
}
