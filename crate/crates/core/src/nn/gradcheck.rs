/// Result of comparing analytic gradients with central finite differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic_at_worst: f64,
    pub numeric_at_worst: f64,
    pub checked: usize,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < self.tolerance
    }
}

/// Denominator floor for the relative error so that entries whose true
/// gradient is (near) zero are compared absolutely.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

/// Check `analytic` against central differences of `loss` around `params`.
///
/// Relative error per entry is `|a - n| / max(|a|, |n|, REL_ERROR_FLOOR)`.
pub fn gradient_check(
    params: &[f64],
    analytic: &[f64],
    mut loss: impl FnMut(&[f64]) -> f64,
    step: f64,
    tolerance: f64,
) -> GradCheckReport {
    assert_eq!(
        params.len(),
        analytic.len(),
        "one analytic entry per parameter"
    );
    let mut probe = params.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: 0,
        analytic_at_worst: 0.0,
        numeric_at_worst: 0.0,
        checked: params.len(),
        tolerance,
    };
    for i in 0..params.len() {
        probe[i] = params[i] + step;
        let up = loss(&probe);
        probe[i] = params[i] - step;
        let down = loss(&probe);
        probe[i] = params[i];
        let numeric = (up - down) / (2.0 * step);
        let a = analytic[i];
        let denom = a.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
        let rel = (a - numeric).abs() / denom;
        let rel = if rel.is_nan() { f64::INFINITY } else { rel };
        if rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst_index = i;
            report.analytic_at_worst = a;
            report.numeric_at_worst = numeric;
        }
    }
    // restore caller state held behind the closure
    loss(params);
    report
}
