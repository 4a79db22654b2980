use crate::variant::{sx, Variant};

/// State indices of the tracked outputs, in output order.
pub fn output_indices(variant: Variant) -> &'static [usize] {
    use sx::*;
    match variant {
        Variant::Bas => &[VX, EY, EPSI, DELTA_F, FX_F],
        Variant::Mz => &[VX, EY, EPSI, DELTA_F, FX_F, MZ],
        Variant::MzDr => &[VX, EY, EPSI, DELTA_F, DELTA_R, FX_F, MZ],
    }
}

/// Tracked outputs of a (full-layout) state.
pub fn outputs(variant: Variant, x: &[f64; sx::LEN]) -> Vec<f64> {
    output_indices(variant).iter().map(|&i| x[i]).collect()
}

/// Output reference: the speed reference first, everything else zero.
pub fn output_reference(variant: Variant, vx_ref: f64) -> Vec<f64> {
    let mut r = vec![0.0; variant.ny()];
    r[0] = vx_ref;
    r
}

/// Weighted squared output deviation plus a linear-plus-quadratic slack
/// penalty. Zero exactly when `z == z_ref` and `eps_mz == 0`.
pub fn stage_cost(
    z: &[f64],
    z_ref: &[f64],
    weights: &[f64],
    slack_linear: f64,
    slack_quadratic: f64,
    eps_mz: f64,
) -> f64 {
    assert!(
        z.len() == z_ref.len() && z.len() == weights.len(),
        "output, reference and weight lengths differ"
    );
    let tracking: f64 = z
        .iter()
        .zip(z_ref)
        .zip(weights)
        .map(|((a, b), w)| w * (a - b) * (a - b))
        .sum();
    tracking + slack_linear * eps_mz + slack_quadratic * eps_mz * eps_mz
}
