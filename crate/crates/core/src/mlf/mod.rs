//! Special functions: Γ, the upper incomplete gamma function, the
//! two-parameter Mittag-Leffler function and the tempered kernel
//! g(z) = z^{α-1} e^{-λz} E_{α,α}((λz)^α).

mod gamma;
mod incgamma;
mod mittag_leffler;

pub use gamma::{gamma, gamma_sign, ln_gamma, rgamma, sin_pi};
pub use incgamma::upper_incomplete_gamma;
pub use mittag_leffler::{mittag_leffler, mittag_leffler_scaled, MlfParams};

use crate::error::{domain, Result};
use crate::sampling::WaitingTimeModel;

/// g(z) = z^{α-1} e^{-λz} E_{α,α}(λ^α z^α), the inverse transform of
/// 1/((u+λ)^α - λ^α).
///
/// Behaves like z^{α-1}/Γ(α) for λz ≪ 1 and tends to λ^{1-α}/α for λz ≫ 1.
pub fn g_aux(model: &WaitingTimeModel, z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return domain(format!("g(z) needs z > 0, got {z}"));
    }
    let a = model.alpha();
    let lam = model.lambda();
    if lam == 0.0 {
        return Ok(z.powf(a - 1.0) * rgamma(a));
    }
    let w = (lam * z).powf(a);
    let params = MlfParams::new(a, a)?;
    // e^{-λz} E_{α,α}(w) with e^{w^{1/α}} = e^{λz} cancelled analytically
    let scaled = mittag_leffler_scaled(params, w)?;
    Ok(z.powf(a - 1.0) * scaled)
}
