//! Closed-form second-order expansions of the Fisher information and the
//! Cramér-Rao bound for large `N`.

mod constants;
mod crb;
mod effective;

pub use constants::{
    alpha, polylog_closed, power_sum_coeffs, regime_of, xi0_from_constants, xi_constants,
    xtmx_constants, PowerSumCoeffs, Regime, XiConstants, XtmxConstants,
};
pub use crb::{
    approx_fim, approximation_region, closed_form_crb, crb_report, hilbert, k_coeff, l_coeff,
    max_relative_error, mre_at, n_epsilon, perturbed_hilbert_inverse_diag, ApproxFim,
    ApproxFimParts, ApproxVariant, CrbMode, CrbReport, NEpsilon,
};
pub use effective::{
    effective_xi, effective_xi_quantized, gauss_legendre, EffectiveMode, QUADRATURE_NODES,
};
