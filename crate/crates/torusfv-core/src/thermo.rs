//! Perfect-gas thermodynamics: pressure law, physical entropy, the entropy
//! Hessian with its eigenvalue bounds, the ballistic free energy and the
//! relative energy functional built on it.
//!
//! Entropy and the free energy are evaluated in log space with no fast-math
//! shortcuts; the balance identities downstream are verified to near
//! round-off and would notice.

use crate::error::{Error, Result};
use crate::math;
use crate::scheme::State;

/// Adiabatic coefficient and the specific heat it induces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasParams {
    pub gamma: f64,
    /// `c_v = 1 / (gamma - 1)`.
    pub c_v: f64,
}

impl GasParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: gamma,
            });
        }
        Ok(Self {
            gamma,
            c_v: 1.0 / (gamma - 1.0),
        })
    }
}

/// Discrete pressure `p = rho theta`, clamped to zero for nonpositive
/// temperature.
///
/// The clamp exists to mirror the scheme definition; converged states are
/// rejected on nonpositive temperature elsewhere, so it is reachable only
/// inside nonlinear-solver iterates.
#[inline(always)]
pub fn pressure(rho: f64, theta: f64) -> f64 {
    if theta > 0.0 {
        rho * theta
    } else {
        0.0
    }
}

/// Specific physical entropy `s = c_v ln(theta) - ln(rho)` on the positive
/// quadrant.
#[inline(always)]
pub fn entropy(rho: f64, theta: f64, gas: &GasParams) -> f64 {
    debug_assert!(rho > 0.0 && theta > 0.0, "entropy off positive quadrant");
    gas.c_v * math::ln(theta) - math::ln(rho)
}

/// Hessian of `-rho s` in the `(rho, p)` variables, expressed through
/// `(rho, theta)`:
///
/// ```text
/// [ (1+c_v)/rho      -c_v/(rho theta)   ]
/// [ -c_v/(rho theta)  c_v/(rho theta^2) ]
/// ```
pub fn entropy_hessian(rho: f64, theta: f64, gas: &GasParams) -> [[f64; 2]; 2] {
    assert!(
        rho > 0.0 && theta > 0.0,
        "entropy Hessian off positive quadrant"
    );
    let cv = gas.c_v;
    let off = -cv / (rho * theta);
    [
        [(1.0 + cv) / rho, off],
        [off, cv / (rho * theta * theta)],
    ]
}

/// Closed-form eigenvalues `lambda_1 <= lambda_2` of the entropy Hessian.
pub fn entropy_hessian_eigenvalues(rho: f64, theta: f64, gas: &GasParams) -> (f64, f64) {
    let cv = gas.c_v;
    let tt = theta * theta;
    let trace = (cv + (1.0 + cv) * tt) / (rho * tt);
    let det = cv / (rho * rho * tt);
    let half = 0.5 * trace;
    let disc = math::sqrt(half * half - det);
    (half - disc, half + disc)
}

/// Eigenvalue bounds for the entropy Hessian on the positive quadrant:
/// `0 < lower < lambda_1 <= lambda_2 < upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianBounds {
    pub lower: f64,
    pub upper: f64,
}

impl HessianBounds {
    pub fn new(rho: f64, theta: f64, gas: &GasParams) -> Self {
        let cv = gas.c_v;
        let tt = theta * theta;
        let lower = (1.0 / ((2.0 + cv) * rho)).min(cv / ((2.0 + cv) * rho * tt));
        let upper = (cv + (1.0 + cv) * tt) / (rho * tt);
        Self { lower, upper }
    }
}

/// Ballistic free energy `H_ref(rho, theta) = rho (c_v theta - theta_ref s)`.
#[inline(always)]
pub fn ballistic_energy(rho: f64, theta: f64, theta_ref: f64, gas: &GasParams) -> f64 {
    debug_assert!(rho > 0.0 && theta > 0.0 && theta_ref > 0.0);
    rho * (gas.c_v * theta - theta_ref * entropy(rho, theta, gas))
}

/// Partial derivative of the ballistic free energy in the density:
/// `c_v theta - theta_ref (s - 1)`.
#[inline(always)]
pub fn ballistic_energy_drho(rho: f64, theta: f64, theta_ref: f64, gas: &GasParams) -> f64 {
    gas.c_v * theta - theta_ref * (entropy(rho, theta, gas) - 1.0)
}

/// Pointwise relative-energy integrand: the Bregman-type remainder of the
/// ballistic free energy plus the kinetic mismatch `1/2 rho |u - u_ref|^2`
/// is assembled by [`relative_energy`]; this helper is the thermal part.
#[inline(always)]
pub(crate) fn relative_energy_density(
    rho: f64,
    theta: f64,
    rho_ref: f64,
    theta_ref: f64,
    gas: &GasParams,
) -> f64 {
    ballistic_energy(rho, theta, theta_ref, gas)
        - ballistic_energy_drho(rho_ref, theta_ref, theta_ref, gas) * (rho - rho_ref)
        - ballistic_energy(rho_ref, theta_ref, theta_ref, gas)
}

/// Relative energy between a state and a reference state on the same grid:
///
/// `sum_K |K| [ 1/2 rho |u - u_ref|^2 + H(rho,theta) - dH(ref)(rho - rho_ref)
///   - H(ref) ]`,
///
/// nonnegative by convexity, zero iff the states coincide.
pub fn relative_energy(state: &State, reference: &State, gas: &GasParams) -> Result<f64> {
    if !state.grid.same_layout(&reference.grid) {
        return Err(Error::GridMismatch);
    }
    let grid = &state.grid;
    let d = grid.dim();
    let mut total = 0.0;
    for k in 0..grid.n_cells() {
        let rho = state.rho.data[k];
        let theta = state.theta.data[k];
        let rho_r = reference.rho.data[k];
        let theta_r = reference.theta.data[k];
        if rho <= 0.0 || theta <= 0.0 || rho_r <= 0.0 || theta_r <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "relative_energy state",
                value: rho.min(theta).min(rho_r).min(theta_r),
            });
        }
        let mut kin = 0.0;
        for j in 0..d {
            let du = state.u.comps[j].data[k] - reference.u.comps[j].data[k];
            kin += du * du;
        }
        total += 0.5 * rho * kin + relative_energy_density(rho, theta, rho_r, theta_r, gas);
    }
    Ok(grid.cell_volume() * total)
}
