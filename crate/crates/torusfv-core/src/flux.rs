//! The diffusive upwind numerical flux.
//!
//! For a transported cell quantity `r` and velocity `u`,
//!
//! ```text
//! Up[r, u] = <r> <u>.n - 1/2 |<u>.n| [[r]]
//! F_eps[r, u] = Up[r, u] - h^eps [[r]]
//! ```
//!
//! One kernel serves the mass, momentum and temperature equations; the
//! scheme feeds it `rho`, the momentum components and `rho theta` in turn.

use crate::error::{Error, Result};
use crate::fields::{face_traces, ScalarField, VectorField};
use crate::math;
use crate::mesh::Face;

/// Diffusivity exponent `eps in (-1, 1)` together with the mesh width it is
/// applied on; `h^eps` is cached since it multiplies every face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxParams {
    pub eps: f64,
    pub h: f64,
    pub h_pow_eps: f64,
}

impl FluxParams {
    pub fn new(eps: f64, h: f64) -> Result<Self> {
        if !(eps > -1.0 && eps < 1.0) {
            return Err(Error::InvalidParameter {
                name: "eps",
                value: eps,
            });
        }
        if !(h > 0.0) {
            return Err(Error::InvalidParameter { name: "h", value: h });
        }
        Ok(Self {
            eps,
            h,
            h_pow_eps: math::powf(h, eps),
        })
    }
}

/// Upwind transport kernel on one face.
#[inline(always)]
pub fn upwind_kernel(r_in: f64, r_out: f64, normal_speed: f64) -> f64 {
    0.5 * (r_in + r_out) * normal_speed - 0.5 * math::abs(normal_speed) * (r_out - r_in)
}

/// Diffusive upwind kernel: upwind transport minus `h^eps` times the jump.
#[inline(always)]
pub fn diffusive_kernel(r_in: f64, r_out: f64, normal_speed: f64, h_pow_eps: f64) -> f64 {
    upwind_kernel(r_in, r_out, normal_speed) - h_pow_eps * (r_out - r_in)
}

/// Normal speed `<u>.n` of the averaged velocity at a face.
#[inline(always)]
pub fn normal_speed(u: &VectorField, face: &Face) -> f64 {
    let c = &u.comps[face.axis].data;
    0.5 * (c[face.in_cell] + c[face.out_cell])
}

/// `Up[r, u]` evaluated from the face traces of the fields.
pub fn upwind_flux(r: &ScalarField, u: &VectorField, face: &Face) -> f64 {
    let t = face_traces(r, face);
    upwind_kernel(t.v_in, t.v_out, normal_speed(u, face))
}

/// `F_eps[r, u]` evaluated from the face traces of the fields.
pub fn diffusive_flux(r: &ScalarField, u: &VectorField, face: &Face, params: &FluxParams) -> f64 {
    let t = face_traces(r, face);
    diffusive_kernel(t.v_in, t.v_out, normal_speed(u, face), params.h_pow_eps)
}
