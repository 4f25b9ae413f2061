//! Radial shooting for `v'' + (N-1)/r v' + f(v) = 0`, `v'(0) = 0`: adaptive
//! integration, bisection on the shoot height `v(0)` by zero-crossing count,
//! and the node-indexed family of bound states.

mod integrator;
mod profile;
mod shooting;

pub use integrator::{integrate_ivp, Classification, IntegratorOptions, Termination, Trajectory};
pub use profile::{count_sign_changes, CachedNorms, RadialProfile, TailModel};
pub use shooting::{
    dead_zone, find_bound_state, solution_family, FamilyResult, ShootingOptions,
};
