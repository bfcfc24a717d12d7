//! Concrete problem families.

pub mod affine;
pub mod drift;
pub mod loadflow;
pub mod multiarea;
pub mod qp;

pub use affine::{build_affine, build_affine_family, induced_norm, AffineFamily, AffineParams, Coupling, Ell2Scaling};
pub use drift::{DriftPath, DriftSpec};
pub use loadflow::{
    boundary_injection, build_loadflow_map, two_bus_fixed_point, Injection, InjectionProfile, Line, PowerNetwork,
};
pub use multiarea::{build_multiarea_maps, Area, AreaChain, MultiArea, MultiAreaOptions};
pub use qp::{
    build_feedback_gradient_map, build_gradient_map, gradient_map_lipschitz, star_partition, MeasurementNoise, Signal,
    TimeVaryingQp,
};
