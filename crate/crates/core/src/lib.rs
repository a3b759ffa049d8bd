//! Kepler problem with linear drag, studied through blowup charts.
//!
//! The crate is organised around a chart atlas ([`charts`]), the
//! desingularized vector fields of every chart ([`dynamics`]), an adaptive
//! integrator that switches charts automatically ([`integrate`]), the formal
//! series of the stable manifold of the zero-Hopf point and its Borel
//! summation ([`series`]) and numerical invariant-manifold computations
//! ([`manifolds`]). The [`cli`] module drives scenario files.
//!
//! Runnable examples live in `examples/`.

pub mod charts;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod integrate;
pub mod manifolds;
pub mod quadrature;
pub mod roots;
pub mod scalar;
pub mod series;

pub use charts::{from_physical, to_physical, transition, ChartId, ChartPoint, PhysicalState};
pub use dynamics::{equilibria, invariants, vector_field, Invariants, Params};
pub use error::{Error, Result};
pub use integrate::{integrate, integrate_physical, Event, IntegratorControls, Trajectory};
