//! Loewner energy, conformal welding and energy-minimizing Jordan curves.
//!
//! Curves are sampled polylines on the Riemann sphere. Conformal maps are built with a
//! geodesic zipper and carried around as chains of elementary maps with analytic
//! derivatives, which feed both the Loewner driving function and the disk-chart
//! (Liouville action) formula for the loop energy.

pub mod ads;
pub mod confmap;
pub mod curve;
pub mod energy;
pub mod error;
pub mod io;
pub mod jet;
pub mod loewner;
pub mod mobius;
pub mod optcurve;
pub mod optweld;
pub mod sphere;
pub mod weld;
mod zipper;

pub use confmap::{disk_charts_from_curve, hyperbolic_geodesic, map_arc_complement, ConformalChart, DiskCharts, Elementary};
pub use curve::{hausdorff, CurvePolyline};
pub use error::{Error, Result};
pub use jet::Jet;
pub use mobius::{circline_through, cross_ratio, orientation_triple, Circline, MobiusComplex, MobiusReal};
pub use sphere::SpherePoint;
