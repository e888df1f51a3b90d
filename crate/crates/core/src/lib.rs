//! Configuration-avoiding sets: exact polynomial stages, nested ball trees,
//! exact verification and dimension estimates.

pub mod analyze;
pub mod geom;
pub mod interval;
pub mod nested;
pub mod poly;
pub mod presets;
pub mod scalar;
pub mod stage;

pub use geom::Point;
pub use scalar::{Rational, Scalar};

pub type RationalPoly = poly::Poly<Rational>;
pub type FloatPoly = poly::Poly<f64>;
pub type Poly32 = poly::Poly<f32>;
