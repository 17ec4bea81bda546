//! Finite-scale witnesses for asymptotic dimension.
//!
//! The crate works on finite metric spaces and builds the objects used to
//! bound asymptotic dimension at a given scale: colored decompositions and
//! covers, nerves with their canonical projections, mapping cylinders, the
//! Hurewicz-type tower of maps into a polyhedron, and group spaces such as
//! Cayley balls, free products of pointed spaces and spaces of balls.

pub mod cli;
pub mod covers;
pub mod groups;
pub mod hurewicz;
pub mod metric;
pub mod polyhedra;

pub use metric::{FiniteMetricSpace, MetricError, MetricMap, PointSet};
