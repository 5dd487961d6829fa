//! Spatial kernels: point-in-polygon, incident-to-block-group joins and
//! contiguity weights.

mod geometry;
mod join;
mod weights;

pub use geometry::{
    point_in_polygon, snap, BBox, Coord, GeometryError, Polygon, Region, Ring, SnapCoord,
    SNAP_SCALE,
};
pub use join::{assign_points, spatial_join, GridIndex, JoinResult};
pub use weights::{contiguity_weights, contiguity_weights_for, row_standardize, Scheme, SpatialWeights};
