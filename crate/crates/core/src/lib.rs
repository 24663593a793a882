//! Registration and voxel-level fusion of aerial (UAV) and ground (mobile
//! mapping) point clouds.
//!
//! The geometry kernel and the estimators are generic over [`Real`]
//! (`f32` / `f64`); file IO, scene synthesis and the CLI work in `f64`
//! through the aliases below.

pub mod error;
pub mod fusion;
pub mod geometry;
pub mod io;
pub mod pipeline;
pub mod registration;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{
    apply_transform, axis_rotation, decompose_transform, euler_to_rotation, invert_transform, make_transform,
    Axis, ColorRGB, Decomposition, EulerAngles, Point3, PointCloud, RotationMatrix, SurfaceClass, Transform,
    TransformMode, Transformable, Vector3,
};
pub use scalar::Real;

pub type Point3d = Point3<f64>;
pub type Point3f = Point3<f32>;
pub type PointCloudd = PointCloud<f64>;
pub type PointCloudf = PointCloud<f32>;
pub type RotationMatrixd = RotationMatrix<f64>;
pub type RotationMatrixf = RotationMatrix<f32>;
pub type Transformd = Transform<f64>;
pub type Transformf = Transform<f32>;
