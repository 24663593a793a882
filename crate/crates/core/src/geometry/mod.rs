//! Geometry kernel: points, clouds, rotations and homogeneous transforms.

pub mod cloud;
pub mod linalg;
pub mod point;
pub mod rotation;
pub mod transform;

pub use cloud::{PointCloud, SurfaceClass, DEFAULT_FRAME};
pub use point::{ColorRGB, Point3, Vector3};
pub use rotation::{axis_rotation, euler_to_rotation, Axis, EulerAngles, RotationMatrix};
pub use transform::{
    apply_transform, decompose_transform, invert_transform, make_transform, Decomposition, Mat4, Transform,
    TransformMode, Transformable, RELAXED_TOLERANCE,
};
