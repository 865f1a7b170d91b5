//! Pinhole camera math: back-projection, rigid transforms, height filtering.

use nalgebra::{Matrix3, Point3, Vector3};
use thiserror::Error;

use crate::frame::{DepthFrame, Pose2};

/// Tolerance for the orthonormality / determinant check on rotations.
pub const ROTATION_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("frame is {frame_w}x{frame_h} but camera expects {cam_w}x{cam_h}")]
    DimensionMismatch {
        frame_w: usize,
        frame_h: usize,
        cam_w: usize,
        cam_h: usize,
    },
    #[error("rotation is not orthonormal with det +1 (deviation {deviation:.3e})")]
    InvalidRotation { deviation: f64 },
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("height band is empty: h_min {h_min} >= h_max {h_max}")]
    EmptyHeightBand { h_min: f64, h_max: f64 },
}

/// Rotation + translation. The rotation is validated at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        let dev_ortho = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        let dev_det = (rotation.determinant() - 1.0).abs();
        let deviation = dev_ortho.max(dev_det);
        if deviation > ROTATION_TOL {
            return Err(GeometryError::InvalidRotation { deviation });
        }
        Ok(RigidTransform { rotation, translation })
    }

    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation about the +z axis by `yaw`, then translation.
    pub fn from_yaw_translation(yaw: f64, translation: Vector3<f64>) -> Self {
        let (s, c) = yaw.sin_cos();
        let rotation = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
        RigidTransform { rotation, translation }
    }

    /// Rotation about the +y axis by `pitch` (positive tips +x toward -z).
    pub fn from_pitch(pitch: f64) -> Self {
        let (s, c) = pitch.sin_cos();
        let rotation = Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c);
        RigidTransform {
            rotation,
            translation: Vector3::zeros(),
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    #[inline]
    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    #[inline]
    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn inverse(&self) -> RigidTransform {
        let rot = self.rotation.transpose();
        RigidTransform {
            rotation: rot,
            translation: -(rot * self.translation),
        }
    }

    /// `self` after `other`: (self ∘ other)(p) = self(other(p)).
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }
}

/// World-from-base transform for a planar pose.
pub fn pose_transform(pose: &Pose2) -> RigidTransform {
    RigidTransform::from_yaw_translation(pose.yaw, Vector3::new(pose.x, pose.y, 0.0))
}

/// Optical-to-base axis permutation: camera +z (forward) to base +x,
/// camera +x (right) to base -y, camera +y (down) to base -z.
pub fn optical_to_base() -> Matrix3<f64> {
    Matrix3::new(0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0)
}

/// Pinhole camera with a rigid extrinsic from the optical frame to the robot
/// base frame. Pixel (u, v) addresses the pixel center; no distortion model.
#[derive(Debug, Clone)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub extrinsic: RigidTransform,
}

impl CameraModel {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        extrinsic: RigidTransform,
    ) -> Result<Self, GeometryError> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "focal lengths must be positive (fx={fx}, fy={fy})"
            )));
        }
        if !(0.0 <= cx && cx < width as f64 && 0.0 <= cy && cy < height as f64) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "principal point ({cx}, {cy}) outside {width}x{height} image"
            )));
        }
        Ok(CameraModel {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            extrinsic,
        })
    }

    /// Forward-facing camera mounted at `(x, y, z)` on the base with optional
    /// yaw and pitch (positive pitch tilts the optical axis downward).
    pub fn forward_facing(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        mount: Vector3<f64>,
        yaw: f64,
        pitch: f64,
    ) -> Result<Self, GeometryError> {
        let rot = RigidTransform::from_yaw_translation(yaw, mount)
            .compose(&RigidTransform::from_pitch(pitch));
        let extrinsic = RigidTransform {
            rotation: rot.rotation * optical_to_base(),
            translation: rot.translation,
        };
        CameraModel::new(fx, fy, cx, cy, width, height, extrinsic)
    }

    /// Unit-depth ray direction in the optical frame for pixel (u, v);
    /// the z component is 1 so the ray parameter equals pinhole depth.
    #[inline]
    pub fn ray(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    /// Project an optical-frame point back to (u, v, depth). None when the
    /// point is at or behind the camera.
    pub fn project(&self, p: &Point3<f64>) -> Option<(f64, f64, f64)> {
        if p.z <= 0.0 {
            return None;
        }
        Some((
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
            p.z,
        ))
    }
}

/// Which frame a point cloud is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFrame {
    Camera,
    Base,
}

/// 3D points tagged with their reference frame. All coordinates are finite by
/// construction: only finite positive depths are ever projected.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3<f64>>,
    pub frame: CloudFrame,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Back-project every valid pixel of `frame` into the optical frame. A pixel
/// (u, v) with depth d maps to ((u-cx)d/fx, (v-cy)d/fy, d).
pub fn back_project(frame: &DepthFrame, cam: &CameraModel) -> Result<PointCloud, GeometryError> {
    if frame.width != cam.width || frame.height != cam.height {
        return Err(GeometryError::DimensionMismatch {
            frame_w: frame.width,
            frame_h: frame.height,
            cam_w: cam.width,
            cam_h: cam.height,
        });
    }
    let mut points = Vec::new();
    for v in 0..frame.height {
        for u in 0..frame.width {
            let d = frame.depth_at(u, v);
            if d.is_finite() && d > 0.0 {
                let r = cam.ray(u as f64, v as f64);
                points.push(Point3::from(r * d));
            }
        }
    }
    Ok(PointCloud {
        points,
        frame: CloudFrame::Camera,
    })
}

/// Apply `transform` to every point, producing a base-frame cloud.
pub fn transform_points(cloud: &PointCloud, transform: &RigidTransform) -> PointCloud {
    PointCloud {
        points: cloud.points.iter().map(|p| transform.apply(p)).collect(),
        frame: CloudFrame::Base,
    }
}

/// Retain exactly the points with h_min <= z <= h_max (both ends inclusive).
pub fn height_band_filter(
    cloud: &PointCloud,
    h_min: f64,
    h_max: f64,
) -> Result<PointCloud, GeometryError> {
    if h_min >= h_max {
        return Err(GeometryError::EmptyHeightBand { h_min, h_max });
    }
    Ok(PointCloud {
        points: cloud
            .points
            .iter()
            .filter(|p| p.z >= h_min && p.z <= h_max)
            .copied()
            .collect(),
        frame: cloud.frame,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cam() -> CameraModel {
        CameraModel::new(500.0, 500.0, 320.0, 240.0, 640, 480, RigidTransform::identity()).unwrap()
    }

    #[test]
    fn principal_point_ray_projects_on_axis() {
        let cam = cam();
        let mut f = DepthFrame::zeroed(640, 480, 0.0);
        let i = f.idx(320, 240);
        f.depth[i] = 2.0;
        let cloud = back_project(&f, &cam).unwrap();
        assert_eq!(cloud.len(), 1);
        assert_relative_eq!(cloud.points[0].x, 0.0);
        assert_relative_eq!(cloud.points[0].y, 0.0);
        assert_relative_eq!(cloud.points[0].z, 2.0);
    }

    #[test]
    fn off_axis_pixel_back_projects_by_pinhole_formula() {
        let cam = cam();
        let mut f = DepthFrame::zeroed(640, 480, 0.0);
        let i = f.idx(420, 240);
        f.depth[i] = 1.0;
        let cloud = back_project(&f, &cam).unwrap();
        assert_eq!(cloud.len(), 1);
        assert_relative_eq!(cloud.points[0].x, 0.2, epsilon = 1e-12);
        assert_relative_eq!(cloud.points[0].y, 0.0, epsilon = 1e-12);
        assert_relative_eq!(cloud.points[0].z, 1.0);
    }

    #[test]
    fn all_invalid_frame_gives_empty_cloud() {
        let cam = cam();
        let f = DepthFrame::zeroed(640, 480, 0.0);
        assert!(back_project(&f, &cam).unwrap().is_empty());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let cam = cam();
        let f = DepthFrame::zeroed(320, 240, 0.0);
        assert!(matches!(
            back_project(&f, &cam),
            Err(GeometryError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn identity_transform_leaves_cloud_unchanged() {
        let cloud = PointCloud {
            points: vec![Point3::new(1.0, 2.0, 3.0), Point3::new(-0.5, 0.0, 4.0)],
            frame: CloudFrame::Camera,
        };
        let out = transform_points(&cloud, &RigidTransform::identity());
        assert_eq!(out.points, cloud.points);
        assert_eq!(out.frame, CloudFrame::Base);
    }

    #[test]
    fn pure_translation_shifts_points() {
        let cloud = PointCloud {
            points: vec![Point3::new(1.0, 2.0, 3.0)],
            frame: CloudFrame::Camera,
        };
        let t = RigidTransform::from_translation(Vector3::new(0.0, 0.0, 1.0));
        let out = transform_points(&cloud, &t);
        assert_eq!(out.points[0], Point3::new(1.0, 2.0, 4.0));
    }

    #[test]
    fn quarter_turn_yaw_rotates_x_to_y() {
        let t = RigidTransform::from_yaw_translation(std::f64::consts::FRAC_PI_2, Vector3::zeros());
        let p = t.apply(&Point3::new(1.0, 0.0, 0.0));
        assert_relative_eq!(p.x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(p.y, 1.0, epsilon = 1e-12);
        assert_relative_eq!(p.z, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn height_band_is_inclusive_on_both_ends() {
        let cloud = PointCloud {
            points: vec![
                Point3::new(0.0, 0.0, 0.04),
                Point3::new(0.0, 0.0, 0.05),
                Point3::new(0.0, 0.0, 2.0),
                Point3::new(0.0, 0.0, 2.01),
            ],
            frame: CloudFrame::Base,
        };
        let out = height_band_filter(&cloud, 0.05, 2.0).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out.points[0].z, 0.05);
        assert_eq!(out.points[1].z, 2.0);
    }

    #[test]
    fn empty_band_is_an_error() {
        let cloud = PointCloud {
            points: vec![],
            frame: CloudFrame::Base,
        };
        assert!(height_band_filter(&cloud, 2.0, 2.0).is_err());
    }

    #[test]
    fn height_band_matches_brute_force_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let points: Vec<Point3<f64>> = (0..100)
            .map(|_| Point3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>() * 4.0))
            .collect();
        let cloud = PointCloud {
            points: points.clone(),
            frame: CloudFrame::Base,
        };
        let out = height_band_filter(&cloud, 0.05, 2.0).unwrap();
        let expected: Vec<_> = points
            .iter()
            .filter(|p| p.z >= 0.05 && p.z <= 2.0)
            .copied()
            .collect();
        assert_eq!(out.points, expected);
    }

    #[test]
    fn bad_rotation_is_rejected() {
        let m = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 1e-6, 0.0, 0.0, 1.0);
        assert!(RigidTransform::new(m, Vector3::zeros()).is_err());
        // det = -1 (reflection)
        let m = Matrix3::new(-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(RigidTransform::new(m, Vector3::zeros()).is_err());
    }

    #[test]
    fn intrinsics_validation() {
        assert!(CameraModel::new(0.0, 1.0, 0.0, 0.0, 10, 10, RigidTransform::identity()).is_err());
        assert!(CameraModel::new(1.0, 1.0, 10.0, 0.0, 10, 10, RigidTransform::identity()).is_err());
    }
}
