//! Exact ray intersection against corridor shells, boxes, and cylinders.

use nalgebra::{Point3, Vector3};

use super::CorridorScene;
use crate::frame::SemClass;

const T_EPS: f64 = 1e-9;

/// Nearest surface hit along a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// Ray parameter; equals pinhole depth for camera rays (unit z in the
    /// optical frame) and Euclidean range for unit-length LiDAR directions.
    pub t: f64,
    pub class: SemClass,
    pub point: Point3<f64>,
}

/// Camera rays treat every surface as opaque; LiDAR rays pass through glass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RayMode {
    Camera,
    Lidar,
}

struct Candidate {
    t: f64,
    class: SemClass,
}

fn consider(best: &mut Option<Candidate>, t: f64, class: SemClass, mode: RayMode, max_range: f64) {
    if t <= T_EPS || t > max_range {
        return;
    }
    if mode == RayMode::Lidar && class == SemClass::Glass {
        return;
    }
    if best.as_ref().map_or(true, |b| t < b.t) {
        *best = Some(Candidate { t, class });
    }
}

/// t of the intersection with the axis-aligned plane `axis = value`, or None
/// when the ray is parallel.
fn plane_t(origin: &Point3<f64>, dir: &Vector3<f64>, axis: usize, value: f64) -> Option<f64> {
    if dir[axis] == 0.0 {
        None
    } else {
        Some((value - origin[axis]) / dir[axis])
    }
}

fn box_entry_t(origin: &Point3<f64>, dir: &Vector3<f64>, min: &[f64; 3], max: &[f64; 3]) -> Option<f64> {
    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    for a in 0..3 {
        if dir[a] == 0.0 {
            if origin[a] < min[a] || origin[a] > max[a] {
                return None;
            }
        } else {
            let t0 = (min[a] - origin[a]) / dir[a];
            let t1 = (max[a] - origin[a]) / dir[a];
            let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            t_enter = t_enter.max(lo);
            t_exit = t_exit.min(hi);
        }
    }
    if t_enter <= t_exit && t_enter > T_EPS {
        Some(t_enter)
    } else {
        None
    }
}

fn cylinder_t(
    origin: &Point3<f64>,
    dir: &Vector3<f64>,
    center: [f64; 2],
    radius: f64,
    z_min: f64,
    z_max: f64,
) -> Option<f64> {
    let ox = origin.x - center[0];
    let oy = origin.y - center[1];
    let a = dir.x * dir.x + dir.y * dir.y;
    let mut best: Option<f64> = None;
    if a > 0.0 {
        let b = 2.0 * (ox * dir.x + oy * dir.y);
        let c = ox * ox + oy * oy - radius * radius;
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            for t in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
                if t > T_EPS {
                    let z = origin.z + t * dir.z;
                    if z >= z_min && z <= z_max && best.map_or(true, |bt| t < bt) {
                        best = Some(t);
                    }
                }
            }
        }
    }
    // end caps
    for zc in [z_min, z_max] {
        if let Some(t) = plane_t(origin, dir, 2, zc) {
            if t > T_EPS {
                let x = ox + t * dir.x;
                let y = oy + t * dir.y;
                if x * x + y * y <= radius * radius && best.map_or(true, |bt| t < bt) {
                    best = Some(t);
                }
            }
        }
    }
    best
}

/// Cast one ray into the scene at time `time` (pedestrians move). Returns the
/// nearest hit with t in (0, max_range].
pub fn raycast(
    scene: &CorridorScene,
    time: f64,
    origin: &Point3<f64>,
    dir: &Vector3<f64>,
    max_range: f64,
    mode: RayMode,
) -> Option<Hit> {
    let mut best: Option<Candidate> = None;

    if scene.has_shell() {
        let half = scene.width / 2.0;
        // floor
        if let Some(t) = plane_t(origin, dir, 2, 0.0) {
            let x = origin.x + t * dir.x;
            let y = origin.y + t * dir.y;
            if x >= 0.0 && x <= scene.length && y.abs() <= half {
                consider(&mut best, t, SemClass::Floor, mode, max_range);
            }
        }
        // side walls (left = +y) and end walls
        let walls = [
            (1, half, scene.wall_classes.left),
            (1, -half, scene.wall_classes.right),
            (0, 0.0, scene.wall_classes.near),
            (0, scene.length, scene.wall_classes.far),
        ];
        for (axis, value, class) in walls {
            if let Some(t) = plane_t(origin, dir, axis, value) {
                let p = origin + dir * t;
                let along_ok = if axis == 1 {
                    p.x >= 0.0 && p.x <= scene.length
                } else {
                    p.y.abs() <= half
                };
                if along_ok && p.z >= 0.0 && p.z <= scene.wall_height {
                    consider(&mut best, t, class, mode, max_range);
                }
            }
        }
    }

    for b in &scene.obstacles {
        if let Some(t) = box_entry_t(origin, dir, &b.min, &b.max) {
            consider(&mut best, t, b.class, mode, max_range);
        }
    }

    for ped in &scene.pedestrians {
        let c = ped.center_at(time);
        if let Some(t) = cylinder_t(origin, dir, c, ped.radius, ped.z_min, ped.z_max) {
            consider(&mut best, t, SemClass::Person, mode, max_range);
        }
    }

    best.map(|c| Hit {
        t: c.t,
        class: c.class,
        point: origin + dir * c.t,
    })
}
