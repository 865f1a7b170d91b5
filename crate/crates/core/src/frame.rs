//! Sensor frame types shared across the pipeline.

/// Semantic classes assigned to scene surfaces and costmap cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SemClass {
    Floor,
    Wall,
    Person,
    Furniture,
    Glass,
    Other,
}

impl SemClass {
    pub const ALL: [SemClass; 6] = [
        SemClass::Floor,
        SemClass::Wall,
        SemClass::Person,
        SemClass::Furniture,
        SemClass::Glass,
        SemClass::Other,
    ];

    /// Stable numeric id used in file formats and loss labels.
    pub fn id(self) -> u8 {
        match self {
            SemClass::Floor => 0,
            SemClass::Wall => 1,
            SemClass::Person => 2,
            SemClass::Furniture => 3,
            SemClass::Glass => 4,
            SemClass::Other => 5,
        }
    }

    pub fn from_id(id: u8) -> Option<SemClass> {
        SemClass::ALL.iter().copied().find(|c| c.id() == id)
    }

    /// Tie-break priority for per-cell class assignment:
    /// person > glass > furniture > wall > floor > other.
    pub fn priority(self) -> u8 {
        match self {
            SemClass::Person => 5,
            SemClass::Glass => 4,
            SemClass::Furniture => 3,
            SemClass::Wall => 2,
            SemClass::Floor => 1,
            SemClass::Other => 0,
        }
    }
}

/// Dense per-pixel depth with confidence. Depth 0 encodes "no return" and is
/// definitionally invalid regardless of confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame {
    pub width: usize,
    pub height: usize,
    /// Row-major depth in meters; 0 means no return.
    pub depth: Vec<f64>,
    /// Row-major confidence in [0, 1].
    pub confidence: Vec<f64>,
    /// Capture time in seconds.
    pub timestamp: f64,
}

impl DepthFrame {
    pub fn filled(width: usize, height: usize, depth: f64, confidence: f64, timestamp: f64) -> Self {
        DepthFrame {
            width,
            height,
            depth: vec![depth; width * height],
            confidence: vec![confidence; width * height],
            timestamp,
        }
    }

    pub fn zeroed(width: usize, height: usize, timestamp: f64) -> Self {
        Self::filled(width, height, 0.0, 1.0, timestamp)
    }

    #[inline]
    pub fn idx(&self, u: usize, v: usize) -> usize {
        v * self.width + u
    }

    #[inline]
    pub fn depth_at(&self, u: usize, v: usize) -> f64 {
        self.depth[v * self.width + u]
    }

    #[inline]
    pub fn confidence_at(&self, u: usize, v: usize) -> f64 {
        self.confidence[v * self.width + u]
    }

    /// A pixel is valid when it has a finite, positive return.
    #[inline]
    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        let d = self.depth_at(u, v);
        d.is_finite() && d > 0.0
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fraction of pixels with no valid return.
    pub fn invalid_fraction(&self) -> f64 {
        if self.depth.is_empty() {
            return 0.0;
        }
        let invalid = self
            .depth
            .iter()
            .filter(|d| !(d.is_finite() && **d > 0.0))
            .count();
        invalid as f64 / self.depth.len() as f64
    }
}

/// Per-pixel semantic class map aligned with a [`DepthFrame`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<SemClass>,
}

impl LabelMap {
    pub fn filled(width: usize, height: usize, class: SemClass) -> Self {
        LabelMap {
            width,
            height,
            labels: vec![class; width * height],
        }
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> SemClass {
        self.labels[v * self.width + u]
    }
}

/// One 2D LiDAR revolution. Rays with no return carry NaN.
#[derive(Debug, Clone)]
pub struct LidarScan {
    /// Angle of the first ray, radians, relative to the robot heading.
    pub angle_min: f64,
    /// Angular step between consecutive rays, radians.
    pub angle_increment: f64,
    /// Ranges in meters; NaN (or > range_max) encodes no return.
    pub ranges: Vec<f64>,
    /// Height of the scan plane above the base frame origin, meters.
    pub scan_height: f64,
    /// Maximum measurable range, meters.
    pub range_max: f64,
}

impl LidarScan {
    pub fn angle_of(&self, i: usize) -> f64 {
        self.angle_min + self.angle_increment * i as f64
    }

    /// Iterator over rays with a finite in-range return: (angle, range).
    pub fn returns(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ranges.iter().enumerate().filter_map(|(i, r)| {
            if r.is_finite() && *r <= self.range_max {
                Some((self.angle_of(i), *r))
            } else {
                None
            }
        })
    }
}

/// Planar robot pose (world frame): position plus yaw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Pose2 { x, y, yaw }
    }
}
