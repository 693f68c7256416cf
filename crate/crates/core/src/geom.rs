//! Model-space geometry: 2D points in millimeters, axis-aligned 3D route
//! directions and the fixed isometric mapping used by piping schemes.

use core::fmt;

/// cos 30°, i.e. √3/2 rounded to the nearest `f64`.
pub const COS30: f64 = 0.866_025_403_784_438_6;
/// sin 30°.
pub const SIN30: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn translate(self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    #[inline]
    pub fn add(self, other: Point2) -> Self {
        Self::new(self.x + other.x, self.y + other.y)
    }

    #[inline]
    pub fn scaled(self, factor: f64) -> Self {
        Self::new(self.x * factor, self.y * factor)
    }

    #[inline]
    pub fn midpoint(self, other: Point2) -> Self {
        Self::new((self.x + other.x) / 2.0, (self.y + other.y) / 2.0)
    }

    /// Lexicographic total order on `(x, y)`.
    pub fn total_cmp(&self, other: &Point2) -> core::cmp::Ordering {
        self.x.total_cmp(&other.x).then(self.y.total_cmp(&other.y))
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// `self + direction * length`
    pub fn step(self, direction: Direction3, length: f64) -> Self {
        let (ux, uy, uz) = direction.unit();
        Self::new(
            self.x + ux * length,
            self.y + uy * length,
            self.z + uz * length,
        )
    }
}

/// Axis-aligned direction of a pipe segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Direction3 {
    #[cfg_attr(feature = "serde", serde(rename = "+X"))]
    PosX,
    #[cfg_attr(feature = "serde", serde(rename = "-X"))]
    NegX,
    #[cfg_attr(feature = "serde", serde(rename = "+Y"))]
    PosY,
    #[cfg_attr(feature = "serde", serde(rename = "-Y"))]
    NegY,
    #[cfg_attr(feature = "serde", serde(rename = "+Z"))]
    PosZ,
    #[cfg_attr(feature = "serde", serde(rename = "-Z"))]
    NegZ,
}

impl Direction3 {
    pub const ALL: [Direction3; 6] = [
        Direction3::PosX,
        Direction3::NegX,
        Direction3::PosY,
        Direction3::NegY,
        Direction3::PosZ,
        Direction3::NegZ,
    ];

    pub fn unit(self) -> (f64, f64, f64) {
        match self {
            Direction3::PosX => (1.0, 0.0, 0.0),
            Direction3::NegX => (-1.0, 0.0, 0.0),
            Direction3::PosY => (0.0, 1.0, 0.0),
            Direction3::NegY => (0.0, -1.0, 0.0),
            Direction3::PosZ => (0.0, 0.0, 1.0),
            Direction3::NegZ => (0.0, 0.0, -1.0),
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Direction3::PosX => Direction3::NegX,
            Direction3::NegX => Direction3::PosX,
            Direction3::PosY => Direction3::NegY,
            Direction3::NegY => Direction3::PosY,
            Direction3::PosZ => Direction3::NegZ,
            Direction3::NegZ => Direction3::PosZ,
        }
    }

    /// Unit vector of this direction on the isometric sheet.
    pub fn projected_unit(self) -> Point2 {
        match self {
            Direction3::PosX => Point2::new(COS30, SIN30),
            Direction3::NegX => Point2::new(-COS30, -SIN30),
            Direction3::PosY => Point2::new(-COS30, SIN30),
            Direction3::NegY => Point2::new(COS30, -SIN30),
            Direction3::PosZ => Point2::new(0.0, 1.0),
            Direction3::NegZ => Point2::new(0.0, -1.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction3::PosX => "+X",
            Direction3::NegX => "-X",
            Direction3::PosY => "+Y",
            Direction3::NegY => "-Y",
            Direction3::PosZ => "+Z",
            Direction3::NegZ => "-Z",
        }
    }

    /// Accepts `+X`, `X`, `-X` and the Unicode minus sign.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        let (negative, axis) = if let Some(rest) = s.strip_prefix('-') {
            (true, rest)
        } else if let Some(rest) = s.strip_prefix('\u{2212}') {
            (true, rest)
        } else if let Some(rest) = s.strip_prefix('+') {
            (false, rest)
        } else {
            (false, s)
        };
        let dir = match (axis, negative) {
            ("X" | "x", false) => Direction3::PosX,
            ("X" | "x", true) => Direction3::NegX,
            ("Y" | "y", false) => Direction3::PosY,
            ("Y" | "y", true) => Direction3::NegY,
            ("Z" | "z", false) => Direction3::PosZ,
            ("Z" | "z", true) => Direction3::NegZ,
            _ => return None,
        };
        Some(dir)
    }

    pub(crate) fn tag(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }
}

impl fmt::Display for Direction3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("non-finite coordinate")]
pub struct NonFiniteError;

/// Isometric projection onto the sheet: `u = (x − y)·cos30°`,
/// `v = (x + y)·sin30° + z`.
pub fn project_iso(x: f64, y: f64, z: f64) -> Result<Point2, NonFiniteError> {
    if !(x.is_finite() && y.is_finite() && z.is_finite()) {
        return Err(NonFiniteError);
    }
    Ok(project_iso_unchecked(Point3::new(x, y, z)))
}

#[inline]
pub(crate) fn project_iso_unchecked(p: Point3) -> Point2 {
    Point2::new((p.x - p.y) * COS30, (p.x + p.y) * SIN30 + p.z)
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bounds {
    pub min: Point2,
    pub max: Point2,
}

impl Bounds {
    pub fn of_point(p: Point2) -> Self {
        Self { min: p, max: p }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn include(&mut self, p: Point2) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn union(mut self, other: Bounds) -> Self {
        self.include(other.min);
        self.include(other.max);
        self
    }

    /// Folds optional boxes; `None` stands for the empty box.
    pub fn merge(acc: Option<Bounds>, next: Option<Bounds>) -> Option<Bounds> {
        match (acc, next) {
            (Some(a), Some(b)) => Some(a.union(b)),
            (a, None) => a,
            (None, b) => b,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_examples() {
        assert_eq!(project_iso(0.0, 0.0, 0.0).unwrap(), Point2::new(0.0, 0.0));
        assert_eq!(project_iso(0.0, 0.0, 500.0).unwrap(), Point2::new(0.0, 500.0));
        assert_eq!(
            project_iso(1000.0, 1000.0, 0.0).unwrap(),
            Point2::new(0.0, 1000.0)
        );
        let p = project_iso(1000.0, 0.0, 0.0).unwrap();
        assert!((p.x - 866.025_403_784_438_6).abs() < 1e-9);
        assert_eq!(p.y, 500.0);
    }

    #[test]
    fn projection_rejects_non_finite() {
        assert_eq!(project_iso(f64::NAN, 0.0, 0.0), Err(NonFiniteError));
        assert_eq!(project_iso(0.0, f64::INFINITY, 0.0), Err(NonFiniteError));
    }

    #[test]
    fn projected_units_match_projection() {
        for dir in Direction3::ALL {
            let (x, y, z) = dir.unit();
            let p = project_iso(x, y, z).unwrap();
            let u = dir.projected_unit();
            assert!((p.x - u.x).abs() < 1e-15 && (p.y - u.y).abs() < 1e-15, "{dir}");
        }
    }

    #[test]
    fn direction_parse() {
        assert_eq!(Direction3::parse("+X"), Some(Direction3::PosX));
        assert_eq!(Direction3::parse("-z"), Some(Direction3::NegZ));
        assert_eq!(Direction3::parse("\u{2212}Y"), Some(Direction3::NegY));
        assert_eq!(Direction3::parse("W"), None);
        for dir in Direction3::ALL {
            assert_eq!(Direction3::parse(dir.as_str()), Some(dir));
            assert_eq!(Direction3::from_tag(dir.tag()), Some(dir));
        }
    }
}
