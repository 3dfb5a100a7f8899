use crate::scalar::Scalar;

/// A point on the projected planar grid, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, other: &Point<T>) -> T {
        distance(*self, *other)
    }

    pub(crate) fn as_array(&self) -> [T; 2] {
        [self.x, self.y]
    }
}

/// Planar Euclidean distance.
///
/// Computed as `sqrt(dx² + dy²)`. The squared term is the same quantity the
/// spatial index orders by, which keeps index results and this function in
/// agreement bit for bit.
pub fn distance<T: Scalar>(a: Point<T>, b: Point<T>) -> T {
    distance_squared(a, b).sqrt()
}

pub(crate) fn distance_squared<T: Scalar>(a: Point<T>, b: Point<T>) -> T {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    dx * dx + dy * dy
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox<T> {
    pub min: Point<T>,
    pub max: Point<T>,
}

impl<T: Scalar> BoundingBox<T> {
    pub fn of_points(points: &[Point<T>]) -> Option<Self> {
        let first = *points.first()?;
        let mut bbox = Self {
            min: first,
            max: first,
        };
        for p in &points[1..] {
            bbox.expand(*p);
        }
        Some(bbox)
    }

    pub fn expand(&mut self, p: Point<T>) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut out = *self;
        out.expand(other.min);
        out.expand(other.max);
        out
    }

    pub fn contains(&self, p: Point<T>) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> T {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> T {
        self.max.y - self.min.y
    }
}
