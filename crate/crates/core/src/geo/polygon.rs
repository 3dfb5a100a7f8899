use super::point::{BoundingBox, Point};
use crate::scalar::Scalar;

/// A closed ring polygon with optional holes. Rings are stored closed
/// (first vertex repeated at the end).
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon<T> {
    exterior: Vec<Point<T>>,
    interiors: Vec<Vec<Point<T>>>,
    bbox: BoundingBox<T>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RingProblem {
    TooFewVertices(usize),
    NonFinite,
    SelfIntersecting,
    ZeroArea,
}

impl std::fmt::Display for RingProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RingProblem::TooFewVertices(n) => {
                write!(f, "ring has {n} distinct vertices, at least 3 required")
            }
            RingProblem::NonFinite => write!(f, "ring contains a non-finite coordinate"),
            RingProblem::SelfIntersecting => write!(f, "ring is self-intersecting"),
            RingProblem::ZeroArea => write!(f, "ring encloses zero area"),
        }
    }
}

impl<T: Scalar> Polygon<T> {
    /// Builds a polygon, closing open rings and rejecting degenerate or
    /// self-intersecting ones.
    pub fn new(exterior: Vec<Point<T>>, interiors: Vec<Vec<Point<T>>>) -> Result<Self, RingProblem> {
        let exterior = close_ring(exterior)?;
        let interiors = interiors
            .into_iter()
            .map(close_ring)
            .collect::<Result<Vec<_>, _>>()?;
        let bbox = BoundingBox::of_points(&exterior).expect("closed ring is non-empty");
        Ok(Self {
            exterior,
            interiors,
            bbox,
        })
    }

    /// Axis-aligned rectangle, mostly useful for tests and synthetic maps.
    pub fn rectangle(min: Point<T>, max: Point<T>) -> Result<Self, RingProblem> {
        Self::new(
            vec![
                min,
                Point::new(max.x, min.y),
                max,
                Point::new(min.x, max.y),
            ],
            Vec::new(),
        )
    }

    pub fn exterior(&self) -> &[Point<T>] {
        &self.exterior
    }

    pub fn interiors(&self) -> &[Vec<Point<T>>] {
        &self.interiors
    }

    pub fn bbox(&self) -> BoundingBox<T> {
        self.bbox
    }

    /// Enclosed area, holes subtracted.
    pub fn area(&self) -> T {
        let holes = self
            .interiors
            .iter()
            .fold(T::zero(), |acc, ring| acc + signed_area(ring).abs());
        signed_area(&self.exterior).abs() - holes
    }

    /// Point-in-polygon by ray casting. Points on any ring count as inside.
    pub fn contains(&self, p: Point<T>) -> bool {
        if !self.bbox.contains(p) {
            return false;
        }
        if on_ring(&self.exterior, p) {
            return true;
        }
        if !ray_cast(&self.exterior, p) {
            return false;
        }
        for hole in &self.interiors {
            if on_ring(hole, p) {
                return true;
            }
            if ray_cast(hole, p) {
                return false;
            }
        }
        true
    }
}

fn close_ring<T: Scalar>(mut ring: Vec<Point<T>>) -> Result<Vec<Point<T>>, RingProblem> {
    if ring.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(RingProblem::NonFinite);
    }
    ring.dedup();
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    if ring.len() < 3 {
        return Err(RingProblem::TooFewVertices(ring.len()));
    }
    ring.push(ring[0]);
    if self_intersects(&ring) {
        return Err(RingProblem::SelfIntersecting);
    }
    if signed_area(&ring) == T::zero() {
        return Err(RingProblem::ZeroArea);
    }
    Ok(ring)
}

fn signed_area<T: Scalar>(ring: &[Point<T>]) -> T {
    let twice = ring
        .windows(2)
        .fold(T::zero(), |acc, w| acc + (w[0].x * w[1].y - w[1].x * w[0].y));
    twice / T::of(2.0)
}

fn cross<T: Scalar>(o: Point<T>, a: Point<T>, b: Point<T>) -> T {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn on_segment<T: Scalar>(a: Point<T>, b: Point<T>, p: Point<T>) -> bool {
    cross(a, b, p) == T::zero()
        && p.x >= a.x.min(b.x)
        && p.x <= a.x.max(b.x)
        && p.y >= a.y.min(b.y)
        && p.y <= a.y.max(b.y)
}

fn on_ring<T: Scalar>(ring: &[Point<T>], p: Point<T>) -> bool {
    ring.windows(2).any(|w| on_segment(w[0], w[1], p))
}

fn ray_cast<T: Scalar>(ring: &[Point<T>], p: Point<T>) -> bool {
    let mut inside = false;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

fn segments_intersect<T: Scalar>(p1: Point<T>, p2: Point<T>, q1: Point<T>, q2: Point<T>) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    let zero = T::zero();
    if ((d1 > zero && d2 < zero) || (d1 < zero && d2 > zero))
        && ((d3 > zero && d4 < zero) || (d3 < zero && d4 > zero))
    {
        return true;
    }
    (d1 == zero && on_segment(q1, q2, p1))
        || (d2 == zero && on_segment(q1, q2, p2))
        || (d3 == zero && on_segment(p1, p2, q1))
        || (d4 == zero && on_segment(p1, p2, q2))
}

/// Sweep over segments sorted by min-x; non-adjacent segments that touch
/// or cross make the ring invalid.
fn self_intersects<T: Scalar>(ring: &[Point<T>]) -> bool {
    let n = ring.len() - 1;
    if n < 4 {
        return false;
    }
    let mut order: Vec<usize> = (0..n).collect();
    let min_x = |i: usize| ring[i].x.min(ring[i + 1].x);
    let max_x = |i: usize| ring[i].x.max(ring[i + 1].x);
    order.sort_by(|&a, &b| min_x(a).partial_cmp(&min_x(b)).expect("finite"));
    for (pos, &i) in order.iter().enumerate() {
        let reach = max_x(i);
        for &j in &order[pos + 1..] {
            if min_x(j) > reach {
                break;
            }
            let adjacent = i.abs_diff(j) == 1 || i.abs_diff(j) == n - 1;
            if adjacent {
                continue;
            }
            if segments_intersect(ring[i], ring[i + 1], ring[j], ring[j + 1]) {
                return true;
            }
        }
    }
    false
}
