//! d-dimensional points and basic vector arithmetic.

use smallvec::SmallVec;

use super::GeometryError;

/// Inline storage covers the common cases (d = 2, 3) without heap traffic.
type Coords = SmallVec<[f64; 3]>;

/// A position in d-dimensional Euclidean space, d >= 2.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct Point {
    coords: Coords,
}

impl Point {
    pub fn new(coords: &[f64]) -> Self {
        Point {
            coords: Coords::from_slice(coords),
        }
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Point::new(&[x, y])
    }

    pub fn zeros(dim: usize) -> Self {
        Point {
            coords: smallvec::smallvec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    pub fn y(&self) -> f64 {
        self.coords[1]
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    pub fn add(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, k: f64) -> Point {
        Point {
            coords: self.coords.iter().map(|a| a * k).collect(),
        }
    }

    /// self + k * other, the only compound op the simulation loop needs.
    pub fn axpy(&self, k: f64, other: &Point) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + k * b)
                .collect(),
        }
    }

    pub fn dot(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in the direction of `self`, or None for the zero vector.
    pub fn unit(&self) -> Option<Point> {
        let n = self.norm();
        if n == 0.0 {
            None
        } else {
            Some(self.scale(1.0 / n))
        }
    }

    /// Euclidean distance; callers must have matched dimensions.
    pub fn distance(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn lerp(&self, other: &Point, t: f64) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + t * (b - a))
                .collect(),
        }
    }

    /// Any unit vector orthogonal to `self` (which must be nonzero), chosen
    /// deterministically. For d = 2 this is the left-hand normal.
    pub fn orthonormal(&self) -> Option<Point> {
        let dim = self.dim();
        let n = self.norm();
        if n == 0.0 {
            return None;
        }
        if dim == 2 {
            return Some(Point::new(&[-self.coords[1] / n, self.coords[0] / n]));
        }
        // Gram-Schmidt against the axis least aligned with self.
        let axis = self.unit()?;
        let (k, _) = self
            .coords
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.abs().partial_cmp(&b.abs()).unwrap())
            .unwrap();
        let mut e = Point::zeros(dim);
        e.coords[k] = 1.0;
        let proj = e.dot(&axis);
        let ortho = e.axpy(-proj, &axis);
        ortho.unit()
    }
}

/// Euclidean distance with dimension checking.
pub fn euclidean_distance(a: &Point, b: &Point) -> Result<f64, GeometryError> {
    if a.dim() != b.dim() {
        return Err(GeometryError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(a.distance(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pythagorean_triple() {
        let d = euclidean_distance(&Point::xy(0.0, 0.0), &Point::xy(3.0, 4.0)).unwrap();
        assert_eq!(d, 5.0);
    }

    #[test]
    fn identical_points() {
        let d = euclidean_distance(&Point::xy(1.0, 2.0), &Point::xy(1.0, 2.0)).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn three_dimensional() {
        let a = Point::new(&[0.0, 0.0, 0.0]);
        let b = Point::new(&[1.0, 1.0, 1.0]);
        let d = euclidean_distance(&a, &b).unwrap();
        assert!((d - 3.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = Point::xy(0.0, 0.0);
        let b = Point::new(&[1.0, 2.0, 3.0]);
        assert!(euclidean_distance(&a, &b).is_err());
    }

    #[test]
    fn orthonormal_is_orthogonal_unit() {
        for v in [
            Point::xy(3.0, -4.0),
            Point::new(&[1.0, 2.0, -2.0]),
            Point::new(&[0.0, 0.0, 5.0]),
        ] {
            let n = v.orthonormal().unwrap();
            assert!(n.dot(&v).abs() < 1e-12);
            assert!((n.norm() - 1.0).abs() < 1e-12);
        }
    }
}
