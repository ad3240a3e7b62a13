//! Floating-point scalar abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar type used by the numeric side of the crate (`f32` or `f64`).
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Closed rectangle `[a1,b1] x [a2,b2]` in label space.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Rect<T> {
    pub min: [T; 2],
    pub max: [T; 2],
}

impl<T: Scalar> Rect<T> {
    pub fn new(min: [T; 2], max: [T; 2]) -> Self {
        Rect { min, max }
    }

    pub fn contains(&self, p: [T; 2]) -> bool {
        (0..2).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// True when `p` lies inside the rectangle with at least `margin` to every edge.
    pub fn contains_with_margin(&self, p: [T; 2], margin: T) -> bool {
        (0..2).all(|i| p[i] - margin >= self.min[i] && p[i] + margin <= self.max[i])
    }

    pub fn width(&self) -> T {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> T {
        self.max[1] - self.min[1]
    }

    pub fn diameter(&self) -> T {
        self.width().hypot(self.height())
    }
}
