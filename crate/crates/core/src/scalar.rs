//! Numeric traits shared by the model and the solver layers.
//!
//! Instance data, plan evaluation and the brute-force oracle are written
//! against [`Scalar`], so they run unchanged on `f64` and on exact
//! rationals. The simplex and branch-and-bound engines need a floating
//! point type and are written against [`LpFloat`].

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// Ordered field element used for instance data and plan evaluation.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    fn from_i64_exact(v: i64) -> Self {
        Self::from_i64(v).expect("integer representable in scalar type")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl<T> Scalar for T where
    T: Clone
        + Debug
        + PartialOrd
        + Num
        + Signed
        + FromPrimitive
        + ToPrimitive
        + Send
        + Sync
        + 'static
{
}

/// Floating point type the LP and MILP engines compute in.
pub trait LpFloat:
    Float + FromPrimitive + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }
}

impl LpFloat for f32 {}
impl LpFloat for f64 {}

/// Converts between scalar types through `f64`. Infinite values survive.
pub fn cast<A: ToPrimitive, B: FromPrimitive>(v: &A) -> B {
    let f = v.to_f64().unwrap_or(f64::NAN);
    B::from_f64(f).expect("value representable in target type")
}
