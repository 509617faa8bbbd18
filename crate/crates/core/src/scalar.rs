use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::str::FromStr;

use num_traits::Num;

/// Numeric payload type carried by proper value nodes.
///
/// Builtin rule computations (add, subtract, compare) only need ring
/// operations and a total order, so exact types such as
/// `num_rational::Ratio<i64>` work as well as machine integers.
pub trait Scalar:
    Num + Clone + PartialOrd + Eq + Hash + Debug + Display + FromStr + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Num + Clone + PartialOrd + Eq + Hash + Debug + Display + FromStr + Send + Sync + 'static
{
}
