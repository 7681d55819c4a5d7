//! Log-space magnitudes.
//!
//! Probability-reduction factors and trial bounds routinely land at 10^±1000,
//! far outside `f64`. They are carried as natural logarithms and rendered in
//! scientific notation without ever materializing the linear value.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::scalar::Scalar;

/// A non-negative real stored as its natural logarithm.
///
/// `ln == -inf` encodes exactly zero; `ln == +inf` encodes an infinite
/// magnitude (a ratio against a zero-probability event).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue<T: Scalar> {
    pub ln: T,
}

impl<T: Scalar> LogValue<T> {
    pub fn from_ln(ln: T) -> Self {
        Self { ln }
    }

    /// Exact zero.
    pub fn zero() -> Self {
        Self { ln: T::neg_infinity() }
    }

    pub fn from_value(v: T) -> Self {
        Self { ln: v.ln() }
    }

    /// Linear value; saturates to `+inf` past the scalar range.
    pub fn value(self) -> T {
        self.ln.exp()
    }

    pub fn log10(self) -> T {
        self.ln / T::of(std::f64::consts::LN_10)
    }

    /// `"4.371e22"`-style rendering that survives any magnitude.
    pub fn to_sci(self) -> String {
        if self.ln == T::neg_infinity() {
            return "0".to_string();
        }
        if self.ln == T::infinity() {
            return "inf".to_string();
        }
        let l10 = self.log10().as_f64();
        let e = l10.floor();
        let m = 10f64.powf(l10 - e);
        format!("{:.3}e{}", m, e as i64)
    }
}

impl<T: Scalar> Serialize for LogValue<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let l10 = self.log10().as_f64();
        let finite = if l10.is_finite() { Some(l10) } else { None };
        let mut st = serializer.serialize_struct("LogValue", 2)?;
        st.serialize_field("log10", &finite)?;
        st.serialize_field("sci", &self.to_sci())?;
        st.end()
    }
}
