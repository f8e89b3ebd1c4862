//! Serde adapter writing a `DVector<f64>` as a flat JSON array.

use nalgebra::DVector;
use serde::{Serialize, Serializer};

pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
    v.as_slice().serialize(s)
}

/// A `DMatrix<f64>` as a JSON array of rows.
pub mod matrix {
    use nalgebra::DMatrix;
    use serde::{Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }
}

/// An optional `DVector<f64>` as a JSON array or `null`.
pub mod option {
    use nalgebra::DVector;
    use serde::{Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<DVector<f64>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|v| v.as_slice().to_vec()).serialize(s)
    }
}
