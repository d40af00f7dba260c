//! JSON documents for grids, measures, kernels and cones.
//!
//! Numbers are written as JSON floats. Exact mode reads them through their shortest
//! decimal form, so `0.1` becomes `1/10`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cone::{ConeKind, ConeSpec};
use crate::error::{Error, Result};
use crate::measure::{Grid, Kernel, Measure};
use crate::scalar::{cast_vec, to_f64_vec, Scalar};

/// `{"points": [[..]], "weights": [..], "rows": [[..]]}`; weights and rows are optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureDoc {
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub simplex: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Vec<f64>>>,
}

impl MeasureDoc {
    pub fn from_grid<T: Scalar>(grid: &Grid<T>) -> Self {
        MeasureDoc {
            points: grid.points().iter().map(|p| to_f64_vec(p)).collect(),
            simplex: grid.is_simplex(),
            weights: None,
            rows: None,
        }
    }

    pub fn from_measure<T: Scalar>(mu: &Measure<T>) -> Self {
        MeasureDoc { weights: Some(to_f64_vec(mu.weights())), ..Self::from_grid(mu.grid()) }
    }

    pub fn from_kernel<T: Scalar>(k: &Kernel<T>) -> Self {
        MeasureDoc { rows: Some(k.rows().iter().map(|r| to_f64_vec(r)).collect()), ..Self::from_grid(k.grid()) }
    }

    pub fn grid<T: Scalar>(&self) -> Result<Arc<Grid<T>>> {
        let pts: Vec<Vec<T>> = self.points.iter().map(|p| cast_vec(p)).collect();
        let g = if self.simplex { Grid::new_simplex(pts)? } else { Grid::new(pts)? };
        Ok(Arc::new(g))
    }

    pub fn measure<T: Scalar>(&self, grid: Arc<Grid<T>>) -> Result<Measure<T>> {
        let w = self.weights.as_ref().ok_or_else(|| Error::Invalid("measure document has no weights".into()))?;
        Measure::new(grid, cast_vec(w))
    }

    pub fn kernel<T: Scalar>(&self, grid: Arc<Grid<T>>) -> Result<Kernel<T>> {
        let rows = self.rows.as_ref().ok_or_else(|| Error::Invalid("kernel document has no rows".into()))?;
        Kernel::new(grid, rows.iter().map(|r| cast_vec(r)).collect())
    }
}

/// `{"kind": "...", "generators": [[..]], "partition": [[..]], "negated": bool}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeDoc {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generators: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub partition: Vec<Vec<usize>>,
    #[serde(default)]
    pub negated: bool,
}

impl ConeDoc {
    pub fn named(kind: &str) -> Self {
        ConeDoc { kind: kind.into(), generators: Vec::new(), partition: Vec::new(), negated: false }
    }

    pub fn from_spec<T: Scalar>(c: &ConeSpec<T>) -> Self {
        let mut doc = Self::named(c.label().trim_start_matches('-'));
        doc.negated = c.negated;
        match &c.kind {
            ConeKind::PartitionConcave { partition } => doc.partition = partition.clone(),
            ConeKind::Custom { generators } => doc.generators = generators.iter().map(|g| to_f64_vec(g)).collect(),
            _ => {}
        }
        doc
    }

    pub fn spec<T: Scalar>(&self) -> Result<ConeSpec<T>> {
        let kind = match self.kind.as_str() {
            "concave" => ConeKind::Concave,
            "convex" => ConeKind::Convex,
            "nondecreasing" => ConeKind::Nondecreasing,
            "nonincreasing" => ConeKind::Nonincreasing,
            "increasing_concave" => ConeKind::IncreasingConcave,
            "partition_concave" => ConeKind::PartitionConcave { partition: self.partition.clone() },
            "custom" => ConeKind::Custom { generators: self.generators.iter().map(|g| cast_vec(g)).collect() },
            other => return Err(Error::Invalid(format!("unknown cone kind `{other}`"))),
        };
        Ok(ConeSpec { kind, negated: self.negated })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn measure_round_trip() {
        let g = Arc::new(Grid::<f64>::simplex(3, 2).unwrap());
        let mu = Measure::uniform(g.clone());
        let doc = MeasureDoc::from_measure(&mu);
        let text = serde_json::to_string(&doc).unwrap();
        let back: MeasureDoc = serde_json::from_str(&text).unwrap();
        let g2 = back.grid::<f64>().unwrap();
        assert!(g2.is_simplex() && g2.same_as(&g));
        assert!(back.measure(g2).unwrap().approx_eq(&mu, 1e-15));
        let k = Kernel::identity(g.clone());
        let kd = MeasureDoc::from_kernel(&k);
        assert_eq!(kd.kernel::<f64>(g).unwrap(), k);
    }

    #[test]
    fn decimals_are_exact() {
        let doc: MeasureDoc = serde_json::from_str(r#"{"points": [[0.0], [0.1], [0.3]], "weights": [0.2, 0.5, 0.3]}"#).unwrap();
        let g = doc.grid::<Rational>().unwrap();
        assert_eq!(g.point(1)[0], Rational::from_ratio(1, 10));
        assert!(doc.measure(g).is_ok());
    }

    #[test]
    fn cone_round_trip() {
        for c in [ConeSpec::<f64>::concave().negate(), ConeSpec::partition_concave(vec![vec![0, 1], vec![2]])] {
            let doc = ConeDoc::from_spec(&c);
            assert_eq!(doc.spec::<f64>().unwrap(), c);
        }
        assert!(ConeDoc::named("lehmann").spec::<f64>().is_err());
    }
}
