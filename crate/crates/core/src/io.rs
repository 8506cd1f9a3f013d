//! JSON curve files.
//!
//! ```json
//! {"group": "SE3", "closed": true, "samples": [[1,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1], ...]}
//! ```
//!
//! `group` is `"SE3"`, `"SO3"` or `"T"` (with `"m"`). Each sample is either
//! a flat row-major list or a list of rows.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curve::{build_curve, DiscretizedCurve};
use crate::error::{Error, Result};
use crate::group::{Group, GroupElement, GroupKind};
use crate::matrix::SquareMatrix;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixEntries {
    Flat(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveFile {
    pub group: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub closed: bool,
    pub samples: Vec<MatrixEntries>,
}

/// Parses a group name as used in curve and config files.
pub fn parse_group(name: &str, m: Option<usize>) -> Result<Group> {
    match name {
        "SE3" => Ok(Group::se3()),
        "SO3" => Ok(Group::so3()),
        "T" => match m {
            Some(m) if (1..crate::matrix::MAX_ORDER).contains(&m) => Ok(Group::translation(m)),
            Some(m) => Err(Error::InvalidConfig(format!("unsupported translation dimension {m}"))),
            None => Err(Error::InvalidConfig("group \"T\" needs \"m\"".into())),
        },
        other => Err(Error::InvalidConfig(format!("unknown group {other:?}"))),
    }
}

pub fn group_name(kind: GroupKind) -> (&'static str, Option<usize>) {
    match kind {
        GroupKind::SE3 => ("SE3", None),
        GroupKind::SO3 => ("SO3", None),
        GroupKind::Translation(m) => ("T", Some(m)),
    }
}

impl CurveFile {
    pub fn from_curve(curve: &DiscretizedCurve) -> Self {
        let (group, m) = group_name(curve.group().kind());
        CurveFile {
            group: group.into(),
            m,
            closed: curve.is_closed(),
            samples: curve.samples().iter().map(|h| MatrixEntries::Flat(h.matrix().as_slice().to_vec())).collect(),
        }
    }

    pub fn into_curve(self) -> Result<DiscretizedCurve> {
        let g = parse_group(&self.group, self.m)?;
        let n = g.order();
        let samples = self
            .samples
            .into_iter()
            .map(|s| {
                let flat = match s {
                    MatrixEntries::Flat(v) => v,
                    MatrixEntries::Rows(rows) => {
                        if rows.iter().any(|r| r.len() != n) {
                            return Err(Error::DimensionMismatch { expected: n, got: rows.iter().map(Vec::len).max().unwrap_or(0) });
                        }
                        rows.concat()
                    }
                };
                if flat.len() != n * n {
                    return Err(Error::DimensionMismatch { expected: n * n, got: flat.len() });
                }
                Ok(GroupElement::new_unchecked(SquareMatrix::from_row_major(n, &flat)?))
            })
            .collect::<Result<Vec<_>>>()?;
        build_curve(g, samples, self.closed)
    }
}

pub fn load_curve(path: &Path) -> Result<DiscretizedCurve> {
    let text = std::fs::read_to_string(path)?;
    let file: CurveFile = serde_json::from_str(&text)?;
    file.into_curve()
}

pub fn save_curve(curve: &DiscretizedCurve, path: &Path) -> Result<()> {
    let text = serde_json::to_string(&CurveFile::from_curve(curve))?;
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;

    #[test]
    fn round_trip_is_lossless() {
        let c = generate::composed_se3(50).unwrap();
        let text = serde_json::to_string(&CurveFile::from_curve(&c)).unwrap();
        let back: CurveFile = serde_json::from_str(&text).unwrap();
        let c2 = back.into_curve().unwrap();
        for (a, b) in c.samples().iter().zip(c2.samples()) {
            assert_eq!(a.matrix(), b.matrix());
        }
        assert_eq!(c2.is_closed(), c.is_closed());
    }

    #[test]
    fn nested_rows_accepted() {
        let text = r#"{"group":"T","m":1,"closed":false,"samples":[[[1,0],[0,1]],[[1,1],[0,1]],[[1,2],[0,1]]]}"#;
        let c: CurveFile = serde_json::from_str(text).unwrap();
        let c = c.into_curve().unwrap();
        assert_eq!(c.len(), 3);
        assert!((c.tangent(1)[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_and_groups_rejected() {
        assert!(serde_json::from_str::<CurveFile>(r#"{"group":"SE3","closed":true,"samples":[],"x":1}"#).is_err());
        assert!(parse_group("SE2", None).is_err());
        assert!(parse_group("T", None).is_err());
    }

    #[test]
    fn wrong_sample_size_rejected() {
        let text = r#"{"group":"SO3","closed":false,"samples":[[1,0,0,1],[1,0,0,1],[1,0,0,1]]}"#;
        let c: CurveFile = serde_json::from_str(text).unwrap();
        assert!(matches!(c.into_curve(), Err(Error::DimensionMismatch { .. })));
    }
}
