use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FTuple, MilpInstance, Mode, ObjectiveSense, SparseMatrix};
use crate::error::{Error, Result};

/// On-disk JSON form of an instance, optionally bundling its solution tuple.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub name: String,
    pub mode: Mode,
    pub n_vars: usize,
    pub n_cons: usize,
    pub a: Vec<(usize, usize, f64)>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    #[serde(default, skip_serializing_if = "is_max")]
    pub objective_sense: ObjectiveSense,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<LabelsFile>,
}

fn is_max(s: &ObjectiveSense) -> bool {
    *s == ObjectiveSense::Max
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelsFile {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y2: Option<Vec<f64>>,
    pub s: Vec<f64>,
    pub r: Vec<f64>,
}

impl InstanceFile {
    pub fn from_instance(inst: &MilpInstance, labels: Option<&FTuple>) -> Self {
        InstanceFile {
            name: inst.name.clone(),
            mode: inst.mode,
            n_vars: inst.n_vars(),
            n_cons: inst.n_cons(),
            a: inst.a.triplets(),
            b: inst.b.clone(),
            c: inst.c.clone(),
            objective_sense: inst.original_sense,
            labels: labels.map(|t| LabelsFile {
                x: t.x.clone(),
                y: t.y.clone(),
                y2: t.y2.clone(),
                s: t.s.clone(),
                r: t.r.clone(),
            }),
        }
    }

    /// Validates and converts into an instance plus its optional tuple.
    pub fn into_instance(self) -> Result<(MilpInstance, Option<FTuple>)> {
        let a = SparseMatrix::from_triplets(self.n_cons, self.n_vars, &self.a)?;
        let mut inst = MilpInstance::new(self.name, self.mode, a, self.b, self.c)?;
        inst.original_sense = self.objective_sense;
        let tuple = match self.labels {
            None => None,
            Some(l) => {
                let t = FTuple {
                    mode: inst.mode,
                    a: inst.a.clone(),
                    x: l.x,
                    y: l.y,
                    y2: l.y2,
                    s: l.s,
                    r: l.r,
                };
                t.validate()?;
                let (b, c) = super::derive_bc(&t)?;
                let consistent = |derived: &[f64], stored: &[f64]| {
                    derived
                        .iter()
                        .zip(stored)
                        .all(|(d, s)| (d - s).abs() <= 1e-9 * s.abs().max(1.0))
                };
                if !consistent(&b, &inst.b) || !consistent(&c, &inst.c) {
                    return Err(Error::Validation(format!(
                        "labels of '{}' do not reproduce (b, c)",
                        inst.name
                    )));
                }
                Some(t)
            }
        };
        Ok((inst, tuple))
    }
}

pub fn instance_to_json(inst: &MilpInstance, labels: Option<&FTuple>) -> String {
    serde_json::to_string(&InstanceFile::from_instance(inst, labels))
        .expect("instance serialization cannot fail")
}

/// Parses one instance; `origin` is only used for diagnostics.
pub fn instance_from_json(text: &str, origin: &Path) -> Result<(MilpInstance, Option<FTuple>)> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    file.into_instance()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn malformed_json_reports_position() {
        let err = instance_from_json("{\"name\": \"x\",\n  \"mode\": }", Path::new("bad.json")).unwrap_err();
        match err {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn binary_label_above_cap_is_rejected() {
        let text = r#"{"name":"t","mode":"Binary","n_vars":1,"n_cons":1,"a":[[0,0,1.0]],
            "b":[3.0],"c":[1.0],"labels":{"x":[2.0],"y":[1.0],"y2":[0.0],"s":[0.0],"r":[1.0]}}"#;
        let err = instance_from_json(text, Path::new("t.json")).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err:?}");
    }

    #[test]
    fn labels_must_match_rhs() {
        let text = r#"{"name":"t","mode":"GeneralInteger","n_vars":1,"n_cons":1,"a":[[0,0,1.0]],
            "b":[3.0],"c":[1.0],"labels":{"x":[1.0],"y":[1.0],"s":[0.0],"r":[1.0]}}"#;
        assert!(instance_from_json(text, Path::new("t.json")).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"name":"t","mode":"Binary","n_vars":1,"n_cons":1,"a":[[0,0,1.0]],"b":[1.0],"c":[1.0],"extra":1}"#;
        assert!(matches!(
            instance_from_json(text, Path::new("t.json")),
            Err(Error::Parse { .. })
        ));
    }
}
