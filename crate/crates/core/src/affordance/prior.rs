use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::head::ToyAffordanceHead;
use super::params::GraspParams;
use super::AffordanceError;
use crate::simenv::Observation;

/// Precomputed priors keyed by observation id, one JSON object per line:
/// `{"id": "...", "params": {...}}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PriorTable {
    pub entries: BTreeMap<String, GraspParams>,
}

#[derive(Serialize, Deserialize)]
struct TableLine {
    id: String,
    params: GraspParams,
}

impl PriorTable {
    pub fn read<R: BufRead>(reader: R) -> Result<Self, AffordanceError> {
        let mut entries = BTreeMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| AffordanceError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: TableLine =
                serde_json::from_str(&line).map_err(|e| AffordanceError::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            if !parsed.params.is_finite() {
                return Err(AffordanceError::Parse {
                    line: i + 1,
                    message: "non-finite parameters".into(),
                });
            }
            entries.insert(parsed.id, parsed.params);
        }
        Ok(PriorTable { entries })
    }

    pub fn load(path: &Path) -> Result<Self, AffordanceError> {
        let file =
            std::fs::File::open(path).map_err(|e| AffordanceError::Io(path.to_path_buf(), e))?;
        Self::read(std::io::BufReader::new(file))
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (id, params) in &self.entries {
            let line = TableLine {
                id: id.clone(),
                params: *params,
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Where the prior grasp for an observation comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PriorSource {
    /// Hidden optimum plus a fixed bias; `None` takes the task's configured bias.
    Synthetic { bias: Option<GraspParams> },
    /// A trained head applied to the observation features.
    Head { head: ToyAffordanceHead },
    /// Lookup by observation id.
    Table { table: PriorTable },
}

impl PriorSource {
    pub fn task_bias() -> Self {
        PriorSource::Synthetic { bias: None }
    }

    pub fn predict(&self, obs: &Observation) -> Result<GraspParams, AffordanceError> {
        match self {
            PriorSource::Synthetic { bias } => {
                let inst = obs.instance();
                let b = bias.unwrap_or(inst.task().spec.prior_bias);
                Ok(inst.optimum().offset(&b.to_array()))
            }
            PriorSource::Head { head } => head.predict(&obs.features),
            PriorSource::Table { table } => table
                .entries
                .get(&obs.id)
                .copied()
                .ok_or_else(|| AffordanceError::MissingPrior(obs.id.clone())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::Split;
    use crate::simenv::{FeatureSynth, SimEnv, Task, FEATURE_DIM};

    fn obs() -> Observation {
        let env = SimEnv::new(
            Task::builtin("pick-cup").unwrap(),
            FeatureSynth::new(FEATURE_DIM, 0),
            9,
            Split::Train,
        );
        env.observation(0)
    }

    #[test]
    fn synthetic_adds_task_bias() {
        let o = obs();
        let p = PriorSource::task_bias().predict(&o).unwrap();
        let d = p.difference(o.instance().optimum());
        assert!((d[0] - 0.03).abs() < 1e-12);
        assert!((d[5] + 0.15).abs() < 1e-12);
        assert!(d
            .iter()
            .enumerate()
            .all(|(i, v)| i == 0 || i == 5 || *v == 0.0));
    }

    #[test]
    fn table_roundtrip_and_missing() {
        let o = obs();
        let mut table = PriorTable::default();
        table.entries.insert(o.id.clone(), *o.instance().optimum());
        let mut buf = Vec::new();
        table.write(&mut buf).unwrap();
        let back = PriorTable::read(buf.as_slice()).unwrap();
        assert_eq!(back, table);
        let src = PriorSource::Table { table: back };
        assert_eq!(src.predict(&o).unwrap(), *o.instance().optimum());
        let empty = PriorSource::Table {
            table: PriorTable::default(),
        };
        assert!(matches!(
            empty.predict(&o),
            Err(AffordanceError::MissingPrior(_))
        ));
    }

    #[test]
    fn table_parse_error_names_line() {
        let text = "\n{\"id\":\"a\",\"params\":{\"mu\":[0,0,0],\"theta_wrist\":[0,0,0],\"hand_pose\":[0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0]}}\n{oops\n";
        match PriorTable::read(text.as_bytes()) {
            Err(AffordanceError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn source_serde_tagged() {
        let s = serde_json::to_string(&PriorSource::task_bias()).unwrap();
        assert_eq!(s, r#"{"kind":"synthetic","bias":null}"#);
        let back: PriorSource = serde_json::from_str(r#"{"kind":"synthetic"}"#).unwrap();
        assert_eq!(back, PriorSource::task_bias());
    }
}
