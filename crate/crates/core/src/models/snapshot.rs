//! Plain-text model snapshots: a version line, then one section per GP,
//! each a JSON header line followed by the dictionary in columnar form.
//!
//! ```text
//! #gpc-snapshot v1
//! #section {"role":"policy","kernel":{..},"scaling":{..},...}
//! 0.12,-0.5,0.3
//! #section {"role":"human","output":0,...}
//! ...
//! ```

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{ActionBounds, HumanModel, PolicyModel};
use crate::error::{Error, Result};
use crate::gp::{Dictionary, Eviction, GpModel, KernelSpec, ScalingMatrix};

pub const SNAPSHOT_VERSION: &str = "v1";
const DELIM: char = ',';

#[derive(Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
enum SectionHeader {
    Policy {
        kernel: KernelSpec,
        scaling: ScalingMatrix,
        bounds: ActionBounds,
        len: usize,
    },
    Human {
        output: usize,
        outputs: usize,
        events: usize,
        kernel: KernelSpec,
        scaling: ScalingMatrix,
        capacity: Option<usize>,
        len: usize,
    },
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub policy: PolicyModel,
    pub human: HumanModel,
}

fn write_section<W: Write>(w: &mut W, header: &SectionHeader, dict: &Dictionary) -> Result<()> {
    let json = serde_json::to_string(header).map_err(|e| Error::Parse(e.to_string()))?;
    writeln!(w, "#section {json}")?;
    dict.write_columnar(&mut *w, DELIM)
}

pub fn write_snapshot<W: Write>(mut w: W, policy: &PolicyModel, human: &HumanModel) -> Result<()> {
    writeln!(w, "#gpc-snapshot {SNAPSHOT_VERSION}")?;
    let gp = policy.gp();
    write_section(
        &mut w,
        &SectionHeader::Policy {
            kernel: gp.kernel().clone(),
            scaling: gp.scaling().clone(),
            bounds: policy.bounds().clone(),
            len: gp.len(),
        },
        gp.dictionary(),
    )?;
    for (i, gp) in human.gps().iter().enumerate() {
        write_section(
            &mut w,
            &SectionHeader::Human {
                output: i,
                outputs: human.action_dim(),
                events: human.events(),
                kernel: gp.kernel().clone(),
                scaling: gp.scaling().clone(),
                capacity: gp.dictionary().capacity(),
                len: gp.len(),
            },
            gp.dictionary(),
        )?;
    }
    Ok(())
}

pub fn read_snapshot<R: BufRead>(r: R) -> Result<Snapshot> {
    let mut lines = r.lines();
    let first = lines.next().transpose()?.unwrap_or_default();
    let version = first.strip_prefix("#gpc-snapshot ").map(str::trim).unwrap_or("");
    if version != SNAPSHOT_VERSION {
        return Err(Error::Schema { expected: SNAPSHOT_VERSION.into(), found: first });
    }
    let mut sections: Vec<(SectionHeader, String)> = Vec::new();
    for line in lines {
        let line = line?;
        if let Some(json) = line.strip_prefix("#section ") {
            let header: SectionHeader = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
            sections.push((header, String::new()));
        } else if let Some((_, body)) = sections.last_mut() {
            body.push_str(&line);
            body.push('\n');
        } else if !line.trim().is_empty() {
            return Err(Error::Parse("data row before any section header".into()));
        }
    }

    let mut policy = None;
    let mut human_gps: Vec<Option<GpModel>> = Vec::new();
    let mut events = 0;
    for (header, body) in sections {
        match header {
            SectionHeader::Policy { kernel, scaling, bounds, len } => {
                let dict = Dictionary::read_columnar(body.as_bytes(), kernel.dim(), bounds.dim(), DELIM)?;
                check_len(len, &dict)?;
                let gp = GpModel::from_dictionary(kernel, scaling, dict)?;
                policy = Some(PolicyModel::from_parts(gp, bounds)?);
            }
            SectionHeader::Human { output, outputs, events: e, kernel, scaling, capacity, len } => {
                let dict = Dictionary::read_columnar(body.as_bytes(), kernel.dim(), 1, DELIM)?;
                check_len(len, &dict)?;
                let mut gp = GpModel::from_dictionary(kernel, scaling, dict)?;
                if let Some(c) = capacity {
                    gp = gp.with_capacity(c, Eviction::Fifo);
                }
                if human_gps.is_empty() {
                    human_gps.resize(outputs, None);
                }
                if output >= human_gps.len() {
                    return Err(Error::Parse(format!("human section {output} out of range")));
                }
                human_gps[output] = Some(gp);
                events = e;
            }
        }
    }
    let policy = policy.ok_or_else(|| Error::Parse("snapshot has no policy section".into()))?;
    let gps = human_gps
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .filter(|g| !g.is_empty())
        .ok_or_else(|| Error::Parse("snapshot is missing human-model sections".into()))?;
    Ok(Snapshot { policy, human: HumanModel::from_parts(gps, events) })
}

fn check_len(expected: usize, dict: &Dictionary) -> Result<()> {
    if dict.len() != expected {
        return Err(Error::Parse(format!("section declares {expected} rows, found {}", dict.len())));
    }
    Ok(())
}
