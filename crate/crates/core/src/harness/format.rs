//! JSON documents for instances, schedules and cost reports.
//!
//! Instance files look like
//!
//! ```text
//! {"format_version": 1, "n_sites": 5,
//!  "meta": {"ell": 2, "phases": 1, "beta": 1, "start_site": 0},
//!  "arrivals": [{"id": 0, "step": 0, "site": 0, "kind": "anchor", "anchor_id": 0, "member": 0}, ...]}
//! ```
//!
//! The arrivals array is the arrival order. Unknown fields are rejected.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    Action, CostReport, Instance, InstanceMeta, Request, RequestKind, Schedule, SeparationHeader,
};

use super::{format_rational, parse_rational};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format_version {0}")]
    Version(u32),
    #[error("arrival {id}: {reason}")]
    Arrival { id: usize, reason: String },
    #[error("bad rational {0:?}")]
    Rational(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    format_version: u32,
    n_sites: usize,
    meta: MetaDoc,
    arrivals: Vec<ArrivalDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ell: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phases: Option<u32>,
    beta: u32,
    start_site: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    separation: Option<SeparationDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeparationDoc {
    k: u64,
    n: u64,
    delta: String,
    epsilon: String,
}

#[derive(Serialize, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum KindTag {
    Regular,
    Anchor,
    Generic,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrivalDoc {
    id: usize,
    step: u64,
    site: usize,
    kind: KindTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rank: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    anchor_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    member: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    packet_id: Option<usize>,
}

fn to_doc(instance: &Instance) -> InstanceDoc {
    let meta = &instance.meta;
    InstanceDoc {
        format_version: FORMAT_VERSION,
        n_sites: instance.n_sites,
        meta: MetaDoc {
            ell: meta.ell,
            phases: meta.phases,
            beta: meta.beta,
            start_site: meta.start_site,
            separation: meta.separation.as_ref().map(|s| SeparationDoc {
                k: s.k,
                n: s.n,
                delta: format_rational(&s.delta),
                epsilon: format_rational(&s.epsilon),
            }),
        },
        arrivals: instance
            .arrivals
            .iter()
            .map(|r| {
                let (kind, rank, anchor_id, member) = match r.kind {
                    RequestKind::Regular { rank } => (KindTag::Regular, Some(rank), None, None),
                    RequestKind::AnchorMember { anchor_id, member } => {
                        (KindTag::Anchor, None, Some(anchor_id), Some(member))
                    }
                    RequestKind::Generic => (KindTag::Generic, None, None, None),
                };
                ArrivalDoc {
                    id: r.id,
                    step: r.step,
                    site: r.site,
                    kind,
                    rank,
                    anchor_id,
                    member,
                    packet_id: r.packet_id,
                }
            })
            .collect(),
    }
}

fn rational(text: &str) -> Result<BigRational, FormatError> {
    parse_rational(text).map_err(|_| FormatError::Rational(text.to_string()))
}

fn from_doc(doc: InstanceDoc) -> Result<Instance, FormatError> {
    if doc.format_version != FORMAT_VERSION {
        return Err(FormatError::Version(doc.format_version));
    }
    let separation = match doc.meta.separation {
        Some(s) => Some(SeparationHeader {
            k: s.k,
            n: s.n,
            delta: rational(&s.delta)?,
            epsilon: rational(&s.epsilon)?,
        }),
        None => None,
    };
    let arrivals = doc
        .arrivals
        .into_iter()
        .map(|a| {
            let bad = |reason: &str| FormatError::Arrival {
                id: a.id,
                reason: reason.to_string(),
            };
            let kind = match a.kind {
                KindTag::Regular => {
                    if a.anchor_id.is_some() || a.member.is_some() {
                        return Err(bad("regular request with anchor fields"));
                    }
                    RequestKind::Regular {
                        rank: a.rank.ok_or_else(|| bad("regular request without rank"))?,
                    }
                }
                KindTag::Anchor => {
                    if a.rank.is_some() {
                        return Err(bad("anchor member with a rank"));
                    }
                    RequestKind::AnchorMember {
                        anchor_id: a.anchor_id.ok_or_else(|| bad("anchor without anchor_id"))?,
                        member: a.member.ok_or_else(|| bad("anchor without member"))?,
                    }
                }
                KindTag::Generic => {
                    if a.rank.is_some() || a.anchor_id.is_some() || a.member.is_some() {
                        return Err(bad("generic request with kind-specific fields"));
                    }
                    RequestKind::Generic
                }
            };
            Ok(Request {
                id: a.id,
                site: a.site,
                step: a.step,
                kind,
                packet_id: a.packet_id,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Instance {
        n_sites: doc.n_sites,
        arrivals,
        meta: InstanceMeta {
            ell: doc.meta.ell,
            phases: doc.meta.phases,
            beta: doc.meta.beta,
            start_site: doc.meta.start_site,
            separation,
        },
    })
}

/// Serializes an instance. The bytes depend only on the instance.
pub fn instance_to_json(instance: &Instance) -> String {
    let mut text = serde_json::to_string_pretty(&to_doc(instance)).expect("instance serializes");
    text.push('\n');
    text
}

pub fn instance_from_json(text: &str) -> Result<Instance, FormatError> {
    from_doc(serde_json::from_str(text)?)
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ActionDoc {
    Admit,
    Serve(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleDoc {
    format_version: u32,
    buffer_capacity: usize,
    actions: Vec<ActionDoc>,
}

pub fn schedule_to_json(schedule: &Schedule) -> String {
    let doc = ScheduleDoc {
        format_version: FORMAT_VERSION,
        buffer_capacity: schedule.buffer_capacity,
        actions: schedule
            .actions
            .iter()
            .map(|a| match *a {
                Action::Admit => ActionDoc::Admit,
                Action::Serve(id) => ActionDoc::Serve(id),
            })
            .collect(),
    };
    let mut text = serde_json::to_string(&doc).expect("schedule serializes");
    text.push('\n');
    text
}

pub fn schedule_from_json(text: &str) -> Result<Schedule, FormatError> {
    let doc: ScheduleDoc = serde_json::from_str(text)?;
    if doc.format_version != FORMAT_VERSION {
        return Err(FormatError::Version(doc.format_version));
    }
    Ok(Schedule {
        buffer_capacity: doc.buffer_capacity,
        actions: doc
            .actions
            .into_iter()
            .map(|a| match a {
                ActionDoc::Admit => Action::Admit,
                ActionDoc::Serve(id) => Action::Serve(id),
            })
            .collect(),
    })
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    method: &'a str,
    buffer_capacity: usize,
    optimal: Option<bool>,
    total_cost: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_phase_cost: Option<&'a [u64]>,
    max_pending: usize,
    trajectory: &'a [usize],
}

pub fn report_to_json(
    method: &str,
    buffer_capacity: usize,
    optimal: Option<bool>,
    report: &CostReport,
) -> String {
    let doc = ReportDoc {
        method,
        buffer_capacity,
        optimal,
        total_cost: report.total_cost,
        per_phase_cost: report.per_phase_cost.as_deref(),
        max_pending: report.max_pending,
        trajectory: &report.trajectory,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    text
}

/// Writes to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    let io = |source| FormatError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn read_instance(path: &Path) -> Result<Instance, FormatError> {
    let text = fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    instance_from_json(&text)
}

pub fn read_schedule(path: &Path) -> Result<Schedule, FormatError> {
    let text = fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    schedule_from_json(&text)
}
