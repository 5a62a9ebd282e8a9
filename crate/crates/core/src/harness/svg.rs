//! Space-time pictures: time runs left to right, sites bottom to top.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::model::{Action, Instance, RequestKind, Schedule, Site};

const CELL: f64 = 24.0;
const MARGIN: f64 = 32.0;

/// Corners of the server's path as `(time, site)`. A request served right
/// as it arrives is met at its own step; any other service happens before
/// the next arrival (or one step after the last).
pub fn trajectory_points(instance: &Instance, schedule: &Schedule) -> Vec<(u64, Site)> {
    let steps: Vec<u64> = instance.arrivals.iter().map(|r| r.step).collect();
    let end = steps.last().map_or(0, |s| s + 1);
    let mut points = vec![(0, instance.meta.start_site)];
    let mut admitted = 0usize;
    let mut last_admitted = None;
    for action in &schedule.actions {
        match *action {
            Action::Admit => {
                last_admitted = Some(admitted);
                admitted += 1;
            }
            Action::Serve(id) => {
                let Some(request) = instance.arrivals.get(id) else {
                    continue;
                };
                let time = if last_admitted == Some(id) {
                    request.step
                } else {
                    steps.get(admitted).copied().unwrap_or(end)
                };
                let &(t0, x0) = points.last().expect("non-empty");
                let time = time.max(t0);
                if request.site != x0 {
                    if time != t0 {
                        points.push((time, x0));
                    }
                    points.push((time, request.site));
                }
                last_admitted = None;
            }
        }
    }
    points
}

fn x(time: f64) -> f64 {
    MARGIN + time * CELL
}

fn y(instance: &Instance, site: f64) -> f64 {
    MARGIN + (instance.n_sites.saturating_sub(1) as f64 - site) * CELL
}

/// Renders the instance, and the schedule's trajectory when given. Each
/// anchor is one `rect.anchor`, each regular request (or packet of them)
/// one `circle.regular` labelled with its rank.
pub fn render_svg(instance: &Instance, schedule: Option<&Schedule>) -> String {
    let horizon = instance.arrivals.last().map_or(0, |r| r.step + 1).max(
        instance
            .meta
            .ell
            .zip(instance.meta.phases)
            .map_or(0, |(l, p)| (1u64 << l) * p as u64),
    );
    let top = instance.n_sites.saturating_sub(1) as f64;
    let width = 2.0 * MARGIN + horizon as f64 * CELL;
    let height = 2.0 * MARGIN + top * CELL;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    svg.push_str(
        "<style>.grid{stroke:#ddd;stroke-width:1}.anchor{fill:#b0c4de;stroke:#345}\
         .regular{fill:#fff;stroke:#a33;stroke-width:1.5}.generic{fill:#777}\
         .rank{font:10px sans-serif;text-anchor:middle;dominant-baseline:central}\
         .trajectory{fill:none;stroke:#228;stroke-width:2}</style>\n",
    );
    svg.push_str("<g class=\"grid\">\n");
    for t in 0..=horizon {
        let _ = writeln!(
            svg,
            r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}"/>"#,
            x(t as f64),
            y(instance, top),
            y(instance, 0.0)
        );
    }
    for s in 0..instance.n_sites {
        let _ = writeln!(
            svg,
            r#"<line x1="{0}" y1="{2}" x2="{1}" y2="{2}"/>"#,
            x(0.0),
            x(horizon as f64),
            y(instance, s as f64)
        );
    }
    svg.push_str("</g>\n");

    let mut anchors: BTreeMap<u64, (u64, Site)> = BTreeMap::new();
    let mut regulars: BTreeMap<usize, (u64, Site, u32)> = BTreeMap::new();
    for r in &instance.arrivals {
        match r.kind {
            RequestKind::AnchorMember { anchor_id, .. } => {
                anchors.entry(anchor_id).or_insert((r.step, r.site));
            }
            RequestKind::Regular { rank } => {
                regulars
                    .entry(r.packet_id.unwrap_or(r.id))
                    .or_insert((r.step, r.site, rank));
            }
            RequestKind::Generic => {
                let _ = writeln!(
                    svg,
                    r#"<circle class="generic" cx="{}" cy="{}" r="3"/>"#,
                    x(r.step as f64 + 0.5),
                    y(instance, r.site as f64)
                );
            }
        }
    }
    let side = CELL * 0.5;
    for (step, site) in anchors.values() {
        let _ = writeln!(
            svg,
            r#"<rect class="anchor" x="{}" y="{}" width="{side}" height="{side}"/>"#,
            x(*step as f64 + 0.5) - side / 2.0,
            y(instance, *site as f64) - side / 2.0
        );
    }
    for (step, site, rank) in regulars.values() {
        let (cx, cy) = (x(*step as f64 + 0.5), y(instance, *site as f64));
        let _ = writeln!(
            svg,
            r#"<circle class="regular" cx="{cx}" cy="{cy}" r="7"/>"#
        );
        let _ = writeln!(svg, r#"<text class="rank" x="{cx}" y="{cy}">{rank}</text>"#);
    }

    if let Some(schedule) = schedule {
        let points: Vec<String> = trajectory_points(instance, schedule)
            .into_iter()
            .map(|(t, s)| format!("{},{}", x(t as f64), y(instance, s as f64)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="trajectory" points="{}"/>"#,
            points.join(" ")
        );
    }
    svg.push_str("</svg>\n");
    svg
}
