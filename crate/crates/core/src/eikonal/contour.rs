//! Marching-squares iso-contours of the eikonal field.

use std::collections::HashMap;

use serde::Serialize;

use super::EikonalSolution;
use crate::error::{Error, Result};
use crate::field::ScalarField2D;
use crate::geometry::Point2;

/// One connected piece of a level set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contour {
    pub level: f64,
    pub points: Vec<Point2>,
    /// Closed contours repeat no vertex; the last point connects back to
    /// the first.
    pub closed: bool,
}

/// Wavefronts `S = k` for each requested level, one list per level.
/// Levels `<= 0` and levels above `max(S)` yield empty lists.
pub fn extract_wavefronts(sol: &EikonalSolution, levels: &[f64]) -> Result<Vec<Vec<Contour>>> {
    if levels.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Parameter("wavefront levels must be sorted".into()));
    }
    if let Some(l) = levels.iter().find(|l| !l.is_finite()) {
        return Err(Error::Parameter(format!("non-finite wavefront level {l}")));
    }
    let field = sol.field();
    let max = field.max();
    Ok(levels
        .iter()
        .map(|&level| {
            if level <= 0.0 || level > max {
                Vec::new()
            } else {
                iso_contours(field, level)
            }
        })
        .collect())
}

/// Key of a grid edge: horizontal edges from node `k` are `2k`, vertical
/// edges are `2k + 1`.
type EdgeId = usize;

pub(crate) fn iso_contours(field: &ScalarField2D, level: f64) -> Vec<Contour> {
    let spec = *field.spec();
    let nx = spec.nx;
    let above = |i: usize, j: usize| field.at(i, j) >= level;

    let crossing = |edge: EdgeId| -> Point2 {
        let node = edge / 2;
        let (i, j) = (node % nx, node / nx);
        let (i2, j2) = if edge.is_multiple_of(2) { (i + 1, j) } else { (i, j + 1) };
        let (va, vb) = (field.at(i, j), field.at(i2, j2));
        let t = if vb == va {
            0.5
        } else {
            ((level - va) / (vb - va)).clamp(0.0, 1.0)
        };
        spec.node(i, j).lerp(spec.node(i2, j2), t)
    };

    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
    for j in 0..spec.ny - 1 {
        for i in 0..nx - 1 {
            let b = [above(i, j), above(i + 1, j), above(i + 1, j + 1), above(i, j + 1)];
            let bottom = 2 * spec.index(i, j);
            let right = 2 * spec.index(i + 1, j) + 1;
            let top = 2 * spec.index(i, j + 1);
            let left = 2 * spec.index(i, j) + 1;
            // Edge k joins corner k and corner k+1, counter-clockwise.
            let edges = [bottom, right, top, left];
            let cut: Vec<EdgeId> = (0..4).filter(|&k| b[k] != b[(k + 1) % 4]).map(|k| edges[k]).collect();
            match cut.len() {
                0 => {}
                2 => segments.push((cut[0], cut[1])),
                4 => {
                    let center =
                        0.25 * (field.at(i, j) + field.at(i + 1, j) + field.at(i + 1, j + 1) + field.at(i, j + 1));
                    if (center >= level) == b[0] {
                        segments.push((bottom, right));
                        segments.push((top, left));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                _ => unreachable!("a cell has an even number of crossings"),
            }
        }
    }

    let mut incident: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        incident.entry(a).or_default().push(s);
        incident.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];

    let walk = |start_seg: usize, start_edge: EdgeId, used: &mut Vec<bool>| -> (Vec<EdgeId>, bool) {
        let mut chain = vec![start_edge];
        let mut seg = start_seg;
        let mut at = start_edge;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            if next == start_edge {
                return (chain, true);
            }
            chain.push(next);
            at = next;
            match incident[&at].iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => return (chain, false),
            }
        }
    };

    let mut contours = Vec::new();
    let mut push = |edges: Vec<EdgeId>, closed: bool| {
        let mut points: Vec<Point2> = edges.into_iter().map(crossing).collect();
        points.dedup();
        if closed && points.len() > 1 && points.first() == points.last() {
            points.pop();
        }
        if points.len() >= 2 {
            contours.push(Contour { level, points, closed });
        }
    };

    // Open chains start at boundary edges, which touch a single segment.
    let mut ends: Vec<EdgeId> = incident
        .iter()
        .filter(|(_, segs)| segs.len() == 1)
        .map(|(&e, _)| e)
        .collect();
    ends.sort_unstable();
    for e in ends {
        let s = incident[&e][0];
        if !used[s] {
            let (chain, closed) = walk(s, e, &mut used);
            push(chain, closed);
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            let (chain, closed) = walk(s, segments[s].0, &mut used);
            push(chain, closed);
        }
    }
    contours
}
