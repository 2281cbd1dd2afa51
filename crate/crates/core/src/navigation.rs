//! Paths on the Voronoi graph.
//!
//! Four walkers are provided:
//!
//! * [`line_follow`] tracks the cells met by a segment `[a, b]`, one facet
//!   crossing per step. It is the engine of the other line-based walkers.
//! * [`iterative_slicer`] greedily applies any relevant vector that brings
//!   the iterate closer to the target.
//! * [`mv_walk`] repeatedly steps through the facet hit by the ray from the
//!   current center to a waypoint on `[x, t]`.
//! * [`randomized_straight_line`] shifts the segment `[x, t]` by a random
//!   point `Z` of the cell, follows `[x+Z, t+Z]`, then `[t+Z, t+αZ]`.
//!
//! All geometry is exact. Quotients are compared by cross-multiplication.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticePoint;
use crate::rational::{self, Scalar};
use crate::voronoi::VoronoiCellData;

/// Which part of a walk produced an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    B,
    C,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::B => f.write_str("B"),
            Phase::C => f.write_str("C"),
        }
    }
}

/// What [`line_follow`] does when several facets are exited at once.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TiePolicy {
    /// Fail with [`Error::TieDetected`]; randomized callers resample.
    Report,
    /// Take the tied vector that comes first in relevant-vector order.
    Lexicographic,
}

/// One boundary crossing: the segment leaves `before + V` through the facet
/// induced by `edge` at parameter `alpha` and enters `after + V`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossingEvent {
    pub alpha: Scalar,
    /// Index into the cell's relevant vectors.
    pub edge: usize,
    pub before: LatticePoint,
    pub after: LatticePoint,
    pub phase: Phase,
}

/// A walk on the Voronoi graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathTrace {
    pub start: LatticePoint,
    pub edges: Vec<usize>,
    pub events: Vec<CrossingEvent>,
    pub phase_b: usize,
    pub phase_c: usize,
    pub end: LatticePoint,
}

impl PathTrace {
    pub fn empty(start: LatticePoint) -> Self {
        PathTrace {
            end: start.clone(),
            start,
            edges: Vec::new(),
            events: Vec::new(),
            phase_b: 0,
            phase_c: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    fn push_line(&mut self, walk: LineWalk) {
        for ev in &walk.events {
            self.edges.push(ev.edge);
            match ev.phase {
                Phase::B => self.phase_b += 1,
                Phase::C => self.phase_c += 1,
            }
        }
        self.events.extend(walk.events);
        self.end = walk.end;
    }

    /// Checks that consecutive centers differ by relevant vectors and that
    /// the edges sum to `end - start`.
    pub fn is_valid_walk(&self, cell: &VoronoiCellData) -> bool {
        let mut at: Vec<i64> = self.start.coeffs().to_vec();
        for &e in &self.edges {
            let Some(v) = cell.relevant().get(e) else {
                return false;
            };
            for (a, b) in at.iter_mut().zip(v.coeffs()) {
                *a += b;
            }
        }
        at == self.end.coeffs()
    }
}

/// Per-phase edge counts `(phase_b, phase_c)`.
pub fn count_crossings(trace: &PathTrace) -> (usize, usize) {
    (trace.phase_b, trace.phase_c)
}

/// Result of following one segment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineWalk {
    /// Center of the last cell reached.
    pub end: LatticePoint,
    pub events: Vec<CrossingEvent>,
    /// Set when the edge budget ran out before reaching `b`.
    pub truncated: bool,
}

/// Options for [`line_follow`].
#[derive(Clone, Copy, Debug)]
pub struct LineOptions {
    pub ties: TiePolicy,
    pub phase: Phase,
    /// Stop after this many crossings (the walk is then marked truncated).
    pub max_edges: Option<usize>,
}

impl Default for LineOptions {
    fn default() -> Self {
        LineOptions {
            ties: TiePolicy::Report,
            phase: Phase::B,
            max_edges: None,
        }
    }
}

struct Candidate {
    index: usize,
    /// `<v, v/2 - a>`; the current numerator adds `<v, w>`.
    base: Scalar,
    /// `<v, b - a> > 0`.
    rate: Scalar,
    vw: Scalar,
}

/// Follows the cells met by the segment `[a, b]`, starting in `z + V`
/// (which must contain `a`), and returns the walk up to the cell containing `b`.
///
/// Each step exits the current cell `w + V` through the facet of
/// `e = argmin_{v : <v,b-a> > 0} <v, v/2 + w - a> / <v, b - a>`.
pub fn line_follow(
    cell: &VoronoiCellData,
    a: &[Scalar],
    b: &[Scalar],
    z: &LatticePoint,
    opts: LineOptions,
) -> Result<LineWalk> {
    if !cell.membership(&rational::sub(a, z.coords())) {
        return Err(Error::Contract(
            "segment start is not in the starting cell".into(),
        ));
    }
    let dir = rational::sub(b, a);
    let mut w = z.clone();
    let mut events = Vec::new();
    if dir.iter().all(Zero::is_zero) {
        return Ok(LineWalk {
            end: w,
            events,
            truncated: false,
        });
    }
    let mut cands: Vec<Candidate> = cell
        .relevant()
        .iter()
        .enumerate()
        .filter_map(|(index, v)| {
            let rate = rational::dot(v.coords(), &dir);
            rate.is_positive().then(|| Candidate {
                index,
                base: v.half_norm_sq() - rational::dot(v.coords(), a),
                vw: rational::dot(v.coords(), w.coords()),
                rate,
            })
        })
        .collect();
    debug_assert!(
        !cands.is_empty(),
        "a bounded cell has an exit in every direction"
    );

    let one = Scalar::one();
    let mut last_alpha: Option<Scalar> = None;
    loop {
        // Minimum exit time over the forward facets, with ties collected.
        let mut best: Vec<usize> = Vec::new();
        let mut best_num = Scalar::zero();
        let mut best_rate = Scalar::one();
        for (k, c) in cands.iter().enumerate() {
            let num = &c.base + &c.vw;
            if best.is_empty() {
                best.push(k);
                best_num = num;
                best_rate = c.rate.clone();
                continue;
            }
            match rational::cmp_fractions(&num, &c.rate, &best_num, &best_rate) {
                std::cmp::Ordering::Less => {
                    best.clear();
                    best.push(k);
                    best_num = num;
                    best_rate = c.rate.clone();
                }
                std::cmp::Ordering::Equal => best.push(k),
                std::cmp::Ordering::Greater => {}
            }
        }
        let alpha = &best_num / &best_rate;
        if alpha >= one {
            return Ok(LineWalk {
                end: w,
                events,
                truncated: false,
            });
        }
        if opts.ties == TiePolicy::Report {
            let degenerate = match &last_alpha {
                Some(prev) => &alpha <= prev,
                None => alpha.is_zero(),
            };
            if best.len() > 1 || degenerate {
                return Err(Error::TieDetected {
                    tied: best.iter().map(|&k| cands[k].index).collect(),
                });
            }
        }
        if opts.max_edges.is_some_and(|m| events.len() >= m) {
            return Ok(LineWalk {
                end: w,
                events,
                truncated: true,
            });
        }
        let e = cands[best[0]].index;
        let v = &cell.relevant()[e];
        let next = w.offset(v.coeffs(), v.coords());
        for c in cands.iter_mut() {
            c.vw += rational::dot(cell.relevant()[c.index].coords(), v.coords());
        }
        events.push(CrossingEvent {
            alpha: alpha.clone(),
            edge: e,
            before: w,
            after: next.clone(),
            phase: opts.phase,
        });
        w = next;
        last_alpha = Some(alpha);
    }
}

/// Outcome of the iterative slicer.
#[derive(Clone, Debug)]
pub struct SlicerOutcome {
    pub end: LatticePoint,
    pub trace: PathTrace,
}

/// Greedy descent: while some `v` satisfies `||z + v - t|| < ||z - t||`,
/// move along the one with the largest decrease.
pub fn iterative_slicer(cell: &VoronoiCellData, t: &[Scalar], z: &LatticePoint) -> SlicerOutcome {
    let mut trace = PathTrace::empty(z.clone());
    let mut at = z.clone();
    let mut residual = rational::sub(t, z.coords());
    loop {
        // ||r - v||^2 < ||r||^2  <=>  <v, r> - <v,v>/2 > 0
        let mut best: Option<(usize, Scalar)> = None;
        for (i, v) in cell.relevant().iter().enumerate() {
            let gain = rational::dot(v.coords(), &residual) - v.half_norm_sq();
            if gain.is_positive() && best.as_ref().is_none_or(|(_, g)| gain > *g) {
                best = Some((i, gain));
            }
        }
        let Some((i, _)) = best else { break };
        let v = &cell.relevant()[i];
        at = at.offset(v.coeffs(), v.coords());
        residual = rational::sub(&residual, v.coords());
        trace.edges.push(i);
        trace.phase_b += 1;
    }
    trace.end = at.clone();
    SlicerOutcome { end: at, trace }
}

/// MV-style walk kept on the Voronoi graph.
///
/// The segment `[x, t]` is cut into `ceil(||t - x||_V)` equal pieces, so each
/// waypoint lies within Voronoi distance 2 of the current center. Toward
/// each waypoint the walk steps through the facet where the ray from the
/// current center leaves its cell; ties go to the first relevant vector.
pub fn mv_walk(
    cell: &VoronoiCellData,
    t: &[Scalar],
    x: &LatticePoint,
    max_edges: usize,
) -> Result<(LatticePoint, PathTrace)> {
    let mut trace = PathTrace::empty(x.clone());
    if cell.contains_target(x, t) {
        return Ok((x.clone(), trace));
    }
    let diff = rational::sub(t, x.coords());
    let dist = cell.voronoi_norm(&diff);
    let pieces = dist.ceil().to_integer();
    let pieces_s = Scalar::from_integer(pieces.clone());
    let pieces: u64 = num_traits::ToPrimitive::to_u64(&pieces).ok_or(Error::Overflow)?;
    let mut at = x.clone();
    for k in 1..=pieces {
        let frac = Scalar::from_integer(k.into()) / &pieces_s;
        let waypoint = rational::add(x.coords(), &rational::scale(&frac, &diff));
        loop {
            let r = rational::sub(&waypoint, at.coords());
            // Facet hit by the ray from the center toward the waypoint.
            let mut best: Option<(usize, Scalar)> = None;
            for (i, v) in cell.relevant().iter().enumerate() {
                let ip = rational::dot(v.coords(), &r);
                if !ip.is_positive() {
                    continue;
                }
                let ratio = ip / v.half_norm_sq();
                if best.as_ref().is_none_or(|(_, b)| ratio > *b) {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((i, ratio)) if ratio > Scalar::one() => {
                    if trace.edges.len() >= max_edges {
                        return Err(Error::EdgeBudget { max_edges });
                    }
                    let v = &cell.relevant()[i];
                    at = at.offset(v.coeffs(), v.coords());
                    trace.edges.push(i);
                    trace.phase_b += 1;
                }
                _ => break,
            }
        }
    }
    trace.end = at.clone();
    Ok((at, trace))
}

/// Result of one randomized straight-line run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RslResult {
    /// Center of the cell containing `t + αZ`.
    Reached(LatticePoint),
    /// The edge budget ran out.
    Truncated,
}

#[derive(Clone, Debug)]
pub struct RslOutcome {
    pub result: RslResult,
    pub trace: PathTrace,
}

/// Randomized straight line from `x` toward `t` with perturbation `z_sample`.
///
/// Phase A (`x` to `x+Z`) stays in `x + V`. Phase B follows `[x+Z, t+Z]`
/// from `x`; phase C follows `[t+Z, t+αZ]` from where phase B ended. The
/// walk stops early once `max_edges` edges have been used. Degenerate
/// crossings surface as [`Error::TieDetected`].
pub fn randomized_straight_line(
    cell: &VoronoiCellData,
    x: &LatticePoint,
    t: &[Scalar],
    z_sample: &[Scalar],
    alpha: &Scalar,
    max_edges: usize,
) -> Result<RslOutcome> {
    if !alpha.is_positive() || alpha > &Scalar::one() {
        return Err(Error::Contract(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    if !cell.membership(z_sample) {
        return Err(Error::Contract(
            "perturbation is not in the Voronoi cell".into(),
        ));
    }
    let mut trace = PathTrace::empty(x.clone());
    let t_z = rational::add(t, z_sample);

    let b = line_follow(
        cell,
        &rational::add(x.coords(), z_sample),
        &t_z,
        x,
        LineOptions {
            ties: TiePolicy::Report,
            phase: Phase::B,
            max_edges: Some(max_edges),
        },
    )?;
    let truncated = b.truncated;
    trace.push_line(b);
    if truncated {
        return Ok(RslOutcome {
            result: RslResult::Truncated,
            trace,
        });
    }

    let end_c = rational::add(t, &rational::scale(alpha, z_sample));
    let from = trace.end.clone();
    let c = line_follow(
        cell,
        &t_z,
        &end_c,
        &from,
        LineOptions {
            ties: TiePolicy::Report,
            phase: Phase::C,
            max_edges: Some(max_edges - trace.len()),
        },
    )?;
    let truncated = c.truncated;
    trace.push_line(c);
    let result = if truncated {
        RslResult::Truncated
    } else {
        RslResult::Reached(trace.end.clone())
    };
    Ok(RslOutcome { result, trace })
}

/// Unperturbed straight line from the center `x` to `t` with lexicographic
/// tie-breaking. No crossing bound is known for this walk.
pub fn deterministic_line(
    cell: &VoronoiCellData,
    x: &LatticePoint,
    t: &[Scalar],
    max_edges: Option<usize>,
) -> Result<(LineWalk, PathTrace)> {
    let walk = line_follow(
        cell,
        x.coords(),
        t,
        x,
        LineOptions {
            ties: TiePolicy::Lexicographic,
            phase: Phase::B,
            max_edges,
        },
    )?;
    let mut trace = PathTrace::empty(x.clone());
    trace.push_line(walk.clone());
    Ok((walk, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{LatticeBasis, Limits};
    use crate::rational::{int, ratio};
    use crate::voronoi::compute_relevant_vectors;

    fn z2() -> VoronoiCellData {
        compute_relevant_vectors(&LatticeBasis::identity(2).unwrap(), &Limits::default()).unwrap()
    }

    fn pt(cell: &VoronoiCellData, c: &[i64]) -> LatticePoint {
        cell.basis().point(c.to_vec())
    }

    #[test]
    fn follow_two_cells_in_z2() {
        let cell = z2();
        let a = [ratio(1, 10), ratio(1, 10)];
        let b = [ratio(21, 10), ratio(1, 10)];
        let walk = line_follow(&cell, &a, &b, &pt(&cell, &[0, 0]), LineOptions::default()).unwrap();
        assert_eq!(walk.end.coeffs(), &[2, 0]);
        assert_eq!(walk.events.len(), 2);
        // Crossings at x = 1/2 and x = 3/2 along a segment of length 2.
        assert_eq!(walk.events[0].alpha, ratio(1, 5));
        assert_eq!(walk.events[1].alpha, ratio(7, 10));
        for ev in &walk.events {
            assert_eq!(cell.relevant()[ev.edge].coeffs(), &[1, 0]);
        }
    }

    #[test]
    fn follow_single_facet() {
        let cell = z2();
        let a = [ratio(2, 5), int(0)];
        let b = [ratio(3, 5), int(0)];
        let walk = line_follow(&cell, &a, &b, &pt(&cell, &[0, 0]), LineOptions::default()).unwrap();
        assert_eq!(walk.end.coeffs(), &[1, 0]);
        assert_eq!(walk.events.len(), 1);
        assert_eq!(walk.events[0].alpha, ratio(1, 2));
    }

    #[test]
    fn trivial_segment() {
        let cell = z2();
        let a = [ratio(1, 5), ratio(-1, 7)];
        let walk = line_follow(&cell, &a, &a, &pt(&cell, &[0, 0]), LineOptions::default()).unwrap();
        assert_eq!(walk.end.coeffs(), &[0, 0]);
        assert!(walk.events.is_empty());
    }

    #[test]
    fn start_outside_cell_is_a_contract_error() {
        let cell = z2();
        let a = [ratio(3, 5), int(0)];
        let r = line_follow(&cell, &a, &a, &pt(&cell, &[0, 0]), LineOptions::default());
        assert!(matches!(r, Err(Error::Contract(_))));
    }

    #[test]
    fn corner_crossing_is_reported_or_broken_lexicographically() {
        let cell = z2();
        let a = [int(0), int(0)];
        let b = [int(1), int(1)];
        let r = line_follow(&cell, &a, &b, &pt(&cell, &[0, 0]), LineOptions::default());
        match r {
            Err(Error::TieDetected { tied }) => assert_eq!(tied.len(), 2),
            other => panic!("expected a tie, got {other:?}"),
        }
        let walk = line_follow(
            &cell,
            &a,
            &b,
            &pt(&cell, &[0, 0]),
            LineOptions {
                ties: TiePolicy::Lexicographic,
                ..LineOptions::default()
            },
        )
        .unwrap();
        assert_eq!(walk.end.coeffs(), &[1, 1]);
        assert_eq!(walk.events.len(), 2);
        assert_eq!(walk.events[0].alpha, walk.events[1].alpha);
    }

    #[test]
    fn truncation_by_budget() {
        let cell = z2();
        let a = [ratio(1, 10), ratio(1, 10)];
        let b = [ratio(51, 10), ratio(1, 10)];
        let walk = line_follow(
            &cell,
            &a,
            &b,
            &pt(&cell, &[0, 0]),
            LineOptions {
                max_edges: Some(3),
                ..LineOptions::default()
            },
        )
        .unwrap();
        assert!(walk.truncated);
        assert_eq!(walk.events.len(), 3);
        assert_eq!(walk.end.coeffs(), &[3, 0]);
    }

    #[test]
    fn slicer_walks_home() {
        let cell = z2();
        let out = iterative_slicer(&cell, &[ratio(1, 5), int(0)], &pt(&cell, &[3, 0]));
        assert_eq!(out.end.coeffs(), &[0, 0]);
        assert_eq!(out.trace.len(), 3);
        let out = iterative_slicer(&cell, &[ratio(1, 5), int(0)], &pt(&cell, &[0, 0]));
        assert!(out.trace.is_empty());
    }

    #[test]
    fn mv_walk_examples() {
        let cell = z2();
        let t = [ratio(16, 5), ratio(1, 10)];
        let (y, trace) = mv_walk(&cell, &t, &pt(&cell, &[0, 0]), 1000).unwrap();
        assert_eq!(y.coeffs(), &[3, 0]);
        assert!(trace.is_valid_walk(&cell));
        let (y, trace) = mv_walk(&cell, &[ratio(1, 5), int(0)], &pt(&cell, &[0, 0]), 10).unwrap();
        assert_eq!(y.coeffs(), &[0, 0]);
        assert!(trace.is_empty());
    }

    #[test]
    fn rsl_hand_computed_example() {
        // Z = (1/5, -3/10): [Z, (1,1)+Z] crosses x = 1/2 at (1/2, 0) and
        // y = 1/2 at (1, 1/2), both in facet interiors.
        let cell = z2();
        let z = [ratio(1, 5), ratio(-3, 10)];
        let out = randomized_straight_line(
            &cell,
            &pt(&cell, &[0, 0]),
            &[int(1), int(1)],
            &z,
            &ratio(1, 32),
            100,
        )
        .unwrap();
        assert_eq!(out.result, RslResult::Reached(pt(&cell, &[1, 1])));
        assert_eq!(count_crossings(&out.trace), (2, 0));
        assert_eq!(out.trace.events[0].alpha, ratio(3, 10));
        assert_eq!(out.trace.events[1].alpha, ratio(4, 5));
        assert!(out.trace.is_valid_walk(&cell));
    }

    #[test]
    fn rsl_target_in_start_cell() {
        let cell = z2();
        let out = randomized_straight_line(
            &cell,
            &pt(&cell, &[0, 0]),
            &[ratio(1, 5), ratio(1, 5)],
            &[ratio(1, 10), ratio(-1, 10)],
            &ratio(1, 2),
            10,
        )
        .unwrap();
        assert_eq!(out.result, RslResult::Reached(pt(&cell, &[0, 0])));
        assert!(out.trace.is_empty());
        assert_eq!(
            count_crossings(&PathTrace::empty(pt(&cell, &[0, 0]))),
            (0, 0)
        );
    }

    #[test]
    fn rsl_rejects_bad_inputs() {
        let cell = z2();
        let o = pt(&cell, &[0, 0]);
        let t = [int(1), int(1)];
        assert!(
            randomized_straight_line(&cell, &o, &t, &[ratio(3, 5), int(0)], &ratio(1, 2), 10)
                .is_err()
        );
        assert!(randomized_straight_line(&cell, &o, &t, &[int(0), int(0)], &int(0), 10).is_err());
        assert!(randomized_straight_line(&cell, &o, &t, &[int(0), int(0)], &int(2), 10).is_err());
    }

    #[test]
    fn rsl_truncates() {
        let cell = z2();
        let out = randomized_straight_line(
            &cell,
            &pt(&cell, &[0, 0]),
            &[int(5), int(0)],
            &[ratio(1, 10), ratio(1, 7)],
            &ratio(1, 2),
            2,
        )
        .unwrap();
        assert_eq!(out.result, RslResult::Truncated);
        assert_eq!(out.trace.len(), 2);
    }

    #[test]
    fn deterministic_line_from_center() {
        let cell = z2();
        let (walk, trace) = deterministic_line(
            &cell,
            &pt(&cell, &[0, 0]),
            &[ratio(31, 10), ratio(2, 5)],
            None,
        )
        .unwrap();
        assert_eq!(walk.end.coeffs(), &[3, 0]);
        assert!(trace.is_valid_walk(&cell));
    }
}
