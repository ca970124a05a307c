//! The feasible region of the spread coefficients `(b2, b3)` of model M_G.
//!
//! For every observation `j` the residual spread must stay nonnegative:
//! `b·spr x_j + c·|mid x_j| <= spr y_j` with `b, c >= 0`. Observations with
//! `|mid x_j| > 0` give lines `c = v_j − u_j·b`; those with `mid x_j = 0`
//! give vertical bounds `b <= spr y_j / spr x_j`. The upper boundary of the
//! region is the lower envelope of the lines over `[0, s0]`.

use crate::interval::IntervalSample;
use crate::{Error, Result};

const PARALLEL_TOL: f64 = 1e-12;
const ON_BOUNDARY_TOL: f64 = 1e-9;

/// A constraint line `c = v − u·b` from observation `obs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub u: f64,
    pub v: f64,
    pub obs: usize,
}

impl Line {
    pub fn at(&self, b: f64) -> f64 {
        self.v - self.u * b
    }
}

/// A piece of the upper boundary: `lines[line]` is active on `[b_start, b_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub line: usize,
    pub b_start: f64,
    pub b_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaG {
    r0: f64,
    s0: f64,
    lines: Vec<Line>,
    vertical_bounds: Vec<f64>,
    segments: Vec<Segment>,
    /// `(spr x_j, |mid x_j|, spr y_j)` for every observation.
    constraints: Vec<(f64, f64, f64)>,
}

impl GammaG {
    pub fn build(x: &IntervalSample, y: &IntervalSample) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::EmptySample);
        }

        let mut raw_lines = Vec::new();
        let mut vertical_bounds = Vec::new();
        let mut constraints = Vec::with_capacity(x.len());
        let mut s0 = f64::INFINITY;
        for (j, (xi, yi)) in x.iter().zip(y.iter()).enumerate() {
            let am = xi.mid().abs();
            constraints.push((xi.spr(), am, yi.spr()));
            if xi.spr() > 0.0 {
                s0 = s0.min(yi.spr() / xi.spr());
            }
            if am > 0.0 {
                raw_lines.push(Line {
                    u: xi.spr() / am,
                    v: yi.spr() / am,
                    obs: j,
                });
            } else if xi.spr() > 0.0 {
                vertical_bounds.push(yi.spr() / xi.spr());
            }
        }

        let lines = dedup_parallel(raw_lines);
        let r0 = lines.iter().map(|l| l.v).fold(f64::INFINITY, f64::min);
        let segments = if lines.is_empty() {
            Vec::new()
        } else {
            walk_envelope(&lines, r0, s0)?
        };

        Ok(Self {
            r0,
            s0,
            lines,
            vertical_bounds,
            segments,
            constraints,
        })
    }

    /// Largest feasible `c` at `b = 0` (`+∞` when no observation has a nonzero mid).
    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Largest feasible `b` at `c = 0` (`+∞` when every spread of `x` is zero).
    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn vertical_bounds(&self) -> &[f64] {
        &self.vertical_bounds
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// `min_k (v_k − u_k b)`, or `+∞` without lines.
    pub fn envelope(&self, b: f64) -> f64 {
        self.lines
            .iter()
            .map(|l| l.at(b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Breakpoints `x^0 = 0 < x^1 < … < x^t = s0`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.segments.iter().map(|s| s.b_start).collect();
        if let Some(last) = self.segments.last() {
            out.push(last.b_end);
        }
        out
    }

    /// Exact membership, no tolerance.
    pub fn contains_strict(&self, b: f64, c: f64) -> bool {
        b >= 0.0
            && c >= 0.0
            && self
                .constraints
                .iter()
                .all(|&(sx, am, sy)| b * sx + c * am <= sy)
    }

    /// Membership with an absolute slack `tol` on every constraint.
    pub fn contains(&self, b: f64, c: f64, tol: f64) -> bool {
        b >= -tol
            && c >= -tol
            && self
                .constraints
                .iter()
                .all(|&(sx, am, sy)| b * sx + c * am <= sy + tol)
    }

    /// Height of the boundary edge `b = s0`, present when a vertical bound
    /// cuts the envelope above the axis; `0` otherwise. Heights within
    /// rounding of zero count as zero.
    pub fn vertical_edge(&self) -> f64 {
        if !self.s0.is_finite() {
            return 0.0;
        }
        let top = self.envelope(self.s0);
        let scale = self.lines.iter().map(|l| l.v.abs()).fold(1.0, f64::max);
        if top.is_finite() && top > 1e-12 * scale {
            top
        } else {
            0.0
        }
    }

    /// Vertices of the region's polygon, counter-clockwise from the origin.
    /// Unbounded directions are omitted.
    pub fn vertices(&self) -> Vec<(f64, f64)> {
        let mut out = vec![(0.0, 0.0)];
        if self.s0.is_finite() {
            out.push((self.s0, 0.0));
            let top = self.vertical_edge();
            if top > 0.0 {
                out.push((self.s0, top));
            }
        }
        for seg in self.segments.iter().rev() {
            out.push((seg.b_start, self.lines[seg.line].at(seg.b_start)));
        }
        out.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
        out
    }
}

/// Among lines with (near-)equal slope only the lowest can be active.
fn dedup_parallel(mut lines: Vec<Line>) -> Vec<Line> {
    lines.sort_by(|a, b| a.u.total_cmp(&b.u).then(a.v.total_cmp(&b.v)));
    let mut out: Vec<Line> = Vec::with_capacity(lines.len());
    for line in lines {
        match out.last() {
            Some(prev) if (line.u - prev.u).abs() < PARALLEL_TOL => {}
            _ => out.push(line),
        }
    }
    out
}

/// Walks the lower envelope from `(0, r0)` rightwards to `b = s0`.
///
/// Starts on the line through `(0, r0)` with the largest slope magnitude; at
/// each step moves to the line whose intersection with the current one comes
/// next, breaking ties by the largest `u`. Lines no steeper than the current
/// one can never become active again and are skipped.
fn walk_envelope(lines: &[Line], r0: f64, s0: f64) -> Result<Vec<Segment>> {
    let tie = PARALLEL_TOL * r0.abs().max(1.0);
    let mut current = (0..lines.len())
        .filter(|&k| lines[k].v <= r0 + tie)
        .max_by(|&a, &b| lines[a].u.total_cmp(&lines[b].u))
        .ok_or_else(|| Error::Numerical("no line attains r0".into()))?;

    let mut segments = Vec::new();
    let mut b_prev = 0.0f64;
    loop {
        let h = lines[current];
        let mut next: Option<(usize, f64)> = None;
        for (k, l) in lines.iter().enumerate() {
            if l.u <= h.u {
                continue;
            }
            let b = (l.v - h.v) / (l.u - h.u);
            let tol = ON_BOUNDARY_TOL * b_prev.abs().max(1.0);
            if b < b_prev - tol {
                continue;
            }
            let b = b.max(b_prev);
            next = match next {
                None => Some((k, b)),
                Some((kb, bb)) => {
                    if b < bb - tol || ((b - bb).abs() <= tol && l.u > lines[kb].u) {
                        Some((k, b))
                    } else {
                        Some((kb, bb))
                    }
                }
            };
        }
        match next {
            Some((k, b)) if b < s0 => {
                if b > b_prev {
                    segments.push(Segment {
                        line: current,
                        b_start: b_prev,
                        b_end: b,
                    });
                }
                b_prev = b;
                current = k;
            }
            _ => {
                segments.push(Segment {
                    line: current,
                    b_start: b_prev,
                    b_end: s0,
                });
                break;
            }
        }
        if segments.len() > lines.len() + 1 {
            return Err(Error::Numerical("envelope walk did not terminate".into()));
        }
    }
    Ok(segments)
}
