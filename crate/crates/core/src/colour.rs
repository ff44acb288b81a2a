//! Colour changing: turn a RED spot set into a BLUE one, one spot at a time,
//! keeping Property P at every step and recording a witness cycle per step.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{input_err, invariant_err, precondition_err, Result};
use crate::graph::{delete_spots, is_property_p, split_at_spot, EdgeId, Graph, SignedEdge, SpotSet};

/// Intermediate state `R(j)` of a colour change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColourChangeState {
    pub g: Graph,
    pub r_current: SpotSet,
    pub b: SpotSet,
    /// Converted RED spot to the BLUE spot replacing it; identity on `R ∩ B`.
    pub phi: BTreeMap<EdgeId, EdgeId>,
    pub j: usize,
}

/// One conversion step and its witness cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessCell {
    pub j: usize,
    pub r: EdgeId,
    pub b: EdgeId,
    /// Closed walk crossing `r` and `b` once each and no other spot of `R(j-1)`.
    pub witness: Vec<SignedEdge>,
}

/// Ordered steps of a complete colour change.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColourChangeTrace {
    pub steps: Vec<WitnessCell>,
}

impl ColourChangeTrace {
    /// The map `R -> B` defined by the trace, identity on `R ∩ B`.
    pub fn phi(&self, r: &SpotSet, b: &SpotSet) -> BTreeMap<EdgeId, EdgeId> {
        let mut phi: BTreeMap<EdgeId, EdgeId> =
            r.shared_with(b).into_iter().map(|e| (e, e)).collect();
        phi.extend(self.steps.iter().map(|s| (s.r, s.b)));
        phi
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl ColourChangeState {
    /// Checks Property P of both sets and starts with `phi` the identity on `R ∩ B`.
    pub fn new(g: &Graph, r: &SpotSet, b: &SpotSet) -> Result<Self> {
        for s in [r, b] {
            s.check_in(g)?;
            if !is_property_p(g, s)? {
                return Err(input_err!("{} spots do not leave a tree", s.colour));
            }
        }
        Ok(ColourChangeState {
            g: g.clone(),
            r_current: r.clone(),
            b: b.clone(),
            phi: r.shared_with(b).into_iter().map(|e| (e, e)).collect(),
            j: 0,
        })
    }

    /// BLUE spots not yet reached, in id order.
    pub fn pending_blue(&self) -> Vec<EdgeId> {
        self.b.spots.difference(&self.r_current.spots).copied().collect()
    }

    pub fn is_done(&self) -> bool {
        self.r_current.spots == self.b.spots
    }
}

/// Trades one RED spot for the BLUE spot `choose_b` (lowest pending id by default).
pub fn colour_change_step(
    s: &ColourChangeState,
    choose_b: Option<EdgeId>,
) -> Result<(ColourChangeState, WitnessCell)> {
    let pending = s.pending_blue();
    let b = match choose_b {
        Some(b) if pending.contains(&b) => b,
        Some(b) => return Err(precondition_err!("edge {b} is not a pending BLUE spot")),
        None => *pending.first().ok_or_else(|| precondition_err!("no BLUE spot left to reach"))?,
    };
    let mut with_b = s.r_current.clone();
    with_b.spots.insert(b);
    let sides = split_at_spot(&s.g, &with_b, b)?;
    let (x, y) = (&sides.blocks[0], &sides.blocks[1]);
    let joins = |e: EdgeId| {
        let (u, v) = s.g.endpoints(e).expect("spot edge exists");
        (x.contains(&u) && y.contains(&v)) || (x.contains(&v) && y.contains(&u))
    };
    let r = s
        .r_current
        .spots
        .iter()
        .copied()
        .filter(|e| !s.b.contains(*e))
        .find(|&e| joins(e))
        .ok_or_else(|| invariant_err!("no RED spot joins the two sides of BLUE spot {b}"))?;

    let forest = delete_spots(&s.g, &with_b)?;
    let oriented = |e: EdgeId| {
        let (u, v) = s.g.endpoints(e).expect("spot edge exists");
        if x.contains(&u) {
            (SignedEdge::fwd(e), u, v)
        } else {
            (SignedEdge::back(e), v, u)
        }
    };
    let (r_step, rx, ry) = oriented(r);
    let (b_step, bx, by) = oriented(b);
    let mut witness = forest.forest_path(bx, rx).expect("same side");
    witness.push(r_step);
    witness.extend(forest.forest_path(ry, by).expect("same side"));
    witness.push(b_step.reversed());

    let mut next = s.clone();
    next.r_current.spots.remove(&r);
    next.r_current.spots.insert(b);
    next.phi.insert(r, b);
    next.j += 1;
    if !is_property_p(&next.g, &next.r_current)? {
        return Err(invariant_err!("Property P lost at step {}", next.j));
    }
    let cell = WitnessCell { j: next.j, r, b, witness };
    Ok((next, cell))
}

/// Runs the colour change with a caller choice of the next BLUE spot.
pub fn run_colour_change_with(
    g: &Graph,
    r: &SpotSet,
    b: &SpotSet,
    mut choose: impl FnMut(&[EdgeId]) -> EdgeId,
) -> Result<ColourChangeTrace> {
    let mut state = ColourChangeState::new(g, r, b)?;
    let mut trace = ColourChangeTrace::default();
    while !state.is_done() {
        let pending = state.pending_blue();
        let pick = choose(&pending);
        let (next, cell) = colour_change_step(&state, Some(pick))?;
        state = next;
        trace.steps.push(cell);
    }
    Ok(trace)
}

/// Runs the colour change with lowest-id choices.
pub fn run_colour_change(g: &Graph, r: &SpotSet, b: &SpotSet) -> Result<ColourChangeTrace> {
    run_colour_change_with(g, r, b, |p| p[0])
}

/// Outcome of replaying a trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceVerdict {
    pub ok: bool,
    /// Step number (0 for the initial state or the final check) and reason.
    pub failure: Option<(usize, String)>,
}

impl TraceVerdict {
    fn fail(step: usize, reason: impl Into<String>) -> Self {
        TraceVerdict { ok: false, failure: Some((step, reason.into())) }
    }
}

fn crossings(walk: &[SignedEdge], e: EdgeId) -> usize {
    walk.iter().filter(|se| se.edge == e).count()
}

/// Replays a trace, checking Property P, witness crossings and `phi`.
pub fn verify_trace(g: &Graph, r: &SpotSet, b: &SpotSet, trace: &ColourChangeTrace) -> TraceVerdict {
    let ok_p = |s: &SpotSet| is_property_p(g, s).unwrap_or(false);
    if !ok_p(r) || !ok_p(b) {
        return TraceVerdict::fail(0, "initial spot sets lack Property P");
    }
    let mut current = r.clone();
    let mut images = BTreeSet::new();
    for (i, step) in trace.steps.iter().enumerate() {
        let n = i + 1;
        if step.j != n {
            return TraceVerdict::fail(n, format!("step numbered {} out of sequence", step.j));
        }
        if !current.contains(step.r) || b.contains(step.r) {
            return TraceVerdict::fail(n, format!("r = {} is not in R(j-1) - B", step.r));
        }
        if !b.contains(step.b) || current.contains(step.b) {
            return TraceVerdict::fail(n, format!("b = {} is not in B - R(j-1)", step.b));
        }
        if !images.insert(step.b) {
            return TraceVerdict::fail(n, format!("phi hits {} twice", step.b));
        }
        if !g.is_closed_walk(&step.witness) {
            return TraceVerdict::fail(n, "witness is not a closed walk");
        }
        if crossings(&step.witness, step.r) != 1 || crossings(&step.witness, step.b) != 1 {
            return TraceVerdict::fail(n, "witness must cross r and b exactly once");
        }
        if let Some(&other) = current
            .spots
            .iter()
            .find(|&&e| e != step.r && crossings(&step.witness, e) != 0)
        {
            return TraceVerdict::fail(n, format!("witness crosses spot {other} of R(j-1)"));
        }
        current.spots.remove(&step.r);
        current.spots.insert(step.b);
        if !ok_p(&current) {
            return TraceVerdict::fail(n, "R(j) lacks Property P");
        }
    }
    if current.spots != b.spots {
        return TraceVerdict::fail(0, "final RED set differs from B");
    }
    TraceVerdict { ok: true, failure: None }
}
