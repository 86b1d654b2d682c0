//! Conditioning-context construction.
//!
//! Every conditioner input is a fixed-size flattening of the node matrix and
//! edge tensor with zeros in all not-yet-generated (or masked-out) slots:
//! first `max_nodes * type_count` node entries row-major, then
//! `max_nodes * max_nodes * edge_dim` edge entries. The masked variants place
//! surviving nodes at their compacted positions, so two histories that agree
//! on the visible nodes produce bitwise-identical contexts.

use ndarray::Array1;

use crate::graph::{BehavioralGraph, GenerationMasks};

fn write_node_row(ctx: &mut Array1<f64>, bg: &BehavioralGraph, slot: usize, original: usize) {
    let n = bg.dims().type_count;
    let row = bg.node_row(original);
    for (c, &v) in row.iter().enumerate() {
        ctx[slot * n + c] = v;
    }
}

fn write_edge_slice(
    ctx: &mut Array1<f64>,
    bg: &BehavioralGraph,
    slot_i: usize,
    slot_j: usize,
    orig_i: usize,
    orig_j: usize,
) {
    let dims = bg.dims();
    let base = dims.max_nodes * dims.type_count
        + (slot_i * dims.max_nodes + slot_j) * dims.edge_dim();
    let slice = bg.edge_slice(orig_i, orig_j);
    for (c, &v) in slice.iter().enumerate() {
        ctx[base + c] = v;
    }
}

/// Context for sampling node `i`: nodes `0..i` and every edge among them.
pub fn node_context(bg: &BehavioralGraph, i: usize) -> Array1<f64> {
    let dims = bg.dims();
    let mut ctx = Array1::zeros(dims.context_len());
    for r in 0..i {
        write_node_row(&mut ctx, bg, r, r);
        for c in 0..=r {
            write_edge_slice(&mut ctx, bg, r, c, r, c);
        }
    }
    ctx
}

/// Unmasked context for sampling edge `(i, j)`: nodes `0..=i`, all edges
/// among nodes `0..i`, and the edges `(i, 0..j)` already drawn this step.
pub fn edge_context(bg: &BehavioralGraph, i: usize, j: usize) -> Array1<f64> {
    let mut ctx = node_context(bg, i);
    write_node_row(&mut ctx, bg, i, i);
    for c in 0..j {
        write_edge_slice(&mut ctx, bg, i, c, i, c);
    }
    ctx
}

/// Visibility-masked, compacted context for sampling the edge from node `i`
/// to the survivor at compacted position `target`. Survivors (causal parents
/// of node i, then node i itself) occupy the leading slots; everything else
/// is zero, so hidden nodes cannot influence the conditioner.
pub fn edge_context_masked(
    bg: &BehavioralGraph,
    masks: &GenerationMasks,
    target: usize,
) -> Array1<f64> {
    let dims = bg.dims();
    let mut ctx = Array1::zeros(dims.context_len());
    let perm = &masks.permutation;
    let i = *perm.last().expect("permutation holds at least node i");
    let self_slot = perm.len() - 1;
    for (slot, &orig) in perm.iter().enumerate() {
        write_node_row(&mut ctx, bg, slot, orig);
    }
    // history among surviving predecessors
    for (slot_r, &orig_r) in perm.iter().enumerate().take(self_slot) {
        for (slot_c, &orig_c) in perm.iter().enumerate().take(slot_r + 1) {
            if orig_r < i && orig_c <= orig_r {
                write_edge_slice(&mut ctx, bg, slot_r, slot_c, orig_r, orig_c);
            }
        }
    }
    // this node's edges drawn so far
    for (slot_c, &orig_c) in perm.iter().enumerate().take(target) {
        write_edge_slice(&mut ctx, bg, self_slot, slot_c, i, orig_c);
    }
    ctx
}
