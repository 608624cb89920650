//! Gram-matrix reduction of an [`SosProgram`] to an [`SdpProblem`].

use std::collections::BTreeSet;

use sbc_sdp::{BlockEntry, Constraint, SdpProblem};

use crate::poly::{Monomial, PolyError};

use super::{AffineScalar, Sense, SosProgram, Var};

/// The SDP together with the map back to program quantities.
#[derive(Debug, Clone)]
pub struct CompiledSos {
    pub sdp: SdpProblem,
    /// Block of multiplier `k`.
    pub multiplier_blocks: Vec<usize>,
    /// Gram block of constraint `k`.
    pub constraint_blocks: Vec<usize>,
    /// 1x1 slack block of scalar inequality `k`.
    pub slack_blocks: Vec<usize>,
    /// `(constraint, monomial)` matched by each equality row; scalar
    /// inequalities use `None`.
    pub rows: Vec<(usize, Option<Monomial>)>,
}

fn push_affine(row: &mut Constraint, a: &AffineScalar, multiplier_blocks: &[usize]) {
    row.rhs -= a.constant;
    for (&v, &c) in &a.terms {
        match v {
            Var::Free(k) => row.free.push((k, c)),
            Var::Gram { mult, row: r, col } => {
                // `c` multiplies the unknown Q_rc; a stored off-diagonal entry
                // contributes twice.
                let val = if r == col { c } else { 0.5 * c };
                row.entries.push(BlockEntry::new(multiplier_blocks[mult], r, col, val));
            }
        }
    }
}

pub fn compile(program: &SosProgram) -> Result<CompiledSos, PolyError> {
    let mut sdp = SdpProblem::new();
    for _ in 0..program.num_free() {
        sdp.add_free();
    }
    let sign = match program.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    for (&v, &c) in &program.objective.terms {
        if let Var::Free(k) = v {
            sdp.c_free[k] += sign * c;
        }
    }
    let multiplier_blocks: Vec<usize> = program
        .multipliers
        .iter()
        .map(|m| sdp.add_block(m.basis.len()))
        .collect();
    let constraint_blocks: Vec<usize> = program
        .constraints
        .iter()
        .map(|c| sdp.add_block(c.basis.len()))
        .collect();
    let slack_blocks: Vec<usize> = program.scalar_nonneg.iter().map(|_| sdp.add_block(1)).collect();

    let mut rows = Vec::new();
    for (ci, con) in program.constraints.iter().enumerate() {
        let blk = constraint_blocks[ci];
        let products = con.basis.products()?;
        let mut monos: BTreeSet<Monomial> = con
            .expr
            .coeffs
            .iter()
            .filter(|(_, a)| a.constant != 0.0 || !a.is_constant())
            .map(|(m, _)| m.clone())
            .collect();
        for (_, _, p) in &products {
            monos.extend(p.terms().map(|(m, _)| m.clone()));
        }
        for mu in monos {
            let mut row = Constraint::default();
            if let Some(a) = con.expr.coeffs.get(&mu) {
                push_affine(&mut row, a, &multiplier_blocks);
            }
            for (k, l, p) in &products {
                let c = p.coefficient(&mu);
                if c != 0.0 {
                    row.entries.push(BlockEntry::new(blk, *k, *l, -c));
                }
            }
            sdp.add_constraint(row);
            rows.push((ci, Some(mu)));
        }
    }
    for (k, (_, a)) in program.scalar_nonneg.iter().enumerate() {
        let mut row = Constraint::default();
        push_affine(&mut row, a, &multiplier_blocks);
        row.entries.push(BlockEntry::new(slack_blocks[k], 0, 0, -1.0));
        sdp.add_constraint(row);
        rows.push((program.constraints.len() + k, None));
    }
    Ok(CompiledSos {
        sdp,
        multiplier_blocks,
        constraint_blocks,
        slack_blocks,
        rows,
    })
}
