//! Explicit-state reference solver for small games.
//!
//! Everything here works on enumerated states and a transition table filled
//! by direct gate simulation of the circuit, with no BDDs involved, so it can
//! serve as an independent check of the symbolic pipeline. A size guard keeps
//! it at sanity-check scale.
//!
//! Also home of the seeded random-circuit generator used by the randomized
//! test corpora.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::aiger::{AigFile, AndGate, CircuitSpec, Lit};

/// Hard cap on explicitly enumerated latches.
pub const MAX_ORACLE_LATCHES: usize = 16;
/// Hard cap on enumerated input bits (uncontrollable + controllable).
pub const MAX_ORACLE_INPUTS: usize = 8;
/// Uncontrollable bits alone are further capped so a move set fits in `u64`.
pub const MAX_ORACLE_UNC: usize = 6;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("explicit solver handles at most {max} latches, game needs {got}")]
    TooManyLatches { max: usize, got: usize },
    #[error("explicit solver handles at most {max} input bits, game has {got}")]
    TooManyInputs { max: usize, got: usize },
    #[error("explicit solver handles at most {max} uncontrollable bits, game has {got}")]
    TooManyUncontrollable { max: usize, got: usize },
}

/// A fully enumerated safety game.
///
/// State bit `k` is circuit latch `k` in declaration order; when the error
/// output is not itself a latch literal, a synthetic error bit is appended
/// as the last latch, updated to `err | bad`.
#[derive(Debug, Clone)]
pub struct ExplicitGame {
    pub num_latches: usize,
    pub num_unc: usize,
    pub num_ctrl: usize,
    pub init: u32,
    pub unsafe_states: Vec<bool>,
    /// `next[(q << (nu+nc)) | (su << nc) | sc]`
    next: Vec<u32>,
    pub added_err_latch: bool,
}

impl ExplicitGame {
    pub fn num_states(&self) -> usize {
        1 << self.num_latches
    }

    pub fn num_unc_moves(&self) -> usize {
        1 << self.num_unc
    }

    pub fn num_ctrl_moves(&self) -> usize {
        1 << self.num_ctrl
    }

    pub fn next_state(&self, q: u32, su: u32, sc: u32) -> u32 {
        let shift = self.num_unc + self.num_ctrl;
        self.next[((q as usize) << shift) | ((su as usize) << self.num_ctrl) | sc as usize]
    }

    /// Builds the table by simulating the and-inverter graph on every
    /// (state, input) combination.
    pub fn from_circuit(spec: &CircuitSpec) -> Result<ExplicitGame, OracleError> {
        let bad_latch = bad_latch_index(spec);
        let nl = spec.latches.len() + bad_latch.is_none() as usize;
        if nl > MAX_ORACLE_LATCHES {
            return Err(OracleError::TooManyLatches { max: MAX_ORACLE_LATCHES, got: nl });
        }
        let (nu, nc) = (spec.uncontrollable.len(), spec.controllable.len());
        if nu + nc > MAX_ORACLE_INPUTS {
            return Err(OracleError::TooManyInputs { max: MAX_ORACLE_INPUTS, got: nu + nc });
        }
        if nu > MAX_ORACLE_UNC {
            return Err(OracleError::TooManyUncontrollable { max: MAX_ORACLE_UNC, got: nu });
        }

        // gate list in variable order; the parser's ordering check makes
        // this a topological order
        let mut gates: Vec<AndGate> = spec.ands.clone();
        gates.sort_by_key(|g| g.lhs.var());

        let nstates = 1usize << nl;
        let err_bit = spec.latches.len();
        let mut game = ExplicitGame {
            num_latches: nl,
            num_unc: nu,
            num_ctrl: nc,
            init: 0,
            unsafe_states: vec![false; nstates],
            next: vec![0; nstates << (nu + nc)],
            added_err_latch: bad_latch.is_none(),
        };

        let mut vals = vec![false; spec.max_var as usize + 1];
        let lit_val = |vals: &[bool], l: Lit| -> bool {
            if l.is_const() {
                l.0 == 1
            } else {
                vals[l.var() as usize] ^ l.is_negated()
            }
        };
        for q in 0..nstates as u32 {
            if let Some((idx, negated)) = bad_latch {
                game.unsafe_states[q as usize] = (q >> idx & 1 == 1) ^ negated;
            } else {
                game.unsafe_states[q as usize] = q >> err_bit & 1 == 1;
            }
            for su in 0..1u32 << nu {
                for sc in 0..1u32 << nc {
                    for v in vals.iter_mut() {
                        *v = false;
                    }
                    for (k, &(cur, _)) in spec.latches.iter().enumerate() {
                        vals[cur.var() as usize] = q >> k & 1 == 1;
                    }
                    for (k, &l) in spec.uncontrollable.iter().enumerate() {
                        vals[l.var() as usize] = su >> k & 1 == 1;
                    }
                    for (k, &l) in spec.controllable.iter().enumerate() {
                        vals[l.var() as usize] = sc >> k & 1 == 1;
                    }
                    for g in &gates {
                        vals[g.lhs.var() as usize] =
                            lit_val(&vals, g.rhs0) && lit_val(&vals, g.rhs1);
                    }
                    let mut next_q = 0u32;
                    for (k, &(_, nxt)) in spec.latches.iter().enumerate() {
                        next_q |= (lit_val(&vals, nxt) as u32) << k;
                    }
                    if bad_latch.is_none() {
                        let err_now = q >> err_bit & 1 == 1;
                        let raised = err_now || lit_val(&vals, spec.bad);
                        next_q |= (raised as u32) << err_bit;
                    }
                    let shift = nu + nc;
                    game.next[((q as usize) << shift) | ((su as usize) << nc) | sc as usize] =
                        next_q;
                }
            }
        }
        Ok(game)
    }

    /// Backward-induction attractor for the state-forcing player, with
    /// per-state ranks and the attractor-forcing move table.
    pub fn solve(&self) -> SolvedExplicit {
        let ns = self.num_states();
        let mut attractor = self.unsafe_states.clone();
        let mut rank = vec![u32::MAX; ns];
        for q in 0..ns {
            if attractor[q] {
                rank[q] = 0;
            }
        }
        let mut round = 0u32;
        loop {
            round += 1;
            let mut added = Vec::new();
            for q in 0..ns as u32 {
                if attractor[q as usize] {
                    continue;
                }
                let forced = (0..self.num_unc_moves() as u32).any(|su| {
                    (0..self.num_ctrl_moves() as u32)
                        .all(|sc| attractor[self.next_state(q, su, sc) as usize])
                });
                if forced {
                    added.push(q);
                }
            }
            if added.is_empty() {
                break;
            }
            for q in added {
                attractor[q as usize] = true;
                rank[q as usize] = round;
            }
        }
        let mut moves = vec![0u64; ns];
        for q in 0..ns as u32 {
            if !attractor[q as usize] {
                continue;
            }
            for su in 0..self.num_unc_moves() as u32 {
                let forces = (0..self.num_ctrl_moves() as u32)
                    .all(|sc| attractor[self.next_state(q, su, sc) as usize]);
                if forces {
                    moves[q as usize] |= 1u64 << su;
                }
            }
        }
        let adam_wins = attractor[self.init as usize];
        SolvedExplicit { game: self.clone(), attractor, rank, moves, adam_wins }
    }
}

/// If the error output is a latch literal, its latch index and negation.
/// Shared definition of the game's unsafe-state set; the evaluation paths
/// on either side of it stay independent.
pub fn bad_latch_index(spec: &CircuitSpec) -> Option<(usize, bool)> {
    if spec.bad.is_const() {
        return None;
    }
    spec.latches
        .iter()
        .position(|(cur, _)| cur.var() == spec.bad.var())
        .map(|idx| (idx, spec.bad.is_negated()))
}

/// Solved explicit game: attractor, ranks, and the move table.
#[derive(Debug, Clone)]
pub struct SolvedExplicit {
    pub game: ExplicitGame,
    /// States from which the environment forces the error.
    pub attractor: Vec<bool>,
    /// Attractor round that added each state (0 for unsafe states).
    pub rank: Vec<u32>,
    /// Bitmask over uncontrollable moves that keep every controllable reply
    /// inside the attractor; meaningful for attractor states.
    pub moves: Vec<u64>,
    pub adam_wins: bool,
}

impl SolvedExplicit {
    fn closure(&self, expand: impl Fn(&Self, u32) -> u64) -> Vec<bool> {
        let ns = self.game.num_states();
        let mut seen = vec![false; ns];
        if !self.attractor[self.game.init as usize] {
            return seen;
        }
        let mut stack = vec![self.game.init];
        seen[self.game.init as usize] = true;
        while let Some(q) = stack.pop() {
            let mask = expand(self, q);
            for su in 0..self.game.num_unc_moves() as u32 {
                if mask >> su & 1 == 0 {
                    continue;
                }
                for sc in 0..self.game.num_ctrl_moves() as u32 {
                    let nq = self.game.next_state(q, su, sc);
                    if !seen[nq as usize] {
                        seen[nq as usize] = true;
                        stack.push(nq);
                    }
                }
            }
        }
        seen
    }

    /// Forward closure from the initial state over the attractor-forcing
    /// move table. Contains every state on plays of winning environment
    /// strategies; empty on realizable instances.
    pub fn reach_winning(&self) -> Vec<bool> {
        self.closure(|s, q| s.moves[q as usize])
    }

    /// Conservative variant: only strictly rank-decreasing moves, stopping
    /// at the first error visit. Every state here lies on a play prefix of
    /// the rank-decreasing winning strategy, so the result is a subset of
    /// [`Self::reach_winning`] and of any faithful notion of "reachable
    /// while the environment wins".
    pub fn reach_winning_under(&self) -> Vec<bool> {
        self.closure(|s, q| {
            let qu = q as usize;
            if s.game.unsafe_states[qu] || !s.attractor[qu] {
                return 0;
            }
            let mut mask = 0u64;
            for su in 0..s.game.num_unc_moves() as u32 {
                let good = (0..s.game.num_ctrl_moves() as u32).all(|sc| {
                    let nq = s.game.next_state(q, su, sc) as usize;
                    s.attractor[nq] && s.rank[nq] < s.rank[qu]
                });
                if good {
                    mask |= 1u64 << su;
                }
            }
            mask
        })
    }
}

/// Shape limits for [`random_circuit`].
#[derive(Debug, Clone, Copy)]
pub struct RandomCircuitCfg {
    pub max_latches: usize,
    pub max_unc: usize,
    pub max_ctrl: usize,
    pub max_gates: usize,
}

impl Default for RandomCircuitCfg {
    fn default() -> Self {
        RandomCircuitCfg { max_latches: 6, max_unc: 2, max_ctrl: 2, max_gates: 12 }
    }
}

/// Deterministic random specification circuit for the given seed: a small
/// latch bank with random next-state cones and a random error output, biased
/// half the time toward an already-latched error signal.
pub fn random_circuit(seed: u64, cfg: RandomCircuitCfg) -> AigFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nl = rng.gen_range(1..=cfg.max_latches.max(1));
    let nu = rng.gen_range(0..=cfg.max_unc);
    let nc = rng.gen_range(0..=cfg.max_ctrl);
    let ng = rng.gen_range(0..=cfg.max_gates);

    let ni = nu + nc;
    let input_vars: Vec<u32> = (1..=ni as u32).collect();
    let latch_vars: Vec<u32> = (ni as u32 + 1..=(ni + nl) as u32).collect();
    let first_gate = (ni + nl) as u32 + 1;

    let mut file = AigFile {
        max_var: (ni + nl + ng) as u32,
        ..Default::default()
    };
    for (k, &v) in input_vars.iter().enumerate() {
        file.inputs.push(Lit(v << 1));
        file.input_names.push(Some(if k < nu {
            format!("u{k}")
        } else {
            format!("controllable_c{}", k - nu)
        }));
    }

    // any literal over variables defined before `limit` (exclusive)
    let pick_lit = |rng: &mut ChaCha8Rng, limit: u32| -> Lit {
        if rng.gen_bool(0.05) {
            return Lit(rng.gen_range(0..=1));
        }
        let var = rng.gen_range(1..limit);
        Lit::from_var(var, rng.gen_bool(0.5))
    };

    for g in 0..ng as u32 {
        let lhs = first_gate + g;
        let rhs0 = pick_lit(&mut rng, lhs);
        let rhs1 = pick_lit(&mut rng, lhs);
        file.ands.push(AndGate { lhs: Lit(lhs << 1), rhs0, rhs1 });
    }
    let any_var_limit = file.max_var + 1;
    for (k, &v) in latch_vars.iter().enumerate() {
        let next = pick_lit(&mut rng, any_var_limit);
        file.latches.push((Lit(v << 1), next));
        file.latch_names.push(Some(format!("x{k}")));
    }
    let bad = if rng.gen_bool(0.5) {
        // latched error: bias to positive phase as real suites have
        let v = latch_vars[rng.gen_range(0..nl)];
        Lit::from_var(v, rng.gen_bool(0.2))
    } else {
        pick_lit(&mut rng, any_var_limit)
    };
    file.outputs.push(bad);
    file.output_names.push(Some("bad".into()));
    file
}
