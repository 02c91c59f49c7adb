//! Controller construction for realizable games: the safe region, the
//! most permissive controller relation, incremental determinization with
//! don't-care minimization, and lowering of the resulting functions to
//! and-inverter gates.

use std::collections::HashMap;

use log::debug;

use crate::absgame::{QuasiDomain, QuasiStrategy};
use crate::aiger::{GateNetwork, NetLit};
use crate::bdd::{BddRef, Var};
use crate::game::{GameError, GameResult, Limits, SymbolicGame};

/// The set of states from which the controller can keep the play safe
/// forever: the greatest fixpoint of `cpre` inside the safe complement of
/// `losing_overapprox`.
///
/// `losing_overapprox` must be contained in the environment's attractor
/// of the unsafe states — the classic solver's fixpoint qualifies, and so
/// does the concretized under-approximation the refinement solver
/// returns. Intersecting with the safe states directly makes the result
/// independent of how much of the (unreachable) unsafe area the
/// approximation covers.
pub fn winning_region(
    game: &mut SymbolicGame,
    losing_overapprox: BddRef,
    limits: &Limits,
) -> GameResult<BddRef> {
    let not_losing = game.manager.not(losing_overapprox)?;
    let not_unsafe = game.manager.not(game.error_now)?;
    let seed = game.manager.and(not_losing, not_unsafe)?;
    let region = game.cpre_fix(seed, limits)?;
    if !game.init_in(region) {
        return Err(GameError::InitNotWinning);
    }
    Ok(region)
}

/// The most permissive controller relation over `(L, X_u, X_c)`: inside
/// `region` exactly the replies whose successor stays in `region`, and
/// everything outside it (the play never gets there).
///
/// When `region` is closed under `cpre`, the reply slice is nonempty for
/// every state of the region and every uncontrollable move.
pub fn eve_quasi_strategy(
    game: &mut SymbolicGame,
    region: BddRef,
) -> GameResult<QuasiStrategy> {
    let subst: Vec<(Var, BddRef)> = game
        .blocks
        .latch_now
        .iter()
        .copied()
        .zip(game.f_l.iter().copied())
        .collect();
    let next_inside = game.manager.compose(region, &subst)?;
    let outside = game.manager.not(region)?;
    let relation = game.manager.or(next_inside, outside)?;
    Ok(QuasiStrategy { relation, domain: QuasiDomain::ConcreteEve })
}

/// A deterministic controller: one function per controllable input over
/// the latches and uncontrollable inputs, plus its gate-network lowering.
#[derive(Debug, Clone)]
pub struct Controller {
    /// Per controllable input, in declaration order: the input's value as
    /// a function of `(L, X_u)`.
    pub funcs: Vec<BddRef>,
    /// The same functions lowered to and-inverter networks.
    pub networks: Vec<GateNetwork>,
    /// Total two-input gate count across all networks.
    pub gates: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DetOpts {
    /// Restrict the negated zero-cofactor instead of the one-cofactor
    /// when minimizing against the care set; both agree on care rows.
    pub alt_restrict: bool,
    /// Assert the determinization loop invariants after every iteration.
    pub check_invariants: bool,
}

/// Checks the three loop invariants after processing `processed` inputs:
/// the relation stays inside the original one on `r`, it keeps a reply
/// for every input valuation, and it is functional in every processed
/// controllable.
fn check_det_invariants(
    game: &mut SymbolicGame,
    lambda0: BddRef,
    lam: BddRef,
    r: BddRef,
    processed: usize,
) -> GameResult<()> {
    let on_r = game.manager.and(r, lam)?;
    assert!(
        game.manager.leq(on_r, lambda0)?,
        "determinized relation escaped the original on the care region"
    );
    let ctrl = game.blocks.ctrl.clone();
    let sat = game.manager.exists(&ctrl, lam)?;
    assert!(game.manager.is_one(sat), "relation lost all replies somewhere");
    for &x in &ctrl[..processed] {
        let others: Vec<Var> = ctrl.iter().copied().filter(|&v| v != x).collect();
        let x_bdd = game.manager.var_bdd(x)?;
        let nx = game.manager.not(x_bdd)?;
        let with_pos = game.manager.and(lam, x_bdd)?;
        let with_neg = game.manager.and(lam, nx)?;
        let pos = game.manager.exists(&others, with_pos)?;
        let neg = game.manager.exists(&others, with_neg)?;
        let both = game.manager.and(pos, neg)?;
        let still_free = game.manager.exists(&[x], both)?;
        assert!(
            game.manager.is_zero(still_free),
            "relation is not functional in a processed controllable"
        );
    }
    Ok(())
}

/// Extracts a deterministic controller from a permissive relation, one
/// controllable input at a time in declaration order.
///
/// For each input the candidate function is read off the relation with
/// the other controllables quantified away; where exactly one phase is
/// allowed on `r` the value is forced, everywhere else it is a don't-care
/// filled in by the restrict operator to keep the function small. The
/// relation is then narrowed to that choice before the next input.
///
/// `r` must be a set of safe states (it pins the synthetic error latch,
/// when present, to zero — the extracted functions never mention it).
pub fn det_strat(
    game: &mut SymbolicGame,
    lambda: &QuasiStrategy,
    r: BddRef,
    opts: &DetOpts,
) -> GameResult<Controller> {
    assert_eq!(lambda.domain, QuasiDomain::ConcreteEve);
    if game.added_err_latch {
        let err_var = game.blocks.latch_now[game.num_latches() - 1];
        let err = game.manager.var_bdd(err_var)?;
        let overlap = game.manager.and(r, err)?;
        debug_assert!(game.manager.is_zero(overlap));
    }
    let lambda0 = lambda.relation;
    let mut lam = lambda0;
    let ctrl = game.blocks.ctrl.clone();
    let mut funcs = Vec::with_capacity(ctrl.len());
    for (i, &x) in ctrl.iter().enumerate() {
        let others: Vec<Var> = ctrl.iter().copied().filter(|&v| v != x).collect();
        let f = game.manager.exists(&others, lam)?;
        let one = game.manager.one();
        let zero = game.manager.zero();
        let f_pos = game.manager.compose(f, &[(x, one)])?;
        let f_neg = game.manager.compose(f, &[(x, zero)])?;
        let not_pos = game.manager.not(f_pos)?;
        let not_neg = game.manager.not(f_neg)?;
        let forced = game.manager.or(not_pos, not_neg)?;
        let care = game.manager.and(r, forced)?;
        let mut g = if opts.alt_restrict {
            game.manager.restrict(not_neg, care)?
        } else {
            game.manager.restrict(f_pos, care)?
        };
        if opts.check_invariants {
            // On the care rows the restriction must not have changed the
            // forced value.
            let diff = game.manager.xor(g, f_pos)?;
            let on_care = game.manager.and(care, diff)?;
            assert!(game.manager.is_zero(on_care), "restrict changed a care row");
        }
        if game.added_err_latch {
            // The synthetic error latch has no circuit variable to lower
            // to; it is constantly zero on every care row and on every
            // state a winning controller can reach, so substituting the
            // constant changes nothing observable.
            let err_var = game.blocks.latch_now[game.num_latches() - 1];
            g = game.manager.compose(g, &[(err_var, zero)])?;
        }
        let x_bdd = game.manager.var_bdd(x)?;
        let chosen = game.manager.iff(x_bdd, g)?;
        lam = game.manager.and(lam, chosen)?;
        let sat = game.manager.exists(&ctrl, lam)?;
        if !game.manager.leq(r, sat)? {
            return Err(GameError::EmptyChoice);
        }
        if opts.check_invariants {
            check_det_invariants(game, lambda0, lam, r, i + 1)?;
        }
        funcs.push(g);
    }
    let mut networks = Vec::with_capacity(funcs.len());
    let mut gates = 0;
    for &g in &funcs {
        let net = bdd_to_gates(game, g);
        gates += net.gate_count();
        networks.push(net);
    }
    debug!("controller extracted: {} functions, {} gates", funcs.len(), gates);
    Ok(Controller { funcs, networks, gates })
}

/// Latch update functions with the controller substituted for the
/// controllable inputs.
fn controlled_updates(
    game: &mut SymbolicGame,
    ctrl: &Controller,
) -> GameResult<Vec<BddRef>> {
    let subst: Vec<(Var, BddRef)> = game
        .blocks
        .ctrl
        .iter()
        .copied()
        .zip(ctrl.funcs.iter().copied())
        .collect();
    let mut out = Vec::with_capacity(game.f_l.len());
    for k in 0..game.f_l.len() {
        let f = game.f_l[k];
        out.push(game.manager.compose(f, &subst)?);
    }
    Ok(out)
}

/// Re-extracts the controller with the care set narrowed to the states
/// the first controller actually reaches, giving the restrict operator
/// more freedom. Returns the new controller and the reachable set.
pub fn rerun_with_reachable(
    game: &mut SymbolicGame,
    lambda: &QuasiStrategy,
    first: &Controller,
    opts: &DetOpts,
    limits: &Limits,
) -> GameResult<(Controller, BddRef)> {
    let fs = controlled_updates(game, first)?;
    let init = game.init;
    let reach = game.reachable(init, &fs, limits)?;
    let second = det_strat(game, lambda, reach, opts)?;
    Ok((second, reach))
}

/// One step-by-step run of the controlled circuit into the unsafe set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    /// Latch valuations, first the initial state, last an unsafe state.
    pub states: Vec<Vec<bool>>,
    /// Uncontrollable input valuation taken from each state but the last.
    pub moves: Vec<Vec<bool>>,
}

/// Result of model-checking a controller against the circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Safe,
    Counterexample(Trace),
}

/// Extracts a full valuation of `vars` from a satisfying cube of `f`,
/// defaulting unmentioned variables to false.
fn pick_valuation(
    game: &SymbolicGame,
    f: BddRef,
    vars: &[Var],
) -> Option<Vec<Vec<bool>>> {
    let cube = game.manager.pick_cube(f)?;
    let lookup: HashMap<Var, bool> = cube.into_iter().collect();
    Some(vec![vars
        .iter()
        .map(|v| lookup.get(v).copied().unwrap_or(false))
        .collect()])
}

/// Substitutes the controller into the circuit and model-checks safety by
/// forward image iteration. Returns a shortest run into the unsafe set
/// when one exists; its states are pairwise distinct.
pub fn verify_controller(
    game: &mut SymbolicGame,
    ctrl: &Controller,
    limits: &Limits,
) -> GameResult<Verdict> {
    let fs = controlled_updates(game, ctrl)?;
    let mut layers = vec![game.init];
    let mut seen = game.init;
    let error_layer = loop {
        if limits.expired() {
            return Err(GameError::Timeout);
        }
        let frontier = *layers.last().unwrap();
        let hit = game.manager.and(frontier, game.error_now)?;
        if !game.manager.is_zero(hit) {
            break hit;
        }
        let img = game.image(frontier, &fs)?;
        let not_seen = game.manager.not(seen)?;
        let fresh = game.manager.and(img, not_seen)?;
        if game.manager.is_zero(fresh) {
            return Ok(Verdict::Safe);
        }
        seen = game.manager.or(seen, fresh)?;
        layers.push(fresh);
    };
    // Walk the layers backwards, fixing one concrete state per layer and
    // the uncontrollable move that links consecutive ones.
    let latch_vars = game.blocks.latch_now.clone();
    let unc_vars = game.blocks.unc.clone();
    let mut states: Vec<Vec<bool>> = Vec::with_capacity(layers.len());
    let mut moves: Vec<Vec<bool>> = Vec::with_capacity(layers.len() - 1);
    let picked = pick_valuation(game, error_layer, &latch_vars).unwrap();
    states.push(picked.into_iter().next().unwrap());
    for i in (0..layers.len() - 1).rev() {
        let target = states.last().unwrap().clone();
        let mut rel = layers[i];
        for (k, &bit) in target.iter().enumerate() {
            let mut f = fs[k];
            if !bit {
                f = game.manager.not(f)?;
            }
            rel = game.manager.and(rel, f)?;
        }
        let cube = game.manager.pick_cube(rel).expect("layer must have a predecessor");
        let lookup: HashMap<Var, bool> = cube.into_iter().collect();
        let state: Vec<bool> = latch_vars
            .iter()
            .map(|v| lookup.get(v).copied().unwrap_or(false))
            .collect();
        let mv: Vec<bool> = unc_vars
            .iter()
            .map(|v| lookup.get(v).copied().unwrap_or(false))
            .collect();
        states.push(state);
        moves.push(mv);
    }
    states.reverse();
    moves.reverse();
    Ok(Verdict::Counterexample(Trace { states, moves }))
}

/// Lowers a function over the circuit variables to a two-input
/// and-inverter network by Shannon decomposition along the variable
/// order, with one shared subnetwork per distinct node.
///
/// Must not mention controllable variables or the synthetic error latch;
/// every support variable needs a backing circuit variable.
pub fn bdd_to_gates(game: &SymbolicGame, f: BddRef) -> GateNetwork {
    let mut var_map: HashMap<Var, u32> = HashMap::new();
    for (j, &v) in game.blocks.unc.iter().enumerate() {
        var_map.insert(v, game.spec.uncontrollable[j].var());
    }
    for (k, &(lit, _)) in game.spec.latches.iter().enumerate() {
        var_map.insert(game.blocks.latch_now[k], lit.var());
    }
    let mut net = GateNetwork { gates: Vec::new(), output: NetLit::FALSE };
    let mut memo: HashMap<BddRef, NetLit> = HashMap::new();
    net.output = lower_node(game, f, &var_map, &mut net.gates, &mut memo);
    net
}

fn lower_node(
    game: &SymbolicGame,
    f: BddRef,
    var_map: &HashMap<Var, u32>,
    gates: &mut Vec<(NetLit, NetLit)>,
    memo: &mut HashMap<BddRef, NetLit>,
) -> NetLit {
    if game.manager.is_zero(f) {
        return NetLit::FALSE;
    }
    if game.manager.is_one(f) {
        return NetLit::TRUE;
    }
    if let Some(&hit) = memo.get(&f) {
        return hit;
    }
    let (v, lo, hi) = game.manager.node_parts(f).unwrap();
    let var = NetLit::aig(*var_map.get(&v).expect("no circuit variable backs this var"));
    let lo_lit = lower_node(game, lo, var_map, gates, memo);
    let hi_lit = lower_node(game, hi, var_map, gates, memo);
    let push = |a: NetLit, b: NetLit, gates: &mut Vec<(NetLit, NetLit)>| -> NetLit {
        gates.push((a, b));
        NetLit::node(gates.len() as u32 - 1)
    };
    // if v then hi else lo, with the shortcuts that keep single-branch
    // nodes at one gate.
    let out = if hi_lit == NetLit::TRUE && lo_lit == NetLit::FALSE {
        var
    } else if hi_lit == NetLit::FALSE && lo_lit == NetLit::TRUE {
        var.negate()
    } else if lo_lit == NetLit::FALSE {
        push(var, hi_lit, gates)
    } else if hi_lit == NetLit::FALSE {
        push(var.negate(), lo_lit, gates)
    } else if lo_lit == NetLit::TRUE {
        push(var, hi_lit.negate(), gates).negate()
    } else if hi_lit == NetLit::TRUE {
        push(var.negate(), lo_lit.negate(), gates).negate()
    } else {
        let t = push(var, hi_lit, gates).negate();
        let e = push(var.negate(), lo_lit, gates).negate();
        push(t, e, gates).negate()
    };
    memo.insert(f, out);
    out
}
