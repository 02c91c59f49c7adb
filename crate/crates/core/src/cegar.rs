//! Abstraction-refinement solver: play the safety game on a localization
//! abstraction of the circuit, and make one more latch visible only when
//! the abstract verdict is inconclusive.
//!
//! Each round solves two abstract fixpoints — an under-approximation of
//! the environment's losing attractor and an over-approximation restricted
//! to an abstract reachability cover — and then validates the frontier
//! with a single concrete predecessor step guided by the environment's
//! abstract quasi-strategy. Only when that step escapes the abstract
//! under-approximation does the abstraction grow.

use log::debug;

use crate::absgame::{
    upre_concrete_guided, AbstractGame, PredicateSet, QuasiStrategy,
};
use crate::bdd::{BddError, BddRef, Var};
use crate::game::{GameError, GameResult, Limits, Status, SymbolicGame};
use crate::oracle::ExplicitGame;

/// Which implementation the abstract fixpoint operators use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbsImpl {
    /// Build the abstract transition relation once per round and quantify
    /// against it; successor images are exact over the abstraction.
    Monolithic,
    /// Partitioned operators via per-predicate one-step images; successor
    /// images are over-approximated and no abstract transition relation
    /// is ever built.
    Partitioned,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CegarOpts {
    /// Cross-check the per-round soundness invariants against the
    /// explicit-state reference solver. Honored only when the game fits
    /// within the reference solver's size limits; meant for tests.
    pub check_invariants: bool,
}

/// Outcome of the abstraction-refinement solver.
#[derive(Debug, Clone, Copy)]
pub struct CegarResult {
    pub status: Status,
    /// A subset of the concrete losing fixpoint that covers every unsafe
    /// state the environment can reach under optimal play. Safe to
    /// subtract from the safe region when extracting a controller.
    pub losing: BddRef,
    /// Total abstract fixpoint steps across all rounds.
    pub iterations: u32,
    /// Abstraction rounds executed (one plus the number of refinements).
    pub rounds: u32,
}

#[derive(Default)]
struct Stats {
    iterations: u32,
    rounds: u32,
}

/// Ground truth from the explicit-state solver, used to validate the
/// per-round invariants on games small enough to enumerate.
struct OracleCheck {
    /// An under-approximation of the states visited by optimal
    /// environment play (empty when the environment loses).
    reach_under: Vec<bool>,
    /// The exact environment attractor of the unsafe states.
    attractor: Vec<bool>,
    unsafe_states: Vec<bool>,
}

fn build_oracle(game: &SymbolicGame) -> Option<OracleCheck> {
    let sol = ExplicitGame::from_circuit(&game.spec).ok()?.solve();
    Some(OracleCheck {
        reach_under: sol.reach_winning_under(),
        attractor: sol.attractor,
        unsafe_states: sol.game.unsafe_states,
    })
}

fn assert_subset(sub: &[bool], sup: &[bool], what: &str) {
    for (q, (&a, &b)) in sub.iter().zip(sup.iter()).enumerate() {
        assert!(!a || b, "{what} violated at state {q}");
    }
}

/// Invariants holding at round entry: the abstract restriction covers the
/// environment's reachable states, and the abstract unsafe set sits
/// between the reachable unsafe states and the concrete attractor.
fn check_round_entry(
    game: &mut SymbolicGame,
    a: &AbstractGame,
    chk: &OracleCheck,
) -> GameResult<()> {
    let r_conc = a.gamma(game, a.r_abs)?;
    let r_set = game.enumerate_states(r_conc);
    assert_subset(&chk.reach_under, &r_set, "reach covered by restriction");
    let u_conc = a.gamma(game, a.u_abs)?;
    let u_set = game.enumerate_states(u_conc);
    let reached_unsafe: Vec<bool> = chk
        .unsafe_states
        .iter()
        .zip(chk.reach_under.iter())
        .map(|(&u, &r)| u && r)
        .collect();
    assert_subset(&reached_unsafe, &u_set, "reached unsafe in abstract unsafe");
    assert_subset(&u_set, &chk.attractor, "abstract unsafe inside attractor");
    Ok(())
}

/// The under-approximate fixpoint obeys the same sandwich as the abstract
/// unsafe set it grew from.
fn check_w_under(
    game: &mut SymbolicGame,
    a: &AbstractGame,
    w_u: BddRef,
    chk: &OracleCheck,
) -> GameResult<()> {
    let w_conc = a.gamma(game, w_u)?;
    let w_set = game.enumerate_states(w_conc);
    let reached_unsafe: Vec<bool> = chk
        .unsafe_states
        .iter()
        .zip(chk.reach_under.iter())
        .map(|(&u, &r)| u && r)
        .collect();
    assert_subset(&reached_unsafe, &w_set, "reached unsafe in under fixpoint");
    assert_subset(&w_set, &chk.attractor, "under fixpoint inside attractor");
    Ok(())
}

/// Every state optimal environment play can visit concretizes into the
/// over-approximate fixpoint.
fn check_w_over(
    game: &mut SymbolicGame,
    a: &AbstractGame,
    w_o: BddRef,
    chk: &OracleCheck,
) -> GameResult<()> {
    let w_conc = a.gamma(game, w_o)?;
    let w_set = game.enumerate_states(w_conc);
    assert_subset(&chk.reach_under, &w_set, "reach covered by over fixpoint");
    Ok(())
}

fn fix_under(
    game: &mut SymbolicGame,
    a: &mut AbstractGame,
    variant: AbsImpl,
    limits: &Limits,
    stats: &mut Stats,
) -> GameResult<BddRef> {
    let mut x = game.manager.zero();
    loop {
        if limits.expired() {
            return Err(GameError::Timeout);
        }
        let step = match variant {
            AbsImpl::Monolithic => a.upre_under(game, x)?,
            AbsImpl::Partitioned => a.upre_under_part(game, x)?,
        };
        let grown = game.manager.or(a.u_abs, step)?;
        let next = game.manager.and(grown, a.r_abs)?;
        stats.iterations += 1;
        if next == x {
            return Ok(x);
        }
        x = next;
    }
}

fn fix_over(
    game: &mut SymbolicGame,
    a: &mut AbstractGame,
    variant: AbsImpl,
    seed: BddRef,
    limits: &Limits,
    stats: &mut Stats,
) -> GameResult<BddRef> {
    let mut x = game.manager.zero();
    loop {
        if limits.expired() {
            return Err(GameError::Timeout);
        }
        let step = match variant {
            AbsImpl::Monolithic => a.upre_over(game, x)?,
            AbsImpl::Partitioned => a.upre_over_part(game, x)?,
        };
        let grown = game.manager.or(seed, step)?;
        let next = game.manager.and(grown, a.r_abs)?;
        stats.iterations += 1;
        if next == x {
            return Ok(x);
        }
        x = next;
    }
}

fn fix_post(
    game: &mut SymbolicGame,
    a: &mut AbstractGame,
    variant: AbsImpl,
    quasi: &QuasiStrategy,
    limits: &Limits,
    stats: &mut Stats,
) -> GameResult<BddRef> {
    let mut x = game.manager.zero();
    loop {
        if limits.expired() {
            return Err(GameError::Timeout);
        }
        let step = match variant {
            AbsImpl::Monolithic => a.post_abs(game, x, quasi)?,
            AbsImpl::Partitioned => a.post_over_part(game, x, quasi)?,
        };
        let grown = game.manager.or(a.init_abs, step)?;
        let next = game.manager.and(grown, a.r_abs)?;
        stats.iterations += 1;
        if next == x {
            return Ok(x);
        }
        x = next;
    }
}

/// The circuit variable backing a game latch, used as the refinement
/// tie-break order; the synthetic error latch sorts last.
fn circuit_var(game: &SymbolicGame, latch_idx: usize) -> u32 {
    game.spec.latches.get(latch_idx).map_or(u32::MAX, |&(lit, _)| lit.var())
}

/// Picks one more latch to make visible and rebuilds the predicate set
/// around the new unsafe and reach definitions.
///
/// Candidates are the invisible latches whose value alone does not decide
/// membership in `u_new` (neither the latch nor its negation implies it);
/// among those, latches whose update function reads an already-visible
/// latch are preferred, and ties break toward the smallest circuit
/// variable. When no candidate qualifies, any invisible latch serves;
/// when every latch is already visible, refinement is impossible.
pub fn refine(
    game: &mut SymbolicGame,
    preds: &PredicateSet,
    u_new: BddRef,
    r_new: BddRef,
) -> GameResult<PredicateSet> {
    let invisible: Vec<usize> =
        (0..game.num_latches()).filter(|&k| !preds.is_visible(k)).collect();
    if invisible.is_empty() {
        return Err(GameError::NoLatchAvailable);
    }
    let mut interesting = Vec::new();
    for &k in &invisible {
        let lit = game.manager.var_bdd(game.blocks.latch_now[k])?;
        let neg = game.manager.not(lit)?;
        if !game.manager.leq(lit, u_new)? && !game.manager.leq(neg, u_new)? {
            interesting.push(k);
        }
    }
    let visible_vars: Vec<Var> = preds
        .visible_latches
        .iter()
        .map(|&v| game.blocks.latch_now[v])
        .collect();
    let useful: Vec<usize> = interesting
        .iter()
        .copied()
        .filter(|&k| {
            game.manager
                .support(game.f_l[k])
                .iter()
                .any(|v| visible_vars.contains(v))
        })
        .collect();
    let pool = if !useful.is_empty() {
        &useful
    } else if !interesting.is_empty() {
        &interesting
    } else {
        &invisible
    };
    let chosen = pool.iter().copied().min_by_key(|&k| circuit_var(game, k)).unwrap();
    debug!(
        "refine: latch {} ({}) becomes visible ({} interesting, {} useful)",
        chosen,
        game.latch_names[chosen],
        interesting.len(),
        useful.len()
    );
    let mut next = preds.clone();
    next.set_unsafe_def(u_new);
    next.set_reach_def(r_new);
    next.add_latch(game, chosen)?;
    Ok(next)
}

fn run(
    game: &mut SymbolicGame,
    variant: AbsImpl,
    limits: &Limits,
    stats: &mut Stats,
    oracle: Option<&OracleCheck>,
) -> GameResult<(Status, BddRef)> {
    let one = game.manager.one();
    let zero = game.manager.zero();
    let error_now = game.error_now;
    let mut preds = PredicateSet::initial(game, error_now, one)?;
    // Concrete carry of the reach restriction between rounds; the next
    // round re-abstracts it under the grown predicate set.
    let mut r_carry: Option<BddRef> = None;
    let num_latches = game.num_latches();
    loop {
        stats.rounds += 1;
        // Every refinement makes one more latch visible, so the round
        // count is bounded by the latch count plus the initial round.
        assert!(
            stats.rounds as usize <= num_latches + 1,
            "refinement bound exceeded"
        );
        debug!(
            "round {}: {} predicates, visible latches {:?}",
            stats.rounds,
            preds.len(),
            preds.visible_latches
        );
        let mut a = AbstractGame::new(game, preds.clone())?;
        if variant == AbsImpl::Monolithic {
            a.build_t_abs(game)?;
        }
        if let Some(rc) = r_carry {
            a.r_abs = a.alpha_over(game, rc)?;
        }
        if let Some(chk) = oracle {
            check_round_entry(game, &a, chk)?;
        }
        let w_u = fix_under(game, &mut a, variant, limits, stats)?;
        if let Some(chk) = oracle {
            check_w_under(game, &a, w_u, chk)?;
        }
        // The initial cell inside the under-approximation is a concrete
        // proof that the environment wins.
        if game.manager.leq(a.init_abs, w_u)? {
            let losing = a.gamma(game, w_u)?;
            debug!("round {}: initial cell losing, unrealizable", stats.rounds);
            return Ok((Status::Unrealizable, losing));
        }
        let losing = a.gamma(game, w_u)?;
        let mut quasi: Option<QuasiStrategy> = None;
        let mut prev = zero;
        while a.r_abs != prev {
            if limits.expired() {
                return Err(GameError::Timeout);
            }
            prev = a.r_abs;
            let w_o = fix_over(game, &mut a, variant, w_u, limits, stats)?;
            if let Some(chk) = oracle {
                check_w_over(game, &a, w_o, chk)?;
            }
            // The initial cell outside the over-approximation proves the
            // controller wins, restriction included.
            if !game.manager.leq(a.init_abs, w_o)? {
                debug!("round {}: initial cell safe, realizable", stats.rounds);
                return Ok((Status::Realizable, losing));
            }
            let q = a.adam_quasi_strategy(game, w_o)?;
            let narrowed = fix_post(game, &mut a, variant, &q, limits, stats)?;
            assert!(
                game.manager.leq(narrowed, a.r_abs)?,
                "reach restriction must shrink"
            );
            quasi = Some(q);
            a.r_abs = narrowed;
        }
        // Unreachable in practice — the restriction always keeps the
        // initial cell, so the loop body runs at least once — but a
        // missing strategy would mean nothing to validate against.
        let Some(q) = quasi else {
            return Ok((Status::Realizable, losing));
        };
        // One concrete predecessor step guided by the environment's
        // abstract quasi-strategy separates proof from artifact: if it
        // stays inside the concretized under-approximation, no concrete
        // escalation exists and the controller wins.
        let q_conc = a.gamma_quasi(game, &q)?;
        let r_conc = a.gamma(game, a.r_abs)?;
        let escalated = upre_concrete_guided(game, &q_conc, losing, r_conc)?;
        if game.manager.leq(escalated, losing)? {
            debug!("round {}: concrete step confirms abstraction", stats.rounds);
            return Ok((Status::Realizable, losing));
        }
        let u_new = game.manager.or(escalated, losing)?;
        // The unsafe approximation only ever grows.
        debug_assert!(game
            .manager
            .leq(a.preds.defs[PredicateSet::IDX_UNSAFE], u_new)?);
        preds = refine(game, &a.preds, u_new, r_conc)?;
        r_carry = Some(r_conc);
    }
}

/// Solves the safety game by abstraction refinement.
///
/// Starts from a three-predicate abstraction (initial states, unsafe
/// approximation, reach approximation) with no latch visible, and adds
/// one latch per round until the abstract game decides the concrete one.
/// Timeouts and node-table exhaustion are reported as statuses, with the
/// statistics gathered so far.
pub fn abs_synth(
    game: &mut SymbolicGame,
    variant: AbsImpl,
    opts: &CegarOpts,
    limits: &Limits,
) -> GameResult<CegarResult> {
    let oracle = if opts.check_invariants { build_oracle(game) } else { None };
    let zero = game.manager.zero();
    let mut stats = Stats::default();
    match run(game, variant, limits, &mut stats, oracle.as_ref()) {
        Ok((status, losing)) => Ok(CegarResult {
            status,
            losing,
            iterations: stats.iterations,
            rounds: stats.rounds,
        }),
        Err(GameError::Timeout) => Ok(CegarResult {
            status: Status::Timeout,
            losing: zero,
            iterations: stats.iterations,
            rounds: stats.rounds,
        }),
        Err(GameError::Bdd(BddError::NodeLimit { .. })) => Ok(CegarResult {
            status: Status::NodeLimit,
            losing: zero,
            iterations: stats.iterations,
            rounds: stats.rounds,
        }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use std::time::Duration;

    use super::*;
    use crate::aiger::{parse_aag, split_inputs};
    use crate::game::{EncodeOpts, SolveResult, UpreImpl};
    use crate::oracle::{random_circuit, ExplicitGame, RandomCircuitCfg};

    const DESK_SAFE: &str = "aag 5 2 1 1 2\n2\n4\n6 11\n6\n8 2 5\n10 7 9\n\
                             i0 u\ni1 controllable_c\nl0 e\no0 bad\n";
    const DESK_LOSING: &str =
        "aag 4 2 1 1 1\n2\n4\n6 9\n6\n8 7 3\ni0 u\ni1 controllable_c\nl0 e\no0 bad\n";

    fn encode_str(src: &str) -> SymbolicGame {
        let spec = split_inputs(&parse_aag(src).unwrap()).unwrap();
        SymbolicGame::encode(&spec, &EncodeOpts::default()).unwrap()
    }

    #[test]
    fn desk_examples_decide_without_refinement() {
        for variant in [AbsImpl::Monolithic, AbsImpl::Partitioned] {
            let mut game = encode_str(DESK_SAFE);
            let opts = CegarOpts { check_invariants: true };
            let res = abs_synth(&mut game, variant, &opts, &Limits::none()).unwrap();
            assert_eq!(res.status, Status::Realizable, "{variant:?}");
            assert_eq!(res.rounds, 1, "{variant:?}");
            assert!(!game.init_in(res.losing));

            let mut game = encode_str(DESK_LOSING);
            let res = abs_synth(&mut game, variant, &opts, &Limits::none()).unwrap();
            assert_eq!(res.status, Status::Unrealizable, "{variant:?}");
            assert_eq!(res.rounds, 1, "{variant:?}");
            assert!(game.init_in(res.losing));
        }
    }

    #[test]
    fn matches_oracle_and_classic_on_random_games() {
        let cfg = RandomCircuitCfg::default();
        let mut multi_round = 0u32;
        for seed in 0..150 {
            let file = random_circuit(seed, cfg);
            let spec = split_inputs(&file).unwrap();
            let expected = ExplicitGame::from_circuit(&spec).unwrap().solve().adam_wins;

            let mut game = SymbolicGame::encode(&spec, &EncodeOpts::default()).unwrap();
            let SolveResult { status: classic_status, losing: classic_losing, .. } =
                game.solve_classic(UpreImpl::Substitution, &Limits::none()).unwrap();
            assert_eq!(
                classic_status == Status::Unrealizable,
                expected,
                "classic disagrees with oracle on seed {seed}"
            );

            for variant in [AbsImpl::Monolithic, AbsImpl::Partitioned] {
                let opts = CegarOpts { check_invariants: true };
                let res = abs_synth(&mut game, variant, &opts, &Limits::none()).unwrap();
                assert_eq!(
                    res.status == Status::Unrealizable,
                    expected,
                    "{variant:?} disagrees with oracle on seed {seed}"
                );
                assert!(res.rounds as usize <= game.num_latches() + 1);
                if res.rounds > 1 {
                    multi_round += 1;
                }
                if res.status == Status::Unrealizable {
                    assert!(game.init_in(res.losing), "seed {seed}");
                }
                // The approximation stays inside the concrete losing
                // fixpoint whenever the classic solver completed it.
                if classic_status == Status::Realizable {
                    assert!(
                        game.manager.leq(res.losing, classic_losing).unwrap(),
                        "seed {seed} {variant:?}"
                    );
                }
            }
        }
        assert!(multi_round > 0, "corpus never exercised a refinement round");
    }

    /// Three latches: x0 feeds itself, x1 feeds itself, x2 reads x1.
    const REFINE_RIG: &str =
        "aag 4 1 3 1 0\n2\n4 4\n6 6\n8 6\n4\ni0 u\nl0 x0\nl1 x1\nl2 x2\no0 bad\n";

    #[test]
    fn refine_prefers_candidates_reading_visible_latches() {
        let mut game = encode_str(REFINE_RIG);
        let one = game.manager.one();
        let error_now = game.error_now;

        // x0 XOR x2: neither latch (nor a negation) implies membership,
        // so both are candidates; x1 stays uninteresting.
        let x0 = game.manager.var_bdd(game.blocks.latch_now[0]).unwrap();
        let x2 = game.manager.var_bdd(game.blocks.latch_now[2]).unwrap();
        let n0 = game.manager.not(x0).unwrap();
        let n2 = game.manager.not(x2).unwrap();
        let a = game.manager.and(x0, n2).unwrap();
        let b = game.manager.and(n0, x2).unwrap();
        let u_new = game.manager.or(a, b).unwrap();

        // With x1 visible, x2 reads a visible latch and wins despite its
        // larger circuit variable.
        let mut preds = PredicateSet::initial(&mut game, error_now, one).unwrap();
        preds.add_latch(&mut game, 1).unwrap();
        let next = refine(&mut game, &preds, u_new, one).unwrap();
        assert_eq!(next.visible_latches, vec![1, 2]);
        assert_eq!(next.defs[PredicateSet::IDX_UNSAFE], u_new);

        // With nothing visible, no candidate reads a visible latch and
        // the smallest circuit variable wins.
        let preds = PredicateSet::initial(&mut game, error_now, one).unwrap();
        let next = refine(&mut game, &preds, u_new, one).unwrap();
        assert_eq!(next.visible_latches, vec![0]);

        // A degenerate unsafe set leaves no candidate at all: fall back
        // to the smallest invisible latch.
        let mut preds = PredicateSet::initial(&mut game, error_now, one).unwrap();
        preds.add_latch(&mut game, 1).unwrap();
        let next = refine(&mut game, &preds, one, one).unwrap();
        assert_eq!(next.visible_latches, vec![1, 0]);

        // All latches visible: nothing left to refine with.
        let mut preds = PredicateSet::initial(&mut game, error_now, one).unwrap();
        for k in 0..3 {
            preds.add_latch(&mut game, k).unwrap();
        }
        let err = refine(&mut game, &preds, u_new, one).unwrap_err();
        assert!(matches!(err, GameError::NoLatchAvailable));
    }

    #[test]
    fn resource_limits_become_statuses() {
        for variant in [AbsImpl::Monolithic, AbsImpl::Partitioned] {
            let mut game = encode_str(DESK_SAFE);
            let limits = Limits::with_timeout(Duration::ZERO);
            let res =
                abs_synth(&mut game, variant, &CegarOpts::default(), &limits).unwrap();
            assert_eq!(res.status, Status::Timeout, "{variant:?}");

            let mut game = encode_str(DESK_SAFE);
            game.manager.set_node_limit(game.manager.node_count());
            let res = abs_synth(&mut game, variant, &CegarOpts::default(), &Limits::none())
                .unwrap();
            assert_eq!(res.status, Status::NodeLimit, "{variant:?}");
        }
    }
}
