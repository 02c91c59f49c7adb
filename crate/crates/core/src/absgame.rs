//! Predicate abstraction of safety games.
//!
//! Abstract states are valuations of a predicate set P; each predicate p
//! carries a definition f_p over the latch variables. Distinguished
//! predicates track the initial state, the current unsafe approximation,
//! and the current reachability approximation; localization predicates are
//! single latches made visible. The module provides the concretization and
//! abstraction maps, the abstract transition relation, over- and
//! under-approximating predecessor operators in both a monolithic and a
//! partitioned (per-predicate) form, quasi-strategy extraction, guided
//! concrete predecessors, and abstract successor operators.
//!
//! Predicate variables live in the same manager as the concrete game, so
//! mixed-block conjunctions (links, transition relations) are ordinary BDD
//! operations.

use crate::bdd::{BddRef, Var};
use crate::game::{GameError, GameResult, SymbolicGame};

/// Ordered predicate collection: indices 0..3 are the distinguished
/// initial/unsafe/reach predicates, the tail holds one localization
/// predicate per visible latch.
#[derive(Debug, Clone)]
pub struct PredicateSet {
    /// Definition f_p over the latch-now variables, index-parallel to the
    /// manager's predicate variable pairs.
    pub defs: Vec<BddRef>,
    /// Latch index backing each localization predicate, in predicate order
    /// (predicate index = `IDX_FIRST_LATCH + position`).
    pub visible_latches: Vec<usize>,
}

impl PredicateSet {
    pub const IDX_INIT: usize = 0;
    pub const IDX_UNSAFE: usize = 1;
    pub const IDX_REACH: usize = 2;
    pub const IDX_FIRST_LATCH: usize = 3;

    /// The three distinguished predicates: initial-state, unsafe
    /// approximation, reach approximation. No latches visible yet.
    pub fn initial(
        game: &mut SymbolicGame,
        unsafe_def: BddRef,
        reach_def: BddRef,
    ) -> GameResult<PredicateSet> {
        let set = PredicateSet {
            defs: vec![game.init, unsafe_def, reach_def],
            visible_latches: Vec::new(),
        };
        ensure_pred_vars(game, set.defs.len());
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn is_visible(&self, latch_idx: usize) -> bool {
        self.visible_latches.contains(&latch_idx)
    }

    /// Adds the localization predicate for one latch; returns its
    /// predicate index.
    pub fn add_latch(
        &mut self,
        game: &mut SymbolicGame,
        latch_idx: usize,
    ) -> GameResult<usize> {
        assert!(!self.is_visible(latch_idx), "latch already visible");
        let def = game.manager.var_bdd(game.blocks.latch_now[latch_idx])?;
        self.defs.push(def);
        self.visible_latches.push(latch_idx);
        ensure_pred_vars(game, self.defs.len());
        Ok(self.defs.len() - 1)
    }

    pub fn set_unsafe_def(&mut self, def: BddRef) {
        self.defs[Self::IDX_UNSAFE] = def;
    }

    pub fn set_reach_def(&mut self, def: BddRef) {
        self.defs[Self::IDX_REACH] = def;
    }
}

/// Grows the manager's predicate variable pool to at least `n` pairs.
fn ensure_pred_vars(game: &mut SymbolicGame, n: usize) {
    while game.blocks.pred_now.len() < n {
        let k = game.blocks.pred_now.len();
        game.blocks.pred_now.push(game.manager.new_var(format!("p{k}")));
        game.blocks.pred_next.push(game.manager.new_var(format!("p{k}'")));
    }
}

/// Which shape a quasi-strategy relation has.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuasiDomain {
    /// Environment moves over (P, X_u).
    AbstractAdam,
    /// Environment moves over (L, X_u).
    ConcreteAdam,
    /// Controller moves over (L, X_u, X_c).
    ConcreteEve,
}

/// A non-deterministic strategy: the set of allowed moves per state.
#[derive(Debug, Clone, Copy)]
pub struct QuasiStrategy {
    pub relation: BddRef,
    pub domain: QuasiDomain,
}

/// An abstraction of one concrete game under a predicate set, with cached
/// link formulas and the abstract transition relation.
///
/// The concrete game is passed into each operation rather than stored, so
/// the borrow stays local; all refs live in the concrete game's manager.
pub struct AbstractGame {
    pub preds: PredicateSet,
    /// Abstract transition relation over (P, X_u, X_c, P'), built on demand.
    pub t_abs: Option<BddRef>,
    /// Abstract unsafe set: the unsafe predicate variable.
    pub u_abs: BddRef,
    /// The cell of the initial state, as a full predicate valuation.
    pub init_abs: BddRef,
    /// Current abstract reachability restriction (starts at TRUE).
    pub r_abs: BddRef,
    link_now: Option<BddRef>,
    link_next: Option<BddRef>,
    /// Per-predicate one-step images psi_p = f_p[l ← f_l].
    psis: Option<Vec<BddRef>>,
}

impl AbstractGame {
    pub fn new(game: &mut SymbolicGame, preds: PredicateSet) -> GameResult<AbstractGame> {
        assert!(preds.len() >= PredicateSet::IDX_FIRST_LATCH, "distinguished predicates missing");
        ensure_pred_vars(game, preds.len());
        let u_abs = game.manager.var_bdd(game.blocks.pred_now[PredicateSet::IDX_UNSAFE])?;
        let mut a = AbstractGame {
            preds,
            t_abs: None,
            u_abs,
            init_abs: game.manager.zero(),
            r_abs: game.manager.one(),
            link_now: None,
            link_next: None,
            psis: None,
        };
        a.init_abs = a.alpha_over(game, game.init)?;
        Ok(a)
    }

    fn pred_now_vars<'g>(&self, game: &'g SymbolicGame) -> &'g [Var] {
        &game.blocks.pred_now[..self.preds.len()]
    }

    fn pred_next_vars<'g>(&self, game: &'g SymbolicGame) -> &'g [Var] {
        &game.blocks.pred_next[..self.preds.len()]
    }

    /// `⋀_p (p ⇔ f_p(L))`.
    fn link_now(&mut self, game: &mut SymbolicGame) -> GameResult<BddRef> {
        if let Some(l) = self.link_now {
            return Ok(l);
        }
        let mut link = game.manager.one();
        for i in (0..self.preds.len()).rev() {
            let pv = game.manager.var_bdd(game.blocks.pred_now[i])?;
            let bit = game.manager.iff(pv, self.preds.defs[i])?;
            link = game.manager.and(link, bit)?;
        }
        self.link_now = Some(link);
        Ok(link)
    }

    /// `⋀_p (p' ⇔ f_p(L'))`.
    fn link_next(&mut self, game: &mut SymbolicGame) -> GameResult<BddRef> {
        if let Some(l) = self.link_next {
            return Ok(l);
        }
        let to_next = game.blocks.now_to_next();
        let mut link = game.manager.one();
        for i in (0..self.preds.len()).rev() {
            let pv = game.manager.var_bdd(game.blocks.pred_next[i])?;
            let def_next = game.manager.rename(self.preds.defs[i], &to_next)?;
            let bit = game.manager.iff(pv, def_next)?;
            link = game.manager.and(link, bit)?;
        }
        self.link_next = Some(link);
        Ok(link)
    }

    fn psis(&mut self, game: &mut SymbolicGame) -> GameResult<Vec<BddRef>> {
        if let Some(ps) = &self.psis {
            return Ok(ps.clone());
        }
        let subst: Vec<(Var, BddRef)> = game
            .blocks
            .latch_now
            .iter()
            .copied()
            .zip(game.f_l.iter().copied())
            .collect();
        let mut ps = Vec::with_capacity(self.preds.len());
        for i in 0..self.preds.len() {
            ps.push(game.manager.compose(self.preds.defs[i], &subst)?);
        }
        self.psis = Some(ps.clone());
        Ok(ps)
    }

    /// Concretization `S^a(P)[p ← f_p(L)]`.
    pub fn gamma(&self, game: &mut SymbolicGame, s_abs: BddRef) -> GameResult<BddRef> {
        let subst: Vec<(Var, BddRef)> = self
            .pred_now_vars(game)
            .to_vec()
            .into_iter()
            .zip(self.preds.defs.iter().copied())
            .collect();
        Ok(game.manager.compose(s_abs, &subst)?)
    }

    /// Smallest abstract cover: `∃L: S(L) ∧ ⋀(p ⇔ f_p)`. The input may
    /// carry input-variable support; only latches are projected out.
    pub fn alpha_over(&mut self, game: &mut SymbolicGame, s: BddRef) -> GameResult<BddRef> {
        let link = self.link_now(game)?;
        let conj = game.manager.and(s, link)?;
        Ok(game.manager.exists(&game.blocks.latch_now, conj)?)
    }

    /// Largest abstract set entirely inside `s`: the complement dual of
    /// [`Self::alpha_over`].
    pub fn alpha_under(&mut self, game: &mut SymbolicGame, s: BddRef) -> GameResult<BddRef> {
        let ns = game.manager.not(s)?;
        let cover = self.alpha_over(game, ns)?;
        Ok(game.manager.not(cover)?)
    }

    /// Abstract transition relation
    /// `T^a = ∃L,L': T ∧ ⋀(p ⇔ f_p(L)) ∧ ⋀(p' ⇔ f_p(L'))`, cached.
    pub fn build_t_abs(&mut self, game: &mut SymbolicGame) -> GameResult<BddRef> {
        if let Some(t) = self.t_abs {
            return Ok(t);
        }
        let t = game.build_monolithic()?;
        let ln = self.link_now(game)?;
        let lx = self.link_next(game)?;
        let conj = game.manager.and(t, ln)?;
        let conj = game.manager.and(conj, lx)?;
        let e1 = game.manager.exists(&game.blocks.latch_now, conj)?;
        let t_abs = game.manager.exists(&game.blocks.latch_next, e1)?;
        self.t_abs = Some(t_abs);
        Ok(t_abs)
    }

    fn pred_to_next(&self, game: &SymbolicGame) -> Vec<(Var, Var)> {
        self.pred_now_vars(game)
            .iter()
            .copied()
            .zip(self.pred_next_vars(game).iter().copied())
            .collect()
    }

    fn pred_to_now(&self, game: &SymbolicGame) -> Vec<(Var, Var)> {
        self.pred_to_next(game).into_iter().map(|(n, x)| (x, n)).collect()
    }

    /// Over-approximating abstract predecessors:
    /// `∃X_u ∀X_c ∃P': T^a ∧ S^a(P')`.
    pub fn upre_over(&mut self, game: &mut SymbolicGame, s_abs: BddRef) -> GameResult<BddRef> {
        let t = self.t_abs.ok_or(GameError::MissingTransitionRelation)?;
        let s_next = game.manager.rename(s_abs, &self.pred_to_next(game))?;
        let conj = game.manager.and(t, s_next)?;
        let next_vars = self.pred_next_vars(game).to_vec();
        let e = game.manager.exists(&next_vars, conj)?;
        let a = game.manager.forall(&game.blocks.ctrl, e)?;
        Ok(game.manager.exists(&game.blocks.unc, a)?)
    }

    /// Under-approximating abstract predecessors:
    /// `∃X_u ∀X_c ∀P': T^a ⇒ S^a(P')`.
    pub fn upre_under(&mut self, game: &mut SymbolicGame, s_abs: BddRef) -> GameResult<BddRef> {
        let t = self.t_abs.ok_or(GameError::MissingTransitionRelation)?;
        let s_next = game.manager.rename(s_abs, &self.pred_to_next(game))?;
        let imp = game.manager.implies(t, s_next)?;
        let next_vars = self.pred_next_vars(game).to_vec();
        let f = game.manager.forall(&next_vars, imp)?;
        let a = game.manager.forall(&game.blocks.ctrl, f)?;
        Ok(game.manager.exists(&game.blocks.unc, a)?)
    }

    /// Substitutes per-predicate images into `s_abs`:
    /// `s_abs[p ← ψ_p]`, the partitioned route around T^a.
    fn compose_psi(&mut self, game: &mut SymbolicGame, s_abs: BddRef) -> GameResult<BddRef> {
        let psis = self.psis(game)?;
        let subst: Vec<(Var, BddRef)> = self
            .pred_now_vars(game)
            .to_vec()
            .into_iter()
            .zip(psis)
            .collect();
        Ok(game.manager.compose(s_abs, &subst)?)
    }

    /// Partitioned over-approximating predecessors:
    /// `∃X_u ∀X_c: ᾱ(S^a[p ← ψ_p])`.
    pub fn upre_over_part(
        &mut self,
        game: &mut SymbolicGame,
        s_abs: BddRef,
    ) -> GameResult<BddRef> {
        let comp = self.compose_psi(game, s_abs)?;
        let ab = self.alpha_over(game, comp)?;
        let a = game.manager.forall(&game.blocks.ctrl, ab)?;
        Ok(game.manager.exists(&game.blocks.unc, a)?)
    }

    /// Partitioned under-approximating predecessors, by duality:
    /// `¬(∀X_u ∃X_c: ᾱ(¬S^a[p ← ψ_p]))`.
    pub fn upre_under_part(
        &mut self,
        game: &mut SymbolicGame,
        s_abs: BddRef,
    ) -> GameResult<BddRef> {
        let ns = game.manager.not(s_abs)?;
        let comp = self.compose_psi(game, ns)?;
        let ab = self.alpha_over(game, comp)?;
        let e = game.manager.exists(&game.blocks.ctrl, ab)?;
        let f = game.manager.forall(&game.blocks.unc, e)?;
        Ok(game.manager.not(f)?)
    }

    /// The environment quasi-strategy induced by a target set `w`:
    /// all moves whose every controller reply can land in `w`.
    /// Uses T^a when built, otherwise the partitioned route.
    pub fn adam_quasi_strategy(
        &mut self,
        game: &mut SymbolicGame,
        w: BddRef,
    ) -> GameResult<QuasiStrategy> {
        let inner = if let Some(t) = self.t_abs {
            let w_next = game.manager.rename(w, &self.pred_to_next(game))?;
            let conj = game.manager.and(t, w_next)?;
            let next_vars = self.pred_next_vars(game).to_vec();
            game.manager.exists(&next_vars, conj)?
        } else {
            let comp = self.compose_psi(game, w)?;
            self.alpha_over(game, comp)?
        };
        let relation = game.manager.forall(&game.blocks.ctrl, inner)?;
        Ok(QuasiStrategy { relation, domain: QuasiDomain::AbstractAdam })
    }

    /// Concretizes an abstract environment quasi-strategy to (L, X_u).
    pub fn gamma_quasi(
        &self,
        game: &mut SymbolicGame,
        quasi: &QuasiStrategy,
    ) -> GameResult<QuasiStrategy> {
        assert_eq!(quasi.domain, QuasiDomain::AbstractAdam);
        let relation = self.gamma(game, quasi.relation)?;
        Ok(QuasiStrategy { relation, domain: QuasiDomain::ConcreteAdam })
    }

    /// Exact abstract successors of `s_abs` under an abstract environment
    /// quasi-strategy: `∃P,X_u,X_c: T^a ∧ S^a ∧ Λ`, renamed back to P.
    pub fn post_abs(
        &mut self,
        game: &mut SymbolicGame,
        s_abs: BddRef,
        quasi: &QuasiStrategy,
    ) -> GameResult<BddRef> {
        assert_eq!(quasi.domain, QuasiDomain::AbstractAdam);
        let t = self.t_abs.ok_or(GameError::MissingTransitionRelation)?;
        let conj = game.manager.and(t, s_abs)?;
        let conj = game.manager.and(conj, quasi.relation)?;
        let now_vars = self.pred_now_vars(game).to_vec();
        let e1 = game.manager.exists(&now_vars, conj)?;
        let e2 = game.manager.exists(&game.blocks.unc, e1)?;
        let e3 = game.manager.exists(&game.blocks.ctrl, e2)?;
        Ok(game.manager.rename(e3, &self.pred_to_now(game))?)
    }

    /// Over-approximating successors without T^a: the controller
    /// quantifier is pushed inside, one conjunct per predicate:
    /// `∃L,X_u: (S^a ∧ Λ)[p ← f_p] ∧ ⋀_p (∃X_c: p' ⇔ ψ_p)`.
    pub fn post_over_part(
        &mut self,
        game: &mut SymbolicGame,
        s_abs: BddRef,
        quasi: &QuasiStrategy,
    ) -> GameResult<BddRef> {
        assert_eq!(quasi.domain, QuasiDomain::AbstractAdam);
        let guarded = game.manager.and(s_abs, quasi.relation)?;
        let source = self.gamma(game, guarded)?;
        let psis = self.psis(game)?;
        let mut acc = source;
        for i in (0..self.preds.len()).rev() {
            let pv = game.manager.var_bdd(game.blocks.pred_next[i])?;
            let bit = game.manager.iff(pv, psis[i])?;
            let q = game.manager.exists(&game.blocks.ctrl, bit)?;
            acc = game.manager.and(acc, q)?;
        }
        let e1 = game.manager.exists(&game.blocks.latch_now, acc)?;
        let e2 = game.manager.exists(&game.blocks.unc, e1)?;
        Ok(game.manager.rename(e2, &self.pred_to_now(game))?)
    }

    /// Explicit membership vector over all `2^|P|` predicate valuations,
    /// LSB = predicate 0. Sanity-check scale.
    pub fn enumerate_abs(&self, game: &SymbolicGame, f: BddRef) -> Vec<bool> {
        let n = self.preds.len();
        assert!(n <= 16, "enumerate_abs is for explicit-scale predicate sets");
        let mut vals = vec![false; game.manager.num_vars()];
        (0..1usize << n)
            .map(|v| {
                for (i, &pv) in self.pred_now_vars(game).iter().enumerate() {
                    vals[pv.index()] = v >> i & 1 == 1;
                }
                game.manager.eval(f, &vals)
            })
            .collect()
    }
}

/// Concrete predecessors restricted to a concretized environment
/// quasi-strategy and a concrete restriction set:
/// `(∃X_u: γ(Λ) ∧ ∀X_c: S[l ← f_l]) ∩ R_conc`.
pub fn upre_concrete_guided(
    game: &mut SymbolicGame,
    quasi: &QuasiStrategy,
    s: BddRef,
    r_conc: BddRef,
) -> GameResult<BddRef> {
    assert_eq!(quasi.domain, QuasiDomain::ConcreteAdam);
    let subst: Vec<(Var, BddRef)> = game
        .blocks
        .latch_now
        .iter()
        .copied()
        .zip(game.f_l.iter().copied())
        .collect();
    let sub = game.manager.compose(s, &subst)?;
    let all_replies = game.manager.forall(&game.blocks.ctrl, sub)?;
    let allowed = game.manager.and(quasi.relation, all_replies)?;
    let pre = game.manager.exists(&game.blocks.unc, allowed)?;
    Ok(game.manager.and(pre, r_conc)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::aiger::split_inputs;
    use crate::bdd::BddRef;
    use crate::game::{EncodeOpts, Limits, Status, SymbolicGame, UpreImpl};
    use crate::oracle::{random_circuit, ExplicitGame, RandomCircuitCfg};

    /// Fresh game from a random circuit, with the monolithic relation.
    fn random_game(seed: u64) -> SymbolicGame {
        let file = random_circuit(seed, RandomCircuitCfg::default());
        let spec = split_inputs(&file).unwrap();
        SymbolicGame::encode(&spec, &EncodeOpts { monolithic_t: true, node_limit: None })
            .unwrap()
    }

    /// Predicate set with the exact unsafe set, trivial reach, and a
    /// seed-dependent subset of latches visible.
    fn random_preds(game: &mut SymbolicGame, seed: u64) -> PredicateSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b9);
        let one = game.manager.one();
        let mut preds = PredicateSet::initial(game, game.error_now, one).unwrap();
        for k in 0..game.num_latches() {
            if rng.gen_bool(0.5) {
                preds.add_latch(game, k).unwrap();
            }
        }
        preds
    }

    /// Predicate set making every latch visible (identity abstraction).
    fn identity_preds(game: &mut SymbolicGame) -> PredicateSet {
        let one = game.manager.one();
        let mut preds = PredicateSet::initial(game, game.error_now, one).unwrap();
        for k in 0..game.num_latches() {
            preds.add_latch(game, k).unwrap();
        }
        preds
    }

    /// Random set over the current predicate variables.
    fn random_abs_set(
        a: &AbstractGame,
        game: &mut SymbolicGame,
        rng: &mut ChaCha8Rng,
    ) -> BddRef {
        let n = a.preds.len();
        let members: Vec<bool> = (0..1usize << n).map(|_| rng.gen_bool(0.35)).collect();
        let mut acc = game.manager.zero();
        for (v, &m) in members.iter().enumerate() {
            if !m {
                continue;
            }
            let lits: Vec<(Var, bool)> = game.blocks.pred_now[..n]
                .iter()
                .enumerate()
                .map(|(i, &pv)| (pv, v >> i & 1 == 1))
                .collect();
            let cube = game.manager.cube(&lits).unwrap();
            acc = game.manager.or(acc, cube).unwrap();
        }
        acc
    }

    /// Random set over the latch variables.
    fn random_conc_set(game: &mut SymbolicGame, rng: &mut ChaCha8Rng) -> BddRef {
        let ns = 1usize << game.num_latches();
        let members: Vec<bool> = (0..ns).map(|_| rng.gen_bool(0.4)).collect();
        game.state_set(&members).unwrap()
    }

    #[test]
    fn gamma_trivial_and_definitional() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for seed in 0..40 {
            let mut g = random_game(seed);
            let preds = random_preds(&mut g, seed);
            let mut a = AbstractGame::new(&mut g, preds).unwrap();

            let one = g.manager.one();
            let gt = a.gamma(&mut g, one).unwrap();
            assert!(g.manager.is_one(gt), "gamma(TRUE) = TRUE");

            let p_init =
                g.manager.var_bdd(g.blocks.pred_now[PredicateSet::IDX_INIT]).unwrap();
            let gi = a.gamma(&mut g, p_init).unwrap();
            assert_eq!(gi, g.init, "gamma(p_init) is the initial state");

            // definitional route: ∃P: S^a ∧ ⋀(p ⇔ f_p)
            let s = random_abs_set(&a, &mut g, &mut rng);
            let via_compose = a.gamma(&mut g, s).unwrap();
            let link = a.link_now(&mut g).unwrap();
            let conj = g.manager.and(s, link).unwrap();
            let n = a.preds.len();
            let pvars = g.blocks.pred_now[..n].to_vec();
            let via_exists = g.manager.exists(&pvars, conj).unwrap();
            assert_eq!(via_compose, via_exists, "seed {seed}");
        }
    }

    #[test]
    fn alpha_sandwich_and_galois() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..60 {
            let mut g = random_game(seed);
            let preds = random_preds(&mut g, seed);
            let mut a = AbstractGame::new(&mut g, preds).unwrap();

            let zero = g.manager.zero();
            let ao = a.alpha_over(&mut g, zero).unwrap();
            assert!(g.manager.is_zero(ao), "alpha_over(∅) = ∅");
            let one = g.manager.one();
            let au = a.alpha_under(&mut g, one).unwrap();
            assert!(g.manager.is_one(au), "alpha_under(Q) = Q^a");

            let s = random_conc_set(&mut g, &mut rng);
            let over = a.alpha_over(&mut g, s).unwrap();
            let under = a.alpha_under(&mut g, s).unwrap();
            let g_over = a.gamma(&mut g, over).unwrap();
            let g_under = a.gamma(&mut g, under).unwrap();
            assert!(g.manager.leq(g_under, s).unwrap(), "seed {seed}: γ∘α̲ shrinks");
            assert!(g.manager.leq(s, g_over).unwrap(), "seed {seed}: γ∘ᾱ covers");

            // Galois connection on a random abstract counterpart
            let t = random_abs_set(&a, &mut g, &mut rng);
            let gt = a.gamma(&mut g, t).unwrap();
            let lhs = g.manager.leq(over, t).unwrap();
            let rhs = g.manager.leq(s, gt).unwrap();
            assert_eq!(lhs, rhs, "seed {seed}: adjunction");
        }
    }

    #[test]
    fn abstract_transitions_have_concrete_witnesses() {
        // enumerate Δ^a on small games and compare against the explicit
        // transition table
        let cfg = RandomCircuitCfg { max_latches: 3, max_unc: 1, max_ctrl: 1, max_gates: 8 };
        for seed in 0..25 {
            let file = random_circuit(seed, cfg);
            let spec = split_inputs(&file).unwrap();
            let ex = ExplicitGame::from_circuit(&spec).unwrap();
            let mut g =
                SymbolicGame::encode(&spec, &EncodeOpts { monolithic_t: true, node_limit: None })
                    .unwrap();
            let preds = random_preds(&mut g, seed);
            let mut a = AbstractGame::new(&mut g, preds).unwrap();
            let t_abs = a.build_t_abs(&mut g).unwrap();

            // projection property
            let support = g.manager.support(t_abs);
            let n = a.preds.len();
            for v in &support {
                let ok = g.blocks.pred_now[..n].contains(v)
                    || g.blocks.pred_next[..n].contains(v)
                    || g.blocks.unc.contains(v)
                    || g.blocks.ctrl.contains(v);
                assert!(ok, "seed {seed}: stray {v:?} in support");
            }

            // cell membership of each concrete state
            let nl = g.num_latches();
            let cell_of = |g: &SymbolicGame, a: &AbstractGame, q: usize| -> usize {
                let mut vals = vec![false; g.manager.num_vars()];
                for (k, &lv) in g.blocks.latch_now.iter().enumerate() {
                    vals[lv.index()] = q >> k & 1 == 1;
                }
                let mut cell = 0usize;
                for (i, &def) in a.preds.defs.iter().enumerate() {
                    if g.manager.eval(def, &vals) {
                        cell |= 1 << i;
                    }
                }
                cell
            };
            let cells: Vec<usize> = (0..1usize << nl).map(|q| cell_of(&g, &a, q)).collect();

            let mut vals = vec![false; g.manager.num_vars()];
            for qa in 0..1usize << n {
                for ra in 0..1usize << n {
                    for su in 0..ex.num_unc_moves() as u32 {
                        for sc in 0..ex.num_ctrl_moves() as u32 {
                            for (i, &pv) in g.blocks.pred_now[..n].iter().enumerate() {
                                vals[pv.index()] = qa >> i & 1 == 1;
                            }
                            for (i, &pv) in g.blocks.pred_next[..n].iter().enumerate() {
                                vals[pv.index()] = ra >> i & 1 == 1;
                            }
                            for (k, &uv) in g.blocks.unc.iter().enumerate() {
                                vals[uv.index()] = su >> k & 1 == 1;
                            }
                            for (k, &cv) in g.blocks.ctrl.iter().enumerate() {
                                vals[cv.index()] = sc >> k & 1 == 1;
                            }
                            let abs_says = g.manager.eval(t_abs, &vals);
                            let witness = (0..1u32 << nl).any(|q| {
                                cells[q as usize] == qa
                                    && cells[ex.next_state(q, su, sc) as usize] == ra
                            });
                            assert_eq!(
                                abs_says, witness,
                                "seed {seed} qa={qa} ra={ra} su={su} sc={sc}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn abstract_upre_sandwich_and_partitioned_agreement() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for seed in 0..60 {
            let mut g = random_game(seed);
            let preds = random_preds(&mut g, seed);
            let mut a = AbstractGame::new(&mut g, preds).unwrap();
            a.build_t_abs(&mut g).unwrap();
            let s = random_abs_set(&a, &mut g, &mut rng);

            let over = a.upre_over(&mut g, s).unwrap();
            let under = a.upre_under(&mut g, s).unwrap();
            // inclusion holds wherever successor sets are nonempty, i.e. on
            // consistent predicate valuations; the under form is vacuously
            // true on empty cells
            let one = g.manager.one();
            let consistent = a.alpha_over(&mut g, one).unwrap();
            let under_c = g.manager.and(under, consistent).unwrap();
            assert!(g.manager.leq(under_c, over).unwrap(), "seed {seed}: under ⊆ over");

            // the partitioned forms compute the same operators
            let over_p = a.upre_over_part(&mut g, s).unwrap();
            let under_p = a.upre_under_part(&mut g, s).unwrap();
            assert_eq!(over, over_p, "seed {seed}: over forms agree");
            assert_eq!(under, under_p, "seed {seed}: under forms agree");

            let zero = g.manager.zero();
            let e = a.upre_over_part(&mut g, zero).unwrap();
            assert!(g.manager.is_zero(e), "empty target");

            // sandwich against the concrete operator
            let gs = a.gamma(&mut g, s).unwrap();
            let conc = g.upre_subst(gs).unwrap();
            let g_under = a.gamma(&mut g, under).unwrap();
            let g_over = a.gamma(&mut g, over).unwrap();
            assert!(g.manager.leq(g_under, conc).unwrap(), "seed {seed}: lower bound");
            assert!(g.manager.leq(conc, g_over).unwrap(), "seed {seed}: upper bound");
        }
    }

    #[test]
    fn identity_abstraction_collapses_to_concrete() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for seed in 0..30 {
            let mut g = random_game(seed);
            let preds = identity_preds(&mut g);
            let mut a = AbstractGame::new(&mut g, preds).unwrap();
            a.build_t_abs(&mut g).unwrap();

            let s = random_conc_set(&mut g, &mut rng);
            let s_abs = a.alpha_over(&mut g, s).unwrap();
            // with singleton cells the abstraction loses nothing
            let back = a.gamma(&mut g, s_abs).unwrap();
            assert_eq!(back, s, "seed {seed}: lossless round trip");

            let conc = g.upre_subst(s).unwrap();
            for op in 0..4 {
                let abs = match op {
                    0 => a.upre_over(&mut g, s_abs).unwrap(),
                    1 => a.upre_under(&mut g, s_abs).unwrap(),
                    2 => a.upre_over_part(&mut g, s_abs).unwrap(),
                    _ => a.upre_under_part(&mut g, s_abs).unwrap(),
                };
                let g_abs = a.gamma(&mut g, abs).unwrap();
                assert_eq!(g_abs, conc, "seed {seed} op {op}: collapses to concrete");
            }
        }
    }

    #[test]
    fn fixpoint_sandwich_and_conservative_realizability() {
        for seed in 0..60 {
            let mut g = random_game(seed);
            let preds = random_preds(&mut g, seed);
            let mut a = AbstractGame::new(&mut g, preds).unwrap();
            a.build_t_abs(&mut g).unwrap();

            // abstract fixpoints of U^a
            let mut over = g.manager.zero();
            loop {
                let step = a.upre_over(&mut g, over).unwrap();
                let next = g.manager.or(a.u_abs, step).unwrap();
                if next == over {
                    break;
                }
                over = next;
            }
            let mut under = g.manager.zero();
            loop {
                let step = a.upre_under(&mut g, under).unwrap();
                let next = g.manager.or(a.u_abs, step).unwrap();
                if next == under {
                    break;
                }
                under = next;
            }

            let r = g.solve_classic(UpreImpl::Substitution, &Limits::none()).unwrap();
            assert!(r.fixpoint_confirmed || r.status == Status::Unrealizable);

            let g_under = a.gamma(&mut g, under).unwrap();
            let g_over = a.gamma(&mut g, over).unwrap();
            // recompute the full concrete fixpoint for the comparison
            let mut full = g.manager.zero();
            loop {
                let step = g.upre_subst(full).unwrap();
                let next = g.manager.or(g.error_now, step).unwrap();
                if next == full {
                    break;
                }
                full = next;
            }
            assert!(g.manager.leq(g_under, full).unwrap(), "seed {seed}: lower");
            assert!(g.manager.leq(full, g_over).unwrap(), "seed {seed}: upper");

            // if the abstraction already clears the initial state, the
            // concrete game is realizable
            if !g.init_in(g_over) {
                assert_eq!(r.status, Status::Realizable, "seed {seed}: conservative");
            }
        }
    }

    #[test]
    fn quasi_strategy_trivial_targets() {
        for seed in 0..20 {
            let mut g = random_game(seed);
            let preds = random_preds(&mut g, seed);
            let mut a = AbstractGame::new(&mut g, preds).unwrap();
            a.build_t_abs(&mut g).unwrap();

            let zero = g.manager.zero();
            let q0 = a.adam_quasi_strategy(&mut g, zero).unwrap();
            assert!(g.manager.is_zero(q0.relation), "no target, no moves");

            // with the whole abstract space as target, every consistent
            // cell allows every environment move (the transition function
            // is total); inconsistent valuations have no transitions
            let one = g.manager.one();
            let q1 = a.adam_quasi_strategy(&mut g, one).unwrap();
            let consistent = a.alpha_over(&mut g, one).unwrap();
            assert_eq!(q1.relation, consistent, "seed {seed}: totality");

            // the partitioned route builds the same relation
            let mut a2 = AbstractGame::new(&mut g, a.preds.clone()).unwrap();
            let q1p = a2.adam_quasi_strategy(&mut g, one).unwrap();
            assert_eq!(q1p.relation, q1.relation, "seed {seed}: route agreement");
        }
    }

    #[test]
    fn guided_upre_trivial_guards() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for seed in 0..30 {
            let mut g = random_game(seed);
            let s = random_conc_set(&mut g, &mut rng);
            let r_conc = g.manager.one();

            let full = QuasiStrategy {
                relation: g.manager.one(),
                domain: QuasiDomain::ConcreteAdam,
            };
            let guided = upre_concrete_guided(&mut g, &full, s, r_conc).unwrap();
            let plain = g.upre_subst(s).unwrap();
            assert_eq!(guided, plain, "seed {seed}: unrestricted guard");

            let empty = QuasiStrategy {
                relation: g.manager.zero(),
                domain: QuasiDomain::ConcreteAdam,
            };
            let none = upre_concrete_guided(&mut g, &empty, s, r_conc).unwrap();
            assert!(g.manager.is_zero(none), "seed {seed}: no moves");
        }
    }

    #[test]
    fn guided_fixpoint_agrees_with_plain_on_init() {
        // the quasi-strategy extracted from the over-fixpoint loses no
        // environment winning strategy
        for seed in 0..200 {
            let mut g = random_game(seed);
            let preds = random_preds(&mut g, seed);
            let mut a = AbstractGame::new(&mut g, preds).unwrap();
            a.build_t_abs(&mut g).unwrap();

            let mut w = g.manager.zero();
            loop {
                let step = a.upre_over(&mut g, w).unwrap();
                let next = g.manager.or(a.u_abs, step).unwrap();
                if next == w {
                    break;
                }
                w = next;
            }
            let quasi = a.adam_quasi_strategy(&mut g, w).unwrap();
            let conc = a.gamma_quasi(&mut g, &quasi).unwrap();

            let top = g.manager.one();
            let mut x = g.manager.zero();
            loop {
                let step = upre_concrete_guided(&mut g, &conc, x, top).unwrap();
                let next = g.manager.or(g.error_now, step).unwrap();
                if next == x {
                    break;
                }
                x = next;
            }
            let plain = g.solve_classic(UpreImpl::Substitution, &Limits::none()).unwrap();
            let guided_unreal = g.init_in(x);
            assert_eq!(
                guided_unreal,
                plain.status == Status::Unrealizable,
                "seed {seed}: guided and plain fixpoints agree on the initial state"
            );
        }
    }

    #[test]
    fn post_operators_and_reach_closure() {
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        for seed in 0..60 {
            let mut g = random_game(seed);
            let preds = random_preds(&mut g, seed);
            let mut a = AbstractGame::new(&mut g, preds).unwrap();
            a.build_t_abs(&mut g).unwrap();

            let mut w = g.manager.zero();
            loop {
                let step = a.upre_over(&mut g, w).unwrap();
                let next = g.manager.or(a.u_abs, step).unwrap();
                if next == w {
                    break;
                }
                w = next;
            }
            let quasi = a.adam_quasi_strategy(&mut g, w).unwrap();

            let zero = g.manager.zero();
            let p0 = a.post_abs(&mut g, zero, &quasi).unwrap();
            assert!(g.manager.is_zero(p0), "empty source");
            let p0p = a.post_over_part(&mut g, zero, &quasi).unwrap();
            assert!(g.manager.is_zero(p0p), "empty source, partitioned");

            let s = random_abs_set(&a, &mut g, &mut rng);
            let exact = a.post_abs(&mut g, s, &quasi).unwrap();
            let over = a.post_over_part(&mut g, s, &quasi).unwrap();
            assert!(g.manager.leq(exact, over).unwrap(), "seed {seed}: post ⊆ post_over");
        }
    }

    #[test]
    fn winning_moves_and_reach_covered_by_quasi_strategy() {
        // on unrealizable games: every forcing move of the explicit
        // attractor is allowed by γ(Λ), and the forcing-move closure is
        // covered by the abstract reach closure under Λ
        let cfg = RandomCircuitCfg { max_latches: 5, max_unc: 2, max_ctrl: 2, max_gates: 10 };
        let mut tested = 0;
        for seed in 0..400 {
            if tested >= 60 {
                break;
            }
            let file = random_circuit(seed, cfg);
            let spec = split_inputs(&file).unwrap();
            let ex = ExplicitGame::from_circuit(&spec).unwrap();
            let sol = ex.solve();
            if !sol.adam_wins {
                continue;
            }
            tested += 1;

            let mut g =
                SymbolicGame::encode(&spec, &EncodeOpts { monolithic_t: true, node_limit: None })
                    .unwrap();
            let preds = random_preds(&mut g, seed);
            let mut a = AbstractGame::new(&mut g, preds).unwrap();
            a.build_t_abs(&mut g).unwrap();

            let mut w = g.manager.zero();
            loop {
                let step = a.upre_over(&mut g, w).unwrap();
                let next = g.manager.or(a.u_abs, step).unwrap();
                if next == w {
                    break;
                }
                w = next;
            }
            let quasi = a.adam_quasi_strategy(&mut g, w).unwrap();
            let conc = a.gamma_quasi(&mut g, &quasi).unwrap();

            // move containment
            let reach = sol.reach_winning();
            let mut vals = vec![false; g.manager.num_vars()];
            for q in 0..ex.num_states() as u32 {
                if !reach[q as usize] {
                    continue;
                }
                for su in 0..ex.num_unc_moves() as u32 {
                    if sol.moves[q as usize] >> su & 1 == 0 {
                        continue;
                    }
                    for v in vals.iter_mut() {
                        *v = false;
                    }
                    for (k, &lv) in g.blocks.latch_now.iter().enumerate() {
                        vals[lv.index()] = q >> k & 1 == 1;
                    }
                    for (k, &uv) in g.blocks.unc.iter().enumerate() {
                        vals[uv.index()] = su >> k & 1 == 1;
                    }
                    assert!(
                        g.manager.eval(conc.relation, &vals),
                        "seed {seed}: winning move {su} at state {q} outside γ(Λ)"
                    );
                }
            }

            // abstract reach closure covers the explicit one
            let mut r = a.init_abs;
            loop {
                let step = a.post_abs(&mut g, r, &quasi).unwrap();
                let next = g.manager.or(r, step).unwrap();
                if next == r {
                    break;
                }
                r = next;
            }
            let cover = a.gamma(&mut g, r).unwrap();
            let covered = g.enumerate_states(cover);
            for q in 0..ex.num_states() {
                assert!(
                    !reach[q] || covered[q],
                    "seed {seed}: reachable winning state {q} not covered"
                );
            }
        }
        assert!(tested >= 30, "corpus did not yield enough unrealizable games");
    }

    #[test]
    fn restricted_fixpoint_equals_unrestricted_on_winning_reach() {
        // restricting the over-fixpoint to an abstract reach cover changes
        // nothing inside the true winning-reachable states
        for seed in 0..120 {
            let file = random_circuit(seed, RandomCircuitCfg::default());
            let spec = split_inputs(&file).unwrap();
            let ex = ExplicitGame::from_circuit(&spec).unwrap();
            let sol = ex.solve();
            if !sol.adam_wins {
                continue;
            }
            let mut g =
                SymbolicGame::encode(&spec, &EncodeOpts { monolithic_t: true, node_limit: None })
                    .unwrap();
            let preds = random_preds(&mut g, seed);
            let mut a = AbstractGame::new(&mut g, preds).unwrap();
            a.build_t_abs(&mut g).unwrap();

            // unrestricted fixpoint and its quasi-strategy
            let mut w = g.manager.zero();
            loop {
                let step = a.upre_over(&mut g, w).unwrap();
                let next = g.manager.or(a.u_abs, step).unwrap();
                if next == w {
                    break;
                }
                w = next;
            }
            let quasi = a.adam_quasi_strategy(&mut g, w).unwrap();
            // abstract reach cover under the quasi-strategy
            let mut r_abs = a.init_abs;
            loop {
                let step = a.post_abs(&mut g, r_abs, &quasi).unwrap();
                let next = g.manager.or(r_abs, step).unwrap();
                if next == r_abs {
                    break;
                }
                r_abs = next;
            }
            // restricted fixpoint
            let mut wr = g.manager.zero();
            loop {
                let step = a.upre_over(&mut g, wr).unwrap();
                let grown = g.manager.or(a.u_abs, step).unwrap();
                let next = g.manager.and(grown, r_abs).unwrap();
                if next == wr {
                    break;
                }
                wr = next;
            }
            let g_w = a.gamma(&mut g, w).unwrap();
            let g_wr = a.gamma(&mut g, wr).unwrap();
            let in_w = g.enumerate_states(g_w);
            let in_wr = g.enumerate_states(g_wr);
            // compare inside a provable subset of the winning-reachable set
            for (q, &is_reach) in sol.reach_winning_under().iter().enumerate() {
                if is_reach {
                    assert_eq!(in_w[q], in_wr[q], "seed {seed} state {q}");
                }
            }
        }
    }
}
