//! Symbolic safety games over circuits.
//!
//! Encodes a [`CircuitSpec`] into per-latch update functions and an unsafe
//! state set, and provides the backward operators everything else is built
//! from: uncontrollable predecessors (in a monolithic-relation form and a
//! substitution form), their dual, and the classic attractor fixpoint.
//!
//! States are valuations of the latch variables; the initial state is the
//! all-zero valuation. The environment picks the uncontrollable inputs
//! first, the controller answers with the controllable ones.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::aiger::{CircuitSpec, Lit};
use crate::bdd::{BddError, BddManager, BddRef, Var, VarBlock};
use crate::oracle::bad_latch_index;

#[derive(Error, Debug)]
pub enum GameError {
    #[error(transparent)]
    Bdd(#[from] BddError),
    #[error("monolithic transition relation not built for this game")]
    MissingTransitionRelation,
    #[error("deadline exceeded")]
    Timeout,
    #[error("no invisible latch available for refinement")]
    NoLatchAvailable,
    #[error("initial state outside the computed safe region")]
    InitNotWinning,
    #[error("controller relation has no choice left for some reachable input")]
    EmptyChoice,
}

pub type GameResult<T> = Result<T, GameError>;

/// Which concrete implementation of the predecessor operator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpreImpl {
    /// Conjoin against the monolithic transition relation, then quantify.
    Monolithic,
    /// Substitute the latch update functions directly into the target set.
    Substitution,
}

/// Outcome classification shared by all solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Realizable,
    Unrealizable,
    Timeout,
    NodeLimit,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Realizable => "REALIZABLE",
            Status::Unrealizable => "UNREALIZABLE",
            Status::Timeout => "TIMEOUT",
            Status::NodeLimit => "NODE_LIMIT",
        })
    }
}

/// Wall-clock budget carried through the fixpoint loops.
#[derive(Debug, Clone, Copy, Default)]
pub struct Limits {
    pub deadline: Option<Instant>,
}

impl Limits {
    pub fn none() -> Limits {
        Limits::default()
    }

    pub fn with_timeout(budget: Duration) -> Limits {
        Limits { deadline: Some(Instant::now() + budget) }
    }

    pub fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

/// Result of a game solve: who wins from the initial state, plus the losing
/// region and iteration diagnostics.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: Status,
    /// States from which the environment forces the error. On an early
    /// unrealizable exit this is the iterate that swallowed the initial
    /// state, not necessarily the full fixpoint.
    pub losing: BddRef,
    /// Predecessor-operator applications performed.
    pub iterations: u32,
    /// Whether `losing` was confirmed stable (false on early exits).
    pub fixpoint_confirmed: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EncodeOpts {
    /// Build the monolithic transition relation eagerly.
    pub monolithic_t: bool,
    /// Override the manager's node cap.
    pub node_limit: Option<usize>,
}

/// A circuit encoded as a symbolic safety game.
pub struct SymbolicGame {
    pub manager: BddManager,
    pub blocks: VarBlock,
    /// Per-latch update functions over (latch-now, inputs), one per game
    /// latch, in latch order.
    pub f_l: Vec<BddRef>,
    /// Unsafe states, over latch-now variables only.
    pub error_now: BddRef,
    /// The all-zero initial state as a cube.
    pub init: BddRef,
    pub monolithic_t: Option<BddRef>,
    /// The circuit this game was built from.
    pub spec: CircuitSpec,
    /// Whether a synthetic error latch was appended (the error output was
    /// not itself a latch literal).
    pub added_err_latch: bool,
    /// Names of the game latches, synthetic error latch included.
    pub latch_names: Vec<String>,
}

impl SymbolicGame {
    /// Builds the game: variables in order (uncontrollable, controllable,
    /// interleaved latch now/next pairs), update functions bottom-up over
    /// the gate graph, and the unsafe set.
    ///
    /// When the error output is a latch literal the unsafe set reads that
    /// latch directly; otherwise a latch `err` with update `err ∨ bad` is
    /// appended and the unsafe set is `err`.
    pub fn encode(spec: &CircuitSpec, opts: &EncodeOpts) -> GameResult<SymbolicGame> {
        let mut mgr = match opts.node_limit {
            Some(limit) => BddManager::with_node_limit(limit),
            None => BddManager::new(),
        };
        let bad_latch = bad_latch_index(spec);

        let mut blocks = VarBlock::default();
        for name in &spec.unc_names {
            blocks.unc.push(mgr.new_var(name.clone()));
        }
        for name in &spec.ctrl_names {
            blocks.ctrl.push(mgr.new_var(name.clone()));
        }
        let mut latch_names = spec.latch_names.clone();
        if bad_latch.is_none() {
            latch_names.push("err".into());
        }
        for name in &latch_names {
            blocks.latch_now.push(mgr.new_var(name.clone()));
            blocks.latch_next.push(mgr.new_var(format!("{name}'")));
        }

        // circuit variable -> function over the now/input variables
        let mut fns: Vec<Option<BddRef>> = vec![None; spec.max_var as usize + 1];
        for (k, l) in spec.uncontrollable.iter().enumerate() {
            fns[l.var() as usize] = Some(mgr.var_bdd(blocks.unc[k])?);
        }
        for (k, l) in spec.controllable.iter().enumerate() {
            fns[l.var() as usize] = Some(mgr.var_bdd(blocks.ctrl[k])?);
        }
        for (k, (cur, _)) in spec.latches.iter().enumerate() {
            fns[cur.var() as usize] = Some(mgr.var_bdd(blocks.latch_now[k])?);
        }
        fn lit_fn(
            mgr: &mut BddManager,
            fns: &[Option<BddRef>],
            l: Lit,
        ) -> GameResult<BddRef> {
            if l.is_const() {
                return Ok(mgr.constant(l.0 == 1));
            }
            let f = fns[l.var() as usize].expect("references checked at parse time");
            Ok(if l.is_negated() { mgr.not(f)? } else { f })
        }
        let mut gates = spec.ands.clone();
        gates.sort_by_key(|g| g.lhs.var());
        for g in &gates {
            let a = lit_fn(&mut mgr, &fns, g.rhs0)?;
            let b = lit_fn(&mut mgr, &fns, g.rhs1)?;
            fns[g.lhs.var() as usize] = Some(mgr.and(a, b)?);
        }

        let mut f_l = Vec::with_capacity(blocks.latch_now.len());
        for &(_, next) in &spec.latches {
            f_l.push(lit_fn(&mut mgr, &fns, next)?);
        }
        let bad_fn = lit_fn(&mut mgr, &fns, spec.bad)?;
        let error_now = match bad_latch {
            Some((idx, negated)) => mgr.literal(blocks.latch_now[idx], !negated)?,
            None => {
                let err = *blocks.latch_now.last().expect("err latch allocated");
                let err_now = mgr.var_bdd(err)?;
                f_l.push(mgr.or(err_now, bad_fn)?);
                err_now
            }
        };
        let zeros: Vec<(Var, bool)> =
            blocks.latch_now.iter().map(|&v| (v, false)).collect();
        let init = mgr.cube(&zeros)?;

        let mut game = SymbolicGame {
            manager: mgr,
            blocks,
            f_l,
            error_now,
            init,
            monolithic_t: None,
            spec: spec.clone(),
            added_err_latch: bad_latch.is_none(),
            latch_names,
        };
        if opts.monolithic_t {
            game.build_monolithic()?;
        }
        Ok(game)
    }

    pub fn num_latches(&self) -> usize {
        self.blocks.latch_now.len()
    }

    /// `⋀_l (l' ⇔ f_l)`, built on demand and cached.
    pub fn build_monolithic(&mut self) -> GameResult<BddRef> {
        if let Some(t) = self.monolithic_t {
            return Ok(t);
        }
        let mut t = self.manager.one();
        for k in (0..self.f_l.len()).rev() {
            let next = self.manager.var_bdd(self.blocks.latch_next[k])?;
            let bit = self.manager.iff(next, self.f_l[k])?;
            t = self.manager.and(t, bit)?;
        }
        self.monolithic_t = Some(t);
        Ok(t)
    }

    /// Uncontrollable predecessors of `s` through the monolithic relation:
    /// `∃X_u ∀X_c ∃L': T ∧ s(L')`.
    pub fn upre_mono(&mut self, s: BddRef) -> GameResult<BddRef> {
        let t = self.monolithic_t.ok_or(GameError::MissingTransitionRelation)?;
        let s_next = self.manager.rename(s, &self.blocks.now_to_next())?;
        let conj = self.manager.and(t, s_next)?;
        let e = self.manager.exists(&self.blocks.latch_next, conj)?;
        let a = self.manager.forall(&self.blocks.ctrl, e)?;
        Ok(self.manager.exists(&self.blocks.unc, a)?)
    }

    /// Uncontrollable predecessors by substitution: `∃X_u ∀X_c: s[l ← f_l]`,
    /// quantified innermost-first to keep intermediate supports small.
    pub fn upre_subst(&mut self, s: BddRef) -> GameResult<BddRef> {
        let subst: Vec<(Var, BddRef)> = self
            .blocks
            .latch_now
            .iter()
            .copied()
            .zip(self.f_l.iter().copied())
            .collect();
        let sub = self.manager.compose(s, &subst)?;
        let a = self.manager.forall(&self.blocks.ctrl, sub)?;
        Ok(self.manager.exists(&self.blocks.unc, a)?)
    }

    fn upre(&mut self, variant: UpreImpl, s: BddRef) -> GameResult<BddRef> {
        match variant {
            UpreImpl::Monolithic => self.upre_mono(s),
            UpreImpl::Substitution => self.upre_subst(s),
        }
    }

    /// Controllable predecessors `{q | ∀σ_u ∃σ_c: δ(q,σ_u,σ_c) ∈ s}`,
    /// computed directly as `∀X_u ∃X_c: s[l ← f_l]`.
    pub fn cpre(&mut self, s: BddRef) -> GameResult<BddRef> {
        let subst: Vec<(Var, BddRef)> = self
            .blocks
            .latch_now
            .iter()
            .copied()
            .zip(self.f_l.iter().copied())
            .collect();
        let sub = self.manager.compose(s, &subst)?;
        let e = self.manager.exists(&self.blocks.ctrl, sub)?;
        Ok(self.manager.forall(&self.blocks.unc, e)?)
    }

    /// Greatest fixpoint `νY. s ∩ cpre(Y)`: the largest subset of `s` the
    /// controller can stay in forever.
    pub fn cpre_fix(&mut self, s: BddRef, limits: &Limits) -> GameResult<BddRef> {
        let mut y = self.manager.one();
        loop {
            if limits.expired() {
                return Err(GameError::Timeout);
            }
            let pre = self.cpre(y)?;
            let next = self.manager.and(s, pre)?;
            if next == y {
                return Ok(y);
            }
            y = next;
        }
    }

    /// Whether the initial (all-zero) state satisfies `f`.
    pub fn init_in(&self, f: BddRef) -> bool {
        self.manager.eval(f, &[])
    }

    /// Least fixpoint of `X ↦ U ∪ upre(X)` by strict round-based iteration,
    /// stopping early once the initial state is swallowed.
    ///
    /// Resource exhaustion is reported through `status`, with the partial
    /// iterate in `losing`.
    pub fn solve_classic(
        &mut self,
        variant: UpreImpl,
        limits: &Limits,
    ) -> GameResult<SolveResult> {
        if variant == UpreImpl::Monolithic && self.monolithic_t.is_none() {
            match self.build_monolithic() {
                Ok(_) => {}
                Err(GameError::Bdd(BddError::NodeLimit { .. })) => {
                    return Ok(SolveResult {
                        status: Status::NodeLimit,
                        losing: self.manager.zero(),
                        iterations: 0,
                        fixpoint_confirmed: false,
                    });
                }
                Err(e) => return Err(e),
            }
        }
        let mut x = self.manager.zero();
        let mut iterations = 0u32;
        loop {
            if limits.expired() {
                return Ok(SolveResult {
                    status: Status::Timeout,
                    losing: x,
                    iterations,
                    fixpoint_confirmed: false,
                });
            }
            let stepped = self
                .upre(variant, x)
                .and_then(|p| Ok(self.manager.or(self.error_now, p)?));
            let next = match stepped {
                Ok(v) => v,
                Err(GameError::Bdd(BddError::NodeLimit { .. })) => {
                    return Ok(SolveResult {
                        status: Status::NodeLimit,
                        losing: x,
                        iterations,
                        fixpoint_confirmed: false,
                    });
                }
                Err(e) => return Err(e),
            };
            iterations += 1;
            if self.init_in(next) {
                return Ok(SolveResult {
                    status: Status::Unrealizable,
                    losing: next,
                    iterations,
                    fixpoint_confirmed: next == x,
                });
            }
            if next == x {
                return Ok(SolveResult {
                    status: Status::Realizable,
                    losing: x,
                    iterations,
                    fixpoint_confirmed: true,
                });
            }
            x = next;
        }
    }

    /// Successor image of `from` under per-latch update functions `fs`
    /// (pass [`Self::f_l`] for the raw game): `(∃L,X: from ∧ ⋀ l'⇔fs_l)`
    /// renamed back to now-variables.
    pub fn image(&mut self, from: BddRef, fs: &[BddRef]) -> GameResult<BddRef> {
        debug_assert_eq!(fs.len(), self.num_latches());
        let mut rel = from;
        for k in (0..fs.len()).rev() {
            let next = self.manager.var_bdd(self.blocks.latch_next[k])?;
            let bit = self.manager.iff(next, fs[k])?;
            rel = self.manager.and(rel, bit)?;
        }
        let mut quantified: Vec<Var> = self.blocks.latch_now.clone();
        quantified.extend_from_slice(&self.blocks.unc);
        quantified.extend_from_slice(&self.blocks.ctrl);
        let img = self.manager.exists(&quantified, rel)?;
        Ok(self.manager.rename(img, &self.blocks.next_to_now())?)
    }

    /// Forward reachable states from `from` under `fs`.
    pub fn reachable(
        &mut self,
        from: BddRef,
        fs: &[BddRef],
        limits: &Limits,
    ) -> GameResult<BddRef> {
        let mut r = from;
        loop {
            if limits.expired() {
                return Err(GameError::Timeout);
            }
            let img = self.image(r, fs)?;
            let next = self.manager.or(r, img)?;
            if next == r {
                return Ok(r);
            }
            r = next;
        }
    }

    /// Builds the set containing exactly the states whose index bit is set,
    /// state index = latch valuation read LSB-first. Sanity-check scale.
    pub fn state_set(&mut self, members: &[bool]) -> GameResult<BddRef> {
        let nl = self.num_latches();
        assert!(nl <= 16, "state_set is for explicit-scale games");
        assert_eq!(members.len(), 1 << nl);
        let mut acc = self.manager.zero();
        for (q, &m) in members.iter().enumerate() {
            if !m {
                continue;
            }
            let lits: Vec<(Var, bool)> = self
                .blocks
                .latch_now
                .iter()
                .enumerate()
                .map(|(k, &v)| (v, q >> k & 1 == 1))
                .collect();
            let cube = self.manager.cube(&lits)?;
            acc = self.manager.or(acc, cube)?;
        }
        Ok(acc)
    }

    /// Explicit membership vector of a state set, inverse of
    /// [`Self::state_set`].
    pub fn enumerate_states(&self, f: BddRef) -> Vec<bool> {
        let nl = self.num_latches();
        assert!(nl <= 16, "enumerate_states is for explicit-scale games");
        let nvars = self.manager.num_vars();
        let mut vals = vec![false; nvars];
        (0..1usize << nl)
            .map(|q| {
                for (k, &v) in self.blocks.latch_now.iter().enumerate() {
                    vals[v.index()] = q >> k & 1 == 1;
                }
                self.manager.eval(f, &vals)
            })
            .collect()
    }
}
