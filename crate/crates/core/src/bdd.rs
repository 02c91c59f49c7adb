//! Reduced ordered binary decision diagrams with a hash-consed unique table.
//!
//! All functions live inside a [`BddManager`]; handles ([`BddRef`]) are plain
//! indices, so two handles from the same manager denote the same boolean
//! function exactly when they are equal. Operations that allocate nodes return
//! `Result` because the manager enforces a configurable node cap.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU32, Ordering};

use thiserror::Error;

/// A boolean variable owned by some manager.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Handle to a function in a manager. Equality of handles is semantic
/// equality of the functions (within one manager).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BddRef {
    mgr: u32,
    idx: u32,
}

impl BddRef {
    pub fn index(self) -> usize {
        self.idx as usize
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum BddError {
    #[error("node limit of {limit} nodes exceeded")]
    NodeLimit { limit: usize },
    #[error("operands belong to different managers")]
    ManagerMismatch,
}

pub type BddResult<T = BddRef> = Result<T, BddError>;

/// Default cap on unique-table size; exceeding it aborts the current
/// operation with [`BddError::NodeLimit`].
pub const DEFAULT_NODE_LIMIT: usize = 50_000_000;

const FALSE_IDX: u32 = 0;
const TRUE_IDX: u32 = 1;
/// Terminal "variable"; orders below every real variable.
const TERM_VAR: u32 = u32::MAX;
const TERM_POS: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Node {
    var: u32,
    lo: u32,
    hi: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum BinOp {
    And,
    Or,
    Xor,
    Imp,
    Iff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum CacheKey {
    Bin(BinOp, u32, u32),
    Not(u32),
    Ite(u32, u32, u32),
    Quant(bool, u32, u32), // (is_forall, node, var-set id)
    Restrict(u32, u32),
}

static NEXT_MGR_ID: AtomicU32 = AtomicU32::new(0);

/// Owns the unique table, the operation cache and the variable order.
pub struct BddManager {
    id: u32,
    nodes: Vec<Node>,
    unique: HashMap<Node, u32>,
    cache: HashMap<CacheKey, u32>,
    /// position[v] = rank of variable v in the order (smaller = closer to root)
    position: Vec<u32>,
    order: Vec<Var>,
    names: Vec<String>,
    varsets: Vec<Vec<u32>>, // interned quantification blocks, sorted by position
    varset_ids: HashMap<Vec<u32>, u32>,
    node_limit: usize,
}

impl BddManager {
    pub fn new() -> Self {
        Self::with_node_limit(DEFAULT_NODE_LIMIT)
    }

    pub fn with_node_limit(node_limit: usize) -> Self {
        let id = NEXT_MGR_ID.fetch_add(1, Ordering::Relaxed);
        let term = Node { var: TERM_VAR, lo: 0, hi: 0 };
        let mut unique = HashMap::new();
        // terminals are pre-seeded and never looked up, but keep the map total
        unique.insert(Node { var: TERM_VAR, lo: 0, hi: 1 }, TRUE_IDX);
        BddManager {
            id,
            nodes: vec![term, Node { var: TERM_VAR, lo: 1, hi: 1 }],
            unique,
            cache: HashMap::new(),
            position: Vec::new(),
            order: Vec::new(),
            names: Vec::new(),
            varsets: Vec::new(),
            varset_ids: HashMap::new(),
            node_limit,
        }
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn node_limit(&self) -> usize {
        self.node_limit
    }

    pub fn set_node_limit(&mut self, limit: usize) {
        self.node_limit = limit;
    }

    /// Total nodes allocated in this manager (terminals included).
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_vars(&self) -> usize {
        self.position.len()
    }

    /// Appends a fresh variable at the end of the current order.
    pub fn new_var(&mut self, name: impl Into<String>) -> Var {
        let v = Var(self.position.len() as u32);
        self.position.push(self.order.len() as u32);
        self.order.push(v);
        self.names.push(name.into());
        v
    }

    pub fn var_name(&self, v: Var) -> &str {
        &self.names[v.index()]
    }

    fn wrap(&self, idx: u32) -> BddRef {
        BddRef { mgr: self.id, idx }
    }

    fn check(&self, f: BddRef) -> BddResult<u32> {
        if f.mgr != self.id {
            return Err(BddError::ManagerMismatch);
        }
        Ok(f.idx)
    }

    pub fn zero(&self) -> BddRef {
        self.wrap(FALSE_IDX)
    }

    pub fn one(&self) -> BddRef {
        self.wrap(TRUE_IDX)
    }

    pub fn constant(&self, b: bool) -> BddRef {
        if b {
            self.one()
        } else {
            self.zero()
        }
    }

    pub fn is_zero(&self, f: BddRef) -> bool {
        f.mgr == self.id && f.idx == FALSE_IDX
    }

    pub fn is_one(&self, f: BddRef) -> bool {
        f.mgr == self.id && f.idx == TRUE_IDX
    }

    /// Decomposes a non-constant function into its top variable and the
    /// else/then cofactors; `None` for the two constants.
    pub fn node_parts(&self, f: BddRef) -> Option<(Var, BddRef, BddRef)> {
        debug_assert_eq!(f.mgr, self.id);
        if f.idx == FALSE_IDX || f.idx == TRUE_IDX {
            return None;
        }
        let n = self.nodes[f.idx as usize];
        Some((Var(n.var), self.wrap(n.lo), self.wrap(n.hi)))
    }

    pub fn var_bdd(&mut self, v: Var) -> BddResult {
        let idx = self.mk(v.0, FALSE_IDX, TRUE_IDX)?;
        Ok(self.wrap(idx))
    }

    pub fn literal(&mut self, v: Var, phase: bool) -> BddResult {
        let idx = if phase {
            self.mk(v.0, FALSE_IDX, TRUE_IDX)?
        } else {
            self.mk(v.0, TRUE_IDX, FALSE_IDX)?
        };
        Ok(self.wrap(idx))
    }

    fn pos_of(&self, var: u32) -> u32 {
        if var == TERM_VAR {
            TERM_POS
        } else {
            self.position[var as usize]
        }
    }

    /// Hash-consing constructor; maintains canonicity (no redundant node,
    /// no duplicate) and the node cap.
    fn mk(&mut self, var: u32, lo: u32, hi: u32) -> Result<u32, BddError> {
        if lo == hi {
            return Ok(lo);
        }
        debug_assert!(self.pos_of(var) < self.pos_of(self.nodes[lo as usize].var));
        debug_assert!(self.pos_of(var) < self.pos_of(self.nodes[hi as usize].var));
        let node = Node { var, lo, hi };
        if let Some(&idx) = self.unique.get(&node) {
            return Ok(idx);
        }
        if self.nodes.len() >= self.node_limit {
            return Err(BddError::NodeLimit { limit: self.node_limit });
        }
        let idx = self.nodes.len() as u32;
        self.nodes.push(node);
        self.unique.insert(node, idx);
        Ok(idx)
    }

    pub fn not(&mut self, f: BddRef) -> BddResult {
        let f = self.check(f)?;
        let r = self.not_rec(f)?;
        Ok(self.wrap(r))
    }

    fn not_rec(&mut self, f: u32) -> Result<u32, BddError> {
        if f == FALSE_IDX {
            return Ok(TRUE_IDX);
        }
        if f == TRUE_IDX {
            return Ok(FALSE_IDX);
        }
        let key = CacheKey::Not(f);
        if let Some(&r) = self.cache.get(&key) {
            return Ok(r);
        }
        let n = self.nodes[f as usize];
        let lo = self.not_rec(n.lo)?;
        let hi = self.not_rec(n.hi)?;
        let r = self.mk(n.var, lo, hi)?;
        self.cache.insert(key, r);
        Ok(r)
    }

    pub fn and(&mut self, f: BddRef, g: BddRef) -> BddResult {
        self.apply(BinOp::And, f, g)
    }

    pub fn or(&mut self, f: BddRef, g: BddRef) -> BddResult {
        self.apply(BinOp::Or, f, g)
    }

    pub fn xor(&mut self, f: BddRef, g: BddRef) -> BddResult {
        self.apply(BinOp::Xor, f, g)
    }

    pub fn implies(&mut self, f: BddRef, g: BddRef) -> BddResult {
        self.apply(BinOp::Imp, f, g)
    }

    pub fn iff(&mut self, f: BddRef, g: BddRef) -> BddResult {
        self.apply(BinOp::Iff, f, g)
    }

    fn apply(&mut self, op: BinOp, f: BddRef, g: BddRef) -> BddResult {
        let f = self.check(f)?;
        let g = self.check(g)?;
        let r = self.apply_rec(op, f, g)?;
        Ok(self.wrap(r))
    }

    fn apply_terminal(&mut self, op: BinOp, f: u32, g: u32) -> Option<Result<u32, BddError>> {
        use BinOp::*;
        let t = TRUE_IDX;
        let z = FALSE_IDX;
        let r = match op {
            And => match (f, g) {
                _ if f == z || g == z => z,
                _ if f == t => g,
                _ if g == t => f,
                _ if f == g => f,
                _ => return None,
            },
            Or => match (f, g) {
                _ if f == t || g == t => t,
                _ if f == z => g,
                _ if g == z => f,
                _ if f == g => f,
                _ => return None,
            },
            Xor => match (f, g) {
                _ if f == z => g,
                _ if g == z => f,
                _ if f == g => z,
                _ if f == t => return Some(self.not_rec(g)),
                _ if g == t => return Some(self.not_rec(f)),
                _ => return None,
            },
            Imp => match (f, g) {
                _ if f == z || g == t => t,
                _ if f == t => g,
                _ if f == g => t,
                _ if g == z => return Some(self.not_rec(f)),
                _ => return None,
            },
            Iff => match (f, g) {
                _ if f == t => g,
                _ if g == t => f,
                _ if f == g => t,
                _ if f == z => return Some(self.not_rec(g)),
                _ if g == z => return Some(self.not_rec(f)),
                _ => return None,
            },
        };
        Some(Ok(r))
    }

    fn apply_rec(&mut self, op: BinOp, f: u32, g: u32) -> Result<u32, BddError> {
        if let Some(r) = self.apply_terminal(op, f, g) {
            return r;
        }
        // commutative ops get a normalized cache key
        let (a, b) = match op {
            BinOp::Imp => (f, g),
            _ if f <= g => (f, g),
            _ => (g, f),
        };
        let key = CacheKey::Bin(op, a, b);
        if let Some(&r) = self.cache.get(&key) {
            return Ok(r);
        }
        let nf = self.nodes[f as usize];
        let ng = self.nodes[g as usize];
        let (pf, pg) = (self.pos_of(nf.var), self.pos_of(ng.var));
        let var = if pf <= pg { nf.var } else { ng.var };
        let (f0, f1) = if pf <= pg { (nf.lo, nf.hi) } else { (f, f) };
        let (g0, g1) = if pg <= pf { (ng.lo, ng.hi) } else { (g, g) };
        let lo = self.apply_rec(op, f0, g0)?;
        let hi = self.apply_rec(op, f1, g1)?;
        let r = self.mk(var, lo, hi)?;
        self.cache.insert(key, r);
        Ok(r)
    }

    pub fn ite(&mut self, i: BddRef, t: BddRef, e: BddRef) -> BddResult {
        let i = self.check(i)?;
        let t = self.check(t)?;
        let e = self.check(e)?;
        let r = self.ite_rec(i, t, e)?;
        Ok(self.wrap(r))
    }

    fn ite_rec(&mut self, i: u32, t: u32, e: u32) -> Result<u32, BddError> {
        if i == TRUE_IDX {
            return Ok(t);
        }
        if i == FALSE_IDX {
            return Ok(e);
        }
        if t == e {
            return Ok(t);
        }
        if t == TRUE_IDX && e == FALSE_IDX {
            return Ok(i);
        }
        if t == FALSE_IDX && e == TRUE_IDX {
            return self.not_rec(i);
        }
        let key = CacheKey::Ite(i, t, e);
        if let Some(&r) = self.cache.get(&key) {
            return Ok(r);
        }
        let top = [i, t, e]
            .iter()
            .map(|&x| self.pos_of(self.nodes[x as usize].var))
            .min()
            .unwrap();
        let var = [i, t, e]
            .iter()
            .map(|&x| self.nodes[x as usize].var)
            .find(|&v| self.pos_of(v) == top)
            .unwrap();
        let (i0, i1) = self.cofactor(i, var);
        let (t0, t1) = self.cofactor(t, var);
        let (e0, e1) = self.cofactor(e, var);
        let lo = self.ite_rec(i0, t0, e0)?;
        let hi = self.ite_rec(i1, t1, e1)?;
        let r = self.mk(var, lo, hi)?;
        self.cache.insert(key, r);
        Ok(r)
    }

    fn cofactor(&self, f: u32, var: u32) -> (u32, u32) {
        let n = self.nodes[f as usize];
        if n.var == var {
            (n.lo, n.hi)
        } else {
            (f, f)
        }
    }

    fn intern_varset(&mut self, vars: &[Var]) -> u32 {
        let mut positions: Vec<u32> = vars.iter().map(|v| self.position[v.index()]).collect();
        positions.sort_unstable();
        positions.dedup();
        match self.varset_ids.entry(positions.clone()) {
            Entry::Occupied(e) => *e.get(),
            Entry::Vacant(e) => {
                let id = self.varsets.len() as u32;
                e.insert(id);
                self.varsets.push(positions);
                id
            }
        }
    }

    /// Existential quantification over a block of variables.
    pub fn exists(&mut self, vars: &[Var], f: BddRef) -> BddResult {
        let f = self.check(f)?;
        let set = self.intern_varset(vars);
        let r = self.quant_rec(false, f, set)?;
        Ok(self.wrap(r))
    }

    /// Universal quantification over a block of variables.
    pub fn forall(&mut self, vars: &[Var], f: BddRef) -> BddResult {
        let f = self.check(f)?;
        let set = self.intern_varset(vars);
        let r = self.quant_rec(true, f, set)?;
        Ok(self.wrap(r))
    }

    fn quant_rec(&mut self, forall: bool, f: u32, set: u32) -> Result<u32, BddError> {
        let n = self.nodes[f as usize];
        if n.var == TERM_VAR {
            return Ok(f);
        }
        let pos = self.pos_of(n.var);
        // nothing left to quantify at or below this level?
        match self.varsets[set as usize].last() {
            None => return Ok(f),
            Some(&max) if max < pos => return Ok(f),
            _ => {}
        }
        let key = CacheKey::Quant(forall, f, set);
        if let Some(&r) = self.cache.get(&key) {
            return Ok(r);
        }
        let lo = self.quant_rec(forall, n.lo, set)?;
        let hi = self.quant_rec(forall, n.hi, set)?;
        let quantified = self.varsets[set as usize].binary_search(&pos).is_ok();
        let r = if quantified {
            if forall {
                self.apply_rec(BinOp::And, lo, hi)?
            } else {
                self.apply_rec(BinOp::Or, lo, hi)?
            }
        } else {
            self.mk(n.var, lo, hi)?
        };
        self.cache.insert(key, r);
        Ok(r)
    }

    /// Simultaneous substitution of variables by functions.
    ///
    /// All replacements happen with respect to the original `f`; replacements
    /// are not re-applied inside the substituted functions.
    pub fn compose(&mut self, f: BddRef, subst: &[(Var, BddRef)]) -> BddResult {
        let f = self.check(f)?;
        let mut map: HashMap<u32, u32> = HashMap::with_capacity(subst.len());
        for &(v, g) in subst {
            let g = self.check(g)?;
            map.insert(v.0, g);
        }
        let mut memo = HashMap::new();
        let r = self.compose_rec(f, &map, &mut memo)?;
        Ok(self.wrap(r))
    }

    fn compose_rec(
        &mut self,
        f: u32,
        map: &HashMap<u32, u32>,
        memo: &mut HashMap<u32, u32>,
    ) -> Result<u32, BddError> {
        if f == FALSE_IDX || f == TRUE_IDX {
            return Ok(f);
        }
        if let Some(&r) = memo.get(&f) {
            return Ok(r);
        }
        let n = self.nodes[f as usize];
        let lo = self.compose_rec(n.lo, map, memo)?;
        let hi = self.compose_rec(n.hi, map, memo)?;
        let branch = match map.get(&n.var) {
            Some(&g) => g,
            None => self.mk(n.var, FALSE_IDX, TRUE_IDX)?,
        };
        let r = self.ite_rec(branch, hi, lo)?;
        memo.insert(f, r);
        Ok(r)
    }

    /// Renames variables (a special case of [`Self::compose`]).
    pub fn rename(&mut self, f: BddRef, pairs: &[(Var, Var)]) -> BddResult {
        let mut subst = Vec::with_capacity(pairs.len());
        for &(from, to) in pairs {
            let g = self.var_bdd(to)?;
            subst.push((from, g));
        }
        self.compose(f, &subst)
    }

    /// Generalized-cofactor simplification: the result agrees with `f` on
    /// every assignment satisfying `care` and may be anything elsewhere.
    /// No size guarantee is promised (and none is asserted anywhere).
    pub fn restrict(&mut self, f: BddRef, care: BddRef) -> BddResult {
        let f = self.check(f)?;
        let care = self.check(care)?;
        let r = self.restrict_rec(f, care)?;
        Ok(self.wrap(r))
    }

    fn restrict_rec(&mut self, f: u32, c: u32) -> Result<u32, BddError> {
        if c == TRUE_IDX || f == FALSE_IDX || f == TRUE_IDX {
            return Ok(f);
        }
        if c == FALSE_IDX {
            // empty care set: any result is legal, keep f
            return Ok(f);
        }
        let key = CacheKey::Restrict(f, c);
        if let Some(&r) = self.cache.get(&key) {
            return Ok(r);
        }
        let nf = self.nodes[f as usize];
        let nc = self.nodes[c as usize];
        let r = if self.pos_of(nc.var) < self.pos_of(nf.var) {
            // f does not depend on the care set's top variable
            if nc.lo == FALSE_IDX {
                self.restrict_rec(f, nc.hi)?
            } else if nc.hi == FALSE_IDX {
                self.restrict_rec(f, nc.lo)?
            } else {
                let c2 = self.apply_rec(BinOp::Or, nc.lo, nc.hi)?;
                self.restrict_rec(f, c2)?
            }
        } else {
            let var = nf.var;
            let (f0, f1) = (nf.lo, nf.hi);
            let (c0, c1) = self.cofactor(c, var);
            if c0 == FALSE_IDX {
                // sibling substitution
                self.restrict_rec(f1, c1)?
            } else if c1 == FALSE_IDX {
                self.restrict_rec(f0, c0)?
            } else {
                let lo = self.restrict_rec(f0, c0)?;
                let hi = self.restrict_rec(f1, c1)?;
                self.mk(var, lo, hi)?
            }
        };
        self.cache.insert(key, r);
        Ok(r)
    }

    /// Variables `f` actually depends on, sorted by order position.
    pub fn support(&self, f: BddRef) -> Vec<Var> {
        let Ok(f) = self.check(f) else { return Vec::new() };
        let mut seen = vec![false; 0];
        seen.resize(self.nodes.len(), false);
        let mut vars: Vec<u32> = Vec::new();
        let mut stack = vec![f];
        while let Some(x) = stack.pop() {
            if x == FALSE_IDX || x == TRUE_IDX || seen[x as usize] {
                continue;
            }
            seen[x as usize] = true;
            let n = self.nodes[x as usize];
            vars.push(n.var);
            stack.push(n.lo);
            stack.push(n.hi);
        }
        vars.sort_unstable_by_key(|&v| self.position[v as usize]);
        vars.dedup();
        vars.into_iter().map(Var).collect()
    }

    /// Evaluates `f` under the assignment `vals[var.index()]`; missing
    /// entries read as false.
    pub fn eval(&self, f: BddRef, vals: &[bool]) -> bool {
        let Ok(mut idx) = self.check(f) else { return false };
        loop {
            match idx {
                FALSE_IDX => return false,
                TRUE_IDX => return true,
                _ => {
                    let n = self.nodes[idx as usize];
                    let v = vals.get(n.var as usize).copied().unwrap_or(false);
                    idx = if v { n.hi } else { n.lo };
                }
            }
        }
    }

    /// Some satisfying path, as explicit (variable, phase) choices.
    /// Variables absent from the result are unconstrained.
    pub fn pick_cube(&self, f: BddRef) -> Option<Vec<(Var, bool)>> {
        let idx = self.check(f).ok()?;
        if idx == FALSE_IDX {
            return None;
        }
        let mut cube = Vec::new();
        let mut cur = idx;
        while cur != TRUE_IDX {
            let n = self.nodes[cur as usize];
            if n.hi != FALSE_IDX {
                cube.push((Var(n.var), true));
                cur = n.hi;
            } else {
                cube.push((Var(n.var), false));
                cur = n.lo;
            }
        }
        Some(cube)
    }

    /// Conjunction of literals.
    pub fn cube(&mut self, lits: &[(Var, bool)]) -> BddResult {
        let mut acc = self.one();
        // build bottom-up for linear node count
        let mut sorted: Vec<(Var, bool)> = lits.to_vec();
        sorted.sort_by_key(|(v, _)| std::cmp::Reverse(self.position[v.index()]));
        for &(v, phase) in &sorted {
            let lit = self.literal(v, phase)?;
            acc = self.and(lit, acc)?;
        }
        Ok(acc)
    }

    pub fn and_many(&mut self, fs: &[BddRef]) -> BddResult {
        let mut acc = self.one();
        for &f in fs {
            acc = self.and(acc, f)?;
        }
        Ok(acc)
    }

    pub fn or_many(&mut self, fs: &[BddRef]) -> BddResult {
        let mut acc = self.zero();
        for &f in fs {
            acc = self.or(acc, f)?;
        }
        Ok(acc)
    }

    /// Does `f` imply `g`?
    pub fn leq(&mut self, f: BddRef, g: BddRef) -> BddResult<bool> {
        let ng = self.not(g)?;
        let d = self.and(f, ng)?;
        Ok(self.is_zero(d))
    }

    /// Reachable node count of one function (terminals excluded).
    pub fn size(&self, f: BddRef) -> usize {
        let Ok(f) = self.check(f) else { return 0 };
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![f];
        let mut count = 0;
        while let Some(x) = stack.pop() {
            if x == FALSE_IDX || x == TRUE_IDX || seen[x as usize] {
                continue;
            }
            seen[x as usize] = true;
            count += 1;
            let n = self.nodes[x as usize];
            stack.push(n.lo);
            stack.push(n.hi);
        }
        count
    }

    /// Graphviz rendering: solid edge to the high child, dashed to the low.
    pub fn to_dot(&self, f: BddRef) -> String {
        let mut out = String::from("digraph bdd {\n");
        let _ = writeln!(out, "  f [shape=plaintext,label=\"f\"];");
        let _ = writeln!(out, "  n0 [shape=box,label=\"0\"];");
        let _ = writeln!(out, "  n1 [shape=box,label=\"1\"];");
        let Ok(root) = self.check(f) else {
            out.push_str("}\n");
            return out;
        };
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![root];
        let _ = writeln!(out, "  f -> n{};", root);
        while let Some(x) = stack.pop() {
            if x == FALSE_IDX || x == TRUE_IDX || seen[x as usize] {
                continue;
            }
            seen[x as usize] = true;
            let n = self.nodes[x as usize];
            let label = self
                .names
                .get(n.var as usize)
                .cloned()
                .unwrap_or_else(|| format!("v{}", n.var));
            let _ = writeln!(out, "  n{} [shape=circle,label=\"{}\"];", x, label);
            let _ = writeln!(out, "  n{} -> n{} [style=solid];", x, n.hi);
            let _ = writeln!(out, "  n{} -> n{} [style=dashed];", x, n.lo);
            stack.push(n.lo);
            stack.push(n.hi);
        }
        out.push_str("}\n");
        out
    }

    /// Rebuilds `roots` in a fresh manager under `order` (a permutation of
    /// all variables). Returns the manager and the translated roots.
    pub fn copy_with_order(&self, order: &[Var], roots: &[BddRef]) -> BddResult<(BddManager, Vec<BddRef>)> {
        assert_eq!(order.len(), self.num_vars(), "order must cover every variable");
        let mut fresh = BddManager::with_node_limit(self.node_limit);
        // keep variable identities: allocate in id order, then set positions
        for i in 0..self.num_vars() {
            fresh.new_var(self.names[i].clone());
        }
        for (p, &v) in order.iter().enumerate() {
            fresh.order[p] = v;
            fresh.position[v.index()] = p as u32;
        }
        let mut memo: HashMap<u32, u32> = HashMap::new();
        let mut new_roots = Vec::with_capacity(roots.len());
        for &r in roots {
            let r = self.check(r)?;
            let t = self.transfer_rec(r, &mut fresh, &mut memo)?;
            new_roots.push(BddRef { mgr: fresh.id, idx: t });
        }
        Ok((fresh, new_roots))
    }

    fn transfer_rec(
        &self,
        f: u32,
        dst: &mut BddManager,
        memo: &mut HashMap<u32, u32>,
    ) -> Result<u32, BddError> {
        if f == FALSE_IDX || f == TRUE_IDX {
            return Ok(f);
        }
        if let Some(&r) = memo.get(&f) {
            return Ok(r);
        }
        let n = self.nodes[f as usize];
        let lo = self.transfer_rec(n.lo, dst, memo)?;
        let hi = self.transfer_rec(n.hi, dst, memo)?;
        let branch = dst.mk(n.var, FALSE_IDX, TRUE_IDX)?;
        let r = dst.ite_rec(branch, hi, lo)?;
        memo.insert(f, r);
        Ok(r)
    }

    /// Greedy sifting on a rebuilt copy: tries each variable at every order
    /// position, keeping the placement that minimizes the total size of
    /// `roots`. Off by default everywhere; callers opt in explicitly.
    pub fn sifted_copy(&self, roots: &[BddRef]) -> BddResult<(BddManager, Vec<BddRef>)> {
        let n = self.num_vars();
        let mut best_order: Vec<Var> = self.order.clone();
        if n <= 1 || n > 64 {
            return self.copy_with_order(&best_order, roots);
        }
        let cost = |order: &[Var]| -> BddResult<usize> {
            let (m, rs) = self.copy_with_order(order, roots)?;
            Ok(rs.iter().map(|&r| m.size(r)).sum())
        };
        let mut best_cost = cost(&best_order)?;
        for vi in 0..n {
            let v = self.order[vi];
            let mut local_best = best_order.clone();
            let mut local_cost = best_cost;
            let base: Vec<Var> = best_order.iter().copied().filter(|&x| x != v).collect();
            for slot in 0..n {
                let mut cand = base.clone();
                cand.insert(slot, v);
                if cand == best_order {
                    continue;
                }
                let c = cost(&cand)?;
                if c < local_cost {
                    local_cost = c;
                    local_best = cand;
                }
            }
            best_order = local_best;
            best_cost = local_cost;
        }
        self.copy_with_order(&best_order, roots)
    }
}

impl Default for BddManager {
    fn default() -> Self {
        Self::new()
    }
}

/// Role-tagged variable groups of one game encoding.
///
/// Latch and predicate variables come in (now, next) pairs, matched by index.
#[derive(Debug, Clone, Default)]
pub struct VarBlock {
    pub unc: Vec<Var>,
    pub ctrl: Vec<Var>,
    pub latch_now: Vec<Var>,
    pub latch_next: Vec<Var>,
    pub pred_now: Vec<Var>,
    pub pred_next: Vec<Var>,
}

impl VarBlock {
    /// Checks pairing lengths and mutual disjointness.
    pub fn validate(&self) -> Result<(), String> {
        if self.latch_now.len() != self.latch_next.len() {
            return Err("latch now/next groups differ in length".into());
        }
        if self.pred_now.len() != self.pred_next.len() {
            return Err("predicate now/next groups differ in length".into());
        }
        let mut all: Vec<Var> = self.all_vars();
        let total = all.len();
        all.sort_unstable();
        all.dedup();
        if all.len() != total {
            return Err("variable groups overlap".into());
        }
        Ok(())
    }

    pub fn all_vars(&self) -> Vec<Var> {
        let mut all = Vec::new();
        all.extend_from_slice(&self.unc);
        all.extend_from_slice(&self.ctrl);
        all.extend_from_slice(&self.latch_now);
        all.extend_from_slice(&self.latch_next);
        all.extend_from_slice(&self.pred_now);
        all.extend_from_slice(&self.pred_next);
        all
    }

    pub fn latch_pairs(&self) -> impl Iterator<Item = (Var, Var)> + '_ {
        self.latch_now.iter().copied().zip(self.latch_next.iter().copied())
    }

    pub fn pred_pairs(&self) -> impl Iterator<Item = (Var, Var)> + '_ {
        self.pred_now.iter().copied().zip(self.pred_next.iter().copied())
    }

    /// Rename map latch-now -> latch-next.
    pub fn now_to_next(&self) -> Vec<(Var, Var)> {
        self.latch_pairs().collect()
    }

    /// Rename map latch-next -> latch-now.
    pub fn next_to_now(&self) -> Vec<(Var, Var)> {
        self.latch_pairs().map(|(n, x)| (x, n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// Independent reference: expression trees evaluated directly.
    #[derive(Debug, Clone)]
    enum Expr {
        Var(usize),
        Not(Box<Expr>),
        And(Box<Expr>, Box<Expr>),
        Or(Box<Expr>, Box<Expr>),
        Xor(Box<Expr>, Box<Expr>),
    }

    impl Expr {
        fn eval(&self, vals: &[bool]) -> bool {
            match self {
                Expr::Var(i) => vals[*i],
                Expr::Not(a) => !a.eval(vals),
                Expr::And(a, b) => a.eval(vals) && b.eval(vals),
                Expr::Or(a, b) => a.eval(vals) || b.eval(vals),
                Expr::Xor(a, b) => a.eval(vals) ^ b.eval(vals),
            }
        }

        fn random(rng: &mut StdRng, nvars: usize, depth: usize) -> Expr {
            if depth == 0 || rng.gen_bool(0.3) {
                return Expr::Var(rng.gen_range(0..nvars));
            }
            let a = Box::new(Expr::random(rng, nvars, depth - 1));
            match rng.gen_range(0..4) {
                0 => Expr::Not(a),
                1 => Expr::And(a, Box::new(Expr::random(rng, nvars, depth - 1))),
                2 => Expr::Or(a, Box::new(Expr::random(rng, nvars, depth - 1))),
                _ => Expr::Xor(a, Box::new(Expr::random(rng, nvars, depth - 1))),
            }
        }

        fn build(&self, m: &mut BddManager, vars: &[Var]) -> BddRef {
            match self {
                Expr::Var(i) => m.var_bdd(vars[*i]).unwrap(),
                Expr::Not(a) => {
                    let a = a.build(m, vars);
                    m.not(a).unwrap()
                }
                Expr::And(a, b) => {
                    let (a, b) = (a.build(m, vars), b.build(m, vars));
                    m.and(a, b).unwrap()
                }
                Expr::Or(a, b) => {
                    let (a, b) = (a.build(m, vars), b.build(m, vars));
                    m.or(a, b).unwrap()
                }
                Expr::Xor(a, b) => {
                    let (a, b) = (a.build(m, vars), b.build(m, vars));
                    m.xor(a, b).unwrap()
                }
            }
        }
    }

    fn assignments(n: usize) -> impl Iterator<Item = Vec<bool>> {
        (0..1usize << n).map(move |bits| (0..n).map(|i| bits >> i & 1 == 1).collect())
    }

    fn setup(n: usize) -> (BddManager, Vec<Var>) {
        let mut m = BddManager::new();
        let vars = (0..n).map(|i| m.new_var(format!("x{i}"))).collect();
        (m, vars)
    }

    #[test]
    fn terminal_and_literal_identities() {
        let (mut m, v) = setup(2);
        let x = m.var_bdd(v[0]).unwrap();
        let t = m.one();
        let z = m.zero();
        assert_eq!(m.and(x, t).unwrap(), x);
        assert_eq!(m.and(x, z).unwrap(), z);
        assert_eq!(m.or(x, z).unwrap(), x);
        assert_eq!(m.or(x, t).unwrap(), t);
        let nx = m.not(x).unwrap();
        let nnx = m.not(nx).unwrap();
        assert_eq!(nnx, x);
        let xz = m.and(x, nx).unwrap();
        assert_eq!(xz, z);
    }

    #[test]
    fn semantic_equality_is_handle_equality() {
        let (mut m, v) = setup(3);
        let a = m.var_bdd(v[0]).unwrap();
        let b = m.var_bdd(v[1]).unwrap();
        let c = m.var_bdd(v[2]).unwrap();
        // (a & b) | (a & c) == a & (b | c)
        let ab = m.and(a, b).unwrap();
        let ac = m.and(a, c).unwrap();
        let lhs = m.or(ab, ac).unwrap();
        let bc = m.or(b, c).unwrap();
        let rhs = m.and(a, bc).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn random_expressions_match_direct_evaluation() {
        let mut rng = StdRng::seed_from_u64(0xb0d);
        for _ in 0..200 {
            let n = rng.gen_range(1..=5);
            let (mut m, vars) = setup(n);
            let e = Expr::random(&mut rng, n, 5);
            let f = e.build(&mut m, &vars);
            for vals in assignments(n) {
                assert_eq!(m.eval(f, &vals), e.eval(&vals), "expr {e:?} on {vals:?}");
            }
        }
    }

    #[test]
    fn quantifiers_match_cofactor_combinations() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.gen_range(2..=5);
            let (mut m, vars) = setup(n);
            let e = Expr::random(&mut rng, n, 5);
            let f = e.build(&mut m, &vars);
            let k = rng.gen_range(1..=n);
            let block: Vec<Var> = vars.iter().copied().take(k).collect();
            let ex = m.exists(&block, f).unwrap();
            let all = m.forall(&block, f).unwrap();
            for vals in assignments(n) {
                let mut any = false;
                let mut every = true;
                for sub in assignments(k) {
                    let mut w = vals.clone();
                    for (i, b) in sub.iter().enumerate() {
                        w[i] = *b;
                    }
                    let val = e.eval(&w);
                    any |= val;
                    every &= val;
                }
                assert_eq!(m.eval(ex, &vals), any);
                assert_eq!(m.eval(all, &vals), every);
            }
        }
    }

    #[test]
    fn forall_is_dual_of_exists() {
        let mut rng = StdRng::seed_from_u64(8);
        for _ in 0..50 {
            let n = rng.gen_range(2..=6);
            let (mut m, vars) = setup(n);
            let e = Expr::random(&mut rng, n, 5);
            let f = e.build(&mut m, &vars);
            let block: Vec<Var> = vars.iter().copied().step_by(2).collect();
            let all = m.forall(&block, f).unwrap();
            let nf = m.not(f).unwrap();
            let ex = m.exists(&block, nf).unwrap();
            let dual = m.not(ex).unwrap();
            assert_eq!(all, dual);
        }
    }

    #[test]
    fn compose_is_simultaneous() {
        // f = x0 xor x1, substitute x0 <- x1, x1 <- x0 simultaneously: unchanged
        let (mut m, v) = setup(2);
        let x0 = m.var_bdd(v[0]).unwrap();
        let x1 = m.var_bdd(v[1]).unwrap();
        let f = m.xor(x0, x1).unwrap();
        let g = m.compose(f, &[(v[0], x1), (v[1], x0)]).unwrap();
        assert_eq!(f, g);
        // sequential substitution would have collapsed it to false
        let h1 = m.compose(f, &[(v[0], x1)]).unwrap();
        let h2 = m.compose(h1, &[(v[1], x0)]).unwrap();
        let alt = m.xor(x1, x0).unwrap();
        assert_eq!(h1, m.zero());
        assert_eq!(h2, m.zero());
        assert_eq!(alt, f);
    }

    #[test]
    fn compose_matches_pointwise_semantics() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.gen_range(2..=4);
            let (mut m, vars) = setup(n);
            let e = Expr::random(&mut rng, n, 4);
            let f = e.build(&mut m, &vars);
            let ga = Expr::random(&mut rng, n, 3);
            let gb = Expr::random(&mut rng, n, 3);
            let fa = ga.build(&mut m, &vars);
            let fb = gb.build(&mut m, &vars);
            let sub = [(vars[0], fa), (vars[1], fb)];
            let r = m.compose(f, &sub).unwrap();
            for vals in assignments(n) {
                let mut w = vals.clone();
                w[0] = ga.eval(&vals);
                w[1] = gb.eval(&vals);
                assert_eq!(m.eval(r, &vals), e.eval(&w));
            }
        }
    }

    #[test]
    fn restrict_agrees_on_care_set() {
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..200 {
            let n = rng.gen_range(1..=5);
            let (mut m, vars) = setup(n);
            let ef = Expr::random(&mut rng, n, 5);
            let ec = Expr::random(&mut rng, n, 4);
            let f = ef.build(&mut m, &vars);
            let c = ec.build(&mut m, &vars);
            let r = m.restrict(f, c).unwrap();
            for vals in assignments(n) {
                if ec.eval(&vals) {
                    assert_eq!(m.eval(r, &vals), ef.eval(&vals));
                }
            }
        }
    }

    #[test]
    fn restrict_on_relevant_care_set_is_identity_like() {
        let (mut m, v) = setup(3);
        let x0 = m.var_bdd(v[0]).unwrap();
        let x1 = m.var_bdd(v[1]).unwrap();
        let f = m.and(x0, x1).unwrap();
        // care = x0: restrict(x0 & x1, x0) = x1
        let r = m.restrict(f, x0).unwrap();
        assert_eq!(r, x1);
    }

    #[test]
    fn support_reports_dependencies_only() {
        let (mut m, v) = setup(4);
        let x0 = m.var_bdd(v[0]).unwrap();
        let x2 = m.var_bdd(v[2]).unwrap();
        let f = m.and(x0, x2).unwrap();
        assert_eq!(m.support(f), vec![v[0], v[2]]);
        let nx0 = m.not(x0).unwrap();
        let tautology = m.or(x0, nx0).unwrap();
        assert!(m.support(tautology).is_empty());
    }

    #[test]
    fn node_limit_surfaces_as_error() {
        let mut m = BddManager::with_node_limit(4);
        let a = m.new_var("a");
        let b = m.new_var("b");
        let c = m.new_var("c");
        let fa = m.var_bdd(a).unwrap();
        let fb = m.var_bdd(b).unwrap();
        let ab = m.and(fa, fb);
        // 2 terminals + a + b nodes hit the cap before the conjunction node
        let err = ab
            .and_then(|x| {
                let fc = m.var_bdd(c)?;
                m.and(x, fc)
            })
            .unwrap_err();
        assert_eq!(err, BddError::NodeLimit { limit: 4 });
    }

    #[test]
    fn manager_mismatch_is_detected() {
        let (mut m1, v1) = setup(1);
        let (mut m2, _) = setup(1);
        let f = m1.var_bdd(v1[0]).unwrap();
        let g = m2.one();
        assert_eq!(m1.and(f, g).unwrap_err(), BddError::ManagerMismatch);
        assert_eq!(m2.not(f).unwrap_err(), BddError::ManagerMismatch);
    }

    #[test]
    fn pick_cube_satisfies_function() {
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..100 {
            let n = rng.gen_range(1..=6);
            let (mut m, vars) = setup(n);
            let e = Expr::random(&mut rng, n, 5);
            let f = e.build(&mut m, &vars);
            match m.pick_cube(f) {
                None => assert!(m.is_zero(f)),
                Some(cube) => {
                    let mut vals = vec![false; n];
                    for (v, phase) in cube {
                        vals[v.index()] = phase;
                    }
                    assert!(m.eval(f, &vals));
                }
            }
        }
    }

    #[test]
    fn dot_export_mentions_both_edge_styles() {
        let (mut m, v) = setup(2);
        let x0 = m.var_bdd(v[0]).unwrap();
        let x1 = m.var_bdd(v[1]).unwrap();
        let f = m.and(x0, x1).unwrap();
        let dot = m.to_dot(f);
        assert!(dot.contains("style=solid"));
        assert!(dot.contains("style=dashed"));
        assert!(dot.contains("x0"));
        assert!(dot.starts_with("digraph"));
    }

    #[test]
    fn copy_with_order_preserves_semantics() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..50 {
            let n = rng.gen_range(2..=5);
            let (mut m, vars) = setup(n);
            let e = Expr::random(&mut rng, n, 5);
            let f = e.build(&mut m, &vars);
            let mut order = vars.clone();
            // deterministic shuffle
            for i in (1..order.len()).rev() {
                order.swap(i, rng.gen_range(0..=i));
            }
            let (m2, roots) = m.copy_with_order(&order, &[f]).unwrap();
            for vals in assignments(n) {
                assert_eq!(m2.eval(roots[0], &vals), e.eval(&vals));
            }
        }
    }

    #[test]
    fn sifted_copy_preserves_semantics_and_never_grows() {
        let mut rng = StdRng::seed_from_u64(29);
        for _ in 0..10 {
            let n = rng.gen_range(3..=6);
            let (mut m, vars) = setup(n);
            let e = Expr::random(&mut rng, n, 6);
            let f = e.build(&mut m, &vars);
            let before = m.size(f);
            let (m2, roots) = m.sifted_copy(&[f]).unwrap();
            assert!(m2.size(roots[0]) <= before);
            for vals in assignments(n) {
                assert_eq!(m2.eval(roots[0], &vals), e.eval(&vals));
            }
        }
    }

    #[test]
    fn varblock_validation_catches_overlap_and_mispairing() {
        let (mut m, _) = setup(0);
        let a = m.new_var("a");
        let b = m.new_var("b");
        let block = VarBlock {
            unc: vec![a],
            ctrl: vec![a],
            ..Default::default()
        };
        assert!(block.validate().is_err());
        let block = VarBlock {
            latch_now: vec![a, b],
            latch_next: vec![a],
            ..Default::default()
        };
        assert!(block.validate().is_err());
        let block = VarBlock {
            latch_now: vec![a],
            latch_next: vec![b],
            ..Default::default()
        };
        assert!(block.validate().is_ok());
    }

    #[test]
    fn cube_builds_expected_minterm() {
        let (mut m, v) = setup(3);
        let c = m.cube(&[(v[0], true), (v[2], false)]).unwrap();
        for vals in assignments(3) {
            assert_eq!(m.eval(c, &vals), vals[0] && !vals[2]);
        }
    }
}
