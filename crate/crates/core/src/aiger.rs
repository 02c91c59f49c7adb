//! ASCII AIGER (`aag`) reading, writing, and controller splicing.
//!
//! Files follow the SyntComp convention: exactly one output (the error
//! signal), and controllable inputs are the ones whose symbol-table name
//! starts with `controllable_`. Unnamed inputs count as uncontrollable.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

/// An AIGER literal: variable index shifted left once, low bit = negation.
/// Literal 0 is constant false, literal 1 constant true.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(pub u32);

impl Lit {
    pub const FALSE: Lit = Lit(0);
    pub const TRUE: Lit = Lit(1);

    pub fn from_var(var: u32, negated: bool) -> Lit {
        Lit(var << 1 | negated as u32)
    }

    pub fn var(self) -> u32 {
        self.0 >> 1
    }

    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn negate(self) -> Lit {
        Lit(self.0 ^ 1)
    }

    pub fn is_const(self) -> bool {
        self.0 <= 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AndGate {
    pub lhs: Lit,
    pub rhs0: Lit,
    pub rhs1: Lit,
}

/// A parsed and validated `aag` file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AigFile {
    pub max_var: u32,
    pub inputs: Vec<Lit>,
    /// (current-state literal, next-state literal); latches initialize to 0.
    pub latches: Vec<(Lit, Lit)>,
    pub outputs: Vec<Lit>,
    pub ands: Vec<AndGate>,
    pub input_names: Vec<Option<String>>,
    pub latch_names: Vec<Option<String>>,
    pub output_names: Vec<Option<String>>,
    pub comments: Vec<String>,
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum AigerError {
    #[error("line {line}: malformed header ({reason})")]
    MalformedHeader { line: usize, reason: String },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: literal {lit} out of range")]
    LiteralOutOfRange { line: usize, lit: u32 },
    #[error("line {line}: and gate {lhs} is not in topological order")]
    CyclicAndDefinition { line: usize, lhs: u32 },
    #[error("line {line}: variable {var} defined more than once")]
    DuplicateDefinition { line: usize, var: u32 },
    #[error("line {line}: literal {lit} references an undefined variable")]
    UndefinedLiteral { line: usize, lit: u32 },
    #[error("line {line}: a specification needs exactly one output, found none")]
    MissingOutput { line: usize },
    #[error("line {line}: a specification needs exactly one output, found more")]
    MultipleOutputs { line: usize },
    #[error("controller splice: {what}")]
    DanglingReference { what: String },
}

pub type AigerResult<T> = Result<T, AigerError>;

const CONTROLLABLE_PREFIX: &str = "controllable_";

fn parse_u32(tok: &str, line: usize) -> AigerResult<u32> {
    tok.parse::<u32>().map_err(|_| AigerError::Malformed {
        line,
        reason: format!("expected a number, got {tok:?}"),
    })
}

/// Parses ASCII AIGER. All structural invariants are checked here: literal
/// ranges, single definitions, topological gate order, defined references,
/// and the single-output specification rule.
pub fn parse_aag(text: &str) -> AigerResult<AigFile> {
    let all_lines: Vec<&str> = text.lines().collect();
    let mut cursor = 0usize;
    let mut lines = std::iter::from_fn(|| {
        let r = all_lines.get(cursor).map(|&l| (cursor + 1, l));
        cursor += 1;
        r
    });
    let eof_line = all_lines.len() + 1;
    let (hline, header) = lines.next().ok_or(AigerError::MalformedHeader {
        line: 1,
        reason: "empty file".into(),
    })?;
    let toks: Vec<&str> = header.split_ascii_whitespace().collect();
    if toks.first() != Some(&"aag") {
        return Err(AigerError::MalformedHeader {
            line: hline,
            reason: "file does not start with 'aag'".into(),
        });
    }
    if toks.len() < 6 {
        return Err(AigerError::MalformedHeader {
            line: hline,
            reason: "expected 'aag M I L O A'".into(),
        });
    }
    let nums: Vec<u32> = toks[1..]
        .iter()
        .map(|t| parse_u32(t, hline))
        .collect::<AigerResult<_>>()
        .map_err(|_| AigerError::MalformedHeader {
            line: hline,
            reason: "header counts must be numbers".into(),
        })?;
    // liveness/justice/fairness extensions are out of scope: extra header
    // fields are accepted only when zero
    if nums.len() > 5 && nums[5..].iter().any(|&n| n != 0) {
        return Err(AigerError::MalformedHeader {
            line: hline,
            reason: "bad/justice/fairness sections are not supported".into(),
        });
    }
    let (max_var, ni, nl, no, na) = (nums[0], nums[1], nums[2], nums[3], nums[4]);
    if ni + nl + na > max_var {
        return Err(AigerError::MalformedHeader {
            line: hline,
            reason: format!("M = {max_var} is smaller than I + L + A"),
        });
    }
    match no {
        0 => return Err(AigerError::MissingOutput { line: hline }),
        1 => {}
        _ => return Err(AigerError::MultipleOutputs { line: hline }),
    }

    let mut next_line = |section: &str| -> AigerResult<(usize, &str)> {
        lines.next().ok_or_else(|| AigerError::Malformed {
            line: eof_line,
            reason: format!("file ends inside the {section} section"),
        })
    };

    let check_lit = |lit: u32, line: usize| -> AigerResult<Lit> {
        if lit > 2 * max_var + 1 {
            Err(AigerError::LiteralOutOfRange { line, lit })
        } else {
            Ok(Lit(lit))
        }
    };

    // definition table: 0 = undefined, 1 = input, 2 = latch, 3 = and
    let mut defined = vec![0u8; max_var as usize + 1];
    let mut define = |var: u32, kind: u8, line: usize| -> AigerResult<()> {
        if var == 0 {
            return Err(AigerError::Malformed {
                line,
                reason: "constant literal cannot be defined".into(),
            });
        }
        if defined[var as usize] != 0 {
            return Err(AigerError::DuplicateDefinition { line, var });
        }
        defined[var as usize] = kind;
        Ok(())
    };

    let mut file = AigFile {
        max_var,
        ..Default::default()
    };
    // references to check once every definition is known: (line, literal)
    let mut refs: Vec<(usize, Lit)> = Vec::new();

    for _ in 0..ni {
        let (ln, l) = next_line("input")?;
        let toks: Vec<&str> = l.split_ascii_whitespace().collect();
        if toks.len() != 1 {
            return Err(AigerError::Malformed {
                line: ln,
                reason: "input lines hold exactly one literal".into(),
            });
        }
        let lit = check_lit(parse_u32(toks[0], ln)?, ln)?;
        if lit.is_negated() || lit.is_const() {
            return Err(AigerError::Malformed {
                line: ln,
                reason: "inputs must be even, non-constant literals".into(),
            });
        }
        define(lit.var(), 1, ln)?;
        file.inputs.push(lit);
    }
    for _ in 0..nl {
        let (ln, l) = next_line("latch")?;
        let toks: Vec<&str> = l.split_ascii_whitespace().collect();
        if toks.len() != 2 {
            return Err(AigerError::Malformed {
                line: ln,
                reason: "latch lines hold 'current next' (all latches reset to 0)".into(),
            });
        }
        let cur = check_lit(parse_u32(toks[0], ln)?, ln)?;
        if cur.is_negated() || cur.is_const() {
            return Err(AigerError::Malformed {
                line: ln,
                reason: "latch literals must be even and non-constant".into(),
            });
        }
        let next = check_lit(parse_u32(toks[1], ln)?, ln)?;
        define(cur.var(), 2, ln)?;
        refs.push((ln, next));
        file.latches.push((cur, next));
    }
    for _ in 0..no {
        let (ln, l) = next_line("output")?;
        let toks: Vec<&str> = l.split_ascii_whitespace().collect();
        if toks.len() != 1 {
            return Err(AigerError::Malformed {
                line: ln,
                reason: "output lines hold exactly one literal".into(),
            });
        }
        let lit = check_lit(parse_u32(toks[0], ln)?, ln)?;
        refs.push((ln, lit));
        file.outputs.push(lit);
    }
    for _ in 0..na {
        let (ln, l) = next_line("and")?;
        let toks: Vec<&str> = l.split_ascii_whitespace().collect();
        if toks.len() != 3 {
            return Err(AigerError::Malformed {
                line: ln,
                reason: "and lines hold 'lhs rhs0 rhs1'".into(),
            });
        }
        let lhs = check_lit(parse_u32(toks[0], ln)?, ln)?;
        let rhs0 = check_lit(parse_u32(toks[1], ln)?, ln)?;
        let rhs1 = check_lit(parse_u32(toks[2], ln)?, ln)?;
        if lhs.is_negated() || lhs.is_const() {
            return Err(AigerError::Malformed {
                line: ln,
                reason: "and gate outputs must be even, non-constant literals".into(),
            });
        }
        if lhs.0 <= rhs0.0 || lhs.0 <= rhs1.0 {
            return Err(AigerError::CyclicAndDefinition { line: ln, lhs: lhs.0 });
        }
        define(lhs.var(), 3, ln)?;
        refs.push((ln, rhs0));
        refs.push((ln, rhs1));
        file.ands.push(AndGate { lhs, rhs0, rhs1 });
    }

    for (ln, lit) in refs {
        if !lit.is_const() && defined[lit.var() as usize] == 0 {
            return Err(AigerError::UndefinedLiteral { line: ln, lit: lit.0 });
        }
    }

    file.input_names = vec![None; ni as usize];
    file.latch_names = vec![None; nl as usize];
    file.output_names = vec![None; no as usize];

    // symbol table, then optional comment section
    let mut in_comments = false;
    for (ln, l) in lines {
        if in_comments {
            file.comments.push(l.to_string());
            continue;
        }
        if l.trim_end() == "c" {
            in_comments = true;
            continue;
        }
        let (head, name) = l.split_once(' ').ok_or_else(|| AigerError::Malformed {
            line: ln,
            reason: "expected a symbol entry like 'i0 name'".into(),
        })?;
        let (kind, idx) = head.split_at(1);
        let idx = parse_u32(idx, ln)? as usize;
        let slot = match kind {
            "i" => file.input_names.get_mut(idx),
            "l" => file.latch_names.get_mut(idx),
            "o" => file.output_names.get_mut(idx),
            _ => {
                return Err(AigerError::Malformed {
                    line: ln,
                    reason: format!("unknown symbol kind {kind:?}"),
                })
            }
        };
        let slot = slot.ok_or(AigerError::Malformed {
            line: ln,
            reason: format!("symbol index {idx} out of range"),
        })?;
        if slot.is_some() {
            return Err(AigerError::Malformed {
                line: ln,
                reason: format!("duplicate symbol entry for {head}"),
            });
        }
        *slot = Some(name.to_string());
    }

    Ok(file)
}

/// Serializes back to ASCII AIGER. `parse_aag(write_aag(f)) == f` for any
/// file produced by [`parse_aag`].
pub fn write_aag(file: &AigFile) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "aag {} {} {} {} {}",
        file.max_var,
        file.inputs.len(),
        file.latches.len(),
        file.outputs.len(),
        file.ands.len()
    );
    for i in &file.inputs {
        let _ = writeln!(out, "{}", i.0);
    }
    for (cur, next) in &file.latches {
        let _ = writeln!(out, "{} {}", cur.0, next.0);
    }
    for o in &file.outputs {
        let _ = writeln!(out, "{}", o.0);
    }
    for g in &file.ands {
        let _ = writeln!(out, "{} {} {}", g.lhs.0, g.rhs0.0, g.rhs1.0);
    }
    for (k, name) in file.input_names.iter().enumerate() {
        if let Some(name) = name {
            let _ = writeln!(out, "i{k} {name}");
        }
    }
    for (k, name) in file.latch_names.iter().enumerate() {
        if let Some(name) = name {
            let _ = writeln!(out, "l{k} {name}");
        }
    }
    for (k, name) in file.output_names.iter().enumerate() {
        if let Some(name) = name {
            let _ = writeln!(out, "o{k} {name}");
        }
    }
    if !file.comments.is_empty() {
        out.push_str("c\n");
        for c in &file.comments {
            out.push_str(c);
            out.push('\n');
        }
    }
    out
}

/// A specification circuit with its inputs split by controllability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitSpec {
    pub uncontrollable: Vec<Lit>,
    pub controllable: Vec<Lit>,
    pub latches: Vec<(Lit, Lit)>,
    /// The single output: raised means the safety property is violated.
    pub bad: Lit,
    pub ands: Vec<AndGate>,
    pub unc_names: Vec<String>,
    pub ctrl_names: Vec<String>,
    pub latch_names: Vec<String>,
    pub max_var: u32,
}

/// Splits inputs into uncontrollable/controllable by the `controllable_`
/// symbol prefix. Unnamed inputs default to uncontrollable.
pub fn split_inputs(file: &AigFile) -> AigerResult<CircuitSpec> {
    let mut spec = CircuitSpec {
        uncontrollable: Vec::new(),
        controllable: Vec::new(),
        latches: file.latches.clone(),
        bad: file.outputs[0],
        ands: file.ands.clone(),
        unc_names: Vec::new(),
        ctrl_names: Vec::new(),
        latch_names: Vec::new(),
        max_var: file.max_var,
    };
    for (k, &lit) in file.inputs.iter().enumerate() {
        let name = file.input_names[k].clone();
        let is_ctrl = name
            .as_deref()
            .map(|n| n.starts_with(CONTROLLABLE_PREFIX))
            .unwrap_or(false);
        let name = name.unwrap_or_else(|| format!("i{k}"));
        if is_ctrl {
            spec.controllable.push(lit);
            spec.ctrl_names.push(name);
        } else {
            spec.uncontrollable.push(lit);
            spec.unc_names.push(name);
        }
    }
    for (k, _) in file.latches.iter().enumerate() {
        spec.latch_names
            .push(file.latch_names[k].clone().unwrap_or_else(|| format!("l{k}")));
    }
    Ok(spec)
}

/// Signal reference inside a [`GateNetwork`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetSig {
    /// Constant true (negate for false).
    Const,
    /// An AIG variable of the host circuit: a latch, an uncontrollable
    /// input, or a controllable input spliced earlier.
    Aig(u32),
    /// Output of gate `i` of this network.
    Node(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetLit {
    pub sig: NetSig,
    pub neg: bool,
}

impl NetLit {
    pub const TRUE: NetLit = NetLit { sig: NetSig::Const, neg: false };
    pub const FALSE: NetLit = NetLit { sig: NetSig::Const, neg: true };

    pub fn aig(var: u32) -> NetLit {
        NetLit { sig: NetSig::Aig(var), neg: false }
    }

    pub fn node(i: u32) -> NetLit {
        NetLit { sig: NetSig::Node(i), neg: false }
    }

    pub fn negate(self) -> NetLit {
        NetLit { sig: self.sig, neg: !self.neg }
    }
}

/// A small and-inverter network defining one controller output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateNetwork {
    /// Two-input and gates in topological order.
    pub gates: Vec<(NetLit, NetLit)>,
    pub output: NetLit,
}

impl GateNetwork {
    pub fn constant(value: bool) -> GateNetwork {
        GateNetwork {
            gates: Vec::new(),
            output: if value { NetLit::TRUE } else { NetLit::FALSE },
        }
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    /// Evaluates the network given values for the referenced AIG variables.
    pub fn eval(&self, aig_val: &dyn Fn(u32) -> bool) -> bool {
        let mut vals = Vec::with_capacity(self.gates.len());
        let lit_val = |l: NetLit, vals: &[bool]| -> bool {
            let v = match l.sig {
                NetSig::Const => true,
                NetSig::Aig(var) => aig_val(var),
                NetSig::Node(i) => vals[i as usize],
            };
            v ^ l.neg
        };
        for &(a, b) in &self.gates {
            let v = lit_val(a, &vals) && lit_val(b, &vals);
            vals.push(v);
        }
        lit_val(self.output, &vals)
    }
}

/// Splices controller definitions into a specification circuit.
///
/// Former controllable inputs disappear from the input section and are
/// defined by fresh and gates instead; everything is renumbered to keep the
/// topological order. `controllers` must cover each controllable input
/// exactly once, in the order their networks may reference each other.
pub fn write_controlled_aag(
    file: &AigFile,
    controllers: &[(Lit, GateNetwork)],
) -> AigerResult<AigFile> {
    let spec = split_inputs(file)?;
    // exact one-to-one correspondence with the controllable inputs
    let mut expected: Vec<Lit> = spec.controllable.clone();
    expected.sort_unstable();
    let mut got: Vec<Lit> = controllers.iter().map(|&(l, _)| l).collect();
    got.sort_unstable();
    if expected != got {
        return Err(AigerError::DanglingReference {
            what: "controller list does not match the controllable inputs one-to-one".into(),
        });
    }

    let is_latch: std::collections::HashSet<u32> =
        spec.latches.iter().map(|(c, _)| c.var()).collect();
    let is_unc: std::collections::HashSet<u32> =
        spec.uncontrollable.iter().map(|l| l.var()).collect();

    let mut out = AigFile::default();
    let mut next_var = 0u32;
    let mut fresh = || {
        next_var += 1;
        next_var
    };
    // old variable -> new literal (controller outputs may carry a negation)
    let mut map: HashMap<u32, u32> = HashMap::new();

    for (k, &lit) in file.inputs.iter().enumerate() {
        if !spec.uncontrollable.contains(&lit) {
            continue;
        }
        let v = fresh();
        map.insert(lit.var(), v << 1);
        out.inputs.push(Lit(v << 1));
        out.input_names.push(file.input_names[k].clone());
    }
    for (k, &(cur, _)) in spec.latches.iter().enumerate() {
        let v = fresh();
        map.insert(cur.var(), v << 1);
        out.latches.push((Lit(v << 1), Lit(0))); // next patched below
        out.latch_names.push(file.latch_names[k].clone());
    }

    let map_lit = |map: &HashMap<u32, u32>, l: Lit| -> AigerResult<Lit> {
        if l.is_const() {
            return Ok(l);
        }
        let base = map.get(&l.var()).ok_or_else(|| AigerError::DanglingReference {
            what: format!("literal {} has no definition in the controlled circuit", l.0),
        })?;
        Ok(Lit(base ^ l.0 & 1))
    };

    // controller networks first: original gates may read their outputs
    for (ci, (ctrl_lit, net)) in controllers.iter().enumerate() {
        let mut node_lits: Vec<u32> = Vec::with_capacity(net.gates.len());
        let resolve = |l: NetLit, node_lits: &[u32]| -> AigerResult<Lit> {
            let base = match l.sig {
                NetSig::Const => Lit::TRUE,
                NetSig::Aig(var) => {
                    let earlier_ctrl = controllers[..ci].iter().any(|(c, _)| c.var() == var);
                    if !(is_latch.contains(&var) || is_unc.contains(&var) || earlier_ctrl) {
                        return Err(AigerError::DanglingReference {
                            what: format!(
                                "controller for input {} reads variable {var}, which is not a \
                                 latch, an uncontrollable input, or an earlier controller",
                                ctrl_lit.0
                            ),
                        });
                    }
                    Lit(*map.get(&var).ok_or_else(|| AigerError::DanglingReference {
                        what: format!("variable {var} is not mapped yet"),
                    })?)
                }
                NetSig::Node(i) => {
                    let &lit = node_lits.get(i as usize).ok_or_else(|| {
                        AigerError::DanglingReference {
                            what: format!("network node {i} referenced before definition"),
                        }
                    })?;
                    Lit(lit)
                }
            };
            Ok(if l.neg { base.negate() } else { base })
        };
        for &(a, b) in &net.gates {
            let a = resolve(a, &node_lits)?;
            let b = resolve(b, &node_lits)?;
            let v = fresh();
            out.ands.push(AndGate { lhs: Lit(v << 1), rhs0: a, rhs1: b });
            node_lits.push(v << 1);
        }
        let out_lit = resolve(net.output, &node_lits)?;
        map.insert(ctrl_lit.var(), out_lit.0);
    }

    for g in &spec.ands {
        let rhs0 = map_lit(&map, g.rhs0)?;
        let rhs1 = map_lit(&map, g.rhs1)?;
        let v = fresh();
        map.insert(g.lhs.var(), v << 1);
        out.ands.push(AndGate { lhs: Lit(v << 1), rhs0, rhs1 });
    }

    for (k, &(_, next)) in spec.latches.iter().enumerate() {
        out.latches[k].1 = map_lit(&map, next)?;
    }
    out.outputs.push(map_lit(&map, spec.bad)?);
    out.output_names = file.output_names.clone();
    out.max_var = next_var;
    out.comments = file.comments.clone();
    for name in &spec.ctrl_names {
        out.comments.push(format!("controlled input: {name}"));
    }

    // gate operands must already be defined: renumbering preserved order
    debug_assert!(out
        .ands
        .iter()
        .all(|g| g.lhs.0 > g.rhs0.0 && g.lhs.0 > g.rhs1.0));
    Ok(out)
}
