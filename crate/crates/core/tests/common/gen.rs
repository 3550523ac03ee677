//! Seeded generator for small PyX programs and matching policies.

use std::collections::BTreeSet;

use pyxflow::{parse, Label, Program, ProgramSpec, PrincipalUniverse};
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loops {
    None,
    /// Loops only at the top level.
    Flat,
    Nested,
}

#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    pub max_globals: usize,
    pub locals: usize,
    pub max_stmts: usize,
    pub loops: Loops,
    pub require_loop: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_globals: 4,
            locals: 2,
            max_stmts: 8,
            loops: Loops::Flat,
            require_loop: false,
        }
    }
}

pub struct Generated {
    pub source: String,
    pub program: Program,
    pub spec: ProgramSpec,
}

const OWNERS: [&str; 3] = ["A", "B", "S"];

pub fn universe() -> PrincipalUniverse {
    PrincipalUniverse::new(OWNERS).unwrap()
}

fn subset<R: Rng>(rng: &mut R, from: &[&'static str]) -> Vec<&'static str> {
    from.iter().copied().filter(|_| rng.gen_bool(0.5)).collect()
}

/// A label the top-level executor `S` may read and is cleared for.
pub fn random_label<R: Rng>(rng: &mut R, u: &PrincipalUniverse) -> Label {
    let owner = *OWNERS.choose(rng).unwrap();
    let mut readers = subset(rng, &["A", "B"]);
    readers.push("S");
    let writers = subset(rng, &OWNERS);
    u.label(Some(owner), readers, writers).unwrap()
}

struct Builder<'r, R: Rng> {
    rng: &'r mut R,
    cfg: GenConfig,
    globals: Vec<String>,
    locals: Vec<String>,
    budget: usize,
    out: String,
    has_loop: bool,
}

impl<R: Rng> Builder<'_, R> {
    fn atom(&mut self, defined: &BTreeSet<String>) -> String {
        let readable: Vec<&String> = self.globals.iter().chain(defined.iter()).collect();
        if readable.is_empty() || self.rng.gen_bool(0.25) {
            self.rng.gen_range(0..2).to_string()
        } else {
            readable.choose(self.rng).unwrap().to_string()
        }
    }

    fn int_expr(&mut self, defined: &BTreeSet<String>) -> String {
        let a = self.atom(defined);
        if self.rng.gen_bool(0.4) {
            return a;
        }
        let op = *["+", "-", "*"].choose(self.rng).unwrap();
        let b = self.atom(defined);
        format!("{a} {op} {b}")
    }

    fn cond(&mut self, defined: &BTreeSet<String>) -> String {
        let op = *["==", "!=", "<"].choose(self.rng).unwrap();
        let a = self.atom(defined);
        let b = self.atom(defined);
        format!("{a} {op} {b}")
    }

    fn target(&mut self) -> String {
        if self.globals.is_empty() || self.rng.gen_bool(0.7) {
            self.locals.choose(self.rng).unwrap().clone()
        } else {
            self.globals.choose(self.rng).unwrap().clone()
        }
    }

    fn line(&mut self, depth: usize, text: &str) {
        self.out.push_str(&"    ".repeat(depth));
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn assign(&mut self, depth: usize, defined: &mut BTreeSet<String>) {
        let value = self.int_expr(defined);
        let target = self.target();
        self.line(depth, &format!("{target} = {value}"));
        if self.locals.contains(&target) {
            defined.insert(target);
        }
    }

    fn block(&mut self, depth: usize, defined: &mut BTreeSet<String>, max: usize) {
        let n = self.rng.gen_range(1..=max.max(1));
        for _ in 0..n {
            if self.budget == 0 {
                break;
            }
            self.budget -= 1;
            let loop_ok = match self.cfg.loops {
                Loops::None => false,
                Loops::Flat => depth == 0,
                Loops::Nested => depth < 3,
            };
            let want_loop = loop_ok && self.cfg.require_loop && !self.has_loop && depth == 0;
            let roll = self.rng.gen_range(0..10);
            if (want_loop || (loop_ok && roll < 2)) && self.budget > 0 {
                self.has_loop = true;
                let c = self.cond(defined);
                self.line(depth, &format!("while {c}:"));
                let mut inner = defined.clone();
                self.block(depth + 1, &mut inner, 3);
            } else if roll < 4 && self.budget > 0 && depth < 3 {
                let c = self.cond(defined);
                self.line(depth, &format!("if {c}:"));
                let mut then_defs = defined.clone();
                self.block(depth + 1, &mut then_defs, 2);
                self.line(depth, "else:");
                let mut else_defs = defined.clone();
                if self.budget > 0 && self.rng.gen_bool(0.5) {
                    self.block(depth + 1, &mut else_defs, 1);
                } else {
                    self.line(depth + 1, "pass");
                }
                *defined = &then_defs & &else_defs;
            } else {
                self.assign(depth, defined);
            }
        }
        if self.out.ends_with(":\n") {
            self.line(depth, "pass");
        }
    }
}

/// Builds a program with at most `cfg.max_stmts` statements, plus a policy
/// naming exactly the globals the program mentions.
pub fn generate<R: Rng>(rng: &mut R, cfg: GenConfig) -> Generated {
    let u = universe();
    let n_globals = rng.gen_range(1..=cfg.max_globals);
    let globals: Vec<String> = (0..n_globals).map(|i| format!("g{i}")).collect();
    let locals: Vec<String> = (0..cfg.locals).map(|i| format!("t{i}")).collect();
    let mut b = Builder {
        rng,
        cfg,
        globals,
        locals,
        budget: cfg.max_stmts,
        out: String::new(),
        has_loop: false,
    };
    let mut defined = BTreeSet::new();
    b.block(0, &mut defined, cfg.max_stmts);
    let source = b.out;
    let program = parse(&source).unwrap_or_else(|e| panic!("generated program does not parse: {e}\n{source}"));

    let clearance = u.label(Some("S"), ["S"], OWNERS).unwrap();
    let mut spec = ProgramSpec::new(u.clone(), "S", clearance).unwrap();
    let mentioned = program.vars_of(&program.body);
    for g in b.globals.iter().filter(|g| mentioned.contains(*g)) {
        let label = random_label(b.rng, &u);
        spec = spec.with_global(g, label).unwrap();
    }
    Generated { source, program, spec }
}
