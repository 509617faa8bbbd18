//! Brute-force ground truth. Every query is answered by naive fixpoint
//! iteration over the flat element list of a [`KbSnapshot`].

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use score_core::{ElementKind, Rule, Term};

use crate::snapshot::KbSnapshot;

/// Candidate tuples examined before [`Oracle::satisfying_tuples`] gives up.
pub const TUPLE_BUDGET: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BudgetExceeded;

impl fmt::Display for BudgetExceeded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "combinatorial budget of {TUPLE_BUDGET} candidate tuples exceeded")
    }
}

impl std::error::Error for BudgetExceeded {}

#[derive(Clone, Copy)]
struct Row {
    kind: ElementKind,
    a: Option<usize>,
    b: Option<usize>,
    owner: Option<usize>,
    rel: Option<usize>,
    context: usize,
    proper: bool,
}

pub struct Oracle {
    rows: Vec<Row>,
    visible: Vec<bool>,
    sup: Vec<BTreeSet<usize>>,
    role_sup: Vec<BTreeSet<usize>>,
    inf: RefCell<HashMap<usize, BTreeSet<usize>>>,
}

impl Oracle {
    pub fn new(snap: &KbSnapshot) -> Self {
        let n = snap.elements.iter().map(|e| e.id + 1).max().unwrap_or(0);
        let mut rows = vec![
            Row {
                kind: ElementKind::TypeNode,
                a: None,
                b: None,
                owner: None,
                rel: None,
                context: usize::MAX,
                proper: false,
            };
            n
        ];
        for e in &snap.elements {
            rows[e.id] = Row {
                kind: e.kind,
                a: e.a,
                b: e.b,
                owner: e.owner,
                rel: e.rel,
                context: e.context,
                proper: e.proper,
            };
        }
        let mut o = Oracle {
            rows,
            visible: vec![false; n],
            sup: Vec::new(),
            role_sup: Vec::new(),
            inf: RefCell::new(HashMap::new()),
        };

        let mut active = BTreeSet::from([snap.active_context]);
        o.grow(&mut active, |_| true, |_, _| true);
        for (i, row) in o.rows.iter().enumerate() {
            o.visible[i] = active.contains(&row.context);
        }

        let mut sup = Vec::with_capacity(n);
        let mut role_sup = Vec::with_capacity(n);
        for x in 0..n {
            sup.push(o.closure(x, false));
            role_sup.push(o.closure(x, true));
        }
        o.sup = sup;
        o.role_sup = role_sup;
        o
    }

    /// Adds to `set` everything reachable over is-a (forward) and eq (both
    /// ways) links accepted by `link_ok`, stepping from nodes accepted by
    /// `from_ok` onto targets accepted by `to_ok`.
    fn grow(&self, set: &mut BTreeSet<usize>, link_ok: impl Fn(usize) -> bool, step_ok: impl Fn(usize, usize) -> bool) {
        loop {
            let mut grew = false;
            for (l, row) in self.rows.iter().enumerate() {
                let (Some(a), Some(b)) = (row.a, row.b) else { continue };
                let pairs: &[(usize, usize)] = match row.kind {
                    ElementKind::IsA => &[(a, b)],
                    ElementKind::Eq => &[(a, b), (b, a)],
                    _ => continue,
                };
                if !link_ok(l) {
                    continue;
                }
                for &(from, to) in pairs {
                    if set.contains(&from) && !set.contains(&to) && step_ok(from, to) {
                        set.insert(to);
                        grew = true;
                    }
                }
            }
            if !grew {
                return;
            }
        }
    }

    fn closure(&self, x: usize, role_bounded: bool) -> BTreeSet<usize> {
        if !self.visible[x] {
            return BTreeSet::new();
        }
        let mut free = BTreeSet::from([x]);
        self.grow(&mut free, |l| self.visible[l], |_, to| self.visible[to]);
        let blocked: BTreeSet<usize> = self
            .rows
            .iter()
            .enumerate()
            .filter(|(l, r)| r.kind == ElementKind::Cancel && self.visible[*l])
            .filter(|(_, r)| r.a.is_some_and(|a| free.contains(&a)))
            .filter_map(|(_, r)| r.b)
            .filter(|&b| b != x)
            .collect();
        let mut set = BTreeSet::from([x]);
        self.grow(
            &mut set,
            |l| self.visible[l],
            |from, to| {
                self.visible[to]
                    && !blocked.contains(&to)
                    && (!role_bounded || from == x || !self.rows[from].kind.is_role())
            },
        );
        set
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_visible(&self, x: usize) -> bool {
        self.visible[x]
    }

    pub fn superiors(&self, x: usize) -> &BTreeSet<usize> {
        &self.sup[x]
    }

    pub fn inferiors(&self, y: usize) -> BTreeSet<usize> {
        if let Some(s) = self.inf.borrow().get(&y) {
            return s.clone();
        }
        let s: BTreeSet<usize> = (0..self.rows.len()).filter(|&x| self.sup[x].contains(&y)).collect();
        self.inf.borrow_mut().insert(y, s.clone());
        s
    }

    pub fn is_x_a_y(&self, x: usize, y: usize) -> bool {
        self.sup[x].contains(&y)
    }

    fn is_role(&self, x: usize) -> bool {
        self.rows[x].kind.is_role()
    }

    /// "x is a `role` of z".
    pub fn fills(&self, x: usize, role: usize, z: usize) -> bool {
        if !self.visible[x] || self.is_role(x) {
            return false;
        }
        self.role_sup[x].iter().any(|&c| {
            c != x
                && self.is_role(c)
                && self.sup[c].contains(&role)
                && self.rows[c].owner.is_some_and(|o| self.sup[z].contains(&o))
        })
    }

    /// Some visible statement (a' r' b') with r' under `rel`, a' above x
    /// and b' above z.
    pub fn rel_holds(&self, x: usize, rel: usize, z: usize) -> bool {
        self.rows.iter().enumerate().any(|(s, r)| {
            r.kind == ElementKind::Statement
                && self.visible[s]
                && r.rel.is_some_and(|rr| self.sup[rr].contains(&rel))
                && r.a.is_some_and(|a| self.sup[x].contains(&a))
                && r.b.is_some_and(|b| self.sup[z].contains(&b))
        })
    }

    pub fn pred_holds(&self, x: usize, y: usize, z: usize) -> bool {
        if self.is_role(y) {
            self.fills(x, y, z)
        } else {
            self.rel_holds(x, y, z)
        }
    }

    pub fn role_fillers(&self, role: usize, owner: usize) -> BTreeSet<usize> {
        (0..self.rows.len()).filter(|&x| self.fills(x, role, owner)).collect()
    }

    pub fn role_owners(&self, role: usize, player: usize) -> BTreeSet<usize> {
        (0..self.rows.len()).filter(|&z| self.fills(player, role, z)).collect()
    }

    pub fn rel_b(&self, rel: usize, a: usize) -> BTreeSet<usize> {
        (0..self.rows.len()).filter(|&z| self.rel_holds(a, rel, z)).collect()
    }

    pub fn rel_a(&self, rel: usize, b: usize) -> BTreeSet<usize> {
        (0..self.rows.len()).filter(|&x| self.rel_holds(x, rel, b)).collect()
    }

    fn term_options(&self, t: Term, tuple: &[Option<usize>]) -> Option<Vec<usize>> {
        match t {
            Term::Var(v) => tuple[v.0].map(|e| vec![e]),
            Term::Const(c) => Some(self.inferiors(c.index()).into_iter().collect()),
        }
    }

    /// Every complete assignment of visible nodes to the rule's variables
    /// meeting all type constraints, proper tags and predicates.
    pub fn satisfying_tuples(&self, rule: &Rule) -> Result<BTreeSet<Vec<usize>>, BudgetExceeded> {
        let k = rule.variables.len();
        let domains: Vec<Vec<usize>> = rule
            .variables
            .iter()
            .map(|v| {
                (0..self.rows.len())
                    .filter(|&e| self.visible[e] && self.rows[e].kind.is_node())
                    .filter(|&e| !v.proper || self.rows[e].proper)
                    .filter(|&e| v.superior.is_none_or(|t| self.sup[e].contains(&t.index())))
                    .collect()
            })
            .collect();
        let mut out = BTreeSet::new();
        let mut tuple = vec![None; k];
        let mut spent = 0u64;
        self.extend(rule, &domains, 0, &mut tuple, &mut spent, &mut out)?;
        Ok(out)
    }

    fn extend(
        &self,
        rule: &Rule,
        domains: &[Vec<usize>],
        depth: usize,
        tuple: &mut Vec<Option<usize>>,
        spent: &mut u64,
        out: &mut BTreeSet<Vec<usize>>,
    ) -> Result<(), BudgetExceeded> {
        if depth == tuple.len() {
            out.insert(tuple.iter().map(|e| e.expect("complete")).collect());
            return Ok(());
        }
        for &e in &domains[depth] {
            *spent += 1;
            if *spent > TUPLE_BUDGET {
                return Err(BudgetExceeded);
            }
            tuple[depth] = Some(e);
            let ok = rule.predicates.iter().all(|p| {
                let touches = |t: Term| matches!(t, Term::Var(v) if v.0 == depth);
                if !touches(p.x) && !touches(p.z) {
                    return true;
                }
                match (self.term_options(p.x, tuple), self.term_options(p.z, tuple)) {
                    (Some(xs), Some(zs)) => xs
                        .iter()
                        .any(|&x| zs.iter().any(|&z| self.pred_holds(x, p.y.index(), z))),
                    _ => true,
                }
            });
            if ok {
                self.extend(rule, domains, depth + 1, tuple, spent, out)?;
            }
        }
        tuple[depth] = None;
        Ok(())
    }
}
