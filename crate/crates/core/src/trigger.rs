use std::collections::{HashSet, VecDeque};
use std::sync::Arc;


use crate::element::{ElementId, ElementKind, Payload, PropertyKey};
use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::rule::{anchor, Assertion, Bindings, Builtin, Expr, Rule, RuleAction, RuleId, RuleKind, Term, VarId};
use crate::scalar::Scalar;

/// Native action callback. Receives the evaluated argument elements.
pub type Hook = Box<dyn FnMut(&[ElementId]) + Send>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TriggerKind {
    IsaConstraint,
    XyzPred,
    IfNeeded,
}

impl TriggerKind {
    pub fn name(self) -> &'static str {
        match self {
            TriggerKind::IsaConstraint => "isa",
            TriggerKind::XyzPred => "xyz",
            TriggerKind::IfNeeded => "if-needed",
        }
    }
}

/// Attached to an element's property map; inferiors inherit it by upscan.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Trigger {
    pub kind: TriggerKind,
    pub rule: RuleId,
    pub x: Option<Term>,
    pub z: Option<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiringRecord {
    pub rule: RuleId,
    pub bindings: Vec<ElementId>,
    pub created: Vec<ElementId>,
}

#[derive(Clone, Debug)]
struct Firing {
    rule: RuleId,
    bindings: Bindings,
    target_role: Option<ElementId>,
}

type FiredKey = (RuleId, Bindings, Option<ElementId>, ElementId);

#[derive(Default)]
pub(crate) struct EngineState {
    pending: VecDeque<ElementId>,
    queue: VecDeque<Firing>,
    fired: HashSet<FiredKey>,
    propagating: bool,
    depth: usize,
    pub(crate) log: Vec<FiringRecord>,
}

enum Value<N> {
    Elem(ElementId),
    Num(N),
}

impl<N: Scalar> KnowledgeBase<N> {
    pub fn register_hook(&mut self, name: impl Into<String>, hook: Hook) {
        self.hooks.insert(name.into(), hook);
    }

    pub fn rules(&self) -> impl Iterator<Item = (RuleId, &Rule)> {
        self.rules.iter().enumerate().map(|(i, r)| (RuleId(i), r.as_ref()))
    }

    pub fn rule(&self, id: RuleId) -> Option<&Rule> {
        self.rules.get(id.0).map(Arc::as_ref)
    }

    pub fn rule_by_name(&self, name: &str) -> Option<RuleId> {
        self.rule_names.get(name).copied()
    }

    pub fn rule_count(&self) -> usize {
        self.rules.len()
    }

    /// Every firing so far, in firing order.
    pub fn firing_log(&self) -> &[FiringRecord] {
        &self.engine.log
    }

    /// Validates `rule`, names it (`R1`, `R2`, ... unless named) and attaches
    /// its triggers. Existing knowledge is not rechecked.
    pub fn install_rule(&mut self, mut rule: Rule) -> Result<RuleId> {
        let id = RuleId(self.rules.len());
        let name = match rule.name.take() {
            Some(n) => {
                if self.rule_names.contains_key(&n) {
                    return Err(Error::DuplicateRuleId(n));
                }
                n
            }
            None => {
                let mut n = id.0 + 1;
                while self.rule_names.contains_key(&format!("R{n}")) {
                    n += 1;
                }
                format!("R{n}")
            }
        };
        rule.name = Some(name.clone());
        self.validate_rule(&rule)?;
        let attach = |kb: &mut Self, at: ElementId, t: Trigger| {
            kb.elements[at.index()]
                .properties
                .entry(PropertyKey::RuleTriggers)
                .or_default()
                .push(t);
        };
        match (&rule.kind, &rule.action) {
            (RuleKind::IfNeeded, RuleAction::IfNeeded { role, owner, .. }) => {
                let t = Trigger {
                    kind: TriggerKind::IfNeeded,
                    rule: id,
                    x: None,
                    z: Some(Term::Var(*owner)),
                };
                attach(self, *role, t);
            }
            _ => {
                for (i, var) in rule.variables.iter().enumerate() {
                    if let Some(sup) = var.superior {
                        let t = Trigger {
                            kind: TriggerKind::IsaConstraint,
                            rule: id,
                            x: Some(Term::Var(VarId(i))),
                            z: None,
                        };
                        attach(self, sup, t);
                    }
                }
                for p in &rule.predicates {
                    let t = Trigger {
                        kind: TriggerKind::XyzPred,
                        rule: id,
                        x: Some(p.x),
                        z: Some(p.z),
                    };
                    attach(self, p.y, t);
                }
            }
        }
        self.rule_names.insert(name, id);
        self.rules.push(Arc::new(rule));
        Ok(id)
    }

    // ---- propagation -----------------------------------------------------

    /// Called by the structural operations for every new is-a, eq or
    /// statement link. Runs propagation unless one is already in progress.
    pub(crate) fn notify_link(&mut self, link: ElementId) -> Result<()> {
        if self.rules.is_empty() {
            return Ok(());
        }
        self.engine.pending.push_back(link);
        if self.engine.propagating {
            return Ok(());
        }
        self.propagate()
    }

    fn propagate(&mut self) -> Result<()> {
        self.engine.propagating = true;
        let result = self.propagate_inner();
        self.engine.propagating = false;
        if result.is_err() {
            self.engine.pending.clear();
            self.engine.queue.clear();
        }
        result
    }

    fn propagate_inner(&mut self) -> Result<()> {
        let mut firings = 0usize;
        loop {
            while let Some(link) = self.engine.pending.pop_front() {
                self.process_link(link)?;
            }
            let Some(firing) = self.engine.queue.pop_front() else {
                return Ok(());
            };
            firings += 1;
            if firings > self.config.max_chain_depth {
                return Err(Error::ChainDepthExceeded(self.config.max_chain_depth));
            }
            if let Err(e) = self.fire(firing) {
                if e.is_fatal() {
                    return Err(e);
                }
                self.diagnostics.push(e.to_string());
            }
        }
    }

    fn process_link(&mut self, link: ElementId) -> Result<()> {
        if !self.is_visible(link) {
            return Ok(());
        }
        let e = &self.elements[link.index()];
        let (kind, a, b, rel) = (e.kind, e.a_wire.expect("link"), e.b_wire.expect("link"), e.rel_wire);
        match kind {
            ElementKind::IsA => {
                self.activate_isa(a, b)?;
                self.activate_role_form(a, b)?;
            }
            ElementKind::Eq => {
                self.activate_isa(a, b)?;
                self.activate_isa(b, a)?;
                self.activate_role_form(a, b)?;
                self.activate_role_form(b, a)?;
            }
            ElementKind::Statement => {
                self.activate_xyz(rel.expect("statement rel-wire"), a, b)?;
            }
            _ => {}
        }
        Ok(())
    }

    fn activate_role_form(&mut self, a: ElementId, b: ElementId) -> Result<()> {
        if self.is_role(b) && !self.is_role(a) {
            let owner = self.owner_of(b).expect("roles have owners");
            self.activate_xyz(b, a, owner)?;
        }
        Ok(())
    }

    /// Triggers inherited by `at` of `kind`, bottom-up along the upscan.
    fn inherited_triggers(&mut self, at: ElementId, kind: TriggerKind) -> Result<Vec<(ElementId, Trigger)>> {
        let ups = self.collect_up(at)?;
        let mut out = Vec::new();
        for y in ups {
            for t in self.elements[y.index()].triggers() {
                if t.kind == kind {
                    out.push((y, *t));
                }
            }
        }
        Ok(out)
    }

    fn trace_trigger(&mut self, rule: &Rule, at: ElementId, t: &Trigger) {
        self.stats.trigger_activations += 1;
        if self.config.trace {
            let mut line = format!("TRIGGER {} {} ({}", t.kind.name(), self.display(at), rule.display_name());
            for term in [t.x, t.z].into_iter().flatten() {
                line.push(' ');
                line.push_str(&self.term_label(rule, term));
            }
            line.push(')');
            self.trace.push(line);
        }
    }

    fn activate_isa(&mut self, a: ElementId, b: ElementId) -> Result<()> {
        for (at, t) in self.inherited_triggers(b, TriggerKind::IsaConstraint)? {
            let rule = self.rule_arc(t.rule);
            self.trace_trigger(&rule, at, &t);
            let Some(Term::Var(v)) = t.x else { continue };
            if let Some(bound) = self.substitute(&rule, &rule.empty_bindings(), v, a)? {
                self.check_rule(t.rule, &rule, bound, None)?;
            }
        }
        Ok(())
    }

    /// An x-y-z fact "a y c" was added.
    fn activate_xyz(&mut self, y: ElementId, a: ElementId, c: ElementId) -> Result<()> {
        for (at, t) in self.inherited_triggers(y, TriggerKind::XyzPred)? {
            let rule = self.rule_arc(t.rule);
            self.trace_trigger(&rule, at, &t);
            let mut bindings = rule.empty_bindings();
            let mut ok = true;
            for (term, e) in [(t.x, a), (t.z, c)] {
                match term {
                    Some(Term::Const(k)) => {
                        if !self.is_x_a_y(e, k)? {
                            ok = false;
                            break;
                        }
                    }
                    Some(Term::Var(v)) => match self.substitute(&rule, &bindings, v, e)? {
                        Some(next) => bindings = next,
                        None => {
                            ok = false;
                            break;
                        }
                    },
                    None => {}
                }
            }
            if ok {
                self.check_rule(t.rule, &rule, bindings, None)?;
            }
        }
        Ok(())
    }

    /// The recursive search: binds the remaining variables one predicate at a
    /// time and enqueues every complete binding.
    fn check_rule(&mut self, id: RuleId, rule: &Rule, bindings: Bindings, target: Option<ElementId>) -> Result<()> {
        self.stats.rule_checks += 1;
        if bindings.is_complete() {
            self.enqueue(id, bindings, target);
            return Ok(());
        }
        let choice = rule.predicates.iter().find_map(|p| {
            match (anchor(&bindings, p.x), anchor(&bindings, p.z)) {
                (None, Some(z)) => Some((p, z, p.x, true)),
                (Some(x), None) => Some((p, x, p.z, false)),
                _ => None,
            }
        });
        let Some((p, known, open, open_is_x)) = choice else {
            return Err(Error::NoCheckablePredicate(rule.display_name().to_string()));
        };
        let Term::Var(var) = open else { unreachable!("open side is a variable") };
        let m = self.alloc_marker_pair()?;
        self.engine.depth += 1;
        self.stats.max_search_depth = self.stats.max_search_depth.max(self.engine.depth);
        let per_rule = &mut self.stats.rule_search_depth;
        if per_rule.len() <= id.0 {
            per_rule.resize(id.0 + 1, 0);
        }
        per_rule[id.0] = per_rule[id.0].max(self.engine.depth);
        let result = (|| {
            let bit = m.bit_index();
            match (self.is_role(p.y), open_is_x) {
                (true, true) => self.mark_fillers(p.y, known, bit)?,
                (true, false) => self.mark_owners(p.y, known, bit)?,
                (false, true) => self.mark_rel(p.y, known, false, bit)?,
                (false, false) => self.mark_rel(p.y, known, true, bit)?,
            };
            if rule.var(var).proper {
                self.restrict_to_proper(m);
            }
            for e in self.marked_elements(m) {
                if let Some(next) = self.substitute(rule, &bindings, var, e)? {
                    self.check_rule(id, rule, next, target)?;
                }
            }
            Ok(())
        })();
        self.engine.depth -= 1;
        self.free_marker(m);
        result
    }

    fn enqueue(&mut self, rule: RuleId, bindings: Bindings, target_role: Option<ElementId>) {
        let key = (rule, bindings.clone(), target_role, self.active_context);
        if self.engine.fired.insert(key) {
            self.engine.queue.push_back(Firing { rule, bindings, target_role });
        }
    }

    fn fire(&mut self, f: Firing) -> Result<()> {
        let rule = self.rule_arc(f.rule);
        self.stats.firings += 1;
        if self.config.trace {
            let mut line = format!("FIRE {} {{", rule.display_name());
            for (i, var) in rule.variables.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                let e = f.bindings.get(VarId(i)).expect("complete bindings");
                line.push_str(&format!("{}={}", var.name, self.display(e)));
            }
            line.push('}');
            self.trace.push(line);
        }
        let created = self.run_action(&rule, &f.bindings, f.target_role);
        let record = FiringRecord {
            rule: f.rule,
            bindings: f.bindings.complete().expect("complete bindings"),
            created: created.as_ref().map(Vec::clone).unwrap_or_default(),
        };
        self.engine.log.push(record);
        created.map(|_| ())
    }

    /// Runs the action of `rule` under complete `bindings` outside of any
    /// trigger propagation bookkeeping. Returns the elements it created.
    pub fn fire_action(&mut self, rule: RuleId, bindings: &Bindings) -> Result<Vec<ElementId>> {
        let r = self
            .rules
            .get(rule.0)
            .cloned()
            .ok_or_else(|| Error::UnknownRule(rule.to_string()))?;
        self.run_action(&r, bindings, None)
    }

    fn run_action(&mut self, rule: &Rule, bindings: &Bindings, target: Option<ElementId>) -> Result<Vec<ElementId>> {
        if let Some(i) = bindings.as_slice().iter().position(Option::is_none) {
            return Err(Error::Unbound(rule.display_name().to_string(), rule.variables[i].name.clone()));
        }
        let before = self.elements.len();
        match &rule.action {
            RuleAction::IfAdded(steps) => {
                let mut planned = Vec::with_capacity(steps.len());
                for step in steps {
                    planned.push(self.plan_step(rule, bindings, step)?);
                }
                for (step, args) in steps.iter().zip(planned) {
                    self.apply_step(step, args)?;
                }
            }
            RuleAction::IfNeeded { value, role, owner } => {
                let v = self.eval(rule, bindings, value)?;
                let v = self.materialize(v)?;
                let owner = bindings.get(*owner).expect("complete bindings");
                self.x_is_the_y_of_z(v, target.unwrap_or(*role), owner)?;
            }
        }
        Ok((before..self.elements.len()).map(|i| ElementId(i as u32)).collect())
    }

    fn plan_step(&mut self, rule: &Rule, b: &Bindings, step: &Assertion) -> Result<Vec<Value<N>>> {
        let exprs: Vec<&Expr> = match step {
            Assertion::IsA(x, y) | Assertion::Eq(x, y) => vec![x, y],
            Assertion::XIsAYOfZ(x, _, z) | Assertion::XIsTheYOfZ(x, _, z) | Assertion::Statement(x, _, z) => vec![x, z],
            Assertion::Hook(_, args) => args.iter().collect(),
        };
        exprs.into_iter().map(|e| self.eval(rule, b, e)).collect()
    }

    fn apply_step(&mut self, step: &Assertion, args: Vec<Value<N>>) -> Result<()> {
        let mut ids = Vec::with_capacity(args.len());
        for v in args {
            ids.push(self.materialize(v)?);
        }
        match step {
            Assertion::IsA(..) => {
                self.add_is_a(ids[0], ids[1])?;
            }
            Assertion::Eq(..) => {
                self.add_eq(ids[0], ids[1])?;
            }
            Assertion::XIsAYOfZ(_, role, _) => {
                self.x_is_a_y_of_z(ids[0], *role, ids[1])?;
            }
            Assertion::XIsTheYOfZ(_, role, _) => {
                self.x_is_the_y_of_z(ids[0], *role, ids[1])?;
            }
            Assertion::Statement(_, rel, _) => {
                self.new_statement(ids[0], *rel, ids[1])?;
            }
            Assertion::Hook(name, _) => {
                let hook = self.hooks.get_mut(name).expect("hooks are checked at install");
                hook(&ids);
            }
        }
        Ok(())
    }

    fn materialize(&mut self, v: Value<N>) -> Result<ElementId> {
        match v {
            Value::Elem(e) => Ok(e),
            Value::Num(n) => self.number_element(n),
        }
    }

    fn eval(&self, rule: &Rule, b: &Bindings, e: &Expr) -> Result<Value<N>> {
        match e {
            Expr::Var(v) => Ok(Value::Elem(b.get(*v).expect("complete bindings"))),
            Expr::Const(c) => Ok(Value::Elem(*c)),
            Expr::Call(op, args) => {
                let mut nums = Vec::with_capacity(args.len());
                for a in args {
                    nums.push(self.number_of(rule, self.eval(rule, b, a)?)?);
                }
                let fail = |msg: String| Error::ActionError(rule.display_name().to_string(), msg);
                let n = match (op, nums.as_slice()) {
                    (Builtin::Subtract, [x, y]) => x.clone() - y.clone(),
                    (Builtin::Add, [first, rest @ ..]) => {
                        rest.iter().fold(first.clone(), |acc, x| acc + x.clone())
                    }
                    (Builtin::Compare, [x, y]) => {
                        if x < y {
                            N::zero() - N::one()
                        } else if x > y {
                            N::one()
                        } else {
                            N::zero()
                        }
                    }
                    _ => return Err(fail(format!("{} given {} arguments", op.name(), nums.len()))),
                };
                Ok(Value::Num(n))
            }
        }
    }

    fn number_of(&self, rule: &Rule, v: Value<N>) -> Result<N> {
        match v {
            Value::Num(n) => Ok(n),
            Value::Elem(e) => match self.payload(e) {
                Some(Payload::Number(n)) => Ok(n.clone()),
                _ => Err(Error::ActionError(
                    rule.display_name().to_string(),
                    format!("{} has no numeric value", self.display(e)),
                )),
            },
        }
    }

    /// "The `role` of `owner`": the stored filler if there is one, otherwise
    /// runs the if-needed rules inherited by `role` and returns what they
    /// assert. Action failures are reported in the diagnostics and yield
    /// `None`.
    pub fn request_value(&mut self, role: ElementId, owner: ElementId) -> Result<Option<ElementId>> {
        self.check(role)?;
        self.check(owner)?;
        if !self.is_role(role) {
            return Err(Error::NotARole(self.display(role)));
        }
        if let Some(found) = self.lookup_the_y_of_z(role, owner)? {
            return Ok(Some(found));
        }
        if self.rules.is_empty() {
            return Ok(None);
        }
        let seeded = (|| {
            for (at, t) in self.inherited_triggers(role, TriggerKind::IfNeeded)? {
                let rule = self.rule_arc(t.rule);
                self.trace_trigger(&rule, at, &t);
                let Some(Term::Var(v)) = t.z else { continue };
                if let Some(bound) = self.substitute(&rule, &rule.empty_bindings(), v, owner)? {
                    self.check_rule(t.rule, &rule, bound, Some(role))?;
                }
            }
            Ok(())
        })();
        if let Err(e) = seeded {
            self.engine.queue.clear();
            return Err(e);
        }
        self.propagate()?;
        self.lookup_the_y_of_z(role, owner)
    }

    /// Runs `rule` against the knowledge already present, seeding its first
    /// variable with every visible node. Returns the number of firings.
    pub fn recheck_rule(&mut self, id: RuleId) -> Result<usize> {
        let rule = self
            .rules
            .get(id.0)
            .cloned()
            .ok_or_else(|| Error::UnknownRule(id.to_string()))?;
        if rule.kind == RuleKind::IfNeeded || rule.variables.is_empty() {
            return Ok(0);
        }
        let before = self.stats.firings;
        let seeded = (|| {
            for i in 0..self.elements.len() {
                let e = ElementId(i as u32);
                if !self.kind(e).is_node() || !self.is_visible(e) {
                    continue;
                }
                if let Some(b) = self.substitute(&rule, &rule.empty_bindings(), VarId(0), e)? {
                    self.check_rule(id, &rule, b, None)?;
                }
            }
            Ok(())
        })();
        if let Err(e) = seeded {
            self.engine.queue.clear();
            return Err(e);
        }
        self.propagate()?;
        Ok((self.stats.firings - before) as usize)
    }

    /// Whether `e` currently satisfies predicate position checks with
    /// constants read as "some inferior of".
    pub fn predicate_holds(&mut self, x: Term, y: ElementId, z: Term, bindings: &Bindings) -> Result<bool> {
        match (anchor(bindings, x), anchor(bindings, z)) {
            (Some(a), Some(b)) => self.holds(a, y, b),
            _ => Ok(false),
        }
    }
}
