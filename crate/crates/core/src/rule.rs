use std::collections::HashMap;
use std::fmt;

use crate::element::{ElementId, ElementKind};
use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleKind {
    IfAdded,
    IfNeeded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleVariable {
    pub name: String,
    pub superior: Option<ElementId>,
    pub proper: bool,
}

impl RuleVariable {
    pub fn new(name: impl Into<String>) -> Self {
        RuleVariable {
            name: name.into(),
            superior: None,
            proper: false,
        }
    }

    pub fn superior(mut self, t: ElementId) -> Self {
        self.superior = Some(t);
        self
    }

    pub fn proper(mut self) -> Self {
        self.proper = true;
        self
    }
}

/// X or Z position of a predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(VarId),
    Const(ElementId),
}

/// "X is a Y of Z" when Y is a role, "X Y Z" when Y is a relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct XyzPredicate {
    pub x: Term,
    pub y: ElementId,
    pub z: Term,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    Subtract,
    Add,
    Compare,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Subtract => "scone-subtract",
            Builtin::Add => "scone-add",
            Builtin::Compare => "scone-compare",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "scone-subtract" => Some(Builtin::Subtract),
            "scone-add" => Some(Builtin::Add),
            "scone-compare" => Some(Builtin::Compare),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Var(VarId),
    Const(ElementId),
    Call(Builtin, Vec<Expr>),
}

/// One step of an if-added action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Assertion {
    IsA(Expr, Expr),
    Eq(Expr, Expr),
    XIsAYOfZ(Expr, ElementId, Expr),
    XIsTheYOfZ(Expr, ElementId, Expr),
    Statement(Expr, ElementId, Expr),
    /// A native callback registered on the knowledge base by name.
    Hook(String, Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleAction {
    IfAdded(Vec<Assertion>),
    /// Computes `value` and asserts it as the `role` of the owner variable.
    IfNeeded { value: Expr, role: ElementId, owner: VarId },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub name: Option<String>,
    pub kind: RuleKind,
    pub variables: Vec<RuleVariable>,
    pub predicates: Vec<XyzPredicate>,
    pub action: RuleAction,
}

impl Rule {
    pub fn if_added(variables: Vec<RuleVariable>, predicates: Vec<XyzPredicate>, action: Vec<Assertion>) -> Self {
        Rule {
            name: None,
            kind: RuleKind::IfAdded,
            variables,
            predicates,
            action: RuleAction::IfAdded(action),
        }
    }

    pub fn if_needed(
        variables: Vec<RuleVariable>,
        predicates: Vec<XyzPredicate>,
        value: Expr,
        role: ElementId,
        owner: VarId,
    ) -> Self {
        Rule {
            name: None,
            kind: RuleKind::IfNeeded,
            variables,
            predicates,
            action: RuleAction::IfNeeded { value, role, owner },
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn display_name(&self) -> &str {
        self.name.as_deref().unwrap_or("?")
    }

    pub fn var(&self, v: VarId) -> &RuleVariable {
        &self.variables[v.0]
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn empty_bindings(&self) -> Bindings {
        Bindings(vec![None; self.variables.len()])
    }
}

/// Partial assignment of elements to a rule's variables, by position.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bindings(pub(crate) Vec<Option<ElementId>>);

impl Bindings {
    pub fn get(&self, v: VarId) -> Option<ElementId> {
        self.0.get(v.0).copied().flatten()
    }

    pub fn is_complete(&self) -> bool {
        self.0.iter().all(Option::is_some)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Option<ElementId>] {
        &self.0
    }

    pub(crate) fn with(&self, v: VarId, e: ElementId) -> Bindings {
        let mut out = self.clone();
        out.0[v.0] = Some(e);
        out
    }

    /// The full tuple, if every variable is bound.
    pub fn complete(&self) -> Option<Vec<ElementId>> {
        self.0.iter().copied().collect()
    }
}

fn term_vars(t: Term) -> Option<VarId> {
    match t {
        Term::Var(v) => Some(v),
        Term::Const(_) => None,
    }
}

fn expr_vars(e: &Expr, out: &mut Vec<VarId>) {
    match e {
        Expr::Var(v) => out.push(*v),
        Expr::Const(_) => {}
        Expr::Call(_, args) => args.iter().for_each(|a| expr_vars(a, out)),
    }
}

impl<N: Scalar> KnowledgeBase<N> {
    pub(crate) fn term_label(&self, rule: &Rule, t: Term) -> String {
        match t {
            Term::Var(v) => rule.var(v).name.clone(),
            Term::Const(e) => self.display(e),
        }
    }

    /// Checks that `rule` is well formed against this knowledge base.
    pub fn validate_rule(&self, rule: &Rule) -> Result<()> {
        let rname = rule.display_name().to_string();
        let nvars = rule.variables.len();
        let check_var = |v: VarId| -> Result<()> {
            if v.0 < nvars {
                Ok(())
            } else {
                Err(Error::Unbound(rname.clone(), format!("#{}", v.0)))
            }
        };
        let check_elem = |e: ElementId| self.check(e);
        for var in &rule.variables {
            if let Some(t) = var.superior {
                check_elem(t)?;
                if !self.kind(t).is_node() {
                    return Err(Error::KindMismatch(var.name.clone(), self.display(t), "type constraint must be a node"));
                }
            }
        }
        for p in &rule.predicates {
            for t in [p.x, p.z] {
                match t {
                    Term::Var(v) => check_var(v)?,
                    Term::Const(e) => check_elem(e)?,
                }
            }
            check_elem(p.y)?;
            let ky = self.kind(p.y);
            if !ky.is_role() && ky != ElementKind::Relation {
                return Err(Error::YNotRoleOrRelation(rname, self.display(p.y)));
            }
            if let (Term::Const(_), Term::Const(_)) = (p.x, p.z) {
                return Err(Error::GroundPredicate(
                    rname,
                    format!("{} {} {}", self.term_label(rule, p.x), self.display(p.y), self.term_label(rule, p.z)),
                ));
            }
        }
        self.check_connected(rule)?;
        let mut in_preds = vec![false; nvars];
        for p in &rule.predicates {
            for v in [p.x, p.z].into_iter().filter_map(term_vars) {
                in_preds[v.0] = true;
            }
        }
        let owner_only = match &rule.action {
            RuleAction::IfNeeded { owner, .. } if rule.predicates.is_empty() => Some(*owner),
            _ => None,
        };
        for (i, used) in in_preds.iter().enumerate() {
            if !used && owner_only != Some(VarId(i)) {
                return Err(Error::UnusedVariable(rname, rule.variables[i].name.clone()));
            }
        }
        self.check_action(rule, &check_var)
    }

    fn check_connected(&self, rule: &Rule) -> Result<()> {
        if rule.predicates.len() < 2 {
            return Ok(());
        }
        let mut index: HashMap<Term, usize> = HashMap::new();
        let mut parent: Vec<usize> = Vec::new();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let mut vertex = |t: Term, parent: &mut Vec<usize>| {
            *index.entry(t).or_insert_with(|| {
                parent.push(parent.len());
                parent.len() - 1
            })
        };
        for p in &rule.predicates {
            let a = vertex(p.x, &mut parent);
            let b = vertex(p.z, &mut parent);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        let root = find(&mut parent, 0);
        if (0..parent.len()).all(|i| find(&mut parent, i) == root) {
            Ok(())
        } else {
            Err(Error::DisconnectedPredicates(rule.display_name().to_string()))
        }
    }

    fn check_action(&self, rule: &Rule, check_var: &dyn Fn(VarId) -> Result<()>) -> Result<()> {
        let rname = rule.display_name().to_string();
        let bad = |msg: String| Err(Error::BadActionShape(rname.clone(), msg));
        let mut vars = Vec::new();
        let mut consts = Vec::new();
        let mut check_expr = |e: &Expr, vars: &mut Vec<VarId>| {
            expr_vars(e, vars);
            collect_consts(e, &mut consts);
        };
        match (&rule.kind, &rule.action) {
            (RuleKind::IfAdded, RuleAction::IfAdded(steps)) => {
                if steps.is_empty() {
                    return bad("if-added rule has an empty action".into());
                }
                for step in steps {
                    match step {
                        Assertion::IsA(a, b) | Assertion::Eq(a, b) => {
                            check_expr(a, &mut vars);
                            check_expr(b, &mut vars);
                        }
                        Assertion::XIsAYOfZ(x, y, z) | Assertion::XIsTheYOfZ(x, y, z) => {
                            check_expr(x, &mut vars);
                            check_expr(z, &mut vars);
                            self.check(*y)?;
                            if !self.is_role(*y) {
                                return bad(format!("{} is not a role", self.display(*y)));
                            }
                        }
                        Assertion::Statement(a, r, b) => {
                            check_expr(a, &mut vars);
                            check_expr(b, &mut vars);
                            self.check(*r)?;
                            if self.kind(*r) != ElementKind::Relation {
                                return bad(format!("{} is not a relation", self.display(*r)));
                            }
                        }
                        Assertion::Hook(name, args) => {
                            if !self.hooks.contains_key(name) {
                                return bad(format!("no hook named {name}"));
                            }
                            args.iter().for_each(|a| check_expr(a, &mut vars));
                        }
                    }
                }
            }
            (RuleKind::IfNeeded, RuleAction::IfNeeded { value, role, owner }) => {
                check_var(*owner)?;
                check_expr(value, &mut vars);
                self.check(*role)?;
                if self.kind(*role) != ElementKind::IndvRole {
                    return bad(format!("{} is not an individual role", self.display(*role)));
                }
            }
            _ => return bad("action kind does not match rule kind".into()),
        }
        for v in vars {
            check_var(v)?;
        }
        for c in consts {
            self.check(c)?;
        }
        Ok(())
    }

    /// Binds `var` to `e` if `e` is visible, satisfies the variable's type
    /// constraint and proper tag, and every predicate that becomes fully
    /// bound holds. Returns `None` on failure; `bindings` is never changed.
    pub fn substitute(&mut self, rule: &Rule, bindings: &Bindings, var: VarId, e: ElementId) -> Result<Option<Bindings>> {
        self.check(e)?;
        if let Some(current) = bindings.get(var) {
            return Ok((current == e).then(|| bindings.clone()));
        }
        let ok = self.substitution_holds(rule, bindings, var, e)?;
        if ok {
            Ok(Some(bindings.with(var, e)))
        } else {
            if self.config.trace {
                let line = format!("SUBST-FAIL {} {} {}", rule.display_name(), rule.var(var).name, self.display(e));
                self.trace.push(line);
            }
            Ok(None)
        }
    }

    fn substitution_holds(&mut self, rule: &Rule, bindings: &Bindings, var: VarId, e: ElementId) -> Result<bool> {
        if !self.is_visible(e) || !self.kind(e).is_node() {
            return Ok(false);
        }
        let spec = rule.var(var);
        if spec.proper && !self.elements[e.index()].proper {
            return Ok(false);
        }
        if let Some(t) = spec.superior {
            if !self.is_x_a_y(e, t)? {
                return Ok(false);
            }
        }
        let next = bindings.with(var, e);
        for p in &rule.predicates {
            if term_vars(p.x) != Some(var) && term_vars(p.z) != Some(var) {
                continue;
            }
            let (Some(x), Some(z)) = (anchor(&next, p.x), anchor(&next, p.z)) else {
                continue;
            };
            if !self.holds(x, p.y, z)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn collect_consts(e: &Expr, out: &mut Vec<ElementId>) {
    match e {
        Expr::Const(c) => out.push(*c),
        Expr::Var(_) => {}
        Expr::Call(_, args) => args.iter().for_each(|a| collect_consts(a, out)),
    }
}

pub(crate) fn anchor(b: &Bindings, t: Term) -> Option<crate::scan::Anchor> {
    use crate::scan::Anchor;
    match t {
        Term::Const(c) => Some(Anchor::Below(c)),
        Term::Var(v) => b.get(v).map(Anchor::Exact),
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.0 + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Kb;

    struct Family {
        kb: Kb,
        mother: ElementId,
    }

    fn family() -> Family {
        let mut kb = Kb::new();
        let person = kb.new_type("person", kb.root()).unwrap();
        let female = kb.new_type("female", person).unwrap();
        let mother = kb.new_indv_role("mother", person, female).unwrap();
        Family { kb, mother }
    }

    fn vars(names: &[&str]) -> Vec<RuleVariable> {
        names.iter().map(|n| RuleVariable::new(*n)).collect()
    }

    fn v(i: usize) -> Term {
        Term::Var(VarId(i))
    }

    #[test]
    fn disconnected_predicates_are_rejected() {
        let Family { kb, mother } = family();
        let rule = Rule::if_added(
            vars(&["a", "b", "c", "d"]),
            vec![
                XyzPredicate { x: v(0), y: mother, z: v(1) },
                XyzPredicate { x: v(2), y: mother, z: v(3) },
            ],
            vec![Assertion::Eq(Expr::Var(VarId(0)), Expr::Var(VarId(2)))],
        );
        assert!(matches!(kb.validate_rule(&rule), Err(Error::DisconnectedPredicates(_))));
    }

    #[test]
    fn single_predicate_rule_is_valid() {
        let Family { kb, mother } = family();
        let female = kb.lookup("female").unwrap();
        let rule = Rule::if_added(
            vars(&["a", "b"]),
            vec![XyzPredicate { x: v(0), y: mother, z: v(1) }],
            vec![Assertion::IsA(Expr::Var(VarId(0)), Expr::Const(female))],
        );
        kb.validate_rule(&rule).unwrap();
    }

    #[test]
    fn predicate_y_must_be_role_or_relation() {
        let Family { kb, .. } = family();
        let person = kb.lookup("person").unwrap();
        let rule = Rule::if_added(
            vars(&["a", "b"]),
            vec![XyzPredicate { x: v(0), y: person, z: v(1) }],
            vec![Assertion::IsA(Expr::Var(VarId(0)), Expr::Var(VarId(1)))],
        );
        assert!(matches!(kb.validate_rule(&rule), Err(Error::YNotRoleOrRelation(..))));
    }

    #[test]
    fn ground_and_unused_are_rejected() {
        let Family { kb, mother } = family();
        let person = kb.lookup("person").unwrap();
        let ground = Rule::if_added(
            vars(&["a"]),
            vec![XyzPredicate { x: Term::Const(person), y: mother, z: Term::Const(person) }],
            vec![Assertion::IsA(Expr::Var(VarId(0)), Expr::Const(person))],
        );
        assert!(matches!(kb.validate_rule(&ground), Err(Error::GroundPredicate(..))));
        let unused = Rule::if_added(
            vars(&["a", "b", "c"]),
            vec![XyzPredicate { x: v(0), y: mother, z: v(1) }],
            vec![Assertion::IsA(Expr::Var(VarId(0)), Expr::Const(person))],
        );
        assert!(matches!(kb.validate_rule(&unused), Err(Error::UnusedVariable(..))));
    }

    #[test]
    fn if_needed_role_must_be_individual_role() {
        let mut kb = Kb::new();
        let person = kb.new_type("person", kb.root()).unwrap();
        let friend = kb.new_type_role("friend", person, person).unwrap();
        let rule = Rule::if_needed(
            vars(&["a", "c"]),
            vec![XyzPredicate { x: v(0), y: friend, z: v(1) }],
            Expr::Var(VarId(0)),
            friend,
            VarId(1),
        );
        assert!(matches!(kb.validate_rule(&rule), Err(Error::BadActionShape(..))));
    }

    #[test]
    fn substitute_checks_type_constraint_without_mutating() {
        let mut kb = Kb::new();
        let vehicle = kb.new_type("vehicle", kb.root()).unwrap();
        let airplane = kb.new_type("airplane", vehicle).unwrap();
        let car = kb.new_type("car", vehicle).unwrap();
        let trip = kb.new_type("trip", kb.root()).unwrap();
        let tv = kb.new_type_role("travel vehicle", trip, vehicle).unwrap();
        let plane = kb.new_indv("my vehicle", airplane).unwrap();
        let mycar = kb.new_indv("my car", car).unwrap();
        let rule = Rule::if_added(
            vec![RuleVariable::new("a"), RuleVariable::new("b").superior(airplane)],
            vec![XyzPredicate { x: v(1), y: tv, z: v(0) }],
            vec![Assertion::IsA(Expr::Var(VarId(0)), Expr::Const(trip))],
        );
        let empty = rule.empty_bindings();
        let ok = kb.substitute(&rule, &empty, VarId(1), plane).unwrap();
        assert_eq!(ok.unwrap().get(VarId(1)), Some(plane));
        assert!(kb.substitute(&rule, &empty, VarId(1), mycar).unwrap().is_none());
        assert_eq!(empty, rule.empty_bindings());
        assert_eq!(kb.markers_available(), kb.marker_capacity());
    }

    #[test]
    fn proper_tag_rejects_type_fillers() {
        let mut kb = Kb::new();
        let tod = kb.new_type("time of day", kb.root()).unwrap();
        let half = kb.new_type("time ending in :30", tod).unwrap();
        let meeting = kb.new_type("meeting", kb.root()).unwrap();
        let start = kb.new_indv_role("start time", meeting, tod).unwrap();
        let rule = Rule::if_added(
            vec![RuleVariable::new("a").proper(), RuleVariable::new("c")],
            vec![XyzPredicate { x: v(0), y: start, z: v(1) }],
            vec![Assertion::IsA(Expr::Var(VarId(1)), Expr::Const(meeting))],
        );
        let empty = rule.empty_bindings();
        assert!(kb.substitute(&rule, &empty, VarId(0), half).unwrap().is_none());
    }
}
