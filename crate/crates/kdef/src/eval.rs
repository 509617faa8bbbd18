use std::path::Path;

use score_core::{
    Assertion, Builtin, ElementId, Expr, KnowledgeBase, Payload, Rule, RuleId, RuleVariable, Scalar, Term, VarId,
    XyzPredicate,
};

use crate::error::{Error, ErrorKind, Result};
use crate::sexp::{parse, Atom, Node, Sexp};

/// Result of evaluating one form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Value {
    Element(ElementId),
    Bool(bool),
    Rule(RuleId),
    /// No value, e.g. a role with no known filler.
    Nil,
}

impl Value {
    /// `{name}`, `T`, `NIL` or a rule name.
    pub fn render<N: Scalar>(&self, kb: &KnowledgeBase<N>) -> String {
        match self {
            Value::Element(e) => kb.display(*e),
            Value::Bool(true) => "T".into(),
            Value::Bool(false) | Value::Nil => "NIL".into(),
            Value::Rule(r) => kb.rule(*r).and_then(|r| r.name.clone()).unwrap_or_else(|| r.to_string()),
        }
    }

    fn truthy(self) -> bool {
        !matches!(self, Value::Bool(false) | Value::Nil)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadSummary {
    pub forms_evaluated: usize,
    pub rules_installed: usize,
    pub firings: u64,
}

fn err<T>(kind: ErrorKind, at: &Sexp) -> Result<T> {
    Err(Error::at(kind, at.loc.clone()))
}

fn kb_err(e: score_core::Error, at: &Sexp) -> Error {
    Error::at(ErrorKind::Kb(e), at.loc.clone())
}

fn arity(head: &str, expected: &'static str, got: usize, at: &Sexp) -> Error {
    Error::at(
        ErrorKind::Arity {
            head: head.to_string(),
            expected,
            got,
        },
        at.loc.clone(),
    )
}

/// Splits trailing `:key value` pairs from positional arguments.
fn split_options(args: &[Sexp]) -> (&[Sexp], Vec<(&str, &Sexp)>) {
    let first_kw = args.iter().position(|a| a.as_keyword().is_some()).unwrap_or(args.len());
    let (pos, rest) = args.split_at(first_kw);
    let opts = rest
        .chunks(2)
        .filter_map(|pair| Some((pair[0].as_keyword()?, pair.get(1)?)))
        .collect();
    (pos, opts)
}

fn expect_args<'a>(head: &str, args: &'a [Sexp], n: usize, expected: &'static str, form: &Sexp) -> Result<&'a [Sexp]> {
    if args.len() == n {
        Ok(args)
    } else {
        Err(arity(head, expected, args.len(), form))
    }
}

/// Text of a `{name}` or string argument naming a new element.
fn new_name(arg: &Sexp) -> Result<&str> {
    match &arg.node {
        Node::Atom(Atom::Element(s)) | Node::Atom(Atom::Str(s)) => Ok(s),
        _ => err(ErrorKind::BadForm(format!("expected an element name, found {arg}")), arg),
    }
}

/// Resolves `{name}`, creating a number individual for integer names.
pub fn resolve<N: Scalar>(kb: &mut KnowledgeBase<N>, name: &str, at: &Sexp) -> Result<ElementId> {
    if let Some(id) = kb.lookup(name) {
        return Ok(id);
    }
    let digits = name.strip_prefix('-').unwrap_or(name);
    if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) {
        if let Ok(n) = name.parse::<N>() {
            return kb.new_number(name, n).map_err(|e| kb_err(e, at));
        }
    }
    err(ErrorKind::UnresolvedElementRef(name.to_string()), at)
}

/// An argument that must denote an element: `{name}` or a form returning one.
fn element<N: Scalar>(kb: &mut KnowledgeBase<N>, arg: &Sexp) -> Result<ElementId> {
    match &arg.node {
        Node::Atom(Atom::Element(name)) => resolve(kb, name, arg),
        Node::List(_) => match eval_form(kb, arg)? {
            Value::Element(e) => Ok(e),
            other => err(
                ErrorKind::BadForm(format!("{arg} returned {} instead of an element", other.render(kb))),
                arg,
            ),
        },
        _ => err(ErrorKind::BadForm(format!("expected an element, found {arg}")), arg),
    }
}

fn payload<N: Scalar>(arg: &Sexp) -> Result<Payload<N>> {
    match &arg.node {
        Node::Atom(Atom::Int(s)) => s
            .parse::<N>()
            .map(Payload::Number)
            .or_else(|_| err(ErrorKind::BadForm(format!("{s} is not a valid number")), arg)),
        Node::Atom(Atom::Str(s)) => Ok(Payload::Text(s.clone())),
        _ => err(ErrorKind::BadForm(format!(":value expects a number or string, found {arg}")), arg),
    }
}

/// Evaluates one top-level or nested form.
pub fn eval_form<N: Scalar>(kb: &mut KnowledgeBase<N>, form: &Sexp) -> Result<Value> {
    let items = match &form.node {
        Node::List(items) if !items.is_empty() => items,
        Node::Atom(Atom::Element(name)) => return resolve(kb, name, form).map(Value::Element),
        _ => return err(ErrorKind::BadForm(format!("cannot evaluate {form}")), form),
    };
    let Some(head) = items[0].as_symbol() else {
        return err(ErrorKind::UnknownHead(items[0].to_string()), &items[0]);
    };
    let args = &items[1..];
    let kbe = |e| kb_err(e, form);
    let value = match head {
        "new-type" | "new-indv" => {
            let (pos, opts) = split_options(args);
            if pos.is_empty() || pos.len() > 2 {
                return Err(arity(head, "1 or 2", pos.len(), form));
            }
            let name = new_name(&pos[0])?;
            let parent = match pos.get(1) {
                Some(p) => element(kb, p)?,
                None => kb.root(),
            };
            let mut value = None;
            for (key, v) in opts {
                match key {
                    "value" if head == "new-indv" => value = Some(payload::<N>(v)?),
                    _ => return err(ErrorKind::BadForm(format!("unknown option :{key} for {head}")), v),
                }
            }
            let id = match (head, value) {
                ("new-type", _) => kb.new_type(name, parent),
                (_, Some(p)) => kb.new_indv_with_payload(name, parent, p),
                (_, None) => kb.new_indv(name, parent),
            };
            Value::Element(id.map_err(kbe)?)
        }
        "new-is-a" | "new-eq" | "new-cancel" => {
            let a = expect_args(head, args, 2, "2", form)?;
            let (x, y) = (element(kb, &a[0])?, element(kb, &a[1])?);
            let link = match head {
                "new-is-a" => kb.add_is_a(x, y),
                "new-eq" => kb.add_eq(x, y),
                _ => kb.add_cancel(x, y),
            };
            Value::Element(link.map_err(kbe)?)
        }
        "new-type-role" | "new-indv-role" => {
            let a = expect_args(head, args, 3, "3", form)?;
            let name = new_name(&a[0])?;
            let (owner, parent) = (element(kb, &a[1])?, element(kb, &a[2])?);
            let role = if head == "new-type-role" {
                kb.new_type_role(name, owner, parent)
            } else {
                kb.new_indv_role(name, owner, parent)
            };
            Value::Element(role.map_err(kbe)?)
        }
        "new-relation" => {
            let (pos, opts) = split_options(args);
            let name = match pos {
                [n] | [n, _, _] => new_name(n)?,
                _ => return Err(arity(head, "1 or 3", pos.len(), form)),
            };
            let (mut a_type, mut b_type) = match pos {
                [_, a, b] => (Some(element(kb, a)?), Some(element(kb, b)?)),
                _ => (None, None),
            };
            for (key, v) in opts {
                match key {
                    "a-inst-of" => a_type = Some(element(kb, v)?),
                    "b-inst-of" => b_type = Some(element(kb, v)?),
                    _ => return err(ErrorKind::BadForm(format!("unknown option :{key} for {head}")), v),
                }
            }
            let root = kb.root();
            let rel = kb.new_relation(name, a_type.unwrap_or(root), b_type.unwrap_or(root));
            Value::Element(rel.map_err(kbe)?)
        }
        "new-statement" => {
            let a = expect_args(head, args, 3, "3", form)?;
            let (x, r, z) = (element(kb, &a[0])?, element(kb, &a[1])?, element(kb, &a[2])?);
            Value::Element(kb.new_statement(x, r, z).map_err(kbe)?)
        }
        "x-is-a-y-of-z" | "x-is-the-y-of-z" => {
            let a = expect_args(head, args, 3, "3", form)?;
            let (x, y, z) = (element(kb, &a[0])?, element(kb, &a[1])?, element(kb, &a[2])?);
            let link = if head == "x-is-a-y-of-z" {
                kb.x_is_a_y_of_z(x, y, z)
            } else {
                kb.x_is_the_y_of_z(x, y, z)
            };
            Value::Element(link.map_err(kbe)?)
        }
        "the-x-of-y" => {
            let a = expect_args(head, args, 2, "2", form)?;
            let (role, owner) = (element(kb, &a[0])?, element(kb, &a[1])?);
            match kb.request_value(role, owner).map_err(kbe)? {
                Some(e) => Value::Element(e),
                None => Value::Nil,
            }
        }
        "is-x-a-y?" | "simple-is-x-a-y?" => {
            let a = expect_args(head, args, 2, "2", form)?;
            let (x, y) = (element(kb, &a[0])?, element(kb, &a[1])?);
            Value::Bool(kb.is_x_a_y(x, y).map_err(kbe)?)
        }
        "is-x-eq-y?" => {
            let a = expect_args(head, args, 2, "2", form)?;
            let (x, y) = (element(kb, &a[0])?, element(kb, &a[1])?);
            let same = x == y || (kb.is_x_a_y(x, y).map_err(kbe)? && kb.is_x_a_y(y, x).map_err(kbe)?);
            Value::Bool(same)
        }
        "assert" => {
            let a = expect_args(head, args, 1, "1", form)?;
            let v = eval_form(kb, &a[0])?;
            if !v.truthy() {
                return err(ErrorKind::AssertionFailed(a[0].to_string()), form);
            }
            v
        }
        "new-context" => {
            if args.is_empty() || args.len() > 2 {
                return Err(arity(head, "1 or 2", args.len(), form));
            }
            let name = new_name(&args[0])?;
            let parent = match args.get(1) {
                Some(p) => element(kb, p)?,
                None => kb.general_context(),
            };
            Value::Element(kb.new_context(name, parent).map_err(kbe)?)
        }
        "in-context" => {
            let a = expect_args(head, args, 1, "1", form)?;
            let c = element(kb, &a[0])?;
            kb.activate_context(c).map_err(kbe)?;
            Value::Element(c)
        }
        "new-if-added-rule" | "new-if-needed-rule" => {
            let rule = build_rule(kb, head, args, form)?;
            Value::Rule(kb.install_rule(rule).map_err(kbe)?)
        }
        "recheck-rule" => {
            let a = expect_args(head, args, 1, "1", form)?;
            let name = a[0]
                .as_symbol()
                .ok_or_else(|| Error::at(ErrorKind::BadForm("expected a rule name".into()), a[0].loc.clone()))?;
            let id = kb
                .rule_by_name(name)
                .ok_or_else(|| kb_err(score_core::Error::UnknownRule(name.to_string()), &a[0]))?;
            kb.recheck_rule(id).map_err(kbe)?;
            Value::Rule(id)
        }
        _ => return err(ErrorKind::UnknownHead(head.to_string()), &items[0]),
    };
    Ok(value)
}

struct RuleScope<'a> {
    vars: Vec<RuleVariable>,
    head: &'a str,
}

impl RuleScope<'_> {
    fn var(&self, sym: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == sym).map(VarId)
    }

    fn term<N: Scalar>(&self, kb: &mut KnowledgeBase<N>, s: &Sexp) -> Result<Term> {
        match &s.node {
            Node::Atom(Atom::Symbol(sym)) => self
                .var(sym)
                .map(Term::Var)
                .ok_or_else(|| Error::at(ErrorKind::BadForm(format!("{sym} is not a variable of this rule")), s.loc.clone())),
            Node::Atom(Atom::Element(name)) => Ok(Term::Const(resolve(kb, name, s)?)),
            _ => err(ErrorKind::BadForm(format!("expected a variable or element, found {s}")), s),
        }
    }

    fn expr<N: Scalar>(&self, kb: &mut KnowledgeBase<N>, s: &Sexp) -> Result<Expr> {
        if let Some(items) = s.as_list() {
            let Some(op) = items.first().and_then(Sexp::as_symbol).and_then(Builtin::from_name) else {
                return err(ErrorKind::BadForm(format!("unknown computation {s}")), s);
            };
            let args = items[1..].iter().map(|a| self.expr(kb, a)).collect::<Result<_>>()?;
            return Ok(Expr::Call(op, args));
        }
        Ok(match self.term(kb, s)? {
            Term::Var(v) => Expr::Var(v),
            Term::Const(c) => Expr::Const(c),
        })
    }

    fn step<N: Scalar>(&self, kb: &mut KnowledgeBase<N>, s: &Sexp) -> Result<Assertion> {
        let bad = || err(ErrorKind::BadForm(format!("{} body forms must be assertions, found {s}", self.head)), s);
        let Some(items) = s.as_list() else { return bad() };
        let Some(head) = items.first().and_then(Sexp::as_symbol) else { return bad() };
        let args = &items[1..];
        let need = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(arity(head, if n == 2 { "2" } else { "3" }, args.len(), s))
            }
        };
        Ok(match head {
            "new-is-a" | "new-eq" => {
                need(2)?;
                let (a, b) = (self.expr(kb, &args[0])?, self.expr(kb, &args[1])?);
                if head == "new-is-a" {
                    Assertion::IsA(a, b)
                } else {
                    Assertion::Eq(a, b)
                }
            }
            "x-is-a-y-of-z" | "x-is-the-y-of-z" | "new-statement" => {
                need(3)?;
                let x = self.expr(kb, &args[0])?;
                let y = match &args[1].node {
                    Node::Atom(Atom::Element(name)) => resolve(kb, name, &args[1])?,
                    _ => return err(ErrorKind::BadForm(format!("{head} needs an element in the middle")), &args[1]),
                };
                let z = self.expr(kb, &args[2])?;
                match head {
                    "x-is-a-y-of-z" => Assertion::XIsAYOfZ(x, y, z),
                    "x-is-the-y-of-z" => Assertion::XIsTheYOfZ(x, y, z),
                    _ => Assertion::Statement(x, y, z),
                }
            }
            "call-hook" => {
                let Some(name) = args.first().and_then(|a| match &a.node {
                    Node::Atom(Atom::Str(s)) | Node::Atom(Atom::Symbol(s)) => Some(s.clone()),
                    _ => None,
                }) else {
                    return err(ErrorKind::BadForm("call-hook needs a hook name".into()), s);
                };
                let exprs = args[1..].iter().map(|a| self.expr(kb, a)).collect::<Result<_>>()?;
                Assertion::Hook(name, exprs)
            }
            _ => return bad(),
        })
    }
}

fn binding<N: Scalar>(kb: &mut KnowledgeBase<N>, s: &Sexp) -> Result<RuleVariable> {
    if let Some(sym) = s.as_symbol() {
        return Ok(RuleVariable::new(sym));
    }
    let items = s.as_list().unwrap_or(&[]);
    let Some(sym) = items.first().and_then(Sexp::as_symbol) else {
        return err(ErrorKind::BadForm(format!("bad rule binding {s}")), s);
    };
    let mut var = RuleVariable::new(sym);
    let rest = &items[1..];
    if rest.len() % 2 != 0 {
        return err(ErrorKind::BadForm(format!("binding {s} has an option without a value")), s);
    }
    for pair in rest.chunks(2) {
        match pair[0].as_keyword() {
            Some("superior") => {
                if var.superior.is_some() {
                    return err(ErrorKind::BadForm(format!("{sym} has more than one type constraint")), &pair[0]);
                }
                var.superior = Some(element(kb, &pair[1])?);
            }
            Some("proper") => {
                var.proper = !matches!(pair[1].as_symbol(), Some("nil") | Some("NIL"));
            }
            _ => return err(ErrorKind::BadForm(format!("unknown binding option {}", pair[0])), &pair[0]),
        }
    }
    Ok(var)
}

fn build_rule<N: Scalar>(kb: &mut KnowledgeBase<N>, head: &str, args: &[Sexp], form: &Sexp) -> Result<Rule> {
    let mut args = args;
    let mut name = None;
    if args.first().and_then(Sexp::as_keyword) == Some("name") {
        let Some(n) = args.get(1).and_then(Sexp::as_symbol) else {
            return err(ErrorKind::BadForm(":name expects a symbol".into()), form);
        };
        name = Some(n.to_string());
        args = &args[2..];
    }
    if args.len() < 3 || (head == "new-if-needed-rule" && args.len() != 3) {
        let expected = if head == "new-if-needed-rule" { "3" } else { "at least 3" };
        return Err(arity(head, expected, args.len(), form));
    }
    let Some(bindings) = args[0].as_list() else {
        return err(ErrorKind::BadForm("rule bindings must be a list".into()), &args[0]);
    };
    let vars = bindings.iter().map(|b| binding(kb, b)).collect::<Result<Vec<_>>>()?;
    let scope = RuleScope { vars, head };
    let Some(pred_forms) = args[1].as_list() else {
        return err(ErrorKind::BadForm("rule predicates must be a list".into()), &args[1]);
    };
    let mut predicates = Vec::new();
    for p in pred_forms {
        let Some([x, y, z]) = p.as_list().and_then(|l| <&[Sexp; 3]>::try_from(l).ok()) else {
            return err(ErrorKind::BadForm(format!("predicate {p} must have three parts")), p);
        };
        let y = match &y.node {
            Node::Atom(Atom::Element(n)) => resolve(kb, n, y)?,
            _ => return err(ErrorKind::BadForm(format!("predicate middle {y} must be an element")), y),
        };
        predicates.push(XyzPredicate {
            x: scope.term(kb, x)?,
            y,
            z: scope.term(kb, z)?,
        });
    }
    let mut rule = if head == "new-if-added-rule" {
        let steps = args[2..].iter().map(|s| scope.step(kb, s)).collect::<Result<Vec<_>>>()?;
        Rule::if_added(scope.vars.clone(), predicates, steps)
    } else {
        let action = &args[2];
        let Some([value, role, owner]) = action.as_list().and_then(|l| <&[Sexp; 3]>::try_from(l).ok()) else {
            return err(ErrorKind::BadForm(format!("if-needed action {action} must be (X Y Z)")), action);
        };
        let value = scope.expr(kb, value)?;
        let role = match &role.node {
            Node::Atom(Atom::Element(n)) => resolve(kb, n, role)?,
            _ => return err(ErrorKind::BadForm(format!("action role {role} must be an element")), role),
        };
        let Some(Term::Var(owner)) = owner.as_symbol().and_then(|s| scope.var(s)).map(Term::Var) else {
            return err(ErrorKind::BadForm(format!("action owner {owner} must be a rule variable")), owner);
        };
        Rule::if_needed(scope.vars.clone(), predicates, value, role, owner)
    };
    rule.name = name;
    Ok(rule)
}

/// Evaluates every form of `text` in order, stopping at the first error.
pub fn eval_str<N: Scalar>(kb: &mut KnowledgeBase<N>, text: &str, file: &str) -> Result<Vec<Value>> {
    let forms = parse(text, file)?;
    forms.iter().map(|f| eval_form(kb, f)).collect()
}

pub fn load_str<N: Scalar>(kb: &mut KnowledgeBase<N>, text: &str, file: &str) -> Result<LoadSummary> {
    let forms = parse(text, file)?;
    let rules_before = kb.rule_count();
    let firings_before = kb.stats().firings;
    for f in &forms {
        eval_form(kb, f)?;
    }
    Ok(LoadSummary {
        forms_evaluated: forms.len(),
        rules_installed: kb.rule_count() - rules_before,
        firings: kb.stats().firings - firings_before,
    })
}

pub fn load_file<N: Scalar>(kb: &mut KnowledgeBase<N>, path: impl AsRef<Path>) -> Result<LoadSummary> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error {
        kind: ErrorKind::Io(format!("{}: {e}", path.display())),
        location: None,
    })?;
    load_str(kb, &text, &path.display().to_string())
}
