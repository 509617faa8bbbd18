//! Seeded random knowledge bases and rules, emitted as `.kdef` text.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

const THING: &str = "thing";

#[derive(Clone, Debug)]
pub struct RoleSpec {
    pub name: String,
    /// Index into [`Schema::types`].
    pub owner: usize,
    pub indv: bool,
}

#[derive(Clone, Debug)]
pub struct RelSpec {
    pub name: String,
    /// Argument constraints as type indices; `None` means `{thing}`.
    pub a: Option<usize>,
    pub b: Option<usize>,
}

/// What the generator knows about the hierarchy it emitted.
#[derive(Clone, Debug, Default)]
pub struct Schema {
    pub types: Vec<String>,
    /// Reflexive ancestor sets of each type, by index.
    pub ancestors: Vec<BTreeSet<usize>>,
    pub roles: Vec<RoleSpec>,
    pub relations: Vec<RelSpec>,
    /// Unconstrained relations reserved for rule actions.
    pub action_relations: Vec<String>,
    /// Types under `{thing}` that only rule actions attach things to.
    pub tags: Vec<String>,
    /// Types some role lies under; role fillers become inferiors of these.
    pub role_supers: BTreeSet<usize>,
}

/// A generated knowledge base split into the phases a test replays.
#[derive(Clone, Debug)]
pub struct GeneratedKb {
    pub seed: u64,
    pub size: usize,
    pub schema: Schema,
    /// Forms building the hierarchy, roles and relations.
    pub schema_forms: Vec<String>,
    /// Forms adding individuals, role fillers and statements, one step each.
    pub instance_forms: Vec<String>,
}

impl GeneratedKb {
    pub fn text(&self) -> String {
        let mut s = String::new();
        for f in self.schema_forms.iter().chain(&self.instance_forms) {
            s.push_str(f);
            s.push('\n');
        }
        s
    }

    /// SHA-256 of [`Self::text`], lowercase hex.
    pub fn fingerprint(&self) -> String {
        hex(&Sha256::digest(self.text().as_bytes()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn b(name: &str) -> String {
    format!("{{{name}}}")
}

struct Builder {
    rng: ChaCha8Rng,
    schema: Schema,
    forms: Vec<String>,
    cost: usize,
}

impl Builder {
    fn type_name(&self, t: Option<usize>) -> &str {
        t.map_or(THING, |t| self.schema.types[t].as_str())
    }

    fn random_type(&mut self) -> Option<usize> {
        let n = self.schema.types.len();
        (n > 0).then(|| self.rng.gen_range(0..n))
    }

    fn add_type(&mut self) {
        let i = self.schema.types.len();
        let name = format!("type {i}");
        let parent = if i == 0 || self.rng.gen_bool(0.15) { None } else { self.random_type() };
        let mut anc = BTreeSet::from([i]);
        self.forms.push(format!("(new-type {} {})", b(&name), b(self.type_name(parent))));
        self.cost += 2;
        if let Some(p) = parent {
            anc.extend(self.schema.ancestors[p].iter().copied());
            if i > 1 && self.rng.gen_bool(0.2) {
                let q = self.rng.gen_range(0..i);
                if !anc.contains(&q) {
                    self.forms.push(format!("(new-is-a {} {})", b(&name), b(&self.schema.types[q])));
                    self.cost += 1;
                    anc.extend(self.schema.ancestors[q].iter().copied());
                }
            }
        }
        self.schema.types.push(name);
        self.schema.ancestors.push(anc);
    }

    fn add_role(&mut self) {
        let i = self.schema.roles.len();
        let name = format!("role {i}");
        let owner = self.random_type().expect("types exist");
        let parent = if i > 0 && self.rng.gen_bool(0.2) {
            self.schema.roles[self.rng.gen_range(0..i)].name.clone()
        } else {
            let t = self.random_type();
            if let Some(t) = t {
                let anc = self.schema.ancestors[t].clone();
                self.schema.role_supers.extend(anc);
            }
            self.type_name(t).to_string()
        };
        let indv = self.rng.gen_bool(0.3);
        let head = if indv { "new-indv-role" } else { "new-type-role" };
        self.forms.push(format!(
            "({head} {} {} {})",
            b(&name),
            b(&self.schema.types[owner]),
            b(&parent)
        ));
        self.cost += 3;
        self.schema.roles.push(RoleSpec { name, owner, indv });
    }

    fn add_relation(&mut self) {
        let i = self.schema.relations.len();
        let name = format!("rel {i}");
        let a = if self.rng.gen_bool(0.5) { self.random_type() } else { None };
        let bb = if self.rng.gen_bool(0.5) { self.random_type() } else { None };
        self.forms.push(format!(
            "(new-relation {} {} {})",
            b(&name),
            b(self.type_name(a)),
            b(self.type_name(bb))
        ));
        self.cost += 1;
        self.schema.relations.push(RelSpec { name, a, b: bb });
    }
}

struct Individuals {
    names: Vec<String>,
    types: Vec<usize>,
}

impl Individuals {
    /// Individuals whose type lies under `t` (`None` = any).
    fn under(&self, schema: &Schema, t: Option<usize>) -> Vec<usize> {
        (0..self.names.len())
            .filter(|&i| t.is_none_or(|t| schema.ancestors[self.types[i]].contains(&t)))
            .collect()
    }
}

fn build_schema(rng: ChaCha8Rng, size: usize) -> Builder {
    let mut bld = Builder {
        rng,
        schema: Schema::default(),
        forms: Vec::new(),
        cost: 2,
    };
    if size == 0 {
        return bld;
    }
    let n_types = (size / 8).max(1);
    let n_roles = (size / 25).max(1);
    let n_rels = (size / 40).max(1);
    for _ in 0..n_types {
        bld.add_type();
    }
    for _ in 0..n_roles {
        bld.add_role();
    }
    for _ in 0..n_rels {
        bld.add_relation();
    }
    for i in 0..2 {
        let name = format!("tag {i}");
        bld.forms.push(format!("(new-type {} {})", b(&name), b(THING)));
        bld.cost += 2;
        bld.schema.tags.push(name);
    }
    let name = "act rel 0".to_string();
    bld.forms.push(format!("(new-relation {} {} {})", b(&name), b(THING), b(THING)));
    bld.cost += 1;
    bld.schema.action_relations.push(name);
    bld
}

/// A layered is-a DAG with roles and relations, then individuals, role
/// fillers and statements until roughly `size` elements exist. Every form
/// is valid when replayed in order on a fresh knowledge base.
pub fn gen_random_kb(seed: u64, size: usize) -> GeneratedKb {
    let mut bld = build_schema(rng_for(seed, 1), size);
    let schema_forms = std::mem::take(&mut bld.forms);
    let mut inds = Individuals {
        names: Vec::new(),
        types: Vec::new(),
    };
    let mut instance_forms = Vec::new();
    let mut filled: BTreeSet<(usize, usize)> = BTreeSet::new();
    while size > 0 && bld.cost < size {
        let roll = bld.rng.gen_range(0..10);
        if inds.names.len() < 3 || roll < 3 {
            let i = inds.names.len();
            let name = format!("ind {i}");
            let t = bld.random_type().expect("types exist");
            let value = if bld.rng.gen_bool(0.3) {
                format!(" :value {}", bld.rng.gen_range(0..1000))
            } else {
                String::new()
            };
            instance_forms.push(format!("(new-indv {} {}{value})", b(&name), b(&bld.schema.types[t])));
            bld.cost += 2;
            inds.names.push(name);
            inds.types.push(t);
        } else if roll < 8 {
            let r = bld.rng.gen_range(0..bld.schema.roles.len());
            let role = bld.schema.roles[r].clone();
            let owners = inds.under(&bld.schema, Some(role.owner));
            let Some(&z) = owners.choose(&mut bld.rng) else { continue };
            let x = bld.rng.gen_range(0..inds.names.len());
            if x == z {
                continue;
            }
            let head = if role.indv { "x-is-the-y-of-z" } else { "x-is-a-y-of-z" };
            instance_forms.push(format!(
                "({head} {} {} {})",
                b(&inds.names[x]),
                b(&role.name),
                b(&inds.names[z])
            ));
            bld.cost += if filled.insert((r, z)) { 4 } else { 1 };
        } else {
            let n = bld.schema.relations.len();
            let rel = bld.schema.relations[bld.rng.gen_range(0..n)].clone();
            let (Some(&x), Some(&z)) = (
                inds.under(&bld.schema, rel.a).choose(&mut bld.rng),
                inds.under(&bld.schema, rel.b).choose(&mut bld.rng),
            ) else {
                continue;
            };
            instance_forms.push(format!(
                "(new-statement {} {} {})",
                b(&inds.names[x]),
                b(&rel.name),
                b(&inds.names[z])
            ));
            bld.cost += 1;
        }
    }
    GeneratedKb {
        seed,
        size,
        schema: bld.schema,
        schema_forms,
        instance_forms,
    }
}

/// Up to `n` connected if-added rules over `kb`'s schema, one form each.
///
/// Variables are numbered so that each one after the first shares a
/// predicate with an earlier one. Actions attach a variable to a tag type
/// or assert an action-relation statement between two proper variables.
pub fn gen_random_rules(seed: u64, kb: &GeneratedKb, n: usize) -> Vec<String> {
    let s = &kb.schema;
    if s.types.is_empty() || s.roles.is_empty() {
        return Vec::new();
    }
    let mut rng = rng_for(seed, 2);
    let ys: Vec<&str> = s
        .roles
        .iter()
        .map(|r| r.name.as_str())
        .chain(s.relations.iter().map(|r| r.name.as_str()))
        .chain(s.action_relations.iter().map(String::as_str))
        .collect();
    let mut rules = Vec::new();
    for _ in 0..n {
        let consts: Vec<usize> = (0..s.types.len()).filter(|t| !s.role_supers.contains(t)).collect();
        let k = rng.gen_range(if consts.is_empty() { 2 } else { 1 }..=4usize);
        let mut preds: Vec<(String, &str, String)> = Vec::new();
        let pred = |rng: &mut ChaCha8Rng, u: String, v: String| {
            let y = ys[rng.gen_range(0..ys.len())];
            if rng.gen_bool(0.5) {
                (u, y, v)
            } else {
                (v, y, u)
            }
        };
        for v in 1..k {
            let u = rng.gen_range(0..v);
            let p = pred(&mut rng, format!("v{u}"), format!("v{v}"));
            preds.push(p);
        }
        if k > 2 && rng.gen_bool(0.3) {
            let u = rng.gen_range(0..k);
            let v = rng.gen_range(0..k);
            if u != v {
                let p = pred(&mut rng, format!("v{u}"), format!("v{v}"));
                preds.push(p);
            }
        }
        if k == 1 || (!consts.is_empty() && rng.gen_bool(0.3)) {
            let v = rng.gen_range(0..k);
            let c = b(&s.types[consts[rng.gen_range(0..consts.len())]]);
            let p = pred(&mut rng, format!("v{v}"), c);
            preds.push(p);
        }
        let mut proper: Vec<bool> = (0..k).map(|_| rng.gen_bool(0.3)).collect();
        let action = if k >= 2 && rng.gen_bool(0.4) {
            let u = rng.gen_range(0..k);
            let v = (u + rng.gen_range(1..k)) % k;
            proper[u] = true;
            proper[v] = true;
            let rel = &s.action_relations[rng.gen_range(0..s.action_relations.len())];
            format!("(new-statement v{u} {} v{v})", b(rel))
        } else {
            let v = rng.gen_range(0..k);
            format!("(new-is-a v{v} {})", b(&s.tags[rng.gen_range(0..s.tags.len())]))
        };
        let vars: Vec<String> = (0..k)
            .map(|v| {
                let sup = rng
                    .gen_bool(0.3)
                    .then(|| format!(" :superior {}", b(&s.types[rng.gen_range(0..s.types.len())])));
                match (sup, proper[v]) {
                    (None, false) => format!("v{v}"),
                    (sup, p) => format!("(v{v}{}{})", sup.unwrap_or_default(), if p { " :proper t" } else { "" }),
                }
            })
            .collect();
        let preds: Vec<String> = preds.iter().map(|(x, y, z)| format!("({x} {} {z})", b(y))).collect();
        rules.push(format!(
            "(new-if-added-rule ({}) ({}) {action})",
            vars.join(" "),
            preds.join(" ")
        ));
    }
    rules
}

/// A knowledge base for scan checks only: adds extra is-a, eq and cancel
/// links, sub-relations and contexts on top of [`gen_random_kb`]. Some
/// forms may be rejected by the knowledge base; callers skip those.
pub fn gen_scan_kb(seed: u64, size: usize) -> Vec<String> {
    let base = gen_random_kb(seed, size);
    let mut rng = rng_for(seed, 3);
    let s = &base.schema;
    let mut forms = base.schema_forms.clone();
    if s.types.is_empty() {
        return forms;
    }
    let t = |rng: &mut ChaCha8Rng| b(&s.types[rng.gen_range(0..s.types.len())]);
    let contexts = rng.gen_range(0..3usize);
    for c in 0..contexts {
        forms.push(format!("(new-context {{ctx {c}}})"));
    }
    for _ in 0..(s.types.len() / 3).max(1) {
        let (x, y) = (t(&mut rng), t(&mut rng));
        match rng.gen_range(0..3) {
            0 => forms.push(format!("(new-eq {x} {y})")),
            1 => forms.push(format!("(new-cancel {x} {y})")),
            _ => forms.push(format!("(new-is-a {x} {y})")),
        }
    }
    if s.relations.len() > 1 {
        let r = rng.gen_range(1..s.relations.len());
        forms.push(format!(
            "(new-is-a {} {})",
            b(&s.relations[r].name),
            b(&s.relations[rng.gen_range(0..r)].name)
        ));
    }
    for f in &base.instance_forms {
        if contexts > 0 && rng.gen_bool(0.2) {
            forms.push(format!("(in-context {{ctx {}}})", rng.gen_range(0..contexts)));
        } else if contexts > 0 && rng.gen_bool(0.2) {
            forms.push("(in-context {general})".to_string());
        }
        forms.push(f.clone());
        if rng.gen_bool(0.05) {
            let (x, y) = (t(&mut rng), t(&mut rng));
            forms.push(format!("(new-cancel {x} {y})"));
        }
    }
    if contexts > 0 {
        let c = rng.gen_range(0..=contexts);
        if c == contexts {
            forms.push("(in-context {general})".to_string());
        } else {
            forms.push(format!("(in-context {{ctx {c}}})"));
        }
    }
    forms
}
