use std::collections::{HashSet, VecDeque};

use crate::element::{ElementId, ElementKind};
use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::marker::Marker;
use crate::scalar::Scalar;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Dir {
    Up,
    Down,
}

/// One side of a predicate during scanning: a concrete element, or a
/// constant standing for "some inferior of" it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Anchor {
    Exact(ElementId),
    Below(ElementId),
}

impl<N: Scalar> KnowledgeBase<N> {
    fn link_visible(&self, l: ElementId) -> bool {
        self.is_visible(l)
    }

    fn neighbors(&self, x: ElementId, dir: Dir) -> Vec<ElementId> {
        let e = &self.elements[x.index()];
        let mut out = Vec::new();
        let (forward, backward) = match dir {
            Dir::Up => (&e.out_links, &e.in_links),
            Dir::Down => (&e.in_links, &e.out_links),
        };
        for &l in forward {
            let link = &self.elements[l.index()];
            if matches!(link.kind, ElementKind::IsA | ElementKind::Eq) && self.link_visible(l) {
                let y = if dir == Dir::Up { link.b_wire } else { link.a_wire };
                out.extend(y.filter(|&y| self.is_visible(y)));
            }
        }
        for &l in backward {
            let link = &self.elements[l.index()];
            if link.kind == ElementKind::Eq && self.link_visible(l) {
                let y = if dir == Dir::Up { link.a_wire } else { link.b_wire };
                out.extend(y.filter(|&y| self.is_visible(y)));
            }
        }
        out
    }

    /// Worklist closure from `start`. Elements carrying `blocked` are never
    /// entered; with `role_bounded`, role elements other than `start` are
    /// marked but not expanded. Returns newly marked elements in order.
    fn traverse(
        &mut self,
        start: ElementId,
        bit: u32,
        dir: Dir,
        blocked: Option<u32>,
        role_bounded: bool,
    ) -> Vec<ElementId> {
        let mut out = Vec::new();
        if self.set_bit(start, bit) {
            out.push(start);
        }
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            if role_bounded && x != start && self.is_role(x) {
                continue;
            }
            for y in self.neighbors(x, dir) {
                if blocked.is_some_and(|b| self.has_bit(y, b)) {
                    continue;
                }
                if self.set_bit(y, bit) {
                    out.push(y);
                    queue.push_back(y);
                }
            }
        }
        out
    }

    fn up_into(&mut self, start: ElementId, m: Marker, role_bounded: bool) -> Vec<ElementId> {
        if !self.is_visible(start) {
            return Vec::new();
        }
        if self.cancel_links == 0 {
            return self.traverse(start, m.bit_index(), Dir::Up, None, role_bounded);
        }
        let cbit = m.cancel_index();
        let reach = self.traverse(start, cbit, Dir::Up, None, false);
        self.clear_bit(cbit);
        let mut cancelled = Vec::new();
        for x in reach {
            for &l in &self.elements[x.index()].out_links {
                let link = &self.elements[l.index()];
                if link.kind == ElementKind::Cancel && self.link_visible(l) {
                    cancelled.extend(link.b_wire);
                }
            }
        }
        for c in cancelled {
            if c != start {
                self.set_bit(c, cbit);
            }
        }
        let out = self.traverse(start, m.bit_index(), Dir::Up, Some(cbit), role_bounded);
        self.clear_bit(cbit);
        out
    }

    fn down_into(&mut self, start: ElementId, m: Marker) -> Result<Vec<ElementId>> {
        if !self.is_visible(start) {
            return Ok(Vec::new());
        }
        let bit = m.bit_index();
        let candidates = self.traverse(start, bit, Dir::Down, None, false);
        if self.cancel_links == 0 {
            return Ok(candidates);
        }
        let mut kept = Vec::with_capacity(candidates.len());
        for x in candidates {
            if x == start || self.collect_up(x)?.contains(&start) {
                kept.push(x);
            } else {
                self.unset_bit(x, bit);
            }
        }
        Ok(kept)
    }

    /// Marks `start` and every visible superior, following is-a links upward
    /// and eq links both ways. Paths through a cancelled superior are blocked.
    pub fn upscan(&mut self, start: ElementId, m: Marker) -> Result<()> {
        self.check(start)?;
        self.up_into(start, m, false);
        Ok(())
    }

    /// Marks `start` and every visible element whose upscan reaches it.
    pub fn downscan(&mut self, start: ElementId, m: Marker) -> Result<()> {
        self.check(start)?;
        self.down_into(start, m)?;
        Ok(())
    }

    pub fn is_x_a_y(&mut self, x: ElementId, y: ElementId) -> Result<bool> {
        self.check(x)?;
        self.check(y)?;
        self.with_marker(|kb, m| {
            kb.up_into(x, m, false);
            Ok(kb.is_marked(y, m))
        })
    }

    /// Superiors of `x` (including `x`) in discovery order.
    pub fn superiors(&mut self, x: ElementId) -> Result<Vec<ElementId>> {
        self.check(x)?;
        self.collect_up(x)
    }

    /// Inferiors of `x` (including `x`) in discovery order.
    pub fn inferiors(&mut self, x: ElementId) -> Result<Vec<ElementId>> {
        self.check(x)?;
        self.collect_down(x)
    }

    pub(crate) fn collect_up(&mut self, x: ElementId) -> Result<Vec<ElementId>> {
        self.with_marker(|kb, m| Ok(kb.up_into(x, m, false)))
    }

    pub(crate) fn collect_down(&mut self, x: ElementId) -> Result<Vec<ElementId>> {
        self.with_marker(|kb, m| kb.down_into(x, m))
    }

    /// Upscan that stops at role elements: the roles `x` directly plays.
    fn collect_role_bounded_up(&mut self, x: ElementId) -> Result<Vec<ElementId>> {
        self.with_marker(|kb, m| Ok(kb.up_into(x, m, true)))
    }

    /// Elements whose superiors may serve as the other side of a predicate:
    /// up(e) for an exact anchor, the union of up(e) over inferiors e of a
    /// constant.
    fn anchor_superiors(&mut self, anchor: Anchor) -> Result<HashSet<ElementId>> {
        match anchor {
            Anchor::Exact(e) => Ok(self.collect_up(e)?.into_iter().collect()),
            Anchor::Below(t) => {
                let mut set = HashSet::new();
                for e in self.collect_down(t)? {
                    set.extend(self.collect_up(e)?);
                }
                Ok(set)
            }
        }
    }

    fn anchor_members(&mut self, anchor: Anchor) -> Result<Vec<ElementId>> {
        match anchor {
            Anchor::Exact(e) => Ok(if self.is_visible(e) { vec![e] } else { Vec::new() }),
            Anchor::Below(t) => self.collect_down(t),
        }
    }

    /// Role elements under `role` whose owner lies in `owners`.
    fn qualifying_roles(&mut self, role: ElementId, owners: &HashSet<ElementId>) -> Result<HashSet<ElementId>> {
        Ok(self
            .collect_down(role)?
            .into_iter()
            .filter(|&c| self.is_role(c) && self.owner_of(c).is_some_and(|o| owners.contains(&o)))
            .collect())
    }

    fn plays_any(&mut self, x: ElementId, roles: &HashSet<ElementId>) -> Result<bool> {
        if !self.is_visible(x) || self.is_role(x) {
            return Ok(false);
        }
        Ok(self
            .collect_role_bounded_up(x)?
            .into_iter()
            .any(|c| c != x && roles.contains(&c)))
    }

    pub(crate) fn mark_fillers(&mut self, role: ElementId, owner: Anchor, bit: u32) -> Result<Vec<ElementId>> {
        let owners = self.anchor_superiors(owner)?;
        let roles = self.qualifying_roles(role, &owners)?;
        let mut ordered: Vec<ElementId> = roles.iter().copied().collect();
        ordered.sort();
        let mut out = Vec::new();
        for c in ordered {
            let reached = self.with_marker(|kb, t| Ok(kb.traverse(c, t.bit_index(), Dir::Down, None, true)))?;
            for x in reached {
                if x == c || self.is_role(x) || self.has_bit(x, bit) {
                    continue;
                }
                if self.cancel_links > 0 && !self.plays_any(x, &roles)? {
                    continue;
                }
                self.set_bit(x, bit);
                out.push(x);
            }
        }
        Ok(out)
    }

    pub(crate) fn mark_owners(&mut self, role: ElementId, player: Anchor, bit: u32) -> Result<Vec<ElementId>> {
        let players = self.anchor_members(player)?;
        let under_role: HashSet<ElementId> = self
            .collect_down(role)?
            .into_iter()
            .filter(|&c| self.is_role(c))
            .collect();
        let mut owners = Vec::new();
        for p in players {
            if self.is_role(p) {
                continue;
            }
            for c in self.collect_role_bounded_up(p)? {
                if c != p && under_role.contains(&c) {
                    let o = self.owner_of(c).expect("roles have owners");
                    if !owners.contains(&o) {
                        owners.push(o);
                    }
                }
            }
        }
        let mut out = Vec::new();
        for o in owners {
            for x in self.collect_down(o)? {
                if self.set_bit(x, bit) {
                    out.push(x);
                }
            }
        }
        Ok(out)
    }

    /// Statement endpoints on the far side of `rel` from `anchor`. With
    /// `forward`, the anchor is the A side and B endpoints are returned.
    fn statement_ends(&mut self, rel: ElementId, anchor: Anchor, forward: bool) -> Result<Vec<ElementId>> {
        let near = self.anchor_superiors(anchor)?;
        let mut ends = Vec::new();
        for r in self.collect_down(rel)? {
            let Some(stmts) = self.rel_statements.get(&r) else { continue };
            for &s in stmts {
                if !self.is_visible(s) {
                    continue;
                }
                let e = &self.elements[s.index()];
                let (a, b) = (e.a_wire.expect("statement wires"), e.b_wire.expect("statement wires"));
                let (this, other) = if forward { (a, b) } else { (b, a) };
                if near.contains(&this) && !ends.contains(&other) {
                    ends.push(other);
                }
            }
        }
        Ok(ends)
    }

    pub(crate) fn mark_rel(&mut self, rel: ElementId, anchor: Anchor, forward: bool, bit: u32) -> Result<Vec<ElementId>> {
        let ends = self.statement_ends(rel, anchor, forward)?;
        let mut out = Vec::new();
        for end in ends {
            for x in self.collect_down(end)? {
                if self.set_bit(x, bit) {
                    out.push(x);
                }
            }
        }
        Ok(out)
    }

    fn require_role(&self, role: ElementId) -> Result<()> {
        self.check(role)?;
        if self.is_role(role) {
            Ok(())
        } else {
            Err(Error::NotARole(self.display(role)))
        }
    }

    fn require_relation(&self, rel: ElementId) -> Result<()> {
        self.check(rel)?;
        if self.kind(rel) == ElementKind::Relation {
            Ok(())
        } else {
            Err(Error::NotARelation(self.display(rel)))
        }
    }

    /// Marks every x such that x is a `role` of `owner`.
    pub fn mark_role_fillers(&mut self, role: ElementId, owner: ElementId, m: Marker) -> Result<()> {
        self.require_role(role)?;
        self.check(owner)?;
        self.mark_fillers(role, Anchor::Exact(owner), m.bit_index())?;
        Ok(())
    }

    /// Marks every x such that `player` is a `role` of x.
    pub fn mark_role_owners(&mut self, role: ElementId, player: ElementId, m: Marker) -> Result<()> {
        self.require_role(role)?;
        self.check(player)?;
        self.mark_owners(role, Anchor::Exact(player), m.bit_index())?;
        Ok(())
    }

    /// Marks every x such that the statement (a rel x) holds.
    pub fn mark_rel_b(&mut self, rel: ElementId, a: ElementId, m: Marker) -> Result<()> {
        self.require_relation(rel)?;
        self.check(a)?;
        self.mark_rel(rel, Anchor::Exact(a), true, m.bit_index())?;
        Ok(())
    }

    /// Marks every x such that the statement (x rel b) holds.
    pub fn mark_rel_a(&mut self, rel: ElementId, b: ElementId, m: Marker) -> Result<()> {
        self.require_relation(rel)?;
        self.check(b)?;
        self.mark_rel(rel, Anchor::Exact(b), false, m.bit_index())?;
        Ok(())
    }

    /// Clears `m` from every marked element that is not proper.
    pub fn restrict_to_proper(&mut self, m: Marker) {
        for x in self.marked_elements(m) {
            if !self.elements[x.index()].proper {
                self.unset_bit(x, m.bit_index());
            }
        }
    }

    /// Whether the predicate (x y z) holds, constants meaning "some inferior".
    pub(crate) fn holds(&mut self, x: Anchor, y: ElementId, z: Anchor) -> Result<bool> {
        let is_role = self.is_role(y);
        if let Anchor::Exact(x) = x {
            if is_role {
                let owners = self.anchor_superiors(z)?;
                let roles = self.qualifying_roles(y, &owners)?;
                return self.plays_any(x, &roles);
            }
            if !self.is_visible(x) {
                return Ok(false);
            }
            let ends = self.statement_ends(y, z, false)?;
            let ups = self.collect_up(x)?;
            return Ok(ends.iter().any(|e| ups.contains(e)));
        }
        self.with_marker(|kb, t| {
            let bit = t.bit_index();
            if is_role {
                kb.mark_fillers(y, z, bit)?;
            } else {
                kb.mark_rel(y, z, false, bit)?;
            }
            Ok(kb.anchor_members(x)?.into_iter().any(|e| kb.has_bit(e, bit)))
        })
    }
}

#[cfg(test)]
mod tests {
    use crate::{ElementId, Kb};

    fn marked(kb: &mut Kb, f: impl FnOnce(&mut Kb, crate::Marker)) -> Vec<ElementId> {
        let m = kb.alloc_marker_pair().unwrap();
        f(kb, m);
        let mut out = kb.marked_elements(m);
        kb.free_marker(m);
        out.sort();
        out
    }

    #[test]
    fn upscan_marks_superiors() {
        let mut kb = Kb::new();
        let animal = kb.new_type("animal", kb.root()).unwrap();
        let elephant = kb.new_type("elephant", animal).unwrap();
        let clyde = kb.new_indv("Clyde", elephant).unwrap();
        let got = marked(&mut kb, |kb, m| kb.upscan(clyde, m).unwrap());
        assert_eq!(got, vec![kb.root(), animal, elephant, clyde]);
        let root = kb.root();
        let got = marked(&mut kb, |kb, m| kb.upscan(root, m).unwrap());
        assert_eq!(got, vec![root]);
        assert!(kb.is_x_a_y(clyde, animal).unwrap());
        assert!(kb.is_x_a_y(clyde, clyde).unwrap());
        assert!(!kb.is_x_a_y(animal, clyde).unwrap());
    }

    #[test]
    fn downscan_mirrors_upscan() {
        let mut kb = Kb::new();
        let animal = kb.new_type("animal", kb.root()).unwrap();
        let elephant = kb.new_type("elephant", animal).unwrap();
        let clyde = kb.new_indv("Clyde", elephant).unwrap();
        let got = marked(&mut kb, |kb, m| kb.downscan(animal, m).unwrap());
        assert_eq!(got, vec![animal, elephant, clyde]);
        let got = marked(&mut kb, |kb, m| kb.downscan(clyde, m).unwrap());
        assert_eq!(got, vec![clyde]);
    }

    #[test]
    fn cancel_blocks_the_named_superior() {
        let mut kb = Kb::new();
        let animal = kb.new_type("animal", kb.root()).unwrap();
        let flying = kb.new_type("flying thing", kb.root()).unwrap();
        let bird = kb.new_type("bird", flying).unwrap();
        kb.add_is_a(bird, animal).unwrap();
        let penguin = kb.new_type("penguin", bird).unwrap();
        kb.add_cancel(penguin, flying).unwrap();
        assert!(!kb.is_x_a_y(penguin, flying).unwrap());
        assert!(kb.is_x_a_y(penguin, bird).unwrap());
        assert!(kb.is_x_a_y(penguin, kb.root()).unwrap());
        let got = marked(&mut kb, |kb, m| kb.downscan(flying, m).unwrap());
        assert_eq!(got, vec![flying, bird]);
    }

    #[test]
    fn eq_links_scan_both_ways() {
        let mut kb = Kb::new();
        let star = kb.new_type("star", kb.root()).unwrap();
        let planet = kb.new_type("planet", kb.root()).unwrap();
        let ms = kb.new_type("morning star", star).unwrap();
        let es = kb.new_type("evening star", planet).unwrap();
        kb.add_eq(ms, es).unwrap();
        assert!(kb.is_x_a_y(ms, planet).unwrap());
        assert!(kb.is_x_a_y(es, star).unwrap());
    }

    #[test]
    fn role_scans_follow_virtual_copies() {
        let mut kb = Kb::new();
        let person = kb.new_type("person", kb.root()).unwrap();
        let animal = kb.new_type("animal", kb.root()).unwrap();
        let pet = kb.new_type_role("pet", person, animal).unwrap();
        let john = kb.new_indv("John", person).unwrap();
        let mary = kb.new_indv("Mary", person).unwrap();
        let fido = kb.new_indv("Fido", animal).unwrap();
        let rex = kb.new_indv("Rex", animal).unwrap();
        kb.x_is_a_y_of_z(fido, pet, john).unwrap();
        kb.x_is_a_y_of_z(rex, pet, mary).unwrap();
        let got = marked(&mut kb, |kb, m| kb.mark_role_fillers(pet, john, m).unwrap());
        assert_eq!(got, vec![fido]);
        let got = marked(&mut kb, |kb, m| kb.mark_role_owners(pet, fido, m).unwrap());
        assert_eq!(got, vec![john]);
        let cat = kb.new_type("cat", animal).unwrap();
        let got = marked(&mut kb, |kb, m| kb.mark_role_owners(pet, cat, m).unwrap());
        assert!(got.is_empty());
    }

    #[test]
    fn relation_scans_include_inferiors() {
        let mut kb = Kb::new();
        let person = kb.new_type("person", kb.root()).unwrap();
        let food = kb.new_type("food", kb.root()).unwrap();
        let veg = kb.new_type("vegetable", food).unwrap();
        let sprouts = kb.new_type("brussels sprouts", veg).unwrap();
        let dislikes = kb.new_relation("dislikes", person, kb.root()).unwrap();
        let me = kb.new_indv("I", person).unwrap();
        kb.new_statement(me, dislikes, veg).unwrap();
        let got = marked(&mut kb, |kb, m| kb.mark_rel_b(dislikes, me, m).unwrap());
        assert_eq!(got, vec![veg, sprouts]);
        let got = marked(&mut kb, |kb, m| kb.mark_rel_a(dislikes, sprouts, m).unwrap());
        assert_eq!(got, vec![me]);
        let got = marked(&mut kb, |kb, m| kb.mark_rel_a(dislikes, food, m).unwrap());
        assert!(got.is_empty());
    }

    #[test]
    fn restrict_to_proper_drops_types() {
        let mut kb = Kb::new();
        let animal = kb.new_type("animal", kb.root()).unwrap();
        let clyde = kb.new_indv("Clyde", animal).unwrap();
        let got = marked(&mut kb, |kb, m| {
            kb.downscan(animal, m).unwrap();
            kb.restrict_to_proper(m);
        });
        assert_eq!(got, vec![clyde]);
    }

    #[test]
    fn invisible_elements_are_never_marked() {
        let mut kb = Kb::new();
        let general = kb.general_context();
        let hp = kb.new_context("fiction", general).unwrap();
        let animal = kb.new_type("animal", kb.root()).unwrap();
        kb.activate_context(hp).unwrap();
        let dragon = kb.new_type("dragon", animal).unwrap();
        kb.activate_context(general).unwrap();
        let got = marked(&mut kb, |kb, m| kb.downscan(animal, m).unwrap());
        assert_eq!(got, vec![animal]);
        let got = marked(&mut kb, |kb, m| kb.upscan(dragon, m).unwrap());
        assert!(got.is_empty());
    }
}
