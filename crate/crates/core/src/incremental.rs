//! Frame stack with selector variables, the initial-cube list, cube cleanup
//! after deletions, recheck after additions and garbage collection.

use std::collections::{HashSet, VecDeque};

use log::debug;

use crate::formula::{normalize_clause, Lit, Pcnf, Var};
use crate::qcdcl::{Engine, StoredClause};
use crate::qres::ConstraintKind;

pub const INITIAL_CUBE_CAPACITY: usize = 128;
pub const INITIAL_CUBE_CAP: usize = 1 << 16;

#[derive(Clone, Debug)]
pub(crate) struct Frame {
    /// Internal id of the selector variable.
    pub selector: u32,
    pub clauses: Vec<u32>,
    pub active: bool,
}

/// Stored models over user variables, evicted oldest first when full.
#[derive(Clone, Debug)]
pub struct InitialCubeList {
    entries: VecDeque<Vec<Lit>>,
    capacity: usize,
    cap: usize,
}

impl Default for InitialCubeList {
    fn default() -> Self {
        InitialCubeList::with_cap(INITIAL_CUBE_CAP)
    }
}

impl InitialCubeList {
    pub fn with_cap(cap: usize) -> InitialCubeList {
        InitialCubeList {
            entries: VecDeque::new(),
            capacity: INITIAL_CUBE_CAPACITY.min(cap.max(1)),
            cap: cap.max(1),
        }
    }

    pub fn push(&mut self, model: Vec<Lit>) {
        if self.entries.len() >= self.capacity {
            if self.capacity < self.cap {
                self.capacity = (self.capacity * 2).min(self.cap);
            } else {
                self.entries.pop_front();
            }
        }
        self.entries.push_back(model);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<Lit>> {
        self.entries.iter()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn retain(&mut self, f: impl FnMut(&Vec<Lit>) -> bool) {
        self.entries.retain(f);
    }

    pub fn strip(&mut self, removed: &HashSet<Var>) {
        for e in &mut self.entries {
            e.retain(|l| !removed.contains(&l.var()));
        }
    }
}

impl Engine {
    /// Loads a static formula into the base frame.
    pub fn load(&mut self, f: &Pcnf) {
        self.prefix = f.prefix().clone();
        for v in f.prefix().vars() {
            self.intern(v);
        }
        for c in f.clauses() {
            self.add_user_clause(c);
        }
    }

    /// Opens a frame with a fresh selector and returns its index.
    pub fn push_frame(&mut self) -> usize {
        let idx = self.frames.len();
        let selector = self.new_selector(idx);
        self.frames.push(Frame {
            selector,
            clauses: Vec::new(),
            active: true,
        });
        self.active_frames.push(idx);
        idx
    }

    /// Closes the topmost frame; `None` when the stack is empty.
    pub fn pop_frame(&mut self) -> Option<usize> {
        let idx = self.active_frames.pop()?;
        self.frames[idx].active = false;
        for i in 0..self.frames[idx].clauses.len() {
            let cid = self.frames[idx].clauses[i] as usize;
            for j in 0..self.clauses[cid].lits.len() {
                let l = self.clauses[cid].lits[j];
                let v = &mut self.vars[l.var().index()];
                if v.frame.is_none() {
                    v.occurrences -= 1;
                }
            }
        }
        self.pending_deletion = true;
        Some(idx)
    }

    /// Stores a clause over user variables in the topmost frame. Every
    /// variable must already be in the prefix. Returns `None` for a
    /// tautology.
    pub fn add_user_clause(&mut self, lits: &[Lit]) -> Option<u32> {
        let lits = normalize_clause(lits)?;
        let mut internal: Vec<Lit> = lits
            .iter()
            .map(|&l| {
                let i = self.intern(l.var());
                Lit::new(Var::new(i), l.is_negated())
            })
            .collect();
        for &l in &internal {
            self.vars[l.var().index()].occurrences += 1;
        }
        let frame = self.active_frames.last().copied();
        if let Some(f) = frame {
            internal.push(Lit::positive(Var::new(self.frames[f].selector)));
        }
        let id = self.push_clause(StoredClause {
            lits: internal,
            learned: false,
            frame,
            deleted: false,
            activity: 0.0,
            true_count: 0,
            from_framed: false,
            sig: 0,
            suspended: false,
        });
        if let Some(f) = frame {
            self.frames[f].clauses.push(id);
        }
        self.pending_added.push(id);
        Some(id)
    }

    pub fn clause_enabled(&self, cid: usize) -> bool {
        let c = &self.clauses[cid];
        if c.deleted {
            return false;
        }
        match c.frame {
            Some(f) => self.frames[f].active,
            None if c.learned => !c
                .lits
                .iter()
                .any(|&l| self.var(l).frame.is_some_and(|f| !self.frames[f].active)),
            None => true,
        }
    }

    fn user_lits(&self, lits: &[Lit]) -> Vec<Lit> {
        lits.iter().filter_map(|&l| self.to_user(l)).collect()
    }

    /// Strips inactive variables from learned cubes and stored models and
    /// reduces the cubes again.
    fn deletion_cleanup(&mut self) {
        let removed: HashSet<Var> = self
            .vars
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, v)| v.user.is_some() && v.occurrences == 0)
            .map(|(i, _)| Var::new(i as u32))
            .collect();
        if removed.is_empty() {
            return;
        }
        let mut changed = false;
        for k in 0..self.cubes.len() {
            if self.cubes[k].deleted || !self.cubes[k].lits.iter().any(|l| removed.contains(&l.var())) {
                continue;
            }
            let mut lits: Vec<Lit> = self.cubes[k]
                .lits
                .iter()
                .copied()
                .filter(|l| !removed.contains(&l.var()))
                .collect();
            self.cubes[k].sig |= self.reduce(ConstraintKind::Cube, &mut lits);
            self.cubes[k].lits = lits;
            changed = true;
        }
        let removed_user: HashSet<Var> = removed
            .iter()
            .filter_map(|&v| self.vars[v.index()].user)
            .collect();
        self.initial_cubes.strip(&removed_user);
        if changed {
            self.rebuild_occurrences();
        }
        debug!("deletion cleanup removed {} variables", removed.len());
    }

    /// Discards learned cubes and seeds them again from stored models that
    /// satisfy the newly enabled clauses.
    fn addition_recheck(&mut self, added: &[u32]) {
        let added: Vec<Vec<Lit>> = added
            .iter()
            .map(|&cid| self.user_lits(&self.clauses[cid as usize].lits))
            .collect();
        for k in &mut self.cubes {
            k.deleted = true;
        }
        let before = self.initial_cubes.len();
        self.initial_cubes.retain(|model| {
            let set: HashSet<Lit> = model.iter().copied().collect();
            added.iter().all(|c| c.iter().any(|l| set.contains(l)))
        });
        debug!(
            "initial-cube recheck kept {} of {} models",
            self.initial_cubes.len(),
            before
        );
        let models: Vec<Vec<Lit>> = self.initial_cubes.iter().cloned().collect();
        let mut seen = HashSet::new();
        self.cubes.clear();
        self.rebuild_occurrences();
        for m in models {
            let mut lits: Vec<Lit> = m.iter().filter_map(|&l| self.to_internal(l)).collect();
            let sig = self.reduce(ConstraintKind::Cube, &mut lits);
            lits.sort();
            if seen.insert(lits.clone()) {
                let id = self.push_cube(lits);
                self.cubes[id as usize].sig = sig;
            }
        }
    }

    fn disabled_count(&self) -> usize {
        (0..self.clauses.len())
            .filter(|&i| !self.clauses[i].deleted && !self.clause_enabled(i))
            .count()
    }

    /// Physically removes disabled clauses once there are enough of them.
    pub fn garbage_collect(&mut self, force: bool) -> bool {
        let disabled = self.disabled_count();
        let live = self.clauses.iter().filter(|c| !c.deleted).count();
        let threshold = self.gc_min_disabled.max(live / 4);
        if disabled == 0 || (!force && disabled <= threshold) {
            return false;
        }
        let keep: Vec<bool> = (0..self.clauses.len()).map(|i| self.clause_enabled(i)).collect();
        let mut remap = vec![u32::MAX; self.clauses.len()];
        let old = std::mem::take(&mut self.clauses);
        for (i, c) in old.into_iter().enumerate() {
            if keep[i] {
                remap[i] = self.clauses.len() as u32;
                self.clauses.push(c);
            }
        }
        for f in &mut self.frames {
            f.clauses = f
                .clauses
                .iter()
                .filter_map(|&c| (remap[c as usize] != u32::MAX).then_some(remap[c as usize]))
                .collect();
            if !f.active && f.clauses.is_empty() {
                self.vars[f.selector as usize].freed = true;
            }
        }
        self.pending_added = self
            .pending_added
            .iter()
            .filter_map(|&c| (remap[c as usize] != u32::MAX).then_some(remap[c as usize]))
            .collect();
        self.rebuild_occurrences();
        debug!("garbage collection removed {disabled} clauses");
        true
    }

    /// Brings the learned constraints in line with the current clause set
    /// and returns the selector assumptions for the next search.
    pub fn prepare_solve(&mut self) -> Vec<Lit> {
        self.reset_trail();
        if self.pending_deletion {
            self.rebuild_order();
            self.deletion_cleanup();
            self.pending_deletion = false;
        }
        self.rebuild_order();
        let added: Vec<u32> = std::mem::take(&mut self.pending_added)
            .into_iter()
            .filter(|&c| self.clause_enabled(c as usize))
            .collect();
        if !added.is_empty() {
            self.addition_recheck(&added);
        }
        self.garbage_collect(false);
        if !self.keep_learned {
            self.discard_learned();
        }
        self.reset_trail();
        self.frames
            .iter()
            .filter(|f| !self.vars[f.selector as usize].freed)
            .map(|f| Lit::new(Var::new(f.selector), f.active))
            .collect()
    }

    /// Forgets every learned clause, learned cube and stored model.
    pub fn discard_learned(&mut self) {
        for c in &mut self.clauses {
            if c.learned {
                c.deleted = true;
            }
        }
        self.clauses.retain(|c| !c.deleted || !c.learned);
        for f in &mut self.frames {
            f.clauses.clear();
        }
        for (i, c) in self.clauses.iter().enumerate() {
            if let Some(f) = c.frame {
                self.frames[f].clauses.push(i as u32);
            }
        }
        self.cubes.clear();
        self.initial_cubes.clear();
        self.rebuild_occurrences();
    }
}
