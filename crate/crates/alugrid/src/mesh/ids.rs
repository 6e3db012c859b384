//! Communication-free entity identifiers.
//!
//! A macro element is identified by the sorted tuple of its global vertex
//! ids; every rank holding a copy (interior or ghost) derives the same id.
//! An entity inside a refinement tree is identified by the macro id plus the
//! path of child indices from the macro element down to the entity.

/// Canonical macro element id: the sorted global vertex ids of its corners.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MacroId {
    ids: [u64; 8],
    len: u8,
}

impl MacroId {
    pub fn new(vertex_ids: &[u64]) -> MacroId {
        assert!(vertex_ids.len() <= 8);
        let mut ids = [u64::MAX; 8];
        ids[..vertex_ids.len()].copy_from_slice(vertex_ids);
        ids[..vertex_ids.len()].sort_unstable();
        MacroId {
            ids,
            len: vertex_ids.len() as u8,
        }
    }

    pub fn vertex_ids(&self) -> &[u64] {
        &self.ids[..self.len as usize]
    }
}

/// Face id built the same way from the face's global vertex ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FaceKey {
    ids: [u64; 4],
    len: u8,
}

impl FaceKey {
    pub fn new(vertex_ids: &[u64]) -> FaceKey {
        assert!(vertex_ids.len() <= 4);
        let mut ids = [u64::MAX; 4];
        ids[..vertex_ids.len()].copy_from_slice(vertex_ids);
        ids[..vertex_ids.len()].sort_unstable();
        FaceKey {
            ids,
            len: vertex_ids.len() as u8,
        }
    }

    pub fn vertex_ids(&self) -> &[u64] {
        &self.ids[..self.len as usize]
    }
}

/// Position of an entity within its refinement tree: the child index taken
/// at every level from the macro element down. Empty for macro elements.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TreePath(Vec<u8>);

impl TreePath {
    pub fn root() -> TreePath {
        TreePath(Vec::new())
    }

    pub fn child(&self, index: u8) -> TreePath {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(index);
        TreePath(v)
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn indices(&self) -> &[u8] {
        &self.0
    }

    pub fn from_indices(indices: &[u8]) -> TreePath {
        TreePath(indices.to_vec())
    }
}

/// Rank-independent entity id: macro id plus tree path. Equal ids denote the
/// same entity on any rank, with no communication needed to derive them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GlobalEntityId {
    pub macro_id: MacroId,
    pub path: TreePath,
}

/// Lightweight handle to an entity of the local grid: macro slot plus node
/// slot within that tree. Not stable across coarsening or migration; use
/// [`GlobalEntityId`] for that.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId {
    pub(crate) macro_idx: u32,
    pub(crate) node: u32,
}

impl EntityId {
    pub(crate) fn new(macro_idx: usize, node: usize) -> EntityId {
        EntityId {
            macro_idx: macro_idx as u32,
            node: node as u32,
        }
    }

    /// Slot of the macro element in the local grid.
    pub fn macro_index(&self) -> usize {
        self.macro_idx as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn macro_id_is_order_independent() {
        assert_eq!(MacroId::new(&[7, 1, 3, 5]), MacroId::new(&[1, 3, 5, 7]));
        assert_ne!(MacroId::new(&[1, 3, 5, 7]), MacroId::new(&[1, 3, 5, 8]));
    }

    #[test]
    fn tree_path_extends() {
        let p = TreePath::root().child(2).child(0);
        assert_eq!(p.indices(), &[2, 0]);
        assert_eq!(p.depth(), 2);
    }
}
