//! Compact sets of object ids, bit `k` standing for object `k + 1`.

use std::fmt;

use crate::scene::ObjectId;

pub const MAX_OBJECTS: usize = 128;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ObjSet(u128);

impl ObjSet {
    pub const EMPTY: ObjSet = ObjSet(0);

    /// The set `{1, ..., n}`.
    pub fn full(n: usize) -> ObjSet {
        assert!(n <= MAX_OBJECTS, "at most {MAX_OBJECTS} objects are supported");
        if n == MAX_OBJECTS {
            ObjSet(u128::MAX)
        } else {
            ObjSet((1u128 << n) - 1)
        }
    }

    pub fn single(id: ObjectId) -> ObjSet {
        ObjSet::EMPTY.with(id)
    }

    fn bit(id: ObjectId) -> u128 {
        debug_assert!(id >= 1 && (id as usize) <= MAX_OBJECTS, "object id {id} out of range");
        1u128 << (id - 1)
    }

    pub fn bits(self) -> u128 {
        self.0
    }

    pub fn contains(self, id: ObjectId) -> bool {
        self.0 & Self::bit(id) != 0
    }

    pub fn insert(&mut self, id: ObjectId) {
        self.0 |= Self::bit(id);
    }

    pub fn remove(&mut self, id: ObjectId) {
        self.0 &= !Self::bit(id);
    }

    pub fn with(self, id: ObjectId) -> ObjSet {
        ObjSet(self.0 | Self::bit(id))
    }

    pub fn without(self, id: ObjectId) -> ObjSet {
        ObjSet(self.0 & !Self::bit(id))
    }

    pub fn union(self, o: ObjSet) -> ObjSet {
        ObjSet(self.0 | o.0)
    }

    pub fn intersection(self, o: ObjSet) -> ObjSet {
        ObjSet(self.0 & o.0)
    }

    pub fn difference(self, o: ObjSet) -> ObjSet {
        ObjSet(self.0 & !o.0)
    }

    pub fn is_subset(self, o: ObjSet) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_disjoint(self, o: ObjSet) -> bool {
        self.0 & o.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn first(self) -> Option<ObjectId> {
        (self.0 != 0).then(|| self.0.trailing_zeros() + 1)
    }

    /// Ids in ascending order.
    pub fn iter(self) -> Iter {
        Iter(self.0)
    }
}

pub struct Iter(u128);

impl Iterator for Iter {
    type Item = ObjectId;

    fn next(&mut self) -> Option<ObjectId> {
        if self.0 == 0 {
            return None;
        }
        let tz = self.0.trailing_zeros();
        self.0 &= self.0 - 1;
        Some(tz + 1)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Iter {}

impl IntoIterator for ObjSet {
    type Item = ObjectId;
    type IntoIter = Iter;

    fn into_iter(self) -> Iter {
        self.iter()
    }
}

impl FromIterator<ObjectId> for ObjSet {
    fn from_iter<I: IntoIterator<Item = ObjectId>>(iter: I) -> Self {
        let mut s = ObjSet::EMPTY;
        for id in iter {
            s.insert(id);
        }
        s
    }
}

impl fmt::Debug for ObjSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
