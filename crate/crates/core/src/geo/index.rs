use std::collections::{BTreeMap, HashMap};

use rstar::primitives::GeomWithData;
use rstar::RTree;

use super::point::{distance, Point};
use super::{GeoError, PoiLocation};
use crate::scalar::Scalar;

type Node<T> = GeomWithData<[T; 2], usize>;

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry<T> {
    pub poi_id: String,
    pub category: String,
    pub position: Point<T>,
}

/// A query hit. `slot` indexes [`SpatialIndex::entries`], which are sorted by
/// `poi_id`, so ordering by slot is ordering by id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor<'a, T> {
    pub slot: usize,
    pub poi_id: &'a str,
    pub distance: T,
}

/// Immutable R-tree over POI positions with one sub-tree per category.
#[derive(Debug, Clone)]
pub struct SpatialIndex<T: Scalar> {
    entries: Vec<IndexEntry<T>>,
    slots_by_id: HashMap<String, usize>,
    all: RTree<Node<T>>,
    by_category: BTreeMap<String, RTree<Node<T>>>,
}

impl<T: Scalar> SpatialIndex<T> {
    /// Bulk-loads the index. Duplicate ids are a construction error.
    pub fn build(pois: &[PoiLocation<T>]) -> Result<Self, GeoError> {
        let mut entries: Vec<IndexEntry<T>> = pois
            .iter()
            .map(|p| IndexEntry {
                poi_id: p.poi_id.clone(),
                category: p.category.clone(),
                position: p.position,
            })
            .collect();
        entries.sort_by(|a, b| a.poi_id.cmp(&b.poi_id));
        if let Some(w) = entries.windows(2).find(|w| w[0].poi_id == w[1].poi_id) {
            return Err(GeoError::DuplicatePoi(w[0].poi_id.clone()));
        }

        let slots_by_id = entries
            .iter()
            .enumerate()
            .map(|(slot, e)| (e.poi_id.clone(), slot))
            .collect();
        let nodes: Vec<Node<T>> = entries
            .iter()
            .enumerate()
            .map(|(slot, e)| GeomWithData::new(e.position.as_array(), slot))
            .collect();
        let mut grouped: BTreeMap<String, Vec<Node<T>>> = BTreeMap::new();
        for node in &nodes {
            grouped
                .entry(entries[node.data].category.clone())
                .or_default()
                .push(*node);
        }
        let by_category = grouped
            .into_iter()
            .map(|(cat, nodes)| (cat, RTree::bulk_load(nodes)))
            .collect();

        Ok(Self {
            entries,
            slots_by_id,
            all: RTree::bulk_load(nodes),
            by_category,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry<T>] {
        &self.entries
    }

    pub fn entry(&self, slot: usize) -> &IndexEntry<T> {
        &self.entries[slot]
    }

    pub fn slot_of(&self, poi_id: &str) -> Option<usize> {
        self.slots_by_id.get(poi_id).copied()
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.by_category.keys().map(String::as_str)
    }

    fn tree(&self, category: Option<&str>) -> Option<&RTree<Node<T>>> {
        match category {
            None => Some(&self.all),
            Some(cat) => self.by_category.get(cat),
        }
    }

    fn neighbor(&self, slot: usize, distance: T) -> Neighbor<'_, T> {
        Neighbor {
            slot,
            poi_id: &self.entries[slot].poi_id,
            distance,
        }
    }

    /// Every POI passing the filters, ascending by distance, ties by id.
    pub fn nearest_pois(
        &self,
        from: Point<T>,
        category: Option<&str>,
        active: Option<&dyn Fn(usize) -> bool>,
    ) -> Vec<Neighbor<'_, T>> {
        let Some(tree) = self.tree(category) else {
            return Vec::new();
        };
        let mut hits: Vec<Neighbor<'_, T>> = tree
            .iter()
            .filter(|n| active.is_none_or(|f| f(n.data)))
            .map(|n| self.neighbor(n.data, distance(from, self.entries[n.data].position)))
            .collect();
        sort_hits(&mut hits);
        hits
    }

    /// The group of POIs tied for nearest among those passing `filter`,
    /// ordered by id. Empty when nothing passes.
    pub fn nearest_tied(
        &self,
        from: Point<T>,
        category: Option<&str>,
        filter: impl Fn(usize) -> bool,
    ) -> Vec<Neighbor<'_, T>> {
        let Some(tree) = self.tree(category) else {
            return Vec::new();
        };
        let mut group: Vec<Neighbor<'_, T>> = Vec::new();
        // The tree yields by squared distance; sqrt is monotone, so equal
        // distances come out contiguously.
        for node in tree.nearest_neighbor_iter(&from.as_array()) {
            if !filter(node.data) {
                continue;
            }
            let d = distance(from, self.entries[node.data].position);
            match group.first() {
                Some(head) if d > head.distance => break,
                _ => group.push(self.neighbor(node.data, d)),
            }
        }
        group.sort_by_key(|n| n.slot);
        group
    }

    /// Nearest POI passing `filter`; ties resolve to the smallest id.
    pub fn nearest(
        &self,
        from: Point<T>,
        category: Option<&str>,
        filter: impl Fn(usize) -> bool,
    ) -> Option<Neighbor<'_, T>> {
        self.nearest_tied(from, category, filter).into_iter().next()
    }

    /// POIs with `distance(from, poi) <= radius`, ascending, ties by id.
    pub fn within_radius(
        &self,
        from: Point<T>,
        radius: T,
        category: Option<&str>,
    ) -> Vec<Neighbor<'_, T>> {
        let Some(tree) = self.tree(category) else {
            return Vec::new();
        };
        if radius < T::zero() || radius.is_nan() {
            return Vec::new();
        }
        // Inflate the squared bound so rounding never drops a candidate; the
        // exact test below is on `distance`.
        let slack = T::one() + T::epsilon() * T::of(16.0);
        let bound = radius * radius * slack + T::min_positive_value();
        let mut hits: Vec<Neighbor<'_, T>> = tree
            .locate_within_distance(from.as_array(), bound)
            .filter_map(|n| {
                let d = distance(from, self.entries[n.data].position);
                (d <= radius).then(|| self.neighbor(n.data, d))
            })
            .collect();
        sort_hits(&mut hits);
        hits
    }
}

fn sort_hits<T: Scalar>(hits: &mut [Neighbor<'_, T>]) {
    hits.sort_by(|a, b| {
        a.distance
            .partial_cmp(&b.distance)
            .expect("finite distances")
            .then(a.slot.cmp(&b.slot))
    });
}
