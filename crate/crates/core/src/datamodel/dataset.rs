use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use super::histogram::{normalize_attrs, Histogram, Prototype};
use super::record::{GeoUnit, PersonRecord};
use super::schema::{Attr, AttributeSchema, GeoLevel};
use crate::error::{Error, Result};

/// Per-unit histograms produced by [`Dataset::project`].
pub type UnitHistograms = BTreeMap<GeoUnit, Histogram>;

type CacheKey = (Vec<Attr>, GeoLevel);

/// An immutable multiset of person records.
///
/// Projections are computed once per `(attributes, level)` and shared; the
/// cache sits behind a mutex so a `Dataset` can be read from many threads.
#[derive(Debug)]
pub struct Dataset {
    schema: AttributeSchema,
    records: Vec<PersonRecord>,
    cache: Mutex<HashMap<CacheKey, Arc<UnitHistograms>>>,
}

impl Clone for Dataset {
    fn clone(&self) -> Self {
        Dataset::new(self.schema.clone(), self.records.clone())
    }
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema && self.records == other.records
    }
}

impl Dataset {
    pub fn new(schema: AttributeSchema, records: Vec<PersonRecord>) -> Self {
        Dataset {
            schema,
            records,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Dataset over the census schema.
    pub fn census(records: Vec<PersonRecord>) -> Self {
        Dataset::new(AttributeSchema::census(), records)
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn records(&self) -> &[PersonRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Record indices grouped by unit at `level`.
    pub fn units(&self, level: GeoLevel) -> BTreeMap<GeoUnit, Vec<usize>> {
        let mut out: BTreeMap<GeoUnit, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate() {
            out.entry(r.geo_unit(level)).or_default().push(i);
        }
        out
    }

    /// Population of every unit at `level`.
    pub fn unit_sizes(&self, level: GeoLevel) -> BTreeMap<GeoUnit, u64> {
        let mut out = BTreeMap::new();
        for r in &self.records {
            *out.entry(r.geo_unit(level)).or_insert(0) += 1;
        }
        out
    }

    /// Records inside `unit`.
    pub fn records_in<'a>(&'a self, unit: &'a GeoUnit) -> impl Iterator<Item = &'a PersonRecord> + 'a {
        self.records.iter().filter(move |r| unit.contains(r))
    }

    /// Multiset projection onto `attrs`, one histogram per unit at `level`.
    ///
    /// Geography attributes finer than `level` are rejected since they would
    /// split a unit.
    pub fn project(&self, attrs: &[Attr], level: GeoLevel) -> Result<Arc<UnitHistograms>> {
        self.schema.check(attrs)?;
        let attrs = normalize_attrs(attrs);
        if let Some(a) = attrs.iter().find(|a| a.geo_level().is_some_and(|l| l > level)) {
            return Err(Error::Schema(format!(
                "attribute `{a}` is finer than the {level:?} projection level"
            )));
        }
        let key = (attrs, level);
        if let Some(hit) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let mut out: UnitHistograms = BTreeMap::new();
        for r in &self.records {
            out.entry(r.geo_unit(level))
                .or_insert_with(|| Histogram::new(&key.0))
                .add_unchecked(Prototype::of_record(r, &key.0), 1);
        }
        let out = Arc::new(out);
        self.cache
            .lock()
            .expect("cache poisoned")
            .insert(key, Arc::clone(&out));
        Ok(out)
    }

    /// Projection by attribute names.
    pub fn project_names(&self, names: &[&str], level: GeoLevel) -> Result<Arc<UnitHistograms>> {
        let attrs = names.iter().map(|n| n.parse()).collect::<Result<Vec<Attr>>>()?;
        self.project(&attrs, level)
    }

    /// Projection of one unit; empty if the unit has no records.
    pub fn project_unit(&self, attrs: &[Attr], unit: &GeoUnit) -> Result<Histogram> {
        let all = self.project(attrs, unit.level)?;
        Ok(all.get(unit).cloned().unwrap_or_else(|| Histogram::new(attrs)))
    }

    /// Nation-level projection.
    pub fn histogram(&self, attrs: &[Attr]) -> Result<Histogram> {
        self.project_unit(attrs, &GeoUnit::NATION)
    }
}
