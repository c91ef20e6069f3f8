use std::collections::btree_map::{self, BTreeMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::record::{PersonRecord, Value};
use super::schema::Attr;
use crate::error::{Error, Result};

/// A record type over a declared attribute subset.
///
/// Pairs are kept sorted by attribute, so two prototypes are equal exactly
/// when they cover the same attributes with equal values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Prototype(Vec<(Attr, Value)>);

impl Prototype {
    pub fn new(mut pairs: Vec<(Attr, Value)>) -> Self {
        pairs.sort_by_key(|&(a, _)| a);
        pairs.dedup_by_key(|&mut (a, _)| a);
        Prototype(pairs)
    }

    /// Projects a record onto `attrs` (which must already be sorted and deduplicated).
    pub fn of_record(record: &PersonRecord, attrs: &[Attr]) -> Self {
        Prototype(attrs.iter().map(|&a| (a, record.value(a))).collect())
    }

    pub fn attrs(&self) -> impl Iterator<Item = Attr> + '_ {
        self.0.iter().map(|&(a, _)| a)
    }

    pub fn pairs(&self) -> &[(Attr, Value)] {
        &self.0
    }

    pub fn get(&self, attr: Attr) -> Option<Value> {
        self.0.iter().find(|&&(a, _)| a == attr).map(|&(_, v)| v)
    }

    /// Keeps only `attrs`; attributes this prototype does not cover are marked
    /// [`Value::NotCaptured`].
    pub fn restrict(&self, attrs: &[Attr]) -> Prototype {
        Prototype::new(
            attrs
                .iter()
                .map(|&a| (a, self.get(a).unwrap_or(Value::NotCaptured)))
                .collect(),
        )
    }

    pub fn with(&self, attr: Attr, value: Value) -> Prototype {
        let mut pairs = self.0.clone();
        match pairs.iter_mut().find(|(a, _)| *a == attr) {
            Some(slot) => slot.1 = value,
            None => pairs.push((attr, value)),
        }
        Prototype::new(pairs)
    }

    /// True when any covered value is [`Value::NotCaptured`] or undetermined.
    pub fn is_partial(&self) -> bool {
        self.0.iter().any(|&(_, v)| {
            matches!(
                v,
                Value::NotCaptured | Value::Ethnicity(super::schema::Ethnicity::Undetermined)
            )
        })
    }
}

impl fmt::Display for Prototype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, (a, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}={v}")?;
        }
        f.write_str(")")
    }
}

/// Multiset of prototypes over a fixed attribute subset. Zero counts are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    attrs: Vec<Attr>,
    counts: BTreeMap<Prototype, u64>,
}

pub(crate) fn normalize_attrs(attrs: &[Attr]) -> Vec<Attr> {
    let mut v = attrs.to_vec();
    v.sort();
    v.dedup();
    v
}

impl Histogram {
    pub fn new(attrs: &[Attr]) -> Self {
        Histogram {
            attrs: normalize_attrs(attrs),
            counts: BTreeMap::new(),
        }
    }

    pub fn from_records<'a>(attrs: &[Attr], records: impl IntoIterator<Item = &'a PersonRecord>) -> Self {
        let mut h = Histogram::new(attrs);
        for r in records {
            let p = Prototype::of_record(r, &h.attrs);
            *h.counts.entry(p).or_insert(0) += 1;
        }
        h
    }

    /// Builds a histogram from explicit entries. Every prototype must cover
    /// exactly `attrs`.
    pub fn from_counts(attrs: &[Attr], entries: impl IntoIterator<Item = (Prototype, u64)>) -> Result<Self> {
        let mut h = Histogram::new(attrs);
        for (p, n) in entries {
            h.try_add(p, n)?;
        }
        Ok(h)
    }

    pub fn attrs(&self) -> &[Attr] {
        &self.attrs
    }

    /// Adds `n` copies of `p`, checking that `p` covers this histogram's attributes.
    pub fn try_add(&mut self, p: Prototype, n: u64) -> Result<()> {
        if !p.attrs().eq(self.attrs.iter().copied()) {
            return Err(Error::Incomparable {
                left: self.attrs.iter().map(|a| a.to_string()).collect(),
                right: p.attrs().map(|a| a.to_string()).collect(),
            });
        }
        if n > 0 {
            *self.counts.entry(p).or_insert(0) += n;
        }
        Ok(())
    }

    pub(crate) fn add_unchecked(&mut self, p: Prototype, n: u64) {
        debug_assert!(p.attrs().eq(self.attrs.iter().copied()));
        if n > 0 {
            *self.counts.entry(p).or_insert(0) += n;
        }
    }

    pub fn get(&self, p: &Prototype) -> u64 {
        self.counts.get(p).copied().unwrap_or(0)
    }

    pub fn contains(&self, p: &Prototype) -> bool {
        self.counts.contains_key(p)
    }

    /// Total multiplicity (number of records).
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Number of distinct prototypes.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> btree_map::Iter<'_, Prototype, u64> {
        self.counts.iter()
    }

    pub fn prototypes(&self) -> btree_map::Keys<'_, Prototype, u64> {
        self.counts.keys()
    }

    pub fn max_multiplicity(&self) -> u64 {
        self.counts.values().copied().max().unwrap_or(0)
    }

    /// Sums out every attribute not in `attrs`, which must be a subset of this
    /// histogram's attributes.
    pub fn coarsen(&self, attrs: &[Attr]) -> Result<Histogram> {
        let attrs = normalize_attrs(attrs);
        if let Some(a) = attrs.iter().find(|a| !self.attrs.contains(a)) {
            return Err(Error::Schema(format!("cannot coarsen onto `{a}`: not covered")));
        }
        let mut out = Histogram::new(&attrs);
        for (p, &n) in &self.counts {
            out.add_unchecked(p.restrict(&attrs), n);
        }
        Ok(out)
    }

    /// Adds every entry of `other` into `self`.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        ensure_comparable(self, other)?;
        for (p, &n) in &other.counts {
            *self.counts.entry(p.clone()).or_insert(0) += n;
        }
        Ok(())
    }
}

impl Histogram {
    /// Writes one row per prototype: the covered attributes, then `multiplicity`.
    pub fn write_csv(&self, writer: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.attrs.iter().map(|a| a.name()).collect();
        header.push("multiplicity");
        w.write_record(&header)?;
        for (p, n) in &self.counts {
            let mut row: Vec<String> = p.pairs().iter().map(|(_, v)| v.to_string()).collect();
            row.push(n.to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<histogram writer>", e))?;
        Ok(())
    }

    /// Reads a histogram written by [`Histogram::write_csv`]. Columns that are
    /// neither attribute names nor `multiplicity` are ignored.
    pub fn read_csv(reader: impl std::io::Read) -> Result<Histogram> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let mut columns = Vec::new();
        let mut mult = None;
        for (i, h) in header.iter().enumerate() {
            if h == "multiplicity" {
                mult = Some(i);
            } else if let Ok(a) = h.parse::<Attr>() {
                columns.push((i, a));
            }
        }
        let mult = mult.ok_or_else(|| Error::MissingColumn("multiplicity".into()))?;
        let attrs: Vec<Attr> = columns.iter().map(|&(_, a)| a).collect();
        let mut h = Histogram::new(&attrs);
        for (row_no, row) in r.records().enumerate() {
            let row = row?;
            let pairs = columns
                .iter()
                .map(|&(i, a)| Ok((a, Value::parse(a, &row[i])?)))
                .collect::<Result<Vec<_>>>()?;
            let n: u64 = row[mult].parse().map_err(|_| Error::Malformed {
                row: row_no + 1,
                reason: format!("multiplicity {:?} is not a count", &row[mult]),
            })?;
            h.try_add(Prototype::new(pairs), n)?;
        }
        Ok(h)
    }
}

impl<'a> IntoIterator for &'a Histogram {
    type Item = (&'a Prototype, &'a u64);
    type IntoIter = btree_map::Iter<'a, Prototype, u64>;

    fn into_iter(self) -> Self::IntoIter {
        self.counts.iter()
    }
}

fn ensure_comparable(a: &Histogram, b: &Histogram) -> Result<()> {
    if a.attrs != b.attrs {
        return Err(Error::Incomparable {
            left: a.attrs.iter().map(|x| x.to_string()).collect(),
            right: b.attrs.iter().map(|x| x.to_string()).collect(),
        });
    }
    Ok(())
}

/// Symmetric difference of two histograms over the same attributes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistogramDiff {
    /// Prototypes present only in the left operand, with their counts.
    pub only_in_a: Histogram,
    /// Prototypes present only in the right operand, with their counts.
    pub only_in_b: Histogram,
    /// `a - b` for prototypes present on both sides with different counts.
    pub deltas: BTreeMap<Prototype, i64>,
}

impl HistogramDiff {
    pub fn is_empty(&self) -> bool {
        self.only_in_a.is_empty() && self.only_in_b.is_empty() && self.deltas.is_empty()
    }
}

pub fn multiset_diff(a: &Histogram, b: &Histogram) -> Result<HistogramDiff> {
    ensure_comparable(a, b)?;
    let mut diff = HistogramDiff {
        only_in_a: Histogram::new(&a.attrs),
        only_in_b: Histogram::new(&b.attrs),
        deltas: BTreeMap::new(),
    };
    for (p, &n) in &a.counts {
        match b.counts.get(p) {
            None => diff.only_in_a.add_unchecked(p.clone(), n),
            Some(&m) if m != n => {
                diff.deltas.insert(p.clone(), n as i64 - m as i64);
            }
            Some(_) => {}
        }
    }
    for (p, &m) in &b.counts {
        if !a.counts.contains_key(p) {
            diff.only_in_b.add_unchecked(p.clone(), m);
        }
    }
    Ok(diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::schema::Sex;

    fn sex(s: Sex) -> Prototype {
        Prototype::new(vec![(Attr::Sex, Value::Sex(s))])
    }

    #[test]
    fn diff_identity_is_empty() {
        let mut a = Histogram::new(&[Attr::Sex]);
        a.try_add(sex(Sex::Male), 4).unwrap();
        assert!(multiset_diff(&a, &a.clone()).unwrap().is_empty());
    }

    #[test]
    fn diff_reports_deltas_and_one_sided_entries() {
        let p = sex(Sex::Male);
        let q = sex(Sex::Female);
        let a = Histogram::from_counts(&[Attr::Sex], [(p.clone(), 2)]).unwrap();
        let b = Histogram::from_counts(&[Attr::Sex], [(p.clone(), 1), (q.clone(), 3)]).unwrap();
        let d = multiset_diff(&a, &b).unwrap();
        assert_eq!(d.deltas, BTreeMap::from([(p, 1)]));
        assert!(d.only_in_a.is_empty());
        assert_eq!(d.only_in_b.get(&q), 3);
        assert_eq!(d.only_in_b.len(), 1);
    }

    #[test]
    fn mismatched_attrs_are_incomparable() {
        let a = Histogram::new(&[Attr::Sex]);
        let b = Histogram::new(&[Attr::Age]);
        assert!(matches!(multiset_diff(&a, &b), Err(Error::Incomparable { .. })));
        let mut c = Histogram::new(&[Attr::Sex]);
        assert!(c.try_add(Prototype::new(vec![(Attr::Age, Value::Age(3))]), 1).is_err());
    }

    #[test]
    fn restrict_marks_missing_attributes() {
        let p = sex(Sex::Female);
        let r = p.restrict(&[Attr::Sex, Attr::Age]);
        assert_eq!(r.get(Attr::Age), Some(Value::NotCaptured));
        assert!(r.is_partial());
        assert_eq!(r.to_string(), "(sex=female, age=*)");
    }

    #[test]
    fn csv_round_trip() {
        let attrs = [Attr::Sex, Attr::AgeDetail];
        let h = Histogram::from_counts(
            &attrs,
            [
                (Prototype::new(vec![(Attr::Sex, Value::Sex(Sex::Male)), (Attr::AgeDetail, Value::Age(3))]), 2),
                (Prototype::new(vec![(Attr::Sex, Value::Sex(Sex::Female)), (Attr::AgeDetail, Value::AgeRange(110, 115))]), 1),
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert_eq!(Histogram::read_csv(buf.as_slice()).unwrap(), h);
    }
}
