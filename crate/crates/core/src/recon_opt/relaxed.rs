use serde::{Deserialize, Serialize};

use crate::datamodel::{
    pct12_cells, Attr, Ethnicity, GeoLevel, Histogram, PersonRecord, Prototype, RaceGroup, Sex, Value,
    P12_AGE_BUCKETS,
};
use crate::error::{Error, Result};
use crate::tabulate::{Predicate, Workload};

/// How a categorical attribute is represented in the relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// One weight per category on the probability simplex.
    #[default]
    OneHot,
    /// Race as a single number in `[0, K-1]`; membership of category `j` is
    /// the hat function `max(0, 1 - |v - j|)`. This imposes an order on
    /// unordered categories and exists only for comparison runs.
    Scalar,
}

/// One relaxed attribute: its categories and encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feature {
    pub attr: Attr,
    pub categories: Vec<Value>,
    pub encoding: Encoding,
}

impl Feature {
    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    /// Number of free parameters per row.
    pub fn width(&self) -> usize {
        match self.encoding {
            Encoding::OneHot => self.categories.len(),
            Encoding::Scalar => 1,
        }
    }

    /// Category index of a record.
    pub fn category_of(&self, r: &PersonRecord) -> usize {
        let v = r.value(self.attr);
        self.categories
            .iter()
            .position(|c| *c == v)
            .expect("record value outside feature categories")
    }

    /// Which categories a predicate accepts. Fails when the predicate splits a
    /// category (e.g. an age interval cutting through a bucket).
    fn mask(&self, p: &Predicate) -> Result<Vec<bool>> {
        self.categories
            .iter()
            .map(|c| {
                Ok(match (self.attr, c) {
                    (Attr::Sex, Value::Sex(s)) => p.sex.as_ref().is_none_or(|v| v.contains(s)),
                    (Attr::RaceGroup, Value::RaceGroup(g)) => p.race.as_ref().is_none_or(|v| v.contains(g)),
                    (Attr::Hispanic, Value::Ethnicity(e)) => match p.hispanic {
                        None => true,
                        Some(h) => (*e == Ethnicity::Hispanic) == h,
                    },
                    (_, Value::Age(a)) => age_inside(p, *a, *a)?,
                    (_, Value::AgeRange(lo, hi)) => age_inside(p, *lo, *hi)?,
                    _ => unreachable!("feature categories are built internally"),
                })
            })
            .collect()
    }
}

fn age_inside(p: &Predicate, lo: u8, hi: u8) -> Result<bool> {
    let Some((plo, phi)) = p.age else {
        return Ok(true);
    };
    let inside = plo <= lo && hi <= phi;
    let disjoint = hi < plo || lo > phi;
    if !inside && !disjoint {
        return Err(Error::Config(format!(
            "age predicate [{plo}, {phi}] splits the category [{lo}, {hi}]"
        )));
    }
    Ok(inside)
}

/// The relaxed attributes reconstructed at a geography level: sex, the age
/// granularity its tables release, race group, and ethnicity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpace {
    pub level: GeoLevel,
    pub features: Vec<Feature>,
}

impl FeatureSpace {
    pub fn for_level(level: GeoLevel, encoding: Encoding) -> Result<Self> {
        let (age_attr, ages): (Attr, Vec<Value>) = match level {
            GeoLevel::Block => (
                Attr::AgeBucket,
                P12_AGE_BUCKETS.iter().map(|&(lo, hi)| Value::AgeRange(lo, hi)).collect(),
            ),
            GeoLevel::Tract => (
                Attr::AgeDetail,
                pct12_cells()
                    .into_iter()
                    .map(|(lo, hi)| if lo == hi { Value::Age(lo) } else { Value::AgeRange(lo, hi) })
                    .collect(),
            ),
            other => return Err(Error::Config(format!("no released tables at {other:?} level"))),
        };
        let one_hot = |attr, categories| Feature {
            attr,
            categories,
            encoding: Encoding::OneHot,
        };
        Ok(FeatureSpace {
            level,
            features: vec![
                one_hot(Attr::Sex, Sex::ALL.map(Value::Sex).to_vec()),
                one_hot(age_attr, ages),
                Feature {
                    attr: Attr::RaceGroup,
                    categories: RaceGroup::ALL.map(Value::RaceGroup).to_vec(),
                    encoding,
                },
                one_hot(
                    Attr::Hispanic,
                    vec![Value::Ethnicity(Ethnicity::NotHispanic), Value::Ethnicity(Ethnicity::Hispanic)],
                ),
            ],
        })
    }

    pub fn attrs(&self) -> Vec<Attr> {
        self.features.iter().map(|f| f.attr).collect()
    }

    /// Prototype of a category assignment.
    pub fn prototype(&self, categories: &[usize]) -> Prototype {
        Prototype::new(
            self.features
                .iter()
                .zip(categories)
                .map(|(f, &c)| (f.attr, f.categories[c]))
                .collect(),
        )
    }

    /// Compiles workload cells into per-feature category masks.
    pub fn compile(&self, workloads: &[Workload]) -> Result<CompiledWorkload> {
        let mut masks: Vec<Vec<Vec<bool>>> = vec![Vec::new(); self.features.len()];
        let mut queries = Vec::new();
        let mut labels = Vec::new();
        for w in workloads.iter().filter(|w| w.level == self.level) {
            for c in &w.cells {
                let mut ids = Vec::with_capacity(self.features.len());
                for (f, known) in self.features.iter().zip(masks.iter_mut()) {
                    let m = f.mask(&c.predicate)?;
                    let id = match known.iter().position(|k| *k == m) {
                        Some(id) => id,
                        None => {
                            known.push(m);
                            known.len() - 1
                        }
                    };
                    ids.push(id);
                }
                queries.push(ids);
                labels.push(format!("{}:{}", w.name, c.label));
            }
        }
        Ok(CompiledWorkload { masks, queries, labels })
    }
}

/// Workload cells as products of per-feature category masks.
///
/// Distinct masks are stored once per feature; each query refers to one mask
/// id per feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledWorkload {
    pub masks: Vec<Vec<Vec<bool>>>,
    pub queries: Vec<Vec<usize>>,
    pub labels: Vec<String>,
}

impl CompiledWorkload {
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Keeps only the listed queries (by index).
    pub fn select(&self, keep: &[usize]) -> CompiledWorkload {
        CompiledWorkload {
            masks: self.masks.clone(),
            queries: keep.iter().map(|&i| self.queries[i].clone()).collect(),
            labels: keep.iter().map(|&i| self.labels[i].clone()).collect(),
        }
    }
}

/// Continuous relaxation of an `n_rows` dataset: per row and feature, either a
/// probability vector (one-hot) or a scalar position (scalar encoding).
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedDataset {
    pub space: FeatureSpace,
    pub n_rows: usize,
    /// `params[f]` is row-major `n_rows x width(f)`.
    pub params: Vec<Vec<f64>>,
}

impl RelaxedDataset {
    /// Rows that are exactly the given category assignments.
    pub fn from_categories(space: FeatureSpace, rows: &[Vec<usize>]) -> Self {
        let params = space
            .features
            .iter()
            .enumerate()
            .map(|(fi, f)| {
                let mut p = vec![0.0; rows.len() * f.width()];
                for (r, cats) in rows.iter().enumerate() {
                    match f.encoding {
                        Encoding::OneHot => p[r * f.len() + cats[fi]] = 1.0,
                        Encoding::Scalar => p[r] = cats[fi] as f64,
                    }
                }
                p
            })
            .collect();
        RelaxedDataset {
            n_rows: rows.len(),
            space,
            params,
        }
    }

    /// Rows of the records, in record order.
    pub fn from_records<'a>(space: FeatureSpace, records: impl IntoIterator<Item = &'a PersonRecord>) -> Self {
        let rows: Vec<Vec<usize>> = records
            .into_iter()
            .map(|r| space.features.iter().map(|f| f.category_of(r)).collect())
            .collect();
        RelaxedDataset::from_categories(space, &rows)
    }

    pub fn row(&self, feature: usize, row: usize) -> &[f64] {
        let w = self.space.features[feature].width();
        &self.params[feature][row * w..(row + 1) * w]
    }

    /// Category membership weights of one row for one feature.
    pub fn membership(&self, feature: usize, row: usize, out: &mut Vec<f64>) {
        let f = &self.space.features[feature];
        out.clear();
        match f.encoding {
            Encoding::OneHot => out.extend_from_slice(self.row(feature, row)),
            Encoding::Scalar => {
                let v = self.params[feature][row];
                out.extend((0..f.len()).map(|j| (1.0 - (v - j as f64).abs()).max(0.0)));
            }
        }
    }
}

/// Category counts of the four features, in order.
fn dims(x: &RelaxedDataset) -> [usize; 4] {
    assert_eq!(x.space.features.len(), 4, "relaxation expects sex, age, race, ethnicity");
    std::array::from_fn(|f| x.space.features[f].len())
}

/// Per-row membership vectors of every feature.
fn memberships(x: &RelaxedDataset, row: usize, out: &mut [Vec<f64>; 4]) {
    for (fi, m) in out.iter_mut().enumerate() {
        x.membership(fi, row, m);
    }
}

/// Expected joint histogram: the sum over rows of the outer product of the
/// row's memberships, flattened row-major over `dims`.
fn joint(x: &RelaxedDataset) -> Vec<f64> {
    let d = dims(x);
    let mut t = vec![0.0; d.iter().product()];
    let mut m: [Vec<f64>; 4] = Default::default();
    for row in 0..x.n_rows {
        memberships(x, row, &mut m);
        for (j, &s) in m[0].iter().enumerate() {
            for (a, &w1) in m[1].iter().enumerate() {
                let sa = s * w1;
                if sa == 0.0 {
                    continue;
                }
                let base = (j * d[1] + a) * d[2];
                for (g, &w2) in m[2].iter().enumerate() {
                    let sag = sa * w2;
                    let cell = &mut t[(base + g) * d[3]..(base + g + 1) * d[3]];
                    for (c, &w3) in cell.iter_mut().zip(&m[3]) {
                        *c += sag * w3;
                    }
                }
            }
        }
    }
    t
}

/// Visits every flat tensor index accepted by a query.
fn for_each_cell(w: &CompiledWorkload, support: &[Vec<Vec<usize>>], q: &[usize], d: [usize; 4], mut f: impl FnMut(usize)) {
    debug_assert_eq!(w.masks.len(), 4);
    for &j in &support[0][q[0]] {
        for &a in &support[1][q[1]] {
            for &g in &support[2][q[2]] {
                let base = ((j * d[1] + a) * d[2] + g) * d[3];
                for &h in &support[3][q[3]] {
                    f(base + h);
                }
            }
        }
    }
}

fn supports(w: &CompiledWorkload) -> Vec<Vec<Vec<usize>>> {
    w.masks
        .iter()
        .map(|ms| {
            ms.iter()
                .map(|m| m.iter().enumerate().filter(|(_, &k)| k).map(|(i, _)| i).collect())
                .collect()
        })
        .collect()
}

fn answers_from_joint(t: &[f64], w: &CompiledWorkload, support: &[Vec<Vec<usize>>], d: [usize; 4]) -> Vec<f64> {
    w.queries
        .iter()
        .map(|q| {
            let mut a = 0.0;
            for_each_cell(w, support, q, d, |i| a += t[i]);
            a
        })
        .collect()
}

/// Relaxed answers of every compiled query:
/// `sum over rows of prod over features of (accepted weight)`.
pub fn relaxed_answers(x: &RelaxedDataset, w: &CompiledWorkload) -> Vec<f64> {
    answers_from_joint(&joint(x), w, &supports(w), dims(x))
}

/// Relaxed answer of a single query.
pub fn relaxed_answer(x: &RelaxedDataset, w: &CompiledWorkload, query: usize) -> f64 {
    relaxed_answers(x, &w.select(&[query]))[0]
}

/// Squared-error loss against `targets` and its exact gradient with respect
/// to every parameter (same layout as `x.params`).
///
/// The loss is a sum over queries of `(<T, mask_q> - target_q)^2` where `T`
/// is the expected joint histogram, so the gradient of a row's membership in
/// feature `f` is the residual tensor `E = sum_q 2 e_q mask_q` contracted with
/// the row's memberships in the other three features.
pub fn loss_and_gradient(x: &RelaxedDataset, w: &CompiledWorkload, targets: &[f64]) -> (f64, Vec<Vec<f64>>) {
    assert_eq!(targets.len(), w.len(), "targets must align with the workload");
    let d = dims(x);
    let support = supports(w);
    let answers = answers_from_joint(&joint(x), w, &support, d);
    let mut loss = 0.0;
    let mut e = vec![0.0; d.iter().product()];
    for ((q, a), t) in w.queries.iter().zip(&answers).zip(targets) {
        let r = a - t;
        loss += r * r;
        if r != 0.0 {
            for_each_cell(w, &support, q, d, |i| e[i] += 2.0 * r);
        }
    }

    let mut grad: Vec<Vec<f64>> = x.params.iter().map(|p| vec![0.0; p.len()]).collect();
    if loss == 0.0 {
        return (loss, grad);
    }
    let mut m: [Vec<f64>; 4] = Default::default();
    let mut f1 = vec![0.0; d[0] * d[1] * d[2]];
    let mut f2 = vec![0.0; d[0] * d[1]];
    let mut k1 = vec![0.0; d[1] * d[2] * d[3]];
    let mut k2 = vec![0.0; d[2] * d[3]];
    let mut dm: [Vec<f64>; 4] = std::array::from_fn(|f| vec![0.0; d[f]]);
    for row in 0..x.n_rows {
        memberships(x, row, &mut m);
        // Contract ethnicity then race: f2[j, a].
        for (i, cell) in e.chunks(d[3]).enumerate() {
            f1[i] = cell.iter().zip(&m[3]).map(|(a, b)| a * b).sum();
        }
        for (i, cell) in f1.chunks(d[2]).enumerate() {
            f2[i] = cell.iter().zip(&m[2]).map(|(a, b)| a * b).sum();
        }
        for j in 0..d[0] {
            dm[0][j] = f2[j * d[1]..(j + 1) * d[1]].iter().zip(&m[1]).map(|(a, b)| a * b).sum();
        }
        for a in 0..d[1] {
            dm[1][a] = (0..d[0]).map(|j| f2[j * d[1] + a] * m[0][j]).sum();
        }
        // Contract sex then age: k2[g, h].
        let inner = d[1] * d[2] * d[3];
        k1.iter_mut().for_each(|v| *v = 0.0);
        for (j, &s) in m[0].iter().enumerate() {
            if s != 0.0 {
                for (k, &v) in k1.iter_mut().zip(&e[j * inner..(j + 1) * inner]) {
                    *k += s * v;
                }
            }
        }
        k2.iter_mut().for_each(|v| *v = 0.0);
        for (a, &w1) in m[1].iter().enumerate() {
            if w1 != 0.0 {
                for (k, &v) in k2.iter_mut().zip(&k1[a * d[2] * d[3]..(a + 1) * d[2] * d[3]]) {
                    *k += w1 * v;
                }
            }
        }
        for g in 0..d[2] {
            dm[2][g] = k2[g * d[3]..(g + 1) * d[3]].iter().zip(&m[3]).map(|(a, b)| a * b).sum();
        }
        for h in 0..d[3] {
            dm[3][h] = (0..d[2]).map(|g| k2[g * d[3] + h] * m[2][g]).sum();
        }

        for (fi, f) in x.space.features.iter().enumerate() {
            match f.encoding {
                Encoding::OneHot => {
                    grad[fi][row * f.len()..(row + 1) * f.len()].copy_from_slice(&dm[fi]);
                }
                Encoding::Scalar => {
                    let v = x.params[fi][row];
                    grad[fi][row] = dm[fi]
                        .iter()
                        .enumerate()
                        .map(|(j, &dj)| {
                            let t = v - j as f64;
                            if t.abs() >= 1.0 {
                                0.0
                            } else {
                                -t.signum() * dj
                            }
                        })
                        .sum();
                }
            }
        }
    }
    (loss, grad)
}

/// Exact counts of a discrete histogram against a compiled workload.
pub fn histogram_answers(space: &FeatureSpace, w: &CompiledWorkload, h: &Histogram) -> Vec<f64> {
    let mut out = vec![0.0; w.len()];
    for (p, &n) in h {
        let cats: Vec<usize> = space
            .features
            .iter()
            .map(|f| {
                let v = p.get(f.attr).unwrap_or(Value::NotCaptured);
                f.categories.iter().position(|c| *c == v).unwrap_or(usize::MAX)
            })
            .collect();
        if cats.contains(&usize::MAX) {
            continue;
        }
        for (a, q) in out.iter_mut().zip(&w.queries) {
            if q.iter().enumerate().all(|(fi, &m)| w.masks[fi][m][cats[fi]]) {
                *a += n as f64;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{Dataset, GeoUnit};
    use crate::tabulate::{block_workloads, evaluate_query, CountingQuery};

    fn space() -> FeatureSpace {
        FeatureSpace::for_level(GeoLevel::Block, Encoding::OneHot).unwrap()
    }

    #[test]
    fn block_space_shape() {
        let s = space();
        assert_eq!(s.features.iter().map(Feature::len).collect::<Vec<_>>(), vec![2, 23, 7, 2]);
        let t = FeatureSpace::for_level(GeoLevel::Tract, Encoding::Scalar).unwrap();
        assert_eq!(t.features[1].len(), 103);
        assert_eq!(t.features[2].width(), 1);
    }

    #[test]
    fn uniform_sex_row_answers_half() {
        let s = space();
        let mut x = RelaxedDataset::from_categories(s.clone(), &[vec![0, 0, 0, 0]]);
        x.params[0] = vec![0.5, 0.5];
        let w = Workload {
            name: "T".into(),
            level: GeoLevel::Block,
            cells: vec![crate::tabulate::Cell {
                label: "male".into(),
                predicate: Predicate::all().sex(Sex::Male),
            }],
        };
        let c = s.compile(&[w]).unwrap();
        assert_eq!(relaxed_answer(&x, &c, 0), 0.5);
    }

    #[test]
    fn integral_rows_count_exactly() {
        let records: Vec<PersonRecord> = (0..40u8)
            .map(|i| PersonRecord {
                state: 1,
                county: 1,
                tract: 1,
                block: 1,
                hhgq: 0,
                sex: Sex::ALL[(i % 2) as usize],
                age: i * 2,
                hispanic: i % 3 == 0,
                race: i % 8 + 1,
            })
            .collect();
        let d = Dataset::census(records.clone());
        let ws = block_workloads();
        let s = space();
        let c = s.compile(&ws).unwrap();
        let x = RelaxedDataset::from_records(s, &records);
        let answers = relaxed_answers(&x, &c);
        let unit = GeoUnit::block(1, 1, 1, 1);
        let exact: Vec<f64> = ws
            .iter()
            .flat_map(|w| w.queries_for(unit))
            .map(|q: CountingQuery| evaluate_query(&d, &q) as f64)
            .collect();
        assert_eq!(answers, exact);
    }

    fn random_instance(seed_value: u64, n: usize, encoding: Encoding) -> (RelaxedDataset, CompiledWorkload, Vec<f64>) {
        use rand::Rng;
        let mut rng = crate::seed::rng(seed_value);
        let s = FeatureSpace::for_level(GeoLevel::Block, encoding).unwrap();
        let c = s.compile(&block_workloads()).unwrap();
        let mut x = RelaxedDataset::from_categories(s.clone(), &vec![vec![0, 0, 0, 0]; n]);
        for (f, p) in s.features.iter().zip(x.params.iter_mut()) {
            match f.encoding {
                Encoding::OneHot => {
                    for row in p.chunks_mut(f.len()) {
                        let raw: Vec<f64> = (0..f.len()).map(|_| rng.gen::<f64>() + 0.05).collect();
                        let t: f64 = raw.iter().sum();
                        row.iter_mut().zip(raw).for_each(|(v, r)| *v = r / t);
                    }
                }
                Encoding::Scalar => {
                    // Away from the kinks at integers.
                    p.iter_mut()
                        .for_each(|v| *v = rng.gen_range(0..f.len() - 1) as f64 + rng.gen_range(0.1..0.9));
                }
            }
        }
        let targets = (0..c.len()).map(|_| rng.gen_range(0..4) as f64).collect();
        (x, c, targets)
    }

    #[test]
    fn answers_match_expansion_over_category_combinations() {
        let (x, c, _) = random_instance(11, 3, Encoding::OneHot);
        let f = &x.space.features;
        let mut oracle = vec![0.0; c.len()];
        let mut w = Vec::new();
        for row in 0..x.n_rows {
            let m: Vec<Vec<f64>> = (0..f.len())
                .map(|fi| {
                    x.membership(fi, row, &mut w);
                    w.clone()
                })
                .collect();
            for a in 0..f[0].len() {
                for b in 0..f[1].len() {
                    for g in 0..f[2].len() {
                        for h in 0..f[3].len() {
                            let p = m[0][a] * m[1][b] * m[2][g] * m[3][h];
                            let cats = [a, b, g, h];
                            for (o, q) in oracle.iter_mut().zip(&c.queries) {
                                if q.iter().enumerate().all(|(fi, &mi)| c.masks[fi][mi][cats[fi]]) {
                                    *o += p;
                                }
                            }
                        }
                    }
                }
            }
        }
        for (a, o) in relaxed_answers(&x, &c).iter().zip(&oracle) {
            assert!((a - o).abs() < 1e-9, "{a} vs {o}");
        }
    }

    fn max_fd_error(x: &RelaxedDataset, c: &CompiledWorkload, targets: &[f64]) -> f64 {
        let (_, grad) = loss_and_gradient(x, c, targets);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for fi in 0..x.params.len() {
            for i in 0..x.params[fi].len() {
                let mut plus = x.clone();
                plus.params[fi][i] += h;
                let mut minus = x.clone();
                minus.params[fi][i] -= h;
                let fd = (loss_and_gradient(&plus, c, targets).0 - loss_and_gradient(&minus, c, targets).0) / (2.0 * h);
                let rel = (grad[fi][i] - fd).abs() / grad[fi][i].abs().max(fd.abs()).max(1.0);
                worst = worst.max(rel);
            }
        }
        worst
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed_value in 0..5 {
            let (x, c, t) = random_instance(seed_value, 2, Encoding::OneHot);
            assert!(max_fd_error(&x, &c, &t) <= 1e-4);
            let (x, c, t) = random_instance(seed_value, 2, Encoding::Scalar);
            assert!(max_fd_error(&x, &c, &t) <= 1e-4);
        }
    }

    #[test]
    fn single_binary_cell_closed_form() {
        // One row with weight p on male; loss (p - t)^2, gradient 2(p - t) on
        // the male weight and 0 on the female weight.
        let s = space();
        let w = Workload {
            name: "T".into(),
            level: GeoLevel::Block,
            cells: vec![crate::tabulate::Cell {
                label: "male".into(),
                predicate: Predicate::all().sex(Sex::Male),
            }],
        };
        let c = s.compile(&[w]).unwrap();
        let mut x = RelaxedDataset::from_categories(s, &[vec![0, 0, 0, 0]]);
        x.params[0] = vec![0.25, 0.75];
        let (loss, g) = loss_and_gradient(&x, &c, &[1.0]);
        assert!((loss - 0.5625).abs() < 1e-12);
        assert!((g[0][0] + 1.5).abs() < 1e-12 && g[0][1] == 0.0);
        // Every age weight enters through the all-ages mask: 2(p - t) * p.
        assert!(g[1].iter().all(|&v| (v + 0.375).abs() < 1e-12));
    }

    #[test]
    fn consistent_rows_have_zero_loss_and_gradient() {
        let s = space();
        let c = s.compile(&block_workloads()).unwrap();
        let x = RelaxedDataset::from_categories(s.clone(), &[vec![0, 4, 1, 0], vec![1, 20, 6, 1]]);
        let targets = relaxed_answers(&x, &c);
        let (loss, g) = loss_and_gradient(&x, &c, &targets);
        assert_eq!(loss, 0.0);
        assert!(g.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn splitting_predicate_is_rejected() {
        let w = Workload {
            name: "T".into(),
            level: GeoLevel::Block,
            cells: vec![crate::tabulate::Cell {
                label: "odd".into(),
                predicate: Predicate::all().ages(3, 7),
            }],
        };
        assert!(space().compile(&[w]).is_err());
    }
}
