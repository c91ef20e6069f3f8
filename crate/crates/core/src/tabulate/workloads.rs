use crate::datamodel::{pct12_cells, GeoLevel, RaceGroup, Sex, P12_AGE_BUCKETS};

use super::query::{Cell, Predicate, Workload};

/// Cell label for an inclusive age interval: `"7"` or `"5-9"`.
pub fn age_label(lo: u8, hi: u8) -> String {
    if lo == hi {
        lo.to_string()
    } else {
        format!("{lo}-{hi}")
    }
}

/// Cell label of a sex-by-age cell, e.g. `male_0` or `female_85-115`.
pub fn sex_age_label(sex: Sex, lo: u8, hi: u8) -> String {
    format!("{}_{}", sex.label(), age_label(lo, hi))
}

fn cell(label: impl Into<String>, predicate: Predicate) -> Cell {
    Cell {
        label: label.into(),
        predicate,
    }
}

/// `total`, then per sex a subtotal followed by one cell per age interval.
fn sex_by_age(name: String, level: GeoLevel, ages: &[(u8, u8)], base: Predicate) -> Workload {
    let mut cells = vec![cell("total", base.clone())];
    for sex in Sex::ALL {
        cells.push(cell(sex.label(), base.clone().sex(sex)));
        for &(lo, hi) in ages {
            cells.push(cell(sex_age_label(sex, lo, hi), base.clone().sex(sex).ages(lo, hi)));
        }
    }
    Workload { name, level, cells }
}

/// Race-iterated variants of a sex-by-age table: `A`-`G` per race group,
/// `H` Hispanic of any race, and the not-Hispanic iterations listed in
/// `not_hispanic`.
fn iterated(prefix: &str, level: GeoLevel, ages: &[(u8, u8)], not_hispanic: &[RaceGroup]) -> Vec<Workload> {
    let mut out = Vec::new();
    for g in RaceGroup::ALL {
        out.push(sex_by_age(format!("{prefix}{}", g.letter()), level, ages, Predicate::all().race(g)));
    }
    out.push(sex_by_age(format!("{prefix}H"), level, ages, Predicate::all().hispanic(true)));
    for &g in not_hispanic {
        out.push(sex_by_age(
            format!("{prefix}{}", g.not_hispanic_letter()),
            level,
            ages,
            Predicate::all().race(g).hispanic(false),
        ));
    }
    out
}

fn race_by_ethnicity(name: &str, base: Predicate) -> Workload {
    let mut cells = vec![
        cell("total", base.clone()),
        cell("hispanic", base.clone().hispanic(true)),
        cell("not_hispanic", base.clone().hispanic(false)),
    ];
    for hisp in [true, false] {
        let eth = if hisp { "hispanic" } else { "not_hispanic" };
        for g in RaceGroup::ALL {
            cells.push(cell(format!("{eth}_{}", g.label()), base.clone().hispanic(hisp).race(g)));
        }
    }
    Workload {
        name: name.into(),
        level: GeoLevel::Block,
        cells,
    }
}

/// The block-level P tables.
pub fn block_workloads() -> Vec<Workload> {
    let level = GeoLevel::Block;
    let mut out = vec![Workload {
        name: "P1".into(),
        level,
        cells: vec![cell("total", Predicate::all())],
    }];

    let mut p6 = vec![cell("total", Predicate::all())];
    p6.extend(RaceGroup::ALL.map(|g| cell(g.label(), Predicate::all().race(g))));
    out.push(Workload {
        name: "P6".into(),
        level,
        cells: p6,
    });

    let mut p7 = vec![cell("total", Predicate::all())];
    for g in RaceGroup::ALL {
        p7.push(cell(g.label(), Predicate::all().race(g)));
        p7.push(cell(format!("{}_hispanic", g.label()), Predicate::all().race(g).hispanic(true)));
        p7.push(cell(
            format!("{}_not_hispanic", g.label()),
            Predicate::all().race(g).hispanic(false),
        ));
    }
    out.push(Workload {
        name: "P7".into(),
        level,
        cells: p7,
    });

    out.push(race_by_ethnicity("P9", Predicate::all()));
    out.push(race_by_ethnicity("P11", Predicate::all().ages(18, crate::datamodel::MAX_AGE)));
    out.push(sex_by_age("P12".into(), level, &P12_AGE_BUCKETS, Predicate::all()));
    out.extend(iterated("P12", level, &P12_AGE_BUCKETS, &[RaceGroup::White]));
    out
}

/// The tract-level PCT12 tables (sex by single year of age).
pub fn tract_workloads() -> Vec<Workload> {
    let level = GeoLevel::Tract;
    let ages = pct12_cells();
    let mut out = vec![sex_by_age("PCT12".into(), level, &ages, Predicate::all())];
    out.extend(iterated("PCT12", level, &ages, &RaceGroup::ALL));
    out
}

/// Built-in workloads released at `level`.
pub fn builtin_workloads(level: GeoLevel) -> Vec<Workload> {
    match level {
        GeoLevel::Block => block_workloads(),
        GeoLevel::Tract => tract_workloads(),
        _ => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(ws: &[Workload]) -> Vec<&str> {
        ws.iter().map(|w| w.name.as_str()).collect()
    }

    #[test]
    fn block_table_list() {
        let ws = builtin_workloads(GeoLevel::Block);
        assert_eq!(
            names(&ws),
            ["P1", "P6", "P7", "P9", "P11", "P12", "P12A", "P12B", "P12C", "P12D", "P12E", "P12F", "P12G", "P12H", "P12I"]
        );
        let p12 = ws.iter().find(|w| w.name == "P12").unwrap();
        assert_eq!(p12.cells.len(), 49);
        let p11 = ws.iter().find(|w| w.name == "P11").unwrap();
        assert!(p11.cells.iter().all(|c| c.predicate.age == Some((18, 115))));
        for w in &ws {
            w.validate().unwrap();
        }
    }

    #[test]
    fn tract_table_list() {
        let ws = builtin_workloads(GeoLevel::Tract);
        assert_eq!(ws.len(), 16);
        assert_eq!(ws[0].name, "PCT12");
        assert_eq!(ws[15].name, "PCT12O");
        assert!(ws.iter().all(|w| w.cells.len() == 209));
    }

    #[test]
    fn p1_is_one_total_cell() {
        let ws = builtin_workloads(GeoLevel::Block);
        assert_eq!(ws[0].cells, vec![cell("total", Predicate::all())]);
    }

    #[test]
    fn pct12a_and_pct12i_first_male_cells() {
        let ws = builtin_workloads(GeoLevel::Tract);
        let a = ws.iter().find(|w| w.name == "PCT12A").unwrap();
        let c = &a.cells[a.cell_index("male_0").unwrap()];
        assert_eq!(c.predicate, Predicate::all().race(RaceGroup::White).sex(Sex::Male).ages(0, 0));
        assert_eq!(c.predicate.hispanic, None);
        let i = ws.iter().find(|w| w.name == "PCT12I").unwrap();
        let c = &i.cells[i.cell_index("male_0").unwrap()];
        assert_eq!(
            c.predicate,
            Predicate::all().race(RaceGroup::White).hispanic(false).sex(Sex::Male).ages(0, 0)
        );
    }
}
