//! Small reference groupoids used throughout the test suites and the
//! randomized CLI probes.

use std::sync::Arc;

use num_rational::Rational64;

use crate::groupoid::{
    build_action_groupoid, build_equivalence, build_group, FiniteGroupoid, GroupTable,
};

fn uniform(ids: &[&str]) -> Vec<(String, Rational64)> {
    let n = ids.len() as i64;
    ids.iter().map(|id| (id.to_string(), Rational64::new(1, n))).collect()
}

fn one_block(ids: &[&str]) -> Vec<Vec<String>> {
    vec![ids.iter().map(|s| s.to_string()).collect()]
}

/// The trivial group on one unit.
pub fn trivial() -> Arc<FiniteGroupoid> {
    build_group(&GroupTable {
        elements: vec!["e".into()],
        identity: "e".into(),
        table: vec![vec!["e".into()]],
    })
    .unwrap()
}

pub fn z2_table() -> GroupTable {
    GroupTable {
        elements: vec!["e".into(), "g".into()],
        identity: "e".into(),
        table: vec![vec!["e".into(), "g".into()], vec!["g".into(), "e".into()]],
    }
}

/// Z/2 as a one-unit groupoid.
pub fn z2() -> Arc<FiniteGroupoid> {
    build_group(&z2_table()).unwrap()
}

/// Z/3 as a one-unit groupoid; elements e, g, h = g^2.
pub fn z3() -> Arc<FiniteGroupoid> {
    build_group(&GroupTable {
        elements: vec!["e".into(), "g".into(), "h".into()],
        identity: "e".into(),
        table: vec![
            vec!["e".into(), "g".into(), "h".into()],
            vec!["g".into(), "h".into(), "e".into()],
            vec!["h".into(), "e".into(), "g".into()],
        ],
    })
    .unwrap()
}

/// The symmetric group S3 with rotation r and reflection s.
/// Elements: e, r, rr, s, rs, rrs with s*r = rrs (dihedral relations).
pub fn s3() -> Arc<FiniteGroupoid> {
    // Permutation model on three points keeps the table honest.
    let perms: Vec<[usize; 3]> = vec![
        [0, 1, 2], // e
        [1, 2, 0], // r
        [2, 0, 1], // rr
        [1, 0, 2], // s
        [0, 2, 1], // rs
        [2, 1, 0], // rrs
    ];
    let names = ["e", "r", "rr", "s", "rs", "rrs"];
    let compose = |p: &[usize; 3], q: &[usize; 3]| -> [usize; 3] {
        // (p*q)(i) = p(q(i))
        [p[q[0]], p[q[1]], p[q[2]]]
    };
    let table = perms
        .iter()
        .map(|p| {
            perms
                .iter()
                .map(|q| {
                    let pq = compose(p, q);
                    names[perms.iter().position(|x| *x == pq).unwrap()].to_string()
                })
                .collect()
        })
        .collect();
    build_group(&GroupTable {
        elements: names.iter().map(|s| s.to_string()).collect(),
        identity: "e".into(),
        table,
    })
    .unwrap()
}

/// Full equivalence relation on {a, b}, uniform mass.
pub fn r2() -> Arc<FiniteGroupoid> {
    build_equivalence(&uniform(&["a", "b"]), &one_block(&["a", "b"])).unwrap()
}

/// Full equivalence relation on {a, b} with masses (2/3, 1/3).
pub fn r2w() -> Arc<FiniteGroupoid> {
    let units = vec![
        ("a".to_string(), Rational64::new(2, 3)),
        ("b".to_string(), Rational64::new(1, 3)),
    ];
    build_equivalence(&units, &one_block(&["a", "b"])).unwrap()
}

/// Full equivalence relation on {a, b, c}, uniform mass.
pub fn r3() -> Arc<FiniteGroupoid> {
    build_equivalence(&uniform(&["a", "b", "c"]), &one_block(&["a", "b", "c"])).unwrap()
}

fn swap_action() -> Vec<(String, String, String)> {
    vec![
        ("a".to_string(), "e".to_string(), "a".to_string()),
        ("b".to_string(), "e".to_string(), "b".to_string()),
        ("a".to_string(), "g".to_string(), "b".to_string()),
        ("b".to_string(), "g".to_string(), "a".to_string()),
    ]
}

/// Z/2 swapping {a, b}, uniform mass.
pub fn z2_swap() -> Arc<FiniteGroupoid> {
    build_action_groupoid(&z2_table(), &uniform(&["a", "b"]), &swap_action()).unwrap()
}

/// Z/2 swapping {a, b} with masses (2/3, 1/3); delta is nontrivial.
pub fn z2_swap_weighted() -> Arc<FiniteGroupoid> {
    let units = vec![
        ("a".to_string(), Rational64::new(2, 3)),
        ("b".to_string(), Rational64::new(1, 3)),
    ];
    build_action_groupoid(&z2_table(), &units, &swap_action()).unwrap()
}

/// Z/2 acting trivially on two units: two fixed points with isotropy Z2.
pub fn z2_two_fixed_points() -> Arc<FiniteGroupoid> {
    let action = vec![
        ("a".to_string(), "e".to_string(), "a".to_string()),
        ("b".to_string(), "e".to_string(), "b".to_string()),
        ("a".to_string(), "g".to_string(), "a".to_string()),
        ("b".to_string(), "g".to_string(), "b".to_string()),
    ];
    build_action_groupoid(&z2_table(), &uniform(&["a", "b"]), &action).unwrap()
}

/// The standard fixture family used by the acceptance suites.
pub fn all() -> Vec<Arc<FiniteGroupoid>> {
    vec![r2(), r2w(), r3(), z2(), z3(), s3(), z2_swap()]
}

/// Stable fixture name, keyed on shape; used in reports and test output.
pub fn name_of(g: &FiniteGroupoid) -> &'static str {
    for (name, fixture) in named() {
        if g.same_as(&fixture) {
            return name;
        }
    }
    "custom"
}

/// The fixture family with its standard names.
pub fn named() -> Vec<(&'static str, Arc<FiniteGroupoid>)> {
    vec![
        ("r2", r2()),
        ("r2w", r2w()),
        ("r3", r3()),
        ("z2", z2()),
        ("z3", z3()),
        ("s3", s3()),
        ("z2swap", z2_swap()),
    ]
}
