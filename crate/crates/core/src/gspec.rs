//! GSPEC file format and the JSON wire formats for arrow functions and
//! treeings.
//!
//! A GSPEC document is a UTF-8 JSON object in one of four forms: the
//! explicit table form with `units`, `arrows`, `compose`, `inverse` and
//! `unit_arrows`, or one of the generator forms `{"group": ...}`,
//! `{"equivalence": ...}`, `{"action": ...}`. Masses are strings holding a
//! rational such as `"1/3"`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::ArrowFunction;
use crate::groupoid::{
    build_action_groupoid, build_equivalence, build_group, parse_mass, BuildError, ConstructError,
    FiniteGroupoid, GroupTable, GroupoidSpec,
};

#[derive(Debug, Error)]
pub enum GspecError {
    /// Unreadable or syntactically malformed input; maps to usage exit 2.
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Malformed(String),
    /// Well-formed input describing an invalid groupoid; maps to check
    /// failure exit 1.
    #[error(transparent)]
    Invalid(#[from] BuildError),
    #[error(transparent)]
    Construct(#[from] ConstructError),
}

impl GspecError {
    /// True when the input could not even be parsed (as opposed to parsing
    /// fine and failing the axioms).
    pub fn is_parse_error(&self) -> bool {
        matches!(self, GspecError::Io { .. } | GspecError::Json(_) | GspecError::Malformed(_))
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct RawUnit {
    id: String,
    mass: String,
}

#[derive(Debug, Deserialize, Serialize)]
struct RawArrow {
    id: String,
    src: String,
    dst: String,
}

#[derive(Debug, Deserialize)]
struct RawGroup {
    elements: Vec<String>,
    identity: String,
    table: Vec<Vec<String>>,
}

#[derive(Debug, Deserialize)]
struct RawEquivalence {
    units: Vec<RawUnit>,
    blocks: Vec<Vec<String>>,
}

#[derive(Debug, Deserialize)]
struct RawAction {
    group: RawGroup,
    units: Vec<RawUnit>,
    /// triples (x, t, x.t)
    action: Vec<(String, String, String)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GspecDoc {
    group: Option<RawGroup>,
    equivalence: Option<RawEquivalence>,
    action: Option<RawAction>,
    units: Option<Vec<RawUnit>>,
    arrows: Option<Vec<RawArrow>>,
    compose: Option<Vec<(String, String, String)>>,
    inverse: Option<Vec<(String, String)>>,
    unit_arrows: Option<BTreeMap<String, String>>,
}

fn units_of(raw: &[RawUnit]) -> Result<Vec<(String, Rational64)>, GspecError> {
    raw.iter()
        .map(|u| {
            parse_mass(&u.mass)
                .map(|m| (u.id.clone(), m))
                .ok_or_else(|| GspecError::Malformed(format!("unit {}: bad mass {:?}", u.id, u.mass)))
        })
        .collect()
}

fn table_of(raw: &RawGroup) -> GroupTable {
    GroupTable {
        elements: raw.elements.clone(),
        identity: raw.identity.clone(),
        table: raw.table.clone(),
    }
}

/// Parse a GSPEC document from a JSON string.
pub fn parse_groupoid(text: &str) -> Result<Arc<FiniteGroupoid>, GspecError> {
    let doc: GspecDoc = serde_json::from_str(text)?;
    let forms = [
        doc.group.is_some(),
        doc.equivalence.is_some(),
        doc.action.is_some(),
        doc.units.is_some() || doc.arrows.is_some(),
    ];
    if forms.iter().filter(|&&b| b).count() != 1 {
        return Err(GspecError::Malformed(
            "expected exactly one of: explicit tables, \"group\", \"equivalence\", \"action\""
                .into(),
        ));
    }

    if let Some(group) = &doc.group {
        return Ok(build_group(&table_of(group))?);
    }
    if let Some(eq) = &doc.equivalence {
        return Ok(build_equivalence(&units_of(&eq.units)?, &eq.blocks)?);
    }
    if let Some(act) = &doc.action {
        return Ok(build_action_groupoid(&table_of(&act.group), &units_of(&act.units)?, &act.action)?);
    }

    let units = doc.units.ok_or_else(|| GspecError::Malformed("missing \"units\"".into()))?;
    let arrows = doc.arrows.ok_or_else(|| GspecError::Malformed("missing \"arrows\"".into()))?;
    let spec = GroupoidSpec {
        units: units_of(&units)?,
        arrows: arrows.into_iter().map(|a| (a.id, a.src, a.dst)).collect(),
        compose: doc.compose.unwrap_or_default(),
        inverse: doc.inverse.unwrap_or_default(),
        unit_arrows: doc.unit_arrows.unwrap_or_default().into_iter().collect(),
    };
    Ok(spec.build()?)
}

/// Load a GSPEC file.
pub fn load_groupoid(path: &Path) -> Result<Arc<FiniteGroupoid>, GspecError> {
    let text = std::fs::read_to_string(path).map_err(|source| GspecError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_groupoid(&text)
}

/// Serialize a groupoid in the explicit GSPEC form.
pub fn groupoid_to_json(g: &FiniteGroupoid) -> String {
    let spec = g.to_spec();
    let doc = serde_json::json!({
        "units": spec.units.iter().map(|(id, m)| serde_json::json!({"id": id, "mass": m.to_string()})).collect::<Vec<_>>(),
        "arrows": spec.arrows.iter().map(|(id, s, r)| serde_json::json!({"id": id, "src": s, "dst": r})).collect::<Vec<_>>(),
        "compose": spec.compose,
        "inverse": spec.inverse,
        "unit_arrows": spec.unit_arrows.iter().cloned().collect::<BTreeMap<String, String>>(),
    });
    serde_json::to_string_pretty(&doc).expect("serializable")
}

#[derive(Debug, Default, Deserialize, Serialize)]
struct FunctionDoc {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    re: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    im: BTreeMap<String, f64>,
}

/// Parse an arrow function from its JSON object; absent arrows are zero.
pub fn parse_function(
    text: &str,
    g: &Arc<FiniteGroupoid>,
) -> Result<ArrowFunction, GspecError> {
    let doc: FunctionDoc = serde_json::from_str(text)?;
    let mut f = ArrowFunction::zero(g);
    for (part, values) in [(0, &doc.re), (1, &doc.im)] {
        for (id, &v) in values {
            let a = g
                .arrow_ix(id)
                .ok_or_else(|| GspecError::Malformed(format!("unknown arrow id {id:?}")))?;
            let old = f.value(a);
            f.set(
                a,
                if part == 0 {
                    Complex64::new(v, old.im)
                } else {
                    Complex64::new(old.re, v)
                },
            );
        }
    }
    Ok(f)
}

pub fn load_function(path: &Path, g: &Arc<FiniteGroupoid>) -> Result<ArrowFunction, GspecError> {
    let text = std::fs::read_to_string(path).map_err(|source| GspecError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_function(&text, g)
}

/// Serialize an arrow function; zero entries are omitted.
pub fn function_to_json(f: &ArrowFunction) -> String {
    let g = f.groupoid();
    let mut doc = FunctionDoc::default();
    for a in g.arrows() {
        let v = f.value(a);
        if v.re != 0.0 {
            doc.re.insert(g.arrow_id(a).to_string(), v.re);
        }
        if v.im != 0.0 {
            doc.im.insert(g.arrow_id(a).to_string(), v.im);
        }
    }
    serde_json::to_string_pretty(&doc).expect("serializable")
}

/// Parse a treeing file: a JSON array of arrow ids.
pub fn parse_arrow_ids(text: &str) -> Result<Vec<String>, GspecError> {
    Ok(serde_json::from_str(text)?)
}

pub fn load_arrow_ids(path: &Path) -> Result<Vec<String>, GspecError> {
    let text = std::fs::read_to_string(path).map_err(|source| GspecError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_arrow_ids(&text)
}
