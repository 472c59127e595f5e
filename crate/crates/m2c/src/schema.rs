//! Morphological dimensions, features, and the feature-set algebra.
//!
//! A schema is a collection of dimensions (GENDER, NUMBER, CASE, ...), each
//! owning a disjoint set of feature symbols (FEM, SG, NOM, ...). Feature names
//! are globally unique within a schema so that templates and lexica can name a
//! feature without qualifying its dimension. Schemas are immutable after
//! construction; every extension produces a new value.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::OnceLock;

use indexmap::IndexMap;
use serde::de::{SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Name of the pseudo-dimension carrying surface transformations.
pub const TRANSFORM_DIMENSION: &str = "TRANSFORM";
/// Transformation feature: uppercase the first character of the surface form.
pub const TO_CAPITALIZE: &str = "TO_CAPITALIZE";

const CORE_SCHEMA_JSON: &str = include_str!("../data/core_schema.json");

/// Whether a dimension comes from the bundled core inventory or a user file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimensionOrigin {
    Core,
    Custom,
}

/// A morphological axis with mutually exclusive feature values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dimension {
    pub name: String,
    pub features: Vec<String>,
    pub origin: DimensionOrigin,
}

impl Dimension {
    /// Builds a custom dimension, validating symbol shapes and non-emptiness.
    pub fn custom<S: Into<String>>(name: S, features: Vec<String>) -> Result<Dimension> {
        let name = name.into();
        if !valid_symbol(&name) {
            return Err(Error::Schema(format!(
                "dimension name `{name}` is not an uppercase identifier"
            )));
        }
        if features.is_empty() {
            return Err(Error::Schema(format!(
                "dimension `{name}` declares no features"
            )));
        }
        let mut seen = BTreeSet::new();
        for f in &features {
            if !valid_symbol(f) {
                return Err(Error::Schema(format!(
                    "feature `{f}` of dimension `{name}` is not an uppercase identifier"
                )));
            }
            if !seen.insert(f.clone()) {
                return Err(Error::Schema(format!(
                    "feature `{f}` listed twice in dimension `{name}`"
                )));
            }
        }
        Ok(Dimension {
            name,
            features,
            origin: DimensionOrigin::Custom,
        })
    }
}

/// `true` for identifiers like `GENDER`, `TO_CAPITALIZE`, `CONS2`.
pub(crate) fn valid_symbol(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_uppercase() => {}
        _ => return false,
    }
    s.chars()
        .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
}

#[derive(Debug, Deserialize, Serialize)]
struct DimensionDoc {
    name: String,
    features: Vec<String>,
}

/// The full dimension inventory a template pack is validated against.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureSchema {
    dimensions: IndexMap<String, Dimension>,
    owner: BTreeMap<String, String>,
}

impl FeatureSchema {
    /// The bundled core inventory.
    pub fn core() -> &'static FeatureSchema {
        static CORE: OnceLock<FeatureSchema> = OnceLock::new();
        CORE.get_or_init(|| {
            let docs: Vec<DimensionDoc> =
                serde_json::from_str(CORE_SCHEMA_JSON).expect("bundled core schema parses");
            let mut schema = FeatureSchema::default();
            for doc in docs {
                let mut dim = Dimension::custom(doc.name, doc.features)
                    .expect("bundled core schema is well formed");
                dim.origin = DimensionOrigin::Core;
                schema.add(dim).expect("bundled core schema is consistent");
            }
            schema
        })
    }

    /// Parses a schema document and merges it on top of the core inventory.
    ///
    /// The document is a JSON list of `{name, features: [...]}` objects.
    pub fn load(document: &str) -> Result<FeatureSchema> {
        Self::core().clone().merged(document)
    }

    /// Merges one more schema document onto this schema. Later documents may
    /// only add dimensions, never redefine existing ones.
    pub fn merged(&self, document: &str) -> Result<FeatureSchema> {
        let docs: Vec<DimensionDoc> = serde_json::from_str(document)
            .map_err(|e| Error::Schema(format!("schema document is not valid JSON: {e}")))?;
        let mut next = self.clone();
        for doc in docs {
            next.add(Dimension::custom(doc.name, doc.features)?)?;
        }
        Ok(next)
    }

    /// Returns a new schema with `dim` added; `self` is left untouched.
    pub fn extend(&self, dim: Dimension) -> Result<FeatureSchema> {
        let mut next = self.clone();
        next.add(dim)?;
        Ok(next)
    }

    fn add(&mut self, dim: Dimension) -> Result<()> {
        if self.dimensions.contains_key(&dim.name) {
            return Err(Error::Schema(format!(
                "dimension `{}` is already defined",
                dim.name
            )));
        }
        for f in &dim.features {
            if let Some(existing) = self.owner.get(f) {
                return Err(Error::Schema(format!(
                    "feature `{f}` of dimension `{}` is already defined by dimension `{existing}`",
                    dim.name
                )));
            }
        }
        for f in &dim.features {
            self.owner.insert(f.clone(), dim.name.clone());
        }
        self.dimensions.insert(dim.name.clone(), dim);
        Ok(())
    }

    pub fn dimension(&self, name: &str) -> Option<&Dimension> {
        self.dimensions.get(name)
    }

    pub fn dimensions(&self) -> impl Iterator<Item = &Dimension> {
        self.dimensions.values()
    }

    /// The unique dimension owning `feature`.
    pub fn dimension_of(&self, feature: &str) -> Result<&str> {
        self.owner
            .get(feature)
            .map(String::as_str)
            .ok_or_else(|| Error::Schema(format!("unknown feature `{feature}`")))
    }

    pub fn contains_feature(&self, feature: &str) -> bool {
        self.owner.contains_key(feature)
    }

    pub fn contains_dimension(&self, name: &str) -> bool {
        self.dimensions.contains_key(name)
    }

    /// Builds a feature set from `names`, rejecting unknown features and two
    /// features of the same dimension. Insertion order is irrelevant.
    pub fn make_feature_set<I, S>(&self, names: I) -> Result<FeatureSet>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = FeatureSet::empty();
        for name in names {
            set.insert_checked(self, name.as_ref())?;
        }
        Ok(set)
    }

    /// Re-checks an already constructed set against this schema.
    pub fn check_feature_set(&self, set: &FeatureSet) -> Result<()> {
        let mut dims = BTreeSet::new();
        for f in set.iter() {
            let dim = self.dimension_of(f)?;
            if !dims.insert(dim) {
                return Err(Error::Schema(format!(
                    "feature set [{set}] holds two features of dimension `{dim}`"
                )));
            }
        }
        Ok(())
    }
}

/// An unordered, dimension-disjoint combination of features. Equality is
/// order-insensitive; `MASC.PL` and `PL.MASC` denote the same set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FeatureSet(BTreeSet<String>);

impl FeatureSet {
    pub fn empty() -> FeatureSet {
        FeatureSet(BTreeSet::new())
    }

    /// Parses a dot-joined key like `"NOM.PL"`; the empty string is the empty set.
    pub fn parse_key(schema: &FeatureSchema, key: &str) -> Result<FeatureSet> {
        if key.is_empty() {
            return Ok(FeatureSet::empty());
        }
        schema.make_feature_set(key.split('.'))
    }

    /// Canonical dot-joined form (sorted), `""` for the empty set.
    pub fn key(&self) -> String {
        self.0.iter().cloned().collect::<Vec<_>>().join(".")
    }

    pub fn contains(&self, feature: &str) -> bool {
        self.0.contains(feature)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn is_superset(&self, other: &FeatureSet) -> bool {
        self.0.is_superset(&other.0)
    }

    /// The feature this set carries for `dimension`, if any.
    pub fn feature_for<'a>(&'a self, schema: &FeatureSchema, dimension: &str) -> Option<&'a str> {
        self.iter()
            .find(|f| schema.dimension_of(f).ok() == Some(dimension))
    }

    /// Copy of this set without `feature`.
    pub fn without(&self, feature: &str) -> FeatureSet {
        let mut out = self.0.clone();
        out.remove(feature);
        FeatureSet(out)
    }

    pub(crate) fn insert_checked(&mut self, schema: &FeatureSchema, feature: &str) -> Result<()> {
        let dim = schema.dimension_of(feature)?;
        if let Some(existing) = self.feature_for(schema, dim) {
            if existing != feature {
                return Err(Error::Schema(format!(
                    "features `{existing}` and `{feature}` both belong to dimension `{dim}`"
                )));
            }
            return Ok(());
        }
        self.0.insert(feature.to_string());
        Ok(())
    }

    pub(crate) fn insert_unchecked(&mut self, feature: &str) {
        self.0.insert(feature.to_string());
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.key())
    }
}

impl<'a> IntoIterator for &'a FeatureSet {
    type Item = &'a String;
    type IntoIter = std::collections::btree_set::Iter<'a, String>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl Serialize for FeatureSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.0.len()))?;
        for f in &self.0 {
            seq.serialize_element(f)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for FeatureSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = FeatureSet;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a list of feature names")
            }
            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<FeatureSet, A::Error> {
                let mut set = BTreeSet::new();
                while let Some(s) = seq.next_element::<String>()? {
                    set.insert(s);
                }
                Ok(FeatureSet(set))
            }
        }
        deserializer.deserialize_seq(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_inventory_is_present() {
        let schema = FeatureSchema::load("[]").unwrap();
        let gender = schema.dimension("GENDER").unwrap();
        assert_eq!(gender.features, ["FEM", "MASC", "NEUT"]);
        let number = schema.dimension("NUMBER").unwrap();
        assert_eq!(number.features, ["SG", "DU", "PL"]);
        let case = schema.dimension("CASE").unwrap();
        for f in ["NOM", "ACC", "GEN", "INS"] {
            assert!(case.features.iter().any(|x| x == f), "missing {f}");
        }
        assert_eq!(schema.dimension_of("TO_CAPITALIZE").unwrap(), "TRANSFORM");
    }

    #[test]
    fn custom_dimension_resolves() {
        let schema = FeatureSchema::load(
            r#"[{"name": "STARTSWITH", "features": ["VOW", "CONS", "CONS2"]}]"#,
        )
        .unwrap();
        assert!(schema.contains_dimension("STARTSWITH"));
        assert_eq!(schema.dimension_of("VOW").unwrap(), "STARTSWITH");
        assert_eq!(
            schema.dimension("STARTSWITH").unwrap().origin,
            DimensionOrigin::Custom
        );
    }

    #[test]
    fn redeclared_feature_is_rejected() {
        let err = FeatureSchema::load(r#"[{"name": "GENDER2", "features": ["MASC"]}]"#)
            .unwrap_err();
        assert!(err.to_string().contains("MASC"));
    }

    #[test]
    fn duplicate_dimension_is_rejected() {
        let err =
            FeatureSchema::load(r#"[{"name": "GENDER", "features": ["X1"]}]"#).unwrap_err();
        assert!(err.to_string().contains("GENDER"));
    }

    #[test]
    fn empty_feature_list_is_rejected() {
        assert!(FeatureSchema::load(r#"[{"name": "EMPTYDIM", "features": []}]"#).is_err());
    }

    #[test]
    fn extend_adds_without_mutating() {
        let base = FeatureSchema::core().clone();
        let dim = Dimension::custom("ANIMACY", vec!["ANIM".into(), "INAN".into()]).unwrap();
        let extended = base.extend(dim).unwrap();
        assert!(extended.contains_dimension("ANIMACY"));
        assert!(!base.contains_dimension("ANIMACY"));
    }

    #[test]
    fn extend_order_is_irrelevant() {
        let a = Dimension::custom("ANIMACY", vec!["ANIM".into(), "INAN".into()]).unwrap();
        let b = Dimension::custom("MOTION", vec!["DET".into(), "INDET".into()]).unwrap();
        let ab = FeatureSchema::core()
            .extend(a.clone())
            .unwrap()
            .extend(b.clone())
            .unwrap();
        let ba = FeatureSchema::core().extend(b).unwrap().extend(a).unwrap();
        // Brute-force comparison over every dimension and feature assignment.
        let dims = |s: &FeatureSchema| {
            let mut v: Vec<(String, Vec<String>)> = s
                .dimensions()
                .map(|d| (d.name.clone(), d.features.clone()))
                .collect();
            v.sort();
            v
        };
        assert_eq!(dims(&ab), dims(&ba));
        for f in ["ANIM", "INAN", "DET", "INDET", "FEM"] {
            assert_eq!(ab.dimension_of(f).unwrap(), ba.dimension_of(f).unwrap());
        }
    }

    #[test]
    fn extend_is_monotone() {
        let base = FeatureSchema::core().clone();
        let features: Vec<String> = base
            .dimensions()
            .flat_map(|d| d.features.clone())
            .collect();
        let extended = base
            .extend(Dimension::custom("ANIMACY", vec!["ANIM".into()]).unwrap())
            .unwrap();
        for f in &features {
            assert_eq!(
                base.dimension_of(f).unwrap(),
                extended.dimension_of(f).unwrap()
            );
        }
    }

    #[test]
    fn feature_sets_are_commutative() {
        let schema = FeatureSchema::core();
        let a = schema.make_feature_set(["MASC", "PL"]).unwrap();
        let b = schema.make_feature_set(["PL", "MASC"]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.key(), "MASC.PL");
    }

    #[test]
    fn empty_feature_set() {
        let schema = FeatureSchema::core();
        let s = schema.make_feature_set(Vec::<String>::new()).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.key(), "");
    }

    #[test]
    fn same_dimension_twice_is_rejected() {
        let schema = FeatureSchema::core();
        let err = schema.make_feature_set(["MASC", "FEM"]).unwrap_err();
        assert!(err.to_string().contains("GENDER"));
    }

    #[test]
    fn dimension_of_unknown_feature() {
        let schema = FeatureSchema::core();
        assert_eq!(schema.dimension_of("FEM").unwrap(), "GENDER");
        assert!(schema.dimension_of("XYZ").is_err());
    }

    #[test]
    fn one_feature_per_dimension_invariant() {
        let schema = FeatureSchema::core();
        let s = schema.make_feature_set(["NOM", "PL", "FEM"]).unwrap();
        let dims: BTreeSet<&str> = s.iter().map(|f| schema.dimension_of(f).unwrap()).collect();
        assert_eq!(dims.len(), s.len());
    }

    #[test]
    fn key_roundtrip() {
        let schema = FeatureSchema::core();
        let s = FeatureSet::parse_key(schema, "PL.MASC").unwrap();
        assert_eq!(s.key(), "MASC.PL");
        assert_eq!(FeatureSet::parse_key(schema, "").unwrap(), FeatureSet::empty());
    }
}
