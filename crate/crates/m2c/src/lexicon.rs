//! Placeholder value inventories: invariant strings or inflection tables
//! keyed by feature sets, plus intrinsic features and optional numeric values.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{FeatureSchema, FeatureSet, TO_CAPITALIZE};

/// One lexicon value: a lemma (or canonical string) with its surface forms.
///
/// An invariant value is a single form keyed by the empty feature set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub id: String,
    /// Features the value carries inherently (a name's gender) rather than
    /// through inflection.
    pub intrinsic: FeatureSet,
    pub forms: IndexMap<FeatureSet, String>,
    /// Numeric value for entries consumed by functions such as `$diff`.
    pub numeric: Option<i64>,
}

impl LexiconEntry {
    /// An entry with a single form keyed by the empty set.
    pub fn invariant<S: Into<String>>(surface: S) -> LexiconEntry {
        let surface = surface.into();
        let mut forms = IndexMap::new();
        forms.insert(FeatureSet::empty(), surface.clone());
        LexiconEntry {
            id: surface,
            intrinsic: FeatureSet::empty(),
            forms,
            numeric: None,
        }
    }

    /// Surface form for `required`: an exact key match wins, otherwise the
    /// unique minimal superset of `required`. The TRANSFORM dimension is not
    /// part of table keys and is stripped from the request.
    pub fn lookup_form(&self, required: &FeatureSet) -> Result<&str> {
        self.lookup_form_keyed(required).map(|(_, s)| s)
    }

    /// Like [`lookup_form`](Self::lookup_form) but also reports which table
    /// key was chosen.
    pub fn lookup_form_keyed(&self, required: &FeatureSet) -> Result<(&FeatureSet, &str)> {
        let wanted = required.without(TO_CAPITALIZE);
        if let Some((k, v)) = self.forms.get_key_value(&wanted) {
            return Ok((k, v.as_str()));
        }
        let supersets: Vec<&FeatureSet> = self
            .forms
            .keys()
            .filter(|k| k.is_superset(&wanted))
            .collect();
        let minimal: Vec<&FeatureSet> = supersets
            .iter()
            .filter(|k| {
                !supersets
                    .iter()
                    .any(|other| *other != **k && k.is_superset(other))
            })
            .copied()
            .collect();
        match minimal.as_slice() {
            [] => Err(Error::MissingInflection {
                entry: self.id.clone(),
                required: wanted.key(),
            }),
            [one] => Ok((one, self.forms[*one].as_str())),
            many => Err(Error::AmbiguousInflection {
                entry: self.id.clone(),
                required: wanted.key(),
                candidates: many.len(),
            }),
        }
    }

    /// All (feature set, surface) pairs in the order they were declared.
    pub fn variants(&self) -> impl Iterator<Item = (&FeatureSet, &str)> {
        self.forms.iter().map(|(k, v)| (k, v.as_str()))
    }

    /// The entry's feature for `dimension`: the declared intrinsic feature if
    /// present, otherwise the feature every form key agrees on.
    pub fn intrinsic_feature<'a>(
        &'a self,
        schema: &FeatureSchema,
        dimension: &str,
    ) -> Result<&'a str> {
        if let Some(f) = self.intrinsic.feature_for(schema, dimension) {
            return Ok(f);
        }
        let mut agreed: Option<&str> = None;
        for key in self.forms.keys() {
            match key.feature_for(schema, dimension) {
                Some(f) if agreed.is_none() || agreed == Some(f) => agreed = Some(f),
                _ => {
                    return Err(Error::UnresolvedDimension {
                        entry: self.id.clone(),
                        dimension: dimension.to_string(),
                    })
                }
            }
        }
        agreed.ok_or_else(|| Error::UnresolvedDimension {
            entry: self.id.clone(),
            dimension: dimension.to_string(),
        })
    }

    fn check(&self, schema: &FeatureSchema) -> Result<()> {
        if self.forms.is_empty() {
            return Err(Error::Lexicon(format!("entry `{}` has no forms", self.id)));
        }
        schema.check_feature_set(&self.intrinsic).map_err(|e| {
            Error::Lexicon(format!("entry `{}`: {e}", self.id))
        })?;
        for key in self.forms.keys() {
            schema
                .check_feature_set(key)
                .map_err(|e| Error::Lexicon(format!("entry `{}`: {e}", self.id)))?;
            for f in key.iter() {
                let dim = schema.dimension_of(f)?;
                if let Some(g) = self.intrinsic.feature_for(schema, dim) {
                    if g != f {
                        return Err(Error::Lexicon(format!(
                            "entry `{}`: form key [{key}] conflicts with intrinsic `{g}` on dimension `{dim}`",
                            self.id
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Placeholder type name → ordered value list. List order is canonical: it
/// drives deduplication, multiset canonicalization, and sampling.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Lexicon {
    types: IndexMap<String, Vec<LexiconEntry>>,
}

#[derive(Deserialize, Serialize)]
#[serde(untagged)]
enum EntryDoc {
    Plain(String),
    Table(TableDoc),
}

#[derive(Deserialize, Serialize)]
struct TableDoc {
    id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    intrinsic: Vec<String>,
    forms: IndexMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    numeric: Option<i64>,
}

impl Lexicon {
    /// Parses a lexicon document against `schema`.
    ///
    /// The document maps type names to entry lists; an entry is either a bare
    /// string (invariant value) or `{id, intrinsic?, forms, numeric?}` where
    /// form keys are dot-joined, order-insensitive feature combinations.
    pub fn load(document: &str, schema: &FeatureSchema) -> Result<Lexicon> {
        let raw: IndexMap<String, Vec<EntryDoc>> = serde_json::from_str(document)
            .map_err(|e| Error::Lexicon(format!("lexicon document is not valid JSON: {e}")))?;
        let mut types = IndexMap::new();
        for (type_name, docs) in raw {
            if docs.is_empty() {
                return Err(Error::Lexicon(format!(
                    "type `{type_name}` has an empty value list"
                )));
            }
            let mut entries: Vec<LexiconEntry> = Vec::with_capacity(docs.len());
            for doc in docs {
                let entry = match doc {
                    EntryDoc::Plain(s) => LexiconEntry::invariant(s),
                    EntryDoc::Table(t) => {
                        let mut forms = IndexMap::new();
                        for (key, surface) in t.forms {
                            let set = FeatureSet::parse_key(schema, &key).map_err(|e| {
                                Error::Lexicon(format!("entry `{}`: {e}", t.id))
                            })?;
                            if forms.insert(set.clone(), surface).is_some() {
                                return Err(Error::Lexicon(format!(
                                    "entry `{}`: duplicate form key [{}]",
                                    t.id,
                                    set.key()
                                )));
                            }
                        }
                        LexiconEntry {
                            intrinsic: schema.make_feature_set(&t.intrinsic).map_err(|e| {
                                Error::Lexicon(format!("entry `{}`: {e}", t.id))
                            })?,
                            id: t.id,
                            forms,
                            numeric: t.numeric,
                        }
                    }
                };
                if entries.iter().any(|e| e.id == entry.id) {
                    return Err(Error::Lexicon(format!(
                        "type `{type_name}`: duplicate entry id `{}`",
                        entry.id
                    )));
                }
                entry.check(schema)?;
                entries.push(entry);
            }
            types.insert(type_name, entries);
        }
        Ok(Lexicon { types })
    }

    /// Serializes back to the document format, preserving canonical order.
    pub fn to_document(&self) -> Result<String> {
        let mut raw: IndexMap<&str, Vec<EntryDoc>> = IndexMap::new();
        for (type_name, entries) in &self.types {
            let docs = entries
                .iter()
                .map(|e| {
                    let trivially_plain = e.numeric.is_none()
                        && e.intrinsic.is_empty()
                        && e.forms.len() == 1
                        && e.forms.get_index(0).map(|(k, v)| k.is_empty() && *v == e.id)
                            == Some(true);
                    if trivially_plain {
                        EntryDoc::Plain(e.id.clone())
                    } else {
                        EntryDoc::Table(TableDoc {
                            id: e.id.clone(),
                            intrinsic: e.intrinsic.iter().map(str::to_string).collect(),
                            forms: e
                                .forms
                                .iter()
                                .map(|(k, v)| (k.key(), v.clone()))
                                .collect(),
                            numeric: e.numeric,
                        })
                    }
                })
                .collect();
            raw.insert(type_name, docs);
        }
        Ok(serde_json::to_string_pretty(&raw)?)
    }

    pub fn types(&self) -> impl Iterator<Item = &str> {
        self.types.keys().map(String::as_str)
    }

    pub fn contains_type(&self, type_name: &str) -> bool {
        self.types.contains_key(type_name)
    }

    pub fn entries(&self, type_name: &str) -> Result<&[LexiconEntry]> {
        self.types
            .get(type_name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Lexicon(format!("unknown placeholder type `{type_name}`")))
    }

    pub fn entry(&self, type_name: &str, id: &str) -> Result<&LexiconEntry> {
        self.entries(type_name)?
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| {
                Error::Lexicon(format!("type `{type_name}` has no entry `{id}`"))
            })
    }

    /// Every entry of every type, for numeric scans.
    pub fn all_entries(&self) -> impl Iterator<Item = (&str, &LexiconEntry)> {
        self.types
            .iter()
            .flat_map(|(t, es)| es.iter().map(move |e| (t.as_str(), e)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> &'static FeatureSchema {
        FeatureSchema::core()
    }

    #[test]
    fn plain_strings_become_invariant_entries() {
        let lex = Lexicon::load(r#"{"first_name": ["Michael", "John"]}"#, schema()).unwrap();
        let entries = lex.entries("first_name").unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].lookup_form(&FeatureSet::empty()).unwrap(), "Michael");
        assert_eq!(entries[0].variants().count(), 1);
    }

    #[test]
    fn inflection_tables_load() {
        let lex = Lexicon::load(
            r#"{"fruit": [{"id": "apple", "forms": {"SG": "apple", "PL": "apples"}}]}"#,
            schema(),
        )
        .unwrap();
        let apple = lex.entry("fruit", "apple").unwrap();
        assert_eq!(apple.forms.len(), 2);
        let sg = schema().make_feature_set(["SG"]).unwrap();
        assert_eq!(apple.lookup_form(&sg).unwrap(), "apple");
        let pairs: Vec<(String, &str)> =
            apple.variants().map(|(k, s)| (k.key(), s)).collect();
        assert_eq!(pairs, [("SG".to_string(), "apple"), ("PL".to_string(), "apples")]);
    }

    #[test]
    fn duplicate_form_key_is_rejected() {
        let err = Lexicon::load(
            r#"{"x": [{"id": "a", "forms": {"MASC.SG": "a", "SG.MASC": "b"}}]}"#,
            schema(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate form key"));
    }

    #[test]
    fn empty_type_list_is_rejected() {
        assert!(Lexicon::load(r#"{"x": []}"#, schema()).is_err());
    }

    #[test]
    fn unknown_feature_is_rejected() {
        let err = Lexicon::load(
            r#"{"x": [{"id": "a", "forms": {"BOGUS": "a"}}]}"#,
            schema(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("BOGUS"));
    }

    #[test]
    fn minimal_superset_lookup() {
        let custom = schema()
            .merged(r#"[{"name": "STARTSWITH", "features": ["VOW", "CONS", "CONS2"]}]"#)
            .unwrap();
        let lex = Lexicon::load(
            r#"{"ART": [{"id": "def", "forms": {
                "DEF.SG.MASC.CONS": "il",
                "DEF.SG.MASC.VOW": "l'",
                "DEF.SG.MASC.CONS2": "lo"
            }}]}"#,
            &custom,
        )
        .unwrap();
        let art = lex.entry("ART", "def").unwrap();
        let req = custom
            .make_feature_set(["DEF", "SG", "MASC", "CONS2"])
            .unwrap();
        assert_eq!(art.lookup_form(&req).unwrap(), "lo");
        // A request that is a strict subset of several keys is ambiguous.
        let loose = custom.make_feature_set(["DEF", "SG", "MASC"]).unwrap();
        assert!(matches!(
            art.lookup_form(&loose),
            Err(Error::AmbiguousInflection { .. })
        ));
    }

    #[test]
    fn missing_inflection() {
        let lex = Lexicon::load(
            r#"{"fruit": [{"id": "apple", "forms": {"SG": "apple", "PL": "apples"}}]}"#,
            schema(),
        )
        .unwrap();
        let apple = lex.entry("fruit", "apple").unwrap();
        let gen = schema().make_feature_set(["GEN"]).unwrap();
        assert!(matches!(
            apple.lookup_form(&gen),
            Err(Error::MissingInflection { .. })
        ));
    }

    #[test]
    fn intrinsic_feature_sources() {
        let lex = Lexicon::load(
            r#"{
                "name": [{"id": "Juliette", "intrinsic": ["FEM"], "forms": {"": "Juliette"}}],
                "noun": [{"id": "kuharka", "forms": {"NOM.SG.FEM": "kuharka", "INS.SG.FEM": "kuharkou"}}],
                "plain": ["apple"]
            }"#,
            schema(),
        )
        .unwrap();
        let juliette = lex.entry("name", "Juliette").unwrap();
        assert_eq!(juliette.intrinsic_feature(schema(), "GENDER").unwrap(), "FEM");
        // No declared intrinsic, but every form key agrees on FEM.
        let noun = lex.entry("noun", "kuharka").unwrap();
        assert_eq!(noun.intrinsic_feature(schema(), "GENDER").unwrap(), "FEM");
        assert!(noun.intrinsic_feature(schema(), "CASE").is_err());
        let plain = lex.entries("plain").unwrap();
        assert!(matches!(
            plain[0].intrinsic_feature(schema(), "GENDER"),
            Err(Error::UnresolvedDimension { .. })
        ));
    }

    #[test]
    fn intrinsic_conflict_is_rejected() {
        let err = Lexicon::load(
            r#"{"x": [{"id": "a", "intrinsic": ["FEM"], "forms": {"MASC": "a"}}]}"#,
            schema(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("conflict"));
    }

    #[test]
    fn duplicate_entry_id_is_rejected() {
        let err = Lexicon::load(r#"{"x": ["a", "a"]}"#, schema()).unwrap_err();
        assert!(err.to_string().contains("duplicate entry id"));
    }

    #[test]
    fn exact_match_beats_superset() {
        let lex = Lexicon::load(
            r#"{"job": [{"id": "vedec", "forms": {"INS.PL": "vedcami", "INS.SG.MASC": "vedcom"}}]}"#,
            schema(),
        )
        .unwrap();
        let vedec = lex.entry("job", "vedec").unwrap();
        let req = schema().make_feature_set(["INS", "PL"]).unwrap();
        assert_eq!(vedec.lookup_form(&req).unwrap(), "vedcami");
    }

    #[test]
    fn document_roundtrip_is_identity() {
        let doc = r#"{
            "first_name": ["Michael", "John"],
            "fruit": [
                {"id": "apple", "forms": {"SG": "apple", "PL": "apples"}},
                {"id": "two", "intrinsic": ["PL"], "forms": {"MASC": "dva", "FEM": "dve"}, "numeric": 2}
            ]
        }"#;
        let first = Lexicon::load(doc, schema()).unwrap();
        let emitted = first.to_document().unwrap();
        let second = Lexicon::load(&emitted, schema()).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn lookup_agrees_with_variants() {
        let lex = Lexicon::load(
            r#"{"fruit": [{"id": "apple", "forms": {"SG": "apple", "PL": "apples"}}]}"#,
            schema(),
        )
        .unwrap();
        let apple = lex.entry("fruit", "apple").unwrap();
        for (k, s) in apple.variants() {
            assert_eq!(apple.lookup_form(k).unwrap(), s);
        }
    }
}
