//! Lexer/parser for the template string syntax.
//!
//! Syntax summary:
//!
//! ```text
//! {name}                          placeholder
//! {job2.NOM.<name2.NUMBER.GENDER>} duplicate index, static feature, copy
//! {is:subj.SG|are:subj.PL}        conditional literal with guards
//! {fruit1.<ACC:n3.SG|NOM>}        conditional feature with bare default
//! {job2.SG.TO_CAPITALIZE}         surface transformation
//! {$diff(number1,number3).FEM}    function call with trailing specifiers
//! {{ and }}                       literal braces
//! ```

use crate::error::{Error, Result};
use crate::schema::{valid_symbol, TO_CAPITALIZE};

use super::ast::{
    ConditionalNode, FeatureSpec, FunctionNode, Guard, PlaceholderName, PlaceholderNode, Segment,
    TemplateAst,
};

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        message: message.into(),
    }
}

/// Parses one template string into a lossless AST.
pub fn parse_template(text: &str) -> Result<TemplateAst> {
    let bytes = text.as_bytes();
    let mut segments = Vec::new();
    let mut literal = String::new();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'{' if bytes.get(i + 1) == Some(&b'{') => {
                literal.push('{');
                i += 2;
            }
            b'}' if bytes.get(i + 1) == Some(&b'}') => {
                literal.push('}');
                i += 2;
            }
            b'}' => return Err(parse_err(i, "unbalanced `}`")),
            b'{' => {
                let close = find_close(bytes, i)?;
                let body = &text[i + 1..close];
                if body.trim().is_empty() {
                    return Err(parse_err(i, "empty placeholder"));
                }
                if !literal.is_empty() {
                    segments.push(Segment::Literal(std::mem::take(&mut literal)));
                }
                let raw = text[i..=close].to_string();
                segments.push(parse_body(body, raw, i)?);
                i = close + 1;
            }
            _ => {
                // Advance one UTF-8 scalar.
                let ch = text[i..].chars().next().expect("in-bounds char");
                literal.push(ch);
                i += ch.len_utf8();
            }
        }
    }
    if !literal.is_empty() {
        segments.push(Segment::Literal(literal));
    }
    Ok(TemplateAst { segments })
}

fn find_close(bytes: &[u8], open: usize) -> Result<usize> {
    let mut j = open + 1;
    while j < bytes.len() {
        match bytes[j] {
            b'}' => return Ok(j),
            b'{' => return Err(parse_err(j, "nested `{` inside placeholder")),
            _ => j += 1,
        }
    }
    Err(parse_err(open, "unbalanced `{`"))
}

fn parse_body(body: &str, raw: String, offset: usize) -> Result<Segment> {
    if let Some(rest) = body.strip_prefix('$') {
        return parse_function(rest, raw, offset).map(Segment::Function);
    }
    if has_top_level(body, ':') {
        return parse_conditional_literal(body, raw, offset).map(Segment::Conditional);
    }
    let (name, specs) = parse_feature_path(body)
        .map_err(|e| annotate_offset(e, offset))?;
    Ok(Segment::Placeholder(PlaceholderNode { name, specs, raw }))
}

fn annotate_offset(e: Error, offset: usize) -> Error {
    match e {
        Error::Parse {
            offset: inner,
            message,
        } => Error::Parse {
            offset: offset + 1 + inner,
            message,
        },
        other => other,
    }
}

/// Splits `s` on `sep` at angle-bracket and parenthesis depth zero.
fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '<' | '(' => depth += 1,
            '>' | ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

fn has_top_level(s: &str, sep: char) -> bool {
    let mut depth = 0i32;
    for c in s.chars() {
        match c {
            '<' | '(' => depth += 1,
            '>' | ')' => depth -= 1,
            c if c == sep && depth == 0 => return true,
            _ => {}
        }
    }
    false
}

/// Parses the interior of a placeholder: base name plus dot-separated
/// specifiers. Exposed because feature paths also appear after function calls.
pub fn parse_feature_path(body: &str) -> Result<(PlaceholderName, Vec<FeatureSpec>)> {
    let parts = split_top_level(body, '.');
    let name = PlaceholderName::parse(parts[0]).map_err(|m| parse_err(0, m))?;
    let specs = parse_specs(&parts[1..])?;
    Ok((name, specs))
}

fn parse_specs(parts: &[&str]) -> Result<Vec<FeatureSpec>> {
    let mut specs = Vec::with_capacity(parts.len());
    for part in parts {
        specs.push(parse_spec(part)?);
    }
    Ok(specs)
}

fn parse_spec(part: &str) -> Result<FeatureSpec> {
    if let Some(inner) = part.strip_prefix('<') {
        let inner = inner
            .strip_suffix('>')
            .ok_or_else(|| parse_err(0, format!("unterminated `<` in `{part}`")))?;
        if inner.contains(':') || inner.contains('|') {
            return parse_conditional_feature(inner);
        }
        // <ref.D1.D2...>
        let pieces: Vec<&str> = inner.split('.').collect();
        if pieces.len() < 2 {
            return Err(parse_err(
                0,
                format!("copy `<{inner}>` names no dimension"),
            ));
        }
        let reference = PlaceholderName::parse(pieces[0]).map_err(|m| parse_err(0, m))?;
        let dimensions: Vec<String> = pieces[1..].iter().map(|s| s.to_string()).collect();
        for d in &dimensions {
            if !valid_symbol(d) {
                return Err(parse_err(
                    0,
                    format!("`{d}` in `<{inner}>` is not a dimension name"),
                ));
            }
        }
        return Ok(FeatureSpec::Copy {
            reference,
            dimensions,
        });
    }
    if part == TO_CAPITALIZE {
        return Ok(FeatureSpec::Transform);
    }
    if valid_symbol(part) {
        return Ok(FeatureSpec::Static(part.to_string()));
    }
    Err(parse_err(0, format!("unknown segment shape `{part}`")))
}

/// `F1:ref.G1|F2:ref2.G2|DFLT` inside angle brackets; outputs are features.
fn parse_conditional_feature(inner: &str) -> Result<FeatureSpec> {
    let mut guards = Vec::new();
    let mut default = None;
    let alternatives: Vec<&str> = inner.split('|').collect();
    for (i, alt) in alternatives.iter().enumerate() {
        match alt.rfind(':') {
            Some(pos) => {
                if default.is_some() {
                    return Err(parse_err(0, format!("guard `{alt}` after default")));
                }
                let output = &alt[..pos];
                if !valid_symbol(output) {
                    return Err(parse_err(
                        0,
                        format!("conditional feature output `{output}` is not a feature"),
                    ));
                }
                guards.push(parse_guard(output, &alt[pos + 1..])?);
            }
            None => {
                if i != alternatives.len() - 1 {
                    return Err(parse_err(0, format!("default `{alt}` must come last")));
                }
                if !valid_symbol(alt) {
                    return Err(parse_err(
                        0,
                        format!("default `{alt}` is not a feature"),
                    ));
                }
                default = Some(alt.to_string());
            }
        }
    }
    if guards.is_empty() {
        return Err(parse_err(0, format!("`<{inner}>` has no guard")));
    }
    Ok(FeatureSpec::Conditional { guards, default })
}

fn parse_guard(output: &str, test: &str) -> Result<Guard> {
    let (ref_raw, feature) = test
        .rsplit_once('.')
        .ok_or_else(|| parse_err(0, format!("guard test `{test}` is not `ref.FEATURE`")))?;
    if !valid_symbol(feature) {
        return Err(parse_err(
            0,
            format!("guard feature `{feature}` is not a feature symbol"),
        ));
    }
    let reference = PlaceholderName::parse(ref_raw).map_err(|m| parse_err(0, m))?;
    Ok(Guard {
        output: output.to_string(),
        reference,
        feature,
    })
}

/// `out1:ref.F1|out2:ref2.F2|default text` at placeholder top level; outputs
/// are arbitrary literal text.
fn parse_conditional_literal(body: &str, raw: String, offset: usize) -> Result<ConditionalNode> {
    let mut guards = Vec::new();
    let mut default = None;
    let alternatives = split_top_level(body, '|');
    let count = alternatives.len();
    for (i, alt) in alternatives.into_iter().enumerate() {
        match alt.rfind(':') {
            Some(pos) => {
                if default.is_some() {
                    return Err(parse_err(offset, format!("guard `{alt}` after default")));
                }
                guards.push(
                    parse_guard(&alt[..pos], &alt[pos + 1..])
                        .map_err(|e| annotate_offset(e, offset))?,
                );
            }
            None => {
                if i != count - 1 {
                    return Err(parse_err(
                        offset,
                        format!("default `{alt}` must be the last alternative"),
                    ));
                }
                default = Some(alt.to_string());
            }
        }
    }
    if guards.is_empty() {
        return Err(parse_err(offset, "conditional has no guard"));
    }
    Ok(ConditionalNode {
        guards,
        default,
        raw,
    })
}

fn parse_function(rest: &str, raw: String, offset: usize) -> Result<FunctionNode> {
    let open = rest
        .find('(')
        .ok_or_else(|| parse_err(offset, "function call without `(`"))?;
    let name = &rest[..open];
    if name.is_empty()
        || !name
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
    {
        return Err(parse_err(offset, format!("bad function name `{name}`")));
    }
    let close = rest
        .find(')')
        .ok_or_else(|| parse_err(offset, "function call without `)`"))?;
    if close < open {
        return Err(parse_err(offset, "function call without `(`"));
    }
    let mut args = Vec::new();
    for piece in rest[open + 1..close].split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            return Err(parse_err(offset, "empty function argument"));
        }
        args.push(PlaceholderName::parse(piece).map_err(|m| parse_err(offset, m))?);
    }
    let trailer = &rest[close + 1..];
    let specs = if trailer.is_empty() {
        Vec::new()
    } else if let Some(path) = trailer.strip_prefix('.') {
        parse_specs(&split_top_level(path, '.'))
            .map_err(|e| annotate_offset(e, offset))?
    } else {
        return Err(parse_err(
            offset,
            format!("unexpected `{trailer}` after function call"),
        ));
    };
    Ok(FunctionNode {
        name: name.to_string(),
        args,
        specs,
        raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_only() {
        let ast = parse_template("Hello.").unwrap();
        assert_eq!(ast.segments, [Segment::Literal("Hello.".into())]);
    }

    #[test]
    fn placeholder_with_copy() {
        let ast = parse_template("{first_name} est {adj.<first_name.GENDER>}").unwrap();
        assert_eq!(ast.segments.len(), 3);
        match &ast.segments[0] {
            Segment::Placeholder(n) => {
                assert_eq!(n.name.base, "first_name");
                assert_eq!(n.name.index, 1);
                assert!(n.specs.is_empty());
            }
            other => panic!("unexpected segment {other:?}"),
        }
        assert_eq!(ast.segments[1], Segment::Literal(" est ".into()));
        match &ast.segments[2] {
            Segment::Placeholder(n) => {
                assert_eq!(n.name.base, "adj");
                assert_eq!(
                    n.specs,
                    [FeatureSpec::Copy {
                        reference: PlaceholderName::parse("first_name").unwrap(),
                        dimensions: vec!["GENDER".into()],
                    }]
                );
            }
            other => panic!("unexpected segment {other:?}"),
        }
    }

    #[test]
    fn conditional_literal() {
        let ast = parse_template("{is:first_name.SG|are:first_name.PL}").unwrap();
        match &ast.segments[0] {
            Segment::Conditional(n) => {
                assert_eq!(n.guards.len(), 2);
                assert_eq!(n.guards[0].output, "is");
                assert_eq!(n.guards[0].feature, "SG");
                assert_eq!(n.guards[1].output, "are");
                assert!(n.default.is_none());
            }
            other => panic!("unexpected segment {other:?}"),
        }
    }

    #[test]
    fn feature_path_with_conditional_feature_and_copy() {
        let (name, specs) =
            parse_feature_path("fruit1.<ACC:number3.SG|NOM>.<number3.NUMBER>").unwrap();
        assert_eq!(name.base, "fruit");
        assert_eq!(name.index, 1);
        assert_eq!(specs.len(), 2);
        match &specs[0] {
            FeatureSpec::Conditional { guards, default } => {
                assert_eq!(guards.len(), 1);
                assert_eq!(guards[0].output, "ACC");
                assert_eq!(guards[0].reference.raw, "number3");
                assert_eq!(guards[0].feature, "SG");
                assert_eq!(default.as_deref(), Some("NOM"));
            }
            other => panic!("unexpected spec {other:?}"),
        }
        match &specs[1] {
            FeatureSpec::Copy {
                reference,
                dimensions,
            } => {
                assert_eq!(reference.raw, "number3");
                assert_eq!(dimensions, &["NUMBER"]);
            }
            other => panic!("unexpected spec {other:?}"),
        }
    }

    #[test]
    fn feature_path_with_transform() {
        let (name, specs) = parse_feature_path("job2.SG.TO_CAPITALIZE").unwrap();
        assert_eq!(name.base, "job");
        assert_eq!(name.index, 2);
        assert_eq!(
            specs,
            [
                FeatureSpec::Static("SG".into()),
                FeatureSpec::Transform
            ]
        );
    }

    #[test]
    fn bare_name_is_index_one() {
        let (name, specs) = parse_feature_path("name").unwrap();
        assert_eq!((name.base.as_str(), name.index), ("name", 1));
        assert!(specs.is_empty());
    }

    #[test]
    fn copy_dimension_sets_are_order_insensitive() {
        use std::collections::BTreeSet;
        let dims = |body: &str| -> BTreeSet<String> {
            let (_, specs) = parse_feature_path(body).unwrap();
            match &specs[0] {
                FeatureSpec::Copy { dimensions, .. } => dimensions.iter().cloned().collect(),
                other => panic!("unexpected spec {other:?}"),
            }
        };
        assert_eq!(
            dims("x.<y.GENDER.NUMBER>"),
            dims("x.<y.NUMBER.GENDER>")
        );
    }

    #[test]
    fn function_call() {
        let ast = parse_template("{$diff(number1,number3)}.").unwrap();
        match &ast.segments[0] {
            Segment::Function(f) => {
                assert_eq!(f.name, "diff");
                assert_eq!(f.args.len(), 2);
                assert_eq!(f.signature(), "$diff(number1,number3)");
                assert!(f.specs.is_empty());
            }
            other => panic!("unexpected segment {other:?}"),
        }
    }

    #[test]
    fn function_call_with_trailing_specs() {
        let ast = parse_template("{$diff(a,b).<fruit1.GENDER>.TO_CAPITALIZE}").unwrap();
        match &ast.segments[0] {
            Segment::Function(f) => {
                assert_eq!(f.specs.len(), 2);
                assert!(matches!(f.specs[1], FeatureSpec::Transform));
            }
            other => panic!("unexpected segment {other:?}"),
        }
    }

    #[test]
    fn escaped_braces() {
        let ast = parse_template("a {{literal}} b").unwrap();
        assert_eq!(ast.segments, [Segment::Literal("a {literal} b".into())]);
        assert_eq!(ast.source(), "a {{literal}} b");
    }

    #[test]
    fn unbalanced_braces_are_rejected() {
        assert!(parse_template("{name").is_err());
        assert!(parse_template("name}").is_err());
        assert!(parse_template("{}").is_err());
    }

    #[test]
    fn malformed_conditional_is_rejected() {
        assert!(parse_template("{a:x.SG|b}{c:x.SG}").is_ok());
        assert!(parse_template("{a:x}").is_err());
        assert!(parse_template("{x.<a:y.SG|b:z>}").is_err());
    }

    #[test]
    fn bad_function_syntax_is_rejected() {
        assert!(parse_template("{$diff number1}").is_err());
        assert!(parse_template("{$diff(}").is_err());
        assert!(parse_template("{$diff()extra}").is_err());
        assert!(parse_template("{$Diff(a,b)}").is_err());
    }

    #[test]
    fn source_is_lossless() {
        for text in [
            "{first_name} est {adj.<first_name.GENDER>}",
            "na {name2} ni {job1.PL} lakini",
            "{Dov'è:obj1.SG|Dove sono:obj1.PL} {ART3.DEF.<obj1.NUMBER.STARTSWITH.GENDER>} {obj1}?",
            "{{x}} {fruit1.<ACC:number3.SG|NOM>.<number3.NUMBER>}.",
            "plain text, no placeholders",
            "{$diff(number1,number3)}.",
        ] {
            assert_eq!(parse_template(text).unwrap().source(), text);
        }
    }
}
