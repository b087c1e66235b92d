//! Scenario files: TOML with unit-suffixed quantity strings.
//!
//! ```toml
//! preset = "asqn_entanglement"   # or kind = "..."; every other key optional
//! seed = 7
//!
//! [chain]
//! separation = "100 km"
//! transmittance = 0.99
//!
//! [attenuation.zenith_loss]
//! "800 nm" = "0.7 dB"
//! ```

use std::collections::HashMap;
use std::ops::Range;

use qnet_core::scenarios::{self, ConfigError, Dim, FieldDef, FieldValue, ScenarioConfig, FIELDS};
use toml::de::{DeTable, DeValue};
use toml::Value;

use crate::error::{CliError, Location};
use crate::units::{canonical_unit, dim_name, parse_quantity, UnitProblem};

fn location(text: &str, offset: usize) -> Location {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    Location { line, column }
}

/// Key and value spans of every leaf, by dotted path.
fn spans(text: &str) -> Result<HashMap<String, (Range<usize>, Range<usize>)>, CliError> {
    let doc = DeTable::parse(text).map_err(|e| parse_error(text, &e))?;
    let mut out = HashMap::new();
    fn walk(
        t: &DeTable<'_>,
        prefix: &str,
        out: &mut HashMap<String, (Range<usize>, Range<usize>)>,
    ) {
        for (k, v) in t.iter() {
            let path = if prefix.is_empty() {
                k.get_ref().to_string()
            } else {
                format!("{prefix}.{}", k.get_ref())
            };
            out.insert(path.clone(), (k.span(), v.span()));
            if let DeValue::Table(sub) = v.get_ref() {
                walk(sub, &path, out);
            }
        }
    }
    walk(doc.get_ref(), "", &mut out);
    Ok(out)
}

fn parse_error(text: &str, e: &toml::de::Error) -> CliError {
    let at = e
        .span()
        .map_or(Location { line: 1, column: 1 }, |s| location(text, s.start));
    CliError::Parse {
        at,
        message: e.message().trim().to_string(),
    }
}

fn mismatch(def: &FieldDef, found: String, at: Option<Location>) -> CliError {
    CliError::UnitMismatch {
        field: def.path.to_string(),
        expected: dim_name(def.dim),
        found,
        at,
    }
}

fn describe(v: &Value) -> String {
    match v {
        Value::String(s) => format!("\"{s}\""),
        other => other.to_string(),
    }
}

fn quantity(def: &FieldDef, s: &str, at: Option<Location>) -> Result<f64, CliError> {
    parse_quantity(s, def.dim).map_err(|p| match p {
        UnitProblem::Missing => mismatch(def, format!("\"{s}\" without a unit"), at),
        UnitProblem::Wrong(u) => mismatch(def, format!("unit '{u}'"), at),
        UnitProblem::Malformed => mismatch(def, format!("\"{s}\""), at),
    })
}

/// Converts a TOML value to the field's internal representation.
pub fn convert(def: &FieldDef, v: &Value, at: Option<Location>) -> Result<FieldValue, CliError> {
    let bad = || mismatch(def, describe(v), at);
    match def.dim {
        Dim::Text => v
            .as_str()
            .map(|s| FieldValue::Text(s.into()))
            .ok_or_else(bad),
        Dim::Count => match v {
            Value::Integer(i) if *i >= 0 => Ok(FieldValue::Int(*i as u64)),
            _ => Err(bad()),
        },
        Dim::Seed => match v {
            Value::Integer(i) if *i >= 0 => Ok(FieldValue::Int(*i as u64)),
            Value::String(s) => s
                .trim()
                .parse::<u64>()
                .map(FieldValue::Int)
                .map_err(|_| bad()),
            _ => Err(bad()),
        },
        Dim::Number | Dim::Fraction => match v {
            Value::Integer(i) => Ok(FieldValue::Num(*i as f64)),
            Value::Float(x) => Ok(FieldValue::Num(*x)),
            Value::String(s) => quantity(def, s, at).map(FieldValue::Num),
            _ => Err(bad()),
        },
        Dim::Length | Dim::Angle | Dim::Degrees | Dim::Time | Dim::Frequency | Dim::Decibel => {
            match v {
                Value::String(s) => quantity(def, s, at).map(FieldValue::Num),
                Value::Integer(_) | Value::Float(_) => Err(mismatch(
                    def,
                    format!("bare number {} (units are required)", v),
                    at,
                )),
                _ => Err(bad()),
            }
        }
        Dim::LengthList => {
            let arr = v.as_array().ok_or_else(bad)?;
            arr.iter()
                .map(|e| match e {
                    Value::String(s) => parse_quantity(s, Dim::Length)
                        .map_err(|_| mismatch(def, format!("element \"{s}\""), at)),
                    other => Err(mismatch(
                        def,
                        format!("element {other} (units are required)"),
                        at,
                    )),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(FieldValue::List)
        }
        Dim::NumberList => {
            let arr = v.as_array().ok_or_else(bad)?;
            arr.iter()
                .map(|e| match e {
                    Value::Integer(i) => Ok(*i as f64),
                    Value::Float(x) => Ok(*x),
                    other => Err(mismatch(def, format!("element {}", describe(other)), at)),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(FieldValue::List)
        }
        Dim::Table => {
            let t = v.as_table().ok_or_else(bad)?;
            let mut rows = Vec::with_capacity(t.len());
            for (k, val) in t {
                let wl = parse_quantity(k, Dim::Length).map_err(|_| {
                    mismatch(def, format!("key \"{k}\" (expected a wavelength)"), at)
                })?;
                let loss = match val {
                    Value::String(s) => parse_quantity(s, Dim::Decibel)
                        .map_err(|_| mismatch(def, format!("value \"{s}\" (expected dB)"), at))?,
                    other => {
                        return Err(mismatch(
                            def,
                            format!("value {other} (units are required)"),
                            at,
                        ))
                    }
                };
                rows.push((wl, loss));
            }
            rows.sort_by(|a, b| a.0.total_cmp(&b.0));
            Ok(FieldValue::Table(rows))
        }
    }
}

fn set(
    cfg: &mut ScenarioConfig,
    path: &str,
    value: FieldValue,
    at: Option<Location>,
) -> Result<(), CliError> {
    cfg.set(path, value).map_err(|e| from_config(e, at))
}

fn from_config(e: ConfigError, at: Option<Location>) -> CliError {
    match e {
        ConfigError::UnknownParameter(key) => CliError::UnknownKey { key, at },
        ConfigError::Invalid { field, reason } => CliError::Invalid { field, reason, at },
        ConfigError::WrongType { field, expected } => CliError::UnitMismatch {
            field,
            expected,
            found: "a value of another type".into(),
            at,
        },
        ConfigError::UnknownPreset(name) => CliError::Invalid {
            field: "preset".into(),
            reason: format!("unknown preset '{name}'"),
            at,
        },
    }
}

/// Parses a scenario document without validating invariants.
pub fn parse_unvalidated(text: &str) -> Result<ScenarioConfig, CliError> {
    let spans = spans(text)?;
    let doc: toml::Table = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
    let key_at = |p: &str| spans.get(p).map(|s| location(text, s.0.start));
    let val_at = |p: &str| spans.get(p).map(|s| location(text, s.1.start));

    let base = match (doc.get("preset"), doc.get("kind")) {
        (Some(Value::String(p)), _) => p.clone(),
        (Some(_), _) => {
            return Err(CliError::UnitMismatch {
                field: "preset".into(),
                expected: "a preset name",
                found: "a non-string value".into(),
                at: val_at("preset"),
            })
        }
        (None, Some(Value::String(k))) => k.clone(),
        (None, _) => {
            return Err(CliError::Invalid {
                field: "preset".into(),
                reason: "document must name a preset or a kind".into(),
                at: None,
            })
        }
    };
    let mut cfg = scenarios::preset(&base).map_err(|e| {
        let field = if doc.contains_key("preset") {
            "preset"
        } else {
            "kind"
        };
        match e {
            ConfigError::UnknownPreset(n) => CliError::Invalid {
                field: field.into(),
                reason: format!("unknown preset '{n}'"),
                at: val_at(field),
            },
            other => from_config(other, val_at(field)),
        }
    })?;

    let mut leaves = Vec::new();
    fn flatten<'a>(t: &'a toml::Table, prefix: &str, out: &mut Vec<(String, &'a Value)>) {
        for (k, v) in t {
            let path = if prefix.is_empty() {
                k.clone()
            } else {
                format!("{prefix}.{k}")
            };
            let is_table_field = FIELDS.iter().any(|f| f.path == path && f.dim == Dim::Table);
            match v {
                Value::Table(sub) if !is_table_field => flatten(sub, &path, out),
                _ => out.push((path, v)),
            }
        }
    }
    flatten(&doc, "", &mut leaves);
    for (path, v) in leaves {
        if path == "preset" {
            continue;
        }
        let def = scenarios::field(&path).map_err(|_| CliError::UnknownKey {
            key: path.clone(),
            at: key_at(&path),
        })?;
        let value = convert(def, v, val_at(&path))?;
        set(&mut cfg, &path, value, val_at(&path))?;
    }
    Ok(cfg)
}

/// Parses and validates a scenario document.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, CliError> {
    let cfg = parse_unvalidated(text)?;
    validate_located(&cfg, text)?;
    Ok(cfg)
}

/// Validation that points invariant errors at the offending line when the
/// field appears in `text`.
pub fn validate_located(cfg: &ScenarioConfig, text: &str) -> Result<(), CliError> {
    cfg.validate().map_err(|e| {
        let at = match &e {
            ConfigError::Invalid { field, .. } => spans(text)
                .ok()
                .and_then(|s| s.get(field).map(|r| location(text, r.1.start))),
            _ => None,
        };
        from_config(e, at)
    })
}

/// Applies one `path=value` override. The value is read as a TOML value
/// when it parses as one and as a bare string otherwise.
pub fn apply_override(cfg: &mut ScenarioConfig, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| {
        CliError::Usage(format!("override '{spec}' is not of the form path=value"))
    })?;
    let path = path.trim();
    let def = scenarios::field(path).map_err(|_| CliError::UnknownKey {
        key: path.to_string(),
        at: None,
    })?;
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    let fv = convert(def, &value, None)?;
    set(cfg, path, fv, None)
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn quote(s: &str) -> String {
    Value::String(s.to_string()).to_string()
}

fn render(def: &FieldDef, v: &FieldValue) -> String {
    match (v, def.dim) {
        (FieldValue::Num(x), Dim::Fraction | Dim::Number) => num(*x),
        (FieldValue::Num(x), d) => {
            quote(&format!("{} {}", num(*x), canonical_unit(d).unwrap_or("")))
        }
        (FieldValue::Int(i), Dim::Seed) if *i > i64::MAX as u64 => quote(&i.to_string()),
        (FieldValue::Int(i), _) => i.to_string(),
        (FieldValue::Text(t), _) => quote(t),
        (FieldValue::List(l), Dim::LengthList) => {
            let parts: Vec<String> = l.iter().map(|x| quote(&format!("{} m", num(*x)))).collect();
            format!("[{}]", parts.join(", "))
        }
        (FieldValue::List(l), _) => {
            let parts: Vec<String> = l.iter().map(|x| num(*x)).collect();
            format!("[{}]", parts.join(", "))
        }
        (FieldValue::Table(_), _) => unreachable!("tables are written as sections"),
    }
}

/// Writes every field of `cfg` in SI units. `parse_config` reads it back to
/// an identical config.
pub fn serialize_config(cfg: &ScenarioConfig) -> String {
    let mut sections: Vec<(&str, Vec<String>)> = vec![("", Vec::new())];
    let mut tables = String::new();
    for def in FIELDS {
        let value = (def.get)(cfg);
        if let FieldValue::Table(rows) = &value {
            tables.push_str(&format!("\n[{}]\n", def.path));
            for (wl, loss) in rows {
                tables.push_str(&format!(
                    "{} = {}\n",
                    quote(&format!("{} m", num(*wl))),
                    quote(&format!("{} dB", num(*loss)))
                ));
            }
            continue;
        }
        let (section, key) = def.path.rsplit_once('.').unwrap_or(("", def.path));
        let line = format!("{key} = {}", render(def, &value));
        match sections.iter_mut().find(|s| s.0 == section) {
            Some(s) => s.1.push(line),
            None => sections.push((section, vec![line])),
        }
    }
    let mut out = String::new();
    for (name, lines) in sections {
        if !name.is_empty() {
            out.push_str(&format!("\n[{name}]\n"));
        }
        for l in lines {
            out.push_str(&l);
            out.push('\n');
        }
    }
    out.push_str(&tables);
    out
}
