use std::path::Path;

use serde::Deserialize;
use toml::{Table, Value};

use super::{builtin, validate, Scenario, ScenarioError};

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn parse_error(text: &str, err: &toml::de::Error) -> ScenarioError {
    let (line, column) = err.span().map_or((0, 0), |s| line_col(text, s.start));
    ScenarioError::Parse {
        line,
        column,
        message: err.message().trim().to_string(),
    }
}

fn parse_table(text: &str) -> Result<Table, ScenarioError> {
    text.parse::<Table>().map_err(|e| parse_error(text, &e))
}

fn from_table(table: &Table, key: &str) -> Result<Scenario, ScenarioError> {
    Scenario::deserialize(table.clone()).map_err(|e| ScenarioError::validation(key, e.message().trim()))
}

/// Parses and validates scenario text. Unknown keys are errors.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
    validate(&scenario)?;
    Ok(scenario)
}

/// Reads `path`, or the built-in scenario of that name when no such file
/// exists.
pub fn resolve(path: &str) -> Result<String, ScenarioError> {
    match std::fs::read_to_string(path) {
        Ok(text) => Ok(text),
        Err(e) => {
            let stem = Path::new(path)
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or(path);
            if Path::new(path).exists() {
                return Err(ScenarioError::Io {
                    path: path.to_string(),
                    message: e.to_string(),
                });
            }
            // A bare name that is neither a file nor a shipped scenario is
            // reported as an unknown scenario rather than a missing file.
            let bare = Path::new(path).extension().is_none() && !path.contains(std::path::MAIN_SEPARATOR);
            builtin(stem).map(str::to_string).map_err(|unknown| {
                if bare {
                    unknown
                } else {
                    ScenarioError::Io {
                        path: path.to_string(),
                        message: e.to_string(),
                    }
                }
            })
        }
    }
}

/// Reads a scenario file (or built-in name) and applies `key=value`
/// overrides before validation.
pub fn parse_scenario_file(path: &str, overrides: &[String]) -> Result<Scenario, ScenarioError> {
    let text = resolve(path)?;
    if overrides.is_empty() {
        return parse_scenario(&text);
    }
    // The file itself must parse, so its errors keep their own locations;
    // a failure after that is blamed on the override that introduced it.
    toml::from_str::<Scenario>(&text).map_err(|e| parse_error(&text, &e))?;
    let mut table = parse_table(&text)?;
    let mut scenario = None;
    for o in overrides {
        apply_override(&mut table, o)?;
        let key = o.split_once('=').map_or(o.as_str(), |(k, _)| k.trim());
        scenario = Some(from_table(&table, key)?);
    }
    let scenario = scenario.expect("at least one override");
    validate(&scenario)?;
    Ok(scenario)
}

fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Applies one `dotted.key=value` override. Path segments that are integers
/// index into arrays. The value is read as a TOML value, falling back to a
/// bare string. Only the final segment may be new; whether it is a known
/// field is decided when the table is deserialised.
pub fn apply_override(table: &mut Table, spec: &str) -> Result<(), ScenarioError> {
    let bad = |message: &str| ScenarioError::validation(spec, message);
    let (key, raw) = spec.split_once('=').ok_or_else(|| bad("expected key=value"))?;
    let key = key.trim();
    let path: Vec<&str> = key.split('.').collect();
    if path.iter().any(|s| s.is_empty()) {
        return Err(bad("empty key segment"));
    }
    let (last, parents) = path.split_last().expect("non-empty");
    let mut cursor: &mut Value = table
        .get_mut(parents.first().copied().unwrap_or(last))
        .ok_or_else(|| ScenarioError::validation(key, "unknown key"))?;
    if parents.is_empty() {
        *cursor = parse_value(raw.trim());
        return Ok(());
    }
    for seg in &parents[1..] {
        cursor = match cursor {
            Value::Table(t) => t.get_mut(*seg),
            Value::Array(a) => seg.parse::<usize>().ok().and_then(|i| a.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| ScenarioError::validation(key, "unknown key"))?;
    }
    match cursor {
        Value::Table(t) => {
            t.insert(last.to_string(), parse_value(raw.trim()));
        }
        Value::Array(a) => {
            let slot = last
                .parse::<usize>()
                .ok()
                .and_then(|i| a.get_mut(i))
                .ok_or_else(|| ScenarioError::validation(key, "array index out of range"))?;
            *slot = parse_value(raw.trim());
        }
        _ => return Err(ScenarioError::validation(key, "not a table")),
    }
    Ok(())
}

/// Canonical text form; `parse_scenario(print_scenario(s)) == s`.
pub fn print_scenario(scenario: &Scenario) -> String {
    toml::to_string(scenario).expect("scenario types always serialise")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINI: &str = r#"
[scenario]
name = "mini"
duration_s = 1.0

[[network.buses]]
id = "A"
kv = 0.48

[network.sources.gen]
kind = "genset"
bus = "A"
rated_kw = 1000.0

[network.loads.l]
bus = "A"
p_kw = 500.0
class = "commercial"
"#;

    #[test]
    fn minimal_scenario_parses_with_defaults() {
        let s = parse_scenario(MINI).unwrap();
        assert_eq!(s.scenario.dt_s, 1e-3);
        assert!(s.events.is_empty());
    }

    #[test]
    fn unknown_key_is_located() {
        let text = MINI.replace("rated_kw = 1000.0", "rated_kw = 1000.0\nratd = 1");
        match parse_scenario(&text) {
            Err(ScenarioError::Parse { line, message, .. }) => {
                assert!(message.contains("ratd"), "{message}");
                assert!(line >= 10, "line {line}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_line_and_column() {
        let err = parse_scenario("[scenario]\nname = \"x\"\nduration_s = = 3\n").unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn overrides_reach_nested_and_indexed_keys() {
        let mut t: Table = MINI.parse().unwrap();
        apply_override(&mut t, "network.sources.gen.inertia_s=3.0").unwrap();
        apply_override(&mut t, "network.buses.0.kv=0.4").unwrap();
        apply_override(&mut t, "scenario.name=renamed").unwrap();
        let s = from_table(&t, "scenario.name").unwrap();
        assert_eq!(s.network.buses[0].kv, 0.4);
        assert_eq!(s.scenario.name, "renamed");
        match &s.network.sources["gen"] {
            crate::grid::SourceSpec::Genset(g) => assert_eq!(g.inertia_s, 3.0),
            _ => unreachable!(),
        }
    }

    #[test]
    fn override_of_unknown_key_fails() {
        let mut t: Table = MINI.parse().unwrap();
        assert!(apply_override(&mut t, "network.nope.x=1").is_err());
        apply_override(&mut t, "scenario.bogus=1").unwrap();
        let err = from_table(&t, "scenario.bogus").unwrap_err();
        assert!(matches!(err, ScenarioError::Validation { ref key, .. } if key == "scenario.bogus"), "{err}");
    }

    #[test]
    fn print_round_trips() {
        let s = parse_scenario(MINI).unwrap();
        assert_eq!(parse_scenario(&print_scenario(&s)).unwrap(), s);
    }
}
