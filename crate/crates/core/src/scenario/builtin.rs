use super::ScenarioError;

/// Shipped scenarios, by name.
pub const BUILTINS: &[(&str, &str)] = &[
    ("opal-dos-0", include_str!("../../scenarios/opal-dos-0.scn")),
    ("opal-dos-2", include_str!("../../scenarios/opal-dos-2.scn")),
    ("opal-dos-5", include_str!("../../scenarios/opal-dos-5.scn")),
    ("opal-dos-15", include_str!("../../scenarios/opal-dos-15.scn")),
    ("rtds-f1", include_str!("../../scenarios/rtds-f1.scn")),
    ("rtds-f2", include_str!("../../scenarios/rtds-f2.scn")),
    ("rtds-pq", include_str!("../../scenarios/rtds-pq.scn")),
];

pub fn builtin(name: &str) -> Result<&'static str, ScenarioError> {
    BUILTINS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| ScenarioError::UnknownBuiltin(name.to_string()))
}

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n)
}
