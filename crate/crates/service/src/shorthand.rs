//! Compact text forms used on the command line and in query strings:
//! actions as `1,4` and outcomes as `1:D,4:E`.

use std::collections::BTreeMap;

use resto_core::{Action, Observation, Outcome};

fn branch(text: &str) -> Result<usize, String> {
    text.trim()
        .parse()
        .map_err(|_| format!("`{}` is not a branch index", text.trim()))
}

pub fn parse_action(text: &str) -> Result<Action, String> {
    let list = text
        .trim()
        .trim_start_matches('{')
        .trim_end_matches('}')
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(branch)
        .collect::<Result<Vec<_>, _>>()?;
    Action::new(list).map_err(|e| e.to_string())
}

pub fn parse_outcomes(text: &str) -> Result<BTreeMap<usize, Outcome>, String> {
    let mut out = BTreeMap::new();
    for item in text.split(',').filter(|t| !t.trim().is_empty()) {
        let (j, o) = item
            .split_once(':')
            .ok_or_else(|| format!("`{item}` should look like 3:E"))?;
        let outcome = match o.trim() {
            "E" | "e" => Outcome::Energized,
            "D" | "d" => Outcome::Damaged,
            other => return Err(format!("outcome `{other}` should be E or D")),
        };
        if out.insert(branch(j)?, outcome).is_some() {
            return Err(format!("branch {} reported twice", j.trim()));
        }
    }
    Ok(out)
}

/// Either an observation JSON object or the outcome shorthand, in which
/// case the action is the set of reported branches.
pub fn parse_observation(text: &str) -> Result<Observation, String> {
    let text = text.trim();
    if text.starts_with('{') {
        return serde_json::from_str(text).map_err(|e| e.to_string());
    }
    let outcomes = parse_outcomes(text)?;
    let action = Action::new(outcomes.keys().copied()).map_err(|e| e.to_string())?;
    Ok(Observation::new(action, outcomes))
}
