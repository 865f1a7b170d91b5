//! Scenario presets shipped with the tools, compiled in from `scenarios/`.

pub const CORRIDOR: &str = include_str!("../../../scenarios/corridor.json");
pub const PEDESTRIAN: &str = include_str!("../../../scenarios/pedestrian.json");

/// Look up a preset by name.
pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "corridor" => Some(CORRIDOR),
        "pedestrian" => Some(PEDESTRIAN),
        _ => None,
    }
}

pub const PRESET_NAMES: [&str; 2] = ["corridor", "pedestrian"];
