//! Scenario files compiled into the crate.

use crate::scene::{Scenario, ScenarioError};

/// (name, aliases, JSON text) of every bundled scenario.
const BUNDLED: [(&str, &[&str], &str); 8] = [
    (
        "scene1_left_turn",
        &["s1"],
        include_str!("../../fixtures/scene1_left_turn.json"),
    ),
    (
        "scene2_lane_change",
        &["s2"],
        include_str!("../../fixtures/scene2_lane_change.json"),
    ),
    (
        "scene3_merge",
        &["s3"],
        include_str!("../../fixtures/scene3_merge.json"),
    ),
    (
        "scene4_stopped_car",
        &["s4"],
        include_str!("../../fixtures/scene4_stopped_car.json"),
    ),
    (
        "straight_two_agents",
        &[],
        include_str!("../../fixtures/straight_two_agents.json"),
    ),
    (
        "empty_straight",
        &[],
        include_str!("../../fixtures/empty_straight.json"),
    ),
    ("cut_in", &[], include_str!("../../fixtures/cut_in.json")),
    ("wall", &[], include_str!("../../fixtures/wall.json")),
];

/// The four evaluation scenes, in table order.
pub const EVALUATION_SCENES: [&str; 4] = ["s1", "s2", "s3", "s4"];

pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _, _)| *n)
}

/// Looks a bundled scenario up by name or alias (`s1` .. `s4`).
pub fn bundled(name: &str) -> Option<Result<Scenario, ScenarioError>> {
    BUNDLED
        .iter()
        .find(|(n, aliases, _)| *n == name || aliases.contains(&name))
        .map(|(n, _, text)| {
            let mut sc = Scenario::from_json_str(text)?;
            if sc.name.is_empty() {
                sc.name = n.to_string();
            }
            Ok(sc)
        })
}
