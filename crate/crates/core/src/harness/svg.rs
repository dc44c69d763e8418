//! Plain SVG rendering of an episode. Output is a pure function of the
//! inputs: fixed element order and fixed decimal formatting.

use std::fmt::Write;

use crate::planner::{min_clearance, EpisodeLog};
use crate::scene::{AgentState, Scenario};

const MARGIN: f64 = 15.0;

fn polyline(out: &mut String, pts: &[[f64; 2]], style: &str) {
    if pts.len() < 2 {
        return;
    }
    let coords: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", p[0], -p[1])).collect();
    let _ = writeln!(out, r#"<polyline points="{}" {style}/>"#, coords.join(" "));
}

fn positions(states: &[AgentState]) -> Vec<[f64; 2]> {
    states.iter().map(AgentState::position).collect()
}

pub fn render(scenario: &Scenario, log: &EpisodeLog) -> String {
    let ego = log.ego_states();
    let agents = log.agent_states();
    let obs = scenario.observation_horizon;

    let mut xs: Vec<f64> = vec![scenario.goal.x];
    let mut ys: Vec<f64> = vec![scenario.goal.y];
    for s in ego.iter().chain(agents.iter().flatten()) {
        xs.push(s.x);
        ys.push(s.y);
    }
    for t in &scenario.tracks {
        for s in &t.states[..obs] {
            xs.push(s.x);
            ys.push(s.y);
        }
    }
    let fold = |v: &[f64], f: fn(f64, f64) -> f64, init: f64| v.iter().copied().fold(init, f);
    let (x0, x1) = (
        fold(&xs, f64::min, f64::INFINITY) - MARGIN,
        fold(&xs, f64::max, f64::NEG_INFINITY) + MARGIN,
    );
    let (y0, y1) = (
        fold(&ys, f64::min, f64::INFINITY) - MARGIN,
        fold(&ys, f64::max, f64::NEG_INFINITY) + MARGIN,
    );

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.2} {:.2} {:.2} {:.2}" width="{:.0}" height="{:.0}">"#,
        x0,
        -y1,
        x1 - x0,
        y1 - y0,
        (x1 - x0) * 4.0,
        (y1 - y0) * 4.0
    );
    let _ = writeln!(
        out,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="white"/>"#,
        x0,
        -y1,
        x1 - x0,
        y1 - y0
    );

    out.push_str("<g id=\"lanes\">\n");
    for lane in &scenario.lanes {
        polyline(
            &mut out,
            &lane.points,
            r##"fill="none" stroke="#bbbbbb" stroke-width="3.5" stroke-opacity="0.5""##,
        );
    }
    out.push_str("</g>\n<g id=\"history\">\n");
    for t in &scenario.tracks {
        polyline(
            &mut out,
            &positions(&t.states[..obs]),
            r##"fill="none" stroke="#555555" stroke-width="0.3" stroke-dasharray="1,1""##,
        );
    }
    out.push_str("</g>\n<g id=\"planned\">\n");
    for step in &log.steps {
        polyline(
            &mut out,
            &step.planned_ego,
            r##"fill="none" stroke="#2ca02c" stroke-width="0.15" stroke-opacity="0.6""##,
        );
        for p in &step.planned_agents {
            polyline(
                &mut out,
                p,
                r##"fill="none" stroke="#ff7f0e" stroke-width="0.15" stroke-opacity="0.6""##,
            );
        }
    }
    out.push_str("</g>\n<g id=\"executed\">\n");
    polyline(
        &mut out,
        &positions(&ego),
        r##"fill="none" stroke="#1f77b4" stroke-width="0.4""##,
    );
    for i in 0..agents.first().map_or(0, Vec::len) {
        let path: Vec<[f64; 2]> = agents.iter().map(|f| f[i].position()).collect();
        polyline(&mut out, &path, r##"fill="none" stroke="#d62728" stroke-width="0.4""##);
    }
    out.push_str("</g>\n<g id=\"markers\">\n");
    let _ = writeln!(
        out,
        r##"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="none" stroke="#9467bd" stroke-width="0.3"/>"##,
        scenario.goal.x, -scenario.goal.y, scenario.goal.radius
    );
    for (e, a) in ego.iter().zip(&agents) {
        if min_clearance(e, a, &log.header.footprints).is_some_and(|c| c <= 0.0) {
            let _ = writeln!(
                out,
                r##"<path d="M{:.2},{:.2} l2,2 m-2,0 l2,-2" transform="translate(-1,-1)" stroke="#ff0000" stroke-width="0.4"/>"##,
                e.x, -e.y
            );
        }
    }
    out.push_str("</g>\n</svg>\n");
    out
}
