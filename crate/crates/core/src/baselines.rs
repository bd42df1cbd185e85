//! Closed-form reference schemes. A dead link (`eps = 1`) yields `+inf`.

use alloc::vec::Vec;

use crate::degree_model::Scenario;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineReport {
    pub lower_bound: f64,
    pub unicast_total: f64,
    pub timeshare: f64,
}

fn unicast_time(z: f64, eps: f64) -> f64 {
    if eps >= 1.0 {
        f64::INFINITY
    } else {
        z / (1.0 - eps)
    }
}

/// `max_i z_i / (1 - eps_i)`: no scheme can deliver faster to every user.
pub fn lower_bound(scenario: &Scenario) -> f64 {
    scenario
        .users
        .iter()
        .map(|u| unicast_time(u.z, u.eps))
        .fold(0.0, f64::max)
}

/// Separate capacity-achieving streams, one per user, sent back to back.
pub fn unicast_total(scenario: &Scenario) -> f64 {
    scenario
        .users
        .iter()
        .map(|u| unicast_time(u.z, u.eps))
        .sum()
}

/// Time-shared broadcast of layered content. Users sorted by demand split the
/// content into layers `z_i - z_{i-1}`; layer `i` is wanted by users `i..`
/// and is coded at the rate `1 - max_{j >= i} eps_j` of its worst receiver.
pub fn timeshare_delivery(scenario: &Scenario) -> f64 {
    let mut users: Vec<_> = scenario.users.iter().map(|u| (u.z, u.eps)).collect();
    users.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let mut worst_after = alloc::vec![0.0f64; users.len()];
    let mut worst = 0.0f64;
    for i in (0..users.len()).rev() {
        worst = worst.max(users[i].1);
        worst_after[i] = worst;
    }
    let mut prev_z = 0.0;
    let mut total = 0.0;
    for (i, &(z, _)) in users.iter().enumerate() {
        let layer = z - prev_z;
        if layer > 0.0 {
            total += unicast_time(layer, worst_after[i]);
        }
        prev_z = z;
    }
    total
}

pub fn baseline_report(scenario: &Scenario) -> BaselineReport {
    BaselineReport {
        lower_bound: lower_bound(scenario),
        unicast_total: unicast_total(scenario),
        timeshare: timeshare_delivery(scenario),
    }
}
