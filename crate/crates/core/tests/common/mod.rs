//! Fixtures and randomized property checks shared by the acceptance runner
//! and the proptest suites. Every check runs one trial from a seed and
//! reports the first violation as an error string.

#![allow(dead_code)]

use bntune_core::bounds::{self, Interval};
use bntune_core::inference::{brute_force, family_marginals, posterior, FamilyMarginals};
use bntune_core::model::{apply_parameter_change, NetworkBuilder};
use bntune_core::random::{random_evidence, random_network, RandomNetworkConfig};
use bntune_core::sensitivity::{
    multi_valued_alpha, query_derivative, tune, Constraint, Direction,
    RecommendationStatus,
};
use bntune_core::{BeliefNetwork, Event, Evidence, MetaParameter, VarId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(format!($($arg)*));
        }
    };
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// X → E ← Y with `E = e` iff `X = Y`.
pub fn equality_network(theta_x: f64, theta_y: f64) -> BeliefNetwork {
    NetworkBuilder::new()
        .binary("X", &[], &[theta_x, 1.0 - theta_x])
        .binary("Y", &[], &[theta_y, 1.0 - theta_y])
        .binary("E", &["X", "Y"], &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0])
        .build()
        .expect("valid network")
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn compare_marginals(jt: &FamilyMarginals, bf: &FamilyMarginals, net: &BeliefNetwork) -> Check {
    let pe = bf.evidence_probability();
    ensure!(
        close(jt.evidence_probability(), pe, 1e-9),
        "Pr(e): join tree {} vs enumeration {}",
        jt.evidence_probability(),
        pe
    );
    for v in net.var_ids() {
        let total: f64 = jt.family(v).iter().sum();
        ensure!(close(total, jt.evidence_probability(), 1e-9), "family {} sums to {total}", net.name(v));
        for (a, b) in jt.family(v).iter().zip(bf.family(v)) {
            ensure!(close(*a, *b, 1e-9), "family {}: {a} vs {b}", net.name(v));
            ensure!(*a >= -1e-12 && *a <= pe + 1e-9, "family {} entry {a} outside [0, Pr(e)]", net.name(v));
        }
    }
    Ok(())
}

/// Join-tree family marginals agree with enumeration on a random network of
/// at most 12 binary variables.
pub fn oracle_equivalence(seed: u64) -> Check {
    let mut r = rng(seed);
    let config = RandomNetworkConfig {
        variables: r.random_range(1..=12),
        max_parents: 3,
        max_cardinality: 2,
        zero_probability: 0.1,
    };
    let net = random_network(&mut r, &config);
    let ev = random_evidence(&mut r, &net, 4);
    compare_marginals(&family_marginals(&net, &ev), &brute_force(&net, &ev).unwrap(), &net)
}

fn small_mixed_network(r: &mut ChaCha8Rng, max_vars: usize) -> BeliefNetwork {
    let config = RandomNetworkConfig {
        variables: r.random_range(2..=max_vars),
        max_parents: 2,
        max_cardinality: 3,
        zero_probability: 0.0,
    };
    random_network(r, &config)
}

/// `Pr(e)` is a straight line in every meta parameter, with slope α_e.
pub fn evidence_collinearity(seed: u64) -> Check {
    let mut r = rng(seed);
    let net = small_mixed_network(&mut r, 6);
    let ev = random_evidence(&mut r, &net, 3);
    let taus = [0.1, 0.45, 0.9];
    for param in net.meta_parameters() {
        let pr: Vec<f64> = taus
            .iter()
            .map(|&t| {
                let next = apply_parameter_change(&net, &param, t).unwrap();
                family_marginals(&next, &ev).evidence_probability()
            })
            .collect();
        let s1 = (pr[1] - pr[0]) / (taus[1] - taus[0]);
        let s2 = (pr[2] - pr[0]) / (taus[2] - taus[0]);
        ensure!(close(s1, s2, 1e-9), "{}: slopes {s1} and {s2}", param.describe(&net));
        let alpha = multi_valued_alpha(&net, &ev, &param).unwrap();
        ensure!(close(alpha, s2, 1e-9), "{}: α_e {alpha} vs fitted {s2}", param.describe(&net));
    }
    Ok(())
}

fn random_query(r: &mut ChaCha8Rng, net: &BeliefNetwork, ev: &Evidence) -> Option<Event> {
    let free: Vec<VarId> = net.var_ids().filter(|&v| !ev.contains(v)).collect();
    if free.is_empty() {
        return None;
    }
    let var = free[r.random_range(0..free.len())];
    Some(Event::new(var, r.random_range(0..net.cardinality(var))))
}

fn posterior_at(net: &BeliefNetwork, ev: &Evidence, y: Event, param: &MetaParameter, tau: f64) -> f64 {
    let next = apply_parameter_change(net, param, tau).unwrap();
    posterior(&next, ev, y).unwrap()
}

/// `query_derivative` matches a central finite difference with `h = 1e-6`.
pub fn derivative_matches_finite_difference(seed: u64) -> Check {
    let mut r = rng(seed);
    let net = small_mixed_network(&mut r, 7);
    let ev = random_evidence(&mut r, &net, 2);
    let Some(y) = random_query(&mut r, &net, &ev) else {
        return Ok(());
    };
    let params = net.meta_parameters();
    let param = params[r.random_range(0..params.len())];
    let tau = param.current_value(&net);
    let h = 1e-6;
    let fd = (posterior_at(&net, &ev, y, &param, tau + h) - posterior_at(&net, &ev, y, &param, tau - h))
        / (2.0 * h);
    let d = query_derivative(&net, &ev, y, &param).unwrap();
    // relative tolerance, with an absolute floor for vanishing derivatives
    ensure!(
        (d - fd).abs() <= 1e-5 * d.abs().max(1e-4),
        "{} on {}: analytic {d} vs finite difference {fd}",
        param.describe(&net),
        y.describe(&net)
    );
    Ok(())
}

fn binary_setup(r: &mut ChaCha8Rng) -> (BeliefNetwork, Evidence, Event, MetaParameter) {
    let config = RandomNetworkConfig {
        variables: r.random_range(2..=8),
        max_parents: 3,
        max_cardinality: 3,
        zero_probability: 0.0,
    };
    loop {
        let net = random_network(r, &config);
        let ev = random_evidence(r, &net, 3);
        let Some(y) = random_query(r, &net, &ev) else { continue };
        let params: Vec<MetaParameter> = net
            .meta_parameters()
            .into_iter()
            .filter(|p| net.cardinality(p.var) == 2)
            .collect();
        if params.is_empty() {
            continue;
        }
        let param = params[r.random_range(0..params.len())];
        return (net, ev, y, param);
    }
}

/// `|∂Pr(y|e)/∂τ| ≤ Pr(y|e)(1 − Pr(y|e)) / (p(1 − p))` for binary `X`.
pub fn derivative_bound_holds(seed: u64) -> Check {
    let mut r = rng(seed);
    let (net, ev, y, param) = binary_setup(&mut r);
    let q = posterior(&net, &ev, y).unwrap();
    let p = param.current_value(&net);
    let d = query_derivative(&net, &ev, y, &param).unwrap();
    let bound = bounds::derivative_bound(q, p).unwrap();
    ensure!(d.abs() <= bound + 1e-9, "|{d}| exceeds bound {bound}");
    Ok(())
}

/// The odds of every query move by no more than the odds of the changed
/// binary parameter.
pub fn log_odds_bound_holds(seed: u64) -> Check {
    let mut r = rng(seed);
    let (net, ev, _, param) = binary_setup(&mut r);
    let p = param.current_value(&net);
    let p_new = r.random_range(0.001..0.999);
    let next = apply_parameter_change(&net, &param, p_new).unwrap();
    let before = family_marginals(&net, &ev);
    let after = family_marginals(&next, &ev);
    let budget = bounds::log_odds_distance(p, p_new).unwrap();
    for var in net.var_ids().filter(|&v| !ev.contains(v)) {
        for value in 0..net.cardinality(var) {
            let y = Event::new(var, value);
            let q0 = before.event_probability(&net, y) / before.evidence_probability();
            let q1 = after.event_probability(&next, y) / after.evidence_probability();
            if q0 <= 0.0 || q0 >= 1.0 {
                continue;
            }
            let moved = bounds::log_odds_distance(q0, q1).unwrap();
            ensure!(moved <= budget + 1e-9, "{}: moved {moved} > budget {budget}", y.describe(&net));
            let iv = bounds::query_bounds_after_change(q0, p, p_new).unwrap();
            ensure!(
                q1 >= iv.lo - 1e-9 && q1 <= iv.hi + 1e-9,
                "{}: {q1} outside [{}, {}]",
                y.describe(&net),
                iv.lo,
                iv.hi
            );
        }
    }
    Ok(())
}

fn random_constraint(r: &mut ChaCha8Rng, net: &BeliefNetwork, ev: &Evidence) -> Option<Constraint> {
    let y = random_query(r, net, ev)?;
    let z = random_query(r, net, ev)?;
    let direction = if r.random_bool(0.5) { Direction::AtLeast } else { Direction::AtMost };
    Some(match r.random_range(0..3) {
        0 => Constraint::value(y, direction, r.random_range(0.05..0.95)),
        1 => Constraint::difference(y, z, direction, r.random_range(-0.5..0.5)),
        _ => Constraint::ratio(y, z, direction, r.random_range(0.2..3.0)),
    })
}

/// Constraint slack after changing `param` to `tau`, or `None` when the
/// change makes the evidence impossible.
fn residual_after(
    net: &BeliefNetwork,
    ev: &Evidence,
    c: &Constraint,
    param: &MetaParameter,
    tau: f64,
) -> Option<f64> {
    let next = apply_parameter_change(net, param, tau).unwrap();
    let fm = brute_force(&next, ev).unwrap();
    let pe = fm.evidence_probability();
    if pe <= 1e-12 {
        return None;
    }
    let prob = |e: Option<Event>| e.map_or(0.0, |e| fm.event_probability(&next, e));
    Some(c.residual(pe, prob(Some(c.y)), prob(c.z)))
}

fn small_tuning_case(seed: u64) -> Option<(BeliefNetwork, Evidence, Constraint)> {
    let mut r = rng(seed);
    let config = RandomNetworkConfig {
        variables: r.random_range(2..=4),
        max_parents: 2,
        max_cardinality: 3,
        zero_probability: 0.0,
    };
    let net = random_network(&mut r, &config);
    let ev = random_evidence(&mut r, &net, 1);
    let c = random_constraint(&mut r, &net, &ev)?;
    c.validate(&net, &ev).ok()?;
    Some((net, ev, c))
}

/// Applying a recommended minimal value satisfies the constraint, tightly
/// when a change was needed.
pub fn solver_soundness(seed: u64) -> Check {
    let Some((net, ev, c)) = small_tuning_case(seed) else {
        return Ok(());
    };
    let report = tune(&net, &ev, &c).unwrap();
    for rec in report.feasible() {
        let m = rec.minimal_new_value.unwrap();
        let Some(res) = residual_after(&net, &ev, &c, &rec.param, m) else { continue };
        let what = format!("{} for {}", rec.param.describe(&net), c.describe(&net));
        match rec.status {
            RecommendationStatus::Increase | RecommendationStatus::Decrease => ensure!(
                (-1e-6..=1e-4).contains(&res),
                "{what}: residual {res} at endpoint {m}"
            ),
            _ => ensure!(res >= -1e-6, "{what}: residual {res} at current value"),
        }
        let iv = rec.feasible.unwrap();
        if iv.width() > 1e-6 {
            let mid = 0.5 * (iv.lo + iv.hi);
            if let Some(res) = residual_after(&net, &ev, &c, &rec.param, mid) {
                ensure!(res > -1e-9, "{what}: interior point {mid} has residual {res}");
            }
        }
    }
    Ok(())
}

/// A 1e-3 sweep of every parameter finds no satisfying value more than one
/// grid step outside the reported interval.
pub fn solver_completeness(seed: u64) -> Check {
    let Some((net, ev, c)) = small_tuning_case(seed) else {
        return Ok(());
    };
    let report = tune(&net, &ev, &c).unwrap();
    let step = 1e-3;
    for rec in &report.recommendations {
        for k in 0..=1000 {
            let tau = k as f64 * step;
            let Some(res) = residual_after(&net, &ev, &c, &rec.param, tau) else { continue };
            if res <= 1e-9 {
                continue;
            }
            let inside = rec
                .feasible
                .is_some_and(|iv: Interval| tau >= iv.lo - step && tau <= iv.hi + step);
            ensure!(
                inside,
                "{}: τ = {tau} satisfies {} (residual {res}) but interval is {:?}",
                rec.param.describe(&net),
                c.describe(&net),
                rec.feasible
            );
        }
    }
    Ok(())
}

/// Changes inside the two-sided permissible interval keep the query inside
/// the target range.
pub fn envelope_soundness(seed: u64) -> Check {
    let mut r = rng(seed);
    let (net, ev, y, param) = binary_setup(&mut r);
    let q0 = posterior(&net, &ev, y).unwrap();
    if q0 <= 1e-6 || q0 >= 1.0 - 1e-6 {
        return Ok(());
    }
    let lo0 = bounds::log_odds(q0).unwrap();
    let range = Interval::new(
        bounds::logistic(lo0 - r.random_range(0.05..1.5)),
        bounds::logistic(lo0 + r.random_range(0.05..1.5)),
    );
    let p = param.current_value(&net);
    let env = bounds::permissible_envelope(q0, range, &[p]).unwrap();
    let allowed = env.points[0].two_sided;
    let delta = r.random_range(allowed.lo..=allowed.hi);
    let q1 = posterior_at(&net, &ev, y, &param, (p + delta).clamp(0.0, 1.0));
    ensure!(
        q1 >= range.lo - 1e-9 && q1 <= range.hi + 1e-9,
        "δ = {delta} at p = {p} moved the query from {q0} to {q1}, outside [{}, {}]",
        range.lo,
        range.hi
    );
    Ok(())
}

/// Runs `check` over `trials` consecutive seeds and counts violations.
pub fn run_trials(trials: u64, base: u64, check: fn(u64) -> Check) -> Result<u64, String> {
    let mut failures = Vec::new();
    for seed in base..base + trials {
        if let Err(e) = check(seed) {
            failures.push(format!("seed {seed}: {e}"));
        }
    }
    if failures.is_empty() {
        Ok(trials)
    } else {
        Err(format!("{} of {trials} trials failed; first: {}", failures.len(), failures[0]))
    }
}
