//! HTTP facade over `bntune-core` with an in-memory revision store.
//!
//! | method | path | body / query | result |
//! |---|---|---|---|
//! | POST | `/networks` | network document | `{id}` |
//! | GET | `/networks/{id}` | | document and lineage |
//! | POST | `/networks/{id}/query` | `{evidence, events}` | posteriors |
//! | POST | `/networks/{id}/tune` | `{evidence, constraint}` | recommendations |
//! | POST | `/networks/{id}/apply` | `{param, value}` | `{new_id}` |
//! | POST | `/networks/{id}/bounds` | `{evidence, event, param, new_value}` | `{q_lo, q_hi}` |
//! | GET | `/networks/{id}/sensfn` | `evidence, event, param, samples` | coefficients and samples |
//! | GET | `/envelope` | `current, range, step` | permissible-change envelope |
//!
//! Every response carries `"v": 1`. Errors are `{code, message, detail}` with
//! status 400 for malformed input, 404 for unknown revisions and 422 for
//! well-formed requests that cannot be answered.

mod error;
mod store;

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use bntune_core::bounds::{self, Envelope, Interval};
use bntune_core::inference::family_marginals;
use bntune_core::model::{apply_parameter_change, load_network, NetworkDocument};
use bntune_core::sensitivity::{self, RecommendationStatus};
use bntune_core::text::{parse_constraint, parse_event, parse_evidence, parse_param};
use bntune_core::{BeliefNetwork, Error, Evidence};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

pub use error::ApiError;
pub use store::{Change, Revision, RevisionStore};

pub const API_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    /// Revisions kept before least recently used leaves are evicted.
    pub revision_cap: usize,
    /// Largest elimination-order width accepted for tuning.
    pub width_cap: usize,
    /// Directory served for paths outside the API.
    pub ui_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            revision_cap: 1024,
            width_cap: 20,
            ui_dir: None,
        }
    }
}

struct AppState {
    store: RevisionStore,
    width_cap: usize,
}

type Shared = State<Arc<AppState>>;
type ApiResult<T> = Result<Json<Versioned<T>>, ApiError>;

#[derive(Serialize)]
pub struct Versioned<T> {
    v: u32,
    #[serde(flatten)]
    body: T,
}

fn ok<T>(body: T) -> ApiResult<T> {
    Ok(Json(Versioned {
        v: API_VERSION,
        body,
    }))
}

pub fn router(config: ServiceConfig) -> Router {
    let state = Arc::new(AppState {
        store: RevisionStore::new(config.revision_cap),
        width_cap: config.width_cap,
    });
    let api = Router::new()
        .route("/networks", post(upload))
        .route("/networks/{id}", get(fetch))
        .route("/networks/{id}/query", post(query))
        .route("/networks/{id}/tune", post(tune))
        .route("/networks/{id}/apply", post(apply))
        .route("/networks/{id}/bounds", post(bounds_after_change))
        .route("/networks/{id}/sensfn", get(sensfn))
        .route("/envelope", get(envelope))
        .with_state(state);
    match config.ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves the API on `addr` until the process exits.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(config)).await
}

fn parse_body<T: DeserializeOwned>(body: &str) -> Result<T, ApiError> {
    serde_json::from_str(body).map_err(|e| {
        ApiError::malformed(e.to_string())
            .with_detail(serde_json::json!({ "line": e.line(), "column": e.column() }))
    })
}

fn revision(state: &AppState, id: &str) -> Result<Revision, ApiError> {
    state.store.get(id).ok_or_else(|| ApiError::unknown_revision(id))
}

/// Evidence as `"Var=value,..."` or as an object `{"Var": "value"}`.
#[derive(Deserialize, Default)]
#[serde(untagged)]
enum EvidenceInput {
    #[default]
    Empty,
    Text(String),
    Map(BTreeMap<String, String>),
}

impl EvidenceInput {
    fn resolve(&self, net: &BeliefNetwork) -> Result<Evidence, Error> {
        match self {
            EvidenceInput::Empty => Ok(Evidence::new()),
            EvidenceInput::Text(text) => parse_evidence(net, text),
            EvidenceInput::Map(map) => {
                Evidence::from_labels(net, map.iter().map(|(k, v)| (k.as_str(), v.as_str())))
            }
        }
    }
}

#[derive(Serialize)]
struct Created {
    id: String,
}

async fn upload(State(state): Shared, body: String) -> ApiResult<Created> {
    let net = load_network(&body)?;
    let rev = state.store.insert_root(net);
    ok(Created { id: rev.id })
}

#[derive(Serialize)]
struct ChangeBody {
    param: String,
    value: f64,
}

#[derive(Serialize)]
struct RevisionBody {
    id: String,
    network: NetworkDocument,
    parent: Option<String>,
    change: Option<ChangeBody>,
    children: Vec<String>,
    width: usize,
}

async fn fetch(State(state): Shared, Path(id): Path<String>) -> ApiResult<RevisionBody> {
    let rev = revision(&state, &id)?;
    ok(RevisionBody {
        children: state.store.children(&id),
        network: rev.network.to_document(),
        parent: rev.parent,
        change: rev.change.map(|c| ChangeBody {
            param: c.param,
            value: c.value,
        }),
        width: rev.width,
        id,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryRequest {
    #[serde(default)]
    evidence: EvidenceInput,
    /// Defaults to every value of every variable.
    #[serde(default)]
    events: Vec<String>,
}

#[derive(Serialize)]
struct Posterior {
    event: String,
    probability: f64,
}

#[derive(Serialize)]
struct QueryBody {
    evidence_probability: f64,
    posteriors: Vec<Posterior>,
}

async fn query(State(state): Shared, Path(id): Path<String>, body: String) -> ApiResult<QueryBody> {
    let req: QueryRequest = parse_body(&body)?;
    let rev = revision(&state, &id)?;
    let net = &rev.network;
    let evidence = req.evidence.resolve(net)?;
    let events = if req.events.is_empty() {
        net.var_ids()
            .flat_map(|v| (0..net.cardinality(v)).map(move |x| bntune_core::Event::new(v, x)))
            .collect()
    } else {
        req.events
            .iter()
            .map(|e| parse_event(net, e))
            .collect::<Result<Vec<_>, _>>()?
    };
    let fm = family_marginals(net, &evidence);
    let pe = fm.evidence_probability();
    if pe <= 0.0 {
        return Err(Error::ZeroEvidence.into());
    }
    let posteriors = events
        .into_iter()
        .map(|e| Posterior {
            event: e.describe(net),
            probability: (fm.event_probability(net, e) / pe).clamp(0.0, 1.0),
        })
        .collect();
    ok(QueryBody {
        evidence_probability: pe,
        posteriors,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TuneRequest {
    #[serde(default)]
    evidence: EvidenceInput,
    constraint: String,
}

#[derive(Serialize)]
struct RecommendationBody {
    param: String,
    variable: String,
    current: f64,
    status: RecommendationStatus,
    feasible: Interval,
    minimal_new_value: f64,
    /// `null` when the change reaches 0 or 1 and the distance is infinite.
    log_odds_distance: Option<f64>,
}

#[derive(Serialize)]
struct TuneBody {
    constraint: String,
    already_satisfied: bool,
    recommendations: Vec<RecommendationBody>,
    irrelevant: Vec<String>,
    irrelevant_count: usize,
}

async fn tune(State(state): Shared, Path(id): Path<String>, body: String) -> ApiResult<TuneBody> {
    let req: TuneRequest = parse_body(&body)?;
    let rev = revision(&state, &id)?;
    let net = &rev.network;
    let evidence = req.evidence.resolve(net)?;
    let constraint = parse_constraint(net, &req.constraint)?;
    if rev.width > state.width_cap {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "width_exceeded",
            format!(
                "elimination width {} exceeds the tuning cap of {}",
                rev.width, state.width_cap
            ),
        )
        .with_detail(serde_json::json!({ "width": rev.width, "cap": state.width_cap })));
    }
    let report = sensitivity::tune(net, &evidence, &constraint)?;
    let mut recommendations = Vec::new();
    let mut irrelevant = Vec::new();
    for rec in &report.recommendations {
        match (rec.feasible, rec.minimal_new_value) {
            (Some(feasible), Some(m)) if !report.already_satisfied => {
                recommendations.push(RecommendationBody {
                    param: rec.param.describe(net),
                    variable: net.name(rec.param.var).to_string(),
                    current: rec.current,
                    status: rec.status,
                    feasible,
                    minimal_new_value: m,
                    log_odds_distance: rec.log_odds_distance.filter(|d| d.is_finite()),
                })
            }
            (None, _) => irrelevant.push(rec.param.describe(net)),
            _ => {}
        }
    }
    ok(TuneBody {
        constraint: constraint.describe(net),
        already_satisfied: report.already_satisfied,
        irrelevant_count: irrelevant.len(),
        recommendations,
        irrelevant,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ApplyRequest {
    param: String,
    value: f64,
}

#[derive(Serialize)]
struct Applied {
    new_id: String,
    parent: String,
    change: ChangeBody,
}

async fn apply(State(state): Shared, Path(id): Path<String>, body: String) -> ApiResult<Applied> {
    let req: ApplyRequest = parse_body(&body)?;
    let rev = revision(&state, &id)?;
    let param = parse_param(&rev.network, &req.param)?;
    let next = apply_parameter_change(&rev.network, &param, req.value)?;
    let spec = param.describe(&rev.network);
    let change = Change {
        param: spec.clone(),
        value: req.value,
    };
    let child = state
        .store
        .derive(&id, next, change)
        .ok_or_else(|| ApiError::unknown_revision(&id))?;
    ok(Applied {
        new_id: child.id,
        parent: id,
        change: ChangeBody {
            param: spec,
            value: req.value,
        },
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsRequest {
    #[serde(default)]
    evidence: EvidenceInput,
    event: String,
    param: String,
    new_value: f64,
}

#[derive(Serialize)]
struct BoundsBody {
    event: String,
    param: String,
    current: f64,
    new_value: f64,
    budget: f64,
    q_lo: f64,
    q_hi: f64,
}

async fn bounds_after_change(
    State(state): Shared,
    Path(id): Path<String>,
    body: String,
) -> ApiResult<BoundsBody> {
    let req: BoundsRequest = parse_body(&body)?;
    let rev = revision(&state, &id)?;
    let net = &rev.network;
    let evidence = req.evidence.resolve(net)?;
    let event = parse_event(net, &req.event)?;
    let param = parse_param(net, &req.param)?;
    let g = sensitivity::query_interval_after_change(net, &evidence, event, &param, req.new_value)?;
    ok(BoundsBody {
        event: event.describe(net),
        param: param.describe(net),
        current: g.current,
        new_value: req.new_value,
        budget: g.budget,
        q_lo: g.interval.lo,
        q_hi: g.interval.hi,
    })
}

#[derive(Serialize)]
struct Sample {
    tau: f64,
    /// `null` where the evidence becomes impossible.
    value: Option<f64>,
}

#[derive(Serialize)]
struct SensfnBody {
    event: String,
    param: String,
    tau0: f64,
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    samples: Vec<Sample>,
}

fn required<'a>(params: &'a HashMap<String, String>, key: &str) -> Result<&'a str, ApiError> {
    params
        .get(key)
        .map(String::as_str)
        .ok_or_else(|| ApiError::malformed(format!("missing query parameter `{key}`")))
}

async fn sensfn(
    State(state): Shared,
    Path(id): Path<String>,
    Query(params): Query<HashMap<String, String>>,
) -> ApiResult<SensfnBody> {
    let rev = revision(&state, &id)?;
    let net = &rev.network;
    let evidence = parse_evidence(net, params.get("evidence").map_or("", String::as_str))?;
    let event = parse_event(net, required(&params, "event")?)?;
    let param = parse_param(net, required(&params, "param")?)?;
    let samples: usize = match params.get("samples") {
        Some(s) => s
            .parse()
            .ok()
            .filter(|&n| (2..=10_001).contains(&n))
            .ok_or_else(|| ApiError::malformed(format!("`samples` must be an integer in 2..=10001, got `{s}`")))?,
        None => 101,
    };
    let f = sensitivity::sensitivity_function(net, &evidence, event, &param)?;
    let samples = (0..samples)
        .map(|k| {
            let tau = k as f64 / (samples - 1) as f64;
            Sample {
                tau,
                value: f.eval(tau),
            }
        })
        .collect();
    ok(SensfnBody {
        event: event.describe(net),
        param: param.describe(net),
        tau0: f.tau0,
        a: f.a,
        b: f.b,
        c: f.c,
        d: f.d,
        samples,
    })
}

fn number(text: &str, what: &str) -> Result<f64, ApiError> {
    text.trim()
        .parse()
        .map_err(|_| ApiError::malformed(format!("{what} `{text}` is not a number")))
}

async fn envelope(Query(params): Query<HashMap<String, String>>) -> ApiResult<Envelope> {
    let current = number(required(&params, "current")?, "current")?;
    let range = required(&params, "range")?;
    let (lo, hi) = range
        .split_once(',')
        .ok_or_else(|| ApiError::malformed(format!("range `{range}` must be `LO,HI`")))?;
    let (lo, hi) = (number(lo, "range")?, number(hi, "range")?);
    if !(lo < hi) {
        return Err(ApiError::malformed(format!("range [{lo}, {hi}] is empty or degenerate")));
    }
    let grid = match params.get("step") {
        Some(s) => bounds::grid(number(s, "step")?),
        None => bounds::default_grid(),
    };
    if grid.is_empty() {
        return Err(ApiError::malformed("step must lie in (0, 1)"));
    }
    ok(bounds::permissible_envelope(current, Interval::new(lo, hi), &grid)?)
}
