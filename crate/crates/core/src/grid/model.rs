//! Electrical topology: the validated, index-resolved form of a network spec.

use std::collections::{BTreeMap, HashMap, VecDeque};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::GridError;

/// Priority class of a load. Critical loads are never shed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadClass {
    Residential,
    Commercial,
    Critical,
}

impl std::fmt::Display for LoadClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LoadClass::Residential => "residential",
            LoadClass::Commercial => "commercial",
            LoadClass::Critical => "critical",
        })
    }
}

fn default_base_mva() -> f64 {
    1.0
}
fn default_nominal_hz() -> f64 {
    60.0
}
fn default_breaker_delay() -> f64 {
    0.05
}
fn default_true() -> bool {
    true
}
fn default_h() -> f64 {
    1.5
}
fn default_d() -> f64 {
    1.0
}
fn default_droop() -> f64 {
    0.05
}
fn default_tg() -> f64 {
    0.5
}
fn default_xdpp() -> f64 {
    0.15
}
fn default_overload_limit() -> f64 {
    1.3
}
fn default_overload_duration() -> f64 {
    10.0
}
fn default_pm_max() -> f64 {
    1.0
}
fn default_unity() -> f64 {
    1.0
}
fn default_current_limit() -> f64 {
    1.5
}
fn default_filter_tc() -> f64 {
    0.02
}
fn default_utility_x() -> f64 {
    0.01
}

/// Network section of a scenario file, as written by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    #[serde(default = "default_base_mva")]
    pub base_mva: f64,
    #[serde(default = "default_nominal_hz")]
    pub nominal_hz: f64,
    pub buses: Vec<BusSpec>,
    #[serde(default)]
    pub branches: Vec<BranchSpec>,
    #[serde(default)]
    pub breakers: BTreeMap<String, BreakerSpec>,
    #[serde(default)]
    pub sources: BTreeMap<String, SourceSpec>,
    #[serde(default)]
    pub loads: BTreeMap<String, LoadSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusSpec {
    pub id: String,
    pub kv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    pub id: String,
    pub from: String,
    pub to: String,
    pub r_pu: f64,
    pub x_pu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breaker: Option<String>,
}

/// Circuit breaker settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BreakerSpec {
    /// Mechanical operate delay in seconds.
    #[serde(default = "default_breaker_delay")]
    pub operate_delay_s: f64,
    #[serde(default = "default_true")]
    pub closed: bool,
}

impl Default for BreakerSpec {
    fn default() -> Self {
        Self {
            operate_delay_s: default_breaker_delay(),
            closed: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSpec {
    Genset(GensetSpec),
    Inverter(InverterSpec),
    Utility(UtilitySpec),
}

impl SourceSpec {
    pub fn bus(&self) -> &str {
        match self {
            SourceSpec::Genset(g) => &g.bus,
            SourceSpec::Inverter(i) => &i.bus,
            SourceSpec::Utility(u) => &u.bus,
        }
    }

    pub fn breaker(&self) -> Option<&str> {
        match self {
            SourceSpec::Genset(g) => g.breaker.as_deref(),
            SourceSpec::Inverter(i) => i.breaker.as_deref(),
            SourceSpec::Utility(u) => u.breaker.as_deref(),
        }
    }
}

/// Diesel generator set: a voltage source behind subtransient reactance with
/// swing and droop-governor dynamics. Per-unit quantities are on the machine
/// base (`rated_kw`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GensetSpec {
    pub bus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breaker: Option<String>,
    pub rated_kw: f64,
    /// Dispatch while grid connected. Ignored when the genset starts islanded,
    /// in which case the reference is taken from the initial operating point.
    #[serde(default)]
    pub p_ref_kw: f64,
    #[serde(default = "default_h")]
    pub inertia_s: f64,
    #[serde(default = "default_d")]
    pub damping_pu: f64,
    #[serde(default = "default_droop")]
    pub droop_pu: f64,
    #[serde(default = "default_tg")]
    pub governor_tc_s: f64,
    #[serde(default = "default_xdpp")]
    pub subtransient_x_pu: f64,
    /// Ceiling on governor mechanical output.
    #[serde(default = "default_pm_max")]
    pub pm_max_pu: f64,
    #[serde(default = "default_overload_limit")]
    pub overload_limit_pu: f64,
    #[serde(default = "default_overload_duration")]
    pub overload_duration_s: f64,
    /// Terminal voltage the internal EMF is sized for at initialisation.
    #[serde(default = "default_unity")]
    pub v_set_pu: f64,
}

impl GensetSpec {
    pub fn new(bus: impl Into<String>, rated_kw: f64) -> Self {
        Self {
            bus: bus.into(),
            breaker: None,
            rated_kw,
            p_ref_kw: 0.0,
            inertia_s: default_h(),
            damping_pu: default_d(),
            droop_pu: default_droop(),
            governor_tc_s: default_tg(),
            subtransient_x_pu: default_xdpp(),
            pm_max_pu: default_pm_max(),
            overload_limit_pu: default_overload_limit(),
            overload_duration_s: default_overload_duration(),
            v_set_pu: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InverterMode {
    #[default]
    GridFollowing,
}

/// Grid-following inverter (PV, BESS): a current-limited P/Q injection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverterSpec {
    pub bus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breaker: Option<String>,
    pub rated_kva: f64,
    pub p_kw: f64,
    #[serde(default)]
    pub q_kvar: f64,
    /// Current limit as a multiple of rated current.
    #[serde(default = "default_current_limit")]
    pub current_limit: f64,
    #[serde(default = "default_filter_tc")]
    pub filter_tc_s: f64,
    #[serde(default)]
    pub mode: InverterMode,
    /// Relays that implement this inverter's voltage ride-through.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ride_through: Vec<String>,
}

impl InverterSpec {
    pub fn new(bus: impl Into<String>, rated_kva: f64, p_kw: f64, q_kvar: f64) -> Self {
        Self {
            bus: bus.into(),
            breaker: None,
            rated_kva,
            p_kw,
            q_kvar,
            current_limit: default_current_limit(),
            filter_tc_s: default_filter_tc(),
            mode: InverterMode::GridFollowing,
            ride_through: Vec::new(),
        }
    }
}

/// Main grid equivalent: a fixed-frequency voltage source behind an impedance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilitySpec {
    pub bus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breaker: Option<String>,
    #[serde(default = "default_unity")]
    pub voltage_pu: f64,
    #[serde(default)]
    pub r_pu: f64,
    #[serde(default = "default_utility_x")]
    pub x_pu: f64,
}

impl UtilitySpec {
    pub fn new(bus: impl Into<String>) -> Self {
        Self {
            bus: bus.into(),
            breaker: None,
            voltage_pu: 1.0,
            r_pu: 0.0,
            x_pu: default_utility_x(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSpec {
    pub bus: String,
    pub p_kw: f64,
    #[serde(default)]
    pub q_kvar: f64,
    pub class: LoadClass,
    #[serde(default)]
    pub sheddable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: String,
    pub kv: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub impedance: Complex64,
    pub breaker: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceKind {
    Genset(GensetSpec),
    Inverter(InverterSpec),
    Utility(UtilitySpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    pub id: String,
    pub bus: usize,
    pub breaker: Option<usize>,
    pub kind: SourceKind,
}

impl Source {
    /// Nameplate capacity in kW (kVA for inverters). Utility sources have none.
    pub fn capacity_kw(&self) -> f64 {
        match &self.kind {
            SourceKind::Genset(g) => g.rated_kw,
            SourceKind::Inverter(i) => i.rated_kva,
            SourceKind::Utility(_) => 0.0,
        }
    }

    pub fn is_voltage_source(&self) -> bool {
        !matches!(self.kind, SourceKind::Inverter(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Load {
    pub id: String,
    pub bus: usize,
    pub p_kw: f64,
    pub q_kvar: f64,
    pub class: LoadClass,
    pub sheddable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Breaker {
    pub id: String,
    pub operate_delay_s: f64,
    pub initially_closed: bool,
}

/// What a breaker physically switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakerSite {
    Branch(usize),
    Source(usize),
    Unattached,
}

/// Validated electrical topology. Immutable once built; everything that
/// changes during a run lives in [`super::DynamicState`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridModel {
    pub base_mva: f64,
    pub nominal_hz: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub sources: Vec<Source>,
    pub loads: Vec<Load>,
    pub breakers: Vec<Breaker>,
    bus_index: HashMap<String, usize>,
}

impl GridModel {
    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.bus_index.get(id).copied()
    }

    pub fn branch_index(&self, id: &str) -> Option<usize> {
        self.branches.iter().position(|b| b.id == id)
    }

    pub fn source_index(&self, id: &str) -> Option<usize> {
        self.sources.iter().position(|s| s.id == id)
    }

    pub fn load_index(&self, id: &str) -> Option<usize> {
        self.loads.iter().position(|l| l.id == id)
    }

    pub fn breaker_index(&self, id: &str) -> Option<usize> {
        self.breakers.iter().position(|b| b.id == id)
    }

    pub fn breaker_site(&self, breaker: usize) -> BreakerSite {
        if let Some(i) = self.branches.iter().position(|b| b.breaker == Some(breaker)) {
            return BreakerSite::Branch(i);
        }
        if let Some(i) = self.sources.iter().position(|s| s.breaker == Some(breaker)) {
            return BreakerSite::Source(i);
        }
        BreakerSite::Unattached
    }

    /// kW → per unit on the system base.
    pub fn kw_to_pu(&self, kw: f64) -> f64 {
        kw / (self.base_mva * 1000.0)
    }

    pub fn pu_to_kw(&self, pu: f64) -> f64 {
        pu * self.base_mva * 1000.0
    }

    /// Index of the genset whose speed defines the reported system frequency.
    pub fn reference_genset(&self) -> Option<usize> {
        self.sources
            .iter()
            .position(|s| matches!(s.kind, SourceKind::Genset(_)))
    }
}

fn lookup_bus(
    index: &HashMap<String, usize>,
    kind: &'static str,
    owner: &str,
    bus: &str,
) -> Result<usize, GridError> {
    index
        .get(bus)
        .copied()
        .ok_or_else(|| GridError::DanglingReference {
            kind,
            id: owner.to_string(),
            target: bus.to_string(),
        })
}

fn invalid(element: &str, field: &'static str, reason: &'static str) -> GridError {
    GridError::InvalidParameter {
        element: element.to_string(),
        field,
        reason,
    }
}

/// Validates a network spec and resolves all names to indices.
pub fn build_network(spec: &NetworkSpec) -> Result<GridModel, GridError> {
    if !(spec.base_mva > 0.0) {
        return Err(invalid("network", "base_mva", "must be positive"));
    }
    if spec.nominal_hz != 50.0 && spec.nominal_hz != 60.0 {
        return Err(invalid("network", "nominal_hz", "must be 50 or 60"));
    }
    if spec.buses.is_empty() {
        return Err(invalid("network", "buses", "at least one bus is required"));
    }

    let mut bus_index = HashMap::new();
    let mut buses = Vec::with_capacity(spec.buses.len());
    for b in &spec.buses {
        if !(b.kv > 0.0) {
            return Err(invalid(&b.id, "kv", "must be positive"));
        }
        if bus_index.insert(b.id.clone(), buses.len()).is_some() {
            return Err(GridError::DuplicateId(b.id.clone()));
        }
        buses.push(Bus {
            id: b.id.clone(),
            kv: b.kv,
        });
    }

    let breakers: Vec<Breaker> = spec
        .breakers
        .iter()
        .map(|(id, b)| {
            if !(b.operate_delay_s >= 0.0) {
                return Err(invalid(id, "operate_delay_s", "must be non-negative"));
            }
            Ok(Breaker {
                id: id.clone(),
                operate_delay_s: b.operate_delay_s,
                initially_closed: b.closed,
            })
        })
        .collect::<Result<_, _>>()?;
    let mut breaker_used = vec![false; breakers.len()];
    let mut resolve_breaker = |owner: &str, name: &Option<String>| -> Result<Option<usize>, GridError> {
        let Some(name) = name else { return Ok(None) };
        let i = breakers
            .iter()
            .position(|b| &b.id == name)
            .ok_or_else(|| GridError::DanglingReference {
                kind: "breaker",
                id: owner.to_string(),
                target: name.clone(),
            })?;
        if std::mem::replace(&mut breaker_used[i], true) {
            return Err(invalid(owner, "breaker", "breaker already switches another element"));
        }
        Ok(Some(i))
    };

    let mut branches = Vec::with_capacity(spec.branches.len());
    for br in &spec.branches {
        if branches.iter().any(|b: &Branch| b.id == br.id) {
            return Err(GridError::DuplicateId(br.id.clone()));
        }
        let from = lookup_bus(&bus_index, "branch", &br.id, &br.from)?;
        let to = lookup_bus(&bus_index, "branch", &br.id, &br.to)?;
        if from == to {
            return Err(invalid(&br.id, "to", "branch endpoints must differ"));
        }
        if br.r_pu < 0.0 || br.x_pu < 0.0 || (br.r_pu == 0.0 && br.x_pu == 0.0) {
            return Err(GridError::NonPositiveImpedance(br.id.clone()));
        }
        branches.push(Branch {
            id: br.id.clone(),
            from,
            to,
            impedance: Complex64::new(br.r_pu, br.x_pu),
            breaker: resolve_breaker(&br.id, &br.breaker)?,
        });
    }

    let mut sources = Vec::with_capacity(spec.sources.len());
    for (id, s) in &spec.sources {
        let bus = lookup_bus(&bus_index, "source", id, s.bus())?;
        let kind = match s {
            SourceSpec::Genset(g) => {
                if !(g.rated_kw > 0.0) {
                    return Err(invalid(id, "rated_kw", "must be positive"));
                }
                if !(g.inertia_s > 0.0) {
                    return Err(invalid(id, "inertia_s", "H must be positive"));
                }
                if !(g.droop_pu > 0.0) {
                    return Err(invalid(id, "droop_pu", "R must be positive"));
                }
                if !(g.subtransient_x_pu > 0.0) {
                    return Err(invalid(id, "subtransient_x_pu", "X'' must be positive"));
                }
                if !(g.governor_tc_s > 0.0) {
                    return Err(invalid(id, "governor_tc_s", "must be positive"));
                }
                if !(g.damping_pu >= 0.0) {
                    return Err(invalid(id, "damping_pu", "must be non-negative"));
                }
                if !(g.overload_limit_pu >= 1.0) {
                    return Err(invalid(id, "overload_limit_pu", "must be at least 1"));
                }
                if !(g.overload_duration_s >= 0.0) {
                    return Err(invalid(id, "overload_duration_s", "must be non-negative"));
                }
                if !(g.pm_max_pu > 0.0) {
                    return Err(invalid(id, "pm_max_pu", "must be positive"));
                }
                SourceKind::Genset(g.clone())
            }
            SourceSpec::Inverter(inv) => {
                if !(inv.rated_kva > 0.0) {
                    return Err(invalid(id, "rated_kva", "must be positive"));
                }
                if !(inv.current_limit >= 1.0) {
                    return Err(invalid(id, "current_limit", "k must be at least 1"));
                }
                if !(inv.filter_tc_s > 0.0) {
                    return Err(invalid(id, "filter_tc_s", "must be positive"));
                }
                if inv.p_kw.hypot(inv.q_kvar) > inv.rated_kva * (1.0 + 1e-12) {
                    return Err(invalid(id, "p_kw", "setpoint exceeds rated kVA"));
                }
                SourceKind::Inverter(inv.clone())
            }
            SourceSpec::Utility(u) => {
                if !(u.voltage_pu > 0.0) {
                    return Err(invalid(id, "voltage_pu", "must be positive"));
                }
                if u.r_pu < 0.0 || u.x_pu < 0.0 || (u.r_pu == 0.0 && u.x_pu == 0.0) {
                    return Err(GridError::NonPositiveImpedance(id.clone()));
                }
                SourceKind::Utility(u.clone())
            }
        };
        sources.push(Source {
            id: id.clone(),
            bus,
            breaker: resolve_breaker(id, &s.breaker().map(str::to_string))?,
            kind,
        });
    }

    let mut loads = Vec::with_capacity(spec.loads.len());
    for (id, l) in &spec.loads {
        let bus = lookup_bus(&bus_index, "load", id, &l.bus)?;
        if l.class == LoadClass::Critical && l.sheddable {
            return Err(invalid(id, "sheddable", "critical loads are never sheddable"));
        }
        if !(l.p_kw >= 0.0) {
            return Err(invalid(id, "p_kw", "must be non-negative"));
        }
        loads.push(Load {
            id: id.clone(),
            bus,
            p_kw: l.p_kw,
            q_kvar: l.q_kvar,
            class: l.class,
            sheddable: l.sheddable,
        });
    }

    // Connectivity with every breaker closed.
    let mut adj = vec![Vec::new(); buses.len()];
    for b in &branches {
        adj[b.from].push(b.to);
        adj[b.to].push(b.from);
    }
    let mut seen = vec![false; buses.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(n) = queue.pop_front() {
        for &m in &adj[n] {
            if !std::mem::replace(&mut seen[m], true) {
                queue.push_back(m);
            }
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(GridError::DisconnectedGraph(buses[i].id.clone()));
    }

    Ok(GridModel {
        base_mva: spec.base_mva,
        nominal_hz: spec.nominal_hz,
        buses,
        branches,
        sources,
        loads,
        breakers,
        bus_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_bus() -> NetworkSpec {
        NetworkSpec {
            base_mva: 1.0,
            nominal_hz: 60.0,
            buses: vec![
                BusSpec { id: "A".into(), kv: 0.48 },
                BusSpec { id: "B".into(), kv: 0.48 },
            ],
            branches: vec![BranchSpec {
                id: "L1".into(),
                from: "A".into(),
                to: "B".into(),
                r_pu: 0.01,
                x_pu: 0.1,
                breaker: None,
            }],
            breakers: BTreeMap::new(),
            sources: BTreeMap::from([(
                "gen".to_string(),
                SourceSpec::Genset(GensetSpec::new("A", 1000.0)),
            )]),
            loads: BTreeMap::from([(
                "ld".to_string(),
                LoadSpec {
                    bus: "B".into(),
                    p_kw: 500.0,
                    q_kvar: 0.0,
                    class: LoadClass::Residential,
                    sheddable: true,
                },
            )]),
        }
    }

    #[test]
    fn builds_valid_network() {
        let m = build_network(&two_bus()).unwrap();
        assert_eq!(m.buses.len(), 2);
        assert_eq!(m.bus_index("B"), Some(1));
        assert_eq!(m.reference_genset(), Some(0));
    }

    #[test]
    fn load_on_undeclared_bus_is_dangling() {
        let mut s = two_bus();
        s.loads.get_mut("ld").unwrap().bus = "Z".into();
        assert!(matches!(
            build_network(&s),
            Err(GridError::DanglingReference { kind: "load", .. })
        ));
    }

    #[test]
    fn isolated_bus_is_rejected() {
        let mut s = two_bus();
        s.buses.push(BusSpec { id: "C".into(), kv: 0.48 });
        assert!(matches!(build_network(&s), Err(GridError::DisconnectedGraph(b)) if b == "C"));
    }

    #[test]
    fn zero_impedance_branch_is_rejected() {
        let mut s = two_bus();
        s.branches[0].r_pu = 0.0;
        s.branches[0].x_pu = 0.0;
        assert!(matches!(build_network(&s), Err(GridError::NonPositiveImpedance(_))));
    }

    #[test]
    fn nominal_frequency_must_be_50_or_60() {
        let mut s = two_bus();
        s.nominal_hz = 55.0;
        assert!(build_network(&s).is_err());
    }

    #[test]
    fn critical_load_cannot_be_sheddable() {
        let mut s = two_bus();
        let ld = s.loads.get_mut("ld").unwrap();
        ld.class = LoadClass::Critical;
        assert!(build_network(&s).is_err());
    }

    #[test]
    fn duplicate_bus_is_rejected() {
        let mut s = two_bus();
        s.buses.push(BusSpec { id: "A".into(), kv: 0.48 });
        assert!(matches!(build_network(&s), Err(GridError::DuplicateId(_))));
    }
}
