//! Transmission network data model, JSON case ingestion and nodal admittance
//! assembly.
//!
//! Quantities are stored the way the case file states them (MW, MVAr, kV,
//! per-unit impedances on the system base) except bus angles, which are held
//! in radians. Conversion to per-unit injections happens in the solvers.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BusKind {
    Slack,
    PV,
    PQ,
}

mod degrees {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(rad: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(rad.to_degrees())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(f64::deserialize(d)?.to_radians())
    }
}

fn in_service() -> bool {
    true
}

fn unit_tap() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: u32,
    pub kind: BusKind,
    /// Per-unit voltage magnitude (initial guess or setpoint).
    pub v_mag: f64,
    /// Radians internally, degrees in files.
    #[serde(with = "degrees")]
    pub v_ang: f64,
    pub base_kv: f64,
    /// MW
    pub p_load: f64,
    /// MVAr
    pub q_load: f64,
    /// Shunt conductance, MW consumed at 1.0 pu.
    #[serde(default)]
    pub g_shunt: f64,
    /// Shunt susceptance, MVAr injected at 1.0 pu.
    #[serde(default)]
    pub b_shunt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub from_bus: u32,
    pub to_bus: u32,
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance, per-unit.
    #[serde(default)]
    pub b_shunt: f64,
    /// Off-nominal turns ratio on the from side.
    #[serde(default = "unit_tap")]
    pub tap: f64,
    #[serde(default = "in_service")]
    pub status: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub bus: u32,
    /// MW
    pub p_set: f64,
    /// MVAr
    pub q_min: f64,
    /// MVAr
    pub q_max: f64,
    pub mva_base: f64,
    pub v_set: f64,
    /// MW; used only to check dynamic initialisation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,
    /// Name of a parameter set in the dynamics library; `None` uses defaults.
    #[serde(default)]
    pub dynamic_model: Option<String>,
    #[serde(default = "in_service")]
    pub status: bool,
}

/// Supported case file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseFormat {
    Json,
}

impl CaseFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Ok(CaseFormat::Json),
            other => Err(Error::Schema(format!("unsupported case format {:?} (expected .json)", other.unwrap_or("")))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    system_mva_base: f64,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    generators: Vec<Generator>,
}

/// A validated transmission network. Immutable once built; mutating helpers
/// return new cases.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCase {
    pub name: Option<String>,
    pub system_mva_base: f64,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    generators: Vec<Generator>,
    index: HashMap<u32, usize>,
    slack: usize,
}

/// Read and validate a case file.
pub fn parse_case(path: impl AsRef<Path>, format: CaseFormat) -> Result<NetworkCase> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        CaseFormat::Json => NetworkCase::from_json_str(&text),
    }
}

impl NetworkCase {
    pub fn new(
        system_mva_base: f64,
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        generators: Vec<Generator>,
    ) -> Result<Self> {
        Self::build(None, system_mva_base, buses, branches, generators, false)
    }

    /// Like [`NetworkCase::new`] but accepts cases with islands.
    pub fn new_allow_islands(
        system_mva_base: f64,
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        generators: Vec<Generator>,
    ) -> Result<Self> {
        Self::build(None, system_mva_base, buses, branches, generators, true)
    }

    fn build(
        name: Option<String>,
        system_mva_base: f64,
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        generators: Vec<Generator>,
        allow_islands: bool,
    ) -> Result<Self> {
        if !(system_mva_base > 0.0) {
            return Err(Error::InvalidCase("system_mva_base must be positive".into()));
        }
        let mut index = HashMap::with_capacity(buses.len());
        let mut slack = None;
        for (i, b) in buses.iter().enumerate() {
            if b.id == 0 {
                return Err(Error::InvalidCase("bus ids must be positive".into()));
            }
            if index.insert(b.id, i).is_some() {
                return Err(Error::InvalidCase(format!("duplicate bus id {}", b.id)));
            }
            if !(b.v_mag > 0.0) {
                return Err(Error::InvalidCase(format!("bus {}: v_mag must be > 0", b.id)));
            }
            if !(b.base_kv > 0.0) {
                return Err(Error::InvalidCase(format!("bus {}: base_kv must be > 0", b.id)));
            }
            if b.kind == BusKind::Slack {
                if slack.is_some() {
                    return Err(Error::MultipleSlackBuses);
                }
                slack = Some(i);
            }
        }
        let slack = slack.ok_or(Error::NoSlackBus)?;
        for (k, br) in branches.iter().enumerate() {
            for end in [br.from_bus, br.to_bus] {
                if !index.contains_key(&end) {
                    return Err(Error::DanglingReference(format!("branch {k} references missing bus {end}")));
                }
            }
            if br.from_bus == br.to_bus {
                return Err(Error::InvalidCase(format!("branch {k} connects bus {} to itself", br.from_bus)));
            }
            if br.status && br.x == 0.0 {
                return Err(Error::ZeroImpedanceBranch { index: k, from: br.from_bus, to: br.to_bus });
            }
            if !(br.tap > 0.0) {
                return Err(Error::InvalidCase(format!("branch {k}: tap must be > 0")));
            }
        }
        for (k, g) in generators.iter().enumerate() {
            if !index.contains_key(&g.bus) {
                return Err(Error::DanglingReference(format!("generator {k} references missing bus {}", g.bus)));
            }
            if g.q_min > g.q_max {
                return Err(Error::InvalidCase(format!("generator {k}: q_min > q_max")));
            }
            if !(g.mva_base > 0.0) {
                return Err(Error::InvalidCase(format!("generator {k}: mva_base must be > 0")));
            }
        }
        let case = NetworkCase { name, system_mva_base, buses, branches, generators, index, slack };
        if !allow_islands {
            let islands = case.islands(None);
            if islands > 1 {
                return Err(Error::InvalidCase(format!("network has {islands} islands over in-service branches")));
            }
        }
        Ok(case)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: CaseFile = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        Self::build(file.name, file.system_mva_base, file.buses, file.branches, file.generators, false)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let file = CaseFile {
            name: self.name.clone(),
            system_mva_base: self.system_mva_base,
            buses: self.buses.clone(),
            branches: self.branches.clone(),
            generators: self.generators.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn n_bus(&self) -> usize {
        self.buses.len()
    }

    /// Position of bus `id` in bus order.
    pub fn bus_index(&self, id: u32) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub(crate) fn idx(&self, id: u32) -> usize {
        self.index[&id]
    }

    pub fn bus(&self, id: u32) -> Option<&Bus> {
        self.bus_index(id).map(|i| &self.buses[i])
    }

    pub fn slack_index(&self) -> usize {
        self.slack
    }

    /// Indices of in-service generators at bus position `i`.
    pub fn generators_at(&self, i: usize) -> Vec<usize> {
        let id = self.buses[i].id;
        self.generators.iter().enumerate().filter(|(_, g)| g.status && g.bus == id).map(|(k, _)| k).collect()
    }

    /// Returns a copy with a modified bus. The id must not change.
    pub fn with_bus(&self, id: u32, f: impl FnOnce(&mut Bus)) -> Result<Self> {
        let i = self.bus_index(id).ok_or_else(|| Error::DanglingReference(format!("bus {id} not in case")))?;
        let mut out = self.clone();
        f(&mut out.buses[i]);
        if out.buses[i].id != id {
            return Err(Error::invalid("bus id cannot change"));
        }
        Ok(out)
    }

    /// Returns a copy with an extra generator appended (its index is the old
    /// generator count).
    pub fn with_generator(&self, gen: Generator) -> Result<Self> {
        let mut gens = self.generators.clone();
        gens.push(gen);
        Self::build(self.name.clone(), self.system_mva_base, self.buses.clone(), self.branches.clone(), gens, true)
    }

    /// Returns a copy with branch `k` set out of service.
    pub fn without_branch(&self, k: usize) -> Result<Self> {
        if k >= self.branches.len() {
            return Err(Error::DanglingReference(format!("branch {k} not in case")));
        }
        let mut out = self.clone();
        out.branches[k].status = false;
        Ok(out)
    }

    fn adjacency(&self, skip_branch: Option<usize>) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.buses.len()];
        for (k, br) in self.branches.iter().enumerate() {
            if !br.status || Some(k) == skip_branch {
                continue;
            }
            let (f, t) = (self.idx(br.from_bus), self.idx(br.to_bus));
            adj[f].push(t);
            adj[t].push(f);
        }
        adj
    }

    /// Number of connected components over in-service branches, optionally
    /// pretending branch `skip_branch` is open.
    pub fn islands(&self, skip_branch: Option<usize>) -> usize {
        let adj = self.adjacency(skip_branch);
        let mut seen = vec![false; adj.len()];
        let mut count = 0;
        for start in 0..adj.len() {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        count
    }

    /// Hop distance (in-service branches) from bus `id` to every bus, keyed by
    /// bus id. Unreachable buses are absent.
    pub fn hop_distances(&self, id: u32) -> Result<BTreeMap<u32, usize>> {
        let start = self.bus_index(id).ok_or_else(|| Error::DanglingReference(format!("bus {id} not in case")))?;
        let adj = self.adjacency(None);
        let mut dist = vec![usize::MAX; adj.len()];
        dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        Ok(dist.iter().enumerate().filter(|(_, d)| **d != usize::MAX).map(|(i, d)| (self.buses[i].id, *d)).collect())
    }
}

/// One branch's contribution to the admittance matrix: `(row, col, value)`
/// in bus positions.
pub fn branch_stamp(case: &NetworkCase, k: usize) -> [(usize, usize, Complex64); 4] {
    let br = &case.branches[k];
    let f = case.idx(br.from_bus);
    let t = case.idx(br.to_bus);
    let ys = Complex64::new(br.r, br.x).inv();
    let half_b = Complex64::new(0.0, br.b_shunt / 2.0);
    let ytt = ys + half_b;
    let yff = ytt / (br.tap * br.tap);
    let yft = -ys / br.tap;
    [(f, f, yff), (f, t, yft), (t, f, yft), (t, t, ytt)]
}

/// Sparse complex nodal admittance matrix in compressed-row form, per-unit on
/// the system base, rows and columns in bus order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl AdmittanceMatrix {
    /// Assemble from unsorted triplets; duplicates are summed.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, Complex64)]) -> Self {
        let mut rows: Vec<BTreeMap<usize, Complex64>> = vec![BTreeMap::new(); dim];
        for &(r, c, v) in triplets {
            *rows[r].entry(c).or_default() += v;
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        AdmittanceMatrix { dim, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Structural entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[span.clone()].binary_search(&j) {
            Ok(p) => self.vals[span.start + p],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, Complex64)> {
        (0..self.dim).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v))).collect()
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim).map(|i| self.row(i).map(|(j, y)| y * x[j]).sum()).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let mut out = vec![vec![Complex64::new(0.0, 0.0); self.dim]; self.dim];
        for (i, j, v) in self.triplets() {
            out[i][j] = v;
        }
        out
    }
}

/// Standard pi-model assembly. Out-of-service branches contribute nothing.
pub fn build_ybus(case: &NetworkCase) -> AdmittanceMatrix {
    let base = case.system_mva_base;
    let mut trip = Vec::with_capacity(4 * case.branches.len() + case.n_bus());
    for (k, br) in case.branches.iter().enumerate() {
        if br.status {
            trip.extend(branch_stamp(case, k));
        }
    }
    for (i, b) in case.buses.iter().enumerate() {
        // ensure every diagonal is structurally present
        trip.push((i, i, Complex64::new(b.g_shunt, b.b_shunt) / base));
    }
    AdmittanceMatrix::from_triplets(case.n_bus(), &trip)
}
