//! Corpus pairing user conditions with optimized protocol parameters.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use log::debug;

use super::table::{fmt_f64, meta_comment, meta_values, parse_err, Table};
use crate::model::{key_rate, CharlieConditions, Misalignment, ProtocolParams, UserConditions};
use crate::optimize::{default_param_bounds, optimize_pair, LsaConfig, PsoConfig, SearchMode, Strategy};
use crate::{Error, Execution, Result};

pub const PARAM_HEADER: [&str; 21] = [
    "L_a", "L_b", "e_d", "mu_Za", "nu_Za", "mu_Xa", "nu_Xa", "P_Za_mu", "P_Za_nu", "P_Xa_mu", "P_Xa_nu", "mu_Zb",
    "nu_Zb", "mu_Xb", "nu_Xb", "P_Zb_mu", "P_Zb_nu", "P_Xb_mu", "P_Xb_nu", "rate", "provenance",
];

const CHARLIE_TAG: &str = "charlie";
const CHANNEL_TAG: &str = "channel";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    PsoAnchor,
    LsaWarmstart,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::PsoAnchor => "pso-anchor",
            Provenance::LsaWarmstart => "lsa-warmstart",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "pso-anchor" => Some(Provenance::PsoAnchor),
            "lsa-warmstart" => Some(Provenance::LsaWarmstart),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamRow {
    pub l_a: f64,
    pub l_b: f64,
    pub e_d: f64,
    pub params: ProtocolParams,
    pub rate: f64,
    pub provenance: Provenance,
}

impl ParamRow {
    pub fn conditions(&self) -> [f64; 3] {
        [self.l_a, self.l_b, self.e_d]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDataset {
    pub charlie: CharlieConditions,
    /// Fiber attenuation (dB/km) shared by all rows.
    pub alpha: f64,
    /// Free-form comment lines, written before the metadata.
    pub notes: Vec<String>,
    pub rows: Vec<ParamRow>,
}

impl ParamDataset {
    pub fn new(charlie: CharlieConditions, alpha: f64) -> Self {
        ParamDataset {
            charlie,
            alpha,
            notes: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn users(&self, row: &ParamRow) -> UserConditions {
        UserConditions {
            l_a: row.l_a,
            l_b: row.l_b,
            alpha: self.alpha,
        }
    }

    /// Checks every row against its stored rate.
    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            self.check_row(row).map_err(|e| Error::domain(format!("row {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    fn check_row(&self, row: &ParamRow) -> Result<()> {
        row.params.validate()?;
        let rate = key_rate(&row.params, &self.charlie, &self.users(row), &Misalignment::aligned(row.e_d))?;
        if (rate - row.rate).abs() > 1e-12 {
            return Err(Error::domain(format!("stored rate {} but parameters give {rate}", row.rate)));
        }
        Ok(())
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&PARAM_HEADER);
        t.comments.extend(self.notes.iter().cloned());
        t.comments.push(charlie_comment(&self.charlie));
        t.comments.push(meta_comment(CHANNEL_TAG, [("alpha", self.alpha)]));
        for r in &self.rows {
            let mut f: Vec<String> = [r.l_a, r.l_b, r.e_d].iter().map(|v| fmt_f64(*v)).collect();
            f.extend(r.params.to_array().iter().map(|v| fmt_f64(*v)));
            f.push(fmt_f64(r.rate));
            f.push(r.provenance.as_str().to_string());
            t.push(f);
        }
        t
    }

    /// Parses and re-validates every row.
    pub fn from_table(t: &Table) -> Result<Self> {
        t.expect_header(&PARAM_HEADER)?;
        let charlie = parse_charlie(t)?;
        let (line, channel) = t
            .meta(CHANNEL_TAG)?
            .ok_or_else(|| parse_err(1, 1, "missing `channel:` metadata comment"))?;
        let [alpha] = meta_values(line, &channel, ["alpha"])?;
        let mut ds = ParamDataset::new(charlie, alpha);
        ds.notes = t.notes(&[CHARLIE_TAG, CHANNEL_TAG]);
        for rec in &t.records {
            let mut v = [0.0; 20];
            for (c, slot) in v.iter_mut().enumerate() {
                *slot = rec.f64(c)?;
            }
            let provenance = Provenance::parse(rec.str(20))
                .ok_or_else(|| rec.error(20, &format!("unknown provenance `{}`", rec.str(20))))?;
            let row = ParamRow {
                l_a: v[0],
                l_b: v[1],
                e_d: v[2],
                params: ProtocolParams::from_slice(&v[3..19]),
                rate: v[19],
                provenance,
            };
            ds.check_row(&row).map_err(|e| rec.error(1, &e.to_string()))?;
            ds.rows.push(row);
        }
        Ok(ds)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_table().save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_table(&Table::load(path)?)
    }
}

pub(crate) fn charlie_comment(c: &CharlieConditions) -> String {
    meta_comment(
        CHARLIE_TAG,
        [
            ("dark_count", c.dark_count),
            ("eta_d", c.eta_d),
            ("f_ec", c.f_ec),
            ("n_pulses", c.n_pulses),
            ("n_sigma", c.n_sigma),
        ],
    )
}

pub(crate) fn parse_charlie(t: &Table) -> Result<CharlieConditions> {
    let (line, map) = t
        .meta(CHARLIE_TAG)?
        .ok_or_else(|| parse_err(1, 1, "missing `charlie:` metadata comment"))?;
    let [dark_count, eta_d, f_ec, n_pulses, n_sigma] =
        meta_values(line, &map, ["dark_count", "eta_d", "f_ec", "n_pulses", "n_sigma"])?;
    let c = CharlieConditions {
        dark_count,
        eta_d,
        f_ec,
        n_pulses,
        n_sigma,
    };
    c.validate().map_err(|e| parse_err(line, 1, &e.to_string()))?;
    Ok(c)
}

/// Lattice index `(L_a, L_b, e_d)`.
pub type Node = [usize; 3];

/// A rectangular lattice of user conditions, possibly with holes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionGrid {
    pub l_a: Vec<f64>,
    pub l_b: Vec<f64>,
    pub e_d: Vec<f64>,
    removed: BTreeSet<Node>,
}

impl ConditionGrid {
    pub fn new(l_a: Vec<f64>, l_b: Vec<f64>, e_d: Vec<f64>) -> Result<Self> {
        for (name, axis) in [("L_a", &l_a), ("L_b", &l_b), ("e_d", &e_d)] {
            if axis.is_empty() {
                return Err(Error::Config(format!("{name} axis is empty")));
            }
            if axis.windows(2).any(|w| !(w[1] > w[0])) || axis.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("{name} axis must be finite and strictly increasing")));
            }
        }
        if l_a[0] < 0.0 || l_b[0] < 0.0 {
            return Err(Error::Config("fiber lengths must be non-negative".into()));
        }
        if e_d[0] < 0.0 || e_d[e_d.len() - 1] > 0.5 {
            return Err(Error::Config("e_d axis must lie in [0, 0.5]".into()));
        }
        Ok(ConditionGrid {
            l_a,
            l_b,
            e_d,
            removed: BTreeSet::new(),
        })
    }

    /// `count` evenly spaced values starting at `start`.
    pub fn axis(start: f64, step: f64, count: usize) -> Vec<f64> {
        (0..count).map(|i| start + step * i as f64).collect()
    }

    pub fn remove(&mut self, node: Node) {
        self.removed.insert(node);
    }

    pub fn contains(&self, n: Node) -> bool {
        n[0] < self.l_a.len() && n[1] < self.l_b.len() && n[2] < self.e_d.len() && !self.removed.contains(&n)
    }

    pub fn conditions(&self, n: Node) -> [f64; 3] {
        [self.l_a[n[0]], self.l_b[n[1]], self.e_d[n[2]]]
    }

    /// Nodes in lexicographic order, which is also lexicographic in the
    /// conditions.
    pub fn nodes(&self) -> Vec<Node> {
        let mut out = Vec::new();
        for i in 0..self.l_a.len() {
            for j in 0..self.l_b.len() {
                for k in 0..self.e_d.len() {
                    if self.contains([i, j, k]) {
                        out.push([i, j, k]);
                    }
                }
            }
        }
        out
    }

    pub fn neighbors(&self, n: Node) -> Vec<Node> {
        let mut out = Vec::with_capacity(6);
        for axis in 0..3 {
            for up in [false, true] {
                let mut m = n;
                if up {
                    m[axis] += 1;
                } else if m[axis] == 0 {
                    continue;
                } else {
                    m[axis] -= 1;
                }
                if self.contains(m) {
                    out.push(m);
                }
            }
        }
        out
    }

    /// The four corners of the `(L_a, L_b)` plane plus every node with
    /// `L_a == L_b`, at every `e_d` level.
    pub fn default_anchors(&self) -> Vec<Node> {
        let (ia, ib) = (self.l_a.len() - 1, self.l_b.len() - 1);
        let mut set = BTreeSet::new();
        for k in 0..self.e_d.len() {
            for c in [[0, 0, k], [0, ib, k], [ia, 0, k], [ia, ib, k]] {
                set.insert(c);
            }
            for (i, a) in self.l_a.iter().enumerate() {
                for (j, b) in self.l_b.iter().enumerate() {
                    if a == b {
                        set.insert([i, j, k]);
                    }
                }
            }
        }
        set.into_iter().filter(|n| self.contains(*n)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ParamGenConfig {
    pub grid: ConditionGrid,
    /// Nodes solved by swarm search; `None` uses the grid's default anchors.
    pub anchors: Option<Vec<Node>>,
    pub charlie: CharlieConditions,
    pub alpha: f64,
    /// Swarm settings for anchors; each anchor derives its own seed from
    /// `pso.seed`.
    pub pso: PsoConfig,
    pub lsa: LsaConfig,
    pub execution: Execution,
}

impl ParamGenConfig {
    /// Standard relay, default attenuation and search settings, default anchors.
    pub fn new(grid: ConditionGrid, seed: u64) -> Self {
        ParamGenConfig {
            grid,
            anchors: None,
            charlie: CharlieConditions::standard(),
            alpha: UserConditions::DEFAULT_ALPHA,
            pso: PsoConfig::new(default_param_bounds(), seed),
            lsa: LsaConfig::new(default_param_bounds()),
            execution: Execution::default(),
        }
    }
}

/// Optimizes every grid node: swarm-plus-polish at anchors, then local search
/// warm-started from an already solved neighbor, breadth first. Nodes at the
/// same distance from the anchors run concurrently; rows come out in
/// canonical order either way.
pub fn gen_param_dataset(config: &ParamGenConfig) -> Result<ParamDataset> {
    let grid = &config.grid;
    config.charlie.validate()?;
    let anchors = config.anchors.clone().unwrap_or_else(|| grid.default_anchors());
    if anchors.is_empty() {
        return Err(Error::Config("no anchor nodes".into()));
    }
    if let Some(bad) = anchors.iter().find(|a| !grid.contains(**a)) {
        return Err(Error::Config(format!("anchor {bad:?} is not a grid node")));
    }
    let anchors: Vec<Node> = anchors.into_iter().collect::<BTreeSet<_>>().into_iter().collect();

    let solve = |node: Node, strategy: Strategy| -> Result<(ProtocolParams, f64)> {
        let [l_a, l_b, e_d] = grid.conditions(node);
        let users = UserConditions {
            l_a,
            l_b,
            alpha: config.alpha,
        };
        let found = optimize_pair(&config.charlie, &users, &Misalignment::aligned(e_d), SearchMode::Asymmetric, &strategy)?;
        Ok((found.params, found.rate))
    };

    let mut solved: BTreeMap<Node, (ProtocolParams, f64, Provenance)> = BTreeMap::new();
    let anchor_results = config.execution.map_range(anchors.len(), |i| {
        let mut pso = config.pso.clone();
        pso.seed = config.pso.seed.wrapping_add((i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        solve(anchors[i], Strategy::Hybrid { pso, lsa: config.lsa.clone() })
    });
    for (node, res) in anchors.iter().zip(anchor_results) {
        let (p, r) = res?;
        solved.insert(*node, (p, r, Provenance::PsoAnchor));
    }
    debug!("solved {} anchors", anchors.len());

    let mut frontier = anchors;
    while !frontier.is_empty() {
        let mut next: Vec<(Node, Node)> = Vec::new();
        let mut claimed = BTreeSet::new();
        for parent in &frontier {
            for n in grid.neighbors(*parent) {
                if !solved.contains_key(&n) && claimed.insert(n) {
                    next.push((n, *parent));
                }
            }
        }
        let results = config.execution.map(&next, |(node, parent)| {
            let initial = solved[parent].0;
            solve(
                *node,
                Strategy::Lsa {
                    initial,
                    config: config.lsa.clone(),
                },
            )
        });
        for ((node, _), res) in next.iter().zip(results) {
            let (p, r) = res?;
            solved.insert(*node, (p, r, Provenance::LsaWarmstart));
        }
        debug!("solved {} nodes by warm start", next.len());
        frontier = next.into_iter().map(|(n, _)| n).collect();
    }

    let all = grid.nodes();
    if let Some(orphan) = all.iter().find(|n| !solved.contains_key(*n)) {
        return Err(Error::Config(format!(
            "grid node {orphan:?} is not connected to any anchor"
        )));
    }
    let mut ds = ParamDataset::new(config.charlie, config.alpha);
    for node in all {
        let (params, rate, provenance) = solved[&node];
        let [l_a, l_b, e_d] = grid.conditions(node);
        ds.rows.push(ParamRow {
            l_a,
            l_b,
            e_d,
            params,
            rate,
            provenance,
        });
    }
    Ok(ds)
}
