//! Graphings and treeings of a finite groupoid: the induced fibre graphs,
//! connectivity and cycle diagnostics, BFS length metrics, orientation, and
//! the staged construction of positive definite witnesses from a treeing.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::Zero;
use thiserror::Error;

use crate::algebra::ArrowFunction;
use crate::groupoid::{bisection_partition, ArrowIx, Bisection, FiniteGroupoid, UnitIx};
use crate::posdef::{extend_by_zero, subgroupoid_generated};

#[derive(Debug, Error)]
pub enum TreeingError {
    #[error("graphing is not symmetric: {0} present without its inverse")]
    NotSymmetric(String),
    #[error("graphing contains the unit arrow {0}")]
    ContainsUnit(String),
    #[error("graphing does not generate the groupoid; missing e.g. {0}")]
    NotGenerating(String),
    #[error("fibre at unit {0} is disconnected; the length metric is undefined")]
    DisconnectedFibre(String),
    #[error("arrow set is not a treeing")]
    NotTreeing,
    #[error("self-inverse element {0} admits no orientation")]
    SelfInverse(String),
    #[error("no admissible stage index below {0}")]
    StageSearchExhausted(u64),
    #[error("unknown arrow id {0:?}")]
    UnknownArrow(String),
}

/// A symmetric generating arrow set avoiding the units.
#[derive(Debug, Clone)]
pub struct Graphing {
    groupoid: Arc<FiniteGroupoid>,
    /// In input order, deduplicated.
    arrows: Vec<ArrowIx>,
    set: HashSet<ArrowIx>,
}

impl Graphing {
    pub fn new(g: &Arc<FiniteGroupoid>, arrows: &[ArrowIx]) -> Result<Self, TreeingError> {
        let mut ordered = Vec::new();
        let mut set = HashSet::new();
        for &a in arrows {
            if set.insert(a) {
                ordered.push(a);
            }
        }
        for &a in &ordered {
            if g.is_unit_arrow(a) {
                return Err(TreeingError::ContainsUnit(g.arrow_id(a).to_string()));
            }
            if !set.contains(&g.inverse(a)) {
                return Err(TreeingError::NotSymmetric(g.arrow_id(a).to_string()));
            }
        }
        let generated = subgroupoid_generated(g, &ordered);
        if generated.len() != g.n_arrows() {
            let missing = g
                .arrows()
                .find(|a| !generated.contains(a))
                .map(|a| g.arrow_id(a).to_string())
                .unwrap_or_default();
            return Err(TreeingError::NotGenerating(missing));
        }
        Ok(Graphing { groupoid: g.clone(), arrows: ordered, set })
    }

    pub fn groupoid(&self) -> &Arc<FiniteGroupoid> {
        &self.groupoid
    }

    pub fn arrows(&self) -> &[ArrowIx] {
        &self.arrows
    }

    pub fn contains(&self, a: ArrowIx) -> bool {
        self.set.contains(&a)
    }

    /// Largest number of graphing arrows leaving one range fibre,
    /// k = max over x of #(Q meet G^x); the fibre degree bound.
    pub fn fibre_degree_bound(&self) -> usize {
        let g = &self.groupoid;
        g.units()
            .map(|x| g.range_fibre(x).iter().filter(|&&a| self.set.contains(&a)).count())
            .max()
            .unwrap_or(0)
    }
}

/// Per-fibre diagnostic of the tree test.
#[derive(Debug, Clone)]
pub struct FibreDiag {
    pub unit: UnitIx,
    pub n_vertices: usize,
    /// Undirected edge count.
    pub n_edges: usize,
    pub connected: bool,
    /// A witness cycle as a closed vertex sequence of arrow ids, if any.
    pub cycle: Option<Vec<String>>,
}

/// Outcome of the treeing test: every fibre graph connected and acyclic.
#[derive(Debug, Clone)]
pub struct TreeingReport {
    pub is_treeing: bool,
    pub fibres: Vec<FibreDiag>,
}

/// Fibre graph structure over the range fibre of one unit, restricted to a
/// vertex subset.
struct FibreGraph {
    vertices: Vec<ArrowIx>,
    /// adjacency by local index
    adj: Vec<Vec<usize>>,
}

fn fibre_graph(
    g: &FiniteGroupoid,
    q: &HashSet<ArrowIx>,
    x: UnitIx,
    restrict: Option<&HashSet<ArrowIx>>,
) -> FibreGraph {
    let vertices: Vec<ArrowIx> = g
        .range_fibre(x)
        .iter()
        .copied()
        .filter(|a| restrict.map_or(true, |r| r.contains(a)))
        .collect();
    let index: HashMap<ArrowIx, usize> =
        vertices.iter().enumerate().map(|(i, &a)| (a, i)).collect();
    let adj = vertices
        .iter()
        .map(|&v| {
            vertices
                .iter()
                .filter(|&&w| {
                    w != v && {
                        let step = g.compose(g.inverse(v), w).expect("same range fibre");
                        q.contains(&step)
                    }
                })
                .map(|&w| index[&w])
                .collect()
        })
        .collect();
    FibreGraph { vertices, adj }
}

impl FibreGraph {
    fn n_edges(&self) -> usize {
        self.adj.iter().map(|n| n.len()).sum::<usize>() / 2
    }

    /// BFS from `start`, returning distances (usize::MAX when unreachable)
    /// and parents.
    fn bfs(&self, start: usize) -> (Vec<usize>, Vec<usize>) {
        let n = self.vertices.len();
        let mut dist = vec![usize::MAX; n];
        let mut parent = vec![usize::MAX; n];
        let mut queue = VecDeque::from([start]);
        dist[start] = 0;
        while let Some(v) = queue.pop_front() {
            for &w in &self.adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    parent[w] = v;
                    queue.push_back(w);
                }
            }
        }
        (dist, parent)
    }

    fn connected(&self) -> bool {
        if self.vertices.is_empty() {
            return true;
        }
        let (dist, _) = self.bfs(0);
        dist.iter().all(|&d| d != usize::MAX)
    }

    /// Find one cycle (as a closed local-index path), if the graph has any.
    fn find_cycle(&self) -> Option<Vec<usize>> {
        let n = self.vertices.len();
        let mut seen = vec![false; n];
        for root in 0..n {
            if seen[root] {
                continue;
            }
            let (dist, parent) = self.bfs(root);
            for v in 0..n {
                if dist[v] == usize::MAX {
                    continue;
                }
                seen[v] = true;
                for &w in &self.adj[v] {
                    if dist[w] == usize::MAX || parent[v] == w || parent[w] == v || w > v {
                        continue;
                    }
                    // Non-tree edge (v, w): walk both ancestries to the
                    // least common ancestor.
                    let path_to_root = |mut u: usize| {
                        let mut path = vec![u];
                        while parent[u] != usize::MAX {
                            u = parent[u];
                            path.push(u);
                        }
                        path
                    };
                    let pv = path_to_root(v);
                    let pw = path_to_root(w);
                    let on_pv: HashSet<usize> = pv.iter().copied().collect();
                    let lca = *pw.iter().find(|u| on_pv.contains(u)).expect("shared root");
                    let mut cycle: Vec<usize> =
                        pv.iter().take_while(|&&u| u != lca).copied().collect();
                    cycle.push(lca);
                    let mut back: Vec<usize> =
                        pw.iter().take_while(|&&u| u != lca).copied().collect();
                    back.reverse();
                    cycle.extend(back);
                    cycle.push(v);
                    return Some(cycle);
                }
            }
        }
        None
    }
}

/// Test whether a graphing is a treeing; per-unit connectivity and cycle
/// diagnostics either way.
pub fn is_treeing(q: &Graphing) -> TreeingReport {
    let g = q.groupoid();
    let mut fibres = Vec::new();
    let mut ok = true;
    for x in g.units() {
        let fg = fibre_graph(g, &q.set, x, None);
        let connected = fg.connected();
        let cycle = fg
            .find_cycle()
            .map(|c| c.iter().map(|&i| g.arrow_id(fg.vertices[i]).to_string()).collect::<Vec<_>>());
        let is_tree =
            connected && cycle.is_none() && fg.n_edges() + 1 == fg.vertices.len().max(1);
        if !is_tree {
            ok = false;
        }
        fibres.push(FibreDiag {
            unit: x,
            n_vertices: fg.vertices.len(),
            n_edges: fg.n_edges(),
            connected,
            cycle,
        });
    }
    TreeingReport { is_treeing: ok, fibres }
}

/// The field of fibre length metrics of a graphing, plus the induced
/// length function psi(a) = d_{r(a)}(r(a), a).
#[derive(Debug)]
pub struct TreeMetric {
    groupoid: Arc<FiniteGroupoid>,
    /// Per unit: fibre vertex list and all-pairs distances.
    vertices: Vec<Vec<ArrowIx>>,
    dist: Vec<Vec<Vec<usize>>>,
    pub psi: ArrowFunction,
}

impl TreeMetric {
    /// d_x(v, w) for two vertices of the fibre over x.
    pub fn distance(&self, x: UnitIx, v: ArrowIx, w: ArrowIx) -> Option<usize> {
        let vs = &self.vertices[x];
        let i = vs.iter().position(|&a| a == v)?;
        let j = vs.iter().position(|&a| a == w)?;
        Some(self.dist[x][i][j])
    }

    pub fn groupoid(&self) -> &Arc<FiniteGroupoid> {
        &self.groupoid
    }
}

/// All-pairs BFS distances on every fibre graph; errors if some fibre is
/// disconnected. Defined for any graphing; the CND guarantee for psi needs
/// a treeing.
pub fn tree_metric(q: &Graphing) -> Result<TreeMetric, TreeingError> {
    let g = q.groupoid();
    metric_on_subset(g, &q.set, None)
}

fn metric_on_subset(
    g: &Arc<FiniteGroupoid>,
    q: &HashSet<ArrowIx>,
    restrict: Option<&HashSet<ArrowIx>>,
) -> Result<TreeMetric, TreeingError> {
    let mut vertices = Vec::new();
    let mut dist = Vec::new();
    for x in g.units() {
        let fg = fibre_graph(g, q, x, restrict);
        let n = fg.vertices.len();
        let mut d = vec![vec![0usize; n]; n];
        for start in 0..n {
            let (row, _) = fg.bfs(start);
            if row.iter().any(|&v| v == usize::MAX) {
                return Err(TreeingError::DisconnectedFibre(g.unit_id(x).to_string()));
            }
            d[start] = row;
        }
        vertices.push(fg.vertices);
        dist.push(d);
    }

    let mut psi = ArrowFunction::zero(g);
    for a in g.arrows() {
        if restrict.map_or(false, |r| !r.contains(&a)) {
            continue;
        }
        let x = g.range(a);
        let vs = &vertices[x];
        let i = vs.iter().position(|&v| v == g.unit_arrow(x)).expect("unit in fibre");
        let j = vs.iter().position(|&v| v == a).expect("arrow in own fibre");
        psi.set(a, Complex64::new(dist[x][i][j] as f64, 0.0));
    }
    Ok(TreeMetric { groupoid: g.clone(), vertices, dist, psi })
}

/// Result of orienting a graphing.
#[derive(Debug, Clone)]
pub struct Orientation {
    pub q_plus: Vec<ArrowIx>,
    pub q_minus: Vec<ArrowIx>,
    /// The induced edge orientation is preserved by the left action; this
    /// is observed on all composable translations rather than asserted
    /// a priori.
    pub action_invariance_observed: bool,
}

/// Split Q into Q_+ and Q_+^{-1} using the input-order index as the
/// injective score; errors on self-inverse elements.
pub fn orient(q: &Graphing) -> Result<Orientation, TreeingError> {
    let g = q.groupoid();
    let index: HashMap<ArrowIx, usize> =
        q.arrows.iter().enumerate().map(|(i, &a)| (a, i)).collect();
    let mut q_plus = Vec::new();
    let mut q_minus = Vec::new();
    for &a in &q.arrows {
        let inv = g.inverse(a);
        if inv == a {
            return Err(TreeingError::SelfInverse(g.arrow_id(a).to_string()));
        }
        if index[&a] < index[&inv] {
            q_plus.push(a);
        } else {
            q_minus.push(a);
        }
    }

    // Observed invariance of the oriented edge relation under translation:
    // (cv)^{-1}(cw) = v^{-1}w whenever c composes with both endpoints.
    let plus: HashSet<ArrowIx> = q_plus.iter().copied().collect();
    let mut invariant = true;
    for x in g.units() {
        for &v in g.range_fibre(x) {
            for &w in g.range_fibre(x) {
                let step = g.compose(g.inverse(v), w).expect("same fibre");
                if !plus.contains(&step) {
                    continue;
                }
                for c in g.arrows() {
                    let (Some(cv), Some(cw)) = (g.compose(c, v), g.compose(c, w)) else {
                        continue;
                    };
                    let moved = g.compose(g.inverse(cv), cw).expect("same fibre");
                    if !plus.contains(&moved) {
                        invariant = false;
                    }
                }
            }
        }
    }
    Ok(Orientation { q_plus, q_minus, action_invariance_observed: invariant })
}

/// One stage of the treeing-derived witness sequence.
#[derive(Debug)]
pub struct WitnessStage {
    /// Stage index k (1-based).
    pub k: usize,
    /// The positive definite function exp(-psi_k / n_k), zero off the
    /// generated subgroupoid.
    pub f: ArrowFunction,
    /// Chosen exponent denominator.
    pub n_k: u64,
    /// sup over the window A_{k,k} of 1 - F.
    pub sup_deviation: f64,
    /// Arrows of the subgroupoid generated by the truncated graphing.
    pub subgroupoid: Vec<ArrowIx>,
    /// nu-mass of the window A_{k,k}.
    pub window_mass: Rational64,
}

/// Staged Haagerup witnesses from a treeing: truncate Q along a bisection
/// partition, take the generated subgroupoid with its own length function,
/// damp exponentially with the smallest admissible rate, and extend by zero.
pub fn haagerup_from_treeing(
    q: &Graphing,
    stages: usize,
    partition: Option<&[Bisection]>,
) -> Result<Vec<WitnessStage>, TreeingError> {
    let report = is_treeing(q);
    if !report.is_treeing {
        return Err(TreeingError::NotTreeing);
    }
    let g = q.groupoid();
    let default_partition;
    let partition = match partition {
        Some(p) => p,
        None => {
            default_partition = bisection_partition(g);
            &default_partition
        }
    };

    let mut out = Vec::new();
    for k in 1..=stages {
        // Q'_k = union of Q with the first k bisections, symmetrized.
        let mut truncated: Vec<ArrowIx> = Vec::new();
        for piece in partition.iter().take(k) {
            for &a in &piece.arrows {
                if q.contains(a) {
                    truncated.push(a);
                    truncated.push(g.inverse(a));
                }
            }
        }
        let sub = subgroupoid_generated(g, &truncated);
        let sub_set: HashSet<ArrowIx> = sub.iter().copied().collect();
        let q_k: HashSet<ArrowIx> = truncated.into_iter().collect();

        let metric = metric_on_subset(g, &q_k, Some(&sub_set))?;
        let psi = &metric.psi;

        // Window A_{k,k} = { a in G_k : psi_k(a) <= k } and its sup rule.
        let window: Vec<ArrowIx> = sub
            .iter()
            .copied()
            .filter(|&a| psi.value(a).re <= k as f64)
            .collect();
        let p_max = window.iter().map(|&a| psi.value(a).re).fold(0.0_f64, f64::max);
        let window_mass = window
            .iter()
            .map(|&a| g.mass(g.source(a)))
            .fold(Rational64::zero(), |s, m| s + m);

        let bound = 1.0 / k as f64;
        let mut n_k = 0u64;
        for n in 1..=1_000_000u64 {
            if 1.0 - (-p_max / n as f64).exp() <= bound {
                n_k = n;
                break;
            }
        }
        if n_k == 0 {
            return Err(TreeingError::StageSearchExhausted(1_000_000));
        }

        // F restricted to the subgroupoid, then extended by zero.
        let mut f_sub = ArrowFunction::zero(g);
        for &a in &sub {
            f_sub.set(a, Complex64::new((-psi.value(a).re / n_k as f64).exp(), 0.0));
        }
        let f = extend_by_zero(&f_sub, &sub, 1e-10)
            .expect("exp(-psi/n) is positive definite on the generated subgroupoid");

        let sup_deviation = 1.0 - (-p_max / n_k as f64).exp();
        out.push(WitnessStage { k, f, n_k, sup_deviation, subgroupoid: sub, window_mass });
    }
    Ok(out)
}

/// The finite ball-count bound for the sublevel mass of a treeing length
/// function: nu{psi <= c} is at most sum over x of mu(x) * min(#G^x,
/// 1 + k + ... + k^c) with k the fibre degree bound. The cruder single-term
/// bound k^c is reported alongside for comparison; it can fail for small k.
#[derive(Debug, Clone)]
pub struct BallBoundCheck {
    pub c: usize,
    pub mass: Rational64,
    pub ball_bound: Rational64,
    pub ball_bound_holds: bool,
    pub crude_bound: f64,
    pub crude_bound_holds: bool,
}

pub fn sublevel_ball_bound(q: &Graphing, metric: &TreeMetric, c: usize) -> BallBoundCheck {
    let g = q.groupoid();
    let k = q.fibre_degree_bound();
    let mass: Rational64 = g
        .arrows()
        .filter(|&a| metric.psi.value(a).re <= c as f64)
        .map(|a| g.mass(g.source(a)))
        .fold(Rational64::zero(), |s, m| s + m);

    // 1 + k + ... + k^c, capped by the fibre size.
    let geom: u64 = if k <= 1 {
        c as u64 + 1
    } else {
        (0..=c as u32).map(|j| (k as u64).pow(j)).sum()
    };
    let ball_bound: Rational64 = g
        .units()
        .map(|x| g.mass(x) * Rational64::from_integer((g.range_fibre(x).len() as i64).min(geom as i64)))
        .fold(Rational64::zero(), |s, m| s + m);

    let crude = (k as f64).powi(c as i32);
    let mass_f = *mass.numer() as f64 / *mass.denom() as f64;
    BallBoundCheck {
        c,
        mass,
        ball_bound,
        ball_bound_holds: mass <= ball_bound,
        crude_bound: crude,
        crude_bound_holds: mass_f <= crude + 1e-12,
    }
}

/// Cayley-graph consistency report for a one-unit (group) groupoid and a
/// generator set.
#[derive(Debug)]
pub struct CayleyReport {
    pub single_unit: bool,
    /// The symmetrized edge set S union S^{-1}.
    pub q: Vec<ArrowIx>,
    pub generates: bool,
    pub missing: Vec<String>,
    pub treeing: Option<TreeingReport>,
}

impl CayleyReport {
    /// The finite reading of the free-generation criterion: the Cayley
    /// graph is a tree iff the generators are free, which at finite order
    /// happens only in degenerate cases.
    pub fn free(&self) -> bool {
        self.treeing.as_ref().map_or(false, |t| t.is_treeing)
    }
}

/// Build the Cayley edge set of a generator list on a group groupoid and
/// test it for treeness, listing cycles otherwise.
pub fn cayley_consistency(
    g: &Arc<FiniteGroupoid>,
    generators: &[ArrowIx],
) -> Result<CayleyReport, TreeingError> {
    let single_unit = g.n_units() == 1;
    let mut q: Vec<ArrowIx> = Vec::new();
    for &s in generators {
        if g.is_unit_arrow(s) {
            return Err(TreeingError::ContainsUnit(g.arrow_id(s).to_string()));
        }
        if !q.contains(&s) {
            q.push(s);
        }
        let inv = g.inverse(s);
        if !q.contains(&inv) {
            q.push(inv);
        }
    }
    let generated = subgroupoid_generated(g, &q);
    let missing: Vec<String> = g
        .arrows()
        .filter(|a| !generated.contains(a))
        .map(|a| g.arrow_id(a).to_string())
        .collect();
    let generates = missing.is_empty();
    let treeing = if generates {
        Some(is_treeing(&Graphing::new(g, &q)?))
    } else {
        None
    };
    Ok(CayleyReport { single_unit, q, generates, missing, treeing })
}

/// Convenience: look up graphing arrows by id.
pub fn graphing_from_ids(
    g: &Arc<FiniteGroupoid>,
    ids: &[String],
) -> Result<Graphing, TreeingError> {
    let arrows: Vec<ArrowIx> = ids
        .iter()
        .map(|id| g.arrow_ix(id).ok_or_else(|| TreeingError::UnknownArrow(id.clone())))
        .collect::<Result<_, _>>()?;
    Graphing::new(g, &arrows)
}
