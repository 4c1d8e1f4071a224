//! Lumped capacitive networks and their AC nodal solution.
//!
//! The solver is deliberately generic: it knows nothing about bodies or
//! devices, only nodes, capacitive branches, one ideal voltage source and
//! one output port. That makes it an independent check on the closed-form
//! transfer functions in [`crate::transfer`].

use std::collections::VecDeque;
use std::fmt::{self, Write as _};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{HbcError, Result};
use crate::quantity::{Capacitance, Frequency};
use crate::transfer::ChannelCapacitances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Branch {
    pub a: NodeId,
    pub b: NodeId,
    pub capacitance: Capacitance,
}

/// Ideal voltage source: `V(plus) - V(minus) = amplitude`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VoltageSource {
    pub plus: NodeId,
    pub minus: NodeId,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OutputPort {
    pub plus: NodeId,
    pub minus: NodeId,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapNetwork {
    labels: Vec<String>,
    reference: NodeId,
    branches: Vec<Branch>,
    source: VoltageSource,
    output: OutputPort,
}

/// Node indices of the network returned by [`build_channel_network`].
pub mod channel_nodes {
    use super::NodeId;

    pub const EARTH: NodeId = NodeId(0);
    pub const BODY: NodeId = NodeId(1);
    pub const TX_GROUND: NodeId = NodeId(2);
    pub const RX_GROUND: NodeId = NodeId(3);
}

impl CapNetwork {
    /// Builds a network with nodes labeled by index.
    pub fn new(
        node_count: usize,
        reference: NodeId,
        branches: Vec<Branch>,
        source: VoltageSource,
        output: OutputPort,
    ) -> Result<Self> {
        let labels = (0..node_count).map(|i| i.to_string()).collect();
        Self::with_labels(labels, reference, branches, source, output)
    }

    pub fn with_labels(
        labels: Vec<String>,
        reference: NodeId,
        branches: Vec<Branch>,
        source: VoltageSource,
        output: OutputPort,
    ) -> Result<Self> {
        let n = labels.len();
        if n < 2 {
            return Err(HbcError::InvalidNetwork(format!("need at least 2 nodes, got {n}")));
        }
        let in_range = |id: NodeId, what: &str| {
            if id.0 < n {
                Ok(())
            } else {
                Err(HbcError::InvalidNetwork(format!("{what} node {id} out of range 0..{n}")))
            }
        };
        in_range(reference, "reference")?;
        for (i, br) in branches.iter().enumerate() {
            in_range(br.a, "branch")?;
            in_range(br.b, "branch")?;
            if br.a == br.b {
                return Err(HbcError::InvalidNetwork(format!("branch {i} is a self-loop on node {}", br.a)));
            }
            let c = br.capacitance.value();
            if !(c > 0.0 && c.is_finite()) {
                return Err(HbcError::domain("branch capacitance", c, "must be finite and > 0"));
            }
        }
        in_range(source.plus, "source")?;
        in_range(source.minus, "source")?;
        if source.plus == source.minus {
            return Err(HbcError::InvalidNetwork("source terminals must be distinct".into()));
        }
        if !source.amplitude.is_finite() || source.amplitude == 0.0 {
            return Err(HbcError::domain("source amplitude", source.amplitude, "must be finite and nonzero"));
        }
        in_range(output.plus, "output")?;
        in_range(output.minus, "output")?;
        if output.plus == output.minus {
            return Err(HbcError::InvalidNetwork("output terminals must be distinct".into()));
        }
        Ok(CapNetwork {
            labels,
            reference,
            branches,
            source,
            output,
        })
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn reference(&self) -> NodeId {
        self.reference
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn source(&self) -> VoltageSource {
        self.source
    }

    pub fn output(&self) -> OutputPort {
        self.output
    }

    pub fn label(&self, node: NodeId) -> &str {
        &self.labels[node.0]
    }

    /// Copy with every branch capacitance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let branches = self
            .branches
            .iter()
            .map(|b| Branch {
                capacitance: b.capacitance * factor,
                ..*b
            })
            .collect();
        Self::with_labels(self.labels.clone(), self.reference, branches, self.source, self.output)
    }

    /// Debug listing: one `node_i node_j C_farads` line per branch, then
    /// `SRC plus minus amplitude` and `OUT plus minus`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for b in &self.branches {
            let _ = writeln!(out, "{} {} {:e}", b.a, b.b, b.capacitance.value());
        }
        let s = self.source;
        let _ = writeln!(out, "SRC {} {} {:e}", s.plus, s.minus, s.amplitude);
        let _ = writeln!(out, "OUT {} {}", self.output.plus, self.output.minus);
        out
    }
}

/// Builds the lumped channel circuit.
///
/// Nodes: earth (reference), body, Tx ground plate, Rx ground plate. The
/// source drives body against the Tx ground; the output is read across the
/// receiver load between body and Rx ground. The body-to-Tx-ground
/// capacitance sits directly across the ideal source and is omitted. A zero
/// `c_c` omits the Tx–Rx coupling branch.
pub fn build_channel_network(caps: &ChannelCapacitances) -> Result<CapNetwork> {
    use channel_nodes::*;
    caps.validate()?;

    let mut branches = vec![
        Branch { a: BODY, b: EARTH, capacitance: caps.c_b },
        Branch { a: TX_GROUND, b: EARTH, capacitance: caps.c_x_tx },
        Branch { a: RX_GROUND, b: EARTH, capacitance: caps.c_x_rx },
        Branch { a: BODY, b: RX_GROUND, capacitance: caps.c_l },
        Branch { a: BODY, b: RX_GROUND, capacitance: caps.c_gb_rx },
    ];
    if caps.c_c.value() > 0.0 {
        branches.push(Branch { a: TX_GROUND, b: RX_GROUND, capacitance: caps.c_c });
    }
    let labels = ["E", "B", "TG", "RG"].iter().map(|s| s.to_string()).collect();
    CapNetwork::with_labels(
        labels,
        EARTH,
        branches,
        VoltageSource { plus: BODY, minus: TX_GROUND, amplitude: 1.0 },
        OutputPort { plus: BODY, minus: RX_GROUND },
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnosis {
    Ok,
    Floating(Vec<NodeId>),
}

impl Diagnosis {
    pub fn is_ok(&self) -> bool {
        matches!(self, Diagnosis::Ok)
    }
}

/// Reports nodes that cannot reach the reference through branches or the source.
pub fn well_posedness_check(net: &CapNetwork) -> Diagnosis {
    let n = net.node_count();
    let mut adj = vec![Vec::new(); n];
    for b in &net.branches {
        adj[b.a.0].push(b.b.0);
        adj[b.b.0].push(b.a.0);
    }
    adj[net.source.plus.0].push(net.source.minus.0);
    adj[net.source.minus.0].push(net.source.plus.0);

    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([net.reference.0]);
    seen[net.reference.0] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    let floating: Vec<NodeId> = (0..n).filter(|&i| !seen[i]).map(NodeId).collect();
    if floating.is_empty() {
        Diagnosis::Ok
    } else {
        Diagnosis::Floating(floating)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferSolution {
    /// `(V(out+) - V(out-)) / amplitude`.
    pub ratio: Complex64,
    /// Potential of every node relative to the reference.
    pub node_potentials: Vec<Complex64>,
    /// Determinant of the nodal system in capacitance units, with the
    /// `jω` factors divided out. For a capacitive network `-ratio *
    /// charge_determinant` is the numerator polynomial of the transfer.
    pub charge_determinant: Complex64,
}

/// Solves the network at `frequency` by modified nodal analysis.
///
/// Unknowns are the non-reference node potentials plus the source current.
pub fn solve_transfer(net: &CapNetwork, frequency: Frequency) -> Result<TransferSolution> {
    let f = frequency.value();
    if !(f > 0.0 && f.is_finite()) {
        return Err(HbcError::domain("frequency", f, "must be finite and > 0"));
    }
    if let Diagnosis::Floating(nodes) = well_posedness_check(net) {
        return Err(HbcError::Singular { node: nodes[0] });
    }

    let n = net.node_count();
    // Map node -> row index, skipping the reference.
    let index: Vec<Option<usize>> = {
        let mut next = 0;
        (0..n)
            .map(|i| {
                if i == net.reference.0 {
                    None
                } else {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect()
    };
    let nv = n - 1;
    let dim = nv + 1;
    let jw = Complex64::new(0.0, frequency.angular());

    let mut m = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    let mut rhs = vec![Complex64::new(0.0, 0.0); dim];
    for b in &net.branches {
        let y = jw * b.capacitance.value();
        let (ia, ib) = (index[b.a.0], index[b.b.0]);
        if let Some(i) = ia {
            m[i][i] += y;
        }
        if let Some(j) = ib {
            m[j][j] += y;
        }
        if let (Some(i), Some(j)) = (ia, ib) {
            m[i][j] -= y;
            m[j][i] -= y;
        }
    }
    let src_row = nv;
    if let Some(i) = index[net.source.plus.0] {
        m[i][src_row] += 1.0;
        m[src_row][i] += 1.0;
    }
    if let Some(i) = index[net.source.minus.0] {
        m[i][src_row] -= 1.0;
        m[src_row][i] -= 1.0;
    }
    rhs[src_row] = Complex64::new(net.source.amplitude, 0.0);

    let (x, det) = gauss_solve(m, rhs).map_err(|col| {
        let node = (0..n)
            .find(|&i| index[i] == Some(col))
            .map(NodeId)
            .unwrap_or(net.source.plus);
        HbcError::Singular { node }
    })?;

    let node_potentials: Vec<Complex64> = (0..n)
        .map(|i| index[i].map_or(Complex64::new(0.0, 0.0), |k| x[k]))
        .collect();
    let out = node_potentials[net.output.plus.0] - node_potentials[net.output.minus.0];
    let ratio = out / net.source.amplitude;
    let charge_determinant = det / jw.powi(nv as i32 - 1);

    Ok(TransferSolution {
        ratio,
        node_potentials,
        charge_determinant,
    })
}

/// Dense Gaussian elimination with partial pivoting. On failure returns the
/// column whose pivot vanished.
fn gauss_solve(
    mut m: Vec<Vec<Complex64>>,
    mut b: Vec<Complex64>,
) -> std::result::Result<(Vec<Complex64>, Complex64), usize> {
    let n = b.len();
    let scale = m
        .iter()
        .flat_map(|row| row.iter())
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let tiny = scale * 1e-14;
    let mut det = Complex64::new(1.0, 0.0);

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))
            .unwrap_or(col);
        if m[pivot][col].norm() <= tiny {
            return Err(col);
        }
        if pivot != col {
            m.swap(pivot, col);
            b.swap(pivot, col);
            det = -det;
        }
        let p = m[col][col];
        det *= p;
        for row in col + 1..n {
            let factor = m[row][col] / p;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (upper, lower) = m.split_at_mut(row);
            for (dst, v) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *dst -= factor * v;
            }
            let v = b[col];
            b[row] -= factor * v;
        }
    }

    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Ok((x, det))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transfer::ChannelCapacitances;

    fn pf(v: f64) -> Capacitance {
        Capacitance::picofarads(v)
    }

    fn divider() -> CapNetwork {
        // 0 = ground, 1 = driven node, 2 = output
        CapNetwork::new(
            3,
            NodeId(0),
            vec![
                Branch { a: NodeId(1), b: NodeId(2), capacitance: pf(1.0) },
                Branch { a: NodeId(2), b: NodeId(0), capacitance: pf(9.0) },
            ],
            VoltageSource { plus: NodeId(1), minus: NodeId(0), amplitude: 1.0 },
            OutputPort { plus: NodeId(2), minus: NodeId(0) },
        )
        .unwrap()
    }

    fn default_caps(c_c: Capacitance) -> ChannelCapacitances {
        ChannelCapacitances {
            c_x_tx: pf(0.5),
            c_x_rx: pf(0.5),
            c_gb_rx: pf(3.0),
            c_l: pf(10.0),
            c_b: pf(150.838),
            c_c,
        }
    }

    #[test]
    fn capacitive_divider() {
        let sol = solve_transfer(&divider(), Frequency::kilohertz(100.0)).unwrap();
        assert!((sol.ratio.re - 0.1).abs() < 1e-14);
        assert!(sol.ratio.im.abs() < 1e-14);
    }

    #[test]
    fn channel_network_structure() {
        let net = build_channel_network(&default_caps(Capacitance::femtofarads(60.0))).unwrap();
        assert_eq!(net.node_count(), 4);
        assert_eq!(net.branches().len(), 6);
        let net = build_channel_network(&default_caps(Capacitance::ZERO)).unwrap();
        assert_eq!(net.branches().len(), 5);
        assert!(!net
            .branches()
            .iter()
            .any(|b| (b.a, b.b) == (channel_nodes::TX_GROUND, channel_nodes::RX_GROUND)));
        assert!(well_posedness_check(&net).is_ok());
    }

    #[test]
    fn channel_network_default_ratio() {
        let net = build_channel_network(&default_caps(Capacitance::ZERO)).unwrap();
        let sol = solve_transfer(&net, Frequency::megahertz(1.0)).unwrap();
        // hand elimination of the two free unknowns gives 1.2198e-4
        assert!(((sol.ratio.re - 1.2198e-4) / 1.2198e-4).abs() < 1e-4, "{}", sol.ratio);
    }

    #[test]
    fn negative_capacitance_rejected() {
        let mut caps = default_caps(Capacitance::ZERO);
        caps.c_c = Capacitance::femtofarads(-1.0);
        assert!(build_channel_network(&caps).is_err());
    }

    #[test]
    fn scale_invariance_of_divider() {
        let net = divider();
        let a = solve_transfer(&net, Frequency::kilohertz(100.0)).unwrap().ratio;
        let b = solve_transfer(&net.scaled(10.0).unwrap(), Frequency::kilohertz(100.0)).unwrap().ratio;
        assert!((a - b).norm() / a.norm() < 1e-12);
    }

    #[test]
    fn charge_conservation_at_free_nodes() {
        let caps = default_caps(Capacitance::femtofarads(40.0));
        let net = build_channel_network(&caps).unwrap();
        let sol = solve_transfer(&net, Frequency::kilohertz(300.0)).unwrap();
        let v = &sol.node_potentials;
        // RG is the only node not tied to the source
        let rg = channel_nodes::RX_GROUND;
        let mut charge = Complex64::new(0.0, 0.0);
        for b in net.branches() {
            let c = b.capacitance.value();
            if b.a == rg {
                charge += (v[rg.0] - v[b.b.0]) * c;
            } else if b.b == rg {
                charge += (v[rg.0] - v[b.a.0]) * c;
            }
        }
        assert!(charge.norm() < 1e-26, "{charge}");
    }

    #[test]
    fn isolated_node_is_flagged() {
        let net = CapNetwork::new(
            4,
            NodeId(0),
            vec![
                Branch { a: NodeId(1), b: NodeId(2), capacitance: pf(1.0) },
                Branch { a: NodeId(2), b: NodeId(0), capacitance: pf(9.0) },
            ],
            VoltageSource { plus: NodeId(1), minus: NodeId(0), amplitude: 1.0 },
            OutputPort { plus: NodeId(2), minus: NodeId(0) },
        )
        .unwrap();
        assert_eq!(well_posedness_check(&net), Diagnosis::Floating(vec![NodeId(3)]));
        match solve_transfer(&net, Frequency::kilohertz(100.0)) {
            Err(HbcError::Singular { node }) => assert_eq!(node, NodeId(3)),
            other => panic!("expected singular error, got {other:?}"),
        }
        assert!(well_posedness_check(&divider()).is_ok());
    }

    #[test]
    fn structural_validation() {
        let src = VoltageSource { plus: NodeId(1), minus: NodeId(0), amplitude: 1.0 };
        let out = OutputPort { plus: NodeId(1), minus: NodeId(0) };
        let self_loop = vec![Branch { a: NodeId(1), b: NodeId(1), capacitance: pf(1.0) }];
        assert!(CapNetwork::new(2, NodeId(0), self_loop, src, out).is_err());
        let oob = vec![Branch { a: NodeId(1), b: NodeId(5), capacitance: pf(1.0) }];
        assert!(CapNetwork::new(2, NodeId(0), oob, src, out).is_err());
        let zero = vec![Branch { a: NodeId(1), b: NodeId(0), capacitance: Capacitance::ZERO }];
        assert!(CapNetwork::new(2, NodeId(0), zero, src, out).is_err());
        let bad_src = VoltageSource { plus: NodeId(1), minus: NodeId(1), amplitude: 1.0 };
        assert!(CapNetwork::new(2, NodeId(0), vec![], bad_src, out).is_err());
    }

    #[test]
    fn dump_format() {
        let dump = divider().dump();
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines, ["1 2 1e-12", "2 0 9e-12", "SRC 1 0 1e0", "OUT 2 0"]);
    }

    #[test]
    fn rejects_bad_frequency() {
        assert!(solve_transfer(&divider(), Frequency::hertz(0.0)).is_err());
        assert!(solve_transfer(&divider(), Frequency::hertz(f64::NAN)).is_err());
    }
}
