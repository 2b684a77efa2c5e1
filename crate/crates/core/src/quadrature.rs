//! Composite Gauss-Legendre rules with spectral cumulative integration.
//!
//! Each panel carries `order` Gauss nodes. Besides plain integration the rule
//! provides running integrals `int_a^{x_i}` at every node: inside a panel the
//! integrand is represented by its Lagrange interpolant on the Gauss nodes,
//! whose antiderivative is expanded in Legendre polynomials.

use num_complex::Complex64;

use gauss_quad::GaussLegendre;

/// Reference rule on `[-1, 1]` with its cumulative-integration matrix.
#[derive(Debug, Clone)]
struct ReferencePanel {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `cumulative[i][j] = int_{-1}^{t_i} l_j(t) dt`.
    cumulative: Vec<Vec<f64>>,
    /// `(n + 1/2) P_n(t_j)`, indexed `[j][n]`.
    expansion: Vec<Vec<f64>>,
}

/// `P_0(t), ..., P_{m}(t)`.
fn legendre_values(t: f64, m: usize) -> Vec<f64> {
    let mut p = vec![0.0; m + 1];
    p[0] = 1.0;
    if m >= 1 {
        p[1] = t;
    }
    for n in 1..m {
        let nf = n as f64;
        p[n + 1] = ((2.0 * nf + 1.0) * t * p[n] - nf * p[n - 1]) / (nf + 1.0);
    }
    p
}

/// `int_{-1}^t P_n(s) ds` for `n = 0..m-1`.
fn legendre_antiderivatives(t: f64, m: usize) -> Vec<f64> {
    let p = legendre_values(t, m);
    (0..m)
        .map(|n| if n == 0 { t + 1.0 } else { (p[n + 1] - p[n - 1]) / (2.0 * n as f64 + 1.0) })
        .collect()
}

impl ReferencePanel {
    fn new(order: usize) -> Self {
        let mut pairs = GaussLegendre::new(order.max(2)).expect("order >= 2").into_node_weight_pairs();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let p = nodes.len();
        let expansion: Vec<Vec<f64>> = nodes
            .iter()
            .map(|&t| legendre_values(t, p - 1).iter().enumerate().map(|(n, v)| (n as f64 + 0.5) * v).collect())
            .collect();
        let mut panel = Self { nodes, weights, cumulative: Vec::new(), expansion };
        panel.cumulative = panel.nodes.iter().map(|&t| panel.partial_row(t)).collect();
        panel
    }

    /// `int_{-1}^{t} l_j` for every basis index `j`.
    fn partial_row(&self, t: f64) -> Vec<f64> {
        let p = self.nodes.len();
        let anti = legendre_antiderivatives(t, p);
        (0..p)
            .map(|j| self.weights[j] * self.expansion[j].iter().zip(&anti).map(|(c, a)| c * a).sum::<f64>())
            .collect()
    }
}

/// Composite Gauss-Legendre rule on an interval, split at break points.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    reference: ReferencePanel,
    /// Panel edges, ascending; panel `p` is `[edges[p], edges[p+1]]`.
    edges: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl CompositeRule {
    /// Rule on `[0, 1]` with roughly `panels` panels per unit length, never
    /// straddling a break point.
    pub fn new(breakpoints: &[f64], panels: usize, order: usize) -> Self {
        Self::on_interval(0.0, 1.0, breakpoints, panels, order)
    }

    pub fn on_interval(a: f64, b: f64, breakpoints: &[f64], panels: usize, order: usize) -> Self {
        let mut cuts = vec![a];
        cuts.extend(breakpoints.iter().copied().filter(|&t| t > a && t < b));
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut edges = vec![a];
        for w in cuts.windows(2) {
            let len = w[1] - w[0];
            let count = ((panels as f64) * len / (b - a)).ceil().max(1.0) as usize;
            for i in 1..=count {
                edges.push(if i == count { w[1] } else { w[0] + len * i as f64 / count as f64 });
            }
        }
        let reference = ReferencePanel::new(order);
        let mut nodes = Vec::with_capacity((edges.len() - 1) * reference.nodes.len());
        let mut weights = Vec::with_capacity(nodes.capacity());
        for e in edges.windows(2) {
            let half = 0.5 * (e[1] - e[0]);
            let mid = 0.5 * (e[1] + e[0]);
            for (t, w) in reference.nodes.iter().zip(&reference.weights) {
                nodes.push(mid + half * t);
                weights.push(half * w);
            }
        }
        Self { reference, edges, nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn order(&self) -> usize {
        self.reference.nodes.len()
    }

    pub fn panel_count(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn integrate(&self, f: impl Fn(f64) -> Complex64) -> Complex64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| f(x) * w).sum()
    }

    pub fn integrate_real(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| f(x) * w).sum()
    }

    /// Quadrature of a function given by node index.
    pub fn integrate_nodes(&self, f: impl Fn(usize) -> Complex64) -> Complex64 {
        self.weights.iter().enumerate().map(|(q, &w)| f(q) * w).sum()
    }

    /// Quadrature of node values.
    pub fn total(&self, values: &[Complex64]) -> Complex64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Running integral from the left end to every node.
    pub fn cumulative(&self, values: &[Complex64]) -> Vec<Complex64> {
        let p = self.order();
        let mut out = Vec::with_capacity(values.len());
        let mut offset = Complex64::new(0.0, 0.0);
        for (panel, e) in self.edges.windows(2).enumerate() {
            let half = 0.5 * (e[1] - e[0]);
            let local = &values[panel * p..(panel + 1) * p];
            for row in &self.reference.cumulative {
                let s: Complex64 = row.iter().zip(local).map(|(c, v)| v * c).sum();
                out.push(offset + s * half);
            }
            offset += local.iter().zip(&self.reference.weights).map(|(v, w)| v * w).sum::<Complex64>() * half;
        }
        out
    }

    /// Integral from the left end to an arbitrary `x` inside the interval,
    /// interpolating the node values in the panel containing `x`.
    pub fn cumulative_to(&self, values: &[Complex64], x: f64) -> Complex64 {
        let p = self.order();
        let last = self.panel_count() - 1;
        let panel = match self.edges[1..].binary_search_by(|e| e.total_cmp(&x)) {
            Ok(i) | Err(i) => i.min(last),
        };
        let mut acc: Complex64 = values[..panel * p].iter().zip(&self.weights).map(|(v, w)| v * w).sum();
        let (a, b) = (self.edges[panel], self.edges[panel + 1]);
        let half = 0.5 * (b - a);
        let t = ((x - a) / half - 1.0).clamp(-1.0, 1.0);
        let row = self.reference.partial_row(t);
        let local = &values[panel * p..(panel + 1) * p];
        acc += row.iter().zip(local).map(|(c, v)| v * c).sum::<Complex64>() * half;
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn integrates_oscillatory_exponential() {
        let k = 40.0;
        let rule = CompositeRule::new(&[], 16, 16);
        let got = rule.integrate(|x| (c(0.0, k) * x).exp());
        let exact = ((c(0.0, k)).exp() - 1.0) / c(0.0, k);
        assert!((got - exact).norm() < 1e-14);
    }

    #[test]
    fn cumulative_matches_antiderivative() {
        let rule = CompositeRule::new(&[0.37], 6, 12);
        let values: Vec<_> = rule.nodes().iter().map(|&x| c(x.cos(), 3.0 * x * x)).collect();
        let cum = rule.cumulative(&values);
        for (&x, got) in rule.nodes().iter().zip(&cum) {
            let exact = c(x.sin(), x.powi(3));
            assert!((got - exact).norm() < 1e-14, "x = {x}");
        }
        for &x in &[0.0f64, 0.1, 0.37, 0.5, 0.999, 1.0] {
            let exact = c(x.sin(), x.powi(3));
            assert!((rule.cumulative_to(&values, x) - exact).norm() < 1e-14, "x = {x}");
        }
    }

    #[test]
    fn panels_respect_breakpoints() {
        let rule = CompositeRule::new(&[0.25, 0.8], 4, 4);
        assert!(rule.edges.contains(&0.25) && rule.edges.contains(&0.8));
        let step = CompositeRule::new(&[0.25], 3, 4).integrate_real(|x| if x < 0.25 { 1.0 } else { 2.0 });
        assert!((step - 1.75).abs() < 1e-15);
    }
}
