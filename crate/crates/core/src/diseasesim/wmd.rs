use super::{DiseaseSimError, Result};

/// Largest bag solved exactly.
pub const MAX_EXACT_BAG: usize = 30;

const WEIGHT_TOLERANCE: f64 = 1e-9;
const FLOW_EPS: f64 = 1e-15;

fn validate<T>(bag: &[(T, f64)], side: &str) -> Result<Vec<f64>> {
    if bag.is_empty() {
        return Err(DiseaseSimError::InvalidWeights(format!("{side} bag is empty")));
    }
    if bag.len() > MAX_EXACT_BAG {
        return Err(DiseaseSimError::BagTooLarge {
            size: bag.len(),
            limit: MAX_EXACT_BAG,
        });
    }
    if let Some((_, w)) = bag.iter().find(|(_, w)| !w.is_finite() || *w < 0.0) {
        return Err(DiseaseSimError::InvalidWeights(format!("{side} bag has weight {w}")));
    }
    let total: f64 = bag.iter().map(|(_, w)| w).sum();
    if (total - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(DiseaseSimError::InvalidWeights(format!("{side} bag weights sum to {total}")));
    }
    Ok(bag.iter().map(|(_, w)| w / total).collect())
}

/// Word Mover's Distance: the minimum cost of moving the mass of `a` onto
/// `b` when moving one unit from `x` to `y` costs `distance(x, y)`.
///
/// Solved exactly as a min-cost flow by successive shortest augmenting
/// paths on the bipartite transport network.
pub fn wmd<T>(a: &[(T, f64)], b: &[(T, f64)], distance: impl Fn(&T, &T) -> f64) -> Result<f64> {
    let mut supply = validate(a, "first")?;
    let mut demand = validate(b, "second")?;
    let (n, m) = (a.len(), b.len());
    let cost: Vec<Vec<f64>> = a
        .iter()
        .map(|(x, _)| b.iter().map(|(y, _)| distance(x, y)).collect())
        .collect();
    if let Some(c) = cost.iter().flatten().find(|c| !c.is_finite()) {
        return Err(DiseaseSimError::InvalidWeights(format!("ground distance {c}")));
    }
    let mut flow = vec![vec![0.0; m]; n];

    loop {
        // Bellman-Ford over the residual graph; a-side nodes are reached
        // from the source while they have supply left, b-side nodes through
        // forward arcs, and a-side nodes back through arcs carrying flow.
        let mut dist_a: Vec<f64> = supply
            .iter()
            .map(|&s| if s > FLOW_EPS { 0.0 } else { f64::INFINITY })
            .collect();
        let mut pred_a: Vec<Option<usize>> = vec![None; n];
        let mut dist_b = vec![f64::INFINITY; m];
        let mut pred_b = vec![usize::MAX; m];
        for _ in 0..=(n + m) {
            let mut changed = false;
            for i in 0..n {
                if dist_a[i].is_infinite() {
                    continue;
                }
                for j in 0..m {
                    let d = dist_a[i] + cost[i][j];
                    if d < dist_b[j] - 1e-15 {
                        dist_b[j] = d;
                        pred_b[j] = i;
                        changed = true;
                    }
                }
            }
            for j in 0..m {
                if dist_b[j].is_infinite() {
                    continue;
                }
                for i in 0..n {
                    if flow[i][j] > FLOW_EPS {
                        let d = dist_b[j] - cost[i][j];
                        if d < dist_a[i] - 1e-15 {
                            dist_a[i] = d;
                            pred_a[i] = Some(j);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let target = (0..m)
            .filter(|&j| demand[j] > FLOW_EPS && dist_b[j].is_finite())
            .min_by(|&x, &y| dist_b[x].total_cmp(&dist_b[y]).then(x.cmp(&y)));
        let Some(target) = target else { break };

        // Walk back to the source: forward arcs gain flow, arcs traversed
        // backwards give it up.
        let mut forward = Vec::new();
        let mut backward = Vec::new();
        let mut bottleneck = demand[target];
        let mut j = target;
        let source = loop {
            let i = pred_b[j];
            forward.push((i, j));
            match pred_a[i] {
                Some(prev) => {
                    bottleneck = bottleneck.min(flow[i][prev]);
                    backward.push((i, prev));
                    j = prev;
                }
                None => break i,
            }
            assert!(forward.len() <= n + m, "augmenting path revisits nodes");
        };
        bottleneck = bottleneck.min(supply[source]);
        supply[source] -= bottleneck;
        demand[target] -= bottleneck;
        for (i, j) in forward {
            flow[i][j] += bottleneck;
        }
        for (i, j) in backward {
            flow[i][j] -= bottleneck;
        }
    }

    Ok(flow
        .iter()
        .zip(&cost)
        .map(|(f, c)| f.iter().zip(c).map(|(x, y)| x * y).sum::<f64>())
        .sum())
}
