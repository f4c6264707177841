use super::network::CirculationNetwork;
use crate::error::{Error, Result};

/// One full loop from the segment after the lungs back through the lungs.
#[derive(Debug, Clone, PartialEq)]
pub struct CirculationPath {
    /// Name of the first segment after leaving the heart.
    pub id: String,
    pub segments: Vec<usize>,
    /// m³/s
    pub flow: f64,
    /// s
    pub transit_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub paths: Vec<CirculationPath>,
}

impl PathSet {
    pub fn total_flow(&self) -> f64 {
        self.paths.iter().map(|p| p.flow).sum()
    }

    /// Σ(flow × transit) / Σ flow.
    pub fn mean_transit(&self) -> f64 {
        self.paths.iter().map(|p| p.flow * p.transit_time).sum::<f64>() / self.total_flow()
    }

    pub fn get(&self, id: &str) -> Option<&CirculationPath> {
        self.paths.iter().find(|p| p.id == id)
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// Enumerates every simple loop from the lung's successor back to the
/// lungs. Path flow is the start flow times the split fractions taken
/// along the way.
pub fn enumerate_paths(net: &CirculationNetwork) -> Result<PathSet> {
    let lung = net.lung_index();
    let starts: Vec<usize> = net.successors(lung).collect();
    let [start] = starts[..] else {
        return Err(Error::structural(format!("lungs must feed exactly one segment, found {}", starts.len())));
    };
    let segs = net.segments();
    let mut out: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut stack = vec![start];
    walk(net, lung, &mut stack, segs[start].flow, &mut out)?;

    let mut paths: Vec<CirculationPath> = out
        .into_iter()
        .map(|(seq, flow)| {
            let transit = seq.iter().map(|&i| segs[i].transit_time).sum();
            let id = seq.get(1).map_or_else(|| segs[seq[0]].id.clone(), |&i| segs[i].id.clone());
            CirculationPath { id, segments: seq, flow, transit_time: transit }
        })
        .collect();
    paths.sort_by(|a, b| {
        let ka: Vec<&str> = a.segments.iter().map(|&i| segs[i].id.as_str()).collect();
        let kb: Vec<&str> = b.segments.iter().map(|&i| segs[i].id.as_str()).collect();
        ka.cmp(&kb)
    });
    // disambiguate labels that share a first branch
    for i in 0..paths.len() {
        if paths.iter().filter(|p| p.id == paths[i].id).count() > 1 {
            paths[i].id = paths[i].segments[1..].iter().map(|&s| segs[s].id.as_str()).collect::<Vec<_>>().join("/");
        }
    }
    Ok(PathSet { paths })
}

fn walk(
    net: &CirculationNetwork,
    lung: usize,
    stack: &mut Vec<usize>,
    flow: f64,
    out: &mut Vec<(Vec<usize>, f64)>,
) -> Result<()> {
    let here = *stack.last().expect("nonempty");
    if here == lung {
        out.push((stack.clone(), flow));
        return Ok(());
    }
    let succ: Vec<usize> = net.successors(here).collect();
    let total: f64 = succ.iter().map(|&s| net.segments()[s].flow).sum();
    for s in succ {
        if stack.contains(&s) {
            return Err(Error::structural(format!(
                "cycle through `{}` does not pass the lungs",
                net.segments()[s].id
            )));
        }
        let share = if total > 0.0 { net.segments()[s].flow / total } else { 0.0 };
        stack.push(s);
        walk(net, lung, stack, flow * share, out)?;
        stack.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_network;
    use crate::units::si_to_l_per_min;

    #[test]
    fn ten_paths() {
        let paths = enumerate_paths(&default_network()).unwrap();
        assert_eq!(paths.len(), 10);
        let mut ids: Vec<&str> = paths.paths.iter().map(|p| p.id.as_str()).collect();
        ids.sort();
        assert_eq!(
            ids,
            [
                "arms",
                "digestive",
                "head",
                "heart_coronary",
                "hepatic",
                "kidney",
                "legs",
                "other_torso",
                "spleen_fast",
                "spleen_slow"
            ]
        );
    }

    #[test]
    fn legs_path_transit() {
        let paths = enumerate_paths(&default_network()).unwrap();
        let legs = paths.get("legs").unwrap();
        // left heart, legs, IVC, right heart, lungs
        assert!((legs.transit_time - 134.0).abs() < 1e-12);
        assert!((si_to_l_per_min(legs.flow) - 0.6).abs() < 1e-3);
    }

    #[test]
    fn portal_paths_visit_liver() {
        let net = default_network();
        let paths = enumerate_paths(&net).unwrap();
        let liver = net.index_of("liver").unwrap();
        for id in ["digestive", "spleen_fast", "spleen_slow", "hepatic"] {
            assert!(paths.get(id).unwrap().segments.contains(&liver));
        }
        assert!(!paths.get("kidney").unwrap().segments.contains(&liver));
    }

    #[test]
    fn order_independent() {
        let net = default_network();
        let mut segs = net.segments().to_vec();
        segs.reverse();
        let mut edges = net.edge_ids();
        edges.reverse();
        let shuffled = CirculationNetwork::new(net.globals, net.constants, segs, &edges).unwrap();
        let a = enumerate_paths(&net).unwrap();
        let b = enumerate_paths(&shuffled).unwrap();
        let key = |n: &CirculationNetwork, p: &PathSet| -> Vec<(String, Vec<String>, u64, u64)> {
            p.paths
                .iter()
                .map(|q| {
                    (
                        q.id.clone(),
                        q.segments.iter().map(|&i| n.segments()[i].id.clone()).collect(),
                        q.flow.to_bits(),
                        q.transit_time.to_bits(),
                    )
                })
                .collect()
        };
        let (ka, kb) = (key(&net, &a), key(&shuffled, &b));
        assert_eq!(ka.len(), kb.len());
        for (x, y) in ka.iter().zip(&kb) {
            assert_eq!(x.0, y.0);
            assert_eq!(x.1, y.1);
            assert!((f64::from_bits(x.2) / f64::from_bits(y.2) - 1.0).abs() < 1e-12);
            assert_eq!(x.3, y.3);
        }
    }
}
