//! Collaboration-network serialization.

use std::fmt::Write;
use std::str::FromStr;

use thiserror::Error;

use crate::metrics::CollaborationNetwork;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetFormat {
    GraphMl,
    Dot,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unsupported network format `{0}` (expected graphml or dot)")]
pub struct UnsupportedFormat(pub String);

impl FromStr for NetFormat {
    type Err = UnsupportedFormat;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "graphml" => Ok(NetFormat::GraphMl),
            "dot" => Ok(NetFormat::Dot),
            _ => Err(UnsupportedFormat(s.to_string())),
        }
    }
}

/// Serializes nodes then edges, both in ascending id order.
pub fn export_network(net: &CollaborationNetwork, format: NetFormat) -> String {
    match format {
        NetFormat::GraphMl => graphml(net),
        NetFormat::Dot => dot(net),
    }
}

fn graphml(net: &CollaborationNetwork) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    s.push_str("  <key id=\"specialty\" for=\"node\" attr.name=\"specialty\" attr.type=\"string\"/>\n");
    s.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"int\"/>\n");
    s.push_str("  <graph id=\"collaboration\" edgedefault=\"undirected\">\n");
    for (id, sp) in net.specialty.iter().enumerate() {
        let _ = writeln!(
            s,
            "    <node id=\"n{id}\"><data key=\"specialty\">{}</data></node>",
            sp.name()
        );
    }
    for (&(a, b), w) in &net.weights {
        let _ = writeln!(
            s,
            "    <edge source=\"n{a}\" target=\"n{b}\"><data key=\"weight\">{w}</data></edge>"
        );
    }
    s.push_str("  </graph>\n</graphml>\n");
    s
}

fn dot(net: &CollaborationNetwork) -> String {
    let mut s = String::from("graph collaboration {\n");
    for (id, sp) in net.specialty.iter().enumerate() {
        let _ = writeln!(s, "  n{id} [specialty=\"{}\"];", sp.name());
    }
    for (&(a, b), w) in &net.weights {
        let _ = writeln!(s, "  n{a} -- n{b} [weight={w}];");
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::Specialty;

    fn sample() -> CollaborationNetwork {
        let mut net = CollaborationNetwork::new(vec![
            Specialty::Fetch,
            Specialty::Chop,
            Specialty::Cook,
            Specialty::Serve,
        ]);
        net.add_edge(2, 0, 3);
        net.add_edge(0, 1, 1);
        net
    }

    #[test]
    fn graphml_lists_every_node_and_edge() {
        let g = export_network(&sample(), NetFormat::GraphMl);
        assert_eq!(g.matches("<node ").count(), 4);
        assert_eq!(g.matches("<edge ").count(), 2);
        assert!(g.contains("<node id=\"n3\"><data key=\"specialty\">SERVE</data></node>"));
        let first = g.find("target=\"n1\"").unwrap();
        let second = g.find("target=\"n2\"").unwrap();
        assert!(first < second);
        assert!(g.contains("<data key=\"weight\">3</data>"));
    }

    #[test]
    fn dot_output() {
        let d = export_network(&sample(), NetFormat::Dot);
        assert_eq!(
            d,
            "graph collaboration {\n  n0 [specialty=\"FETCH\"];\n  n1 [specialty=\"CHOP\"];\n  \
             n2 [specialty=\"COOK\"];\n  n3 [specialty=\"SERVE\"];\n  n0 -- n1 [weight=1];\n  \
             n0 -- n2 [weight=3];\n}\n"
        );
    }

    #[test]
    fn format_tags() {
        assert_eq!("GraphML".parse::<NetFormat>(), Ok(NetFormat::GraphMl));
        assert_eq!("dot".parse::<NetFormat>(), Ok(NetFormat::Dot));
        assert!("gexf".parse::<NetFormat>().is_err());
    }
}
