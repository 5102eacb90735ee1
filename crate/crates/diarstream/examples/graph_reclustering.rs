//! The speaker embedding graph and likelihood-based re-assignment of
//! non-speaker clusters.
//!
//! ```bash
//! cargo run --example graph_reclustering
//! ```

use diarstream::{
    assign_nonspeakers_graph, select_speakers, ClusterState, Cluster, Embedding, SpeakerGraph,
};

fn embedding(i: usize, deg: f64) -> Embedding {
    let r = deg.to_radians();
    Embedding::new(i, vec![r.cos(), r.sin()], 0.5 * i as f64, 0.5 * i as f64 + 1.0).unwrap()
}

fn main() -> diarstream::Result<()> {
    // two long speakers near 0 and 90 degrees plus two stray segments
    let placements: [f64; 10] = [0.0, 3.0, -3.0, 5.0, 90.0, 87.0, 93.0, 95.0, 12.0, 220.0];
    let mut graph = SpeakerGraph::new(0.4);
    for (i, deg) in placements.iter().enumerate() {
        graph.add_node(embedding(i, *deg))?;
    }
    println!("graph: {} nodes, {} edges (threshold 0.4)", graph.node_count(), graph.edge_count());
    let mut edges = Vec::new();
    graph.write_edge_list(&mut edges)?;
    print!("{}", String::from_utf8_lossy(&edges));

    // cluster the segments by hand: the strays are too short to qualify
    let cluster = |ids: &[usize]| -> Cluster {
        let mut c = Cluster::singleton(graph.embedding(ids[0]).unwrap());
        for &i in &ids[1..] {
            c = diarstream::merge_clusters(&c, &Cluster::singleton(graph.embedding(i).unwrap()))
                .unwrap();
        }
        c
    };
    let state = ClusterState {
        clusters: vec![cluster(&[0, 1, 2, 3]), cluster(&[4, 5, 6, 7]), cluster(&[8]), cluster(&[9])],
    };
    let partition = select_speakers(&state, 3.5)?;
    println!(
        "\nspeaker clusters: {:?}, non-speaker clusters: {:?}",
        partition.speaker_clusters.iter().map(|c| c.members.clone()).collect::<Vec<_>>(),
        partition.nonspeaker_clusters.iter().map(|c| c.members.clone()).collect::<Vec<_>>(),
    );

    for ns in &partition.nonspeaker_clusters {
        for &node in &ns.members {
            for sp in &partition.speaker_clusters {
                let l = graph.cluster_likelihood(node, sp)?;
                println!("likelihood of node {node} toward {:?}: {l:.3}", sp.members);
            }
        }
    }

    let refined = assign_nonspeakers_graph(&graph, &partition)?;
    println!("\nafter graph re-clustering:");
    for c in &refined.clusters {
        println!("  cluster {:?} ({:.1}s)", c.members, c.duration);
    }
    // node 8 had graph support toward the first speaker and joined it;
    // node 9 had none and was promoted to its own speaker cluster
    Ok(())
}
