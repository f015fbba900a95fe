//! GNN encoders covering every stage x granularity combination.
//!
//! Layer recipe (K layers):
//!
//! - node/late: `h' = GRU(h; agg)` where `agg` sums symmetrized messages over
//!   incident edges.
//! - node/early: per layer, node alignments are computed from the current
//!   embeddings and the GRU input becomes `[agg ; h - omega_qc H_c]`.
//! - edge granularity: edge states `m` are carried alongside node states;
//!   per layer the node update consumes the incident edge states (messages
//!   are `msg(h_u, h_v, m_e)`), then edges update from the fresh node states.
//!   Early interaction additionally aligns edge sets and joins the own-graph
//!   message with the aligned other-graph signal; under late interaction the
//!   join network is dormant and the message alone becomes the new edge state.
//!
//! Messages are applied to both orderings of an edge's endpoints and summed,
//! which removes any dependence on the stored edge orientation. Padded nodes
//! are isolated and never receive messages; padded edge slots hold zero
//! vectors at every layer.

use rand_chacha::ChaCha8Rng;

use crate::config::{Granularity, ModelConfig, RelevanceDistance, Stage};
use crate::error::Result;
use crate::graph::{Graph, PaddedPair};
use crate::interaction::{align, gumbel_noise, similarity, Nonlinearity};
use crate::nn::{gru_step, init_gru, init_mlp, linear, mlp};
use crate::params::ParameterStore;
use crate::tape::{Mat, Tape, Tensor};

/// Final-layer embeddings of a pair.
#[derive(Debug, Clone, Copy)]
pub struct EmbeddingState {
    /// H_q and H_c after K layers, N x dim_h.
    pub node_q: Tensor,
    pub node_c: Tensor,
    /// M_q and M_c after K layers, slots x dim_m (edge granularity only);
    /// pad slots are zero rows.
    pub edge_q: Option<Tensor>,
    pub edge_c: Option<Tensor>,
}

impl EmbeddingState {
    /// The embedding sets scored by the relevance distance.
    pub fn scoring_sets(&self, granularity: Granularity) -> (Tensor, Tensor) {
        match granularity {
            Granularity::Node => (self.node_q, self.node_c),
            Granularity::Edge => (
                self.edge_q.expect("edge embeddings present"),
                self.edge_c.expect("edge embeddings present"),
            ),
        }
    }
}

/// Register every parameter the configuration uses, in a fixed order, drawn
/// from a seeded RNG. Nothing unused is allocated, so a gradient-flow check
/// can cover the whole store.
pub fn init_params(config: &ModelConfig, seed: u64) -> Result<ParameterStore> {
    use rand::SeedableRng;
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParameterStore::new();
    let (dh, dm) = (config.dim_h, config.dim_m);

    store.insert_glorot("embed.w", 1, dh, &mut rng)?;
    store.insert_zeros("embed.b", 1, dh)?;

    // Message input: both endpoint embeddings plus the edge state (the fixed
    // scalar edge feature 1 under node granularity).
    let msg_in = match config.granularity {
        Granularity::Node => 2 * dh + 1,
        Granularity::Edge => 2 * dh + dm,
    };
    store.insert_glorot("msg.w", msg_in, dm, &mut rng)?;
    store.insert_zeros("msg.b", 1, dm)?;

    // GRU input: aggregated messages, plus the cross-graph difference signal
    // for early node interaction.
    let upd_in = match (config.stage, config.granularity) {
        (Stage::Early, Granularity::Node) => dm + dh,
        _ => dm,
    };
    init_gru(&mut store, "upd", upd_in, dh, &mut rng)?;

    if config.stage == Stage::Early && config.granularity == Granularity::Edge {
        init_mlp(&mut store, "join", &[2 * dm, 2 * dm, dm], &mut rng)?;
    }

    if config.uses_alignment() && config.nonlinearity == Nonlinearity::Neural {
        let dim = config.granularity_dim();
        init_mlp(&mut store, "lrl", &[dim, dim, 16], &mut rng)?;
    }

    if config.distance != RelevanceDistance::SetAlign {
        let dim = config.granularity_dim();
        store.insert_glorot("readout.gate.w", dim, 2 * dim, &mut rng)?;
        store.insert_zeros("readout.gate.b", 1, 2 * dim)?;
        store.insert_glorot("readout.out.w", dim, dim, &mut rng)?;
        store.insert_zeros("readout.out.b", 1, dim)?;
        match config.distance {
            RelevanceDistance::AggMlp => {
                init_mlp(&mut store, "score", &[2 * dim, dim, 1], &mut rng)?;
            }
            RelevanceDistance::AggNtn => {
                const L: usize = 16;
                for l in 0..L {
                    store.insert_glorot(&format!("ntn.w{l}"), dim, dim, &mut rng)?;
                }
                store.insert_glorot("ntn.v", 2 * dim, L, &mut rng)?;
                store.insert_zeros("ntn.b", 1, L)?;
                init_mlp(&mut store, "ntn.score", &[L, 8, 4, 1], &mut rng)?;
            }
            _ => {}
        }
    }
    Ok(store)
}

/// Edge endpoints and the node<-edge incidence used for message aggregation.
struct Wiring {
    src: Vec<usize>,
    dst: Vec<usize>,
    /// N x E matrix with 1 at (u, e) when u is an endpoint of edge e.
    agg: Mat,
    real_edges: usize,
}

impl Wiring {
    fn build(graph: &Graph) -> Wiring {
        let e = graph.edge_count();
        let n = graph.node_count();
        let mut src = Vec::with_capacity(e);
        let mut dst = Vec::with_capacity(e);
        let mut agg = Mat::zeros((n, e));
        for (i, &(u, v)) in graph.edges().iter().enumerate() {
            src.push(u);
            dst.push(v);
            agg[(u, i)] = 1.0;
            agg[(v, i)] = 1.0;
        }
        Wiring {
            src,
            dst,
            agg,
            real_edges: e,
        }
    }
}

/// Symmetrized message per real edge: `msg(h_u, h_v, x_e) + msg(h_v, h_u, x_e)`
/// where `x_e` is the prior edge state (a constant 1 under node granularity).
fn edge_messages(
    tape: &mut Tape,
    store: &ParameterStore,
    h: Tensor,
    wiring: &Wiring,
    edge_state: Tensor,
) -> Result<Tensor> {
    let hs = tape.gather_rows(h, &wiring.src)?;
    let hd = tape.gather_rows(h, &wiring.dst)?;
    let fwd = {
        let sd = tape.concat_cols(hs, hd)?;
        let full = tape.concat_cols(sd, edge_state)?;
        linear(tape, store, "msg", full)?
    };
    let bwd = {
        let ds = tape.concat_cols(hd, hs)?;
        let full = tape.concat_cols(ds, edge_state)?;
        linear(tape, store, "msg", full)?
    };
    tape.add(fwd, bwd)
}

/// Sum each node's incident messages: `agg . messages`, N x dim_m. Padded
/// (degree-zero) nodes get zero rows.
fn aggregate(tape: &mut Tape, wiring: &Wiring, messages: Tensor) -> Result<Tensor> {
    let a = tape.constant(wiring.agg.clone())?;
    tape.matmul(a, messages)
}

/// Optional per-layer Gumbel noise for Sinkhorn (training-time only).
fn layer_noise(
    config: &ModelConfig,
    rows: usize,
    rng: &mut Option<&mut ChaCha8Rng>,
) -> Option<Mat> {
    match rng {
        Some(r) if config.gumbel_noise => Some(gumbel_noise(rows, rows, r)),
        _ => None,
    }
}

/// Run the configured encoder over a padded pair, producing final-layer
/// embeddings on the tape.
///
/// `noise_rng` enables Gumbel perturbation of Sinkhorn inputs when the
/// configuration asks for it; pass `None` for deterministic scoring.
pub fn encode(
    tape: &mut Tape,
    store: &ParameterStore,
    config: &ModelConfig,
    pair: &PaddedPair,
    mut noise_rng: Option<&mut ChaCha8Rng>,
) -> Result<EmbeddingState> {
    config.validate()?;
    let wq = Wiring::build(&pair.query);
    let wc = Wiring::build(&pair.corpus);
    let n = pair.node_count;

    let features = |tape: &mut Tape, g: &Graph| -> Result<Tensor> {
        let f = Mat::from_shape_vec((n, 1), g.node_features().to_vec()).expect("feature shape");
        tape.constant(f)
    };
    let fq = features(tape, &pair.query)?;
    let fc = features(tape, &pair.corpus)?;
    let mut hq = linear(tape, store, "embed", fq)?;
    let mut hc = linear(tape, store, "embed", fc)?;

    match config.granularity {
        Granularity::Node => {
            let ones_q = tape.constant(Mat::from_elem((wq.real_edges, 1), 1.0))?;
            let ones_c = tape.constant(Mat::from_elem((wc.real_edges, 1), 1.0))?;
            for _ in 0..config.layers {
                let omega = if config.stage == Stage::Early {
                    let s = similarity(tape, store, config.nonlinearity, "lrl", hq, hc)?;
                    let noise = layer_noise(config, n, &mut noise_rng);
                    Some(align(tape, &config.align_settings(), s, noise.as_ref())?)
                } else {
                    None
                };
                let mq = edge_messages(tape, store, hq, &wq, ones_q)?;
                let mc = edge_messages(tape, store, hc, &wc, ones_c)?;
                let agg_q = aggregate(tape, &wq, mq)?;
                let agg_c = aggregate(tape, &wc, mc)?;
                let (xq, xc) = match omega {
                    Some((omega_qc, omega_cq)) => {
                        let pulled_c = tape.matmul(omega_qc, hc)?;
                        let diff_q = tape.sub(hq, pulled_c)?;
                        let pulled_q = tape.matmul(omega_cq, hq)?;
                        let diff_c = tape.sub(hc, pulled_q)?;
                        (
                            tape.concat_cols(agg_q, diff_q)?,
                            tape.concat_cols(agg_c, diff_c)?,
                        )
                    }
                    None => (agg_q, agg_c),
                };
                hq = gru_step(tape, store, "upd", hq, xq)?;
                hc = gru_step(tape, store, "upd", hc, xc)?;
            }
            Ok(EmbeddingState {
                node_q: hq,
                node_c: hc,
                edge_q: None,
                edge_c: None,
            })
        }
        Granularity::Edge => {
            let slots = pair.edge_slots;
            let dm = config.dim_m;
            // m_0: endpoint features through the message net, zero prior state.
            let zero_q = tape.constant(Mat::zeros((wq.real_edges, dm)))?;
            let zero_c = tape.constant(Mat::zeros((wc.real_edges, dm)))?;
            let mut mq_real = edge_messages(tape, store, hq, &wq, zero_q)?;
            let mut mc_real = edge_messages(tape, store, hc, &wc, zero_c)?;
            let mut mq_full = tape.pad_rows(mq_real, slots - wq.real_edges)?;
            let mut mc_full = tape.pad_rows(mc_real, slots - wc.real_edges)?;

            let real_idx_q: Vec<usize> = (0..wq.real_edges).collect();
            let real_idx_c: Vec<usize> = (0..wc.real_edges).collect();

            for _ in 0..config.layers {
                let omega = if config.stage == Stage::Early {
                    let s = similarity(tape, store, config.nonlinearity, "lrl", mq_full, mc_full)?;
                    let noise = layer_noise(config, slots, &mut noise_rng);
                    Some(align(tape, &config.align_settings(), s, noise.as_ref())?)
                } else {
                    None
                };

                // Node updates consume the current edge states.
                let msgs_q = edge_messages(tape, store, hq, &wq, mq_real)?;
                let msgs_c = edge_messages(tape, store, hc, &wc, mc_real)?;
                let agg_q = aggregate(tape, &wq, msgs_q)?;
                let agg_c = aggregate(tape, &wc, msgs_c)?;
                let hq_next = gru_step(tape, store, "upd", hq, agg_q)?;
                let hc_next = gru_step(tape, store, "upd", hc, agg_c)?;

                // Edge updates from fresh node states and prior edge states.
                let own_q = edge_messages(tape, store, hq_next, &wq, mq_real)?;
                let own_c = edge_messages(tape, store, hc_next, &wc, mc_real)?;
                let (mq_next, mc_next) = match omega {
                    Some((omega_qc, omega_cq)) => {
                        let cross_q = {
                            let pulled = tape.matmul(omega_qc, mc_full)?;
                            tape.gather_rows(pulled, &real_idx_q)?
                        };
                        let cross_c = {
                            let pulled = tape.matmul(omega_cq, mq_full)?;
                            tape.gather_rows(pulled, &real_idx_c)?
                        };
                        let jq = tape.concat_cols(own_q, cross_q)?;
                        let jc = tape.concat_cols(own_c, cross_c)?;
                        (
                            mlp(tape, store, "join", 2, jq)?,
                            mlp(tape, store, "join", 2, jc)?,
                        )
                    }
                    None => (own_q, own_c),
                };

                hq = hq_next;
                hc = hc_next;
                mq_real = mq_next;
                mc_real = mc_next;
                mq_full = tape.pad_rows(mq_real, slots - wq.real_edges)?;
                mc_full = tape.pad_rows(mc_real, slots - wc.real_edges)?;
            }
            Ok(EmbeddingState {
                node_q: hq,
                node_c: hc,
                edge_q: Some(mq_full),
                edge_c: Some(mc_full),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Granularity, ModelConfig, RelevanceDistance, Stage};
    use crate::graph::{pad_pair, Graph};
    use crate::interaction::Structure;
    use ndarray::s;
    use rand::{Rng, SeedableRng};

    fn small_pair() -> PaddedPair {
        let q = Graph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        let c = Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        pad_pair(&q, &c)
    }

    fn run_encoder(config: &ModelConfig, pair: &PaddedPair, store: &ParameterStore) -> (Mat, Mat) {
        let mut tape = Tape::new();
        let state = encode(&mut tape, store, config, pair, None).unwrap();
        let (xq, xc) = state.scoring_sets(config.granularity);
        (tape.value(xq).clone(), tape.value(xc).clone())
    }

    fn all_configs() -> Vec<ModelConfig> {
        let mut out = Vec::new();
        for stage in [Stage::Late, Stage::Early] {
            for granularity in [Granularity::Node, Granularity::Edge] {
                for structure in [Structure::NonInjective, Structure::Injective] {
                    for nonlinearity in
                        [Nonlinearity::Neural, Nonlinearity::Dot, Nonlinearity::Hinge]
                    {
                        out.push(ModelConfig {
                            stage,
                            granularity,
                            structure,
                            nonlinearity,
                            layers: 2,
                            ..ModelConfig::default()
                        });
                    }
                }
            }
        }
        out
    }

    #[test]
    fn every_configuration_produces_finite_embeddings() {
        let pair = small_pair();
        for config in all_configs() {
            let store = init_params(&config, 7).unwrap();
            let (xq, xc) = run_encoder(&config, &pair, &store);
            assert!(xq.iter().all(|v| v.is_finite()));
            assert!(xc.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn late_stage_corpus_embedding_ignores_the_query() {
        for granularity in [Granularity::Node, Granularity::Edge] {
            let config = ModelConfig {
                stage: Stage::Late,
                granularity,
                ..ModelConfig::default()
            };
            let store = init_params(&config, 3).unwrap();
            let corpus = Graph::new(4, vec![(0, 1), (1, 2), (2, 3)]).unwrap();
            let queries = [
                Graph::new(2, vec![(0, 1)]).unwrap(),
                Graph::new(3, vec![(0, 1), (0, 2)]).unwrap(),
                Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap(),
            ];
            let mut reference: Option<Vec<u64>> = None;
            for q in &queries {
                let pair = pad_pair(q, &corpus);
                let mut tape = Tape::new();
                let state = encode(&mut tape, &store, &config, &pair, None).unwrap();
                let (_, xc) = state.scoring_sets(granularity);
                // Compare the real (non-pad) rows bit for bit.
                let real_rows = match granularity {
                    Granularity::Node => corpus.node_count(),
                    Granularity::Edge => corpus.edge_count(),
                };
                let bits: Vec<u64> = tape
                    .value(xc)
                    .slice(s![..real_rows, ..])
                    .iter()
                    .map(|v| v.to_bits())
                    .collect();
                match &reference {
                    None => reference = Some(bits),
                    Some(r) => assert_eq!(r, &bits, "{granularity:?}"),
                }
            }
        }
    }

    #[test]
    fn early_stage_corpus_change_perturbs_query_embedding() {
        for granularity in [Granularity::Node, Granularity::Edge] {
            let config = ModelConfig {
                stage: Stage::Early,
                granularity,
                layers: 2,
                ..ModelConfig::default()
            };
            let store = init_params(&config, 5).unwrap();
            let q = Graph::new(3, vec![(0, 1), (1, 2)]).unwrap();
            let c1 = Graph::new(4, vec![(0, 1), (1, 2), (2, 3)]).unwrap();
            let c2 = Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
            let run = |c: &Graph| -> Mat {
                let pair = pad_pair(&q, c);
                let mut tape = Tape::new();
                let state = encode(&mut tape, &store, &config, &pair, None).unwrap();
                tape.value(state.node_q).clone()
            };
            let h1 = run(&c1);
            let h2 = run(&c2);
            let max_delta = (&h1 - &h2).iter().map(|d| d.abs()).fold(0.0f64, f64::max);
            assert!(max_delta > 0.0, "{granularity:?}: query embedding did not react");
        }
    }

    #[test]
    fn isomorphic_queries_get_identical_embedding_multisets() {
        let config = ModelConfig {
            stage: Stage::Late,
            granularity: Granularity::Node,
            ..ModelConfig::default()
        };
        let store = init_params(&config, 11).unwrap();
        let corpus = Graph::new(4, vec![(0, 1), (1, 2), (2, 3)]).unwrap();
        let g1 = Graph::new(4, vec![(0, 1), (1, 2), (1, 3)]).unwrap();
        let perm = [3usize, 1, 0, 2];
        let g2 = g1.relabel(&perm).unwrap();

        let embed = |g: &Graph| -> Vec<Vec<f64>> {
            let pair = pad_pair(g, &corpus);
            let mut tape = Tape::new();
            let state = encode(&mut tape, &store, &config, &pair, None).unwrap();
            tape.value(state.node_q)
                .rows()
                .into_iter()
                .map(|r| r.to_vec())
                .collect()
        };
        // Node u of g1 is node perm[u] of g2, so the embedding rows are the
        // same multiset, matched by perm.
        let e1 = embed(&g1);
        let e2 = embed(&g2);
        for (u, &pu) in perm.iter().enumerate() {
            for (x, y) in e1[u].iter().zip(&e2[pu]) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn permutation_equivariance_both_stages_and_granularities() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        for stage in [Stage::Late, Stage::Early] {
            for granularity in [Granularity::Node, Granularity::Edge] {
                let config = ModelConfig {
                    stage,
                    granularity,
                    layers: 2,
                    ..ModelConfig::default()
                };
                let store = init_params(&config, 23).unwrap();
                let q = Graph::erdos_renyi(5, 0.5, &mut rng).unwrap();
                let c = Graph::erdos_renyi(5, 0.5, &mut rng).unwrap();
                let mut perm: Vec<usize> = (0..5).collect();
                for i in (1..5).rev() {
                    perm.swap(i, rng.gen_range(0..=i));
                }
                let qp = q.relabel(&perm).unwrap();

                let node_embed = |g: &Graph| -> Mat {
                    let pair = pad_pair(g, &c);
                    let mut tape = Tape::new();
                    let state = encode(&mut tape, &store, &config, &pair, None).unwrap();
                    tape.value(state.node_q).clone()
                };
                let base = node_embed(&q);
                let permuted = node_embed(&qp);
                for u in 0..5 {
                    for d in 0..config.dim_h {
                        assert!(
                            (base[(u, d)] - permuted[(perm[u], d)]).abs() < 1e-9,
                            "{stage:?}/{granularity:?} node {u} dim {d}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn padded_nodes_receive_no_messages() {
        // A padded (isolated) node's embedding trajectory must match that of
        // a genuinely isolated node in a 1-node graph.
        let config = ModelConfig {
            stage: Stage::Late,
            granularity: Granularity::Node,
            ..ModelConfig::default()
        };
        let store = init_params(&config, 2).unwrap();
        let q = Graph::new(2, vec![(0, 1)]).unwrap();
        let c = Graph::new(5, vec![(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let pair = pad_pair(&q, &c);
        let mut tape = Tape::new();
        let state = encode(&mut tape, &store, &config, &pair, None).unwrap();
        let hq = tape.value(state.node_q);

        let singleton = Graph::new(1, Vec::new()).unwrap();
        let pair1 = pad_pair(&singleton, &singleton);
        let mut tape1 = Tape::new();
        let state1 = encode(&mut tape1, &store, &config, &pair1, None).unwrap();
        let isolated = tape1.value(state1.node_q);
        for pad_row in 2..5 {
            for d in 0..config.dim_h {
                assert_eq!(hq[(pad_row, d)].to_bits(), isolated[(0, d)].to_bits());
            }
        }
    }

    #[test]
    fn early_node_with_zeroed_cross_weights_equals_late_node() {
        // The late encoder is the early encoder with the alignment signal
        // cut. Build early-stage parameters whose GRU rows for the cross
        // signal are zero and whose remaining entries copy the late draw:
        // outputs must agree bit for bit.
        let late = ModelConfig {
            stage: Stage::Late,
            granularity: Granularity::Node,
            nonlinearity: Nonlinearity::Hinge,
            layers: 3,
            ..ModelConfig::default()
        };
        let early = ModelConfig {
            stage: Stage::Early,
            ..late
        };
        let late_store = init_params(&late, 31).unwrap();
        let mut early_store = init_params(&early, 31).unwrap();
        let dm = late.dim_m;
        let dh = late.dim_h;
        for gate in ["z", "r", "n"] {
            let w_late = late_store.get(&format!("upd.w_{gate}")).unwrap();
            let mut w_early = Mat::zeros((dm + dh, dh));
            w_early.slice_mut(s![..dm, ..]).assign(w_late);
            early_store.set(&format!("upd.w_{gate}"), w_early).unwrap();
            for part in ["u", "b"] {
                let name = format!("upd.{part}_{gate}");
                early_store
                    .set(&name, late_store.get(&name).unwrap().clone())
                    .unwrap();
            }
        }
        early_store
            .set("upd.c_n", late_store.get("upd.c_n").unwrap().clone())
            .unwrap();
        for name in ["embed.w", "embed.b", "msg.w", "msg.b"] {
            early_store
                .set(name, late_store.get(name).unwrap().clone())
                .unwrap();
        }

        let pair = small_pair();
        let (hq_late, hc_late) = run_encoder(&late, &pair, &late_store);
        let (hq_early, hc_early) = run_encoder(&early, &pair, &early_store);
        assert_eq!(hq_late, hq_early);
        assert_eq!(hc_late, hc_early);
    }

    #[test]
    fn gradient_reaches_every_parameter() {
        // Scored loss on one pair; each configuration's parameters must all
        // receive a nonzero gradient somewhere.
        use crate::model::score_pair;
        let q = Graph::new(4, vec![(0, 1), (1, 2), (2, 3)]).unwrap();
        let c = Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let pair = pad_pair(&q, &c);
        for base in all_configs() {
            for distance in [
                RelevanceDistance::SetAlign,
                RelevanceDistance::AggHinge,
                RelevanceDistance::AggMlp,
                RelevanceDistance::AggNtn,
            ] {
                let config = ModelConfig { distance, ..base };
                if !config.uses_alignment()
                    && (config.structure != Structure::NonInjective
                        || config.nonlinearity != Nonlinearity::Neural)
                {
                    // Alignment axes are inert; only one representative needed.
                    continue;
                }
                let store = init_params(&config, 37).unwrap();
                let mut tape = Tape::new();
                let d = score_pair(&mut tape, &store, &config, &pair, None).unwrap();
                let grads = tape.backward(d).unwrap();
                for name in store.names() {
                    if distance == RelevanceDistance::AggHinge && name == "readout.out.b" {
                        // The final readout bias cancels exactly in g_q - g_c,
                        // so the hinge head cannot reach it.
                        continue;
                    }
                    let g = &grads[name];
                    let max = g.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
                    assert!(
                        max > 0.0,
                        "dead parameter {name} in {:?}/{:?}/{:?}/{:?}/{:?}",
                        config.distance,
                        config.stage,
                        config.structure,
                        config.nonlinearity,
                        config.granularity
                    );
                }
            }
        }
    }

    #[test]
    fn edgeless_graphs_encode_without_panic() {
        let q = Graph::new(3, Vec::new()).unwrap();
        let c = Graph::new(4, vec![(0, 1), (2, 3)]).unwrap();
        for config in all_configs() {
            let store = init_params(&config, 41).unwrap();
            let pair = pad_pair(&q, &c);
            let (xq, xc) = run_encoder(&config, &pair, &store);
            assert!(xq.iter().all(|v| v.is_finite()));
            assert!(xc.iter().all(|v| v.is_finite()));
        }
    }
}
