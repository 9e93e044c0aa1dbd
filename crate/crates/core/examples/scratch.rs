use rand::Rng;
use refnet::coreperiphery::*;
use refnet::graph::RefGraph;
fn main() {
    let t = std::time::Instant::now();
    let mut ok = 0;
    for seed in 0..20u64 {
        let mut rng = refnet::rng::stream_rng(seed, 99);
        let mut e = Vec::new();
        let mut add = |a: u32, b: u32| {
            e.push((a, b, 1));
            e.push((b, a, 1));
        };
        for a in 0..110u32 {
            for b in a + 1..110 {
                let p = if b < 10 {
                    0.9
                } else if a < 10 {
                    0.3
                } else {
                    0.01
                };
                if rng.gen::<f64>() < p {
                    add(a, b);
                }
            }
        }
        let g = RefGraph::from_edges(110, e).unwrap();
        let r = cp_scores(&g, &CpConfig { seed, ..CpConfig::default() }).unwrap();
        let minc = r.cp_score[..10].iter().cloned().fold(1.0, f64::min);
        let maxp = r.cp_score[10..].iter().cloned().fold(0.0, f64::max);
        if minc > maxp {
            ok += 1;
        }
        println!("{seed} minc {minc:.4} maxp {maxp:.4} core {:?} H {:.3}", r.core_node, r.core_entropy);
    }
    println!("ok {ok}/20 in {:?}", t.elapsed());
}
