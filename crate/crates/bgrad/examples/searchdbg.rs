use bgrad::geometry::ModelSpace;
use bgrad::norms::*;

fn main() {
    let torus = ModelSpace::flat_torus(1).unwrap();
    for cutoff in [512usize, 1024] {
        let mut cfg = NormSearchConfig::new(torus.clone(), SearchOperator::Riesz { a: 0.0 }, 3.0, 5);
        cfg.iterations = 150;
        cfg.restarts = 2;
        cfg.cutoff = cutoff;
        let t = std::time::Instant::now();
        let rep = operator_norm_lower_bound(&cfg, vec![]).unwrap();
        println!("cutoff {cutoff:5}: best = {:.6}  ({:.1?})", rep.empirical, t.elapsed());
    }
}
