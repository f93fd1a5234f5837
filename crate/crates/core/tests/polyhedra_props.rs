use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relu_overlap::linalg::DEFAULT_RANK_TOL;
use relu_overlap::network::{GlobalCodeword, Mlp};
use relu_overlap::polyhedra::{build_hrep, populate_decomposition, BoundingBox, HPolyhedron};
use relu_overlap::rankdecomp::region_rank;

fn net_strategy() -> impl Strategy<Value = Mlp> {
    (1usize..=3, prop::collection::vec(2usize..=8, 1..=3), any::<u64>()).prop_map(|(i, hidden, seed)| {
        let mut s = vec![i];
        s.extend(hidden);
        s.push(2);
        Mlp::init_kaiming(&s, seed).unwrap()
    })
}

fn points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect()).collect()
}

fn strictly_inside(p: &HPolyhedron, x: &[f64]) -> bool {
    p.max_violation(x).unwrap() < -1e-9
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_point_lies_in_its_own_region(net in net_strategy(), seed in any::<u64>()) {
        let pts = points(30, net.input_dim(), seed);
        let bbox = BoundingBox::default_for(net.input_dim());
        for layer in 1..=net.depth() {
            for x in &pts {
                let j = net.global_codeword(x, layer).unwrap();
                let p = build_hrep(&net, &j, layer, &bbox).unwrap();
                prop_assert!(p.contains(x, 1e-7).unwrap());
            }
        }
    }

    #[test]
    fn populated_regions_cover_each_point_once(net in net_strategy(), seed in any::<u64>()) {
        let pts = points(40, net.input_dim(), seed);
        let bbox = BoundingBox::default_for(net.input_dim());
        let d = populate_decomposition(&net, &pts, net.depth(), &bbox).unwrap();
        let mut seen = vec![0usize; pts.len()];
        for (r, region) in d.regions().iter().enumerate() {
            for &p in &region.points {
                seen[p] += 1;
                prop_assert_eq!(d.region_of(p), r);
                prop_assert_eq!(&net.global_codeword(&pts[p], net.depth()).unwrap(), &region.codeword);
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn deeper_regions_refine_shallower_ones(net in net_strategy(), seed in any::<u64>()) {
        prop_assume!(net.depth() >= 2);
        let n = net.input_dim();
        let bbox = BoundingBox::default_for(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        for layer in 1..net.depth() {
            let deep = build_hrep(&net, &net.global_codeword(&x, layer + 1).unwrap(), layer + 1, &bbox).unwrap();
            let shallow = build_hrep(&net, &net.global_codeword(&x, layer).unwrap(), layer, &bbox).unwrap();
            for _ in 0..200 {
                let z: Vec<f64> = x.iter().map(|v| v + rng.random_range(-1.0..1.0)).collect();
                if deep.contains(&z, 0.0).unwrap() {
                    prop_assert!(shallow.contains(&z, 1e-9).unwrap());
                }
            }
        }
    }

    #[test]
    fn region_interiors_are_disjoint(net in net_strategy(), seed in any::<u64>()) {
        let n = net.input_dim();
        let bbox = BoundingBox::default_for(n);
        let layer = net.depth();
        let pts = points(12, n, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let hreps: Vec<(GlobalCodeword, HPolyhedron)> = pts
            .iter()
            .map(|x| {
                let j = net.global_codeword(x, layer).unwrap();
                let p = build_hrep(&net, &j, layer, &bbox).unwrap();
                (j, p)
            })
            .collect();
        for (x, (jx, px)) in pts.iter().zip(&hreps) {
            for _ in 0..50 {
                let z: Vec<f64> = x.iter().map(|v| v + rng.random_range(-0.5..0.5)).collect();
                if !strictly_inside(px, &z) {
                    continue;
                }
                for (jy, py) in &hreps {
                    if jy != jx {
                        prop_assert!(!strictly_inside(py, &z));
                    }
                }
            }
        }
    }

    #[test]
    fn rank_is_bounded_by_active_neurons_and_input_dim(net in net_strategy(), seed in any::<u64>()) {
        let layer = net.depth() - 1;
        prop_assume!(layer >= 1);
        for x in points(20, net.input_dim(), seed) {
            let j = net.global_codeword(&x, layer).unwrap();
            let r = region_rank(&net, &j, layer, DEFAULT_RANK_TOL).unwrap();
            let active = (1..=layer).map(|k| j.layer(k).iter().filter(|&&b| b).count()).min().unwrap();
            prop_assert!(r <= active.min(net.input_dim()));
        }
    }

    #[test]
    fn switching_off_a_neuron_never_raises_rank(net in net_strategy(), seed in any::<u64>()) {
        let layer = net.depth() - 1;
        prop_assume!(layer >= 1);
        for x in points(10, net.input_dim(), seed) {
            let j = net.global_codeword(&x, layer).unwrap();
            let r = region_rank(&net, &j, layer, DEFAULT_RANK_TOL).unwrap();
            for (i, &bit) in j.bits().iter().enumerate() {
                if bit {
                    let off = j.with_bit(i, false);
                    prop_assert!(region_rank(&net, &off, layer, DEFAULT_RANK_TOL).unwrap() <= r);
                }
            }
        }
    }
}
