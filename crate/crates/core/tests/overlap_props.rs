mod common;

use common::{canonical_classes, overlap_oracle};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relu_overlap::network::Mlp;
use relu_overlap::overlap::{overlap_decomposition_with, OverlapDecomposition, OverlapOptions};
use relu_overlap::polyhedra::{populate_decomposition, BoundingBox};

fn net_strategy(input: usize, output: usize) -> impl Strategy<Value = Mlp> {
    (prop::collection::vec(2usize..=6, 1..=2), any::<u64>()).prop_map(move |(hidden, seed)| {
        let mut s = vec![input];
        s.extend(hidden);
        s.push(output);
        Mlp::init_kaiming(&s, seed).unwrap()
    })
}

fn points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect()).collect()
}

fn classes(net: &Mlp, pts: &[Vec<f64>], opts: &OverlapOptions) -> OverlapDecomposition {
    let d = populate_decomposition(net, pts, net.depth(), &BoundingBox::default_for(net.input_dim())).unwrap();
    overlap_decomposition_with(net, pts, &d, opts).unwrap()
}

fn point_classes(od: &OverlapDecomposition) -> Vec<Vec<usize>> {
    canonical_classes(od.classes().iter().map(|c| c.points.clone()).collect())
}

fn strict(delta: f64) -> OverlapOptions {
    OverlapOptions {
        boundary_membership: false,
        ..OverlapOptions::with_delta(delta)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn matches_interval_images_in_one_dimension(
        net in net_strategy(1, 1),
        seed in any::<u64>(),
        delta in prop::sample::select(vec![0.05, 0.5, 1e6]),
    ) {
        let pts = points(14, 1, seed);
        let bbox = BoundingBox::default_for(1);
        let oracle = overlap_oracle(&net, &pts, net.depth(), &bbox, delta, None, 1e-9, 1e-5);
        prop_assume!(oracle.ambiguous == 0);
        prop_assert_eq!(point_classes(&classes(&net, &pts, &strict(delta))), oracle.classes);
    }

    #[test]
    fn matches_polygon_images_in_two_dimensions(
        net in net_strategy(2, 1),
        seed in any::<u64>(),
    ) {
        let pts = points(12, 2, seed);
        let bbox = BoundingBox::default_for(2);
        let oracle = overlap_oracle(&net, &pts, net.depth(), &bbox, 1.0, None, 1e-9, 1e-5);
        prop_assume!(oracle.ambiguous == 0);
        prop_assert_eq!(point_classes(&classes(&net, &pts, &strict(1.0))), oracle.classes);
    }

    #[test]
    fn point_order_does_not_matter(net in net_strategy(2, 1), seed in any::<u64>()) {
        let pts = points(16, 2, seed);
        let mut perm: Vec<usize> = (0..pts.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let shuffled: Vec<Vec<f64>> = perm.iter().map(|&i| pts[i].clone()).collect();
        let base = point_classes(&classes(&net, &pts, &OverlapOptions::with_delta(1.0)));
        let moved = classes(&net, &shuffled, &OverlapOptions::with_delta(1.0));
        let mapped = canonical_classes(
            moved.classes().iter().map(|c| c.points.iter().map(|&k| perm[k]).collect()).collect(),
        );
        prop_assert_eq!(base, mapped);
    }

    #[test]
    fn smaller_delta_refines_larger(net in net_strategy(1, 1), seed in any::<u64>()) {
        let pts = points(16, 1, seed);
        let fine = classes(&net, &pts, &OverlapOptions::with_delta(0.2)).labels(pts.len());
        let coarse = classes(&net, &pts, &OverlapOptions::with_delta(5.0)).labels(pts.len());
        for p in 0..pts.len() {
            for q in 0..pts.len() {
                if fine[p] == fine[q] {
                    prop_assert_eq!(coarse[p], coarse[q]);
                }
            }
        }
    }

    #[test]
    fn repeated_runs_agree(net in net_strategy(2, 2), seed in any::<u64>()) {
        let pts = points(20, 2, seed);
        let opts = OverlapOptions::with_delta(1.0);
        prop_assert_eq!(classes(&net, &pts, &opts), classes(&net, &pts, &opts));
    }
}

#[test]
fn absolute_value_glues_mirror_points() {
    // |x| through one hidden layer of two neurons
    let net = Mlp::new(vec![
        relu_overlap::linalg::AffineMap::new(
            relu_overlap::linalg::Matrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap(),
            vec![0.0, 0.0],
        )
        .unwrap(),
        relu_overlap::linalg::AffineMap::new(
            relu_overlap::linalg::Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap(),
            vec![0.0],
        )
        .unwrap(),
    ])
    .unwrap();
    let pts = vec![vec![-2.0], vec![-1.0], vec![1.5], vec![2.0]];
    let od = classes(&net, &pts, &OverlapOptions::with_delta(0.6));
    assert_eq!(point_classes(&od), vec![vec![0, 1, 2, 3]]);
}
