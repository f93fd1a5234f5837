"""Exercises the Python bindings end to end; exits non-zero on failure."""

import relu_overlap as ro


def main():
    # |x| as a two-neuron network: mirror points share outputs
    absnet = ro.Mlp([([[1.0], [-1.0]], [0.0, 0.0]), ([[1.0, 1.0]], [0.0])])
    assert absnet.shape == [1, 2, 1]
    assert abs(absnet.output([-0.7])[0] - 0.7) < 1e-12
    pts = [[i / 10 - 1] for i in range(21)]
    classes = ro.overlap_classes(absnet, pts, delta=1.0)
    assert classes == [list(range(21))], classes

    regions = ro.populate(absnet, pts)
    assert sum(len(p) for _, p, _ in regions) == 21
    cw = absnet.codeword([0.5])
    m, c = absnet.region_affine_map(cw)
    assert abs(m[0][0] - 1.0) < 1e-12 and abs(c[0]) < 1e-12

    line = [[i / 99] for i in range(100)]
    assert ro.quotient_betti(line, [[0, 99]], 0.1) == [1, 1]
    assert ro.quotient_betti(line, [], 0.1) == [1, 0]

    circle, _ = ro.gen_known_topology("circle", 60)
    bars = ro.persistent_homology(circle, max_dim=1, max_scale=2.0)
    assert sum(1 for d, b, e in bars if d == 1 and b <= 0.5 < e) == 1

    ok, x = ro.feasible([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]], [1.0, 0.0, 2.0])
    assert ok and 0 <= x[0] <= 1 + 1e-7
    assert not ro.feasible([[1.0], [-1.0]], [0.0, -1.0])[0]

    inputs, labels = ro.gen_concentric_spheres(1, 20, seed=1)
    net = ro.Mlp.kaiming([2, 8, 8, 2], seed=3)
    trained, losses = ro.train_network(net, inputs, labels, "spheres", epochs=20)
    assert len(losses) == 20 and all(l == l for l in losses)
    assert trained.depth == 3
    ro.overlap_classes(trained, inputs)

    try:
        ro.Mlp.kaiming([2], seed=0)
    except ValueError:
        pass
    else:
        raise AssertionError("a one-entry shape should be rejected")
    print("python smoke test passed")


if __name__ == "__main__":
    main()
