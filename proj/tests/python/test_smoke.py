"""End-to-end smoke of the python module: synthetic data, node and cascade
training, scanning, and model round trips."""

import os
import tempfile

import cascadeprune as cp


def test_vector_node():
    spec = cp.SynthSpec()
    spec.mode = cp.SynthMode.Vectors
    spec.dims = 8
    spec.separation = 2.5
    spec.positives = 300
    spec.negatives = 300
    spec.seed = 5
    ds = cp.synth_vectors(spec)
    assert ds.samples.sample_count() == 600
    assert ds.samples.feature_count() == 8
    assert ds.labels[0] == 1 and ds.labels[-1] == -1

    cfg = cp.NodeTrainConfig()
    cfg.t1 = 40
    cfg.t = 10
    cfg.trainer = cp.Trainer.Pruning
    cfg.seed = 5
    cfg.threads = 2
    node = cp.train_node_values(ds.samples, ds.labels, cfg)
    assert node.size() == 10
    assert 0.9 <= node.train_stats.detection_rate <= 1.0
    margins = [cp.value_node_margin(node, ds.samples, i) for i in range(600)]
    assert all(m == m for m in margins)

    again = cp.train_node_values(ds.samples, ds.labels, cfg)
    assert again.coefficients == node.coefficients
    assert again.threshold == node.threshold


def test_patch_cascade_roundtrip():
    spec = cp.SynthSpec()
    spec.mode = cp.SynthMode.Patches
    spec.window_w = spec.window_h = 20
    spec.background_w = spec.background_h = 64
    spec.positives = 60
    spec.negatives = 8
    spec.noise = 0.2
    spec.seed = 7
    ds = cp.synth_patches(spec)
    assert len(ds.positives) == 60 and len(ds.backgrounds) == 8
    assert len(ds.motif) >= 2

    cfg = cp.CascadeTrainConfig()
    cfg.schedule = [(3, 10), (5, 16)]
    cfg.negative_count = 200
    cfg.haar_budget = 400
    cfg.use_hog = False
    cfg.threads = 2
    cfg.seed = 7
    cascade = cp.train_cascade(cfg, ds.positives, ds.backgrounds, 20, 20)
    assert len(cascade.nodes) == 2

    accepted = sum(cp.cascade_classify(cascade, p).accepted for p in ds.positives)
    assert accepted >= 54

    text = cp.serialize_cascade(cascade)
    assert cp.parse_cascade(text) == cascade
    path = os.path.join(tempfile.mkdtemp(), "m.txt")
    cp.save_cascade(cascade, path)
    assert cp.load_cascade(path) == cascade

    scenes = cp.synth_scenes(spec, 3, 1, 1)
    matched = truth = 0
    for img, truths in zip(scenes.images, scenes.truths):
        dets = cp.merge_detections(cp.scan(img, cascade, 1.25, 2))
        counts = cp.evaluate_detections(dets, truths)
        matched += counts.matched
        truth += counts.truth_count
    assert truth == 3
    assert matched >= 2


def test_rates_and_threshold():
    rates = cp.overall_rates([cp.RatePair(0.995, 0.5)] * 3)
    assert abs(rates.dr - 0.995**3) < 1e-12
    assert abs(rates.fp - 0.125) < 1e-12

    thr = cp.place_threshold([float(i) for i in range(100)], 0.5)
    assert 49.0 < thr <= 50.0


def test_errors():
    spec = cp.SynthSpec()
    spec.positives = 1
    try:
        cp.synth_vectors(spec)
    except cp.CascadeError:
        pass
    else:
        raise AssertionError("expected CascadeError")


def main():
    test_vector_node()
    test_patch_cascade_roundtrip()
    test_rates_and_threshold()
    test_errors()
    print("python smoke: ok")


if __name__ == "__main__":
    main()
