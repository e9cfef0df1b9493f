import numpy as np
import pytest

from malvis.cnn import (CnnConfig, build_cnn, kfold_cv, predict, predict_proba, stratified_folds,
                        to_input, train_cnn)
from malvis.prs import BinaryImage, derive_layout, encode_batch
from malvis.synth import SynthConfig, gen_dataset


def two_images():
    a = np.zeros((64, 64), dtype=bool)
    b = np.zeros((64, 64), dtype=bool)
    b[:20, :10] = True
    return np.stack([a, b]), np.array([0, 1])


def test_memorises_two_samples():
    images, labels = two_images()
    model, hist = train_cnn(images, labels, CnnConfig(epochs=200, batch_size=2, rng_seed=0))
    hit = next(i for i, acc in enumerate(hist.accuracy) if acc == 1.0)
    assert hit < 200
    assert [predict(model, img)[0] for img in images] == [0, 1]


def test_white_image_gives_probability_pair():
    model = build_cnn(np.random.default_rng(0))
    cls, probs = predict(model, BinaryImage(np.zeros((64, 64), dtype=bool)))
    assert probs.shape == (2,) and probs.sum() == pytest.approx(1.0) and cls in (0, 1)
    assert np.array_equal(predict(model, np.zeros((64, 64), dtype=bool))[1], probs)


def test_predict_rejects_wrong_size():
    with pytest.raises(ValueError):
        predict(build_cnn(), np.zeros((32, 32), dtype=bool))


def test_tie_goes_to_class_zero():
    model = build_cnn()
    last = model.layers[-2]
    last.weight.value[:] = 0.0
    last.bias.value[:] = 0.0
    assert predict(model, np.zeros((64, 64), dtype=bool)) [0] == 0


def test_input_must_be_two_valued():
    with pytest.raises(TypeError):
        to_input(np.full((1, 64, 64), 0.5))
    x = to_input(np.array([[[True, False]]]))
    assert set(np.unique(x)) == {0.0, 1.0}


def test_training_validation():
    images, labels = two_images()
    with pytest.raises(ValueError):
        train_cnn(images, np.array([1, 1]), CnnConfig(epochs=1))
    with pytest.raises(ValueError):
        train_cnn(images[:0], labels[:0], CnnConfig(epochs=1))
    with pytest.raises(ValueError):
        CnnConfig(epochs=0)


def small_dataset(n=40, seed=0):
    X, y = gen_dataset(SynthConfig(n_benign=n, n_malign=n, rng_seed=seed))
    return encode_batch(X, derive_layout(128)), y


def test_determinism():
    images, labels = small_dataset(8)
    cfg = CnnConfig(epochs=2, batch_size=4, rng_seed=3)
    m1, h1 = train_cnn(images, labels, cfg)
    m2, h2 = train_cnn(images, labels, cfg)
    assert h1 == h2
    assert all(np.array_equal(a.value, b.value) for a, b in zip(m1.params(), m2.params()))


def test_learns_separable_data():
    images, labels = small_dataset(60, seed=1)
    test_images, test_labels = small_dataset(20, seed=2)
    model, hist = train_cnn(images, labels, CnnConfig(epochs=12, batch_size=16, rng_seed=0))
    assert np.all(np.isfinite(hist.loss))
    # 5-epoch moving average of the loss never rises by more than noise
    ma = np.convolve(hist.loss, np.ones(5) / 5, mode="valid")
    assert ma[-1] < ma[0]
    probs = predict_proba(model, test_images)
    assert np.allclose(probs.sum(axis=1), 1.0)
    malign = test_images[test_labels == 1][0]
    assert predict(model, malign)[0] == 1
    assert (probs.argmax(axis=1) == test_labels).mean() >= 0.9


def test_stratified_folds_partition():
    labels = np.array([0] * 5 + [1] * 5)
    folds = stratified_folds(labels, 5, np.random.default_rng(0))
    assert [len(f) for f in folds] == [2] * 5
    assert sorted(np.concatenate(folds).tolist()) == list(range(10))
    for f in folds:
        assert (labels[f] == 1).sum() == 1


@pytest.mark.parametrize("n0, n1, k", [(23, 11, 5), (100, 7, 3), (9, 9, 4)])
def test_stratified_fold_ratios(n0, n1, k):
    labels = np.array([0] * n0 + [1] * n1)
    folds = stratified_folds(labels, k, np.random.default_rng(1))
    for cls, n in ((0, n0), (1, n1)):
        counts = [(labels[f] == cls).sum() for f in folds]
        assert max(counts) - min(counts) <= 1 and sum(counts) == n
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1


def test_folds_need_enough_samples():
    with pytest.raises(ValueError):
        stratified_folds(np.array([0, 1, 0]), 5, np.random.default_rng(0))


def test_kfold_cv_report():
    images, labels = small_dataset(5, seed=3)
    report = kfold_cv(images, labels, CnnConfig(epochs=1, batch_size=4, fold_count=5))
    assert len(report["folds"]) == 5
    assert sum(f["n_validation"] for f in report["folds"]) == 10
    accs = [f["accuracy"] for f in report["folds"]]
    assert report["mean_accuracy"] == pytest.approx(sum(accs) / 5)
    again = kfold_cv(images, labels, CnnConfig(epochs=1, batch_size=4, fold_count=5))
    assert again == report
