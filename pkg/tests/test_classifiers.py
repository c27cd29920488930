from __future__ import annotations

import itertools
import math
from pathlib import Path

import numpy as np
import pytest

from src.bayesnet import AttributeSpace, BnModel, MultiNetModel, Structure
from src.classifiers import (
    ALL_KINDS,
    ClassifierKind,
    TrainedClassifier,
    class_scores,
    classify,
    load_classifier,
    parse_threshold,
    predict_batch,
    save_classifier,
    train,
    train_arrays,
)
from src.errors import ConfigError, DataError, RangeError
from src.synthetic import sample_instances


def _random_data(rng: np.random.Generator, n: int = 4, k: int = 2, classes: int = 3, size: int = 60):
    space = AttributeSpace.uniform(n, k, classes)
    return space, rng.integers(0, k, size=(size, n)), np.arange(size) % classes


def _generator_model(copy: float = 0.8) -> BnModel:
    """Five attributes wired as (None, 0, 0, 1, 1); children copy their parent's value."""

    k, classes = 3, 3
    space = AttributeSpace.uniform(5, k, classes)
    root = np.full((k, classes), (1 - copy) / (k - 1))
    root[np.arange(k), np.arange(classes)] = copy
    child = np.full((k, k, classes), (1 - copy) / (k - 1))
    child[np.arange(k), np.arange(k), :] = copy
    return BnModel(space, Structure((None, 0, 0, 1, 1)), np.full(classes, 1 / classes), (root,) + (child,) * 4)


def _all_instances(n: int, k: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(k), repeat=n))


def test_naive_bayes_has_no_arcs(rng: np.random.Generator) -> None:
    space, labels, classes = _random_data(rng)
    clf = train_arrays("nb", labels, classes, space)
    assert clf.structures[0].arcs == []
    assert clf.threshold is None


def test_gfan_with_high_threshold_is_naive_bayes(rng: np.random.Generator) -> None:
    space, labels, classes = _random_data(rng, n=4, k=2, classes=2, size=40)
    nb = train_arrays("nb", labels, classes, space)
    gfan = train_arrays("gfan", labels, classes, space, threshold=10.0)
    assert gfan.structures[0].arcs == []
    for a in _all_instances(4, 2):
        nb_class, nb_post = classify(nb, a)
        gfan_class, gfan_post = classify(gfan, a)
        assert gfan_class == nb_class
        np.testing.assert_array_equal(gfan_post, nb_post)


def test_gtan_recovers_generating_skeleton() -> None:
    generator = _generator_model()
    labels, classes = sample_instances(generator, 10_000, seed=2024)
    clf = train_arrays(ClassifierKind.GTAN, labels, classes, generator.space)
    assert clf.structures[0].skeleton() == generator.structure.skeleton()
    assert len(clf.structures[0].arcs) == 4


def test_per_class_structures_use_class_data() -> None:
    generator = _generator_model()
    labels, classes = sample_instances(generator, 6_000, seed=7)
    clf = train_arrays("tan", labels, classes, generator.space)
    assert len(clf.structures) == 3
    for structure in clf.structures:
        assert structure.skeleton() == generator.structure.skeleton()


def test_per_class_fan_without_threshold_is_per_class_tan(rng: np.random.Generator) -> None:
    space, labels, classes = _random_data(rng, n=4, k=3, classes=3, size=90)
    tan = train_arrays("tan", labels, classes, space)
    fan = train_arrays("fan", labels, classes, space, threshold=-math.inf)
    assert fan.structures == tan.structures
    for a in _all_instances(4, 3):
        assert classify(fan, a)[0] == classify(tan, a)[0]


def test_multinet_with_naive_structures_matches_naive_bayes(rng: np.random.Generator) -> None:
    space, labels, classes = _random_data(rng, n=4, k=2, classes=3, size=45)
    nb = train_arrays("nb", labels, classes, space)
    fan = train_arrays("fan", labels, classes, space, threshold=math.inf)
    assert all(s.arcs == [] for s in fan.structures)
    for a in _all_instances(4, 2):
        assert classify(fan, a)[0] == classify(nb, a)[0]
        np.testing.assert_allclose(class_scores(fan, a), class_scores(nb, a), rtol=1e-12)


def test_multinet_sharing_the_global_tree_matches_gtan(rng: np.random.Generator) -> None:
    space, labels, classes = _random_data(rng, n=4, k=2, classes=3, size=60)
    gtan = train_arrays("gtan", labels, classes, space)
    structure = gtan.structures[0]
    assert len(structure.arcs) == 3
    per_class = tuple(tuple(cpt[..., c] for cpt in gtan.model.cpts) for c in range(space.class_count))
    shared = TrainedClassifier(
        ClassifierKind.TAN,
        MultiNetModel(space, gtan.model.class_prior, (structure,) * space.class_count, per_class),
    )
    for a in _all_instances(4, 2):
        assert classify(shared, a)[0] == classify(gtan, a)[0]
        np.testing.assert_allclose(class_scores(shared, a), class_scores(gtan, a), rtol=1e-12)


def test_naive_bayes_by_hand() -> None:
    space = AttributeSpace.uniform(2, 2, 2)
    data = [([0, 0], 0), ([0, 1], 0), ([1, 1], 1)]
    clf = train("nb", data, space)
    prior = np.array([3 / 5, 2 / 5])
    p_a0 = np.array([[3 / 4, 1 / 3], [1 / 4, 2 / 3]])
    p_a1 = np.array([[2 / 4, 1 / 3], [2 / 4, 2 / 3]])
    product = prior * p_a0[0] * p_a1[1]
    decision, post = classify(clf, [0, 1])
    np.testing.assert_allclose(post, product / product.sum())
    assert decision == 0


def test_posteriors_sum_to_one(rng: np.random.Generator) -> None:
    space, labels, classes = _random_data(rng, n=5, k=3, classes=4, size=80)
    for kind in ALL_KINDS:
        clf = train_arrays(kind, labels, classes, space)
        for a in labels[:20]:
            _, post = classify(clf, a)
            assert post.sum() == pytest.approx(1.0, abs=1e-12)
        with pytest.raises(RangeError):
            classify(clf, [3, 0, 0, 0, 0])


def test_decisions_survive_duplication() -> None:
    space = AttributeSpace.uniform(4, 3, 3)
    labels = np.array([[c] * 4 for c in range(3)] * 4)
    classes = np.array(list(range(3)) * 4)
    for kind in ALL_KINDS:
        once = train_arrays(kind, labels, classes, space)
        many = train_arrays(kind, np.tile(labels, (10, 1)), np.tile(classes, 10), space)
        for a in labels[:3]:
            assert classify(once, a)[0] == classify(many, a)[0]


def test_predict_batch_matches_classify(rng: np.random.Generator) -> None:
    space, labels, classes = _random_data(rng)
    clf = train_arrays("gtan", labels, classes, space)
    assert predict_batch(clf, []) == []
    instances = rng.integers(0, 2, size=(100, 4))
    for (batch_class, batch_post), a in zip(predict_batch(clf, instances), instances):
        single_class, single_post = classify(clf, a)
        assert batch_class == single_class
        np.testing.assert_array_equal(batch_post, single_post)


def test_empty_class_is_rejected() -> None:
    space = AttributeSpace.uniform(2, 2, 3)
    with pytest.raises(DataError):
        train("nb", [([0, 0], 0), ([1, 1], 1)], space)


def test_structure_source_for_global_kinds() -> None:
    generator = _generator_model()
    labels, classes = sample_instances(generator, 3_000, seed=11)
    clf = train_arrays("gtan", labels, classes, generator.space, structure_source=0)
    assert clf.info is not None and clf.info.structure_source == 0
    with pytest.raises(ConfigError):
        train_arrays("tan", labels, classes, generator.space, structure_source=0)
    with pytest.raises(RangeError):
        train_arrays("gtan", labels, classes, generator.space, structure_source=3)


def test_threshold_parsing() -> None:
    assert parse_threshold("avg") == "average"
    assert parse_threshold(" Average ") == "average"
    assert parse_threshold("0.8") == 0.8
    assert parse_threshold("inf") == math.inf
    with pytest.raises(ConfigError):
        parse_threshold("high")


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_model_file(tmp_path: Path, kind: ClassifierKind, rng: np.random.Generator) -> None:
    space, labels, classes = _random_data(rng, n=4, k=3, classes=3, size=90)
    clf = train_arrays(kind, labels, classes, space, threshold="avg")
    loaded = load_classifier(save_classifier(clf, tmp_path / f"{kind.value}.json"))
    assert loaded.kind is kind
    assert loaded.structures == clf.structures
    assert loaded.threshold == clf.threshold
    for a in labels[:10]:
        np.testing.assert_array_equal(class_scores(loaded, a), class_scores(clf, a))


def test_training_metadata_records_seeds(tmp_path: Path, rng: np.random.Generator) -> None:
    space, labels, classes = _random_data(rng)
    clf = train_arrays("gfan", labels, classes, space, seed=4, kmeans_seed=9)
    assert clf.info is not None
    assert (clf.info.instances, clf.info.seed, clf.info.kmeans_seed) == (60, 4, 9)
    assert clf.info.class_counts == (20, 20, 20)
    loaded = load_classifier(save_classifier(clf, tmp_path / "gfan.json"))
    assert loaded.info == clf.info
