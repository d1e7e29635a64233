import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from calibkit.errors import DimensionMismatch, InvalidSpec
from calibkit.lens import (
    Lens,
    apply_lens,
    induced_labels,
    induced_outcome,
    induced_prediction,
    induced_predictions,
    parse_lens,
)
from calibkit.types import LabeledDataset

from strategies import prediction_sets, simplex_vectors


def brute_topk(mu, y, k):
    """Per-vector reference: rank classes by (-prob, index) with plain Python."""
    order = sorted(range(len(mu)), key=lambda c: (-mu[c], c))[:k]
    pred = [1.0 - sum(mu[c] for c in order)] + [mu[c] for c in order]
    out = order.index(y) + 1 if y in order else 0
    return pred, out


def brute_groups(mu, y, groups):
    pred = [sum(mu[c] for c in g) for g in groups]
    out = next(i for i, g in enumerate(groups) if y in g)
    return pred, out


def test_spec_examples():
    mu = [0.1, 0.6, 0.3]
    mx = Lens.max(3)
    np.testing.assert_allclose(induced_prediction(mx, mu), [0.4, 0.6])
    assert induced_outcome(mx, 1, mu) == 1
    assert induced_outcome(mx, 2, mu) == 0
    g = parse_lens("groups:0|1,2", 3)
    np.testing.assert_allclose(induced_prediction(g, mu), [0.1, 0.9])
    assert induced_outcome(g, 2, mu) == 1


def test_ties_go_to_lowest_class():
    mu = [0.4, 0.4, 0.2]
    lens = Lens.topk(1, 3)
    assert induced_outcome(lens, 0, mu) == 1
    assert induced_outcome(lens, 1, mu) == 0


@pytest.mark.parametrize("text,kind", [
    ("canonical", "canonical"), ("max", "topk"), ("topk:2", "topk"), ("groups:0,2|1", "groups"),
])
def test_parse_roundtrip(text, kind):
    lens = parse_lens(text, 3)
    assert lens.kind == kind
    assert parse_lens(lens.spec(), 3) == lens


@pytest.mark.parametrize("text", ["topk:3", "topk:0", "groups:0|1", "groups:0,1|1,2", "nope",
                                  "topk:x"])
def test_parse_rejects(text):
    with pytest.raises(InvalidSpec):
        parse_lens(text, 3)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        induced_prediction(Lens.max(4), [0.5, 0.5])


@given(prediction_sets(min_m=2, max_m=5), st.data())
def test_topk_matches_brute_force(ps, data):
    P, y = ps
    m = P.shape[1]
    k = data.draw(st.integers(1, m - 1))
    lens = Lens.topk(k, m)
    got_p = induced_predictions(lens, P)
    got_y = induced_labels(lens, y, P)
    for row, label, gp, gy in zip(P, y, got_p, got_y):
        ref_p, ref_y = brute_topk(list(row), int(label), k)
        np.testing.assert_allclose(gp, np.clip(ref_p, 0, None), atol=1e-12)
        assert gy == ref_y


@given(prediction_sets(m=4))
def test_groups_match_brute_force(ps):
    P, y = ps
    groups = ((0, 3), (2,), (1,))
    lens = Lens.partition(groups)
    got_p = induced_predictions(lens, P)
    got_y = induced_labels(lens, y, P)
    for row, label, gp, gy in zip(P, y, got_p, got_y):
        ref_p, ref_y = brute_groups(list(row), int(label), groups)
        np.testing.assert_allclose(gp, ref_p, atol=1e-12)
        assert gy == ref_y


@given(simplex_vectors(min_m=2, max_m=6), st.data())
def test_induced_prediction_on_simplex(mu, data):
    m = mu.size
    lens = data.draw(st.sampled_from([Lens.canonical(m), Lens.max(m)]
                                     + ([Lens.topk(m - 1, m)] if m > 2 else [])))
    out = induced_prediction(lens, mu)
    assert out.size == lens.induced_classes
    assert out.min() >= 0.0
    assert abs(out.sum() - 1.0) < 1e-9


@given(prediction_sets(min_m=2, max_m=4))
def test_canonical_is_identity(ps):
    P, y = ps
    d = LabeledDataset(P, y)
    out = apply_lens(Lens.canonical(P.shape[1]), d)
    np.testing.assert_array_equal(out.predictions, d.predictions)
    np.testing.assert_array_equal(out.labels, d.labels)


@given(prediction_sets(min_m=3, max_m=5))
def test_max_lens_agrees_with_confidence_and_accuracy(ps):
    # the max lens encodes "predicted class was right" and its confidence
    P, y = ps
    d = apply_lens(Lens.max(P.shape[1]), LabeledDataset(P, y))
    np.testing.assert_allclose(d.predictions[:, 1], P.max(axis=1))
    correct = np.argmax(P, axis=1) == y
    np.testing.assert_array_equal(d.labels == 1, correct)
