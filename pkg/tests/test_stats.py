import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.stats import studentized_range

from mlstream.stats import (average_ranks, cd_diagram_data, friedman_statistic, load_summaries,
                            nemenyi_cd, nemenyi_q, rank_table, render_cd_text)

tables = st.tuples(st.integers(2, 8), st.integers(2, 6)).flatmap(
    lambda s: arrays(np.float64, s, elements=st.integers(0, 5).map(float)))


def test_full_ties_and_dominance():
    np.testing.assert_allclose(average_ranks(np.ones((4, 5))), [3.0] * 5)
    scores = np.array([[0.9, 0.1, 0.2], [0.8, 0.7, 0.75]])
    assert average_ranks(scores)[0] == 1.0
    assert average_ranks(scores, direction="minimize")[0] == 3.0


def test_tie_methods():
    row = np.array([[0.5, 0.5, 0.1], [0.5, 0.5, 0.1]])
    np.testing.assert_allclose(average_ranks(row), [1.5, 1.5, 3])
    np.testing.assert_allclose(average_ranks(row, ties="min"), [1, 1, 3])


def test_rejects_bad_tables():
    with pytest.raises(ValueError, match="missing"):
        average_ranks([[1.0, np.nan], [1.0, 2.0]])
    with pytest.raises(ValueError):
        average_ranks([[1.0, 2.0]])
    with pytest.raises(ValueError):
        average_ranks([[1.0, 2.0], [2.0, 1.0]], direction="up")


@given(tables)
def test_rank_rows_sum(scores):
    m = scores.shape[1]
    np.testing.assert_allclose(rank_table(scores).sum(axis=1), m * (m + 1) / 2)


@settings(max_examples=50)
@given(tables)
def test_friedman_invariant_under_monotone_transform(scores):
    a = friedman_statistic(scores)
    b = friedman_statistic(np.exp(scores) * 3.0 + 1.0)
    assert a[0] == pytest.approx(b[0], abs=1e-9) and a[1] == b[1]


def test_friedman_examples():
    strict = np.tile([3.0, 2.0, 1.0], (4, 1))
    chi2_f, dof, p = friedman_statistic(strict)
    assert chi2_f == pytest.approx(8.0) and dof == 2 and p < 0.05
    chi2_f, _, p = friedman_statistic(np.ones((5, 4)))
    assert chi2_f == 0.0 and p == pytest.approx(1.0)
    chi2_f, dof, _ = friedman_statistic([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
    assert dof == 1 and chi2_f == pytest.approx(1 / 3)


def test_nemenyi_examples():
    assert nemenyi_cd(11, 7, 0.05) == pytest.approx(5.707, abs=1e-3)
    assert nemenyi_cd(5, 40) == pytest.approx(nemenyi_cd(5, 10) / 2)
    assert nemenyi_cd(2, 9) == pytest.approx(1.960 / 3)
    with pytest.raises(ValueError):
        nemenyi_cd(21, 5)
    with pytest.raises(ValueError):
        nemenyi_cd(5, 5, alpha=0.01)


@pytest.mark.parametrize("alpha", [0.05, 0.10])
@pytest.mark.parametrize("m", range(2, 21))
def test_q_table_matches_studentized_range(alpha, m):
    reference = studentized_range.ppf(1 - alpha, m, np.inf) / np.sqrt(2)
    assert nemenyi_q(m, alpha) == pytest.approx(reference, abs=2e-3)


def test_cd_monotone():
    assert all(nemenyi_cd(6, d) > nemenyi_cd(6, d + 1) for d in range(2, 30))
    assert all(nemenyi_cd(m, 10) < nemenyi_cd(m + 1, 10) for m in range(2, 20))


def test_cd_diagram_groups():
    ranks = [1.0, 2.0, 3.5, 8.0]
    assert cd_diagram_data(ranks, 100.0).groups == ((0, 3),)
    assert cd_diagram_data(ranks, 0.0).groups == ()
    d = cd_diagram_data([3.5, 1.0, 8.0, 2.0], 2.6, names=list("abcd"))
    assert d.names == ("b", "d", "a", "c")
    assert d.groups == ((0, 2),)
    assert d.to_dict()["groups"] == [["b", "d", "a"]]
    assert "b - d - a" in render_cd_text(d)
    d = cd_diagram_data([1.0, 2.0, 3.0, 4.0], 1.5)
    assert d.groups == ((0, 1), (1, 2), (2, 3))


@given(st.lists(st.floats(1, 11), min_size=2, max_size=11), st.floats(0, 12))
def test_cd_groups_are_contiguous_cliques(ranks, cd):
    d = cd_diagram_data(ranks, cd)
    r = d.ranks
    assert list(r) == sorted(r)
    for a, b in d.groups:
        assert a < b and r[b] - r[a] < cd
    ends = [b for _, b in d.groups]
    assert ends == sorted(set(ends))
    for i in range(len(r) - 1):  # every indistinguishable neighbour pair is covered
        if r[i + 1] - r[i] < cd:
            assert any(a <= i and i + 1 <= b for a, b in d.groups)


def write_summary(path, dataset, model, f1):
    path.write_text(json.dumps({"dataset": dataset, "model": model, "metrics": {"f1_ex": f1}}))


def test_load_summaries(tmp_path):
    for i, d in enumerate(["a", "b"]):
        for j, m in enumerate(["x", "y"]):
            write_summary(tmp_path / f"{d}_{m}.json", d, m, 0.1 * (i + j))
    datasets, models, table = load_summaries(str(tmp_path / "*.json"), "f1_ex")
    assert datasets == ["a", "b"] and models == ["x", "y"]
    np.testing.assert_allclose(table, [[0.0, 0.1], [0.1, 0.2]])
    (tmp_path / "b_y.json").unlink()
    with pytest.raises(ValueError, match="y on b"):
        load_summaries(str(tmp_path / "*.json"), "f1_ex")
    with pytest.raises(ValueError):
        load_summaries(str(tmp_path / "none*.json"), "f1_ex")
