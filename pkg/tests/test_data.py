import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qport.data import (
    DataError,
    MunicipalityTable,
    load_table,
    min_max_normalize,
    save_table,
    search_space_size,
    synthesize_table,
)


def write_csv_table(tmp_path, n, adjacency=None, scores=None):
    lines = ["id,carbon,biodiversity,social"]
    for i in range(n):
        c, b, s = scores[i] if scores else (0.5, 0.5, 0.5)
        lines.append(f"m{i},{c},{b},{s}")
    (tmp_path / "goias_multiobjective.csv").write_text("\n".join(lines) + "\n")
    zero = np.zeros((n, n)) if adjacency is None else np.asarray(adjacency)
    for name, mat in (("adjacency.csv", zero), ("bio_synergy.csv", np.zeros((n, n))),
                      ("soc_synergy.csv", np.zeros((n, n)))):
        (tmp_path / name).write_text("\n".join(",".join(str(v) for v in row) for row in mat) + "\n")
    return tmp_path


def test_load_zero_synergy_table(tmp_path):
    table = load_table(write_csv_table(tmp_path, 3))
    assert table.n == 3
    assert not table.bio_synergy.any() and not table.soc_synergy.any()
    assert table.ids == ("m0", "m1", "m2")


def test_load_accepts_scores_file_path(tmp_path):
    write_csv_table(tmp_path, 3)
    assert load_table(tmp_path / "goias_multiobjective.csv").n == 3


def test_asymmetric_adjacency_rejected(tmp_path):
    adj = np.zeros((3, 3))
    adj[0, 1] = 1
    with pytest.raises(DataError, match="symmetric"):
        load_table(write_csv_table(tmp_path, 3, adjacency=adj))


def test_missing_file_names_path(tmp_path):
    write_csv_table(tmp_path, 3)
    (tmp_path / "bio_synergy.csv").unlink()
    with pytest.raises(DataError, match="bio_synergy.csv"):
        load_table(tmp_path)


def test_dimension_mismatch(tmp_path):
    write_csv_table(tmp_path, 3)
    (tmp_path / "adjacency.csv").write_text("0,0\n0,0\n")
    with pytest.raises(DataError, match="3x3"):
        load_table(tmp_path)


def test_out_of_range_score_reports_line(tmp_path):
    write_csv_table(tmp_path, 2, scores=[(0.1, 0.2, 0.3), (1.5, 0.2, 0.3)])
    with pytest.raises(DataError, match="carbon"):
        load_table(tmp_path)
    (tmp_path / "goias_multiobjective.csv").write_text(
        "id,carbon,biodiversity,social\nm0,0.1,0.2,0.3\nm1,abc,0.2,0.3\n")
    with pytest.raises(DataError, match=r"goias_multiobjective.csv:3"):
        load_table(tmp_path)


def test_bad_header(tmp_path):
    write_csv_table(tmp_path, 2)
    (tmp_path / "goias_multiobjective.csv").write_text("id,c,b,s\nm0,0,0,0\nm1,0,0,0\n")
    with pytest.raises(DataError, match=":1:"):
        load_table(tmp_path)


def test_duplicate_id():
    z = np.zeros((2, 2))
    with pytest.raises(DataError, match="duplicate"):
        MunicipalityTable.from_arrays(["a", "a"], [0, 0], [0, 0], [0, 0], z, z, z)


def test_synergy_out_of_range():
    z = np.zeros((2, 2))
    bad = np.array([[0, 1.2], [1.2, 0]])
    with pytest.raises(DataError):
        MunicipalityTable.from_arrays(["a", "b"], [0, 0], [0, 0], [0, 0], z, bad, z)


def test_nonzero_diagonal_rejected():
    z = np.zeros((2, 2))
    with pytest.raises(DataError, match="diagonal"):
        MunicipalityTable.from_arrays(["a", "b"], [0, 0], [0, 0], [0, 0], np.eye(2), z, z)


def test_table_is_immutable(calib):
    with pytest.raises(ValueError):
        calib.carbon[0] = 0.3


@pytest.mark.parametrize("values, expected", [
    ([2, 4, 6], [0, 0.5, 1]),
    ([5, 5, 5], [0, 0, 0]),
    ([0, 1], [0, 1]),
])
def test_min_max_normalize_examples(values, expected):
    assert np.allclose(min_max_normalize(values), expected)


def test_min_max_normalize_empty():
    with pytest.raises(ValueError):
        min_max_normalize([])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=30))
def test_min_max_normalize_properties(values):
    out = min_max_normalize(values)
    assert out.min() >= 0 and out.max() <= 1
    if max(values) > min(values):
        assert out[int(np.argmin(values))] == 0 and out[int(np.argmax(values))] == 1
        again = min_max_normalize(out)
        assert np.allclose(again, out, atol=1e-12)


def test_search_space_size():
    assert search_space_size(88, 28) == math.comb(88, 28)
    assert search_space_size(88, 28) == 73_111_821_201_089_232_081_168
    assert isinstance(search_space_size(88, 28), int)
    assert search_space_size(7, 0) == 1
    assert search_space_size(20, 5) == math.factorial(20) // (math.factorial(5) * math.factorial(15))
    assert search_space_size(20, 5) == 15504
    with pytest.raises(ValueError):
        search_space_size(3, 4)


def test_synthesize_deterministic():
    assert synthesize_table(20, 7) == synthesize_table(20, 7)
    assert synthesize_table(20, 7) != synthesize_table(20, 8)


def test_synthesize_minimal():
    t = synthesize_table(2, 0)
    assert t.n == 2 and t.adjacency.shape == (2, 2)
    with pytest.raises(ValueError):
        synthesize_table(1, 0)


def test_synthetic_graph_is_sparse(calib):
    degree = calib.adjacency.sum(axis=1).mean()
    assert 2.5 < degree < 6
    # synergy between adjacent candidates is not damped
    assert calib.bio_synergy[calib.adjacency == 1].mean() > calib.bio_synergy[
        (calib.adjacency == 0) & ~np.eye(20, dtype=bool)].mean()


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 30), st.integers(0, 2**32 - 1))
def test_synthetic_round_trip(tmp_path_factory, n, seed):
    table = synthesize_table(n, seed)
    d = tmp_path_factory.mktemp("rt")
    save_table(table, d)
    loaded = load_table(d)
    assert loaded == table
    save_table(loaded, d / "again")
    assert load_table(d / "again") == table
