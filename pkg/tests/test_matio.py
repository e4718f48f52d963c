import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdgmres.errors import DimensionError, MatrixMarketError
from pdgmres.matio import (
    SparseMatrix,
    from_dense,
    from_triplets,
    identity,
    matvec,
    parse_matrix_market,
    read_matrix_market,
    save_matrix_market,
    write_matrix_market,
)


DIAG34 = b"""%%MatrixMarket matrix coordinate real general
2 2 2
1 1 3.0
2 2 4.0
"""


def check_csr(m: SparseMatrix):
    ptr, cols = m.row_offsets, m.col_indices
    assert ptr.shape == (m.n_rows + 1,)
    assert ptr[0] == 0 and ptr[-1] == cols.size == m.values.size
    assert np.all(np.diff(ptr) >= 0)
    for i in range(m.n_rows):
        c = cols[ptr[i] : ptr[i + 1]]
        assert np.all(np.diff(c) > 0)
        assert np.all((c >= 0) & (c < m.n_cols))


def test_parse_general():
    m = parse_matrix_market(DIAG34)
    check_csr(m)
    np.testing.assert_array_equal(m.to_dense(), np.diag([3.0, 4.0]))


def test_parse_symmetric_expands():
    text = """%%MatrixMarket matrix coordinate real symmetric
% lower triangle only
2 2 3
1 1 1.0
2 1 5.0
2 2 2.0
"""
    m = parse_matrix_market(text)
    np.testing.assert_array_equal(m.to_dense(), [[1.0, 5.0], [5.0, 2.0]])
    assert m.nnz == 4


def test_parse_integer_field_and_duplicates():
    text = "%%MatrixMarket matrix coordinate integer general\n2 2 3\n1 2 3\n1 2 4\n2 1 -1\n"
    m = parse_matrix_market(io.StringIO(text))
    np.testing.assert_array_equal(m.to_dense(), [[0.0, 7.0], [-1.0, 0.0]])


def test_parse_steam2_sized_file():
    # a 600 x 600 pattern with 5660 stored values, as large as the smallest training matrix
    rng = np.random.default_rng(0)
    pos = set((i, i) for i in range(600))
    while len(pos) < 5660:
        pos.add((int(rng.integers(600)), int(rng.integers(600))))
    entries = [(i, j, float(rng.standard_normal())) for i, j in sorted(pos)]
    m = from_triplets(600, entries)
    back = parse_matrix_market(write_matrix_market(m))
    assert back.n_rows == 600 and back.nnz == 5660


@pytest.mark.parametrize(
    "text, line",
    [
        (b"", 1),
        (b"%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n", 1),
        (b"%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n", 1),
        (b"%%MatrixMarket matrix coordinate pattern general\n1 1 1\n1 1\n", 1),
        (b"%%MatrixMarket matrix coordinate real skew-symmetric\n1 1 0\n", 1),
        (b"not a banner\n1 1 1\n1 1 1\n", 1),
        (b"%%MatrixMarket matrix coordinate real general\n2 2\n", 2),
        (b"%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 abc\n", 3),
        (b"%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n", 3),
        (b"%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1.5 1.0\n", 3),
        (b"%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1.0\n2 2 1.0\n", 4),
        (b"%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n", 3),
    ],
)
def test_parse_rejects_with_line(text, line):
    with pytest.raises(MatrixMarketError) as info:
        parse_matrix_market(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_write_format():
    text = write_matrix_market(parse_matrix_market(DIAG34)).decode()
    assert "\n2 2 2\n" in text
    empty = write_matrix_market(from_triplets(3, [])).decode()
    assert empty.splitlines()[-1] == "3 3 0"


def test_roundtrip_file(tmp_path):
    rng = np.random.default_rng(1)
    entries = {(int(rng.integers(10)), int(rng.integers(10))) for _ in range(60)}
    entries = sorted(entries)[:30]
    m = from_triplets(10, [(i, j, float(rng.standard_normal()) * 1e-7) for i, j in entries])
    save_matrix_market(tmp_path / "a.mtx", m, comment="random")
    assert read_matrix_market(tmp_path / "a.mtx") == m


@settings(max_examples=50, deadline=None)
@given(
    st.integers(1, 12).flatmap(
        lambda n: st.tuples(
            st.just(n),
            st.lists(
                st.tuples(
                    st.integers(0, n - 1),
                    st.integers(0, n - 1),
                    st.floats(allow_nan=False, allow_infinity=False, width=64),
                ),
                max_size=40,
            ),
        )
    )
)
def test_roundtrip_bitwise(case):
    n, entries = case
    m = from_triplets(n, entries)
    check_csr(m)
    back = parse_matrix_market(write_matrix_market(m))
    assert back == m
    assert back.values.tobytes() == m.values.tobytes()


def test_triplets_duplicates_and_empty():
    m = from_triplets(2, [(0, 0, 1.0), (0, 0, 1.0)])
    assert m.nnz == 1 and m.values[0] == 2.0
    e = from_triplets(3, [])
    check_csr(e)
    assert e.nnz == 0 and e.shape == (3, 3)


def test_triplets_permutation_invariant():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((4, 4)) * (rng.random((4, 4)) < 0.6)
    entries = [(i, j, a[i, j]) for i in range(4) for j in range(4) if a[i, j] != 0]
    shuffled = [entries[k] for k in rng.permutation(len(entries))]
    assert from_triplets(4, shuffled) == from_triplets(4, entries)


def test_triplets_out_of_range():
    with pytest.raises(DimensionError):
        from_triplets(2, [(2, 0, 1.0)])
    with pytest.raises(DimensionError):
        from_triplets(2, [(0, -1, 1.0)])


def test_matvec_examples():
    np.testing.assert_array_equal(matvec(identity(3), [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(matvec(parse_matrix_market(DIAG34), [1.0, 1.0]), [3.0, 4.0])
    with pytest.raises(DimensionError):
        matvec(identity(3), np.ones(4))


@pytest.mark.parametrize("n", [1, 8, 33, 64])
def test_matvec_dense_oracle(n):
    rng = np.random.default_rng(n)
    a = rng.standard_normal((n, n)) * (rng.random((n, n)) < 0.3)
    v = rng.standard_normal(n)
    got = matvec(from_dense(a), v)
    want = a @ v
    assert np.linalg.norm(got - want) <= 1e-13 * max(np.linalg.norm(want), 1e-300) or np.allclose(got, want, atol=1e-14)


def test_matrix_is_immutable():
    m = identity(3)
    with pytest.raises(ValueError):
        m.values[0] = 2.0
    with pytest.raises(Exception):
        m.n_rows = 4


def test_constructor_checks_invariants():
    with pytest.raises(ValueError):
        SparseMatrix(2, 2, [0, 2, 1], [0, 1], [1.0, 1.0])
    with pytest.raises(ValueError):
        SparseMatrix(1, 2, [0, 2], [1, 0], [1.0, 1.0])
