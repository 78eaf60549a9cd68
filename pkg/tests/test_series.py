import logging

import numpy as np
import pytest
from hypothesis import given, strategies as st

from markovtest.errors import ConfigurationError, InputError
from markovtest.series import (TimeSeries, chunk_indices, deseasonalize, embed, format_csv,
                               parse_csv)


class TestTimeSeries:
    def test_vector_becomes_column(self):
        assert TimeSeries([1.0, 2.0, 3.0]).values.shape == (3, 1)

    def test_rejects_non_finite(self):
        with pytest.raises(InputError, match="row 1"):
            TimeSeries([[0.0], [np.inf]])

    def test_binary_column_checked(self):
        with pytest.raises(InputError, match="column 1"):
            TimeSeries([[0.0, 1.0], [1.0, 2.0]], ["continuous", "binary"])


class TestEmbed:
    def test_scalar(self):
        out = embed(TimeSeries([[1.0], [2.0], [3.0], [4.0]]), 2)
        np.testing.assert_array_equal(out.values, [[1, 2], [2, 3], [3, 4]])

    def test_identity(self):
        x = np.random.default_rng(0).standard_normal((6, 2))
        np.testing.assert_array_equal(embed(TimeSeries(x), 1).values, x)

    def test_multivariate(self):
        x = np.arange(10.0).reshape(5, 2)
        out = embed(TimeSeries(x), 3)
        assert out.values.shape == (3, 6)
        np.testing.assert_array_equal(out.values[0], np.concatenate([x[0], x[1], x[2]]))
        assert out.column_types == ["continuous"] * 6

    def test_too_long(self):
        with pytest.raises(InputError):
            embed(TimeSeries([[1.0], [2.0]]), 3)


class TestChunks:
    def test_exact(self):
        n, chunks = chunk_indices(9, 3)
        assert n == 3
        # 0-based ranges for the 1-based chunks {1..3}, {4..6}, {7..9}
        assert [list(c) for c in chunks] == [[0, 1, 2], [3, 4, 5], [6, 7, 8]]

    def test_trailing_row_dropped(self, caplog):
        with caplog.at_level(logging.WARNING, logger="markovtest.series"):
            n, chunks = chunk_indices(10, 3)
        assert n == 3 and chunks[-1][-1] == 8
        assert "discarding 1" in caplog.text

    def test_paper_size(self):
        n, _ = chunk_indices(500, 3)
        assert n == 166 and 500 - 3 * n == 2

    def test_minimum_length(self):
        with pytest.raises(ConfigurationError, match="L\\*\\(Q\\+2\\) = 36"):
            chunk_indices(35, 3, Q=10)
        with pytest.raises(ConfigurationError):
            chunk_indices(20, 1)

    @given(T=st.integers(2, 5000), L=st.integers(2, 10))
    def test_partition(self, T, L):
        if T < L:
            return
        n, chunks = chunk_indices(T, L)
        flat = [i for c in chunks for i in c]
        assert flat == list(range(L * n)) and T - L * n < L


class TestDeseason:
    def test_constant(self):
        assert np.all(deseasonalize(np.full((12, 2), 3.0), 4) == 0.0)

    def test_pure_seasonal_signal(self):
        season = np.sin(np.arange(5))
        x = np.tile(season, 8)[:, None]
        assert np.max(np.abs(deseasonalize(x, 5))) < 1e-12

    def test_phase_means_vanish(self):
        rng = np.random.default_rng(1)
        t = np.arange(103)
        x = np.column_stack([np.sin(2 * np.pi * t / 12) + rng.standard_normal(103), rng.standard_normal(103)])
        out = deseasonalize(x, 12)
        for p in range(12):
            assert np.all(np.abs(out[t % 12 == p].mean(axis=0)) < 1e-10)

    @pytest.mark.parametrize("period", [0, -1, 11])
    def test_bad_period(self, period):
        with pytest.raises(ConfigurationError):
            deseasonalize(np.zeros((10, 1)), period)


class TestCsv:
    def test_header_detected(self):
        values, header = parse_csv("a,b\n1,2\n3,4\n")
        assert header == ["a", "b"]
        np.testing.assert_array_equal(values, [[1, 2], [3, 4]])

    def test_no_header(self):
        values, header = parse_csv("1,2\n3.5,-4e-1\n")
        assert header is None
        np.testing.assert_array_equal(values, [[1, 2], [3.5, -0.4]])

    @pytest.mark.parametrize("text,where", [
        ("1,2\n3,\n", "row 2, column 2"),
        ("1,2\nx,4\n", "row 2, column 1"),
        ("a,b\n1,2\n3,nan\n", "row 3, column 2"),
    ])
    def test_bad_cells_are_located(self, text, where):
        with pytest.raises(InputError, match=where):
            parse_csv(text)

    def test_ragged_rows(self):
        with pytest.raises(InputError, match="row 2"):
            parse_csv("1,2\n3\n")

    def test_empty(self):
        with pytest.raises(InputError):
            parse_csv("\n")

    def test_round_trip_is_exact(self):
        x = np.random.default_rng(2).standard_normal((5, 3))
        values, header = parse_csv(format_csv(x, ["p", "q", "r"]))
        assert header == ["p", "q", "r"]
        assert values.tobytes() == x.tobytes()
