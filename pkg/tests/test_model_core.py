import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from enetgraph.model_core import (CsvParseError, Dataset, DomainError, EdgeSet,
                                  EstimationResult, PenaltyParams, SymMatrix, edge_set_of,
                                  is_positive_definite, log_likelihood, partial_correlation,
                                  read_dataset_csv, read_edges_json, read_matrix_csv,
                                  sample_covariance, write_dataset_csv, write_edges_json,
                                  write_matrix_csv)
from enetgraph.netgen import TopologySpec, generate_structure, structure_to_precision
from oracles import power_min_eig, random_pd, residual_partial_corr


class TestSymMatrix:
    def test_symmetric_bit_exact(self, rng):
        m = rng.standard_normal((5, 5))
        m = m + m.T
        m[0, 1] += 1e-12
        s = SymMatrix(m)
        assert np.array_equal(s.values, s.values.T)

    def test_rejects_asymmetric(self):
        with pytest.raises(DomainError, match="not symmetric"):
            SymMatrix([[1.0, 0.5], [0.2, 1.0]])

    def test_immutable(self):
        s = SymMatrix.identity(3)
        with pytest.raises(ValueError):
            s.values[0, 0] = 2.0

    def test_rejects_non_square_and_nan(self):
        with pytest.raises(DomainError):
            SymMatrix(np.ones((2, 3)))
        with pytest.raises(DomainError):
            SymMatrix([[np.nan]])


class TestPenaltyParams:
    def test_bounds(self):
        PenaltyParams(0.0, 0.0)
        PenaltyParams(1.0, 3.0)
        for a, lam in [(-0.1, 0.1), (1.1, 0.1), (0.5, -1e-9)]:
            with pytest.raises(DomainError):
                PenaltyParams(a, lam)

    def test_split(self):
        p = PenaltyParams(0.25, 0.4)
        assert p.l1 == pytest.approx(0.1)
        assert p.l2 == pytest.approx(0.3)


class TestEdgeSet:
    def test_normalizes_and_dedups(self):
        e = EdgeSet(4, [(1, 0), (0, 1), (3, 2)])
        assert e.edges == {(0, 1), (2, 3)}
        assert (1, 0) in e

    def test_invalid(self):
        with pytest.raises(DomainError):
            EdgeSet(3, [(1, 1)])
        with pytest.raises(DomainError):
            EdgeSet(3, [(0, 3)])

    def test_adjacency_roundtrip(self, rng):
        a = rng.random((6, 6)) < 0.4
        a = np.triu(a, 1)
        a = a | a.T
        e = EdgeSet.from_adjacency(a)
        assert np.array_equal(e.adjacency(), a)
        assert len(EdgeSet.complete(6)) == 15

    def test_json(self, tmp_path):
        e = EdgeSet(5, [(0, 4), (1, 2)])
        assert e.to_json() == {"p": 5, "edges": [[0, 4], [1, 2]]}
        write_edges_json(tmp_path / "e.json", e)
        assert read_edges_json(tmp_path / "e.json") == e


class TestPartialCorrelation:
    def test_diagonal_theta(self):
        assert np.array_equal(partial_correlation(2 * np.eye(3)).values, np.zeros((3, 3)))

    def test_two_by_two(self):
        np.testing.assert_array_equal(partial_correlation([[2, -1], [-1, 2]]).values,
                                      [[0, 0.5], [0.5, 0]])

    def test_residual_correlation_oracle(self, rng):
        theta = np.linalg.inv(random_pd(rng, 4))
        np.testing.assert_allclose(partial_correlation(theta).values,
                                   residual_partial_corr(theta), atol=1e-8)

    def test_nonpositive_diagonal_names_index(self):
        with pytest.raises(DomainError, match="index 2"):
            partial_correlation(np.diag([1.0, 1.0, -1.0]))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 10**6))
    def test_bounded_and_scale_invariant(self, p, seed):
        rng = np.random.default_rng(seed)
        theta = np.linalg.inv(random_pd(rng, p))
        pc = partial_correlation(theta).values
        assert np.all(np.abs(pc) <= 1 + 1e-12)
        d = np.diag(rng.uniform(0.1, 10, p))
        np.testing.assert_allclose(partial_correlation(d @ theta @ d).values, pc, atol=1e-12)
        assert edge_set_of(pc, 0) == edge_set_of(theta, 0)


class TestEdgeSetOf:
    def test_examples(self):
        assert len(edge_set_of(np.diag([1.0, 2.0, 3.0]), 0)) == 0
        assert edge_set_of([[2, -1], [-1, 2]], 0).edges == {(0, 1)}
        t = np.array([[1, 1e-12], [1e-12, 1]])
        assert len(edge_set_of(t, 1e-10)) == 0


class TestPositiveDefinite:
    def test_examples(self):
        assert is_positive_definite(np.eye(5))
        assert not is_positive_definite([[1, 2], [2, 1]])

    def test_band_precision_power_iteration(self):
        e = generate_structure(TopologySpec("band", 30, 0))
        theta = structure_to_precision(e, 0.3, 0.1)
        assert is_positive_definite(theta)
        assert power_min_eig(theta.values) > 0.1 - 1e-8


def test_log_likelihood():
    assert log_likelihood(np.eye(3), np.eye(3)) == pytest.approx(-3.0)
    assert log_likelihood(np.diag([1.0, -1.0]), np.eye(2)) == -np.inf


class TestDataset:
    def test_invariants(self):
        with pytest.raises(DomainError):
            Dataset(np.ones((1, 3)))
        with pytest.raises(DomainError):
            Dataset(np.ones((3, 1)))
        with pytest.raises(DomainError):
            Dataset([[1.0, np.inf], [0.0, 1.0]])
        with pytest.raises(DomainError):
            Dataset(np.ones((3, 2)), labels=["a"])

    def test_covariance_divisor_n(self, rng):
        x = rng.standard_normal((7, 3))
        np.testing.assert_allclose(Dataset(x).covariance().values,
                                   np.cov(x.T, bias=True), atol=1e-14)

    def test_rows_keeps_index(self):
        d = Dataset(np.arange(12.0).reshape(4, 3) ** 1.5, ["a", "b", "c"], list("wxyz"))
        sub = d.rows(np.array([1, 3]))
        assert sub.index == ["x", "z"] and sub.labels == ["a", "b", "c"]

    def test_centered_covariance(self, rng):
        x = rng.standard_normal((9, 2))
        mu = np.array([0.3, -0.2])
        np.testing.assert_allclose(sample_covariance(x, mu).values,
                                   (x - mu).T @ (x - mu) / 9, atol=1e-14)


class TestFiles:
    def test_matrix_csv_roundtrip(self, tmp_path, rng):
        m = random_pd(rng, 4)
        write_matrix_csv(tmp_path / "m.csv", m)
        assert np.array_equal(read_matrix_csv(tmp_path / "m.csv").values, SymMatrix(m).values)
        assert "," in (tmp_path / "m.csv").read_text().splitlines()[0]

    def test_dataset_csv_roundtrip(self, tmp_path, rng):
        d = Dataset(rng.standard_normal((5, 3)), ["a", "b", "c"], [f"d{i}" for i in range(5)])
        write_dataset_csv(tmp_path / "d.csv", d)
        back = read_dataset_csv(tmp_path / "d.csv")
        assert np.array_equal(back.values, d.values)
        assert back.labels == d.labels and back.index == d.index

    def test_dataset_csv_without_index(self, tmp_path):
        (tmp_path / "d.csv").write_text("a,b\n1,2\n3,5\n4,4\n")
        d = read_dataset_csv(tmp_path / "d.csv")
        assert d.index is None and d.labels == ["a", "b"] and d.n == 3

    def test_malformed_csv_reports_line(self, tmp_path):
        (tmp_path / "d.csv").write_text("a,b\n1,2\n3,oops\n4,4\n")
        with pytest.raises(CsvParseError, match=":3:"):
            read_dataset_csv(tmp_path / "d.csv")
        (tmp_path / "e.csv").write_text("a,b\n1,2\n3\n")
        with pytest.raises(CsvParseError, match=":3:.*expected 2 fields"):
            read_dataset_csv(tmp_path / "e.csv")


def test_result_json_flags_pd():
    r = EstimationResult(SymMatrix(np.eye(2)), PenaltyParams(1, 0.1), 3, 1e-6, True,
                         metadata={"edges": EdgeSet(2), "state": np.zeros(2)})
    js = r.to_json()
    assert js["positive_definite"] and js["params"] == {"alpha": 1, "lambda": 0.1}
    assert js["metadata"] == {"edges": {"p": 2, "edges": []}}
