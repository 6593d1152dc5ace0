import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hyperocc import DataError, Dataset, PlantSpec, generate_planted, load_csv, marginals, write_csv
from hyperocc.dataset import binarize

import oracles


class TestLoad:
    def test_two_by_two(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b\n1,0\n0,1\n")
        ds = load_csv(p)
        assert (ds.n_rows, ds.n_cols) == (2, 2)
        assert ds.columns == ("a", "b")
        np.testing.assert_array_equal(ds.values, [[1, 0], [0, 1]])

    def test_out_of_range_names_cell(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b\n0,1\n0.2,1.5\n")
        with pytest.raises(DataError, match=r"line 3, column 'b'.*1\.5"):
            load_csv(p)

    def test_unparsable(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a\nx\n")
        with pytest.raises(DataError, match="cannot parse"):
            load_csv(p)

    def test_ragged_and_empty(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b\n0\n")
        with pytest.raises(DataError, match="fields"):
            load_csv(p)
        p.write_text("")
        with pytest.raises(DataError):
            load_csv(p)
        p.write_text("a,b\n")
        with pytest.raises(DataError, match="no data rows"):
            load_csv(p)

    def test_duplicate_header(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,a\n0,1\n")
        with pytest.raises(DataError, match="duplicate"):
            load_csv(p)

    def test_binarize_on_load(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b\n0.49,0.5\n0.7,0.1\n")
        ds = load_csv(p, binarize=True)
        np.testing.assert_array_equal(ds.values, [[0, 1], [1, 0]])

    def test_wide(self):
        rng = np.random.default_rng(0)
        ds = Dataset([f"g{j}" for j in range(1000)], rng.integers(0, 2, (100, 1000)))
        assert (ds.n_rows, ds.n_cols) == (100, 1000)
        assert ds.is_binary


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 5)), elements=st.floats(0, 1)))
def test_write_load_roundtrip(tmp_path_factory, vals):
    ds = Dataset([f"c{j}" for j in range(vals.shape[1])], vals)
    p = tmp_path_factory.mktemp("rt") / "d.csv"
    write_csv(ds, p)
    assert load_csv(p) == ds


class TestMarginals:
    def test_binary(self):
        m = marginals(Dataset(["a"], [[1], [1], [0], [0]]))[0]
        assert m.distinct_values == (0.0, 1.0)
        assert m.frequencies == (2, 2)

    def test_degenerate(self):
        m = marginals(Dataset(["a"], [[0.2], [0.2], [0.2]]))[0]
        assert m.distinct_values == (0.2,)
        assert m.frequencies == (3,)

    def test_three_equal_values(self, three_by_three):
        for m in marginals(three_by_three):
            assert len(m.distinct_values) == 3
            assert m.frequencies == (1, 1, 1)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 20), st.integers(1, 4)), elements=st.sampled_from([0, 0.3, 1])))
    def test_counts_match_column(self, vals):
        ds = Dataset([f"c{j}" for j in range(vals.shape[1])], vals)
        for j, m in enumerate(marginals(ds)):
            assert sum(m.frequencies) == ds.n_rows
            for v, f in zip(m.distinct_values, m.frequencies):
                assert f == int(np.sum(vals[:, j] == v))


class TestPlanted:
    def test_exhaustive_and7(self, and7):
        rows = [tuple(r) for r in and7.values]
        assert sorted(rows) == sorted(oracles.planted_and7_rows())
        # target is 1 exactly on the all-ones pattern
        assert [r for r in rows if r[6] == 1] == [(1.0,) * 7]
        assert oracles.rule_prob(rows, range(7), 7) == oracles.Fraction(1, 64)

    def test_noise_free_target_is_predicate(self):
        plant = PlantSpec((0, 2, 4, 5, 7), 3, 9)
        ds = generate_planted(300, 9, plant, seed=4)
        v = ds.values
        np.testing.assert_array_equal(v[:, 9], (v[:, [0, 2, 4, 5, 7]].sum(axis=1) >= 3).astype(float))

    def test_seeded_identical(self, tmp_path):
        plant = PlantSpec(range(5), 3, 19, 0.05)
        a = generate_planted(200, 19, plant, seed=11)
        b = generate_planted(200, 19, plant, seed=11)
        write_csv(a, tmp_path / "a.csv")
        write_csv(b, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert generate_planted(200, 19, plant, seed=12) != a

    def test_noise_rate(self):
        plant = PlantSpec(range(5), 3, 5, 0.1)
        ds = generate_planted(20000, 5, plant, seed=2)
        v = ds.values
        flipped = np.mean(v[:, 5] != (v[:, :5].sum(axis=1) >= 3))
        assert abs(flipped - 0.1) < 4 * np.sqrt(0.09 / 20000)

    def test_several_plants(self):
        plants = [PlantSpec((0, 1), 2, 4), PlantSpec((1, 2, 3), 1, 5)]
        ds = generate_planted(100, 4, plants, seed=0)
        v = ds.values
        assert ds.n_cols == 6
        np.testing.assert_array_equal(v[:, 4], v[:, 0] * v[:, 1])
        np.testing.assert_array_equal(v[:, 5], (v[:, 1:4].sum(axis=1) >= 1).astype(float))

    @pytest.mark.parametrize(
        "plant",
        [PlantSpec((0, 1), 3, 4), PlantSpec((0, 9), 1, 4), PlantSpec((0, 4), 1, 4), PlantSpec((), 1, 4)],
    )
    def test_invalid(self, plant):
        with pytest.raises(ValueError):
            generate_planted(10, 4, plant, seed=0)

    def test_exhaustive_needs_multiple(self):
        with pytest.raises(ValueError, match="multiple"):
            generate_planted(65, 6, PlantSpec(range(6), 6, 6), seed=0, exhaustive=True)


def test_binarize_threshold():
    np.testing.assert_array_equal(binarize([0.0, 0.4999, 0.5, 1.0]), [0, 0, 1, 1])
