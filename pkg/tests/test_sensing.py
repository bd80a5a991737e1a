import numpy as np
import pytest

from gdcs.model import build_structure, ensemble_from_supports, generate_ensemble
from gdcs.sensing import (
    build_expanded_matrix,
    compress,
    draw_measurement_matrices,
    measure,
    zero_sensor_block,
)


def fig_structure(n=50):
    return build_structure(3, n, [(0, 1), (1, 2), (0, 2)], include_full_common=True)


class TestDrawMatrices:
    def test_entry_variance_matches_row_count(self):
        rng = np.random.default_rng(0)
        (phi,) = draw_measurement_matrices(50, [30], rng)
        sample_var = float(np.var(phi))
        assert abs(sample_var - 1 / 30) < 0.2 * (1 / 30)

    def test_seeded_draws_are_identical(self):
        a = draw_measurement_matrices(20, [5, 7], np.random.default_rng(3))
        b = draw_measurement_matrices(20, [5, 7], np.random.default_rng(3))
        for x, y in zip(a, b):
            assert np.array_equal(x, y)

    def test_stacked_row_count(self):
        mats = draw_measurement_matrices(50, [25] * 9, np.random.default_rng(1))
        assert sum(m.shape[0] for m in mats) == 225

    def test_zero_rows_rejected(self):
        with pytest.raises(ValueError):
            draw_measurement_matrices(10, [0], np.random.default_rng(0))


class TestCompress:
    def test_zero_ensemble_measures_zero(self):
        s = fig_structure(20)
        e = generate_ensemble(s, [0] * 7, np.random.default_rng(0))
        mats = draw_measurement_matrices(20, [5, 5, 5], np.random.default_rng(1))
        assert not np.any(compress(e, mats))

    def test_one_sparse_signal_picks_a_column(self):
        s = build_structure(2, 10)
        e = ensemble_from_supports(s, [(4,), ()], [[1.0], []])
        mats = draw_measurement_matrices(10, [6, 6], np.random.default_rng(2))
        y = compress(e, mats)
        assert np.allclose(y[:6], mats[0][:, 4])
        assert not np.any(y[6:])

    def test_against_dense_block_diagonal_product(self):
        s = fig_structure(30)
        e = generate_ensemble(s, [3, 2, 2, 2, 4, 4, 4], np.random.default_rng(5))
        mats = draw_measurement_matrices(30, [12, 10, 14], np.random.default_rng(6))
        y = compress(e, mats)
        rows = sum(m.shape[0] for m in mats)
        dense = np.zeros((rows, 3 * 30))
        r = 0
        for j, phi in enumerate(mats):
            dense[r : r + phi.shape[0], j * 30 : (j + 1) * 30] = phi
            r += phi.shape[0]
        assert np.max(np.abs(y - dense @ e.stacked_signal)) < 1e-12

    def test_shape_mismatch_rejected(self):
        s = fig_structure(20)
        e = generate_ensemble(s, [1] * 7, np.random.default_rng(0))
        bad = draw_measurement_matrices(19, [5, 5, 5], np.random.default_rng(1))
        with pytest.raises(ValueError):
            compress(e, bad)


class TestExpandedMatrix:
    def setup_method(self):
        self.rng = np.random.default_rng(7)
        self.mats = draw_measurement_matrices(10, [4, 5, 6], self.rng)

    def test_all_sensor_hypothesis_layout(self):
        ex = build_expanded_matrix(self.mats, [(0, 1, 2)])
        n = 10
        r = 0
        for j, phi in enumerate(self.mats):
            rows = slice(r, r + phi.shape[0])
            assert np.array_equal(ex.matrix[rows, :n], phi)
            assert np.array_equal(ex.matrix[rows, (1 + j) * n : (2 + j) * n], phi)
            r += phi.shape[0]

    def test_partial_hypothesis_zeroes_missing_sensors(self):
        ex = build_expanded_matrix(self.mats, [(2,)])
        assert not np.any(ex.matrix[:9, :10])
        assert np.array_equal(ex.matrix[9:, :10], self.mats[2])

    def test_empty_hypothesis_is_pure_block_diagonal(self):
        ex = build_expanded_matrix(self.mats, [])
        assert ex.num_shared == 0
        assert ex.matrix.shape == (15, 30)
        assert np.array_equal(ex.matrix[: 4, :10], self.mats[0])

    def test_empty_sensor_set_rejected(self):
        with pytest.raises(ValueError):
            build_expanded_matrix(self.mats, [()])

    def test_zero_sensor_block_produces_sub_hypothesis(self):
        full = build_expanded_matrix(self.mats, [(0, 1, 2)])
        dropped = zero_sensor_block(full, 0)
        direct = build_expanded_matrix(self.mats, [(1, 2)])
        assert np.array_equal(dropped.matrix, direct.matrix)
        assert dropped.shared_sets == ((1, 2),)

    def test_zeroing_all_sensors_empties_the_block(self):
        ex = build_expanded_matrix(self.mats, [(0, 1, 2)])
        for j in range(3):
            ex = zero_sensor_block(ex, j)
        assert not np.any(ex.matrix[:, :10])
        assert ex.shared_sets == ((),)

    def test_double_zeroing_rejected(self):
        ex = build_expanded_matrix(self.mats, [(0, 1, 2)])
        ex = zero_sensor_block(ex, 1)
        with pytest.raises(ValueError):
            zero_sensor_block(ex, 1)


class TestExpandedConsistency:
    def test_true_structure_stacking_reproduces_measurements(self):
        # stack the component values into the matching blocks and check the
        # expanded operator reproduces the observed measurements
        s = build_structure(4, 20, [(0, 1, 2)], include_full_common=True)
        e = generate_ensemble(s, [3, 2, 2, 2, 2, 2], np.random.default_rng(8))
        ms = measure(e, [9] * 4, np.random.default_rng(9))
        shared = [c.component.sensors for c in e.components if c.component.is_shared]
        ex = build_expanded_matrix(ms.matrices, shared)
        z = np.zeros(ex.total_columns)
        b = 0
        for cs in e.components:
            if cs.component.is_shared:
                z[ex.shared_slice(b)] = cs.dense(20)
                b += 1
            else:
                z[ex.innovation_slice(cs.component.sensors[0])] = cs.dense(20)
        y_norm = np.linalg.norm(ms.observed)
        assert np.linalg.norm(ex.matrix @ z - ms.observed) < 1e-10 * y_norm

    def test_assemble_matches_operator_action(self):
        mats = draw_measurement_matrices(12, [5, 5, 5], np.random.default_rng(1))
        ex = build_expanded_matrix(mats, [(0, 2), (1, 2)])
        rng = np.random.default_rng(2)
        z = rng.standard_normal(ex.total_columns)
        signals = ex.assemble(z)
        product = ex.matrix @ z
        for j in range(3):
            assert np.allclose(mats[j] @ signals[j], product[ex.row_slice(j)], atol=1e-12)
