"""Kernel backends: numeric agreement and the numpy fallback switch."""

import os
import random
import subprocess
import sys

import numpy as np
import pytest

from scenariokit import kernels

from oracles import brute_force_pareto, random_matrix


class TestParetoMask:
    def test_single_row_is_kept(self):
        assert kernels.pareto_mask(np.array([[1.0, 2.0]])).tolist() \
            == [True]

    def test_duplicates_are_mutually_undominated(self):
        mask = kernels.pareto_mask(np.array([[1.0, 1.0], [1.0, 1.0]]))
        assert mask.tolist() == [True, True]

    def test_strict_dominance_removes_row(self):
        mask = kernels.pareto_mask(np.array([[2.0, 2.0], [1.0, 1.0]]))
        assert mask.tolist() == [True, False]

    def test_empty_input(self):
        assert kernels.pareto_mask(np.zeros((0, 3))).shape == (0,)

    def test_dimension_check(self):
        with pytest.raises(ValueError):
            kernels.pareto_mask(np.zeros(4))

    def test_matches_brute_force(self):
        rng = random.Random(11)
        for _ in range(50):
            rows = random_matrix(rng, rng.randint(1, 8),
                                 rng.randint(1, 4))
            mask = kernels.pareto_mask(np.asarray(rows))
            expected = brute_force_pareto(rows)
            assert frozenset(np.flatnonzero(mask).tolist()) == expected


class TestL1Matrix:
    def test_known_values(self):
        xs = np.array([[0.0, 0.0], [1.0, 2.0]])
        ys = np.array([[1.0, 1.0]])
        assert kernels.l1_matrix(xs, ys).tolist() == [[2.0], [1.0]]

    def test_self_distance_diagonal_zero(self):
        xs = np.array([[0.5, 1.5, -2.0], [3.0, 0.0, 1.0]])
        d = kernels.l1_matrix(xs, xs)
        assert d[0][0] == d[1][1] == 0.0
        assert d[0][1] == d[1][0]

    def test_width_mismatch_rejected(self):
        with pytest.raises(ValueError):
            kernels.l1_matrix(np.zeros((2, 3)), np.zeros((2, 2)))


class TestBackendSwitch:
    def test_backend_name_reports_selection(self):
        assert kernels.backend_name() in ("numba", "numpy")

    def test_both_backends_agree(self):
        """Compare the active backend against the plain-numpy reference
        on the same inputs, in process."""
        rng = random.Random(23)
        for _ in range(25):
            rows = np.asarray(random_matrix(rng, rng.randint(1, 10),
                                            rng.randint(1, 5)))
            assert kernels.pareto_mask(rows).tolist() \
                == kernels._pareto_mask_numpy(rows).tolist()
            other = np.asarray(random_matrix(rng, rng.randint(1, 6),
                                             rows.shape[1]))
            assert kernels.l1_matrix(rows, other).tolist() \
                == kernels._l1_matrix_numpy(rows, other).tolist()

    def test_env_flag_forces_numpy(self):
        env = dict(os.environ, SCENARIOKIT_NO_NUMBA="1")
        out = subprocess.run(
            [sys.executable, "-c",
             "from scenariokit import kernels; print(kernels.backend_name())"],
            capture_output=True, text=True, env=env, check=True)
        assert out.stdout.strip() == "numpy"
