import numpy as np
import pytest

from nandwalk.formula import all_assignments, evaluate, full_binary_tree
from nandwalk.reflections import (
    build_reflections,
    calibrate_phase_threshold,
    decide_reflections,
    default_psi_start,
    projection_bound_check,
    reflection_start_state,
    tree_reflection,
)
from nandwalk.spectral import eig_unitary, overlap_weights

FIG3 = [1, 0, 1, 0]


def build_all(depth, L):
    tree = full_binary_tree(depth)
    base = tree_reflection(tree, L)
    threshold = calibrate_phase_threshold(tree, L)
    return tree, base, threshold


class TestOperators:
    def test_u_input_diagonal_signs(self):
        tree = full_binary_tree(2)
        pair = build_reflections(tree, FIG3, L=4)
        diag = pair.u_input_diag
        for leaf in tree.leaves:
            var = tree.nodes[leaf].var
            expect = -1.0 if FIG3[var - 1] else 1.0
            assert diag[pair.graph.tree_vertex(leaf)] == expect
        assert np.sum(diag == -1.0) == 2

    def test_all_zeros_gives_u_tree(self):
        tree = full_binary_tree(2)
        pair = build_reflections(tree, [0, 0, 0, 0], L=4)
        assert np.allclose(pair.u, pair.u_tree)

    def test_involutions_and_unitarity(self):
        for d, x in ((1, [1, 0]), (2, FIG3), (2, [1, 1, 1, 1])):
            tree = full_binary_tree(d)
            pair = build_reflections(tree, x, L=4)
            eye = np.eye(pair.graph.n_vertices)
            assert np.abs(pair.u_tree @ pair.u_tree - eye).max() < 1e-8
            assert np.abs(pair.u_input @ pair.u_input - eye).max() < 1e-8
            assert np.abs(pair.u.conj().T @ pair.u - eye).max() < 1e-8

    def test_u_tree_spectrum_is_pm_one(self):
        pair = build_reflections(full_binary_tree(2), FIG3, L=3)
        lam = np.linalg.eigvalsh(pair.u_tree)
        assert np.all((np.abs(lam - 1) < 1e-9) | (np.abs(lam + 1) < 1e-9))

    def test_fig3_fixed_point_near_start(self):
        # the kernel-pattern state (chain pattern plus -1 on the bare leaves)
        # is fixed by both reflections and carries most of the start state
        pair = build_reflections(full_binary_tree(2), FIG3, L=8)
        D = eig_unitary(pair.u)
        w = overlap_weights(D, default_psi_start(pair))
        phases = np.abs(np.angle(D.eigenvalues))
        assert w[phases < 1e-9].sum() == pytest.approx(9 / 11, abs=1e-9)

    def test_phase_pairs_off_axis(self):
        # two real reflections: eigenphases away from 0 and pi come in +- pairs
        pair = build_reflections(full_binary_tree(2), FIG3, L=4)
        lam = eig_unitary(pair.u).eigenvalues
        off_axis = lam[(np.abs(np.angle(lam)) > 1e-9) & (np.abs(np.abs(np.angle(lam)) - np.pi) > 1e-9)]
        for mu in off_axis:
            assert np.min(np.abs(off_axis - np.conj(mu))) < 1e-8


class TestDecisions:
    @pytest.mark.parametrize("depth", [1, 2])
    def test_exhaustive(self, depth):
        tree, base, threshold = build_all(depth, L=4 * (2 if depth == 2 else 2))
        for x in all_assignments(tree.leaf_count):
            pair = build_reflections(tree, x, base.graph.half_length, base=base)
            dec, _ = decide_reflections(pair, phase_threshold=threshold)
            assert dec == evaluate(tree, x)

    def test_f0_mass_at_phase_zero(self):
        tree, base, threshold = build_all(2, L=8)
        pair = build_reflections(tree, FIG3, 8, base=base)
        dec, report = decide_reflections(pair, phase_threshold=threshold)
        assert dec == 0
        assert report.zero_weight >= 0.8

    def test_f1_gapped(self):
        tree, base, threshold = build_all(2, L=8)
        pair = build_reflections(tree, [1, 1, 1, 1], 8, base=base)
        dec, report = decide_reflections(pair, phase_threshold=threshold)
        assert dec == 1
        assert report.zero_weight <= 1e-8
        assert report.min_relevant_gap is not None
        assert report.min_relevant_gap > threshold

    def test_odd_depth_parity_adaptation(self):
        # the chain carries one extra site on odd-depth trees and the kernel
        # fixed point then certifies F = 1
        tree, base, threshold = build_all(1, L=4)
        assert base.graph.n_tail_sites == 9
        for x in all_assignments(2):
            pair = build_reflections(tree, x, 4, base=base)
            dec, report = decide_reflections(pair, phase_threshold=threshold)
            assert dec == evaluate(tree, x)
            if evaluate(tree, x) == 1:
                assert report.zero_weight > 0.5

    def test_start_state_parity(self):
        tree = full_binary_tree(1)
        base = tree_reflection(tree, 4)
        psi = reflection_start_state(base.graph)
        g = base.graph
        assert psi.amplitudes[g.tail_site(1)] != 0
        assert psi.amplitudes[g.tail_site(2)] == 0
        assert psi.norm() == pytest.approx(1.0)


class TestProjectionBound:
    def test_all_ones_depth2(self):
        tree, base, _ = build_all(2, L=8)
        pair = build_reflections(tree, [1, 1, 1, 1], 8, base=base)
        report = projection_bound_check(pair, tree, [1, 1, 1, 1])
        assert report.min_ratio is not None and report.min_ratio > 0
        assert report.phase_gap is not None
        assert report.phase_gap >= report.min_ratio - 1e-6

    def test_single_pendant_depth1(self):
        tree, base, _ = build_all(1, L=4)
        pair = build_reflections(tree, [1, 0], 4, base=base)
        report = projection_bound_check(pair, tree, [1, 0])
        assert report.min_ratio is not None
        assert report.phase_gap is not None
        assert report.phase_gap >= report.min_ratio - 1e-6

    def test_inequality_all_f1_depth2(self):
        tree, base, _ = build_all(2, L=8)
        for x in all_assignments(4):
            if evaluate(tree, x) != 1:
                continue
            pair = build_reflections(tree, x, 8, base=base)
            report = projection_bound_check(pair, tree, x)
            if report.min_ratio is not None and report.phase_gap is not None:
                assert report.phase_gap >= report.min_ratio - 1e-6

    def test_refuses_f0(self):
        tree, base, _ = build_all(2, L=4)
        pair = build_reflections(tree, FIG3, 4, base=base)
        with pytest.raises(ValueError, match="F = 1"):
            projection_bound_check(pair, tree, FIG3)
