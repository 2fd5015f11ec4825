"""Tests for the four constraint-qualification checks."""

import numpy as np
import pytest

from coneguard.classify import classify
from coneguard.cqchecks import (
    SAMPLING_NOTE,
    check_crsc,
    check_nondegeneracy,
    check_rcpld,
    check_robinson,
)
from coneguard.model import embed_block_diagonal, evaluate, loads

from conftest import random_feasible_program, random_irreducible_program


def _point(prog, x):
    pt = evaluate(prog, np.asarray(x, dtype=float))
    return pt, classify(pt)


def _same(a, b):
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array_equal(np.asarray(a), np.asarray(b))
    if isinstance(a, dict):
        return set(a) == set(b) and all(_same(a[k], b[k]) for k in a)
    if isinstance(a, (list, tuple)):
        return len(a) == len(b) and all(_same(x, y) for x, y in zip(a, b))
    return a == b


class TestBoundaryLineExample:
    """minimize (x1-1)^2 with (x1, x1) in K_2: the boundary reduction has a
    vanishing gradient everywhere, so nondegeneracy and the dual regularity
    check fail while both constant-rank conditions hold."""

    def test_nondegeneracy_fails_with_rank_zero(self, soc_line_program):
        pt, cls = _point(soc_line_program, [1.0])
        rep = check_nondegeneracy(pt, cls)
        assert rep.verdict == "Fails"
        assert rep.detail["rows"] == 1
        assert rep.detail["rank"] == 0
        assert rep.detail["row_labels"] == ("g:boundary",)
        assert "witness_combination" in rep.detail

    def test_robinson_fails_with_unit_ray_witness(self, soc_line_program):
        pt, cls = _point(soc_line_program, [1.0])
        rep = check_robinson(pt, cls)
        assert rep.verdict == "Fails"
        assert rep.detail["rays"] == ("g",)
        assert rep.certificate is not None
        assert rep.certificate.witness.alpha == pytest.approx([1.0], abs=1e-6)
        assert rep.detail["normalization"] >= 0.5

    def test_rcpld_holds_with_persistent_dependence(self, soc_line_program):
        pt, cls = _point(soc_line_program, [1.0])
        rep = check_rcpld(pt, cls)
        assert rep.verdict == "Holds"
        assert rep.detail["ground_set"] == ("g",)
        assert rep.detail["note"] == SAMPLING_NOTE % (20, 1e-3)
        log = {entry["subset"]: entry for entry in rep.detail["subset_log"]}
        assert log[()]["system"] == "independent"
        assert log[("g",)]["system"] == "dependent"
        assert log[("g",)]["persisted"] is True

    def test_crsc_holds_with_the_ray_in_the_subspace_component(self, soc_line_program):
        pt, cls = _point(soc_line_program, [1.0])
        rep = check_crsc(pt, cls)
        assert rep.verdict == "Holds"
        assert rep.detail["j_minus"] == ("g",)
        assert rep.detail["j_plus"] == ()
        assert rep.detail["gradient_basis"] == ()
        assert rep.detail["system"] == "independent"


class TestKernelPairExample:
    """minimize x1 with two 2x2 semidefinite blocks whose smallest eigenvalues
    are x1 and -x1: opposite reduced gradients make the dual system
    degenerate, yet the constant-rank conditions hold."""

    def test_nondegeneracy_fails_two_rows_one_variable(self, psd_pair_program):
        pt, cls = _point(psd_pair_program, [0.0])
        rep = check_nondegeneracy(pt, cls)
        assert rep.verdict == "Fails"
        assert rep.detail["rows"] == 2
        assert rep.detail["rank"] == 1

    def test_robinson_fails_with_balanced_rank_one_multipliers(self, psd_pair_program):
        pt, cls = _point(psd_pair_program, [0.0])
        rep = check_robinson(pt, cls)
        assert rep.verdict == "Fails"
        alphas = rep.certificate.witness.alpha
        assert alphas == pytest.approx([0.5, 0.5], abs=1e-6)
        # reconstruct the matrix multipliers mu_j = alpha_j v v^T and verify
        # first-order cancellation through the block derivatives directly
        total = np.zeros(pt.x.size)
        for alpha, j in zip(alphas, (0, 1)):
            v = pt.blocks[j].spectral.eigenvectors[:, 0]
            mu = alpha * np.outer(v, v)
            assert np.linalg.eigvalsh(mu)[0] >= -1e-12
            total += np.tensordot(pt.blocks[j].partials, mu, axes=([1, 2], [0, 1]))
        assert np.linalg.norm(total) <= 1e-7

    def test_rcpld_holds_across_all_subsets(self, psd_pair_program):
        pt, cls = _point(psd_pair_program, [0.0])
        rep = check_rcpld(pt, cls)
        assert rep.verdict == "Holds"
        assert rep.detail["ground_set"] == ("g1", "g2")
        assert len(rep.detail["subset_log"]) == 4
        pair = [e for e in rep.detail["subset_log"] if e["subset"] == ("g1", "g2")]
        assert pair[0]["system"] == "dependent"
        assert pair[0]["persisted"] is True

    def test_crsc_holds_with_both_blocks_in_j_minus(self, psd_pair_program):
        pt, cls = _point(psd_pair_program, [0.0])
        rep = check_crsc(pt, cls)
        assert rep.verdict == "Holds"
        assert rep.detail["j_minus"] == ("g1", "g2")
        assert rep.detail["j_plus"] == ()
        assert len(rep.detail["gradient_basis"]) == 1

    def test_subset_cap_produces_an_honest_undecided(self, psd_pair_program):
        pt, cls = _point(psd_pair_program, [0.0])
        rep = check_rcpld(pt, cls, subset_cap=2)
        assert rep.verdict == "Undecided"
        assert rep.detail["reason"] == "subset enumeration exceeds cap"
        assert rep.detail["subset_count"] == 4
        assert rep.detail["subset_cap"] == 2


class TestScalarPairExample:
    """x1 >= 0, x2 >= 0 as separate scalar blocks is nondegenerate at the
    origin; merging the blocks into one diagonal matrix destroys that."""

    def test_separate_blocks_pass_everything(self, scalar_pair_program):
        pt, cls = _point(scalar_pair_program, [0.0, 0.0])
        assert check_nondegeneracy(pt, cls).verdict == "Holds"
        rep = check_robinson(pt, cls)
        assert rep.verdict == "Holds"
        assert rep.detail["margin"] > 1e-7
        assert check_rcpld(pt, cls).verdict == "Holds"
        crsc = check_crsc(pt, cls)
        assert crsc.verdict == "Holds"
        assert crsc.detail["j_minus"] == ()
        assert crsc.detail["j_plus"] == ("a", "b")

    def test_merged_diagonal_block_is_degenerate(self, scalar_pair_program):
        merged = embed_block_diagonal(scalar_pair_program)
        pt, cls = _point(merged, [0.0, 0.0])
        assert cls.psd_multiple == (0,)
        rep = check_nondegeneracy(pt, cls)
        assert rep.verdict == "Fails"
        assert rep.detail["rows"] == 3  # svec dimension of the 2x2 kernel
        assert rep.detail["rank"] == 2

    def test_merged_kernel_pair_is_degenerate_too(self, psd_pair_program):
        merged = embed_block_diagonal(psd_pair_program)
        pt, cls = _point(merged, [0.0])
        rep = check_nondegeneracy(pt, cls)
        assert rep.verdict == "Fails"


class TestFurtherExamples:
    def test_interior_block_makes_robinson_vacuous(self):
        prog = loads("vars 1\nobjective x1\nsoc g 2\nx1\n0\n")
        pt, cls = _point(prog, [1.0])
        assert cls.soc_interior == (0,)
        rep = check_robinson(pt, cls)
        assert rep.verdict == "Holds"
        nd = check_nondegeneracy(pt, cls)
        assert nd.verdict == "Holds"
        assert nd.detail.get("note") == "no active rows"

    def test_boundary_block_with_nonzero_gradient_passes_robinson(self):
        prog = loads("vars 1\nobjective x1\nsoc g 2\nx1\nx1 - 2\n")
        pt, cls = _point(prog, [1.0])
        assert cls.soc_boundary == (0,)
        rep = check_robinson(pt, cls)
        assert rep.verdict == "Holds"
        assert rep.detail["margin"] > 1e-7

    def test_single_positive_ray_holds_crsc(self):
        prog = loads("vars 2\nobjective x1 + x2\npsd a 1\nx1\n")
        pt, cls = _point(prog, [0.0, 1.0])
        rep = check_crsc(pt, cls)
        assert rep.verdict == "Holds"
        assert rep.detail["j_minus"] == ()
        assert rep.detail["j_plus"] == ("a",)

    def test_squared_equality_breaks_rank_constancy(self):
        prog = loads("vars 1\nobjective x1\neq h x1^2\n")
        pt, cls = _point(prog, [0.0])
        nd = check_nondegeneracy(pt, cls)
        assert nd.verdict == "Fails"
        rob = check_robinson(pt, cls)
        assert rob.verdict == "Fails"
        assert rob.detail["reason"] == "equality gradients are linearly dependent"
        rcpld = check_rcpld(pt, cls)
        assert rcpld.verdict == "Fails"
        assert rcpld.detail["reason"] == "equality gradient rank is not locally constant"
        assert rcpld.detail["rank_at_point"] == 0
        assert rcpld.detail["rank_at_sample"] == 1
        assert "sample_point" in rcpld.detail
        crsc = check_crsc(pt, cls)
        assert crsc.verdict == "Fails"
        assert crsc.detail["reason"] == "subspace-component rank is not locally constant"

    def test_sound_equality_keeps_rank_constant(self):
        prog = loads("vars 2\nobjective x1\neq h x1 - x2\npsd a 1\nx1\n")
        pt, cls = _point(prog, [0.0, 0.0])
        rep = check_rcpld(pt, cls)
        assert rep.verdict == "Holds"
        assert rep.detail["equality_basis"] == ("h",)


class TestCorpusProperties:
    def test_hierarchy_on_random_programs(self):
        rng = np.random.default_rng(20260814)
        robinson_holds = 0
        for _ in range(50):
            prog, x_star = random_feasible_program(rng)
            pt, cls = _point(prog, x_star)
            rob = check_robinson(pt, cls, budget=4000)
            if rob.verdict != "Holds":
                continue
            robinson_holds += 1
            rcpld = check_rcpld(pt, cls, samples=10, budget=4000)
            crsc = check_crsc(pt, cls, samples=10, budget=4000)
            assert rcpld.verdict != "Fails", (prog.eq_names, x_star)
            assert crsc.verdict != "Fails", (prog.eq_names, x_star)
        assert robinson_holds >= 5

    def test_rcpld_collapses_to_robinson_without_reducible_blocks(self):
        rng = np.random.default_rng(31415)
        for _ in range(20):
            prog, x_star = random_irreducible_program(rng)
            pt, cls = _point(prog, x_star)
            assert cls.reduced() == ()
            rob = check_robinson(pt, cls, budget=4000)
            rcpld = check_rcpld(pt, cls, samples=10, budget=4000)
            translate = {"Holds": "Holds", "Fails": "Fails", "Undecided": "Undecided"}
            assert rcpld.verdict == translate[rob.verdict]

    def test_reports_are_deterministic(self, psd_pair_program):
        pt, cls = _point(psd_pair_program, [0.0])
        for fn in (check_nondegeneracy, check_robinson, check_rcpld, check_crsc):
            a = fn(pt, cls)
            b = fn(pt, cls)
            assert a.verdict == b.verdict
            assert _same(a.detail, b.detail)

    def test_seed_changes_are_visible_but_stable(self, soc_line_program):
        pt, cls = _point(soc_line_program, [1.0])
        a = check_rcpld(pt, cls, seed=1)
        b = check_rcpld(pt, cls, seed=1)
        c = check_rcpld(pt, cls, seed=2)
        assert _same(a.detail, b.detail)
        assert a.detail["seed"] == 1 and c.detail["seed"] == 2
        assert a.verdict == c.verdict == "Holds"
