"""Constraint-qualification verdicts at a feasible point.

Four checks are provided: nondegeneracy (a rank test on the active
gradient rows), a dual-form regularity check with cone-constrained
multipliers restricted to the complementary face of each block, and two
constant-rank conditions (rcpld, crsc) whose neighborhood clauses are
verified by seeded sampling.  Every Fails verdict carries a concrete
witness; Holds verdicts for the sampled checks state explicitly that no
counterexample was found among the samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .certificates import (
    DEFAULT_BUDGET,
    TOL_CERT,
    TOL_RANK,
    Certificate,
    cone_membership,
    conic_dependence,
    extend_basis,
    null_combination,
    numerical_rank,
)
from .classify import IndexClassification
from .cones import svec, svec_dim
from .errors import DomainError, NonSimpleEigenvalueError
from .model import EvaluatedPoint, evaluate
from .reduction import reduced_view

DELTA = 1e-3
SAMPLES = 20
SEED = 42
SUBSET_CAP = 2 ** 16

SAMPLING_NOTE = "no violation found in %d samples of radius %g"


@dataclass(frozen=True)
class CqReport:
    name: str
    verdict: str  # "Holds" | "Fails" | "Undecided"
    detail: dict = field(default_factory=dict)
    certificate: Certificate | None = None


def _kernel_basis(pt: EvaluatedPoint, j: int, tol_act: float, tol_gap: float):
    """Eigenvectors spanning the zero-eigenvalue cluster of an active psd block."""
    blk = pt.blocks[j]
    spectral = blk.spectral
    sigma = spectral.eigenvalues
    scale = max(1.0, float(np.linalg.norm(blk.value.mat)))
    cutoff = max(tol_act * scale, float(sigma[0]) + tol_gap * scale)
    r = int(np.count_nonzero(sigma <= cutoff))
    return spectral.eigenvectors[:, :r]


def _reduced_partials(pt: EvaluatedPoint, j: int, basis: np.ndarray):
    """Partial derivatives of the block compressed onto the kernel basis: (n, r, r)."""
    return np.einsum("ar,iab,bs->irs", basis, pt.blocks[j].partials, basis)


def _sample_points(pt: EvaluatedPoint, delta: float, count: int, seed: int):
    """Seeded evaluation points in the delta-ball around pt.x.

    Points where the program expressions leave their domain are retried at
    half the radius a few times, then skipped (reported by the caller).
    """
    rng = np.random.default_rng(seed)
    n = pt.x.size
    out = []
    skipped = 0
    for _ in range(count):
        z = rng.standard_normal(n)
        nz = float(np.linalg.norm(z))
        u = z / nz if nz > 0 else np.zeros(n)
        radius = delta * float(rng.uniform(0.0, 1.0)) ** (1.0 / n)
        placed = False
        for _ in range(8):
            try:
                out.append(evaluate(pt.program, pt.x + radius * u))
                placed = True
                break
            except DomainError:
                radius *= 0.5
        if not placed:
            skipped += 1
    return out, skipped


def check_nondegeneracy(pt: EvaluatedPoint, cls: IndexClassification, *, tol_rank=TOL_RANK) -> CqReport:
    """Full row rank of all equality and active-block gradient rows.

    Rows collected: every equality gradient; every Jacobian row of a soc
    block active at the vertex; the boundary-reduction gradient of each soc
    block on the cone boundary; and, for each active psd block, one row per
    coordinate of its kernel-compressed derivative (the adjoint of
    d -> E^T Jg(d) E, which must be surjective onto the small symmetric space).
    """
    rows = []
    labels = []
    for i, name in enumerate(pt.program.eq_names):
        rows.append(pt.jac_h[i])
        labels.append("eq:" + name)
    names = cls.block_names
    for j in cls.soc_vertex:
        jac = pt.blocks[j].jac
        for r in range(jac.shape[0]):
            rows.append(jac[r])
            labels.append("%s[%d]" % (names[j], r))
    view = reduced_view(pt, cls)
    for entry in view.entries:
        if entry.label == "soc-boundary":
            rows.append(entry.gradient)
            labels.append(names[entry.block] + ":boundary")
    for j in sorted(cls.psd_simple + cls.psd_multiple):
        basis = _kernel_basis(pt, j, cls.tol_act, cls.tol_gap)
        red = _reduced_partials(pt, j, basis)
        coords = np.vstack([svec(red[i]) for i in range(red.shape[0])])
        for t in range(svec_dim(basis.shape[1])):
            rows.append(coords[:, t])
            labels.append("%s:kernel[%d]" % (names[j], t))
    if not rows:
        return CqReport("nondegeneracy", "Holds", {"rows": 0, "rank": 0, "note": "no active rows"})
    rank, basis_idx = numerical_rank(rows, tol_rank)
    detail = {"rows": len(rows), "rank": rank, "row_labels": tuple(labels), "tol_rank": tol_rank}
    if rank == len(rows):
        return CqReport("nondegeneracy", "Holds", detail)
    coeffs, resid = null_combination(rows, tol_rank)
    detail["witness_combination"] = coeffs
    detail["witness_residual"] = resid
    detail["basis"] = basis_idx
    return CqReport("nondegeneracy", "Fails", detail)


def _face_system(pt: EvaluatedPoint, cls: IndexClassification):
    """Cone blocks and rays of the dual regularity system at the point.

    Multipliers are restricted to the complementary face of each active
    block: full cones for vertex soc blocks and fully-degenerate psd
    kernels, single rays for boundary / scalar / simple-eigenvalue blocks.
    """
    socs = [pt.blocks[j].jac for j in cls.soc_vertex_multi]
    psds = []
    psd_indices = []
    for j in cls.psd_multiple:
        basis = _kernel_basis(pt, j, cls.tol_act, cls.tol_gap)
        psds.append(_reduced_partials(pt, j, basis))
        psd_indices.append(j)
    view = reduced_view(pt, cls)
    rays = [entry.gradient for entry in view.entries]
    ray_indices = [entry.block for entry in view.entries]
    return socs, list(cls.soc_vertex_multi), psds, psd_indices, rays, ray_indices


def check_robinson(
    pt: EvaluatedPoint,
    cls: IndexClassification,
    *,
    tol_rank=TOL_RANK,
    tol_cert=TOL_CERT,
    budget=DEFAULT_BUDGET,
) -> CqReport:
    """Only the zero multiplier solves the homogeneous dual system.

    The system pairs free coefficients on all equality gradients with
    cone-constrained multipliers on the complementary faces of the active
    blocks.  A rank-deficient equality Jacobian fails outright; otherwise a
    dependence certificate decides.
    """
    names = cls.block_names
    if pt.program.p:
        eq_rows = [pt.jac_h[i] for i in range(pt.program.p)]
        rank, _ = numerical_rank(eq_rows, tol_rank)
        if rank < pt.program.p:
            coeffs, resid = null_combination(eq_rows, tol_rank)
            return CqReport(
                "robinson",
                "Fails",
                {
                    "reason": "equality gradients are linearly dependent",
                    "witness_combination": coeffs,
                    "witness_residual": resid,
                },
            )
    else:
        eq_rows = []
    socs, soc_idx, psds, psd_idx, rays, ray_idx = _face_system(pt, cls)
    cert = conic_dependence(eq_rows, socs, psds, rays, budget=budget, tol_cert=tol_cert)
    detail = {
        "soc_blocks": tuple(names[j] for j in soc_idx),
        "psd_blocks": tuple(names[j] for j in psd_idx),
        "rays": tuple(names[j] for j in ray_idx),
    }
    if cert.verdict == "independent":
        detail["margin"] = cert.margin
        return CqReport("robinson", "Holds", detail, cert)
    if cert.verdict == "dependent":
        detail["residual"] = cert.residual
        detail["normalization"] = cert.normalization
        return CqReport("robinson", "Fails", detail, cert)
    detail.update(cert.detail)
    return CqReport("robinson", "Undecided", detail, cert)


def _conic_base(pt: EvaluatedPoint, cls: IndexClassification):
    """Irreducible cone blocks of the constant-rank systems (full cones)."""
    socs = [pt.blocks[j].jac for j in cls.soc_vertex_multi]
    psds = [pt.blocks[j].partials for j in cls.psd_multiple]
    return socs, psds


def _reduced_gradients_at(sample: EvaluatedPoint, cls: IndexClassification):
    view = reduced_view(sample, cls)
    return {entry.block: entry.gradient for entry in view.entries}


def check_rcpld(
    pt: EvaluatedPoint,
    cls: IndexClassification,
    *,
    delta=DELTA,
    samples=SAMPLES,
    seed=SEED,
    tol_rank=TOL_RANK,
    tol_cert=TOL_CERT,
    budget=DEFAULT_BUDGET,
    subset_cap=SUBSET_CAP,
) -> CqReport:
    """Cone dependence at the point must persist as linear dependence nearby.

    Clause one: the equality gradients keep a constant numerical rank over
    seeded samples.  Clause two, per subset J of the reduced indices: when
    the system (basis equality gradients free, irreducible blocks conic,
    reduced gradients over J as rays) has a nonzero solution, the family
    {equality basis, reduced gradients over J} must be linearly dependent
    at every sample.  Holds is a sampled claim, recorded as such.
    """
    names = cls.block_names
    ground = cls.reduced()
    detail = {
        "delta": delta,
        "samples": samples,
        "seed": seed,
        "ground_set": tuple(names[j] for j in ground),
    }
    if len(ground) > 0 and 2 ** len(ground) > subset_cap:
        detail["reason"] = "subset enumeration exceeds cap"
        detail["subset_count"] = 2 ** len(ground)
        detail["subset_cap"] = subset_cap
        return CqReport("rcpld", "Undecided", detail)

    eq_rows = [pt.jac_h[i] for i in range(pt.program.p)]
    sampled, skipped = _sample_points(pt, delta, samples, seed)
    detail["samples_skipped"] = skipped
    if pt.program.p:
        rank_star, basis_i = numerical_rank(eq_rows, tol_rank)
        for t, sp in enumerate(sampled):
            rank_s, _ = numerical_rank([sp.jac_h[i] for i in range(pt.program.p)], tol_rank)
            if rank_s != rank_star:
                detail["reason"] = "equality gradient rank is not locally constant"
                detail["rank_at_point"] = rank_star
                detail["rank_at_sample"] = rank_s
                detail["sample_index"] = t
                detail["sample_point"] = sp.x
                return CqReport("rcpld", "Fails", detail)
    else:
        rank_star, basis_i = 0, ()
    detail["equality_basis"] = tuple(pt.program.eq_names[i] for i in basis_i)
    basis_rows = [eq_rows[i] for i in basis_i]

    socs, psds = _conic_base(pt, cls)
    grads_star = _reduced_gradients_at(pt, cls)
    try:
        grads_samples = [_reduced_gradients_at(sp, cls) for sp in sampled]
    except NonSimpleEigenvalueError as exc:
        detail["reason"] = "smallest eigenvalue not simple at a sample point"
        detail["gap"] = exc.gap
        return CqReport("rcpld", "Undecided", detail)

    subset_log = []
    undecided = None
    for code in range(2 ** len(ground)):
        subset = [ground[i] for i in range(len(ground)) if code >> i & 1]
        rays = [grads_star[j] for j in subset]
        cert = conic_dependence(basis_rows, socs, psds, rays, budget=budget, tol_cert=tol_cert)
        entry = {"subset": tuple(names[j] for j in subset), "system": cert.verdict}
        if cert.verdict == "undecided":
            entry.update(cert.detail)
            undecided = undecided or entry
        elif cert.verdict == "dependent":
            for t, grads in enumerate(grads_samples):
                family = [sampled[t].jac_h[i] for i in basis_i] + [grads[j] for j in subset]
                if not family:
                    detail["reason"] = "nonzero solution with an empty comparison family"
                    detail["subset"] = entry["subset"]
                    detail["sample_index"] = t
                    subset_log.append(entry)
                    detail["subset_log"] = tuple(subset_log)
                    return CqReport("rcpld", "Fails", detail, cert)
                rank_f, _ = numerical_rank(family, tol_rank)
                if rank_f == len(family):
                    detail["reason"] = "dependent system but gradients independent at a sample"
                    detail["subset"] = entry["subset"]
                    detail["sample_index"] = t
                    detail["sample_point"] = sampled[t].x
                    subset_log.append(entry)
                    detail["subset_log"] = tuple(subset_log)
                    return CqReport("rcpld", "Fails", detail, cert)
            entry["persisted"] = True
        subset_log.append(entry)
    detail["subset_log"] = tuple(subset_log)
    if undecided is not None:
        detail["reason"] = "a dependence query was undecided"
        detail["undecided_subset"] = undecided["subset"]
        return CqReport("rcpld", "Undecided", detail)
    detail["note"] = SAMPLING_NOTE % (len(sampled), delta)
    return CqReport("rcpld", "Holds", detail)


def check_crsc(
    pt: EvaluatedPoint,
    cls: IndexClassification,
    *,
    delta=DELTA,
    samples=SAMPLES,
    seed=SEED,
    tol_rank=TOL_RANK,
    tol_cert=TOL_CERT,
    budget=DEFAULT_BUDGET,
) -> CqReport:
    """Constant rank of the subspace component of the reduced gradients.

    The subspace component collects reduced indices whose negated gradient
    already lies in span(equality gradients) + cone(reduced gradients);
    those behave like equalities locally.  The check verifies constant rank
    of that family over samples, then requires the remaining system (basis
    coefficients free, irreducible blocks conic, the other reduced
    gradients as rays) to admit only the zero solution.
    """
    names = cls.block_names
    ground = cls.reduced()
    detail = {"delta": delta, "samples": samples, "seed": seed}
    eq_rows = [pt.jac_h[i] for i in range(pt.program.p)]
    grads_star = _reduced_gradients_at(pt, cls)
    all_grads = [grads_star[j] for j in ground]

    j_minus = []
    for j0 in ground:
        member = cone_membership(-grads_star[j0], eq_rows, all_grads, tol=tol_cert)
        if member.member:
            j_minus.append(j0)
    j_plus = [j for j in ground if j not in j_minus]
    detail["j_minus"] = tuple(names[j] for j in j_minus)
    detail["j_plus"] = tuple(names[j] for j in j_plus)

    if pt.program.p:
        _, basis_i = numerical_rank(eq_rows, tol_rank)
    else:
        basis_i = ()
    basis_rows = [eq_rows[i] for i in basis_i]
    picked = extend_basis(basis_rows, [grads_star[j] for j in j_minus], tol_rank)
    j_basis = [j_minus[i] for i in picked]
    detail["equality_basis"] = tuple(pt.program.eq_names[i] for i in basis_i)
    detail["gradient_basis"] = tuple(names[j] for j in j_basis)

    family_star = eq_rows + [grads_star[j] for j in j_minus]
    rank_star = numerical_rank(family_star, tol_rank)[0] if family_star else 0
    sampled, skipped = _sample_points(pt, delta, samples, seed)
    detail["samples_skipped"] = skipped
    try:
        for t, sp in enumerate(sampled):
            grads = _reduced_gradients_at(sp, cls)
            family = [sp.jac_h[i] for i in range(pt.program.p)] + [grads[j] for j in j_minus]
            rank_s = numerical_rank(family, tol_rank)[0] if family else 0
            if rank_s != rank_star:
                detail["reason"] = "subspace-component rank is not locally constant"
                detail["rank_at_point"] = rank_star
                detail["rank_at_sample"] = rank_s
                detail["sample_index"] = t
                detail["sample_point"] = sp.x
                return CqReport("crsc", "Fails", detail)
    except NonSimpleEigenvalueError as exc:
        detail["reason"] = "smallest eigenvalue not simple at a sample point"
        detail["gap"] = exc.gap
        return CqReport("crsc", "Undecided", detail)

    socs, psds = _conic_base(pt, cls)
    eq_basis = basis_rows + [grads_star[j] for j in j_basis]
    rays = [grads_star[j] for j in j_plus]
    cert = conic_dependence(eq_basis, socs, psds, rays, budget=budget, tol_cert=tol_cert)
    detail["system"] = cert.verdict
    if cert.verdict == "independent":
        detail["margin"] = cert.margin
        detail["note"] = SAMPLING_NOTE % (len(sampled), delta)
        return CqReport("crsc", "Holds", detail, cert)
    if cert.verdict == "dependent":
        detail["reason"] = "nonzero solution of the subspace-complement system"
        detail["residual"] = cert.residual
        return CqReport("crsc", "Fails", detail, cert)
    detail.update(cert.detail)
    return CqReport("crsc", "Undecided", detail, cert)
