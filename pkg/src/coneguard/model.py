"""Problem container, text format, evaluation, and diagonal embedding.

A program is

    minimize f(x)  subject to  h(x) = 0,  g_j(x) in K_j for each block j,

where each block cone K_j is a second-order cone K_m or the positive
semidefinite matrices of order m.  The text format is line oriented:

    vars <n>
    objective <expr>
    eq <name> <expr>            # zero or more
    soc <name> <m>              # followed by m expression lines
    psd <name> <m>              # followed by m(m+1)/2 expression lines,
                                # upper triangle in row-major order

'#' starts a comment; blank lines are ignored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .cones import (
    SocVector,
    SpectralData,
    SymMatrix,
    eig_sym,
    psd_distance,
    soc_distance,
    svec_dim,
)
from .errors import ConeguardError, DimensionMismatchError, DomainError, ProblemFormatError


@dataclass(frozen=True)
class ConicBlock:
    name: str
    kind: str  # "soc" | "psd"
    dim: int
    entries: tuple

    @property
    def entry_count(self):
        return self.dim if self.kind == "soc" else svec_dim(self.dim)


@dataclass(frozen=True)
class ConicProgram:
    n: int
    objective: ex.Expr
    eq_names: tuple
    equalities: tuple
    blocks: tuple

    @property
    def p(self):
        return len(self.equalities)

    def block_index(self, name):
        for j, blk in enumerate(self.blocks):
            if blk.name == name:
                return j
        raise KeyError(name)


def _parse_expr(source, n, line_no):
    try:
        return ex.parse(source, n)
    except ConeguardError as err:
        raise ProblemFormatError(str(err), line_no) from err


def loads(text):
    """Parse the problem text format into a ConicProgram."""
    lines = []
    for raw_no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            lines.append((raw_no, body))
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(lines):
            raise ProblemFormatError("unexpected end of file", lines[-1][0] if lines else 1)
        item = lines[pos]
        pos += 1
        return item

    line_no, body = take()
    parts = body.split()
    if parts[0] != "vars" or len(parts) != 2:
        raise ProblemFormatError("expected 'vars <n>'", line_no)
    try:
        n = int(parts[1])
    except ValueError:
        raise ProblemFormatError("variable count must be an integer", line_no) from None
    if n < 1:
        raise ProblemFormatError("variable count must be positive", line_no)

    line_no, body = take()
    key, _, rest = body.partition(" ")
    if key != "objective" or not rest.strip():
        raise ProblemFormatError("expected 'objective <expr>'", line_no)
    objective = _parse_expr(rest.strip(), n, line_no)

    eq_names, equalities, blocks = [], [], []
    seen_blocks = set()
    stage = "eq"
    while pos < len(lines):
        line_no, body = take()
        parts = body.split(None, 2)
        key = parts[0]
        if key == "eq":
            if stage != "eq":
                raise ProblemFormatError("equalities must precede blocks", line_no)
            if len(parts) != 3:
                raise ProblemFormatError("expected 'eq <name> <expr>'", line_no)
            name = parts[1]
            if name in eq_names:
                raise ProblemFormatError("duplicate equality name %r" % name, line_no)
            eq_names.append(name)
            equalities.append(_parse_expr(parts[2], n, line_no))
        elif key in ("soc", "psd"):
            stage = "block"
            if len(parts) != 3:
                raise ProblemFormatError("expected '%s <name> <m>'" % key, line_no)
            name = parts[1]
            if name in seen_blocks:
                raise ProblemFormatError("duplicate block name %r" % name, line_no)
            seen_blocks.add(name)
            try:
                m = int(parts[2])
            except ValueError:
                raise ProblemFormatError("block dimension must be an integer", line_no) from None
            if m < 1:
                raise ProblemFormatError("block dimension must be positive", line_no)
            count = m if key == "soc" else svec_dim(m)
            entries = []
            for _ in range(count):
                entry_no, entry_body = take()
                entries.append(_parse_expr(entry_body, n, entry_no))
            blocks.append(ConicBlock(name, key, m, tuple(entries)))
        else:
            raise ProblemFormatError("unknown directive %r" % key, line_no)

    return ConicProgram(n, objective, tuple(eq_names), tuple(equalities), tuple(blocks))


def load(path):
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())


def dumps(prog):
    out = ["vars %d" % prog.n, "objective %s" % ex.to_source(prog.objective)]
    for name, eq in zip(prog.eq_names, prog.equalities):
        out.append("eq %s %s" % (name, ex.to_source(eq)))
    for blk in prog.blocks:
        out.append("%s %s %d" % (blk.kind, blk.name, blk.dim))
        out.extend(ex.to_source(entry) for entry in blk.entries)
    return "\n".join(out) + "\n"


def dump(prog, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(prog))


@dataclass(eq=False)
class SocBlockValue:
    value: SocVector
    jac: np.ndarray  # (m, n)


@dataclass(eq=False)
class PsdBlockValue:
    value: SymMatrix
    partials: np.ndarray  # (n, m, m), each slice symmetric
    spectral: SpectralData


@dataclass(eq=False)
class EvaluatedPoint:
    program: ConicProgram
    x: np.ndarray
    f: float
    grad_f: np.ndarray
    h: np.ndarray
    jac_h: np.ndarray  # (p, n)
    blocks: tuple
    residual: float


def _eval_entry(entry, x, block_name, slot):
    try:
        return ex.eval_grad(entry, x)
    except DomainError as err:
        raise DomainError("block %r entry %d: %s" % (block_name, slot, err)) from err


def evaluate(prog, x):
    """Evaluate objective, constraints, Jacobians, and cone residuals at x."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != prog.n:
        raise DimensionMismatchError("point has %d coordinates, program has %d" % (x.size, prog.n))
    gf = ex.eval_grad(prog.objective, x)
    h = np.zeros(prog.p)
    jac_h = np.zeros((prog.p, prog.n))
    for i, eq in enumerate(prog.equalities):
        gv = ex.eval_grad(eq, x)
        h[i] = gv.value
        jac_h[i] = gv.partials
    values = []
    distances = []
    for blk in prog.blocks:
        if blk.kind == "soc":
            vals = np.zeros(blk.dim)
            jac = np.zeros((blk.dim, prog.n))
            for r, entry in enumerate(blk.entries):
                gv = _eval_entry(entry, x, blk.name, r)
                vals[r] = gv.value
                jac[r] = gv.partials
            z = SocVector(vals[0], vals[1:])
            values.append(SocBlockValue(z, jac))
            distances.append(soc_distance(z))
        else:
            m = blk.dim
            mat = np.zeros((m, m))
            partials = np.zeros((prog.n, m, m))
            rows, cols = np.triu_indices(m)
            for slot, entry in enumerate(blk.entries):
                gv = _eval_entry(entry, x, blk.name, slot)
                a, b = int(rows[slot]), int(cols[slot])
                mat[a, b] = gv.value
                mat[b, a] = gv.value
                partials[:, a, b] = gv.partials
                partials[:, b, a] = gv.partials
            sym = SymMatrix(mat)
            spectral = eig_sym(sym)
            values.append(PsdBlockValue(sym, partials, spectral))
            distances.append(psd_distance(sym, spectral))
    hres = float(np.max(np.abs(h))) if prog.p else 0.0
    residual = max([hres] + distances) if distances else hres
    return EvaluatedPoint(prog, x.copy(), gf.value, gf.partials, h, jac_h, tuple(values), residual)


def block_distances(pt):
    """Per-constraint infeasibility, keyed by name."""
    out = {}
    for i, name in enumerate(pt.program.eq_names):
        out["eq:" + name] = abs(float(pt.h[i]))
    for blk, bv in zip(pt.program.blocks, pt.blocks):
        if blk.kind == "soc":
            out[blk.name] = soc_distance(bv.value)
        else:
            out[blk.name] = psd_distance(bv.value, bv.spectral)
    return out


def apply_jacobian_adjoint(pt, j, multiplier):
    """Compute the gradient-space image J_g^T(mu) for block j."""
    blk = pt.program.blocks[j]
    bv = pt.blocks[j]
    if blk.kind == "soc":
        mu = multiplier.as_array() if isinstance(multiplier, SocVector) else np.asarray(multiplier)
        return bv.jac.T @ mu
    mat = multiplier.mat if isinstance(multiplier, SymMatrix) else np.asarray(multiplier)
    return np.tensordot(bv.partials, mat, axes=([1, 2], [0, 1]))


def embed_block_diagonal(prog):
    """Merge all PSD blocks into a single block-diagonal PSD block."""
    for blk in prog.blocks:
        if blk.kind != "soc" and blk.kind != "psd":
            raise DimensionMismatchError("unknown block kind %r" % blk.kind)
        if blk.kind == "soc":
            raise DimensionMismatchError(
                "diagonal embedding needs an all-psd program; block %r is soc" % blk.name
            )
    if not prog.blocks:
        return prog
    if len(prog.blocks) == 1:
        blk = prog.blocks[0]
        return ConicProgram(
            prog.n, prog.objective, prog.eq_names, prog.equalities, (blk,)
        )
    total = sum(blk.dim for blk in prog.blocks)
    offsets = []
    acc = 0
    for blk in prog.blocks:
        offsets.append(acc)
        acc += blk.dim
    # index entry expressions of each block by local (row, col)
    lookup = []
    for blk in prog.blocks:
        rows, cols = np.triu_indices(blk.dim)
        table = {}
        for slot in range(len(blk.entries)):
            table[(int(rows[slot]), int(cols[slot]))] = blk.entries[slot]
        lookup.append(table)
    zero = ex.Lit(0.0)
    entries = []
    for a in range(total):
        for b in range(a, total):
            owner_a = max(k for k, off in enumerate(offsets) if off <= a)
            owner_b = max(k for k, off in enumerate(offsets) if off <= b)
            if owner_a == owner_b:
                off = offsets[owner_a]
                entries.append(lookup[owner_a][(a - off, b - off)])
            else:
                entries.append(zero)
    name = "diag"
    taken = {blk.name for blk in prog.blocks}
    while name in taken:
        name += "_"
    block = ConicBlock(name, "psd", total, tuple(entries))
    return ConicProgram(prog.n, prog.objective, prog.eq_names, prog.equalities, (block,))
