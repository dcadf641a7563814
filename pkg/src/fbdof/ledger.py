"""Signals as exact linear combinations of atomic sources.

Every transmitted and received signal in a scheme run is a :class:`LinExpr`:
a sparse map from source-atom id (information symbol or noise sample) to a
complex coefficient. Decodability and rate analysis work directly on these
coefficients, so nothing is ever re-estimated from sampled values.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels

#: relative threshold below which a cancelled coefficient is treated as zero
CANCEL_RTOL = 1e-10

INFO = "info"
NOISE = "noise"

_EMPTY_IDS = np.empty(0, dtype=np.int64)
_EMPTY_COEFS = np.empty(0, dtype=np.complex128)
_EMPTY_IDS.flags.writeable = False
_EMPTY_COEFS.flags.writeable = False


@dataclass(frozen=True)
class SourceAtom:
    """An atomic source: one information symbol or one noise sample.

    ``node`` is the originating transmitter for information symbols and the
    receiver for noise samples.
    """

    id: int
    kind: str
    node: int
    slot: Optional[int] = None
    antenna: Optional[int] = None
    intended_rx: Optional[int] = None
    power: float = 1.0
    label: str = ""

    def __post_init__(self):
        if self.kind not in (INFO, NOISE):
            raise ValueError(f"unknown atom kind {self.kind!r}")
        if self.kind == NOISE and self.power != 1.0:
            raise ValueError("noise atoms have unit power")
        if self.power < 0:
            raise ValueError("atom power must be nonnegative")


class LinExpr:
    """Immutable sparse linear combination of atoms, kept in canonical form.

    Canonical form: ids strictly increasing, no zero coefficients.
    """

    __slots__ = ("ids", "coefs")

    def __init__(self, ids=_EMPTY_IDS, coefs=_EMPTY_COEFS):
        # callers guarantee canonical input; use from_terms() otherwise
        ids = np.asarray(ids, dtype=np.int64)
        coefs = np.asarray(coefs, dtype=np.complex128)
        if ids.shape != coefs.shape or ids.ndim != 1:
            raise ValueError("ids and coefs must be 1-D arrays of equal length")
        ids.flags.writeable = False
        coefs.flags.writeable = False
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "coefs", coefs)

    def __setattr__(self, name, value):
        raise AttributeError("LinExpr is immutable")

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def atom(cls, atom_id, coef=1.0):
        if coef == 0:
            return cls()
        return cls(np.array([atom_id], dtype=np.int64), np.array([coef], dtype=np.complex128))

    @classmethod
    def from_terms(cls, terms):
        """Build from a ``{atom_id: coef}`` mapping, canonicalising."""
        if not terms:
            return cls()
        ids = np.fromiter(terms.keys(), dtype=np.int64, count=len(terms))
        coefs = np.fromiter(terms.values(), dtype=np.complex128, count=len(terms))
        return cls(*kernels.merge_terms(ids, coefs, CANCEL_RTOL))

    @property
    def terms(self):
        return {int(i): complex(c) for i, c in zip(self.ids, self.coefs)}

    @property
    def support(self):
        return frozenset(int(i) for i in self.ids)

    def coef(self, atom_id):
        pos = np.searchsorted(self.ids, atom_id)
        if pos < self.ids.size and self.ids[pos] == atom_id:
            return complex(self.coefs[pos])
        return 0j

    def is_zero(self):
        return self.ids.size == 0

    def __len__(self):
        return int(self.ids.size)

    def __add__(self, other):
        if not isinstance(other, LinExpr):
            return NotImplemented
        return combine((1.0, 1.0), (self, other))

    def __sub__(self, other):
        if not isinstance(other, LinExpr):
            return NotImplemented
        return combine((1.0, -1.0), (self, other))

    def __neg__(self):
        return LinExpr(self.ids, -self.coefs)

    def __mul__(self, scalar):
        scalar = complex(scalar)
        if scalar == 0:
            return LinExpr()
        return LinExpr(self.ids, self.coefs * scalar)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, LinExpr):
            return NotImplemented
        return np.array_equal(self.ids, other.ids) and np.array_equal(self.coefs, other.coefs)

    __hash__ = None

    def allclose(self, other, rtol=1e-9):
        """Coefficient-level equality up to ``rtol`` times the larger norm."""
        diff = self - other
        if diff.is_zero():
            return True
        scale = max(self.norm(), other.norm(), 1e-300)
        return diff.norm() <= rtol * scale

    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.coefs) ** 2)))

    def with_new_atom(self, atom_id, coef=1.0):
        """Append an atom whose id exceeds every id already present."""
        if self.ids.size and atom_id <= self.ids[-1]:
            raise ValueError("with_new_atom needs a fresh, larger id")
        return LinExpr(np.append(self.ids, atom_id), np.append(self.coefs, complex(coef)))

    def __repr__(self):
        inner = ", ".join(f"{i}: {c:.4g}" for i, c in self.terms.items())
        return f"LinExpr({{{inner}}})"


def pack(exprs):
    """CSR-pack expressions into ``(indptr, ids, coefs)`` arrays."""
    n = len(exprs)
    indptr = np.zeros(n + 1, dtype=np.int64)
    if n == 0:
        return indptr, _EMPTY_IDS.copy(), _EMPTY_COEFS.copy()
    np.cumsum([e.ids.size for e in exprs], out=indptr[1:])
    ids = np.concatenate([e.ids for e in exprs])
    coefs = np.concatenate([e.coefs for e in exprs])
    return indptr, ids, coefs


def unpack(indptr, ids, coefs):
    return [LinExpr(ids[indptr[r]:indptr[r + 1]], coefs[indptr[r]:indptr[r + 1]])
            for r in range(indptr.size - 1)]


def combine(coeffs, exprs):
    """Exact linear combination ``sum_k coeffs[k] * exprs[k]``."""
    if len(coeffs) != len(exprs):
        raise ValueError(f"{len(coeffs)} coefficients for {len(exprs)} expressions")
    if not exprs:
        return LinExpr()
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    sizes = [e.ids.size for e in exprs]
    if sum(sizes) == 0:
        return LinExpr()
    ids = np.concatenate([e.ids for e in exprs])
    coefs = np.concatenate([e.coefs * c for e, c in zip(exprs, coeffs)])
    return LinExpr(*kernels.merge_terms(ids, coefs, CANCEL_RTOL))


def lin_map(matrix, exprs):
    """Apply a complex matrix to a vector of expressions.

    Returns ``len(matrix)`` expressions, row ``r`` being
    ``sum_k matrix[r, k] * exprs[k]``.
    """
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.shape[1] != len(exprs):
        raise ValueError(f"matrix of shape {matrix.shape} for {len(exprs)} expressions")
    indptr, ids, coefs = pack(exprs)
    if ids.size == 0:
        return [LinExpr() for _ in range(matrix.shape[0])]
    cols, dense = kernels.densify(indptr, ids, coefs)
    out = matrix @ dense
    scale = np.abs(matrix) @ np.abs(dense)
    return unpack(*kernels.sparsify(out, scale, cols, CANCEL_RTOL))


def coefficient_matrix(exprs, unknowns):
    """Split expressions into a coefficient matrix over ``unknowns`` and a residual.

    Returns ``(A, residual)`` where ``A[r, k]`` is the coefficient of
    ``unknowns[k]`` in ``exprs[r]`` and ``residual[r]`` holds every other term.
    """
    unknowns = np.asarray(list(unknowns), dtype=np.int64)
    if np.unique(unknowns).size != unknowns.size:
        raise ValueError("duplicate unknown ids")
    a = np.zeros((len(exprs), unknowns.size), dtype=np.complex128)
    if unknowns.size == 0:
        return a, list(exprs)
    order = np.argsort(unknowns)
    sorted_u = unknowns[order]
    residual = []
    for r, e in enumerate(exprs):
        pos = np.searchsorted(sorted_u, e.ids)
        pos_c = np.minimum(pos, sorted_u.size - 1)
        hit = sorted_u[pos_c] == e.ids
        a[r, order[pos_c[hit]]] = e.coefs[hit]
        residual.append(LinExpr(e.ids[~hit], e.coefs[~hit]))
    return a, residual


def cancel_known(target, known, eliminate=None):
    """Subtract a combination of ``known`` expressions from ``target``.

    The combination is the least-squares fit of the target's coefficients on
    the ``eliminate`` atoms (default: every atom shared between target and
    known). Atoms whose coefficients lie in the span of the known expressions
    vanish exactly; the rest stay.
    """
    if not known:
        return target
    if eliminate is None:
        known_atoms = set()
        for k in known:
            known_atoms.update(k.support)
        eliminate = sorted(target.support & known_atoms)
    if len(eliminate) == 0:
        return target
    k_mat, _ = coefficient_matrix(known, eliminate)
    t_vec, _ = coefficient_matrix([target], eliminate)
    c, *_ = np.linalg.lstsq(k_mat.T, t_vec[0], rcond=1e-12)
    return combine(np.concatenate(([1.0], -c)), [target, *known])


@dataclass
class KnowledgeEntry:
    label: str
    available_from: int
    expr: LinExpr
    source: tuple = ()


@dataclass
class KnowledgeSet:
    """What one transmitter knows, with the first slot each item may be used.

    Labels: ``own`` (its messages/transmissions), ``feedback``,
    ``reconstruction`` and ``csi``.
    """

    owner: int
    entries: list = field(default_factory=list)

    def add(self, label, available_from, expr, source=()):
        self.entries.append(KnowledgeEntry(label, available_from, expr, tuple(source)))

    def exprs(self, before=None, label=None):
        return [e.expr for e in self.entries
                if (before is None or e.available_from <= before)
                and (label is None or e.label == label)]

    def atoms(self, before=None):
        out = set()
        for e in self.entries:
            if before is None or e.available_from <= before:
                out.update(e.expr.support)
        return out
