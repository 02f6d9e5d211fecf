"""Vectorization, Kronecker products, commutation matrices and SPD helpers.

All vectorization is column-major: ``vec(M)[j * rows + i] == M[i, j]``.

Commutation matrices and their compositions are represented by
:class:`PermSumOperator`, a weighted sum of index permutations that is
applied lazily and only materialized densely on small dimensions.
"""
from __future__ import annotations

import numpy as np

from . import _backend
from .errors import DimensionError, NotPositiveDefiniteError

#: Dense materialization is refused above this dimension.
MAX_DENSE_DIM = 10_000

SYMMETRY_RTOL = 1e-12
EIGEN_FLOOR = 1e-12


def vec(m):
    """Stack the columns of ``m`` into a single vector."""
    m = np.asarray(m)
    return m.reshape(-1, order="F").copy()


def unvec(v, rows, cols):
    """Inverse of :func:`vec`."""
    v = np.asarray(v)
    if v.ndim != 1 or v.shape[0] != rows * cols:
        raise DimensionError(
            f"cannot unvec a vector of length {v.size} into {rows}x{cols}")
    return v.reshape((rows, cols), order="F").copy()


def kron(a, b):
    """Kronecker product, ``(A⊗B)[i*rB + k, j*cB + l] = A[i, j] * B[k, l]``."""
    return np.kron(np.atleast_2d(a), np.atleast_2d(b))


def check_spd(s, *, sym_rtol=SYMMETRY_RTOL, name="matrix"):
    """Validate that ``s`` is a symmetric positive definite matrix.

    Returns the matrix as a float array. Raises
    :class:`NotPositiveDefiniteError` on asymmetry or a failed Cholesky.
    """
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise NotPositiveDefiniteError(f"{name} has non-finite entries")
    asym = np.abs(s - s.T)
    if np.any(asym > sym_rtol * np.maximum(1.0, np.abs(s))):
        raise NotPositiveDefiniteError(f"{name} is not symmetric")
    try:
        np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(f"{name} is not positive definite") from None
    return s


def cholesky_lower(sigma):
    """Lower Cholesky factor ``L`` with ``L @ L.T == sigma``."""
    sigma = np.asarray(sigma, dtype=float)
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError("matrix is not positive definite") from None


def symmetric_sqrt(sigma):
    """Symmetric positive definite square root via eigendecomposition."""
    sigma = np.asarray(sigma, dtype=float)
    w, q = np.linalg.eigh((sigma + sigma.T) / 2)
    if w[-1] <= 0 or w[0] <= EIGEN_FLOOR * w[-1]:
        raise NotPositiveDefiniteError(
            f"matrix is not numerically positive definite (eigenvalues {w[0]:.3g}..{w[-1]:.3g})")
    root = (q * np.sqrt(w)) @ q.T
    return (root + root.T) / 2


def logdet_spd(s):
    """log|S| through the Cholesky factor."""
    return 2.0 * float(np.sum(np.log(np.diag(cholesky_lower(s)))))


# ---------------------------------------------------------------------------
# permutation-sum operators


def _identity_perm(dim):
    return np.arange(dim, dtype=np.int64)


# Set by the verification suite's fault-injection hook only.
_CORRUPT_COMMUTATION = False


def commutation_perm(p, q):
    """Gather indices of ``K_{p,q}``: ``(K v)[j + i*q] = v[i + j*p]``."""
    i = np.arange(p, dtype=np.int64)
    j = np.arange(q, dtype=np.int64)
    # output index j + i*q lives at position [i, j] of a C-ordered (p, q) grid
    src = i[:, None] + j[None, :] * p
    out = np.empty(p * q, dtype=np.int64)
    out[(j[None, :] + i[:, None] * q).ravel()] = src.ravel()
    if _CORRUPT_COMMUTATION and out.size > 1:
        out[[0, -1]] = out[[-1, 0]]
    return out


class PermSumOperator:
    """Weighted sum of permutation matrices acting on vectors of length ``dim``.

    Each term is stored as gather indices: a term ``(w, perm)`` maps ``v`` to
    ``w * v[perm]``. Products, sums and Kronecker products keep the
    representation closed, so commutation-matrix algebra never needs a dense
    ``dim x dim`` array.
    """

    __slots__ = ("dim", "weights", "perms")

    def __init__(self, dim, terms, *, check=True):
        self.dim = int(dim)
        merged = {}
        order = []
        for w, perm in terms:
            perm = np.ascontiguousarray(perm, dtype=np.int64)
            if perm.shape != (self.dim,):
                raise DimensionError(
                    f"permutation of length {perm.shape} in operator of dim {self.dim}")
            key = perm.tobytes()
            if key in merged:
                merged[key][0] += float(w)
            else:
                merged[key] = [float(w), perm]
                order.append(key)
        kept = [merged[k] for k in order if merged[k][0] != 0.0]
        if check:
            for _, perm in kept:
                if not _is_bijection(perm):
                    raise ValueError("operator term is not a permutation")
        self.weights = np.array([w for w, _ in kept], dtype=float)
        self.perms = (np.stack([p for _, p in kept]) if kept
                      else np.empty((0, self.dim), dtype=np.int64))
        # operators are cached and shared, so keep them immutable
        self.weights.setflags(write=False)
        self.perms.setflags(write=False)

    # -- constructors -----------------------------------------------------
    @classmethod
    def identity(cls, dim, weight=1.0):
        return cls(dim, [(weight, _identity_perm(dim))], check=False)

    @classmethod
    def zero(cls, dim):
        return cls(dim, [], check=False)

    @property
    def terms(self):
        return list(zip(self.weights.tolist(), self.perms))

    @property
    def n_terms(self):
        return len(self.weights)

    # -- algebra ----------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, PermSumOperator):
            return NotImplemented
        if other.dim != self.dim:
            raise DimensionError(f"cannot add operators of dims {self.dim} and {other.dim}")
        return PermSumOperator(self.dim, self.terms + other.terms, check=False)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, scalar):
        return PermSumOperator(
            self.dim, [(scalar * w, p) for w, p in self.terms], check=False)

    def __neg__(self):
        return (-1.0) * self

    def __matmul__(self, other):
        """Composition ``self @ other`` (apply ``other`` first) or application."""
        if isinstance(other, PermSumOperator):
            if other.dim != self.dim:
                raise DimensionError(
                    f"cannot compose operators of dims {self.dim} and {other.dim}")
            terms = [(wa * wb, pb[pa]) for wa, pa in self.terms for wb, pb in other.terms]
            return PermSumOperator(self.dim, terms, check=False)
        return self.apply(other)

    def kron(self, other):
        """Kronecker product ``self ⊗ other``."""
        d = other.dim
        terms = [(wa * wb, (pa[:, None] * d + pb[None, :]).ravel())
                 for wa, pa in self.terms for wb, pb in other.terms]
        return PermSumOperator(self.dim * d, terms, check=False)

    def lift(self, left=1, right=1):
        """``I_left ⊗ self ⊗ I_right`` as an explicit operator."""
        op = self
        if left > 1:
            op = PermSumOperator.identity(left).kron(op)
        if right > 1:
            op = op.kron(PermSumOperator.identity(right))
        return op

    @property
    def T(self):
        return PermSumOperator(
            self.dim, [(w, np.argsort(p)) for w, p in self.terms], check=False)

    # -- evaluation -------------------------------------------------------
    def apply(self, v, left=1, right=1):
        """Apply ``I_left ⊗ self ⊗ I_right`` to a vector of length ``left*dim*right``."""
        v = np.asarray(v, dtype=float)
        if v.ndim != 1 or v.shape[0] != left * self.dim * right:
            raise DimensionError(
                f"operator of dim {left}*{self.dim}*{right} applied to vector of shape {v.shape}")
        x = np.ascontiguousarray(v.reshape(left, self.dim, right))
        if self.n_terms == 0:
            return np.zeros_like(v)
        out = _backend.perm_sum_apply(self.perms, self.weights, x)
        return np.asarray(out).reshape(-1)

    def to_dense(self):
        if self.dim > MAX_DENSE_DIM:
            raise DimensionError(
                f"refusing to materialize a {self.dim}x{self.dim} operator densely")
        out = np.zeros((self.dim, self.dim))
        rows = np.arange(self.dim)
        for w, p in self.terms:
            np.add.at(out, (rows, p), w)
        return out

    def __repr__(self):
        return f"PermSumOperator(dim={self.dim}, n_terms={self.n_terms})"


def _is_bijection(perm):
    seen = np.zeros(perm.shape[0], dtype=bool)
    if perm.min(initial=0) < 0 or perm.max(initial=-1) >= perm.shape[0]:
        return False
    seen[perm] = True
    return bool(seen.all())


def identity_operator(dim):
    return PermSumOperator.identity(dim)


def commutation_matrix(p, q):
    """``K_{p,q}``: maps ``vec(A)`` to ``vec(A.T)`` for any ``p x q`` matrix ``A``."""
    if p < 1 or q < 1:
        raise DimensionError("commutation matrix needs p, q >= 1")
    return PermSumOperator(p * q, [(1.0, commutation_perm(p, q))])


def apply_operator(op, v):
    """Evaluate ``op @ v`` without materializing ``op``."""
    return op.apply(v)


def kron_chain(*ops):
    """Kronecker product of several operators, left to right."""
    out = ops[0]
    for op in ops[1:]:
        out = out.kron(op)
    return out
