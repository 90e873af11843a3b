"""Positive linear maps between Hermitian spaces.

Each map knows how to apply itself, apply its adjoint, and produce its real
matrix representation on svec coordinates. Maps compose, direct-sum, and are
the payload of cone constructors and problem builders.
"""
from __future__ import annotations

import numpy as np

from . import linalg as la
from .errors import DimensionError


class LinearMap:
    """Base class: a linear map H^{n_in} -> H^{n_out}."""

    n_in: int
    n_out: int

    def __init__(self, n_in: int, n_out: int):
        self.n_in = n_in
        self.n_out = n_out
        self._matrix = None

    def __call__(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def adjoint(self, Y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def matrix(self) -> np.ndarray:
        """Real (n_out^2, n_in^2) matrix on svec coordinates; cached."""
        if self._matrix is None:
            self._matrix = self._build_matrix()
        return self._matrix

    def _build_matrix(self) -> np.ndarray:
        d_in = la.svec_dim(self.n_in)
        M = np.empty((la.svec_dim(self.n_out), d_in))
        e = np.zeros(d_in)
        for k in range(d_in):
            e[k] = 1.0
            M[:, k] = la.svec(self(la.smat(e)))
            e[k] = 0.0
        return M

    def then(self, outer: "LinearMap") -> "LinearMap":
        return compose(outer, self)


class IdentityMap(LinearMap):
    def __init__(self, n: int):
        super().__init__(n, n)

    def __call__(self, X):
        return X

    def adjoint(self, Y):
        return Y

    def _build_matrix(self):
        return np.eye(la.svec_dim(self.n_in))


class CongruenceMap(LinearMap):
    """X -> K X K^dag for a fixed (possibly rectangular) matrix K."""

    def __init__(self, K: np.ndarray):
        K = np.asarray(K, dtype=complex)
        super().__init__(K.shape[1], K.shape[0])
        self.K = K

    def __call__(self, X):
        return self.K @ X @ self.K.conj().T

    def adjoint(self, Y):
        return self.K.conj().T @ Y @ self.K

    def _build_matrix(self):
        return la.congruence_svec_matrix(self.K)


class KrausMap(LinearMap):
    """X -> sum_i K_i X K_i^dag, the generic completely positive map."""

    def __init__(self, ops):
        ops = [np.asarray(K, dtype=complex) for K in ops]
        if not ops:
            raise DimensionError("need at least one Kraus operator")
        m, n = ops[0].shape
        if any(K.shape != (m, n) for K in ops):
            raise DimensionError("Kraus operators must share a common shape")
        super().__init__(n, m)
        self.ops = ops

    def __call__(self, X):
        return sum(K @ X @ K.conj().T for K in self.ops)

    def adjoint(self, Y):
        return sum(K.conj().T @ Y @ K for K in self.ops)

    def _build_matrix(self):
        return sum(la.congruence_svec_matrix(K) for K in self.ops)


class PartialTraceMap(LinearMap):
    def __init__(self, side: int, n: int, m: int):
        out = m if side == 1 else n
        super().__init__(n * m, out)
        self.side, self.n, self.m = side, n, m

    def __call__(self, X):
        return la.partial_trace(X, self.side, self.n, self.m)

    def adjoint(self, Y):
        return la.kron_identity(Y, self.side, self.n, self.m)

    def _build_matrix(self):
        return KronIdentityMap(self.side, self.n, self.m).matrix().T


class KronIdentityMap(LinearMap):
    """Y -> I (x) Y (side=1) or Y (x) I (side=2); adjoint of the partial trace."""

    def __init__(self, side: int, n: int, m: int):
        inp = m if side == 1 else n
        super().__init__(inp, n * m)
        self.side, self.n, self.m = side, n, m

    def __call__(self, Y):
        return la.kron_identity(Y, self.side, self.n, self.m)

    def adjoint(self, X):
        return la.partial_trace(X, self.side, self.n, self.m)

    def _build_matrix(self):
        if self.side == 1:
            ops = [np.kron(np.eye(self.n)[:, [i]], np.eye(self.m)) for i in range(self.n)]
        else:
            ops = [np.kron(np.eye(self.n), np.eye(self.m)[:, [i]]) for i in range(self.m)]
        return KrausMap(ops).matrix()


class PinchingMap(LinearMap):
    """Zeroes all off-diagonal blocks for a declared block partition."""

    def __init__(self, block_sizes):
        sizes = [int(s) for s in block_sizes]
        if any(s <= 0 for s in sizes):
            raise DimensionError("block sizes must be positive")
        n = sum(sizes)
        super().__init__(n, n)
        self.block_sizes = sizes
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])

    def __call__(self, X):
        Y = np.zeros_like(np.asarray(X, dtype=complex))
        for a, b in zip(self.offsets[:-1], self.offsets[1:]):
            Y[a:b, a:b] = X[a:b, a:b]
        return Y

    adjoint = __call__


class DirectSumMap(LinearMap):
    """X -> diag(G_1(X), ..., G_p(X)) for maps sharing the input space."""

    def __init__(self, parts):
        parts = list(parts)
        n = parts[0].n_in
        if any(p.n_in != n for p in parts):
            raise DimensionError("direct-sum parts must share the input dimension")
        super().__init__(n, sum(p.n_out for p in parts))
        self.parts = parts
        self.offsets = np.concatenate([[0], np.cumsum([p.n_out for p in parts])])

    def __call__(self, X):
        Y = np.zeros((self.n_out, self.n_out), dtype=complex)
        for p, a, b in zip(self.parts, self.offsets[:-1], self.offsets[1:]):
            Y[a:b, a:b] = p(X)
        return Y

    def adjoint(self, Y):
        out = np.zeros((self.n_in, self.n_in), dtype=complex)
        for p, a, b in zip(self.parts, self.offsets[:-1], self.offsets[1:]):
            out = out + p.adjoint(Y[a:b, a:b])
        return out


class TraceMap(LinearMap):
    """X -> [[tr X]], a positive map into the 1x1 Hermitian space."""

    def __init__(self, n: int):
        super().__init__(n, 1)

    def __call__(self, X):
        return np.array([[np.trace(X)]], dtype=complex)

    def adjoint(self, Y):
        return np.asarray(Y)[0, 0] * np.eye(self.n_in, dtype=complex)

    def _build_matrix(self):
        return la.svec(np.eye(self.n_in))[None, :]


class CompositeMap(LinearMap):
    def __init__(self, outer: LinearMap, inner: LinearMap):
        if inner.n_out != outer.n_in:
            raise DimensionError("composition dimension mismatch")
        super().__init__(inner.n_in, outer.n_out)
        self.outer, self.inner = outer, inner

    def __call__(self, X):
        return self.outer(self.inner(X))

    def adjoint(self, Y):
        return self.inner.adjoint(self.outer.adjoint(Y))

    def _build_matrix(self):
        return self.outer.matrix() @ self.inner.matrix()


def compose(outer: LinearMap, inner: LinearMap) -> LinearMap:
    """outer o inner, collapsing congruence/Kraus chains to keep matrix
    representations small."""
    if isinstance(outer, IdentityMap):
        return inner
    if isinstance(inner, IdentityMap):
        return outer
    o_ops = _kraus_ops(outer)
    i_ops = _kraus_ops(inner)
    if o_ops is not None and i_ops is not None:
        combined = [Ko @ Ki for Ko in o_ops for Ki in i_ops]
        if len(combined) == 1:
            return CongruenceMap(combined[0])
        return KrausMap(combined)
    return CompositeMap(outer, inner)


def _kraus_ops(m: LinearMap):
    if isinstance(m, CongruenceMap):
        return [m.K]
    if isinstance(m, KrausMap):
        return m.ops
    if isinstance(m, PinchingMap):
        ops = []
        for a, b in zip(m.offsets[:-1], m.offsets[1:]):
            P = np.zeros((m.n_in, m.n_in))
            P[np.arange(a, b), np.arange(a, b)] = 1.0
            ops.append(P)
        return ops
    if isinstance(m, PartialTraceMap):
        if m.side == 1:
            return [np.kron(np.eye(m.n)[[i], :], np.eye(m.m)) for i in range(m.n)]
        return [np.kron(np.eye(m.n), np.eye(m.m)[[a], :]) for a in range(m.m)]
    if isinstance(m, KronIdentityMap):
        if m.side == 1:
            return [np.kron(np.eye(m.n)[:, [i]], np.eye(m.m)) for i in range(m.n)]
        return [np.kron(np.eye(m.n), np.eye(m.m)[:, [a]]) for a in range(m.m)]
    if isinstance(m, TraceMap):
        return [np.eye(m.n_in)[[i], :] for i in range(m.n_in)]
    return None


def block_extractor(offsets, i: int, total: int) -> CongruenceMap:
    """Map selecting the i-th diagonal coordinate block of an n x n matrix."""
    a, b = offsets[i], offsets[i + 1]
    E = np.zeros((b - a, total))
    E[np.arange(b - a), np.arange(a, b)] = 1.0
    return CongruenceMap(E)


def check_positivity(m: LinearMap, rng: np.random.Generator, trials: int = 20,
                     tol: float = 1e-10) -> float:
    """Worst negative eigenvalue of images of random PSD inputs (0.0 if none)."""
    worst = 0.0
    for _ in range(trials):
        G = rng.standard_normal((m.n_in, m.n_in)) + 1j * rng.standard_normal((m.n_in, m.n_in))
        X = G @ G.conj().T
        X /= np.trace(X).real
        lam = np.linalg.eigvalsh(m(X))
        worst = min(worst, float(lam.min()))
    return worst


def check_adjoint(m: LinearMap, rng: np.random.Generator, trials: int = 10) -> float:
    """Max mismatch of <G(X), Y> vs <X, G^dag(Y)> over random Hermitian pairs."""
    err = 0.0
    for _ in range(trials):
        X = la.random_hermitian(rng, m.n_in)
        Y = la.random_hermitian(rng, m.n_out)
        lhs = np.trace(m(X) @ Y).real
        rhs = np.trace(X @ m.adjoint(Y)).real
        err = max(err, abs(lhs - rhs))
    return err
