"""Hermitian matrix kernels.

Real vectorization of Hermitian matrices, spectral decompositions, divided
differences, derivative operators of spectral functions, entropy values,
partial traces, and the low-rank (matrix inversion lemma) solvers that the
cone oracles dispatch to.

All operations here are pure functions of their inputs.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from math import isqrt

import numpy as np
import scipy.linalg as sla

from .errors import (
    DimensionError,
    DomainError,
    MemoryGuardError,
    SingularityError,
)

SQRT2 = float(np.sqrt(2.0))

# Relative tie threshold below which divided differences switch to the
# derivative (limit) formulas; avoids catastrophic cancellation.
TIE_REL = 1e-8


# ---------------------------------------------------------------------------
# real coordinatization of H^n
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _svec_layout(n: int):
    """Slot layout: lower triangle in row-major order, (sqrt2*Re, sqrt2*Im)
    pairs for each off-diagonal entry, diagonal entries stored as-is."""
    diag = np.empty(n, dtype=np.intp)
    rows, cols, re_s, im_s = [], [], [], []
    k = 0
    for i in range(n):
        for j in range(i):
            rows.append(i)
            cols.append(j)
            re_s.append(k)
            im_s.append(k + 1)
            k += 2
        diag[i] = k
        k += 1
    as_i = lambda a: np.asarray(a, dtype=np.intp)
    return diag, as_i(rows), as_i(cols), as_i(re_s), as_i(im_s)


def svec(X: np.ndarray) -> np.ndarray:
    """Isometric real vector of a Hermitian matrix: <svec X, svec Y> = tr[XY]."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {X.shape}")
    n = X.shape[0]
    diag, rows, cols, re_s, im_s = _svec_layout(n)
    v = np.empty(n * n)
    v[diag] = X.diagonal().real
    if rows.size:
        off = X[rows, cols]
        v[re_s] = SQRT2 * off.real
        v[im_s] = SQRT2 * off.imag
    return v


def smat(v: np.ndarray) -> np.ndarray:
    """Inverse of svec."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise DimensionError("smat expects a 1-d real vector")
    n = isqrt(v.size)
    if n * n != v.size:
        raise DimensionError(f"length {v.size} is not a perfect square")
    diag, rows, cols, re_s, im_s = _svec_layout(n)
    X = np.zeros((n, n), dtype=complex)
    X[np.arange(n), np.arange(n)] = v[diag]
    if rows.size:
        off = (v[re_s] + 1j * v[im_s]) / SQRT2
        X[rows, cols] = off
        X[cols, rows] = off.conj()
    return X


def svec_dim(n: int) -> int:
    return n * n


def batch_smat(V: np.ndarray) -> np.ndarray:
    """Columns of V (d, k) as a stack (k, n, n) of Hermitian matrices."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if V.ndim != 2:
        raise DimensionError("expected a (d, k) array")
    d, k = V.shape
    n = isqrt(d)
    if n * n != d:
        raise DimensionError(f"length {d} is not a perfect square")
    diag, rows, cols, re_s, im_s = _svec_layout(n)
    X = np.zeros((k, n, n), dtype=complex)
    X[:, np.arange(n), np.arange(n)] = V[diag].T
    if rows.size:
        off = (V[re_s] + 1j * V[im_s]).T / SQRT2
        X[:, rows, cols] = off
        X[:, cols, rows] = off.conj()
    return X


def batch_svec(Xs: np.ndarray) -> np.ndarray:
    """Stack (k, n, n) of Hermitian matrices as svec columns (d, k)."""
    Xs = np.asarray(Xs)
    k, n, _ = Xs.shape
    diag, rows, cols, re_s, im_s = _svec_layout(n)
    V = np.empty((n * n, k))
    V[diag] = Xs[:, np.arange(n), np.arange(n)].real.T
    if rows.size:
        off = Xs[:, rows, cols].T
        V[re_s] = SQRT2 * off.real
        V[im_s] = SQRT2 * off.imag
    return V


def side_of(dim: int) -> int:
    n = isqrt(dim)
    if n * n != dim:
        raise DimensionError(f"vector length {dim} is not a perfect square")
    return n


@lru_cache(maxsize=None)
def svec_basis_matrix(n: int) -> np.ndarray:
    """Complex (n^2, n^2) matrix P with columns vec(B_k) for the orthonormal
    Hermitian basis underlying svec; svec(X) = P^dag vec(X)."""
    P = np.zeros((n * n, n * n), dtype=complex)
    for k in range(n * n):
        e = np.zeros(n * n)
        e[k] = 1.0
        P[:, k] = smat(e).reshape(-1, order="F")
    return P


def operator_to_svec_matrix(M_vec: np.ndarray) -> np.ndarray:
    """Transform a linear operator on column-stacked coordinates to the svec basis."""
    n2 = M_vec.shape[0]
    P = svec_basis_matrix(side_of(n2))
    return np.real(P.conj().T @ M_vec @ P)


def congruence_svec_matrix(K: np.ndarray) -> np.ndarray:
    """Real svec-basis matrix of the congruence X -> K X K^dag."""
    K = np.asarray(K, dtype=complex)
    m, n = K.shape
    if max(m, n) > 40:
        # basis-application route; avoids the large Kronecker intermediates
        Es = batch_smat(np.eye(n * n))
        out = np.einsum("ab,kbc,dc->kad", K, Es, K.conj())
        return batch_svec(out)
    Pin = svec_basis_matrix(n)
    Pout = svec_basis_matrix(m)
    return np.real(Pout.conj().T @ np.kron(K.conj(), K) @ Pin)


def hermitize(X: np.ndarray) -> np.ndarray:
    return (X + X.conj().T) / 2


def random_hermitian(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * hermitize(A)


# ---------------------------------------------------------------------------
# spectral decompositions
# ---------------------------------------------------------------------------

@dataclass
class SpectralDecomposition:
    eigenvalues: np.ndarray  # descending
    vectors: np.ndarray      # unitary, columns are eigenvectors

    def reconstruct(self) -> np.ndarray:
        U = self.vectors
        return (U * self.eigenvalues) @ U.conj().T


def eigh(X: np.ndarray) -> SpectralDecomposition:
    """Hermitian eigendecomposition with descending eigenvalues."""
    X = np.asarray(X)
    if not np.all(np.isfinite(X)):
        raise DomainError("matrix has non-finite entries")
    w, U = np.linalg.eigh(X)
    return SpectralDecomposition(w[::-1].copy(), U[:, ::-1].copy())


# ---------------------------------------------------------------------------
# scalar kernels and divided differences
# ---------------------------------------------------------------------------

_KERNELS = {
    # f, f', f''
    "log": (np.log, lambda x: 1.0 / x, lambda x: -1.0 / x**2),
    "dlog": (lambda x: 1.0 / x, lambda x: -1.0 / x**2, lambda x: 2.0 / x**3),
    "xlogx": (lambda x: x * np.log(x), lambda x: np.log(x) + 1.0, lambda x: 1.0 / x),
}


def _require_positive(lam: np.ndarray, kernel: str) -> None:
    if np.any(lam <= 0.0):
        raise DomainError(f"kernel '{kernel}' needs strictly positive eigenvalues; "
                          f"min is {lam.min():.3e}")


def _tie_tol(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return TIE_REL * np.maximum(1.0, np.abs(a) + np.abs(b))


def first_divided_differences(kernel: str, lam: np.ndarray) -> np.ndarray:
    """Symmetric table f^[1](lam_i, lam_j) with f'(lam_i) on near-ties."""
    lam = np.asarray(lam, dtype=float)
    _require_positive(lam, kernel)
    if kernel == "dlog":
        # (1/a - 1/b)/(a - b) = -1/(ab), exact for ties too
        return -1.0 / np.outer(lam, lam)
    f, fp, _ = _KERNELS[kernel]
    a, b = lam[:, None], lam[None, :]
    d = a - b
    tie = np.abs(d) <= _tie_tol(a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        tbl = (f(a) - f(b)) / d
    mid = (a + b) / 2.0
    return np.where(tie, fp(mid), tbl)


def second_divided_differences(kernel: str, lam: np.ndarray) -> np.ndarray:
    """Tensor t[i, j, k] = f^[2](lam_i, lam_j, lam_k), symmetric in all arguments."""
    lam = np.asarray(lam, dtype=float)
    _require_positive(lam, kernel)
    f, fp, fpp = _KERNELS[kernel]
    F1 = first_divided_differences(kernel, lam)
    a = lam[:, None, None]
    b = lam[None, :, None]
    c = lam[None, None, :]
    d = a - b
    tie_ab = np.abs(d) <= _tie_tol(a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        generic = (F1[:, None, :] - F1[None, :, :]) / d
    # limit formula for a ~ b: d/dx f^[1](x, c) at x = (a+b)/2
    mid = (a + b) / 2.0
    dms = mid - c
    tie_mc = np.abs(dms) <= _tie_tol(mid, c)
    with np.errstate(divide="ignore", invalid="ignore"):
        near = (fp(mid) * dms - (f(mid) - f(c))) / dms**2
    triple = 0.5 * fpp((a + b + c) / 3.0)
    return np.where(tie_ab, np.where(tie_mc, triple, near), generic)


def divided_differences(kernel: str, lam: np.ndarray, order: int = 1) -> np.ndarray:
    """Divided-difference table of the named scalar kernel over eigenvalues."""
    if kernel not in _KERNELS:
        raise ValueError(f"unknown kernel '{kernel}'")
    if order == 1:
        return first_divided_differences(kernel, lam)
    if order == 2:
        return second_divided_differences(kernel, lam)
    raise ValueError("order must be 1 or 2")


def _derivative_dd1(kernel: str, lam: np.ndarray) -> np.ndarray:
    """First divided differences of f' for the named kernel."""
    lam = np.asarray(lam, dtype=float)
    if kernel == "log":
        return first_divided_differences("dlog", lam)
    if kernel == "xlogx":
        # (f')^[1] for log(x)+1 equals the log table
        return first_divided_differences("log", lam)
    if kernel == "dlog":
        # f' = -1/x^2 has divided differences (a+b)/(a^2 b^2), no cancellation
        _require_positive(lam, kernel)
        a, b = lam[:, None], lam[None, :]
        return (a + b) / (a * b) ** 2
    raise ValueError(f"unknown kernel '{kernel}'")


# ---------------------------------------------------------------------------
# spectral functions and entropies
# ---------------------------------------------------------------------------

def spectral_function(X: np.ndarray, f, dom_positive: bool | None = None) -> np.ndarray:
    """U f(Lambda) U^dag for Hermitian X.

    `f` is a kernel name from {'log','dlog','xlogx','exp','sqrt'} or a callable.
    """
    eig = eigh(X)
    lam = eig.eigenvalues
    if isinstance(f, str):
        table = {"exp": np.exp, "sqrt": np.sqrt}
        if f in _KERNELS:
            _require_positive(lam, f)
            fn = _KERNELS[f][0]
        elif f in table:
            if f == "sqrt" and np.any(lam < -1e-12 * max(1.0, abs(lam[0]))):
                raise DomainError("sqrt of a matrix with negative eigenvalues")
            fn = table[f]
        else:
            raise ValueError(f"unknown kernel '{f}'")
    else:
        fn = f
        if dom_positive and np.any(lam <= 0.0):
            raise DomainError("eigenvalue out of the positive domain")
    U = eig.vectors
    return hermitize((U * fn(lam)) @ U.conj().T)


def _entropy_from_eigs(lam: np.ndarray, scale: float) -> float:
    tol = 1e-14 * max(1.0, abs(scale))
    if np.any(lam < -1e-10 * max(1.0, abs(scale))):
        raise DomainError(f"matrix is not PSD: min eigenvalue {lam.min():.3e}")
    pos = lam[lam > tol]
    return float(-np.sum(pos * np.log(pos)))


def quantum_entropy(X: np.ndarray) -> float:
    """-tr[X log X] with the 0 log 0 = 0 convention."""
    lam = np.linalg.eigvalsh(np.asarray(X))
    return _entropy_from_eigs(lam, lam.max(initial=0.0) * len(lam))


def quantum_relative_entropy(X: np.ndarray, Y: np.ndarray) -> float:
    """tr[X (log X - log Y)] on the support of Y; requires ker Y within ker X."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    if X.shape != Y.shape:
        raise DimensionError("arguments must have matching shapes")
    ex = eigh(X)
    ey = eigh(Y)
    trX = float(np.sum(ex.eigenvalues))
    cut_x = 1e-12 * (1.0 + abs(trX))
    cut_y = 1e-12 * (1.0 + abs(float(np.sum(ey.eigenvalues))))
    if np.any(ex.eigenvalues < -cut_x) or np.any(ey.eigenvalues < -cut_y):
        raise DomainError("arguments must be PSD")
    ker = ey.eigenvalues <= cut_y
    if np.any(ker):
        V0 = ey.vectors[:, ker]
        mass = np.real(np.einsum("ij,jk,ki->i", V0.conj().T, X, V0))
        worst = int(np.argmax(mass))
        if mass[worst] > cut_x:
            raise DomainError(
                "kernel inclusion violated: X has weight "
                f"{mass[worst]:.3e} on the Y-eigenvector with eigenvalue "
                f"{ey.eigenvalues[ker][worst]:.3e}")
    # tr[X log X] over the support of X
    lx = ex.eigenvalues
    pos = lx > cut_x
    t1 = float(np.sum(lx[pos] * np.log(lx[pos])))
    # tr[X log Y] over the support of Y
    sup = ~ker
    Vs = ey.vectors[:, sup]
    diag = np.real(np.einsum("ij,jk,ki->i", Vs.conj().T, X, Vs))
    t2 = float(np.dot(diag, np.log(ey.eigenvalues[sup])))
    return t1 - t2


def classical_relative_entropy(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    return float(np.sum(x * (np.log(x) - np.log(y))))


# ---------------------------------------------------------------------------
# derivative operators of spectral functions
# ---------------------------------------------------------------------------

class EigCache:
    """Eigendecomposition of one Hermitian matrix plus cached DD tables.

    The workhorse behind barrier gradients and Hessian applies.
    """

    def __init__(self, X: np.ndarray):
        self.X = np.asarray(X)
        e = eigh(self.X)
        self.lam = e.eigenvalues
        self.U = e.vectors
        self._dd = {}

    @property
    def n(self) -> int:
        return self.lam.size

    def dd(self, key: str) -> np.ndarray:
        """Cached divided-difference tables; key e.g. 'log1', 'log2', 'dlog1'."""
        if key not in self._dd:
            kernel, order = key[:-1], int(key[-1])
            self._dd[key] = divided_differences(kernel, self.lam, order)
        return self._dd[key]

    def conj_in(self, H: np.ndarray) -> np.ndarray:
        return self.U.conj().T @ H @ self.U

    def conj_out(self, K: np.ndarray) -> np.ndarray:
        return self.U @ K @ self.U.conj().T

    def fn(self, kernel: str) -> np.ndarray:
        """f(X) for a scalar kernel, from the cached decomposition."""
        _require_positive(self.lam, kernel)
        vals = _KERNELS[kernel][0](self.lam)
        return hermitize((self.U * vals) @ self.U.conj().T)

    def apply_table(self, table: np.ndarray, H: np.ndarray) -> np.ndarray:
        """U [table o (U^dag H U)] U^dag."""
        return self.conj_out(table * self.conj_in(H))

    def apply_table_batch(self, table: np.ndarray, V: np.ndarray) -> np.ndarray:
        """apply_table over svec columns; V is (d,) or (d, k)."""
        one = V.ndim == 1
        Xs = batch_smat(V[:, None] if one else V)
        Ud = self.U.conj().T
        Ht = np.einsum("ab,kbc,cd->kad", Ud, Xs, self.U)
        out = np.einsum("ab,kbc,cd->kad", self.U, table * Ht, Ud)
        W = batch_svec(out)
        return W[:, 0] if one else W

    def dlog(self, H: np.ndarray) -> np.ndarray:
        """Frechet derivative of the matrix log at X in direction H."""
        return self.apply_table(self.dd("log1"), H)

    def weighted_hess_apply(self, Ct: np.ndarray, f2: np.ndarray,
                            H: np.ndarray) -> np.ndarray:
        """Hessian of tr[C f(X)] applied to H.

        `Ct` is C in the eigenbasis and `f2` the second-DD tensor of f.
        """
        Ht = self.conj_in(H)
        K = np.einsum("ijk,ik,kj->ij", f2, Ct, Ht)
        K += np.einsum("ijk,ik,kj->ij", f2, Ht, Ct)
        return self.conj_out(K)

    def table_matrix(self, table: np.ndarray) -> np.ndarray:
        """svec matrix of H -> U [table o (U^dag H U)] U^dag."""
        UU = np.kron(self.U.conj(), self.U)
        M = (UU * table.reshape(-1, order="F")) @ UU.conj().T
        return operator_to_svec_matrix(M)

    def weighted_hess_matrix(self, Ct: np.ndarray, f2: np.ndarray) -> np.ndarray:
        """svec matrix of the weighted Hessian operator."""
        n = self.n
        eye = np.eye(n)
        # coefficient of Htilde[a,b] in output entry (i,j), eigen coordinates:
        # f2[i,j,a] Ct[i,a] delta_jb + f2[i,j,b] Ct[b,j] delta_ia
        arr = np.einsum("ija,ia,jb->ijab", f2, Ct, eye)
        arr = arr + np.einsum("ijb,bj,ia->ijab", f2, Ct, eye)
        M = arr.transpose(1, 0, 3, 2).reshape(n * n, n * n)
        UU = np.kron(self.U.conj(), self.U)
        return operator_to_svec_matrix(UU @ M @ UU.conj().T)


def trace_spectral_derivatives(X: np.ndarray, kernel: str, H: np.ndarray):
    """Derivatives of g(X) = tr[f(X)]: (grad, hess[H], hess^{-1}[H])."""
    c = EigCache(X)
    _require_positive(c.lam, kernel)
    grad = hermitize((c.U * _KERNELS[kernel][1](c.lam)) @ c.U.conj().T)
    tbl = _derivative_dd1(kernel, c.lam)
    hessH = c.apply_table(tbl, H)
    scale = np.abs(tbl).max()
    if np.abs(tbl).min() <= 1e-300 * max(1.0, scale):
        raise SingularityError("divided-difference table has a zero entry")
    invH = c.apply_table(1.0 / tbl, H)
    return grad, hessH, invH


def weighted_trace_spectral_derivatives(X: np.ndarray, C: np.ndarray,
                                        kernel: str, H: np.ndarray):
    """Derivatives of h(X) = tr[C f(X)]: (grad, hess[H])."""
    c = EigCache(X)
    _require_positive(c.lam, kernel)
    Ct = c.conj_in(C)
    grad = hermitize(c.conj_out(divided_differences(kernel, c.lam, 1) * Ct))
    f2 = divided_differences(kernel, c.lam, 2)
    hessH = hermitize(c.weighted_hess_apply(Ct, f2, H))
    return grad, hessH


def logdet_hessian_solve(X: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Inverse of the log-det Hessian map: returns -X H X (X must be PD)."""
    X = np.asarray(X)
    try:
        np.linalg.cholesky(X)
    except np.linalg.LinAlgError as exc:
        raise DomainError("matrix is not positive definite") from exc
    return -(X @ H @ X)


# ---------------------------------------------------------------------------
# partial traces
# ---------------------------------------------------------------------------

def partial_trace(X: np.ndarray, side: int, n: int, m: int) -> np.ndarray:
    """Partial trace over factor `side` (1 or 2) of H^n (x) H^m."""
    X = np.asarray(X)
    if X.shape != (n * m, n * m):
        raise DimensionError(f"expected a {n*m}x{n*m} matrix, got {X.shape}")
    Xr = X.reshape(n, m, n, m)
    if side == 1:
        return np.einsum("iaib->ab", Xr)
    if side == 2:
        return np.einsum("iaja->ij", Xr)
    raise ValueError("side must be 1 or 2")


def kron_identity(Y: np.ndarray, side: int, n: int, m: int) -> np.ndarray:
    """Adjoint of the partial trace: I_n (x) Y (side=1) or X (x) I_m (side=2)."""
    if side == 1:
        if Y.shape != (m, m):
            raise DimensionError("dimension mismatch for I (x) Y")
        return np.kron(np.eye(n), Y)
    if side == 2:
        if Y.shape != (n, n):
            raise DimensionError("dimension mismatch for X (x) I")
        return np.kron(Y, np.eye(m))
    raise ValueError("side must be 1 or 2")


# ---------------------------------------------------------------------------
# low-rank solvers (matrix inversion lemma)
# ---------------------------------------------------------------------------

def _lu_solve_checked(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        lu, piv = sla.lu_factor(M)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularityError("Schur system is singular") from exc
    diag = np.abs(np.diag(lu))
    if diag.min() <= 1e-14 * max(1.0, diag.max()):
        raise SingularityError("Schur system is singular to working precision")
    return sla.lu_solve((lu, piv), rhs)


def low_rank_solve(mode: str, solve_a, factors, rhs: np.ndarray) -> np.ndarray:
    """Solve a low-rank-perturbed system through a small Schur complement.

    mode='nonsym': factors (U, B), solves (A - U B U^T) x = rhs through the
        r x r system I - B U^T A^{-1} U.
    mode='sym':    factors (U, B) or (U, B, B_inv) with B symmetric PD, solves
        (A - U B U^T) x = rhs through the Cholesky-factored B^{-1} - U^T A^{-1} U.
    mode='block':  factors (U, B, C), solves
        (A + U B^T + B U^T - U C U^T) x = rhs through the 2r x 2r system of the
        block-elimination identity.

    `solve_a` must accept vectors and matrices (column-wise solves with A).
    """
    rhs = np.asarray(rhs, dtype=float)
    t = solve_a(rhs)
    if mode == "nonsym":
        U, B = factors
        if U is None or U.shape[1] == 0:
            return t
        AU = solve_a(U)
        r = U.shape[1]
        small = np.eye(r) - B @ (U.T @ AU)
        w = _lu_solve_checked(small, B @ (U.T @ t))
        return t + AU @ w
    if mode == "sym":
        if len(factors) == 3:
            U, B, Binv = factors
        else:
            U, B = factors
            Binv = None
        if U is None or U.shape[1] == 0:
            return t
        AU = solve_a(U)
        if Binv is None:
            try:
                Binv = np.linalg.inv(B)
            except np.linalg.LinAlgError as exc:
                raise SingularityError("B block is singular") from exc
        S = Binv - U.T @ AU
        try:
            cho = sla.cho_factor((S + S.T) / 2)
        except np.linalg.LinAlgError as exc:
            raise SingularityError("Schur complement is not positive definite") from exc
        w = sla.cho_solve(cho, U.T @ t)
        return t + AU @ w
    if mode == "block":
        U, B, C = factors
        if U is None or U.shape[1] == 0:
            return t
        r = U.shape[1]
        AB = solve_a(B)
        AU = solve_a(U)
        S = np.zeros((2 * r, 2 * r))
        S[:r, :r] = C + B.T @ AB
        S[:r, r:] = np.eye(r) + B.T @ AU
        S[r:, :r] = np.eye(r) + U.T @ AB
        S[r:, r:] = U.T @ AU
        q = np.concatenate([B.T @ t, U.T @ t])
        w = _lu_solve_checked(S, q)
        return t - AB @ w[:r] - AU @ w[r:]
    raise ValueError(f"unknown mode '{mode}'")


# ---------------------------------------------------------------------------
# dense Hessian assembly
# ---------------------------------------------------------------------------

def memory_guard_dim() -> int:
    return int(os.environ.get("QREP_MEMORY_GUARD_DIM", "4096"))


def check_dense_dim(dim: int) -> None:
    guard = memory_guard_dim()
    if dim > guard:
        raise MemoryGuardError(
            f"dense Hessian of dimension {dim} exceeds the memory guard "
            f"({guard}); raise QREP_MEMORY_GUARD_DIM to override")


def build_hessian_matrix(hess_apply, dim: int) -> np.ndarray:
    """Assemble a self-adjoint operator column-by-column over the svec basis."""
    check_dense_dim(dim)
    M = np.empty((dim, dim))
    e = np.zeros(dim)
    for k in range(dim):
        e[k] = 1.0
        M[:, k] = hess_apply(e)
        e[k] = 0.0
    return (M + M.T) / 2
