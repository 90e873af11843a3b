"""Cone oracles: barriers, gradients, Hessian applies, and inverse-Hessian
solves for the cones the solver optimizes over.

Every epigraph-type cone shares the same top-level elimination: writing the
barrier as -log(zeta) + (body barrier) with zeta = t - phi(body), an inverse
Hessian solve reduces to one linear solve with

    M = zeta^{-1} * phi'' + (body barrier Hessian),

and each cone supplies a strategy for that solve (dense build-and-factor, or
one of the Schur-complement pipelines).
"""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from . import linalg as la
from . import maps as mp
from . import structure as st
from .errors import DomainError, InteriorityError

EPS_INT_REL = 1e-12


def _eps_int(v: np.ndarray) -> float:
    return EPS_INT_REL * (1.0 + float(np.linalg.norm(v)))


class ConeOracle:
    """Interface shared by all cones; a stateful, single-writer object."""

    dim: int
    nu: float
    name: str = "cone"

    def init_point(self) -> np.ndarray:
        raise NotImplementedError

    def set_point(self, v: np.ndarray) -> bool:
        """Cache the point; True iff strictly interior."""
        raise NotImplementedError

    def barrier(self) -> float:
        raise NotImplementedError

    def grad(self) -> np.ndarray:
        raise NotImplementedError

    def hess_apply(self, h: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inv_hess_solve(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def freeze(self) -> None:
        """Build all factorizations now (enables read-only concurrent solves)."""
        self.inv_hess_solve(np.zeros(self.dim))

    def random_interior(self, rng: np.random.Generator, spread: float = 0.25) -> np.ndarray:
        raise NotImplementedError

    def _require_ok(self):
        if not getattr(self, "_ok", False):
            raise RuntimeError(f"{self.name}: no feasible point set")


def _perturbed_identity(rng, n, spread):
    R = la.random_hermitian(rng, n)
    nrm = np.linalg.norm(R, 2)
    X = np.eye(n) + (spread / max(nrm, 1e-12)) * R
    return X * float(np.exp(rng.uniform(-0.3, 0.3)))


# ---------------------------------------------------------------------------
# simple cones
# ---------------------------------------------------------------------------

class NonnegativeOrthantCone(ConeOracle):
    name = "nonneg"

    def __init__(self, n: int):
        self.dim = n
        self.nu = float(n)
        self._ok = False

    def init_point(self):
        return np.ones(self.dim)

    def set_point(self, v):
        self._ok = False
        v = np.asarray(v, float)
        if v.size != self.dim:
            raise la.DimensionError("point has wrong length")
        if np.min(v, initial=np.inf) <= _eps_int(v):
            return False
        self._x = v.copy()
        self._v = self._x
        self._ok = True
        return True

    def barrier(self):
        self._require_ok()
        return float(-np.sum(np.log(self._x)))

    def grad(self):
        self._require_ok()
        return -1.0 / self._x

    def hess_apply(self, h):
        self._require_ok()
        return h / self._x**2

    def inv_hess_solve(self, r):
        self._require_ok()
        return r * self._x**2

    def random_interior(self, rng, spread=0.25):
        return np.exp(rng.uniform(-spread, spread, self.dim))


class PSDCone(ConeOracle):
    name = "psd"

    def __init__(self, n: int):
        self.n = n
        self.dim = la.svec_dim(n)
        self.nu = float(n)
        self._ok = False

    def init_point(self):
        return la.svec(np.eye(self.n))

    def set_point(self, v):
        self._ok = False
        v = np.asarray(v, float)
        X = la.smat(v)
        e = la.EigCache(X)
        if e.lam[-1] <= _eps_int(v):
            return False
        self._e = e
        self._v = v.copy()
        self._ok = True
        return True

    def barrier(self):
        self._require_ok()
        return float(-np.sum(np.log(self._e.lam)))

    def grad(self):
        self._require_ok()
        e = self._e
        return -la.svec((e.U / e.lam) @ e.U.conj().T)

    def hess_apply(self, h):
        self._require_ok()
        e = self._e
        return e.apply_table_batch(1.0 / np.outer(e.lam, e.lam), h)

    def inv_hess_solve(self, r):
        self._require_ok()
        e = self._e
        return e.apply_table_batch(np.outer(e.lam, e.lam), r)

    def random_interior(self, rng, spread=0.25):
        return la.svec(_perturbed_identity(rng, self.n, spread))


# ---------------------------------------------------------------------------
# epigraph machinery
# ---------------------------------------------------------------------------

class _EpigraphCone(ConeOracle):
    """Barrier -log(t - phi(body)) + body barrier, with the标准 t-elimination."""

    def set_point(self, v):
        self._ok = False
        self._m_cache = None
        v = np.asarray(v, float)
        if v.size != self.dim:
            raise la.DimensionError("point has wrong length")
        eps = _eps_int(v)
        if not self._set_body(v[1:], eps):
            return False
        phi = self._phi()
        zeta = v[0] - phi
        if not zeta > eps:
            return False
        self._v = v.copy()
        self._zeta = zeta
        self._pg = self._phi_grad()
        self._ok = True
        return True

    def barrier(self):
        self._require_ok()
        return float(-np.log(self._zeta) + self._body_barrier())

    def grad(self):
        self._require_ok()
        g = np.empty(self.dim)
        g[0] = -1.0 / self._zeta
        g[1:] = self._pg / self._zeta + self._body_grad()
        return g

    def hess_apply(self, h):
        self._require_ok()
        h = np.asarray(h, float)
        s, hb = h[0], h[1:]
        z, w = self._zeta, self._pg
        a = (s - w @ hb) / z**2
        out = np.empty(self.dim)
        out[0] = a
        out[1:] = -a * w + self._phi_hess(hb) / z + self._body_hess(hb)
        return out

    def inv_hess_solve(self, r):
        self._require_ok()
        r = np.asarray(r, float)
        u, V = r[0], r[1:]
        H = self._m_solve(V + u * self._pg)
        s = self._zeta**2 * u + self._pg @ H
        return np.concatenate([[s], H])

    # -- subclass hooks -----------------------------------------------------
    def _set_body(self, w, eps) -> bool:
        raise NotImplementedError

    def _phi(self) -> float:
        raise NotImplementedError

    def _phi_grad(self) -> np.ndarray:
        raise NotImplementedError

    def _phi_hess(self, hb: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _body_barrier(self) -> float:
        raise NotImplementedError

    def _body_grad(self) -> np.ndarray:
        raise NotImplementedError

    def _body_hess(self, hb: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- M solve ------------------------------------------------------------
    def _m_apply(self, hb):
        return self._phi_hess(hb) / self._zeta + self._body_hess(hb)

    def _m_matrix(self) -> np.ndarray:
        la.check_dense_dim(self.dim - 1)
        return la.build_hessian_matrix(self._m_apply, self.dim - 1)

    def _m_solve(self, rhs):
        if self._m_cache is None:
            M = self._m_matrix()
            try:
                self._m_cache = sla.cho_factor(M)
            except np.linalg.LinAlgError as exc:
                raise InteriorityError("barrier Hessian lost positive "
                                       "definiteness (point too close to the "
                                       "boundary)") from exc
        return sla.cho_solve(self._m_cache, rhs)


class _XBodyEpigraph(_EpigraphCone):
    """Epigraph cones whose body is a single Hermitian matrix."""

    n: int

    def _set_body(self, w, eps):
        X = la.smat(w)
        e = la.EigCache(X)
        if e.lam[-1] <= eps:
            return False
        self._ex = e
        return self._after_body(e, eps)

    def _after_body(self, e, eps) -> bool:
        return True

    def _body_barrier(self):
        return float(-np.sum(np.log(self._ex.lam)))

    def _body_grad(self):
        e = self._ex
        return -la.svec((e.U / e.lam) @ e.U.conj().T)

    def _body_hess(self, hb):
        e = self._ex
        return e.apply_table_batch(1.0 / np.outer(e.lam, e.lam), hb)

    def _psd_solve(self, V):
        """Congruence solve with -logdet Hessian: columns -> svec(X B X)."""
        X = self._ex.X
        one = V.ndim == 1
        Bs = la.batch_smat(V[:, None] if one else V)
        out = np.einsum("ab,kbc,cd->kad", X, Bs, X)
        W = la.batch_svec(out)
        return W[:, 0] if one else W

    def init_point(self):
        w = la.svec(np.eye(self.n))
        if not self._set_body(w, 0.0):
            raise RuntimeError("identity body unexpectedly infeasible")
        return np.concatenate([[self._phi() + 1.0], w])

    def random_interior(self, rng, spread=0.25):
        X = _perturbed_identity(rng, self.n, spread)
        w = la.svec(X)
        probe = np.concatenate([[0.0], w])
        self._set_body(w, _eps_int(probe))
        t = self._phi() + float(np.exp(rng.normal(0.0, 0.4)))
        return np.concatenate([[t], w])


class _EntropyTerms:
    """phi(X) = sum_k sign_k tr[Y_k log Y_k],  Y_k = map_k(X)."""

    def __init__(self, terms):
        self.terms = [(float(s), m) for s, m in terms]
        self._mats = None

    def matrices(self):
        if self._mats is None:
            self._mats = [m.matrix() for _, m in self.terms]
        return self._mats

    def set_point(self, X, eps) -> bool:
        self.caches = []
        for _, m in self.terms:
            c = la.EigCache(m(X))
            if c.lam[-1] <= 1e-13 * max(c.lam[0], 1e-300):
                return False
            self.caches.append(c)
        return True

    def value(self) -> float:
        return float(sum(s * np.sum(c.lam * np.log(c.lam))
                         for (s, _), c in zip(self.terms, self.caches)))

    def grad(self) -> np.ndarray:
        out = None
        for (s, m), c in zip(self.terms, self.caches):
            g = m.adjoint(c.fn("log") + np.eye(c.n))
            out = s * g if out is None else out + s * g
        return la.svec(la.hermitize(out))

    def hess_apply(self, hb: np.ndarray) -> np.ndarray:
        H = la.smat(hb)
        out = None
        for (s, m), c in zip(self.terms, self.caches):
            g = m.adjoint(c.dlog(m(H)))
            out = s * g if out is None else out + s * g
        return la.svec(la.hermitize(out))

    def hess_matrix(self, dim: int) -> np.ndarray:
        M = np.zeros((dim, dim))
        for (s, _), c, Mk in zip(self.terms, self.caches, self.matrices()):
            D = c.table_matrix(c.dd("log1"))
            M += s * (Mk.T @ D @ Mk)
        return M


class _PairEngine:
    """phi(X) = tr[A(X) log A(X)] - tr[C(X) log B(X)] for reduced maps.

    A and B map interior points to positive definite matrices; C is the
    cross map sharing B's output space.
    """

    def __init__(self, Amap, Bmap, Cmap):
        self.Amap, self.Bmap, self.Cmap = Amap, Bmap, Cmap
        self._mats = None

    def matrices(self):
        if self._mats is None:
            self._mats = (self.Amap.matrix(), self.Bmap.matrix(), self.Cmap.matrix())
        return self._mats

    def set_point(self, X, eps) -> bool:
        self.eA = la.EigCache(self.Amap(X))
        self.eB = la.EigCache(self.Bmap(X))
        if self.eA.lam[-1] <= 1e-13 * max(self.eA.lam[0], 1e-300):
            return False
        if self.eB.lam[-1] <= 1e-13 * max(self.eB.lam[0], 1e-300):
            return False
        self.CX = self.Cmap(X)
        self.CtB = self.eB.conj_in(self.CX)
        return True

    def value(self) -> float:
        t1 = float(np.sum(self.eA.lam * np.log(self.eA.lam)))
        t2 = float(np.real(np.trace(self.CX @ self.eB.fn("log"))))
        return t1 - t2

    def grad_matrix_form(self):
        gA = self.Amap.adjoint(self.eA.fn("log") + np.eye(self.eA.n))
        gC = self.Cmap.adjoint(self.eB.fn("log"))
        gB = self.Bmap.adjoint(self.eB.dlog(self.CX))
        return la.hermitize(gA - gC - gB)

    def hess_apply_matrix_form(self, H):
        out = self.Amap.adjoint(self.eA.dlog(self.Amap(H)))
        out = out - self.Cmap.adjoint(self.eB.dlog(self.Bmap(H)))
        out = out - self.Bmap.adjoint(self.eB.dlog(self.Cmap(H)))
        f2 = self.eB.dd("log2")
        out = out - self.Bmap.adjoint(
            self.eB.weighted_hess_apply(self.CtB, f2, self.Bmap(H)))
        return la.hermitize(out)

    def hess_matrix(self, dim: int) -> np.ndarray:
        Am, Bm, Cm = self.matrices()
        DA = self.eA.table_matrix(self.eA.dd("log1"))
        DB = self.eB.table_matrix(self.eB.dd("log1"))
        Q = self.eB.weighted_hess_matrix(self.CtB, self.eB.dd("log2"))
        cross = Cm.T @ DB @ Bm
        return Am.T @ DA @ Am - cross - cross.T - Bm.T @ Q @ Bm


def _reduced_pair(G: mp.LinearMap, H: mp.LinearMap) -> _PairEngine:
    """Facially reduce (G, H) and return the pair engine; checks the kernel
    inclusion G(X) << H(X) at the identity."""
    fg = st.facial_reduce(G)
    fh = st.facial_reduce(H)
    leak = np.linalg.norm((np.eye(H.n_out) - fh.isometry @ fh.isometry.conj().T)
                          @ fg.isometry)
    if leak > 1e-8:
        raise DomainError("kernel inclusion fails: the image of the first map "
                          "is not contained in the face of the second")
    red_g = (mp.CongruenceMap(fg.isometry.conj().T)
             if fg.rank < G.n_out else None)
    red_h = (mp.CongruenceMap(fh.isometry.conj().T)
             if fh.rank < H.n_out else None)
    Amap = G if red_g is None else G.then(red_g)
    Bmap = H if red_h is None else H.then(red_h)
    Cmap = G if red_h is None else G.then(red_h)
    eng = _PairEngine(Amap, Bmap, Cmap)
    eng.reduction_g, eng.reduction_h = fg, fh
    eng.red_g, eng.red_h = red_g, red_h
    return eng


# ---------------------------------------------------------------------------
# quantum relative entropy cone (full, two matrix arguments)
# ---------------------------------------------------------------------------

class QRECone(_EpigraphCone):
    """Epigraph of S(X||Y) over PD pairs; barrier parameter 2n+1."""

    name = "qre"

    def __init__(self, n: int):
        self.n = n
        self.dim = 1 + 2 * la.svec_dim(n)
        self.nu = float(2 * n + 1)
        self._ok = False

    def _split(self, w):
        d = la.svec_dim(self.n)
        return w[:d], w[d:]

    def _set_body(self, w, eps):
        wx, wy = self._split(w)
        self._exx = la.EigCache(la.smat(wx))
        self._eyy = la.EigCache(la.smat(wy))
        if self._exx.lam[-1] <= eps or self._eyy.lam[-1] <= eps:
            return False
        self._Xt_in_y = self._eyy.conj_in(self._exx.X)
        return True

    def _phi(self):
        ex, ey = self._exx, self._eyy
        t1 = float(np.sum(ex.lam * np.log(ex.lam)))
        t2 = float(np.real(np.trace(ex.X @ ey.fn("log"))))
        return t1 - t2

    def _phi_grad(self):
        ex, ey = self._exx, self._eyy
        gx = ex.fn("log") + np.eye(self.n) - ey.fn("log")
        gy = -ey.apply_table(ey.dd("log1"), ex.X)
        return np.concatenate([la.svec(la.hermitize(gx)), la.svec(la.hermitize(gy))])

    def _phi_hess(self, hb):
        ex, ey = self._exx, self._eyy
        hx, hy = self._split(hb)
        Hx, Hy = la.smat(hx), la.smat(hy)
        ox = ex.dlog(Hx) - ey.dlog(Hy)
        oy = -ey.dlog(Hx) - ey.weighted_hess_apply(self._Xt_in_y, ey.dd("log2"), Hy)
        return np.concatenate([la.svec(la.hermitize(ox)), la.svec(la.hermitize(oy))])

    def _body_barrier(self):
        return float(-np.sum(np.log(self._exx.lam)) - np.sum(np.log(self._eyy.lam)))

    def _body_grad(self):
        ex, ey = self._exx, self._eyy
        gx = -la.svec((ex.U / ex.lam) @ ex.U.conj().T)
        gy = -la.svec((ey.U / ey.lam) @ ey.U.conj().T)
        return np.concatenate([gx, gy])

    def _body_hess(self, hb):
        ex, ey = self._exx, self._eyy
        hx, hy = self._split(hb)
        ox = ex.apply_table_batch(1.0 / np.outer(ex.lam, ex.lam), hx)
        oy = ey.apply_table_batch(1.0 / np.outer(ey.lam, ey.lam), hy)
        return np.concatenate([ox, oy])

    def _m_matrix(self):
        d = la.svec_dim(self.n)
        la.check_dense_dim(2 * d)
        ex, ey = self._exx, self._eyy
        z = self._zeta
        DX = ex.table_matrix(ex.dd("log1"))
        DY = ey.table_matrix(ey.dd("log1"))
        Q = ey.weighted_hess_matrix(self._Xt_in_y, ey.dd("log2"))
        PX = ex.table_matrix(1.0 / np.outer(ex.lam, ex.lam))
        PY = ey.table_matrix(1.0 / np.outer(ey.lam, ey.lam))
        M = np.empty((2 * d, 2 * d))
        M[:d, :d] = DX / z + PX
        M[:d, d:] = -DY / z
        M[d:, :d] = M[:d, d:].T
        M[d:, d:] = -Q / z + PY
        return M

    def init_point(self):
        v = np.zeros(self.dim)
        v[0] = 1.0
        d = la.svec_dim(self.n)
        v[1:1 + d] = la.svec(np.eye(self.n))
        v[1 + d:] = la.svec(np.eye(self.n))
        return v

    def random_interior(self, rng, spread=0.25):
        X = _perturbed_identity(rng, self.n, spread)
        Y = _perturbed_identity(rng, self.n, spread)
        t = la.quantum_relative_entropy(X, Y) + float(np.exp(rng.normal(0.0, 0.4)))
        return np.concatenate([[t], la.svec(X), la.svec(Y)])


# ---------------------------------------------------------------------------
# composed quantum relative entropy cone K^{G,H}
# ---------------------------------------------------------------------------

class ComposedQRECone(_XBodyEpigraph):
    """Epigraph of X -> S(G(X)||H(X)) with -logdet X; barrier parameter n+1.

    Strategies:
      'dense'        build and Cholesky the full reduced Hessian
      'block'        same-partition block decomposition of G and H
      'low-rank'     G = G2 o G1, H = H2 o H1 through small spaces (nonsym MIL)
      'id-low-rank'  G identity, H = H2 o H1 (block-elimination MIL)
      'diff-entropy' declared difference-of-entropies terms
    """

    name = "composed_qre"

    def __init__(self, G, H, strategy="dense", lowrank_factors=None,
                 block_sizes=None, entropy_terms=None):
        self.n = G.n_in
        self.dim = 1 + la.svec_dim(self.n)
        self.nu = float(self.n + 1)
        self.G, self.H = G, H
        self.strategy = strategy
        self._ok = False
        if strategy in ("dense", "low-rank", "id-low-rank"):
            self._pairs = [_reduced_pair(G, H)]
        elif strategy == "block":
            sizes = list(block_sizes)
            bsG = st.decompose_blocks(G, sizes)
            bsH = st.decompose_blocks(H, sizes)
            self._pairs = [_reduced_pair(g_i, h_i)
                           for g_i, h_i in zip(bsG.extractors, bsH.extractors)]
        elif strategy == "diff-entropy":
            reduced = []
            for s, m in entropy_terms:
                fr = st.facial_reduce(m)
                reduced.append((s, fr.reduced_map()))
            self._terms = _EntropyTerms(reduced)
            self._pairs = None
        else:
            raise ValueError(f"unknown strategy '{strategy}'")
        if strategy == "low-rank":
            G1, G2, H1, H2 = lowrank_factors
            red_g = self._pairs[0].red_g
            red_h = self._pairs[0].red_h
            G2A = G2 if red_g is None else G2.then(red_g)
            G2C = G2 if red_h is None else G2.then(red_h)
            H2B = H2 if red_h is None else H2.then(red_h)
            self._lr = (G1, G2A, G2C, H1, H2B)
        if strategy == "id-low-rank":
            if not isinstance(G, mp.IdentityMap):
                raise ValueError("id-low-rank strategy requires an identity G")
            H1, H2 = lowrank_factors
            self._ilr = (H1, H2)

    def _after_body(self, e, eps):
        if self._pairs is not None:
            return all(p.set_point(e.X, eps) for p in self._pairs)
        return self._terms.set_point(e.X, eps)

    def _phi(self):
        if self._pairs is not None:
            return float(sum(p.value() for p in self._pairs))
        return self._terms.value()

    def _phi_grad(self):
        if self._pairs is not None:
            out = sum(p.grad_matrix_form() for p in self._pairs)
            return la.svec(out)
        return self._terms.grad()

    def _phi_hess(self, hb):
        if self._pairs is not None:
            H = la.smat(hb)
            out = sum(p.hess_apply_matrix_form(H) for p in self._pairs)
            return la.svec(out)
        return self._terms.hess_apply(hb)

    def _m_matrix(self):
        d = self.dim - 1
        la.check_dense_dim(d)
        e = self._ex
        P = e.table_matrix(1.0 / np.outer(e.lam, e.lam))
        if self._pairs is not None:
            M = sum(p.hess_matrix(d) for p in self._pairs) / self._zeta + P
        else:
            M = self._terms.hess_matrix(d) / self._zeta + P
        return M

    def _m_solve(self, rhs):
        if self.strategy == "low-rank":
            return self._m_solve_lowrank(rhs)
        if self.strategy == "id-low-rank":
            return self._m_solve_idlowrank(rhs)
        return super()._m_solve(rhs)

    def _m_solve_lowrank(self, rhs):
        if self._m_cache is None:
            pair = self._pairs[0]
            G1, G2A, G2C, H1, H2B = self._lr
            z = self._zeta
            DA = pair.eA.table_matrix(pair.eA.dd("log1"))
            DB = pair.eB.table_matrix(pair.eB.dd("log1"))
            Q = pair.eB.weighted_hess_matrix(pair.CtB, pair.eB.dd("log2"))
            A2, C2, B2 = G2A.matrix(), G2C.matrix(), H2B.matrix()
            rg2, rh2 = A2.shape[1], B2.shape[1]
            mid = np.empty((rg2 + rh2, rg2 + rh2))
            mid[:rg2, :rg2] = A2.T @ DA @ A2
            mid[:rg2, rg2:] = -C2.T @ DB @ B2
            mid[rg2:, :rg2] = mid[:rg2, rg2:].T
            mid[rg2:, rg2:] = -B2.T @ Q @ B2
            U = np.hstack([G1.matrix().T, H1.matrix().T])
            pipe = st.SchurPipeline("nonsym", self._psd_solve, U=U, B=-mid / z)
            self._m_cache = pipe
        return self._m_cache.solve(rhs)

    def _m_solve_idlowrank(self, rhs):
        if self._m_cache is None:
            pair = self._pairs[0]
            H1, H2 = self._ilr
            e, eB = self._ex, pair.eB
            z = self._zeta
            theta = e.dd("log1") / z + 1.0 / np.outer(e.lam, e.lam)
            base = lambda V: e.apply_table_batch(1.0 / theta, V)
            # columns of Dlog_{H(X)} o H2 over the small-space basis
            r2 = la.svec_dim(H2.n_in)
            cols = np.empty((la.svec_dim(self.n), r2))
            eye = np.eye(r2)
            for k in range(r2):
                cols[:, k] = la.svec(eB.dlog(H2(la.smat(eye[:, k]))))
            Bmat = -cols / z
            # C = zeta^{-1} H2^T Q H2 on the small space
            Q = eB.weighted_hess_matrix(pair.CtB, eB.dd("log2"))
            H2m = H2.matrix()
            Cmat = (H2m.T @ Q @ H2m) / z
            U = H1.matrix().T
            pipe = st.SchurPipeline("block", base, U=U, B=Bmat, C=Cmat)
            self._m_cache = pipe
        return self._m_cache.solve(rhs)


# ---------------------------------------------------------------------------
# quantum conditional entropy cone
# ---------------------------------------------------------------------------

class QCECone(_XBodyEpigraph):
    """Epigraph of S(X || I (x) tr_1 X) on H^{nm}; barrier parameter nm+1.

    The structured inverse-Hessian solve uses the symmetric matrix inversion
    lemma on a rank-m^2 perturbation of an easily inverted spectral operator.
    """

    name = "qce"

    def __init__(self, n: int, m: int, strategy: str = "mil"):
        self.nf, self.mf = n, m
        self.n = n * m
        self.dim = 1 + la.svec_dim(self.n)
        self.nu = float(self.n + 1)
        self.strategy = strategy
        self._pt = mp.PartialTraceMap(1, n, m)
        self._terms = _EntropyTerms([(1.0, mp.IdentityMap(self.n)), (-1.0, self._pt)])
        self._kron_mat = None
        self._ok = False

    def _after_body(self, e, eps):
        return self._terms.set_point(e.X, eps)

    def _phi(self):
        return self._terms.value()

    def _phi_grad(self):
        return self._terms.grad()

    def _phi_hess(self, hb):
        return self._terms.hess_apply(hb)

    def _m_matrix(self):
        d = self.dim - 1
        la.check_dense_dim(d)
        e = self._ex
        P = e.table_matrix(1.0 / np.outer(e.lam, e.lam))
        return self._terms.hess_matrix(d) / self._zeta + P

    def _m_solve(self, rhs):
        if self.strategy != "mil":
            return super()._m_solve(rhs)
        if self._m_cache is None:
            e = self._ex
            eT = self._terms.caches[1]
            z = self._zeta
            theta = e.dd("log1") / z + 1.0 / np.outer(e.lam, e.lam)
            base = lambda V: e.apply_table_batch(1.0 / theta, V)
            if self._kron_mat is None:
                self._kron_mat = mp.KronIdentityMap(1, self.nf, self.mf).matrix()
            B = eT.table_matrix(eT.dd("log1")) / z
            Binv = eT.table_matrix(1.0 / eT.dd("log1")) * z
            pipe = st.SchurPipeline("sym", base, U=self._kron_mat, B=B, Binv=Binv)
            self._m_cache = pipe
        return self._m_cache.solve(rhs)


# ---------------------------------------------------------------------------
# quantum key distribution cone K^{G, Z o G}
# ---------------------------------------------------------------------------

def dprbb84_reduced_maps(c: int, p: float):
    """Reduced Kraus/pinching factors of the discrete-phase-randomized BB84
    protocol: two 4c x 12c Kraus blocks and two 2c x 4c pinching extractors."""
    top = np.zeros((2, 4))
    top[0, 0] = top[1, 1] = 1.0
    bot = np.zeros((2, 4))
    bot[0, 2] = bot[1, 3] = 1.0
    pad = np.zeros((2, 3))
    pad[0, 0] = pad[1, 1] = 1.0
    K1 = np.sqrt(p) * np.kron(sla.block_diag(*([top] * c)), pad)
    K2 = np.sqrt(1.0 - p) * np.kron(sla.block_diag(*([bot] * c)), pad)
    row0 = np.zeros((1, 2))
    row0[0, 0] = 1.0
    row1 = np.zeros((1, 2))
    row1[0, 1] = 1.0
    Z1 = np.kron(sla.block_diag(*([row0] * c)), np.eye(2))
    Z2 = np.kron(sla.block_diag(*([row1] * c)), np.eye(2))
    return K1, K2, Z1, Z2


def dprbb84_full_kraus(c: int, p: float):
    """The protocol's full Kraus operators mapping H^{12c} into H^{48c}."""
    e = np.eye(2)
    pis = [np.zeros((4, 4)) for _ in range(4)]
    for i in range(4):
        pis[i][i, i] = 1.0
    keep = np.diag([1.0, 1.0, 0.0])
    K1 = np.sqrt(p) * np.kron(
        np.kron(e[:, [0]], sla.block_diag(*([pis[0]] * c)))
        + np.kron(e[:, [1]], sla.block_diag(*([pis[1]] * c))),
        np.kron(keep, e[:, [0]]))
    K2 = np.sqrt(1.0 - p) * np.kron(
        np.kron(e[:, [0]], sla.block_diag(*([pis[2]] * c)))
        + np.kron(e[:, [1]], sla.block_diag(*([pis[3]] * c))),
        np.kron(keep, e[:, [1]]))
    return K1, K2


class QKDCone(_XBodyEpigraph):
    """K^{G, Z o G} for a Kraus map G and a pinching Z.

    Generic protocols use the facially reduced difference-of-entropies terms;
    the dprBB84 protocol additionally supports a matrix-inversion-lemma solve
    that treats the Hessian as a low-rank perturbation of the log-det part.
    """

    name = "qkd"

    def __init__(self, terms, n: int, strategy: str = "dense", dpr=None):
        self.n = n
        self.dim = 1 + la.svec_dim(n)
        self.nu = float(n + 1)
        self.strategy = strategy
        self._terms = _EntropyTerms(terms)
        self._dpr = dpr  # (K1hat, K2hat, Z1hat, Z2hat) for the MIL route
        if strategy == "mil" and dpr is None:
            raise ValueError("the MIL strategy needs the dprBB84 factors")
        self._ok = False

    @classmethod
    def dprbb84(cls, c: int, p: float = 0.5, strategy: str = "mil"):
        K1, K2, Z1, Z2 = dprbb84_reduced_maps(c, p)
        terms = []
        for K in (K1, K2):
            terms.append((1.0, mp.CongruenceMap(K)))
            terms.append((-1.0, mp.CongruenceMap(Z1 @ K)))
            terms.append((-1.0, mp.CongruenceMap(Z2 @ K)))
        return cls(terms, 12 * c, strategy=strategy, dpr=(K1, K2, Z1, Z2))

    @classmethod
    def generic(cls, kraus_ops, pinch_sizes, strategy: str = "dense"):
        """Facially reduce G and each pinching block of Z o G into terms."""
        G = mp.KrausMap(kraus_ops)
        n, m = G.n_in, G.n_out
        fg = st.facial_reduce(G)
        Vg = fg.isometry
        terms = [(1.0, mp.KrausMap([Vg.conj().T @ K for K in kraus_ops]))]
        offsets = np.concatenate([[0], np.cumsum(pinch_sizes)])
        if offsets[-1] != m:
            raise DomainError("pinching blocks must cover the image space")
        for a, b in zip(offsets[:-1], offsets[1:]):
            ops_i = [K[a:b, :] for K in kraus_ops]
            Gi = mp.KrausMap(ops_i)
            image = Gi(np.eye(n, dtype=complex))
            eig = la.eigh(image)
            keep = eig.eigenvalues > st.RANK_CUTOFF_REL * max(eig.eigenvalues[0], 1e-300)
            if not np.any(keep):
                continue
            Wi = eig.vectors[:, :int(np.count_nonzero(keep))]
            terms.append((-1.0, mp.KrausMap([Wi.conj().T @ K for K in ops_i])))
        return cls(terms, n, strategy=strategy)

    def _after_body(self, e, eps):
        return self._terms.set_point(e.X, eps)

    def _phi(self):
        return self._terms.value()

    def _phi_grad(self):
        return self._terms.grad()

    def _phi_hess(self, hb):
        return self._terms.hess_apply(hb)

    def _m_matrix(self):
        d = self.dim - 1
        la.check_dense_dim(d)
        e = self._ex
        P = e.table_matrix(1.0 / np.outer(e.lam, e.lam))
        return self._terms.hess_matrix(d) / self._zeta + P

    def _m_solve(self, rhs):
        if self.strategy != "mil":
            return super()._m_solve(rhs)
        if self._m_cache is None:
            self._m_cache = self._build_mil()
        AU, lu, B = self._m_cache
        R = self._psd_solve(rhs)
        q = B @ self._g_stack(R)
        w = sla.lu_solve(lu, q)
        return R + AU @ w

    def _g_stack(self, v):
        """[svec(G_1(smat v)); svec(G_2(smat v))] without large intermediates."""
        K1, K2, _, _ = self._dpr
        M = la.smat(v)
        return np.concatenate([la.svec(K1 @ M @ K1.conj().T),
                               la.svec(K2 @ M @ K2.conj().T)])

    def _build_mil(self):
        K1, K2, Z1, Z2 = self._dpr
        X = self._ex.X
        z = self._zeta
        ks = (K1, K2)
        # middle blocks M_i = Dlog_{G_i} - sum_j Z_j^T Dlog_{Z_j G_i} Z_j
        blocks = []
        for i, (s_g, c_g) in enumerate(zip(ks, self._terms.caches[0::3])):
            Mi = c_g.table_matrix(c_g.dd("log1"))
            for j, Zh in enumerate((Z1, Z2)):
                cz = self._terms.caches[3 * i + 1 + j]
                Zm = la.congruence_svec_matrix(Zh)
                Mi -= Zm.T @ cz.table_matrix(cz.dd("log1")) @ Zm
            blocks.append(Mi)
        B = -sla.block_diag(*blocks) / z
        # Schur pieces from principal-submatrix congruences Y_ij = K_i X K_j^dag
        d_i = la.svec_dim(ks[0].shape[0])
        UAU = np.empty((2 * d_i, 2 * d_i))
        for i in range(2):
            for j in range(i, 2):
                Yij = ks[i] @ X @ ks[j].conj().T
                S = la.congruence_svec_matrix(Yij)
                UAU[i * d_i:(i + 1) * d_i, j * d_i:(j + 1) * d_i] = S
                if j != i:
                    UAU[j * d_i:(j + 1) * d_i, i * d_i:(i + 1) * d_i] = S.T
        small = np.eye(2 * d_i) - B @ UAU
        lu = sla.lu_factor(small)
        # A^{-1} U = [cong(X K_1^dag) | cong(X K_2^dag)] columns
        AU = np.hstack([la.congruence_svec_matrix(X @ K.conj().T) for K in ks])
        return AU, lu, B


# ---------------------------------------------------------------------------
# quantum rate-distortion cone (entanglement-fidelity fixed-point subspace)
# ---------------------------------------------------------------------------

class QRDCone(_EpigraphCone):
    """Restriction of the conditional-entropy cone to the block-diagonal
    subspace parameterized by (y, Z); barrier parameter n^2 + 1."""

    name = "qrd"

    def __init__(self, n: int, strategy: str = "mil"):
        self.n = n
        self.n_pairs = n * n - n
        self.dim = 1 + self.n_pairs + la.svec_dim(n)
        self.nu = float(n * n + 1)
        self.strategy = strategy
        self.pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
        self._ok = False
        # constant matrix of the diagonal-sum map (y, Z) -> d
        d_body = self.n_pairs + la.svec_dim(n)
        Gh = np.zeros((n, d_body))
        for k, (i, j) in enumerate(self.pairs):
            Gh[j, k] = 1.0
        diag_slots = la._svec_layout(n)[0]
        for j in range(n):
            Gh[j, self.n_pairs + diag_slots[j]] = 1.0
        self._Gh = Gh

    def _split(self, w):
        return w[:self.n_pairs], w[self.n_pairs:]

    def _set_body(self, w, eps):
        y, wz = self._split(w)
        if np.min(y, initial=np.inf) <= eps:
            return False
        ez = la.EigCache(la.smat(wz))
        if ez.lam[-1] <= eps:
            return False
        self._y = y.copy()
        self._ez = ez
        self._d = self._Gh @ w
        if np.min(self._d) <= eps:
            return False
        return True

    def _phi(self):
        y, d = self._y, self._d
        lz = self._ez.lam
        return float(np.sum(y * np.log(y)) + np.sum(lz * np.log(lz))
                     - np.sum(d * np.log(d)))

    def _phi_grad(self):
        y, d = self._y, self._d
        gy = np.log(y) + 1.0
        gz = la.svec(self._ez.fn("log") + np.eye(self.n))
        g = np.concatenate([gy, gz])
        return g - self._Gh.T @ (np.log(d) + 1.0)

    def _phi_hess(self, hb):
        hy, hz = self._split(hb)
        dd = self._Gh @ hb
        oy = hy / self._y
        oz = la.svec(self._ez.dlog(la.smat(hz)))
        out = np.concatenate([oy, oz])
        return out - self._Gh.T @ (dd / self._d)

    def _body_barrier(self):
        return float(-np.sum(np.log(self._y)) - np.sum(np.log(self._ez.lam)))

    def _body_grad(self):
        ez = self._ez
        return np.concatenate([-1.0 / self._y,
                               -la.svec((ez.U / ez.lam) @ ez.U.conj().T)])

    def _body_hess(self, hb):
        hy, hz = self._split(hb)
        ez = self._ez
        return np.concatenate([hy / self._y**2,
                               ez.apply_table_batch(1.0 / np.outer(ez.lam, ez.lam), hz)])

    def _base_solve(self, V):
        """Inverse of the uncoupled part of M (diagonal on y, spectral on Z)."""
        z = self._zeta
        ay = 1.0 / (z * self._y) + 1.0 / self._y**2
        ez = self._ez
        theta = ez.dd("log1") / z + 1.0 / np.outer(ez.lam, ez.lam)
        one = V.ndim == 1
        Vm = V[:, None] if one else V
        out = np.empty_like(Vm)
        out[:self.n_pairs] = Vm[:self.n_pairs] / ay[:, None]
        out[self.n_pairs:] = ez.apply_table_batch(1.0 / theta, Vm[self.n_pairs:])
        return out[:, 0] if one else out

    def _m_solve(self, rhs):
        if self.strategy != "mil":
            return super()._m_solve(rhs)
        if self._m_cache is None:
            z = self._zeta
            B = np.diag(1.0 / (z * self._d))
            Binv = np.diag(z * self._d)
            pipe = st.SchurPipeline("sym", self._base_solve, U=self._Gh.T,
                                    B=B, Binv=Binv)
            self._m_cache = pipe
        return self._m_cache.solve(rhs)

    def init_point(self):
        n = self.n
        w = np.concatenate([np.ones(self.n_pairs), la.svec(np.eye(n))])
        self._set_body(w, 0.0)
        return np.concatenate([[self._phi() + 1.0], w])

    def random_interior(self, rng, spread=0.25):
        y = np.exp(rng.uniform(-spread, spread, self.n_pairs))
        Z = _perturbed_identity(rng, self.n, spread)
        w = np.concatenate([y, la.svec(Z)])
        self._set_body(w, 0.0)
        t = self._phi() + float(np.exp(rng.normal(0.0, 0.4)))
        return np.concatenate([[t], w])

    def embed(self, y: np.ndarray, Z: np.ndarray) -> np.ndarray:
        """The block-diagonal state in H^{n^2} represented by (y, Z)."""
        n = self.n
        X = np.zeros((n * n, n * n), dtype=complex)
        for k, (i, j) in enumerate(self.pairs):
            X[i * n + j, i * n + j] = y[k]
        for i in range(n):
            for j in range(n):
                X[i * n + i, j * n + j] = Z[i, j]
        return X


# ---------------------------------------------------------------------------
# quantum mutual information / coherent information cones
# ---------------------------------------------------------------------------

class QMICone(_XBodyEpigraph):
    """Epigraph of the negated, homogenized quantum mutual information of the
    channel with Stinespring isometry V; barrier parameter n+1."""

    name = "qmi"

    def __init__(self, V: np.ndarray, out_dim: int, env_dim: int):
        V = np.asarray(V, dtype=complex)
        if V.shape[0] != out_dim * env_dim:
            raise la.DimensionError("isometry rows must equal out_dim * env_dim")
        if np.linalg.norm(V.conj().T @ V - np.eye(V.shape[1])) > 1e-10:
            raise DomainError("V is not an isometry")
        self.V = V
        self.n = V.shape[1]
        self.dim = 1 + la.svec_dim(self.n)
        self.nu = float(self.n + 1)
        cong = mp.CongruenceMap(V)
        T1 = cong.then(mp.PartialTraceMap(1, out_dim, env_dim))
        T2 = cong.then(mp.PartialTraceMap(2, out_dim, env_dim))
        terms = [(1.0, mp.IdentityMap(self.n))]
        for sign, m in ((-1.0, T1), (1.0, T2), (-1.0, mp.TraceMap(self.n))):
            terms.append((sign, st.facial_reduce(m).reduced_map()))
        self._terms = _EntropyTerms(terms)
        self._ok = False

    def _after_body(self, e, eps):
        return self._terms.set_point(e.X, eps)

    def _phi(self):
        return self._terms.value()

    def _phi_grad(self):
        return self._terms.grad()

    def _phi_hess(self, hb):
        return self._terms.hess_apply(hb)

    def _m_matrix(self):
        d = self.dim - 1
        la.check_dense_dim(d)
        e = self._ex
        P = e.table_matrix(1.0 / np.outer(e.lam, e.lam))
        return self._terms.hess_matrix(d) / self._zeta + P


class QCICone(_XBodyEpigraph):
    """Epigraph of negated coherent information for a degradable channel,
    expressed through the degrading isometry W; barrier parameter n+1."""

    name = "qci"

    def __init__(self, V: np.ndarray, W: np.ndarray, out_dim: int, env_dim: int,
                 deg_env_dim: int):
        V = np.asarray(V, dtype=complex)
        W = np.asarray(W, dtype=complex)
        self.V, self.W = V, W
        self.n = V.shape[1]
        self.dim = 1 + la.svec_dim(self.n)
        self.nu = float(self.n + 1)
        if np.linalg.norm(W.conj().T @ W - np.eye(W.shape[1])) > 1e-10:
            raise DomainError("W is not an isometry")
        channel = mp.CongruenceMap(V).then(mp.PartialTraceMap(2, out_dim, env_dim))
        degraded = channel.then(mp.CongruenceMap(W)).then(
            mp.PartialTraceMap(2, env_dim, deg_env_dim))
        terms = [(1.0, st.facial_reduce(channel).reduced_map()),
                 (-1.0, st.facial_reduce(degraded).reduced_map())]
        self._terms = _EntropyTerms(terms)
        self.channel = channel
        self.degraded = degraded
        self._ok = False

    def _after_body(self, e, eps):
        return self._terms.set_point(e.X, eps)

    def _phi(self):
        return self._terms.value()

    def _phi_grad(self):
        return self._terms.grad()

    def _phi_hess(self, hb):
        return self._terms.hess_apply(hb)

    def _m_matrix(self):
        d = self.dim - 1
        la.check_dense_dim(d)
        e = self._ex
        P = e.table_matrix(1.0 / np.outer(e.lam, e.lam))
        return self._terms.hess_matrix(d) / self._zeta + P


# ---------------------------------------------------------------------------
# quantum entropy cone and classical relative entropy cone
# ---------------------------------------------------------------------------

class QuantumEntropyCone(_EpigraphCone):
    """Hypograph cone of homogenized quantum entropy: t >= -u S(X/u).

    Point layout (t, svec X, u); barrier parameter n + 2.
    """

    name = "qe"

    def __init__(self, n: int):
        self.n = n
        self.dim = 1 + la.svec_dim(n) + 1
        self.nu = float(n + 2)
        self._ok = False

    def _set_body(self, w, eps):
        self._u = float(w[-1])
        if self._u <= eps:
            return False
        e = la.EigCache(la.smat(w[:-1]))
        if e.lam[-1] <= eps:
            return False
        self._exq = e
        return True

    def _phi(self):
        lam = self._exq.lam
        return float(np.sum(lam * np.log(lam)) - np.sum(lam) * np.log(self._u))

    def _phi_grad(self):
        e = self._exq
        gX = e.fn("log") + (1.0 - np.log(self._u)) * np.eye(self.n)
        gu = -float(np.sum(e.lam)) / self._u
        return np.concatenate([la.svec(gX), [gu]])

    def _phi_hess(self, hb):
        e = self._exq
        H = la.smat(hb[:-1])
        k = hb[-1]
        oX = e.dlog(H) - (k / self._u) * np.eye(self.n)
        ou = -np.trace(H).real / self._u + np.sum(e.lam) * k / self._u**2
        return np.concatenate([la.svec(la.hermitize(oX)), [ou]])

    def _body_barrier(self):
        return float(-np.sum(np.log(self._exq.lam)) - np.log(self._u))

    def _body_grad(self):
        e = self._exq
        return np.concatenate([-la.svec((e.U / e.lam) @ e.U.conj().T),
                               [-1.0 / self._u]])

    def _body_hess(self, hb):
        e = self._exq
        oX = e.apply_table_batch(1.0 / np.outer(e.lam, e.lam), hb[:-1])
        return np.concatenate([oX, [hb[-1] / self._u**2]])

    def _m_solve(self, rhs):
        # eliminate the scalar slot against the spectral X block
        e = self._exq
        z, u = self._zeta, self._u
        theta = e.dd("log1") / z + 1.0 / np.outer(e.lam, e.lam)
        VX, vu = rhs[:-1], rhs[-1]
        sol0 = e.apply_table_batch(1.0 / theta, VX)
        eyev = la.svec(np.eye(self.n))
        sol1 = e.apply_table_batch(1.0 / theta, eyev)
        # w solves the scalar equation after substituting H = sol0 + w/(z u) sol1
        trX = float(np.sum(e.lam))
        alpha = trX / (z * u**2) + 1.0 / u**2
        a0 = -(eyev @ sol0) / (z * u)
        a1 = -(eyev @ sol1) / (z**2 * u**2)
        w = (vu - a0) / (alpha + a1)
        H = sol0 + (w / (z * u)) * sol1
        return np.concatenate([H, [w]])

    def init_point(self):
        v = np.zeros(self.dim)
        v[1:-1] = la.svec(np.eye(self.n))
        v[-1] = 1.0
        v[0] = 1.0  # phi(I, 1) = 0
        return v

    def random_interior(self, rng, spread=0.25):
        X = _perturbed_identity(rng, self.n, spread)
        u = float(np.exp(rng.uniform(-spread, spread)))
        w = np.concatenate([la.svec(X), [u]])
        self._set_body(w, 0.0)
        t = self._phi() + float(np.exp(rng.normal(0.0, 0.4)))
        return np.concatenate([[t], w])


class ClassicalRelEntropyCone(_EpigraphCone):
    """Epigraph of the Kullback-Leibler divergence; barrier parameter 2n+1."""

    name = "cre"

    def __init__(self, n: int):
        self.n = n
        self.dim = 1 + 2 * n
        self.nu = float(2 * n + 1)
        self._ok = False

    def _set_body(self, w, eps):
        x, y = w[:self.n], w[self.n:]
        if min(np.min(x, initial=np.inf), np.min(y, initial=np.inf)) <= eps:
            return False
        self._x, self._y = x.copy(), y.copy()
        return True

    def _phi(self):
        return float(np.sum(self._x * (np.log(self._x) - np.log(self._y))))

    def _phi_grad(self):
        x, y = self._x, self._y
        return np.concatenate([np.log(x) - np.log(y) + 1.0, -x / y])

    def _phi_hess(self, hb):
        x, y = self._x, self._y
        hx, hy = hb[:self.n], hb[self.n:]
        return np.concatenate([hx / x - hy / y, -hx / y + x * hy / y**2])

    def _body_barrier(self):
        return float(-np.sum(np.log(self._x)) - np.sum(np.log(self._y)))

    def _body_grad(self):
        return np.concatenate([-1.0 / self._x, -1.0 / self._y])

    def _body_hess(self, hb):
        x, y = self._x, self._y
        return np.concatenate([hb[:self.n] / x**2, hb[self.n:] / y**2])

    def _m_solve(self, rhs):
        # per-index 2x2 systems
        x, y, z = self._x, self._y, self._zeta
        a = 1.0 / (z * x) + 1.0 / x**2
        b = -1.0 / (z * y)
        c = x / (z * y**2) + 1.0 / y**2
        det = a * c - b * b
        rx, ry = rhs[:self.n], rhs[self.n:]
        return np.concatenate([(c * rx - b * ry) / det, (a * ry - b * rx) / det])

    def init_point(self):
        v = np.ones(self.dim)
        v[0] = 1.0  # phi(1, 1) = 0
        return v

    def random_interior(self, rng, spread=0.25):
        x = np.exp(rng.uniform(-spread, spread, self.n))
        y = np.exp(rng.uniform(-spread, spread, self.n))
        t = float(np.sum(x * np.log(x / y))) + float(np.exp(rng.normal(0.0, 0.4)))
        return np.concatenate([[t], x, y])


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def self_concordance_spot_check(cone: ConeOracle, trials: int, rng=None,
                                step: float = 1e-4) -> float:
    """Max sampled ratio |D^3F[h,h,h]| / (D^2F[h,h])^{3/2} at the current point.

    The third derivative is a central finite difference of D^2F[h,h] along h.
    Diagnostic only; the solver never calls this.
    """
    rng = rng or np.random.default_rng(0)
    cone._require_ok()
    v0 = cone._v.copy()
    worst = 0.0
    scale = 1.0 + np.linalg.norm(v0)
    for _ in range(trials):
        h = rng.standard_normal(cone.dim)
        h /= np.linalg.norm(h)
        q0 = float(h @ cone.hess_apply(h))
        d = step * scale
        if not cone.set_point(v0 + d * h):
            cone.set_point(v0)
            continue
        qp = float(h @ cone.hess_apply(h))
        if not cone.set_point(v0 - d * h):
            cone.set_point(v0)
            continue
        qm = float(h @ cone.hess_apply(h))
        cone.set_point(v0)
        third = (qp - qm) / (2 * d)
        worst = max(worst, abs(third) / max(q0, 1e-300) ** 1.5)
    return worst


def oracle_checks(cone: ConeOracle, rng=None, n_points: int = 3,
                  dense_reference: bool = True) -> dict:
    """Derivative/homogeneity/consistency battery; returns max errors per check."""
    rng = rng or np.random.default_rng(0)
    out = {"grad_fd": 0.0, "hess_fd": 0.0, "inv_roundtrip": 0.0,
           "homogeneity": 0.0, "euler_grad": 0.0, "euler_hess": 0.0}
    if dense_reference:
        out["dense_equiv"] = 0.0
    for k in range(n_points + 1):
        v = cone.init_point() if k == 0 else cone.random_interior(rng)
        assert cone.set_point(v), "interior point rejected"
        scale = 1.0 + np.linalg.norm(v)
        F0 = cone.barrier()
        g = cone.grad()
        # log-homogeneity
        for tau in (0.5, 2.0):
            cone.set_point(tau * v)
            err = abs(cone.barrier() - (F0 - cone.nu * np.log(tau)))
            out["homogeneity"] = max(out["homogeneity"], err / max(1.0, abs(F0)))
        cone.set_point(v)
        # Euler identities
        out["euler_grad"] = max(out["euler_grad"],
                                abs(g @ v + cone.nu) / max(1.0, cone.nu))
        hv = cone.hess_apply(v)
        out["euler_hess"] = max(out["euler_hess"],
                                np.linalg.norm(hv + g) / max(1.0, np.linalg.norm(g)))
        # gradient vs central differences of the barrier
        for _ in range(4):
            h = rng.standard_normal(cone.dim)
            h /= np.linalg.norm(h)
            d = 1e-6 * scale
            if not cone.set_point(v + d * h):
                cone.set_point(v)
                continue
            Fp = cone.barrier()
            if not cone.set_point(v - d * h):
                cone.set_point(v)
                continue
            Fm = cone.barrier()
            cone.set_point(v)
            fd = (Fp - Fm) / (2 * d)
            out["grad_fd"] = max(out["grad_fd"],
                                 abs(fd - g @ h) / max(1.0, abs(g @ h)))
        # Hessian apply vs finite difference of the gradient
        for _ in range(3):
            h = rng.standard_normal(cone.dim)
            h /= np.linalg.norm(h)
            d = 1e-5 * scale
            hv = cone.hess_apply(h)
            if not cone.set_point(v + d * h):
                cone.set_point(v)
                continue
            gp = cone.grad()
            if not cone.set_point(v - d * h):
                cone.set_point(v)
                continue
            gm = cone.grad()
            cone.set_point(v)
            fd = (gp - gm) / (2 * d)
            out["hess_fd"] = max(out["hess_fd"],
                                 np.linalg.norm(fd - hv) / np.linalg.norm(hv))
        # inverse-Hessian roundtrip
        for _ in range(3):
            r = rng.standard_normal(cone.dim)
            back = cone.hess_apply(cone.inv_hess_solve(r))
            out["inv_roundtrip"] = max(out["inv_roundtrip"],
                                       np.linalg.norm(back - r) / np.linalg.norm(r))
        # inverse solve vs a dense factorization of the full barrier Hessian
        if dense_reference and cone.dim <= la.memory_guard_dim():
            Hm = la.build_hessian_matrix(cone.hess_apply, cone.dim)
            r = rng.standard_normal(cone.dim)
            ref = np.linalg.solve(Hm, r)
            got = cone.inv_hess_solve(r)
            out["dense_equiv"] = max(out["dense_equiv"],
                                     np.linalg.norm(got - ref) / np.linalg.norm(ref))
    return out
