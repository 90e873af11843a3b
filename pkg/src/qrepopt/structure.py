"""Structure-exploitation engines shared by the cone oracles.

Facial reduction of positive maps, declared block decompositions, and the
Schur-complement pipelines that funnel into the matrix-inversion-lemma
solvers.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from . import maps as mp
from .errors import DeclarationError, DegenerateMapError

RANK_CUTOFF_REL = 1e-10


@dataclass
class FacialReduction:
    """Isometry onto the face spanned by the range of map(I)."""

    isometry: np.ndarray  # (m, r), column-orthonormal
    rank: int
    source: mp.LinearMap

    def reduced_map(self) -> mp.LinearMap:
        if self.rank == self.source.n_out:
            return self.source
        return self.source.then(mp.CongruenceMap(self.isometry.conj().T))


def facial_reduce(m: mp.LinearMap, cutoff_rel: float = RANK_CUTOFF_REL) -> FacialReduction:
    """Column space of map(I) above the rank cutoff, as an isometry."""
    image_I = m(np.eye(m.n_in, dtype=complex))
    eig = la.eigh(image_I)
    lam_max = eig.eigenvalues[0]
    if lam_max <= 0:
        raise DegenerateMapError("map sends the identity to zero")
    keep = eig.eigenvalues > cutoff_rel * lam_max
    r = int(np.count_nonzero(keep))
    U = eig.vectors[:, :r].copy()
    return FacialReduction(U, r, m)


@dataclass
class BlockStructure:
    """Declared coordinate-block partition of a map's output."""

    sizes: list
    extractors: list = field(default_factory=list)   # LinearMap per block
    offsets: np.ndarray = None


def decompose_blocks(m: mp.LinearMap, sizes, rng: np.random.Generator | None = None,
                     tol: float = 1e-10) -> BlockStructure:
    """Split map output into declared diagonal blocks, verifying the declaration."""
    sizes = [int(s) for s in sizes]
    if sum(sizes) != m.n_out:
        raise DeclarationError(
            f"declared blocks sum to {sum(sizes)}, map output is {m.n_out}")
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    extractors = [m.then(mp.block_extractor(offsets, i, m.n_out))
                  for i in range(len(sizes))]
    rng = rng or np.random.default_rng(0)
    for _ in range(3):
        G = rng.standard_normal((m.n_in, m.n_in)) + 1j * rng.standard_normal((m.n_in, m.n_in))
        X = G @ G.conj().T
        Y = m(X)
        reassembled = np.zeros_like(Y)
        for i, (a, b) in enumerate(zip(offsets[:-1], offsets[1:])):
            reassembled[a:b, a:b] = extractors[i](X)
        scale = max(1.0, np.linalg.norm(Y))
        if np.linalg.norm(Y - reassembled) > tol * scale:
            raise DeclarationError("map output is not block diagonal in the "
                                   "declared partition")
    return BlockStructure(sizes, extractors, offsets)


class SchurPipeline:
    """Factor-once / solve-many wrapper around `linalg.low_rank_solve`.

    Holds the base solver and the low-rank factors for one cone point; the
    small Schur system is factored on the first solve and reused afterwards.
    """

    def __init__(self, mode: str, base_solve, U=None, B=None, C=None, Binv=None):
        self.mode = mode
        self.base_solve = base_solve
        self.U, self.B, self.C, self.Binv = U, B, C, Binv
        self._prepared = None

    @property
    def small_dim(self) -> int:
        if self.U is None:
            return 0
        return self.U.shape[1] * (2 if self.mode == "block" else 1)

    def _prepare(self):
        import scipy.linalg as sla
        from .errors import SingularityError

        U = self.U
        if U is None or U.shape[1] == 0:
            self._prepared = ()
            return
        r = U.shape[1]
        AU = self.base_solve(U)
        if self.mode == "nonsym":
            small = np.eye(r) - self.B @ (U.T @ AU)
            try:
                lu = sla.lu_factor(small)
            except (np.linalg.LinAlgError, ValueError) as exc:
                raise SingularityError("Schur system is singular") from exc
            d = np.abs(np.diag(lu[0]))
            if d.min() <= 1e-14 * max(1.0, d.max()):
                raise SingularityError("Schur system is singular to working precision")
            self._prepared = (AU, lu)
        elif self.mode == "sym":
            Binv = self.Binv if self.Binv is not None else np.linalg.inv(self.B)
            S = Binv - U.T @ AU
            try:
                cho = sla.cho_factor((S + S.T) / 2)
            except np.linalg.LinAlgError as exc:
                raise SingularityError("Schur complement is not positive definite") from exc
            self._prepared = (AU, cho)
        elif self.mode == "block":
            AB = self.base_solve(self.B)
            S = np.zeros((2 * r, 2 * r))
            S[:r, :r] = self.C + self.B.T @ AB
            S[:r, r:] = np.eye(r) + self.B.T @ AU
            S[r:, :r] = np.eye(r) + U.T @ AB
            S[r:, r:] = U.T @ AU
            try:
                lu = sla.lu_factor(S)
            except (np.linalg.LinAlgError, ValueError) as exc:
                raise SingularityError("Schur system is singular") from exc
            self._prepared = (AU, AB, lu)
        else:
            raise ValueError(f"unknown mode '{self.mode}'")

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        import scipy.linalg as sla

        if self._prepared is None:
            self._prepare()
        t = self.base_solve(rhs)
        if not self._prepared:
            return t
        U = self.U
        if self.mode == "nonsym":
            AU, lu = self._prepared
            w = sla.lu_solve(lu, self.B @ (U.T @ t))
            return t + AU @ w
        if self.mode == "sym":
            AU, cho = self._prepared
            w = sla.cho_solve(cho, U.T @ t)
            return t + AU @ w
        AU, AB, lu = self._prepared
        r = U.shape[1]
        w = sla.lu_solve(lu, np.concatenate([self.B.T @ t, U.T @ t]))
        return t - AB @ w[:r] - AU @ w[r:]


def schur_solve(pipeline: SchurPipeline, rhs: np.ndarray) -> np.ndarray:
    return pipeline.solve(rhs)
