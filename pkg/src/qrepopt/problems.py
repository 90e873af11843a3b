"""Builders translating the application families into standard-form conic
programs: quantum key rates, rate-distortion, channel capacities, and ground
state energy bounds, each in its alternative conic formulations.

All builders are pure: given the same spec they return the same problem.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import cones as cn
from . import linalg as la
from . import maps as mp
from .errors import DomainError
from .ipm import ConicProblem

# ---------------------------------------------------------------------------
# random instance generators
# ---------------------------------------------------------------------------


def _rng_of(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_density_matrix(n: int, seed=0) -> np.ndarray:
    """Hilbert-Schmidt sample: G G^dag / tr for complex Gaussian G."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = _rng_of(seed)
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    X = G @ G.conj().T
    return X / np.trace(X).real


def random_stinespring(n: int, seed=0) -> np.ndarray:
    """Haar-ish isometry C^n -> C^{n^2}: QR of a complex Gaussian block."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = _rng_of(seed)
    G = rng.standard_normal((n * n, n)) + 1j * rng.standard_normal((n * n, n))
    Q, R = np.linalg.qr(G)
    return Q * np.sign(np.diag(R))[None, :]


def reorder_factors(dims, perm) -> np.ndarray:
    """Permutation matrix sending v_1 (x) ... (x) v_k to the `perm` order."""
    dims = list(dims)
    N = int(np.prod(dims))
    P = np.zeros((N, N))
    new_dims = [dims[p] for p in perm]
    for col, multi in enumerate(np.ndindex(*dims)):
        row = int(np.ravel_multi_index([multi[p] for p in perm], new_dims))
        P[row, col] = 1.0
    return P


def amplitude_damping_isometries(gamma: float):
    """Stinespring V of the damping channel and the degrading isometry W.

    Valid for gamma <= 1/2 (the degradable regime); the complementary channel
    is reproduced as tr_2(W N(X) W^dag).
    """
    if not 0.0 <= gamma <= 0.5:
        raise DomainError("amplitude damping is degradable only for gamma <= 1/2")

    def stine(g):
        A0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - g)]])
        A1 = np.array([[0.0, np.sqrt(g)], [0.0, 0.0]])
        e = np.eye(2)
        return np.kron(A0, e[:, [0]]) + np.kron(A1, e[:, [1]])

    V = stine(gamma)
    g_tilde = (1.0 - 2.0 * gamma) / (1.0 - gamma) if gamma < 1.0 else 1.0
    W = stine(g_tilde)
    return V, W


@dataclass
class ChannelSpec:
    """A channel through its Stinespring isometry; optionally degradable."""

    V: np.ndarray
    n_in: int
    n_out: int
    n_env: int
    W: np.ndarray | None = None
    n_deg_env: int | None = None

    def __post_init__(self):
        self.V = np.asarray(self.V, dtype=complex)
        if self.V.shape != (self.n_out * self.n_env, self.n_in):
            raise DomainError("V has the wrong shape for the declared dims")
        if np.linalg.norm(self.V.conj().T @ self.V - np.eye(self.n_in)) > 1e-10:
            raise DomainError("V is not an isometry")

    def apply(self, X):
        return la.partial_trace(self.V @ X @ self.V.conj().T, 2, self.n_out, self.n_env)

    def complementary(self, X):
        return la.partial_trace(self.V @ X @ self.V.conj().T, 1, self.n_out, self.n_env)

    def degradability_residual(self, rng=None, trials: int = 5) -> float:
        if self.W is None:
            raise DomainError("no degrading isometry attached")
        rng = rng or np.random.default_rng(0)
        W = np.asarray(self.W, dtype=complex)
        worst = 0.0
        for _ in range(trials):
            X = random_density_matrix(self.n_in, rng)
            lhs = la.partial_trace(W @ self.apply(X) @ W.conj().T, 2,
                                   self.n_env, self.n_deg_env)
            worst = max(worst, float(np.linalg.norm(lhs - self.complementary(X))))
        return worst


def amplitude_damping_channel(gamma: float) -> ChannelSpec:
    V, W = amplitude_damping_isometries(gamma)
    return ChannelSpec(V, 2, 2, 2, W=W, n_deg_env=2)


def tensor_channels(a: ChannelSpec, b: ChannelSpec) -> ChannelSpec:
    """Tensor product channel; preserves degradability."""
    Pv = reorder_factors([a.n_out, a.n_env, b.n_out, b.n_env], [0, 2, 1, 3])
    V = Pv @ np.kron(a.V, b.V)
    W = None
    nd = None
    if a.W is not None and b.W is not None:
        Pw = reorder_factors([a.n_env, a.n_deg_env, b.n_env, b.n_deg_env],
                             [0, 2, 1, 3])
        W = Pw @ np.kron(a.W, b.W)
        nd = a.n_deg_env * b.n_deg_env
    return ChannelSpec(V, a.n_in * b.n_in, a.n_out * b.n_out,
                       a.n_env * b.n_env, W=W, n_deg_env=nd)


# ---------------------------------------------------------------------------
# assembly helper
# ---------------------------------------------------------------------------

class _Assembler:
    def __init__(self, name: str):
        self.name = name
        self.cones = []
        self.starts = []
        self._dim = 0
        self.rows = []
        self.rhs = []

    def add_cone(self, K) -> int:
        self.cones.append(K)
        self.starts.append(self._dim)
        self._dim += K.dim
        return self.starts[-1]

    def row(self, pieces, value: float):
        r = np.zeros(self._dim)
        for start, vec in pieces:
            vec = np.atleast_1d(np.asarray(vec, dtype=float))
            r[start:start + vec.size] += vec
        self.rows.append(r)
        self.rhs.append(float(value))

    def rows_block(self, pieces_matrix, values):
        """Batch of rows: list of (start, matrix) sharing a row count."""
        k = len(values)
        R = np.zeros((k, self._dim))
        for start, Mx in pieces_matrix:
            Mx = np.atleast_2d(np.asarray(Mx, dtype=float))
            R[:, start:start + Mx.shape[1]] += Mx
        self.rows.extend(R)
        self.rhs.extend(float(v) for v in values)

    def finish(self, c_pieces, offset=0.0, flip=False) -> ConicProblem:
        c = np.zeros(self._dim)
        for start, vec in c_pieces:
            vec = np.atleast_1d(np.asarray(vec, dtype=float))
            c[start:start + vec.size] += vec
        A = np.array(self.rows).reshape(len(self.rhs), self._dim)
        return ConicProblem(c, A, np.array(self.rhs), self.cones,
                            offset=offset, flip_sign=flip, name=self.name)


def _eye_rows(k):
    return np.eye(k)


# ---------------------------------------------------------------------------
# quantum key distribution
# ---------------------------------------------------------------------------

@dataclass
class QKDProtocol:
    kind: str
    kraus: list
    pinch_sizes: list
    n: int
    observables: list = field(default_factory=list)
    values: list = field(default_factory=list)
    p_pass: float = 0.0
    delta_ec: float = 0.0
    dpr: tuple | None = None   # (c, p) when the tailored dprBB84 route applies

    def constraint_offset(self) -> float:
        return self.p_pass * self.delta_ec


def _synth_constraints(n, rng, count):
    """Consistent synthetic constraint data b = A(X0) for a random state."""
    X0 = random_density_matrix(n, rng)
    obs = [np.eye(n)]
    vals = [1.0]
    for _ in range(count):
        O = la.random_hermitian(rng, n)
        obs.append(O)
        vals.append(float(np.real(np.trace(O @ X0))))
    return obs, vals


def qkd_dprbb84_protocol(c: int, p: float = 0.5, seed=0,
                         n_constraints: int = 4) -> QKDProtocol:
    rng = _rng_of(seed)
    K1, K2 = cn.dprbb84_full_kraus(c, p)
    obs, vals = _synth_constraints(12 * c, rng, n_constraints)
    return QKDProtocol("dprbb84", [K1, K2], [24 * c, 24 * c], 12 * c,
                       obs, vals, dpr=(c, p))


def qkd_trivial_protocol(n: int, seed=0, n_constraints: int = 2) -> QKDProtocol:
    """Single-block pinching (Z = identity): the objective floor is zero."""
    rng = _rng_of(seed)
    obs, vals = _synth_constraints(n, rng, n_constraints)
    return QKDProtocol("trivial", [np.eye(n)], [n], n, obs, vals)


def qkd_dmcv_protocol(n_c: int, seed=0, n_constraints: int = 4) -> QKDProtocol:
    """Discrete-modulated continuous-variable protocol with placeholder
    quadrant-projector measurement operators (indices mod 4)."""
    d = n_c + 1
    projs = []
    for i in range(4):
        P = np.zeros((d, d))
        idx = np.arange(i, d, 4)
        P[idx, idx] = 1.0
        projs.append(P)
    e = np.eye(4)
    K = sum(np.kron(np.kron(e[:, [i]], np.eye(4)), projs[i]) for i in range(4))
    rng = _rng_of(seed)
    obs, vals = _synth_constraints(4 * d, rng, n_constraints)
    return QKDProtocol("dmcv", [K], [4 * d] * 4, 4 * d, obs, vals)


def build_qkd(protocol: QKDProtocol, formulation: str = "tailored") -> ConicProblem:
    off = protocol.constraint_offset()
    if formulation == "tailored":
        if protocol.dpr is not None:
            cone = cn.QKDCone.dprbb84(*protocol.dpr, strategy="mil")
        else:
            cone = cn.QKDCone.generic(protocol.kraus, protocol.pinch_sizes,
                                      strategy="dense")
        asm = _Assembler(f"qkd-{protocol.kind}-tailored")
        s = asm.add_cone(cone)
        for O, v in zip(protocol.observables, protocol.values):
            asm.row([(s + 1, la.svec(O))], v)
        pr = asm.finish([(s, [1.0])], offset=off)
        pr.meta = {"m": protocol.kraus[0].shape[0]}
        return pr
    if formulation != "qre-lift":
        raise ValueError(f"unknown formulation '{formulation}'")

    G = mp.KrausMap(protocol.kraus)
    Z = mp.PinchingMap(protocol.pinch_sizes)
    m = G.n_out
    GI = G(np.eye(protocol.n, dtype=complex))
    joint = GI + Z(GI)
    eig = la.eigh(joint)
    keep = eig.eigenvalues > 1e-10 * max(eig.eigenvalues[0], 1e-300)
    r = int(np.count_nonzero(keep))
    V = eig.vectors[:, :r]
    rank_g = int(np.count_nonzero(
        la.eigh(GI).eigenvalues > 1e-10 * np.linalg.norm(GI, 2)))
    X0 = random_density_matrix(protocol.n, 123)
    inv_res = np.linalg.norm(
        (np.eye(m) - V @ V.conj().T) @ Z(G(X0)) @ (V @ V.conj().T))
    reduce_ok = (rank_g == r) and inv_res <= 1e-9
    if reduce_ok:
        ops_a = [V.conj().T @ K for K in protocol.kraus]
        Amap = mp.KrausMap(ops_a)
        Bmap = mp.compose(mp.CongruenceMap(V.conj().T), mp.compose(Z, G))
        ncone = r
    else:
        # no common reduced face: lift without reduction (slow but correct)
        Amap, Bmap, ncone = G, mp.compose(Z, G), m
    asm = _Assembler(f"qkd-{protocol.kind}-qre-lift")
    sq = asm.add_cone(cn.QRECone(ncone))
    sx = asm.add_cone(cn.PSDCone(protocol.n))
    d = la.svec_dim(ncone)
    asm.rows_block([(sq + 1, _eye_rows(d)), (sx, -Amap.matrix())], np.zeros(d))
    asm.rows_block([(sq + 1 + d, _eye_rows(d)), (sx, -Bmap.matrix())], np.zeros(d))
    for O, v in zip(protocol.observables, protocol.values):
        asm.row([(sx, la.svec(O))], v)
    pr = asm.finish([(sq, [1.0])], offset=off)
    pr.meta = {"m": m}
    return pr


# ---------------------------------------------------------------------------
# quantum rate-distortion
# ---------------------------------------------------------------------------

@dataclass
class RateDistortionSpec:
    """Source state, distortion budget, and distortion observable."""

    W: np.ndarray
    D: float
    kind: str = "entanglement-fidelity"   # or 'explicit'
    Delta: np.ndarray | None = None
    m: int | None = None

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=complex)
        self.n = self.W.shape[0]
        if abs(np.trace(self.W).real - 1.0) > 1e-12:
            raise DomainError("source must have unit trace")
        if self.D < 0:
            raise DomainError("distortion budget must be nonnegative")
        # work in the eigenbasis of W (the problem is unitarily covariant)
        eig = la.eigh(self.W)
        self.w = eig.eigenvalues
        if self.kind == "entanglement-fidelity":
            self.m = self.n
            rt = np.sqrt(np.maximum(self.w, 0.0))
            n = self.n
            Delta = np.eye(n * n, dtype=complex)
            for i in range(n):
                for j in range(n):
                    Delta[i * n + i, j * n + j] -= rt[i] * rt[j]
            self.Delta = Delta
        else:
            if self.Delta is None or self.m is None:
                raise DomainError("explicit distortion needs Delta and m")
            self.Delta = np.asarray(self.Delta, dtype=complex)

    @property
    def entropy(self) -> float:
        pos = self.w[self.w > 1e-15]
        return float(-np.sum(pos * np.log(pos)))


def build_qrd(spec: RateDistortionSpec, formulation: str = "qce") -> ConicProblem:
    n, m = spec.n, spec.m
    Wdiag = np.diag(spec.w.astype(complex))
    off = spec.entropy
    tr2 = mp.PartialTraceMap(2, n, m)

    if formulation == "qce":
        asm = _Assembler("qrd-qce")
        s = asm.add_cone(cn.QCECone(n, m))
        ss = asm.add_cone(cn.NonnegativeOrthantCone(1))
        asm.rows_block([(s + 1, tr2.matrix())], la.svec(Wdiag))
        asm.row([(s + 1, la.svec(spec.Delta)), (ss, [1.0])], spec.D)
        pr = asm.finish([(s, [1.0])], offset=off)
        pr.meta = {"m": n * m}
        return pr

    if formulation == "qre-lift":
        asm = _Assembler("qrd-qre")
        nm = n * m
        s = asm.add_cone(cn.QRECone(nm))
        ss = asm.add_cone(cn.NonnegativeOrthantCone(1))
        d = la.svec_dim(nm)
        kron1 = mp.compose(mp.KronIdentityMap(1, n, m), mp.PartialTraceMap(1, n, m))
        asm.rows_block([(s + 1 + d, _eye_rows(d)), (s + 1, -kron1.matrix())],
                       np.zeros(d))
        asm.rows_block([(s + 1, tr2.matrix())], la.svec(Wdiag))
        asm.row([(s + 1, la.svec(spec.Delta)), (ss, [1.0])], spec.D)
        pr = asm.finish([(s, [1.0])], offset=off)
        pr.meta = {"m": nm}
        return pr

    if spec.kind != "entanglement-fidelity":
        raise DomainError("subspace formulations need the entanglement-"
                          "fidelity distortion")
    if m != n:
        raise DomainError("entanglement-fidelity distortion has m = n")
    rt = np.sqrt(np.maximum(spec.w, 0.0))
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    npairs = len(pairs)
    dz = la.svec_dim(n)
    diag_slots = la._svec_layout(n)[0]

    # <Delta, G(y, Z)> = sum y + tr Z - sum_ij sqrt(w_i w_j) Z_ij
    delta_y = np.ones(npairs)
    delta_z = la.svec(np.eye(n, dtype=complex) - np.outer(rt, rt))

    # tr_2 of the embedded state: diag entries w_i; row sums over second index
    def w_rows(y_start, z_start, asm):
        for i in range(n):
            ry = np.zeros(npairs)
            for k, (a, b) in enumerate(pairs):
                if a == i:
                    ry[k] = 1.0
            rz = np.zeros(dz)
            rz[diag_slots[i]] = 1.0
            asm.row([(y_start, ry), (z_start, rz)], spec.w[i])

    if formulation == "ef-subspace-qrd":
        asm = _Assembler("qrd-ef-qrd")
        s = asm.add_cone(cn.QRDCone(n))
        ss = asm.add_cone(cn.NonnegativeOrthantCone(1))
        w_rows(s + 1, s + 1 + npairs, asm)
        asm.row([(s + 1, delta_y), (s + 1 + npairs, delta_z), (ss, [1.0])], spec.D)
        pr = asm.finish([(s, [1.0])], offset=off)
        pr.meta = {"m": n}
        return pr

    if formulation == "ef-subspace-qce":
        asm = _Assembler("qrd-ef-qce")
        s = asm.add_cone(cn.QCECone(n, n))
        ss = asm.add_cone(cn.NonnegativeOrthantCone(1))
        # kill coordinates outside the block-diagonal fixed-point subspace
        layout = la._svec_layout(n * n)
        diag2, rows2, cols2, re2, im2 = layout
        allowed = set()
        for i in range(n):
            for j in range(n):
                if i < j:
                    allowed.add((j * n + j, i * n + i))
        dbig = la.svec_dim(n * n)
        for rr, cc, sre, sim in zip(rows2, cols2, re2, im2):
            if (rr, cc) in allowed:
                continue
            for slot in (sre, sim):
                rvec = np.zeros(dbig)
                rvec[slot] = 1.0
                asm.row([(s + 1, rvec)], 0.0)
        asm.rows_block([(s + 1, mp.PartialTraceMap(2, n, n).matrix())],
                       la.svec(Wdiag))
        asm.row([(s + 1, la.svec(spec.Delta)), (ss, [1.0])], spec.D)
        pr = asm.finish([(s, [1.0])], offset=off)
        pr.meta = {"m": n * n}
        return pr

    if formulation == "ef-subspace-qre":
        asm = _Assembler("qrd-ef-qre")
        s1 = asm.add_cone(cn.ClassicalRelEntropyCone(npairs))   # (t1, a, bvec)
        s2 = asm.add_cone(cn.QRECone(n))                        # (t2, Z, Y)
        ss = asm.add_cone(cn.NonnegativeOrthantCone(1))
        a_start = s1 + 1
        b_start = s1 + 1 + npairs
        z_start = s2 + 1
        y2_start = s2 + 1 + dz
        # b_(i,j) = d_j = Z_jj + sum_{k != j} a_(k,j)
        for kk, (i, j) in enumerate(pairs):
            rb = np.zeros(npairs)
            rb[kk] = 1.0
            ra = np.zeros(npairs)
            for k2, (aa, bb) in enumerate(pairs):
                if bb == j:
                    ra[k2] = -1.0
            rz = np.zeros(dz)
            rz[diag_slots[j]] = -1.0
            asm.row([(b_start, rb), (a_start, ra), (z_start, rz)], 0.0)
        # Y = diag(d): diagonal slots equal d_j, off-diagonal slots zero
        lay = la._svec_layout(n)
        for j in range(n):
            ry = np.zeros(dz)
            ry[diag_slots[j]] = 1.0
            ra = np.zeros(npairs)
            for k2, (aa, bb) in enumerate(pairs):
                if bb == j:
                    ra[k2] = -1.0
            rz = np.zeros(dz)
            rz[diag_slots[j]] = -1.0
            asm.row([(y2_start, ry), (a_start, ra), (z_start, rz)], 0.0)
        for sre, sim in zip(lay[3], lay[4]):
            for slot in (sre, sim):
                ry = np.zeros(dz)
                ry[slot] = 1.0
                asm.row([(y2_start, ry)], 0.0)
        w_rows(a_start, z_start, asm)
        asm.row([(a_start, delta_y), (z_start, delta_z), (ss, [1.0])], spec.D)
        pr = asm.finish([(s1, [1.0]), (s2, [1.0])], offset=off)
        pr.meta = {"m": n}
        return pr

    raise ValueError(f"unknown formulation '{formulation}'")


# ---------------------------------------------------------------------------
# channel capacities
# ---------------------------------------------------------------------------

def build_eacc(spec: ChannelSpec, formulation: str = "qmi") -> ConicProblem:
    """Entanglement-assisted capacity (reported value is the maximum)."""
    V, ni, no, ne = spec.V, spec.n_in, spec.n_out, spec.n_env
    cong = mp.CongruenceMap(V)
    if formulation == "qmi":
        asm = _Assembler("eacc-qmi")
        s = asm.add_cone(cn.QMICone(V, no, ne))
        asm.row([(s + 1, la.svec(np.eye(ni)))], 1.0)
        pr = asm.finish([(s, [1.0])], flip=True)
        pr.meta = {"m": ni}
        return pr
    if formulation == "qce+qe":
        asm = _Assembler("eacc-qce")
        sx = asm.add_cone(cn.PSDCone(ni))
        s1 = asm.add_cone(cn.QCECone(no, ne))
        s2 = asm.add_cone(cn.QuantumEntropyCone(no))
        d1 = la.svec_dim(no * ne)
        d2 = la.svec_dim(no)
        asm.rows_block([(s1 + 1, _eye_rows(d1)), (sx, -cong.matrix())], np.zeros(d1))
        tr2m = mp.compose(mp.PartialTraceMap(2, no, ne), cong).matrix()
        asm.rows_block([(s2 + 1, _eye_rows(d2)), (sx, -tr2m)], np.zeros(d2))
        asm.row([(s2 + 1 + d2, [1.0]), (sx, -la.svec(np.eye(ni)))], 0.0)
        asm.row([(sx, la.svec(np.eye(ni)))], 1.0)
        pr = asm.finish([(s1, [1.0]), (s2, [1.0])], flip=True)
        pr.meta = {"m": no * ne}
        return pr
    if formulation == "qre+qe":
        asm = _Assembler("eacc-qre")
        sx = asm.add_cone(cn.PSDCone(ni))
        s1 = asm.add_cone(cn.QRECone(no * ne))
        s2 = asm.add_cone(cn.QuantumEntropyCone(no))
        d1 = la.svec_dim(no * ne)
        d2 = la.svec_dim(no)
        asm.rows_block([(s1 + 1, _eye_rows(d1)), (sx, -cong.matrix())], np.zeros(d1))
        kron1 = mp.compose(mp.KronIdentityMap(1, no, ne),
                           mp.compose(mp.PartialTraceMap(1, no, ne), cong))
        asm.rows_block([(s1 + 1 + d1, _eye_rows(d1)), (sx, -kron1.matrix())],
                       np.zeros(d1))
        tr2m = mp.compose(mp.PartialTraceMap(2, no, ne), cong).matrix()
        asm.rows_block([(s2 + 1, _eye_rows(d2)), (sx, -tr2m)], np.zeros(d2))
        asm.row([(s2 + 1 + d2, [1.0]), (sx, -la.svec(np.eye(ni)))], 0.0)
        asm.row([(sx, la.svec(np.eye(ni)))], 1.0)
        pr = asm.finish([(s1, [1.0]), (s2, [1.0])], flip=True)
        pr.meta = {"m": no * ne}
        return pr
    raise ValueError(f"unknown formulation '{formulation}'")


def build_qqcc(spec: ChannelSpec, formulation: str = "qci") -> ConicProblem:
    """Quantum-quantum capacity of a degradable channel (maximum reported)."""
    if spec.W is None:
        raise DomainError("quantum-quantum capacity needs a degrading isometry")
    res = spec.degradability_residual()
    if res > 1e-8:
        raise DomainError(f"channel is not degradable (residual {res:.2e})")
    V, W = spec.V, np.asarray(spec.W, dtype=complex)
    ni, no, ne, nf = spec.n_in, spec.n_out, spec.n_env, spec.n_deg_env
    if formulation == "qci":
        asm = _Assembler("qqcc-qci")
        s = asm.add_cone(cn.QCICone(V, W, no, ne, nf))
        asm.row([(s + 1, la.svec(np.eye(ni)))], 1.0)
        pr = asm.finish([(s, [1.0])], flip=True)
        pr.meta = {"m": ni}
        return pr
    # remaining formulations see the dilated state with factors (flag, kept-env)
    swap = reorder_factors([ne, nf], [1, 0])
    Ws = swap @ W
    channel = mp.CongruenceMap(V).then(mp.PartialTraceMap(2, no, ne))
    dil = channel.then(mp.CongruenceMap(Ws))
    d1 = la.svec_dim(nf * ne)
    if formulation == "qce":
        asm = _Assembler("qqcc-qce")
        sx = asm.add_cone(cn.PSDCone(ni))
        s1 = asm.add_cone(cn.QCECone(nf, ne))
        asm.rows_block([(s1 + 1, _eye_rows(d1)), (sx, -dil.matrix())], np.zeros(d1))
        asm.row([(sx, la.svec(np.eye(ni)))], 1.0)
        pr = asm.finish([(s1, [1.0])], flip=True)
        pr.meta = {"m": nf * ne}
        return pr
    if formulation == "qre":
        asm = _Assembler("qqcc-qre")
        sx = asm.add_cone(cn.PSDCone(ni))
        s1 = asm.add_cone(cn.QRECone(nf * ne))
        asm.rows_block([(s1 + 1, _eye_rows(d1)), (sx, -dil.matrix())], np.zeros(d1))
        kron1 = mp.compose(mp.KronIdentityMap(1, nf, ne),
                           mp.compose(mp.PartialTraceMap(1, nf, ne), dil))
        asm.rows_block([(s1 + 1 + d1, _eye_rows(d1)), (sx, -kron1.matrix())],
                       np.zeros(d1))
        asm.row([(sx, la.svec(np.eye(ni)))], 1.0)
        pr = asm.finish([(s1, [1.0])], flip=True)
        pr.meta = {"m": nf * ne}
        return pr
    raise ValueError(f"unknown formulation '{formulation}'")


# ---------------------------------------------------------------------------
# ground state energy of local Hamiltonians
# ---------------------------------------------------------------------------

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def xxz_local_term(delta: float) -> np.ndarray:
    return la.hermitize(-np.kron(PAULI_X, PAULI_X) - np.kron(PAULI_Y, PAULI_Y)
                        - delta * np.kron(PAULI_Z, PAULI_Z))


@dataclass
class HamiltonianSpec:
    h: np.ndarray          # 4x4 local term
    l: int                 # number of sites in the relaxation

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=complex)
        if self.h.shape != (4, 4):
            raise DomainError("local term must be 4x4")
        if np.linalg.norm(self.h - self.h.conj().T) > 1e-12:
            raise DomainError("local term must be Hermitian")
        if self.l < 2:
            raise DomainError("need at least two sites")


def build_gse(spec: HamiltonianSpec, formulation: str = "qce") -> ConicProblem:
    l = spec.l
    N = 2**l
    half = 2 ** (l - 1)
    Hobj = np.kron(spec.h, np.eye(2 ** (l - 2))) if l > 2 else spec.h
    ti = mp.PartialTraceMap(1, 2, half).matrix() \
        - mp.PartialTraceMap(2, half, 2).matrix()
    if formulation == "qce":
        asm = _Assembler("gse-qce")
        s = asm.add_cone(cn.QCECone(2, half))
        asm.row([(s, [1.0])], 0.0)                       # entropy constraint t = 0
        asm.row([(s + 1, la.svec(np.eye(N)))], 1.0)      # unit trace
        asm.rows_block([(s + 1, ti)], np.zeros(ti.shape[0]))
        pr = asm.finish([(s + 1, la.svec(Hobj))])
        pr.meta = {"m": N}
        return pr
    if formulation == "qre-lift":
        asm = _Assembler("gse-qre")
        s = asm.add_cone(cn.QRECone(N))
        d = la.svec_dim(N)
        asm.row([(s, [1.0])], 0.0)
        asm.row([(s + 1, la.svec(np.eye(N)))], 1.0)
        asm.rows_block([(s + 1, ti)], np.zeros(ti.shape[0]))
        kron1 = mp.compose(mp.KronIdentityMap(1, 2, half),
                           mp.PartialTraceMap(1, 2, half))
        asm.rows_block([(s + 1 + d, _eye_rows(d)), (s + 1, -kron1.matrix())],
                       np.zeros(d))
        pr = asm.finish([(s + 1, la.svec(Hobj))])
        pr.meta = {"m": N}
        return pr
    raise ValueError(f"unknown formulation '{formulation}'")


def chain_ground_energy_density(h: np.ndarray, sites: int) -> float:
    """Ground energy per site of the periodic chain, via sparse Lanczos."""
    h = sp.csr_matrix(np.asarray(h, dtype=complex))
    dim = 2**sites
    H = sp.csr_matrix((dim, dim), dtype=complex)
    for site in range(sites - 1):
        left = sp.identity(2**site, format="csr")
        right = sp.identity(2 ** (sites - site - 2), format="csr")
        H = H + sp.kron(sp.kron(left, h), right, format="csr")
    # periodic boundary term acting on (last, first)
    hm = np.asarray(h.todense())
    h4 = hm.reshape(2, 2, 2, 2)
    mid = sp.identity(2 ** (sites - 2), format="csr")
    for a in range(2):
        for b in range(2):
            for c in range(2):
                for d in range(2):
                    coef = h4[b, a, d, c]   # first factor on the last site
                    if abs(coef) < 1e-15:
                        continue
                    last = sp.csr_matrix((np.array([coef]), (np.array([b]),
                                                             np.array([d]))),
                                         shape=(2, 2))
                    first = sp.csr_matrix((np.array([1.0]), (np.array([a]),
                                                             np.array([c]))),
                                          shape=(2, 2))
                    H = H + sp.kron(sp.kron(first, mid), last, format="csr")
    w = spla.eigsh(H, k=1, which="SA", return_eigenvectors=False)
    return float(w[0]) / sites
