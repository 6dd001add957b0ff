"""Angle-parameterized FIR paraunitary matrices and their modulation-domain view.

An N x N paraunitary matrix of order K is built as

    H(z) = V_1(z) V_2(z) ... V_K(z) U_0,   V_i(z) = I - v_i v_i^T + v_i v_i^T z^-1

with unit vectors ``v_i`` given by N-1 hyperspherical angles each and ``U_0``
a product of N(N-1)/2 planar rotations, for K(N-1) + N(N-1)/2 angles total.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd

import numpy as np


def n_angles(N: int, K: int) -> int:
    return K * (N - 1) + N * (N - 1) // 2


def rotation_pairs(N: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(N) for j in range(i + 1, N)]


@dataclass(frozen=True)
class ThetaVector:
    N: int
    K: int
    angles: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float).reshape(-1)
        if a.size != n_angles(self.N, self.K):
            raise ValueError(
                f"expected {n_angles(self.N, self.K)} angles for N={self.N}, K={self.K}, got {a.size}"
            )
        a.setflags(write=False)
        object.__setattr__(self, "angles", a)

    @property
    def stage_angles(self) -> np.ndarray:
        return self.angles[: self.K * (self.N - 1)].reshape(self.K, self.N - 1)

    @property
    def rotation_angles(self) -> np.ndarray:
        return self.angles[self.K * (self.N - 1):]

    @classmethod
    def zeros(cls, N: int, K: int) -> "ThetaVector":
        return cls(N, K, np.zeros(n_angles(N, K)))

    @classmethod
    def random(cls, N: int, K: int, rng: np.random.Generator) -> "ThetaVector":
        return cls(N, K, rng.uniform(-np.pi, np.pi, n_angles(N, K)))

    def to_dict(self) -> dict:
        return {"N": self.N, "K": self.K, "angles": [float(x) for x in self.angles]}

    @classmethod
    def from_dict(cls, data: dict) -> "ThetaVector":
        return cls(int(data["N"]), int(data["K"]), np.array(data["angles"], dtype=float))


@dataclass(frozen=True)
class PolyphaseFIR:
    """``H(z) = sum_t coeffs[t] z^-t`` with real ``coeffs`` of shape (K+1, N, N)."""

    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 3 or c.shape[1] != c.shape[2]:
            raise ValueError("coeffs must have shape (order+1, N, N)")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def N(self) -> int:
        return self.coeffs.shape[1]

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    @classmethod
    def identity(cls, N: int) -> "PolyphaseFIR":
        return cls(np.eye(N)[None])

    def to_dict(self) -> dict:
        return {"N": self.N, "order": self.order, "taps": self.coeffs.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "PolyphaseFIR":
        return cls(np.array(data["taps"], dtype=float))


def unit_vector(angles: np.ndarray) -> np.ndarray:
    """Point on the unit sphere in R^(len(angles)+1) from hyperspherical angles."""
    n = len(angles) + 1
    v = np.empty(n)
    s = 1.0
    for i, a in enumerate(angles):
        v[i] = s * np.cos(a)
        s *= np.sin(a)
    v[n - 1] = s
    return v


def unit_vector_jacobian(angles: np.ndarray) -> np.ndarray:
    """``J[k, i] = d v_k / d angles_i`` for :func:`unit_vector`."""
    n = len(angles) + 1
    c, s = np.cos(angles), np.sin(angles)
    pre = np.concatenate([[1.0], np.cumprod(s)])  # pre[k] = s_0 ... s_{k-1}
    tails = np.append(c, 1.0)  # v_k = pre[k] * tails[k]
    J = np.zeros((n, n - 1))
    for i in range(n - 1):
        mids = np.concatenate([[1.0], np.cumprod(s[i + 1:])])[: n - i - 1]
        J[i + 1:, i] = pre[i] * c[i] * mids * tails[i + 1:]
        J[i, i] = -pre[i] * s[i]
    return J


def givens(N: int, i: int, j: int, a: float) -> np.ndarray:
    G = np.eye(N)
    c, s = np.cos(a), np.sin(a)
    G[i, i] = G[j, j] = c
    G[i, j] = -s
    G[j, i] = s
    return G


def rotation_product(N: int, angles: np.ndarray) -> np.ndarray:
    U = np.eye(N)
    for (i, j), a in zip(rotation_pairs(N), angles):
        c, s = np.cos(a), np.sin(a)
        ui, uj = U[:, i].copy(), U[:, j]
        U[:, i] = c * ui + s * uj
        U[:, j] = c * uj - s * ui
    return U


def _stage_taps(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    Pv = np.outer(v, v)
    return np.eye(len(v)) - Pv, Pv


def poly_mul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Product of two matrix polynomials given as tap stacks."""
    out = np.zeros((A.shape[0] + B.shape[0] - 1, A.shape[1], B.shape[2]))
    for a in range(A.shape[0]):
        for b in range(B.shape[0]):
            out[a + b] += A[a] @ B[b]
    return out


def synthesize(theta: ThetaVector) -> PolyphaseFIR:
    N = theta.N
    taps = rotation_product(N, theta.rotation_angles)[None]
    for angles in theta.stage_angles[::-1]:
        t0, t1 = _stage_taps(unit_vector(angles))
        taps = poly_mul(np.stack([t0, t1]), taps)
    return PolyphaseFIR(taps)


def paraunitarity_error(H: PolyphaseFIR) -> float:
    """``max_s || sum_t C_t C_{t+s}^T - delta_s I ||_inf``."""
    C = H.coeffs
    T = C.shape[0]
    worst = 0.0
    for s in range(T):
        acc = sum(C[t] @ C[t + s].T for t in range(T - s))
        if s == 0:
            acc = acc - np.eye(H.N)
        worst = max(worst, float(np.abs(acc).max()))
    return worst


@dataclass(frozen=True)
class FrequencyGrid:
    """``count`` uniformly spaced points on [-pi, pi)."""

    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("grid needs at least one point")

    @property
    def points(self) -> np.ndarray:
        return -np.pi + 2 * np.pi * np.arange(self.count) / self.count

    @property
    def step(self) -> float:
        return 2 * np.pi / self.count


def eval_freq(H: PolyphaseFIR, grid: FrequencyGrid | np.ndarray) -> np.ndarray:
    """``H(e^{jw}) = sum_t C_t e^{-jwt}`` at each grid frequency, shape (G, N, N)."""
    w = grid.points if isinstance(grid, FrequencyGrid) else np.asarray(grid, dtype=float)
    E = np.exp(-1j * np.outer(w, np.arange(H.order + 1)))
    return np.einsum("gt,tij->gij", E, H.coeffs)


@dataclass(frozen=True)
class ModulationTransform:
    """Index bookkeeping linking a P x Q polyphase block to its modulation matrix."""

    P: int
    Q: int

    @property
    def m(self) -> int:
        return gcd(self.P, self.Q)

    @property
    def p(self) -> int:
        return self.P // self.m

    @property
    def q(self) -> int:
        return self.Q // self.m

    @property
    def K(self) -> int:
        return self.m * self.p * self.q

    @staticmethod
    def dft(N: int) -> np.ndarray:
        n = np.arange(N)
        return np.exp(-2j * np.pi * np.outer(n, n) / N)

    def element_kernel(self, rep: tuple[int, int], psi: np.ndarray) -> np.ndarray:
        """Weights ``(1/Q) z^{(ps-qr)/K} W_K^{kps-lqr}`` at ``z^{1/K} = e^{j psi}``, shape (G, P, Q)."""
        l, k = rep
        p, q, K = self.p, self.q, self.K
        r = np.arange(self.P)[:, None]
        s = np.arange(self.Q)[None, :]
        expo = p * s - q * r
        W = np.exp(-2j * np.pi * ((k * p * s - l * q * r) % K) / K)
        return np.exp(1j * np.multiply.outer(psi, expo)) * W / self.Q


def channel_modulation_response(
    block_at: np.ndarray,
    mt: ModulationTransform,
    rep: tuple[int, int],
    psi: np.ndarray,
) -> np.ndarray:
    """Modulation-matrix element ``[H_m(z^{1/K})]_{rep}`` at ``z^{1/K} = e^{j psi}``.

    ``block_at`` holds the channel's P x Q polyphase block evaluated at
    ``z = e^{j K psi}`` for each entry of ``psi`` (shape (G, P, Q)), e.g. from
    ``eval_freq(H, mt.K * psi)[:, rows, :]``.
    """
    block_at = np.asarray(block_at)
    if block_at.shape[1:] != (mt.P, mt.Q) or block_at.shape[0] != len(psi):
        raise ValueError(f"expected block of shape ({len(psi)}, {mt.P}, {mt.Q}), got {block_at.shape}")
    l, k = rep
    if not (0 <= l < mt.P and 0 <= k < mt.Q):
        raise ValueError(f"element {rep} outside a {mt.P}x{mt.Q} modulation matrix")
    return np.einsum("grs,grs->g", mt.element_kernel(rep, psi), block_at)


def modulation_matrix(block_at: np.ndarray, mt: ModulationTransform, psi: np.ndarray) -> np.ndarray:
    """Full ``H_m(z^{1/K})`` by the matrix product ``(1/Q) W_P^H Gamma(z^{-1/P}) H_p Gamma(z^{1/Q}) W_Q``."""
    P, Q, K = mt.P, mt.Q, mt.K
    WP, WQ = mt.dft(P), mt.dft(Q)
    gp = np.exp(-1j * np.outer(psi, np.arange(P)) * (K // P))
    gq = np.exp(1j * np.outer(psi, np.arange(Q)) * (K // Q))
    inner = gp[:, :, None] * block_at * gq[:, None, :]
    return np.einsum("ip,gpq,qk->gik", WP.conj().T, inner, WQ) / Q


# -- adjoint helpers used by the optimizer's analytic gradient ---------------


def stage_stack(theta: ThetaVector) -> tuple[list[np.ndarray], np.ndarray, list[np.ndarray]]:
    """Per-stage tap pairs, the rotation block and the unit vectors."""
    vs = [unit_vector(a) for a in theta.stage_angles]
    stages = [np.stack(_stage_taps(v)) for v in vs]
    return stages, rotation_product(theta.N, theta.rotation_angles), vs


def _correlate(G: np.ndarray, R: np.ndarray, n_out: int) -> np.ndarray:
    """``Y_u = sum_c G_{u+c} R_c^T`` for u < n_out."""
    N = G.shape[1]
    Y = np.zeros((n_out, N, R.shape[1]))
    for u in range(n_out):
        for c in range(R.shape[0]):
            if u + c < G.shape[0]:
                Y[u] += G[u + c] @ R[c].T
    return Y


def theta_gradient(theta: ThetaVector, tap_grad: np.ndarray) -> np.ndarray:
    """Chain ``dD/dC_t`` (shape (K+1, N, N)) back to ``dD/dtheta``."""
    N, K = theta.N, theta.K
    stages, U0, vs = stage_stack(theta)
    eye = np.eye(N)[None]

    # prefixes: L[i] = V_1 ... V_i ; suffixes: R[i] = V_{i+1} ... V_K U_0
    L = [eye]
    for st in stages:
        L.append(poly_mul(L[-1], st))
    R = [U0[None]]
    for st in stages[::-1]:
        R.append(poly_mul(st, R[-1]))
    R = R[::-1]

    grad = np.zeros(n_angles(N, K))
    for i, (v, ang) in enumerate(zip(vs, theta.stage_angles)):
        Y = _correlate(tap_grad, R[i + 1], L[i].shape[0] + 1)
        M = [sum(L[i][a].T @ Y[a + b] for a in range(L[i].shape[0])) for b in (0, 1)]
        E = M[1] - M[0]
        dv = (E + E.T) @ v
        grad[i * (N - 1):(i + 1) * (N - 1)] = unit_vector_jacobian(ang).T @ dv

    # U_0 = G_1 G_2 ... G_n; d/da_n tr(MU^T Pre dG_n Suf) = <Pre^T MU Suf^T, dG_n>
    MU = sum(L[K][a].T @ tap_grad[a] for a in range(L[K].shape[0]))
    pairs = rotation_pairs(N)
    off = K * (N - 1)
    B = MU @ U0.T  # Pre_1^T MU Suf_1^T G_1^T with Pre_1 = I, advanced one rotation at a time
    for n, ((i, j), a) in enumerate(zip(pairs, theta.rotation_angles)):
        c, s = np.cos(a), np.sin(a)
        # B currently equals Pre_n^T MU Suf_n^T G_n^T; peel G_n^T off the right
        bi, bj = B[:, i].copy(), B[:, j].copy()
        B[:, i] = c * bi + s * bj
        B[:, j] = -s * bi + c * bj
        grad[off + n] = -s * (B[i, i] + B[j, j]) - c * B[i, j] + c * B[j, i]
        # move G_n into the prefix: B <- G_n^T B
        ri, rj = B[i, :].copy(), B[j, :].copy()
        B[i, :] = c * ri + s * rj
        B[j, :] = -s * ri + c * rj
    return grad
