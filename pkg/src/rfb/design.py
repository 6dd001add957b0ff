"""Stopband-energy objective over all characterizing filters, and its minimization.

``D(theta) = sum_n sum_i integral over stopband_in of |H_in(e^{j psi})|^2 dpsi``

Each ``H_in`` is linear in the taps of the channel's polyphase rows, so the
trapezoid-rule integral is a fixed quadratic form per channel.  Those forms
are precomputed once per problem; the optimizer only ever sees angles, so
every iterate is paraunitary by construction.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import OptimizeResult, minimize

from .bands import BankPlan, plan_bank
from .charfilters import CharFilterSpec, ideal_spectra, residue_structure, with_stopband
from .paraunitary import (
    FrequencyGrid,
    ModulationTransform,
    PolyphaseFIR,
    ThetaVector,
    channel_modulation_response,
    eval_freq,
    n_angles,
    synthesize,
    theta_gradient,
)
from .spectrum import SpectrumMask

log = logging.getLogger(__name__)


def trapezoid_weights(mask: np.ndarray, step: float) -> np.ndarray:
    """Trapezoid weights for the selected points of a periodic uniform grid.

    Each maximal run of consecutive selected points is integrated on its own,
    so run ends get half weight.  A mask covering the whole circle gets the
    plain periodic rule.
    """
    mask = np.asarray(mask, dtype=bool)
    w = np.where(mask, step, 0.0)
    if mask.all():
        return w
    G = mask.size
    for j in np.flatnonzero(mask):
        if not mask[(j - 1) % G]:
            w[j] -= step / 2
        if not mask[(j + 1) % G]:
            w[j] -= step / 2
    return w


@dataclass
class DesignProblem:
    plan: BankPlan
    specs: list[list[CharFilterSpec]]
    epsilon: Fraction
    K: int
    grid: FrequencyGrid
    seed: int = 0
    forms: list[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def N(self) -> int:
        return self.plan.S

    @property
    def n_params(self) -> int:
        return n_angles(self.N, self.K)

    def transform(self, n: int) -> ModulationTransform:
        return ModulationTransform(self.plan.channels[n].row_count, self.plan.S)


def make_problem(
    partition,
    epsilon=Fraction(1, 20),
    K: int = 7,
    grid_size: int = 1024,
    seed: int = 0,
) -> DesignProblem:
    """Plan the bank, derive every filter's stopband and precompute the objective."""
    plan = partition if isinstance(partition, BankPlan) else plan_bank(partition)
    eps = Fraction(epsilon)
    specs = [
        [with_stopband(s, eps) for s in ideal_spectra(c, index=n)]
        for n, c in enumerate(plan.channels)
    ]
    prob = DesignProblem(plan=plan, specs=specs, epsilon=eps, K=K, grid=FrequencyGrid(grid_size), seed=seed)
    prob.forms = [_channel_form(prob, n) for n in range(len(plan.channels))]
    return prob


def _filter_operator(mt: ModulationTransform, spec: CharFilterSpec, psi: np.ndarray, order: int) -> np.ndarray:
    """Matrix mapping the channel's taps (t, r, s) to ``H_d`` on ``psi``; shape (G, T*P*Q)."""
    shifted = psi + 2 * np.pi * spec.offset / mt.K
    kern = mt.element_kernel(spec.representative, shifted)  # (G, P, Q)
    delay = np.exp(-1j * mt.K * np.outer(shifted, np.arange(order + 1)))  # (G, T)
    return (delay[:, :, None, None] * kern[:, None, :, :]).reshape(len(psi), -1)


def _channel_form(prob: DesignProblem, n: int) -> np.ndarray:
    mt = prob.transform(n)
    psi = prob.grid.points
    size = (prob.K + 1) * mt.P * mt.Q
    M = np.zeros((size, size))
    for spec in prob.specs[n]:
        w = trapezoid_weights(spec.stopband.inner_points(psi), prob.grid.step)
        if not w.any():
            continue
        A = _filter_operator(mt, spec, psi, prob.K)
        M += np.real(A.conj().T @ (w[:, None] * A))
    return (M + M.T) / 2


def _channel_taps(coeffs: np.ndarray, prob: DesignProblem, n: int) -> np.ndarray:
    return coeffs[:, prob.plan.channels[n].rows, :].reshape(-1)


def _as_theta(theta, prob: DesignProblem) -> ThetaVector:
    if isinstance(theta, ThetaVector):
        if (theta.N, theta.K) != (prob.N, prob.K):
            raise ValueError("theta does not match the problem size")
        return theta
    return ThetaVector(prob.N, prob.K, theta)


def _as_fir(bank, prob: DesignProblem) -> PolyphaseFIR:
    """Polyphase FIR from angles or taps, zero-padded to the problem's order."""
    if not isinstance(bank, PolyphaseFIR):
        return synthesize(_as_theta(bank, prob))
    if bank.N != prob.N or bank.order > prob.K:
        raise ValueError("polyphase FIR does not fit the problem size")
    if bank.order == prob.K:
        return bank
    pad = np.zeros((prob.K - bank.order, prob.N, prob.N))
    return PolyphaseFIR(np.concatenate([bank.coeffs, pad]))


def objective(theta, prob: DesignProblem) -> float:
    """D for angles (ThetaVector or array) or an explicit PolyphaseFIR."""
    C = _as_fir(theta, prob).coeffs
    return float(sum(c @ M @ c for c, M in ((_channel_taps(C, prob, n), M) for n, M in enumerate(prob.forms))))


def objective_and_gradient(theta, prob: DesignProblem) -> tuple[float, np.ndarray]:
    th = _as_theta(theta, prob)
    C = synthesize(th).coeffs
    tap_grad = np.zeros_like(C)
    D = 0.0
    for n, M in enumerate(prob.forms):
        c = _channel_taps(C, prob, n)
        Mc = M @ c
        D += float(c @ Mc)
        tap_grad[:, prob.plan.channels[n].rows, :] = (2 * Mc).reshape(C.shape[0], -1, C.shape[2])
    return D, theta_gradient(th, tap_grad)


def gradient(theta, prob: DesignProblem, method: str = "analytic", step: float = 1e-6) -> np.ndarray:
    """Gradient of :func:`objective`: ``analytic``, ``central`` (2-point) or ``five_point`` differences."""
    if method == "analytic":
        return objective_and_gradient(theta, prob)[1]
    x = np.array(_as_theta(theta, prob).angles)
    g = np.zeros_like(x)
    for i in range(x.size):
        def f(h):
            y = x.copy()
            y[i] += h
            return objective(y, prob)
        if method == "central":
            g[i] = (f(step) - f(-step)) / (2 * step)
        elif method == "five_point":
            g[i] = (-f(2 * step) + 8 * f(step) - 8 * f(-step) + f(-2 * step)) / (12 * step)
        else:
            raise ValueError(f"unknown gradient method {method!r}")
    return g


def filter_response(theta, prob: DesignProblem, n: int, i: int, psi: np.ndarray | None = None) -> np.ndarray:
    """``H_in`` on ``psi`` (default: the problem grid), via the polyphase double sum."""
    psi = prob.grid.points if psi is None else np.asarray(psi, dtype=float)
    H = _as_fir(theta, prob)
    mt = prob.transform(n)
    spec = prob.specs[n][i]
    shifted = psi + 2 * np.pi * spec.offset / mt.K
    block = eval_freq(H, mt.K * shifted)[:, prob.plan.channels[n].rows, :]
    return channel_modulation_response(block, mt, spec.representative, shifted)


def objective_direct(theta, prob: DesignProblem) -> float:
    """Same value as :func:`objective`, evaluated filter by filter on the grid."""
    psi = prob.grid.points
    total = 0.0
    for n, specs in enumerate(prob.specs):
        for i, spec in enumerate(specs):
            w = trapezoid_weights(spec.stopband.inner_points(psi), prob.grid.step)
            if w.any():
                total += float(w @ np.abs(filter_response(theta, prob, n, i)) ** 2)
    return total


@dataclass(frozen=True)
class EnergyBudget:
    total: float
    stopband: float
    rest: float
    expected_total: float


def channel_energy(theta, prob: DesignProblem, n: int) -> EnergyBudget:
    """Split the channel's total filter energy into stopband and the rest.

    The total ``sum_i integral |H_in|^2`` over the full circle does not depend
    on theta: it equals ``2 pi P m / Q^2`` for a P x Q block with m filters.
    """
    psi = prob.grid.points
    full = np.full(psi.size, prob.grid.step)
    total = stop = 0.0
    for i, spec in enumerate(prob.specs[n]):
        e = np.abs(filter_response(theta, prob, n, i)) ** 2
        total += float(full @ e)
        stop += float(trapezoid_weights(spec.stopband.inner_points(psi), prob.grid.step) @ e)
    mt = prob.transform(n)
    return EnergyBudget(total, stop, total - stop, 2 * np.pi * mt.P * mt.m / mt.Q**2)


@dataclass
class OptimizationTrace:
    iterates: list[tuple[int, int, float, float]] = field(default_factory=list)  # (restart, iter, D, |g|)
    restarts: int = 0
    initial_values: list[float] = field(default_factory=list)
    final_values: list[float] = field(default_factory=list)
    converged: list[bool] = field(default_factory=list)
    stop_reasons: list[str] = field(default_factory=list)  # converged | max_iter | stalled
    best_restart: int = 0
    best: ThetaVector | None = None

    @property
    def all_converged(self) -> bool:
        return all(self.converged)

    def to_csv(self) -> str:
        lines = ["restart,iteration,D,gradNorm"]
        lines += [f"{r},{i},{d!r},{g!r}" for r, i, d, g in self.iterates]
        return "\n".join(lines) + "\n"


def _worker_count() -> int:
    try:
        return max(1, int(os.environ.get("RFB_THREADS", "1")))
    except ValueError:
        return 1


def _sup(g: np.ndarray) -> float:
    return float(np.abs(g).max(initial=0.0))


def _run_restart(prob: DesignProblem, x0: np.ndarray, max_iter: int, gtol: float):
    rows = []
    last: dict = {}

    def fg(x):
        D, g = objective_and_gradient(x, prob)
        last.update(x=x.copy(), D=D, g=g)
        return D, g

    D0, g0 = fg(x0)
    rows.append((0, D0, _sup(g0)))
    if x0.size == 0:
        # nothing to optimize: a 1x1 bank is a pure delay chain
        return OptimizeResult(x=x0, fun=D0, success=True, message="no free angles"), D0, rows

    def callback(intermediate_result):
        x = intermediate_result.x
        D, g = (last["D"], last["g"]) if np.array_equal(x, last["x"]) else fg(x)
        rows.append((len(rows), D, _sup(g)))

    res = minimize(
        fg,
        x0,
        jac=True,
        method="L-BFGS-B",
        callback=callback,
        options={"maxiter": max_iter, "maxcor": 20, "ftol": 1e-15, "gtol": gtol},
    )
    return res, D0, rows


def _stop_reason(res) -> str:
    if res.success:
        return "converged"
    return "max_iter" if res.status == 1 else "stalled"


def optimize(
    prob: DesignProblem,
    restarts: int = 8,
    max_iter: int = 2000,
    gtol: float = 1e-8,
    initial: list[np.ndarray] | None = None,
) -> tuple[ThetaVector, OptimizationTrace]:
    """Minimize D over the angles with L-BFGS from several random starts.

    Starting angles are drawn uniformly from [-pi, pi) by a generator seeded
    with ``prob.seed``; the best final point wins, ties going to the lowest
    restart index.  Hitting ``max_iter`` marks the restart unconverged in the
    trace but its result is still considered.
    """
    if restarts < 1:
        raise ValueError("need at least one restart")
    if initial is None:
        rng = np.random.default_rng(prob.seed)
        initial = [rng.uniform(-np.pi, np.pi, prob.n_params) for _ in range(restarts)]
    jobs = [np.asarray(x, dtype=float) for x in initial]

    workers = min(_worker_count(), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda x: _run_restart(prob, x, max_iter, gtol), jobs))
    else:
        results = [_run_restart(prob, x, max_iter, gtol) for x in jobs]

    trace = OptimizationTrace(restarts=len(jobs))
    best_val, best_x = np.inf, None
    for r, (res, D0, rows) in enumerate(results):
        trace.iterates += [(r, i, d, g) for i, d, g in rows]
        trace.initial_values.append(D0)
        trace.final_values.append(float(res.fun))
        trace.converged.append(bool(res.success))
        trace.stop_reasons.append(_stop_reason(res))
        log.info("restart %d: D %.6g -> %.6g (%s)", r, D0, res.fun, res.message)
        if res.fun < best_val:
            best_val, best_x, trace.best_restart = float(res.fun), res.x, r
    trace.best = ThetaVector(prob.N, prob.K, best_x)
    return trace.best, trace


def stopband_attenuation_db(theta, prob: DesignProblem, n: int, i: int) -> float:
    """Mean stopband magnitude relative to the passband peak, in dB."""
    spec = prob.specs[n][i]
    psi = prob.grid.points
    mag = np.abs(filter_response(theta, prob, n, i))
    stop = spec.stopband.inner_points(psi)
    passb = spec.ideal_pass.contains(psi)
    return float(20 * np.log10(mag[stop].mean() / mag[passb].max()))
