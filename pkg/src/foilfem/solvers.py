"""Linear harmonic and nonlinear transient solvers."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg  # noqa: F401  (sp.linalg.norm)
from scipy.sparse.linalg import splu

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Linear solve failed; ``cause`` names the suspected reason."""

    def __init__(self, message: str, cause: str = ""):
        super().__init__(f"{message} (suspected cause: {cause})" if cause else message)
        self.cause = cause


class NewtonError(SolverError):
    def __init__(self, message: str, step: int, time: float, residual: float):
        super().__init__(message, "nonlinear iteration did not converge; reduce the time step")
        self.step = step
        self.time = time
        self.residual = residual


@dataclass(frozen=True)
class HtsLaw:
    """Power law e = e_c (|j|/j_c)^n sign(j), with a floor on |j| in the resistivity."""

    e_c: float = 1e-4
    j_c: float = 1.0
    n: float = 20.0
    floor_ratio: float = 1e-6

    def __post_init__(self):
        if self.e_c <= 0 or self.j_c <= 0 or self.n < 1:
            raise ValueError("power law needs e_c > 0, j_c > 0 and n >= 1")

    @property
    def j_floor(self) -> float:
        return self.floor_ratio * self.j_c

    def resistivity(self, j) -> np.ndarray:
        a = np.maximum(np.abs(j), self.j_floor)
        return (self.e_c / self.j_c) * (a / self.j_c) ** (self.n - 1.0)

    def field(self, j) -> np.ndarray:
        return self.resistivity(j) * j

    def current(self, e) -> np.ndarray:
        """Inverse law j(e), linear below the floor."""
        e = np.asarray(e, dtype=float)
        rho_f = self.resistivity(0.0)
        e_f = rho_f * self.j_floor
        a = np.abs(e)
        high = self.j_c * (np.maximum(a, e_f) / self.e_c) ** (1.0 / self.n)
        return np.where(a > e_f, high * np.sign(e), e / rho_f)

    def conductance_slope(self, j) -> np.ndarray:
        """de/dj = rho + rho' |j|, which is n rho above the floor."""
        above = np.abs(j) > self.j_floor
        return self.resistivity(j) * np.where(above, self.n, 1.0)


def hts_resistivity(j, e_c: float, j_c: float, n: float) -> np.ndarray:
    return HtsLaw(e_c, j_c, n).resistivity(j)


@dataclass(frozen=True)
class TransientConfig:
    theta: float = 1.0
    steps_per_period: int = 200
    periods: float = 1.0
    newton_tol: float = 1e-6
    max_newton: int = 30
    increment_tol: float | None = None  # relative change of j; None means sqrt(newton_tol)

    def __post_init__(self):
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0.5, 1]")
        if self.steps_per_period < 20:
            raise ValueError("need at least 20 steps per period")
        if self.periods <= 0:
            raise ValueError("need a positive number of periods")
        if not self.newton_tol > 0 or (self.increment_tol is not None and not self.increment_tol > 0):
            raise ValueError("Newton tolerances must be positive")


@dataclass(eq=False)
class Solution:
    """Solver output. ``x`` is a phasor vector (harmonic) or a (steps + 1, n) history."""

    system: object
    kind: str
    x: np.ndarray
    frequency: float
    amplitude: float
    times: np.ndarray | None = None
    currents: np.ndarray | None = None
    reactions: np.ndarray | None = None
    newton_iterations: list = field(default_factory=list)
    residual: float = 0.0
    wall_time: float = 0.0

    @property
    def voltages(self) -> np.ndarray:
        """Voltage unknowns, or cut reactions for resolved h-phi."""
        sys = self.system
        if sys.dofspace.n_voltage:
            return self.x[..., sys.dofspace.voltage]
        return self.reactions


def _split(n, fixed):
    mask = np.ones(n, bool)
    mask[fixed] = False
    return np.flatnonzero(mask)


def _equilibration(A) -> np.ndarray:
    """Symmetric diagonal scaling from the largest entry of each row."""
    m = np.asarray(abs(A).max(axis=1).todense()).ravel()
    m[m == 0] = 1.0
    return 1.0 / np.sqrt(m)


def _lu(A):
    # structurally symmetric systems: symmetric ordering and mostly diagonal pivots
    return splu(A.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.01,
                options={"SymmetricMode": True})


def _factor(A, what):
    try:
        return _lu(A)
    except RuntimeError as exc:
        raise SolverError(f"{what} matrix is singular: {exc}",
                          "floating potential or unconstrained voltage; check boundary conditions, "
                          "gauge and that the winding is conducting") from exc


def solve_harmonic(system, frequency: float, amplitude: float = 1.0, *, tol: float = 1e-10) -> Solution:
    """Frequency-domain solve for a per-turn current phasor ``amplitude``.

    ``residual`` is the normwise backward error |r| / (|A| |x| + |b|) in the
    max norm, refined iteratively until it drops below ``tol``.
    """
    t0 = time.perf_counter()
    omega = 2.0 * math.pi * frequency
    A, b = system.harmonic_matrix(omega)
    n = system.n
    fixed = np.asarray(system.fixed, dtype=np.int64)
    free = _split(n, fixed)
    x = np.zeros(n, dtype=complex)
    x[fixed] = system.fixed_values * amplitude
    rhs = b[free] * amplitude - A[free][:, fixed] @ x[fixed]
    Aff = A[free][:, free]
    d = _equilibration(Aff)
    Ds = sp.diags(d)
    lu = _factor(Ds @ Aff @ Ds, "harmonic")
    anorm = sp.linalg.norm(Aff, np.inf)
    rnorm = np.linalg.norm(rhs, np.inf)
    x[free] = d * lu.solve(d * rhs)
    res = np.inf
    for _ in range(4):
        if not np.all(np.isfinite(x)):
            raise SolverError("harmonic solve produced non-finite values", "ill-conditioned matrix")
        r = rhs - Aff @ x[free]
        res = np.linalg.norm(r, np.inf) / max(anorm * np.linalg.norm(x[free], np.inf) + rnorm, 1e-300)
        if res <= tol:
            break
        x[free] += d * lu.solve(d * r)
    if res > tol:
        raise SolverError(f"relative residual {res:.2e} exceeds {tol:.0e}", "ill-conditioned matrix")
    reactions = None
    if len(fixed):
        full = (1j * omega * system.M + system.K).tocsr()
        reactions = full[fixed] @ x - system.b[fixed] * amplitude
    log.debug("harmonic solve: n=%d residual=%.2e", n, res)
    return Solution(system, "harmonic", x, frequency, amplitude, reactions=reactions, residual=res,
                    wall_time=time.perf_counter() - t0)


def _solve_scaled(A, rhs, sweeps: int = 2):
    d = _equilibration(A)
    lu = _factor(sp.diags(d) @ A @ sp.diags(d), "Newton")
    x = d * lu.solve(d * rhs)
    for _ in range(sweeps):
        r = rhs - A @ x
        x += d * lu.solve(d * r)
    return x


def _newton_step(x, xo, x_prev, x_fixed, resid_lin, J_lin, nl, M, dt, th, free, fixed, const,
                 cfg, k, t, field_rows, hts, kappa: float = 1.0):
    """Newton iterations for one implicit step with a clipped linearization point.

    Each element's law is linearized at a point jl on the curve instead of
    at D x. Normally jl = D x, which is plain Newton. When D x lands above
    max(kappa j_c, j(e_lin)), where e_lin is the field the last linear model
    predicted, jl is clipped to that bound: the tangent at an overshot
    current density is far too stiff and would need about n ln(overshoot)
    iterations to come back. Convergence is judged on the plain residual,
    each block of rows (power law, other field rows, constraints) against
    the size of its own terms.
    """
    law, D = nl.law, nl.D
    w = th * nl.weights
    absM, absK = abs(M), abs(J_lin - M / dt) / th
    base = np.abs(const + M @ xo / dt)
    groups = [g for g in (free[hts[free]], free[~hts[free] & field_rows[free]], free[~field_rows[free]])
              if len(g)]

    def backward_error(x):
        R = resid_lin(x) + th * nl.residual(x)
        terms = absM @ np.abs(x - xo) / dt + th * (absK @ np.abs(x) + np.abs(nl.residual(x))) + base
        return max(np.linalg.norm(R[g]) / max(np.linalg.norm(terms[g]), 1e-300) for g in groups)

    def clip(j, e_lin):
        bound = np.maximum(kappa * law.j_c, np.abs(law.current(e_lin)))
        return np.where(np.abs(j) > bound, bound * np.sign(j), j)

    x = x.copy()
    if x_prev is not None:
        x[free] = 2.0 * xo[free] - x_prev[free]
    x[fixed] = x_fixed
    j = D @ x
    jl = clip(j, law.field(D @ xo))
    it = 0
    inc_tol = cfg.increment_tol if cfg.increment_tol is not None else math.sqrt(cfg.newton_tol)
    rel, step = backward_error(x), np.inf
    while rel > cfg.newton_tol or step > inc_tol:
        if it >= cfg.max_newton:
            raise NewtonError(f"Newton failed at step {k + 1} (t={t:.4e} s), relative residual {rel:.2e}",
                              k + 1, t, rel)
        S = law.conductance_slope(jl)
        el = law.field(jl)
        G = resid_lin(x) + D.T @ (w * (el + S * (j - jl)))
        Jac = (J_lin + D.T @ sp.diags(w * S) @ D).tocsr()
        dx = _solve_scaled(Jac[free][:, free], -G[free])
        x[free] += dx
        dj = D[:, free] @ dx
        j = D @ x
        step = np.sqrt(np.sum(nl.weights * dj ** 2) / max(np.sum(nl.weights * j ** 2), 1e-300))
        jl = clip(j, el + S * (j - jl))
        it += 1
        rel = backward_error(x)
        log.debug("step %d it %d residual %.3e increment %.3e", k + 1, it, rel, step)
    return x, it


def solve_transient(system, excitation, config: TransientConfig | None = None) -> Solution:
    """Theta scheme with Newton iterations for M x' + K x + N(x) = b I(t)."""
    cfg = config or TransientConfig()
    t0 = time.perf_counter()
    n = system.n
    nsteps = int(round(cfg.steps_per_period * cfg.periods))
    times = np.linspace(0.0, cfg.periods * excitation.period, nsteps + 1)
    dt = times[1] - times[0]
    current = np.asarray(excitation.current(times), dtype=float)
    fixed = np.asarray(system.fixed, dtype=np.int64)
    free = _split(n, fixed)
    M, K, b = system.M.tocsr(), system.K.tocsr(), system.b
    nl = system.nonlinear
    th = cfg.theta

    def F(x):
        out = K @ x
        if nl is not None:
            out = out + nl.residual(x)
        return out

    X = np.zeros((nsteps + 1, n))
    X[0, fixed] = system.fixed_values * current[0]
    reactions = np.zeros((nsteps + 1, len(fixed)))
    J_lin = (M / dt + th * K).tocsr()
    lu_lin = _factor(J_lin[free][:, free], "transient") if nl is None else None
    iterations = []
    field_rows = np.zeros(n, bool)
    field_rows[: system.dofspace.n_field] = True
    hts = np.zeros(n, bool)
    if nl is not None:
        hts[nl.D.indices] = True
    F_old = F(X[0])
    for k in range(nsteps):
        xo = X[k]
        load = b * (th * current[k + 1] + (1.0 - th) * current[k])
        const = -M @ xo / dt + (1.0 - th) * F_old - load
        x = xo.copy()
        x_fixed = system.fixed_values * current[k + 1]

        def resid(x):
            return M @ x / dt + th * F(x) + const

        def resid_lin(x):
            return M @ x / dt + th * (K @ x) + const

        if nl is None:
            x[fixed] = x_fixed
            x[free] -= lu_lin.solve(resid(x)[free])
            it = 1
        else:
            x_prev = X[k - 1] if k >= 1 else None
            x, it = _newton_step(x, xo, x_prev, x_fixed, resid_lin, J_lin, nl, M, dt, th, free, fixed,
                                 const, cfg, k, times[k + 1], field_rows, hts)
        iterations.append(it)
        X[k + 1] = x
        F_new = F(x)
        if len(fixed):
            r = (M @ (x - xo)) / dt + th * F_new + (1.0 - th) * F_old - load
            reactions[k + 1] = r[fixed]
        F_old = F_new
    log.debug("transient solve: %d steps, max Newton iterations %s", nsteps, max(iterations, default=0))
    return Solution(system, "transient", X, excitation.frequency, float(np.max(np.abs(current))),
                    times=times, currents=current, reactions=reactions if len(fixed) else None,
                    newton_iterations=iterations, wall_time=time.perf_counter() - t0)
