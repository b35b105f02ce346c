"""Voltages, lumped parameters, losses, line samples and field export."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fem_kernel import curl_matrix, element_data
from .mesh import AXISYMMETRIC
from .mesh_search import barycentric, locate_points
from .topology import VoltageBasis


class PostprocessingError(ValueError):
    pass


# --------------------------------------------------------------------------
# voltages


@dataclass(frozen=True)
class VoltageDistribution:
    """Phi(alpha) = sum_k u_k p_k(alpha) over a winding of ``n_turns`` turns."""

    coefficients: np.ndarray
    basis: VoltageBasis
    n_turns: int

    def __call__(self, alpha) -> np.ndarray:
        return np.tensordot(self.coefficients, self.basis(alpha), axes=(-1, 0))

    def strip_averages(self) -> np.ndarray:
        ints = np.stack([self.basis.integrals(a, b) for a, b in _strips(self.n_turns)])
        return self.n_turns * self.coefficients @ ints.T

    def center_samples(self) -> np.ndarray:
        return self((np.arange(self.n_turns) + 0.5) / self.n_turns)

    def total(self):
        return self.n_turns * (self.coefficients @ self.basis.integrals())


def _strips(n):
    return [(i / n, (i + 1) / n) for i in range(n)]


@dataclass(frozen=True)
class TurnVoltages:
    """Per-turn voltages; FW runs also carry center samples and the distribution."""

    values: np.ndarray
    centers: np.ndarray | None = None
    distribution: VoltageDistribution | None = None


def turn_voltages(solution) -> TurnVoltages:
    sys = solution.system
    if sys.variant == "resolved":
        v = solution.voltages
        if v is None:
            raise PostprocessingError("solution carries no turn voltages")
        return TurnVoltages(np.asarray(v))
    if sys.fw_spec is None:
        raise PostprocessingError("foil-winding solution without a winding description")
    dist = VoltageDistribution(np.asarray(solution.voltages), sys.fw_spec.basis, sys.fw_spec.n_turns)
    return TurnVoltages(dist.strip_averages(), dist.center_samples(), dist)


def total_voltage(solution):
    sys = solution.system
    if sys.variant == "fw":
        return turn_voltages(solution).distribution.total()
    return turn_voltages(solution).values.sum(axis=-1)


@dataclass(frozen=True)
class LumpedParams:
    V_tot: complex
    R_tot: float
    L_tot: float
    frequency: float
    dofs: int

    def as_dict(self) -> dict:
        return {"V_tot_re": self.V_tot.real, "V_tot_im": self.V_tot.imag, "R_tot": self.R_tot,
                "L_tot": self.L_tot, "frequency": self.frequency, "dofs": self.dofs}


def lumped_params(solution, frequency: float | None = None) -> LumpedParams:
    """V_tot = (R_tot + j 2 pi f L_tot) I_t from a harmonic solution."""
    f = solution.frequency if frequency is None else frequency
    if f is None or f <= 0:
        raise PostprocessingError("lumped parameters need a positive frequency")
    if solution.kind != "harmonic":
        raise PostprocessingError("lumped parameters need a harmonic solution")
    V = complex(total_voltage(solution))
    Z = V / solution.amplitude
    return LumpedParams(V, Z.real, Z.imag / (2.0 * math.pi * f), f, solution.system.dofspace.n)


# --------------------------------------------------------------------------
# R^2


def _as_function(phi):
    """(callable, breakpoints, degree) for a distribution or per-turn values."""
    if isinstance(phi, VoltageDistribution):
        pts = np.union1d(phi.basis.breakpoints, [0.0, 1.0])
        return phi, pts, phi.basis.degree
    vals = np.asarray(phi)
    if vals.ndim != 1 or len(vals) == 0:
        raise PostprocessingError("per-turn values must be a non-empty vector")
    n = len(vals)

    def f(alpha):
        idx = np.minimum((np.asarray(alpha) * n).astype(int), n - 1)
        return vals[idx]

    return f, np.linspace(0.0, 1.0, n + 1), 0


def r_squared(phi_ref, phi) -> float:
    """Coefficient of determination of ``phi`` against ``phi_ref`` on alpha in [0, 1].

    Either argument is a VoltageDistribution or a vector of per-turn values
    (piecewise constant over equal strips). Complex values use |.|^2.
    """
    f_ref, b_ref, d_ref = _as_function(phi_ref)
    f, b, d = _as_function(phi)
    pts = np.union1d(b_ref, b)
    nq = math.ceil((2 * max(d_ref, d) + 1) / 2)
    x, w = np.polynomial.legendre.leggauss(nq)
    num = sq = mean = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        a = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x
        ww = 0.5 * (hi - lo) * w
        r = f_ref(a)
        num += np.sum(ww * np.abs(r - f(a)) ** 2)
        mean = mean + np.sum(ww * r)
        sq += np.sum(ww * np.abs(r) ** 2)
    den = sq - abs(mean) ** 2
    if den <= 1e-24 * max(sq, 1e-300):
        raise PostprocessingError("reference distribution is constant; R^2 is undefined")
    return float(1.0 - num / den)


# --------------------------------------------------------------------------
# current density and losses


def _field_history(solution):
    """Unknown vectors and their time derivatives (harmonic: jw x)."""
    x = solution.x
    if solution.kind == "harmonic":
        return x[None, :], (2j * math.pi * solution.frequency * x)[None, :]
    dt = np.diff(solution.times)
    dx = np.zeros_like(x)
    dx[1:] = np.diff(x, axis=0) / dt[:, None]
    return x, dx


def element_current_density(system, x: np.ndarray, dxdt: np.ndarray | None = None) -> np.ndarray:
    """Out-of-plane current density at the quadrature points, shape (..., T, nq)."""
    mesh = system.mesh
    ed = element_data(mesh, system.order)
    x = np.atleast_2d(x)
    space = system.dofspace
    if space.formulation == "av":
        if dxdt is None:
            raise PostprocessingError("a-v current density needs the time derivative")
        dxdt = np.atleast_2d(dxdt)
        nodal = (space.extension @ dxdt[:, : space.n_field].T).T  # (S, N)
        at_q = np.einsum("qk,stk->stq", ed.lam, nodal[:, mesh.triangles])
        if mesh.coordinate_system == AXISYMMETRIC:
            at_q = at_q / ed.points[None, ..., 0]
        u = x[:, space.voltage]
        src = np.einsum("sk,ktq->stq", u, system.profiles) / ed.measure[None]
        return system.materials.sigma[None, :, None] * (src - at_q)
    C = curl_matrix(mesh)
    j = (C @ (space.extension @ x[:, : space.n_field].T)).T
    return np.repeat(j[..., None], ed.dA.shape[1], axis=-1)


def strip_currents(solution, step: int = -1) -> np.ndarray:
    """Current carried by each virtual turn of a foil-winding solution."""
    sys = solution.system
    if sys.fw_spec is None:
        raise PostprocessingError("strip currents need a foil-winding solution")
    xs, dxs = _field_history(solution)
    k = 0 if solution.kind == "harmonic" else step
    j = element_current_density(sys, xs[k], dxs[k])[0]
    mesh = sys.mesh
    ed = element_data(mesh, sys.order)
    bulk = sys.materials.conductor_id == 0
    n = sys.fw_spec.n_turns
    alpha = sys.fw_spec.alpha_map(mesh.centroids)
    idx = np.minimum((alpha * n).astype(int), n - 1)
    per_tri = np.sum(j * ed.dA, axis=1)
    out = np.zeros(n, dtype=per_tri.dtype)
    np.add.at(out, idx[bulk], per_tri[bulk])
    return out


def cut_current(solution, step: int = -1):
    """Coefficient of the single bulk cut (the total linked current)."""
    sys = solution.system
    if sys.formulation != "hphi" or len(sys.dofspace.cut_dofs) != 1:
        raise PostprocessingError("cut current needs an h-phi foil-winding solution")
    x = solution.x if solution.kind == "harmonic" else solution.x[step]
    return x[sys.dofspace.cut_dofs[0]]


@dataclass(frozen=True)
class LossSeries:
    """Instantaneous losses, their one-period moving average and the last-cycle mean."""

    times: np.ndarray
    power: np.ndarray
    window_average: np.ndarray
    cycle_average: float


def _linear_loss(system, j):
    ed = element_data(system.mesh, system.order)
    rho = system.materials.rho
    wts = ed.dA * ed.measure * rho[:, None]
    return np.einsum("tq,stq->s", wts, np.abs(j) ** 2)


def ac_losses(solution):
    """Harmonic: mean loss 0.5 int rho |j|^2. Transient: LossSeries."""
    sys = solution.system
    xs, dxs = _field_history(solution)
    if solution.kind == "harmonic":
        j = element_current_density(sys, xs, dxs)
        return float(0.5 * _linear_loss(sys, j)[0])
    n_steps = len(solution.times) - 1
    power = np.zeros(n_steps + 1)
    chunk = 64
    for lo in range(0, n_steps + 1, chunk):
        sl = slice(lo, min(lo + chunk, n_steps + 1))
        j = element_current_density(sys, xs[sl], dxs[sl])
        power[sl] = _linear_loss(sys, j)
    if sys.nonlinear is not None:
        power += np.array([sys.nonlinear.dissipation(x) for x in xs])
    dt = solution.times[1] - solution.times[0]
    per = max(1, int(round(1.0 / (solution.frequency * dt))))
    window = np.full(n_steps + 1, np.nan)
    cs = np.concatenate([[0.0], np.cumsum(power[1:])])
    for k in range(per, n_steps + 1):
        window[k] = (cs[k] - cs[k - per]) / per
    cycle = float(np.mean(power[-per:])) if n_steps >= per else float(np.mean(power[1:]))
    return LossSeries(solution.times, power, window, cycle)


# --------------------------------------------------------------------------
# sampling and export


@dataclass(frozen=True)
class LineSample:
    points: np.ndarray
    magnitude: np.ndarray
    phase: np.ndarray | None = None


def polyline_points(vertices, n_per_segment: int) -> np.ndarray:
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or len(v) < 2:
        raise ValueError("a polyline needs at least two vertices")
    pts = [v[0]]
    for a, b in zip(v[:-1], v[1:]):
        t = np.linspace(0.0, 1.0, n_per_segment + 1)[1:]
        pts.extend(a + (b - a) * t[:, None])
    return np.array(pts)


def sample_current_density(solution, points, step: int = -1) -> LineSample:
    """|j| (and its phase for harmonic runs) at the given points."""
    sys = solution.system
    mesh = sys.mesh
    points = np.atleast_2d(np.asarray(points, dtype=float))
    tri = locate_points(mesh, points)
    if np.any(tri < 0):
        bad = points[np.flatnonzero(tri < 0)[0]]
        raise PostprocessingError(f"sample point {bad.tolist()} lies outside the mesh")
    xs, dxs = _field_history(solution)
    k = 0 if solution.kind == "harmonic" else step
    x, dx = xs[k], dxs[k]
    space = sys.dofspace
    if space.formulation == "av":
        lam = barycentric(mesh, tri, points)
        nodal = space.extension @ dx[: space.n_field]
        a = np.sum(lam * nodal[mesh.triangles[tri]], axis=1)
        g = np.ones(len(points))
        if mesh.coordinate_system == AXISYMMETRIC:
            a = a / points[:, 0]
            g = 1.0 / (2.0 * np.pi * points[:, 0])
        u = x[space.voltage]
        if sys.variant == "resolved":
            cid = sys.materials.conductor_id[tri]
            U = np.where(cid >= 0, u[np.maximum(cid, 0)], 0.0)
        else:
            alpha = sys.fw_spec.alpha_map(points)
            U = (u @ sys.fw_spec.basis(alpha)) * (sys.materials.conductor_id[tri] == 0)
        j = sys.materials.sigma[tri] * (g * U - a)
    else:
        jt = curl_matrix(mesh) @ (space.extension @ x[: space.n_field])
        j = jt[tri]
    phase = np.angle(j) if solution.kind == "harmonic" else None
    return LineSample(points, np.abs(j), phase)


def write_csv(path, header, rows) -> None:
    """Comma-separated file with a header row and 9 significant digits."""
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else f"{v:.8e}" for v in row))
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def export_fields(solution, path, fmt: str = "vtk", step: int = -1) -> Path:
    """Write |j| and region per cell plus the nodal potential (VTK) or a cell table (CSV)."""
    sys = solution.system
    mesh = sys.mesh
    xs, dxs = _field_history(solution)
    k = 0 if solution.kind == "harmonic" else step
    jq = element_current_density(sys, xs[k], dxs[k])[0]
    ed = element_data(mesh, sys.order)
    jmag = np.abs(np.sum(jq * ed.dA, axis=1) / (2.0 * ed.area * ed.rule.weights.sum()))
    path = Path(path)
    if fmt == "csv":
        c = mesh.centroids
        rows = [(x, y, str(int(r)), v) for (x, y), r, v in zip(c, mesh.tri_region, jmag)]
        write_csv(path, ["x", "y", "region", "abs_j"], rows)
        return path
    if fmt != "vtk":
        raise ValueError(f"unknown export format {fmt!r}")
    space = sys.dofspace
    point_name, point_data = None, None
    x = xs[k]
    if space.formulation == "av":
        point_name, point_data = "a", space.extension @ x[: space.n_field]
    elif space.formulation == "hphi":
        point_data = np.zeros(mesh.n_nodes, dtype=x.dtype)
        cols = np.flatnonzero(np.isin(np.arange(mesh.n_nodes), space.phi_nodes)
                              & ~np.isin(np.arange(mesh.n_nodes), space.gauge_nodes))
        nf = len(space.free_edges)
        point_data[cols] = x[nf: nf + len(cols)]
        point_name = "phi"
    out = ["# vtk DataFile Version 3.0", "foilfem field export", "ASCII", "DATASET UNSTRUCTURED_GRID",
           f"POINTS {mesh.n_nodes} double"]
    out += [f"{p[0]:.8e} {p[1]:.8e} 0.0" for p in mesh.nodes]
    out.append(f"CELLS {mesh.n_triangles} {4 * mesh.n_triangles}")
    out += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    out.append(f"CELL_TYPES {mesh.n_triangles}")
    out += ["5"] * mesh.n_triangles
    out += [f"CELL_DATA {mesh.n_triangles}", "SCALARS abs_j double 1", "LOOKUP_TABLE default"]
    out += [f"{v:.8e}" for v in jmag]
    out += ["SCALARS region int 1", "LOOKUP_TABLE default"]
    out += [str(int(r)) for r in mesh.tri_region]
    if point_name is not None:
        out += [f"POINT_DATA {mesh.n_nodes}"]
        if np.iscomplexobj(point_data):
            for part, vals in (("re", point_data.real), ("im", point_data.imag)):
                out += [f"SCALARS {point_name}_{part} double 1", "LOOKUP_TABLE default"]
                out += [f"{v:.8e}" for v in vals]
        else:
            out += [f"SCALARS {point_name} double 1", "LOOKUP_TABLE default"]
            out += [f"{v:.8e}" for v in point_data]
    try:
        path.write_text("\n".join(out) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path
