"""Region materials, foil-winding description and excitation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from ..mesh import AlphaMap, Mesh
from ..solvers import HtsLaw
from ..topology import VoltageBasis

MU0 = 4e-7 * math.pi


class CapabilityError(NotImplementedError):
    """Requested combination of formulation and material is not supported."""


@dataclass(frozen=True)
class Material:
    """Linear magnetic material, optionally conducting (``sigma``) or superconducting (``hts``)."""

    mu_r: float = 1.0
    sigma: float | None = None
    hts: HtsLaw | None = None

    def __post_init__(self):
        if self.mu_r <= 0:
            raise ValueError("relative permeability must be positive")
        if self.sigma is not None and self.sigma <= 0:
            raise ValueError("conductivity must be positive")
        if self.sigma is not None and self.hts is not None:
            raise ValueError("a material is either ohmic or superconducting")

    @property
    def conducting(self) -> bool:
        return self.sigma is not None or self.hts is not None

    @property
    def rho(self) -> float | None:
        return None if self.sigma is None else 1.0 / self.sigma


AIR = Material()


def effective_material(foil: Material, fill_factor: float) -> Material:
    """Homogenized bulk material: rho_0 = rho_foil / fill factor.

    For a power-law foil the engineering critical current density is
    fill_factor * j_c, which gives rho_eff(j) = rho_foil(j / fill_factor) / fill_factor.
    """
    if not 0.0 < fill_factor <= 1.0:
        raise ValueError(f"fill factor must lie in (0, 1], got {fill_factor}")
    if foil.hts is not None:
        law = foil.hts
        return Material(foil.mu_r, hts=HtsLaw(law.e_c, law.j_c * fill_factor, law.n))
    if foil.sigma is None:
        raise ValueError("foil material must be conducting")
    return Material(foil.mu_r, sigma=foil.sigma * fill_factor)


@dataclass(frozen=True)
class FoilWindingSpec:
    """Homogenized winding: N_c turns in a bulk of thickness L_alpha."""

    n_turns: int
    alpha_map: AlphaMap
    basis: VoltageBasis
    foil: Material
    fill_factor: float = 1.0

    def __post_init__(self):
        if self.n_turns < 1:
            raise ValueError("n_turns must be >= 1")
        if not 0.0 < self.fill_factor <= 1.0:
            raise ValueError("fill factor must lie in (0, 1]")

    @property
    def thickness(self) -> float:
        return self.alpha_map.thickness

    @property
    def bulk_material(self) -> Material:
        return effective_material(self.foil, self.fill_factor)


@dataclass(frozen=True)
class MaterialField:
    """Region name -> material map; unknown regions are air.

    Keys may end in ``*`` to match a name prefix (``turn:*``).
    ``spurious_resistivity`` fills non-conducting regions in the full-h
    formulation only.
    """

    regions: Mapping[str, Material] = field(default_factory=dict)
    spurious_resistivity: float = 1.0

    def lookup(self, name: str) -> Material:
        if name in self.regions:
            return self.regions[name]
        for key, mat in self.regions.items():
            if key.endswith("*") and name.startswith(key[:-1]):
                return mat
        if name.startswith("gap:"):
            return AIR
        return self.regions.get("air", AIR)


@dataclass(frozen=True, eq=False)
class ElementMaterials:
    """Per-triangle material data for one formulation variant."""

    mu: np.ndarray
    sigma: np.ndarray  # 0 outside linear conductors
    conducting: np.ndarray
    hts_mask: np.ndarray
    hts_law: HtsLaw | None
    conductor_id: np.ndarray  # -1 outside conductors

    @property
    def nu(self) -> np.ndarray:
        return 1.0 / self.mu

    @property
    def rho(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.where(self.sigma > 0, 1.0 / np.where(self.sigma > 0, self.sigma, 1.0), 0.0)


def element_materials(mesh: Mesh, materials: MaterialField, variant: str,
                      fw_spec: FoilWindingSpec | None) -> ElementMaterials:
    T = mesh.n_triangles
    mu = np.empty(T)
    sigma = np.zeros(T)
    hts_mask = np.zeros(T, bool)
    cid = -np.ones(T, dtype=np.int64)
    law = None
    names = mesh.region_names
    turns = mesh.turn_regions()
    if variant == "fw":
        if fw_spec is None:
            raise ValueError("foil-winding variants need a FoilWindingSpec")
        bulk = mesh.bulk_mask()
    elif variant == "resolved":
        bulk = np.zeros(T, bool)
        if not turns:
            raise ValueError("resolved variants need turn regions in the mesh")
    else:
        raise ValueError(f"unknown variant {variant!r}")

    for rid, name in enumerate(names):
        sel = mesh.tri_region == rid
        if not sel.any():
            continue
        if variant == "fw" and bulk[sel].all():
            mat = fw_spec.bulk_material
            cid[sel] = 0
        else:
            mat = materials.lookup(name)
            if variant == "resolved" and name in turns:
                cid[sel] = turns.index(name)
            elif mat.conducting:
                raise CapabilityError(f"conducting region {name!r} is not part of the winding")
        mu[sel] = MU0 * mat.mu_r
        if mat.sigma is not None:
            sigma[sel] = mat.sigma
        if mat.hts is not None:
            hts_mask[sel] = True
            if law is not None and law != mat.hts:
                raise CapabilityError("only one superconducting law per model is supported")
            law = mat.hts
    conducting = (sigma > 0) | hts_mask
    if variant == "resolved" and np.any(conducting & (cid < 0)):
        raise CapabilityError("conductor outside the turn regions")
    if np.any((cid >= 0) & ~conducting):
        raise ValueError("winding regions must be conducting")
    return ElementMaterials(mu, sigma, conducting, hts_mask, law, cid)


@dataclass(frozen=True)
class ExcitationSpec:
    """Transport current per turn: harmonic amplitude at ``frequency`` or a waveform."""

    mode: str = "harmonic"
    frequency: float = 50.0
    amplitude: float = 1.0
    waveform: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.mode not in ("harmonic", "transient"):
            raise ValueError(f"unknown excitation mode {self.mode!r}")
        if self.frequency <= 0:
            raise ValueError("frequency must be positive")

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.frequency

    @property
    def period(self) -> float:
        return 1.0 / self.frequency

    def current(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.waveform is not None:
            return np.asarray(self.waveform(t), dtype=float)
        return self.amplitude * np.sin(self.omega * t)
