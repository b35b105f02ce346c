"""Formulations: a-v, full-h and h-phi, each resolved or homogenized."""

from .assembly import (ASSEMBLERS, AssembledSystem, NonlinearTerm, assemble_applied_field,
                       assemble_av, assemble_fullh, assemble_hphi, assemble_system)
from .dofs import FORMULATIONS, VARIANTS, DofSpace, build_dofspace
from .materials import (AIR, MU0, CapabilityError, ElementMaterials, ExcitationSpec,
                        FoilWindingSpec, Material, MaterialField, effective_material,
                        element_materials)

__all__ = [
    "AIR", "ASSEMBLERS", "AssembledSystem", "CapabilityError", "DofSpace", "ElementMaterials",
    "ExcitationSpec", "FORMULATIONS", "FoilWindingSpec", "MU0", "Material", "MaterialField",
    "NonlinearTerm", "VARIANTS", "assemble_applied_field", "assemble_av", "assemble_fullh",
    "assemble_hphi", "assemble_system", "build_dofspace", "effective_material", "element_materials",
]
