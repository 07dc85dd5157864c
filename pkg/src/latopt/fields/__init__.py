from latopt.fields.fractions import (
    cell_volume_fraction,
    cell_volume_fraction_grad,
    element_solid_fraction,
    feasible_isotropic_alpha,
)
from latopt.fields.grid import DesignFields, GridDomain, UnitCellSpec
from latopt.fields.shape import build_compilation_graph, threshold_shape
