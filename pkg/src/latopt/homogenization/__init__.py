from latopt.homogenization.cell import CellDiscretization, cell_solid_fraction, homogenize_cell
from latopt.homogenization.lookup import (
    ElasticityLookup,
    build_lookup,
    interpolate_D,
    load_or_build_lookup,
)
from latopt.homogenization.voigt import (
    isotropic_stiffness,
    rotate_tensor,
    rotation_to_voigt,
    voigt_size,
)
