from latopt.fea.bc import BoundaryConditions, read_bc_file, write_bc_file
from latopt.fea.element import QuadElement, element_stiffness, penalized_stiffness
from latopt.fea.solver import StateVector, assemble, assemble_and_solve, element_dofs
from latopt.fea.stress import PrincipalStress, element_stress_strain, principal_directions
