"""Cauchy-Szego kernel on the quaternionic Heisenberg group."""
from .quaternion import Quaternion, DimensionError, B_MATRICES, b_matrix, qmul, qconj, im_bilinear
from .heisenberg import (
    GroupPoint, SiegelPoint, LatticeSpec, DomainError, group_mul, group_inv, dilate, hnorm, rho,
    boundary_to_group, group_to_boundary, vector_field_flow, lie_bracket, flow_commutator,
)
from .kernel import (
    KernelConfig, SingularityError, NearAxisError, s_sum_form, s_closed_form, s_derivative_oracle,
    s_eval, K, K_eps, S_two_point, grad_s, YK,
)

__version__ = "0.1.0"
