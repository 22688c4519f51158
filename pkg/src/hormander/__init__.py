"""Hörmander spaces, interpolation parameters and their numerical checks."""
from .errors import EvaluationError, HormanderError, InvalidInput, NumericalFailure, PreconditionError
from .expr import (AppendixParam, Compose, ConcaveMajorant, Constant, LogShift, ParamExpr,
                   PhiFromPsi, Power, PowerOf, Product, PsiFromPhi, Reiteration,
                   Representation, Sum, Table, from_dict, from_json)
from .grid import (DomainMask, GridDistribution, embedding_scan, fourier_coefficients,
                   frequency_vectors, hormander_norm, quotient_minimizer, quotient_norm)
from .param import (build_from_representation, check_weight_condition, concave_majorant,
                    matuszewska_indices, phi_from_psi, pseudoconcavity_test, psi_from_phi,
                    reiteration_compose, ro_membership)
from .spectral import (ConvolutionMap, DenseMap, DiagonalCouple, DiagonalMap, OperatorNormTriple,
                       RankOneMap, embedding_constants, interp_norm, interpolation_bound_check,
                       make_sobolev_couple, norm_identity_check, operator_norms,
                       rank_one_witness, reiteration_norm_check)

__version__ = "0.1.0"
