"""divlab: a desk-scale numerical laboratory for divergence-form operator spectra."""

from .lattice import (DIRICHLET, NEUMANN, EquidistributedSeq, FaceField, Grid,
                      ScalarField, SubsetMask, as_scalar_field, ball, ball_mask,
                      cutoff, discrete_gradient, equidistributed_sequence,
                      full_mask, make_grid, smooth_switch, subset_norm2)
from .fields import (AlloyModel, AlloySample, CouplingDistribution, MatrixField,
                     alloy_model, ball_plateau_field, check_dir_condition, check_ellipticity,
                     check_lipschitz, checkerboard_field, constant_field,
                     identity_field, modulus_of_continuity, mollify,
                     sample_alloy, sampled_field, scalar_field, single_site_sum,
                     tent_minorant)
from .operators import DiscreteOperator, assemble, perturbation_operator, rescale
from .spectral import (EigensolveError, LiftingCurve, Spectrum, count_eigenvalues,
                       eigensolve, hf_derivative, lifting_curve, projector_sample)
from .bounds import (ConstantsConfig, ConstantsReport, c_evl_family, c_gradient,
                     c_sfucp_family, c_wegner, constants_report, delta0,
                     kappa_family)

__version__ = "0.1.0"
