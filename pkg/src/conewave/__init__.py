"""Spectral-multiplier kernels, Schur bounds and wave parametrices on metric cones."""
from .cone_kernel import (KernelValue, RadialTriple, RegimeData, SpectralParameter, classify_regime,
                          kernel_bessel_oracle, kernel_closed, kernel_integral, t1_kernel, t2_kernel)
from .cross_section import (CircleAB, ConeGeometry, CrossSectionSpectrum, ExplicitSpectrum, ShiftedSphere,
                            SphereZeroPotential, build_spectrum, cos_mode_kernel, damped_cos_pi_kernel,
                            read_spectrum_file, schur_norm_star)
from .errors import *  # noqa: F401,F403
from .parametrix import (MetricModel, ParametrixCoeffs, e_nu_check, flat_model, hadamard_expansion,
                         hadamard_pairing, parametrix_coefficients, sphere_model, transport_alpha0,
                         transport_alpha_nu)
from .propagator import ConeGrid, OperatorNormEstimate, assemble_kernel_matrix, operator_norm, theorem_sweep
from .schur_bounds import (BoundCheckReport, kerest1_sweep, kerest2_integral, kerest2_sweep, majorant_k1,
                           majorant_k2, t1_row_integral, t2_pointwise_bound_check)
from .specfun import bessel_j, gamma_complex, legendre_p, legendre_q, weber_schafheitlin

__version__ = "0.1.0"
