"""q-moment problems for densities on the lattice ``{q^n}``.

Certified q-series and products, Jackson q-integrals, q-moments, q-Stieltjes
classes built from the zeros of ``prod_{s>=1}(1 - q^s z)``, and determinacy
classification.
"""
from .errors import (DegeneratePerturbation, DivergentMoment, DivergentTail, EpsilonOutOfRange,
                     InsufficientSupport, InvalidParameter, NegativeValue, NotNormalized,
                     OrderMismatch, PoleError, PrecisionInsufficient, QCalculusError,
                     UnboundedPerturbation, ZeroArgument, ZeroDensityValue)
from .numkernel import (NumericContext, QParam, TailCertificate, E_q, e_q, euler_product,
                        euler_series, phi, q_pochhammer, required_precision)
from .jackson import (LatticeFunction, LatticeWindow, lattice_sum, q_derivative,
                      q_integral_0_to_inf, q_integral_0_to_x)
from .qdensity import (build_cdf, density_from_json, density_to_json, equivalent, make_custom,
                       make_q_exponential, normalize, scale)
from .qmoments import MomentTable, moment_table, q_moment, tables_match
from .stieltjes import (build_h_tilde, make_perturbation, stieltjes_class, sup_norm,
                        verify_class, verify_orthogonality)
from .determinacy import (ClassificationReport, Verdict, check_condition_W,
                          check_decay_condition, classify, classify_q_exponential, compute_A)
from .growth import (GrowthReport, laurent_max_modulus, lemma2_lower_bound_check,
                     max_modulus_phi, zeng_envelope_check)

__version__ = "0.1.0"
