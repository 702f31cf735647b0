"""Error-exponent bounds and exact experiments for classical-quantum channels.

The package computes Gallager-type auxiliary functions and Renyi conditional
entropies for channels with quantum outputs, turns them into achievability /
converse exponent curves for channel coding, randomness extraction, and
compression with quantum side information, and cross-checks the asymptotic
story with exact small-blocklength experiments over modified-Toeplitz code
families.
"""

from .channels import (
    CQChannel,
    CQState,
    DENSE_JOINT_LIMIT,
    GuardError,
    ValidationError,
    bsc_channel,
    classical_channel,
    depolarized_output_channel,
    holevo_information,
    pure_pair_channel,
    random_cq_channel,
)
from .codes import (
    ShapingMap,
    ToeplitzCodeSystem,
    collision_test,
    enumerate_toeplitz_family,
    exhaustive_max_collision_rate,
    fourier_conjugation,
    fourier_matrix,
    modified_toeplitz,
    quantize_distribution,
    shaping_channel,
)
from .duality import (
    DualStateBundle,
    DualityReport,
    build_dual_state,
    compression_dual_state,
    duality_check,
    duality_suite,
    pguess_fidelity_check,
    random_bundle,
    recovery_channel,
    uncertainty_check,
    verify_recovery_identity,
)
from .entropies import (
    conditional_vn_entropy,
    guessing_probability,
    petz_divergence,
    petz_h_up,
    sandwiched_divergence,
    sandwiched_h_down,
    sandwiched_h_up,
    umegaki_relative_entropy,
)
from .exponents import (
    E0MaxCache,
    ExponentReport,
    affine_code_bound,
    dc_exponent_bounds,
    e0,
    e0_max_over_p,
    hayashi_pa_bound,
    pa_exponent_bounds,
    random_coding_bound,
    sphere_packing_bound,
    syndrome_source_bound,
)
from .simulator import (
    AffineCodeCertificate,
    CodingExperiment,
    CompressionResult,
    CosetSweepResult,
    ExtractionResult,
    certify_affine_achievability,
    code_error_exact,
    compression_experiment,
    coset_error_sweep,
    extraction_experiment,
    product_channel,
    product_state,
)

__version__ = "0.1.0"

__all__ = [
    "CQChannel",
    "CQState",
    "DENSE_JOINT_LIMIT",
    "GuardError",
    "ValidationError",
    "bsc_channel",
    "classical_channel",
    "depolarized_output_channel",
    "holevo_information",
    "pure_pair_channel",
    "random_cq_channel",
    "ShapingMap",
    "ToeplitzCodeSystem",
    "collision_test",
    "enumerate_toeplitz_family",
    "exhaustive_max_collision_rate",
    "fourier_conjugation",
    "fourier_matrix",
    "modified_toeplitz",
    "quantize_distribution",
    "shaping_channel",
    "DualStateBundle",
    "DualityReport",
    "build_dual_state",
    "compression_dual_state",
    "duality_check",
    "duality_suite",
    "pguess_fidelity_check",
    "random_bundle",
    "recovery_channel",
    "uncertainty_check",
    "verify_recovery_identity",
    "conditional_vn_entropy",
    "guessing_probability",
    "petz_divergence",
    "petz_h_up",
    "sandwiched_divergence",
    "sandwiched_h_down",
    "sandwiched_h_up",
    "umegaki_relative_entropy",
    "E0MaxCache",
    "ExponentReport",
    "affine_code_bound",
    "dc_exponent_bounds",
    "e0",
    "e0_max_over_p",
    "hayashi_pa_bound",
    "pa_exponent_bounds",
    "random_coding_bound",
    "sphere_packing_bound",
    "syndrome_source_bound",
    "AffineCodeCertificate",
    "CodingExperiment",
    "CompressionResult",
    "CosetSweepResult",
    "ExtractionResult",
    "certify_affine_achievability",
    "code_error_exact",
    "compression_experiment",
    "coset_error_sweep",
    "extraction_experiment",
    "product_channel",
    "product_state",
    "__version__",
]
