"""Random quantum channels induced by Haar isometries."""
from .sampling import (
    ChannelSample,
    assemble_isometry,
    channel_from_isometry,
    kraus_blocks,
    sample_channel,
    sample_ginibre,
    sample_haar_isometry,
)
from .superop import (
    DenseSizeError,
    RestrictedOperator,
    SuperOperator,
    choi_matrix,
    max_entangled,
    overlap_f,
    overlap_f_batch,
    realign,
    super_operator,
)
from .spectral import (
    ConvergenceError,
    NonUniqueFixedPointWarning,
    SolverInfo,
    SpectralReport,
    contraction_profile,
    fixed_point,
    hermitian_top_eigs,
    purity,
    restricted_norm,
    second_eigenvalue_abs,
    spectral_report,
    top_singular_values,
    von_neumann_entropy,
)
from .gaussian import (
    GaussianModelOperator,
    TwirlEstimate,
    estimate_twirl_structure,
    gaussian_model_norm,
    sample_gaussian_model,
)
