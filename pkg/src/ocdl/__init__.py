"""Online convolutional dictionary learning.

Library and CLI for learning translation-invariant filter banks from
streaming image data: a first-order projected-SGD learner, a second-order
surrogate learner with a forgetting factor, a CBPDN sparse-coding solver,
and masked-data (inpainting-style) variants of all three.
"""

from .config import StepSchedule, StopRule, TrainConfig
from .csc import (
    CbpdnResult,
    CscSettings,
    cbpdn_kkt_gap,
    cbpdn_masked_solve,
    cbpdn_solve,
)
from .data import (
    BoundaryArtifactWarning,
    TileSpec,
    load_grayscale,
    salt_pepper_corrupt,
    split_image,
    stream_sampler,
    tikhonov_highpass,
    tikhonov_highpass_masked,
)
from .evaluate import (
    ConvergenceRecord,
    append_record,
    clt_harness,
    memory_estimate,
    read_log_csv,
    test_objective,
    write_log_csv,
)
from .fileio import (
    load_dictionary,
    load_mask_pgm,
    read_config_file,
    save_dictionary,
    save_filter_grid,
    save_mask_pgm,
)
from .projections import (
    project_dictionary,
    project_padded_dictionary,
    random_dictionary,
    soft_threshold,
)
from .sgd import (
    sgd_step_frequency,
    sgd_step_masked_frequency,
    sgd_step_masked_spatial,
    sgd_step_spatial,
    step_size,
    train_sgd,
)
from .signals import (
    CoeffMaps,
    Dictionary,
    FreqView,
    Mask,
    PaddedDictionary,
    Signal,
    coding_loss,
    coefficient_operator,
    dft_forward,
    dft_inverse,
    dictionary_gradient,
    dictionary_gradient_freq,
    reconstruct,
    reconstruct_adjoint,
)
from .surrogate import (
    Forgetting,
    FrequencyHessianAccumulator,
    SpatialHessianAccumulator,
    estimate_curvature,
    fista_dictionary_update,
    fixed_point_residual,
    forgetting_factor,
    surrogate_grad,
    train_surrogate,
)

__version__ = "0.1.0"
