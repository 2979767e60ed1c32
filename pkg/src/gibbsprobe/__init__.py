"""gibbsprobe: question trained models by sampling the data they prefer.

Build a probing energy from trained models (fixed-label, model-contrast,
prediction-risky, parameter-sensitive, certainty-pinned terms plus anchor
regularizers), then draw samples from exp(-energy / temperature) with a
Metropolis-adjusted Langevin chain. A closed-form linear-regression case
doubles as the correctness oracle for the whole pipeline.
"""

from .core import (
    ColumnSpec,
    DataPoint,
    Dataset,
    ParamVector,
    TableSchema,
    Temperature,
    decode_sample,
    one_hot_encode,
    read_csv,
)
from .datasets import make_dataset
from .probing import (
    AnchorRegularizer,
    ParamEnsemble,
    ProbeFunction,
    certainty_pin_energy,
    ensemble_fixed_label_energy,
    fixed_label_energy,
    model_contrast_energy,
    param_sensitive_energy,
    regression_contrast_energy,
    regression_sensitive_energy,
    risky_energy,
)
from .sampler import (
    ChainConfig,
    ChainState,
    ProbeReport,
    draw_param_ensemble,
    mala_step,
    run_chain,
    run_chains,
    run_tree_chain,
    smoothed_gradient,
)
from .analytic_lr import (
    GaussianPosterior,
    LrSummary,
    linear_fit_summary,
    lr_data_energy,
    lr_data_posterior,
    lr_parameter_posterior,
)
from .latent import LatentMap, pushforward_probe

__version__ = "0.1.0"
