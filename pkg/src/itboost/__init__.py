"""Trust-weighted gradient boosting for binary classification under label noise.

Per-sample residual-direction histories are scored by Lempel-Ziv complexity,
and samples whose histories look erratic are exponentially down-weighted when
fitting each weak learner.  The package also ships a classic GBDT baseline,
seeded noise injectors, an evaluation/sweep harness, and numerical checks of
the trust-weight bounds.
"""

from .boosting import (
    BoostConfig,
    Model,
    RunTrace,
    init_score,
    load_model,
    logistic_gradient,
    save_model,
    squared_gradient,
    train,
)
from .complexity import (
    SymbolSequence,
    TrustState,
    binarize_gradient,
    lz76_complexity,
    normalize_complexities,
    quantize_gradient,
    trust_weights,
)
from .data import (
    Dataset,
    DataError,
    FoldPlan,
    load_csv,
    random_undersample,
    save_csv,
    stratified_kfold,
)
from .evaluation import (
    MetricReport,
    RankMatrix,
    accuracy,
    auc,
    cross_validate,
    f1,
    friedman_test,
    log_loss,
    noise_sweep,
    trajectory_summary,
)
from .noise import (
    NoiseMask,
    NoiseSpec,
    inject,
    inject_asymmetric,
    inject_feature_noise,
    inject_symmetric,
)
from .synth import make_gaussian_dataset
from .theory import (
    BoundReport,
    ComplexitySample,
    ratio_bound_check,
    separability_report,
    trust_bound_check,
)
from .trees import RegressionTree, fit_tree_weighted

__version__ = "0.1.0"

__all__ = [
    "BoostConfig",
    "BoundReport",
    "ComplexitySample",
    "DataError",
    "Dataset",
    "FoldPlan",
    "MetricReport",
    "Model",
    "NoiseMask",
    "NoiseSpec",
    "RankMatrix",
    "RegressionTree",
    "RunTrace",
    "SymbolSequence",
    "TrustState",
    "accuracy",
    "auc",
    "binarize_gradient",
    "cross_validate",
    "f1",
    "fit_tree_weighted",
    "friedman_test",
    "init_score",
    "inject",
    "inject_asymmetric",
    "inject_feature_noise",
    "inject_symmetric",
    "load_csv",
    "load_model",
    "log_loss",
    "logistic_gradient",
    "lz76_complexity",
    "make_gaussian_dataset",
    "noise_sweep",
    "normalize_complexities",
    "quantize_gradient",
    "random_undersample",
    "ratio_bound_check",
    "save_csv",
    "save_model",
    "separability_report",
    "squared_gradient",
    "stratified_kfold",
    "train",
    "trajectory_summary",
    "trust_bound_check",
    "trust_weights",
]
