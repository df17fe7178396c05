"""Data models for predictions, parameters, datasets, and results."""

from .prediction import (
    ALL_SCORES,
    CRPS,
    HYVS,
    LOGS,
    PSEUDOS,
    QS,
    SCRPS,
    GaussianPrediction,
    ScoreKind,
    ScoreName,
)
from .params import ModelParams
from .dataset import EnvDataset, EnvSlice
from .scm import (
    CorrelationPerturb,
    CustomGamma,
    Intervention,
    MeanShiftOrthogonal,
    Observational,
    Pooled,
    ScmSpec,
    VarianceScale,
)
from .results import (
    BiasVariance,
    FitConfig,
    FitPath,
    FitRecord,
    LambdaChoice,
    MonotonicityReport,
    OptimizerConfig,
    ReplicationSummary,
    RiskTable,
    WelchResult,
)
