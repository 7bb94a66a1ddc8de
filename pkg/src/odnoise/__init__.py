"""Noise models and error-ratio scaling for stop-to-stop O-D share matrices."""
from .core import DeltaMatrix, ErrorSummary, ODShareMatrix, compare, delta, error_summary
from .errors import (
    ClampError,
    ConsistencyError,
    EmptyMaskError,
    ExtrapolationError,
    FormatError,
    InvalidMatrixError,
    ODNoiseError,
    ShapeMismatchError,
)
from .experiment import (
    AggregationResult,
    SweepConfig,
    SweepResult,
    aggregate_and_score,
    aggregation_study,
    empirical_points,
    run_sweep,
)
from .noise import (
    NoiseRealization,
    NoiseSpec,
    NoiseTerm,
    apply,
    asymmetric_spec,
    draw_additive,
    draw_marginal,
    draw_multiplicative,
    draw_structured,
)
from .regress import LowessModel, fit_lowess, infer_od_error, predict_ratio
from .synth import generate_uniform

__version__ = "0.1.0"
