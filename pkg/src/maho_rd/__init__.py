"""Rate-distortion bounds for the Gaussian many-help-one problem on tree-structured sources."""

from .source_model import RateAllocation, SourceSpec, SpecError, ceo_spec, ci_spec, load_spec
from .sum_rate import (SumRateResult, ceo_closed_form, ceo_limit, numeric_sum_rate,
                       parametric_sum_rate)

__all__ = [
    "RateAllocation", "SourceSpec", "SpecError", "SumRateResult", "ceo_closed_form",
    "ceo_limit", "ceo_spec", "ci_spec", "load_spec", "numeric_sum_rate", "parametric_sum_rate",
]
__version__ = "0.1.0"
