"""phi-function actions of Kronecker sums through mu-mode Tucker operators."""
from .dense import ShiftInfo, expm, herm_skew_split, trace_shift, two_norm_estimate
from .integrators import DeltaPolicy, integrate
from .phi import (KroneckerSum, PhiCombinationResult, PhiSameVectorResult,
                  block_diagonal_apply, phiks_lincomb, phiks_same_vector)
from .quadrature import (BoundConfig, GLLRule, QuadraturePlan, RangeRectangle, gll_rule,
                         kernel_eval, range_rectangle, remainder_bound, select_plan,
                         tucker_count)
from .tensor import inf_norm, mu_mode_product, tucker, two_norm, unvec, vec

__all__ = [
    "BoundConfig", "DeltaPolicy", "GLLRule", "KroneckerSum", "PhiCombinationResult",
    "PhiSameVectorResult", "QuadraturePlan", "RangeRectangle", "ShiftInfo",
    "block_diagonal_apply", "expm", "gll_rule", "herm_skew_split", "inf_norm", "integrate",
    "kernel_eval", "mu_mode_product", "phiks_lincomb", "phiks_same_vector",
    "range_rectangle", "remainder_bound", "select_plan", "trace_shift", "tucker",
    "tucker_count", "two_norm", "two_norm_estimate", "unvec", "vec",
]
