# Copyright 2026 The sage-opt Authors
# SPDX-License-Identifier: Apache-2.0

from ._sage import (
    DimensionTooLarge,
    InvalidArgument,
    NonFiniteLoss,
    NotPositiveDefinite,
    SageError,
    ShapeMismatch,
    TooFewEnvironments,
    ZeroGradient,
    __version__,
    alignment_term,
    counterexample,
    curvature_term,
    gradient_agreement,
    mc_excess_risk,
    motivating_report,
    newton_schulz_polar,
    noise_scale,
    run_sage,
    svd_polar,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
