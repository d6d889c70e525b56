"""Cooperative compressive power spectrum estimation with multi-coset ruler banks."""

from .design import DesignReport, design_for_groups, design_greedy, design_m2, extend_bank, verify_bank
from .estimator import (
    CompressedSeries,
    GroupCorrelations,
    SensorBlockSeries,
    compress,
    estimate_group,
    estimate_spectrum,
    exact_group_correlations,
    fuse,
    sample_correlations,
    stack_group,
)
from .ruler import (
    CosetPattern,
    DifferenceSet,
    DomainError,
    RulerBank,
    are_non_overlapping,
    difference_set,
    is_circular_golomb,
    is_complete_circular_ruler,
    is_incomplete_circular_ruler,
    lower_bound_z,
    union_covers,
)
from .system import (
    AutocorrelationVector,
    PowerSpectrum,
    RankDeficientError,
    SystemMatrix,
    assemble_rx,
    build_system,
    check_full_column_rank,
    power_spectrum,
    reconstruct_r0,
    reconstruct_r1,
)

__version__ = "0.1.0"
