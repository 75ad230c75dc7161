"""Exact-arithmetic laboratory for ergodic discrepancy of toral
translations relative to triangles."""

from .arithmetic import (
    ContinuedFraction,
    FixedUnit,
    PRESETS,
    ZeroInput,
    add_mod1,
    cf_expand,
    convergent_gap_check,
    dist_nearest_int,
    mul_int_mod1,
    nearest_int,
    preset,
)
from .orbit import (
    DiscrepancyTrace,
    GridSpec,
    InvalidGrid,
    MaxDiscResult,
    OrbitSpec,
    Triangle,
    bc_counter,
    discrepancy,
    discrepancy_max,
    in_triangle,
    max_discrepancy,
    polygon_discrepancy,
    strip_counts,
)
from .spectral import (
    DbarResult,
    EmptyBox,
    Frequency,
    LinearFormSelector,
    QuadGrid,
    SpectralParams,
    UlBox,
    dbar_quadrature,
    dbar_truncated,
    exp_sum_over_box,
    f1_term,
    f2_term,
    fejer_weight,
    g_damping,
    linear_form,
    term_total,
)
from .smalldivisors import (
    DepthUnavailable,
    FrequencyBox,
    PhiFunction,
    RangeTooLarge,
    ShellSpec,
    cf_harmonic_sum,
    e_expected,
    enumerate_box,
    khintchine_solutions,
    large_term_sum,
    partial_quotient_sum_test,
    shell_classify,
    tail_sums_S1_S2,
    z_count,
)
from .experiments import (
    GrowthRecord,
    PHI_BUILTINS,
    TooFewRecords,
    box_vs_triangle,
    fit_rate,
    get_phi,
    growth_scan,
)

__version__ = "0.1.0"
