# Estimators and checks over sample sets

from app.application.stat_lab.clt import clt_report, eigen_clt_covariance
from app.application.stat_lab.counterexample import counterexample_report
from app.application.stat_lab.decay import decay_suite, direction_grid, pilot_rate
from app.application.stat_lab.independence import asymptotic_independence_report
from app.application.stat_lab.ks import (
    ks_point_mass,
    ks_statistic,
    ks_threshold,
    two_sample_ks,
)
from app.application.stat_lab.lyapunov import (
    lyapunov_estimate,
    rate_from_gap,
    sum_is_zero,
    top_gap,
)
from app.application.stat_lab.regularity import (
    ratio_regularity_comparison,
    regularity_profile,
)
from app.application.stat_lab.tails import (
    cartan_jordan_gap_tail,
    certificate_rate,
    delta_tail,
    ratio_tail,
    wilson_half_width,
)

__all__ = [
    "asymptotic_independence_report",
    "cartan_jordan_gap_tail",
    "certificate_rate",
    "clt_report",
    "counterexample_report",
    "decay_suite",
    "delta_tail",
    "direction_grid",
    "eigen_clt_covariance",
    "ks_point_mass",
    "ks_statistic",
    "ks_threshold",
    "lyapunov_estimate",
    "pilot_rate",
    "rate_from_gap",
    "ratio_regularity_comparison",
    "ratio_tail",
    "regularity_profile",
    "sum_is_zero",
    "top_gap",
    "two_sample_ks",
    "wilson_half_width",
]
