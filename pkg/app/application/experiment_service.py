"""Experiment service orchestrating one command run.

Each ``run_*`` function builds the measure, computes its report, writes the
artifacts and only then checks the exact invariants of the command, so a
violation still leaves the evidence on disk. Statistical gates are soft: a
failing one is logged as a warning and the run succeeds.
"""

import json
import math
from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict

from app.application.matrix_measures import build_measure, wedge_measure
from app.application.projective_geometry import (
    batched_certificate,
    batched_eigen_moduli,
    certificate_report,
)
from app.application.stat_lab import (
    asymptotic_independence_report,
    cartan_jordan_gap_tail,
    certificate_rate,
    clt_report,
    counterexample_report,
    decay_suite,
    delta_tail,
    eigen_clt_covariance,
    ks_threshold,
    lyapunov_estimate,
    ratio_regularity_comparison,
    ratio_tail,
    regularity_profile,
    sum_is_zero,
)
from app.application.walk_engine import run_monte_carlo, stationary_samples
from app.core.config import settings
from app.domain.errors import (
    CertificateContractViolation,
    ConfigError,
    InvariantViolation,
)
from app.domain.experiment import EnsembleMeasureSpec, ExperimentConfig
from app.domain.geometry import ProjPoint, SquareMatrix
from app.domain.measure import MatrixMeasure
from app.domain.reports import BatchCertifyReport, CsvTable, TailCurve
from app.domain.walk import SampleSet
from app.infrastructure.artifacts import ArtifactWriter
from app.infrastructure.rng import StreamPurpose, generator_for, seed_lineage, stream

UNIMODULAR_TOL = 1e-12
LOG_ORDER_TOL = 1e-9
DET_SUM_TOL = 1e-9
NULL_VARIANCE_TOL = 1e-12
CERTIFY_BOUND_SLACK = 1e-10
SIMPLICITY_GAP = 1e-8
BATCH_DIMS = range(2, 7)
COUNTEREXAMPLE_DEFAULTS = {"lambda_": 2.0, "theta": 0.5}


class CommandOutcome(BaseModel):
    """What the CLI prints after a command: artifacts and a summary table."""

    model_config = ConfigDict(frozen=True)

    command: str
    artifacts: tuple[str, ...]
    summary: dict[str, Any]


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _writer(config: ExperimentConfig, command: str, *purposes: StreamPurpose) -> ArtifactWriter:
    return ArtifactWriter(config, command, seed_lineage(config.master_seed, *purposes))


def _finish(
    writer: ArtifactWriter,
    result: Any,
    tables: dict[str, CsvTable],
    summary: dict[str, Any],
) -> CommandOutcome:
    paths = writer.write(result, tables)
    return CommandOutcome(
        command=writer.command,
        artifacts=tuple(str(p) for p in paths),
        summary=summary,
    )


def _soft_gate(name: str, value: float, threshold: float) -> bool:
    """Log a warning when a statistical number misses its threshold."""
    ok = value <= threshold
    if not ok:
        logger.warning(f"Soft gate {name}: {value:.4g} exceeds {threshold:.4g}")
    return ok


def _gate_threshold(config: ExperimentConfig, trials: int) -> float:
    if config.ks_threshold is not None:
        return config.ks_threshold
    return float(ks_threshold(trials, settings.KS_SLACK))


def is_unimodular(mu: MatrixMeasure) -> bool:
    """True when every increment has |det| = 1."""
    if not mu.is_finite:
        return True
    log_dets = np.linalg.slogdet(mu.atom_stack())[1]
    return bool(np.all(np.abs(log_dets) < UNIMODULAR_TOL))


def _joined(tables: list[CsvTable]) -> CsvTable:
    header = tables[0][0]
    return header, [row for _, rows in tables for row in rows]


def _check_walk_invariants(samples: SampleSet, mu: MatrixMeasure, full_spectrum: bool) -> None:
    """ρ ≤ ‖·‖ on every trial; coordinate sums equal 0 for det-1 walks.

    Raises:
        InvariantViolation: If either exact relation fails
    """
    slack = LOG_ORDER_TOL * np.maximum(1.0, np.abs(samples.log_norm))
    excess = samples.log_specrad - samples.log_norm - slack
    if np.any(excess > 0):
        trial, col = np.unravel_index(int(np.argmax(excess)), excess.shape)
        raise InvariantViolation(
            f"trial {trial} at n={samples.checkpoints[col]}: spectral radius exceeds norm"
        )
    if full_spectrum and is_unimodular(mu) and samples.log_norm.size:
        for name in ("cartan", "jordan"):
            sums = np.abs(getattr(samples, name).sum(axis=-1))
            if np.max(sums) > DET_SUM_TOL:
                raise InvariantViolation(
                    f"{name} coordinates of a det-1 walk sum to {np.max(sums):.3e}"
                )


def sample_set_table(samples: SampleSet) -> CsvTable:
    d = samples.dim
    header = [
        "trial",
        "n",
        "log_norm",
        "log_specrad",
        "delta_n",
        "log_gap",
        *[f"cartan_{i + 1}" for i in range(d)],
        *[f"jordan_{i + 1}" for i in range(d)],
        "degenerate",
    ]
    rows = []
    for t in range(samples.trials):
        for c, n in enumerate(samples.checkpoints):
            rows.append(
                [
                    t,
                    n,
                    samples.log_norm[t, c],
                    samples.log_specrad[t, c],
                    samples.delta_n[t, c],
                    samples.log_gap[t, c],
                    *samples.cartan[t, c],
                    *samples.jordan[t, c],
                    bool(samples.degenerate[t, c]),
                ]
            )
    return header, rows


def sample_set_payload(samples: SampleSet) -> dict[str, Any]:
    return {
        "measure_label": samples.measure_label,
        "flags": samples.flags,
        "side": samples.side,
        "dim": samples.dim,
        "n": samples.n,
        "checkpoints": samples.checkpoints,
        "trials": samples.trials,
        "columns": {
            name: getattr(samples, name)
            for name in (
                "log_norm",
                "log_specrad",
                "delta_n",
                "log_gap",
                "degenerate",
                "cartan",
                "jordan",
                "v_plus",
                "h_minus",
            )
        },
    }


def _samples(
    config: ExperimentConfig,
    mu: MatrixMeasure,
    checkpoints: tuple[int, ...],
    full_spectrum: bool,
    side: str = "left",
) -> SampleSet:
    return run_monte_carlo(
        mu,
        config.n,
        checkpoints,
        config.trials,
        config.master_seed,
        config.threads,
        side=side,
        full_spectrum=full_spectrum,
        config_echo=config.artifact_echo(),
    )


def _pilot_lambdas(config: ExperimentConfig, mu: MatrixMeasure, full_spectrum: bool) -> tuple[float, ...]:
    """Lyapunov exponents from an independent, longer pilot run."""
    pilot_n = config.pilot_n or settings.PILOT_FACTOR * config.n
    pilot_trials = config.pilot_trials or max(settings.LYAPUNOV_MIN_TRIALS, min(config.trials, 1000))
    pilot = run_monte_carlo(
        mu,
        pilot_n,
        (pilot_n,),
        pilot_trials,
        config.master_seed,
        config.threads,
        full_spectrum=full_spectrum,
        purpose=StreamPurpose.PILOT,
    )
    estimate = lyapunov_estimate(pilot)
    logger.info(f"Pilot run: n={pilot_n}, trials={pilot_trials}, lambda_1={estimate.lambdas[0]:.6g}")
    return estimate.lambdas


def _tail_summary(curve: TailCurve, prefix: str) -> dict[str, Any]:
    return {f"{prefix}(n={curve.n}, eps={e:g})": p for e, p in zip(curve.epsilons, curve.probs, strict=True)}


def _check_unit_tail(curves: list[TailCurve]) -> None:
    for curve in curves:
        for eps, prob in zip(curve.epsilons, curve.probs, strict=True):
            if eps >= 1.0 and prob != 1.0:
                raise InvariantViolation(
                    f"{curve.label} tail at n={curve.n}, eps={eps:g} is {prob}, not 1"
                )


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def run_simulate(config: ExperimentConfig) -> CommandOutcome:
    mu = build_measure(config.measure)
    samples = _samples(config, mu, config.effective_checkpoints, config.full_spectrum, config.side)
    outcome = _finish(
        _writer(config, "simulate", StreamPurpose.TRIALS),
        sample_set_payload(samples),
        {"simulate": sample_set_table(samples)},
        {
            "measure": mu.label,
            "trials": samples.trials,
            "checkpoints": ",".join(str(c) for c in samples.checkpoints),
            "mean_log_norm/n": float(samples.at("log_norm").mean() / samples.checkpoints[-1]),
            "mean_log_specrad/n": float(samples.at("log_specrad").mean() / samples.checkpoints[-1]),
            "degenerate_fraction": float(samples.at("degenerate").mean()),
        },
    )
    _check_walk_invariants(samples, mu, config.full_spectrum)
    return outcome


def run_clt(config: ExperimentConfig) -> CommandOutcome:
    mu = build_measure(config.measure)
    samples = _samples(config, mu, (config.n,), full_spectrum=False)
    lambda_hat = None
    purposes = [StreamPurpose.TRIALS]
    if config.centering == "pilot":
        lambda_hat = _pilot_lambdas(config, mu, full_spectrum=False)[0]
        purposes.append(StreamPurpose.PILOT)
    report = clt_report(samples, config.observable, lambda_hat)
    gate = _gate_threshold(config, report.trials)
    summary = {
        "measure": mu.label,
        "observable": report.observable,
        "centering": report.centering,
        "lambda_hat": report.lambda_hat,
        "sigma_hat": report.sigma_hat,
        "sigma_hat_norm": report.sigma_hat_norm,
        "sigma_hat_specrad": report.sigma_hat_specrad,
        "ks_vs_gaussian": report.ks_vs_gaussian,
        "ks_norm_vs_specrad": report.ks_norm_vs_specrad,
        "ks_threshold": gate,
        "ks_vs_gaussian_ok": _soft_gate("ks_vs_gaussian", report.ks_vs_gaussian, gate),
        "ks_norm_vs_specrad_ok": _soft_gate("ks_norm_vs_specrad", report.ks_norm_vs_specrad, gate),
    }
    outcome = _finish(_writer(config, "clt", *purposes), report, {"clt": report.csv_table()}, summary)
    _check_walk_invariants(samples, mu, full_spectrum=False)
    return outcome


def run_ratio(config: ExperimentConfig) -> CommandOutcome:
    mu = build_measure(config.measure)
    samples = _samples(config, mu, config.effective_checkpoints, config.full_spectrum)
    curves = [ratio_tail(samples, config.eps_grid, n) for n in samples.checkpoints]
    rate = certificate_rate(samples)
    summary = {"measure": mu.label, **_tail_summary(curves[-1], "P(ratio<=eps)")}
    summary["certificate_fraction"] = rate.fractions[-1]
    outcome = _finish(
        _writer(config, "ratio", StreamPurpose.TRIALS),
        {"curves": curves, "certificate_rate": rate},
        {
            "ratio": _joined([c.csv_table() for c in curves]),
            "ratio_certificate": rate.csv_table(),
        },
        summary,
    )
    _check_unit_tail(curves)
    _check_walk_invariants(samples, mu, config.full_spectrum)
    return outcome


def run_delta(config: ExperimentConfig) -> CommandOutcome:
    mu = build_measure(config.measure)
    samples = _samples(config, mu, config.effective_checkpoints, config.full_spectrum)
    curves = [delta_tail(samples, config.eps_grid, n) for n in samples.checkpoints]
    independence = asymptotic_independence_report(
        mu, config.n, config.trials, config.master_seed, threads=config.threads
    )
    summary = {
        "measure": mu.label,
        **_tail_summary(curves[-1], "P(delta<=eps)"),
        "drift_prob": independence.drift_prob,
        "ks_split_vs_full": independence.ks_split_vs_full,
    }
    outcome = _finish(
        _writer(config, "delta", StreamPurpose.TRIALS, StreamPurpose.PILOT),
        {"curves": curves, "independence": independence},
        {"delta": _joined([c.csv_table() for c in curves])},
        summary,
    )
    _check_unit_tail(curves)
    _check_walk_invariants(samples, mu, config.full_spectrum)
    return outcome


def run_lyapunov(config: ExperimentConfig) -> CommandOutcome:
    mu = build_measure(config.measure)
    samples = _samples(config, mu, config.effective_checkpoints, full_spectrum=True)
    estimate = lyapunov_estimate(samples)
    gap_tail = cartan_jordan_gap_tail(samples, config.m_grid)
    summary: dict[str, Any] = {"measure": mu.label, "n": estimate.n_used}
    for i, (lam, se) in enumerate(zip(estimate.lambdas, estimate.std_errors, strict=True)):
        summary[f"lambda_{i + 1}"] = lam
        summary[f"std_error_{i + 1}"] = se
    summary["top_gap"] = estimate.top_gap
    summary["specrad_rate"] = estimate.specrad_rate
    if is_unimodular(mu):
        summary["sum_is_zero"] = sum_is_zero(estimate)
        if not summary["sum_is_zero"]:
            logger.warning(f"Lyapunov exponents of {mu.label} do not sum to 0 within 3 std errors")
    outcome = _finish(
        _writer(config, "lyapunov", StreamPurpose.TRIALS),
        {"estimate": estimate, "cartan_jordan_gap_tail": gap_tail},
        {"lyapunov": estimate.csv_table(), "lyapunov_gap_tail": gap_tail.csv_table()},
        summary,
    )
    _check_walk_invariants(samples, mu, full_spectrum=True)
    return outcome


def run_eigen_clt(config: ExperimentConfig) -> CommandOutcome:
    mu = build_measure(config.measure)
    samples = _samples(config, mu, (config.n,), full_spectrum=True)
    lambdas = None
    purposes = [StreamPurpose.TRIALS]
    if config.centering == "pilot":
        lambdas = _pilot_lambdas(config, mu, full_spectrum=True)
        purposes.append(StreamPurpose.PILOT)
    report = eigen_clt_covariance(samples, lambdas)
    summary: dict[str, Any] = {"measure": mu.label, "n": report.n, "trials": report.trials}
    for i, ev in enumerate(report.k_eigenvalues):
        summary[f"k_eigenvalue_{i + 1}"] = ev
    summary["null_direction_variance"] = report.null_direction_variance
    outcome = _finish(
        _writer(config, "eigen-clt", *purposes),
        report,
        {"eigen-clt": report.csv_table()},
        summary,
    )
    _check_walk_invariants(samples, mu, full_spectrum=True)
    if is_unimodular(mu) and report.null_direction_variance > NULL_VARIANCE_TOL:
        raise InvariantViolation(
            f"null direction variance {report.null_direction_variance:.3e} "
            f"for det-1 measure {mu.label}"
        )
    return outcome


def _proximality_index(config: ExperimentConfig, mu: MatrixMeasure) -> int:
    return config.proximality_index or mu.flags.proximality_index_hint or 1


def run_regularity(config: ExperimentConfig) -> CommandOutcome:
    mu = build_measure(config.measure)
    p = _proximality_index(config, mu)
    nu_measure = wedge_measure(mu, p) if p > 1 else mu
    x0 = ProjPoint(vec=np.ones(nu_measure.dim))
    points = stationary_samples(
        nu_measure,
        x0,
        config.stationary_n,
        config.stationary_points,
        config.master_seed,
        config.threads,
    )
    profile = regularity_profile(
        points,
        config.t_grid,
        config.hyperplane_count,
        config.master_seed,
        config.adaptive_points,
    )
    samples = _samples(config, mu, (config.n,), full_spectrum=False)
    curve = ratio_tail(samples, config.eps_grid)
    rows = ratio_regularity_comparison(curve, profile, p, config.bound_constant)
    summary: dict[str, Any] = {"measure": mu.label, "proximality_index": p, "points": profile.points}
    for t, prob in zip(profile.t_grid, profile.sup_probs, strict=True):
        summary[f"sup_H nu(delta<={t:g})"] = prob
    comparison: CsvTable = (
        ["epsilon", "ratio_prob", "profile_t", "profile_value"],
        [[r.epsilon, r.ratio_prob, r.profile_t, r.profile_value] for r in rows],
    )
    return _finish(
        _writer(
            config,
            "regularity",
            StreamPurpose.TRIALS,
            StreamPurpose.STATIONARY,
            StreamPurpose.HYPERPLANES,
        ),
        {"profile": profile, "ratio_curve": curve, "comparison": rows},
        {"regularity": profile.csv_table(), "regularity_comparison": comparison},
        summary,
    )


def run_decay(config: ExperimentConfig) -> CommandOutcome:
    mu = build_measure(config.measure)
    curves = decay_suite(
        mu,
        config.decay_item,
        config.n_grid,
        config.trials,
        config.master_seed,
        rate=config.decay_rate,
        eps=config.decay_eps,
        coupling_n=config.coupling_n,
        threads=config.threads,
    )
    sup = curves[0]
    summary: dict[str, Any] = {"measure": mu.label, "item": sup.item, "rate_used": sup.rate_used}
    for n, prob in zip(sup.n_grid, sup.probs, strict=True):
        summary[f"sup P(n={n})"] = prob
    summary["fitted_rate"] = sup.fitted_rate
    purposes = [StreamPurpose.TRIALS]
    if config.decay_rate is None and config.decay_item != 1:
        purposes.append(StreamPurpose.PILOT)
    return _finish(
        _writer(config, "decay", *purposes),
        {"curves": curves},
        {"decay": _joined([c.csv_table() for c in curves])},
        summary,
    )


def counterexample_parameters(config: ExperimentConfig) -> tuple[float, float]:
    """(λ, θ) from a notconv measure block, else the defaults λ=2, θ=0.5."""
    spec = config.measure
    if isinstance(spec, EnsembleMeasureSpec) and spec.ensemble == "notconv":
        return spec.lambda_, spec.theta
    return COUNTEREXAMPLE_DEFAULTS["lambda_"], COUNTEREXAMPLE_DEFAULTS["theta"]


def run_counterexample(config: ExperimentConfig) -> CommandOutcome:
    lambda_, theta = counterexample_parameters(config)
    report = counterexample_report(
        lambda_,
        theta,
        config.n,
        config.trials,
        config.master_seed,
        ks_gate=config.ks_threshold,
        threads=config.threads,
    )
    summary = {
        "lambda": report.lambda_,
        "theta": report.theta,
        "odd_checkpoints": report.odd_checkpoints,
        "odd_max_abs_log_specrad": report.odd_max_abs_log_specrad,
        "odd_exact": report.odd_exact,
        "s_mismatches": report.s_mismatches,
        "s_match": report.s_match,
        "ks_raw": report.ks_raw,
        "ks_lattice": report.ks_lattice,
        "ks_threshold": report.ks_threshold,
        "ks_lattice_ok": _soft_gate("ks_lattice", report.ks_lattice, report.ks_threshold),
        "y_variance": report.y_variance,
        "y_variance_expected": report.y_variance_expected,
        "lyapunov_top": report.lyapunov_top,
    }
    table: CsvTable = (["key", "value"], [[k, v] for k, v in summary.items()])
    outcome = _finish(
        _writer(config, "counterexample", StreamPurpose.TRIALS, StreamPurpose.REFERENCE),
        report,
        {"counterexample": table},
        summary,
    )
    if not report.exact_checks_pass:
        raise InvariantViolation(
            f"odd steps exact={report.odd_exact}, "
            f"{report.s_mismatches} mismatched walk values"
        )
    return outcome


# ---------------------------------------------------------------------------
# certify
# ---------------------------------------------------------------------------


def load_matrix(path: str | Path) -> SquareMatrix:
    """Read a matrix file: a JSON list of rows, or ``{"matrix": rows}``.

    Raises:
        ConfigError: If the file cannot be read or parsed
        SingularInput: If the matrix is not invertible
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read matrix file {path}: {e}") from e
    if isinstance(data, dict):
        data = data.get("matrix")
    if not isinstance(data, list):
        raise ConfigError(f"{path} holds no list of matrix rows")
    return SquareMatrix(entries=data)


def _random_matrices(gen: np.random.Generator, count: int, dim: int) -> np.ndarray:
    """Gaussian matrices under three scale mixes: plain, row-scaled and near rank one."""
    g = gen.standard_normal((count, dim, dim))
    mix = gen.integers(0, 3, count)
    row_scale = np.exp(gen.normal(0.0, 3.0, (count, dim, 1)))
    u = gen.standard_normal((count, dim, 1))
    v = gen.standard_normal((count, 1, dim))
    spike = np.exp(gen.uniform(0.0, 8.0, (count, 1, 1))) * (u @ v)
    g = np.where((mix == 1)[:, None, None], g * row_scale, g)
    return np.where((mix == 2)[:, None, None], g + spike, g)


def batch_certify(count: int, master_seed: int) -> BatchCertifyReport:
    """Check the certificate contract on ``count`` random matrices.

    Matrices without a certificate are only counted. Every certified one
    must satisfy ρ/‖g‖ ≥ δ_g/2 − 1e-10 and have a simple top eigenvalue
    modulus (relative gap above 1e-8).
    """
    gen = generator_for(stream(master_seed, StreamPurpose.BATCH_CERTIFY))
    dims = gen.integers(BATCH_DIMS.start, BATCH_DIMS.stop, count)
    certificates = bound_violations = simplicity_violations = 0
    min_slack = math.inf
    for d in BATCH_DIMS:
        m = int(np.count_nonzero(dims == d))
        if m == 0:
            continue
        arr = _random_matrices(gen, m, d)
        has, delta, _ = batched_certificate(arr)
        moduli = batched_eigen_moduli(arr)
        top_singular = np.linalg.svd(arr, compute_uv=False)[:, 0]
        ratio = np.minimum(moduli[:, 0] / top_singular, 1.0)
        slack = ratio - delta / 2.0
        rel_gap = (moduli[:, 0] - moduli[:, 1]) / moduli[:, 0]
        certificates += int(has.sum())
        bound_violations += int(np.count_nonzero(has & (slack < -CERTIFY_BOUND_SLACK)))
        simplicity_violations += int(np.count_nonzero(has & (rel_gap <= SIMPLICITY_GAP)))
        if has.any():
            min_slack = min(min_slack, float(slack[has].min()))
        logger.debug(f"certified dim {d}: {m} matrices, {int(has.sum())} certificates")
    return BatchCertifyReport(
        matrices=count,
        certificates=certificates,
        bound_violations=bound_violations,
        simplicity_violations=simplicity_violations,
        min_slack=min_slack if math.isfinite(min_slack) else None,
    )


def run_certify(config: ExperimentConfig) -> CommandOutcome:
    if config.batch is not None:
        report = batch_certify(config.batch, config.master_seed)
        summary = report.model_dump()
        outcome = _finish(
            _writer(config, "certify", StreamPurpose.BATCH_CERTIFY),
            report,
            {"certify": (["key", "value"], [[k, v] for k, v in summary.items()])},
            summary,
        )
        if report.violations:
            raise CertificateContractViolation(
                f"{report.bound_violations} bound and "
                f"{report.simplicity_violations} simplicity violations "
                f"among {report.certificates} certificates"
            )
        return outcome

    if config.matrix_path is None:
        raise ConfigError("certify needs a matrix file or --batch")
    g = load_matrix(config.matrix_path)
    report = certificate_report(g)
    summary = report.model_dump()
    if not report.has_certificate:
        summary["note"] = "no certificate (singular gap too small)"
    outcome = _finish(
        _writer(config, "certify"),
        {"matrix": g.to_rows(), "report": report},
        {"certify": (["key", "value"], [[k, v] for k, v in summary.items()])},
        summary,
    )
    if report.bound_verified is False:
        raise CertificateContractViolation(
            f"rho/norm={report.ratio!r} is below delta_g/2={report.lower_bound!r}"
        )
    return outcome


COMMANDS: dict[str, Callable[[ExperimentConfig], CommandOutcome]] = {
    "certify": run_certify,
    "simulate": run_simulate,
    "clt": run_clt,
    "ratio": run_ratio,
    "delta": run_delta,
    "lyapunov": run_lyapunov,
    "eigen-clt": run_eigen_clt,
    "regularity": run_regularity,
    "decay": run_decay,
    "counterexample": run_counterexample,
}
