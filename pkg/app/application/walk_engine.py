"""Random walks on GL_d(ℝ) with exact log-scale renormalization.

Trials are advanced in blocks of ``settings.BLOCK_SIZE`` with batched numpy
linear algebra. Every trial owns its own counter-based stream and blocks
are reassembled in trial order, so results never depend on the number of
worker threads.

When the full spectrum is requested, the exterior powers ∧^p Lₙ for
2 ≤ p ≤ d−1 are carried alongside the main product, each renormalized
independently, and ln|det Lₙ| is accumulated exactly. The i-th Cartan and
Jordan coordinates are then differences of consecutive levels
ln‖∧^i Lₙ‖ − ln‖∧^{i−1} Lₙ‖, which stay accurate after Lₙ has collapsed
to numerical rank one.
"""

import math
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np
from loguru import logger

from app.application.matrix_measures import IncrementSampler, sampler_for
from app.application.projective_geometry import (
    batched_eigen_moduli,
    batched_kak,
    canonicalize,
    compound,
)
from app.core.config import settings
from app.domain.errors import (
    DomainError,
    EigenFailure,
    NumericalFailure,
    StepOverflow,
)
from app.domain.geometry import (
    DEGENERATE_GAP_TOL,
    CartanVector,
    JordanVector,
    ProjHyperplane,
    ProjPoint,
    SquareMatrix,
)
from app.domain.measure import MatrixMeasure
from app.domain.walk import RngStream, SampleSet, Side, WalkSample, WalkState
from app.infrastructure.parallel import ordered_map, resolve_threads
from app.infrastructure.rng import StreamPurpose, generator_for, seed_lineage, stream

LOG_DEGENERATE_GAP = math.log1p(-DEGENERATE_GAP_TOL)

Observation = dict[str, np.ndarray]


@dataclass
class BlockState:
    """Renormalized products of a block of trials advanced in lockstep.

    Row b of ``rep`` times ``exp(log_scale[b])`` is the true product of
    trial b; the same ledger holds for each entry of ``wedges``.
    """

    side: Side
    rep: np.ndarray
    log_scale: np.ndarray
    full_spectrum: bool
    wedges: list[np.ndarray] = field(default_factory=list)
    wedge_log_scales: list[np.ndarray] = field(default_factory=list)
    log_det: np.ndarray | None = None
    n: int = 0

    @classmethod
    def start(cls, dim: int, size: int, side: Side, full_spectrum: bool) -> "BlockState":
        block = cls(
            side=side,
            rep=np.broadcast_to(np.eye(dim), (size, dim, dim)).copy(),
            log_scale=np.zeros(size),
            full_spectrum=full_spectrum,
            log_det=np.zeros(size),
        )
        if full_spectrum:
            for p in range(2, dim):
                m = math.comb(dim, p)
                block.wedges.append(np.broadcast_to(np.eye(m), (size, m, m)).copy())
                block.wedge_log_scales.append(np.zeros(size))
        return block

    @property
    def dim(self) -> int:
        return self.rep.shape[-1]

    @property
    def size(self) -> int:
        return self.rep.shape[0]


def _multiply(rep: np.ndarray, x: np.ndarray, side: Side) -> np.ndarray:
    # left: Lₙ = Xₙ·Lₙ₋₁, right: Rₙ = Rₙ₋₁·Xₙ
    return x @ rep if side == "left" else rep @ x


def _renormalize(prod: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Divide each matrix by its Frobenius norm and return the log of the divisor."""
    flat = prod.reshape(prod.shape[0], -1)
    frob = np.sqrt(np.sum(flat * flat, axis=1))
    bad = ~np.isfinite(frob) | (frob == 0.0)
    if np.any(bad):
        row = int(np.flatnonzero(bad)[0])
        raise StepOverflow(f"product is not finite and nonzero at step {n}", row=row)
    return prod / frob[:, None, None], np.log(frob)


def _advance(
    block: BlockState,
    x: np.ndarray,
    wedge_x: Sequence[np.ndarray],
    log_abs_det: np.ndarray,
) -> None:
    step_n = block.n + 1
    block.rep, log_frob = _renormalize(_multiply(block.rep, x, block.side), step_n)
    block.log_scale = block.log_scale + log_frob
    for i, wx in enumerate(wedge_x):
        w, log_w = _renormalize(_multiply(block.wedges[i], wx, block.side), step_n)
        block.wedges[i] = w
        block.wedge_log_scales[i] = block.wedge_log_scales[i] + log_w
    block.log_det = block.log_det + log_abs_det
    block.n = step_n


def _failing_row(arr: np.ndarray) -> int | None:
    for row in range(arr.shape[0]):
        try:
            np.linalg.eigvals(arr[row])
        except np.linalg.LinAlgError:
            return row
    return None


def _top_moduli(arr: np.ndarray) -> np.ndarray:
    try:
        return batched_eigen_moduli(arr)
    except EigenFailure as e:
        raise EigenFailure(e.reason, row=_failing_row(arr)) from e


def observe_block(block: BlockState) -> Observation:
    """Observables of every trial of a block at its current step.

    Returns:
        Columns keyed like SampleSet: scalars have shape (B,), vectors (B, d)
    """
    size, d = block.size, block.dim
    k, a, u = batched_kak(block.rep)
    moduli = _top_moduli(block.rep)
    with np.errstate(divide="ignore"):
        log_a = np.log(a)
        log_m = np.log(moduli)
    log_norm = block.log_scale + log_a[:, 0]
    log_specrad = block.log_scale + log_m[:, 0]

    if d == 1:
        cartan = log_norm[:, None]
        jordan = log_specrad[:, None]
    elif block.full_spectrum:
        cartan_levels = [np.zeros(size), log_norm]
        jordan_levels = [np.zeros(size), log_specrad]
        for w, log_w in zip(block.wedges, block.wedge_log_scales, strict=True):
            cartan_levels.append(log_w + np.log(np.linalg.svd(w, compute_uv=False)[:, 0]))
            jordan_levels.append(log_w + np.log(_top_moduli(w)[:, 0]))
        cartan_levels.append(block.log_det)
        jordan_levels.append(block.log_det)
        cartan = np.diff(np.stack(cartan_levels, axis=1), axis=1)
        jordan = np.diff(np.stack(jordan_levels, axis=1), axis=1)
    else:
        cartan = block.log_scale[:, None] + log_a
        jordan = block.log_scale[:, None] + log_m

    if d == 1:
        log_gap = np.zeros(size)
    else:
        log_gap = np.minimum(cartan[:, 1] - cartan[:, 0], 0.0)

    v_plus = k[:, :, 0]
    normal = u[:, 0, :]
    delta_n = np.minimum(np.abs(np.sum(v_plus * normal, axis=1)), 1.0)
    return {
        "log_norm": log_norm,
        "log_specrad": log_specrad,
        "cartan": cartan,
        "jordan": jordan,
        "delta_n": delta_n,
        "v_plus": v_plus,
        "h_minus": canonicalize(normal),
        "degenerate": (log_gap > LOG_DEGENERATE_GAP) if d > 1 else np.zeros(size, dtype=bool),
        "log_gap": log_gap,
    }


def _walk_sample(obs: Observation, row: int, n: int) -> WalkSample:
    degenerate = bool(obs["degenerate"][row])
    return WalkSample(
        n=n,
        log_norm=float(obs["log_norm"][row]),
        log_specrad=float(obs["log_specrad"][row]),
        cartan=CartanVector(values=tuple(obs["cartan"][row].tolist())),
        jordan=JordanVector(values=tuple(obs["jordan"][row].tolist())),
        delta_n=float(obs["delta_n"][row]),
        v_plus=ProjPoint(vec=obs["v_plus"][row], degenerate=degenerate),
        h_minus=ProjHyperplane(normal=obs["h_minus"][row], degenerate=degenerate),
        degenerate=degenerate,
        log_gap=float(obs["log_gap"][row]),
    )


# ---------------------------------------------------------------------------
# single-walk operations
# ---------------------------------------------------------------------------


def init_state(dim: int, side: Side = "left", full_spectrum: bool = True) -> WalkState:
    """The identity product at n = 0.

    Raises:
        DomainError: If dim < 1
    """
    if dim < 1:
        raise DomainError(f"dim must be positive, got {dim}")
    return _to_state(BlockState.start(dim, 1, side, full_spectrum))


def _to_state(block: BlockState) -> WalkState:
    return WalkState(
        rep=block.rep[0].copy(),
        log_scale=float(block.log_scale[0]),
        n=block.n,
        side=block.side,
        full_spectrum=block.full_spectrum,
        wedges=tuple(w[0].copy() for w in block.wedges),
        wedge_log_scales=tuple(float(s[0]) for s in block.wedge_log_scales),
        log_det=float(block.log_det[0]),
    )


def _from_state(state: WalkState) -> BlockState:
    return BlockState(
        side=state.side,
        rep=state.rep[None].copy(),
        log_scale=np.array([state.log_scale]),
        full_spectrum=state.full_spectrum,
        wedges=[w[None].copy() for w in state.wedges],
        wedge_log_scales=[np.array([s]) for s in state.wedge_log_scales],
        log_det=np.array([state.log_det]),
        n=state.n,
    )


def step(state: WalkState, x: SquareMatrix) -> WalkState:
    """Multiply one increment on the walk's side, then renormalize.

    Renormalization runs on every step, so ``rep`` and ``log_scale`` may be
    rescaled against each other even for an identity increment. The true
    product, ``log_det`` and every observable stay unchanged; only ``n``
    advances.

    Raises:
        DomainError: If dimensions differ
        StepOverflow: If the product is not finite before renormalization
    """
    if x.dim != state.dim:
        raise DomainError(f"increment of dim {x.dim} for a walk of dim {state.dim}")
    block = _from_state(state)
    xs = x.array[None]
    wedge_x = [compound(xs, p) for p in range(2, state.dim)] if state.full_spectrum else []
    _advance(block, xs, wedge_x, np.linalg.slogdet(xs)[1])
    return _to_state(block)


def observe(state: WalkState) -> WalkSample:
    """Observables of the true product exp(log_scale)·rep."""
    return _walk_sample(observe_block(_from_state(state)), 0, state.n)


# ---------------------------------------------------------------------------
# block runner
# ---------------------------------------------------------------------------


BlockReducer = Callable[[BlockState], Any]


class BlockResult(NamedTuple):
    start: int
    size: int
    outputs: list[Any]


def _check_checkpoints(n: int, checkpoints: Sequence[int]) -> tuple[int, ...]:
    cps = tuple(int(c) for c in checkpoints)
    if list(cps) != sorted(set(cps)):
        raise DomainError(f"checkpoints must be distinct and ascending, got {cps}")
    if cps and (cps[0] < 1 or cps[-1] > n):
        raise DomainError(f"checkpoints must lie in [1, {n}], got {cps}")
    return cps


def _run_streams(
    sampler: IncrementSampler,
    streams: Sequence[RngStream],
    checkpoints: tuple[int, ...],
    side: Side,
    full_spectrum: bool,
    reducer: BlockReducer,
) -> list[Any]:
    block = BlockState.start(sampler.dim, len(streams), side, full_spectrum)
    outputs: list[Any] = []
    if not checkpoints:
        return outputs
    gens = [generator_for(s) for s in streams]
    targets = set(checkpoints)
    last = checkpoints[-1]
    wedge_degrees = range(2, sampler.dim) if full_spectrum else range(0)
    for begin in range(0, last, settings.CHUNK_STEPS):
        count = min(settings.CHUNK_STEPS, last - begin)
        keys = np.stack([sampler.draw_keys(g, count) for g in gens])
        for j in range(count):
            kj = keys[:, j]
            _advance(
                block,
                sampler.increments(kj),
                [sampler.wedge_increments(kj, p) for p in wedge_degrees],
                sampler.log_abs_det(kj),
            )
            if block.n in targets:
                outputs.append(reducer(block))
    return outputs


def walk_blocks(
    mu: MatrixMeasure,
    checkpoints: Sequence[int],
    trials: int,
    master_seed: int,
    *,
    n: int | None = None,
    side: Side = "left",
    purpose: StreamPurpose = StreamPurpose.TRIALS,
    threads: int | None = None,
    full_spectrum: bool = True,
    reducer: BlockReducer = observe_block,
) -> Iterator[BlockResult]:
    """Run ``trials`` walks and yield one result per block, in trial order.

    Trial t draws from stream (master_seed, purpose, t). ``reducer`` is
    called on the block state at each checkpoint and its outputs are
    returned as they are; reducers that shrink the block keep memory flat
    for very large runs.

    Raises:
        DomainError: If checkpoints are not a sorted subset of [1, n]
        NumericalFailure: If a trial overflows or its eigenvalues fail
    """
    n = n if n is not None else (max(checkpoints) if checkpoints else 0)
    cps = _check_checkpoints(n, checkpoints)
    if trials < 1:
        raise DomainError(f"trials must be positive, got {trials}")
    sampler = sampler_for(mu)
    size = settings.BLOCK_SIZE
    starts = list(range(0, trials, size))
    workers = resolve_threads(threads)

    def work(start: int) -> BlockResult:
        count = min(size, trials - start)
        streams = [stream(master_seed, purpose, t) for t in range(start, start + count)]
        try:
            outputs = _run_streams(sampler, streams, cps, side, full_spectrum, reducer)
        except (StepOverflow, EigenFailure) as e:
            raise NumericalFailure(e.reason, trial=start + (e.row or 0)) from e
        return BlockResult(start=start, size=count, outputs=outputs)

    logger.debug(
        f"Walking {trials} trials of {mu.label} ({side}, n={n}) "
        f"in {len(starts)} blocks on {workers} threads"
    )
    for done, result in enumerate(ordered_map(work, starts, workers), start=1):
        logger.debug(f"blocks done {done}/{len(starts)}")
        yield result


def run_trial(
    mu: MatrixMeasure,
    n: int,
    checkpoints: Sequence[int],
    seed: RngStream,
    side: Side = "left",
    full_spectrum: bool = True,
) -> list[WalkSample]:
    """One walk, observed at each checkpoint.

    Raises:
        DomainError: If checkpoints are not a sorted subset of [1, n]
    """
    if n < 0:
        raise DomainError(f"n must be non-negative, got {n}")
    cps = _check_checkpoints(n, checkpoints)
    sampler = sampler_for(mu)
    outputs = _run_streams(sampler, [seed], cps, side, full_spectrum, observe_block)
    return [_walk_sample(obs, 0, c) for obs, c in zip(outputs, cps, strict=True)]


def run_monte_carlo(
    mu: MatrixMeasure,
    n: int,
    checkpoints: Sequence[int],
    trials: int,
    master_seed: int,
    threads: int | None = None,
    *,
    side: Side = "left",
    full_spectrum: bool = True,
    purpose: StreamPurpose = StreamPurpose.TRIALS,
    config_echo: dict[str, Any] | None = None,
) -> SampleSet:
    """Independent walks assembled into a columnar SampleSet ordered by trial.

    Args:
        mu: driving measure
        n: walk length
        checkpoints: sorted subset of [1, n] at which trials are observed
        trials: number of independent walks
        master_seed: key of the per-trial streams
        threads: worker count (never changes the output)

    Returns:
        The sample set with config echo and seed lineage attached
    """
    cps = _check_checkpoints(n, checkpoints)
    logger.info(f"Monte Carlo started: {mu.label}, n={n}, trials={trials}, side={side}")
    columns: dict[str, list[np.ndarray]] = {}
    for result in walk_blocks(
        mu,
        cps,
        trials,
        master_seed,
        n=n,
        side=side,
        purpose=purpose,
        threads=threads,
        full_spectrum=full_spectrum,
        reducer=observe_block,
    ):
        for name in result.outputs[0] if result.outputs else ():
            columns.setdefault(name, []).append(np.stack([o[name] for o in result.outputs], axis=1))
    d = mu.dim
    empty_scalar = np.zeros((trials, 0))
    empty_vector = np.zeros((trials, 0, d))

    def column(name: str, vector: bool) -> np.ndarray:
        if name not in columns:
            return empty_vector if vector else empty_scalar
        return np.concatenate(columns[name], axis=0)

    samples = SampleSet(
        config_echo=config_echo or {},
        seed_lineage=seed_lineage(master_seed, purpose),
        measure_label=mu.label,
        flags=mu.flags,
        side=side,
        dim=d,
        n=n,
        checkpoints=cps,
        trials=trials,
        log_norm=column("log_norm", False),
        log_specrad=column("log_specrad", False),
        delta_n=column("delta_n", False),
        log_gap=column("log_gap", False),
        degenerate=column("degenerate", False).astype(bool),
        cartan=column("cartan", True),
        jordan=column("jordan", True),
        v_plus=column("v_plus", True),
        h_minus=column("h_minus", True),
    )
    logger.info(f"Monte Carlo finished: {trials} trials x {len(cps)} checkpoints")
    return samples


# ---------------------------------------------------------------------------
# stationary measure
# ---------------------------------------------------------------------------


def _push_point(x0: np.ndarray) -> BlockReducer:
    def reducer(block: BlockState) -> np.ndarray:
        v = block.rep @ x0
        return canonicalize(v / np.linalg.norm(v, axis=1, keepdims=True))

    return reducer


def stationary_sample(mu: MatrixMeasure, x0: ProjPoint, n: int, seed: RngStream) -> ProjPoint:
    """Rₙ·x0 for the right walk, a draw approximating the stationary measure ν."""
    if n < 1:
        return x0
    sampler = sampler_for(mu)
    (v,) = _run_streams(sampler, [seed], (n,), "right", False, _push_point(x0.vec))
    return ProjPoint(vec=v[0])


def stationary_samples(
    mu: MatrixMeasure,
    x0: ProjPoint,
    n: int,
    count: int,
    master_seed: int,
    threads: int | None = None,
) -> np.ndarray:
    """``count`` independent draws Rₙ·x0, as unit vectors of shape (count, d).

    Draw t equals ``stationary_sample`` on stream (master_seed, STATIONARY, t).
    """
    parts = [
        result.outputs[0]
        for result in walk_blocks(
            mu,
            (n,),
            count,
            master_seed,
            side="right",
            purpose=StreamPurpose.STATIONARY,
            threads=threads,
            full_spectrum=False,
            reducer=_push_point(x0.vec),
        )
    ]
    return np.concatenate(parts, axis=0)
