"""Block stochastic matrices advancing a stacked window of past states.

A run is re-expressed as z(k+1) = pi_k z(k), where z(k) stacks
x(t_k), x(t_{k-1}), ..., x(t_{k-m+1}) and every delayed reading is a
window slot. Iterating the recursion independently of the simulator gives an
oracle for it, and the matrix products feed the convergence certificate.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.matrices import PRODUCT_TOLERANCE, delta, is_stochastic, lambda_, left_product
from ..core.models import (
    ConsensusCertificate, DelayPolicy, GlobalEventSequence, Seconds, SIMULTANEITY_TOLERANCE,
    WindowMode,
)
from ..simulation.dynamics import RunResult
from ..simulation.scheduler import window_constants


logger = logging.getLogger(__name__)

# (agent i, neighbor j, slot, weight) entries of one event's blocks.
BlockEntry = Tuple[int, int, int, float]


class AugmentationError(Exception):
    """Base exception for augmented-system construction."""
    pass


class WindowTooSmallError(AugmentationError):
    """Raised when a reading lies deeper in the past than the window covers."""
    pass


class InvalidPiError(AugmentationError):
    """Raised when pi blocks do not sum to a stochastic matrix or h is out of range."""
    pass


@dataclass(frozen=True, eq=False)
class PiMatrix:
    """pi(h, A_1, ..., A_m) in block form."""
    h: Seconds
    blocks: Tuple[np.ndarray, ...]

    @property
    def n(self) -> int:
        return int(self.blocks[0].shape[0])

    @property
    def m(self) -> int:
        return len(self.blocks)

    def assemble(self) -> np.ndarray:
        """Dense mn x mn matrix: first block row e^{-h}I + (1-e^{-h})A_1, (1-e^{-h})A_2, ...;
        identity blocks on the sub-diagonal."""
        n, m = self.n, self.m
        decay = float(np.exp(-self.h))
        full = np.zeros((m * n, m * n))
        full[:n, :n] = decay * np.eye(n)
        for s, block in enumerate(self.blocks):
            full[:n, s * n:(s + 1) * n] += (1.0 - decay) * block
        for s in range(1, m):
            full[s * n:(s + 1) * n, (s - 1) * n:s * n] = np.eye(n)
        return full

    def apply(self, z: np.ndarray) -> np.ndarray:
        """pi z without assembling the dense matrix."""
        n = self.n
        decay = float(np.exp(-self.h))
        window = z.reshape(self.m, n)
        head = decay * window[0] + (1.0 - decay) * sum(block @ window[s] for s, block in enumerate(self.blocks))
        return np.concatenate((head, z[:-n])) if self.m > 1 else head


def build_pi(h: Seconds, blocks: Sequence[np.ndarray], h_max: Optional[Seconds] = None) -> PiMatrix:
    """Validated pi matrix.

    Raises:
        InvalidPiError: If h is not in (0, h_max], blocks differ in shape,
            have negative entries, or do not sum to a stochastic matrix
    """
    if h <= 0 or (h_max is not None and h > h_max + SIMULTANEITY_TOLERANCE):
        raise InvalidPiError(f"h={h!r} outside (0, {h_max}]")
    if not blocks:
        raise InvalidPiError("pi needs at least one block")
    arrays = tuple(np.asarray(b, dtype=float) for b in blocks)
    shape = arrays[0].shape
    if len(shape) != 2 or shape[0] != shape[1] or any(b.shape != shape for b in arrays):
        raise InvalidPiError("pi blocks must be square matrices of one size")
    if any(np.any(b < 0) for b in arrays):
        raise InvalidPiError("pi blocks must be nonnegative")
    if not is_stochastic(sum(arrays)):
        raise InvalidPiError("pi blocks must sum to a stochastic matrix")
    return PiMatrix(float(h), arrays)


def first_row_block_sum(pi: PiMatrix) -> np.ndarray:
    """Sum of the first block row, e^{-h}I + (1-e^{-h})(A_1 + ... + A_m)."""
    decay = float(np.exp(-pi.h))
    return decay * np.eye(pi.n) + (1.0 - decay) * sum(pi.blocks)


def stack_window(states: np.ndarray, k: int, m: int) -> np.ndarray:
    """[x(t_k); x(t_{k-1}); ...; x(t_{k-m+1})] with x(0) before the first event."""
    rows = [states[max(k - s, 0)] for s in range(m)]
    return np.concatenate(rows)


def _block_entries(result: RunResult) -> List[List[BlockEntry]]:
    """Per event step k -> k+1, the weights each agent puts on each window slot.

    Slot s means x(t_{k-s}); readings from before t = 0 get slot -1, resolved
    once m is known.
    """
    events = result.events
    steps: List[List[BlockEntry]] = []
    for k in range(len(events) - 1):
        t = events[k].time
        entries: List[BlockEntry] = []
        for i in range(result.n):
            update = result.active_update(i, t)
            if not update.reads:
                own = events.index_of(update.time)
                entries.append((i, i, k - own, 1.0))
                continue
            for read in update.reads:
                if read.read_time < 0.0:
                    slot = -1
                else:
                    slot = k - _event_index(events, read.effective_time)
                entries.append((i, read.neighbor, slot, float(update.row[read.neighbor])))
        steps.append(entries)
    return steps


def _event_index(events: GlobalEventSequence, t: Seconds) -> int:
    try:
        return events.index_of(t)
    except KeyError as e:
        raise AugmentationError(f"reading at t={t!r} does not resolve to an event") from e


def observed_lookback(result: RunResult) -> int:
    """Smallest window depth covering every reading of the run."""
    deepest = 0
    for k, entries in enumerate(_block_entries(result)):
        for _, _, slot, _ in entries:
            deepest = max(deepest, k if slot < 0 else slot)
    return deepest + 1


def bound_depth(result: RunResult) -> int:
    """Worst-case window depth from the timing bounds alone."""
    scenario = result.scenario
    constants = window_constants(scenario.n, scenario.tau_u_min, scenario.tau_u_max, scenario.K)
    delayed = scenario.delay_policy is not DelayPolicy.NONE and scenario.tau_d > 0
    return constants.delayed_depth if delayed else constants.interval_events


def window_depth(result: RunResult, mode: Optional[WindowMode] = None) -> int:
    mode = mode or result.scenario.window_mode
    return bound_depth(result) if mode is WindowMode.BOUND else observed_lookback(result)


def decompose_run(result: RunResult, m: Optional[int] = None) -> List[PiMatrix]:
    """pi_k for every consecutive event pair of a run.

    Raises:
        WindowTooSmallError: If some reading needs a slot deeper than m
    """
    steps = _block_entries(result)
    if m is None:
        m = window_depth(result)
    if m < 1:
        raise WindowTooSmallError(f"window depth must be positive, got {m}")
    n = result.n
    times = result.events.times
    pis: List[PiMatrix] = []
    for k, entries in enumerate(steps):
        blocks: Dict[int, np.ndarray] = {}
        for i, j, slot, weight in entries:
            if slot < 0:
                if k > m - 1:
                    raise WindowTooSmallError(f"initial-history reading at step {k} needs depth > {m}")
                slot = m - 1
            if slot >= m:
                raise WindowTooSmallError(f"reading of agent {i + 1} at step {k} needs slot {slot}, depth is {m}")
            blocks.setdefault(slot, np.zeros((n, n)))[i, j] += weight
        ordered = tuple(blocks.get(s, np.zeros((n, n))) for s in range(m))
        pis.append(build_pi(float(times[k + 1] - times[k]), ordered))
    logger.debug(f"decomposed {len(pis)} steps with window depth {m}")
    return pis


def oracle_run(result: RunResult, m: Optional[int] = None) -> np.ndarray:
    """Stacked states z(0), ..., z(N-1) obtained from the pi recursion alone."""
    pis = decompose_run(result, m)
    depth = pis[0].m if pis else (m or 1)
    z = np.tile(np.asarray(result.scenario.initial_state, dtype=float), depth)
    out = np.empty((len(pis) + 1, z.size))
    out[0] = z
    for k, pi in enumerate(pis):
        z = pi.apply(z)
        out[k + 1] = z
    return out


def windows_by_count(count: int, size: int) -> List[Tuple[int, int]]:
    """Consecutive full windows of `size` steps over `count` steps."""
    if size < 1:
        raise AugmentationError(f"window size must be positive, got {size}")
    return [(start, start + size) for start in range(0, count - size + 1, size)]


def windows_by_duration(events: GlobalEventSequence, duration: Seconds) -> List[Tuple[int, int]]:
    """Consecutive windows of steps, each spanning at least `duration` seconds.

    Step k covers [t_k, t_{k+1}]; a trailing window shorter than `duration`
    is dropped.
    """
    if duration <= 0:
        raise AugmentationError(f"window duration must be positive, got {duration}")
    times = events.times
    windows = []
    start = 0
    for stop in range(1, len(times)):
        if times[stop] - times[start] >= duration:
            windows.append((start, stop))
            start = stop
    return windows


def consensus_certificate(pis: Sequence[PiMatrix], windows: Sequence[Tuple[int, int]]) -> ConsensusCertificate:
    """Bound delta of the grouped product by the product of window lambdas.

    ``certified`` holds iff every window product is scrambling, so the bound
    strictly decreases from window to window.
    """
    lambdas = []
    for start, stop in windows:
        if not 0 <= start < stop <= len(pis):
            raise AugmentationError(f"window ({start}, {stop}) outside 0..{len(pis)}")
        product = left_product([pi.assemble() for pi in pis[start:stop]])
        lambdas.append(lambda_(product))
    bound = float(np.prod(lambdas)) if lambdas else 1.0
    certified = bool(lambdas) and all(lam < 1.0 for lam in lambdas)
    logger.info(f"certificate over {len(lambdas)} windows: bound {bound:.3e}, certified={certified}")
    return ConsensusCertificate(bound, certified, tuple(lambdas))


def certified_delta(pis: Sequence[PiMatrix], windows: Sequence[Tuple[int, int]]) -> float:
    """delta of the left product over all windowed steps, for comparison with the bound."""
    if not windows:
        return 1.0
    start, stop = windows[0][0], windows[-1][1]
    product = left_product([pi.assemble() for pi in pis[start:stop]])
    if not is_stochastic(product, PRODUCT_TOLERANCE):
        raise AugmentationError("accumulated product drifted from stochastic")
    return delta(product)
