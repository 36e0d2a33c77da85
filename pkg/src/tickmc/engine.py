"""Exact analysis of composed chains: transient distributions and bounded reachability."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .composer import SparseDtmc
from .errors import AnalysisError
from .model import SourceSpan, VarAtom

CLAMP_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Query:
    """``P=? [F (predicate /\\ tick condition)]`` or a deadlock-freedom assertion.

    ``tick_mode`` is ``"exact"`` (``ticks == t``), ``"cumulative"``
    (``ticks <= t``) or ``None``. With a tick mode and ``tick_value=None`` the
    query is parametric in ``t`` and needs ``sweep`` values (or explicit ones
    at evaluation time).
    """

    id: str
    kind: str = "probability"  # "probability" | "deadlockFreedom"
    predicate: tuple[VarAtom, ...] = ()
    tick_mode: str | None = None
    tick_value: int | None = None
    config: str | None = None
    sweep: tuple[int, ...] | None = None
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    @property
    def is_parametric(self) -> bool:
        return self.tick_mode is not None and self.tick_value is None

    def with_sweep(self, ts: Iterable[int]) -> "Query":
        return replace(self, sweep=tuple(int(t) for t in ts))

    def with_mode(self, mode: str) -> "Query":
        return replace(self, tick_mode=mode)

    def tick_values(self, ts: Sequence[int] | None = None) -> list[int | None]:
        if self.tick_mode is None:
            return [None]
        if self.tick_value is not None and ts is None:
            return [self.tick_value]
        values = ts if ts is not None else self.sweep
        if values is None:
            raise AnalysisError(f"property '{self.id}' has a free tick parameter t "
                                "but no sweep values were given")
        return [int(t) for t in values]


@dataclass(frozen=True)
class QueryResult:
    property: str
    config: str | None
    points: tuple[tuple[int | None, float], ...] = ()
    deadlock_free: bool | None = None
    deadlocks: tuple[int, ...] = ()
    state_count: int = 0
    wall_time_ms: float = 0.0

    @property
    def value(self) -> float:
        if len(self.points) != 1:
            raise ValueError("result holds more than one point")
        return self.points[0][1]

    def to_json(self) -> dict:
        doc = {"property": self.property, "config": self.config}
        if self.deadlock_free is None:
            doc["points"] = [{"t": t, "p": p} for t, p in self.points]
        else:
            doc["deadlockFree"] = self.deadlock_free
            doc["deadlocks"] = list(self.deadlocks)
        doc["stateCount"] = self.state_count
        doc["wallTimeMs"] = round(self.wall_time_ms, 3)
        return doc


def default_threads() -> int:
    env = os.environ.get("TICKMC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise AnalysisError(f"TICKMC_THREADS must be an integer, got {env!r}") from None
    return max(1, os.cpu_count() or 1)


def _clamp(p: float) -> float:
    if p < -CLAMP_TOLERANCE or p > 1 + CLAMP_TOLERANCE:
        raise AnalysisError(f"internal error: probability {p!r} outside [0, 1]")
    return min(1.0, max(0.0, p))


def _check_tick(dtmc: SparseDtmc, t: int) -> None:
    if not 0 <= t <= dtmc.horizon:
        raise AnalysisError(f"tick {t} is outside 0..{dtmc.horizon}")


def _step(dtmc: SparseDtmc, pi: np.ndarray) -> np.ndarray:
    return dtmc.matrix.T @ pi


def transient_distribution(dtmc: SparseDtmc, t: int) -> np.ndarray:
    """Distribution over states after ``t`` ticks, by ``t`` sparse products."""
    _check_tick(dtmc, t)
    pi = np.zeros(dtmc.n_states)
    pi[dtmc.initial] = 1.0
    for _ in range(t):
        pi = _step(dtmc, pi)
    return pi


def _as_mask(dtmc: SparseDtmc, target) -> np.ndarray:
    target = np.asarray(target)
    if target.dtype == bool:
        if target.shape != (dtmc.n_states,):
            raise AnalysisError("target mask has the wrong length")
        return target
    mask = np.zeros(dtmc.n_states, dtype=bool)
    mask[target.astype(np.int64)] = True
    return mask


def bounded_reachability(dtmc: SparseDtmc, target, horizon: int) -> float:
    """Probability of entering ``target`` within ``horizon`` steps.

    ``target`` is a boolean mask or a collection of state indices. Target
    states are made absorbing and the mass entering them is accumulated step
    by step with exactly rounded summation.
    """
    mask = _as_mask(dtmc, target)
    if not mask.any():
        return 0.0
    pi = np.zeros(dtmc.n_states)
    pi[dtmc.initial] = 1.0
    entered = [math.fsum(pi[mask])]
    pi[mask] = 0.0
    for _ in range(max(0, horizon)):
        if not pi.any():
            break
        pi = _step(dtmc, pi)
        entered.append(math.fsum(pi[mask]))
        pi[mask] = 0.0
    return _clamp(math.fsum(entered))


def predicate_mask(dtmc: SparseDtmc, predicate: Sequence[VarAtom]) -> np.ndarray:
    mask = np.ones(dtmc.n_states, dtype=bool)
    for atom in predicate:
        mask &= dtmc.atom_mask(atom.var, atom.op, atom.value)
    return mask


def reachable(dtmc: SparseDtmc) -> np.ndarray:
    """Boolean mask of states reachable from the initial state via positive edges."""
    seen = np.zeros(dtmc.n_states, dtype=bool)
    seen[dtmc.initial] = True
    stack = [dtmc.initial]
    indptr, indices, data = dtmc.matrix.indptr, dtmc.matrix.indices, dtmc.matrix.data
    while stack:
        i = stack.pop()
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            if data[k] > 0 and not seen[j]:
                seen[j] = True
                stack.append(j)
    return seen


def find_deadlocks(dtmc: SparseDtmc) -> list[int]:
    """Reachable states without any positive-probability outgoing transition."""
    m = dtmc.matrix
    rows = np.repeat(np.arange(dtmc.n_states), np.diff(m.indptr))
    positive = np.bincount(rows[m.data > 0], minlength=dtmc.n_states)
    reach = reachable(dtmc)
    return [int(i) for i in np.flatnonzero(reach & (positive == 0))]


def probability_at(dtmc: SparseDtmc, q: Query, t: int | None) -> float:
    base = predicate_mask(dtmc, q.predicate)
    if q.tick_mode is None:
        return bounded_reachability(dtmc, base, dtmc.horizon)
    _check_tick(dtmc, t)
    ticks = dtmc.ticks
    if q.tick_mode == "exact":
        target = base & (ticks == t)
    elif q.tick_mode == "cumulative":
        target = base & (ticks <= t)
    else:
        raise AnalysisError(f"unknown tick mode '{q.tick_mode}'")
    return bounded_reachability(dtmc, target, t)


def eval_query(dtmc: SparseDtmc, q: Query, ts: Sequence[int] | None = None,
               threads: int | None = None) -> QueryResult:
    """Evaluate ``q`` on ``dtmc``.

    Sweep points are independent evaluations and may run on a thread pool;
    the result does not depend on the number of threads.
    """
    started = time.perf_counter()
    if q.kind == "deadlockFreedom":
        dead = find_deadlocks(dtmc)
        return QueryResult(q.id, q.config, deadlock_free=not dead, deadlocks=tuple(dead),
                           state_count=dtmc.n_states,
                           wall_time_ms=(time.perf_counter() - started) * 1e3)
    if q.kind != "probability":
        raise AnalysisError(f"unknown query kind '{q.kind}'")
    predicate_mask(dtmc, q.predicate)  # fail early on unknown names
    values = q.tick_values(ts)
    for t in values:
        if t is not None:
            _check_tick(dtmc, t)
    threads = threads or default_threads()
    if threads > 1 and len(values) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            probs = list(pool.map(lambda t: probability_at(dtmc, q, t), values))
    else:
        probs = [probability_at(dtmc, q, t) for t in values]
    return QueryResult(q.id, q.config, points=tuple(zip(values, probs)),
                       state_count=dtmc.n_states,
                       wall_time_ms=(time.perf_counter() - started) * 1e3)
