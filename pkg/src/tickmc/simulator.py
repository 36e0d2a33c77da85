"""Monte Carlo sampling of a concrete network, independent of the composed chain.

Samples are drawn directly from the machine definitions with the same
sequential per-tick semantics as the composer. Randomness is counter based:
the uniform used by machine ``k`` at tick ``n`` of sample ``i`` is a hash of
``(seed, i, n, k)``. Results therefore do not depend on how samples are
chunked or how many threads run them.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .composer import GlobalState
from .engine import Query, default_threads
from .errors import AnalysisError
from .model import And, ConcreteNetwork, Not, Or, TrueGuard, VarAtom

CHUNK = 1 << 16

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix_scalar(z: int) -> int:
    z &= _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def uniforms(seed: int, sample_ids: np.ndarray, tick: int, machine: int) -> np.ndarray:
    """Uniform [0, 1) draws for the given samples at one (tick, machine) slot."""
    key = _mix_scalar(_mix_scalar(_mix_scalar(seed + _GOLDEN) ^ (tick + 1)) ^ (machine + 1))
    with np.errstate(over="ignore"):
        z = sample_ids.astype(np.uint64) * np.uint64(_GOLDEN) + np.uint64(key)
        z = _mix(_mix(z))
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


@dataclass(frozen=True)
class Trace:
    states: tuple[GlobalState, ...]

    def __len__(self) -> int:
        return len(self.states)

    def values(self, var: str, var_names: Sequence[str]) -> list[str]:
        k = list(var_names).index(var)
        return [s.valuation[k] for s in self.states]


@dataclass(frozen=True)
class Estimate:
    property: str
    config: str | None
    t: int | None
    successes: int
    samples: int
    seed: int

    @property
    def p_hat(self) -> float:
        return self.successes / self.samples

    @property
    def std_err(self) -> float:
        p = self.p_hat
        return math.sqrt(p * (1 - p) / self.samples)

    def to_json(self) -> dict:
        return {"property": self.property, "config": self.config, "t": self.t,
                "pHat": self.p_hat, "stdErr": self.std_err, "samples": self.samples,
                "seed": self.seed}


class _Compiled:
    """Array form of a concrete network for batched stepping."""

    def __init__(self, cn: ConcreteNetwork):
        net = cn.network
        self.cn = cn
        self.var_names = list(net.shared_vars)
        self.domains = [net.domain_of(v).values for v in self.var_names]
        self.value_index = [{val: i for i, val in enumerate(dom)} for dom in self.domains]
        self.machines = []
        for m, weights in zip(net.machines, cn.weights):
            sidx = {s: i for i, s in enumerate(m.states)}
            by_state: dict[int, list] = {}
            for t, ws in zip(m.transitions, weights):
                w = np.array([float(x) for x in ws])
                cum = np.cumsum(w)
                positive = np.flatnonzero(w > 0)
                if positive.size:
                    cum[positive[-1]:] = np.inf
                targets = np.array([sidx[b.target] for b in t.branches], dtype=np.int64)
                updates = [[(self.var_names.index(v), self.value_index[self.var_names.index(v)][val])
                            for v, val in b.updates] for b in t.branches]
                by_state.setdefault(sidx[t.source], []).append(
                    (self.compile_guard(t.guard), cum, targets, updates))
            self.machines.append((m, sidx, by_state))
        self.initial_locals = [sidx[m.initial] for m, sidx, _ in self.machines]
        self.initial_vals = [self.value_index[k][net.shared_vars[v].initial]
                             for k, v in enumerate(self.var_names)]

    def compile_guard(self, g):
        if isinstance(g, TrueGuard):
            return lambda vals: np.ones(vals.shape[1], dtype=bool)
        if isinstance(g, VarAtom):
            k = self.var_names.index(g.var)
            idx = self.value_index[k][g.value]
            if g.op == "==":
                return lambda vals: vals[k] == idx
            return lambda vals: vals[k] != idx
        if isinstance(g, Not):
            inner = self.compile_guard(g.operand)
            return lambda vals: ~inner(vals)
        parts = [self.compile_guard(p) for p in g.operands]
        if isinstance(g, And):
            def conj(vals):
                out = parts[0](vals)
                for p in parts[1:]:
                    out = out & p(vals)
                return out
            return conj
        if isinstance(g, Or):
            def disj(vals):
                out = parts[0](vals)
                for p in parts[1:]:
                    out = out | p(vals)
                return out
            return disj
        raise AnalysisError(f"cannot compile guard {g!r}")

    def predicate(self, atoms: Sequence[VarAtom]):
        for a in atoms:
            if a.var not in self.var_names:
                raise AnalysisError(f"unknown variable '{a.var}'")
            if a.value not in self.value_index[self.var_names.index(a.var)]:
                raise AnalysisError(f"unknown value '{a.value}' for variable '{a.var}'")
        return self.compile_guard(And(tuple(atoms))) if atoms else self.compile_guard(TrueGuard())

    def start(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        locs = np.tile(np.asarray(self.initial_locals, dtype=np.int64)[:, None], (1, n))
        vals = np.tile(np.asarray(self.initial_vals, dtype=np.int64)[:, None], (1, n))
        return locs, vals

    def step(self, locs: np.ndarray, vals: np.ndarray, sample_ids: np.ndarray, seed: int,
             tick: int) -> None:
        """Advance every sample by one tick, in place."""
        for k, (_, _, by_state) in enumerate(self.machines):
            u = uniforms(seed, sample_ids, tick, k)
            local = locs[k]
            new_local = local.copy()
            pending = []
            for s, transitions in by_state.items():
                at_s = np.flatnonzero(local == s)
                if at_s.size == 0:
                    continue
                sub_vals = vals[:, at_s]
                for guard, cum, targets, updates in transitions:
                    sel = at_s[guard(sub_vals)]
                    if sel.size == 0:
                        continue
                    choice = np.searchsorted(cum, u[sel], side="right")
                    new_local[sel] = targets[choice]
                    for b, ups in enumerate(updates):
                        if ups:
                            chosen = sel[choice == b]
                            if chosen.size:
                                pending.extend((var_i, val_i, chosen) for var_i, val_i in ups)
            # samples with no enabled transition keep their local state (idle)
            locs[k] = new_local
            for var_i, val_i, chosen in pending:
                vals[var_i, chosen] = val_i

    def snapshot(self, locs, vals, j: int, tick: int) -> GlobalState:
        return GlobalState(
            machine_states=tuple(m.states[locs[k, j]] for k, (m, _, _) in enumerate(self.machines)),
            valuation=tuple(dom[vals[i, j]] for i, dom in enumerate(self.domains)),
            ticks=tick,
            done=tick >= self.cn.horizon,
        )


def simulate_run(cn: ConcreteNetwork, seed: int, sample_index: int = 0) -> Trace:
    """One sampled trajectory over ticks ``0..N_ticks``."""
    comp = _Compiled(cn)
    ids = np.asarray([sample_index], dtype=np.uint64)
    locs, vals = comp.start(1)
    states = [comp.snapshot(locs, vals, 0, 0)]
    for tick in range(cn.horizon):
        comp.step(locs, vals, ids, seed, tick)
        states.append(comp.snapshot(locs, vals, 0, tick + 1))
    return Trace(tuple(states))


def _count_chunk(comp: _Compiled, pred, mode, ts, last, start, stop, seed) -> np.ndarray:
    ids = np.arange(start, stop, dtype=np.uint64)
    n = stop - start
    locs, vals = comp.start(n)
    counts = np.zeros(len(ts), dtype=np.int64)
    hit = np.zeros(n, dtype=bool)
    want = {t: i for i, t in enumerate(ts)}

    def record(tick):
        nonlocal hit
        holds = pred(vals)
        if mode == "exact":
            if tick in want:
                counts[want[tick]] = int(np.count_nonzero(holds))
        else:
            hit |= holds
            if tick in want:
                counts[want[tick]] = int(np.count_nonzero(hit))

    record(0)
    for tick in range(last):
        comp.step(locs, vals, ids, seed, tick)
        record(tick + 1)
    return counts


def estimate_points(cn: ConcreteNetwork, q: Query, ts: Sequence[int] | None, samples: int,
                    seed: int, threads: int | None = None) -> list[Estimate]:
    """Estimates of a probability query at several tick values from one set of runs."""
    if q.kind != "probability":
        raise AnalysisError("deadlock freedom cannot be estimated by sampling")
    if samples < 1:
        raise AnalysisError("samples must be at least 1")
    comp = _Compiled(cn)
    pred = comp.predicate(q.predicate)
    horizon = cn.horizon
    if q.tick_mode is None:
        mode, points = "cumulative", [horizon]
        labels: list[int | None] = [None]
    else:
        mode = q.tick_mode
        points = q.tick_values(ts)
        labels = list(points)
    for t in points:
        if not 0 <= t <= horizon:
            raise AnalysisError(f"tick {t} is outside 0..{horizon}")
    last = max(points)
    bounds = [(s, min(s + CHUNK, samples)) for s in range(0, samples, CHUNK)]
    threads = threads or default_threads()

    def run(b):
        return _count_chunk(comp, pred, mode, points, last, b[0], b[1], seed)

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]
    totals = np.sum(parts, axis=0)
    return [Estimate(q.id, cn.config, label, int(c), samples, seed)
            for label, c in zip(labels, totals)]


def estimate_probability(cn: ConcreteNetwork, q: Query, samples: int, seed: int,
                         t: int | None = None, threads: int | None = None) -> Estimate:
    """Fraction of sampled runs that satisfy the query's target condition."""
    ts = None if t is None else [t]
    if q.is_parametric and ts is None:
        ts = q.tick_values()[:1]
    (est,) = estimate_points(cn, q, ts, samples, seed, threads)
    return est
