"""Explicit-state product construction of a tick-synchronized network.

One DTMC step is one tick. Within the tick machines move one after another in
network order, each seeing the shared-variable writes of the machines before
it, and the step probability is the product of the chosen branch weights. The
tick counter is part of the state; once it reaches the horizon the state is
made absorbing.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .errors import AnalysisError, StateSpaceOverflow
from .model import ConcreteNetwork, evaluate_expression

logger = logging.getLogger(__name__)

DEFAULT_STATE_CAP = 10**7
ROW_SUM_TOLERANCE = 1e-9
UNDERFLOW_THRESHOLD = 1e-300


@dataclass(frozen=True)
class GlobalState:
    machine_states: tuple[str, ...]
    valuation: tuple[str, ...]
    ticks: int
    done: bool


@dataclass(frozen=True, eq=False)
class SparseDtmc:
    """Composed chain with a row-stochastic CSR transition matrix.

    ``labels`` maps ``"var=value"`` atoms, ``"init"``, ``"done"`` and
    ``"deadlock"`` to sorted arrays of state indices.
    """

    machine_names: tuple[str, ...]
    var_names: tuple[str, ...]
    states: tuple[GlobalState, ...]
    initial: int
    matrix: sp.csr_matrix
    horizon: int
    labels: Mapping[str, np.ndarray] = field(default_factory=dict)
    config: str | None = None
    # value orderings: local states per machine, domain values per variable
    machine_domains: tuple[tuple[str, ...], ...] = ()
    var_domains: tuple[tuple[str, ...], ...] = ()

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_transitions(self) -> int:
        return int(self.matrix.nnz)

    @property
    def ticks(self) -> np.ndarray:
        return np.fromiter((s.ticks for s in self.states), dtype=np.int64, count=self.n_states)

    def successors(self, index: int) -> list[tuple[int, float]]:
        lo, hi = self.matrix.indptr[index], self.matrix.indptr[index + 1]
        return [(int(j), float(p)) for j, p in
                zip(self.matrix.indices[lo:hi], self.matrix.data[lo:hi])]

    def row_sums(self) -> np.ndarray:
        """Per-state outgoing probability mass, summed with ``math.fsum``."""
        indptr, data = self.matrix.indptr, self.matrix.data
        return np.array([math.fsum(data[indptr[i]:indptr[i + 1]]) for i in range(self.n_states)])

    def label(self, name: str) -> np.ndarray:
        try:
            return self.labels[name]
        except KeyError:
            raise AnalysisError(f"unknown label '{name}'") from None

    def atom_mask(self, var: str, op: str, value: str) -> np.ndarray:
        """Boolean mask of states where ``var op value`` holds."""
        if var not in self.var_names:
            raise AnalysisError(f"unknown variable '{var}'")
        k = self.var_names.index(var)
        known = {s.valuation[k] for s in self.states}
        name = f"{var}={value}"
        if name not in self.labels and value not in known:
            raise AnalysisError(f"unknown value '{value}' for variable '{var}'")
        mask = np.zeros(self.n_states, dtype=bool)
        mask[self.labels.get(name, np.empty(0, dtype=np.int64))] = True
        return mask if op == "==" else ~mask


def _build_labels(var_names, domains, states, matrix) -> dict[str, np.ndarray]:
    labels: dict[str, list[int]] = {f"{v}={val}": [] for v, dom in zip(var_names, domains)
                                    for val in dom}
    done = []
    for i, s in enumerate(states):
        for v, val in zip(var_names, s.valuation):
            labels.setdefault(f"{v}={val}", []).append(i)
        if s.done:
            done.append(i)
    out = {k: np.asarray(v, dtype=np.int64) for k, v in labels.items()}
    out["init"] = np.asarray([0], dtype=np.int64) if states else np.empty(0, dtype=np.int64)
    out["done"] = np.asarray(done, dtype=np.int64)
    out["deadlock"] = np.flatnonzero(np.diff(matrix.indptr) == 0).astype(np.int64)
    return out


class _MachineTable:
    """Per-machine lookup of enabled branches, memoised on (local state, valuation)."""

    def __init__(self, cn: ConcreteNetwork, m_index: int, var_names, value_index):
        net = cn.network
        m = net.machines[m_index]
        self.var_names = var_names
        self.state_index = {s: i for i, s in enumerate(m.states)}
        self.by_state: dict[int, list] = {i: [] for i in range(len(m.states))}
        for t, weights in zip(m.transitions, cn.weights[m_index]):
            branches = []
            for b, w in zip(t.branches, weights):
                w = float(w)
                if w == 0.0:
                    continue
                updates = tuple((var_names.index(var), value_index[var][val])
                                for var, val in b.updates)
                branches.append((w, self.state_index[b.target], updates))
            self.by_state[self.state_index[t.source]].append((t.guard, branches))
        self.domains = [net.domain_of(v).values for v in var_names]
        self.cache: dict[tuple, list | None] = {}

    def enabled(self, local: int, vals: tuple[int, ...]):
        key = (local, vals)
        try:
            return self.cache[key]
        except KeyError:
            pass
        valuation = {v: self.domains[k][vals[k]] for k, v in enumerate(self.var_names)}
        found = None
        for guard, branches in self.by_state[local]:
            if evaluate_expression(guard, valuation):
                found = branches
                break
        self.cache[key] = found
        return found


def compose(cn: ConcreteNetwork, state_cap: int = DEFAULT_STATE_CAP) -> SparseDtmc:
    """Breadth-first exploration of the tick-level product chain of ``cn``."""
    net = cn.network
    horizon = cn.horizon
    var_names = tuple(net.shared_vars)
    value_index = {v: {val: i for i, val in enumerate(net.domain_of(v).values)}
                   for v in var_names}
    tables = [_MachineTable(cn, k, list(var_names), value_index)
              for k in range(len(net.machines))]

    init_locals = tuple(t.state_index[m.initial] for t, m in zip(tables, net.machines))
    init_vals = tuple(value_index[v][net.shared_vars[v].initial] for v in var_names)
    start = (init_locals, init_vals, 0)

    index: dict[tuple, int] = {start: 0}
    keys: list[tuple] = [start]
    rows: list[list[tuple[int, float]]] = []
    queue = deque([start])
    underflow = False

    while queue:
        key = queue.popleft()
        locs, vals, ticks = key
        if ticks >= horizon:
            rows.append([(index[key], 1.0)])
            continue
        partial = {(locs, vals): 1.0}
        for k, table in enumerate(tables):
            nxt: dict[tuple, float] = {}
            for (pl, pv), p in partial.items():
                branches = table.enabled(pl[k], pv)
                if branches is None:
                    nxt[(pl, pv)] = nxt.get((pl, pv), 0.0) + p
                    continue
                for w, target, updates in branches:
                    nl = pl[:k] + (target,) + pl[k + 1:]
                    nv = pv
                    if updates:
                        lst = list(pv)
                        for var_i, val_i in updates:
                            lst[var_i] = val_i
                        nv = tuple(lst)
                    q = p * w
                    if q < UNDERFLOW_THRESHOLD:
                        underflow = True
                    nxt[(nl, nv)] = nxt.get((nl, nv), 0.0) + q
            partial = nxt
        row = []
        for (nl, nv), p in partial.items():
            succ = (nl, nv, ticks + 1)
            j = index.get(succ)
            if j is None:
                j = len(keys)
                if j >= state_cap:
                    raise StateSpaceOverflow(state_cap)
                index[succ] = j
                keys.append(succ)
                queue.append(succ)
            row.append((j, p))
        rows.append(row)

    if underflow:
        warnings.warn("macro-step probability below 1e-300; results may lose precision",
                      RuntimeWarning, stacklevel=2)

    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    cols, data = [], []
    for i, row in enumerate(rows):
        row.sort()
        cols.extend(j for j, _ in row)
        data.extend(p for _, p in row)
        indptr[i + 1] = len(cols)
    matrix = sp.csr_matrix((np.asarray(data, dtype=float), np.asarray(cols, dtype=np.int64),
                            indptr), shape=(len(rows), len(rows)))

    machine_names = tuple(m.name for m in net.machines)
    domains = [net.domain_of(v).values for v in var_names]
    states = tuple(
        GlobalState(
            machine_states=tuple(m.states[i] for m, i in zip(net.machines, locs)),
            valuation=tuple(dom[i] for dom, i in zip(domains, vals)),
            ticks=ticks,
            done=ticks >= horizon,
        )
        for locs, vals, ticks in keys
    )
    labels = _build_labels(var_names, domains, states, matrix)
    logger.debug("composed %d states, %d transitions", len(states), matrix.nnz)
    return SparseDtmc(machine_names, var_names, states, 0, matrix, horizon, labels, cn.config,
                      machine_domains=tuple(m.states for m in net.machines),
                      var_domains=tuple(tuple(d) for d in domains))


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(dtmc: SparseDtmc) -> str:
    """Graphviz digraph; edge labels are probabilities with six decimals."""
    lines = ["digraph dtmc {", "  node [shape=box, fontname=\"monospace\"];"]
    for i, s in enumerate(dtmc.states):
        parts = [f"{m}={st}" for m, st in zip(dtmc.machine_names, s.machine_states)]
        parts += [f"{v}={val}" for v, val in zip(dtmc.var_names, s.valuation)]
        parts.append(f"ticks={s.ticks}")
        label = "\\n".join(_dot_escape(p) for p in parts)
        extra = ", peripheries=2" if i == dtmc.initial else ""
        lines.append(f'  s{i} [label="{label}"{extra}];')
    for i in range(dtmc.n_states):
        for j, p in dtmc.successors(i):
            lines.append(f'  s{i} -> s{j} [label="{p:.6f}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_json(dtmc: SparseDtmc) -> dict:
    """State-space dump: ``{"states": [...], "edges": [...]}`` plus the initial index."""
    states = [
        {
            "index": i,
            "machineStates": dict(zip(dtmc.machine_names, s.machine_states)),
            "valuation": dict(zip(dtmc.var_names, s.valuation)),
            "ticks": s.ticks,
        }
        for i, s in enumerate(dtmc.states)
    ]
    edges = [{"from": i, "to": j, "p": p}
             for i in range(dtmc.n_states) for j, p in dtmc.successors(i)]
    return {"config": dtmc.config, "initial": dtmc.initial, "horizon": dtmc.horizon,
            "states": states, "edges": edges}


def dump_json(dtmc: SparseDtmc) -> str:
    return json.dumps(to_json(dtmc), indent=1) + "\n"


def from_json(doc: Mapping) -> SparseDtmc:
    """Rebuild a chain from a :func:`to_json` dump.

    Rows are taken as given, so a hand-edited dump may break stochasticity or
    contain deadlocks; :func:`check_stochastic` and the deadlock finder report
    those.
    """
    raw_states = sorted(doc["states"], key=lambda s: s["index"])
    if [s["index"] for s in raw_states] != list(range(len(raw_states))):
        raise AnalysisError("state indices must be 0..n-1")
    machine_names = tuple(raw_states[0]["machineStates"]) if raw_states else ()
    var_names = tuple(raw_states[0]["valuation"]) if raw_states else ()
    horizon = int(doc.get("horizon", max((s["ticks"] for s in raw_states), default=0)))
    states = tuple(
        GlobalState(tuple(s["machineStates"][m] for m in machine_names),
                    tuple(s["valuation"][v] for v in var_names),
                    int(s["ticks"]), int(s["ticks"]) >= horizon)
        for s in raw_states
    )
    n = len(states)
    edges = doc.get("edges", [])
    rows = np.asarray([e["from"] for e in edges], dtype=np.int64)
    cols = np.asarray([e["to"] for e in edges], dtype=np.int64)
    data = np.asarray([float(e["p"]) for e in edges], dtype=float)
    matrix = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    matrix.sort_indices()
    domains = []
    for k in range(len(var_names)):
        seen: list[str] = []
        for s in states:
            if s.valuation[k] not in seen:
                seen.append(s.valuation[k])
        domains.append(seen)
    machine_domains = []
    for k in range(len(machine_names)):
        seen = []
        for s in states:
            if s.machine_states[k] not in seen:
                seen.append(s.machine_states[k])
        machine_domains.append(tuple(seen))
    labels = _build_labels(var_names, domains, states, matrix)
    labels["init"] = np.asarray([int(doc.get("initial", 0))], dtype=np.int64)
    return SparseDtmc(machine_names, var_names, states, int(doc.get("initial", 0)), matrix,
                      horizon, labels, doc.get("config"),
                      machine_domains=tuple(machine_domains),
                      var_domains=tuple(tuple(d) for d in domains))


def check_stochastic(dtmc: SparseDtmc, tol: float = ROW_SUM_TOLERANCE) -> list[int]:
    """Indices of states whose outgoing mass is not 1 within ``tol``."""
    sums = dtmc.row_sums()
    return [int(i) for i in np.flatnonzero(np.abs(sums - 1.0) > tol)]
