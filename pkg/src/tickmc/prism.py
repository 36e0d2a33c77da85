"""Export of a composed chain as a flat PRISM DTMC module."""

from __future__ import annotations

from .composer import SparseDtmc
from .engine import Query


def _local_var(machine: str) -> str:
    return f"m_{machine}"


def _assignment(dtmc: SparseDtmc, i: int) -> list[tuple[str, int]]:
    s = dtmc.states[i]
    out = [(_local_var(m), dom.index(st))
           for m, dom, st in zip(dtmc.machine_names, dtmc.machine_domains, s.machine_states)]
    out += [(v, dom.index(val)) for v, dom, val in zip(dtmc.var_names, dtmc.var_domains,
                                                      s.valuation)]
    out.append(("ticks", s.ticks))
    return out


def to_prism(dtmc: SparseDtmc) -> str:
    """One guarded command per reachable state; probabilities printed with ``repr``."""
    lines = ["// flat DTMC exported by tickmc"]
    if dtmc.config:
        lines.append(f"// configuration: {dtmc.config}")
    for m, dom in zip(dtmc.machine_names, dtmc.machine_domains):
        lines.append(f"// {_local_var(m)}: " + ", ".join(f"{i}={s}" for i, s in enumerate(dom)))
    for v, dom in zip(dtmc.var_names, dtmc.var_domains):
        lines.append(f"// {v}: " + ", ".join(f"{i}={s}" for i, s in enumerate(dom)))
    lines += ["", "dtmc", "", "module composed"]
    init = dict(_assignment(dtmc, dtmc.initial))
    for m, dom in zip(dtmc.machine_names, dtmc.machine_domains):
        name = _local_var(m)
        lines.append(f"  {name} : [0..{max(0, len(dom) - 1)}] init {init[name]};")
    for v, dom in zip(dtmc.var_names, dtmc.var_domains):
        lines.append(f"  {v} : [0..{max(0, len(dom) - 1)}] init {init[v]};")
    lines.append(f"  ticks : [0..{dtmc.horizon}] init {init['ticks']};")
    lines.append("")
    for i in range(dtmc.n_states):
        here = _assignment(dtmc, i)
        guard = " & ".join(f"{name}={value}" for name, value in here)
        succ = dtmc.successors(i)
        if not succ:
            continue
        updates = []
        for j, p in succ:
            changed = [(name, value) for (name, value), (_, old)
                       in zip(_assignment(dtmc, j), here) if value != old]
            body = "&".join(f"({name}'={value})" for name, value in changed) or "true"
            updates.append(f"{p!r}:{body}")
        lines.append(f"  [] {guard} -> " + " + ".join(updates) + ";")
    lines.append("endmodule")
    lines.append("")
    for v, dom in zip(dtmc.var_names, dtmc.var_domains):
        for k, val in enumerate(dom):
            lines.append(f'label "{v}_{val}" = {v}={k};')
    lines.append('// label "deadlock" is predefined by the checker; states without a command')
    lines.append("// above would be reported there (fix-deadlocks must be disabled).")
    return "\n".join(lines) + "\n"


def prism_property(dtmc: SparseDtmc, q: Query, t: int | None = None) -> str:
    """The PRISM form of ``q`` against a chain exported with :func:`to_prism`."""
    if q.kind == "deadlockFreedom":
        return '!E [ F "deadlock" ]'
    conds = []
    for atom in q.predicate:
        k = dtmc.var_names.index(atom.var)
        value = dtmc.var_domains[k].index(atom.value)
        conds.append(f"{atom.var}{'=' if atom.op == '==' else '!='}{value}")
    t = q.tick_value if t is None else t
    if q.tick_mode == "exact":
        conds.append(f"ticks={t}")
    elif q.tick_mode == "cumulative":
        conds.append(f"ticks<={t}")
    return f"P=? [ F ({' & '.join(conds) or 'true'}) ]"
