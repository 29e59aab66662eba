"""The greedy expansion engine: selection, remainder recursion, stop rule, trace.

Each step selects an admissible atom, subtracts c_m times it from the remainder
and records what happened. The stop rule fires only on an exactly empty
remainder; budget truncation and early exits are recorded as Exhausted so that
analysis never mistakes them for convergence.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Optional

from .core import SparseVector, inner, norm, subtract_scaled
from .dictionaries import Atom, Dictionary, MaxGreedy, atom_id_str, parse_atom_id
from .errors import (
    ConfigInvalidError,
    GreedyExpansionError,
    IndexPastEndError,
    NoAdmissibleAtomError,
    UnknownAtomError,
)

CSV_HEADER = ["m", "atom", "c", "t", "ip", "sup", "residual_norm", "block"]


@dataclass(frozen=True)
class StepRecord:
    m: int
    atom: Atom
    c: float
    t: float
    ip: float
    sup: float
    residual_norm: float
    block: Optional[int] = None


@dataclass(frozen=True)
class Status:
    kind: str                     # "stopped" | "exhausted" | "aborted"
    step: Optional[int] = None
    reason: Optional[str] = None

    @classmethod
    def stopped(cls, step: int) -> "Status":
        return cls("stopped", step=step)

    @classmethod
    def exhausted(cls, steps: int, reason: Optional[str] = None) -> "Status":
        return cls("exhausted", step=steps, reason=reason)

    @classmethod
    def aborted(cls, step: int, reason: str) -> "Status":
        return cls("aborted", step=step, reason=reason)


@dataclass
class Trace:
    steps: list = field(default_factory=list)
    initial_norm: Optional[float] = None
    status: Optional[Status] = None
    max_steps: Optional[int] = None

    def residual_norms(self) -> list:
        return [r.residual_norm for r in self.steps]

    def final_residual(self) -> Optional[float]:
        return self.steps[-1].residual_norm if self.steps else self.initial_norm


def run(f: SparseVector, dictionary: Dictionary, coefficients, weakening,
        policy=None, max_steps: int = 1000, stop_below: Optional[float] = None) -> Trace:
    """Run the expansion for up to max_steps steps.

    Stops early with status Stopped(m) when the remainder entering step m is
    exactly empty. stop_below is a budget device: once the recorded residual
    norm falls strictly below it the run ends as Exhausted with a reason, never
    as Stopped. Scripted-plan violations and exhausted explicit sequences end
    the run as Aborted.
    """
    if max_steps < 0:
        raise ConfigInvalidError("max_steps must be >= 0")
    policy = policy if policy is not None else MaxGreedy()
    remainder = f
    trace = Trace(initial_norm=norm(f), max_steps=max_steps)
    for m in range(1, max_steps + 1):
        if remainder.is_zero():
            trace.status = Status.stopped(m)
            return trace
        try:
            c = coefficients.eval(m)
            t = weakening.eval(m)
            sup, witness = dictionary.sup_inner(remainder)
            atom = policy.choose(m, dictionary, remainder, t, sup, witness)
        except (IndexPastEndError, NoAdmissibleAtomError, UnknownAtomError) as exc:
            trace.status = Status.aborted(m, f"{type(exc).__name__}: {exc}")
            return trace
        ip = inner(remainder, atom.vector)
        remainder = subtract_scaled(remainder, c, atom.vector)
        block = atom.id[1] if atom.id[0] == "b" else None
        trace.steps.append(StepRecord(m, atom, c, t, ip, sup, norm(remainder), block))
        if stop_below is not None and trace.steps[-1].residual_norm < stop_below:
            trace.status = Status.exhausted(m, reason="early_exit_threshold")
            return trace
    trace.status = Status.exhausted(max_steps)
    return trace


def reconstruct(trace: Trace) -> SparseVector:
    """The approximant after the recorded steps: the sum of c_m times atom_m."""
    acc = SparseVector()
    for record in trace.steps:
        acc = subtract_scaled(acc, -record.c, record.atom.vector)
    return acc


# ---------------------------------------------------------------------------
# trace serialization (CSV is the canonical interchange format)
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_trace_csv(trace: Trace, path: str):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in trace.steps:
            writer.writerow([
                r.m, atom_id_str(r.atom.id), _fmt(r.c), _fmt(r.t), _fmt(r.ip),
                _fmt(r.sup), _fmt(r.residual_norm), "" if r.block is None else r.block,
            ])


def _record_from_row(row: dict, resolver=None) -> StepRecord:
    aid = parse_atom_id(row["atom"])
    atom = resolver.realize(aid) if resolver is not None else Atom(aid, SparseVector())
    block = row.get("block") or None
    return StepRecord(
        m=int(row["m"]), atom=atom, c=float(row["c"]), t=float(row["t"]),
        ip=float(row["ip"]), sup=float(row["sup"]),
        residual_norm=float(row["residual_norm"]),
        block=int(block) if block is not None else None,
    )


def read_trace_csv(path: str, resolver: Optional[Dictionary] = None) -> Trace:
    """Load step records from CSV. Atom vectors are realized only when a
    dictionary is supplied; the initial norm and status are not part of the
    CSV format and come back as None."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise GreedyExpansionError(
                f"unexpected trace header {reader.fieldnames!r}, want {CSV_HEADER!r}")
        steps = [_record_from_row(row, resolver) for row in reader]
    return Trace(steps=steps)


def trace_to_json_obj(trace: Trace) -> dict:
    return {
        "initial_norm": trace.initial_norm,
        "max_steps": trace.max_steps,
        "status": None if trace.status is None else {
            "kind": trace.status.kind, "step": trace.status.step, "reason": trace.status.reason,
        },
        "steps": [{
            "m": r.m, "atom": atom_id_str(r.atom.id), "c": r.c, "t": r.t, "ip": r.ip,
            "sup": r.sup, "residual_norm": r.residual_norm, "block": r.block,
        } for r in trace.steps],
    }


def write_trace_json(trace: Trace, path: str):
    with open(path, "w") as fh:
        json.dump(trace_to_json_obj(trace), fh, indent=1)


def read_trace_json(path: str, resolver: Optional[Dictionary] = None) -> Trace:
    with open(path) as fh:
        obj = json.load(fh)
    status = obj.get("status")
    return Trace(
        steps=[_record_from_row({k: v for k, v in row.items()}, resolver) for row in obj["steps"]],
        initial_norm=obj.get("initial_norm"),
        status=None if status is None else Status(status["kind"], status["step"], status["reason"]),
        max_steps=obj.get("max_steps"),
    )


def read_trace(path: str, resolver: Optional[Dictionary] = None) -> Trace:
    if path.endswith(".json"):
        return read_trace_json(path, resolver)
    return read_trace_csv(path, resolver)
