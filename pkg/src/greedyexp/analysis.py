"""Post-hoc verification of traces: the identities a sound run must satisfy.

All checks are pure functions of the trace; a report always carries the worst
observed violation, also on pass, so near-misses are visible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .dictionaries import CoherenceEstimate
from .engine import Trace
from .errors import PreconditionUnmetError


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst_violation: float
    step: Optional[int] = None      # step of the worst violation
    applicable_steps: Optional[int] = None

    def to_json_obj(self) -> dict:
        return {
            "name": self.name, "passed": self.passed,
            "worst_violation": self.worst_violation, "step": self.step,
            "applicable_steps": self.applicable_steps,
        }


@dataclass
class VerificationReport:
    checks: list = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_json_obj(self) -> dict:
        return {"all_passed": self.all_passed,
                "checks": [c.to_json_obj() for c in self.checks]}

    def merged(self, other: "VerificationReport") -> "VerificationReport":
        return VerificationReport(self.checks + other.checks)


def _energy_residuals(trace: Trace):
    """(step, relative violation) of the norm recursion, skipping step 1 when
    the initial norm was not recorded (CSV traces)."""
    prev = trace.initial_norm
    for r in trace.steps:
        if prev is not None:
            lhs = r.residual_norm ** 2
            rhs = prev ** 2 - 2.0 * r.c * r.ip + r.c ** 2
            scale = max(prev ** 2 + 2.0 * abs(r.c * r.ip) + r.c ** 2, 1e-300)
            yield r.m, abs(lhs - rhs) / scale
        prev = r.residual_norm


def verify_energy_identity(trace: Trace, tol: float = 1e-10) -> VerificationReport:
    """||f_m||^2 == ||f_{m-1}||^2 - 2 c_m <f_{m-1}, phi_m> + c_m^2, relative to
    the magnitude of the terms."""
    if not trace.steps:
        raise PreconditionUnmetError("energy identity needs a nonempty trace")
    worst, at, count = 0.0, None, 0
    for m, violation in _energy_residuals(trace):
        count += 1
        if violation > worst:
            worst, at = violation, m
    return VerificationReport([CheckResult("energy_identity", worst <= tol, worst, at, count)])


def verify_greedy_condition(trace: Trace, tol: float = 1e-12) -> VerificationReport:
    """ip >= t*sup - tol at every recorded step."""
    if not trace.steps:
        raise PreconditionUnmetError("greedy condition needs a nonempty trace")
    worst, at = 0.0, None
    for r in trace.steps:
        violation = r.t * r.sup - r.ip
        if violation > worst:
            worst, at = violation, r.m
    return VerificationReport([CheckResult(
        "greedy_condition", worst <= tol, worst, at, len(trace.steps))])


def verify_descent_inequality(trace: Trace, c_est: CoherenceEstimate, epsilon: float,
                              from_step: int, tol: float = 1e-10) -> VerificationReport:
    """Per-step descent bound for finite dictionaries.

    On steps m >= from_step whose entering residual is at least epsilon/c, the
    squared norm must drop by at least c_m * t_m * epsilon. Requires the window
    condition c_m/t_m < epsilon and c_m < epsilon/c beyond from_step. With the
    true coherence constant the bound cannot fail on a sound trace; a sampled
    estimate only upper-bounds that constant, so failures under an estimate
    are advisory.
    """
    c = c_est.value
    threshold = epsilon / c
    prev = trace.initial_norm
    worst, at, applicable, seen = 0.0, None, 0, 0
    for r in trace.steps:
        if r.m >= from_step:
            seen += 1
            if not (r.c / r.t < epsilon and r.c < threshold):
                raise PreconditionUnmetError(
                    f"step {r.m}: c={r.c:g}, t={r.t:g} violate the window condition "
                    f"(need c/t < {epsilon:g} and c < {threshold:g}); raise from_step")
            if prev is not None and prev >= threshold:
                applicable += 1
                violation = r.residual_norm ** 2 - (prev ** 2 - r.c * r.t * epsilon)
                if violation > worst:
                    worst, at = violation, r.m
        prev = r.residual_norm
    if seen == 0:
        raise PreconditionUnmetError(
            f"no steps at or beyond from_step={from_step} in a {len(trace.steps)}-step trace")
    return VerificationReport([CheckResult(
        "descent_inequality", worst <= tol, worst, at, applicable)])


def verify_block_partition(trace: Trace) -> VerificationReport:
    """Direct-sum bookkeeping: every step carries a block label consistent with
    its atom id. Disjointness and coverage of the per-block step sets then hold
    by construction; a mixed trace (some rows labeled, some not) fails."""
    if not trace.steps:
        raise PreconditionUnmetError("block partition needs a nonempty trace")
    bad, at = 0, None
    labeled = sum(1 for r in trace.steps if r.block is not None)
    for r in trace.steps:
        expected = r.atom.id[1] if r.atom.id and r.atom.id[0] == "b" else None
        consistent = (r.block == expected) and ((r.block is None) == (labeled == 0))
        if not consistent and at is None:
            bad, at = 1, r.m
    return VerificationReport([CheckResult(
        "block_partition", bad == 0, float(bad), at, len(trace.steps))])


def residual_extrema(trace: Trace, burn_in: int = 0):
    """Prefix minima and maxima of the residual norm beyond burn_in steps:
    finite-horizon stand-ins for liminf and limsup."""
    if burn_in < 0 or burn_in >= len(trace.steps):
        raise PreconditionUnmetError(
            f"burn_in must lie in [0, {len(trace.steps)}), got {burn_in}")
    running_min, running_max = [], []
    lo, hi = math.inf, -math.inf
    for r in trace.steps[burn_in:]:
        lo = min(lo, r.residual_norm)
        hi = max(hi, r.residual_norm)
        running_min.append(lo)
        running_max.append(hi)
    return running_min, running_max
