"""Coefficient and weakening sequences, with finite-horizon condition diagnostics.

The classical sufficient conditions for convergence are sum(c_n t_n) = infinity
and c_n/t_n -> 0; both are asymptotic statements that no finite prefix can
decide, so check_conditions reports doubling-checkpoint heuristics and says so
explicitly.
"""

from __future__ import annotations

import csv
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import ConfigInvalidError, IndexPastEndError

HEURISTIC_NOTE = (
    "divergence/vanishing flags are doubling-checkpoint heuristics over a finite "
    "horizon, not proofs; None means the horizon is too short to attempt one"
)


class CoefficientSequence(ABC):
    """Evaluator n -> c_n > 0 for n >= 1."""

    @abstractmethod
    def eval(self, n: int) -> float: ...

    def _check_step(self, n: int):
        if n < 1:
            raise ConfigInvalidError(f"sequence index must be >= 1, got {n}")


@dataclass(frozen=True)
class Harmonic(CoefficientSequence):
    scale: float = 1.0

    def __post_init__(self):
        if self.scale <= 0:
            raise ConfigInvalidError("harmonic scale must be positive")

    def eval(self, n: int) -> float:
        self._check_step(n)
        return self.scale / n


@dataclass(frozen=True)
class Power(CoefficientSequence):
    """c_n = scale * n**(-alpha); alpha in (1/2, 1] stays below the 1/sqrt(n)
    envelope that guarantees convergence over every dictionary, alpha in
    (0, 1/2] deliberately does not, for boundary experiments."""

    alpha: float
    scale: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0 or self.scale <= 0:
            raise ConfigInvalidError("power sequence needs alpha > 0 and scale > 0")

    def eval(self, n: int) -> float:
        self._check_step(n)
        return self.scale * n ** (-self.alpha)


class Explicit(CoefficientSequence):
    def __init__(self, values: Sequence[float]):
        self.values = [float(v) for v in values]
        if any(v <= 0 for v in self.values):
            raise ConfigInvalidError("explicit coefficients must all be positive")

    def __len__(self):
        return len(self.values)

    def eval(self, n: int) -> float:
        self._check_step(n)
        if n > len(self.values):
            raise IndexPastEndError(f"explicit sequence has {len(self.values)} terms, asked for term {n}")
        return self.values[n - 1]


class WeakeningSequence(ABC):
    """Evaluator n -> t_n in (0, 1]."""

    @abstractmethod
    def eval(self, n: int) -> float: ...


@dataclass(frozen=True)
class ConstantWeakening(WeakeningSequence):
    t: float

    def __post_init__(self):
        if not 0.0 < self.t <= 1.0:
            raise ConfigInvalidError(f"weakening parameter must lie in (0, 1], got {self.t}")

    def eval(self, n: int) -> float:
        if n < 1:
            raise ConfigInvalidError(f"sequence index must be >= 1, got {n}")
        return self.t


class ExplicitWeakening(WeakeningSequence):
    def __init__(self, values: Sequence[float]):
        self.values = [float(v) for v in values]
        if any(not 0.0 < v <= 1.0 for v in self.values):
            raise ConfigInvalidError("weakening factors must lie in (0, 1]")

    def eval(self, n: int) -> float:
        if n < 1:
            raise ConfigInvalidError(f"sequence index must be >= 1, got {n}")
        if n > len(self.values):
            raise IndexPastEndError(f"explicit sequence has {len(self.values)} terms, asked for term {n}")
        return self.values[n - 1]


@dataclass(frozen=True)
class ConditionReport:
    horizon: int
    partial_sum: float
    tail_ratio_max: float
    divergence_plausible: Optional[bool]
    ratio_vanishing: Optional[bool]
    note: str = HEURISTIC_NOTE


def _tail_max(ratios: Sequence[float], horizon: int) -> float:
    start = max(1, math.ceil(0.9 * horizon))
    return max(ratios[start - 1:horizon])


def check_conditions(coefficients: CoefficientSequence, weakening: WeakeningSequence,
                     horizon: int) -> ConditionReport:
    """Partial sum of c_n t_n, tail max of c_n/t_n, and heuristic flags.

    divergence_plausible: the last doubling of the horizon added at least half
    as much to the sum as the previous doubling. ratio_vanishing: the tail max
    of c_n/t_n dropped strictly between the half horizon and the full horizon.
    Both are None when the horizon is shorter than 8.
    """
    if horizon < 1:
        raise ConfigInvalidError("horizon must be >= 1")
    ratios = []
    partial = 0.0
    checkpoints = {}
    quarter, half = horizon // 4, horizon // 2
    for n in range(1, horizon + 1):
        c, t = coefficients.eval(n), weakening.eval(n)
        partial += c * t
        ratios.append(c / t)
        if n == quarter or n == half:
            checkpoints[n] = partial
    tail_ratio = _tail_max(ratios, horizon)
    if horizon < 8:
        return ConditionReport(horizon, partial, tail_ratio, None, None)
    inc_prev = checkpoints[half] - checkpoints[quarter]
    inc_last = partial - checkpoints[half]
    divergence = inc_last > 0 and inc_last >= 0.5 * inc_prev
    vanishing = tail_ratio < _tail_max(ratios, half)
    return ConditionReport(horizon, partial, tail_ratio, divergence, vanishing)


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


def _explicit_values(spec: dict) -> list:
    if "values" in spec:
        return list(spec["values"])
    if "file" in spec:
        with open(spec["file"], newline="") as fh:
            return [float(row[0]) for row in csv.reader(fh) if row]
    raise ConfigInvalidError("explicit sequence spec needs 'values' or 'file'")


def coefficients_from_config(spec: dict) -> CoefficientSequence:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigInvalidError("coefficient spec must be an object with a 'kind' tag")
    kind = spec["kind"]
    try:
        if kind == "harmonic":
            return Harmonic(scale=float(spec.get("scale", 1.0)))
        if kind == "power":
            return Power(alpha=float(spec["alpha"]), scale=float(spec.get("scale", 1.0)))
        if kind == "explicit":
            return Explicit(_explicit_values(spec))
    except KeyError as exc:
        raise ConfigInvalidError(f"coefficient spec for kind={kind!r} is missing {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigInvalidError(f"bad coefficient spec: {exc}") from exc
    raise ConfigInvalidError(f"unknown coefficient kind {kind!r}")


def weakening_from_config(spec: dict) -> WeakeningSequence:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigInvalidError("weakening spec must be an object with a 'kind' tag")
    kind = spec["kind"]
    try:
        if kind == "constant_t":
            return ConstantWeakening(t=float(spec["t"]))
        if kind == "explicit":
            return ExplicitWeakening(_explicit_values(spec))
    except KeyError as exc:
        raise ConfigInvalidError(f"weakening spec for kind={kind!r} is missing {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigInvalidError(f"bad weakening spec: {exc}") from exc
    raise ConfigInvalidError(f"unknown weakening kind {kind!r}")
