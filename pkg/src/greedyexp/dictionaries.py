"""Symmetric dictionaries: selection oracles and the standard constructors.

A dictionary answers two queries: the supremum of inner products against a
vector (with the atom attaining it), and the realization of an atom id. All
constructed dictionaries are symmetric (closed under negation). Tie-breaking
is by the smallest atom id under a fixed total order so that traces are
reproducible bit for bit.

Atom ids are plain tuples whose natural tuple order is the canonical order:

    ("e", sign_rank, i)      signed basis atom, sign_rank 0 for +e_i, 1 for -e_i
    ("y", k)                 k-th materialized dense atom (negations interleaved)
    ("b", block, inner_id)   component atom lifted into a direct sum

String form: "+e12", "-e3", "y4", "b2:+e1".
"""

from __future__ import annotations

import math
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import SparseVector, index_key, inner
from .errors import (
    ConfigInvalidError,
    EmptyVectorError,
    IndexPastEndError,
    NoAdmissibleAtomError,
    NotOrthogonalError,
    SupportOutsideEPrimeError,
    UnknownAtomError,
    ZeroAtomError,
)

#: slack for the weak selection inequality; the adversarial construction hits
#: the t*sup boundary exactly, so float equality must not spuriously fail.
ADMISSIBILITY_SLACK = 1e-12

#: witnesses may trail the exact sup by this much before losing to a smaller
#: atom id. Floating point blurs exact ties (the same expansion computed in
#: rotated coordinates reproduces inner products only to ~1e-15), and greedy
#: dynamics actively equalize inner products, so argmax without a band flips
#: selections between isometric copies of the same run. Direct sums resolve
#: ties in two stages, hence half of ADMISSIBILITY_SLACK each.
WITNESS_BAND = 5e-13

_ATOM_NORM_FLOOR = 1e-12
_ORTHOGONALITY_TOL = 1e-9

AtomId = tuple


@dataclass(frozen=True)
class Atom:
    """A dictionary element: its id in the canonical order and its realization."""

    id: AtomId
    vector: SparseVector


@dataclass(frozen=True)
class CoherenceEstimate:
    """Sampled upper bound for the coherence-type constant of a finite dictionary."""

    value: float
    samples: int
    seed: int

    def __post_init__(self):
        if not (0.0 < self.value <= 1.0 + 1e-12):
            raise ConfigInvalidError(f"coherence estimate must lie in (0, 1], got {self.value}")
        if self.samples < 1:
            raise ConfigInvalidError("coherence estimate needs at least one sample")


def atom_id_str(aid: AtomId) -> str:
    kind = aid[0]
    if kind == "e":
        return f"{'+' if aid[1] == 0 else '-'}e{aid[2]}"
    if kind == "y":
        return f"y{aid[1]}"
    if kind == "b":
        return f"b{aid[1]}:{atom_id_str(aid[2])}"
    raise ValueError(f"unknown atom id {aid!r}")


_BASIS_RE = re.compile(r"^([+-])e(\d+)$")
_DENSE_RE = re.compile(r"^y(\d+)$")
_BLOCK_RE = re.compile(r"^b(\d+):(.+)$")


def parse_atom_id(text: str) -> AtomId:
    m = _BASIS_RE.match(text)
    if m:
        return ("e", 0 if m.group(1) == "+" else 1, int(m.group(2)))
    m = _DENSE_RE.match(text)
    if m:
        return ("y", int(m.group(1)))
    m = _BLOCK_RE.match(text)
    if m:
        return ("b", int(m.group(1)), parse_atom_id(m.group(2)))
    raise ValueError(f"cannot parse atom id {text!r}")


def basis_atom(index: int, sign: float) -> Atom:
    rank = 0 if sign > 0 else 1
    return Atom(("e", rank, index), SparseVector({index: 1.0 if sign > 0 else -1.0}))


def _best(candidates: Iterable[tuple]) -> tuple:
    """The exact largest value, paired with the smallest-id atom that comes
    within WITNESS_BAND of it."""
    pairs = list(candidates)
    top = max(value for value, _ in pairs)
    winner = min((atom for value, atom in pairs if value >= top - WITNESS_BAND),
                 key=lambda a: a.id)
    return top, winner


class Dictionary(ABC):
    """Selection oracle over a symmetric set of unit-norm atoms."""

    kind: str

    @abstractmethod
    def sup_inner(self, f: SparseVector) -> tuple:
        """Exact max of <f, g> over atoms g, with the smallest-id atom whose
        inner product comes within WITNESS_BAND of it."""

    @abstractmethod
    def realize(self, aid: AtomId) -> Atom:
        """Resolve an atom id to its Atom; raises UnknownAtomError."""

    def contains(self, aid: AtomId) -> bool:
        try:
            self.realize(aid)
            return True
        except UnknownAtomError:
            return False


class SymmetrizedOnb(Dictionary):
    """The symmetrized canonical orthonormal basis {e_i} ∪ {-e_i}, never materialized."""

    kind = "symmetrized_onb"

    def sup_inner(self, f: SparseVector) -> tuple:
        if f.is_zero():
            raise EmptyVectorError("sup over a symmetric dictionary needs a nonzero vector")
        top = max(abs(x) for _, x in f.items())
        best_id = min(("e", 0 if x > 0 else 1, i) for i, x in f.items()
                      if abs(x) >= top - WITNESS_BAND)
        return top, self.realize(best_id)

    def realize(self, aid: AtomId) -> Atom:
        if len(aid) == 3 and aid[0] == "e" and aid[1] in (0, 1) and isinstance(aid[2], int) and aid[2] >= 1:
            return basis_atom(aid[2], 1.0 if aid[1] == 0 else -1.0)
        raise UnknownAtomError(f"{atom_id_str(aid)} is not a signed basis atom")


def _unit_sparse(vector: SparseVector, position: str) -> SparseVector:
    n = vector.norm()
    if n < _ATOM_NORM_FLOOR:
        raise ZeroAtomError(f"{position}: atom norm {n:g} is below {_ATOM_NORM_FLOOR:g}")
    if n == 1.0:
        return vector
    return SparseVector({i: v / n for i, v in vector.items()})


def _symmetrize(vectors: Sequence[SparseVector], positions: str) -> list:
    """Materialize [+a0, -a0, +a1, -a1, ...] as dense-id atoms."""
    atoms = []
    for j, vec in enumerate(vectors):
        unit = _unit_sparse(vec, f"{positions}[{j}]")
        atoms.append(Atom(("y", 2 * j), unit))
        atoms.append(Atom(("y", 2 * j + 1), SparseVector({i: -v for i, v in unit.items()})))
    return atoms


class FiniteDictionary(Dictionary):
    """Finitely many atoms, symmetrized on construction."""

    kind = "finite"

    def __init__(self, vectors: Sequence[SparseVector]):
        if not vectors:
            raise ConfigInvalidError("a finite dictionary needs at least one atom")
        for j, vec in enumerate(vectors):
            for i in vec.support():
                if not isinstance(i, int):
                    raise ConfigInvalidError("finite dictionary atoms must use plain indices")
        self.atoms = _symmetrize(vectors, "atoms")

    def sup_inner(self, f: SparseVector) -> tuple:
        if f.is_zero():
            raise EmptyVectorError("sup over a symmetric dictionary needs a nonzero vector")
        return _best((inner(f, a.vector), a) for a in self.atoms)

    def realize(self, aid: AtomId) -> Atom:
        if len(aid) == 2 and aid[0] == "y" and isinstance(aid[1], int) and 0 <= aid[1] < len(self.atoms):
            return self.atoms[aid[1]]
        raise UnknownAtomError(f"{atom_id_str(aid)} is not an atom of this finite dictionary")

    def ambient_dimension(self) -> int:
        return max(i for a in self.atoms for i in a.vector.support())


def make_finite(atoms: Sequence[SparseVector]) -> FiniteDictionary:
    return FiniteDictionary(atoms)


def make_symmetrized_onb() -> SymmetrizedOnb:
    return SymmetrizedOnb()


class AugmentedOnb(Dictionary):
    """Symmetrized basis plus finitely many unit atoms supported inside E'."""

    kind = "augmented_onb"

    def __init__(self, extra: Sequence[SparseVector], e_prime: Iterable[int]):
        self.e_prime = frozenset(e_prime)
        for j, vec in enumerate(extra):
            outside = [i for i in vec.support() if i not in self.e_prime]
            if outside:
                raise SupportOutsideEPrimeError(
                    f"extra[{j}] touches {sorted(outside, key=index_key)} outside E'"
                )
        self.extras = _symmetrize(extra, "extra")
        self._onb = SymmetrizedOnb()

    def sup_inner(self, f: SparseVector) -> tuple:
        if f.is_zero():
            raise EmptyVectorError("sup over a symmetric dictionary needs a nonzero vector")
        candidates = [self._onb.sup_inner(f)]
        candidates.extend((inner(f, a.vector), a) for a in self.extras)
        return _best(candidates)

    def realize(self, aid: AtomId) -> Atom:
        if aid[0] == "e":
            return self._onb.realize(aid)
        if len(aid) == 2 and aid[0] == "y" and isinstance(aid[1], int) and 0 <= aid[1] < len(self.extras):
            return self.extras[aid[1]]
        raise UnknownAtomError(f"{atom_id_str(aid)} is not an atom of this augmented basis")


def make_augmented_onb(extra: Sequence[SparseVector], e_prime: Iterable[int]) -> AugmentedOnb:
    return AugmentedOnb(extra, e_prime)


def _wrap_block(vec: SparseVector, block: int) -> SparseVector:
    return SparseVector({(block, i): v for i, v in vec.items()})


class DirectSumDictionary(Dictionary):
    """Blockwise union of component dictionaries over a direct sum of spaces.

    Components act on plain indices; their atoms are lifted to block-indexed
    vectors. One level of blocking only: components may not themselves be sums.
    """

    kind = "direct_sum"

    def __init__(self, components: Sequence[Dictionary]):
        if not components:
            raise ConfigInvalidError("a direct sum needs at least one component")
        if any(isinstance(c, DirectSumDictionary) for c in components):
            raise ConfigInvalidError("direct sums cannot be nested")
        self.components = list(components)

    def sup_inner(self, f: SparseVector) -> tuple:
        candidates = []
        for l, comp in enumerate(self.components, start=1):
            fl = f.block_restriction(l)
            if fl.is_zero():
                continue
            value, atom = comp.sup_inner(fl)
            candidates.append((value, Atom(("b", l, atom.id), _wrap_block(atom.vector, l))))
        if not candidates:
            raise EmptyVectorError("sup over a symmetric dictionary needs a nonzero vector")
        return _best(candidates)

    def realize(self, aid: AtomId) -> Atom:
        if len(aid) == 3 and aid[0] == "b" and isinstance(aid[1], int) and 1 <= aid[1] <= len(self.components):
            atom = self.components[aid[1] - 1].realize(aid[2])
            return Atom(("b", aid[1], atom.id), _wrap_block(atom.vector, aid[1]))
        raise UnknownAtomError(f"{atom_id_str(aid)} is not an atom of this direct sum")


def direct_sum(components: Sequence[Dictionary]) -> DirectSumDictionary:
    return DirectSumDictionary(components)


def _check_orthogonal(q: np.ndarray):
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise NotOrthogonalError(f"matrix must be square, got shape {q.shape}")
    dev = float(np.max(np.abs(q.T @ q - np.eye(q.shape[0]))))
    if dev > _ORTHOGONALITY_TOL:
        raise NotOrthogonalError(f"Q^T Q deviates from identity by {dev:g} > {_ORTHOGONALITY_TOL:g}")


def _to_dense(vec: SparseVector, dim: int) -> np.ndarray:
    out = np.zeros(dim)
    for i, v in vec.items():
        out[i - 1] = v
    return out


def _from_dense(arr: np.ndarray) -> SparseVector:
    return SparseVector({i + 1: float(v) for i, v in enumerate(arr) if v != 0.0})


class PushforwardDictionary(Dictionary):
    """Image of a dictionary under an orthogonal map on a finite index range.

    Supports a finite base (atoms transformed atom by atom, ids preserved) and
    an augmented basis whose materialized head lies inside the matrix range;
    basis atoms beyond the range pass through untouched.
    """

    kind = "pushforward"

    def __init__(self, base: Dictionary, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=float)
        _check_orthogonal(matrix)
        self.base = base
        self.matrix = matrix
        dim = matrix.shape[0]
        if isinstance(base, (FiniteDictionary, PushforwardDictionary)):
            head = base.atoms if isinstance(base, FiniteDictionary) else base.head
            self.tail_start: Optional[int] = None
            if isinstance(base, PushforwardDictionary) and base.tail_start is not None:
                self.tail_start = base.tail_start
                if dim >= self.tail_start:
                    raise ConfigInvalidError(
                        "matrix range overlaps the untouched basis tail of the base dictionary"
                    )
        elif isinstance(base, AugmentedOnb):
            head = [SymmetrizedOnb().realize(("e", r, i)) for i in range(1, dim + 1) for r in (0, 1)]
            head.extend(base.extras)
            self.tail_start = dim + 1
        else:
            raise ConfigInvalidError(
                "pushforward supports finite dictionaries and augmented bases on a finite range"
            )
        for a in head:
            if any(i > dim for i in a.vector.support()):
                raise ConfigInvalidError(
                    f"atom {atom_id_str(a.id)} has support outside the {dim}-dimensional matrix range"
                )
        if isinstance(base, AugmentedOnb) and any(i > dim for i in base.e_prime):
            raise ConfigInvalidError("E' must lie inside the matrix range")
        self.head = [
            Atom(a.id, _from_dense(matrix @ _to_dense(a.vector, dim))) for a in head
        ]
        self._head_by_id = {a.id: a for a in self.head}
        self._onb = SymmetrizedOnb()

    def sup_inner(self, f: SparseVector) -> tuple:
        if f.is_zero():
            raise EmptyVectorError("sup over a symmetric dictionary needs a nonzero vector")
        candidates = [(inner(f, a.vector), a) for a in self.head]
        if self.tail_start is not None:
            tail = SparseVector({i: v for i, v in f.items() if i >= self.tail_start})
            if not tail.is_zero():
                candidates.append(self._onb.sup_inner(tail))
        return _best(candidates)

    def realize(self, aid: AtomId) -> Atom:
        atom = self._head_by_id.get(aid)
        if atom is not None:
            return atom
        if self.tail_start is not None and aid[0] == "e" and aid[2] >= self.tail_start:
            return self._onb.realize(aid)
        raise UnknownAtomError(f"{atom_id_str(aid)} is not an atom of this pushforward")


def pushforward(base: Dictionary, matrix) -> PushforwardDictionary:
    return PushforwardDictionary(base, matrix)


# ---------------------------------------------------------------------------
# selection policies
# ---------------------------------------------------------------------------


class MaxGreedy:
    """Always take the sup witness (strong greedy selection)."""

    def choose(self, step: int, dictionary: Dictionary, f: SparseVector,
               t: float, sup: float, witness: Atom) -> Atom:
        return witness


class Scripted:
    """Replay a fixed atom plan, validating admissibility at every step."""

    def __init__(self, plan: Sequence):
        self.plan = [parse_atom_id(a) if isinstance(a, str) else a for a in plan]

    def choose(self, step: int, dictionary: Dictionary, f: SparseVector,
               t: float, sup: float, witness: Atom) -> Atom:
        if step > len(self.plan):
            raise IndexPastEndError(f"selection plan exhausted at step {step}")
        atom = dictionary.realize(self.plan[step - 1])
        ip = inner(f, atom.vector)
        if ip < t * sup - ADMISSIBILITY_SLACK:
            raise NoAdmissibleAtomError(
                f"step {step}: scripted atom {atom_id_str(atom.id)} has ip={ip:.17g} "
                f"< t*sup={t * sup:.17g}"
            )
        return atom


def select(dictionary: Dictionary, f: SparseVector, t: float, policy, step: int = 1) -> Atom:
    """One application of the weak selection rule."""
    if not 0.0 < t <= 1.0:
        raise ConfigInvalidError(f"weakening factor must lie in (0, 1], got {t}")
    sup, witness = dictionary.sup_inner(f)
    return policy.choose(step, dictionary, f, t, sup, witness)


# ---------------------------------------------------------------------------
# finite-dimensional diagnostics
# ---------------------------------------------------------------------------


def _finite_atoms(dictionary: Dictionary) -> list:
    if isinstance(dictionary, FiniteDictionary):
        return dictionary.atoms
    if isinstance(dictionary, PushforwardDictionary) and dictionary.tail_start is None:
        return dictionary.head
    raise ConfigInvalidError(
        "operation needs a finite dictionary (or a pushforward of one)"
    )


def atom_matrix(dictionary: Dictionary) -> np.ndarray:
    """Materialized atoms as rows of a dense matrix (plain indices only)."""
    atoms = _finite_atoms(dictionary)
    dim = max(i for a in atoms for i in a.vector.support())
    return np.vstack([_to_dense(a.vector, dim) for a in atoms])


def spans_ambient(dictionary: Dictionary) -> bool:
    """Rank check: do the atoms span the ambient coordinate range? Not enforced anywhere."""
    mat = atom_matrix(dictionary)
    return int(np.linalg.matrix_rank(mat)) == mat.shape[1]


def estimate_coherence(dictionary: Dictionary, samples: int, seed: int) -> CoherenceEstimate:
    """Sampled upper bound on inf_{\\|f\\|=1} sup_g <f, g>.

    Draws unit vectors uniformly on the sphere of the ambient range and takes
    the minimum of the sup of inner products. Heuristic: the true constant is
    a minimum over the whole sphere, so the sampled value can only overshoot.
    """
    if samples < 1:
        raise ConfigInvalidError("estimate_coherence needs samples >= 1")
    mat = atom_matrix(dictionary)
    rng = np.random.default_rng(seed)
    best = math.inf
    remaining = samples
    while remaining > 0:
        batch = min(remaining, 1 << 17)
        g = rng.standard_normal((batch, mat.shape[1]))
        norms = np.linalg.norm(g, axis=1)
        keep = norms > 0
        sups = (g[keep] / norms[keep, None]) @ mat.T
        if sups.size:
            best = min(best, float(np.max(sups, axis=1).min()))
        remaining -= batch
    return CoherenceEstimate(best, samples, seed)


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


def _vectors_from_config(rows, what: str) -> list:
    try:
        return [SparseVector.from_pairs((tuple(i) if isinstance(i, list) else i, v) for i, v in row)
                for row in rows]
    except (TypeError, ValueError) as exc:
        raise ConfigInvalidError(f"bad {what} coordinate list: {exc}") from exc


def dictionary_from_config(spec: dict) -> Dictionary:
    """Build a dictionary from its config-file form: a kind tag plus payload."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigInvalidError("dictionary spec must be an object with a 'kind' tag")
    kind = spec["kind"]
    try:
        if kind == "symmetrized_onb":
            return make_symmetrized_onb()
        if kind == "finite":
            return make_finite(_vectors_from_config(spec["atoms"], "atom"))
        if kind == "augmented_onb":
            return make_augmented_onb(
                _vectors_from_config(spec.get("extra", []), "extra atom"),
                spec.get("e_prime", []),
            )
        if kind == "direct_sum":
            return direct_sum([dictionary_from_config(c) for c in spec["components"]])
        if kind == "pushforward":
            return pushforward(dictionary_from_config(spec["base"]), np.asarray(spec["matrix"], dtype=float))
    except KeyError as exc:
        raise ConfigInvalidError(f"dictionary spec for kind={kind!r} is missing {exc}") from exc
    raise ConfigInvalidError(f"unknown dictionary kind {kind!r}")
