"""Integer-coded languages, collections, closures and tell-tales.

The universe is the positive naturals 1, 2, 3, ... under numeric order; every
"string" is identified with its rank in that order.  A language is an infinite
decidable subset equipped with a strictly increasing enumerator.  The built-in
families below additionally carry closed forms for intersections (closures),
pairwise overlap bounds and tell-tale sets, so the simulators never have to
guess whether an intersection is infinite.

Built-in families
-----------------
threshold       L_i = {n : n >= i}                      (nested, Angluin)
dyadic          L_i = {2^(i-1) * (2t+1) : t >= 0}       (partition, Angluin)
sperner k       L_i = {j + N*t : S_j contains i}, the S_j being the
                floor(k/2)-subsets of [k] in lexicographic order,
                N = C(k, floor(k/2))
disjoint_union  truncated disjoint union of sperner components 2..k_max,
                embedded in the naturals by Cantor pairing
pair_subset     L_1 = evens, L_2 = all naturals (L_1 is a proper subset)
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np


class UndecidedClosureError(RuntimeError):
    """Scan budget exhausted before the closure could be certified either way."""


class EnumerationBudgetError(RuntimeError):
    """A scan-backed enumerator was asked for more elements than its budget allows."""


class NoTelltaleError(ValueError):
    """The family does not declare tell-tale sets."""


# Materialization cap for C(k, floor(k/2)); Python ints are exact, so the guard
# protects memory rather than arithmetic.
MAX_SPERNER_SUBSETS = 5_000_000


@dataclass(frozen=True)
class Language:
    """An infinite subset of the naturals with a strictly increasing enumerator.

    ``enumerator(j)`` is the j-th smallest member (1-based); ``membership`` and
    the enumerator agree by construction for every built-in family.
    """

    name: str
    membership: Callable[[int], bool]
    enumerator: Callable[[int], int]
    _bulk_membership: Callable[[np.ndarray], np.ndarray] | None = None
    _bulk_prefix: Callable[[int], np.ndarray] | None = None

    def contains(self, x: int) -> bool:
        return bool(self.membership(int(x)))

    def contains_bulk(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized membership; falls back to the scalar predicate."""
        xs = np.asarray(xs)
        if self._bulk_membership is not None:
            return self._bulk_membership(xs)
        return np.fromiter((self.membership(int(x)) for x in xs.ravel()),
                           dtype=bool, count=xs.size).reshape(xs.shape)

    def prefix(self, n: int) -> np.ndarray:
        """First ``n`` members in increasing order."""
        if self._bulk_prefix is not None:
            return self._bulk_prefix(n)
        return np.array([self.enumerator(j) for j in range(1, n + 1)], dtype=np.int64)


@dataclass(frozen=True)
class ClosureDescriptor:
    """Result of intersecting a subcollection.

    Either an exact finite sorted element tuple, or a certified-infinite
    strictly increasing enumerator.
    """

    finite_elements: tuple[int, ...] | None = None
    enumerator: Callable[[int], int] | None = None

    @classmethod
    def exact_finite(cls, elements: Iterable[int]) -> "ClosureDescriptor":
        elems = tuple(sorted(set(int(e) for e in elements)))
        return cls(finite_elements=elems, enumerator=None)

    @classmethod
    def infinite(cls, enumerator: Callable[[int], int]) -> "ClosureDescriptor":
        return cls(finite_elements=None, enumerator=enumerator)

    @property
    def is_infinite(self) -> bool:
        return self.enumerator is not None

    def element_at(self, j: int) -> int:
        """j-th smallest element (1-based); infinite descriptors only."""
        if self.enumerator is None:
            raise ValueError("element_at is only defined for infinite closures")
        return self.enumerator(j)

    def prefix(self, n: int) -> list[int]:
        if self.enumerator is not None:
            return [self.enumerator(j) for j in range(1, n + 1)]
        return list(self.finite_elements[:n])


@dataclass(frozen=True)
class TellTale:
    """Finite fingerprint of a language: no superset of it in the collection is
    a proper subset of the language."""

    language_index: int
    elements: tuple[int, ...]


def _residue_language(name: str, residues: Sequence[int], modulus: int) -> Language:
    """Language {r + modulus*t : r in residues, t >= 0} with residues in 1..modulus."""
    res = tuple(sorted(residues))
    res_arr = np.array(res, dtype=np.int64)
    res_set = frozenset(res)
    r = len(res)

    def member(x: int) -> bool:
        return x >= 1 and ((x - 1) % modulus) + 1 in res_set

    def enum(j: int) -> int:
        q, off = divmod(j - 1, r)
        return res[off] + modulus * q

    def bulk_member(xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        return (xs >= 1) & np.isin((xs - 1) % modulus + 1, res_arr)

    def bulk_prefix(n: int) -> np.ndarray:
        blocks = -(-n // r)
        grid = (np.arange(blocks, dtype=np.int64)[:, None] * modulus) + res_arr[None, :]
        return grid.ravel()[:n]

    return Language(name, member, enum, bulk_member, bulk_prefix)


def _merged_enumerator(extra: Sequence[int],
                       enum: Callable[[int], int]) -> Callable[[int], int]:
    """Enumerator of extra-union-enum, deduplicated, strictly increasing."""
    extra = sorted(set(int(e) for e in extra))
    cache: list[int] = []
    state = {"next_extra": 0, "next_j": 1}

    def merged(j: int) -> int:
        while len(cache) < j:
            cand_enum = enum(state["next_j"])
            if state["next_extra"] < len(extra):
                cand_extra = extra[state["next_extra"]]
                if cand_extra < cand_enum:
                    cache.append(cand_extra)
                    state["next_extra"] += 1
                    continue
                if cand_extra == cand_enum:
                    state["next_extra"] += 1
            cache.append(cand_enum)
            state["next_j"] += 1
        return cache[j - 1]

    return merged


class Collection:
    """Indexed family of languages (1-based, stable indices).

    ``kind`` is "finite" or "countable".  Finite collections expose exhaustive
    closure-dimension scans; countable ones must be truncated first.
    """

    kind: str = "finite"
    size: int | None = None
    family: str = "generic"

    def language(self, i: int) -> Language:
        raise NotImplementedError

    def _check_index(self, i: int) -> int:
        i = int(i)
        if i < 1 or (self.size is not None and i > self.size):
            raise IndexError(f"language index {i} out of range for {self.family}")
        return i

    def membership(self, i: int, x: int) -> bool:
        """Membership oracle: x in L_i.  Pure and deterministic."""
        return self.language(self._check_index(i)).contains(x)

    def closure(self, indices: Iterable[int]) -> ClosureDescriptor:
        raise NotImplementedError

    def is_proper_subset(self, i: int, j: int) -> bool:
        """Exact closed-form test for L_i being a proper subset of L_j."""
        raise NotImplementedError

    def pairwise_overlap(self, d: int) -> float:
        """M(d) = max_{a<b<=d} |L_a intersect L_b|; M(1) = 0; may be math.inf."""
        raise NotImplementedError

    def telltale(self, i: int, probe_bound: int = 1000,
                 validate: bool = True) -> TellTale:
        raise NoTelltaleError(f"family {self.family!r} declares no tell-tales")

    def closure_dimension(self) -> int:
        """Smallest d such that every non-empty subcollection closure is either
        infinite or of size <= d; -1 when every closure is infinite.

        Exhaustive over non-empty index subsets; finite collections only.
        """
        if self.kind != "finite" or self.size is None:
            raise ValueError("closure_dimension requires a finite collection; "
                             "truncate countable families first")
        best = -1
        indices = range(1, self.size + 1)
        for r in range(1, self.size + 1):
            for subset in itertools.combinations(indices, r):
                desc = self.closure(subset)
                if not desc.is_infinite:
                    best = max(best, len(desc.finite_elements))
        return best

    def spec(self) -> dict:
        raise NotImplementedError

    def _validate_telltale(self, tale: TellTale, probe_bound: int) -> TellTale:
        i = tale.language_index
        lang = self.language(i)
        for e in tale.elements:
            if not lang.contains(e):
                raise AssertionError(f"tell-tale element {e} outside language {i}")
        hi = self.size if self.size is not None else probe_bound
        for j in range(1, hi + 1):
            if j == i:
                continue
            other = self.language(j)
            if all(other.contains(e) for e in tale.elements) and self.is_proper_subset(j, i):
                raise AssertionError(
                    f"tell-tale for language {i} violated by proper subset {j}")
        return tale


class ThresholdCollection(Collection):
    """Nested suffix languages L_i = {n : n >= i}."""

    kind = "countable"
    size = None
    family = "threshold"

    def language(self, i: int) -> Language:
        i = self._check_index(i)

        def bulk_prefix(n: int) -> np.ndarray:
            return np.arange(i, i + n, dtype=np.int64)

        return Language(
            f"threshold[{i}]",
            membership=lambda x, lo=i: x >= lo,
            enumerator=lambda j, lo=i: lo + j - 1,
            _bulk_membership=lambda xs, lo=i: np.asarray(xs) >= lo,
            _bulk_prefix=bulk_prefix,
        )

    def closure(self, indices: Iterable[int]) -> ClosureDescriptor:
        idx = [self._check_index(i) for i in indices]
        if not idx:
            raise ValueError("closure of an empty index set is undefined")
        lo = max(idx)
        return ClosureDescriptor.infinite(lambda j, lo=lo: lo + j - 1)

    def is_proper_subset(self, i: int, j: int) -> bool:
        return i > j

    def pairwise_overlap(self, d: int) -> float:
        return 0.0 if d <= 1 else math.inf

    def telltale(self, i: int, probe_bound: int = 1000,
                 validate: bool = True) -> TellTale:
        i = self._check_index(i)
        tale = TellTale(i, (i,))
        return self._validate_telltale(tale, probe_bound) if validate else tale

    def truncate(self, k: int) -> "FiniteSlice":
        return FiniteSlice(self, k)

    def spec(self) -> dict:
        return {"family": "threshold"}


class DyadicCollection(Collection):
    """L_i = {2^(i-1) * odd}; the languages partition the naturals."""

    kind = "countable"
    size = None
    family = "dyadic"

    def language(self, i: int) -> Language:
        i = self._check_index(i)
        m = 1 << (i - 1)

        def bulk_member(xs: np.ndarray, m=m) -> np.ndarray:
            xs = np.asarray(xs, dtype=np.int64)
            return (xs >= 1) & (xs % (2 * m) == m)

        return Language(
            f"dyadic[{i}]",
            membership=lambda x, m=m: x >= 1 and x % (2 * m) == m,
            enumerator=lambda j, m=m: m * (2 * j - 1),
            _bulk_membership=bulk_member,
            _bulk_prefix=lambda n, m=m: m * (2 * np.arange(1, n + 1, dtype=np.int64) - 1),
        )

    def closure(self, indices: Iterable[int]) -> ClosureDescriptor:
        idx = sorted({self._check_index(i) for i in indices})
        if not idx:
            raise ValueError("closure of an empty index set is undefined")
        if len(idx) == 1:
            lang = self.language(idx[0])
            return ClosureDescriptor.infinite(lang.enumerator)
        return ClosureDescriptor.exact_finite(())

    def is_proper_subset(self, i: int, j: int) -> bool:
        return False

    def pairwise_overlap(self, d: int) -> float:
        return 0.0

    def telltale(self, i: int, probe_bound: int = 1000,
                 validate: bool = True) -> TellTale:
        i = self._check_index(i)
        tale = TellTale(i, (1 << (i - 1),))
        return self._validate_telltale(tale, probe_bound) if validate else tale

    def truncate(self, k: int) -> "FiniteSlice":
        return FiniteSlice(self, k)

    def spec(self) -> dict:
        return {"family": "dyadic"}


class SpernerCollection(Collection):
    """Antichain-packed residue languages over modulus N = C(k, floor(k/2)).

    The floor(k/2)-subsets of [k] are enumerated lexicographically as
    S_1..S_N and L_i owns residue class j exactly when S_j contains i.
    """

    kind = "finite"
    family = "sperner"

    def __init__(self, k: int):
        if k < 2:
            raise ValueError("sperner collection needs k >= 2")
        n_subsets = math.comb(k, k // 2)
        if n_subsets > MAX_SPERNER_SUBSETS:
            raise OverflowError(
                f"C({k},{k // 2}) = {n_subsets} exceeds the materialization cap")
        self.k = k
        self.size = k
        self.modulus = n_subsets
        self.subsets: tuple[frozenset[int], ...] = tuple(
            frozenset(s) for s in itertools.combinations(range(1, k + 1), k // 2))
        self._residues = {
            i: tuple(j for j, s in enumerate(self.subsets, start=1) if i in s)
            for i in range(1, k + 1)
        }

    def language(self, i: int) -> Language:
        i = self._check_index(i)
        return _residue_language(f"sperner[{self.k}][{i}]",
                                 self._residues[i], self.modulus)

    def closure_residues(self, indices: Iterable[int]) -> tuple[int, ...]:
        want = {self._check_index(i) for i in indices}
        if not want:
            raise ValueError("closure of an empty index set is undefined")
        return tuple(j for j, s in enumerate(self.subsets, start=1) if want <= s)

    def closure(self, indices: Iterable[int]) -> ClosureDescriptor:
        residues = self.closure_residues(indices)
        if not residues:
            return ClosureDescriptor.exact_finite(())
        lang = _residue_language("closure", residues, self.modulus)
        return ClosureDescriptor.infinite(lang.enumerator)

    def is_proper_subset(self, i: int, j: int) -> bool:
        ri, rj = set(self._residues[i]), set(self._residues[j])
        return ri < rj

    def pairwise_overlap(self, d: int) -> float:
        d = min(int(d), self.k)
        worst = 0.0
        for a in range(1, d + 1):
            for b in range(a + 1, d + 1):
                if self.closure((a, b)).is_infinite:
                    return math.inf
        return worst

    def spec(self) -> dict:
        return {"family": "sperner", "k": self.k}


def _cantor_pair(a: int, b: int) -> int:
    s = a + b
    return s * (s + 1) // 2 + b


def _cantor_unpair(z: int) -> tuple[int, int]:
    w = (math.isqrt(8 * z + 1) - 1) // 2
    b = z - w * (w + 1) // 2
    return w - b, b


class DisjointUnionCollection(Collection):
    """Disjoint union of sperner components k = 2..k_max, Cantor-paired into
    the naturals so that cross-component intersections are empty."""

    kind = "finite"
    family = "disjoint_union"

    def __init__(self, k_max: int):
        if k_max < 2:
            raise ValueError("disjoint union truncation needs k_max >= 2")
        self.k_max = k_max
        self.components = {k: SpernerCollection(k) for k in range(2, k_max + 1)}
        self._index_map: list[tuple[int, int]] = []
        for k in range(2, k_max + 1):
            for local in range(1, k + 1):
                self._index_map.append((k, local))
        self.size = len(self._index_map)

    def locate(self, i: int) -> tuple[int, int]:
        """Flat 1-based index -> (component k, local index)."""
        return self._index_map[self._check_index(i) - 1]

    def language(self, i: int) -> Language:
        k, local = self.locate(i)
        base = self.components[k].language(local)

        def member(x: int, k=k, base=base) -> bool:
            if x < 0:
                return False
            a, b = _cantor_unpair(int(x))
            return b == k and a >= 1 and base.contains(a)

        def enum(j: int, k=k, base=base) -> int:
            return _cantor_pair(base.enumerator(j), k)

        return Language(f"disjoint_union[{k}][{local}]", member, enum)

    def closure(self, indices: Iterable[int]) -> ClosureDescriptor:
        located = [self.locate(i) for i in indices]
        if not located:
            raise ValueError("closure of an empty index set is undefined")
        comps = {k for k, _ in located}
        if len(comps) > 1:
            return ClosureDescriptor.exact_finite(())
        k = comps.pop()
        inner = self.components[k].closure([local for _, local in located])
        if not inner.is_infinite:
            return ClosureDescriptor.exact_finite(
                _cantor_pair(e, k) for e in inner.finite_elements)
        return ClosureDescriptor.infinite(
            lambda j, k=k, e=inner.enumerator: _cantor_pair(e(j), k))

    def is_proper_subset(self, i: int, j: int) -> bool:
        (ki, li), (kj, lj) = self.locate(i), self.locate(j)
        if ki != kj:
            return False
        return self.components[ki].is_proper_subset(li, lj)

    def pairwise_overlap(self, d: int) -> float:
        d = min(int(d), self.size)
        for a in range(1, d + 1):
            for b in range(a + 1, d + 1):
                desc = self.closure((a, b))
                if desc.is_infinite:
                    return math.inf
        return 0.0

    def spec(self) -> dict:
        return {"family": "disjoint_union", "k_max": self.k_max}


class PairSubsetCollection(Collection):
    """Identification barrier fixture: L_1 = evens is a proper subset of
    L_2 = all naturals, and their intersection is infinite."""

    kind = "finite"
    size = 2
    family = "pair_subset"

    def language(self, i: int) -> Language:
        i = self._check_index(i)
        if i == 1:
            return Language(
                "evens",
                membership=lambda x: x >= 2 and x % 2 == 0,
                enumerator=lambda j: 2 * j,
                _bulk_membership=lambda xs: (np.asarray(xs) >= 2) & (np.asarray(xs) % 2 == 0),
                _bulk_prefix=lambda n: 2 * np.arange(1, n + 1, dtype=np.int64),
            )
        return Language(
            "naturals",
            membership=lambda x: x >= 1,
            enumerator=lambda j: j,
            _bulk_membership=lambda xs: np.asarray(xs) >= 1,
            _bulk_prefix=lambda n: np.arange(1, n + 1, dtype=np.int64),
        )

    def closure(self, indices: Iterable[int]) -> ClosureDescriptor:
        idx = sorted({self._check_index(i) for i in indices})
        if not idx:
            raise ValueError("closure of an empty index set is undefined")
        lang = self.language(1 if 1 in idx else 2)
        return ClosureDescriptor.infinite(lang.enumerator)

    def is_proper_subset(self, i: int, j: int) -> bool:
        return i == 1 and j == 2

    def pairwise_overlap(self, d: int) -> float:
        return 0.0 if d <= 1 else math.inf

    def spec(self) -> dict:
        return {"family": "pair_subset"}


class FiniteSlice(Collection):
    """First-k view of a countable collection; closures and overlaps pass through."""

    kind = "finite"

    def __init__(self, base: Collection, k: int):
        if k < 1:
            raise ValueError("slice needs k >= 1")
        self.base = base
        self.size = k
        self.family = f"{base.family}[:{k}]"

    def language(self, i: int) -> Language:
        return self.base.language(self._check_index(i))

    def closure(self, indices: Iterable[int]) -> ClosureDescriptor:
        return self.base.closure([self._check_index(i) for i in indices])

    def is_proper_subset(self, i: int, j: int) -> bool:
        return self.base.is_proper_subset(self._check_index(i), self._check_index(j))

    def pairwise_overlap(self, d: int) -> float:
        return self.base.pairwise_overlap(min(d, self.size))

    def telltale(self, i: int, probe_bound: int = 1000,
                 validate: bool = True) -> TellTale:
        return self.base.telltale(self._check_index(i), probe_bound, validate)

    def spec(self) -> dict:
        return {**self.base.spec(), "truncate": self.size}


class AugmentedCollection(Collection):
    """Base collection with a common finite element set appended to every
    language; raises the closure dimension by up to the number of appended
    elements while leaving infinite closures infinite."""

    def __init__(self, base: Collection, common: Iterable[int]):
        self.base = base
        self.common = tuple(sorted(set(int(e) for e in common)))
        self.kind = base.kind
        self.size = base.size
        self.family = f"{base.family}+common"

    def language(self, i: int) -> Language:
        base_lang = self.base.language(i)
        common = set(self.common)

        def member(x: int) -> bool:
            return x in common or base_lang.contains(x)

        return Language(f"{base_lang.name}+common", member,
                        _merged_enumerator(self.common, base_lang.enumerator))

    def closure(self, indices: Iterable[int]) -> ClosureDescriptor:
        inner = self.base.closure(indices)
        if inner.is_infinite:
            return ClosureDescriptor.infinite(
                _merged_enumerator(self.common, inner.enumerator))
        return ClosureDescriptor.exact_finite(inner.finite_elements + self.common)

    def is_proper_subset(self, i: int, j: int) -> bool:
        return self.base.is_proper_subset(i, j)

    def pairwise_overlap(self, d: int) -> float:
        base = self.base.pairwise_overlap(d)
        return base if math.isinf(base) else base + len(self.common)

    def spec(self) -> dict:
        return {**self.base.spec(), "common": list(self.common)}


class PredicateCollection(Collection):
    """Generic predicate-backed finite collection with a scan-budget closure.

    Closure certification uses the closure-dimension shortcut: finding more
    than ``dim_bound`` common elements certifies the intersection infinite.
    An exact finite answer additionally needs ``finite_horizon``: a declared
    point beyond which membership in a finite intersection never reappears.
    """

    kind = "finite"
    family = "predicate"

    def __init__(self, predicates: Sequence[Callable[[int], bool]],
                 dim_bound: int, scan_budget: int = 100_000,
                 finite_horizon: int | None = None):
        self.predicates = list(predicates)
        self.size = len(self.predicates)
        self.dim_bound = int(dim_bound)
        self.scan_budget = int(scan_budget)
        self.finite_horizon = finite_horizon

    def language(self, i: int) -> Language:
        pred = self.predicates[self._check_index(i) - 1]
        state: list[int] = []

        def enum(j: int) -> int:
            x = state[-1] if state else 0
            while len(state) < j:
                x += 1
                if x > self.scan_budget:
                    raise EnumerationBudgetError(
                        f"enumeration of predicate language {i} exceeded "
                        f"scan budget {self.scan_budget}")
                if pred(x):
                    state.append(x)
            return state[j - 1]

        return Language(f"predicate[{i}]", pred, enum)

    def closure(self, indices: Iterable[int]) -> ClosureDescriptor:
        idx = [self._check_index(i) for i in indices]
        if not idx:
            raise ValueError("closure of an empty index set is undefined")
        preds = [self.predicates[i - 1] for i in idx]
        found: list[int] = []
        for x in range(1, self.scan_budget + 1):
            if all(p(x) for p in preds):
                found.append(x)
                if len(found) > self.dim_bound:
                    return ClosureDescriptor.infinite(self._scan_enumerator(preds, found, x))
        if self.finite_horizon is not None and self.finite_horizon <= self.scan_budget:
            return ClosureDescriptor.exact_finite(
                e for e in found if e <= self.finite_horizon)
        raise UndecidedClosureError(
            f"scan budget {self.scan_budget} exhausted with only {len(found)} "
            f"common elements (bound {self.dim_bound}) and no finite horizon")

    def _scan_enumerator(self, preds, found: list[int], scanned_to: int):
        cache = list(found)
        state = {"x": scanned_to}

        def enum(j: int) -> int:
            while len(cache) < j:
                state["x"] += 1
                if state["x"] > self.scan_budget * 100:
                    raise EnumerationBudgetError(
                        "intersection enumeration exceeded the extended scan budget")
                if all(p(state["x"]) for p in preds):
                    cache.append(state["x"])
            return cache[j - 1]

        return enum

    def spec(self) -> dict:
        return {"family": "predicate", "size": self.size}


def make_threshold_collection() -> ThresholdCollection:
    return ThresholdCollection()


def make_dyadic_collection() -> DyadicCollection:
    return DyadicCollection()


def make_sperner_collection(k: int) -> SpernerCollection:
    return SpernerCollection(k)


def make_disjoint_union_collection(k_max: int) -> DisjointUnionCollection:
    return DisjointUnionCollection(k_max)


def make_pair_subset_collection() -> PairSubsetCollection:
    return PairSubsetCollection()


_FAMILIES = {
    "threshold": lambda spec: ThresholdCollection(),
    "dyadic": lambda spec: DyadicCollection(),
    "sperner": lambda spec: SpernerCollection(int(spec["k"])),
    "disjoint_union": lambda spec: DisjointUnionCollection(int(spec["k_max"])),
    "pair_subset": lambda spec: PairSubsetCollection(),
}


def collection_from_spec(spec: dict) -> Collection:
    """Build a collection from a config mapping, e.g. {"family": "sperner", "k": 4}."""
    family = spec.get("family")
    if family not in _FAMILIES:
        raise ValueError(f"unknown collection family {family!r}")
    coll = _FAMILIES[family](spec)
    if "common" in spec:
        coll = AugmentedCollection(coll, spec["common"])
    if "truncate" in spec:
        coll = FiniteSlice(coll, int(spec["truncate"]))
    return coll


def collection_from_token(token: str) -> Collection:
    """Parse the CLI shorthand "family[:param]", e.g. "sperner:4"."""
    name, _, arg = token.partition(":")
    if name == "sperner":
        return collection_from_spec({"family": name, "k": int(arg or 4)})
    if name == "disjoint_union":
        return collection_from_spec({"family": name, "k_max": int(arg or 3)})
    if arg:
        raise ValueError(f"family {name!r} takes no parameter")
    return collection_from_spec({"family": name})
