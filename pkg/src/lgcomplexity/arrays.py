"""Orthogonal arrays and the hard input instances they generate.

An orthogonal array here always has strength k-1: fixing any k-1 of the k
coordinates leaves exactly |T|/q^(k-1) completions inside T.  A hard instance
attaches one array per (certificate, minimal set); the positive set X_M
collects inputs whose projections hit every array of M, and the negative set Y
collects inputs that avoid every array of every certificate.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapacityError, ParameterError, StructuralError
from .indexing import ENUMERATION_CAP, all_inputs, check_enumerable, decode, encode
from .structures import (
    CertificateStructure,
    mask_members,
    minimal_profile,
    structure_to_dict,
)

_VERIFY_CAP = 1 << 20


@dataclass(frozen=True)
class OrthogonalArray:
    """A subset of [q]^k stored as sorted rows."""

    q: int
    k: int
    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.q < 2 or self.k < 1:
            raise ParameterError(f"need q >= 2 and k >= 1, got q={self.q}, k={self.k}")
        rows = tuple(sorted(tuple(int(v) for v in row) for row in self.rows))
        if not rows:
            raise ParameterError("an orthogonal array needs at least one row")
        for row in rows:
            if len(row) != self.k:
                raise StructuralError(f"row {row} does not have length {self.k}")
            if any(not 0 <= v < self.q for v in row):
                raise StructuralError(f"row {row} has entries outside [0, {self.q})")
        if len(set(rows)) != len(rows):
            raise StructuralError("rows must be distinct")
        object.__setattr__(self, "rows", rows)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def size(self) -> int:
        return len(self.rows)

    def row_codes(self) -> np.ndarray:
        return np.sort(encode(np.array(self.rows, dtype=np.int64), self.q))

    def contains_row(self, row: Sequence[int]) -> bool:
        return tuple(int(v) for v in row) in set(self.rows)


def sum_array(q: int, k: int) -> OrthogonalArray:
    """All rows of [q]^k whose entries sum to 0 mod q; size q^(k-1)."""
    if q < 2 or k < 1:
        raise ParameterError(f"need q >= 2 and k >= 1, got q={q}, k={k}")
    check_enumerable(q, k)
    prefix = all_inputs(q, k - 1) if k > 1 else np.zeros((1, 0), dtype=np.int64)
    last = (-prefix.sum(axis=1)) % q
    rows = np.concatenate([prefix, last[:, None]], axis=1)
    return OrthogonalArray(q, k, tuple(map(tuple, rows.tolist())))


@dataclass(frozen=True)
class OACounterexample:
    coordinate: int              # 1-based coordinate being completed
    partial: tuple[int, ...]     # values of the other k-1 coordinates, in order
    count: int
    expected: float


@dataclass(frozen=True)
class OAVerification:
    ok: bool
    completions: float           # |T| / q^(k-1)
    counterexample: OACounterexample | None = None
    note: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def verify_orthogonal_array(array: OrthogonalArray) -> OAVerification:
    """Check the strength-(k-1) property; on failure return the first offender.

    Scans completion coordinates ascending and partial assignments in
    lexicographic order, so the counterexample is deterministic.
    """
    q, k = array.q, array.k
    denom = q ** (k - 1)
    if denom > _VERIFY_CAP:
        raise CapacityError(f"verification needs q^(k-1) <= {_VERIFY_CAP}, got {denom}")
    expected = len(array) / denom
    note = None
    if len(array) % denom != 0:
        note = (
            f"size {len(array)} is not divisible by q^(k-1) = {denom}; "
            "no uniform completion count exists"
        )
    rows = np.array(array.rows, dtype=np.int64)
    for i in range(1, k + 1):
        others = [j for j in range(k) if j != i - 1]
        projected = encode(rows[:, others], q) if others else np.zeros(len(rows), dtype=np.int64)
        counts = np.bincount(projected, minlength=denom)
        bad = np.flatnonzero(counts != expected)
        if bad.size:
            code = int(bad[0])
            partial = tuple(decode([code], q, k - 1)[0].tolist()) if k > 1 else ()
            return OAVerification(
                ok=False,
                completions=expected,
                counterexample=OACounterexample(i, partial, int(counts[code]), expected),
                note=note,
            )
    return OAVerification(ok=True, completions=expected, note=note)


# ---------------------------------------------------------------------------
# hard instances


class FValue(enum.Enum):
    ONE = "one"
    ZERO = "zero"
    OUTSIDE_PROMISE = "outside_promise"


@dataclass(frozen=True)
class HardInstance:
    """Positive sets X_M, negative set Y, and the arrays that carved them.

    Inputs are identified by their big-endian mixed-radix codes.  When q^n is
    over the enumeration cap the instance is implicit: x_sets and y_codes are
    None and membership runs through the array predicates only.
    """

    cert: CertificateStructure
    q: int
    arrays: tuple[tuple[OrthogonalArray, ...], ...]
    x_sets: tuple[np.ndarray, ...] | None
    y_codes: np.ndarray | None

    def __post_init__(self):
        if len(self.arrays) != len(self.cert):
            raise StructuralError("need one array tuple per certificate")
        for m, certificate in enumerate(self.cert.certificates):
            if len(self.arrays[m]) != len(certificate.minimal_sets):
                raise StructuralError(
                    f"certificate {m} has {len(certificate.minimal_sets)} minimal sets "
                    f"but {len(self.arrays[m])} arrays"
                )
            for mask, array in zip(certificate.minimal_sets, self.arrays[m]):
                if array.q != self.q:
                    raise StructuralError(f"array alphabet {array.q} != instance q {self.q}")
                if array.k != mask.bit_count():
                    raise StructuralError(
                        f"array length {array.k} != generator size {mask.bit_count()}"
                    )
        if self.x_sets is not None:
            frozen = []
            for xs in self.x_sets:
                xs = np.asarray(xs, dtype=np.int64)
                xs.setflags(write=False)
                frozen.append(xs)
            object.__setattr__(self, "x_sets", tuple(frozen))
        if self.y_codes is not None:
            y = np.asarray(self.y_codes, dtype=np.int64)
            y.setflags(write=False)
            object.__setattr__(self, "y_codes", y)

    @property
    def n(self) -> int:
        return self.cert.n

    @property
    def explicit(self) -> bool:
        return self.x_sets is not None

    @property
    def input_count(self) -> int:
        return self.q ** self.n

    def x_size(self, m: int) -> int:
        if self.x_sets is not None:
            return len(self.x_sets[m])
        # single generator per certificate: the array fixes one coordinate's worth
        certificate = self.cert.certificates[m]
        if len(certificate.minimal_sets) != 1:
            raise CapacityError("implicit instances support only single-generator certificates")
        return len(self.arrays[m][0]) * self.q ** (self.n - certificate.minimal_sets[0].bit_count())

    def y_size(self) -> int:
        if self.y_codes is None:
            raise CapacityError(
                "negative-set enumeration was skipped (q^n over the cap); "
                "only explicit instances list Y"
            )
        return len(self.y_codes)

    def in_x(self, m: int, x: Sequence[int]) -> bool:
        digits = np.asarray(x, dtype=np.int64)[None, :]
        certificate = self.cert.certificates[m]
        for mask, array in zip(certificate.minimal_sets, self.arrays[m]):
            members = [j - 1 for j in mask_members(mask)]
            code = int(encode(digits[:, members], self.q)[0])
            if code not in set(array.row_codes().tolist()):
                return False
        return True

    def instance_hash(self) -> str:
        doc = {
            "structure": structure_to_dict(self.cert),
            "q": self.q,
            "arrays": [[list(map(list, a.rows)) for a in per_cert] for per_cert in self.arrays],
        }
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()

    def to_summary_dict(self, row_elision: int = 4096) -> dict:
        return {
            "q": self.q,
            "n": self.n,
            "cert": structure_to_dict(self.cert),
            "x_sizes": [self.x_size(m) for m in range(len(self.cert))],
            "y_size": self.y_size() if self.y_codes is not None else None,
            "arrays": [
                [
                    {"q": a.q, "k": a.k, "size": len(a),
                     "rows": [list(r) for r in a.rows] if len(a) <= row_elision else None}
                    for a in per_cert
                ]
                for per_cert in self.arrays
            ],
        }


def _x_mask_for_certificate(cert, q, n, arrays_m, certificate, digits) -> np.ndarray:
    mask = np.ones(len(digits), dtype=bool)
    for gen_mask, array in zip(certificate.minimal_sets, arrays_m):
        members = [j - 1 for j in mask_members(gen_mask)]
        codes = encode(digits[:, members], q)
        mask &= np.isin(codes, array.row_codes())
    return mask


def build_instance(
    cert: CertificateStructure,
    q: int,
    arrays: Sequence[Sequence[OrthogonalArray]],
    cap: int = ENUMERATION_CAP,
) -> HardInstance:
    """Assemble an instance from explicit per-(certificate, minimal set) arrays.

    No bounded-generation hypothesis: X_M is the intersection over the
    certificate's arrays and Y collects the inputs avoiding every array.
    Requires q^n enumerable.
    """
    check_enumerable(q, cert.n, cap)
    arrays = tuple(tuple(per) for per in arrays)
    digits = all_inputs(q, cert.n, cap)
    x_sets = []
    avoid_all = np.ones(len(digits), dtype=bool)
    for m, certificate in enumerate(cert.certificates):
        for gen_mask, array in zip(certificate.minimal_sets, arrays[m]):
            members = [j - 1 for j in mask_members(gen_mask)]
            codes = encode(digits[:, members], q)
            avoid_all &= ~np.isin(codes, array.row_codes())
        x_mask = _x_mask_for_certificate(cert, q, cert.n, arrays[m], certificate, digits)
        x_sets.append(np.flatnonzero(x_mask).astype(np.int64))
    y = np.flatnonzero(avoid_all).astype(np.int64)
    return HardInstance(cert=cert, q=q, arrays=arrays, x_sets=tuple(x_sets), y_codes=y)


def build_bounded_instance(
    cert: CertificateStructure,
    q: int,
    arrays: Sequence[OrthogonalArray] | None = None,
    cap: int = ENUMERATION_CAP,
) -> HardInstance:
    """Instance for a boundedly generated structure; arrays default to sum arrays.

    Requires a single generator per certificate, alphabet q >= 2|C|, and each
    array of size q^(|A_M|-1).  Every |X_M| is then q^(n-1) and |Y| >= q^n/2.
    """
    profile = minimal_profile(cert)
    if not profile.boundedly_generated:
        raise StructuralError(
            "structure is not boundedly generated (some certificate has several "
            f"minimal sets: counts {profile.counts})"
        )
    if q < 2 * len(cert):
        raise ParameterError(
            f"alphabet too small: need q >= 2 * |C| = {2 * len(cert)}, got q = {q}"
        )
    generators = [c.minimal_sets[0] for c in cert.certificates]
    if arrays is None:
        arrays = [sum_array(q, g.bit_count()) for g in generators]
    arrays = list(arrays)
    if len(arrays) != len(cert):
        raise StructuralError(f"need one array per certificate, got {len(arrays)}")
    for g, array in zip(generators, arrays):
        k = g.bit_count()
        if array.k != k or array.q != q:
            raise StructuralError(
                f"array (q={array.q}, k={array.k}) does not fit generator "
                f"{mask_members(g)} over alphabet {q}"
            )
        if len(array) != q ** (k - 1):
            raise ParameterError(
                f"array size {len(array)} != q^(k-1) = {q ** (k - 1)}"
            )
        check = verify_orthogonal_array(array)
        if not check.ok:
            raise StructuralError(f"array fails the strength property: {check.counterexample}")
    per_cert = tuple((a,) for a in arrays)
    if q ** cert.n > cap:
        return HardInstance(cert=cert, q=q, arrays=per_cert, x_sets=None, y_codes=None)
    return build_instance(cert, q, per_cert, cap)


@dataclass(frozen=True)
class OrthogonalityCheck:
    ok: bool
    subset: tuple[int, ...] | None = None   # members of the violating S
    assignment: tuple[int, ...] | None = None
    count: int | None = None
    expected: float | None = None

    def __bool__(self) -> bool:
        return self.ok


def verify_orthogonality_property(instance: HardInstance, m: int) -> OrthogonalityCheck:
    """Check that X_M projects uniformly onto every subset S outside M.

    For every S not in M and every assignment z in [q]^S the number of x in
    X_M with x_S = z must be |X_M| / q^|S|.  Scans subsets by ascending mask
    and assignments by ascending code; returns the first violation.
    """
    if not instance.explicit:
        raise CapacityError("orthogonality verification needs an explicit instance")
    cert = instance.cert
    n, q = cert.n, instance.q
    certificate = cert.certificates[m]
    x_codes = instance.x_sets[m]
    digits = decode(x_codes, q, n)
    size = len(x_codes)
    for mask in range(1 << n):
        if certificate.contains(mask):
            continue
        members = [j - 1 for j in mask_members(mask)]
        buckets = q ** len(members)
        expected = size / buckets
        projected = (
            encode(digits[:, members], q) if members else np.zeros(size, dtype=np.int64)
        )
        counts = np.bincount(projected, minlength=buckets)
        bad = np.flatnonzero(counts != expected)
        if bad.size:
            code = int(bad[0])
            assignment = tuple(decode([code], q, len(members))[0].tolist()) if members else ()
            return OrthogonalityCheck(
                ok=False,
                subset=mask_members(mask),
                assignment=assignment,
                count=int(counts[code]),
                expected=expected,
            )
    return OrthogonalityCheck(ok=True)


def evaluate_f(instance: HardInstance, x) -> FValue:
    """Classify an input: ONE in some X_M, ZERO in Y, otherwise outside the promise."""
    digits = np.asarray(x, dtype=np.int64)
    if digits.shape != (instance.n,):
        raise StructuralError(f"input must have length {instance.n}")
    if np.any(digits < 0) or np.any(digits >= instance.q):
        raise StructuralError(f"input entries must lie in [0, {instance.q})")
    hit_any_array = False
    in_some_x = False
    for m, certificate in enumerate(instance.cert.certificates):
        all_hit = True
        for gen_mask, array in zip(certificate.minimal_sets, instance.arrays[m]):
            members = [j - 1 for j in mask_members(gen_mask)]
            code = int(encode(digits[None, members], instance.q)[0])
            hit = bool(np.isin(code, array.row_codes()))
            hit_any_array = hit_any_array or hit
            all_hit = all_hit and hit
        in_some_x = in_some_x or all_hit
    if in_some_x:
        return FValue.ONE
    if not hit_any_array:
        return FValue.ZERO
    return FValue.OUTSIDE_PROMISE
