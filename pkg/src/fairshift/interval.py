"""Markov interval maps with exact rational branch arithmetic.

A map is a partition of (an interval of) the line into countably many
open intervals plus one affine monotone branch per interval.  The Markov
requirement is that every branch image is a union of partition
intervals; ``transition_matrix`` checks this while compiling the map to
a transition rule set, so the chain layer, the stationary solver and the
fair-measure machinery all apply verbatim.

``lebesgue_fair_model`` goes the other way: given a summable stationary
vector it rebuilds a piecewise affine model of the map for which
Lebesgue measure itself is fair, with slope magnitude on each piece
equal to the column count of the target interval.  Coordinates are kept
as exact right-anchored weight offsets (distance from 1 in units of the
unnormalised weights), so fairness of the constructed model can be
verified with zero rounding error even when the weight total is
irrational.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

from .chain import Abs, AbsRay, Rel, RelRay, SchemaError, TransitionRuleSet
from .measure import FairMeasure

__all__ = [
    "HitsPartitionPoint", "InadmissibleWord", "NotMarkov",
    "FinitePartition", "GeometricPartition", "IntegerPartition",
    "Branch", "MarkovIntervalMap",
    "tent_map", "staircase_map", "five_three_map",
    "transition_matrix", "itinerary", "cylinder_interval",
    "Enclosure", "point_from_itinerary",
    "Piece", "PiecewiseAffineMap", "lebesgue_fair_model",
    "check_lebesgue_fair", "rohlin_entropy", "merged_segments",
]

Number = Fraction | float


class HitsPartitionPoint(ArithmeticError):
    """An orbit landed exactly on a partition point."""

    def __init__(self, point: Fraction, step: int | None = None):
        self.point = point
        self.step = step
        at = "" if step is None else f" at step {step}"
        super().__init__(f"orbit hits partition point {point}{at}")


class InadmissibleWord(ValueError):
    pass


class NotMarkov(ValueError):
    pass


@dataclass(frozen=True)
class FinitePartition:
    """Finitely many intervals; ids run 0..k-1 left to right."""

    points: tuple[Fraction, ...]

    kind = "finite"

    def __post_init__(self):
        pts = tuple(Fraction(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2 or any(a >= b for a, b in zip(pts, pts[1:])):
            raise ValueError("partition points must be strictly increasing")

    @property
    def n_intervals(self) -> int:
        return len(self.points) - 1

    def ids_within(self, window: int) -> list[int]:
        return list(range(self.n_intervals))

    def bounds(self, i: int) -> tuple[Fraction, Fraction]:
        if not 0 <= i < self.n_intervals:
            raise KeyError(f"no interval {i}")
        return self.points[i], self.points[i + 1]

    def locate(self, x: Fraction) -> int:
        if x in self.points:
            raise HitsPartitionPoint(x)
        if not self.points[0] < x < self.points[-1]:
            raise ValueError(f"{x} outside the partitioned interval")
        from bisect import bisect_right
        return bisect_right(self.points, x) - 1

    def covered(self, lo: Fraction, hi: Fraction):
        if lo not in self.points or hi not in self.points:
            raise NotMarkov(f"image ({lo}, {hi}) not bounded by partition points")
        return list(range(self.points.index(lo), self.points.index(hi)))


@dataclass(frozen=True)
class GeometricPartition:
    """Intervals (r^n, r^{n-1}) for n >= 1, accumulating at 0."""

    ratio: Fraction = Fraction(1, 2)

    kind = "geometric"

    def __post_init__(self):
        r = Fraction(self.ratio)
        object.__setattr__(self, "ratio", r)
        if not 0 < r < 1:
            raise ValueError("ratio must lie in (0, 1)")

    def ids_within(self, window: int) -> list[int]:
        return list(range(1, window + 1))

    def bounds(self, n: int) -> tuple[Fraction, Fraction]:
        if n < 1:
            raise KeyError(f"no interval {n}")
        return self.ratio ** n, self.ratio ** (n - 1)

    def _power_index(self, x: Fraction) -> int | None:
        """a with ratio**a == x, or None."""
        if x == 1:
            return 0
        if x <= 0 or x > 1:
            return None
        p = self.ratio
        a = 1
        while p > x:
            p *= self.ratio
            a += 1
        return a if p == x else None

    def locate(self, x: Fraction) -> int:
        if not 0 < x < 1:
            raise ValueError(f"{x} outside (0, 1)")
        n = self._power_index(x)
        if n is not None:
            raise HitsPartitionPoint(x)
        n = 1
        p = self.ratio
        while x < p:
            p *= self.ratio
            n += 1
        return n

    def covered(self, lo: Fraction, hi: Fraction):
        b = self._power_index(hi)
        if b is None:
            raise NotMarkov(f"image top {hi} is not a power of the ratio")
        if lo == 0:
            return ("ray", b + 1)
        a = self._power_index(lo)
        if a is None or a <= b:
            raise NotMarkov(f"image ({lo}, {hi}) not bounded by partition points")
        return list(range(b + 1, a + 1))


@dataclass(frozen=True)
class IntegerPartition:
    """Unit intervals (k, k+1) for every integer k."""

    kind = "integers"

    def ids_within(self, window: int) -> list[int]:
        return list(range(-window, window + 1))

    def bounds(self, k: int) -> tuple[Fraction, Fraction]:
        return Fraction(k), Fraction(k + 1)

    def locate(self, x: Fraction) -> int:
        if Fraction(x).denominator == 1:
            raise HitsPartitionPoint(Fraction(x))
        return math.floor(x)

    def covered(self, lo: Fraction, hi: Fraction):
        if Fraction(lo).denominator != 1 or Fraction(hi).denominator != 1:
            raise NotMarkov(f"image ({lo}, {hi}) not bounded by integers")
        return list(range(int(lo), int(hi)))


Partition = FinitePartition | GeometricPartition | IntegerPartition


@dataclass(frozen=True)
class Branch:
    """Affine monotone branch on one partition interval."""

    interval: int
    img_lo: Fraction
    img_hi: Fraction
    increasing: bool = True

    def __post_init__(self):
        object.__setattr__(self, "img_lo", Fraction(self.img_lo))
        object.__setattr__(self, "img_hi", Fraction(self.img_hi))
        if self.img_lo >= self.img_hi:
            raise ValueError("branch image must be a nonempty interval")


@dataclass(frozen=True)
class MarkovIntervalMap:
    partition: Partition
    table: Mapping[int, Branch] | None = None
    rule: Callable[[int], Branch] | None = None
    name: str = "custom"

    def branch(self, i: int) -> Branch:
        if self.table is not None and i in self.table:
            return self.table[i]
        if self.rule is not None:
            return self.rule(i)
        raise KeyError(f"no branch for interval {i}")

    def affine(self, i: int) -> tuple[Fraction, Fraction]:
        """(a, b) with the branch acting as x -> a*x + b."""
        br = self.branch(i)
        lo, hi = self.partition.bounds(i)
        a = (br.img_hi - br.img_lo) / (hi - lo)
        if br.increasing:
            return a, br.img_lo - a * lo
        return -a, br.img_hi + a * lo

    def apply(self, i: int, x: Fraction) -> Fraction:
        a, b = self.affine(i)
        return a * x + b

    def slope(self, i: int) -> Fraction:
        a, _ = self.affine(i)
        return a


def tent_map() -> MarkovIntervalMap:
    part = FinitePartition((Fraction(0), Fraction(1, 2), Fraction(1)))
    table = {0: Branch(0, 0, 1, True), 1: Branch(1, 0, 1, False)}
    return MarkovIntervalMap(part, table=table, name="tent")


def staircase_map(ratio: Fraction = Fraction(1, 2)) -> MarkovIntervalMap:
    """Countable staircase on (0,1): step n >= 2 maps onto (0, r^{n-2}).

    Step 1 covers everything; every branch increases.  Its transition
    rule set coincides with the factorial chain when r = 1/2.
    """
    r = Fraction(ratio)
    part = GeometricPartition(r)

    def rule(n: int) -> Branch:
        if n < 1:
            raise KeyError(n)
        if n == 1:
            return Branch(1, 0, 1, True)
        return Branch(n, 0, r ** (n - 2), True)

    return MarkovIntervalMap(part, rule=rule, name="staircase")


def five_three_map() -> MarkovIntervalMap:
    """Lattice map with slope 5 up on even cells and slope 3 down on odd."""
    part = IntegerPartition()

    def rule(k: int) -> Branch:
        if k % 2 == 0:
            n = k // 2
            return Branch(k, 2 * n - 2, 2 * n + 3, True)
        n = (k - 1) // 2
        return Branch(k, 2 * n, 2 * n + 3, False)

    return MarkovIntervalMap(part, rule=rule, name="five-three-map")


# -- compilation to a transition rule set ---------------------------------

def _row_descriptor(imap: MarkovIntervalMap, i: int):
    br = imap.branch(i)
    return imap.partition.covered(br.img_lo, br.img_hi)


def transition_matrix(imap: MarkovIntervalMap, head: int = 4,
                      probes: int = 4) -> TransitionRuleSet:
    """Compile the map's branch images into a transition rule set.

    Raises NotMarkov when a branch image is not a union of partition
    intervals, or when an infinite partition's rows fail to settle into
    a translation-invariant tail within the probe range.
    """
    part = imap.partition
    name = f"{imap.name}-transitions"
    if isinstance(part, FinitePartition):
        k = part.n_intervals
        explicit = {}
        for i in range(k):
            ids = _row_descriptor(imap, i)
            explicit[i] = tuple(Abs(j) for j in ids)
        return TransitionRuleSet(lo=0, hi=k - 1, head=k, explicit=explicit,
                                 name=name)

    if isinstance(part, GeometricPartition):
        head = max(head, 2)
        explicit = {}
        for i in range(1, head):
            ids = _row_descriptor(imap, i)
            if isinstance(ids, tuple):
                explicit[i] = (AbsRay(ids[1]),)
            else:
                explicit[i] = tuple(Abs(j) for j in ids)
        deltas = []
        for i in range(head, head + probes):
            ids = _row_descriptor(imap, i)
            if isinstance(ids, tuple):
                deltas.append(("ray", ids[1] - i))
            else:
                deltas.append(("list", tuple(j - i for j in ids)))
        if any(d != deltas[0] for d in deltas):
            raise NotMarkov("branch images do not settle into a shift-invariant tail")
        kind, val = deltas[0]
        tail_terms = (RelRay(val),) if kind == "ray" else tuple(Rel(o) for o in val)
        return TransitionRuleSet(lo=1, head=head, explicit=explicit,
                                 tail={0: tail_terms}, name=name)

    # integer lattice: find the smallest translation period of the rows
    for p in (1, 2, 3, 4):
        ok = True
        tails = {}
        for r in range(p):
            descs = []
            for i in (r, r + p, r - p, r + 2 * p, r - 2 * p):
                ids = _row_descriptor(imap, i)
                if isinstance(ids, tuple):
                    raise NotMarkov("unbounded branch image on the integer lattice")
                descs.append(tuple(j - i for j in ids))
            if any(d != descs[0] for d in descs):
                ok = False
                break
            tails[r] = tuple(Rel(o) for o in descs[0])
        if ok:
            return TransitionRuleSet(period=p, tail=tails, name=name)
    raise NotMarkov("rows are not translation periodic with period <= 4")


def itinerary(imap: MarkovIntervalMap, x: Fraction, n: int) -> tuple[int, ...]:
    """Exact symbolic orbit of length n; raises HitsPartitionPoint."""
    cur = Fraction(x)
    out = []
    for step in range(n):
        try:
            i = imap.partition.locate(cur)
        except HitsPartitionPoint as exc:
            raise HitsPartitionPoint(exc.point, step) from None
        out.append(i)
        cur = imap.apply(i, cur)
    return tuple(out)


def cylinder_interval(imap: MarkovIntervalMap, word: tuple[int, ...]) -> tuple[Fraction, Fraction]:
    """Exact open interval of points whose itinerary starts with the word.

    Pulled back branch by branch; the full image of the cylinder under
    len(word)-1 steps is exactly the last interval of the word.
    """
    if not word:
        raise ValueError("empty word")
    part = imap.partition
    lo, hi = part.bounds(word[-1])
    for k in range(len(word) - 2, -1, -1):
        i = word[k]
        br = imap.branch(i)
        # clip to the branch image; an empty overlap means the word is not
        # realisable by any orbit
        clo, chi = max(lo, br.img_lo), min(hi, br.img_hi)
        if clo >= chi:
            raise InadmissibleWord(f"no transition {i} -> {word[k + 1]}")
        if (clo, chi) != (lo, hi):
            raise InadmissibleWord(f"word not Markov at position {k}")
        a, b = imap.affine(i)
        u, v = (lo - b) / a, (hi - b) / a
        lo, hi = (u, v) if u < v else (v, u)
    return lo, hi


@dataclass(frozen=True)
class Enclosure:
    lo: Fraction
    hi: Fraction
    converged: bool

    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def width(self) -> Fraction:
        return self.hi - self.lo


def point_from_itinerary(imap: MarkovIntervalMap, word: tuple[int, ...],
                         eps: Fraction = Fraction(1, 10 ** 12)) -> Enclosure:
    """Interval enclosure of all points with the given itinerary prefix."""
    lo, hi = cylinder_interval(imap, word)
    return Enclosure(lo, hi, hi - lo < eps)


# -- Lebesgue fair models ---------------------------------------------------

@dataclass(frozen=True)
class Piece:
    """One affine piece, in right-anchored weight coordinates.

    ``xr`` and ``yr`` are (rho_right, rho_left) pairs, rho being the
    weight-distance from the right end of [0, 1]; the actual coordinate
    of a rho value t is 1 - t/total.
    """

    src: int
    dst: int
    xr: tuple[Number, Number]
    yr: tuple[Number, Number]
    increasing: bool
    cmag: Number                       # integer column count for built models

    def x_interval(self, total: float) -> tuple[float, float]:
        return 1.0 - float(self.xr[1]) / total, 1.0 - float(self.xr[0]) / total

    def y_interval(self, total: float) -> tuple[float, float]:
        return 1.0 - float(self.yr[1]) / total, 1.0 - float(self.yr[0]) / total

    def slope(self) -> Number:
        return self.cmag if self.increasing else -self.cmag


@dataclass(frozen=True)
class PiecewiseAffineMap:
    """Piecewise affine interval map carrying its own fair bookkeeping."""

    pieces: tuple[Piece, ...]          # sorted left to right along x
    total: Number                      # full weight mass including any tail
    emitted: Number                    # weight mass covered by interval slots
    gap: Number                        # slot mass lost to window truncation
    name: str = "fair-model"

    def piece_count(self) -> int:
        return len(self.pieces)

    def slot_of(self, state: int) -> tuple[Number, Number] | None:
        for p in self.pieces:
            if p.dst == state:
                return p.yr
        return None


def lebesgue_fair_model(imap: MarkovIntervalMap, mu: FairMeasure,
                        window: int | None = None) -> PiecewiseAffineMap:
    """Model of the map for which Lebesgue measure is fair.

    Interval i receives an x-slot of length w_i (its stationary weight);
    the slot is subdivided into one piece per successor j, of length
    w_i p_ij, mapped affinely onto the whole slot of j with the branch's
    orientation.  The slope magnitude is therefore exactly the column
    count of j.  Slots are laid out right-anchored so that the windowed
    weight tail only pushes the leftmost slots, never shifts the layout.
    """
    pi = mu.pi
    base = mu.base
    part = imap.partition
    ids = [s for s in pi.support() if pi.weight(s) != 0]
    if window is not None:
        allowed = set(part.ids_within(window))
        ids = [s for s in ids if s in allowed]
    if not ids:
        raise ValueError("empty stationary support")
    ids.sort(key=lambda s: part.bounds(s)[0])

    weights = {s: pi.weight(s) for s in ids}
    slots: dict[int, tuple[Number, Number]] = {}
    acc: Number = 0
    for s in reversed(ids):           # rightmost interval first
        w = weights[s]
        slots[s] = (acc, acc + w)
        acc = acc + w
    emitted = acc

    id_set = set(ids)
    counts = {s: len(base.predecessors(s)) for s in ids}
    pieces: list[Piece] = []
    gap: Number = 0
    accx: Number = 0
    for s in reversed(ids):
        br = imap.branch(s)
        succ = [(j, p) for j, p in mu.forward.row(s) if j in id_set]
        # successor pieces ordered right-to-left along x: an increasing
        # branch lays targets out left-to-right, so reverse its spatial order
        succ.sort(key=lambda jp: part.bounds(jp[0])[0], reverse=br.increasing)
        placed: Number = 0
        for j, p in succ:
            length = weights[s] * p
            x_hi = accx + length
            # with float weights a far-tail length can be absorbed by the
            # accumulator (or a whole slot can collapse); such a piece has
            # no Lebesgue mass and only degenerate affine data, skip it
            if x_hi > accx and slots[j][1] > slots[j][0]:
                pieces.append(Piece(src=s, dst=j,
                                    xr=(accx, x_hi),
                                    yr=slots[j],
                                    increasing=br.increasing,
                                    cmag=counts[j]))
            accx = x_hi
            placed = placed + length
        short = weights[s] - placed
        gap = gap + short
        accx = accx + short           # keep slots aligned with x layout
    pieces.reverse()                  # ascending x
    return PiecewiseAffineMap(tuple(pieces), total=pi.total, emitted=emitted,
                              gap=gap, name=f"{imap.name}-fair-model")


def _transfer(piece: Piece, t: Number) -> Number:
    """Image rho of an x rho inside the piece."""
    a, b = piece.xr
    c, d = piece.yr
    s = (d - c) / (b - a)
    if piece.increasing:
        return c + (t - a) * s
    return d - (t - a) * s


def _pull_back(piece: Piece, u: Number, v: Number) -> tuple[Number, Number]:
    """Preimage rho interval of (u, v) under the piece, assuming coverage."""
    a, b = piece.xr
    c, d = piece.yr
    s = (d - c) / (b - a)
    if piece.increasing:
        return a + (u - c) / s, a + (v - c) / s
    return a + (d - v) / s, a + (d - u) / s


def check_lebesgue_fair(model: PiecewiseAffineMap, depth: int = 2) -> Number:
    """Worst fairness violation of Lebesgue measure over piece cylinders.

    For each admissible word of pieces up to the given depth, the word's
    cell B is pulled back exactly; the covering count c(B) is measured
    from the geometry (pieces whose image contains B) and each covering
    piece contributes |len(piece ∩ g^{-1}B) - len(B)/c(B)|.  Exact zero
    for models built by ``lebesgue_fair_model`` from exact weights.
    """
    by_dst: dict[int, list[Piece]] = {}
    for p in model.pieces:
        by_dst.setdefault(p.dst, []).append(p)
    # under window truncation some slots are missing out-of-window
    # predecessor pieces; their cells cannot be certified either way and
    # are skipped, exactly like boundary states in the chain checks
    truncated = model.gap != 0 or model.emitted != model.total

    worst: Number = 0
    # a cell is tagged with the interval whose slot contains it, which is
    # where candidate covering pieces are looked up
    frontier = [(p.xr[0], p.xr[1], p.src) for p in model.pieces]
    for _ in range(depth):
        nxt: list[tuple[Number, Number, int]] = []
        for (u, v, home) in frontier:
            if not v > u:        # cell collapsed by float absorption
                continue
            covering = []
            for q in by_dst.get(home, ()):
                if q.yr[0] <= u and v <= q.yr[1]:
                    covering.append(q)
                elif q.yr[0] < v and u < q.yr[1]:
                    raise NotMarkov("piece image straddles a refinement cell")
            if not covering:
                continue
            c_b = len(covering)
            blen = v - u
            boundary = truncated and any(q.cmag != c_b for q in covering)
            for q in covering:
                pu, pv = _pull_back(q, u, v)
                if not boundary:
                    viol = abs((pv - pu) - blen / c_b)
                    if viol > worst:
                        worst = viol
                nxt.append((pu, pv, q.src))
        frontier = nxt
    return worst


def rohlin_entropy(model: PiecewiseAffineMap) -> float:
    """Integral of log|slope| over the emitted pieces, in [0,1] mass."""
    total = float(model.total)
    acc = 0.0
    for p in model.pieces:
        acc += float(p.xr[1] - p.xr[0]) / total * math.log(p.cmag)
    return acc


def merged_segments(model: PiecewiseAffineMap) -> list[tuple[float, float, int]]:
    """Maximal affine segments (x_lo, x_hi, signed slope) of the model.

    Adjacent pieces merge when their slopes agree and the images meet
    continuously at the junction.
    """
    total = float(model.total)
    segs: list[list] = []
    prev: Piece | None = None
    for p in model.pieces:            # ascending x = descending rho
        joined = False
        if prev is not None and segs:
            adjacent = prev.xr[0] == p.xr[1]
            if adjacent and prev.slope() == p.slope():
                left_y = prev.yr[0] if prev.increasing else prev.yr[1]
                right_y = p.yr[1] if p.increasing else p.yr[0]
                if left_y == right_y:
                    segs[-1][1] = p.xr[0]
                    joined = True
        if not joined:
            segs.append([p.xr[1], p.xr[0], p.slope()])
        prev = p
    out = []
    for rho_left, rho_right, slope in segs:
        out.append((1.0 - float(rho_left) / total,
                    1.0 - float(rho_right) / total, slope))
    return out
