"""Fair measures: stationary vectors of the backward kernel and what
follows from them (forward matrix, cylinder weights, entropy, fairness
checks, atomic orbits).

Exact arithmetic convention: a stationary vector is stored as positive
*weights* plus the total mass of the full chain.  Weights may be exact
fractions while the total is only known numerically (the factorial chain
has rational weights 1/(j-1)! with total e); every identity that matters
for fairness is a ratio of weights, so those checks stay exact whenever
the weights are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .chain import BackwardKernel, InfinitePreimages, TransitionRuleSet

__all__ = [
    "StationaryVector", "NoSummableSolution", "WindowExhausted",
    "SolveDiagnostics", "ForwardMatrix", "FairMeasure", "ZeroMass",
    "solve_stationary", "verify_stationary", "build_forward_matrix",
    "fair_measure_from", "cylinder_measure", "check_fair_on_cylinders",
    "fair_entropy", "integral_log_c", "AtomicOrbit", "find_atomic_fair_measures",
]

Number = Fraction | float


class ZeroMass(ValueError):
    pass


class EntropyDiverges(ArithmeticError):
    pass


@dataclass(frozen=True)
class SolveDiagnostics:
    """Per-window convergence evidence collected by solve_stationary."""

    windows: tuple[dict, ...] = ()
    outcome: str = ""

    def as_dict(self) -> dict:
        return {"outcome": self.outcome, "windows": [dict(w) for w in self.windows]}


@dataclass(frozen=True)
class StationaryVector:
    """Weights of a probability vector with pi Q = pi.

    ``weights[j] / total`` is the stationary probability of j.  ``total``
    covers the whole chain including any unmaterialised tail, so entries
    of a closed form are exact while a truncated solve carries
    ``total = 1.0`` and a tail bound.
    """

    weights: Mapping[int, Number]
    total: Number = 1
    provenance: str = "truncated"
    window: int | None = None
    tolerance: float | None = None
    tail_mass_bound: float = 0.0
    diagnostics: SolveDiagnostics | None = None

    def support(self) -> list[int]:
        return sorted(self.weights)

    def weight(self, j: int) -> Number:
        return self.weights.get(j, 0)

    def entry(self, j: int) -> float:
        return float(self.weights.get(j, 0)) / float(self.total)

    def exact_entry(self, j: int) -> Fraction | None:
        w = self.weights.get(j, 0)
        if isinstance(w, Fraction) and isinstance(self.total, (Fraction, int)):
            return w / Fraction(self.total)
        return None

    @property
    def ratios_exact(self) -> bool:
        return all(isinstance(w, (Fraction, int)) for w in self.weights.values())

    def entries(self) -> dict[int, float]:
        return {j: self.entry(j) for j in self.support()}


@dataclass(frozen=True)
class NoSummableSolution:
    """Positive evidence that no summable stationary vector exists."""

    diagnostics: SolveDiagnostics
    note: str = ""


class WindowExhausted(RuntimeError):
    """Max window reached with neither convergence nor escape evidence."""

    def __init__(self, diagnostics: SolveDiagnostics):
        super().__init__("window budget exhausted without a verdict")
        self.diagnostics = diagnostics


def _truncated_rows(kernel: BackwardKernel, states: list[int]):
    """Kernel rows clipped to the window and renormalised.

    States whose clipped row is empty are dropped (with cascade) so the
    window chain is well defined.
    """
    keep = set(states)
    rows: dict[int, list[tuple[int, Fraction]]] = {}
    while True:
        rows = {}
        empty = []
        for j in keep:
            r = [(i, q) for i, q in kernel.row(j) if i in keep]
            if not r:
                empty.append(j)
                continue
            s = sum(q for _, q in r)
            rows[j] = [(i, q / s) for i, q in r]
        if not empty:
            break
        keep -= set(empty)
        if not keep:
            raise InfinitePreimages(states[0])
    return sorted(keep), rows


def _stationary_of_window(states: list[int], rows) -> np.ndarray:
    """Stationary vector of the finite window chain.

    Solved directly from (Q^T - I) x = 0 with a normalisation row; this
    computes the same fixed point the truncation scheme asks for without
    the slow mixing of plain power iteration near null recurrence.
    """
    from scipy.sparse import coo_matrix, identity
    from scipy.sparse.linalg import spsolve

    n = len(states)
    pos = {s: k for k, s in enumerate(states)}
    data, ri, ci = [], [], []
    for j, r in rows.items():
        for i, q in r:
            ri.append(pos[i])        # transpose: entry (i, j)
            ci.append(pos[j])
            data.append(float(q))
    a = (coo_matrix((data, (ri, ci)), shape=(n, n)) - identity(n)).tolil()
    k = pos[min(states, key=abs)]
    a[k, :] = np.ones(n)
    b = np.zeros(n)
    b[k] = 1.0
    x = spsolve(a.tocsc(), b)
    x = np.clip(x, 0.0, None)
    s = x.sum()
    if not np.isfinite(s) or s <= 0:
        raise ArithmeticError("window solve failed")
    return x / s


def _window_residual(states, rows, x) -> float:
    pos = {s: k for k, s in enumerate(states)}
    acc = np.zeros(len(states))
    for j, r in rows.items():
        for i, q in r:
            acc[pos[i]] += x[pos[j]] * float(q)
    return float(np.abs(acc - x).sum())


def solve_stationary(kernel: BackwardKernel, tolerance: float = 1e-10,
                     max_window: int = 2 ** 14, start_window: int = 8,
                     ) -> StationaryVector | NoSummableSolution:
    """Truncated-window stationary solve of pi Q = pi.

    Windows [-N, N] grow geometrically.  Convergence requires the l1
    change between consecutive window solutions and the boundary mass
    (outside |i| > N/2) to drop below ``tolerance``.  When the boundary
    mass refuses to decay across three consecutive windows the escaping
    mass is taken as positive evidence that no summable solution exists
    (heuristic thresholds; see diagnostics).  Otherwise the window budget
    runs out and WindowExhausted is raised: verdict unknown, never a
    fabricated vector.
    """
    base = kernel.base
    reports: list[dict] = []
    boundary_hist: list[float] = []
    prev: dict[int, float] | None = None
    n = start_window
    if base.domain_finite():
        # a finite domain is solved whole in one shot; partial windows of a
        # finite chain would only manufacture spurious boundary loss
        n = max(n, abs(base.lo), abs(base.hi))
    while True:
        states = base.states(n)
        whole = base.domain_finite() and (
            base.lo >= -n and base.hi <= n)
        states, rows = _truncated_rows(kernel, states)
        x = _stationary_of_window(states, rows)
        sol = {s: float(v) for s, v in zip(states, x) if v > 0.0}
        boundary = sum(v for s, v in sol.items() if abs(s) > n // 2)
        if whole:
            boundary = 0.0
        if prev is None:
            change = math.inf
        else:
            keys = set(prev) | set(sol)
            change = sum(abs(sol.get(s, 0.0) - prev.get(s, 0.0)) for s in keys)
        residual = _window_residual(states, rows, x)
        reports.append({"window": n, "size": len(states), "boundary_mass": boundary,
                        "l1_change": None if change is math.inf else change,
                        "residual": residual})
        boundary_hist.append(boundary)
        converged = boundary < tolerance and (whole or change < tolerance)
        if converged:
            diag = SolveDiagnostics(tuple(reports), "converged")
            return StationaryVector(weights=sol, total=1.0, provenance="truncated",
                                    window=n, tolerance=tolerance,
                                    tail_mass_bound=boundary + (0.0 if change is math.inf else change),
                                    diagnostics=diag)
        if len(boundary_hist) >= 3:
            b1, b2, b3 = boundary_hist[-3:]
            floor = max(100 * tolerance, 1e-8)
            if b3 > floor and b1 > 0 and b2 > 0 and b2 >= 0.8 * b1 and b3 >= 0.8 * b2:
                diag = SolveDiagnostics(tuple(reports), "escaping-mass")
                return NoSummableSolution(diag, note="boundary mass not decaying "
                                          "across three consecutive windows")
        prev = sol
        if n >= max_window or whole:
            raise WindowExhausted(SolveDiagnostics(tuple(reports), "window-exhausted"))
        n = min(2 * n, max_window)


def verify_stationary(pi: StationaryVector, kernel: BackwardKernel, window: int) -> Number:
    """l1 residual of pi Q = pi over the interior of the window.

    Interior states are those whose whole incoming mass is visible, i.e.
    their successor set is finite and contained in the window.  Exact
    when the weights are exact.
    """
    base = kernel.base
    states = base.states(window)
    inside = set(states)
    zero = Fraction(0) if pi.ratios_exact else 0.0
    acc: dict[int, Number] = {}
    for j in states:
        wj = pi.weight(j)
        if wj == 0:
            continue
        for i, q in kernel.row(j):
            if i in inside:
                acc[i] = acc.get(i, zero) + wj * q
    residual = zero
    for i in states:
        if base.row_unbounded(i):
            continue
        if not set(base.successors(i)) <= inside:
            continue
        residual += abs(acc.get(i, zero) - pi.weight(i))
    if isinstance(residual, Fraction) and isinstance(pi.total, (Fraction, int)):
        return residual / Fraction(pi.total)
    return float(residual) / float(pi.total)


@dataclass(frozen=True)
class ForwardMatrix:
    """Row-stochastic forward matrix p_ij = pi_j q_ji / pi_i."""

    rows: Mapping[int, tuple[tuple[int, Number], ...]]

    def row(self, i: int) -> tuple[tuple[int, Number], ...]:
        return self.rows.get(i, ())

    def prob(self, i: int, j: int) -> Number:
        for k, p in self.rows.get(i, ()):
            if k == j:
                return p
        return 0


def build_forward_matrix(pi: StationaryVector, kernel: BackwardKernel,
                         window: int) -> ForwardMatrix:
    """Forward matrix on the window, exact whenever the weights are exact.

    p_ij = pi_j q_ji / pi_i depends only on weight ratios, so no
    normaliser enters.  Rows of states whose successors leave the window
    are truncated accordingly (their sums fall short by the tail mass).
    """
    base = kernel.base
    states = [s for s in base.states(window) if pi.weight(s) != 0]
    cc: dict[int, int] = {}
    rows: dict[int, tuple[tuple[int, Number], ...]] = {}
    for i in states:
        wi = pi.weight(i)
        if wi == 0:
            raise ZeroMass(f"state {i} has zero mass")
        row = []
        for j in base.successors(i, within=window):
            wj = pi.weight(j)
            if wj == 0:
                continue
            if j not in cc:
                c = base.column_count(j)
                if c is math.inf:
                    raise InfinitePreimages(j)
                cc[j] = c
            if isinstance(wi, Fraction) and isinstance(wj, Fraction):
                p = wj / (wi * cc[j])
            else:
                p = float(wj) / (float(wi) * cc[j])
            row.append((j, p))
        rows[i] = tuple(row)
    return ForwardMatrix(rows)


@dataclass(frozen=True)
class FairMeasure:
    """Markov measure (pi, P) together with the kernel it came from."""

    pi: StationaryVector
    forward: ForwardMatrix
    kernel: BackwardKernel

    @property
    def base(self) -> TransitionRuleSet:
        return self.kernel.base


def fair_measure_from(pi: StationaryVector, kernel: BackwardKernel,
                      window: int) -> FairMeasure:
    return FairMeasure(pi, build_forward_matrix(pi, kernel, window), kernel)


def cylinder_measure(mu: FairMeasure, word: Sequence[int]) -> Number:
    """Measure of the cylinder [word] = pi_{w0} * prod p_{w_k w_{k+1}}.

    Returns 0 for inadmissible words.  Exact (a Fraction) when both the
    weights and the total are exact.
    """
    if len(word) == 0:
        raise ValueError("word must have at least one symbol")
    w0 = word[0]
    wgt = mu.pi.weight(w0)
    if wgt == 0:
        return 0
    acc: Number = wgt
    for a, b in zip(word, word[1:]):
        p = mu.forward.prob(a, b)
        if p == 0:
            return 0
        acc = acc * p
    if isinstance(acc, Fraction) and isinstance(mu.pi.total, (Fraction, int)):
        return acc / Fraction(mu.pi.total)
    return float(acc) / float(mu.pi.total)


def check_fair_on_cylinders(mu: FairMeasure, m: TransitionRuleSet,
                            depth: int, window: int) -> Number:
    """Worst violation of mu([i . w]) = mu([w]) / c(w0).

    Ranges over admissible words w of length 1..depth inside the window
    and over window predecessors i of w0.  When every row of a finite
    chain is full the whole space is itself a legal test set, so the
    length-0 word is included in that case (for other chains it is not
    measurable with respect to the branch-image algebra).  Computed in
    weight space, hence exact for exact weights.
    """
    states = m.states(window)
    state_set = set(states)
    zero = Fraction(0) if mu.pi.ratios_exact else 0.0
    worst = zero

    def weight_of(word: tuple[int, ...]) -> Number:
        acc: Number = mu.pi.weight(word[0])
        for a, b in zip(word, word[1:]):
            acc = acc * mu.forward.prob(a, b)
        return acc

    # length-0 word: only when the whole space is branch-image measurable
    if m.rows_full():
        c = len(states)
        for i in states:
            v = abs(mu.pi.weight(i) - _as(mu.pi.total, mu.pi.ratios_exact) / c)
            worst = max(worst, v)

    stack: list[tuple[int, ...]] = [(s,) for s in states]
    while stack:
        word = stack.pop()
        base_w = weight_of(word)
        w0 = word[0]
        c = m.column_count(w0)
        if c is not math.inf:
            for i in m.predecessors(w0):
                if i not in state_set:
                    continue
                ext = mu.pi.weight(i) * mu.forward.prob(i, w0)
                for a, b in zip(word, word[1:]):
                    ext = ext * mu.forward.prob(a, b)
                worst = max(worst, abs(ext - base_w / c))
        if len(word) < depth:
            for j in m.successors(word[-1], within=window):
                stack.append(word + (j,))
    if isinstance(worst, Fraction) and isinstance(mu.pi.total, (Fraction, int)):
        return worst / Fraction(mu.pi.total)
    return float(worst) / float(mu.pi.total)


def _as(total: Number, exact: bool) -> Number:
    if exact and isinstance(total, (Fraction, int)):
        return Fraction(total)
    return float(total)


def fair_entropy(mu: FairMeasure, window: int) -> float:
    """Truncated -sum pi_i p_ij log p_ij over the window.

    The tail beyond the window is bounded by the stationary tail mass
    times the largest row entropy seen; callers report it alongside.
    """
    h = 0.0
    for i in mu.pi.support():
        if abs(i) > window:
            continue
        pi_i = mu.pi.entry(i)
        if pi_i == 0.0:
            continue
        for j, p in mu.forward.row(i):
            pf = float(p)
            if pf > 0.0:
                h -= pi_i * pf * math.log(pf)
        if h > 1e12:
            raise EntropyDiverges("partial sums exceed any plausible entropy")
    return h


def entropy_tail_estimate(mu: FairMeasure, window: int) -> float:
    """Heuristic bound on the entropy mass outside the window."""
    row_h = 0.0
    for i in mu.pi.support():
        s = 0.0
        for _, p in mu.forward.row(i):
            pf = float(p)
            if pf > 0.0:
                s -= pf * math.log(pf)
        row_h = max(row_h, s)
    return mu.pi.tail_mass_bound * max(row_h, 1.0)


def integral_log_c(mu: FairMeasure, m: TransitionRuleSet, window: int) -> float:
    """Integral of log c over the measure, truncated to the window."""
    total = 0.0
    for i in mu.pi.support():
        if abs(i) > window:
            continue
        c = m.column_count(i)
        if c is math.inf:
            raise InfinitePreimages(i)
        total += mu.pi.entry(i) * math.log(c)
    return total


@dataclass(frozen=True)
class AtomicOrbit:
    """A totally invariant periodic orbit: the uniform measure on it is fair.

    Every state on the cycle has exactly one predecessor, the previous
    cycle state, so the orbit equals its own preimage.
    """

    states: tuple[int, ...]

    @property
    def period(self) -> int:
        return len(self.states)


def find_atomic_fair_measures(m: TransitionRuleSet, max_period: int,
                              window: int) -> list[AtomicOrbit]:
    states = m.states(window)
    unique_pred: dict[int, int] = {}
    for s in states:
        if m.column_count(s) == 1:
            unique_pred[s] = m.predecessors(s)[0]
    orbits: set[tuple[int, ...]] = set()
    for s in unique_pred:
        path = [s]
        t = s
        for _ in range(max_period):
            if t not in unique_pred:
                break
            t = unique_pred[t]
            if t == s:
                cycle = tuple(reversed(path))      # forward order
                k = cycle.index(min(cycle))
                orbits.add(cycle[k:] + cycle[:k])
                break
            path.append(t)
    return [AtomicOrbit(c) for c in sorted(orbits)]
