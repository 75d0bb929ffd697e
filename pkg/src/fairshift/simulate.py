"""Seeded sampling of backward trajectories and their path statistics.

A backward path y_0, y_1, ... follows the kernel Q: each step moves to a
uniformly chosen predecessor of the current state.  Reading a window of
the path backwards, (y_n, y_{n-1}, ..., y_{n-k}), gives the forward word
seen by the fair measure, which is how the cylinder frequencies below
are counted.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .chain import BackwardKernel
from .measure import FairMeasure, cylinder_measure

__all__ = [
    "BackwardPath", "sample_backward", "sample_paths", "path_statistics",
    "PathStats", "geo_mean_series", "geo_mean_convergence", "GeoMeanReport",
    "equidistribution_test", "equidistribution_report",
]


@dataclass(frozen=True)
class BackwardPath:
    states: np.ndarray          # length n+1, states[0] == start
    start: int
    seed: int
    chain: str = "custom"

    def __len__(self) -> int:
        return int(self.states.size)

    def origin_visits(self, origin: int | None = None) -> np.ndarray:
        target = self.start if origin is None else origin
        return np.nonzero(self.states == target)[0]


def sample_backward(kernel: BackwardKernel, start: int, length: int,
                    seed: int = 0) -> BackwardPath:
    """One backward trajectory of the given length from ``start``.

    Offset kernels (uniform or residue-dependent laws) are drawn in one
    vectorised pass; other chains fall back to a cached-row loop.  The
    stream is a deterministic function of the seed.
    """
    if not kernel.contains(start):
        raise ValueError(f"start state {start} outside domain")
    rng = np.random.default_rng(seed)
    offs = kernel.step_offsets()
    if offs is not None:
        steps = np.asarray(offs, dtype=np.int64)
        picks = steps[rng.integers(0, steps.size, size=length)]
        out = np.empty(length + 1, dtype=np.int64)
        out[0] = start
        np.cumsum(picks, out=out[1:])
        out[1:] += start
        return BackwardPath(out, start, seed, kernel.base.name)

    law = kernel.residue_step_offsets()
    if law is not None:
        period, laws = law
        steps = {r: np.asarray(o, dtype=np.int64) for r, o in laws.items()}
        out = np.empty(length + 1, dtype=np.int64)
        out[0] = start
        pos = start
        # vectorised in blocks: draw a block of uniforms per residue law and
        # consume them state by state; cheaper than a full python loop on rows
        block = 4096
        t = 1
        draws = {r: iter(()) for r in steps}
        while t <= length:
            st = steps[pos % period]
            it = draws[pos % period]
            nxt = next(it, None)
            if nxt is None:
                fresh = rng.integers(0, st.size, size=block)
                it = iter(fresh.tolist())
                draws[pos % period] = it
                nxt = next(it)
            pos += int(st[nxt])
            out[t] = pos
            t += 1
        return BackwardPath(out, start, seed, kernel.base.name)

    rows: dict[int, tuple[list[int], list[float]]] = {}

    def row_of(j: int) -> tuple[list[int], list[float]]:
        r = rows.get(j)
        if r is None:
            entries = kernel.row(j)
            if not entries:
                raise ValueError(f"state {j} has no predecessors; backward walk is stuck")
            targets = [i for i, _ in entries]
            cum = np.cumsum([float(q) for _, q in entries]).tolist()
            r = rows[j] = (targets, cum)
        return r

    out = np.empty(length + 1, dtype=np.int64)
    out[0] = start
    s = start
    uniforms = rng.random(length)
    for t in range(length):
        targets, cum = row_of(s)
        s = targets[bisect_left(cum, uniforms[t] * cum[-1])]
        out[t + 1] = s
    return BackwardPath(out, start, seed, kernel.base.name)


def sample_paths(kernel: BackwardKernel, start: int, length: int,
                 n_paths: int, seed: int = 0) -> list[BackwardPath]:
    """Independent paths with seeds seed, seed+1, ..."""
    return [sample_backward(kernel, start, length, seed + k)
            for k in range(n_paths)]


@dataclass(frozen=True)
class PathStats:
    length: int
    visit_frequencies: dict[int, float]
    cylinder_frequencies: dict[tuple[int, ...], float]
    geo_mean_c: float                  # final running geometric mean of c
    last_visit: dict[int, int]         # state -> last index along the path

    def frequency(self, word: tuple[int, ...]) -> float:
        return self.cylinder_frequencies.get(tuple(word), 0.0)


def _word_counts(states: np.ndarray, depth: int) -> dict[tuple[int, ...], int]:
    """Count forward words of length 1..depth read backwards along the path."""
    n = states.size
    counts: dict[tuple[int, ...], int] = {}
    for m in range(1, depth + 1):
        if n < m:
            continue
        # word (w_0..w_{m-1}) occurs at position t if states[t-k] == w_k,
        # i.e. stack reversed shifted copies and count unique rows
        cols = [states[m - 1 - k: n - k] for k in range(m)]
        mat = np.stack(cols, axis=1)
        uniq, cnt = np.unique(mat, axis=0, return_counts=True)
        for row, c in zip(uniq, cnt):
            counts[tuple(int(v) for v in row)] = int(c)
    return counts


def path_statistics(path: BackwardPath, m, depth: int = 1) -> PathStats:
    """Visit and cylinder frequencies along one path.

    A length-m word's frequency is its count over the n-m+1 windows
    divided by that window count.  ``m`` is the transition rule set of the
    sampled chain, used for the column counts in the geometric mean.
    """
    states = path.states
    n = states.size
    vals, cnts = np.unique(states, return_counts=True)
    visits = {int(v): int(c) / n for v, c in zip(vals, cnts)}
    counts = _word_counts(states, depth)
    freqs = {w: c / (n - len(w) + 1) for w, c in counts.items()}
    logs = sum(math.log2(len(m.predecessors(int(v)))) * int(c)
               for v, c in zip(vals, cnts))
    rev_vals, rev_first = np.unique(states[::-1], return_index=True)
    last = {int(v): int(n - 1 - i) for v, i in zip(rev_vals, rev_first)}
    return PathStats(n - 1, visits, freqs, float(2.0 ** (logs / n)), last)


def geo_mean_series(path: BackwardPath, kernel: BackwardKernel) -> np.ndarray:
    """Running geometric mean of the column counts along the path.

    Entry t is (c(y_0) * ... * c(y_t)) ** (1/(t+1)); for a fair chain this
    converges to exp of the integral of log c.
    """
    states = path.states
    vals = np.unique(states)
    # base-2 logs keep the arithmetic exact when every count is a power of
    # two (cumulative sums of small integers are exact in floats)
    logc = {int(v): np.log2(len(kernel.base.predecessors(int(v)))) for v in vals}
    logs = np.vectorize(logc.__getitem__, otypes=[float])(states)
    return np.exp2(np.cumsum(logs) / np.arange(1, states.size + 1))


def _admissible_words(mu: FairMeasure, depth: int) -> list[tuple[int, ...]]:
    base = mu.base
    support = sorted(mu.pi.support())
    bound = max(abs(support[0]), abs(support[-1]))
    words: list[tuple[int, ...]] = []
    stack = [(s,) for s in support]
    supp = set(support)
    while stack:
        w = stack.pop()
        words.append(w)
        if len(w) < depth:
            for j in base.successors(w[-1], within=bound):
                if j in supp:
                    stack.append(w + (j,))
    return words


def equidistribution_test(paths: list[BackwardPath], mu: FairMeasure,
                          depth: int = 1) -> float:
    """Max discrepancy |empirical - mu| over admissible words up to depth.

    Frequencies are pooled over the given paths; words the paths never
    visit still contribute their measure, so a short or stuck sample
    shows up as a large discrepancy rather than a silent pass.
    """
    pooled: dict[tuple[int, ...], int] = {}
    windows = [0] * (depth + 1)
    for p in paths:
        for w, c in _word_counts(p.states, depth).items():
            pooled[w] = pooled.get(w, 0) + c
        for m in range(1, depth + 1):
            windows[m] += p.states.size - m + 1
    worst = 0.0
    for w in _admissible_words(mu, depth):
        emp = pooled.get(w, 0) / windows[len(w)]
        worst = max(worst, abs(emp - float(cylinder_measure(mu, w))))
    return worst


@dataclass(frozen=True)
class GeoMeanReport:
    means: np.ndarray
    target: float

    def final(self) -> float:
        return float(self.means[-1])


def geo_mean_convergence(path: BackwardPath, mu: FairMeasure) -> GeoMeanReport:
    """Running geometric means of c along the path plus their limit target.

    The target is exp of the integral of log c under the fair measure.
    """
    base = mu.base
    target = 0.0
    for s in mu.pi.support():
        target += float(mu.pi.entry(s)) * math.log(len(base.predecessors(s)))
    kernel = BackwardKernel(base)
    return GeoMeanReport(geo_mean_series(path, kernel), math.exp(target))


def equidistribution_report(paths: list[BackwardPath], mu: FairMeasure,
                            depth: int = 1) -> dict:
    """Report form of the discrepancy test for already-sampled paths.

    Returns the worst absolute discrepancy over admissible words up to
    the given depth, plus a small per-word table of the worst offenders.
    """
    pooled: dict[tuple[int, ...], int] = {}
    windows = [0] * (depth + 1)
    for p in paths:
        for w, c in _word_counts(p.states, depth).items():
            pooled[w] = pooled.get(w, 0) + c
        for m in range(1, depth + 1):
            windows[m] += p.states.size - m + 1
    worst = 0.0
    table = []
    for w in _admissible_words(mu, depth):
        emp = pooled.get(w, 0) / windows[len(w)]
        ref = float(cylinder_measure(mu, w))
        worst = max(worst, abs(emp - ref))
        table.append({"word": list(w), "empirical": emp, "measure": ref})
    table.sort(key=lambda e: (-abs(e["empirical"] - e["measure"]), e["word"]))
    return {
        "paths": len(paths), "length": int(paths[0].states.size - 1),
        "depth": depth, "max_discrepancy": worst, "words": len(table),
        "worst_words": table[:10],
    }
