"""Coincidence-window pairing and the statistics built on it.

Pairing is closest-first greedy: every left/right candidate with
``|t_L - t_R| <= tau`` is ranked by ``|dt|`` (ties: earlier left event,
then earlier right event) and accepted if neither event is taken yet.
The matcher only ever sees timestamps. Pulse ids are attached afterwards
to label pairs legitimate (same pulse pair) or illegitimate.

Because candidates are processed in order of ``|dt|``, the pairing for a
window ``tau1 <= tau2`` is exactly the subset of the ``tau2`` pairing with
``|dt| <= tau1``. Sweeps exploit this and pair each run once.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numba
import numpy as np

from .analytic import ChshSetting
from .simcore import DetectionEvent, EventStream, SourceConfig, derive_seed, run_experiment


@dataclass(frozen=True)
class WindowConfig:
    tau: float

    def __post_init__(self):
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise ValueError(f"coincidence window tau must be positive, got {self.tau!r}")


@dataclass(frozen=True)
class CoincidencePair:
    left_event: DetectionEvent
    right_event: DetectionEvent
    dt: float
    legitimate: bool


@numba.njit(cache=True)
def _greedy_accept(li, ri, n_left, n_right):
    used_l = np.zeros(n_left, dtype=np.bool_)
    used_r = np.zeros(n_right, dtype=np.bool_)
    accept = np.zeros(li.size, dtype=np.bool_)
    for k in range(li.size):
        a = li[k]
        b = ri[k]
        if used_l[a] or used_r[b]:
            continue
        used_l[a] = True
        used_r[b] = True
        accept[k] = True
    return accept


def _check_sorted(t: np.ndarray, side: str) -> None:
    if t.size > 1 and np.any(np.diff(t) < 0):
        raise ValueError(f"{side} event times must be sorted ascending")


def match_times(t_left, t_right, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Closest-first matching of two sorted time arrays.

    Returns index arrays ``(i_left, i_right)`` ordered by left time.
    """
    tl = np.asarray(t_left, dtype=float)
    tr = np.asarray(t_right, dtype=float)
    _check_sorted(tl, "left")
    _check_sorted(tr, "right")
    WindowConfig(tau)
    empty = np.zeros(0, dtype=np.int64)
    if tl.size == 0 or tr.size == 0:
        return empty, empty

    # widen the search by a few ulps, then filter exactly on |dt| <= tau
    slack = 4 * np.spacing(np.maximum(np.abs(tl), tau))
    lo = np.searchsorted(tr, tl - tau - slack, "left")
    hi = np.searchsorted(tr, tl + tau + slack, "right")
    cnt = hi - lo
    total = int(cnt.sum())
    li = np.repeat(np.arange(tl.size, dtype=np.int64), cnt)
    starts = np.repeat(np.cumsum(cnt) - cnt, cnt)
    ri = np.repeat(lo, cnt) + (np.arange(total) - starts)
    d = np.abs(tl[li] - tr[ri])
    keep = d <= tau
    li, ri, d = li[keep], ri[keep], d[keep]
    if li.size == 0:
        return empty, empty

    # candidates are generated in (t_left, t_right) order, so a stable sort
    # on |dt| realises the tie-break toward earlier partners
    order = np.argsort(d, kind="stable")
    accepted = np.empty(li.size, dtype=bool)
    accepted[order] = _greedy_accept(li[order], ri[order], tl.size, tr.size)
    return li[accepted], ri[accepted]


@dataclass(frozen=True, eq=False)
class Pairs:
    """Column view of the coincidences found between two streams."""

    left: EventStream
    right: EventStream
    left_index: np.ndarray
    right_index: np.ndarray

    @property
    def dt(self) -> np.ndarray:
        return self.left.time[self.left_index] - self.right.time[self.right_index]

    @property
    def legitimate(self) -> np.ndarray:
        return self.left.pulse_id[self.left_index] == self.right.pulse_id[self.right_index]

    @property
    def left_channel(self) -> np.ndarray:
        return self.left.channel[self.left_index]

    @property
    def right_channel(self) -> np.ndarray:
        return self.right.channel[self.right_index]

    def __len__(self):
        return len(self.left_index)

    def __iter__(self) -> Iterator[CoincidencePair]:
        left = list(self.left)
        right = list(self.right)
        for i, j, dt, ok in zip(
            self.left_index.tolist(), self.right_index.tolist(),
            self.dt.tolist(), self.legitimate.tolist(),
        ):
            yield CoincidencePair(left[i], right[j], dt, ok)

    def within(self, tau: float) -> "Pairs":
        """Pairing for a narrower window; valid because matching is nested."""
        keep = np.abs(self.dt) <= tau
        return Pairs(self.left, self.right, self.left_index[keep], self.right_index[keep])

    @property
    def n_illegitimate(self) -> int:
        return int(np.count_nonzero(~self.legitimate))


def pair_events(left: EventStream, right: EventStream, window: WindowConfig) -> Pairs:
    li, ri = match_times(left.time, right.time, window.tau)
    return Pairs(left, right, li, ri)


@dataclass(frozen=True)
class WindowedStats:
    n_pp: int = 0
    n_pm: int = 0
    n_mp: int = 0
    n_mm: int = 0

    @property
    def n_total(self) -> int:
        return self.n_pp + self.n_pm + self.n_mp + self.n_mm

    @property
    def defined(self) -> bool:
        return self.n_total > 0

    @property
    def E(self) -> Optional[float]:
        """Correlation estimate, ``None`` when there are no pairs."""
        if not self.defined:
            return None
        return (self.n_pp + self.n_mm - self.n_pm - self.n_mp) / self.n_total

    @property
    def E_err(self) -> Optional[float]:
        """Binomial standard error sqrt((1 - E^2) / N)."""
        if not self.defined:
            return None
        return math.sqrt(max(0.0, 1.0 - self.E**2) / self.n_total)


def counts(pairs: Pairs) -> WindowedStats:
    lc, rc = pairs.left_channel, pairs.right_channel
    return WindowedStats(
        int(np.count_nonzero((lc > 0) & (rc > 0))),
        int(np.count_nonzero((lc > 0) & (rc < 0))),
        int(np.count_nonzero((lc < 0) & (rc > 0))),
        int(np.count_nonzero((lc < 0) & (rc < 0))),
    )


@dataclass(frozen=True)
class ChshEstimate:
    S: float
    S_err: float
    E: tuple[float, float, float, float]
    E_err: tuple[float, float, float, float]


def chsh_combine(e1, e2, e3, e4):
    return e1 - e2 + e3 + e4


def chsh_estimate(runs: Sequence[WindowedStats]) -> ChshEstimate:
    """Empirical CHSH from four runs at (x,z), (x,zz), (xx,z), (xx,zz).

    Not clamped: finite samples can exceed 2*sqrt(2).
    """
    if len(runs) != 4:
        raise ValueError(f"CHSH needs exactly four runs, got {len(runs)}")
    for k, st in enumerate(runs):
        if not st.defined:
            raise ValueError(f"CHSH run {k} has no coincidences")
    E = tuple(st.E for st in runs)
    err = tuple(st.E_err for st in runs)
    return ChshEstimate(chsh_combine(*E), math.sqrt(sum(e * e for e in err)), E, err)


def visibility(rates) -> float:
    """Fringe contrast (max - min) / (max + min) of ``(angle, count)`` samples."""
    values = np.array([c for _, c in rates], dtype=float)
    if values.size < 2:
        raise ValueError("visibility needs at least two samples")
    if np.any(values < 0):
        raise ValueError("coincidence counts must be non-negative")
    hi, lo = values.max(), values.min()
    if hi + lo == 0:
        raise ValueError("visibility undefined: all coincidence counts are zero")
    return float((hi - lo) / (hi + lo))


def _map(fn, items, workers: int):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order whatever the completion order
        return list(pool.map(fn, items))


def _source_with_seed(source: SourceConfig, seed: int) -> SourceConfig:
    return SourceConfig(
        source.rate, source.pulse_length, source.duration,
        source.efficiency, seed, source.single_variant,
    )


@dataclass(frozen=True)
class VisibilityPoint:
    w0: float
    visibility: float
    n_min: int
    n_max: int


def _fringe_point(args):
    source, zl, zr, taus = args
    left, right = run_experiment(source, zl, zr)
    full = pair_events(left, right, WindowConfig(max(taus)))
    return [_pp_count(full.within(t)) for t in taus]


def _pp_count(pairs: Pairs) -> int:
    return int(np.count_nonzero((pairs.left_channel > 0) & (pairs.right_channel > 0)))


def _check_taus(taus) -> list[float]:
    taus = [float(t) for t in taus]
    if not taus:
        raise ValueError("need at least one window width")
    for t in taus:
        WindowConfig(t)
    if any(b < a for a, b in zip(taus, taus[1:])):
        raise ValueError("window widths must be sorted ascending")
    return taus


def visibility_scan_multi(
    source: SourceConfig, absolute_angles, relative_sweep, taus, workers: int = 1
) -> dict[float, list[VisibilityPoint]]:
    """Visibility versus absolute analyzer angle, for several windows at once.

    Point ``(i, j)`` runs at ``zl = w0_i``, ``zr = w0_i + delta_j`` with its
    own seed derived from ``(source.seed, i, j)``. The fringe is the (+,+)
    coincidence count over the relative sweep.
    """
    taus = _check_taus(taus)
    w0s = [float(w) for w in absolute_angles]
    deltas = [float(d) for d in relative_sweep]
    if not w0s or len(deltas) < 2:
        raise ValueError("need >= 1 absolute angle and >= 2 relative angles")
    jobs = [
        (_source_with_seed(source, derive_seed(source.seed, i, j)), w0, w0 + d, taus)
        for i, w0 in enumerate(w0s)
        for j, d in enumerate(deltas)
    ]
    results = _map(_fringe_point, jobs, workers)
    out: dict[float, list[VisibilityPoint]] = {}
    for k, tau in enumerate(taus):
        curve = []
        for i, w0 in enumerate(w0s):
            fringe = [results[i * len(deltas) + j][k] for j in range(len(deltas))]
            V = visibility(list(zip(deltas, fringe)))
            curve.append(VisibilityPoint(w0, V, min(fringe), max(fringe)))
        out[tau] = curve
    return out


def visibility_scan(
    source: SourceConfig, absolute_angles, relative_sweep, window: WindowConfig, workers: int = 1
) -> list[VisibilityPoint]:
    return visibility_scan_multi(source, absolute_angles, relative_sweep, [window.tau], workers)[window.tau]


@dataclass(frozen=True)
class SweepPoint:
    tau: float
    S: Optional[float]  # None when some setting has no coincidences
    S_err: Optional[float]
    n_pairs: int
    n_illegitimate: int

    @property
    def frac_illegitimate(self) -> float:
        return self.n_illegitimate / self.n_pairs if self.n_pairs else 0.0


def _sweep_run(args):
    source, zl, zr, taus = args
    left, right = run_experiment(source, zl, zr)
    full = pair_events(left, right, WindowConfig(max(taus)))
    out = []
    for t in taus:
        p = full.within(t)
        out.append((counts(p), p.n_illegitimate))
    return out


def window_sweep(
    source: SourceConfig, settings: ChshSetting, taus, workers: int = 1
) -> list[SweepPoint]:
    """Empirical CHSH and illegitimate-pair statistics versus window width.

    The four settings are simulated independently with seeds derived from
    ``(source.seed, k)``; each run is paired once at the widest window.
    """
    taus = _check_taus(taus)
    jobs = [
        (_source_with_seed(source, derive_seed(source.seed, k)), zl, zr, taus)
        for k, (zl, zr) in enumerate(settings.pairs())
    ]
    runs = _map(_sweep_run, jobs, workers)
    points = []
    for k, tau in enumerate(taus):
        stats = [run[k][0] for run in runs]
        n_pairs = sum(st.n_total for st in stats)
        n_ill = sum(run[k][1] for run in runs)
        if all(st.defined for st in stats):
            est = chsh_estimate(stats)
            S, S_err = est.S, est.S_err
        else:
            S, S_err = None, None
        points.append(SweepPoint(tau, S, S_err, n_pairs, n_ill))
    return points
