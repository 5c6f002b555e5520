"""
Arc structure of the Fourier-transformed interference pattern.

In the strongly damped limit the transform W(tau_eps, tau_A) concentrates on
the stationary points of the phase tau_eps eps0 + tau_A A, i.e. on curves

    tau_A = G(t, tau_eps) = F(t + tau_eps/2) - F(t - tau_eps/2)
    with  g(t, tau_eps) = f(t + tau_eps/2) - f(t - tau_eps/2) = 0.

G is T-periodic in t, so roots are searched in one period.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.core.errors import ParameterError
from src.core.model import DrivingShape, shape_symmetry
from src.observability.logger import SolverLogger

logger = SolverLogger("arcs")

DEFAULT_SCAN_POINTS = 4096
BISECTION_STEPS = 48
TANGENCY_THRESHOLD = 1e-8
IDENTICAL_ZERO = 1e-12


@dataclass(frozen=True, eq=False)
class ArcCurve:
    """
    One continuous branch of (tau_eps, tau_A) samples.

    ``times`` holds the root t_i behind each sample when the branch comes
    from a root search; generic arcs carry order k and shift k'.
    """

    branch: int
    tau_eps: np.ndarray
    tau_amp: np.ndarray
    times: Optional[np.ndarray] = None
    order: int = 1
    shift: int = 0

    def __post_init__(self):
        if self.tau_eps.shape != self.tau_amp.shape:
            raise ParameterError("arc samples need matching tau_eps and tau_A arrays")
        if self.tau_eps.size > 1 and np.any(np.diff(self.tau_eps) <= 0):
            raise ParameterError("arc samples must be strictly increasing in tau_eps")

    def __len__(self) -> int:
        return int(self.tau_eps.size)


def drive_difference(shape: DrivingShape, t, tau_eps):
    """g(t, tau_eps) = f(t + tau_eps/2) - f(t - tau_eps/2)"""
    t = np.asarray(t, dtype=float)
    return shape(t + 0.5 * tau_eps) - shape(t - 0.5 * tau_eps)


def integral_difference(shape: DrivingShape, t, tau_eps):
    """G(t, tau_eps) = F(t + tau_eps/2) - F(t - tau_eps/2)"""
    t = np.asarray(t, dtype=float)
    return shape.integral(t + 0.5 * tau_eps) - shape.integral(t - 0.5 * tau_eps)


def _require_symmetric(shape: DrivingShape):
    if shape_symmetry(shape) != "symmetric":
        raise ParameterError(
            f"generic arcs need a time-reversal symmetric drive; use arc_full for {shape.name!r}"
        )


def arc_generic(shape: DrivingShape, tau_eps) -> Tuple[np.ndarray, np.ndarray]:
    """The two symmetry arcs 2F(tau_eps/2) and 2F(tau_eps/2 + T/2)"""
    _require_symmetric(shape)
    tau_eps = np.asarray(tau_eps, dtype=float)
    first = 2.0 * shape.integral(0.5 * tau_eps)
    second = 2.0 * shape.integral(0.5 * tau_eps + 0.5 * shape.period)
    return np.asarray(first), np.asarray(second)


def arc_higher_order(shape: DrivingShape, tau_eps, k: int, k_shift: int):
    """tau_A = 2k F(tau_eps/2k + k' T/2k) for k >= 1 and 0 <= k' <= 2k - 1"""
    if int(k) != k or k < 1:
        raise ParameterError(f"arc order k must be a positive integer, got {k}")
    if int(k_shift) != k_shift or not 0 <= k_shift <= 2 * k - 1:
        raise ParameterError(f"arc shift k' must lie in [0, {2 * k - 1}], got {k_shift}")
    _require_symmetric(shape)
    tau_eps = np.asarray(tau_eps, dtype=float)
    return 2 * k * shape.integral(tau_eps / (2 * k) + k_shift * shape.period / (2 * k))


def generic_curves(shape: DrivingShape, tau_eps: Sequence[float], max_order: int = 1) -> List[ArcCurve]:
    """Higher-order arcs up to ``max_order`` packed as ArcCurve objects"""
    tau_eps = np.asarray(tau_eps, dtype=float)
    curves = []
    for k in range(1, max_order + 1):
        for k_shift in range(2 * k):
            curves.append(ArcCurve(
                branch=len(curves),
                tau_eps=tau_eps.copy(),
                tau_amp=np.asarray(arc_higher_order(shape, tau_eps, k, k_shift), dtype=float),
                order=k,
                shift=k_shift,
            ))
    return curves


def _bisect(shape: DrivingShape, tau: float, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    g_lo = drive_difference(shape, lo, tau)
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        g_mid = drive_difference(shape, mid, tau)
        same = np.sign(g_mid) == np.sign(g_lo)
        lo = np.where(same, mid, lo)
        g_lo = np.where(same, g_mid, g_lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def find_roots(shape: DrivingShape, tau_eps: float, scan_points: int = DEFAULT_SCAN_POINTS) -> Optional[np.ndarray]:
    """
    All roots t in [0, T) of g(t, tau_eps), ascending.

    Returns None when g vanishes identically (tau_eps a multiple of T).
    Double roots without a sign change are reported once when the scan
    passes within TANGENCY_THRESHOLD of zero.
    """
    period = shape.period
    h = period / scan_points
    t = (np.arange(scan_points) + 0.5) * h
    g = drive_difference(shape, t, tau_eps)
    if np.max(np.abs(g)) < IDENTICAL_ZERO:
        return None

    s = np.sign(g)
    s_next = np.roll(s, -1)
    crossings = np.nonzero(s * s_next < 0)[0]
    refined = _bisect(shape, tau_eps, t[crossings], t[crossings] + h)

    exact = t[s == 0]

    a = np.abs(g)
    s_prev = np.roll(s, 1)
    tangent = (
        (a < TANGENCY_THRESHOLD)
        & (a <= np.roll(a, 1)) & (a <= np.roll(a, -1))
        & (s != 0) & (s_prev == s) & (s_next == s)
    )

    roots = np.mod(np.concatenate([refined, exact, t[tangent]]), period)
    roots[roots > period - 1e-12] = 0.0
    roots = np.sort(roots)
    if roots.size > 1:
        keep = np.concatenate([[True], np.diff(roots) > 1e-9])
        roots = roots[keep]
        if roots.size > 1 and period - roots[-1] + roots[0] <= 1e-9:
            roots = roots[:-1]
    return roots


def _circular_distance(a: np.ndarray, b: np.ndarray, period: float) -> np.ndarray:
    d = np.abs(np.subtract.outer(a, b)) % period
    return np.minimum(d, period - d)


def arc_full(
    shape: DrivingShape,
    tau_grid: Sequence[float],
    scan_points: int = DEFAULT_SCAN_POINTS,
    max_jump: Optional[float] = None,
) -> List[ArcCurve]:
    """
    Arc branches of an arbitrary drive by root search on each tau_eps.

    Roots at consecutive tau_eps values are linked greedily by smallest
    circular distance in t; a root with no partner within ``max_jump``
    (default T/16) opens a new branch, a branch with no partner closes.

    Usage:
        curves = arc_full(preset_shape("f3"), np.linspace(0, 2 * np.pi, 257))
    """
    tau_grid = np.asarray(tau_grid, dtype=float)
    period = shape.period
    if tau_grid.ndim != 1 or tau_grid.size < 2 or np.any(np.diff(tau_grid) <= 0):
        raise ParameterError("tau_eps grid must be strictly increasing with at least two points")
    if tau_grid[0] > 1e-9 or tau_grid[-1] < period - 1e-9:
        raise ParameterError(f"tau_eps grid must cover [0, T] = [0, {period:.6g}]")
    max_jump = period / 16 if max_jump is None else max_jump

    open_branches: Dict[int, Dict[str, list]] = {}
    finished: List[Dict[str, list]] = []
    next_id = 0

    for tau in tau_grid:
        roots = find_roots(shape, float(tau), scan_points)
        if roots is None:
            continue

        ids = list(open_branches)
        claimed_roots, claimed_ids = set(), set()
        if ids and roots.size:
            last = np.array([open_branches[i]["t"][-1] for i in ids])
            dist = _circular_distance(last, roots, period)
            for flat in np.argsort(dist, axis=None, kind="stable"):
                a, r = np.unravel_index(flat, dist.shape)
                if dist[a, r] > max_jump:
                    break
                if a in claimed_ids or r in claimed_roots:
                    continue
                claimed_ids.add(a)
                claimed_roots.add(r)
                branch = open_branches[ids[a]]
                branch["t"].append(float(roots[r]))
                branch["tau"].append(float(tau))

        for a, branch_id in enumerate(ids):
            if a not in claimed_ids:
                finished.append(open_branches.pop(branch_id))

        for r, root in enumerate(roots):
            if r not in claimed_roots:
                open_branches[next_id] = {"id": next_id, "t": [float(root)], "tau": [float(tau)]}
                next_id += 1

    finished.extend(open_branches.values())
    finished.sort(key=lambda b: b["id"])

    curves = []
    for branch in finished:
        times = np.array(branch["t"])
        tau = np.array(branch["tau"])
        curves.append(ArcCurve(
            branch=branch["id"],
            tau_eps=tau,
            tau_amp=np.asarray(integral_difference(shape, times, tau), dtype=float),
            times=times,
        ))

    logger.logger.debug("arcs_threaded", shape=shape.name, branches=len(curves))
    return curves


def overdamped_spectrum(
    shape: DrivingShape,
    tau_eps: float,
    tau_amp_grid: Sequence[float],
    samples: int = 1 << 16,
) -> np.ndarray:
    """
    Strong-damping transform (1/T) int_0^T dt delta(tau_A - G(t, tau_eps))
    binned on a uniform tau_A grid.

    Each grid value is the average density in the bin centred on it, so
    the profile integrates to 1 whenever the grid covers the range of G.
    """
    grid = np.asarray(tau_amp_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ParameterError("tau_A grid needs at least two points")
    step = (grid[-1] - grid[0]) / (grid.size - 1)
    edges = np.concatenate([grid - 0.5 * step, [grid[-1] + 0.5 * step]])

    t = (np.arange(samples) + 0.5) * shape.period / samples
    values = integral_difference(shape, t, tau_eps)
    counts, _ = np.histogram(values, bins=edges)
    return counts / (samples * step)


def arcs_frame(curves: Sequence[ArcCurve]) -> pd.DataFrame:
    """Long table of all branches: branch, tau_eps, tau_A (+ t, order, shift)"""
    frames = []
    for curve in curves:
        frames.append(pd.DataFrame({
            "branch": curve.branch,
            "tau_eps": curve.tau_eps,
            "tau_A": curve.tau_amp,
            "t": curve.times if curve.times is not None else math.nan,
            "order": curve.order,
            "shift": curve.shift,
        }))
    if not frames:
        return pd.DataFrame(columns=["branch", "tau_eps", "tau_A", "t", "order", "shift"])
    return pd.concat(frames, ignore_index=True)
