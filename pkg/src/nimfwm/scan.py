"""Parameter sweeps and resonance location.

Sweeps evaluate the probe response (and optionally the slab
transmittance) on a grid over the normalized signal detuning y4 =
delta4/Gamma_lm, the optical thickness alpha40L, or a control Rabi
frequency.  Grid points are independent pure-function evaluations, so
an optional thread pool only changes wall time, never values or order.
Points where the quantum model is singular are carried through as
tagged gaps instead of aborting the sweep; resonances live next to
singular points by construction.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .qresponse import DriveConfig, FourLevelParams, SingularModel, probe_response
from .slab import SlabProblem, assemble_slab_problem, solve_closed_form

__all__ = [
    "AXES",
    "NotFound",
    "SweepSpec",
    "SweepResult",
    "Peak",
    "sweep_response",
    "sweep_slab",
    "find_peaks",
    "find_zero_crossings",
    "find_oscillation_threshold",
    "RESPONSE_COLUMNS",
]

AXES = ("y4", "alpha40L", "G1", "G3")

RESPONSE_COLUMNS = (
    "alpha4_ratio",
    "alpha2_ratio",
    "dn4",
    "dn2",
    "re_g4",
    "im_g4",
    "re_g2",
    "im_g2",
    "dk_over_alpha40",
)


class NotFound(LookupError):
    """No grid point in range trips the requested condition."""


@dataclass(frozen=True)
class Peak:
    location: float
    height: float
    width: float


@dataclass(frozen=True)
class SweepSpec:
    """One- or two-dimensional grid over a model axis.

    ``fixed`` context: the drive carries the off-axis detunings and
    Rabi frequencies (delta4 is overridden on a y4 axis) and the slab
    settings apply when the sweep reaches the slab stage.
    """

    axis: str
    lo: float
    hi: float
    count: int
    params: FourLevelParams
    drive: DriveConfig
    alpha40L: float = 37.02
    host_transmission: float = 0.10
    coupling_calibration: float = 1.0
    secondary_axis: str | None = None
    secondary_lo: float = 0.0
    secondary_hi: float = 0.0
    secondary_count: int = 0

    def __post_init__(self) -> None:
        if self.axis not in AXES:
            raise ValueError(f"unknown axis {self.axis!r}, expected one of {AXES}")
        if not self.lo < self.hi:
            raise ValueError("sweep range must satisfy lo < hi")
        if self.count < 2:
            raise ValueError("sweep needs at least two samples")
        if self.secondary_axis is not None:
            if self.secondary_axis not in AXES:
                raise ValueError(f"unknown secondary axis {self.secondary_axis!r}")
            if self.secondary_axis == self.axis:
                raise ValueError("2D sweep axes must be distinct")
            if not self.secondary_lo < self.secondary_hi:
                raise ValueError("secondary range must satisfy lo < hi")
            if self.secondary_count < 2:
                raise ValueError("secondary axis needs at least two samples")

    def grid(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)

    def secondary_grid(self) -> np.ndarray:
        return np.linspace(self.secondary_lo, self.secondary_hi, self.secondary_count)


@dataclass
class SweepResult:
    axis: str
    values: np.ndarray
    columns: dict[str, np.ndarray]
    valid: np.ndarray
    peaks: list[Peak] = field(default_factory=list)
    zeros: list[float] = field(default_factory=list)
    thresholds: list[float] = field(default_factory=list)
    secondary_axis: str | None = None
    secondary_values: np.ndarray | None = None


def _apply_axis(
    axis: str,
    value: float,
    params: FourLevelParams,
    drive: DriveConfig,
    alpha40L: float,
) -> tuple[DriveConfig, float]:
    if axis == "y4":
        return replace(drive, delta4=value * params.Gamma_lm), alpha40L
    if axis == "G1":
        return replace(drive, g1=value), alpha40L
    if axis == "G3":
        return replace(drive, g3=value), alpha40L
    if axis == "alpha40L":
        return drive, value
    raise ValueError(f"unknown axis {axis!r}")


def _map_points(evaluate: Callable, values, workers: int) -> list:
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(evaluate, values))
    return [evaluate(v) for v in values]


def sweep_response(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Probe response and phase mismatch over a 1D drive-space grid.

    Records the normalized constants per point; locates the zero
    crossings of the mismatch (re-evaluating the model during
    refinement) and the peaks of the coupling magnitude |g4|.
    """
    if spec.axis == "alpha40L":
        raise ValueError("response sweeps vary the drive, not the slab thickness")
    if spec.secondary_axis is not None:
        raise ValueError("response sweeps are one-dimensional")

    values = spec.grid()

    def evaluate(value: float):
        drive, _ = _apply_axis(spec.axis, value, spec.params, spec.drive, spec.alpha40L)
        try:
            return probe_response(spec.params, drive)
        except SingularModel:
            return None

    responses = _map_points(evaluate, values, workers)
    valid = np.array([r is not None for r in responses], dtype=bool)
    n = len(values)
    cols = {name: np.full(n, np.nan) for name in RESPONSE_COLUMNS}
    for i, resp in enumerate(responses):
        if resp is None:
            continue
        cols["alpha4_ratio"][i] = resp.alpha4_ratio
        cols["alpha2_ratio"][i] = resp.alpha2_ratio
        cols["dn4"][i] = resp.dn4_norm
        cols["dn2"][i] = resp.dn2_norm
        cols["re_g4"][i] = resp.g4_norm.real
        cols["im_g4"][i] = resp.g4_norm.imag
        cols["re_g2"][i] = resp.g2_norm.real
        cols["im_g2"][i] = resp.g2_norm.imag
        cols["dk_over_alpha40"][i] = resp.dk_over_alpha40

    def dk_at(value: float) -> float:
        drive, _ = _apply_axis(spec.axis, value, spec.params, spec.drive, spec.alpha40L)
        return probe_response(spec.params, drive).dk_over_alpha40

    zeros = find_zero_crossings(values, cols["dk_over_alpha40"], fn=dk_at)
    abs_g4 = np.hypot(cols["re_g4"], cols["im_g4"])
    peaks = find_peaks(values, abs_g4)
    return SweepResult(
        axis=spec.axis,
        values=values,
        columns=cols,
        valid=valid,
        peaks=peaks,
        zeros=zeros,
    )


def _slab_point(
    spec: SweepSpec,
    resp,
    alpha40L: float,
) -> tuple[float, bool]:
    problem = assemble_slab_problem(
        resp,
        alpha40L,
        spec.params,
        host_transmission=spec.host_transmission,
        coupling_calibration=spec.coupling_calibration,
    )
    sol = solve_closed_form(problem, samples=2)
    return sol.eta4, sol.oscillation_flag


def sweep_slab(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Transmittance over a 1D or 2D grid.

    Probe responses are computed once per distinct drive setting (an
    alpha40L axis reuses a single response), then each grid point is a
    closed-form slab solve.  Flagged oscillation points report eta4 =
    +inf; singular drive points are tagged invalid and skipped.
    """
    values = spec.grid()
    axes = [(spec.axis, values)]
    if spec.secondary_axis is not None:
        axes.append((spec.secondary_axis, spec.secondary_grid()))

    drive_axes = [(name, vals) for name, vals in axes if name != "alpha40L"]
    length_axes = [(name, vals) for name, vals in axes if name == "alpha40L"]

    def response_for(drive_values: tuple[float, ...]):
        drive = spec.drive
        for (name, _), value in zip(drive_axes, drive_values):
            drive, _ignored = _apply_axis(name, value, spec.params, drive, spec.alpha40L)
        try:
            return probe_response(spec.params, drive)
        except SingularModel:
            return None

    if not drive_axes:
        drive_grid = [tuple()]
    elif len(drive_axes) == 1:
        drive_grid = [(v,) for v in drive_axes[0][1]]
    else:
        drive_grid = [(v1, v2) for v1 in drive_axes[0][1] for v2 in drive_axes[1][1]]
    responses = _map_points(response_for, drive_grid, workers)
    cache = dict(zip(drive_grid, responses))

    shape = tuple(len(vals) for _, vals in axes)
    eta = np.full(shape, np.nan)
    flags = np.zeros(shape, dtype=bool)
    valid = np.zeros(shape, dtype=bool)

    def point_for(index: tuple[int, ...]) -> None:
        coords = {name: vals[i] for (name, vals), i in zip(axes, index)}
        key = tuple(coords[name] for name, _ in drive_axes)
        resp = cache[key]
        if resp is None:
            return
        alpha40L = coords.get("alpha40L", spec.alpha40L)
        eta[index], flags[index] = _slab_point(spec, resp, alpha40L)
        valid[index] = True

    for index in np.ndindex(*shape):
        point_for(index)

    columns = {"eta4": eta, "oscillation_flag": flags.astype(float)}
    result = SweepResult(
        axis=spec.axis,
        values=values,
        columns=columns,
        valid=valid,
        secondary_axis=spec.secondary_axis,
        secondary_values=spec.secondary_grid() if spec.secondary_axis else None,
    )
    if spec.secondary_axis is None:
        finite = np.where(np.isfinite(eta), eta, np.nan)
        result.peaks = find_peaks(values, finite)
        flat_flags = flags.astype(bool)
        onsets = np.flatnonzero(flat_flags & ~np.roll(flat_flags, 1))
        if flat_flags.size and flat_flags[0]:
            onsets = np.union1d(onsets, [0])
        result.thresholds = [float(values[i]) for i in onsets]
    return result


def find_peaks(xs: np.ndarray, ys: np.ndarray) -> list[Peak]:
    """Local maxima by 3-point test, refined by quadratic interpolation.

    Width is estimated from the half-maximum crossings on each side
    (NaN when a side never crosses).  Peaks closer than one grid step
    merge into the higher one.  Invalid (NaN) samples split the track.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 3:
        raise ValueError("peak finding needs at least three samples")

    peaks: list[Peak] = []
    ok = np.isfinite(ys)
    for i in range(1, xs.size - 1):
        if not (ok[i - 1] and ok[i] and ok[i + 1]):
            continue
        if not (ys[i] > ys[i - 1] and ys[i] > ys[i + 1]):
            continue
        denom = ys[i - 1] - 2.0 * ys[i] + ys[i + 1]
        shift = 0.0 if denom == 0.0 else 0.5 * (ys[i - 1] - ys[i + 1]) / denom
        shift = float(np.clip(shift, -0.5, 0.5))
        step = 0.5 * (xs[i + 1] - xs[i - 1])
        location = xs[i] + shift * step
        height = ys[i] - 0.25 * (ys[i - 1] - ys[i + 1]) * shift
        peaks.append(Peak(float(location), float(height), _half_width(xs, ys, ok, i, height)))

    merged: list[Peak] = []
    for peak in peaks:
        if merged:
            step = (xs[-1] - xs[0]) / (xs.size - 1)
            if peak.location - merged[-1].location < step:
                if peak.height > merged[-1].height:
                    merged[-1] = peak
                continue
        merged.append(peak)
    return merged


def _half_width(xs, ys, ok, i, height) -> float:
    half = 0.5 * height
    left = np.nan
    for j in range(i - 1, -1, -1):
        if not ok[j]:
            break
        if ys[j] <= half:
            frac = (half - ys[j]) / (ys[j + 1] - ys[j])
            left = xs[j] + frac * (xs[j + 1] - xs[j])
            break
    right = np.nan
    for j in range(i + 1, xs.size):
        if not ok[j]:
            break
        if ys[j] <= half:
            frac = (half - ys[j - 1]) / (ys[j] - ys[j - 1])
            right = xs[j - 1] + frac * (xs[j] - xs[j - 1])
            break
    return float(right - left)


def find_zero_crossings(
    xs: np.ndarray,
    ys: np.ndarray,
    fn: Callable[[float], float] | None = None,
    rtol: float = 1e-10,
) -> list[float]:
    """Ordered zeros of a sampled track.

    Sign-change brackets are refined by bisection on ``fn`` (the
    underlying continuous function, re-evaluated rather than
    interpolated) to relative tolerance ``rtol``; without ``fn`` the
    crossing is linearly interpolated.  Exact zeros at samples are
    recorded once.  NaN samples break brackets.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2:
        raise ValueError("zero finding needs at least two samples")

    zeros: list[float] = []
    for i in range(xs.size - 1):
        y0, y1 = ys[i], ys[i + 1]
        if not (np.isfinite(y0) and np.isfinite(y1)):
            continue
        if y0 == 0.0:
            if not zeros or zeros[-1] != xs[i]:
                zeros.append(float(xs[i]))
            continue
        if y0 * y1 < 0.0:
            if fn is None:
                zeros.append(float(xs[i] - y0 * (xs[i + 1] - xs[i]) / (y1 - y0)))
            else:
                zeros.append(_bisect(fn, xs[i], xs[i + 1], y0, rtol))
    if ys[-1] == 0.0 and np.isfinite(ys[-1]):
        zeros.append(float(xs[-1]))
    return zeros


def _bisect(fn, lo, hi, f_lo, rtol) -> float:
    for _ in range(200):
        if hi - lo <= rtol * max(abs(lo), abs(hi), 1e-300):
            break
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        if f_mid == 0.0:
            return float(mid)
        if (f_mid > 0.0) == (f_lo > 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


def find_oscillation_threshold(
    spec: SweepSpec | Callable[[float], SlabProblem],
    lo: float | None = None,
    hi: float | None = None,
    count: int = 257,
) -> float:
    """Location of the first boundary-determinant collapse on a 1D sweep.

    Accepts either a 1D :class:`SweepSpec` or a callable mapping an
    axis value to a :class:`SlabProblem` (then ``lo``/``hi`` give the
    range).  The first flagged grid point is refined by minimizing the
    determinant magnitude over its bracketing interval.

    Raises :class:`NotFound` when no grid point trips the flag.
    """
    if callable(spec) and not isinstance(spec, SweepSpec):
        if lo is None or hi is None:
            raise ValueError("callable sweeps need explicit lo and hi")
        factory = spec
        values = np.linspace(lo, hi, count)
    else:
        if spec.secondary_axis is not None:
            raise ValueError("threshold search needs a one-dimensional sweep")
        values = spec.grid()

        def factory(value: float) -> SlabProblem:
            drive, alpha40L = _apply_axis(
                spec.axis, value, spec.params, spec.drive, spec.alpha40L
            )
            resp = probe_response(spec.params, drive)
            return assemble_slab_problem(
                resp,
                alpha40L,
                spec.params,
                host_transmission=spec.host_transmission,
                coupling_calibration=spec.coupling_calibration,
            )

    def det_ratio(value: float) -> float:
        sol = solve_closed_form(factory(value), samples=2)
        return abs(sol.bc_determinant) / sol.bc_scale

    flagged = None
    for i, value in enumerate(values):
        sol = solve_closed_form(factory(value), samples=2)
        if sol.oscillation_flag:
            flagged = i
            break
    if flagged is None:
        raise NotFound("no oscillation flag in the swept range")

    left = values[max(flagged - 1, 0)]
    right = values[min(flagged + 1, len(values) - 1)]
    if left == right:
        return float(values[flagged])
    res = minimize_scalar(
        det_ratio,
        bounds=(float(left), float(right)),
        method="bounded",
        options={"xatol": 1e-12 * (values[-1] - values[0])},
    )
    return float(res.x)
