"""From tallies to fringe fits, visibilities and CHSH with Poisson errors."""

import math
from dataclasses import dataclass, replace
from typing import Dict, Tuple

import numpy as np
from scipy import optimize

from .errors import DegenerateData, DegenerateMeasurement, FitError, InvalidArgument
from .montecarlo import estimate_accidentals, expected_rates, simulate_setting
from .quantum import CANONICAL_QUADRUPLE, MeasurementSetting, hwp_to_analyzer


@dataclass(frozen=True)
class FringeFit:
    """C(theta) = offset + amplitude * cos(4 theta - phase), theta = HWP angle."""

    offset: float
    amplitude: float
    phase_rad: float
    visibility: float
    residual_rms: float

    @property
    def exceeds_unity(self):
        return self.visibility > 1.0


@dataclass(frozen=True)
class ChshEstimate:
    s: float
    sigma_s: float
    correlations: Tuple[float, float, float, float]
    sigmas: Tuple[float, float, float, float]
    subtracted: bool


def fit_fringe(points):
    """Linear least squares on {1, cos 4theta, sin 4theta} for (hwp_deg, counts) points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 4:
        raise FitError("need at least 4 (angle, counts) points")
    theta = np.deg2rad(4.0 * pts[:, 0])
    y = pts[:, 1]
    design = np.column_stack([np.ones_like(theta), np.cos(theta), np.sin(theta)])
    normal = design.T @ design
    if np.linalg.matrix_rank(design) < 3 or np.linalg.cond(normal) > 1e12:
        raise FitError("fringe design is rank deficient; need 3 angles distinct mod 90 deg")
    c0, c1, c2 = np.linalg.solve(normal, design.T @ y)
    if not c0 > 0:
        raise DegenerateData(f"non-positive fringe offset {c0:.6g}")
    amplitude = math.hypot(c1, c2)
    resid = y - design @ np.array([c0, c1, c2])
    return FringeFit(
        offset=float(c0),
        amplitude=amplitude,
        phase_rad=math.atan2(c2, c1),
        visibility=amplitude / c0,
        residual_rms=float(np.sqrt(np.mean(resid**2))),
    )


def visibility_from_fit(fit):
    """B/A; check ``fit.exceeds_unity`` for values above 1."""
    if not fit.offset > 0:
        raise DegenerateData("fringe offset must be positive")
    return fit.amplitude / fit.offset


def subtract_accidentals(tally):
    return tally.coincidences - estimate_accidentals(tally)


def _net_and_variance(tally, subtract):
    c = tally.coincidences
    if not subtract:
        return float(c), float(c)
    n, ss, si = tally.n_gates, tally.singles_s, tally.singles_i
    acc_var = (si / n) ** 2 * ss + (ss / n) ** 2 * si
    return c - ss * si / n, c + acc_var


def _key(a, b):
    return (round(float(np.mod(a, 180.0)), 9), round(float(np.mod(b, 180.0)), 9))


def index_tallies(tallies) -> Dict[Tuple[float, float], "object"]:
    return {_key(t.setting.signal_deg, t.setting.idler_deg): t for t in tallies}


def chsh_settings(angles=CANONICAL_QUADRUPLE):
    """The 16 analyzer settings {a, a+90} x {b, b+90} for the quadruple."""
    a, a2, b, b2 = angles
    out = []
    for x in (a, a2):
        for y in (b, b2):
            out += [MeasurementSetting(x, y), MeasurementSetting(x + 90, y + 90),
                    MeasurementSetting(x + 90, y), MeasurementSetting(x, y + 90)]
    return out


def _correlation(lookup, x, y, subtract):
    quad = []
    for sx, sy in ((x, y), (x + 90, y + 90), (x + 90, y), (x, y + 90)):
        try:
            quad.append(_net_and_variance(lookup[_key(sx, sy)], subtract))
        except KeyError:
            raise InvalidArgument(f"missing tally for setting ({sx}, {sy})") from None
    counts = np.array([q[0] for q in quad])
    var = np.array([q[1] for q in quad])
    total = counts.sum()
    if total <= 0:
        raise DegenerateMeasurement(f"no net coincidences for E({x}, {y})")
    e = (counts[0] + counts[1] - counts[2] - counts[3]) / total
    signs = np.array([1.0, 1.0, -1.0, -1.0])
    sigma = math.sqrt(float(np.sum(((signs - e) / total) ** 2 * var)))
    return float(e), sigma


def chsh_from_tallies(tallies, subtract=False, angles=CANONICAL_QUADRUPLE):
    """S = |E(a,b) - E(a,b') + E(a',b) + E(a',b')| from the 16 tallies."""
    lookup = index_tallies(tallies)
    for t in lookup.values():
        if t.n_gates < 1:
            raise InvalidArgument("every tally needs at least one gate")
    a, a2, b, b2 = angles
    pairs = [(a, b), (a, b2), (a2, b), (a2, b2)]
    results = [_correlation(lookup, x, y, subtract) for x, y in pairs]
    es = tuple(r[0] for r in results)
    sig = tuple(r[1] for r in results)
    s = abs(es[0] - es[1] + es[2] + es[3])
    return ChshEstimate(s=s, sigma_s=math.sqrt(sum(x * x for x in sig)),
                        correlations=es, sigmas=sig, subtracted=subtract)


def fringe_tallies(rho, run, hwp_angles, idler_deg, signal_polarizer_deg=0.0, key=()):
    """Tallies for a HWP sweep in the signal arm against a fixed idler polarizer."""
    out = []
    for j, h in enumerate(hwp_angles):
        setting = MeasurementSetting(hwp_to_analyzer(h, signal_polarizer_deg), idler_deg)
        out.append(simulate_setting(rho, setting, run, key=(*key, j)))
    return out


def fit_tallies(hwp_angles, tallies, subtract=False):
    counts = [subtract_accidentals(t) if subtract else t.coincidences for t in tallies]
    return fit_fringe(list(zip(hwp_angles, counts)))


def expected_fringe_counts(rho, run, hwp_angles, idler_deg, signal_polarizer_deg=0.0, subtract=False):
    """Mean coincidence counts over run.n_gates for a HWP sweep, no sampling noise."""
    out = []
    for h in hwp_angles:
        setting = MeasurementSetting(hwp_to_analyzer(h, signal_polarizer_deg), idler_deg)
        pc, ps, pi = expected_rates(rho, setting, run)
        out.append(run.n_gates * (pc - ps * pi if subtract else pc))
    return out


def calibrate_raman(rho, run, target_visibility, hwp_angles, idler_deg=22.5,
                    bracket=(0.0, 2.0), xtol=1e-4, subtract=False, expected=False):
    """Bisect the (common) Raman level until the fitted fringe visibility hits the target.

    With ``expected=False`` every evaluation is a simulated fringe on the
    same random streams, which keeps it monotone in the Raman level but
    leaves the root carrying that realization's noise. ``expected=True``
    fits the mean counts instead.
    """
    def excess(raman):
        trial = replace(run, raman_s=raman, raman_i=raman)
        if expected:
            counts = expected_fringe_counts(rho, trial, hwp_angles, idler_deg, subtract=subtract)
            fit = fit_fringe(list(zip(hwp_angles, counts)))
        else:
            fit = fit_tallies(hwp_angles, fringe_tallies(rho, trial, hwp_angles, idler_deg), subtract)
        return fit.visibility - target_visibility

    lo, hi = bracket
    if excess(lo) < 0 or excess(hi) > 0:
        raise InvalidArgument("target visibility not bracketed by the Raman range")
    return optimize.bisect(excess, lo, hi, xtol=xtol)
