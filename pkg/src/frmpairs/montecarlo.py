"""Gate-by-gate Monte Carlo of pair generation, noise and gated detection.

One detector gate per pump pulse. In each gate:

* k ~ Poisson(mu) pairs, each with an independent joint analyzer outcome
  drawn from the state (multi-pair events are classical copies);
* every photon that passes its analyzer is detected with probability eta;
* Raman photons per channel ~ Poisson(raman), unpolarized, so each passes
  with probability 1/2 before detection;
* dark and residual-pump clicks with fixed per-gate probabilities.

Detectors are binary. Gates are processed in fixed chunks of ``CHUNK``;
chunk ``c`` of the work keyed ``key`` draws from ``substream(seed, *key, c)``,
so totals do not depend on how chunks are spread over workers.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

from . import quantum
from .errors import InvalidArgument, OutOfModel
from .quantum import MeasurementSetting
from .rng import substream

CHUNK = 1 << 20


@dataclass(frozen=True)
class PumpConfig:
    avg_power_dbm: float = -5.5
    pulse_width_ns: float = 1.0
    rep_rate_hz: float = 1e6
    wavelength_nm: float = 1551.1
    signal_nm: float = 1549.3
    idler_nm: float = 1552.9

    def __post_init__(self):
        if not math.isfinite(self.avg_power_dbm):
            raise InvalidArgument("avg_power_dbm: must be finite")
        for name in ("pulse_width_ns", "rep_rate_hz", "wavelength_nm", "signal_nm", "idler_nm"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidArgument(f"{name}: must be positive")
        if not self.signal_nm < self.wavelength_nm < self.idler_nm:
            raise InvalidArgument("wavelength_nm: require signal_nm < wavelength_nm < idler_nm")


_PROBABILITIES = ("eta_s", "eta_i", "dark_s", "dark_i", "pump_leak_s", "pump_leak_i")


@dataclass(frozen=True)
class RunConfig:
    """Counting-run parameters.

    ``mu_pair=None`` means "derive from the pump and fiber" (see
    ``resolve_mu``); the Monte Carlo itself needs a number.
    """

    n_gates: int = 20_000_000
    mu_pair: Optional[float] = None
    collection_kappa: float = 1e-3
    raman_s: float = 0.0
    raman_i: float = 0.0
    eta_s: float = 0.01
    eta_i: float = 0.01
    dark_s: float = 0.0
    dark_i: float = 0.0
    pump_leak_s: float = 0.0
    pump_leak_i: float = 0.0
    gate_rate_hz: float = 1e6
    gate_width_ns: float = 2.5
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.n_gates < 1:
            raise InvalidArgument("n_gates: must be at least 1")
        if self.mu_pair is not None and not (math.isfinite(self.mu_pair) and self.mu_pair >= 0):
            raise InvalidArgument("mu_pair: must be non-negative")
        for name in ("collection_kappa", "raman_s", "raman_i"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise InvalidArgument(f"{name}: must be non-negative")
        for name in _PROBABILITIES:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidArgument(f"{name}: probability out of range")
        for name in ("gate_rate_hz", "gate_width_ns"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"{name}: must be positive")
        if self.workers < 1:
            raise InvalidArgument("workers: must be at least 1")

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class SettingTally:
    setting: MeasurementSetting
    coincidences: int
    singles_s: int
    singles_i: int
    n_gates: int

    def __post_init__(self):
        if not (0 <= self.coincidences <= min(self.singles_s, self.singles_i)
                and max(self.singles_s, self.singles_i) <= self.n_gates):
            raise InvalidArgument(f"inconsistent tally {self}")


def peak_power_w(pump):
    """Peak power of rectangular pump pulses."""
    duty = pump.pulse_width_ns * 1e-9 * pump.rep_rate_hz
    if duty <= 0:
        raise InvalidArgument("duty cycle must be positive")
    return 10.0 ** (pump.avg_power_dbm / 10.0) * 1e-3 / duty


def pair_probability(gamma, peak_power, length_km, collection_kappa):
    """Mean pairs per pulse, (gamma P L)^2 * kappa, in the low-gain regime."""
    if min(gamma, peak_power, length_km, collection_kappa) < 0:
        raise InvalidArgument("pair_probability arguments must be non-negative")
    mu = (gamma * peak_power * length_km) ** 2 * collection_kappa
    if mu >= 1.0:
        raise OutOfModel(f"mean pair number {mu:.4g} >= 1; multi-pair approximation invalid")
    return mu


def resolve_mu(run, pump, scheme):
    """Return ``run`` with ``mu_pair`` filled in from the source parameters."""
    if run.mu_pair is not None:
        return run
    mu = pair_probability(scheme.gamma_per_w_km, peak_power_w(pump),
                          scheme.fiber_length_km, run.collection_kappa)
    return replace(run, mu_pair=mu)


def outcome_probabilities(rho, setting):
    """(pass,pass), (pass,block), (block,pass), (block,block)."""
    a, b = setting.signal_deg, setting.idler_deg
    p = quantum._joint_probs(rho, np.array([a, a, a + 90.0, a + 90.0]),
                             np.array([b, b + 90.0, b, b + 90.0]))
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def noise_click_probability(raman, eta, dark, leak):
    # detected Raman photons are a thinned Poisson with mean raman * eta / 2
    return 1.0 - math.exp(-0.5 * raman * eta) * (1.0 - dark) * (1.0 - leak)


def _mu(run):
    if run.mu_pair is None:
        raise InvalidArgument("mu_pair: unresolved, call resolve_mu first")
    return run.mu_pair


def expected_rates(rho, setting, run):
    """Exact per-gate probabilities (coincidence, signal click, idler click).

    Splits the pair Poisson process into independent classes by which
    photons end up detected.
    """
    rho = quantum.check_state(rho)
    mu = _mu(run)
    pp, pb, bp, _ = outcome_probabilities(rho, setting)
    lam_c = mu * pp * run.eta_s * run.eta_i
    lam_s = mu * (pp * run.eta_s * (1 - run.eta_i) + pb * run.eta_s)
    lam_i = mu * (pp * (1 - run.eta_s) * run.eta_i + bp * run.eta_i)
    n_s = noise_click_probability(run.raman_s, run.eta_s, run.dark_s, run.pump_leak_s)
    n_i = noise_click_probability(run.raman_i, run.eta_i, run.dark_i, run.pump_leak_i)
    qc = -math.expm1(-lam_c)
    qs = 1.0 - math.exp(-lam_s) * (1.0 - n_s)
    qi = 1.0 - math.exp(-lam_i) * (1.0 - n_i)
    return qc + (1 - qc) * qs * qi, qc + (1 - qc) * qs, qc + (1 - qc) * qi


@dataclass
class _ChunkResult:
    coincidences: int
    singles_s: int
    singles_i: int
    delayed: int
    first_i: bool
    last_s: bool


def _simulate_chunk(rng, n, mu, p4, run, noise_s, noise_i):
    # noise draws come first so that pair draws do not shift with noise levels
    click_s = rng.random(n) < noise_s
    click_i = rng.random(n) < noise_i
    k = rng.poisson(mu, n)
    busy = np.flatnonzero(k)
    if busy.size:
        gate = np.repeat(busy, k[busy])
        outcome = np.searchsorted(np.cumsum(p4)[:-1], rng.random(gate.size), side="right")
        det_s = (outcome <= 1) & (rng.random(gate.size) < run.eta_s)
        det_i = ((outcome == 0) | (outcome == 2)) & (rng.random(gate.size) < run.eta_i)
        click_s[gate[det_s]] = True
        click_i[gate[det_i]] = True
    return _ChunkResult(
        coincidences=int(np.count_nonzero(click_s & click_i)),
        singles_s=int(np.count_nonzero(click_s)),
        singles_i=int(np.count_nonzero(click_i)),
        delayed=int(np.count_nonzero(click_s[:-1] & click_i[1:])),
        first_i=bool(click_i[0]),
        last_s=bool(click_s[-1]),
    )


def run_gates(rho, setting, run, key=()):
    """Simulate ``run.n_gates`` gates; return (tally, delayed-gate coincidences).

    The delayed count pairs the signal click of gate g with the idler
    click of gate g + 1 in the same run.
    """
    rho = quantum.check_state(rho)
    mu = _mu(run)
    p4 = outcome_probabilities(rho, setting)
    noise_s = noise_click_probability(run.raman_s, run.eta_s, run.dark_s, run.pump_leak_s)
    noise_i = noise_click_probability(run.raman_i, run.eta_i, run.dark_i, run.pump_leak_i)
    n_chunks = -(-run.n_gates // CHUNK)

    def chunk(c):
        n = min(CHUNK, run.n_gates - c * CHUNK)
        return _simulate_chunk(substream(run.seed, *key, c), n, mu, p4, run, noise_s, noise_i)

    if run.workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=run.workers) as pool:
            parts = list(pool.map(chunk, range(n_chunks)))
    else:
        parts = [chunk(c) for c in range(n_chunks)]

    delayed = sum(p.delayed for p in parts)
    delayed += sum(a.last_s and b.first_i for a, b in zip(parts, parts[1:]))
    tally = SettingTally(
        setting=setting,
        coincidences=sum(p.coincidences for p in parts),
        singles_s=sum(p.singles_s for p in parts),
        singles_i=sum(p.singles_i for p in parts),
        n_gates=run.n_gates,
    )
    return tally, delayed


def simulate_setting(rho, setting, run, key=()):
    return run_gates(rho, setting, run, key)[0]


def delayed_gate_accidentals(rho, setting, run, key=()):
    return run_gates(rho, setting, run, key)[1]


def estimate_accidentals(tally):
    """Expected uncorrelated coincidences from the singles."""
    if tally.n_gates < 1:
        raise InvalidArgument("n_gates must be at least 1")
    return tally.singles_s * tally.singles_i / tally.n_gates
