"""Batch front end: parse a scenario config, run it, write CSV.

Config files are plain ``[section]`` / ``key = value`` text with ``#``
comments. Sections: pump, scheme, run, noise, scenario. Keys outside any
section are accepted when the name is unique across sections.
"""

import argparse
import csv
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Tuple

from . import analysis, quantum, scheme
from .errors import ConfigError, FrmPairsError, InvalidArgument
from .montecarlo import PumpConfig, RunConfig, estimate_accidentals, resolve_mu, run_gates
from .quantum import CANONICAL_QUADRUPLE
from .scheme import SchemeConfig

SCENARIOS = ("ideal", "fringe", "chsh", "drift")
FRINGE_POLARIZERS = (-22.5, 22.5, 67.5, 112.5)
NOISE_FIELDS = ("raman_s", "raman_i", "dark_s", "dark_i", "pump_leak_s", "pump_leak_i")


@dataclass(frozen=True)
class Scenario:
    kind: str = "ideal"
    hwp_start_deg: float = 0.0
    hwp_stop_deg: float = 180.0
    hwp_step_deg: float = 7.5
    polarizer_angles_deg: Tuple[float, ...] = FRINGE_POLARIZERS
    signal_polarizer_deg: float = 0.0
    chsh_angles_deg: Tuple[float, ...] = CANONICAL_QUADRUPLE
    subtract_accidentals: bool = False
    drift_trials: int = 100

    def __post_init__(self):
        if self.kind not in SCENARIOS:
            raise InvalidArgument(f"kind: must be one of {', '.join(SCENARIOS)}")
        if not self.hwp_step_deg > 0 or self.hwp_stop_deg < self.hwp_start_deg:
            raise InvalidArgument("hwp_step_deg: need a positive step and stop >= start")
        if len(self.chsh_angles_deg) != 4:
            raise InvalidArgument("chsh_angles_deg: need exactly four angles")
        if not self.polarizer_angles_deg:
            raise InvalidArgument("polarizer_angles_deg: need at least one angle")
        if self.drift_trials < 1:
            raise InvalidArgument("drift_trials: must be at least 1")

    def hwp_grid(self):
        n = int(round((self.hwp_stop_deg - self.hwp_start_deg) / self.hwp_step_deg)) + 1
        return [self.hwp_start_deg + j * self.hwp_step_deg for j in range(n)]


@dataclass(frozen=True)
class Configs:
    pump: PumpConfig = PumpConfig()
    scheme: SchemeConfig = SchemeConfig()
    run: RunConfig = RunConfig()
    scenario: Scenario = Scenario()


_SECTIONS = {
    "pump": (PumpConfig, [f.name for f in fields(PumpConfig)]),
    "scheme": (SchemeConfig, [f.name for f in fields(SchemeConfig)]),
    "run": (RunConfig, [f.name for f in fields(RunConfig) if f.name not in NOISE_FIELDS]),
    "noise": (RunConfig, list(NOISE_FIELDS)),
    "scenario": (Scenario, [f.name for f in fields(Scenario)]),
}


def _defaults(cls):
    return {f.name: f.default for f in fields(cls)}


def _convert(default, text):
    text = text.strip()
    if isinstance(default, bool):
        if text.lower() in ("true", "yes", "1"):
            return True
        if text.lower() in ("false", "no", "0"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if isinstance(default, int):
        return int(float(text)) if float(text).is_integer() else int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        return tuple(float(x) for x in text.split(",") if x.strip())
    if isinstance(default, str):
        return text
    if default is None:  # mu_pair
        return None if text.lower() == "auto" else float(text)
    raise ValueError(f"unsupported value {text!r}")


def _owner(key):
    owners = [s for s, (_, keys) in _SECTIONS.items() if key in keys]
    return owners[0] if len(owners) == 1 else None


def parse_config(text):
    """Parse config text into a ``Configs``; defaults fill missing keys."""
    values = {name: {} for name in _SECTIONS}
    lines_of = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _SECTIONS:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        target = section or _owner(key)
        if target is None or key not in _SECTIONS[target][1]:
            where = f"{section}.{key}" if section else key
            raise ConfigError(f"{where}: unknown key (line {lineno})")
        if key in values[target]:
            raise ConfigError(f"{target}.{key}: duplicate key (line {lineno})")
        cls = _SECTIONS[target][0]
        try:
            values[target][key] = _convert(_defaults(cls)[key], value)
        except ValueError:
            raise ConfigError(f"{target}.{key}: cannot parse {value!r} (line {lineno})") from None
        lines_of[(target, key)] = lineno

    def build(cls, *sections):
        kwargs = {}
        for s in sections:
            kwargs.update(values[s])
        try:
            return cls(**kwargs)
        except InvalidArgument as exc:
            name, _, reason = str(exc).partition(": ")
            sec = next((s for s in sections if name in _SECTIONS[s][1]), sections[0])
            line = lines_of.get((sec, name))
            suffix = f" (line {line})" if line else ""
            raise ConfigError(f"{sec}.{name}: {reason or exc}{suffix}") from None

    return Configs(
        pump=build(PumpConfig, "pump"),
        scheme=build(SchemeConfig, "scheme"),
        run=build(RunConfig, "run", "noise"),
        scenario=build(Scenario, "scenario"),
    )


def _render_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if value is None:
        return "auto"
    return repr(value) if isinstance(value, float) else str(value)


def render_config(configs):
    """Inverse of ``parse_config``."""
    objects = {"pump": configs.pump, "scheme": configs.scheme, "run": configs.run,
               "noise": configs.run, "scenario": configs.scenario}
    out = []
    for section, (_, keys) in _SECTIONS.items():
        out.append(f"[{section}]")
        out += [f"{k} = {_render_value(getattr(objects[section], k))}" for k in keys]
        out.append("")
    return "\n".join(out)


def fmt(x):
    return f"{x:.6f}"


def _writer(handle):
    return csv.writer(handle, lineterminator="\n")


def run_ideal(cfg, out_dir):
    rho = scheme.build_output_state(cfg.scheme)
    s = quantum.chsh(rho, *cfg.scenario.chsh_angles_deg)
    vis = quantum.fringe_visibility(rho, cfg.scenario.signal_polarizer_deg)
    with open(out_dir / "ideal.txt", "w", newline="\n") as fh:
        fh.write(f"S = {fmt(s)}\n")
        fh.write(f"fringe_visibility = {fmt(vis)}\n")


def run_fringe(cfg, out_dir):
    rho = scheme.build_output_state(cfg.scheme)
    grid = cfg.scenario.hwp_grid()
    rows, fits = [], []
    for p, pol in enumerate(cfg.scenario.polarizer_angles_deg):
        tallies = analysis.fringe_tallies(rho, cfg.run, grid, pol,
                                          cfg.scenario.signal_polarizer_deg, key=(p,))
        for h, t in zip(grid, tallies):
            acc = estimate_accidentals(t)
            rows.append([fmt(h), fmt(pol), t.coincidences, fmt(acc), fmt(t.coincidences - acc)])
        fit = analysis.fit_tallies(grid, tallies, subtract=True)
        fits.append([fmt(pol), fmt(fit.offset), fmt(fit.amplitude), fmt(fit.phase_rad),
                     fmt(fit.visibility), fmt(fit.residual_rms)])
    with open(out_dir / "fringe.csv", "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["hwp_deg", "polarizer_deg", "coincidences", "accidental_estimate", "net_counts"])
        w.writerows(rows)
    with open(out_dir / "fringe_fits.csv", "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["polarizer_deg", "A", "B", "phi0_rad", "visibility", "residual"])
        w.writerows(fits)


def run_chsh(cfg, out_dir):
    rho = scheme.build_output_state(cfg.scheme)
    settings = analysis.chsh_settings(cfg.scenario.chsh_angles_deg)
    tallies = [run_gates(rho, s, cfg.run, key=(j,))[0] for j, s in enumerate(settings)]
    est = analysis.chsh_from_tallies(tallies, cfg.scenario.subtract_accidentals,
                                     cfg.scenario.chsh_angles_deg)
    with open(out_dir / "chsh.csv", "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["signal_deg", "idler_deg", "coincidences", "singles_s", "singles_i",
                    "n_gates", "accidental_estimate", "net_counts"])
        for t in tallies:
            acc = estimate_accidentals(t)
            w.writerow([fmt(t.setting.signal_deg), fmt(t.setting.idler_deg), t.coincidences,
                        t.singles_s, t.singles_i, t.n_gates, fmt(acc), fmt(t.coincidences - acc)])
        w.writerow(["S", "sigma_S"])
        w.writerow([fmt(est.s), fmt(est.sigma_s)])
    return est


def run_drift(cfg, out_dir):
    n = cfg.scenario.drift_trials
    variants = {
        "frm": scheme.drift_experiment(n, True, cfg.run.seed, cfg.scheme, workers=cfg.run.workers),
        "reference": scheme.drift_experiment(n, False, cfg.run.seed, cfg.scheme,
                                             workers=cfg.run.workers),
    }
    with open(out_dir / "drift.csv", "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["trial", "variant", "visibility"])
        for variant, vis in variants.items():
            w.writerows([k, variant, fmt(v)] for k, v in enumerate(vis))


RUNNERS = {"ideal": run_ideal, "fringe": run_fringe, "chsh": run_chsh, "drift": run_drift}


def run_scenario(cfg, out_dir):
    """Run the selected scenario into ``out_dir``; returns the exit status."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        cfg = replace(cfg, run=resolve_mu(cfg.run, cfg.pump, cfg.scheme))
        RUNNERS[cfg.scenario.kind](cfg, out_dir)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FrmPairsError as exc:
        print(f"error in {cfg.scenario.kind} scenario: {exc}", file=sys.stderr)
        return 2
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="frmpairs", description=__doc__.splitlines()[0])
    p.add_argument("--config", required=True, help="scenario config file")
    p.add_argument("--scenario", choices=SCENARIOS, help="override scenario.kind")
    p.add_argument("--seed", type=int, help="override run.seed")
    p.add_argument("--gates", type=int, help="override run.n_gates")
    p.add_argument("--workers", type=int, help="override run.workers")
    p.add_argument("--out", default="./out", help="output directory (default ./out)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text()
        cfg = parse_config(text)
        run_over = {k: v for k, v in (("seed", args.seed), ("n_gates", args.gates),
                                      ("workers", args.workers)) if v is not None}
        if run_over:
            cfg = replace(cfg, run=replace(cfg.run, **run_over))
        if args.scenario:
            cfg = replace(cfg, scenario=replace(cfg.scenario, kind=args.scenario))
    except (OSError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except InvalidArgument as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    return run_scenario(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
