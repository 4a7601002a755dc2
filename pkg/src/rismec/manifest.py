"""Experiment manifests: flat ``dotted.key = value`` text in human units.

Values are Python literals (numbers, quoted strings, lists, ``true`` /
``false``). Anything not set falls back to the reference scenario; the
figure presets then force the keys that define each experiment.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Any, Callable, Mapping

from rismec.allocator import CommSolverSettings
from rismec.controller import ControllerConfig, Scheme, SchemeOptions
from rismec.model import Geometry, SystemConfig, dbm_to_watt
from rismec.ris import RisSearchSpace
from rismec.sim import ScenarioSpec

PRESETS = ("tradeoff", "survivor", "survivor-outage", "power-trace", "custom")

TABLE = "reference parameter table"
SETUP = "reference scenario description"
CHOSEN = "library default, not published"


class ManifestError(ValueError):
    pass


def _positive(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and x > 0


def _non_negative_int(x):
    return isinstance(x, int) and not isinstance(x, bool) and x >= 0


def _positive_int(x):
    return _non_negative_int(x) and x >= 1


def _real(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _point(x):
    return isinstance(x, (list, tuple)) and len(x) == 2 and all(map(_real, x))


def _positive_list(n=None):
    def check(x):
        return (
            isinstance(x, (list, tuple))
            and len(x) > 0
            and (n is None or len(x) == n)
            and all(map(_positive, x))
        )
    return check


def _probability(x):
    return _real(x) and 0 < x < 1


def _share(x):
    return _real(x) and 0 < x <= 1


def _omega(x):
    return x == "subcarriers" or _positive_list()(x)


def _schemes(x):
    return (
        isinstance(x, (list, tuple))
        and len(x) > 0
        and all(s in {m.value for m in Scheme} for s in x)
    )


# key -> (default, validator, provenance)
KEYS: dict[str, tuple[Any, Callable[[Any], bool], str]] = {
    "experiment.preset": ("tradeoff", lambda x: x in PRESETS, CHOSEN),
    "experiment.schemes": (["optimized", "flat", "random", "direct"], _schemes, SETUP),
    "experiment.v": ([0.01, 0.1, 1, 10, 100], _positive_list(), CHOSEN),
    "experiment.horizon": (100_000, _positive_int, CHOSEN),
    "experiment.seed": (0, _non_negative_int, CHOSEN),
    "experiment.out": ("results", lambda x: isinstance(x, str) and x != "", CHOSEN),
    "experiment.record_slots": (True, lambda x: isinstance(x, bool), CHOSEN),
    "system.p_min_mw": (0.1, _positive, TABLE),
    "system.p_max_mw": (100, _positive, TABLE),
    "system.carrier_ghz": (3.5, _positive, TABLE),
    "system.spacing_mhz": (1, _positive, TABLE),
    "system.subcarriers": (16, _positive_int, TABLE),
    "system.n0_dbm_hz": (-174, _real, TABLE),
    "system.f_max_ghz": (10, _positive, TABLE),
    "system.f_l_min_ghz": (0.01, _positive, TABLE),
    "system.f_l_max_ghz": (1, _positive, TABLE),
    "system.gamma": (1e-27, _positive, TABLE),
    "system.device": ([10, 30], _point, SETUP),
    "system.ris": ([-5, 2.5], _point, SETUP),
    "system.ap": ([0, 0], _point, SETUP),
    "system.ris_elements": (100, _non_negative_int, SETUP),
    "system.taps": (4, _positive_int, SETUP),
    "system.pathloss_exponents": ([2, 2, 4], _positive_list(3), SETUP),
    "ris.omega": ("subcarriers", _omega, SETUP),
    "ris.chi": ([10, 25, 50, 100], _positive_list(), SETUP),
    "ris.flat_phases": (16, lambda x: _positive_int(x) and x >= 2, CHOSEN),
    "ris.flat_realization": ("lorentzian", lambda x: x in ("lorentzian", "ideal"), CHOSEN),
    "control.d_avg_ms": (100, _positive, SETUP),
    "control.d_max_ms": (110, _positive, SETUP),
    "control.epsilon": (0.01, _probability, SETUP),
    "control.outage_constraint": (False, lambda x: isinstance(x, bool), SETUP),
    "traffic.w_l_mean": (5e5, _positive, SETUP),
    "traffic.a_mean_mbit": (2, _positive, SETUP),
    "traffic.w_r_mean": (5e7, _positive, SETUP),
    "edge.sigma_low": (0.5, _share, CHOSEN),
    "edge.sigma_high": (1.0, _share, CHOSEN),
    "sim.explosion_factor": (1000, _positive, CHOSEN),
    "solver.kkt_tol": (1e-6, _positive, CHOSEN),
}

_FORCED = {
    "tradeoff": {"control.outage_constraint": False},
    "survivor": {"control.outage_constraint": False, "control.d_avg_ms": 100},
    "survivor-outage": {
        "control.outage_constraint": True,
        "control.d_avg_ms": 100,
        "control.d_max_ms": 110,
        "control.epsilon": 0.01,
    },
    "custom": {},
}
_FORCED["power-trace"] = _FORCED["survivor-outage"]
# presets evaluated at the largest V only
_SINGLE_V = ("survivor", "survivor-outage", "power-trace")


def _parse_value(text: str) -> Any:
    lowered = text.strip()
    if lowered in ("true", "false"):
        return lowered == "true"
    return ast.literal_eval(lowered)


def _normalize(value):
    return list(value) if isinstance(value, tuple) else value


def apply_preset(settings: dict, preset: str) -> dict:
    out = dict(settings)
    out["experiment.preset"] = preset
    out.update(_FORCED[preset])
    if preset in _SINGLE_V:
        out["experiment.v"] = [max(out["experiment.v"])]
    return out


@dataclass(frozen=True, eq=False)
class ExperimentManifest:
    """Fully resolved experiment: every key of :data:`KEYS` is present."""

    settings: Mapping[str, Any]

    def __post_init__(self):
        object.__setattr__(self, "settings", MappingProxyType(dict(self.settings)))

    def __eq__(self, other):
        return isinstance(other, ExperimentManifest) and dict(self.settings) == dict(other.settings)

    def __getitem__(self, key):
        return self.settings[key]

    @property
    def preset(self) -> str:
        return self["experiment.preset"]

    @property
    def schemes(self) -> list[Scheme]:
        return [Scheme(s) for s in self["experiment.schemes"]]

    @property
    def v_list(self) -> list[float]:
        return sorted(float(v) for v in self["experiment.v"])

    @property
    def out(self) -> Path:
        return Path(self["experiment.out"])

    @property
    def base(self) -> ScenarioSpec:
        return self.scenario(self.schemes[0], self.v_list[-1])

    def system(self) -> SystemConfig:
        s = self.settings
        return SystemConfig(
            gamma=float(s["system.gamma"]),
            p_min=s["system.p_min_mw"] / 1e3,
            p_max=s["system.p_max_mw"] / 1e3,
            f_c=s["system.carrier_ghz"] * 1e9,
            W=s["system.spacing_mhz"] * 1e6,
            B=s["system.subcarriers"],
            n0=dbm_to_watt(s["system.n0_dbm_hz"]),
            f_max=s["system.f_max_ghz"] * 1e9,
            f_l_min=s["system.f_l_min_ghz"] * 1e9,
            f_l_max=s["system.f_l_max_ghz"] * 1e9,
            geometry=Geometry(
                device=tuple(map(float, s["system.device"])),
                ris=tuple(map(float, s["system.ris"])),
                ap=tuple(map(float, s["system.ap"])),
            ),
            n_elements=s["system.ris_elements"],
            l_taps=s["system.taps"],
            pathloss_exponents=tuple(map(float, s["system.pathloss_exponents"])),
        )

    def scenario(self, scheme: Scheme | str, v: float) -> ScenarioSpec:
        s = self.settings
        omega = s["ris.omega"]
        options = SchemeOptions(
            space=RisSearchSpace(
                omega=None if omega == "subcarriers" else tuple(x * 1e9 for x in omega),
                chi_set=tuple(map(float, s["ris.chi"])),
            ),
            flat_phase_grid=s["ris.flat_phases"],
            flat_realization=s["ris.flat_realization"],
            solver=CommSolverSettings(kkt_tol=float(s["solver.kkt_tol"])),
        )
        ctrl = ControllerConfig(
            v=float(v),
            d_avg=s["control.d_avg_ms"] / 1e3,
            d_max=s["control.d_max_ms"] / 1e3,
            epsilon=float(s["control.epsilon"]),
            outage_constraint=s["control.outage_constraint"],
        )
        return ScenarioSpec(
            system=self.system(),
            ctrl=ctrl,
            scheme=Scheme(scheme),
            horizon=s["experiment.horizon"],
            seed=s["experiment.seed"],
            mean_w_l=float(s["traffic.w_l_mean"]),
            mean_a_bits=s["traffic.a_mean_mbit"] * 1e6,
            mean_w_r=float(s["traffic.w_r_mean"]),
            sigma_low=float(s["edge.sigma_low"]),
            sigma_high=float(s["edge.sigma_high"]),
            options=options,
            explosion_factor=float(s["sim.explosion_factor"]),
        )


def defaults() -> dict[str, Any]:
    return {k: _normalize(v[0]) for k, v in KEYS.items()}


def parse_manifest_text(
    text: str,
    source: str = "<manifest>",
    overrides: Mapping[str, Any] | None = None,
    preset: str | None = None,
) -> ExperimentManifest:
    """Parse manifest text; ``overrides`` and ``preset`` mimic CLI flags."""
    settings = defaults()
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise ManifestError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        key, value_text = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ManifestError(f"{where}: unknown key {key!r}")
        if key in lines:
            raise ManifestError(f"{where}: {key!r} already set on line {lines[key]}")
        try:
            value = _normalize(_parse_value(value_text))
        except (ValueError, SyntaxError):
            raise ManifestError(f"{where}: cannot parse value {value_text!r} for {key!r}") from None
        _check(key, value, where)
        settings[key] = value
        lines[key] = lineno
    for key, value in (overrides or {}).items():
        if key not in KEYS:
            raise ManifestError(f"override: unknown key {key!r}")
        value = _normalize(value)
        _check(key, value, "override")
        settings[key] = value
    settings = apply_preset(settings, preset or settings["experiment.preset"])

    def at(key):
        return f"{source}:{lines[key]}" if key in lines else source

    for lo, hi in (
        ("system.p_min_mw", "system.p_max_mw"),
        ("system.f_l_min_ghz", "system.f_l_max_ghz"),
        ("edge.sigma_low", "edge.sigma_high"),
    ):
        if settings[lo] > settings[hi] or (lo.startswith("system") and settings[lo] == settings[hi]):
            raise ManifestError(
                f"{at(lo)}: {lo}={settings[lo]} must be below {hi}={settings[hi]} ({at(hi)})"
            )
    manifest = ExperimentManifest(settings)
    try:
        manifest.base
    except ValueError as err:
        raise ManifestError(f"{source}: invalid configuration: {err}") from None
    return manifest


def _strip_comment(raw: str) -> str:
    quote = None
    for i, ch in enumerate(raw):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch == "#":
            return raw[:i]
    return raw


def _check(key: str, value: Any, where: str) -> None:
    default, valid, _ = KEYS[key]
    if not valid(value):
        raise ManifestError(f"{where}: invalid value {value!r} for {key!r} (default {default!r})")


def parse_manifest(
    path: str | Path,
    overrides: Mapping[str, Any] | None = None,
    preset: str | None = None,
) -> ExperimentManifest:
    path = Path(path)
    return parse_manifest_text(path.read_text(), str(path), overrides, preset)


def _literal(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return f'"{value}"'
    return repr(value)


def format_manifest(manifest: ExperimentManifest | Mapping[str, Any], provenance: bool = False) -> str:
    settings = manifest.settings if isinstance(manifest, ExperimentManifest) else manifest
    width = max(len(k) for k in KEYS)
    out = []
    for key in KEYS:
        line = f"{key:<{width}} = {_literal(settings[key])}"
        if provenance:
            line = f"{line:<{width + 48}}# {KEYS[key][2]}"
        out.append(line)
    return "\n".join(out) + "\n"
