"""Scenario configuration, assembly, execution, and parameter sweeps.

A scenario bundles everything one simulation campaign needs: the system
parameters in laboratory units, the four bath attachments, the initial
preparation, the Fock truncation, and the integration grid.  Configs are
JSON files whose numeric entries either carry a unit suffix ("10 GHz",
"65 mK") or are bare numbers already expressed in working units (ancilla
frequency = 1).  Loading resolves every quantity to working units and the
resulting manifest echoes both forms, so a manifest can be fed back in as
a config and reproduces the run bit for bit.

Scenario families
-----------------
``fig2_comparison``
    Two uncoupled resonators under the displaced pair-sink dissipator and
    under the two-jump reference machine, both with the free resonator
    Hamiltonian attached.  Produces one CSV per machine.
``fig3_nondegenerate`` / ``fig4_degenerate``
    The filtered thermal machine with distinct (or equal) resonator
    frequencies, run once per entry of ``hot_temperatures``.
``fig5_thermal``
    The non-degenerate machine started from thermal resonator states,
    run once per entry of ``thermal_occupations``.
``custom_sweep``
    A single curve taken verbatim from the config; the builder is chosen
    by whether the resonator frequencies are degenerate.

Initial states are specified in the local (physical) basis; for the
dressed-frame machines the runner applies the polaron dressing before
integration, since the dressed generators act on the transformed state.
"""

from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .dynamics import DEFAULT_TOLERANCE, Trajectory, evolve
from .entanglement import (
    LocalFrameObserver,
    PolaronMap,
    ResonatorObserver,
    to_dressed_basis,
)
from .errors import InvalidConfigurationError
from .liouvillian import (
    ArenzParams,
    BathSet,
    Liouvillian,
    build_arenz_reference,
    build_dent_only,
    build_filtered_degenerate,
    build_filtered_nondegenerate,
    term_audit,
)
from .operators import (
    DensityState,
    HilbertGeometry,
    as_density_state,
    thermal_factor_state,
)
from .rates import cooling_dominance, effective_rates
from .spectra import BathSpec, FilterSpec
from .system import SystemParams, free_resonator_hamiltonian

# k_B / h in Hz per kelvin, from the exact SI definitions.
BOLTZMANN_HZ_PER_K = 1.380649e-23 / 6.62607015e-34

FREQUENCY_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
TEMPERATURE_UNITS = {"k": 1.0, "mk": 1e-3}

SCENARIO_NAMES = (
    "fig2_comparison",
    "fig3_nondegenerate",
    "fig4_degenerate",
    "fig5_thermal",
    "custom_sweep",
)
DRESSED_SCENARIOS = (
    "fig3_nondegenerate",
    "fig4_degenerate",
    "fig5_thermal",
    "custom_sweep",
)
SWEEP_AXES = {
    "T_h": "T_h",
    "Th": "T_h",
    "T_i": "T_i",
    "Ti": "T_i",
    "alpha": "alpha",
    "N": "N",
    "truncation": "N",
}

MIN_TRUNCATION = 3
MAX_TOLERANCE = 1e-4
LATE_WINDOW_FRACTION = 0.25

MANIFEST_NAME = "manifest.json"
SWEEP_SUMMARY_NAME = "sweep_summary.csv"
SWEEP_MANIFEST_NAME = "sweep_manifest.json"
SWEEP_SUMMARY_HEADER = "axis,value,peak_EN,late_EN,dominance_margin"

_QUANTITY_RE = re.compile(r"^\s*([+-]?[0-9.]+(?:[eE][+-]?[0-9]+)?)\s*([A-Za-z]+)\s*$")
_LABEL_SAFE_RE = re.compile(r"[^A-Za-z0-9._-]+")

_TOP_LEVEL_KEYS = {
    "scenario",
    "system",
    "baths",
    "initial",
    "truncation",
    "horizon",
    "stride",
    "tolerance",
    "output_dir",
    "hot_temperatures",
    "thermal_occupations",
    "machine_rates",
    "record_windows",
}
_SYSTEM_KEYS = {"ancilla_frequency", "resonator_frequencies", "alpha", "ancilla_kind"}
_BATH_KEYS = {"temperature", "coupling", "filter_center", "filter_width"}
_INITIAL_KEYS = {"kind", "occupations"}
_MACHINE_RATE_KEYS = {"dent", "arenz_c", "arenz_d", "arenz_beta"}
_WINDOW_KEYS = {"start", "stop", "stride"}


class ConfigError(InvalidConfigurationError):
    """A config entry is missing, malformed, or out of domain.

    Attributes:
        path: dotted key path of the offending entry ("" for file-level
            problems such as JSON syntax errors, where the message already
            carries line and column).
    """

    def __init__(self, path: str, message: str):
        self.path = path
        prefix = f"{path}: " if path else ""
        super().__init__(f"{prefix}{message}")


@dataclass(frozen=True)
class RecordWindow:
    """A densely sampled sub-interval added to the base record grid."""

    start: float
    stop: float
    stride: float


@dataclass(frozen=True)
class ScenarioConfig:
    """A fully resolved scenario: all quantities in working units.

    ``raw`` preserves the config exactly as loaded (after overrides), so it
    can be echoed into the manifest and later re-loaded; everything else is
    derived from it.
    """

    scenario: str
    system: SystemParams
    baths: BathSet | None
    initial_kind: str
    initial_occupations: tuple[float, float]
    truncation: int
    horizon: float
    stride: float
    tolerance: float
    output_dir: str
    hot_temperatures: tuple[float, ...] | None
    hot_temperature_labels: tuple[str, ...] | None
    thermal_occupations: tuple[float, ...] | None
    machine_rates: dict | None
    record_windows: tuple[RecordWindow, ...]
    ancilla_frequency_hz: float | None
    raw: dict = field(repr=False)
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class CurvePlan:
    """One trajectory of a scenario: generator, start state, output file."""

    label: str
    filename: str
    liouvillian: Liouvillian
    initial_state: DensityState
    observer: object
    bath_set: BathSet | None


@dataclass
class ScenarioResult:
    """Outcome of one scenario run."""

    config: ScenarioConfig
    output_dir: Path
    trajectories: dict[str, Trajectory]
    manifest: dict


@dataclass
class SweepResult:
    """Outcome of a one-axis sweep: one trajectory and summary row per value."""

    axis: str
    values: tuple[float, ...]
    output_dir: Path
    rows: list[dict]
    trajectories: dict[float, Trajectory]


class _Units:
    """Resolves config quantities to working units (ancilla frequency = 1)."""

    def __init__(self, frequency_hz: float | None):
        self.frequency_hz = frequency_hz

    def frequency(self, value, path: str) -> float:
        number, unit = _split_quantity(value, path)
        if unit is None:
            return number
        scale = FREQUENCY_UNITS.get(unit.lower())
        if scale is None:
            raise ConfigError(path, f"unknown frequency unit {unit!r}")
        if self.frequency_hz is None:
            raise ConfigError(
                path,
                "unit-suffixed frequencies require the ancilla frequency to"
                " carry units as well",
            )
        return number * scale / self.frequency_hz

    def temperature(self, value, path: str) -> float:
        number, unit = _split_quantity(value, path)
        if unit is None:
            return number
        scale = TEMPERATURE_UNITS.get(unit.lower())
        if scale is None:
            raise ConfigError(path, f"unknown temperature unit {unit!r}")
        if self.frequency_hz is None:
            raise ConfigError(
                path,
                "unit-suffixed temperatures require the ancilla frequency to"
                " carry units as well",
            )
        return number * scale * BOLTZMANN_HZ_PER_K / self.frequency_hz


def _split_quantity(value, path: str) -> tuple[float, str | None]:
    if isinstance(value, bool):
        raise ConfigError(path, "expected a number or quantity string")
    if isinstance(value, (int, float)):
        return float(value), None
    if isinstance(value, str):
        match = _QUANTITY_RE.match(value)
        if match is None:
            raise ConfigError(
                path, f"cannot parse quantity {value!r} (expected 'NUMBER UNIT')"
            )
        return float(match.group(1)), match.group(2)
    raise ConfigError(path, f"expected a number or string, got {type(value).__name__}")


def _require(mapping: dict, key: str, path: str):
    if key not in mapping:
        raise ConfigError(path, f"missing required key {key!r}")
    return mapping[key]


def _check_keys(mapping: dict, allowed: set, path: str) -> None:
    if not isinstance(mapping, dict):
        raise ConfigError(path, f"expected an object, got {type(mapping).__name__}")
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(path, f"unknown key(s) {', '.join(map(repr, unknown))}")


def _positive(value: float, path: str) -> float:
    if not np.isfinite(value) or value <= 0:
        raise ConfigError(path, f"must be a positive finite number, got {value!r}")
    return value


def _label_for(value, working: float) -> str:
    if isinstance(value, str):
        text = value.replace(" ", "")
    else:
        text = f"{working:g}"
    cleaned = _LABEL_SAFE_RE.sub("_", text)
    return cleaned or "value"


def _package_version() -> str:
    from . import __version__

    return __version__


def bundled_config_path(name: str) -> Path:
    """Filesystem path of a packaged scenario config (name without .json)."""
    entry = resources.files(__package__) / "configs" / f"{name}.json"
    path = Path(str(entry))
    if not path.is_file():
        available = sorted(
            p.name.removesuffix(".json")
            for p in (resources.files(__package__) / "configs").iterdir()
        )
        raise ConfigError(
            "", f"no bundled config {name!r}; available: {', '.join(available)}"
        )
    return path


def parse_override(text: str) -> tuple[str, object]:
    """Split one ``key=value`` override; the value is parsed as JSON when
    possible and kept as a plain string otherwise ("1 K" stays a string)."""
    key, sep, raw_value = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError("", f"override {text!r} is not of the form key=value")
    try:
        value = json.loads(raw_value)
    except json.JSONDecodeError:
        value = raw_value
    return key.strip(), value


def apply_override(raw: dict, key: str, value) -> None:
    """Set a dotted-path entry; parent objects must already exist.

    The leaf itself may be created (so optional keys can be switched on);
    misspelled leaves are still rejected by schema validation afterwards.
    """
    parts = key.split(".")
    node = raw
    for depth, part in enumerate(parts[:-1]):
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(".".join(parts[: depth + 1]), "no such config entry")
        node = node[part]
    if not isinstance(node, dict):
        raise ConfigError(key, "parent entry is not an object")
    node[parts[-1]] = value


def load_config(source, *, overrides: tuple[str, ...] = ()) -> ScenarioConfig:
    """Load and validate a scenario config from a path, dict, or manifest.

    ``overrides`` are ``key=value`` strings applied to the raw config before
    validation; dotted keys address nested entries and must already exist.
    A manifest produced by :func:`run_scenario` is accepted directly (its
    embedded config is extracted), so runs round-trip.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError("", f"cannot read config {path}: {exc}") from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                "", f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}"
            ) from exc
    else:
        raw = json.loads(json.dumps(source))
    if not isinstance(raw, dict):
        raise ConfigError("", "config root must be a JSON object")
    if "config" in raw and "outputs" in raw:
        raw = raw["config"]
    for item in overrides:
        key, value = parse_override(item) if isinstance(item, str) else item
        apply_override(raw, key, value)
    return _validate(raw)


def _validate(raw: dict) -> ScenarioConfig:
    _check_keys(raw, _TOP_LEVEL_KEYS, "")
    scenario = _require(raw, "scenario", "")
    if scenario not in SCENARIO_NAMES:
        raise ConfigError(
            "scenario",
            f"unknown scenario {scenario!r}; expected one of {', '.join(SCENARIO_NAMES)}",
        )

    system_raw = _require(raw, "system", "")
    _check_keys(system_raw, _SYSTEM_KEYS, "system")
    anchor = _require(system_raw, "ancilla_frequency", "system")
    number, unit = _split_quantity(anchor, "system.ancilla_frequency")
    if unit is not None:
        scale = FREQUENCY_UNITS.get(unit.lower())
        if scale is None:
            raise ConfigError(
                "system.ancilla_frequency", f"unknown frequency unit {unit!r}"
            )
        frequency_hz = _positive(number * scale, "system.ancilla_frequency")
        omega_a = 1.0
    else:
        frequency_hz = None
        omega_a = _positive(number, "system.ancilla_frequency")
    units = _Units(frequency_hz)

    freqs_raw = _require(system_raw, "resonator_frequencies", "system")
    if not isinstance(freqs_raw, list) or len(freqs_raw) != 2:
        raise ConfigError(
            "system.resonator_frequencies", "expected a list of two frequencies"
        )
    omega = tuple(
        _positive(
            units.frequency(v, f"system.resonator_frequencies[{i}]"),
            f"system.resonator_frequencies[{i}]",
        )
        for i, v in enumerate(freqs_raw)
    )
    alpha_raw = _require(system_raw, "alpha", "system")
    if isinstance(alpha_raw, list):
        if len(alpha_raw) != 2:
            raise ConfigError("system.alpha", "expected a number or a pair")
        alpha = tuple(float(a) for a in alpha_raw)
    else:
        alpha = float(_split_quantity(alpha_raw, "system.alpha")[0])
    ancilla_kind = system_raw.get("ancilla_kind", "tls")
    if ancilla_kind != "tls":
        raise ConfigError(
            "system.ancilla_kind",
            "only the two-level ancilla is wired into the scenario runner",
        )
    try:
        system = SystemParams.from_alpha(omega_a, omega, alpha, ancilla_kind="tls")
    except InvalidConfigurationError as exc:
        raise ConfigError("system", str(exc)) from exc

    baths_raw = raw.get("baths")
    baths = None
    if baths_raw is None:
        if scenario != "fig2_comparison":
            raise ConfigError("baths", "dressed scenarios require the four baths")
    else:
        baths = _validate_baths(baths_raw, units)

    initial_raw = _require(raw, "initial", "")
    _check_keys(initial_raw, _INITIAL_KEYS, "initial")
    initial_kind = _require(initial_raw, "kind", "initial")
    if initial_kind not in ("ground", "thermal"):
        raise ConfigError("initial.kind", f"expected 'ground' or 'thermal', got {initial_kind!r}")
    if initial_kind == "thermal":
        occ_raw = _require(initial_raw, "occupations", "initial")
        if not isinstance(occ_raw, list) or len(occ_raw) != 2:
            raise ConfigError("initial.occupations", "expected a list of two occupations")
        occupations = tuple(float(v) for v in occ_raw)
        if any(v < 0 for v in occupations):
            raise ConfigError("initial.occupations", "occupations must be non-negative")
    else:
        if "occupations" in initial_raw:
            raise ConfigError("initial.occupations", "not allowed for a ground start")
        occupations = (0.0, 0.0)

    truncation = _require(raw, "truncation", "")
    if not isinstance(truncation, int) or isinstance(truncation, bool):
        raise ConfigError("truncation", "must be an integer")
    if truncation < MIN_TRUNCATION:
        raise ConfigError("truncation", f"must be at least {MIN_TRUNCATION}")

    horizon = _positive(float(_require(raw, "horizon", "")), "horizon")
    stride = _positive(float(_require(raw, "stride", "")), "stride")
    if stride > horizon:
        raise ConfigError("stride", "must not exceed the horizon")
    tolerance = float(raw.get("tolerance", DEFAULT_TOLERANCE))
    if not 0 < tolerance <= MAX_TOLERANCE:
        raise ConfigError("tolerance", f"must lie in (0, {MAX_TOLERANCE:g}]")
    output_dir = raw.get("output_dir", "runs/" + scenario)
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("output_dir", "must be a non-empty string")

    hot_temperatures = None
    hot_labels = None
    if raw.get("hot_temperatures") is not None:
        if scenario not in ("fig3_nondegenerate", "fig4_degenerate"):
            raise ConfigError(
                "hot_temperatures", f"not supported by scenario {scenario!r}"
            )
        entries = raw["hot_temperatures"]
        if not isinstance(entries, list) or not entries:
            raise ConfigError("hot_temperatures", "expected a non-empty list")
        resolved = [
            units.temperature(v, f"hot_temperatures[{i}]")
            for i, v in enumerate(entries)
        ]
        hot_temperatures = tuple(resolved)
        hot_labels = tuple(_label_for(v, w) for v, w in zip(entries, resolved))

    thermal_occupations = None
    if raw.get("thermal_occupations") is not None:
        if scenario != "fig5_thermal":
            raise ConfigError(
                "thermal_occupations", f"not supported by scenario {scenario!r}"
            )
        entries = raw["thermal_occupations"]
        if not isinstance(entries, list) or not entries:
            raise ConfigError("thermal_occupations", "expected a non-empty list")
        thermal_occupations = tuple(float(v) for v in entries)
        if any(v < 0 for v in thermal_occupations):
            raise ConfigError("thermal_occupations", "occupations must be non-negative")
        if initial_kind != "thermal":
            raise ConfigError(
                "thermal_occupations", "requires initial.kind = 'thermal'"
            )

    machine_rates = None
    if raw.get("machine_rates") is not None:
        if scenario != "fig2_comparison":
            raise ConfigError(
                "machine_rates", f"not supported by scenario {scenario!r}"
            )
        rates_raw = raw["machine_rates"]
        _check_keys(rates_raw, _MACHINE_RATE_KEYS, "machine_rates")
        machine_rates = {
            "dent": _positive(
                units.frequency(_require(rates_raw, "dent", "machine_rates"), "machine_rates.dent"),
                "machine_rates.dent",
            ),
            "arenz_c": _positive(
                units.frequency(_require(rates_raw, "arenz_c", "machine_rates"), "machine_rates.arenz_c"),
                "machine_rates.arenz_c",
            ),
            "arenz_d": _positive(
                units.frequency(_require(rates_raw, "arenz_d", "machine_rates"), "machine_rates.arenz_d"),
                "machine_rates.arenz_d",
            ),
            "arenz_beta": float(rates_raw.get("arenz_beta", 0.0)),
        }
    elif scenario == "fig2_comparison":
        raise ConfigError("machine_rates", "fig2_comparison requires machine_rates")

    windows = []
    for i, entry in enumerate(raw.get("record_windows", []) or []):
        path = f"record_windows[{i}]"
        _check_keys(entry, _WINDOW_KEYS, path)
        start = float(_require(entry, "start", path))
        stop = float(_require(entry, "stop", path))
        wstride = _positive(float(_require(entry, "stride", path)), f"{path}.stride")
        if not 0 <= start < stop <= horizon:
            raise ConfigError(path, "need 0 <= start < stop <= horizon")
        windows.append(RecordWindow(start, stop, wstride))

    config_warnings = []
    if baths is not None and scenario in DRESSED_SCENARIOS:
        t_hot = max(hot_temperatures) if hot_temperatures else baths.hot.temperature
        t_local = max(baths.local1.temperature, baths.local2.temperature)
        if not (t_hot > t_local > baths.cold.temperature):
            message = (
                "bath temperatures do not satisfy T_h > T_i > T_c"
                f" (working units: {t_hot:g}, {t_local:g}, {baths.cold.temperature:g});"
                " running anyway"
            )
            warnings.warn(message, stacklevel=3)
            config_warnings.append(message)

    return ScenarioConfig(
        scenario=scenario,
        system=system,
        baths=baths,
        initial_kind=initial_kind,
        initial_occupations=occupations,
        truncation=truncation,
        horizon=horizon,
        stride=stride,
        tolerance=tolerance,
        output_dir=output_dir,
        hot_temperatures=hot_temperatures,
        hot_temperature_labels=hot_labels,
        thermal_occupations=thermal_occupations,
        machine_rates=machine_rates,
        record_windows=tuple(windows),
        ancilla_frequency_hz=frequency_hz,
        raw=raw,
        warnings=tuple(config_warnings),
    )


def _validate_baths(baths_raw: dict, units: _Units) -> BathSet:
    _check_keys(baths_raw, {"hot", "cold", "local1", "local2"}, "baths")
    specs = {}
    for label in ("hot", "cold", "local1", "local2"):
        entry = _require(baths_raw, label, "baths")
        path = f"baths.{label}"
        _check_keys(entry, _BATH_KEYS, path)
        temperature = units.temperature(
            _require(entry, "temperature", path), f"{path}.temperature"
        )
        if temperature < 0:
            raise ConfigError(f"{path}.temperature", "must be non-negative")
        coupling = _positive(
            units.frequency(_require(entry, "coupling", path), f"{path}.coupling"),
            f"{path}.coupling",
        )
        filter_spec = None
        if "filter_center" in entry or "filter_width" in entry:
            if "filter_center" not in entry or "filter_width" not in entry:
                raise ConfigError(
                    path, "filter_center and filter_width must be given together"
                )
            center = _positive(
                units.frequency(entry["filter_center"], f"{path}.filter_center"),
                f"{path}.filter_center",
            )
            width = _positive(
                units.frequency(entry["filter_width"], f"{path}.filter_width"),
                f"{path}.filter_width",
            )
            filter_spec = FilterSpec(center, width)
        specs[label] = BathSpec(label, temperature, coupling, filter_spec)
    for label in ("hot", "cold"):
        if specs[label].filter is None:
            raise ConfigError(
                f"baths.{label}", "the hot and cold baths must carry filters"
            )
    return BathSet(**specs)


def _record_grid(config: ScenarioConfig) -> np.ndarray:
    """Base stride grid merged with any dense record windows."""
    n_steps = int(np.floor(config.horizon / config.stride + 1e-9))
    pieces = [config.stride * np.arange(n_steps + 1)]
    if pieces[0][-1] < config.horizon * (1 - 1e-12):
        pieces.append(np.array([config.horizon]))
    for window in config.record_windows:
        count = int(np.floor((window.stop - window.start) / window.stride + 1e-9))
        pieces.append(window.start + window.stride * np.arange(count + 1))
    grid = np.unique(np.concatenate(pieces))
    return grid[grid <= config.horizon * (1 + 1e-12)]


def _local_preparation(
    geometry: HilbertGeometry, occupations: tuple[float, float]
) -> DensityState:
    """Ancilla ground state times (possibly thermal) resonator factors."""
    n1, n2 = geometry.fock_dims
    factors = [
        np.asarray(thermal_factor_state(n1, occupations[0])),
        np.asarray(thermal_factor_state(n2, occupations[1])),
    ]
    rho = np.kron(factors[0], factors[1])
    if geometry.ancilla_dim > 1:
        ancilla = np.zeros((geometry.ancilla_dim, geometry.ancilla_dim))
        ancilla[geometry.ancilla_dim - 1, geometry.ancilla_dim - 1] = 1.0
        rho = np.kron(ancilla, rho)
    return as_density_state(rho, geometry)


def _bath_variant(baths: BathSet, hot_temperature: float) -> BathSet:
    hot = BathSpec("hot", hot_temperature, baths.hot.coupling, baths.hot.filter)
    return BathSet(hot=hot, cold=baths.cold, local1=baths.local1, local2=baths.local2)


def plan_curves(config: ScenarioConfig, truncation: int | None = None) -> list[CurvePlan]:
    """Assemble the generator, initial state, and observer for every curve."""
    n = truncation if truncation is not None else config.truncation
    if config.scenario == "fig2_comparison":
        geometry = HilbertGeometry.resonators_only(n, n)
        h_free = free_resonator_hamiltonian(config.system.omega, geometry)
        rates = config.machine_rates
        n1, n2 = geometry.fock_dims
        rho = np.kron(
            np.asarray(thermal_factor_state(n1, config.initial_occupations[0])),
            np.asarray(thermal_factor_state(n2, config.initial_occupations[1])),
        )
        state0 = as_density_state(rho, geometry)
        observer = ResonatorObserver(geometry)
        dent = build_dent_only(config.system, geometry, rates["dent"]).with_hamiltonian(
            h_free
        )
        arenz = build_arenz_reference(
            ArenzParams(rates["arenz_c"], rates["arenz_d"], rates["arenz_beta"]),
            geometry,
        ).with_hamiltonian(h_free)
        return [
            CurvePlan("dent", "dent.csv", dent, state0, observer, None),
            CurvePlan("arenz", "arenz.csv", arenz, state0, observer, None),
        ]

    geometry = HilbertGeometry.tls(n, n)
    pmap = PolaronMap(config.system, geometry)
    state_local = _local_preparation(geometry, config.initial_occupations)
    observer = LocalFrameObserver(config.system, geometry)

    if config.scenario == "fig5_thermal":
        occupation_pairs = (
            [(n, n) for n in config.thermal_occupations]
            if config.thermal_occupations
            else [config.initial_occupations]
        )
        plans = []
        for pair in occupation_pairs:
            state0 = to_dressed_basis(_local_preparation(geometry, pair), pmap)
            liou = build_filtered_nondegenerate(config.system, geometry, config.baths)
            label = f"nbar_{pair[0]:g}" if pair[0] == pair[1] else "curve"
            plans.append(
                CurvePlan(label, f"{label}.csv", liou, state0, observer, config.baths)
            )
        return plans

    if config.scenario in ("fig3_nondegenerate", "fig4_degenerate"):
        build = (
            build_filtered_nondegenerate
            if config.scenario == "fig3_nondegenerate"
            else build_filtered_degenerate
        )
        temperatures = config.hot_temperatures or (config.baths.hot.temperature,)
        labels = config.hot_temperature_labels or (
            _label_for(
                config.raw["baths"]["hot"]["temperature"], config.baths.hot.temperature
            ),
        )
        state0 = to_dressed_basis(state_local, pmap)
        plans = []
        for temperature, label in zip(temperatures, labels):
            variant = _bath_variant(config.baths, temperature)
            liou = build(config.system, geometry, variant)
            name = f"Th_{label}"
            plans.append(
                CurvePlan(name, f"{name}.csv", liou, state0, observer, variant)
            )
        return plans

    # custom_sweep: one curve, builder chosen by the frequency pattern.
    build = (
        build_filtered_degenerate
        if config.system.degenerate
        else build_filtered_nondegenerate
    )
    liou = build(config.system, geometry, config.baths)
    state0 = to_dressed_basis(state_local, pmap)
    return [CurvePlan("curve", "curve.csv", liou, state0, observer, config.baths)]


def _rate_report(config: ScenarioConfig, plan: CurvePlan) -> dict | None:
    if plan.bath_set is None or config.system.degenerate:
        return None
    rates = effective_rates(config.system, plan.bath_set)
    report = cooling_dominance(rates)
    return {"rates": rates.as_dict(), "dominance": report.as_dict()}


def _manifest(
    config: ScenarioConfig,
    plans: list[CurvePlan],
    grid: np.ndarray,
    truncation: int,
) -> dict:
    resolved_baths = None
    if config.baths is not None:
        resolved_baths = {
            spec.label: {
                "temperature": spec.temperature,
                "coupling": spec.coupling,
                "filter_center": spec.filter.center if spec.filter else None,
                "filter_width": spec.filter.coupling if spec.filter else None,
            }
            for spec in (
                config.baths.hot,
                config.baths.cold,
                config.baths.local1,
                config.baths.local2,
            )
        }
    manifest = {
        "config": config.raw,
        "resolved": {
            "ancilla_frequency_hz": config.ancilla_frequency_hz,
            "working_temperature_per_kelvin": (
                BOLTZMANN_HZ_PER_K / config.ancilla_frequency_hz
                if config.ancilla_frequency_hz
                else None
            ),
            "omega_a": config.system.omega_a,
            "resonator_frequencies": list(config.system.omega),
            "alpha": list(config.system.alpha),
            "baths": resolved_baths,
            "hot_temperatures": (
                list(config.hot_temperatures) if config.hot_temperatures else None
            ),
            "initial": {
                "kind": config.initial_kind,
                "occupations": list(config.initial_occupations),
            },
            "truncation": truncation,
            "horizon": config.horizon,
            "record_count": int(grid.size),
        },
        "integrator": {
            "method": "RK45",
            "rtol": config.tolerance,
            "atol": 1e-12,
        },
        "defaults": {
            "package_version": _package_version(),
            "tolerance": DEFAULT_TOLERANCE,
            "late_window_fraction": LATE_WINDOW_FRACTION,
        },
        "term_audit": {plan.label: term_audit(plan.liouvillian) for plan in plans},
        "effective_rates": {
            plan.label: report
            for plan in plans
            if (report := _rate_report(config, plan)) is not None
        },
        "outputs": {plan.label: plan.filename for plan in plans},
        "warnings": list(config.warnings),
    }
    return manifest


def _write_manifest(manifest: dict, path: Path) -> None:
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def run_scenario(
    config: ScenarioConfig,
    *,
    out_dir: str | Path | None = None,
    truncation: int | None = None,
) -> ScenarioResult:
    """Integrate every curve of the scenario and write CSVs plus a manifest.

    ``out_dir`` and ``truncation`` override the config; the overrides are
    folded back into the manifest's embedded config so a rerun from the
    manifest reproduces the same outputs.
    """
    n = truncation if truncation is not None else config.truncation
    target = Path(out_dir) if out_dir is not None else Path(config.output_dir)
    if truncation is not None or out_dir is not None:
        raw = json.loads(json.dumps(config.raw))
        raw["truncation"] = n
        raw["output_dir"] = str(target)
        config = load_config(raw)
    plans = plan_curves(config, truncation=n)
    grid = _record_grid(config)
    target.mkdir(parents=True, exist_ok=True)
    trajectories: dict[str, Trajectory] = {}
    for plan in plans:
        trajectory = evolve(
            plan.liouvillian,
            plan.initial_state,
            record_times=grid,
            tolerance=config.tolerance,
            observer=plan.observer,
        )
        trajectory.to_csv(target / plan.filename)
        trajectories[plan.label] = trajectory
    manifest = _manifest(config, plans, grid, n)
    _write_manifest(manifest, target / MANIFEST_NAME)
    return ScenarioResult(
        config=config,
        output_dir=target,
        trajectories=trajectories,
        manifest=manifest,
    )


def check_scenario(config: ScenarioConfig) -> dict:
    """Validate and assemble without integrating; returns the audit report."""
    plans = plan_curves(config)
    grid = _record_grid(config)
    report = {
        "scenario": config.scenario,
        "curves": {},
        "record_count": int(grid.size),
        "warnings": list(config.warnings),
    }
    for plan in plans:
        entry = {
            "terms": term_audit(plan.liouvillian),
            "initial_trace_error": abs(
                float(np.trace(plan.initial_state.matrix).real) - 1.0
            ),
        }
        rates = _rate_report(config, plan)
        if rates is not None:
            entry["effective_rates"] = rates
        report["curves"][plan.label] = entry
    return report


def late_time_negativity(trajectory: Trajectory, horizon: float) -> float:
    """Mean log-negativity over the trailing quarter of the horizon."""
    start = horizon * (1.0 - LATE_WINDOW_FRACTION)
    tail = trajectory.log_negativity[trajectory.times >= start]
    if tail.size == 0:
        tail = trajectory.log_negativity[-1:]
    return float(np.mean(tail))


def _sweep_override(config: ScenarioConfig, axis: str, value: float) -> dict:
    """Raw config for one sweep point; temperatures are given in kelvin when
    the config is unit-anchored and in working units otherwise."""
    raw = json.loads(json.dumps(config.raw))
    anchored = config.ancilla_frequency_hz is not None

    def temperature_entry(v: float):
        return f"{v:.12g} K" if anchored else v

    if axis == "T_h":
        raw["baths"]["hot"]["temperature"] = temperature_entry(value)
        raw.pop("hot_temperatures", None)
    elif axis == "T_i":
        raw["baths"]["local1"]["temperature"] = temperature_entry(value)
        raw["baths"]["local2"]["temperature"] = temperature_entry(value)
        raw.pop("hot_temperatures", None)
    elif axis == "alpha":
        raw["system"]["alpha"] = value
        raw.pop("hot_temperatures", None)
    elif axis == "N":
        n = int(round(value))
        if n != value:
            raise ConfigError("", f"truncation sweep values must be integers, got {value!r}")
        raw["truncation"] = n
        raw.pop("hot_temperatures", None)
    else:
        raise ConfigError(
            "", f"unknown sweep axis {axis!r}; expected one of {sorted(set(SWEEP_AXES.values()))}"
        )
    raw.pop("thermal_occupations", None)
    return raw


def sweep_scenario(
    config: ScenarioConfig,
    axis: str,
    values,
    *,
    out_dir: str | Path | None = None,
) -> SweepResult:
    """Run one curve per axis value and write a deterministic summary table.

    Each row records the axis value, the peak log-negativity, the
    late-time (trailing-window mean) log-negativity, and the
    cooling-dominance margin of the effective rates at that point.
    """
    canonical = SWEEP_AXES.get(axis)
    if canonical is None:
        raise ConfigError(
            "", f"unknown sweep axis {axis!r}; expected one of {sorted(set(SWEEP_AXES.values()))}"
        )
    values = tuple(float(v) for v in values)
    if not values:
        raise ConfigError("", "sweep needs at least one value")
    target = Path(out_dir) if out_dir is not None else Path(config.output_dir)
    target.mkdir(parents=True, exist_ok=True)
    rows: list[dict] = []
    trajectories: dict[float, Trajectory] = {}
    outputs = {}
    for index, value in enumerate(values):
        point_raw = _sweep_override(config, canonical, value)
        filename = f"point_{index:02d}.csv"
        point_raw["output_dir"] = str(target)
        point_config = load_config(point_raw)
        plans = plan_curves(point_config)
        if len(plans) != 1:
            raise ConfigError(
                "", f"sweep points must resolve to a single curve, got {len(plans)}"
            )
        plan = plans[0]
        grid = _record_grid(point_config)
        trajectory = evolve(
            plan.liouvillian,
            plan.initial_state,
            record_times=grid,
            tolerance=point_config.tolerance,
            observer=plan.observer,
        )
        trajectory.to_csv(target / filename)
        rates = _rate_report(point_config, plan)
        margin = rates["dominance"]["margin"] if rates else float("nan")
        rows.append(
            {
                "axis": canonical,
                "value": value,
                "peak_EN": float(np.max(trajectory.log_negativity)),
                "late_EN": late_time_negativity(trajectory, point_config.horizon),
                "dominance_margin": margin,
            }
        )
        trajectories[value] = trajectory
        outputs[f"{value:g}"] = filename
    lines = [SWEEP_SUMMARY_HEADER]
    for row in rows:
        lines.append(
            ",".join(
                [
                    row["axis"],
                    format(row["value"], ".17g"),
                    format(row["peak_EN"], ".17g"),
                    format(row["late_EN"], ".17g"),
                    format(row["dominance_margin"], ".17g"),
                ]
            )
        )
    (target / SWEEP_SUMMARY_NAME).write_text("\n".join(lines) + "\n")
    _write_manifest(
        {
            "config": config.raw,
            "axis": canonical,
            "values": list(values),
            "outputs": outputs,
            "summary": SWEEP_SUMMARY_NAME,
        },
        target / SWEEP_MANIFEST_NAME,
    )
    return SweepResult(
        axis=canonical,
        values=values,
        output_dir=target,
        rows=rows,
        trajectories=trajectories,
    )
