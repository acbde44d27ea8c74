"""Run configuration: unit-suffixed key/value files, defaults, manifests.

The config format is flat ``key = value`` lines with ``#`` comments.  All
physical quantities carry unit suffixes ("300 MHz", "10 ns").  Frequencies
are, by default, the ν = ω/2π values quoted in circuit-QED practice and are
multiplied by 2π on ingestion; set ``frequencies_are_angular = true`` to
enter rad/s directly.  A manifest is the fully resolved config in the same
format, so every manifest is itself a valid config.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

from .kerr import TWO_PI, KerrSystemParams
from .protocol import RuleSet

_FREQ_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
_TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9, "ps": 1e-12}

_QUANTITY_RE = re.compile(r"^\s*([-+0-9.eE]+)\s*([a-zA-Zµ]*)\s*$")


class ConfigError(ValueError):
    pass


def parse_quantity(text: str, kind: str, key: str = "") -> float:
    """Parse "300 MHz" / "10 ns" / bare numbers into SI base units."""
    m = _QUANTITY_RE.match(text)
    if not m:
        raise ConfigError(f"{key}: cannot parse quantity {text!r}")
    try:
        value = float(m.group(1))
    except ValueError:
        raise ConfigError(f"{key}: bad number in {text!r}") from None
    unit = m.group(2).lower()
    if not unit:
        return value
    table = _FREQ_UNITS if kind == "frequency" else _TIME_UNITS
    if kind == "time":
        unit = m.group(2).replace("µ", "u").lower() if unit not in table else unit
    if unit not in table:
        raise ConfigError(f"{key}: unknown {kind} unit {m.group(2)!r} in {text!r}")
    return value * table[unit]


DEFAULTS: dict[str, str] = {
    # circuit parameters (frequencies as nu = omega/2pi unless flagged angular)
    "g1": "300 MHz",
    "g2": "300 MHz",
    "omega_c": "1.5 GHz",
    "delta1": "0 Hz",
    "delta2": "1.5 GHz",
    "frequencies_are_angular": "false",
    "kappa1_inv": "20 us",
    "kappa2_inv": "10 ns",
    # protocol
    "mode": "ideal_source",
    "rule_set": "ideal_phase",
    "f": "0.8",
    "alpha": "inf",
    "trials": "0",
    "seed": "12345",
    # detector / homodyne
    "max_total_occupation": "2",
    "p_target": "0.01",
    "xd_threshold": "4.5",
    # dissipation sweeps
    "tau_factor": "8",
    "kappa1_inv_sweep": "1 us, 2 us, 5 us, 10 us, 20 us, 50 us",
    "kappa2_inv_sweep": "2 ns, 5 ns, 10 ns, 20 ns, 50 ns",
    "sweep_initial_states": "10, 11",
}

_MODES = ("ideal_source", "pdc_single", "pdc_two_pair")


def _parse_lines(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration; raw string values plus typed accessors."""

    values: tuple[tuple[str, str], ...]

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "RunConfig":
        unknown = set(mapping) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        merged = dict(DEFAULTS)
        merged.update(mapping)
        cfg = cls(values=tuple(sorted(merged.items())))
        cfg._validate()
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        return cls.from_mapping(_parse_lines(Path(path).read_text()))

    @classmethod
    def defaults(cls) -> "RunConfig":
        return cls.from_mapping({})

    def get(self, key: str) -> str:
        for k, v in self.values:
            if k == key:
                return v
        raise KeyError(key)

    def with_overrides(self, **overrides: str) -> "RunConfig":
        merged = dict(self.values)
        merged.update({k: str(v) for k, v in overrides.items()})
        return RunConfig.from_mapping(merged)

    def _validate(self) -> None:
        self.kerr_params()
        if self.mode not in _MODES:
            raise ConfigError(f"mode: must be one of {_MODES}, got {self.mode!r}")
        self.rule_set  # noqa: B018 - parse check
        f = self.f
        if not 0.5 < f <= 1.0:
            raise ConfigError(f"f: must be in (0.5, 1], got {f}")
        if self.trials < 0:
            raise ConfigError("trials: must be >= 0")
        if self.alpha < 0:
            raise ConfigError("alpha: must be >= 0 or 'inf'")
        if not 0.0 < self.p_target < 0.5:
            raise ConfigError(f"p_target: must be in (0, 0.5), got {self.p_target}")

    # typed accessors ----------------------------------------------------

    @property
    def frequencies_are_angular(self) -> bool:
        return self.get("frequencies_are_angular").lower() in ("true", "1", "yes")

    def _freq(self, key: str) -> float:
        nu = parse_quantity(self.get(key), "frequency", key)
        return nu if self.frequencies_are_angular else TWO_PI * nu

    def _time(self, key: str) -> float:
        return parse_quantity(self.get(key), "time", key)

    def kerr_params(self) -> KerrSystemParams:
        return KerrSystemParams(
            g1=self._freq("g1"),
            g2=self._freq("g2"),
            omega_c=self._freq("omega_c"),
            delta1=self._freq("delta1"),
            delta2=self._freq("delta2"),
            kappa1=1.0 / self._time("kappa1_inv"),
            kappa2=1.0 / self._time("kappa2_inv"),
        )

    @property
    def mode(self) -> str:
        return self.get("mode")

    @property
    def rule_set(self) -> RuleSet:
        try:
            return RuleSet(self.get("rule_set"))
        except ValueError:
            raise ConfigError(f"rule_set: must be one of "
                              f"{[r.value for r in RuleSet]}, got {self.get('rule_set')!r}") from None

    @property
    def f(self) -> float:
        try:
            return float(self.get("f"))
        except ValueError:
            raise ConfigError(f"f: bad number {self.get('f')!r}") from None

    @property
    def alpha(self) -> float:
        text = self.get("alpha").lower()
        if text in ("inf", "infinite", "infinity"):
            return math.inf
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"alpha: bad value {self.get('alpha')!r}") from None

    @property
    def trials(self) -> int:
        try:
            return int(self.get("trials"))
        except ValueError:
            raise ConfigError(f"trials: bad integer {self.get('trials')!r}") from None

    @property
    def seed(self) -> int:
        try:
            return int(self.get("seed"))
        except ValueError:
            raise ConfigError(f"seed: bad integer {self.get('seed')!r}") from None

    @property
    def max_total_occupation(self) -> int:
        return int(self.get("max_total_occupation"))

    @property
    def p_target(self) -> float:
        return float(self.get("p_target"))

    @property
    def xd_threshold(self) -> float:
        return float(self.get("xd_threshold"))

    @property
    def tau_factor(self) -> float:
        return float(self.get("tau_factor"))

    def time_list(self, key: str) -> tuple[float, ...]:
        return tuple(parse_quantity(part.strip(), "time", key)
                     for part in self.get(key).split(",") if part.strip())

    @property
    def sweep_initial_states(self) -> tuple[tuple[int, int], ...]:
        out = []
        for part in self.get("sweep_initial_states").split(","):
            part = part.strip()
            if not part:
                continue
            if len(part) != 2 or not part.isdigit():
                raise ConfigError(f"sweep_initial_states: expected two digits like '10', got {part!r}")
            out.append((int(part[0]), int(part[1])))
        return tuple(out)

    def manifest_text(self) -> str:
        lines = ["# resolved run configuration (valid as a config file)"]
        lines.extend(f"{k} = {v}" for k, v in self.values)
        return "\n".join(lines) + "\n"
