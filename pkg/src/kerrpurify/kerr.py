"""Physics of one QND parity-check detector.

Covers the cross-Kerr coefficient from circuit parameters, the steady-state
reflection coefficient of a readout resonator holding n photons, the phase
accumulated by a probe reflecting off two cascaded resonators, and the
polarization-to-Fock encoding used by the purification protocol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class KerrSystemParams:
    """Circuit parameters, all angular frequencies in rad/s, decays in 1/s.

    delta1 is carried for completeness but enters no implemented formula.
    """

    g1: float
    g2: float
    omega_c: float
    delta1: float
    delta2: float
    kappa1: float
    kappa2: float

    def __post_init__(self):
        for name in ("g1", "g2", "omega_c", "delta2", "kappa1", "kappa2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


def reference_params(kappa1_inv: float = 20e-6, kappa2_inv: float = 10e-9) -> KerrSystemParams:
    """The g/2π = 300 MHz, Ω_c/2π = δ₂/2π = 1.5 GHz operating point."""
    return KerrSystemParams(
        g1=TWO_PI * 300e6,
        g2=TWO_PI * 300e6,
        omega_c=TWO_PI * 1.5e9,
        delta1=0.0,
        delta2=TWO_PI * 1.5e9,
        kappa1=1.0 / kappa1_inv,
        kappa2=1.0 / kappa2_inv,
    )


def chi_from_params(p: KerrSystemParams) -> float:
    """Cross-Kerr coefficient −g₁²g₂²/(δ₂Ω_c²), signed, in rad/s."""
    if p.omega_c == 0 or p.delta2 == 0:
        raise ValueError("omega_c and delta2 must be nonzero")
    return -(p.g1 ** 2) * (p.g2 ** 2) / (p.delta2 * p.omega_c ** 2)


@dataclass(frozen=True)
class RegimeViolation:
    condition: str
    ratio: float
    threshold: float

    def __str__(self):
        return f"{self.condition}: ratio {self.ratio:.4g} vs threshold {self.threshold:.4g}"


# Dispersive-regime gates.  The source conditions are strict inequalities
# ("much less than"); these numeric thresholds are explicit artifact choices.
G1_OMEGA_SQ_MAX = 0.1
G2_DELTA2_MAX = 0.25
KAPPA2_CHI_FACTOR = 10.0


def validate_regime(p: KerrSystemParams, max_n: int) -> list[RegimeViolation]:
    """Diagnostic check of the weak-coupling / fast-readout conditions."""
    violations = []
    r1 = abs(p.g1 / p.omega_c) ** 2
    if r1 > G1_OMEGA_SQ_MAX:
        violations.append(RegimeViolation("|g1/omega_c|^2 << 1", r1, G1_OMEGA_SQ_MAX))
    r2 = abs(p.g2) / abs(p.delta2)
    if r2 > G2_DELTA2_MAX:
        violations.append(RegimeViolation("|g2|/|delta2| << 1", r2, G2_DELTA2_MAX))
    chi = abs(chi_from_params(p))
    if max_n > 0 and chi > 0:
        need = KAPPA2_CHI_FACTOR * chi * max_n
        if p.kappa2 < need:
            violations.append(RegimeViolation(
                "kappa2 >> chi*n", p.kappa2 / (chi * max_n), KAPPA2_CHI_FACTOR))
    return violations


def reflection(n: int, chi: float, kappa2: float) -> complex:
    """Steady-state reflection coefficient (iχn − κ₂/2)/(iχn + κ₂/2)."""
    if kappa2 <= 0:
        raise ValueError("kappa2 must be positive")
    num = 1j * chi * n - kappa2 / 2.0
    den = 1j * chi * n + kappa2 / 2.0
    return num / den


def canonical_phase(theta: float) -> float:
    """Wrap an angle into (−π, π]."""
    out = math.fmod(theta, TWO_PI)
    if out > math.pi:
        out -= TWO_PI
    elif out <= -math.pi:
        out += TWO_PI
    return out + 0.0  # normalize -0.0


def cascade_phase(n1: int, n2: int, chi: float, kappa2: float) -> float:
    """arg[r₁(n₁)·r₂(n₂)] for two identical cascaded detectors, in (−π, π]."""
    r = reflection(n1, chi, kappa2) * reflection(n2, chi, kappa2)
    return canonical_phase(math.atan2(r.imag, r.real))


@dataclass(frozen=True)
class PhaseShiftTable:
    """Map from per-detector Fock occupations (n1, n2) to probe phase."""

    chi: float
    kappa2: float
    entries: dict[tuple[int, int], float] = field(hash=False)

    def theta(self, n1: int, n2: int) -> float:
        try:
            return self.entries[(n1, n2)]
        except KeyError:
            raise KeyError(f"no entry for occupations ({n1}, {n2})") from None

    @property
    def theta0(self) -> float:
        return self.theta(0, 0)

    @property
    def theta1(self) -> float:
        return self.theta(1, 0)

    @property
    def theta2(self) -> float:
        return self.theta(1, 1)

    @property
    def theta3(self) -> float:
        return self.theta(2, 0)

    def distinct_thetas(self) -> list[float]:
        return sorted(set(self.entries.values()))

    def rows(self) -> list[tuple[int, int, float]]:
        return [(n1, n2, th) for (n1, n2), th in sorted(self.entries.items())]


def build_phase_table(p: KerrSystemParams, max_total: int = 2) -> PhaseShiftTable:
    """Phase table over all occupation pairs with n1 + n2 ≤ max_total."""
    chi = chi_from_params(p)
    entries = {}
    for n1 in range(max_total + 1):
        for n2 in range(max_total + 1 - n1):
            entries[(n1, n2)] = cascade_phase(n1, n2, chi, p.kappa2)
    return PhaseShiftTable(chi=chi, kappa2=p.kappa2, entries=entries)


@dataclass(frozen=True)
class PolarizationEncoding:
    """Per-mode map from polarization {H, V} to detector occupation {0, 1}.

    mode1/mode2 are the two storage slots of one parity-check detector
    (pair-1 photon and pair-2 photon).
    """

    mode1: tuple[tuple[str, int], ...] = (("H", 1), ("V", 0))
    mode2: tuple[tuple[str, int], ...] = (("H", 0), ("V", 1))

    def __post_init__(self):
        for name, mapping in (("mode1", self.mode1), ("mode2", self.mode2)):
            m = dict(mapping)
            if set(m.keys()) != {"H", "V"} or set(m.values()) != {0, 1}:
                raise ValueError(f"{name} encoding must be a bijection H/V -> 0/1, got {m}")

    def occupation(self, mode: int, pol: str) -> int:
        mapping = dict(self.mode1 if mode == 1 else self.mode2)
        return mapping[pol]


def standard_encoding() -> PolarizationEncoding:
    """Pair-1 photons: H→1, V→0.  Pair-2 photons: H→0, V→1."""
    return PolarizationEncoding()


def detector_phase_for_polarizations(pol1: str, pol2: str,
                                     enc: PolarizationEncoding,
                                     table: PhaseShiftTable) -> float:
    n1 = enc.occupation(1, pol1)
    n2 = enc.occupation(2, pol2)
    return table.theta(n1, n2)
