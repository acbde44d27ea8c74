"""Purification branch enumeration for the polarization-spatial (PDC) source.

States are kept as sparse maps from 8-mode occupation tuples to amplitudes
(modes: two spatial ports x two polarizations per side), built by applying
sums of paired creation operators to vacuum.  This is exact for the photon
numbers involved (at most two per mode) and avoids a dense 3^8 space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .kerr import PhaseShiftTable

MODES = ("c1H", "c1V", "c2H", "c2V", "d1H", "d1V", "d2H", "d2V")
MODE_INDEX = {m: i for i, m in enumerate(MODES)}

FockVector = dict[tuple[int, ...], complex]

# Paired creation terms of the source state, one photon to each side.
NO_ERROR_PAIRS = (("c1H", "d1H"), ("c1V", "d1V"), ("c2H", "d2H"), ("c2V", "d2V"))
# A polarization bit flip on Alice's photon swaps H and V on the c side.
ONE_ERROR_PAIRS = (("c1V", "d1H"), ("c1H", "d1V"), ("c2V", "d2H"), ("c2H", "d2V"))


def vacuum() -> FockVector:
    return {(0,) * len(MODES): 1.0 + 0.0j}


def create(state: FockVector, mode: str) -> FockVector:
    """Apply a bosonic creation operator (amplitude factor √(n+1))."""
    i = MODE_INDEX[mode]
    out: FockVector = {}
    for occ, amp in state.items():
        new = list(occ)
        new[i] += 1
        key = tuple(new)
        out[key] = out.get(key, 0.0) + amp * math.sqrt(new[i])
    return out


def apply_pair_sum(state: FockVector, pairs) -> FockVector:
    """Apply a sum of two-mode creation products Σ a†b† to a state."""
    out: FockVector = {}
    for a, b in pairs:
        term = create(create(state, a), b)
        for occ, amp in term.items():
            out[occ] = out.get(occ, 0.0) + amp
    return {occ: amp for occ, amp in out.items() if amp != 0}


def norm2(state: FockVector) -> float:
    return sum(abs(a) ** 2 for a in state.values())


def scale(state: FockVector, factor: complex) -> FockVector:
    return {occ: amp * factor for occ, amp in state.items()}


def source_state(pairs: int = 1, error_count: int = 0) -> FockVector:
    """Source emission with the given number of pairs and bit-flipped pairs."""
    if pairs not in (1, 2):
        raise ValueError("pairs must be 1 or 2")
    if not 0 <= error_count <= pairs:
        raise ValueError(f"error_count must be in [0, {pairs}]")
    state = vacuum()
    for _ in range(pairs - error_count):
        state = apply_pair_sum(state, NO_ERROR_PAIRS)
    for _ in range(error_count):
        state = apply_pair_sum(state, ONE_ERROR_PAIRS)
    return state


def detector_occupations(occ: tuple[int, ...]) -> tuple[tuple[int, int], tuple[int, int]]:
    """Storage-resonator photon numbers seen by Alice's and Bob's detectors.

    Slot 1 counts spatial-1 H photons, slot 2 counts spatial-2 V photons
    (the per-port encodings are opposite).
    """
    alice = (occ[MODE_INDEX["c1H"]], occ[MODE_INDEX["c2V"]])
    bob = (occ[MODE_INDEX["d1H"]], occ[MODE_INDEX["d2V"]])
    return alice, bob


# Coupler routing per (spatial port, polarization): H from port 1 and V from
# port 2 exit at output 2; the other two combinations exit at output 1.
_EXIT = {("1", "H"): "2", ("1", "V"): "1", ("2", "H"): "1", ("2", "V"): "2"}


def exit_ports(occ: tuple[int, ...]) -> dict[str, set[str]]:
    """Output ports receiving photons on each side, per the coupler PBS rule."""
    ports: dict[str, set[str]] = {"c": set(), "d": set()}
    for mode, n in zip(MODES, occ):
        if n == 0:
            continue
        side, spatial, pol = mode[0], mode[1], mode[2]
        ports[side].add(_EXIT[(spatial, pol)])
    return ports


def bitflip_side(state: FockVector, side: str) -> FockVector:
    """σ_x on one party's photon polarization: swap H/V occupations in both ports."""
    out: FockVector = {}
    for occ, amp in state.items():
        new = list(occ)
        for spatial in ("1", "2"):
            i = MODE_INDEX[f"{side}{spatial}H"]
            j = MODE_INDEX[f"{side}{spatial}V"]
            new[i], new[j] = new[j], new[i]
        out[tuple(new)] = amp
    return out


@dataclass
class PdcBranch:
    theta_alice: float
    theta_bob: float
    weight: float
    post_state: FockVector
    action: str
    output_port: str | None = None


@dataclass
class PdcRoundResult:
    branches: list[PdcBranch]
    kept_weight: float


def _uniform_port(state: FockVector) -> str | None:
    """Output pair label when every term routes both photons to matching ports."""
    seen = set()
    for occ in state:
        ports = exit_ports(occ)
        if len(ports["c"]) != 1 or ports["c"] != ports["d"]:
            return None
        seen.add(next(iter(ports["c"])))
    if len(seen) == 1:
        p = seen.pop()
        return f"c{p}d{p}"
    return None


def enumerate_branches(state: FockVector, table: PhaseShiftTable) -> list[PdcBranch]:
    """Group a source state by (θ_alice, θ_bob) with exact squared-norm weights."""
    total = norm2(state)
    groups: dict[tuple[float, float], FockVector] = {}
    for occ, amp in state.items():
        (a1, a2), (b1, b2) = detector_occupations(occ)
        key = (table.theta(a1, a2), table.theta(b1, b2))
        groups.setdefault(key, {})[occ] = amp
    branches = []
    for (th_a, th_b), comp in sorted(groups.items()):
        w = norm2(comp) / total
        post = scale(comp, 1.0 / math.sqrt(norm2(comp)))
        branches.append(PdcBranch(th_a, th_b, w, post, action="", output_port=None))
    return branches


def pdc_single_pair_round(table: PhaseShiftTable, error: bool = False) -> list[PdcBranch]:
    """One emitted pair through both detectors.

    Without an error the two matched-phase branches are kept and routed to a
    definite output pair; with a bit-flip error the mismatched branches are
    repaired by a polarization flip on Alice's photon.
    """
    state = source_state(pairs=1, error_count=1 if error else 0)
    branches = enumerate_branches(state, table)
    for br in branches:
        if br.theta_alice == br.theta_bob:
            br.action = "keep"
            br.output_port = _uniform_port(br.post_state)
        else:
            br.action = "bitflip_c"
            br.post_state = bitflip_side(br.post_state, "c")
            br.output_port = _uniform_port(br.post_state)
    return branches


def pdc_two_pair_round(error_count: int, table: PhaseShiftTable) -> PdcRoundResult:
    """Two emitted pairs through both detectors with the keep/discard decision.

    Matched Alice/Bob phases are kept (a double error in the θ₁ branch is
    indistinguishable from no error and feeds the next purification stage);
    every mismatched branch is discarded.
    """
    if error_count not in (0, 1, 2):
        raise ValueError(f"error_count must be 0, 1 or 2, got {error_count}")
    state = source_state(pairs=2, error_count=error_count)
    branches = enumerate_branches(state, table)
    kept = 0.0
    for br in branches:
        if br.theta_alice == br.theta_bob:
            br.action = "keep"
            br.output_port = _uniform_port(br.post_state)
            kept += br.weight
        else:
            br.action = "discard"
    return PdcRoundResult(branches=branches, kept_weight=kept)
