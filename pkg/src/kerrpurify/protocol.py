"""Entanglement purification engine for the ideal-source protocol.

Two photon pairs (c1d1 held by Alice/Bob for the next round, c2d2 measured
out) pass through one parity-check QND detector per side.  The engine
enumerates every homodyne-outcome branch with exact probabilities, applies
the keep/discard/correct rules, performs the diagonal-basis measurement on
the second pair, and reports the kept-pair fidelity and success probability.

Two rule sets are supported: ``IDEAL_PHASE`` identifies the θ₂ and θ₀
outcomes (θ₂ = θ₀ + 2π), which is the idealization behind the closed-form
fidelity gain f²/(f²+(1−f)²); ``WEAK_KERR`` treats all phases as
distinguishable, which is the physically realized regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .hilbert import (DensityMatrix, HilbertSpace, LinearOperator, PureState,
                      apply, contract, fidelity, tensor)
from .homodyne import PhaseBinSet
from .kerr import (PhaseShiftTable, PolarizationEncoding,
                   detector_phase_for_polarizations, standard_encoding)

# Qubit basis convention: index 0 = |H>, index 1 = |V>.
POL_INDEX = {"H": 0, "V": 1}
INDEX_POL = {0: "H", 1: "V"}

PLUS = np.array([1.0, 1.0]) / math.sqrt(2.0)
MINUS = np.array([1.0, -1.0]) / math.sqrt(2.0)

PAIR_LABELS = ("c1", "d1", "c2", "d2")


class RuleSet(Enum):
    WEAK_KERR = "weak_kerr"
    IDEAL_PHASE = "ideal_phase"


class Action(Enum):
    KEEP_AS_IS = "keep_as_is"
    KEEP_AFTER_BITFLIP = "keep_after_bitflip"
    KEEP_AFTER_BITFLIP_ON_KEPT_PAIR = "keep_after_bitflip_on_kept_pair"
    DISCARD = "discard"


KEEP_ACTIONS = (Action.KEEP_AS_IS, Action.KEEP_AFTER_BITFLIP,
                Action.KEEP_AFTER_BITFLIP_ON_KEPT_PAIR)


def qubit_space(label: str) -> HilbertSpace:
    return HilbertSpace(((label, 2),))


def polarization_ket(label: str, pol: str) -> PureState:
    amps = np.zeros(2, dtype=complex)
    amps[POL_INDEX[pol]] = 1.0
    return PureState(qubit_space(label), amps)


def sigma_x(label: str) -> LinearOperator:
    return LinearOperator(qubit_space(label), np.array([[0, 1], [1, 0]], dtype=complex),
                          unitary=True)


def sigma_z(label: str) -> LinearOperator:
    return LinearOperator(qubit_space(label), np.array([[1, 0], [0, -1]], dtype=complex),
                          unitary=True)


def bell_phi(c: str, d: str) -> PureState:
    """(|HH⟩ + |VV⟩)/√2 on labels (c, d)."""
    space = HilbertSpace(((c, 2), (d, 2)))
    amps = np.zeros(4, dtype=complex)
    amps[space.index_of({c: 0, d: 0})] = 1.0
    amps[space.index_of({c: 1, d: 1})] = 1.0
    return PureState(space, amps / math.sqrt(2.0))


def bell_psi(c: str, d: str) -> PureState:
    """(|HV⟩ + |VH⟩)/√2 on labels (c, d)."""
    space = HilbertSpace(((c, 2), (d, 2)))
    amps = np.zeros(4, dtype=complex)
    amps[space.index_of({c: 0, d: 1})] = 1.0
    amps[space.index_of({c: 1, d: 0})] = 1.0
    return PureState(space, amps / math.sqrt(2.0))


def two_pair_space() -> HilbertSpace:
    return HilbertSpace((("c1", 2), ("d1", 2), ("c2", 2), ("d2", 2)))


@dataclass(frozen=True)
class MixedPairSpec:
    """Bit-flip mixture weight f of the target Bell state, f in (0.5, 1]."""

    f: float

    def __post_init__(self):
        if not 0.5 < self.f <= 1.0:
            raise ValueError(f"f must be in (0.5, 1], got {self.f}")


def make_mixed_pair(spec: MixedPairSpec, c: str = "c", d: str = "d") -> DensityMatrix:
    """f|Φ†⟩⟨Φ†| + (1−f)|Ψ†⟩⟨Ψ†| on labels (c, d)."""
    phi = bell_phi(c, d).to_density()
    psi = bell_psi(c, d).to_density()
    return DensityMatrix(phi.space, spec.f * phi.entries + (1.0 - spec.f) * psi.entries)


@dataclass
class ProtocolBranch:
    """One (θ_alice, θ_bob) post-selection branch of a pure input component."""

    theta_alice: float
    theta_bob: float
    probability: float
    post_state: PureState
    action: Action | None = None
    corrections_applied: tuple[tuple[str, str], ...] = ()


@dataclass
class LedgerRow:
    component: str
    component_weight: float
    theta_alice: float
    theta_bob: float
    probability: float
    action: str
    final_fidelity: float | None


@dataclass
class RoundResult:
    f_in: float
    rule_set: RuleSet
    kept_fidelity: float
    success_probability: float
    branch_ledger: list[LedgerRow]
    trials: int | None = None
    kept_trials: int | None = None
    fidelity_stderr: float | None = None
    success_stderr: float | None = None


def f_ideal(f: float) -> float:
    """Closed-form one-round fidelity map f²/(f² + (1−f)²)."""
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"f must be in [0, 1], got {f}")
    return f ** 2 / (f ** 2 + (1.0 - f) ** 2)


def _identify(theta: float, table: PhaseShiftTable, rule_set: RuleSet) -> float:
    """Under IDEAL_PHASE, θ₂ is indistinguishable from θ₀ (θ₂ = θ₀ + 2π)."""
    if rule_set is RuleSet.IDEAL_PHASE and theta == table.theta2:
        return table.theta0
    return theta


def qnd_branches(state: PureState, table: PhaseShiftTable,
                 enc: PolarizationEncoding | None = None,
                 rule_set: RuleSet = RuleSet.WEAK_KERR) -> list[ProtocolBranch]:
    """Group the state's basis components by (θ_alice, θ_bob) homodyne outcome.

    Alice's detector sees (c1, c2), Bob's sees (d1, d2).  Under IDEAL_PHASE
    the θ₂ and θ₀ outcome groups are merged coherently before renormalizing.
    """
    enc = enc or standard_encoding()
    space = state.space
    missing = set(PAIR_LABELS) - set(space.labels)
    if missing:
        raise ValueError(f"state is missing modes {sorted(missing)}")
    psi = state.normalize().amplitudes
    groups: dict[tuple[float, float], np.ndarray] = {}
    dims = space.dims
    for flat, amp in enumerate(psi):
        if amp == 0:
            continue
        idx = np.unravel_index(flat, dims)
        pol = {lbl: INDEX_POL[idx[space.position(lbl)]] for lbl in PAIR_LABELS}
        th_a = detector_phase_for_polarizations(pol["c1"], pol["c2"], enc, table)
        th_b = detector_phase_for_polarizations(pol["d1"], pol["d2"], enc, table)
        key = (_identify(th_a, table, rule_set), _identify(th_b, table, rule_set))
        if key not in groups:
            groups[key] = np.zeros_like(psi)
        groups[key][flat] = amp
    branches = []
    for (th_a, th_b), amps in sorted(groups.items()):
        p = float(np.vdot(amps, amps).real)
        branches.append(ProtocolBranch(
            theta_alice=th_a, theta_bob=th_b, probability=p,
            post_state=PureState(space, amps / math.sqrt(p))))
    return branches


def decide(branch: ProtocolBranch, table: PhaseShiftTable,
           rule_set: RuleSet = RuleSet.WEAK_KERR) -> Action:
    """Keep matched-phase branches (bit-flipping the θ₀/θ₂ ones), discard the rest."""
    th_a = _identify(branch.theta_alice, table, rule_set)
    th_b = _identify(branch.theta_bob, table, rule_set)
    known = {table.theta0, table.theta1, table.theta2}
    if th_a not in known or th_b not in known:
        raise ValueError(f"phase pair ({th_a}, {th_b}) not drawn from the table")
    if th_a != th_b:
        return Action.DISCARD
    if th_a == table.theta1:
        return Action.KEEP_AS_IS
    return Action.KEEP_AFTER_BITFLIP_ON_KEPT_PAIR


def apply_action(state: PureState, action: Action) -> tuple[PureState, tuple[tuple[str, str], ...]]:
    """Perform the bit-flip corrections prescribed by the decision."""
    if action is Action.KEEP_AS_IS:
        return state, ()
    if action is Action.KEEP_AFTER_BITFLIP_ON_KEPT_PAIR:
        out = apply(sigma_x("d1"), apply(sigma_x("c1"), state))
        return out, (("sigma_x", "c1"), ("sigma_x", "d1"))
    if action is Action.KEEP_AFTER_BITFLIP:
        out = apply(sigma_x("d2"), apply(sigma_x("c2"), state))
        return out, (("sigma_x", "c2"), ("sigma_x", "d2"))
    raise ValueError(f"no correction for action {action}")


def measure_and_correct(state: PureState) -> list[tuple[float, PureState]]:
    """Diagonal-basis measurement of c2, d2 with the σ_z repair rule.

    Enumerates all four (±, ±) outcomes; when the outcomes differ, σ_z is
    applied to c1.  Returns (probability, kept-pair state on c1 d1) for each
    outcome with nonzero probability.
    """
    psi = state.normalize()
    outcomes = []
    for s_c, vec_c in (("+", PLUS), ("-", MINUS)):
        for s_d, vec_d in (("+", PLUS), ("-", MINUS)):
            collapsed = contract(contract(psi, "c2", vec_c), "d2", vec_d)
            p = collapsed.norm() ** 2
            if p < 1e-15:
                continue
            pair = collapsed.normalize()
            if s_c != s_d:
                pair = apply(sigma_z("c1"), pair)
            outcomes.append((p, pair))
    return outcomes


def _components(f: float) -> list[tuple[str, float, PureState]]:
    phi1, psi1 = bell_phi("c1", "d1"), bell_psi("c1", "d1")
    phi2, psi2 = bell_phi("c2", "d2"), bell_psi("c2", "d2")
    comps = [
        ("Phi+Phi+", f * f, tensor(phi1, phi2)),
        ("Phi+Psi+", f * (1 - f), tensor(phi1, psi2)),
        ("Psi+Phi+", (1 - f) * f, tensor(psi1, phi2)),
        ("Psi+Psi+", (1 - f) * (1 - f), tensor(psi1, psi2)),
    ]
    return [(name, w, st) for name, w, st in comps if w > 0]


def purify_exact(f: float, table: PhaseShiftTable,
                 enc: PolarizationEncoding | None = None,
                 rule_set: RuleSet = RuleSet.IDEAL_PHASE) -> RoundResult:
    """Exact branch enumeration of one purification round on the f-mixture."""
    enc = enc or standard_encoding()
    target = bell_phi("c1", "d1")
    ledger: list[LedgerRow] = []
    success = 0.0
    fid_num = 0.0
    for name, weight, state in _components(f):
        for branch in qnd_branches(state, table, enc, rule_set):
            action = decide(branch, table, rule_set)
            final_fid = None
            if action in KEEP_ACTIONS:
                corrected, _ = apply_action(branch.post_state, action)
                final_fid = sum(p * fidelity(pair, target)
                                for p, pair in measure_and_correct(corrected))
                success += weight * branch.probability
                fid_num += weight * branch.probability * final_fid
            ledger.append(LedgerRow(name, weight, branch.theta_alice, branch.theta_bob,
                                    branch.probability, action.value, final_fid))
    kept_fid = fid_num / success if success > 0 else 0.0
    return RoundResult(f_in=f, rule_set=rule_set, kept_fidelity=kept_fid,
                       success_probability=success, branch_ledger=ledger)


def iterate_rounds(f: float, rounds: int, table: PhaseShiftTable,
                   enc: PolarizationEncoding | None = None,
                   rule_set: RuleSet = RuleSet.IDEAL_PHASE) -> list[RoundResult]:
    """Feed each round's kept fidelity back in as the next round's mixture weight."""
    results = []
    for _ in range(rounds):
        res = purify_exact(f, table, enc, rule_set)
        results.append(res)
        f = res.kept_fidelity
    return results


def _protocol_bins(table: PhaseShiftTable, rule_set: RuleSet, alpha: float) -> PhaseBinSet:
    """Classifier bins over the phases an ideal-source detector can emit."""
    thetas = [table.theta0, table.theta1]
    labels = ["theta0", "theta1"]
    if rule_set is RuleSet.WEAK_KERR:
        thetas.append(table.theta2)
        labels.append("theta2")
    return PhaseBinSet(alpha=alpha, bins=tuple(zip(labels, thetas)))


def _branch_fate(branch: ProtocolBranch, assigned_a: float, assigned_b: float,
                 table: PhaseShiftTable, rule_set: RuleSet,
                 target: PureState) -> tuple[bool, list[tuple[float, float]]]:
    """Outcome of keeping/correcting a branch as if its phases were the assigned ones.

    Returns (kept, [(outcome probability, kept-pair fidelity)]).
    """
    proxy = ProtocolBranch(assigned_a, assigned_b, branch.probability, branch.post_state)
    action = decide(proxy, table, rule_set)
    if action is Action.DISCARD:
        return False, []
    corrected, _ = apply_action(branch.post_state, action)
    return True, [(p, fidelity(pair, target)) for p, pair in measure_and_correct(corrected)]


def purify_with_confusion(f: float, table: PhaseShiftTable, alpha: float,
                          enc: PolarizationEncoding | None = None,
                          rule_set: RuleSet = RuleSet.IDEAL_PHASE) -> RoundResult:
    """Exact round statistics with the finite-α homodyne confusion matrix folded in."""
    from .homodyne import confusion_matrix

    enc = enc or standard_encoding()
    bins = _protocol_bins(table, rule_set, alpha)
    m = confusion_matrix(bins)
    target = bell_phi("c1", "d1")
    success = 0.0
    fid_num = 0.0
    ledger: list[LedgerRow] = []
    for name, weight, state in _components(f):
        for branch in qnd_branches(state, table, enc, rule_set):
            a = bins.index_for_theta(branch.theta_alice)
            b = bins.index_for_theta(branch.theta_bob)
            branch_fid_num = 0.0
            branch_kept = 0.0
            for i, th_i in enumerate(bins.thetas):
                for j, th_j in enumerate(bins.thetas):
                    p_assign = m[a, i] * m[b, j]
                    if p_assign == 0.0:
                        continue
                    kept, fates = _branch_fate(branch, th_i, th_j, table, rule_set, target)
                    if not kept:
                        continue
                    branch_kept += p_assign
                    branch_fid_num += p_assign * sum(p * fd for p, fd in fates)
            success += weight * branch.probability * branch_kept
            fid_num += weight * branch.probability * branch_fid_num
            ledger.append(LedgerRow(name, weight, branch.theta_alice, branch.theta_bob,
                                    branch.probability, "confusion-weighted",
                                    branch_fid_num / branch_kept if branch_kept > 0 else None))
    kept_fid = fid_num / success if success > 0 else 0.0
    return RoundResult(f_in=f, rule_set=rule_set, kept_fidelity=kept_fid,
                       success_probability=success, branch_ledger=ledger)


def monte_carlo_round(f: float, table: PhaseShiftTable, trials: int,
                      rng: np.random.Generator,
                      alpha: float = math.inf,
                      enc: PolarizationEncoding | None = None,
                      rule_set: RuleSet = RuleSet.IDEAL_PHASE) -> RoundResult:
    """Stochastic execution of one round; finite α routes every trial's phase
    readout through a sampled homodyne X value."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    enc = enc or standard_encoding()
    target = bell_phi("c1", "d1")
    comps = _components(f)
    weights = np.array([w for _, w, _ in comps])
    weights = weights / weights.sum()
    comp_branches = [qnd_branches(state, table, enc, rule_set) for _, _, state in comps]

    finite = math.isfinite(alpha)
    bins = _protocol_bins(table, rule_set, alpha) if finite else None
    centers = bins.centers() if finite else None

    fate_cache: dict[tuple[int, int, int, int], tuple[bool, np.ndarray, np.ndarray]] = {}

    def fate(ci: int, bi: int, ai: int, aj: int):
        key = (ci, bi, ai, aj)
        if key not in fate_cache:
            branch = comp_branches[ci][bi]
            th_i = bins.thetas[ai] if finite else branch.theta_alice
            th_j = bins.thetas[aj] if finite else branch.theta_bob
            kept, fates = _branch_fate(branch, th_i, th_j, table, rule_set, target)
            probs = np.array([p for p, _ in fates]) if kept else np.zeros(0)
            fids = np.array([fd for _, fd in fates]) if kept else np.zeros(0)
            if kept:
                probs = probs / probs.sum()
            fate_cache[key] = (kept, probs, fids)
        return fate_cache[key]

    comp_idx = rng.choice(len(comps), size=trials, p=weights)
    kept_count = 0
    fid_sum = 0.0
    fid_sq_sum = 0.0
    for ci in range(len(comps)):
        n_ci = int(np.sum(comp_idx == ci))
        if n_ci == 0:
            continue
        branches = comp_branches[ci]
        bprobs = np.array([b.probability for b in branches])
        bprobs = bprobs / bprobs.sum()
        branch_idx = rng.choice(len(branches), size=n_ci, p=bprobs)
        for bi in range(len(branches)):
            n_bi = int(np.sum(branch_idx == bi))
            if n_bi == 0:
                continue
            branch = branches[bi]
            if finite:
                mu_a = 2.0 * alpha * math.cos(branch.theta_alice)
                mu_b = 2.0 * alpha * math.cos(branch.theta_bob)
                xa = rng.normal(mu_a, 1.0, size=n_bi)
                xb = rng.normal(mu_b, 1.0, size=n_bi)
                assigned_a = np.argmin(np.abs(centers[None, :] - xa[:, None]), axis=1)
                assigned_b = np.argmin(np.abs(centers[None, :] - xb[:, None]), axis=1)
                pairs = np.stack([assigned_a, assigned_b], axis=1)
            else:
                pairs = np.zeros((n_bi, 2), dtype=int)
            uniq, counts = np.unique(pairs, axis=0, return_counts=True)
            for (ai, aj), cnt in zip(uniq, counts):
                kept, probs, fids = fate(ci, bi, int(ai), int(aj))
                if not kept:
                    continue
                kept_count += int(cnt)
                outs = rng.choice(len(probs), size=int(cnt), p=probs)
                vals = fids[outs]
                fid_sum += float(vals.sum())
                fid_sq_sum += float((vals ** 2).sum())

    success = kept_count / trials
    kept_fid = fid_sum / kept_count if kept_count else 0.0
    fid_var = max(fid_sq_sum / kept_count - kept_fid ** 2, 0.0) if kept_count else 0.0
    return RoundResult(
        f_in=f, rule_set=rule_set, kept_fidelity=kept_fid,
        success_probability=success, branch_ledger=[], trials=trials,
        kept_trials=kept_count,
        fidelity_stderr=math.sqrt(fid_var / kept_count) if kept_count else None,
        success_stderr=math.sqrt(success * (1 - success) / trials))
