"""Open-system dynamics of the storage resonators during the QND window.

Fixed-step RK4 integration of dρ/dt = i[ρ, H] + Σ κ·L[o]ρ with the loss
dissipator L[o]ρ = (2oρo† − o†oρ − ρo†o)/2.  In the rotating frame H = 0;
the measurement window is τ = tau_factor/κ₂, so the readout decay enters
only through the duration of the exposure.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .hilbert import DensityMatrix, HilbertSpace

log = logging.getLogger(__name__)

DEFAULT_CUTOFF = 3  # Fock occupations 0..2, exact for the protocol states
DEFAULT_STEPS = 1000


class IntegrationUnstableError(RuntimeError):
    pass


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)


@dataclass(frozen=True)
class LindbladModel:
    space: HilbertSpace
    hamiltonian: np.ndarray | None
    collapse_ops: tuple[tuple[np.ndarray, float], ...] = field(hash=False)

    def __post_init__(self):
        d = self.space.dim
        if self.hamiltonian is not None and self.hamiltonian.shape != (d, d):
            raise ValueError("hamiltonian dimension mismatch")
        for op, rate in self.collapse_ops:
            if op.shape != (d, d):
                raise ValueError("collapse operator dimension mismatch")
            if rate < 0:
                raise ValueError(f"collapse rate must be >= 0, got {rate}")


def two_mode_loss_model(kappa1: float, cutoff: int = DEFAULT_CUTOFF,
                        hamiltonian: np.ndarray | None = None) -> LindbladModel:
    """Two storage modes A1, A2 with equal photon loss at rate kappa1, H = 0."""
    space = HilbertSpace((("A1", cutoff), ("A2", cutoff)))
    a = annihilation(cutoff)
    eye = np.eye(cutoff)
    a1 = np.kron(a, eye)
    a2 = np.kron(eye, a)
    return LindbladModel(space=space, hamiltonian=hamiltonian,
                         collapse_ops=((a1, kappa1), (a2, kappa1)))


def fock_state(space: HilbertSpace, occupations: tuple[int, ...]) -> DensityMatrix:
    if len(occupations) != len(space.factors):
        raise ValueError("one occupation per factor required")
    idx = space.index_of({lbl: n for (lbl, _), n in zip(space.factors, occupations)})
    rho = np.zeros((space.dim, space.dim), dtype=complex)
    rho[idx, idx] = 1.0
    return DensityMatrix(space, rho)


def lindblad_rhs(rho: np.ndarray, model: LindbladModel) -> np.ndarray:
    """i[ρ, H] + Σ κ(2oρo† − o†oρ − ρo†o)/2."""
    if rho.shape != (model.space.dim, model.space.dim):
        raise ValueError("density matrix dimension mismatch")
    if model.hamiltonian is not None:
        out = 1j * (rho @ model.hamiltonian - model.hamiltonian @ rho)
    else:
        out = np.zeros_like(rho)
    for op, rate in model.collapse_ops:
        od = op.conj().T
        odo = od @ op
        out = out + rate * (2.0 * op @ rho @ od - odo @ rho - rho @ odo) / 2.0
    return out


@dataclass
class EvolveDiagnostics:
    trace_drift: float
    min_eigenvalue: float
    steps: int


def evolve_with_diagnostics(rho0: DensityMatrix, model: LindbladModel, tau: float,
                            dt: float | None = None) -> tuple[DensityMatrix, EvolveDiagnostics]:
    """Fixed-step RK4 integration over [0, tau] with drift accounting.

    The output is re-symmetrized and trace-renormalized; the pre-repair
    drift is reported, never silently discarded.
    """
    if tau < 0:
        raise ValueError("tau must be >= 0")
    if tau == 0:
        return rho0, EvolveDiagnostics(0.0, rho0.min_eigenvalue(), 0)
    if dt is None:
        dt = tau / DEFAULT_STEPS
    if dt <= 0:
        raise ValueError("dt must be positive")
    steps = max(1, int(round(tau / dt)))
    h = tau / steps
    rho = rho0.entries.copy()
    for _ in range(steps):
        k1 = lindblad_rhs(rho, model)
        k2 = lindblad_rhs(rho + 0.5 * h * k1, model)
        k3 = lindblad_rhs(rho + 0.5 * h * k2, model)
        k4 = lindblad_rhs(rho + h * k3, model)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    trace_drift = abs(np.trace(rho).real - 1.0) + abs(np.trace(rho).imag)
    rho = (rho + rho.conj().T) / 2.0
    min_eig = float(np.linalg.eigvalsh(rho).min())
    if min_eig < -1e-6:
        raise IntegrationUnstableError(
            f"density matrix drifted non-positive (min eigenvalue {min_eig})")
    rho = rho / np.trace(rho).real
    diag = EvolveDiagnostics(trace_drift=trace_drift, min_eigenvalue=min_eig, steps=steps)
    log.debug("evolve: steps=%d trace_drift=%.3e min_eig=%.3e", steps, trace_drift, min_eig)
    return DensityMatrix(rho0.space, rho, validate=False), diag


def evolve(rho0: DensityMatrix, model: LindbladModel, tau: float,
           dt: float | None = None) -> DensityMatrix:
    rho, _ = evolve_with_diagnostics(rho0, model, tau, dt)
    return rho


def storage_fidelity(initial: tuple[int, int], kappa1: float, kappa2: float,
                     tau_factor: float = 8.0, dt: float | None = None,
                     cutoff: int = DEFAULT_CUTOFF) -> float:
    """Overlap of the evolved state with the initial Fock state after τ = tau_factor/κ₂."""
    if tau_factor <= 0:
        raise ValueError("tau_factor must be positive")
    model = two_mode_loss_model(kappa1, cutoff=cutoff)
    rho0 = fock_state(model.space, initial)
    tau = tau_factor / kappa2
    rho = evolve(rho0, model, tau, dt)
    idx = model.space.index_of({"A1": initial[0], "A2": initial[1]})
    return float(rho.entries[idx, idx].real)


def analytic_pure_loss_fidelity(initial: tuple[int, int], kappa1: float, tau: float) -> float:
    """Closed-form ⟨n m|ρ(τ)|n m⟩ = e^{−κ₁(n+m)τ} for pure loss with H = 0."""
    return math.exp(-kappa1 * sum(initial) * tau)


@dataclass(frozen=True)
class DissipationSweepConfig:
    """One sweep over storage (κ₁⁻¹) or readout (κ₂⁻¹) decay times.

    Exactly one of the two inverse-rate fields should be a list; fidelities
    are computed for each initial Fock state at τ = tau_factor·κ₂⁻¹.
    """

    initial_states: tuple[tuple[int, int], ...]
    kappa1_inv: float | tuple[float, ...]
    kappa2_inv: float | tuple[float, ...]
    tau_factor: float = 8.0
    dt: float | None = None

    def __post_init__(self):
        if self.tau_factor <= 0:
            raise ValueError("tau_factor must be positive")
        if self.dt is not None:
            k2_vals = self.kappa2_inv if isinstance(self.kappa2_inv, tuple) else (self.kappa2_inv,)
            tau_min = self.tau_factor * min(k2_vals)
            if self.dt > tau_min / 100.0:
                raise ValueError("dt must be at most tau/100")


@dataclass(frozen=True)
class SweepResult:
    initial_state: tuple[int, int]
    kappa1_inv: float
    kappa2_inv: float
    tau: float
    fidelity: float


def sweep(config: DissipationSweepConfig) -> list[SweepResult]:
    """Fidelity rows for every (initial state, swept value) combination."""
    k1_vals = config.kappa1_inv if isinstance(config.kappa1_inv, tuple) else (config.kappa1_inv,)
    k2_vals = config.kappa2_inv if isinstance(config.kappa2_inv, tuple) else (config.kappa2_inv,)
    if not k1_vals or not k2_vals:
        raise ValueError("sweep ranges must be nonempty")
    rows = []
    for initial in config.initial_states:
        for k1_inv in k1_vals:
            for k2_inv in k2_vals:
                tau = config.tau_factor * k2_inv
                fid = storage_fidelity(initial, 1.0 / k1_inv, 1.0 / k2_inv,
                                       tau_factor=config.tau_factor, dt=config.dt)
                rows.append(SweepResult(initial, k1_inv, k2_inv, tau, fid))
    return rows
