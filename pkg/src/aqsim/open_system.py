"""Lindblad evolution with dephasing, sink trapping, and recombination.

The density matrix lives on the system sites plus two absorbing registers,
sink and loss, appended after the sites.  Trapping moves population from
the sink site into the sink register at the trap rate; recombination moves
population from every site into the loss register.  Both channels are
ordinary Lindblad dissipators, so the generator is trace preserving and
transport efficiency is a plain population readout on the sink register.

Generator, acting on vectorized rho (column stacking):

    d rho/dt = -i[H, rho] + sum_m gamma_m D[|m><m|] rho
               + trap_rate D[|sink><sink_site|] rho
               + recombination_rate sum_m D[|loss><m|] rho

with D[A] rho = A rho A^dag - (A^dag A rho + rho A^dag A) / 2.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp

from .hamiltonians import Hamiltonian

TRACE_TOL = 1e-9
HERM_TOL = 1e-10
POSITIVITY_FLOOR = -1e-8


class StateInvariantError(RuntimeError):
    """Density-matrix bookkeeping broke: trace drift, Hermiticity, positivity."""


class StiffnessError(RuntimeError):
    """Adaptive integrator underflowed its step size."""


class NoSinkError(ValueError):
    """Transport efficiency needs a non-zero trap rate."""


@dataclass(frozen=True)
class TransportSpec:
    """Source/sink layout and rates for a transport run.

    dephasing_rates holds one rate per system site; trap_rate feeds the sink
    register from sink_site, recombination_rate drains every site into loss.
    """

    source_site: int
    sink_site: int
    trap_rate: float
    recombination_rate: float
    dephasing_rates: np.ndarray

    def __post_init__(self):
        gamma = np.array(self.dephasing_rates, dtype=float, copy=True)
        if gamma.ndim != 1 or gamma.size == 0:
            raise ValueError("dephasing_rates must be a non-empty 1-d sequence")
        n = gamma.size
        for name, idx in (("source_site", self.source_site), ("sink_site", self.sink_site)):
            if not 0 <= int(idx) < n:
                raise ValueError(f"{name} {idx} out of range for {n} sites")
        if self.trap_rate < 0 or self.recombination_rate < 0 or np.any(gamma < 0):
            raise ValueError("rates must be non-negative")
        gamma.setflags(write=False)
        object.__setattr__(self, "source_site", int(self.source_site))
        object.__setattr__(self, "sink_site", int(self.sink_site))
        object.__setattr__(self, "trap_rate", float(self.trap_rate))
        object.__setattr__(self, "recombination_rate", float(self.recombination_rate))
        object.__setattr__(self, "dephasing_rates", gamma)

    @property
    def n_sites(self) -> int:
        return self.dephasing_rates.size

    def with_uniform_dephasing(self, gamma: float) -> "TransportSpec":
        return replace(self, dephasing_rates=np.full(self.n_sites, float(gamma)))


@dataclass(frozen=True)
class DensityMatrix:
    """Positive unit-trace state over system sites + sink + loss registers."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise StateInvariantError(f"density matrix must be square, got {m.shape}")
        herm = np.abs(m - m.conj().T).max()
        if herm > HERM_TOL:
            raise StateInvariantError(f"not Hermitian: max |rho - rho^dag| = {herm:.3e}")
        drift = abs(np.trace(m).real - 1.0) + abs(np.trace(m).imag)
        if drift > TRACE_TOL:
            raise StateInvariantError(f"trace drift {drift:.3e} exceeds {TRACE_TOL}")
        lowest = np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min()
        if lowest < POSITIVITY_FLOOR:
            raise StateInvariantError(f"negative eigenvalue {lowest:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def population(self, index: int) -> float:
        return float(self.matrix[index, index].real)

    def populations(self) -> np.ndarray:
        return np.diagonal(self.matrix).real.copy()

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)


def initial_excitation(n_sites: int, site: int) -> DensityMatrix:
    """Pure state with the excitation on one site, sink and loss empty."""
    if not 0 <= site < n_sites:
        raise ValueError(f"site {site} out of range for {n_sites} sites")
    m = np.zeros((n_sites + 2, n_sites + 2), dtype=complex)
    m[site, site] = 1.0
    return DensityMatrix(m)


@dataclass(frozen=True)
class Liouvillian:
    """Vectorized master-equation generator (column-stacking convention)."""

    matrix: np.ndarray
    n_sites: int
    spec: TransportSpec
    h_hash: str

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        """Dimension of the density matrix the generator acts on."""
        return self.n_sites + 2

    @property
    def sink_index(self) -> int:
        return self.n_sites

    @property
    def loss_index(self) -> int:
        return self.n_sites + 1


def _dissipator_term(a: np.ndarray) -> np.ndarray:
    d = a.shape[0]
    eye = np.eye(d)
    ada = a.conj().T @ a
    return (np.kron(a.conj(), a)
            - 0.5 * np.kron(eye, ada)
            - 0.5 * np.kron(ada.T, eye))


def build_liouvillian(h: Hamiltonian, spec: TransportSpec) -> Liouvillian:
    """Assemble the generator for a Hamiltonian and a transport spec.

    The Hamiltonian acts on the system sites and is embedded in the
    site + sink + loss space with zero rows for the registers.
    """
    n = spec.n_sites
    if h.dim != n:
        raise ValueError(f"Hamiltonian dimension {h.dim} does not match spec with {n} sites")
    d = n + 2
    sink, loss = n, n + 1
    hd = np.zeros((d, d), dtype=complex)
    hd[:n, :n] = h.dense()
    eye = np.eye(d)
    gen = -1j * (np.kron(eye, hd) - np.kron(hd.T, eye))
    for m, gamma in enumerate(spec.dephasing_rates):
        if gamma > 0:
            a = np.zeros((d, d))
            a[m, m] = 1.0
            gen = gen + gamma * _dissipator_term(a)
    if spec.trap_rate > 0:
        a = np.zeros((d, d))
        a[sink, spec.sink_site] = 1.0
        gen = gen + spec.trap_rate * _dissipator_term(a)
    if spec.recombination_rate > 0:
        for m in range(n):
            a = np.zeros((d, d))
            a[loss, m] = 1.0
            gen = gen + spec.recombination_rate * _dissipator_term(a)
    return Liouvillian(gen, n, spec, h.content_hash())


def _stiffness_detail(spec: TransportSpec) -> str:
    return (f"max dephasing rate {spec.dephasing_rates.max():g}, "
            f"trap rate {spec.trap_rate:g}, "
            f"recombination rate {spec.recombination_rate:g}")


_STEP_BUDGET = 2_000_000


def _integrate(vec0: np.ndarray, gen: Liouvillian, t: float, tol: float) -> np.ndarray:
    # Explicit stepping is stability-limited to h ~ 6 / |diag(L)|_max, so a
    # step estimate over budget means the run would underflow into noise or
    # grind for hours; fail up front and name the rates instead.
    scale = np.abs(np.diagonal(gen.matrix)).max() if gen.matrix.size else 0.0
    if t * scale / 6.0 > _STEP_BUDGET:
        raise StiffnessError(
            f"stiff generator: ~{t * scale / 6.0:.2e} steps needed for t={t:g} "
            f"(budget {_STEP_BUDGET:.0e}); offending rates: {_stiffness_detail(gen.spec)}")
    # atol below rtol keeps drained populations from drifting negative
    sol = solve_ivp(lambda _, y: gen.matrix @ y, (0.0, t), vec0,
                    method="DOP853", rtol=tol, atol=tol * 1e-3)
    if not sol.success:
        raise StiffnessError(
            f"integration failed at t <= {t:g} ({sol.message}); "
            f"offending rates: {_stiffness_detail(gen.spec)}")
    return sol.y[:, -1]


def evolve(rho0: DensityMatrix, gen: Liouvillian, t: float,
           tol: float = 1e-9) -> DensityMatrix:
    """Propagate a density matrix for time t under the generator.

    Adaptive explicit stepping (DOP853) on the vectorized master equation
    with per-step tolerance tol.  The returned state is re-validated, so
    trace drift raises instead of being renormalized away.
    """
    if t < 0:
        raise ValueError("evolution time must be non-negative")
    if rho0.dim != gen.dim:
        raise ValueError(f"state dimension {rho0.dim} does not match generator {gen.dim}")
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    if t == 0:
        return rho0
    vec = rho0.matrix.reshape(-1, order="F")
    out = _integrate(vec, gen, t, tol)
    return DensityMatrix(out.reshape((gen.dim, gen.dim), order="F"))


def transport_efficiency(h: Hamiltonian, spec: TransportSpec,
                         t_max: float = 1000.0, tol: float = 1e-8,
                         _checkpoints: int = 100) -> tuple:
    """Sink population at the flow-convergence time or at the horizon.

    The sink fills at trap_rate * rho[sink_site, sink_site]; the run stops
    early once that feed rate has risen above tol * trap_rate and dropped
    back below it (checked at checkpoint times).  Returns (eta, converged)
    where converged reports whether the flow criterion fired before t_max.
    """
    if spec.trap_rate == 0:
        raise NoSinkError("transport efficiency needs trap_rate > 0")
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    gen = build_liouvillian(h, spec)
    state = initial_excitation(spec.n_sites, spec.source_site)
    sink, site = gen.sink_index, spec.sink_site
    dt = t_max / _checkpoints
    armed = state.population(site) > tol
    converged = False
    vec = state.matrix.reshape(-1, order="F")
    for _ in range(_checkpoints):
        vec = _integrate(vec, gen, dt, tol)
        state = DensityMatrix(vec.reshape((gen.dim, gen.dim), order="F"))
        feed = state.population(site)
        if feed > tol:
            armed = True
        elif armed:
            converged = True
            break
    eta = state.population(sink)
    if not -1e-8 <= eta <= 1 + 1e-8:
        raise StateInvariantError(f"sink population {eta} outside [0, 1]")
    return float(min(max(eta, 0.0), 1.0)), converged


@dataclass(frozen=True)
class EfficiencyCurve:
    """Transport efficiency over a dephasing-rate grid, plus run metadata."""

    gamma_grid: np.ndarray
    efficiencies: np.ndarray
    converged: tuple
    h_hash: str
    spec: TransportSpec
    t_max: float
    tol: float

    def __post_init__(self):
        grid = np.array(self.gamma_grid, dtype=float, copy=True)
        eff = np.array(self.efficiencies, dtype=float, copy=True)
        if grid.shape != eff.shape or grid.ndim != 1:
            raise ValueError("gamma grid and efficiencies must be 1-d and equal length")
        if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
            raise ValueError("gamma grid must be strictly ascending and positive")
        if np.any(eff < 0) or np.any(eff > 1):
            raise ValueError("efficiencies must lie in [0, 1]")
        if len(self.converged) != grid.size:
            raise ValueError("one converged flag per grid point required")
        grid.setflags(write=False)
        eff.setflags(write=False)
        object.__setattr__(self, "gamma_grid", grid)
        object.__setattr__(self, "efficiencies", eff)
        object.__setattr__(self, "converged", tuple(bool(c) for c in self.converged))

    def argmax(self) -> int:
        return int(np.argmax(self.efficiencies))


def goldilocks_sweep(h: Hamiltonian, spec_template: TransportSpec,
                     gamma_grid, t_max: float = 1000.0, tol: float = 1e-8,
                     workers: int = 1) -> EfficiencyCurve:
    """Sweep uniform dephasing over a grid and collect efficiencies.

    Grid points are independent; with workers > 1 they run concurrently and
    results are still aggregated in grid order, so output is deterministic.
    """
    grid = np.asarray(gamma_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("gamma grid must be a non-empty 1-d sequence")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("gamma grid must be strictly ascending and positive")

    def _one(gamma: float):
        return transport_efficiency(h, spec_template.with_uniform_dephasing(gamma),
                                    t_max=t_max, tol=tol)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one, grid))
    else:
        results = [_one(g) for g in grid]
    eff = np.array([r[0] for r in results])
    flags = tuple(r[1] for r in results)
    return EfficiencyCurve(grid, eff, flags, h.content_hash(), spec_template,
                           float(t_max), float(tol))
