"""Brute-force verification in a truncated Fock space.

The field is discretized into collision-model time steps: each step couples
the atom to a fresh vacuum ancilla through the two pass unitaries

    U_pass1 = exp(-i sqrt(dt) a p (x) P_anc)
    U_pass2 = exp(-i sqrt(dt) a x (x) X_anc)
    U_composite = U_pass2 @ U_pass1      (pass 1 acts first)

which reproduce the one-step increments of the two single-pass couplings to
O(dt), including the Ito corrections; the O(dt) commutator of the ordered
product is exactly the composite Hamiltonian under test, so the splitting is
deliberately not symmetrized.  Atomic moments come from exact ancilla
tracing; output-field variances come from a homodyne Monte Carlo that
projectively measures one ancilla quadrature per step in its truncated
eigenbasis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

#: step bound keeping the per-collision excitation small
MAX_ALPHA2_DT = 1e-2

#: tolerated population outside the lower (d_at - 2) atom levels
LEAK_TOL = 1e-6

PHASE_X = 0.0
PHASE_P = math.pi / 2.0


class TruncationLeakError(RuntimeError):
    """Raised when population escapes the resolved part of the atom space."""


@dataclass(frozen=True)
class OracleConfig:
    """Parameters of one oracle run."""

    alpha: float
    dt: float
    t_max: float
    d_at: int = 40
    d_anc: int = 3
    n_traj: int = 2000
    seed: int = 12345
    phase: float = PHASE_X

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigError("alpha must be nonnegative")
        if self.dt <= 0 or self.t_max < self.dt:
            raise ConfigError("need 0 < dt <= t_max")
        if self.d_at < 4 or self.d_anc < 2:
            raise ConfigError("need d_at >= 4 and d_anc >= 2")
        if self.alpha ** 2 * self.dt > MAX_ALPHA2_DT + 1e-15:
            raise ConfigError(
                f"alpha^2*dt = {self.alpha**2 * self.dt:.2e} exceeds "
                f"{MAX_ALPHA2_DT:.0e}")
        if not (math.isclose(self.phase, PHASE_X, abs_tol=1e-12)
                or math.isclose(self.phase, PHASE_P, abs_tol=1e-12)):
            raise ConfigError("phase must be 0 or pi/2")

    @property
    def n_steps(self) -> int:
        n = round(self.t_max / self.dt)
        if abs(n * self.dt - self.t_max) > 1e-9 * max(1.0, self.t_max):
            raise ConfigError("dt must divide t_max")
        return n


@dataclass(frozen=True)
class AtomMomentSeries:
    """Deterministic atomic moments over the step grid."""

    times: np.ndarray
    mean_x: np.ndarray
    mean_p: np.ndarray
    var_x: np.ndarray
    var_p: np.ndarray
    max_leak: float


@dataclass(frozen=True)
class TrajectoryStats:
    """Ensemble statistics of the integrated homodyne record at one time."""

    time: float
    n: int
    mean: float
    variance: float
    stderr_mean: float      # sample standard deviation / sqrt(n)
    stderr_var: float       # Gaussian-approx standard error of the variance


# ---------------------------------------------------------------------------
# Truncated operators
# ---------------------------------------------------------------------------


def annihilation(dim: int) -> np.ndarray:
    a = np.zeros((dim, dim), dtype=complex)
    for n in range(dim - 1):
        a[n, n + 1] = math.sqrt(n + 1)
    return a


def position(dim: int) -> np.ndarray:
    a = annihilation(dim)
    return (a + a.conj().T) / math.sqrt(2.0)


def momentum(dim: int) -> np.ndarray:
    a = annihilation(dim)
    return (a - a.conj().T) / (1j * math.sqrt(2.0))


def vacuum_state(dim: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[0] = 1.0
    return psi


def ccr_defect(x: np.ndarray, p: np.ndarray) -> float:
    """Norm of [x, p] - i on the lower (d-2) block; zero in exact arithmetic."""
    d = x.shape[0]
    comm = x @ p - p @ x - 1j * np.eye(d)
    return float(np.linalg.norm(comm[:d - 2, :d - 2]))


def _expm_hermitian_generator(g: np.ndarray) -> np.ndarray:
    """exp(-i g) for Hermitian g, via the eigendecomposition (exactly unitary)."""
    vals, vecs = np.linalg.eigh(g)
    return (vecs * np.exp(-1j * vals)) @ vecs.conj().T


def step_unitaries(alpha: float, dt: float, d_at: int, d_anc: int,
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One collision step: (U_pass1, U_pass2, U_composite = U2 @ U1)."""
    if d_at < 2 or d_anc < 2:
        raise ConfigError("dimensions must be at least 2")
    if dt <= 0 or alpha < 0:
        raise ConfigError("need dt > 0 and alpha >= 0")
    if alpha ** 2 * dt > MAX_ALPHA2_DT + 1e-15:
        raise ConfigError("alpha^2*dt exceeds the documented step bound")
    root = math.sqrt(dt) * alpha
    g1 = root * np.kron(momentum(d_at), momentum(d_anc))
    g2 = root * np.kron(position(d_at), position(d_anc))
    u1 = _expm_hermitian_generator(g1)
    u2 = _expm_hermitian_generator(g2)
    return u1, u2, u2 @ u1


# ---------------------------------------------------------------------------
# Deterministic atom moments
# ---------------------------------------------------------------------------


def simulate_atom_moments(config: OracleConfig) -> AtomMomentSeries:
    """Repeated-interaction evolution of the reduced atomic state.

    Per step: tensor a fresh vacuum ancilla, apply the composite unitary,
    trace out the ancilla, renormalize.  Raises
    :class:`TruncationLeakError` when more than ``LEAK_TOL`` population
    reaches the top two atom levels.
    """
    d, da = config.d_at, config.d_anc
    _, _, u = step_unitaries(config.alpha, config.dt, d, da)
    u_dag = u.conj().T
    x_op = position(d)
    p_op = momentum(d)
    x2 = x_op @ x_op
    p2 = p_op @ p_op

    anc_vac = np.zeros((da, da), dtype=complex)
    anc_vac[0, 0] = 1.0
    rho = np.zeros((d, d), dtype=complex)
    rho[0, 0] = 1.0

    n_steps = config.n_steps
    times = np.arange(n_steps + 1) * config.dt
    mean_x = np.zeros(n_steps + 1)
    mean_p = np.zeros(n_steps + 1)
    var_x = np.zeros(n_steps + 1)
    var_p = np.zeros(n_steps + 1)
    max_leak = 0.0

    def record(idx: int) -> None:
        mx = np.einsum("ij,ji->", rho, x_op).real
        mp = np.einsum("ij,ji->", rho, p_op).real
        mean_x[idx] = mx
        mean_p[idx] = mp
        var_x[idx] = np.einsum("ij,ji->", rho, x2).real - mx * mx
        var_p[idx] = np.einsum("ij,ji->", rho, p2).real - mp * mp

    record(0)
    for step in range(1, n_steps + 1):
        joint = np.kron(rho, anc_vac)
        joint = u @ joint @ u_dag
        rho = np.einsum("iaja->ij", joint.reshape(d, da, d, da))
        trace = rho.trace().real
        if abs(1.0 - trace) > 1e-8:
            raise TruncationLeakError(
                f"trace deficit {abs(1 - trace):.2e} at step {step}")
        rho = rho / trace
        leak = float(np.diag(rho).real[-2:].sum())
        max_leak = max(max_leak, leak)
        if leak > LEAK_TOL:
            raise TruncationLeakError(
                f"top-level atom population {leak:.2e} at step {step};"
                " increase d_at")
        record(step)
    return AtomMomentSeries(times, mean_x, mean_p, var_x, var_p, max_leak)


# ---------------------------------------------------------------------------
# Homodyne Monte Carlo
# ---------------------------------------------------------------------------


def _trajectory_uniforms(seed: int, n_traj: int, n_steps: int) -> np.ndarray:
    """One independent uniform stream per (seed, trajectory index)."""
    children = np.random.SeedSequence(seed).spawn(n_traj)
    out = np.empty((n_traj, n_steps))
    for i, child in enumerate(children):
        out[i] = np.random.default_rng(child).random(n_steps)
    return out


def _stats(time: float, samples: np.ndarray) -> TrajectoryStats:
    n = samples.size
    mean = float(samples.mean())
    var = float(samples.var(ddof=1))
    std = math.sqrt(var)
    return TrajectoryStats(
        time=time, n=n, mean=mean, variance=var,
        stderr_mean=std / math.sqrt(n),
        stderr_var=var * math.sqrt(2.0 / (n - 1)),
    )


def _homodyne_records(config: OracleConfig,
                      sample_steps: list[int]) -> list[tuple[float, np.ndarray]]:
    d, da = config.d_at, config.d_anc
    n_steps = config.n_steps
    n = config.n_traj
    _, _, u = step_unitaries(config.alpha, config.dt, d, da)
    measure_p = math.isclose(config.phase, PHASE_P, abs_tol=1e-12)
    quad_op = momentum(da) if measure_p else position(da)
    eigvals, eigvecs = np.linalg.eigh(quad_op)
    vconj = eigvecs.conj()

    uniforms = _trajectory_uniforms(config.seed, n, n_steps)
    psi = np.zeros((d, n), dtype=complex)
    psi[0, :] = 1.0
    y = np.zeros(n)
    gain = math.sqrt(config.dt) * math.sqrt(2.0)

    out: list[tuple[float, np.ndarray]] = []
    wanted = set(sample_steps)
    check_every = 25
    for step in range(1, n_steps + 1):
        joint = np.zeros((d * da, n), dtype=complex)
        joint[::da, :] = psi
        joint = (u @ joint).reshape(d, da, n)
        # ancilla index -> quadrature eigenbasis
        comps = np.einsum("je,djn->edn", vconj, joint)
        probs = np.einsum("edn,edn->en", comps, comps.conj()).real
        cum = np.cumsum(probs, axis=0)
        total = cum[-1]
        draws = uniforms[:, step - 1] * total
        idx = np.clip((draws[None, :] > cum).sum(axis=0), 0, da - 1)
        picked = np.take_along_axis(comps, idx[None, None, :], axis=0)[0]
        norms = np.sqrt(np.take_along_axis(probs, idx[None, :], axis=0)[0])
        psi = picked / norms
        y += gain * eigvals[idx]
        if step % check_every == 0 or step == n_steps:
            leak = float((np.abs(psi[-2:, :]) ** 2).sum(axis=0).max())
            if leak > LEAK_TOL:
                raise TruncationLeakError(
                    f"top-level atom population {leak:.2e} in a trajectory;"
                    " increase d_at")
        if step in wanted:
            out.append((step * config.dt, y.copy()))
    return out


def homodyne_monte_carlo(config: OracleConfig) -> TrajectoryStats:
    """Ensemble statistics of the integrated record at the final time.

    The record y accumulates sqrt(dt) * sqrt(2) * (measured quadrature) per
    step, so it realizes sqrt(2) * x_ph_out (phase 0) or sqrt(2) * p_ph_out
    (phase pi/2) and Var(y_t) estimates twice the accumulated-quadrature
    variance.  Fully reproducible from the seed.
    """
    if config.n_traj < 100:
        raise ConfigError("need at least 100 trajectories")
    (final,) = _homodyne_records(config, [config.n_steps])
    return _stats(*final)


def homodyne_series(config: OracleConfig,
                    n_samples: int) -> list[TrajectoryStats]:
    """Statistics at n_samples evenly spaced times (final time included)."""
    if config.n_traj < 100:
        raise ConfigError("need at least 100 trajectories")
    if n_samples < 1:
        raise ConfigError("need at least one sample")
    stride = max(1, config.n_steps // n_samples)
    steps = sorted(set(list(range(stride, config.n_steps + 1, stride))
                       + [config.n_steps]))
    return [_stats(t, ys) for t, ys in _homodyne_records(config, steps)]
