"""Gaussian moment dynamics of the extended mode set.

The modes are ordered (x_at, p_at, X_ph, P_ph) where X_ph and P_ph are the
accumulated (unnormalized) output field quadratures with [X_ph, P_ph] = i*t.
First and symmetrized second moments obey a linear system

    d<v>/dt = A <v>          dC/dt = A C + C A^T + D

whose drift A and diffusion D are generated from the symbolic engine and
instantiated numerically.  The module also evaluates the closed-form
variances of the double-pass model and turns either route into squeezing
numbers in dB (reference variance 1/2).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .ito import (double_pass_system, flow_differential, lindblad,
                  output_quadrature_relations)
from .scalars import HALF, FormalScalar
from .weyl import OpPoly, mul

MODES = ("x_at", "p_at", "X_ph", "P_ph")

#: CSV schema shared by the closed-form/ODE route and the oracle route.
CSV_COLUMNS = (
    "t", "var_p_at", "cov_pat_xph", "var_x_ph_norm", "var_x_at",
    "cov_xat_pph", "var_p_ph_norm", "sq_db_atom", "sq_db_field_x",
    "sq_db_field_p", "unc_prod_field", "unc_prod_atom",
)

_REFERENCE_VAR = 0.5


def mode_index(label: str) -> int:
    return MODES.index(label)


@dataclass(frozen=True)
class LinearOde:
    """Drift/diffusion pair of the moment equations at a fixed coupling."""

    alpha: float
    drift: np.ndarray
    diffusion: np.ndarray


@dataclass(frozen=True)
class CovSnapshot:
    """Means and symmetrized covariance of the four modes at one time.

    ``available`` marks entries that the producing route actually defines;
    the closed-form route leaves the cross-sector entries unavailable (NaN).
    """

    time: float
    mean: np.ndarray
    cov: np.ndarray
    available: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.available is None:
            object.__setattr__(self, "available",
                               np.ones((4, 4), dtype=bool))

    def entry(self, row: str, col: str) -> float:
        return float(self.cov[mode_index(row), mode_index(col)])

    def validate(self, tol: float = 1e-10) -> None:
        assert np.allclose(self.cov, self.cov.T, atol=tol)
        a = self.cov[:2, :2]
        if self.available[:2, :2].all():
            det = a[0, 0] * a[1, 1] - a[0, 1] ** 2
            if det < 0.25 - tol:
                raise AssertionError(f"atomic uncertainty violated: det={det}")


@dataclass(frozen=True)
class CovTrajectory:
    """Uniform-grid sequence of covariance snapshots."""

    times: np.ndarray
    means: np.ndarray       # (n, 4)
    covs: np.ndarray        # (n, 4, 4)
    available: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.available is None:
            object.__setattr__(self, "available",
                               np.ones((4, 4), dtype=bool))
        if len(self.times) > 1:
            steps = np.diff(self.times)
            assert (steps > 0).all()
            assert np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12)

    def __len__(self) -> int:
        return len(self.times)

    def snapshot(self, i: int) -> CovSnapshot:
        return CovSnapshot(float(self.times[i]), self.means[i], self.covs[i],
                           self.available)

    def series(self, row: str, col: str) -> np.ndarray:
        return self.covs[:, mode_index(row), mode_index(col)]


@dataclass(frozen=True)
class SqueezingReport:
    """Squeezing (dB, reference 1/2) and uncertainty products over a grid."""

    times: np.ndarray
    atom_db: np.ndarray
    field_x_db: np.ndarray
    field_p_db: np.ndarray
    unc_prod_atom: np.ndarray
    unc_prod_field: np.ndarray
    peak_atom_db: float


# ---------------------------------------------------------------------------
# Symbolic construction of the moment equations
# ---------------------------------------------------------------------------


def _const(scalar: FormalScalar, alpha: float) -> float:
    value = scalar.evaluate(a=alpha)
    assert abs(value.imag) < 1e-14 * (1 + abs(value.real)), value
    return value.real


@functools.lru_cache(maxsize=1)
def _symbolic_mode_differentials() -> tuple:
    """(cA_i, cA*_i, drift_i) per mode, from the engine; exact scalars."""
    sys = double_pass_system()
    io = output_quadrature_relations(sys)
    diffs = (
        flow_differential(sys, OpPoly.x()),
        flow_differential(sys, OpPoly.p()),
        io.x_ph_out.differential,
        io.p_ph_out.differential,
    )
    out = []
    for d in diffs:
        out.append((d.ca.constant_value(), d.castar.constant_value(), d.ct))
    return sys, tuple(out)


@functools.lru_cache(maxsize=1)
def _symbolic_moment_structure() -> tuple:
    """Exact (A, D) entries plus the quadratic-flow consistency check.

    The atomic 2x2 block of the second-moment dynamics is generated from the
    Lindblad drift of the quadratic monomials; the remaining entries follow
    from the pairwise Ito rule on the mode differentials.  The overlap of the
    two constructions must agree exactly.
    """
    sys, modes = _symbolic_mode_differentials()
    a_rows: list[list[FormalScalar]] = []
    for _, _, drift in modes:
        if drift.degree() > 1:
            raise AssertionError("mode drift is not linear")
        row = [drift.coefficient(1, 0), drift.coefficient(0, 1),
               FormalScalar.zero(), FormalScalar.zero()]
        if not drift.coefficient(0, 0).is_zero():
            raise AssertionError("mode drift has a constant part")
        a_rows.append(row)

    d_entries: list[list[FormalScalar]] = []
    for i in range(4):
        row = []
        for j in range(4):
            ca_i, castar_i, _ = modes[i]
            ca_j, castar_j, _ = modes[j]
            row.append((ca_i * castar_j + ca_j * castar_i).scale(HALF))
        d_entries.append(row)

    # Independent atomic-block route: Lindblad drift of quadratic monomials.
    x, p = OpPoly.x(), OpPoly.p()
    sym_mon = {
        (0, 0): mul(x, x),
        (1, 1): mul(p, p),
        (0, 1): (mul(x, p) + mul(p, x)).scale(HALF),
    }
    for (i, j), mono in sym_mon.items():
        g = lindblad(sys, mono)
        # Expected: sum_m A_im M_mj + A_jm M_im + D_ij * 1, with M_ab the
        # symmetrized monomials over the atomic pair.
        expected = OpPoly.const(d_entries[i][j])
        for m in range(2):
            coeff_im = a_rows[i][m]
            coeff_jm = a_rows[j][m]
            m_mj = sym_mon.get(tuple(sorted((m, j))))
            m_im = sym_mon.get(tuple(sorted((i, m))))
            expected = expected + m_mj.scale(coeff_im) + m_im.scale(coeff_jm)
        if g != expected:
            raise AssertionError(
                f"quadratic-flow route disagrees at block ({i},{j}): "
                f"{g} vs {expected}")
    return a_rows, d_entries


def build_moment_odes(alpha: float) -> LinearOde:
    """Drift and diffusion of the 4-mode moment equations at coupling alpha.

    Entries come from the symbolic engine (flow differentials of the modes
    and of the quadratic atomic monomials) and are only instantiated
    numerically at the end.  Negative couplings are rejected.
    """
    if alpha < 0:
        raise ConfigError("coupling alpha must be nonnegative")
    a_rows, d_entries = _symbolic_moment_structure()
    drift = np.array([[_const(c, alpha) for c in row] for row in a_rows])
    diffusion = np.array([[_const(c, alpha) for c in row] for row in d_entries])
    assert np.allclose(diffusion, diffusion.T)
    assert np.linalg.eigvalsh(diffusion).min() > -1e-12
    return LinearOde(alpha=float(alpha), drift=drift, diffusion=diffusion)


def initial_snapshot() -> CovSnapshot:
    """Vacuum/ground initial state: diag(1/2, 1/2, 0, 0), zero means."""
    return CovSnapshot(0.0, np.zeros(4), np.diag([0.5, 0.5, 0.0, 0.0]))


def integrate_covariance(ode: LinearOde, t_max: float, dt: float,
                         ) -> CovTrajectory:
    """Classical fixed-step RK4 integration of the moment equations.

    The system is linear and time-invariant, so the RK4 stage algebra
    collapses to one affine update per step, built once from the drift; the
    result is bit-for-bit the classical RK4 iteration.  Stability requires
    dt <= 0.1 / alpha^2 (documented bound, enforced).
    """
    if dt <= 0:
        raise ConfigError("dt must be positive")
    if t_max < 0:
        raise ConfigError("t_max must be nonnegative")
    if t_max == 0:
        snap = initial_snapshot()
        return CovTrajectory(np.array([0.0]), snap.mean[None, :],
                             snap.cov[None, :, :])
    if dt > t_max:
        raise ConfigError("dt must not exceed t_max")
    if ode.alpha > 0 and dt > 0.1 / ode.alpha ** 2 + 1e-15:
        raise ConfigError(
            f"dt={dt} violates the stability bound 0.1/alpha^2="
            f"{0.1 / ode.alpha ** 2:.3g}")
    n_steps = round(t_max / dt)
    if abs(n_steps * dt - t_max) > 1e-9 * max(1.0, t_max):
        raise ConfigError("dt must divide t_max")

    a = ode.drift
    means = np.zeros((n_steps + 1, 4))
    covs = np.zeros((n_steps + 1, 4, 4))
    snap = initial_snapshot()
    means[0] = snap.mean
    covs[0] = snap.cov

    # The right-hand side is affine in the stacked 20-vector y = (mean, C):
    # y' = K y + b with K the linear map (A mean, A C + C A^T) and b = (0, D).
    # The RK4 stages then collapse to y_{n+1} = R y + r with
    # R = sum_{j<=4} (dt K)^j / j!  and  r = sum_{1<=j<=4} dt^j K^{j-1} b / j!.
    def pack(mean, cov):
        return np.concatenate([mean, cov.reshape(16)])

    def unpack(y):
        return y[:4], y[4:].reshape(4, 4)

    k_mat = np.zeros((20, 20))
    for idx in range(20):
        basis = np.zeros(20)
        basis[idx] = 1.0
        m_b, c_b = unpack(basis)
        k_mat[:, idx] = pack(a @ m_b, a @ c_b + c_b @ a.T)
    b_vec = pack(np.zeros(4), ode.diffusion)

    r_mat = np.eye(20)
    r_vec = np.zeros(20)
    term = np.eye(20)
    for j in range(1, 5):
        r_vec = r_vec + (term @ b_vec) * (dt ** j / math.factorial(j))
        term = term @ k_mat
        r_mat = r_mat + term * (dt ** j / math.factorial(j))

    y = pack(snap.mean, snap.cov)
    for step in range(1, n_steps + 1):
        y = r_mat @ y + r_vec
        mean, cov = unpack(y)
        cov = 0.5 * (cov + cov.T)
        y = pack(mean, cov)
        means[step] = mean
        covs[step] = cov

    times = np.arange(n_steps + 1) * dt
    traj = CovTrajectory(times, means, covs)
    _assert_cross_sector_zero(traj)
    return traj


def _assert_cross_sector_zero(traj: CovTrajectory) -> None:
    """The (x_at, P_ph) and (p_at, X_ph) sectors do not mix; report if they do."""
    cross = [("x_at", "p_at"), ("x_at", "X_ph"), ("p_at", "P_ph"),
             ("X_ph", "P_ph")]
    worst = max(float(np.abs(traj.series(r, c)).max()) for r, c in cross)
    if worst > 1e-10:
        raise AssertionError(
            f"cross-sector covariance grew to {worst:.3e} along the ODE route")


# ---------------------------------------------------------------------------
# Closed-form covariances
# ---------------------------------------------------------------------------


def closed_form_covariances(alpha: float, t: float) -> CovSnapshot:
    """Evaluate the six published (co)variances; cross entries stay NaN.

    The alpha -> 0 limits are taken analytically, and the small-exponent
    regime uses expm1-based factorizations to avoid cancellation.
    """
    if alpha < 0 or t < 0:
        raise ConfigError("alpha and t must be nonnegative")
    cov = np.full((4, 4), np.nan)
    available = np.zeros((4, 4), dtype=bool)

    def put(r, c, value):
        i, j = mode_index(r), mode_index(c)
        cov[i, j] = cov[j, i] = value
        available[i, j] = available[j, i] = True

    u = alpha * alpha * t
    em = -math.expm1(-u)          # 1 - exp(-u), stable for small u
    put("p_at", "p_at", 0.25 * (1.0 + math.exp(-2.0 * u)))
    put("x_at", "x_at", 0.5 * (1.0 + alpha * alpha * t))
    put("x_at", "P_ph", -0.25 * alpha ** 3 * t * t)
    put("P_ph", "P_ph", 0.5 * t + alpha ** 4 * t ** 3 / 6.0)
    if alpha == 0.0:
        put("p_at", "X_ph", 0.0)
        put("X_ph", "X_ph", 0.5 * t)
    else:
        put("p_at", "X_ph", -em * em / (4.0 * alpha))
        put("X_ph", "X_ph", em * (2.0 + em) / (4.0 * alpha * alpha))
    return CovSnapshot(float(t), np.zeros(4), cov, available)


def closed_form_trajectory(alpha: float, t_max: float,
                           n_samples: int) -> CovTrajectory:
    """Closed forms sampled on a uniform grid, as a trajectory."""
    times = np.linspace(0.0, t_max, n_samples)
    covs = np.zeros((n_samples, 4, 4))
    snap0 = closed_form_covariances(alpha, 0.0)
    for i, t in enumerate(times):
        covs[i] = closed_form_covariances(alpha, float(t)).cov
    return CovTrajectory(times, np.zeros((n_samples, 4)), covs,
                         snap0.available)


def normalized_field_variances(alpha: float, t: float) -> tuple[float, float]:
    """Variances of the normalized modes X_ph/sqrt(t), P_ph/sqrt(t)."""
    if t <= 0:
        raise ConfigError("normalization requires t > 0")
    snap = closed_form_covariances(alpha, t)
    return snap.entry("X_ph", "X_ph") / t, snap.entry("P_ph", "P_ph") / t


def _to_db(var: np.ndarray) -> np.ndarray:
    return 10.0 * np.log10(_REFERENCE_VAR / var)


def squeezing_report(traj: CovTrajectory) -> SqueezingReport:
    """Squeezing and uncertainty products along a trajectory.

    Field variances are normalized by t; the t = 0 entry uses the vacuum
    limit 1/2 (0 dB, product 1/4).  Nonpositive variances are rejected.
    """
    times = np.asarray(traj.times, dtype=float)
    var_p_at = traj.series("p_at", "p_at")
    var_x_at = traj.series("x_at", "x_at")
    var_x_ph = traj.series("X_ph", "X_ph").copy()
    var_p_ph = traj.series("P_ph", "P_ph").copy()
    positive_t = times > 0
    norm_x = np.where(positive_t, var_x_ph / np.where(positive_t, times, 1.0),
                      _REFERENCE_VAR)
    norm_p = np.where(positive_t, var_p_ph / np.where(positive_t, times, 1.0),
                      _REFERENCE_VAR)
    for name, arr in (("p_at", var_p_at), ("x_at", var_x_at),
                      ("x_ph_norm", norm_x), ("p_ph_norm", norm_p)):
        if not (arr > 0).all():
            raise ValueError(f"nonpositive variance in {name}")
    atom_db = _to_db(var_p_at)
    return SqueezingReport(
        times=times,
        atom_db=atom_db,
        field_x_db=_to_db(norm_x),
        field_p_db=_to_db(norm_p),
        unc_prod_atom=var_x_at * var_p_at,
        unc_prod_field=norm_x * norm_p,
        peak_atom_db=float(atom_db.max()),
    )


def csv_row_values(alpha: float, t: float) -> dict[str, float]:
    """Closed-form values for one row of the shared CSV schema."""
    snap = closed_form_covariances(alpha, t)
    if t > 0:
        nx, np_ = normalized_field_variances(alpha, t)
    else:
        nx = np_ = _REFERENCE_VAR
    var_p = snap.entry("p_at", "p_at")
    var_x = snap.entry("x_at", "x_at")
    return {
        "t": t,
        "var_p_at": var_p,
        "cov_pat_xph": snap.entry("p_at", "X_ph"),
        "var_x_ph_norm": nx,
        "var_x_at": var_x,
        "cov_xat_pph": snap.entry("x_at", "P_ph"),
        "var_p_ph_norm": np_,
        "sq_db_atom": 10.0 * math.log10(_REFERENCE_VAR / var_p),
        "sq_db_field_x": 10.0 * math.log10(_REFERENCE_VAR / nx),
        "sq_db_field_p": 10.0 * math.log10(_REFERENCE_VAR / np_),
        "unc_prod_field": nx * np_,
        "unc_prod_atom": var_x * var_p,
    }
