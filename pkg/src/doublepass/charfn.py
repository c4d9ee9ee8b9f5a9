"""Transport equations for the joint characteristic functions.

Both families satisfy a 1-D advection-reaction equation in l with k as a
parameter, so every k-slice is independent:

    family F:  df/dt = -1/4 (a*l - k)^2 f - a*(a*l - k) df/dl
    family G:  dg/dt = -1/4 (a*l + k)^2 g - a*k       dg/dl

with initial condition exp(-l^2/4).  Three routes are provided: the
closed-form Gaussian built from the covariance formulas, integration along
characteristics (independent of those formulas), and an explicit upwind
finite-difference solver with an exact pointwise decay factor per step.
A finite-difference residual check ties any sampler back to the equations.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, TextIO

import numpy as np
from scipy.integrate import quad

from .errors import ConfigError
from .gaussian import closed_form_covariances
from .ito import FAMILY_F, FAMILY_G, char_fn_generator, double_pass_system


class BoundaryLeakError(RuntimeError):
    """Raised when grid-boundary values exceed the leakage threshold."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform symmetric (k, l) grid."""

    l_max: float = 8.0
    dl: float = 0.02
    k_max: float = 8.0
    dk: float = 0.02

    def __post_init__(self):
        for extent, step, name in ((self.l_max, self.dl, "dl"),
                                   (self.k_max, self.dk, "dk")):
            if extent <= 0 or step <= 0:
                raise ConfigError("grid extents and steps must be positive")
            if abs(round(2 * extent / step) * step - 2 * extent) > 1e-9:
                raise ConfigError(f"{name} must divide the grid extent")

    def l_values(self) -> np.ndarray:
        n = round(2 * self.l_max / self.dl) + 1
        return np.linspace(-self.l_max, self.l_max, n)

    def k_values(self) -> np.ndarray:
        n = round(2 * self.k_max / self.dk) + 1
        return np.linspace(-self.k_max, self.k_max, n)


@dataclass(frozen=True)
class CharSurface:
    """Sampled characteristic function on a (k, l) grid at one time."""

    family: str
    alpha: float
    t: float
    k_values: np.ndarray
    l_values: np.ndarray
    values: np.ndarray          # shape (nk, nl)

    def __post_init__(self):
        assert self.values.shape == (len(self.k_values), len(self.l_values))

    def value_at(self, k: float, l: float) -> float:
        i = int(np.argmin(np.abs(self.k_values - k)))
        j = int(np.argmin(np.abs(self.l_values - l)))
        return float(self.values[i, j])

    def validate(self, atol: float = 1e-9) -> None:
        """Normalization and evenness under (k,l) -> (-k,-l)."""
        if abs(self.value_at(0.0, 0.0) - 1.0) > atol:
            raise AssertionError("surface is not normalized at the origin")
        if self.values.max() > 1.0 + atol:
            raise AssertionError("surface exceeds 1")
        flipped = self.values[::-1, ::-1]
        if not np.allclose(self.values, flipped, atol=1e-9):
            raise AssertionError("surface is not even under (k,l) -> (-k,-l)")

    def to_csv(self, stream: TextIO) -> None:
        stream.write(
            f"# family={self.family} alpha={self.alpha:.12g} t={self.t:.12g}"
            f" l_min={self.l_values[0]:.12g} l_max={self.l_values[-1]:.12g}"
            f" nl={len(self.l_values)}"
            f" k_min={self.k_values[0]:.12g} k_max={self.k_values[-1]:.12g}"
            f" nk={len(self.k_values)}\n")
        stream.write("k,l,value\n")
        for i, k in enumerate(self.k_values):
            for j, l in enumerate(self.l_values):
                stream.write(f"{k:.12g},{l:.12g},{self.values[i, j]:.12g}\n")


def _check_family(family: str) -> None:
    if family not in (FAMILY_F, FAMILY_G):
        raise ValueError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# Route 1: closed-form Gaussian
# ---------------------------------------------------------------------------


def closed_form_char(family: str, alpha: float, t: float,
                     k, l):
    """Gaussian closed form, built from the covariance formulas.

    Accepts scalars or numpy arrays for k and l.
    """
    _check_family(family)
    snap = closed_form_covariances(alpha, t)
    if family == FAMILY_F:
        s_ll = snap.entry("p_at", "p_at")
        s_kl = snap.entry("p_at", "X_ph")
        s_kk = snap.entry("X_ph", "X_ph")
    else:
        s_ll = snap.entry("x_at", "x_at")
        s_kl = snap.entry("x_at", "P_ph")
        s_kk = snap.entry("P_ph", "P_ph")
    k = np.asarray(k, dtype=float)
    l = np.asarray(l, dtype=float)
    out = np.exp(-0.5 * (s_ll * l * l + 2.0 * s_kl * k * l + s_kk * k * k))
    return float(out) if out.ndim == 0 else out


def closed_form_surface(family: str, alpha: float, t: float,
                        grid: GridSpec) -> CharSurface:
    kv, lv = grid.k_values(), grid.l_values()
    kk, ll = np.meshgrid(kv, lv, indexing="ij")
    return CharSurface(family, alpha, t, kv, lv,
                       closed_form_char(family, alpha, t, kk, ll))


# ---------------------------------------------------------------------------
# Route 2: method of characteristics
# ---------------------------------------------------------------------------


def moc_solve(family: str, alpha: float, t: float, k: float, l: float,
              ) -> float:
    """Integrate backward along the characteristic through (t, l).

    The advection fields are linear, so the characteristic path is written
    exactly; the accumulated decay exponent is evaluated by adaptive
    quadrature.  This route never touches the covariance formulas.
    """
    _check_family(family)
    if t < 0:
        raise ConfigError("t must be nonnegative")
    if t == 0:
        return math.exp(-l * l / 4.0)

    if family == FAMILY_F:
        if alpha == 0.0:
            l0 = l

            def rate(s: float) -> float:
                return -0.25 * k * k
        else:
            # dl/ds = a*(a*l - k): l(s) = k/a + (l - k/a) exp(a^2 (s - t))
            center = k / alpha
            dev = l - center
            l0 = center + dev * math.exp(-alpha * alpha * t)

            def rate(s: float) -> float:
                ls = center + dev * math.exp(alpha * alpha * (s - t))
                return -0.25 * (alpha * ls - k) ** 2
    else:
        # dl/ds = a*k: straight characteristic
        l0 = l - alpha * k * t

        def rate(s: float) -> float:
            ls = l - alpha * k * (t - s)
            return -0.25 * (alpha * ls + k) ** 2

    decay, err = quad(rate, 0.0, t, epsabs=1e-13, epsrel=1e-12, limit=200)
    if err > 1e-9:
        raise RuntimeError(
            f"decay quadrature failed on [0, {t}]: error estimate {err:.2e}")
    return math.exp(decay - l0 * l0 / 4.0)


# ---------------------------------------------------------------------------
# Route 3: finite differences (upwind advection + exact decay factor)
# ---------------------------------------------------------------------------


def _upwind_gradient(f: np.ndarray, a: np.ndarray, dl: float) -> np.ndarray:
    """Second-order upwind-biased d/dl with zero ghost values outside."""
    fm1 = np.zeros_like(f)
    fm2 = np.zeros_like(f)
    fp1 = np.zeros_like(f)
    fp2 = np.zeros_like(f)
    fm1[:, 1:] = f[:, :-1]
    fm2[:, 2:] = f[:, :-2]
    fp1[:, :-1] = f[:, 1:]
    fp2[:, :-2] = f[:, 2:]
    backward = (3.0 * f - 4.0 * fm1 + fm2) / (2.0 * dl)
    forward = (-3.0 * f + 4.0 * fp1 - fp2) / (2.0 * dl)
    return np.where(a >= 0.0, backward, forward)


def fd_solve(family: str, alpha: float, grid: GridSpec, t: float, dt: float,
             boundary_tol: float = 1e-3) -> CharSurface:
    """Explicit finite-difference evolution of all k-slices at once.

    Per step: half decay (exact pointwise factor), one Heun advection step
    with an upwind-biased second-order derivative, half decay.  Requires the
    CFL condition max|drift| * dt <= dl; boundary values are monitored and
    an excess over ``boundary_tol`` raises :class:`BoundaryLeakError`.
    """
    _check_family(family)
    if t < 0 or dt <= 0:
        raise ConfigError("need t >= 0 and dt > 0")
    kv, lv = grid.k_values(), grid.l_values()
    kk, ll = np.meshgrid(kv, lv, indexing="ij")
    if family == FAMILY_F:
        drift = alpha * (alpha * ll - kk)
        decay = -0.25 * (alpha * ll - kk) ** 2
    else:
        drift = alpha * kk * np.ones_like(ll)
        decay = -0.25 * (alpha * ll + kk) ** 2

    f = np.exp(-lv * lv / 4.0)[None, :] * np.ones((len(kv), 1))
    if t == 0:
        return CharSurface(family, alpha, 0.0, kv, lv, f)

    n_steps = round(t / dt)
    if abs(n_steps * dt - t) > 1e-9 * max(1.0, t):
        raise ConfigError("dt must divide t")
    cfl = float(np.abs(drift).max()) * dt / grid.dl
    if cfl > 1.0 + 1e-12:
        raise ConfigError(f"CFL violation: |drift|*dt/dl = {cfl:.3f} > 1")

    half_decay = np.exp(0.5 * dt * decay)
    leak = 0.0
    for _ in range(n_steps):
        f = f * half_decay
        k1 = -drift * _upwind_gradient(f, drift, grid.dl)
        k2 = -drift * _upwind_gradient(f + dt * k1, drift, grid.dl)
        f = f + 0.5 * dt * (k1 + k2)
        f = f * half_decay
        edge = max(float(np.abs(f[:, 0]).max()), float(np.abs(f[:, -1]).max()))
        leak = max(leak, edge)
        if leak > boundary_tol:
            raise BoundaryLeakError(
                f"boundary value {leak:.3e} exceeds tolerance {boundary_tol:.1e};"
                " widen the l grid")
    return CharSurface(family, alpha, float(t), kv, lv, f)


# ---------------------------------------------------------------------------
# Residual check
# ---------------------------------------------------------------------------

Sampler = Callable[[float, float, float], float]


@functools.lru_cache(maxsize=4)
def _pde_coefficients(family: str):
    return char_fn_generator(double_pass_system(), family)


def pde_residual(family: str, alpha: float, sampler: Sampler,
                 t: float, k: float, l: float, h: float = 1e-4) -> float:
    """d/dt - c0*f - c1*d/dl at one point, by central differences.

    Near zero for true solutions; requires t >= h so the centered time
    stencil stays in the domain.
    """
    _check_family(family)
    if t < h:
        raise ConfigError("need t >= h for the centered time stencil")
    c0, c1 = _pde_coefficients(family).evaluate(alpha, k, l)
    df_dt = (sampler(t + h, k, l) - sampler(t - h, k, l)) / (2.0 * h)
    df_dl = (sampler(t, k, l + h) - sampler(t, k, l - h)) / (2.0 * h)
    return df_dt - c0 * sampler(t, k, l) - c1 * df_dl
