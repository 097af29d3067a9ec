"""Fixed-step RK4 oracle and estimators for the stability constants (K, lambda, L)."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, TextIO

import numpy as np
from scipy.optimize import minimize
from scipy.special import ndtri
from scipy.stats import qmc

from .polyalg import VectorField

BLOWUP = 1e6


class DivergenceError(RuntimeError):
    """A trajectory left the blowup threshold; ``partial`` holds what was computed."""

    def __init__(self, message: str, partial: Optional["Trajectory"] = None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    diverged: bool = False

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=-1)

    def write_csv(self, out: TextIO) -> None:
        """Header ``t,x1,...,xn`` then one row per step."""
        n = self.states.shape[-1]
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["t"] + [f"x{i}" for i in range(1, n + 1)])
        for t, x in zip(self.times, self.states):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in x])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def rk4_batch(rhs, X0: np.ndarray, h: float, steps: int, blowup: float = BLOWUP) -> np.ndarray:
    """Integrate many initial states at once; returns shape ``(steps + 1, m, n)``.

    Raises :class:`DivergenceError` as soon as any state norm exceeds ``blowup``.
    """
    X = np.atleast_2d(np.asarray(X0, dtype=float)).copy()
    out = np.empty((steps + 1,) + X.shape)
    out[0] = X
    for j in range(steps):
        k1 = rhs(X)
        k2 = rhs(X + 0.5 * h * k1)
        k3 = rhs(X + 0.5 * h * k2)
        k4 = rhs(X + h * k3)
        X = X + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[j + 1] = X
        if not np.all(np.isfinite(X)) or np.max(np.linalg.norm(X, axis=1)) > blowup:
            err = DivergenceError(f"state norm exceeded {blowup:g} at t={(j + 1) * h:g}")
            err.steps_done = j + 1
            err.states = out[: j + 2]
            raise err
    return out


def simulate(f: VectorField, x0, t_end: float, h: float = 1e-3, blowup: float = BLOWUP) -> Trajectory:
    """Classical fourth-order Runge-Kutta with a fixed step.

    The last step is shortened so the trajectory ends exactly at ``t_end``.
    """
    if h <= 0 or t_end <= 0:
        raise ValueError("need h > 0 and t_end > 0")
    x0 = np.asarray(x0, dtype=float).reshape(1, -1)
    if x0.shape[1] != f.n:
        raise ValueError(f"x0 has {x0.shape[1]} entries, field has {f.n}")
    steps = int(math.ceil(t_end / h - 1e-9))
    h_eff = t_end / steps
    times = np.arange(steps + 1) * h_eff
    try:
        states = rk4_batch(f.numeric(), x0, h_eff, steps, blowup)[:, 0, :]
    except DivergenceError as err:
        done = err.steps_done
        partial = Trajectory(times[: done + 1], err.states[:, 0, :], diverged=True)
        raise DivergenceError(str(err), partial) from None
    return Trajectory(times, states)


# -- sampling ----------------------------------------------------------------


def sphere_directions(n: int, count: int) -> np.ndarray:
    """Deterministic, roughly uniform unit vectors."""
    if n == 1:
        return np.array([[1.0] if i % 2 == 0 else [-1.0] for i in range(count)])
    if n == 2:
        th = 2 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(th), np.sin(th)])
    u = qmc.Halton(d=n, scramble=False).random(count + 1)[1:]
    g = ndtri(u)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def ball_samples(n: int, radius: float, count: int, axes: bool = True) -> np.ndarray:
    """Quasi-uniform nonzero points of the closed ball of ``radius``.

    Uses an unscrambled Halton sequence (first point dropped) for direction
    and radius, then appends ``+-e_i`` at radii ``0.1r, 0.5r, r`` when
    ``axes`` is set.
    """
    u = qmc.Halton(d=n + 1, scramble=False).random(count + 1)[1:]
    if n == 1:
        direction = np.where(u[:, :1] < 0.5, -1.0, 1.0)
    else:
        g = ndtri(u[:, :n])
        direction = g / np.linalg.norm(g, axis=1, keepdims=True)
    rad = radius * u[:, n:] ** (1.0 / n)
    pts = direction * rad
    if axes:
        extra = []
        for rho in (0.1 * radius, 0.5 * radius, radius):
            for i in range(n):
                for sign in (1.0, -1.0):
                    e = np.zeros(n)
                    e[i] = sign * rho
                    extra.append(e)
        pts = np.vstack([pts, np.array(extra)])
    return pts


# -- estimators --------------------------------------------------------------


@dataclass(frozen=True)
class EstimateReport:
    K_hat: float
    lambda_hat: float
    L_hat: float
    r: float
    samples: int
    fit_residual: float
    K_envelope: float = float("nan")
    stable: bool = True
    message: str = ""


def estimate_K_lambda(
    f: VectorField,
    r: float,
    n_samples: int = 32,
    t_end: float = 20.0,
    h: float = 1e-3,
    tail: float = 0.5,
) -> tuple:
    """Return ``(K_hat, lambda_hat, fit_residual, K_envelope)``.

    Initial states are ``n_samples`` directions on the sphere of radius ``r``.
    ``lambda_hat`` is the mean least-squares decay slope of ``log ||x(t)||``
    over the last ``tail`` fraction of the horizon.  ``K_hat`` is the
    overshoot ``max ||x(t)|| / ||x(0)||`` floored at 1; ``K_envelope`` is the
    smallest constant making ``K e^{-lambda_hat t}`` an upper envelope.
    """
    X0 = r * sphere_directions(f.n, n_samples)
    steps = int(math.ceil(t_end / h - 1e-9))
    h_eff = t_end / steps
    traj = rk4_batch(f.numeric(), X0, h_eff, steps)
    times = np.arange(steps + 1) * h_eff
    norms = np.linalg.norm(traj, axis=2)  # (steps + 1, m)
    ratio = norms / norms[0]
    window = times >= (1 - tail) * t_end
    tw = times[window]
    logs = np.log(np.maximum(ratio[window], np.finfo(float).tiny))
    A = np.column_stack([tw, np.ones_like(tw)])
    coef, res, *_ = np.linalg.lstsq(A, logs, rcond=None)
    slopes = coef[0]
    lam = float(-np.mean(slopes))
    fitted = A @ coef
    resid = float(np.sqrt(np.mean((logs - fitted) ** 2)))
    K = max(1.0, float(np.max(ratio)))
    K_env = max(1.0, float(np.max(ratio * np.exp(lam * times)[:, None])))
    return K, lam, resid, K_env


def _sigma_max(J: np.ndarray) -> np.ndarray:
    return np.linalg.svd(J, compute_uv=False)[..., 0]


def estimate_L(f: VectorField, radius: float, grid_per_dim: int = 101, polish: int = 5) -> float:
    """Sampled ``sup_{x in B_radius} sigma_max(Df(x))``.

    The Jacobian is symbolic; its largest singular value is evaluated on a
    uniform grid of the cube intersected with the ball (plus the sphere
    points along each axis), then the best ``polish`` grid points are refined
    by a constrained local maximization.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    n = f.n
    jac = f.numeric_jacobian()
    axis = np.linspace(-radius, radius, grid_per_dim)
    mesh = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    mesh = mesh[np.linalg.norm(mesh, axis=1) <= radius * (1 + 1e-12)]
    mesh = np.vstack([mesh, ball_samples(n, radius, 0, axes=True)])
    vals = _sigma_max(jac(mesh))
    best = float(vals.max())
    if polish:
        cons = {"type": "ineq", "fun": lambda x: radius**2 - x @ x}
        for i in np.argsort(vals)[::-1][:polish]:
            sol = minimize(lambda x: -_sigma_max(jac(x[None, :]))[0], mesh[i],
                           method="SLSQP", constraints=[cons], options={"ftol": 1e-12, "maxiter": 200})
            if np.linalg.norm(sol.x) <= radius * (1 + 1e-9):
                best = max(best, float(-sol.fun))
    return best


def sup_norm(f: VectorField, radius: float, grid_per_dim: int = 101) -> float:
    """Sampled ``sup_{x in B_radius} ||f(x)||``."""
    n = f.n
    rhs = f.numeric()
    axis = np.linspace(-radius, radius, grid_per_dim)
    mesh = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    mesh = mesh[np.linalg.norm(mesh, axis=1) <= radius * (1 + 1e-12)]
    mesh = np.vstack([mesh, radius * sphere_directions(n, 256)])
    return float(np.linalg.norm(rhs(mesh), axis=1).max())


def estimate(
    f: VectorField,
    r: float,
    n_samples: int = 32,
    t_end: float = 20.0,
    h: float = 1e-3,
    grid_per_dim: int = 101,
) -> EstimateReport:
    """Run both estimators; divergence yields ``stable=False`` rather than raising."""
    L = estimate_L(f, r, grid_per_dim)
    try:
        K, lam, resid, K_env = estimate_K_lambda(f, r, n_samples, t_end, h)
    except DivergenceError as err:
        return EstimateReport(float("nan"), float("nan"), L, r, n_samples, float("nan"),
                              stable=False, message=str(err))
    if not lam > 0:
        return EstimateReport(K, lam, L, r, n_samples, resid, K_env, stable=False,
                              message="no exponential decay detected")
    return EstimateReport(K, lam, L, r, n_samples, resid, K_env)
