"""Newton-Raphson steady states and the fixed-step RK4 reference integrator.

Both solvers work on the packed 5-vector ``v`` with ``R(v)`` the packed
orientation rate, so ``v' = R(v)`` keeps the trace at one by construction.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .errors import FiberOrientError, NonFiniteState, SingularJacobian
from .models import model_jacobian, residual
from .tensors import unpack

PHYSICAL_TOL = 1e-9
OFFDIAG = (1, 2, 4)


@dataclass(frozen=True)
class NewtonOptions:
    """Newton settings; ``perturb_guess`` seeds zero off-diagonal guess entries."""

    tol_residual: float = 1e-10
    max_iter: int = 200
    damping: float = 1.0
    rank_augmentation: bool = True
    perturb_guess: float = 1e-4

    def __post_init__(self):
        if self.tol_residual <= 0 or self.max_iter < 1:
            raise ValueError("tolerance must be positive and max_iter >= 1")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")


@dataclass
class SolveReport:
    """Outcome of a Newton solve."""

    state: np.ndarray
    iterations: int
    residual_history: list
    converged: bool
    physical: bool
    warnings: list = field(default_factory=list)

    @property
    def tensor(self):
        return unpack(self.state)

    @property
    def residual(self):
        return self.residual_history[-1] if self.residual_history else float("nan")


@dataclass
class Trajectory:
    """RK4 output: times in strain units and packed states."""

    times: np.ndarray
    states: np.ndarray
    steady_reached: bool
    final_residual: float

    @property
    def final(self):
        return self.states[-1]


def is_physical_vector(v, tol=PHYSICAL_TOL):
    lam = np.linalg.eigvalsh(unpack(v))
    return bool(lam.min() >= -tol and lam.max() <= 1.0 + tol)


def seed_guess(guess, perturb):
    """Return a packed copy of ``guess`` with zero off-diagonals seeded."""
    v = np.asarray(guess, dtype=float)
    v = v.copy() if v.shape == (5,) else np.array([v[0, 0], v[0, 1], v[0, 2], v[1, 1], v[1, 2]])
    if perturb:
        for k in OFFDIAG:
            if v[k] == 0.0:
                v[k] = perturb
    return v


def _newton_step(J, R, rnorm, augment):
    s = np.linalg.svd(J, compute_uv=False)
    rank = int(np.sum(s > 1e-10 * s[0])) if s[0] > 0 else 0
    if rank == 5:
        return np.linalg.solve(J, R), False
    if augment and rnorm > 0:
        # prepend the gradient of |R| with target |R| and solve least squares
        Ja = np.vstack([R @ J / rnorm, J])
        ra = np.concatenate([[rnorm], R])
        return np.linalg.lstsq(Ja, ra, rcond=None)[0], True
    return np.linalg.lstsq(J, R, rcond=None)[0], True


def newton_steady(spec, flow, guess, opts=None):
    """Steady orientation state by Newton iteration with the exact Jacobian.

    Parameters
    ----------
    spec : ModelSpec
    flow : FlowKinematics
    guess : 5-vector or 3x3 tensor
        Starting point; zero off-diagonal entries are seeded with
        ``opts.perturb_guess``.
    opts : NewtonOptions, optional

    Returns
    -------
    SolveReport
        ``converged`` is false when ``max_iter`` is exhausted; the state is then
        the iterate with the smallest residual.
    """
    opts = NewtonOptions() if opts is None else opts
    v = seed_guess(guess, opts.perturb_guess)
    warn = []
    if not np.any(flow.L):
        warn.append("ZeroFlow: all rates vanish; guess returned unchanged")
        return SolveReport(v, 0, [0.0], True, is_physical_vector(v), warn)

    history = []
    best_v, best_r = v.copy(), np.inf
    converged = False
    it = 0
    while True:
        rj = model_jacobian(spec, v, flow)
        r = float(np.linalg.norm(rj.R))
        history.append(r)
        if not np.isfinite(r):
            warn.append("non-finite residual")
            break
        if r < best_r:
            best_v, best_r = v.copy(), r
        if r <= opts.tol_residual:
            converged = True
            break
        if it >= opts.max_iter:
            warn.append(f"MaxIterationsExceeded: {opts.max_iter} iterations")
            break
        try:
            step, augmented = _newton_step(rj.J, rj.R, r, opts.rank_augmentation)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(str(exc)) from exc
        if not np.all(np.isfinite(step)):
            raise SingularJacobian("Newton step is not finite")
        if augmented and "rank-deficient Jacobian" not in warn:
            warn.append("rank-deficient Jacobian")
        v = v - opts.damping * step
        it += 1
    state = v if converged else best_v
    physical = is_physical_vector(state)
    if converged and not physical:
        warn.append("non-physical solution")
    return SolveReport(state, it, history, converged, physical, warn)


def is_stable(spec, flow, v, tol=1e-10):
    """True when every eigenvalue of the rate Jacobian at ``v`` has negative real part."""
    J = model_jacobian(spec, v, flow).J
    return bool(np.linalg.eigvals(J).real.max() < -tol)


def newton_multistart(spec, flow, guesses, opts=None, dampings=(1.0, 0.5)):
    """Newton over several guesses and damping factors, keeping the first
    converged, physical and linearly stable root.

    Candidates run in order, full steps first.  Solves that raise a package
    error count as failures.  When nothing qualifies, the first converged
    physical root is returned, or else the first attempt, with a warning.
    """
    opts = NewtonOptions() if opts is None else opts
    attempts = []
    for d in dampings:
        o = dataclasses.replace(opts, damping=d)
        for k, g in enumerate(guesses):
            try:
                rep = newton_steady(spec, flow, g, o)
            except FiberOrientError as exc:
                attempts.append((k, d, None, str(exc)))
                continue
            ok = rep.converged and rep.physical
            if ok and is_stable(spec, flow, rep.state):
                if k or d != opts.damping:
                    rep.warnings.append(f"accepted guess {k} with damping {d:g}")
                return rep
            attempts.append((k, d, rep, None))
    for k, d, rep, _ in attempts:
        if rep is not None and rep.converged and rep.physical:
            rep.warnings.append(f"no stable root found; guess {k} with damping {d:g} kept")
            return rep
    for k, d, rep, err in attempts:
        if rep is not None:
            rep.warnings.append("no converged physical root among the guesses")
            return rep
    raise FiberOrientError("every Newton attempt failed: " + "; ".join(
        err for *_, err in attempts if err))


def rk4_transient(spec, flow, a0, dt, t_end, steady_tol=1e-8, sustain=10,
                  record_every=1):
    """Classic fixed-step RK4 on ``v' = R(v)``.

    Integration stops early once ``|R| <= steady_tol`` has held for ``sustain``
    consecutive steps; ``steady_tol = 0`` integrates to ``t_end``.

    Returns
    -------
    Trajectory
        States every ``record_every`` steps plus the final one.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    v = seed_guess(a0, 0.0)
    f = lambda x: residual(spec, x, flow)
    times, states = [0.0], [v.copy()]
    nsteps = int(np.ceil(t_end / dt - 1e-9))
    calm = 0
    steady = False
    rnorm = np.nan
    t = 0.0
    for k in range(1, nsteps + 1):
        h = min(dt, t_end - t)
        k1 = f(v)
        rnorm = float(np.linalg.norm(k1))
        if steady_tol > 0 and rnorm <= steady_tol:
            calm += 1
            if calm >= sustain:
                steady = True
                break
        else:
            calm = 0
        k2 = f(v + 0.5 * h * k1)
        k3 = f(v + 0.5 * h * k2)
        k4 = f(v + h * k3)
        v = v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = k * dt if k < nsteps else t_end
        if not np.all(np.isfinite(v)):
            raise NonFiniteState(t)
        if k % record_every == 0 or k == nsteps:
            times.append(t)
            states.append(v.copy())
    if times[-1] != t:
        times.append(t)
        states.append(v.copy())
    if not steady:
        rnorm = float(np.linalg.norm(f(v)))
    return Trajectory(np.array(times), np.array(states), steady, rnorm)


COMPONENTS = {"a11": 0, "a12": 1, "a13": 2, "a22": 3, "a23": 4}


def percent_error(nr, rk, decimals=6):
    """Relative error ``(nr - rk)/rk * 100`` on values rounded to ``decimals``.

    Components that round to zero in both solutions (symmetry zeros) report
    0; a nonzero difference over a zero reference reports ``inf``.
    """
    if decimals is not None:
        nr, rk = round(float(nr), decimals), round(float(rk), decimals)
    diff = nr - rk
    if rk == 0.0:
        return 0.0 if diff == 0.0 else float("inf")
    return diff / rk * 100.0


@dataclass
class Comparison:
    """Newton and RK4 results and their per-component percentage errors."""

    newton: SolveReport
    rk4: Trajectory
    errors: dict


def steady_compare(spec, flow, guess, rk_opts=None, nr_opts=None,
                   components=("a11", "a22", "a12")):
    """Compare the Newton steady state against a long RK4 run.

    ``rk_opts`` is passed to :func:`rk4_transient` (keys ``a0``, ``dt``,
    ``t_end``, ``steady_tol``); the RK4 start defaults to a near-isotropic state.
    """
    rk = {"a0": np.array([1.0, 1e-4, 1e-4, 1.0, 1e-4]) / 3.0, "dt": 0.1,
          "t_end": 5000.0, "steady_tol": 1e-10}
    rk.update(rk_opts or {})
    nr = newton_steady(spec, flow, guess, nr_opts)
    traj = rk4_transient(spec, flow, rk.pop("a0"), **rk)
    errs = {c: percent_error(nr.state[COMPONENTS[c]], traj.final[COMPONENTS[c]])
            for c in components}
    return Comparison(nr, traj, errs)
