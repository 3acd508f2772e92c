"""Problem definitions, grids, state snapshots, and the normalizing
transforms (wave-speed rescaling, boundary homogenization, perturbation
around a reference solution) that reduce every instance to the canonical
form: c = 1 with homogeneous Dirichlet boundaries.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

_CONSISTENCY_TOL = 1e-9   # boundary/initial data compatibility at t=0
_DIFF_STEP = 1e-5         # step for numeric time derivatives of h1, h2


def _zero(*_args):
    return 0.0


def _num_deriv(h, t, step=_DIFF_STEP):
    """First derivative of a scalar callable; one-sided at t=0."""
    if t < step:
        return (-3.0 * h(t) + 4.0 * h(t + step) - h(t + 2 * step)) / (2.0 * step)
    return (h(t + step) - h(t - step)) / (2.0 * step)


def _num_deriv2(h, t, step=_DIFF_STEP):
    """Second derivative of a scalar callable; one-sided at t=0."""
    if t < step:
        return (2.0 * h(t) - 5.0 * h(t + step) + 4.0 * h(t + 2 * step)
                - h(t + 3 * step)) / step ** 2
    return (h(t + step) - 2.0 * h(t) + h(t - step)) / step ** 2


def sample_derivatives(vals: np.ndarray, dx: float) -> tuple[np.ndarray, np.ndarray]:
    """First and second derivative samples of a uniform-grid function.

    4th-order central stencils in the interior, 2nd-order one-sided at the
    boundaries (enough for data whose error budget is set elsewhere).
    """
    v = np.asarray(vals, dtype=float)
    n = v.size
    if n < 5:
        raise ValueError("need at least 5 samples")
    d1 = np.empty(n)
    d2 = np.empty(n)
    d1[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * dx)
    d2[2:-2] = (-v[:-4] + 16 * v[1:-3] - 30 * v[2:-2] + 16 * v[3:-1] - v[4:]) / (12 * dx ** 2)
    for i in (0, 1):
        d1[i] = (-3 * v[i] + 4 * v[i + 1] - v[i + 2]) / (2 * dx)
        d2[i] = (2 * v[i] - 5 * v[i + 1] + 4 * v[i + 2] - v[i + 3]) / dx ** 2
    for i in (-1, -2):
        d1[i] = (3 * v[i] - 4 * v[i - 1] + v[i - 2]) / (2 * dx)
        d2[i] = (2 * v[i] - 5 * v[i - 1] + 4 * v[i - 2] - v[i - 3]) / dx ** 2
    return d1, d2


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProblemSpec:
    """One instance of  -eps*u_xxt - c^2*u_xx + u_tt = f  on [0,1]x[0,T).

    ``forcing`` has signature f(x, t, u, u_x, u_xx, u_t).  ``u0``/``u1``
    are the initial displacement/velocity, ``h1``/``h2`` the Dirichlet
    data at x=0 and x=1.  Analytic derivative callables are optional;
    numeric differencing is used when they are absent.  ``time_scale``
    records the factor applied by rescaling (t_new = time_scale * t_old)
    so results can be mapped back.
    """

    epsilon: float
    c: float = 1.0
    forcing: callable = _zero
    u0: callable = _zero
    u1: callable = _zero
    h1: callable = _zero
    h2: callable = _zero
    T: float = math.inf
    u0_x: callable | None = None
    u0_xx: callable | None = None
    h1_t: callable | None = None
    h2_t: callable | None = None
    h1_tt: callable | None = None
    h2_tt: callable | None = None
    time_scale: float = 1.0

    def __post_init__(self):
        if self.epsilon <= 0 or self.c <= 0:
            raise ValueError("epsilon and c must be positive")
        if self.T <= 0:
            raise ValueError("horizon T must be positive")
        checks = [
            ("h1(0) = u0(0)", self.h1(0.0), self.u0(0.0)),
            ("h2(0) = u0(1)", self.h2(0.0), self.u0(1.0)),
            ("h1'(0) = u1(0)", self._h1_t(0.0), self.u1(0.0)),
            ("h2'(0) = u1(1)", self._h2_t(0.0), self.u1(1.0)),
        ]
        for name, lhs, rhs in checks:
            if abs(lhs - rhs) > _CONSISTENCY_TOL:
                raise ValueError(f"consistency violated: {name} ({lhs} vs {rhs})")

    # derivative access falling back to numeric differencing
    def _h1_t(self, t):
        return self.h1_t(t) if self.h1_t is not None else _num_deriv(self.h1, t)

    def _h2_t(self, t):
        return self.h2_t(t) if self.h2_t is not None else _num_deriv(self.h2, t)

    def _h1_tt(self, t):
        return self.h1_tt(t) if self.h1_tt is not None else _num_deriv2(self.h1, t)

    def _h2_tt(self, t):
        return self.h2_tt(t) if self.h2_tt is not None else _num_deriv2(self.h2, t)

    def u0_samples(self, nx: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(u0, u0_x, u0_xx) samples on the uniform nx-point grid."""
        x = np.linspace(0.0, 1.0, nx)
        v = np.array([self.u0(xi) for xi in x])
        if self.u0_x is not None and self.u0_xx is not None:
            return v, np.array([self.u0_x(xi) for xi in x]), \
                np.array([self.u0_xx(xi) for xi in x])
        d1, d2 = sample_derivatives(v, x[1] - x[0])
        return v, d1, d2

    @property
    def is_canonical(self) -> bool:
        """True when c = 1 and the boundary data vanish at sampled times."""
        if self.c != 1.0:
            return False
        ts = [0.0, 0.1, 0.5, 1.0]
        return all(self.h1(t) == 0.0 and self.h2(t) == 0.0
                   for t in ts if t < self.T)


@dataclass(frozen=True)
class GridFunction:
    """A space-time sample table on the uniform grid over [0,1].

    ``values`` has shape (nx, nt): one row per spatial node, one column
    per stored time t0 + j*dt.  ``ut`` optionally carries time-derivative
    samples on the same layout.
    """

    nx: int
    dt: float
    values: np.ndarray
    ut: np.ndarray | None = None
    t0: float = 0.0

    def __post_init__(self):
        if self.nx < 3:
            raise ValueError("nx must be >= 3")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != self.nx:
            raise ValueError(f"values must be nx x nt, got {v.shape}")
        object.__setattr__(self, "values", v)
        if self.ut is not None:
            u = np.asarray(self.ut, dtype=float)
            if u.shape != v.shape:
                raise ValueError("ut must match values in shape")
            object.__setattr__(self, "ut", u)

    @property
    def nt(self) -> int:
        return self.values.shape[1]

    @property
    def dx(self) -> float:
        return 1.0 / (self.nx - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nx)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.nt)

    def snapshot(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def interp(self, x, t) -> np.ndarray:
        """Bilinear interpolation of u at (x, t), clamped to the grid."""
        return _bilinear(self, self.values, x, t)

    def interp_ut(self, x, t) -> np.ndarray:
        if self.ut is None:
            raise ValueError("no u_t samples stored")
        return _bilinear(self, self.ut, x, t)


def _bilinear(gf: GridFunction, table: np.ndarray, x, t):
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    fx = np.clip(x / gf.dx, 0.0, gf.nx - 1.0)
    ft = np.clip((t - gf.t0) / gf.dt, 0.0, gf.nt - 1.0)
    i0 = np.minimum(fx.astype(int), gf.nx - 2)
    j0 = np.minimum(ft.astype(int), gf.nt - 2)
    ax = fx - i0
    at = ft - j0
    out = (table[i0, j0] * (1 - ax) * (1 - at)
           + table[i0 + 1, j0] * ax * (1 - at)
           + table[i0, j0 + 1] * (1 - ax) * at
           + table[i0 + 1, j0 + 1] * ax * at)
    return out if out.shape else float(out)


@dataclass(frozen=True)
class StatePair:
    """One state snapshot (phi, psi) = (u, u_t) with derivative samples."""

    x: np.ndarray
    phi: np.ndarray
    phi_x: np.ndarray
    phi_xx: np.ndarray
    psi: np.ndarray
    homogeneous: bool = True

    def __post_init__(self):
        n = len(self.x)
        for name in ("phi", "phi_x", "phi_xx", "psi"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"{name} must have {n} samples")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        if self.homogeneous:
            for name in ("phi", "psi"):
                arr = getattr(self, name)
                if abs(arr[0]) > 1e-12 or abs(arr[-1]) > 1e-12:
                    raise ValueError(f"{name} must vanish at the boundary")

    @classmethod
    def from_callables(cls, phi, psi, nx: int = 201, phi_x=None, phi_xx=None,
                       homogeneous: bool = True) -> "StatePair":
        x = np.linspace(0.0, 1.0, nx)
        pv = np.array([phi(xi) for xi in x])
        sv = np.array([psi(xi) for xi in x])
        if phi_x is not None and phi_xx is not None:
            d1 = np.array([phi_x(xi) for xi in x])
            d2 = np.array([phi_xx(xi) for xi in x])
        else:
            d1, d2 = sample_derivatives(pv, x[1] - x[0])
        return cls(x=x, phi=pv, phi_x=d1, phi_xx=d2, psi=sv, homogeneous=homogeneous)

    @classmethod
    def from_grid(cls, gf: GridFunction, j: int, homogeneous: bool = True) -> "StatePair":
        phi = gf.values[:, j]
        d1, d2 = sample_derivatives(phi, gf.dx)
        if gf.ut is not None:
            psi = gf.ut[:, j]
        elif 0 < j < gf.nt - 1:
            psi = (gf.values[:, j + 1] - gf.values[:, j - 1]) / (2 * gf.dt)
        else:
            raise ValueError("no u_t available at the requested column")
        return cls(x=gf.x, phi=phi, phi_x=d1, phi_xx=d2, psi=psi,
                   homogeneous=homogeneous)


# ---------------------------------------------------------------------------
# normalizing transforms
# ---------------------------------------------------------------------------

def rescale_unit_wavespeed(spec: ProblemSpec) -> ProblemSpec:
    """Equivalent problem with unit wave speed.

    Substituting t' = c*t (so v(x,t') = u(x, t'/c)) turns
    -eps*u_xxt - c^2*u_xx + u_tt = f into the same equation with
    c' = 1, eps' = eps/c and f' = f/c^2, where f' receives the rescaled
    velocity argument.  ``time_scale`` on the result records c.
    """
    if spec.c == 1.0:
        return spec
    c = spec.c
    f, u1, h1, h2 = spec.forcing, spec.u1, spec.h1, spec.h2

    def f_new(x, t, u, ux, uxx, ut):
        return f(x, t / c, u, ux, uxx, c * ut) / c ** 2

    return replace(
        spec,
        epsilon=spec.epsilon / c,
        c=1.0,
        forcing=f_new,
        u1=lambda x: u1(x) / c,
        h1=lambda t: h1(t / c),
        h2=lambda t: h2(t / c),
        h1_t=(lambda t: spec._h1_t(t / c) / c),
        h2_t=(lambda t: spec._h2_t(t / c) / c),
        h1_tt=(lambda t: spec._h1_tt(t / c) / c ** 2),
        h2_tt=(lambda t: spec._h2_tt(t / c) / c ** 2),
        T=spec.T * c,
        time_scale=spec.time_scale * c,
    )


def homogenize_boundaries(spec: ProblemSpec) -> ProblemSpec:
    """Equivalent problem with zero Dirichlet data (requires c = 1).

    With the linear lift p(x,t) = (1-x)*h1(t) + x*h2(t), the shifted
    unknown v = u - p satisfies the same equation with v(0,t)=v(1,t)=0,
    initial data u0 - p(.,0), u1 - p_t(.,0), and forcing

        f~(x,t,v,v_x,v_xx,v_t)
            = f(x,t, v+p, v_x + h2 - h1, v_xx, v_t + p_t) - p_tt.
    """
    if spec.c != 1.0:
        raise ValueError("rescale to c=1 before homogenizing")
    if spec.is_canonical:
        return spec
    f = spec.forcing
    h1, h2 = spec.h1, spec.h2
    h1_t, h2_t = spec._h1_t, spec._h2_t
    h1_tt, h2_tt = spec._h1_tt, spec._h2_tt
    u0, u1 = spec.u0, spec.u1

    def _ev(h, t):
        # boundary callables are scalar-in/scalar-out; broadcast over grids
        ta = np.asarray(t, dtype=float)
        if ta.ndim == 0:
            return float(h(float(ta)))
        return np.vectorize(h)(ta)

    def p(x, t):
        return (1.0 - x) * _ev(h1, t) + x * _ev(h2, t)

    def p_t(x, t):
        return (1.0 - x) * _ev(h1_t, t) + x * _ev(h2_t, t)

    def p_tt(x, t):
        return (1.0 - x) * _ev(h1_tt, t) + x * _ev(h2_tt, t)

    def f_new(x, t, v, vx, vxx, vt):
        return f(x, t, v + p(x, t), vx + _ev(h2, t) - _ev(h1, t), vxx,
                 vt + p_t(x, t)) - p_tt(x, t)

    return replace(
        spec,
        forcing=f_new,
        u0=lambda x: u0(x) - p(x, 0.0),
        u1=lambda x: u1(x) - p_t(x, 0.0),
        h1=_zero,
        h2=_zero,
        h1_t=_zero,
        h2_t=_zero,
        h1_tt=_zero,
        h2_tt=_zero,
        u0_x=None,
        u0_xx=None,
    )


def residual_grid(spec: ProblemSpec, gf: GridFunction) -> np.ndarray:
    """Interior residual  -eps*u_xxt - c^2*u_xx + u_tt - f  on gf's grid.

    Central second-order differences in both axes; returned array covers
    interior nodes and interior times only, shape (nx-2, nt-2).
    """
    u = gf.values
    dx, dt = gf.dx, gf.dt
    uxx = (u[:-2, :] - 2 * u[1:-1, :] + u[2:, :]) / dx ** 2
    utt = (u[1:-1, :-2] - 2 * u[1:-1, 1:-1] + u[1:-1, 2:]) / dt ** 2
    uxxt = (uxx[:, 2:] - uxx[:, :-2]) / (2 * dt)
    ux = (u[2:, :] - u[:-2, :]) / (2 * dx)
    if gf.ut is not None:
        ut = gf.ut[1:-1, 1:-1]
    else:
        ut = (u[1:-1, 2:] - u[1:-1, :-2]) / (2 * dt)
    x = gf.x[1:-1]
    ts = gf.times[1:-1]
    fvals = np.empty((gf.nx - 2, gf.nt - 2))
    for j, t in enumerate(ts):
        for i, xi in enumerate(x):
            fvals[i, j] = spec.forcing(xi, t, u[i + 1, j + 1], ux[i, j + 1],
                                       uxx[i, j + 1], ut[i, j])
    return -spec.epsilon * uxxt - spec.c ** 2 * uxx[:, 1:-1] + utt - fvals


def perturbation_spec(spec: ProblemSpec, u_star: GridFunction,
                      residual_tol: float = 1e-2) -> ProblemSpec:
    """Problem whose null solution corresponds to the reference u_star.

    The difference u = u~ - u* solves the same equation with forcing
    f(x,t, u+u*, u_x+u*_x, u_xx+u*_xx, u_t+u*_t) - f(x,t, u*, ...), which
    vanishes at the zero state by construction.  u_star must satisfy the
    original equation on its grid to ``residual_tol``.
    """
    res = float(np.max(np.abs(residual_grid(spec, u_star))))
    if res > residual_tol:
        raise ValueError(f"reference solution residual {res:.3e} exceeds "
                         f"tolerance {residual_tol:.3e}")
    if u_star.ut is None:
        raise ValueError("u_star needs u_t samples")
    f = spec.forcing
    dx = u_star.dx
    ux_star = np.gradient(u_star.values, dx, axis=0)
    uxx_star = np.gradient(ux_star, dx, axis=0)
    gx = GridFunction(u_star.nx, u_star.dt, ux_star, t0=u_star.t0)
    gxx = GridFunction(u_star.nx, u_star.dt, uxx_star, t0=u_star.t0)

    def f_new(x, t, u, ux, uxx, ut):
        s = u_star.interp(x, t)
        sx = gx.interp(x, t)
        sxx = gxx.interp(x, t)
        st = u_star.interp_ut(x, t)
        return f(x, t, u + s, ux + sx, uxx + sxx, ut + st) \
            - f(x, t, s, sx, sxx, st)

    def u0_new(x):
        return spec.u0(x) - u_star.interp(x, u_star.t0)

    def u1_new(x):
        return spec.u1(x) - u_star.interp_ut(x, u_star.t0)

    h1 = spec.h1
    h2 = spec.h2
    return replace(
        spec,
        forcing=f_new,
        u0=u0_new,
        u1=u1_new,
        h1=lambda t: h1(t) - u_star.interp(0.0, t),
        h2=lambda t: h2(t) - u_star.interp(1.0, t),
        h1_t=None,
        h2_t=None,
        h1_tt=None,
        h2_tt=None,
        u0_x=None,
        u0_xx=None,
    )


# ---------------------------------------------------------------------------
# grid serialization
# ---------------------------------------------------------------------------

def write_grid_csv(gf: GridFunction, path) -> None:
    """Serialize a grid as CSV with header ``x,t,u,ut`` (row-major in t)."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "t", "u", "ut"])
        x = gf.x
        for j, t in enumerate(gf.times):
            for i in range(gf.nx):
                ut = gf.ut[i, j] if gf.ut is not None else ""
                wr.writerow([f"{x[i]:.12g}", f"{t:.12g}",
                             f"{gf.values[i, j]:.12g}",
                             f"{ut:.12g}" if ut != "" else ""])


def read_grid_csv(path) -> GridFunction:
    """Parse a grid written by :func:`write_grid_csv`."""
    xs, ts, us, uts = [], [], [], []
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if header[:4] != ["x", "t", "u", "ut"]:
            raise ValueError(f"unexpected CSV header {header}")
        for row in rd:
            xs.append(float(row[0]))
            ts.append(float(row[1]))
            us.append(float(row[2]))
            uts.append(float(row[3]) if row[3] != "" else math.nan)
    x = np.unique(np.array(xs))
    t = np.unique(np.array(ts))
    nx, nt = len(x), len(t)
    if nx * nt != len(us):
        raise ValueError("CSV rows do not fill a rectangular grid")
    vals = np.asarray(us).reshape(nt, nx).T
    utv = np.asarray(uts).reshape(nt, nx).T
    ut = None if np.isnan(utv).all() else utv
    dt = t[1] - t[0] if nt > 1 else 1.0
    return GridFunction(nx=nx, dt=dt, values=vals, ut=ut, t0=float(t[0]))
