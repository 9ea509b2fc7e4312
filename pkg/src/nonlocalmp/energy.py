"""Nonlinearities, the energy functional and its ray maximizer.

The energy of a constrained P1 function u is

    I[u] = 1/2 B[u, u] - int F(u(x)) dx over the physical domain,

with F the antiderivative of the nonlinearity f from 0.  Along a ray
t -> I[t u] the functional is a polynomial in t whose coefficients come
from B[u, u] and the moments int u^k dx, which gives closed forms for
the maximizer t* of every built-in nonlinearity except the Allen-Cahn
one; there t* is the unique positive critical point of the quartic ray
polynomial.
"""

import math

import numpy as np

from .errors import ZeroDirection

__all__ = [
    "Nonlinearity",
    "Cubic",
    "Quintic",
    "CubicMinusLinear",
    "AllenCahn",
    "nonlinearity_from_name",
    "moments",
    "ray_coefficients",
    "ray_energy",
    "ray_slope",
    "t_star",
    "energy",
    "gradient",
]


class Nonlinearity:
    """Base class; subclasses define f, its antiderivative and the ray rule.

    ``F_coeffs`` maps powers k to coefficients a_k of F(t) = sum a_k t^k.
    ``hypothesis_meta`` documents which growth/shape hypotheses
    (A2 growth bound with (a1, a2, alpha); A3 zero slope at the origin;
    A4 scaling with (mu, theta); A5 superlinear growth) hold.
    """

    name = "base"
    F_coeffs = {}
    hypothesis_meta = {}

    def f(self, t):
        raise NotImplementedError

    def F(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for k, a in self.F_coeffs.items():
            out = out + a * t**k
        return out if out.ndim else float(out)

    @property
    def moment_powers(self):
        return tuple(sorted(self.F_coeffs))

    def t_star_closed(self, Buu, P):
        """Closed-form ray maximizer, or None when no closed form exists."""
        return None


class Cubic(Nonlinearity):
    """f(t) = t^3, F(t) = t^4/4."""

    name = "cubic"
    F_coeffs = {4: 0.25}
    hypothesis_meta = {
        "a1": 1.0, "a2": 1.0, "alpha": 3, "mu_range": (2.0, 4.0),
        "theta": 1.0, "A2": True, "A3": True, "A4": True, "A5": True,
    }

    def f(self, t):
        t = np.asarray(t, dtype=float)
        return t**3

    def t_star_closed(self, Buu, P):
        if P[4] <= 0:
            raise ZeroDirection("vanishing fourth moment")
        return math.sqrt(Buu / P[4])


class Quintic(Nonlinearity):
    """f(t) = t^5, F(t) = t^6/6."""

    name = "quintic"
    F_coeffs = {6: 1.0 / 6.0}
    hypothesis_meta = {
        "a1": 1.0, "a2": 1.0, "alpha": 5, "mu_range": (2.0, 6.0),
        "theta": 1.0, "A2": True, "A3": True, "A4": True, "A5": True,
    }

    def f(self, t):
        t = np.asarray(t, dtype=float)
        return t**5

    def t_star_closed(self, Buu, P):
        if P[6] <= 0:
            raise ZeroDirection("vanishing sixth moment")
        return (Buu / P[6]) ** 0.25


class CubicMinusLinear(Nonlinearity):
    """f(t) = t^3 - t, F(t) = t^4/4 - t^2/2; the zero-slope hypothesis fails."""

    name = "cubic_minus_linear"
    F_coeffs = {4: 0.25, 2: -0.5}
    hypothesis_meta = {
        "a1": 1.0, "a2": 2.0, "alpha": 3, "mu_range": (2.0, 4.0),
        "theta": 1.0, "A2": True, "A3": False, "A4": True, "A5": True,
    }

    def f(self, t):
        t = np.asarray(t, dtype=float)
        return t**3 - t

    def t_star_closed(self, Buu, P):
        if P[4] <= 0:
            raise ZeroDirection("vanishing fourth moment")
        return math.sqrt((Buu + P[2]) / P[4])


class AllenCahn(Nonlinearity):
    """f(t) = (-t - 3 t^2 + 4 t^3)/2, the bistable Allen-Cahn source term.

    F(t) = -t^2/4 - t^3/2 + t^4/2.  Neither the zero-slope nor the
    scaling hypothesis holds; the ray maximizer has no closed form and is
    found from the critical points of the quartic ray polynomial.
    """

    name = "allen_cahn"
    F_coeffs = {2: -0.25, 3: -0.5, 4: 0.5}
    hypothesis_meta = {
        "a1": 2.0, "a2": 4.0, "alpha": 3, "mu_range": None,
        "theta": None, "A2": True, "A3": False, "A4": False, "A5": True,
    }

    def f(self, t):
        t = np.asarray(t, dtype=float)
        return 0.5 * (-t - 3.0 * t**2 + 4.0 * t**3)


NONLINEARITY_NAMES = {
    "cubic": Cubic,
    "quintic": Quintic,
    "cubic_minus_linear": CubicMinusLinear,
    "allen_cahn": AllenCahn,
}


def nonlinearity_from_name(name):
    try:
        return NONLINEARITY_NAMES[name]()
    except KeyError:
        raise ValueError(f"unknown nonlinearity {name!r}; expected one of "
                         f"{sorted(NONLINEARITY_NAMES)}") from None


# -- ray restriction ----------------------------------------------------------

def moments(form, u_full, powers):
    """int u^k dx over the physical domain for every requested power."""
    uq = form.values_at_omega_quad(u_full)
    w = form.omega_quad_weights()
    return {k: float(w @ uq**k) for k in powers}


def ray_coefficients(nl, Buu, P):
    """Coefficients c[k] of g(t) = I[t u] = sum_k c[k] t^k."""
    top = max([2, *nl.F_coeffs])
    c = np.zeros(top + 1)
    c[2] = 0.5 * Buu
    for k, a in nl.F_coeffs.items():
        c[k] -= a * P[k]
    return c


def ray_energy(c, t):
    return np.polynomial.polynomial.polyval(t, c)


def ray_slope(c, t):
    dc = np.polynomial.polynomial.polyder(c)
    return np.polynomial.polynomial.polyval(t, dc)


def _t_star_from_coeffs(nl, Buu, P, c, grid_max=10.0, grid_step=1e-4):
    closed = nl.t_star_closed(Buu, P)
    if closed is not None:
        return closed
    # critical points of g: roots of g'(t)/t, a polynomial of degree <= 2
    dc = np.polynomial.polynomial.polyder(c)[1:]
    roots = np.polynomial.polynomial.polyroots(dc)
    best_t, best_g = None, 0.0
    for r in roots:
        if abs(r.imag) > 1e-10 or r.real <= 0:
            continue
        g = ray_energy(c, r.real)
        # prefer the global maximum; break ties toward larger t
        if best_t is None or g > best_g + 1e-15 * abs(best_g) \
                or (abs(g - best_g) <= 1e-15 * abs(best_g) and r.real > best_t):
            best_t, best_g = float(r.real), float(g)
    if best_t is not None and best_g > 0.0:
        return best_t
    # fall back to a dense grid when no positive critical point works
    ts = np.arange(grid_step, grid_max + grid_step, grid_step)
    gs = ray_energy(c, ts)
    i = int(np.argmax(gs))
    if gs[i] <= 0.0:
        raise ZeroDirection("ray energy has no positive maximum")
    return float(ts[i])


def t_star(form, nl, u, grid_max=10.0, grid_step=1e-4):
    """Maximizer of t -> I[t u] over t > 0."""
    u_full = form.as_full(u)
    u_unknown = u_full[form.unknown_idx]
    Buu = float(u_unknown @ form.B @ u_unknown)
    if Buu <= 0.0:
        raise ZeroDirection("direction carries no bilinear-form energy")
    P = moments(form, u_full, nl.moment_powers)
    c = ray_coefficients(nl, Buu, P)
    return _t_star_from_coeffs(nl, Buu, P, c, grid_max, grid_step)


# -- energy and gradient -------------------------------------------------------

def energy(form, nl, u):
    """I[u] = 1/2 B[u,u] - int F(u) dx over the physical domain."""
    u_full = form.as_full(u)
    u_unknown = u_full[form.unknown_idx]
    quad_F = float(form.omega_quad_weights()
                   @ nl.F(form.values_at_omega_quad(u_full)))
    return 0.5 * float(u_unknown @ form.B @ u_unknown) - quad_F


def gradient(form, nl, w):
    """Unknown-node gradient g with g_i = (B w)_i - int f(w) phi_i dx.

    The directional derivative of the energy at w along any constrained
    P1 function v is then g . v (v restricted to unknown nodes).
    """
    w_full = form.as_full(w)
    w_unknown = w_full[form.unknown_idx]
    load = form.load_vector(nl.f(form.values_at_omega_quad(w_full)))
    return form.B @ w_unknown - load
