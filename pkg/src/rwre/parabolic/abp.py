"""Explicit constant of the discrete parabolic maximum principle."""
from __future__ import annotations

from ..geometry import unit_ball_volume


def explicit_constant(U, d=None):
    """``C(U, d)`` in ``max_D u <= max_Dp u + C R^(d/(d+1)) ||f/eps_a||_{D,d+1}``.

    .. math::

        C(U, d) = \\left(\\frac{2^{3d+1} (\\#U)^{d-1} d^d}{(d+1)^d \\omega_d}\\right)^{1/(d+1)}

    with ``omega_d`` the volume of the Euclidean unit ball.  Derivation, for
    ``M = max_D u > 0 >= max_Dp u``:

    * the cone ``{(xi, h) : R|xi| < h < M/2}`` has volume
      ``omega_d M^(d+1) / (2^(d+1) (d+1) R^d)`` and is covered by the sets
      ``chi(x, n) = I_u(x, n) x (u(x, n+1) - xi.x, u(x, n) - xi.x]`` over the
      upper contact set;
    * ``|I_u(x, n)| <= 4^d (#U)^d (L*u)^d / v`` with ``v = |conv{a z}|``,
      from the polar containment and the volume-product bound ``4^d``;
    * with ``s = a(x,0)(u(x,n) - u(x,n+1))``, AM-GM gives
      ``s (L*u)^d <= d^d ((s + L*u)/(d+1))^(d+1)`` and ``s + L*u <= f``;
    * ``a(x, 0) v = #U eps_a^(d+1)``.
    """
    d = U.d if d is None else d
    m = U.size
    val = 2.0 ** (3 * d + 1) * m ** (d - 1) * d**d / ((d + 1) ** d * unit_ball_volume(d))
    return val ** (1.0 / (d + 1))


def step2_constant(U, d=None):
    """Factor ``4^d (#U)^d`` in ``|I_u| <= 4^d (#U)^d (L*u)^d / |conv U_{x,n}|``."""
    d = U.d if d is None else d
    return 4.0**d * U.size**d
