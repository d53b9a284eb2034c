"""Parameter solving for the sphere and ball colorings.

For radius R above the threshold sqrt(5)/2 the construction's cap angle phi
satisfies the closed form (plus-sign root)

    cos^2 phi = 1/2 - 1/(4 R^2) + sqrt(1/4 - (5 R^2 - 1) / (16 R^4)),

equivalent to the defining equation 1 + 8 cos^2 phi = 16 R^2 sin^2 phi cos^2 phi.
The critical shrink coefficient is lambda0 = 1/sqrt(1 + 8 cos^2 phi)
= 1/(2 R sin 2 phi), and the bound base is

    x(R) = sqrt(5 - 2/R^2 + 4 sqrt(1 - (5 R^2 - 1)/(4 R^4)))  =  1/lambda0,

extended by x(R) = 2R on (1/2, sqrt(5)/2].  Auxiliary angles:
sin(alpha) = lambda sin(phi), sin(gamma) = lambda sin(2 phi).

The shell machinery for ball colorings reuses the same closed form as a
function of the shell radius r, clamped below the solution r_star of
cos^2 phi(r_star) = 1/2 + eps, with shrink lambda(r) = 1/(x(r) + eps) and a
positive forbidden-interval half-width delta(r) driving the radius recursion
R_{k+1} = R_k - delta(R_k)/2.

Numerical care: for large R the direct cos^2 phi expression cancels badly, so
sin^2 phi is computed from the algebraically equivalent stable form

    sin^2 phi = 1/(4 R^2) + 2 u / (1 + sqrt(1 - 4 u)),   u = (5 R^2 - 1)/(16 R^4).
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, InvalidParameterError, RegimeError

#: Regime threshold: the closed form for phi exists only above this radius.
REGIME_THRESHOLD = math.sqrt(5.0) / 2.0

LARGE_R = "LargeR"
SMALL_R = "SmallR"

_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class RadiusParams:
    """Solved parameters for one radius.

    In the SmallR regime `lambda0` holds the eps-regularized shrink
    coefficient 1/(2 R sin 2 phi + eps) (there is no critical coefficient
    below the threshold), `x` holds the 2R bound-base branch and `eps` the
    regularization; in the LargeR regime `eps` is None.
    """

    R: float
    phi: float
    lambda0: float
    alpha: float
    gamma: float
    x: float
    regime: str
    eps: Optional[float] = None

    def as_dict(self):
        d = {
            "R": self.R, "phi": self.phi, "lambda0": self.lambda0,
            "alpha": self.alpha, "gamma": self.gamma, "x": self.x,
            "regime": self.regime,
        }
        if self.eps is not None:
            d["eps"] = self.eps
        return d


def _sin_sq_cap_angle(R):
    # Stable evaluation of sin^2 phi for R > threshold (see module docstring).
    R2 = R * R
    u = (5.0 * R2 - 1.0) / (16.0 * R2 * R2)
    disc = 1.0 - 4.0 * u
    if disc < 0.0:  # only possible from rounding right at the threshold
        disc = 0.0
    return 1.0 / (4.0 * R2) + 2.0 * u / (1.0 + math.sqrt(disc))


def cap_angle(R):
    """Packing-cap angular radius phi(R) in (0, pi/4), for R > sqrt(5)/2.

    Raises RegimeError at or below the threshold (use small_radius_params
    there) and checks the defining-equation residual to 1e-10.
    """
    R = float(R)
    if not R > REGIME_THRESHOLD:
        raise RegimeError(f"cap angle is defined for R > sqrt(5)/2, got R = {R}")
    s2 = _sin_sq_cap_angle(R)
    c2 = 1.0 - s2
    residual = abs(1.0 + 8.0 * c2 - 16.0 * R * R * s2 * c2)
    if residual > _RESIDUAL_TOL:
        raise InvalidParameterError(f"defining-equation residual {residual} exceeds 1e-10 at R = {R}")
    return math.asin(math.sqrt(s2))


def critical_shrink(R):
    """Critical shrink coefficient lambda0(R), from both closed forms."""
    phi = cap_angle(R)
    c2 = math.cos(phi) ** 2
    lam = 1.0 / math.sqrt(1.0 + 8.0 * c2)
    alt = 1.0 / (2.0 * R * math.sin(2.0 * phi))
    if abs(lam - alt) > _RESIDUAL_TOL:
        raise InvalidParameterError(f"lambda0 closed forms disagree by {abs(lam - alt)} at R = {R}")
    return lam


def bound_base(R):
    """Base x(R) of the exponential color-count bound; piecewise in R.

    2R on (1/2, sqrt(5)/2], the closed form (equal to 1/lambda0) above.
    """
    R = float(R)
    if not R > 0.5:
        raise DomainError(f"bound base needs R > 1/2, got {R}")
    if R <= REGIME_THRESHOLD:
        return 2.0 * R
    R2 = R * R
    inner = 1.0 - (5.0 * R2 - 1.0) / (4.0 * R2 * R2)
    if inner < 0.0:
        inner = 0.0
    x = math.sqrt(5.0 - 2.0 / R2 + 4.0 * math.sqrt(inner))
    lam = critical_shrink(R)
    if abs(x - 1.0 / lam) > _RESIDUAL_TOL:
        raise InvalidParameterError(f"x(R) and 1/lambda0 disagree by {abs(x - 1.0 / lam)} at R = {R}")
    return x


def solve_params(R):
    """Full LargeR parameter set for radius R > sqrt(5)/2."""
    phi = cap_angle(R)
    lam = critical_shrink(R)
    return RadiusParams(
        R=float(R),
        phi=phi,
        lambda0=lam,
        alpha=math.asin(lam * math.sin(phi)),
        gamma=math.asin(lam * math.sin(2.0 * phi)),
        x=bound_base(R),
        regime=LARGE_R,
    )


def small_radius_params(R, phi, eps):
    """Parameter set for 1/2 < R <= sqrt(5)/2 with free cap angle phi.

    The shrink coefficient is lambda = 1/(2 R sin 2 phi + eps), which pins the
    piece diameter to 2 R lambda sin 2 phi = 1 - eps * lambda < 1 strictly.
    The cross-piece separation 2 R sin(phi - alpha) is computed and reported
    by downstream certificates but is NOT asserted to exceed 1: for radii in
    this regime it generally does not, which is why colorings here assign
    distinct colors to distinct pieces rather than to whole rotated copies.
    """
    R = float(R)
    phi = float(phi)
    eps = float(eps)
    if not 0.5 < R <= REGIME_THRESHOLD:
        raise RegimeError(f"small-radius regime needs 1/2 < R <= sqrt(5)/2, got {R}")
    if not 0.0 < phi < math.pi / 4.0:
        raise DomainError(f"cap angle must lie in (0, pi/4), got {phi}")
    if not eps > 0.0:
        raise DomainError("eps must be strictly positive (the margins below are open otherwise)")
    lam = 1.0 / (2.0 * R * math.sin(2.0 * phi) + eps)
    if not lam < 1.0:
        raise InvalidParameterError(
            f"cap angle {phi} leaves the shrink coefficient at {lam} >= 1 "
            f"for R = {R}; pick phi with 2 R sin 2 phi + eps > 1")
    diameter = 2.0 * R * lam * math.sin(2.0 * phi)
    if not diameter < 1.0:
        raise InvalidParameterError(f"piece diameter {diameter} not below 1")
    return RadiusParams(
        R=R,
        phi=phi,
        lambda0=lam,
        alpha=math.asin(lam * math.sin(phi)),
        gamma=math.asin(lam * math.sin(2.0 * phi)),
        x=2.0 * R,
        regime=SMALL_R,
        eps=eps,
    )


def default_small_phi(n, R, eps):
    """Default cap angle for the small-radius regime.

    pi/4 - 1/n keeps sin 2 phi bounded away from 1 (the density bound
    degenerates there), but it is only usable while the induced shrink
    coefficient 1/(2 R sin 2 phi + eps) stays below 1.  Below that radius the
    angle moves up to the midpoint between the feasibility floor
    arcsin((1 - eps)/(2 R))/2 and pi/4; a feasible angle exists for every
    R > 1/2 because (1 - eps)/(2 R) < 1 there.
    """
    if n < 2:
        raise DomainError("dimension must be at least 2")
    target = math.pi / 4.0 - 1.0 / n
    s = (1.0 - eps) / (2.0 * float(R))
    floor = 0.5 * math.asin(min(1.0, max(-1.0, s)))
    if target > floor:
        return target
    return 0.5 * (floor + math.pi / 4.0)


def verify_system(params):
    """Residuals of the parameter identities; all must sit below 1e-10.

    LargeR: |2 R lambda0 sin 2 phi - 1|, |sin alpha - lambda0 sin phi|,
    |2 R sin(phi - alpha) - 1|.  SmallR has no separation identity (see
    small_radius_params), so the checked identities are the coefficient
    definition |lambda (2 R sin 2 phi + eps) - 1|, the alpha definition, and
    the diameter identity |2 R lambda sin 2 phi - (1 - eps lambda)|.
    """
    R, phi, lam = params.R, params.phi, params.lambda0
    r_alpha = abs(math.sin(params.alpha) - lam * math.sin(phi))
    if params.regime == LARGE_R:
        residuals = {
            "shrink_identity": abs(2.0 * R * lam * math.sin(2.0 * phi) - 1.0),
            "alpha_identity": r_alpha,
            "separation_identity": abs(2.0 * R * math.sin(phi - params.alpha) - 1.0),
        }
    else:
        residuals = {
            "shrink_identity": abs(lam * (2.0 * R * math.sin(2.0 * phi) + params.eps) - 1.0),
            "alpha_identity": r_alpha,
            "diameter_identity": abs(2.0 * R * lam * math.sin(2.0 * phi) - (1.0 - params.eps * lam)),
        }
    return {"residuals": residuals, "max": max(residuals.values())}


def separation_angle(phi, lam):
    """Half the angular gap between shrunken pieces: phi - arcsin(lam sin phi)."""
    return phi - math.asin(lam * math.sin(phi))


def forbidden_gap_margins(R, phi, lam):
    """(diameter margin, separation margin) of the shrunken-piece construction.

    Returns (1 - D, S - 1) where D = 2 R lam sin 2 phi is the piece-diameter
    bound and S = 2 R sin(phi - arcsin(lam sin phi)) the cross-piece
    separation bound.  Both are zero simultaneously exactly at lam = lambda0.
    """
    t_diam = 1.0 - 2.0 * R * lam * math.sin(2.0 * phi)
    t_sep = 2.0 * R * math.sin(separation_angle(phi, lam)) - 1.0
    return t_diam, t_sep


# ---------------------------------------------------------------------------
# shell machinery for the ball coloring
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShellParams:
    """Continuous shell functions evaluated at one radius r.

    mode is "piece" for r > r_star (both forbidden-gap margins positive:
    rotated copies of the whole avoiding set are valid color classes) and
    "cap" for r <= r_star, where the cap angle is clamped at its r_star value
    and only the diameter margin is positive — there, distinct pieces receive
    distinct colors, so delta_r is the diameter margin alone.  The raw margins
    are kept for reports.
    """

    r: float
    eps: float
    r_star: float
    phi_r: float
    lambda_r: float
    delta_r: float
    mode: str
    diameter_margin: float
    separation_margin: float

    def as_dict(self):
        return {
            "r": self.r, "eps": self.eps, "r_star": self.r_star,
            "phi_r": self.phi_r, "lambda_r": self.lambda_r,
            "delta_r": self.delta_r, "mode": self.mode,
            "diameter_margin": self.diameter_margin,
            "separation_margin": self.separation_margin,
        }


def cos_sq_profile(r):
    """cos^2 of the cap angle as a function of radius, for r > sqrt(5)/2.

    Increases from 1/2 at the threshold toward 1; at phi-level this is the
    same closed form as cap_angle.
    """
    r = float(r)
    if not r > REGIME_THRESHOLD:
        raise DomainError(f"profile is defined for r > sqrt(5)/2, got {r}")
    return 1.0 - _sin_sq_cap_angle(r)


def _check_eps(eps):
    eps = float(eps)
    if not eps > 0.0:
        raise InvalidParameterError(f"eps must be positive, got {eps}")
    return eps


def r_star(eps):
    """Clamp radius: the unique r with cos^2 phi(r) = 1/2 + eps.

    Bisection on the monotone profile over (sqrt(5)/2, 1e9) to 1e-12; raises
    InvalidParameterError when eps is so large that no solution exists on the
    bracket.
    """
    eps = _check_eps(eps)
    lo = REGIME_THRESHOLD * (1.0 + 1e-14)
    hi = 1e9
    target = 0.5 + eps
    if not cos_sq_profile(lo) < target:
        raise InvalidParameterError(f"eps = {eps} leaves no clamp radius above the threshold")
    if not cos_sq_profile(hi) > target:
        raise InvalidParameterError(f"eps = {eps} too large: profile never reaches 1/2 + eps")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if cos_sq_profile(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * max(1.0, lo):
            break
    return 0.5 * (lo + hi)


def shell_params(r, eps, R=None, _r_star=None):
    """Shell functions phi(r), lambda(r), delta(r) at radius r >= 1/2.

    phi(r) follows the profile above the clamp radius and freezes at its
    clamp value below; lambda(r) = 1/(sqrt(1 + 8 cos^2 phi(r)) + eps), i.e.
    1/(x(r) + eps) above the clamp.  (An additive-regularization variant of
    lambda that drops the square root circulates in places; it breaks the
    1/lambda = x + eps identity the shell bound rests on, so the square-root
    form is used — see the package docs.)  delta(r) combines the diameter
    margin with, in piece mode only, the separation margin; it is strictly
    positive on [1/2, infinity).

    The `R` argument is accepted for interface parity with callers that carry
    the outer radius; it does not influence the value.  `_r_star` lets bulk
    callers reuse a precomputed clamp radius.
    """
    r = float(r)
    del R
    if not r >= 0.5:
        raise DomainError(f"shell radius must be >= 1/2, got {r}")
    eps = _check_eps(eps)
    rs = r_star(eps) if _r_star is None else _r_star
    clamped = r <= rs
    c2 = cos_sq_profile(rs if clamped else r)
    phi = math.acos(math.sqrt(c2))
    lam = 1.0 / (math.sqrt(1.0 + 8.0 * c2) + eps)
    t_diam, t_sep = forbidden_gap_margins(r, phi, lam)
    mode = "cap" if clamped else "piece"
    delta = t_diam if clamped else min(t_diam, t_sep)
    if not delta > 0.0:
        raise InvalidParameterError(f"nonpositive shell margin delta({r}) = {delta}")
    return ShellParams(
        r=r, eps=eps, r_star=rs, phi_r=phi, lambda_r=lam, delta_r=delta,
        mode=mode, diameter_margin=t_diam, separation_margin=t_sep,
    )


def shell_radii(R, eps, max_shells=2_000_000):
    """Strictly decreasing radii R, R - delta(R)/2, ... down past 1/2.

    The returned array ends with the first entry below 1/2 (the inner-ball
    radius).  delta is continuous and positive on the compact segment, so the
    sequence is finite; max_shells is a safety net, not a tuning knob.
    """
    R = float(R)
    if not R > 0.5:
        raise DomainError(f"ball radius must exceed 1/2, got {R}")
    rs = r_star(eps)
    radii = [R]
    while radii[-1] >= 0.5:
        sp = shell_params(radii[-1], eps, _r_star=rs)
        radii.append(radii[-1] - 0.5 * sp.delta_r)
        if len(radii) > max_shells:
            raise InvalidParameterError("shell recursion failed to terminate")
    return np.asarray(radii)
