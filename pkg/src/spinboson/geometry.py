"""Cones and complex-plane regions used to localize spectrum.

A cone C_m(v) is the closed convex sector with apex v whose axis points
along exp(-i nu) (into the lower half plane) and whose half-aperture is
nu / m.  Membership and Euclidean distance are closed-form after rotating
the axis onto the positive real line: for w = (z - v) exp(i nu) with polar
angle phi, the distance is 0 inside (|phi| <= nu/m), |w| sin(|phi| - nu/m)
against the nearest edge, and |w| beyond the normal fan of the apex.

Regions follow the run geometry around the atomic levels: the far region A
(three pieces), the level boxes B_i, and their per-scale refinements.  The
"Wn" variant is the tracking window actually used by the ladder in
practical mode: the same box with its lower edge anchored a quarter contour
radius below the tracked eigenvalue, which coincides with the literal "Bn"
variant whenever the eigenvalue sits inside its first-scale box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConfigError


@dataclass(frozen=True)
class Cone:
    """Closed sector {v + x exp(-i alpha) : x >= 0, |alpha - nu| <= nu/m}."""

    vertex: complex
    nu: float
    m: int = 4

    def __post_init__(self):
        if not (0.0 < self.nu):
            raise ConfigError("cone axis angle nu must be positive")
        if self.m < 4:
            raise ConfigError("cone aperture divisor m must be at least 4")

    @property
    def half_aperture(self) -> float:
        return self.nu / self.m

    def edge_directions(self) -> tuple[complex, complex]:
        return (
            np.exp(-1j * (self.nu - self.half_aperture)),
            np.exp(-1j * (self.nu + self.half_aperture)),
        )


def dist_to_cone(cone: Cone, z: complex) -> float:
    """Euclidean distance from z to the closed cone (0 iff contained)."""
    w = (complex(z) - cone.vertex) * np.exp(1j * cone.nu)
    rho = abs(w)
    if rho == 0.0:
        return 0.0
    psi = abs(np.angle(w)) - cone.half_aperture
    if psi <= 0.0:
        return 0.0
    if psi >= np.pi / 2.0:
        return rho
    return rho * float(np.sin(psi))


def cone_contains(cone: Cone, z: complex, tol: float = 0.0) -> bool:
    """Closed-set membership, optionally padded by a distance tolerance."""
    return dist_to_cone(cone, z) <= tol


def cone_complement_distance(inner: Cone, outer: Cone, samples: int = 64) -> float:
    """dist(inner cone, complement of outer cone) for nested same-shape cones.

    The infimum over the complement is attained on the boundary rays of the
    outer cone; along each ray the distance to the (convex) inner cone is a
    convex function of the ray parameter, so a coarse geometric scan plus a
    bounded scalar minimization pins the minimum.
    """
    if (inner.nu, inner.m) != (outer.nu, outer.m):
        raise ConfigError("cone gap distance expects cones of the same shape")
    if dist_to_cone(outer, inner.vertex) > 0.0:
        return 0.0  # not nested: the cones' boundaries already touch
    scale = abs(inner.vertex - outer.vertex) + 1.0
    best = np.inf
    for direction in outer.edge_directions():

        def f(x: float) -> float:
            return dist_to_cone(inner, outer.vertex + x * direction)

        xs = np.concatenate([[0.0], np.geomspace(1e-9 * scale, 1e6 * scale, samples)])
        vals = [f(x) for x in xs]
        k = int(np.argmin(vals))
        lo = xs[max(0, k - 1)]
        hi = xs[min(len(xs) - 1, k + 1)]
        res = minimize_scalar(f, bounds=(lo, hi), method="bounded")
        best = min(best, float(res.fun), min(vals))
    return best


_REGION_VARIANTS = ("A1", "A2", "A3", "A", "B1", "E1", "Bn", "Mn", "Wn")


@dataclass(frozen=True)
class Region:
    """Parameterized region of the complex plane.

    Variants: A1/A2/A3 and their union A (far region); B1 and E1 (first
    scale box around level i, with and without the central disc); Bn and Mn
    (scale-n refinements referencing the tracked eigenvalue); Wn (anchored
    tracking window, see module docstring).
    """

    variant: str
    e0: float = 0.0
    e1: float = 1.0
    nu: float = 0.0
    i: int = 1
    rho1: float | None = None
    rho_n: float | None = None
    rho_np1: float | None = None
    lam: complex | None = None

    def __post_init__(self):
        if self.variant not in _REGION_VARIANTS:
            raise ConfigError(f"unknown region variant {self.variant!r}")
        if self.nu <= 0.0:
            raise ConfigError("regions need the dilation angle nu > 0")
        needs = {
            "B1": ("rho1",),
            "E1": ("rho1",),
            "Bn": ("rho1", "rho_n", "lam"),
            "Mn": ("rho1", "rho_n", "rho_np1", "lam"),
            "Wn": ("rho_n", "lam"),
        }.get(self.variant, ())
        for name in needs:
            if getattr(self, name) is None:
                raise ConfigError(
                    f"region variant {self.variant} needs parameter {name}"
                )

    @property
    def delta(self) -> float:
        return self.e1 - self.e0

    @property
    def level(self) -> float:
        return self.e1 if self.i == 1 else self.e0


def region_contains(region: Region, z: complex) -> bool:
    """Literal evaluation of the variant's defining inequalities."""
    z = complex(z)
    r = region
    delta = r.delta
    sn = np.sin(r.nu)
    if r.variant == "A1":
        return z.real < r.e0 - 0.5 * delta
    if r.variant == "A2":
        return z.imag > 0.125 * delta * sn
    if r.variant == "A3":
        edge = r.e1 + 0.5 * delta
        return z.real > edge and z.imag >= -np.sin(r.nu / 2.0) * (z.real - edge)
    if r.variant == "A":
        return any(
            region_contains(Region(v, r.e0, r.e1, r.nu), z)
            for v in ("A1", "A2", "A3")
        )
    in_box = (
        abs(z.real - r.level) <= 0.5 * delta
        and -0.5 * r.rho1 * sn <= z.imag <= 0.125 * delta * sn
        if r.rho1 is not None
        else False
    )
    if r.variant == "B1":
        return in_box
    if r.variant == "E1":
        return in_box and abs(z - r.level) >= 0.125 * r.rho1 * sn
    if r.variant == "Bn":
        return in_box and z.imag >= r.lam.imag - 0.25 * r.rho_n * sn
    if r.variant == "Mn":
        return (
            in_box
            and z.imag >= r.lam.imag - 0.25 * r.rho_n * sn
            and z.imag >= r.lam.imag - 0.4 * r.rho_np1 * sn
        )
    if r.variant == "Wn":
        return (
            abs(z.real - r.level) <= 0.5 * delta
            and r.lam.imag - 0.25 * r.rho_n * sn <= z.imag <= 0.125 * delta * sn
        )
    raise ConfigError(f"unhandled region variant {r.variant!r}")


def verify_cone_chain(
    lambda_n: complex,
    lambda_n1: complex,
    ladder,
    n: int,
    cfg,
) -> dict:
    """Check the nested-cone step from scale n to n + 1.

    Builds the three vertices (quarter-cutoff ahead of each eigenvalue and
    the intermediate one), tests both inclusions by vertex membership, and
    measures the two gap distances against their sine envelopes.
    """
    nu, m = cfg.nu, cfg.m_cone
    rho_n = ladder.cutoff(n)
    rho_n1 = ladder.cutoff(n + 1)
    axis = np.exp(-1j * nu)
    v_n = lambda_n + 0.25 * rho_n * axis
    v_mid = lambda_n + (0.4 - 0.01) * rho_n1 * axis
    v_n1 = lambda_n1 + 0.25 * rho_n1 * axis
    cone_mid = Cone(v_mid, nu, m)
    cone_n1 = Cone(v_n1, nu, m)
    incl_inner = cone_contains(cone_mid, v_n)
    incl_outer = cone_contains(cone_n1, v_mid)
    gap_outer = cone_complement_distance(cone_mid, cone_n1)
    gap_inner = cone_complement_distance(Cone(v_n, nu, m), cone_mid)
    bound_outer = np.sin(nu / (2 * m)) * rho_n1 / 10.0
    bound_inner = np.sin(nu / m) * rho_n1 / 10.0
    report = {
        "vertices": {"v_n": v_n, "v_mid": v_mid, "v_n1": v_n1},
        "inner_inclusion": bool(incl_inner),
        "outer_inclusion": bool(incl_outer),
        "gap_outer": float(gap_outer),
        "gap_outer_bound": float(bound_outer),
        "gap_inner": float(gap_inner),
        "gap_inner_bound": float(bound_inner),
        "pass": bool(
            incl_inner
            and incl_outer
            and gap_outer >= bound_outer * (1.0 - 1e-9)
            and gap_inner >= bound_inner * (1.0 - 1e-9)
        ),
    }
    if not incl_inner:
        report["witness"] = v_n
    elif not incl_outer:
        report["witness"] = v_mid
    return report
