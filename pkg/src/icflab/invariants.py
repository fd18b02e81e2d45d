"""Integral and pointwise functionals of star-shaped hypersurfaces.

Covers the Willmore energy with its first-variation rate, the
one-parameter family of pointwise conformal-invariant 2-tensors

    E_ij(a) = H h_ij + a H^2 g_ij - (n/2) h_i^k h_kj - ((2an+1)/2) |A|^2 g_ij,

whose g-eigenvalues equal -(n/2)(kappa_i - H/n)^2 - ((2an+1)/2)|A0|^2 and
which vanish exactly at umbilic points when 2an+1 >= 0, the scale-invariant
curvature quotients Q_k with their rate under conformal transport, the
Hsiung-Minkowski integral residuals, curvature centers of mass, and the
inversion-symmetric quantity Qbar with its sharp two-sided bound.

Sign conventions follow the outward-normal, H > 0 orientation fixed in
`radial_graph`; every identity's sign is pinned by the round-sphere case.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import AuditError, ConvexityClassError, GridMismatchError, MeanConvexityError
from .radial_graph import GeometryBundle, StarShapedHypersurface, geometry, invert
from .sphere_grid import CovariantTensor2, ScalarField, make_grid

__all__ = [
    "EnergyReport",
    "default_a_values",
    "e_eigenvalues",
    "e_tensor",
    "willmore",
    "willmore_rate",
    "guan_li_q",
    "hsiung_minkowski_residual",
    "qk_rate",
    "condition_v_residual",
    "center_of_mass",
    "qbar",
    "energy_report",
]


def default_a_values(n: int) -> tuple[float, ...]:
    """Default sweep for the invariant-tensor parameter; includes the
    boundary case 2an+1 = 0."""
    return (-1.0 / (2 * n), 0.0, 1.0)


def _geom(surface, geom):
    return geom if geom is not None else geometry(surface)


def e_eigenvalues(kappa, H, tracefree_sq, a, n):
    """Eigenvalues of E(a) with respect to the induced metric, one per
    principal curvature: -(n/2)(kappa_i - H/n)^2 - ((2an+1)/2)|A0|^2.
    All non-positive when 2an+1 >= 0, zero exactly at umbilic points."""
    kappa = np.asarray(kappa, dtype=float)
    H = np.asarray(H, dtype=float)
    return (-0.5 * n * (kappa - H[..., None] / n) ** 2
            - 0.5 * (2.0 * a * n + 1.0) * np.asarray(tracefree_sq)[..., None])


def _mixed_invariants(ginv, T):
    """Trace and determinant of g^{-1} T (the two spectral invariants of
    the g-symmetric pair; stable even when the eigenvalues nearly
    coincide, unlike extracting the eigenvalues themselves)."""
    M = np.einsum("...ik,...kj->...ij", ginv, T)
    tr = M[..., 0, 0] + M[..., 1, 1]
    det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    return tr, det


def e_tensor(surface: StarShapedHypersurface, a: float,
             geom: GeometryBundle | None = None
             ) -> tuple[CovariantTensor2, float]:
    """Pointwise conformal-invariant tensor E(a) and its sup operator norm.

    The coordinate components are returned in the fixed chart; the
    operator norm is measured against the induced metric.  The closed-form
    eigenvalue expression is evaluated alongside the tensor build and the
    two must agree, which is enforced here.
    """
    geom = _geom(surface, geom)
    n = geom.n
    if 2.0 * a * n + 1.0 < 0.0:
        warnings.warn(
            f"2an+1 = {2.0 * a * n + 1.0:g} < 0: E(a) is still conformally "
            "invariant but no longer characterizes umbilic points",
            stacklevel=2)

    g, ginv, h = geom.metric, geom.metric_inv, geom.second_form
    H = geom.H[..., None, None]
    absA2 = geom.norm_A_sq[..., None, None]
    h_sq = np.einsum("...ik,...kl,...lj->...ij", h, ginv, h)
    E = (H * h + a * H**2 * g - 0.5 * n * h_sq
         - 0.5 * (2.0 * a * n + 1.0) * absA2 * g)

    formula = e_eigenvalues(geom.kappa, geom.H, geom.tracefree_sq, a, n)
    # the two computation routes must agree; compare through the spectral
    # invariants, which stay numerically stable at near-umbilic nodes
    tr, det = _mixed_invariants(ginv, E)
    scale = 1.0 + float(geom.norm_A_sq.max())
    tr_dev = np.abs(tr - formula.sum(axis=-1)).max()
    det_dev = np.abs(det - formula[..., 0] * formula[..., 1]).max()
    if tr_dev > 1e-8 * scale or det_dev > 1e-8 * scale**2:
        raise AuditError(
            f"eigenvalue routes for E({a:g}) disagree: "
            f"trace {tr_dev:.3g}, det {det_dev:.3g}")
    return CovariantTensor2(surface.spec, E), float(np.abs(formula).max())


def willmore(surface: StarShapedHypersurface,
             geom: GeometryBundle | None = None) -> float:
    """Willmore energy: integral of H^n; requires mean convexity."""
    geom = _geom(surface, geom)
    if geom.H.min() <= 0.0:
        raise MeanConvexityError(f"H reaches {geom.H.min():g}; not mean-convex")
    return geom.integrate(geom.H ** geom.n)


def willmore_rate(surface: StarShapedHypersurface, speed: ScalarField,
                  geom: GeometryBundle | None = None) -> float:
    """First-variation rate of the Willmore energy under the normal
    speed field (positive speed moves along the outward normal):

        d/dt int H^n dmu
            = int n(n-1) H^{n-2} <grad H, grad speed>
                  - n speed H^{n-1} (|A|^2 - H^2/n)  dmu.

    For the inverse-mean-curvature speed 1/H this reduces to
    -int n(n-1) H^{n-4} |grad H|^2 + n H^{n-2} (|A|^2 - H^2/n) dmu <= 0,
    vanishing exactly on round spheres.
    """
    if speed.spec != surface.spec:
        raise GridMismatchError("speed field lives on a different grid")
    geom = _geom(surface, geom)
    if geom.H.min() <= 0.0:
        raise MeanConvexityError(f"H reaches {geom.H.min():g}; not mean-convex")
    grid = make_grid(surface.spec)
    n = geom.n

    CH = grid.analysis(geom.H - geom.H.mean())
    Cs = grid.analysis(speed.values - speed.values.mean())
    dH = np.stack([grid.synth_dtheta(CH), grid.synth_dphi(CH)], axis=-1)
    ds = np.stack([grid.synth_dtheta(Cs), grid.synth_dphi(Cs)], axis=-1)
    grad_pair = np.einsum("...ij,...i,...j->...", geom.metric_inv, dH, ds)

    integrand = (n * (n - 1) * geom.H ** (n - 2) * grad_pair
                 - n * speed.values * geom.H ** (n - 1)
                 * (geom.norm_A_sq - geom.H**2 / n))
    return geom.integrate(integrand)


def guan_li_q(surface: StarShapedHypersurface, k: int,
              geom: GeometryBundle | None = None) -> float:
    """Scale-invariant quotient (int sigma_k)^{1/(n-k)} /
    (int sigma_{k-1})^{1/(n-k+1)}; k = n is excluded (the outer exponent
    degenerates)."""
    geom = _geom(surface, geom)
    n = geom.n
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in 1..{n - 1}")
    num = geom.integrate(geom.sigma_k[..., k])
    den = geom.integrate(geom.sigma_k[..., k - 1])
    if num <= 0.0 or den <= 0.0:
        raise ConvexityClassError(
            f"curvature integrals not positive (k={k}): {num:g}, {den:g}")
    return num ** (1.0 / (n - k)) / den ** (1.0 / (n - k + 1))


def hsiung_minkowski_residual(surface: StarShapedHypersurface, V, k: int,
                              geom: GeometryBundle | None = None,
                              relative: bool = False) -> float:
    """Residual of the Minkowski-type integral identity for conformal
    ambient fields,

        int alpha_V sigma_k / C(n,k) dmu
            = int <V, nu> sigma_{k+1} / C(n,k+1) dmu,

    which holds for every closed hypersurface when V is conformal Killing
    (outward-normal convention; the round sphere with V = X gives both
    sides equal to the area).  With ``relative=True`` the residual is
    scaled by the L1 size of the two integrands.
    """
    geom = _geom(surface, geom)
    n = geom.n
    if not 0 <= k <= n - 1:
        raise ValueError(f"k must lie in 0..{n - 1}")
    alpha = np.asarray(V.conformal_factor(geom.position))
    vn = np.einsum("...c,...c->...", V.evaluate(geom.position), geom.normal)
    lhs_density = alpha * geom.sigma_k[..., k] / comb(n, k)
    rhs_density = vn * geom.sigma_k[..., k + 1] / comb(n, k + 1)
    residual = geom.integrate(lhs_density - rhs_density)
    if not relative:
        return residual
    scale = geom.integrate(np.abs(lhs_density)) + geom.integrate(np.abs(rhs_density))
    return residual / max(scale, 1e-300)


def condition_v_residual(surface: StarShapedHypersurface, V, k: int,
                         geom: GeometryBundle | None = None) -> float:
    """Difference of the sigma_{k-1}- and sigma_k-weighted averages of
    div(V); zero exactly when the two weighted averages coincide.

    Ordered so that the transport rate of Q_k satisfies
    qk_rate = -Q_k/(n+1) * condition_v_residual identically.
    """
    geom = _geom(surface, geom)
    n = geom.n
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in 1..{n - 1}")
    div = np.asarray(V.divergence(geom.position))
    avg_k = (geom.integrate(geom.sigma_k[..., k] * div)
             / geom.integrate(geom.sigma_k[..., k]))
    avg_km1 = (geom.integrate(geom.sigma_k[..., k - 1] * div)
               / geom.integrate(geom.sigma_k[..., k - 1]))
    return avg_km1 - avg_k


def qk_rate(surface: StarShapedHypersurface, V, k: int,
            geom: GeometryBundle | None = None) -> float:
    """Time derivative of Q_k when the surface is transported by the flow
    of the ambient field V (at t = 0):

        dQ_k/dt = (Q_k/(n+1)) (avg_{sigma_k} div V - avg_{sigma_{k-1}} div V),

    built from the evolution d/dt int sigma_l dmu = (l+1) int sigma_{l+1}
    <V, nu> dmu and the Minkowski identity; zero whenever div V is
    constant, and zero on every round sphere.
    """
    geom = _geom(surface, geom)
    q = guan_li_q(surface, k, geom)
    return -q / (geom.n + 1) * condition_v_residual(surface, V, k, geom)


def center_of_mass(surface: StarShapedHypersurface, k: int,
                   geom: GeometryBundle | None = None) -> np.ndarray:
    """sigma_k-weighted barycenter int sigma_k x dmu / int sigma_k dmu."""
    geom = _geom(surface, geom)
    if not 0 <= k <= geom.n:
        raise ValueError(f"k must lie in 0..{geom.n}")
    w = geom.sigma_k[..., k]
    total = geom.integrate(w)
    return np.array([geom.integrate(w * geom.position[..., c]) for c in range(3)]) / total


def qbar(surface: StarShapedHypersurface,
         geom: GeometryBundle | None = None,
         geom_inv: GeometryBundle | None = None) -> tuple[float, float, float]:
    """Inversion-symmetric quantity Qbar = Q1(S) + Q1(S~) with
    Q1 = |S|^{-(n-1)/n} int H dmu and S~ the inversion of S, together
    with its sharp lower and upper bounds

        (r/R)^{3(n-1)/2} 2n|S^n| / (|S| |S~|)^{(n-1)/(2n)}  <=  Qbar
            <= (R/r)^{3(n-1)/2} 2n|S^n| / (|S| |S~|)^{(n-1)/(2n)},

    r and R the min and max of the graph function.  Equality holds
    exactly for round spheres; the bounds are verified before returning.
    """
    geom = _geom(surface, geom)
    geom_inv = geom_inv if geom_inv is not None else geometry(invert(surface))
    n = geom.n
    area = geom.integrate(np.ones_like(geom.H))
    area_inv = geom_inv.integrate(np.ones_like(geom_inv.H))
    q1 = geom.integrate(geom.H) / area ** ((n - 1) / n)
    q1_inv = geom_inv.integrate(geom_inv.H) / area_inv ** ((n - 1) / n)
    value = q1 + q1_inv

    r = surface.values.min()
    R = surface.values.max()
    sphere_area = make_grid(surface.spec).integrate_values(
        np.ones(surface.spec.shape))
    base = 2.0 * n * sphere_area / (area * area_inv) ** ((n - 1) / (2 * n))
    lower = (r / R) ** (1.5 * (n - 1)) * base
    upper = (R / r) ** (1.5 * (n - 1)) * base
    tol = 1e-9 * (1.0 + abs(value))
    if not (lower - tol <= value <= upper + tol):
        raise AuditError(
            f"Qbar = {value:.12g} escapes its bounds [{lower:.12g}, {upper:.12g}]")
    return value, lower, upper


@dataclass
class EnergyReport:
    """Bundle of the scalar diagnostics of one surface."""

    W: float
    Q: dict[int, float]
    Qbar: float
    E_sup: dict[float, float]
    area: float
    sigma_integrals: list[float]

    def to_dict(self) -> dict:
        return {
            "W": self.W,
            "Q": {str(k): v for k, v in self.Q.items()},
            "Qbar": self.Qbar,
            "E_sup": {repr(a): v for a, v in self.E_sup.items()},
            "area": self.area,
            "sigma_integrals": list(self.sigma_integrals),
        }


def energy_report(surface: StarShapedHypersurface,
                  a_values=None,
                  geom: GeometryBundle | None = None) -> EnergyReport:
    """Evaluate every scalar diagnostic on one surface."""
    geom = _geom(surface, geom)
    n = geom.n
    a_values = tuple(a_values) if a_values is not None else default_a_values(n)
    sig = [geom.integrate(geom.sigma_k[..., k]) for k in range(n + 1)]
    return EnergyReport(
        W=willmore(surface, geom),
        Q={k: guan_li_q(surface, k, geom) for k in range(1, n)},
        Qbar=qbar(surface, geom)[0],
        E_sup={a: e_tensor(surface, a, geom)[1] for a in a_values},
        area=sig[0],
        sigma_integrals=sig,
    )
