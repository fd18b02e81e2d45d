"""Extrinsic geometry of star-shaped hypersurfaces.

A closed star-shaped hypersurface is the radial graph {f(p) p : p in S^n}
of a positive function f on the unit sphere.  With lam = log f and the
round metric sigma, the induced geometry is, in chart components,

    g_ij   = f^2 (sigma_ij + lam_i lam_j)
    dmu    = f^n sqrt(1 + |grad lam|^2) dmu_round
    nu     = (p - grad^k lam d_k p) / sqrt(1 + |grad lam|^2)
    h_ij   = f (sigma_ij + lam_i lam_j - hess_ij lam) / sqrt(1 + |grad lam|^2)

with nu the outward unit normal, so round spheres have H = n/R > 0 and
principal curvatures 1/R.  Inverting the surface about the unit sphere
(f -> 1/f) relates mean curvatures through

    H_inverted = -f^2 H + 2 n f / sqrt(1 + |grad lam|^2),

which `inversion_mean_curvature_check` certifies numerically against an
independent second geometry computation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSurfaceError, ResolutionError
from .sphere_grid import Grid, GridSpec, ScalarField, make_grid

__all__ = [
    "POSITIVITY_FLOOR",
    "StarShapedHypersurface",
    "GeometryBundle",
    "geometry",
    "area",
    "sigma_integral",
    "invert",
    "inversion_mean_curvature_check",
    "graph_mean_curvature",
]

POSITIVITY_FLOOR = 1e-8
_COND_LIMIT = 1e8


@dataclass
class StarShapedHypersurface:
    """Radial graph f over S^n; f strictly positive.  n is the surface
    dimension (grids are built for n = 2 only; the formulas keep n
    symbolic so lower-dimensional cross-checks can reuse them)."""

    f: ScalarField
    n: int = 2
    _inverse: "StarShapedHypersurface | None" = field(
        default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.f.values.min() <= POSITIVITY_FLOOR:
            raise DegenerateSurfaceError(
                f"graph function reaches {self.f.values.min():g} "
                f"(floor {POSITIVITY_FLOOR:g})")
        self.f.values.setflags(write=False)

    @property
    def spec(self) -> GridSpec:
        return self.f.spec

    @property
    def values(self) -> np.ndarray:
        return self.f.values

    def grid(self) -> Grid:
        return make_grid(self.f.spec)

    def scaled(self, c: float) -> "StarShapedHypersurface":
        return StarShapedHypersurface(ScalarField(self.spec, c * self.values), self.n)


@dataclass(frozen=True)
class GeometryBundle:
    """Per-node extrinsic geometry; arrays are read-only after build.

    Index conventions: chart tensors carry trailing (2, 2) axes ordered
    (theta, phi); `kappa` is sorted ascending; `sigma_k[..., k]` holds the
    plain elementary symmetric polynomial of the principal curvatures
    (sigma_k(1,...,1) = C(n,k)).
    """

    spec: GridSpec
    n: int
    f: np.ndarray
    position: np.ndarray        # (nt, nph, 3) ambient points f*p
    normal: np.ndarray          # (nt, nph, 3) outward unit normal
    metric: np.ndarray          # (nt, nph, 2, 2) g_ij
    metric_inv: np.ndarray      # (nt, nph, 2, 2) g^ij
    area_density: np.ndarray    # dmu / dmu_round
    second_form: np.ndarray     # (nt, nph, 2, 2) h_ij
    shape_mixed: np.ndarray     # (nt, nph, 2, 2) h_i^j = g^{jk} h_ki
    H: np.ndarray               # mean curvature = sum kappa_i
    kappa: np.ndarray           # (nt, nph, 2) principal curvatures
    sigma_k: np.ndarray         # (nt, nph, n+1)
    norm_A_sq: np.ndarray       # |A|^2 = sum kappa_i^2
    tracefree_sq: np.ndarray    # |A - (H/n) g|^2
    grad_log_sq: np.ndarray     # |grad log f|^2 on the round sphere

    def integrate(self, values: np.ndarray) -> float:
        """Surface integral of a per-node quantity against dmu."""
        return make_grid(self.spec).integrate_values(values * self.area_density)


def graph_mean_curvature(f, grad_sq, lam_laplacian, lam_hess_quad, n):
    """Mean curvature of a radial graph from log-derivative data.

    grad_sq = |grad lam|^2, lam_laplacian = Delta lam, lam_hess_quad =
    grad^i lam grad^j lam hess_ij lam, all on the round unit sphere of
    dimension n.  Dimension-generic; the S^1 (closed curve) case serves
    as an independent cross-check of the formula.
    """
    v = 1.0 + grad_sq
    return (n - lam_laplacian + lam_hess_quad / v) / (f * np.sqrt(v))


def _curvature_core(grid: Grid, f: np.ndarray, n: int) -> dict:
    """Shared kernel: chart derivative data and principal curvatures."""
    lam = np.log(f)
    lt, lp, ltt, ltp, lpp = grid.chart_derivatives(lam)
    for arr in (lt, lp, ltt, ltp, lpp):
        if not np.all(np.isfinite(arr)):
            raise ResolutionError("non-finite derivatives of log f")

    st = grid.sin_theta[:, None]
    ct = grid.cos_theta[:, None]
    inv_s2 = 1.0 / st**2

    # covariant Hessian of lam on the round sphere
    Ltt = ltt
    Ltp = ltp - (ct / st) * lp
    Lpp = lpp + st * ct * lt

    lp_up = lp * inv_s2
    grad_sq = lt * lt + lp * lp_up
    v = 1.0 + grad_sq
    sqv = np.sqrt(v)

    f2 = f * f
    g = np.empty(f.shape + (2, 2))
    g[..., 0, 0] = f2 * (1.0 + lt * lt)
    g[..., 0, 1] = f2 * (lt * lp)
    g[..., 1, 0] = g[..., 0, 1]
    g[..., 1, 1] = f2 * (st**2 + lp * lp)

    det_g = f2 * f2 * st**2 * v
    tr_g = g[..., 0, 0] + g[..., 1, 1]
    disc_g = np.sqrt(np.clip(0.25 * tr_g**2 - det_g, 0.0, None))
    cond = (0.5 * tr_g + disc_g) / np.maximum(0.5 * tr_g - disc_g, 1e-300)
    if cond.max() > _COND_LIMIT:
        raise ResolutionError(
            f"first fundamental form condition number {cond.max():.3g} "
            f"exceeds {_COND_LIMIT:g}")

    ginv = np.empty_like(g)
    ginv[..., 0, 0] = (1.0 - lt * lt / v) / f2
    ginv[..., 0, 1] = (-lt * lp_up / v) / f2
    ginv[..., 1, 0] = ginv[..., 0, 1]
    ginv[..., 1, 1] = (inv_s2 - lp_up * lp_up / v) / f2

    h = np.empty_like(g)
    fac = f / sqv
    h[..., 0, 0] = fac * (1.0 + lt * lt - Ltt)
    h[..., 0, 1] = fac * (lt * lp - Ltp)
    h[..., 1, 0] = h[..., 0, 1]
    h[..., 1, 1] = fac * (st**2 + lp * lp - Lpp)

    shape = np.einsum("...ik,...kj->...ij", ginv, h)
    trace = shape[..., 0, 0] + shape[..., 1, 1]
    det_h = h[..., 0, 0] * h[..., 1, 1] - h[..., 0, 1] ** 2
    det_s = det_h / det_g
    disc = np.sqrt(np.clip(0.25 * trace**2 - det_s, 0.0, None))
    kappa = np.stack([0.5 * trace - disc, 0.5 * trace + disc], axis=-1)

    return dict(
        lam_grad=(lt, lp), lam_hess=(Ltt, Ltp, Lpp), grad_sq=grad_sq,
        v=v, sqv=sqv, metric=g, metric_inv=ginv, second_form=h,
        shape_mixed=shape, kappa=kappa, H=trace, det_shape=det_s,
    )


def geometry(surface: StarShapedHypersurface) -> GeometryBundle:
    """Full geometry bundle of a star-shaped hypersurface (n = 2 grid)."""
    if surface.n != 2:
        raise ValueError("grid geometry is implemented for n = 2 only")
    grid = surface.grid()
    f = surface.values
    core = _curvature_core(grid, f, surface.n)

    st = grid.sin_theta[:, None]
    ct = grid.cos_theta[:, None]
    sph, cph = np.sin(grid.phi)[None, :], np.cos(grid.phi)[None, :]
    p = np.stack([st * cph, st * sph, ct * np.ones_like(cph)], axis=-1)
    e_t = np.stack([ct * cph, ct * sph, -st * np.ones_like(cph)], axis=-1)
    e_p = np.stack([-st * sph, st * cph, np.zeros_like(st * cph)], axis=-1)

    lt, lp = core["lam_grad"]
    lp_up = lp / st**2
    nu = (p - lt[..., None] * e_t - lp_up[..., None] * e_p) / core["sqv"][..., None]

    H = core["H"]
    kappa = core["kappa"]
    n = surface.n
    sigma = np.empty(f.shape + (n + 1,))
    sigma[..., 0] = 1.0
    sigma[..., 1] = H
    sigma[..., 2] = core["det_shape"]
    norm_A_sq = H * H - 2.0 * core["det_shape"]
    tracefree_sq = norm_A_sq - H * H / n

    bundle = GeometryBundle(
        spec=surface.spec, n=n, f=f,
        position=f[..., None] * p, normal=nu,
        metric=core["metric"], metric_inv=core["metric_inv"],
        area_density=f**n * core["sqv"],
        second_form=core["second_form"], shape_mixed=core["shape_mixed"],
        H=H, kappa=kappa, sigma_k=sigma,
        norm_A_sq=norm_A_sq, tracefree_sq=tracefree_sq,
        grad_log_sq=core["grad_sq"],
    )
    for arr in (bundle.position, bundle.normal, bundle.metric,
                bundle.metric_inv, bundle.area_density, bundle.second_form,
                bundle.shape_mixed, bundle.H, bundle.kappa, bundle.sigma_k,
                bundle.norm_A_sq, bundle.tracefree_sq, bundle.grad_log_sq):
        arr.setflags(write=False)
    return bundle


def area(surface: StarShapedHypersurface, geom: GeometryBundle | None = None) -> float:
    geom = geom or geometry(surface)
    return geom.integrate(np.ones_like(geom.H))


def sigma_integral(surface: StarShapedHypersurface, k: int,
                   geom: GeometryBundle | None = None) -> float:
    """Integral of the k-th elementary symmetric curvature polynomial."""
    geom = geom or geometry(surface)
    if not 0 <= k <= geom.n:
        raise ValueError(f"k must lie in 0..{geom.n}")
    return geom.integrate(geom.sigma_k[..., k])


def invert(surface: StarShapedHypersurface) -> StarShapedHypersurface:
    """Inversion about the unit sphere at the origin: f -> 1/f.

    Inverting twice returns the original object, so the involution is
    exact by construction.
    """
    if surface._inverse is None:
        inv = StarShapedHypersurface(
            ScalarField(surface.spec, 1.0 / surface.values), surface.n)
        inv._inverse = surface
        surface._inverse = inv
    return surface._inverse


def inversion_mean_curvature_check(
        surface: StarShapedHypersurface,
        geom: GeometryBundle | None = None,
        geom_inv: GeometryBundle | None = None) -> tuple[ScalarField, float]:
    """Residual of the mean-curvature relation between a surface and its
    inversion, computed through two independent geometry evaluations.

    Returns the pointwise residual field and its sup norm; a small sup
    norm certifies the identity at the grid's resolution.
    """
    geom = geom or geometry(surface)
    geom_inv = geom_inv or geometry(invert(surface))
    f = surface.values
    predicted = -f**2 * geom.H + 2.0 * geom.n * f / np.sqrt(1.0 + geom.grad_log_sq)
    residual = geom_inv.H - predicted
    return ScalarField(surface.spec, residual), float(np.abs(residual).max())
