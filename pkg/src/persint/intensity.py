"""Kernel-smoothed weighted intensity of persistence diagrams.

A diagram is turned into a nonnegative function on the (birth, death)
plane: each pair contributes its weight times a product-Gaussian bump of
bandwidth tau, ``w_j * tau^-2 * K((x-b_j)/tau) * K((y-d_j)/tau)``. Weights
default to the lifetime, which suppresses near-diagonal features, so no
boundary correction is applied at the diagonal. Intensities of several
diagrams are compared and averaged pointwise on a shared grid.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CsvFormatError,
    IncompatibleGridsError,
    InvalidInputError,
    InvalidParameterError,
)
from .field import GridSpec, _fmt, _read_rows, _read_spec_block, _write_rows

SQRT_TWO_PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class WeightSpec:
    """Pair weight w = g(dim) * L_dim(lifetime); L defaults to the identity.

    ``g`` maps a homology dimension to a nonnegative multiplier (missing
    dimensions default to 1). ``L`` optionally maps a dimension to a
    monotone lifetime transform with L(0) = 0.
    """

    g: tuple = ((0, 1.0), (1, 1.0))
    L: tuple = ()

    def __post_init__(self):
        g = tuple(sorted((int(d), float(v)) for d, v in dict(self.g).items()))
        for d, v in g:
            if not (math.isfinite(v) and v >= 0):
                raise InvalidParameterError(f"g({d}) must be finite and >= 0, got {v}")
        L = tuple(sorted(dict(self.L).items()))
        for d, fn in L:
            if fn(0.0) != 0.0:
                raise InvalidParameterError(f"L for dim {d} must satisfy L(0) = 0")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "L", L)

    def g_of(self, dim):
        return dict(self.g).get(int(dim), 1.0)

    def L_of(self, dim):
        return dict(self.L).get(int(dim))


DEFAULT_WEIGHTS = WeightSpec()


def weight_spec(g0=1.0, g1=1.0):
    """WeightSpec with per-dimension multipliers and identity lifetime map."""
    return WeightSpec(g=((0, g0), (1, g1)))


def weight_eval(w, dim, lifetime):
    """Evaluate g(dim) * L_dim(lifetime)."""
    if lifetime < 0:
        raise InvalidInputError(f"lifetime must be >= 0, got {lifetime}")
    fn = w.L_of(dim)
    transformed = lifetime if fn is None else fn(lifetime)
    return w.g_of(dim) * transformed


def pair_weights(diagram, w=DEFAULT_WEIGHTS):
    """Weight of every pair of a diagram, in stored order."""
    return np.array([weight_eval(w, p.dim, p.lifetime) for p in diagram.pairs])


@dataclass(frozen=True)
class IntensityGrid:
    """Nonnegative intensity values on a (birth, death) grid."""

    spec: GridSpec
    values: np.ndarray
    tau: float
    weights: WeightSpec = DEFAULT_WEIGHTS

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (self.spec.nx, self.spec.ny):
            raise InvalidInputError(
                f"values shape {vals.shape} does not match grid {self.spec.nx}x{self.spec.ny}"
            )
        if not np.all(np.isfinite(vals)):
            raise InvalidInputError("intensity values must all be finite")
        if np.any(vals < 0):
            raise InvalidInputError("intensity values must be >= 0")
        if not self.tau > 0:
            raise InvalidParameterError(f"tau must be > 0, got {self.tau}")
        object.__setattr__(self, "values", vals)

    def mass(self):
        """Node-centered Riemann-sum mass of the grid."""
        return float(self.values.sum() * self.spec.cell_area)

    def compatible_with(self, other):
        return (
            self.spec == other.spec
            and self.tau == other.tau
            and self.weights == other.weights
        )


def default_intensity_spec(diagrams, tau, nx=128, ny=128, pad_factor=4.0):
    """Grid covering the bounding box of all pairs, expanded by pad_factor*tau."""
    births = [p.birth for d in diagrams for p in d.pairs]
    deaths = [p.death for d in diagrams for p in d.pairs]
    if not births:
        raise InvalidInputError("cannot derive intensity bounds: no pairs in any diagram")
    pad = pad_factor * tau
    return GridSpec(
        x_lo=min(births) - pad,
        x_hi=max(births) + pad,
        y_lo=min(deaths) - pad,
        y_hi=max(deaths) + pad,
        nx=nx,
        ny=ny,
    )


def _smooth_points(births, deaths, weights, tau, spec):
    """Weighted product-Gaussian smoothing of raw pair arrays onto a grid."""
    if births.size == 0:
        return np.zeros((spec.nx, spec.ny))
    bx = np.exp(-0.5 * ((births[:, None] - spec.xs()[None, :]) / tau) ** 2) / SQRT_TWO_PI
    by = np.exp(-0.5 * ((deaths[:, None] - spec.ys()[None, :]) / tau) ** 2) / SQRT_TWO_PI
    return np.einsum("p,pi,pj->ij", weights, bx, by, optimize=False) / (tau * tau)


def smooth_diagram(diagram, tau, w=DEFAULT_WEIGHTS, spec=None):
    """Smoothed weighted intensity of one diagram on the given grid.

    An empty diagram yields the zero grid. If ``spec`` is omitted it is
    derived from the diagram via :func:`default_intensity_spec`.
    """
    if not tau > 0:
        raise InvalidParameterError(f"tau must be > 0, got {tau}")
    if spec is None:
        spec = default_intensity_spec([diagram], tau)
    _, births, deaths = diagram.arrays()
    vals = _smooth_points(births, deaths, pair_weights(diagram, w), tau, spec)
    return IntensityGrid(spec=spec, values=vals, tau=tau, weights=w)


def intensity_at(diagram, tau, points, w=DEFAULT_WEIGHTS):
    """Evaluate the smoothed intensity at arbitrary (birth, death) points."""
    if not tau > 0:
        raise InvalidParameterError(f"tau must be > 0, got {tau}")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    _, births, deaths = diagram.arrays()
    if births.size == 0:
        return np.zeros(pts.shape[0])
    wts = pair_weights(diagram, w)
    kx = np.exp(-0.5 * ((pts[:, 0][:, None] - births[None, :]) / tau) ** 2) / SQRT_TWO_PI
    ky = np.exp(-0.5 * ((pts[:, 1][:, None] - deaths[None, :]) / tau) ** 2) / SQRT_TWO_PI
    return (kx * ky) @ wts / (tau * tau)


def pair_sum(diagram, fn, w=DEFAULT_WEIGHTS):
    """Weighted sum of fn over the diagram's points: sum_j w_j fn(b_j, d_j)."""
    return float(sum(weight_eval(w, p.dim, p.lifetime) * fn(p.birth, p.death) for p in diagram.pairs))


def integrate_against(grid, fn):
    """Riemann sum of fn(x, y) * intensity over the grid."""
    xs = grid.spec.xs()[:, None]
    ys = grid.spec.ys()[None, :]
    return float((fn(xs, ys) * grid.values).sum() * grid.spec.cell_area)


def average_intensity(grids):
    """Pointwise arithmetic mean of intensity grids sharing spec/tau/weights."""
    grids = list(grids)
    if not grids:
        raise InvalidInputError("cannot average an empty list of intensity grids")
    head = grids[0]
    for g in grids[1:]:
        if not head.compatible_with(g):
            raise IncompatibleGridsError(
                "intensity grids differ in spec, tau, or weights; cannot average"
            )
    vals = np.zeros_like(head.values)
    for g in grids:
        vals += g.values
    vals /= len(grids)
    return IntensityGrid(spec=head.spec, values=vals, tau=head.tau, weights=head.weights)


def write_intensity(grid, path):
    """Write an intensity grid: spec block, tau/weight block, row-major values."""
    if grid.weights.L:
        raise InvalidInputError("intensity CSV covers identity lifetime weights only")
    with open(path, "w", newline="") as fh:
        fh.write("kind,x_lo,x_hi,y_lo,y_hi,nx,ny\n")
        s = grid.spec
        fh.write(
            f"intensity,{_fmt(s.x_lo)},{_fmt(s.x_hi)},{_fmt(s.y_lo)},{_fmt(s.y_hi)},"
            f"{s.nx},{s.ny}\n"
        )
        fh.write("tau,g0,g1\n")
        fh.write(f"{_fmt(grid.tau)},{_fmt(grid.weights.g_of(0))},{_fmt(grid.weights.g_of(1))}\n")
        _write_rows(fh, grid.values)


def read_intensity(path):
    """Read an intensity grid written by :func:`write_intensity`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        _, spec = _read_spec_block(reader, path, kinds=("intensity",))
        meta_header = next(reader, None)
        if meta_header is None or [h.strip() for h in meta_header] != ["tau", "g0", "g1"]:
            raise CsvFormatError(path, 3, "expected metadata header 'tau,g0,g1'")
        meta = next(reader, None)
        if meta is None or len(meta) != 3:
            raise CsvFormatError(path, 4, "expected a 3-column tau/weight row")
        try:
            tau = float(meta[0])
            w = weight_spec(float(meta[1]), float(meta[2]))
        except ValueError as exc:
            raise CsvFormatError(path, 4, f"bad value: {exc}") from None
        vals = _read_rows(reader, path, spec, first_line=5)
    return IntensityGrid(spec=spec, values=vals, tau=tau, weights=w)
