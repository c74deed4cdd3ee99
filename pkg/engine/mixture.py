"""Mixture model: compatibility, hidden labelings, sampling and densities."""

import math
from fractions import Fraction

import numpy as np
from scipy.special import ndtri
from scipy.stats import norm

from models import Component, Dataset, HiddenLabeling, MixtureSpec, SpecError, as_fraction


MEAN = 'mean'
_UNIT = 2.0 ** -53


class IncompatibleError(SpecError):
    """Raised when r_k * n is not an integer for some component."""

    def __init__(self, n, component):
        self.n = n
        self.component = component
        super().__init__(f"n = {n} is not compatible with the ratio of component {component}")


def compatible_counts(spec, n):
    """Return the per-component counts n_k = r_k * n.

    Args:
        spec: MixtureSpec
        n: positive sample size

    Raises:
        IncompatibleError: for the first component whose share is not integral.
    """
    if n < 1:
        raise SpecError(f"n must be positive, got {n}")
    counts = []
    for k, comp in enumerate(spec.components):
        share = comp.ratio * n
        if share.denominator != 1:
            raise IncompatibleError(n, k)
        counts.append(int(share))
    return counts


def compatibility_step(spec):
    """Smallest n compatible with the ratios: lcm of the reduced denominators."""
    return math.lcm(*(c.ratio.denominator for c in spec.components))


def canonical_labeling(spec, n):
    return HiddenLabeling(n=n, counts=tuple(compatible_counts(spec, n)))


def trial_seed(seed, trial):
    """Independent 64-bit seed for one trial, derived from (seed, trial)."""
    state = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(trial)])
    return int(state.generate_state(1, dtype=np.uint64)[0])


def standard_normals(seed, rows, cols):
    """Counter-based standard normals laid out as (rows, cols).

    Column i consumes stream positions i*rows .. (i+1)*rows-1 of a Philox
    stream keyed by the seed, so each column is a function of (seed, i) only.
    """
    bitgen = np.random.Philox(key=int(seed) & 0xFFFFFFFFFFFFFFFF)
    raw = bitgen.random_raw(rows * cols)
    uniforms = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _UNIT
    return ndtri(uniforms).reshape(cols, rows).T


def sample_dataset(spec, labeling, seed):
    """Draw one dataset: column i ~ N(mu_l(i), sigma_l(i)^2 I_d)."""
    if len(labeling.counts) != spec.m:
        raise SpecError(
            f"Labeling has {len(labeling.counts)} counts but the mixture has {spec.m} components"
        )
    labels = labeling.labels
    z = standard_normals(seed, spec.dimension, labeling.n)
    points = spec.means[labels].T + z * spec.stddevs[labels]
    return Dataset(points=points, labeling=labeling, seed=int(seed))


def _check_which(spec, which):
    if which == MEAN:
        return
    if not isinstance(which, (int, np.integer)) or not 0 <= which < spec.m:
        raise SpecError(f"Invalid component index {which!r} for a mixture of {spec.m}")


def component_densities(spec, points):
    """Densities f_k at each point; points (N, d) -> array (N, m)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    sq = ((points[:, None, :] - spec.means[None, :, :]) ** 2).sum(axis=2)
    var = spec.stddevs ** 2
    return np.exp(-sq / (2 * var)) / (2 * np.pi * var) ** (spec.dimension / 2)


def density(spec, points, which=MEAN):
    """Vectorized f_k or mean density f-bar at points of shape (N, d)."""
    _check_which(spec, which)
    dens = component_densities(spec, points)
    if which == MEAN:
        return dens @ spec.ratios
    return dens[:, which]


def density_at(spec, x, which=MEAN):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != spec.dimension:
        raise SpecError(f"Point has length {x.shape[0]}, expected {spec.dimension}")
    _check_which(spec, which)
    if which == MEAN:
        return float(sum(r * density_at(spec, x, k) for k, r in enumerate(spec.ratios)))
    comp = spec.components[which]
    return float(np.prod(norm.pdf(x, loc=comp.mean, scale=comp.stddev)))


def mean_density_1d(spec, xs):
    """f-bar on a 1D grid (d = 1 only)."""
    xs = np.asarray(xs, dtype=float)
    comps = norm.pdf(xs[..., None], loc=spec.means[:, 0], scale=spec.stddevs)
    return comps @ spec.ratios


def pair_spec(r, alpha, lam, sigma=1.0):
    """Two 1D components: mean 0 (ratio r, stddev sigma) and mean lam (stddev alpha*sigma)."""
    return line_spec(lam, 1, r, alpha, sigma)


def line_spec(lam, dimension=1, r=0.5, alpha=1.0, sigma=1.0):
    """pair_spec embedded in R^d: means 0 and lam * e_1."""
    r = as_fraction(r)
    far = (float(lam),) + (0.0,) * (dimension - 1)
    return MixtureSpec(dimension=dimension, components=(
        Component(ratio=r, mean=(0.0,) * dimension, stddev=sigma),
        Component(ratio=1 - r, mean=far, stddev=alpha * sigma),
    ))


def triangle_spec(lam, dimension=2, sigma=1.0):
    """Three equally weighted components on an equilateral triangle of side lam."""
    if dimension < 2:
        raise SpecError("A triangle layout needs dimension >= 2")
    pad = (0.0,) * (dimension - 2)
    corners = ((0.0, 0.0), (lam, 0.0), (lam / 2, lam * math.sqrt(3) / 2))
    return MixtureSpec(dimension=dimension, components=tuple(
        Component(ratio=Fraction(1, 3), mean=corner + pad, stddev=sigma) for corner in corners
    ))


def spec_to_dict(spec):
    return {
        'dimension': spec.dimension,
        'components': [
            {'ratio': str(c.ratio), 'mean': list(c.mean), 'stddev': c.stddev}
            for c in spec.components
        ],
    }


def spec_from_dict(data):
    try:
        components = tuple(
            Component(ratio=as_fraction(c['ratio']), mean=tuple(c['mean']), stddev=c['stddev'])
            for c in data['components']
        )
        return MixtureSpec(dimension=int(data['dimension']), components=components)
    except (KeyError, TypeError, ZeroDivisionError) as exc:
        raise SpecError(f"Malformed mixture description: {exc}") from exc
