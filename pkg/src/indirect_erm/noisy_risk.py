"""Modified losses and empirical risks built from contaminated observations.

The regularized loss of a classifier is the quadrature of its pointwise
loss against the noise-corrected kernel (or against the truncated spectral
expansion). Tables are precomputed per classifier on an observation grid
and queried by linear interpolation; because the observation grid, the
quadrature grid, and the kernel offsets share one spacing, the table path,
the per-observation quadrature path, and the plug-in density path are the
same bilinear form evaluated in different orders and agree to rounding.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .errors import ConfigurationError, DataError
from .grid import Grid, padded_axis, trapezoid_weights
from .hypotheses import LossSpec, Scenario, hard_loss_pieces, loss_values
from .kernels import NoiseModel, TabulatedKernel, build_base_kernel, build_deconvolution_kernel
from .operators import SpectralOperator

logger = logging.getLogger(__name__)

# first clamp event in a process logs at WARNING, later ones at DEBUG
_clamp_seen = False

__all__ = [
    "NoisySample",
    "ObservationLattice",
    "ModifiedLossTable",
    "build_lattice",
    "modified_loss_deconv",
    "restricted_loss",
    "modified_loss_svd",
    "svd_loss_coefficients",
    "empirical_risk",
    "plug_in_density",
    "contaminated_density",
]


@dataclass(frozen=True)
class NoisySample:
    """Labeled contaminated observations (z_i, y_i)."""

    z: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        y = np.asarray(self.y, dtype=int)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "y", y)
        if z.shape[0] != y.shape[0]:
            raise DataError("observations and labels differ in length")
        if z.shape[0] < 1:
            raise DataError("sample must contain at least one observation")

    @property
    def n(self) -> int:
        return int(self.z.shape[0])

    def counts(self, labels=(0, 1)) -> dict[int, int]:
        return {lab: int(np.sum(self.y == lab)) for lab in labels}

    def label_fractions(self, labels=(0, 1)) -> dict[int, float]:
        return {lab: cnt / self.n for lab, cnt in self.counts(labels).items()}


@dataclass(frozen=True)
class ObservationLattice:
    """Shared discretization for one bandwidth: padded grid + aligned kernel.

    ``nodes``/``weights`` extend the scenario domain far enough to absorb
    contaminated observations; the kernel offsets run over every node
    difference at the same spacing, so discrete convolutions against node
    functions are exact sums. ``base_scaled`` is the bandwidth-scaled base
    kernel on the same offsets (the noise-free twin of ``kernel``).
    """

    domain: Grid
    nodes: np.ndarray
    weights: np.ndarray
    kernel: TabulatedKernel
    noise: NoiseModel
    base_scaled: TabulatedKernel

    @property
    def bandwidth(self) -> tuple[float, ...]:
        return self.kernel.bandwidth

    @property
    def spacing(self) -> float:
        return float(self.nodes[1] - self.nodes[0])

    def domain_slice(self) -> slice:
        """Positions of the original domain nodes inside the padded axis."""
        n_pad = (len(self.nodes) - self.domain.points_per_dim) // 2
        return slice(n_pad, n_pad + self.domain.points_per_dim)


def build_lattice(grid: Grid, noise: NoiseModel, bandwidth,
                  base_kind: str = "sinc", pad_factor: float = 4.0) -> ObservationLattice:
    """Assemble the padded observation grid and the aligned scaled kernel.

    Padding is ``pad_factor * max(bandwidth, noise scale)`` per side, after
    which observations are clamped to the boundary (with a logged count).
    """
    bw = np.atleast_1d(np.asarray(bandwidth, dtype=float))
    margin = pad_factor * max(float(bw.max()), noise.std)
    nodes, weights = padded_axis(grid, margin)
    m = len(nodes) - 1
    offsets = (nodes[1] - nodes[0]) * np.arange(-m, m + 1)
    base = build_base_kernel(base_kind, grid, offsets=(offsets,))
    kernel = build_deconvolution_kernel(base, noise, bandwidth)
    from .kernels import dirac_noise

    base_scaled = build_deconvolution_kernel(base, dirac_noise(noise.ndim), bandwidth)
    return ObservationLattice(domain=grid, nodes=nodes, weights=weights,
                              kernel=kernel, noise=noise, base_scaled=base_scaled)


@dataclass(frozen=True)
class ModifiedLossTable:
    """Per-label tables of the regularized loss of one classifier.

    ``values[label]`` holds the table on ``z_nodes``; queries interpolate
    linearly and clamp out-of-range observations to the boundary value
    (clamp counts are logged, once per table at warning level).
    """

    z_nodes: np.ndarray
    values: dict
    backend: str
    smoothing: tuple
    # spectral backend: per-label (cutoff, b_k^(-1) c_k) for exact queries
    coefficient_data: dict | None = field(default=None, compare=False)
    _clamp_state: dict = field(default_factory=dict, compare=False, repr=False)

    def labels(self):
        return tuple(sorted(self.values))

    def evaluate(self, z: np.ndarray, label: int) -> np.ndarray:
        if label not in self.values:
            raise DataError(f"no table for label {label}")
        z = np.asarray(z, dtype=float)
        if self.coefficient_data is not None:
            # evaluate the truncated expansion exactly; no node interpolation
            cutoff, weighted = self.coefficient_data[label]
            k = np.arange(cutoff + 1)[:, None]
            phi = np.sqrt(2.0) * np.cos(np.pi * k * z[None, :])
            phi[0, :] = 1.0
            return weighted @ phi
        lo, hi = self.z_nodes[0], self.z_nodes[-1]
        n_clamped = int(np.sum((z < lo) | (z > hi)))
        if n_clamped:
            global _clamp_seen
            level = logging.DEBUG if _clamp_seen else logging.WARNING
            _clamp_seen = True
            self._clamp_state["count"] = self._clamp_state.get("count", 0) + n_clamped
            logger.log(level, "clamping %d observation(s) outside the table range "
                       "(later clamp events log at DEBUG)", n_clamped)
        return np.interp(z, self.z_nodes, self.values[label])

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(v))) for v in self.values.values())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["label", "z", "value"])
            for label in self.labels():
                for z, v in zip(self.z_nodes, self.values[label]):
                    writer.writerow([label, repr(float(z)), repr(float(v))])


def _deconv_table_values(node_loss: np.ndarray, lattice: ObservationLattice) -> np.ndarray:
    """Discrete convolution of weighted node losses with the kernel table."""
    spread = fftconvolve(lattice.weights * node_loss, lattice.kernel.axis_values(0),
                         mode="valid")
    # 'valid' of (P) against (2P-1) returns exactly P values aligned with nodes
    return spread


def modified_loss_deconv(clf, loss: LossSpec, lattice: ObservationLattice,
                         labels=(0, 1),
                         window: tuple[float, float] | None = None) -> ModifiedLossTable:
    """Regularized loss table: quadrature of the loss against the scaled kernel.

    The integration runs over the padded grid (the classifier's natural
    extension beyond the domain is used); ``window`` restricts it to a
    compact subinterval instead.
    """
    x = lattice.nodes
    mask = None
    if window is not None:
        a, b = window
        if b <= a:
            raise ConfigurationError("restriction window must have positive length")
        mask = (x >= a) & (x <= b)
        if not np.any(mask):
            raise ConfigurationError("restriction window contains no grid nodes")
    values = {}
    for label in labels:
        lv = loss_values(clf, loss, label, x)
        if mask is not None:
            lv = np.where(mask, lv, 0.0)
        values[label] = _deconv_table_values(lv, lattice)
    backend = "deconvolution" if window is None else "restricted"
    return ModifiedLossTable(z_nodes=x, values=values, backend=backend,
                             smoothing=lattice.bandwidth)


def restricted_loss(clf, loss: LossSpec, lattice: ObservationLattice,
                    window: tuple[float, float], labels=(0, 1)) -> ModifiedLossTable:
    """Regularized loss with the integration clipped to a compact window."""
    return modified_loss_deconv(clf, loss, lattice, labels=labels, window=window)


def svd_loss_coefficients(clf, loss: LossSpec, op: SpectralOperator, cutoff: int,
                          grid: Grid, label: int) -> np.ndarray:
    """Basis coefficients c_k = integral of phi_k(x) loss(g(x), label) over the domain.

    Hard losses of interval-like classifiers integrate in closed form per
    constant piece; other losses fall back to trapezoid quadrature.
    """
    if cutoff > op.k_max:
        raise ConfigurationError(f"cutoff {cutoff} exceeds k_max {op.k_max}")
    lo, hi = grid.lower[0], grid.upper[0]
    k = np.arange(cutoff + 1, dtype=float)
    if loss.kind == "hard":
        pieces = hard_loss_pieces(clf, label, lo, hi)
    else:
        pieces = None
    if pieces is not None:
        # antiderivative of phi_k: x for k = 0, sqrt(2) sin(pi k x)/(pi k) else
        coeffs = np.zeros(cutoff + 1)
        for a, b, value in pieces:
            if value == 0.0 or b <= a:
                continue
            seg = np.empty(cutoff + 1)
            seg[0] = b - a
            kk = k[1:]
            seg[1:] = np.sqrt(2.0) * (np.sin(np.pi * kk * b) - np.sin(np.pi * kk * a)) / (np.pi * kk)
            coeffs += value * seg
        return coeffs
    x, w = grid.axis(0), grid.weights(0)
    phi = op.basis(x, cutoff)
    return phi @ (w * loss_values(clf, loss, label, x))


def modified_loss_svd(clf, loss: LossSpec, op: SpectralOperator, cutoff: int,
                      grid: Grid, labels=(0, 1)) -> ModifiedLossTable:
    """Spectral-cutoff loss table: sum_k b_k^(-1) c_k phi_k(z).

    Node values are tabulated for inspection/export, but queries evaluate
    the truncated expansion exactly (the expansion is cheap and exactness
    keeps the empirical risk identical to the coefficient pairing).
    """
    x = grid.axis(0)
    phi = op.basis(x, cutoff)
    inv_b = 1.0 / op.singular_values[: cutoff + 1]
    values = {}
    coefficient_data = {}
    for label in labels:
        c = svd_loss_coefficients(clf, loss, op, cutoff, grid, label)
        weighted = inv_b * c
        values[label] = weighted @ phi
        coefficient_data[label] = (cutoff, weighted)
    return ModifiedLossTable(z_nodes=x, values=values, backend="svd",
                             smoothing=(cutoff,), coefficient_data=coefficient_data)


def empirical_risk(table: ModifiedLossTable, sample: NoisySample) -> float:
    """Mean of table lookups at the sample points."""
    total = 0.0
    for label in np.unique(sample.y):
        label = int(label)
        z_lab = sample.z[sample.y == label]
        total += float(np.sum(table.evaluate(z_lab, label)))
    return total / sample.n


def plug_in_density(z_draws: np.ndarray, lattice: ObservationLattice) -> np.ndarray:
    """Noise-corrected density estimate on the lattice nodes.

    Each observation contributes the interpolated kernel column; computed by
    linear binning followed by one discrete convolution, which reproduces
    the per-observation sum exactly because the table kernel is piecewise
    linear between grid-aligned knots. Values may be negative.
    """
    z = np.asarray(z_draws, dtype=float)
    if z.size == 0:
        raise DataError("plug-in density needs at least one observation")
    nodes = lattice.nodes
    h = lattice.spacing
    z = np.clip(z, nodes[0], nodes[-1])
    idx = np.clip(np.searchsorted(nodes, z) - 1, 0, len(nodes) - 2)
    frac = (z - nodes[idx]) / h
    binned = np.zeros(len(nodes))
    np.add.at(binned, idx, 1.0 - frac)
    np.add.at(binned, idx + 1, frac)
    return fftconvolve(binned / z.size, lattice.kernel.axis_values(0), mode="valid")


def contaminated_density(scenario: Scenario, lattice: ObservationLattice,
                         label: int) -> np.ndarray:
    """Density of the contaminated observation Z for one label, on the lattice.

    For additive noise this is the discrete convolution of the conditional
    density (zero-extended to the padded grid) with the tabulated noise
    density; for dirac noise it is the zero-extended density itself.
    """
    nodes = lattice.nodes
    inside = (nodes >= scenario.domain.lower[0]) & (nodes <= scenario.domain.upper[0])
    f = np.where(inside, scenario.density(label, nodes), 0.0)
    if lattice.noise.kind == "dirac":
        return f
    m = len(nodes) - 1
    offs = lattice.spacing * np.arange(-m, m + 1)
    eta = lattice.noise.density(offs, 0)
    return fftconvolve(lattice.weights * f, eta, mode="valid")


def expected_modified_risk(table: ModifiedLossTable, scenario: Scenario,
                           lattice: ObservationLattice | None = None) -> float:
    """Exact expectation of the empirical risk under the scenario.

    Deconvolution backend: quadrature of each label table against the
    contaminated observation density. Spectral backend: the truncated
    coefficient pairing of the loss with the conditional densities.
    """
    total = 0.0
    if table.backend in ("deconvolution", "restricted"):
        if lattice is None:
            raise ConfigurationError("deconvolution expectation needs the lattice")
        w = trapezoid_weights(len(lattice.nodes), lattice.spacing)
        for label in table.labels():
            g_z = contaminated_density(scenario, lattice, label)
            total += scenario.priors[label] * float(np.dot(w, table.values[label] * g_z))
        return total
    raise ConfigurationError(f"no exact expectation for backend {table.backend!r}")


def base_smoothed_density(scenario: Scenario, lattice: ObservationLattice,
                          label: int) -> np.ndarray:
    """Conditional density smoothed by the bandwidth-scaled base kernel.

    The expectation of the noise-corrected kernel column at a contaminated
    observation equals the base-kernel column at the clean input, so the
    expected regularized risk is the quadrature of the raw loss against
    this smoothed density. This form avoids integrating the oscillatory
    corrected kernel and is the numerically stable route to expectations.
    """
    nodes = lattice.nodes
    inside = (nodes >= scenario.domain.lower[0]) & (nodes <= scenario.domain.upper[0])
    f = np.where(inside, scenario.density(label, nodes), 0.0)
    return fftconvolve(lattice.weights * f, lattice.base_scaled.axis_values(0),
                       mode="valid")
