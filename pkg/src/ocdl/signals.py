"""Core containers and the convolutional coefficient operator.

A signal is a real 2-D image. A dictionary is a bank of M small filters of
support ``Lr x Lc``; its zero-padded companion lives on the full signal grid
with the filter taps pinned to the top-left block. Coefficient maps are one
signal-sized array per filter, and their operator form maps a stacked filter
vector to the reconstruction ``sum_m d_m * x_m`` under circular boundary
conditions.

DFT convention throughout: unnormalized forward transform, ``1/N``-scaled
inverse (the numpy default), so ``||ahat||^2 = N * ||a||^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

# Below this pixel count circular convolutions are evaluated directly by
# shifting, which keeps tiny test instances exact and easy to debug.
FFT_CROSSOVER = 256


def _as_float_array(values, ndim: int, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


@dataclass
class Signal:
    """One real-valued 2-D training image or tile."""

    values: np.ndarray

    def __post_init__(self):
        self.values = _as_float_array(self.values, 2, "signal")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def num_pixels(self) -> int:
        return self.values.size


@dataclass
class Mask:
    """Binary per-pixel weights; zero marks unknown/corrupted pixels."""

    values: np.ndarray

    def __post_init__(self):
        self.values = _as_float_array(self.values, 2, "mask")
        if not np.all((self.values == 0.0) | (self.values == 1.0)):
            raise ValueError("mask values must be 0 or 1")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass
class Dictionary:
    """A bank of compact filters, stored as an (M, Lr, Lc) array.

    Learners keep every filter inside the unit 2-norm ball; construction
    does not enforce that so that pre-projection iterates can be carried.
    """

    filters: np.ndarray

    def __post_init__(self):
        self.filters = _as_float_array(self.filters, 3, "filters")

    @property
    def num_filters(self) -> int:
        return self.filters.shape[0]

    @property
    def kernel_shape(self) -> tuple[int, int]:
        return self.filters.shape[1:]

    @property
    def filter_length(self) -> int:
        return self.filters.shape[1] * self.filters.shape[2]

    def as_vector(self) -> np.ndarray:
        """Stacked filter taps, filter-major then row-major within a filter."""
        return self.filters.reshape(-1)

    def norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.filters ** 2, axis=(1, 2)))


@dataclass
class PaddedDictionary:
    """Signal-sized filters, nonzero only on a top-left support block."""

    values: np.ndarray
    support: tuple[int, int]

    def __post_init__(self):
        self.values = _as_float_array(self.values, 3, "padded filters")
        lr, lc = self.support
        if lr > self.values.shape[1] or lc > self.values.shape[2]:
            raise ValueError("support exceeds the signal grid")

    @classmethod
    def from_compact(cls, d: Dictionary, shape: tuple[int, int]) -> "PaddedDictionary":
        lr, lc = d.kernel_shape
        if lr > shape[0] or lc > shape[1]:
            raise ValueError("kernel larger than signal grid")
        values = np.zeros((d.num_filters,) + tuple(shape))
        values[:, :lr, :lc] = d.filters
        return cls(values, (lr, lc))

    @property
    def num_filters(self) -> int:
        return self.values.shape[0]

    @property
    def signal_shape(self) -> tuple[int, int]:
        return self.values.shape[1:]

    def support_block(self) -> np.ndarray:
        lr, lc = self.support
        return self.values[:, :lr, :lc]

    def to_compact(self) -> Dictionary:
        return Dictionary(self.support_block().copy())

    def norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.values ** 2, axis=(1, 2)))


@dataclass
class CoeffMaps:
    """Per-filter coefficient maps, each the size of the signal."""

    maps: np.ndarray
    _operators: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.maps = _as_float_array(self.maps, 3, "coefficient maps")

    @property
    def num_filters(self) -> int:
        return self.maps.shape[0]

    @property
    def signal_shape(self) -> tuple[int, int]:
        return self.maps.shape[1:]

    @property
    def density(self) -> float:
        return np.count_nonzero(self.maps) / self.maps.size

    def operator(self, support: tuple[int, int]) -> sparse.csr_matrix:
        """Coordinate-list operator form, cached per filter support."""
        key = tuple(support)
        if key not in self._operators:
            self._operators[key] = coefficient_operator(self.maps, key)
        return self._operators[key]


@dataclass
class FreqView:
    """Forward-DFT images of padded filters, coefficient maps and signal."""

    filters_hat: np.ndarray
    coeff_hat: np.ndarray
    signal_hat: np.ndarray

    @classmethod
    def from_spatial(cls, d: PaddedDictionary, x: CoeffMaps, s: Signal) -> "FreqView":
        return cls(dft_forward(d.values), dft_forward(x.maps), dft_forward(s.values))


def dft_forward(a: np.ndarray) -> np.ndarray:
    """Unnormalized forward 2-D DFT over the trailing two axes."""
    a = np.asarray(a)
    if a.ndim not in (2, 3):
        raise ValueError(f"expected a 2-D array or a stack of them, got shape {a.shape}")
    return np.fft.fft2(a, axes=(-2, -1))


def dft_inverse(ahat: np.ndarray) -> np.ndarray:
    """1/N-scaled inverse of :func:`dft_forward`; returns the real part."""
    ahat = np.asarray(ahat)
    if ahat.ndim not in (2, 3):
        raise ValueError(f"expected a 2-D array or a stack of them, got shape {ahat.shape}")
    return np.fft.ifft2(ahat, axes=(-2, -1)).real


def coefficient_operator(maps: np.ndarray, support: tuple[int, int]) -> sparse.csr_matrix:
    """Build the sparse operator form of coefficient maps.

    Row ``i`` indexes a signal pixel; column ``m*L + u*Lc + v`` indexes tap
    ``(u, v)`` of filter ``m``. Each nonzero coefficient contributes one
    entry per tap, so the stored entry count is ``nnz(maps) * L``.
    """
    num_filters, rows, cols = maps.shape
    lr, lc = support
    taps = lr * lc
    m_idx, a_idx, b_idx = np.nonzero(maps)
    vals = maps[m_idx, a_idx, b_idx]
    uu, vv = np.meshgrid(np.arange(lr), np.arange(lc), indexing="ij")
    uu, vv = uu.ravel(), vv.ravel()
    out_rows = ((a_idx[:, None] + uu[None, :]) % rows) * cols + (
        (b_idx[:, None] + vv[None, :]) % cols
    )
    out_cols = m_idx[:, None] * taps + np.arange(taps)[None, :]
    data = np.broadcast_to(vals[:, None], out_rows.shape)
    op = sparse.coo_matrix(
        (data.ravel(), (out_rows.ravel(), out_cols.ravel())),
        shape=(rows * cols, num_filters * taps),
    )
    return op.tocsr()


def _filters_and_support(d: Dictionary | PaddedDictionary):
    if isinstance(d, Dictionary):
        return d.filters, d.kernel_shape
    return d.support_block(), d.support


def _check_shapes(x: CoeffMaps, d: Dictionary | PaddedDictionary, shape=None):
    if x.num_filters != d.num_filters:
        raise ValueError(
            f"filter count mismatch: {x.num_filters} maps vs {d.num_filters} filters"
        )
    if isinstance(d, PaddedDictionary) and d.signal_shape != x.signal_shape:
        raise ValueError("padded dictionary grid does not match the coefficient maps")
    if shape is not None and tuple(shape) != x.signal_shape:
        raise ValueError("signal shape does not match the coefficient maps")


def reconstruct(x: CoeffMaps, d: Dictionary | PaddedDictionary) -> Signal:
    """Apply the operator form: ``sum_m d_m * x_m`` with circular wrap."""
    _check_shapes(x, d)
    kernels, (lr, lc) = _filters_and_support(d)
    rows, cols = x.signal_shape
    if x.maps[0].size >= FFT_CROSSOVER:
        padded = np.zeros((x.num_filters, rows, cols))
        padded[:, :lr, :lc] = kernels
        out = dft_inverse(np.sum(dft_forward(padded) * dft_forward(x.maps), axis=0))
    else:
        out = np.zeros((rows, cols))
        for u in range(lr):
            for v in range(lc):
                shifted = np.roll(x.maps, (u, v), axis=(1, 2))
                out += np.tensordot(kernels[:, u, v], shifted, axes=(0, 0))
    return Signal(out)


def reconstruct_adjoint(
    x: CoeffMaps, r: Signal, support: tuple[int, int] | None = None
) -> np.ndarray:
    """Adjoint of :func:`reconstruct` with respect to the filters.

    Returns per-filter circular correlations of the maps with ``r``: the
    full (M, H, W) array, or only the ``support`` block when given.
    """
    if r.shape != x.signal_shape:
        raise ValueError("signal shape does not match the coefficient maps")
    if support is None or x.maps[0].size >= FFT_CROSSOVER:
        full = dft_inverse(np.conj(dft_forward(x.maps)) * dft_forward(r.values))
        if support is None:
            return full
        return full[:, : support[0], : support[1]].copy()
    lr, lc = support
    out = np.empty((x.num_filters, lr, lc))
    for u in range(lr):
        for v in range(lc):
            shifted = np.roll(r.values, (-u, -v), axis=(0, 1))
            out[:, u, v] = np.sum(x.maps * shifted, axis=(1, 2))
    return out


def coding_loss(
    d: Dictionary | PaddedDictionary, x: CoeffMaps, s: Signal, penalty: float
) -> float:
    """Evaluate ``0.5 * ||sum_m d_m * x_m - s||^2 + penalty * ||x||_1``."""
    if penalty < 0:
        raise ValueError("penalty must be nonnegative")
    _check_shapes(x, d, s.shape)
    resid = reconstruct(x, d).values - s.values
    return 0.5 * float(np.sum(resid ** 2)) + penalty * float(np.sum(np.abs(x.maps)))


def dictionary_gradient(
    x: CoeffMaps, d: Dictionary | PaddedDictionary, s: Signal
) -> np.ndarray:
    """Gradient of the data-fidelity term with respect to the filters.

    For a compact :class:`Dictionary` this is evaluated through the
    coordinate-list operator (cost scales with the map density) and has the
    kernel shape. For a :class:`PaddedDictionary` the full signal-sized
    gradient is returned, with no support restriction.
    """
    _check_shapes(x, d, s.shape)
    if isinstance(d, Dictionary):
        op = x.operator(d.kernel_shape)
        resid = op @ d.as_vector() - s.values.ravel()
        return (op.T @ resid).reshape(d.filters.shape)
    resid = Signal(reconstruct(x, d).values - s.values)
    return reconstruct_adjoint(x, resid)


def dictionary_gradient_freq(
    coeff_hat: np.ndarray, filters_hat: np.ndarray, signal_hat: np.ndarray
) -> np.ndarray:
    """Frequency-domain gradient, computed bin-wise.

    Each filter's operator block is diagonal in frequency, so the gradient
    is ``conj(xhat_m) . (sum_m xhat_m . dhat_m - shat)`` per bin. Its
    inverse DFT equals the spatial padded gradient exactly.
    """
    if coeff_hat.shape != filters_hat.shape:
        raise ValueError("coefficient and filter spectra must share a shape")
    if signal_hat.shape != coeff_hat.shape[1:]:
        raise ValueError("signal spectrum shape mismatch")
    resid_hat = np.sum(coeff_hat * filters_hat, axis=0) - signal_hat
    return np.conj(coeff_hat) * resid_hat[None]
