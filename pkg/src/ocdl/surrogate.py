"""Second-order online dictionary learning with a forgetting factor.

The learner replaces the intractable running objective by a weighted sum of
past single-sample quadratics. The quadratic state is held in a recursive
accumulator, either as a dense matrix on the stacked filter taps (option
``spatial``) or as per-frequency-bin blocks (option ``frequency``), and the
dictionary update solves the accumulated subproblem with FISTA, stopped
early by a fixed-point-residual tolerance that tightens over time.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass

import numpy as np

from .config import TrainConfig
from .csc import cbpdn_masked_solve, cbpdn_solve
from .data import stream_sampler
from .evaluate import (
    ConvergenceRecord,
    append_record,
    memory_estimate,
    test_objective,
)
from .projections import (
    project_dictionary,
    project_padded_dictionary,
    random_dictionary,
)
from .signals import (
    CoeffMaps,
    Dictionary,
    Mask,
    PaddedDictionary,
    Signal,
    dft_forward,
    dft_inverse,
)

_TINY = 1e-30


def forgetting_factor(t: int, p: float) -> float:
    """Down-weighting factor ``(1 - 1/t)**p`` applied to the running state."""
    if t < 1:
        raise ValueError("step index starts at 1")
    if p < 0:
        raise ValueError("forgetting exponent must be nonnegative")
    return (1.0 - 1.0 / t) ** p


@dataclass
class Forgetting:
    """Forgetting-factor state: exponent, running normalizer and step count.

    The recursion keeps ``normalizer`` equal to the closed form
    ``sum_{tau=1..t} (tau/t)**p``.
    """

    exponent: float
    normalizer: float = 0.0
    steps: int = 0

    def advance(self) -> float:
        self.steps += 1
        alpha = forgetting_factor(self.steps, self.exponent)
        self.normalizer = alpha * self.normalizer + 1.0
        return alpha


class SpatialHessianAccumulator:
    """Dense quadratic state on the stacked filter taps.

    Holds the weighted sum of past operator Grams (``op.T @ op`` per
    sample) and the matching linear term, updated recursively through the
    coordinate-list operator. The matrix is symmetric positive
    semidefinite by construction.
    """

    def __init__(self, num_filters: int, kernel_shape: tuple[int, int]):
        self.num_filters = num_filters
        self.kernel_shape = tuple(kernel_shape)
        dim = num_filters * kernel_shape[0] * kernel_shape[1]
        self.matrix = np.zeros((dim, dim))
        self.vector = np.zeros(dim)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def update(self, x: CoeffMaps, s: Signal, alpha: float, mask: Mask | None = None):
        op = x.operator(self.kernel_shape)
        target = s.values.ravel()
        if mask is not None:
            w = mask.values.ravel()
            op = op.multiply(w[:, None]).tocsr()
            target = w * target
        self.matrix *= alpha
        self.matrix += (op.T @ op).toarray()
        self.vector = alpha * self.vector + op.T @ target

    def gradient(self, filters_vec: np.ndarray) -> np.ndarray:
        return self.matrix @ filters_vec - self.vector

    def matvec(self, filters_vec: np.ndarray) -> np.ndarray:
        return self.matrix @ filters_vec

    def quadratic_value(self, filters_vec: np.ndarray) -> float:
        return 0.5 * float(filters_vec @ self.matrix @ filters_vec) - float(
            self.vector @ filters_vec
        )

    @property
    def state_nbytes(self) -> int:
        return self.matrix.nbytes


class FrequencyHessianAccumulator:
    """Per-frequency-bin quadratic state on the zero-padded filters.

    Each bin carries one Hermitian block ``conj(xhat[:, k]) xhat[:, k]^T``
    accumulated over samples, so storage is ``M^2 * N`` complex entries.
    """

    def __init__(
        self,
        num_filters: int,
        kernel_shape: tuple[int, int],
        signal_shape: tuple[int, int],
    ):
        self.num_filters = num_filters
        self.kernel_shape = tuple(kernel_shape)
        self.signal_shape = tuple(signal_shape)
        rows, cols = signal_shape
        self.blocks = np.zeros((rows, cols, num_filters, num_filters), dtype=np.complex128)
        self.vector = np.zeros((num_filters, rows, cols), dtype=np.complex128)

    def update(self, x: CoeffMaps, s: Signal, alpha: float, mask: Mask | None = None):
        if mask is not None:
            raise ValueError("masked accumulation is spatial-only")
        coeff_hat = dft_forward(x.maps)
        signal_hat = dft_forward(s.values)
        self.blocks *= alpha
        self.blocks += np.einsum("mhw,nhw->hwmn", np.conj(coeff_hat), coeff_hat)
        self.vector = alpha * self.vector + np.conj(coeff_hat) * signal_hat[None]

    def gradient_hat(self, filters_hat: np.ndarray) -> np.ndarray:
        return np.einsum("hwmn,nhw->mhw", self.blocks, filters_hat) - self.vector

    def _pad(self, filters_vec: np.ndarray) -> np.ndarray:
        lr, lc = self.kernel_shape
        padded = np.zeros((self.num_filters,) + self.signal_shape)
        padded[:, :lr, :lc] = filters_vec.reshape(self.num_filters, lr, lc)
        return padded

    def matvec(self, filters_vec: np.ndarray) -> np.ndarray:
        # Compact-space product: pad, multiply bin-wise, restrict to support.
        lr, lc = self.kernel_shape
        hat = dft_forward(self._pad(filters_vec))
        prod = dft_inverse(np.einsum("hwmn,nhw->mhw", self.blocks, hat))
        return prod[:, :lr, :lc].reshape(-1)

    def quadratic_value(self, filters_vec: np.ndarray) -> float:
        # Quadratic and linear terms carried over to frequency, scaled by 1/N.
        hat = dft_forward(self._pad(filters_vec))
        num_pixels = self.signal_shape[0] * self.signal_shape[1]
        quad = np.real(np.vdot(hat, np.einsum("hwmn,nhw->mhw", self.blocks, hat)))
        lin = np.real(np.vdot(self.vector, hat))
        return (0.5 * quad - lin) / num_pixels

    @property
    def state_nbytes(self) -> int:
        return self.blocks.nbytes


HessianAccumulator = SpatialHessianAccumulator | FrequencyHessianAccumulator


def surrogate_grad(acc: HessianAccumulator, lam_norm: float, d) -> np.ndarray:
    """Gradient of the accumulated surrogate in the accumulator's own form."""
    if lam_norm <= 0:
        raise ValueError("normalizer must be positive")
    if isinstance(acc, SpatialHessianAccumulator):
        if not isinstance(d, Dictionary):
            raise TypeError("spatial accumulator expects a compact Dictionary")
        grad = acc.gradient(d.as_vector()) / lam_norm
        return grad.reshape(d.filters.shape)
    if not isinstance(d, PaddedDictionary):
        raise TypeError("frequency accumulator expects a PaddedDictionary")
    return acc.gradient_hat(dft_forward(d.values)) / lam_norm


def fixed_point_residual(d, grad: np.ndarray, eta: float) -> float:
    """Distance moved by one projected gradient step of size ``eta``.

    Zero exactly at constrained minimizers. The projection matches the
    iterate type: unit balls for compact filters, supported unit balls for
    padded ones.
    """
    if isinstance(d, Dictionary):
        stepped = project_dictionary(Dictionary(d.filters - eta * grad))
        return float(np.linalg.norm(stepped.filters - d.filters))
    if isinstance(d, PaddedDictionary):
        stepped = project_padded_dictionary(d.values - eta * grad, d.support)
        return float(np.linalg.norm(stepped.values - d.values))
    raise TypeError("expected a Dictionary or PaddedDictionary")


def estimate_curvature(
    acc: HessianAccumulator, start: np.ndarray, num_iters: int = 20
) -> tuple[float, np.ndarray]:
    """Largest-eigenvalue estimate of the accumulated quadratic by power
    iteration; converges from below, so warm-starting the vector across
    training steps keeps it tight."""
    v = start / max(np.linalg.norm(start), _TINY)
    lam = 0.0
    for _ in range(num_iters):
        w = acc.matvec(v)
        lam = float(np.linalg.norm(w))
        if lam <= _TINY:
            return 0.0, v
        v = w / lam
    return lam, v


def _fista_loop(g0: np.ndarray, step_fn, tau: float, max_inner: int):
    """Momentum loop shared by both domains.

    ``step_fn`` maps an auxiliary iterate to its projected gradient step;
    the fixed-point residual is the distance between the two, and the loop
    stops once it reaches ``tau``. Stopping on the very first check returns
    the warm start unchanged with an inner count of zero.
    """
    g_prev = g0
    g_aux = g0
    gamma = 1.0
    last = np.inf
    for j in range(max_inner):
        g_next = step_fn(g_aux)
        last = float(np.linalg.norm((g_next - g_aux).ravel()))
        if last <= tau:
            if j == 0:
                return g0, 0, last, False
            return g_next, j + 1, last, False
        gamma_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * gamma * gamma))
        g_aux = g_next + ((gamma - 1.0) / gamma_next) * (g_next - g_prev)
        g_prev = g_next
        gamma = gamma_next
    return g_prev, max_inner, last, True


def fista_dictionary_update(
    acc: HessianAccumulator,
    lam_norm: float,
    d_init: Dictionary,
    eta: float,
    tau: float,
    max_inner: int = 200,
) -> tuple[Dictionary, int, float, bool]:
    """Solve the accumulated dictionary subproblem from a warm start.

    Returns the updated compact dictionary, the number of inner iterations,
    the final fixed-point residual, and a flag set when ``max_inner`` was
    reached before the tolerance.
    """
    if isinstance(acc, SpatialHessianAccumulator):
        shape = (acc.num_filters,) + acc.kernel_shape

        def step(vec):
            grad = acc.gradient(vec) / lam_norm
            stepped = (vec - eta * grad).reshape(shape)
            return project_dictionary(Dictionary(stepped)).filters.reshape(-1)

        out, iters, last, hit = _fista_loop(
            d_init.as_vector(), step, tau, max_inner
        )
        if iters == 0:
            return d_init, 0, last, hit
        return Dictionary(out.reshape(shape)), iters, last, hit

    support = acc.kernel_shape

    def step(values):
        hat = dft_forward(values)
        grad_hat = acc.gradient_hat(hat) / lam_norm
        stepped = dft_inverse(hat - eta * grad_hat)
        return project_padded_dictionary(stepped, support).values

    padded = PaddedDictionary.from_compact(d_init, acc.signal_shape)
    out, iters, last, hit = _fista_loop(padded.values, step, tau, max_inner)
    if iters == 0:
        return d_init, 0, last, hit
    return PaddedDictionary(out, support).to_compact(), iters, last, hit


def _make_accumulator(cfg: TrainConfig, signal_shape) -> HessianAccumulator:
    if cfg.domain == "spatial":
        return SpatialHessianAccumulator(cfg.num_filters, cfg.kernel_shape)
    return FrequencyHessianAccumulator(cfg.num_filters, cfg.kernel_shape, signal_shape)


def train_surrogate(
    tiles: list[Signal],
    cfg: TrainConfig,
    masks: list[Mask] | None = None,
    test_signals: list[Signal] | None = None,
    callback=None,
    d_init: Dictionary | None = None,
) -> tuple[Dictionary, list[ConvergenceRecord]]:
    """Run the surrogate-splitting learner over a tile stream.

    Per step: sparse-code one tile, fold its quadratic into the forgetting
    accumulator, re-estimate the inner step bound, and solve the dictionary
    subproblem with FISTA at the scheduled tolerance. Passing ``d_init``
    resumes from an existing dictionary instead of a random one.
    """
    cfg.validate()
    if not tiles:
        raise ValueError("training stream is empty")
    if cfg.algo != "surrogate":
        raise ValueError("config selects a different learner")
    shape = tiles[0].shape
    if any(t.shape != shape for t in tiles):
        raise ValueError("all tiles must share one shape")
    if cfg.masked and (masks is None or len(masks) != len(tiles)):
        raise ValueError("masked training needs one mask per tile")

    rng = np.random.default_rng(cfg.seed)
    if d_init is None:
        d = random_dictionary(cfg.num_filters, cfg.kernel_shape, rng)
    else:
        d = Dictionary(d_init.filters.copy())
    eig_vec = rng.standard_normal(d.num_filters * d.filter_length)
    acc = _make_accumulator(cfg, shape)
    forgetting = Forgetting(cfg.forgetting_exponent)
    const_acc = 0.0
    order = stream_sampler(list(range(len(tiles))), cfg.epochs, cfg.seed)
    records: list[ConvergenceRecord] = []
    start = time.perf_counter()
    scheme = f"surrogate-{cfg.domain}"
    num_pixels = tiles[0].num_pixels

    for t, idx in enumerate(order, start=1):
        s = tiles[idx]
        mask = masks[idx] if cfg.masked else None
        if cfg.masked:
            result = cbpdn_masked_solve(d, s, mask, cfg.csc)
        else:
            result = cbpdn_solve(d, s, cfg.csc)
        if not result.converged:
            warnings.warn(f"step {t}: sparse coding did not converge", RuntimeWarning)

        alpha = forgetting.advance()
        acc.update(result.maps, s, alpha, mask=mask)
        target = s.values if mask is None else mask.values * s.values
        const_acc = alpha * const_acc + 0.5 * float(np.sum(target ** 2)) + (
            cfg.penalty * float(np.sum(np.abs(result.maps.maps)))
        )

        curvature, eig_vec_flat = estimate_curvature(acc, eig_vec)
        eig_vec = eig_vec_flat
        eta = forgetting.normalizer / max(curvature, _TINY)
        tau = cfg.stop.tolerance(t)
        d_new, inner, fpr_val, hit = fista_dictionary_update(
            acc, forgetting.normalizer, d, eta, tau, cfg.max_inner
        )
        if hit:
            warnings.warn(
                f"step {t}: dictionary update hit max_inner={cfg.max_inner}",
                RuntimeWarning,
            )

        test_obj = None
        if test_signals and cfg.eval_every and t % cfg.eval_every == 0:
            test_obj = test_objective(d_new, test_signals, cfg.penalty)
        rec = append_record(
            records,
            t=t,
            epoch=(t - 1) // len(tiles),
            start_time=start,
            sample_obj=result.objective,
            test_obj=test_obj,
            inner_iters=inner,
            fpr=fpr_val,
            step_or_tol=tau,
            mem_bytes=memory_estimate(
                cfg.num_filters, d.filter_length, num_pixels,
                result.maps.density, scheme,
            ),
        )
        if callback is not None:
            surrogate_value = (
                acc.quadratic_value(d_new.as_vector()) + const_acc
            ) / forgetting.normalizer
            callback(
                t,
                d_new,
                rec,
                {
                    "delta": float(np.linalg.norm(d_new.filters - d.filters)),
                    "surrogate_value": surrogate_value,
                    "eta": eta,
                    "state_bytes": acc.state_nbytes,
                },
            )
        d = d_new

    return d, records
