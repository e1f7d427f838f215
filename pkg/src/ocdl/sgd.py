"""First-order online dictionary learning: modified projected SGD.

Each step sparse-codes one tile with the current dictionary, then takes a
projected gradient step. The update runs either in the spatial domain
through the coordinate-list operator (option ``spatial``) or bin-wise in
the frequency domain on the zero-padded filters (option ``frequency``);
the two paths produce identical iterates up to floating-point noise.
"""

from __future__ import annotations

import time
import warnings

import numpy as np

from .config import StepSchedule, TrainConfig
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
    FreqView,
    Mask,
    PaddedDictionary,
    Signal,
    dft_forward,
    dft_inverse,
    dictionary_gradient,
    dictionary_gradient_freq,
)


def step_size(schedule: StepSchedule, t: int) -> float:
    if t < 1:
        raise ValueError("step index starts at 1")
    if schedule.kind == "fixed":
        return schedule.eta0
    return schedule.a / (schedule.b + t)


def sgd_step_spatial(d: Dictionary, x: CoeffMaps, s: Signal, eta: float) -> Dictionary:
    """Projected gradient step on the compact filters (sparse-operator path)."""
    grad = dictionary_gradient(x, d, s)
    return project_dictionary(Dictionary(d.filters - eta * grad))


def sgd_step_frequency(
    d: PaddedDictionary, coeff_hat: np.ndarray, signal_hat: np.ndarray, eta: float
) -> PaddedDictionary:
    """Projected gradient step computed bin-wise in the frequency domain."""
    filters_hat = dft_forward(d.values)
    grad_hat = dictionary_gradient_freq(coeff_hat, filters_hat, signal_hat)
    updated = dft_inverse(filters_hat - eta * grad_hat)
    return project_padded_dictionary(updated, d.support)


def sgd_step_masked_spatial(
    d: Dictionary, x: CoeffMaps, s: Signal, mask: Mask, eta: float
) -> Dictionary:
    """Spatial step with the residual masked before the adjoint."""
    if mask.shape != s.shape:
        raise ValueError("mask shape does not match the signal")
    op = x.operator(d.kernel_shape)
    resid = mask.values.ravel() * (op @ d.as_vector() - s.values.ravel())
    grad = (op.T @ resid).reshape(d.filters.shape)
    return project_dictionary(Dictionary(d.filters - eta * grad))


def sgd_step_masked_frequency(
    d: PaddedDictionary,
    coeff_hat: np.ndarray,
    signal_hat: np.ndarray,
    mask: Mask,
    eta: float,
) -> PaddedDictionary:
    """Frequency step with the residual masked in the spatial domain."""
    if mask.shape != d.signal_shape:
        raise ValueError("mask shape does not match the signal grid")
    filters_hat = dft_forward(d.values)
    resid = dft_inverse(np.sum(coeff_hat * filters_hat, axis=0) - signal_hat)
    masked_hat = dft_forward(mask.values * resid)
    grad_hat = np.conj(coeff_hat) * masked_hat[None]
    updated = dft_inverse(filters_hat - eta * grad_hat)
    return project_padded_dictionary(updated, d.support)


def train_sgd(
    tiles: list[Signal],
    cfg: TrainConfig,
    masks: list[Mask] | None = None,
    test_signals: list[Signal] | None = None,
    callback=None,
    d_init: Dictionary | None = None,
) -> tuple[Dictionary, list[ConvergenceRecord]]:
    """Run the projected-SGD learner over a tile stream.

    Tiles are visited once per epoch in a seeded shuffled order. Returns
    the final dictionary and one log record per step; a non-convergent
    sparse-coding step raises a warning and training continues. Passing
    ``d_init`` resumes from an existing dictionary instead of a random one.
    """
    cfg.validate()
    if not tiles:
        raise ValueError("training stream is empty")
    if cfg.algo != "sgd":
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
    order = stream_sampler(list(range(len(tiles))), cfg.epochs, cfg.seed)
    records: list[ConvergenceRecord] = []
    start = time.perf_counter()
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
        eta = step_size(cfg.schedule, t)

        if cfg.domain == "spatial":
            if cfg.masked:
                d_new = sgd_step_masked_spatial(d, result.maps, s, mask, eta)
            else:
                d_new = sgd_step_spatial(d, result.maps, s, eta)
            mem = memory_estimate(
                cfg.num_filters, d.filter_length, num_pixels,
                result.maps.density, "sgd-spatial-sparse",
            )
        else:
            padded = PaddedDictionary.from_compact(d, shape)
            view = FreqView.from_spatial(padded, result.maps, s)
            if cfg.masked:
                p_new = sgd_step_masked_frequency(
                    padded, view.coeff_hat, view.signal_hat, mask, eta
                )
            else:
                p_new = sgd_step_frequency(padded, view.coeff_hat, view.signal_hat, eta)
            d_new = p_new.to_compact()
            mem = memory_estimate(
                cfg.num_filters, d.filter_length, num_pixels,
                result.maps.density, "sgd-frequency",
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
            step_or_tol=eta,
            mem_bytes=mem,
        )
        if callback is not None:
            callback(t, d_new, rec, {"delta": float(np.linalg.norm(d_new.filters - d.filters))})
        d = d_new

    return d, records
