"""Shared fixtures and independent oracle helpers.

The dense-operator builder and the synthetic corpus generator here are the
reference implementations the package is checked against; they deliberately
use plain loops and explicit shifts rather than the package's own routes.
"""

from __future__ import annotations

import numpy as np
import pytest

from ocdl import CoeffMaps, Dictionary, Mask, Signal, reconstruct


def dense_operator(maps: np.ndarray, support: tuple[int, int]) -> np.ndarray:
    """Materialize the coefficient operator column by column.

    Column (m, u, v) holds x_m circularly shifted by (u, v); built with
    np.roll in an explicit loop, independent of the package's sparse and
    FFT routes.
    """
    m, rows, cols = maps.shape
    lr, lc = support
    out = np.zeros((rows * cols, m * lr * lc))
    col = 0
    for i in range(m):
        for u in range(lr):
            for v in range(lc):
                out[:, col] = np.roll(maps[i], (u, v), axis=(0, 1)).ravel()
                col += 1
    return out


def random_instance(rng, shape=(8, 8), num_filters=2, kernel=(3, 3), density=0.2):
    """A random (dictionary, maps, signal) triple with sparse maps."""
    d_raw = rng.standard_normal((num_filters,) + kernel)
    norms = np.sqrt(np.sum(d_raw**2, axis=(1, 2), keepdims=True))
    d = Dictionary(d_raw / np.maximum(norms, 1.0))
    support_mask = rng.random((num_filters,) + shape) < density
    maps = np.where(support_mask, rng.standard_normal((num_filters,) + shape), 0.0)
    s = Signal(rng.standard_normal(shape))
    return d, CoeffMaps(maps), s


def unit_filters(rng, num_filters, kernel) -> Dictionary:
    raw = rng.standard_normal((num_filters,) + kernel)
    norms = np.sqrt(np.sum(raw**2, axis=(1, 2), keepdims=True))
    return Dictionary(raw / norms)


def synth_corpus(
    rng,
    num_signals=64,
    shape=(32, 32),
    num_filters=4,
    kernel=(6, 6),
    support_prob=0.02,
    noise_sigma=0.01,
):
    """Signals drawn from a known dictionary with Bernoulli-support,
    Laplace-amplitude coefficient maps plus Gaussian noise."""
    d_true = unit_filters(rng, num_filters, kernel)
    signals = []
    for _ in range(num_signals):
        support = rng.random((num_filters,) + shape) < support_prob
        amps = rng.laplace(0.0, 1.0, size=(num_filters,) + shape)
        maps = CoeffMaps(np.where(support, amps, 0.0))
        clean = reconstruct(maps, d_true).values
        signals.append(Signal(clean + noise_sigma * rng.standard_normal(shape)))
    return d_true, signals


def all_ones_mask(shape) -> Mask:
    return Mask(np.ones(shape))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one pass/fail line per acceptance criterion at the end."""
    lines = []
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" in nodeid and "::" in nodeid:
                name = nodeid.split("::")[-1]
                verdict = "PASS" if status == "passed" else "FAIL"
                lines.append((name, verdict))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, verdict in sorted(lines):
            terminalreporter.write_line(f"{name}: {verdict}")
