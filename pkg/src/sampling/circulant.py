"""
Circulant embedding of stationary Gaussian sequences (Davies-Harte / Wood-Chan).
Each FFT yields two independent sequences: the real and the imaginary parts.
"""
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from src.utils.errors import EmbeddingError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EmbeddingSettings:
    padding_factor: int = 2
    max_padding_factor: int = 16
    eigen_abort_tol: float = 1e-9

    @classmethod
    def from_config(cls, config) -> "EmbeddingSettings":
        return cls(
            padding_factor=int(config.get('padding_factor', cls.padding_factor)),
            max_padding_factor=int(config.get('max_padding_factor', cls.max_padding_factor)),
            eigen_abort_tol=float(config.get('eigen_abort_tol', cls.eigen_abort_tol)),
        )


class CirculantEmbedding:
    def __init__(self, eigenvalues: np.ndarray, num_points: int, padding_factor: int, num_clamped: int):
        self.eigenvalues = eigenvalues
        self.num_points = num_points
        self.padding_factor = padding_factor
        self.num_clamped = num_clamped
        self.sqrt_weights = np.sqrt(eigenvalues / len(eigenvalues))

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    def sample(self, n_sequences: int, rng: np.random.Generator) -> np.ndarray:
        """
        :return: array of shape [n_sequences, num_points]
        """
        num_ffts = (n_sequences + 1) // 2
        noise = rng.standard_normal((num_ffts, self.size)) + 1j * rng.standard_normal((num_ffts, self.size))
        y = np.fft.fft(self.sqrt_weights * noise, axis=1)[:, :self.num_points]

        return np.concatenate([y.real, y.imag], axis=0)[:n_sequences]

    def implied_covariance(self) -> np.ndarray:
        """Autocovariance actually reproduced by the (clamped) embedding at lags 0..num_points-1"""
        return np.fft.ifft(self.eigenvalues).real[:self.num_points]


def embed_covariance(covariance: Callable[[np.ndarray], np.ndarray], num_points: int,
                     settings: EmbeddingSettings=EmbeddingSettings()) -> CirculantEmbedding:
    """
    Embeds the autocovariance r(0), ..., r(num_points - 1) of a stationary sequence into a circulant matrix

    :param covariance: function of integer lags
    :param num_points: length of the sequence to simulate
    :param settings: padding schedule and the abort tolerance for negative eigenvalues
    :return: nonnegative-definite embedding
    """
    assert num_points >= 1
    assert settings.padding_factor >= 2 and settings.max_padding_factor >= settings.padding_factor

    # Smallest power of two covering the largest lag keeps the FFT sizes at powers of two
    base = 1 << max(num_points - 2, 0).bit_length()
    padding = settings.padding_factor
    worst = None

    while padding <= settings.max_padding_factor:
        half = padding * base // 2
        lags = np.concatenate([np.arange(0, half + 1), np.arange(half - 1, 0, -1)])
        eigenvalues = np.fft.fft(covariance(lags)).real
        scale = np.abs(eigenvalues).max()

        if eigenvalues.min() >= -settings.eigen_abort_tol * scale:
            negative = eigenvalues < 0
            num_clamped = int(negative.sum())

            if num_clamped > 0:
                logger.warning(f'Clamping {num_clamped} negative circulant eigenvalues to zero '
                               f'(min: {eigenvalues.min():.3e}, padding: {padding}x)')
                eigenvalues = np.where(negative, 0.0, eigenvalues)

            return CirculantEmbedding(eigenvalues, num_points, padding, num_clamped)

        worst = eigenvalues.min() / scale
        logger.info(f'Circulant embedding with padding {padding}x is not nonnegative-definite '
                    f'(relative min eigenvalue: {worst:.3e}), doubling the padding')
        padding *= 2

    raise EmbeddingError(f'Circulant embedding failed up to padding {settings.max_padding_factor}x '
                         f'(relative min eigenvalue: {worst:.3e}). '
                         f'Increase sampling.max_padding_factor or refine the grid.')
