"""
Exact samplers on uniform grids for the process families we work with:
fractional Brownian motion, the stationary Ornstein-Uhlenbeck process
and stationary processes with power-exponential correlation.
"""
import os
import json
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, asdict
from functools import lru_cache
from typing import Tuple, Dict, Any, Optional

import numpy as np
from scipy.signal import lfilter

from src.sampling.circulant import CirculantEmbedding, EmbeddingSettings, embed_covariance
from src.sampling.streams import make_rng
from src.utils.constants import STREAM_PATHS
from src.utils.errors import InvalidParameterError
from src.utils.parallel import map_chunks

logger = logging.getLogger(__name__)


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


class ProcessModel(ABC):
    needs_power_of_two_grid = True
    alpha: float

    @abstractmethod
    def covariance(self, s, t):
        pass

    @abstractmethod
    def sample_block(self, T: float, N: int, size: int, rng: np.random.Generator,
                     settings: EmbeddingSettings=EmbeddingSettings()) -> np.ndarray:
        """
        Samples `size` independent paths on the grid t_k = k T / N, k = 0..N

        :return: array of shape [size, N + 1]
        """

    def validate_grid(self, T: float, N: int):
        if not (np.isfinite(T) and T > 0):
            raise InvalidParameterError(f'T must be positive, got: {T}')
        if int(N) != N or N < 1:
            raise InvalidParameterError(f'N must be a positive integer, got: {N}')
        if self.needs_power_of_two_grid and (N < 2 or not is_power_of_two(N)):
            raise InvalidParameterError(f'N must be a power of two (>= 2) for {type(self).__name__}, got: {N}')

    def to_dict(self) -> Dict[str, Any]:
        return {'name': type(self).__name__, **asdict(self)}


def check_alpha(alpha: float):
    if not (0 < alpha <= 2):
        raise InvalidParameterError(f'alpha must lie in (0, 2], got: {alpha}')


@dataclass(frozen=True)
class FractionalBM(ProcessModel):
    """fBm with covariance (t^alpha + s^alpha - |t-s|^alpha) / 2, i.e. Hurst index alpha / 2"""
    alpha: float

    def __post_init__(self):
        check_alpha(self.alpha)

    def covariance(self, s, t):
        return (np.abs(s) ** self.alpha + np.abs(t) ** self.alpha - np.abs(t - s) ** self.alpha) / 2

    def sample_block(self, T, N, size, rng, settings=EmbeddingSettings()):
        if self.alpha == 2:
            # B_2(t) = t Z
            return np.linspace(0, T, N + 1)[None, :] * rng.standard_normal((size, 1))
        elif self.alpha == 1:
            # Brownian increments are white noise already
            increments = rng.standard_normal((size, N)) * np.sqrt(T / N)
        else:
            increments = fgn_embedding(self.alpha, T / N, N, settings).sample(size, rng)

        return np.concatenate([np.zeros((size, 1)), np.cumsum(increments, axis=1)], axis=1)


@dataclass(frozen=True)
class OrnsteinUhlenbeck(ProcessModel):
    """Stationary OU with unit variance and correlation exp(-rate |t-s|)"""
    rate: float
    needs_power_of_two_grid = False

    def __post_init__(self):
        if not (np.isfinite(self.rate) and self.rate > 0):
            raise InvalidParameterError(f'rate must be positive, got: {self.rate}')

    @property
    def alpha(self) -> float:
        return 1.0

    def covariance(self, s, t):
        return np.exp(-self.rate * np.abs(t - s))

    def sample_block(self, T, N, size, rng, settings=EmbeddingSettings()):
        rho = np.exp(-self.rate * T / N)
        noise = rng.standard_normal((size, N + 1))
        noise[:, 1:] *= np.sqrt(1 - rho ** 2)

        # V_0 ~ N(0, 1), V_{k+1} = rho V_k + sqrt(1 - rho^2) xi_k
        return lfilter([1.0], [1.0, -rho], noise, axis=1)


@dataclass(frozen=True)
class StationaryPowerExp(ProcessModel):
    """Stationary process with unit variance and correlation exp(-a |t-s|^alpha)"""
    alpha: float
    a: float

    def __post_init__(self):
        check_alpha(self.alpha)

        if not (np.isfinite(self.a) and self.a > 0):
            raise InvalidParameterError(f'a must be positive, got: {self.a}')

    def covariance(self, s, t):
        return np.exp(-self.a * np.abs(t - s) ** self.alpha)

    def sample_block(self, T, N, size, rng, settings=EmbeddingSettings()):
        return powerexp_embedding(self.alpha, self.a, T / N, N, settings).sample(size, rng)


@lru_cache(maxsize=32)
def fgn_embedding(alpha: float, step: float, N: int, settings: EmbeddingSettings) -> CirculantEmbedding:
    def autocovariance(k):
        k = np.abs(k).astype(np.float64)
        return step ** alpha / 2 * (np.abs(k + 1) ** alpha - 2 * k ** alpha + np.abs(k - 1) ** alpha)

    return embed_covariance(autocovariance, N, settings)


@lru_cache(maxsize=32)
def powerexp_embedding(alpha: float, a: float, step: float, N: int, settings: EmbeddingSettings) -> CirculantEmbedding:
    return embed_covariance(lambda k: np.exp(-a * (np.abs(k) * step) ** alpha), N + 1, settings)


PROCESS_MODELS = {
    'fbm': lambda params: FractionalBM(params['alpha']),
    'ou': lambda params: OrnsteinUhlenbeck(params['rate']),
    'powerexp': lambda params: StationaryPowerExp(params['alpha'], params['a']),
}


def build_process_model(params: Dict[str, Any]) -> ProcessModel:
    """
    :param params: e.g. {"type": "ou", "rate": 2}
    """
    if params.get('type') not in PROCESS_MODELS:
        raise InvalidParameterError(f'Unknown process type: {params.get("type")}. Known: {list(PROCESS_MODELS)}')

    return PROCESS_MODELS[params['type']](params)


@dataclass
class PathEnsemble:
    times: np.ndarray
    values: np.ndarray # [n_paths, n_components, N + 1]
    seed: int
    streams: Tuple[int, ...]
    model: Dict[str, Any]
    chunk_size: int

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def n_components(self) -> int:
        return self.values.shape[1]

    def metadata(self) -> Dict[str, Any]:
        return {
            'shape': list(self.values.shape),
            'dtype': '<f8',
            'order': 'C',
            'T': float(self.times[-1]),
            'N': len(self.times) - 1,
            'seed': self.seed,
            'streams': list(self.streams),
            'model': self.model,
            'chunk_size': self.chunk_size,
        }


def sample_component_chunk(model: ProcessModel, T: float, N: int, size: int, seed: int, stream: int,
                           component: int, chunk_idx: int, settings: EmbeddingSettings) -> np.ndarray:
    return model.sample_block(T, N, size, make_rng(seed, stream, component, chunk_idx), settings)


def vector_ensemble(model: ProcessModel, n_components: int, T: float, N: int, n_paths: int, seed: int,
                    chunk_size: int=2000, threads: int=None, stream: int=STREAM_PATHS,
                    settings: EmbeddingSettings=EmbeddingSettings(), silent: bool=True) -> PathEnsemble:
    """
    Samples n_components independent copies of the process.
    Component j of chunk c is drawn from the stream (seed, stream, j, c),
    so the result depends on (seed, chunk_size) only.
    """
    if n_components < 1:
        raise InvalidParameterError(f'n_components must be positive, got: {n_components}')
    if n_paths < 1:
        raise InvalidParameterError(f'n_paths must be positive, got: {n_paths}')

    model.validate_grid(T, N)

    def sample_chunk(chunk_idx: int, size: int) -> np.ndarray:
        components = [sample_component_chunk(model, T, N, size, seed, stream, j, chunk_idx, settings) for j in range(n_components)]
        return np.stack(components, axis=1)

    chunks = map_chunks(sample_chunk, n_paths, chunk_size, threads=threads, desc='[Sampling paths]', silent=silent)

    return PathEnsemble(
        times=np.linspace(0, T, N + 1),
        values=np.concatenate(chunks, axis=0),
        seed=seed,
        streams=(stream,),
        model=model.to_dict(),
        chunk_size=chunk_size,
    )


def sample_fbm(alpha: float, T: float, N: int, n_paths: int, seed: int, **kwargs) -> PathEnsemble:
    return vector_ensemble(FractionalBM(alpha), 1, T, N, n_paths, seed, **kwargs)


def sample_ou(rate: float, T: float, N: int, n_paths: int, seed: int, **kwargs) -> PathEnsemble:
    return vector_ensemble(OrnsteinUhlenbeck(rate), 1, T, N, n_paths, seed, **kwargs)


def sample_stationary_powerexp(alpha: float, a: float, T: float, N: int, n_paths: int, seed: int, **kwargs) -> PathEnsemble:
    return vector_ensemble(StationaryPowerExp(alpha, a), 1, T, N, n_paths, seed, **kwargs)


@dataclass(frozen=True)
class CovarianceEstimate:
    value: float
    stderr: float


def empirical_covariance(ensemble: PathEnsemble, i: int, j: int, component: int=0,
                         other_component: Optional[int]=None) -> CovarianceEstimate:
    """
    Sample covariance across paths between X_component(t_i) and X_other_component(t_j)
    """
    if ensemble.n_paths < 2:
        raise InvalidParameterError('At least 2 paths are required to estimate a covariance')

    other_component = component if other_component is None else other_component
    x = ensemble.values[:, component, i]
    y = ensemble.values[:, other_component, j]
    products = (x - x.mean()) * (y - y.mean())
    n = len(products)

    return CovarianceEstimate(
        value=(products.sum() / (n - 1)).item(),
        stderr=(products.std(ddof=1) / np.sqrt(n)).item(),
    )


def save_ensemble(ensemble: PathEnsemble, path_prefix: os.PathLike):
    """
    Writes `<prefix>.bin` (little-endian float64, row-major) and the `<prefix>.json` sidecar
    """
    ensemble.values.astype('<f8').tofile(f'{path_prefix}.bin')

    with open(f'{path_prefix}.json', 'w') as f:
        json.dump(ensemble.metadata(), f, indent=2, sort_keys=True)


def load_ensemble(path_prefix: os.PathLike) -> PathEnsemble:
    with open(f'{path_prefix}.json') as f:
        meta = json.load(f)

    values = np.fromfile(f'{path_prefix}.bin', dtype='<f8').reshape(meta['shape'])

    return PathEnsemble(
        times=np.linspace(0, meta['T'], meta['N'] + 1),
        values=values,
        seed=meta['seed'],
        streams=tuple(meta['streams']),
        model=meta['model'],
        chunk_size=meta['chunk_size'],
    )
