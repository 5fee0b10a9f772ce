import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Any, Optional

from tqdm import tqdm

from src.utils.constants import THREADS_ENV_VAR


def resolve_threads(threads: Optional[int]=None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV_VAR, 1))

    assert threads >= 1, f'Wrong number of threads: {threads}'

    return threads


def split_into_chunks(total: int, chunk_size: int) -> List[int]:
    """
    Splits `total` items into chunks of `chunk_size` (the last one may be smaller).
    The layout depends only on (total, chunk_size), never on the number of workers.
    """
    assert chunk_size > 0

    num_full, rest = divmod(total, chunk_size)

    return [chunk_size] * num_full + ([rest] if rest > 0 else [])


def map_chunks(fn: Callable[[int, int], Any], total: int, chunk_size: int,
               threads: Optional[int]=None, desc: str=None, silent: bool=True) -> List[Any]:
    """
    Runs `fn(chunk_idx, chunk_size)` for every chunk and returns the results in chunk order

    :param fn: function computing a chunk result
    :param total: total amount of items (e.g. paths)
    :param chunk_size: size of a single chunk
    :param threads: number of worker threads (default: env var or 1)
    :return: list of chunk results ordered by chunk index
    """
    sizes = split_into_chunks(total, chunk_size)
    threads = resolve_threads(threads)
    progress = tqdm(total=len(sizes), desc=desc, disable=silent)

    def run(args):
        result = fn(*args)
        progress.update(1)
        return result

    if threads == 1:
        results = [run(a) for a in enumerate(sizes)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(run, enumerate(sizes)))

    progress.close()

    return results
