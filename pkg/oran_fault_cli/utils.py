import hashlib
import os
import zlib
from typing import Iterable, Sequence

import numpy as np

from .exceptions import DatasetIOException

FLOAT_FORMAT = "%.9g"


def derive_rng(seed: int, component: str, index: int = 0) -> np.random.Generator:
    """
    Random stream for a named component. Streams only depend on
    ``(seed, component, index)`` so adding components or reordering execution
    never changes existing streams

    :param seed: root seed of the run
    :param component: component name, e.g. ``injector`` or ``pipeline.lstm``
    :param index: component instance, e.g. fold or tree index
    :return: seeded generator
    """
    component_key = zlib.crc32(component.encode("utf-8"))
    sequence = np.random.SeedSequence([int(seed), component_key, int(index)])
    return np.random.Generator(np.random.PCG64(sequence))


def derive_seed(seed: int, component: str, index: int = 0) -> int:
    """
    :return: 32 bits seed derived the same way as `derive_rng`
    """
    return int(derive_rng(seed, component, index).integers(0, 2**31 - 1))


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def text_sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def format_float(value: float) -> str:
    return FLOAT_FORMAT % value


def format_row(label: str, values: Iterable[float]) -> str:
    """
    Full precision row, ``repr`` round-trips every double exactly
    """
    return ",".join([label] + [repr(float(value)) for value in values])


def ensure_directory(path: str) -> str:
    """
    :raises: DatasetIOException
    """
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise DatasetIOException(path, str(e))
    return path


def percent(value: float) -> str:
    return f"{100.0 * value:.2f}%"


def label_histogram(labels: Sequence[int], n_classes: int = 4) -> np.ndarray:
    return np.bincount(np.asarray(labels, dtype=np.int64), minlength=n_classes)
