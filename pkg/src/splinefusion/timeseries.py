from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class TimeSeriesMatrix:
    """Uniformly sampled multi-channel signal with one position per channel.

    ``values`` has shape (T, n_channels). ``kind`` is the channel prefix used
    in CSV headers (``acc``, ``strain``, ``u``, ...).
    """

    times: np.ndarray
    values: np.ndarray
    positions: np.ndarray
    kind: str = "signal"

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        positions = np.asarray(self.positions, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if times.ndim != 1 or values.ndim != 2 or positions.ndim != 1:
            raise DataError("times/positions must be 1-D and values 2-D")
        if values.shape != (times.size, positions.size):
            raise DataError(
                f"values shape {values.shape} does not match "
                f"{times.size} samples x {positions.size} channels"
            )
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "positions", positions)

    @property
    def n_samples(self) -> int:
        return self.times.size

    @property
    def n_channels(self) -> int:
        return self.positions.size

    @property
    def dt(self) -> float:
        if self.times.size < 2:
            raise DataError("need at least two samples to define dt")
        return float((self.times[-1] - self.times[0]) / (self.times.size - 1))

    def channel(self, position: float, atol: float = 1e-9) -> np.ndarray:
        hit = np.flatnonzero(np.abs(self.positions - position) <= atol)
        if hit.size == 0:
            raise DataError(f"no {self.kind} channel at x={position}")
        return self.values[:, hit[0]]

    def rms(self) -> np.ndarray:
        return np.sqrt(np.mean(self.values**2, axis=0))

    def with_values(self, values) -> "TimeSeriesMatrix":
        return TimeSeriesMatrix(self.times, values, self.positions, self.kind)
