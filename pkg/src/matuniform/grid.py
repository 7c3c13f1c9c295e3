"""Regular grids over an axis-aligned chart of the body."""
from dataclasses import dataclass

import numpy as np

from .errors import GridTooSmall

MIN_POINTS = 5


@dataclass(frozen=True)
class BodyGrid:
    box: tuple  # ((lo, hi),) * 3
    dims: tuple  # (N1, N2, N3)

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        dims = tuple(int(n) for n in self.dims)
        if len(box) != 3 or len(dims) != 3:
            raise ValueError("box and dims must have three entries")
        if any(n < MIN_POINTS for n in dims):
            raise GridTooSmall(f"every axis needs at least {MIN_POINTS} points, got {dims}")
        if any(hi <= lo for lo, hi in box):
            raise ValueError(f"degenerate box {box}")
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def unit(cls, n: int = 21) -> "BodyGrid":
        return cls(((0.0, 1.0),) * 3, (n, n, n))

    @property
    def spacing(self) -> np.ndarray:
        return np.array([(hi - lo) / (n - 1) for (lo, hi), n in zip(self.box, self.dims)])

    @property
    def shape(self) -> tuple:
        return self.dims

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    def axes(self) -> list:
        return [np.linspace(lo, hi, n) for (lo, hi), n in zip(self.box, self.dims)]

    def coords(self) -> np.ndarray:
        """Coordinates as an ``(N1, N2, N3, 3)`` array."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def points(self) -> np.ndarray:
        """Flat ``(n, 3)`` coordinates in C order of ``(i, j, k)``."""
        return self.coords().reshape(-1, 3)

    def flat_index(self, i, j, k) -> int:
        return int(np.ravel_multi_index((i, j, k), self.dims))

    def ijk(self, flat: int) -> tuple:
        return tuple(int(v) for v in np.unravel_index(flat, self.dims))

    @property
    def center_index(self) -> int:
        return self.flat_index(*(n // 2 for n in self.dims))

    def interior_mask(self, margin: int) -> np.ndarray:
        m = np.zeros(self.dims, dtype=bool)
        m[margin:self.dims[0] - margin, margin:self.dims[1] - margin, margin:self.dims[2] - margin] = True
        return m

    def to_dict(self) -> dict:
        return {"box": [list(b) for b in self.box], "dims": list(self.dims)}
