"""Pictorial representation of behavior-count samples as two-colour images.

Each sample of J non-negative counts becomes a D x D image holding two
variables per pixel row: odd variables fill the left half starting at the
left edge, even variables fill the right half starting at the right edge.
Every variable gets K pixels, one per binary digit, least-significant digit
at the outer edge.  A set bit is painted black, a cleared bit white.

Rows and columns are 1-based in the docstrings below (matching how the
geometry is usually described) and 0-based in the code.
"""

from __future__ import annotations

import csv
import enum
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

FUNDAMENTAL_J = 128

BLACK = 0
WHITE = 255


class Scenario(str, enum.Enum):
    FUNDAMENTAL = "FUNDAMENTAL"
    PAD_UP = "PAD_UP"
    S1 = "S1"
    S2 = "S2"
    S3 = "S3"
    S4 = "S4"


class MalformedImageError(ValueError):
    """Raised when a PGM file cannot be parsed as a two-colour image."""


@dataclass(frozen=True)
class SampleRecord:
    values: tuple[int, ...]
    label: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if not self.values:
            raise ValueError("a sample needs at least one value")
        if any(v < 0 for v in self.values):
            raise ValueError("behavior counts must be non-negative")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class PrsLayout:
    j_logical: int
    j_effective: int
    d: int
    k: int
    scenario: Scenario
    center_pad_column: int | None = None  # 1-based

    @property
    def rows_used(self) -> int:
        return (self.j_logical + 1) // 2


@dataclass(frozen=True, eq=False)
class BinaryImage:
    """D x D image; ``ink`` is True where the pixel is black."""

    ink: np.ndarray = field(repr=False)

    def __post_init__(self):
        ink = np.asarray(self.ink, dtype=bool)
        if ink.ndim != 2 or ink.shape[0] != ink.shape[1]:
            raise ValueError(f"image must be square, got shape {ink.shape}")
        object.__setattr__(self, "ink", ink)

    @property
    def side(self) -> int:
        return self.ink.shape[0]

    def gray(self) -> np.ndarray:
        """Pixel bytes as stored on disk: 0 for black, 255 for white."""
        return np.where(self.ink, BLACK, WHITE).astype(np.uint8)

    def rgb(self) -> np.ndarray:
        return np.repeat(self.gray()[:, :, None], 3, axis=2)

    def black_count(self) -> int:
        return int(self.ink.sum())

    def __eq__(self, other):
        if not isinstance(other, BinaryImage):
            return NotImplemented
        return self.ink.shape == other.ink.shape and bool(np.array_equal(self.ink, other.ink))

    def __hash__(self):
        return hash((self.side, self.ink.tobytes()))


def derive_layout(j: int) -> PrsLayout:
    if j < 1:
        raise ValueError(f"variable count must be positive, got {j}")
    if j < FUNDAMENTAL_J:
        return PrsLayout(j, FUNDAMENTAL_J, 64, 32, Scenario.PAD_UP)
    if j == FUNDAMENTAL_J:
        return PrsLayout(j, FUNDAMENTAL_J, 64, 32, Scenario.FUNDAMENTAL)
    if j % 4 == 0:
        return PrsLayout(j, j, j // 2, j // 4, Scenario.S1)
    if j % 4 == 2:
        k = (j - 2) // 4
        return PrsLayout(j, j, j // 2, k, Scenario.S2, center_pad_column=k + 1)
    if (j + 1) % 4 == 0:
        return PrsLayout(j, j + 1, (j + 1) // 2, (j + 1) // 4, Scenario.S3)
    k = (j - 1) // 4
    return PrsLayout(j, j + 1, (j + 1) // 2, k, Scenario.S4, center_pad_column=k + 1)


def value_to_bits(x: int, k: int) -> list[int]:
    """Binary digits of ``x``, least significant first, clamped to all ones at 2**k."""
    if x < 0:
        raise ValueError("value must be non-negative")
    x = min(int(x), (1 << k) - 1)
    return [(x >> i) & 1 for i in range(k)]


def bits_to_value(bits: Iterable[int]) -> int:
    return sum(int(b) << i for i, b in enumerate(bits))


def _bit_matrix(values, k: int) -> np.ndarray:
    """(..., n_vars, k) bool matrix of clamped digits, LSB in column 0."""
    cap = (1 << k) - 1
    arr = np.asarray(values, dtype=object)
    shape = arr.shape
    flat = [min(int(x), cap) for x in arr.ravel()]
    if k <= 62:
        v = np.array(flat, dtype=np.int64).reshape(shape)
        return ((v[..., None] >> np.arange(k)) & 1).astype(bool)
    bits = np.array([value_to_bits(x, k) for x in flat], dtype=bool)
    return bits.reshape(shape + (k,))


def _int_bit_matrix(values: np.ndarray, k: int) -> np.ndarray:
    cap = min((1 << k) - 1, np.iinfo(np.int64).max)
    v = np.minimum(values, cap).astype(np.int64)
    return ((v[..., None] >> np.arange(min(k, 63))) & 1).astype(bool)


def _place(bits: np.ndarray, layout: PrsLayout) -> np.ndarray:
    """Scatter per-variable digits (..., j_logical, k) into (..., d, d) ink."""
    lead = bits.shape[:-2]
    d, k = layout.d, layout.k
    n_pairs = layout.rows_used
    padded = np.zeros(lead + (2 * n_pairs, k), dtype=bool)
    padded[..., : layout.j_logical, :] = bits
    ink = np.zeros(lead + (d, d), dtype=bool)
    ink[..., :n_pairs, :k] = padded[..., 0::2, :]
    # even variables grow leftward from column d
    ink[..., :n_pairs, d - k :] = padded[..., 1::2, ::-1]
    return ink


def encode_sample(sample: SampleRecord | Sequence[int], layout: PrsLayout) -> BinaryImage:
    values = sample.values if isinstance(sample, SampleRecord) else tuple(sample)
    if len(values) != layout.j_logical:
        raise ValueError(
            f"sample has {len(values)} values but layout expects {layout.j_logical}"
        )
    if any(int(v) < 0 for v in values):
        raise ValueError("behavior counts must be non-negative")
    return BinaryImage(_place(_bit_matrix(values, layout.k), layout))


def encode_batch(values: np.ndarray, layout: PrsLayout) -> np.ndarray:
    """Encode an (n, J) count matrix into an (n, d, d) bool ink array."""
    values = np.asarray(values)
    if values.ndim != 2 or values.shape[1] != layout.j_logical:
        raise ValueError(f"expected shape (n, {layout.j_logical}), got {values.shape}")
    if values.dtype.kind in "iu":
        if (values < 0).any():
            raise ValueError("behavior counts must be non-negative")
        bits = _int_bit_matrix(values, layout.k)
        if bits.shape[-1] < layout.k:
            pad = np.zeros(bits.shape[:-1] + (layout.k - bits.shape[-1],), dtype=bool)
            bits = np.concatenate([bits, pad], axis=-1)
        return _place(bits, layout)
    return _place(_bit_matrix(values, layout.k), layout)


def _read_bits(ink: np.ndarray, layout: PrsLayout) -> np.ndarray:
    d, k = layout.d, layout.k
    n_pairs = layout.rows_used
    bits = np.empty(ink.shape[:-2] + (2 * n_pairs, k), dtype=bool)
    bits[..., 0::2, :] = ink[..., :n_pairs, :k]
    bits[..., 1::2, :] = ink[..., :n_pairs, d - k :][..., ::-1]
    return bits[..., : layout.j_logical, :]


def decode_sample(image: BinaryImage, layout: PrsLayout) -> tuple[int, ...]:
    if image.side != layout.d:
        raise ValueError(f"image side {image.side} does not match layout side {layout.d}")
    bits = _read_bits(image.ink, layout)
    return tuple(bits_to_value(row) for row in bits)


def decode_batch(ink: np.ndarray, layout: PrsLayout) -> np.ndarray:
    if ink.shape[-2:] != (layout.d, layout.d):
        raise ValueError(f"images must be {layout.d}x{layout.d}")
    if layout.k > 62:
        raise ValueError("batch decode supports at most 62 digits per variable")
    bits = _read_bits(ink, layout).astype(np.int64)
    return (bits << np.arange(layout.k)).sum(axis=-1)


# -- file formats ---------------------------------------------------------


def write_image(image: BinaryImage, path: str | os.PathLike) -> None:
    d = image.side
    with open(path, "wb") as fh:
        fh.write(f"P5\n{d} {d}\n255\n".encode("ascii"))
        fh.write(image.gray().tobytes())


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            end = data.find(b"\n", pos)
            if end < 0:
                raise MalformedImageError("unterminated comment in header")
            pos = end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise MalformedImageError("truncated header")
        tokens.append(data[start:pos])
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise MalformedImageError("header must end with a single whitespace byte")
    return tokens, pos + 1


def read_image(path: str | os.PathLike) -> BinaryImage:
    with open(path, "rb") as fh:
        data = fh.read()
    tokens, offset = _header_tokens(data, 4)
    magic, width, height, maxval = tokens
    if magic != b"P5":
        raise MalformedImageError(f"unsupported magic {magic!r}")
    try:
        w, h, m = int(width), int(height), int(maxval)
    except ValueError as exc:
        raise MalformedImageError("non-numeric header field") from exc
    if w != h or w < 1:
        raise MalformedImageError(f"expected a square image, got {w}x{h}")
    if m != 255:
        raise MalformedImageError(f"expected maxval 255, got {m}")
    body = data[offset:]
    if len(body) != w * h:
        raise MalformedImageError(f"expected {w * h} pixel bytes, found {len(body)}")
    gray = np.frombuffer(body, dtype=np.uint8).reshape(h, w)
    if not np.isin(gray, (BLACK, WHITE)).all():
        raise MalformedImageError("pixels other than black/white present")
    return BinaryImage(gray == BLACK)


def read_samples_csv(path: str | os.PathLike, header: bool = False) -> list[SampleRecord]:
    """Rows of J counts followed by a final 0/1 label column."""
    samples = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if header:
            next(reader, None)
        for lineno, row in enumerate(reader, start=2 if header else 1):
            if not row:
                continue
            try:
                nums = [int(x) for x in row]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-integer field") from exc
            if len(nums) < 2:
                raise ValueError(f"{path}:{lineno}: need at least one count and a label")
            samples.append(SampleRecord(tuple(nums[:-1]), nums[-1]))
    widths = {len(s.values) for s in samples}
    if len(widths) > 1:
        raise ValueError(f"{path}: rows have differing widths {sorted(widths)}")
    return samples


def write_samples_csv(
    samples: Iterable[SampleRecord], path: str | os.PathLike, header: bool = False
) -> None:
    samples = list(samples)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header and samples:
            j = len(samples[0].values)
            writer.writerow([f"x{i}" for i in range(1, j + 1)] + ["label"])
        for s in samples:
            writer.writerow(list(s.values) + [s.label])


def samples_to_arrays(samples: Sequence[SampleRecord]) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([s.values for s in samples], dtype=np.int64).reshape(len(samples), -1)
    y = np.array([s.label for s in samples], dtype=np.int64)
    return X, y


def arrays_to_samples(X: np.ndarray, y: np.ndarray) -> list[SampleRecord]:
    return [SampleRecord(tuple(int(v) for v in row), int(lab)) for row, lab in zip(X, y)]
