"""On-disk interchange: data archives, field files, grayscale images, and
line-delimited convergence logs.

Every format is deterministic: no timestamps, no environment capture, and
floats serialized only via the shortest round-trip decimal or raw IEEE-754
little-endian bytes.  Running the same job twice must give byte-identical
files; tests rely on that.

The data archive is one file: a fixed-order header (magic "QPAT1", format
version, grid size n, spacing h, final time T, step count nt, illumination
count J, boundary node count, byte-order tag) followed by float64
little-endian samples in C order (illumination, time level, boundary
node).  Field files carry magic "QPATF", n, then node values row-major.
The byte-order tag is the constant 0x01020304; a big-endian writer would
produce a different byte pattern, which readers reject.
"""

import struct
from dataclasses import dataclass

import numpy as np

DATA_MAGIC = b"QPAT1"
FIELD_MAGIC = b"QPATF"
DATA_VERSION = 1
BYTE_ORDER_TAG = 0x01020304

_HEADER = struct.Struct("<5sII d d III I")


@dataclass(frozen=True)
class DatumHeader:
    """Geometry and sampling layout of one stacked boundary datum."""

    grid_size: int
    spacing: float
    final_time: float
    n_steps: int
    n_illuminations: int
    n_boundary: int

    def payload_shape(self):
        return (self.n_illuminations, self.n_steps + 1, self.n_boundary)


class ArchiveFormatError(ValueError):
    """Raised when a file does not parse as the declared format."""


def write_datum(path, data, header: DatumHeader):
    data = np.ascontiguousarray(data, dtype="<f8")
    if data.shape != header.payload_shape():
        raise ValueError(f"datum shape {data.shape} does not match header "
                         f"{header.payload_shape()}")
    blob = _HEADER.pack(DATA_MAGIC, DATA_VERSION, header.grid_size,
                        header.spacing, header.final_time, header.n_steps,
                        header.n_illuminations, header.n_boundary,
                        BYTE_ORDER_TAG)
    with open(path, "wb") as fh:
        fh.write(blob)
        fh.write(data.tobytes())


def read_datum(path):
    """Returns (data, header); rejects bad magic, version, tag, or size."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise ArchiveFormatError(f"{path}: truncated header")
        (magic, version, n, h, final_time, nt, count, nb,
         tag) = _HEADER.unpack(head)
        if magic != DATA_MAGIC:
            raise ArchiveFormatError(f"{path}: bad magic {magic!r}")
        if version != DATA_VERSION:
            raise ArchiveFormatError(f"{path}: unsupported version {version}")
        if tag != BYTE_ORDER_TAG:
            raise ArchiveFormatError(f"{path}: byte-order tag mismatch")
        header = DatumHeader(n, h, final_time, nt, count, nb)
        payload = fh.read()
    expected = count * (nt + 1) * nb * 8
    if len(payload) != expected:
        raise ArchiveFormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}")
    data = np.frombuffer(payload, dtype="<f8").reshape(header.payload_shape())
    return data.astype(float), header


def write_field(path, field):
    field = np.ascontiguousarray(field, dtype="<f8")
    if field.ndim != 2 or field.shape[0] != field.shape[1]:
        raise ValueError("fields are square (n, n) arrays")
    with open(path, "wb") as fh:
        fh.write(FIELD_MAGIC)
        fh.write(struct.pack("<I", field.shape[0]))
        fh.write(field.tobytes())


def read_field(path):
    with open(path, "rb") as fh:
        magic = fh.read(5)
        if magic != FIELD_MAGIC:
            raise ArchiveFormatError(f"{path}: bad magic {magic!r}")
        (n,) = struct.unpack("<I", fh.read(4))
        payload = fh.read()
    if len(payload) != n * n * 8:
        raise ArchiveFormatError(f"{path}: payload size mismatch")
    return np.frombuffer(payload, dtype="<f8").reshape(n, n).astype(float)


def write_pgm(path, field, scale_path=None):
    """8-bit binary graymap with linear min-max scaling.

    Image row 0 is the top of the domain (largest y), so the picture is
    oriented the usual way.  The applied scale goes to ``scale_path``
    (default: path + ".scale") so values remain recoverable to 8 bits.
    """
    field = np.asarray(field, float)
    lo = float(field.min())
    hi = float(field.max())
    span = hi - lo
    if span > 0.0:
        levels = np.rint((field - lo) / span * 255.0).astype(np.uint8)
    else:
        levels = np.zeros(field.shape, np.uint8)
    rows = np.flipud(levels)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{field.shape[1]} {field.shape[0]}\n255\n"
                 .encode("ascii"))
        fh.write(np.ascontiguousarray(rows).tobytes())
    if scale_path is None:
        scale_path = str(path) + ".scale"
    write_key_values(scale_path, {"min": lo, "max": hi},
                     comment="linear 8-bit scaling of the adjacent graymap")


def read_pgm(path):
    """Returns the uint8 image in field orientation (row 0 = smallest y)."""
    with open(path, "rb") as fh:
        if fh.readline().strip() != b"P5":
            raise ArchiveFormatError(f"{path}: not a binary graymap")
        dims = fh.readline().split()
        width, height = int(dims[0]), int(dims[1])
        if fh.readline().strip() != b"255":
            raise ArchiveFormatError(f"{path}: expected 8-bit maxval")
        raw = fh.read(width * height)
    img = np.frombuffer(raw, np.uint8).reshape(height, width)
    return np.flipud(img).copy()


def _format_value(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_key_values(path, mapping, comment=None):
    """Flat ``key = value`` text; floats use shortest round-trip form."""
    lines = []
    if comment:
        lines.append(f"# {comment}")
    for key, value in mapping.items():
        lines.append(f"{key} = {_format_value(value)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_key_values(path):
    """Parse ``key = value`` lines, skipping blanks and # comments.

    Values come back as strings; callers coerce.  Malformed lines raise
    with the line number.
    """
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ArchiveFormatError(
                    f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, value = line.split("=", 1)
            key = key.strip()
            if not key:
                raise ArchiveFormatError(f"{path}:{lineno}: empty key")
            out[key] = value.strip()
    return out


def write_convergence_log(path, entries):
    """One line per outer iteration: iteration, objective value, gradient
    norm, inner iteration count."""
    with open(path, "w") as fh:
        fh.write("# iteration objective gradient_norm cg_iterations\n")
        for e in entries:
            fh.write(f"{e.iteration} {repr(e.objective_value)} "
                     f"{repr(e.gradient_norm)} {e.cg_iterations}\n")


def write_residual_log(path, relative_residuals):
    """One line per iterate: iteration, relative residual."""
    with open(path, "w") as fh:
        fh.write("# iteration relative_residual\n")
        for k, value in enumerate(relative_residuals):
            fh.write(f"{k} {repr(float(value))}\n")
