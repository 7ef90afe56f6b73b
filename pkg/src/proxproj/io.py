"""File formats: PPMAT1/PPVEC1 binary arrays, CSV arrays, PGM images,
metric CSV logs, and run manifests.

Binary layout (all integers little-endian):

    matrix:  bytes 0-6  magic "PPMAT1\\0"
             byte  7    zero pad
             bytes 8-15  u64 rows
             bytes 16-23 u64 cols
             bytes 24-   rows*cols IEEE-754 binary64 values, row-major
    vector:  magic "PPVEC1\\0", zero pad, u64 length, then values

A 2x2 matrix file is therefore exactly 56 bytes.  CSV arrays are RFC-4180
style with no header; floats are written with shortest round-trip repr, so
binary and CSV forms of the same array parse identically.
"""

import hashlib
import struct

import numpy as np

from .errors import FormatError
from .linalg import as_matrix, as_vector
from .metrics import IterateLog, MetricRow

MATRIX_MAGIC = b"PPMAT1\x00"
VECTOR_MAGIC = b"PPVEC1\x00"

METRIC_HEADER = "iter,violation,objective,residual,wall_ms"


def _pack_array(magic, dims, data):
    head = magic + b"\x00" + b"".join(struct.pack("<Q", d) for d in dims)
    return head + np.ascontiguousarray(data, dtype="<f8").tobytes()


def _read_exact(blob, offset, count, path):
    if len(blob) < offset + count:
        raise FormatError(
            f"{path}: truncated, needed {count} bytes at offset {offset} "
            f"but file has {len(blob)}",
            offset=offset,
        )
    return blob[offset:offset + count]


def write_matrix(path, a):
    a = as_matrix(a)
    with open(path, "wb") as fh:
        fh.write(_pack_array(MATRIX_MAGIC, a.shape, a))


def write_vector(path, v):
    v = as_vector(v)
    with open(path, "wb") as fh:
        fh.write(_pack_array(VECTOR_MAGIC, (v.shape[0],), v))


def _parse_binary(blob, magic, ndims, path):
    got = _read_exact(blob, 0, 8, path)
    if got[:7] != magic:
        raise FormatError(
            f"{path}: bad magic {got[:7]!r}, expected {magic!r}", offset=0
        )
    dims = []
    off = 8
    for _ in range(ndims):
        dims.append(struct.unpack("<Q", _read_exact(blob, off, 8, path))[0])
        off += 8
    count = 1
    for d in dims:
        count *= d
    payload = _read_exact(blob, off, 8 * count, path)
    if len(blob) != off + 8 * count:
        raise FormatError(
            f"{path}: {len(blob) - off - 8 * count} trailing bytes",
            offset=off + 8 * count,
        )
    data = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return dims, data


def _reject_binary_garbage(blob, magic, path):
    # NUL bytes cannot appear in a CSV file, so this was meant to be binary
    if b"\x00" in blob:
        raise FormatError(
            f"{path}: bad magic {blob[:7]!r}, expected {magic!r} "
            "(and not parseable as CSV)",
            offset=0,
        )


def read_matrix(path):
    """Read a matrix from a PPMAT1 binary file or a headerless CSV file."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:7] == MATRIX_MAGIC:
        (rows, cols), data = _parse_binary(blob, MATRIX_MAGIC, 2, path)
        return as_matrix(data.reshape(rows, cols), f"matrix from {path}")
    _reject_binary_garbage(blob, MATRIX_MAGIC, path)
    return _parse_csv_matrix(blob, path)


def read_vector(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:7] == VECTOR_MAGIC:
        (n,), data = _parse_binary(blob, VECTOR_MAGIC, 1, path)
        return as_vector(data, f"vector from {path}")
    _reject_binary_garbage(blob, VECTOR_MAGIC, path)
    mat = _parse_csv_matrix(blob, path)
    if 1 not in mat.shape:
        raise FormatError(f"{path}: CSV vector must have one row or one column")
    return as_vector(mat.ravel(), f"vector from {path}")


def _parse_csv_matrix(blob, path):
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: neither PPMAT1/PPVEC1 nor text ({exc})") from exc
    rows = []
    width = None
    for ln, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise FormatError(f"{path}: line {ln} has {len(cells)} cells, expected {width}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise FormatError(f"{path}: line {ln}: {exc}") from exc
    if not rows:
        raise FormatError(f"{path}: no data rows")
    return as_matrix(np.array(rows), f"matrix from {path}")


def write_matrix_csv(path, a):
    a = as_matrix(a)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in a:
            fh.write(",".join(repr(float(x)) for x in row))
            fh.write("\n")


def write_vector_csv(path, v):
    write_matrix_csv(path, as_vector(v).reshape(1, -1))


def read_pgm(path):
    """Read a P2/P5 grayscale PGM image, scaled to intensities in [0, 1]."""
    with open(path, "rb") as fh:
        blob = fh.read()
    magic = blob[:2]
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"{path}: not a P2/P5 PGM (magic {magic!r})", offset=0)

    # header tokens (width, height, maxval) with '#' comments stripped
    tokens = []
    pos = 2
    while len(tokens) < 3:
        if pos >= len(blob):
            raise FormatError(f"{path}: truncated PGM header", offset=pos)
        ch = blob[pos:pos + 1]
        if ch == b"#":
            while pos < len(blob) and blob[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(blob) and not blob[pos:pos + 1].isspace():
                pos += 1
            tokens.append(blob[start:pos])
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise FormatError(f"{path}: malformed PGM header: {exc}") from exc
    if width < 1 or height < 1 or not 0 < maxval <= 65535:
        raise FormatError(f"{path}: bad PGM dimensions {width}x{height}, maxval {maxval}")

    if magic == b"P2":
        try:
            values = np.array(blob[pos:].split(), dtype=np.float64)
        except ValueError as exc:
            raise FormatError(f"{path}: malformed ASCII samples: {exc}") from exc
        if values.size != width * height:
            raise FormatError(
                f"{path}: expected {width * height} samples, got {values.size}"
            )
    else:
        pos += 1  # single whitespace byte after maxval
        per = 2 if maxval > 255 else 1
        raw = _read_exact(blob, pos, width * height * per, path)
        dtype = ">u2" if per == 2 else "u1"
        values = np.frombuffer(raw, dtype=dtype).astype(np.float64)
    img = values.reshape(height, width) / maxval
    if img.max() > 1.0 or img.min() < 0.0:
        raise FormatError(f"{path}: samples exceed the stated maxval")
    return img


def write_pgm(path, img, maxval=255, binary=True):
    """Write intensities in [0, 1] as a P5 (or P2) PGM."""
    img = as_matrix(img)
    if img.min() < 0 or img.max() > 1:
        raise ValueError("PGM intensities must lie in [0, 1]")
    q = np.round(img * maxval).astype(np.uint16 if maxval > 255 else np.uint8)
    header = f"P{'5' if binary else '2'}\n{img.shape[1]} {img.shape[0]}\n{maxval}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if binary:
            fh.write(q.astype(">u2" if maxval > 255 else "u1").tobytes())
        else:
            fh.write("\n".join(" ".join(str(v) for v in row) for row in q).encode("ascii"))
            fh.write(b"\n")


def write_metrics_csv(path, log):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(METRIC_HEADER + "\n")
        for row in log:
            fh.write(
                f"{row.iter},{float(row.violation)!r},{float(row.objective)!r},"
                f"{float(row.residual)!r},{float(row.wall_ms)!r}\n"
            )


def read_metrics_csv(path):
    log = IterateLog()
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != METRIC_HEADER:
            raise FormatError(f"{path}: unexpected header {header!r}")
        for ln, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            cells = line.strip().split(",")
            if len(cells) != 5:
                raise FormatError(f"{path}: line {ln} has {len(cells)} cells")
            log.append(MetricRow(
                iter=int(cells[0]), violation=float(cells[1]),
                objective=float(cells[2]), residual=float(cells[3]),
                wall_ms=float(cells[4]),
            ))
    return log


def metrics_csv_hash(path):
    """SHA-256 of a metrics CSV with the wall_ms column stripped."""
    h = hashlib.sha256()
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            stripped = line.rstrip("\n").rsplit(",", 1)[0]
            h.update(stripped.encode("utf-8"))
            h.update(b"\n")
    return h.hexdigest()


def write_manifest(path, entries):
    """Write a sorted ``key = value`` manifest."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key in sorted(entries):
            fh.write(f"{key} = {entries[key]}\n")


def read_manifest(path):
    entries = {}
    with open(path, "r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            if " = " not in line:
                raise FormatError(f"{path}: line {ln} is not 'key = value'")
            key, value = line.rstrip("\n").split(" = ", 1)
            entries[key] = value
    return entries


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
