"""CSV and IDX ingestion, model persistence and embedding export."""
import csv
import gzip
import json
import os
import struct
import tempfile
import zlib

import numpy as np

from .model import DataMatrix, HyperParams, SongModel, ValidationError, as_data, transform

MODEL_MAGIC = b"SONGMDL\x00"
MODEL_VERSION = 1

# IDX type codes and the big-endian numpy dtype each one maps to
_IDX_TYPES = {0x08: ">u1", 0x09: ">i1", 0x0B: ">i2", 0x0C: ">i4", 0x0D: ">f4", 0x0E: ">f8"}


class ParseError(ValidationError):
    """A text dataset could not be parsed; the message carries row and column."""


class FormatError(ValidationError):
    """A binary file has the wrong magic, version or length."""


def atomic_write(path, payload):
    """Write ``payload`` (bytes or str) to a temporary sibling, then rename over ``path``."""
    if isinstance(payload, str):
        payload = payload.encode("utf-8")
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------- CSV

def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path, has_header=False, label_column=None):
    """Read a rectangular numeric CSV file.

    Parameters
    ----------
    path : str
    has_header : bool or None
        ``None`` treats the first row as a header when any of its cells is
        not a number.
    label_column : int, str or None
        Column holding integer labels, by position (negative counts from the
        end) or by header name. It is removed from the returned matrix.

    Raises
    ------
    ParseError
        On ragged rows, non-numeric cells or non-integer labels. Row numbers
        are 1-based file lines, columns 1-based fields.
    """
    with open(path, newline="") as fh:
        records = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    header = None
    if records and (has_header or (has_header is None
                                   and not all(_is_number(c) for c in records[0]))):
        header = [c.strip() for c in records[0]]
        records = records[1:]
        first_line = 2
    else:
        first_line = 1
    width = len(header) if header is not None else (len(records[0]) if records else 0)

    label_idx = None
    if label_column is not None:
        if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
            if header is None or label_column not in header:
                raise ParseError(f"{path}: no column named {label_column!r}")
            label_idx = header.index(label_column)
        else:
            label_idx = int(label_column)
            if label_idx < 0:
                label_idx += width
            if not 0 <= label_idx < width:
                raise ParseError(f"{path}: label column {label_column} out of range for width {width}")

    rows = np.empty((len(records), width - (label_idx is not None)))
    labels = np.empty(len(records), np.int64) if label_idx is not None else None
    for r, rec in enumerate(records):
        line = first_line + r
        if len(rec) != width:
            raise ParseError(f"{path}: row {line} has {len(rec)} fields, expected {width}")
        out = 0
        for c, cell in enumerate(rec):
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(f"{path}: row {line}, column {c + 1}: "
                                 f"cannot parse {cell.strip()!r} as a number") from None
            if not np.isfinite(value):
                raise ParseError(f"{path}: row {line}, column {c + 1}: non-finite value")
            if c == label_idx:
                if value != int(value):
                    raise ParseError(f"{path}: row {line}, column {c + 1}: label must be an integer")
                labels[r] = int(value)
            else:
                rows[r, out] = value
                out += 1
    return DataMatrix(rows, labels)


def format_csv(rows, labels=None, header=None):
    """CSV text with shortest round-trip float formatting."""
    rows = np.asarray(rows, dtype=np.float64)
    lines = []
    if header is not None:
        lines.append(",".join(header))
    for i, row in enumerate(rows):
        cells = [repr(float(v)) for v in row]
        if labels is not None:
            cells.append(str(int(labels[i])))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n" if lines else ""


def write_csv(path, data, prefix="x"):
    """Write ``data`` with a ``x1..xD[,label]`` header."""
    data = as_data(data)
    header = [f"{prefix}{j + 1}" for j in range(data.dim)]
    if data.labels is not None:
        header.append("label")
    atomic_write(path, format_csv(data.rows, data.labels, header))


def export_embedding(model, data, path):
    """Write the embedding of ``data`` as ``y1..yd`` columns plus ``label`` when labelled."""
    data = as_data(data)
    write_csv(path, DataMatrix(transform(model, data), data.labels), prefix="y")


# ---------------------------------------------------------------- IDX

def _read_bytes(path):
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rb") as fh:
        return fh.read()


def _decode_idx(buf, path):
    if len(buf) < 4 or buf[0] != 0 or buf[1] != 0 or buf[2] not in _IDX_TYPES:
        raise FormatError(f"{path}: not an IDX file (bad magic)")
    ndim = buf[3]
    if ndim == 0 or len(buf) < 4 + 4 * ndim:
        raise FormatError(f"{path}: truncated IDX header")
    shape = struct.unpack(f">{ndim}I", buf[4:4 + 4 * ndim])
    dtype = np.dtype(_IDX_TYPES[buf[2]])
    expected = 4 + 4 * ndim + int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    if len(buf) != expected:
        raise FormatError(f"{path}: payload is {len(buf)} bytes, header implies {expected}")
    return np.frombuffer(buf, dtype=dtype, offset=4 + 4 * ndim).reshape(shape), buf[2]


def load_idx(images_path, labels_path=None):
    """Load IDX images (optionally gzipped) as rows scaled to ``[0, 1]``.

    Unsigned-byte images are divided by 255; other element types must
    already lie in ``[0, 1]``.
    """
    images, code = _decode_idx(_read_bytes(images_path), images_path)
    if images.ndim < 2:
        raise FormatError(f"{images_path}: expected an image array, got shape {images.shape}")
    rows = images.reshape(images.shape[0], -1).astype(np.float64)
    if code == 0x08:
        rows /= 255.0
    elif not np.all(np.isfinite(rows)) or rows.min(initial=0) < 0 or rows.max(initial=0) > 1:
        raise FormatError(f"{images_path}: non-byte pixel values must be finite and in [0, 1]")
    labels = None
    if labels_path is not None:
        labels, _ = _decode_idx(_read_bytes(labels_path), labels_path)
        if labels.ndim != 1 or labels.shape[0] != rows.shape[0]:
            raise FormatError(f"{labels_path}: {labels.shape} labels for {rows.shape[0]} images")
    return DataMatrix(rows, labels)


def encode_idx(array):
    """IDX bytes for an unsigned-byte array (used to build fixtures)."""
    array = np.asarray(array)
    if array.dtype != np.uint8:
        raise ValidationError("only uint8 arrays are encoded")
    head = bytes([0, 0, 0x08, array.ndim]) + struct.pack(f">{array.ndim}I", *array.shape)
    return head + array.tobytes()


# ---------------------------------------------------------------- models

def _model_arrays(model):
    arrays = [
        ("coding_vectors", model.coding_vectors, "<f8"),
        ("embedding", model.embedding, "<f8"),
        ("edges", model.edges, "<f8"),
        ("growth_error", model.growth_error, "<f8"),
        ("rng_state", model.rng_state, "<u8"),
        ("reference_data", model.reference_data, "<f8"),
    ]
    if model.projection is not None:
        arrays += [("projection_mean", model.projection[0], "<f8"),
                   ("projection_components", model.projection[1], "<f8")]
    return arrays


def dumps_model(model):
    """Serialize ``model``; equal models give identical bytes."""
    arrays = _model_arrays(model)
    payload = b"".join(np.ascontiguousarray(a, dtype=dt).tobytes() for _, a, dt in arrays)
    header = {
        "input_dim": model.input_dim,
        "output_dim": model.output_dim,
        "n_nodes": model.n_nodes,
        "epoch": model.epoch,
        "theta_g": model.theta_g,
        "theta_g_rows": model.theta_g_rows,
        "hyper": model.hyper.to_dict(),
        "arrays": [[name, dt, list(np.shape(a))] for name, a, dt in arrays],
        "payload_bytes": len(payload),
        "payload_crc32": zlib.crc32(payload),
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("ascii")
    return MODEL_MAGIC + struct.pack("<IQ", MODEL_VERSION, len(blob)) + blob + payload


def loads_model(buf, source="<bytes>"):
    if len(buf) < len(MODEL_MAGIC) + 12 or not buf.startswith(MODEL_MAGIC):
        raise FormatError(f"{source}: not a model file")
    version, hlen = struct.unpack_from("<IQ", buf, len(MODEL_MAGIC))
    if version != MODEL_VERSION:
        raise FormatError(f"{source}: model format version {version}, expected {MODEL_VERSION}")
    start = len(MODEL_MAGIC) + 12
    if len(buf) < start + hlen:
        raise FormatError(f"{source}: truncated header")
    try:
        header = json.loads(buf[start:start + hlen].decode("ascii"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{source}: corrupt header ({exc})") from None
    payload = buf[start + hlen:]
    if len(payload) != header["payload_bytes"]:
        raise FormatError(f"{source}: payload is {len(payload)} bytes, "
                          f"expected {header['payload_bytes']}")
    if zlib.crc32(payload) != header["payload_crc32"]:
        raise FormatError(f"{source}: payload checksum mismatch")
    arrays = {}
    offset = 0
    for name, dt, shape in header["arrays"]:
        dtype = np.dtype(dt)
        count = int(np.prod(shape, dtype=np.int64))
        arrays[name] = np.frombuffer(payload, dtype=dtype, count=count,
                                     offset=offset).reshape(shape).astype(dtype.newbyteorder("="))
        offset += count * dtype.itemsize
    projection = None
    if "projection_mean" in arrays:
        projection = (arrays["projection_mean"], arrays["projection_components"])
    try:
        return SongModel(
            header["input_dim"], header["output_dim"], HyperParams.from_dict(header["hyper"]),
            arrays["coding_vectors"], arrays["embedding"], arrays["edges"],
            arrays["growth_error"], arrays["rng_state"], header["epoch"], header["theta_g"],
            arrays["reference_data"], projection, header["theta_g_rows"])
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{source}: incomplete model ({exc})") from None
    except ValidationError as exc:
        raise FormatError(f"{source}: invalid model state ({exc})") from None


def save_model(model, path):
    atomic_write(path, dumps_model(model))


def load_model(path):
    with open(path, "rb") as fh:
        return loads_model(fh.read(), path)


__all__ = [
    "ParseError", "FormatError", "atomic_write", "load_csv", "write_csv", "format_csv",
    "export_embedding", "load_idx", "encode_idx", "save_model", "load_model",
    "dumps_model", "loads_model",
]
