"""
Versioned binary container for model artifacts (Nystrom factors, random
feature maps, ridge regression models).

Layout: 6 magic bytes, a little-endian uint16 version, a uint32 header length,
a UTF-8 JSON header, then each array's raw row-major little-endian bytes in
header order.
"""

import json
import logging
import struct
from typing import Any, Dict, Tuple

import numpy as np

from rls_nystrom.core.exceptions import DataFormatError

logger = logging.getLogger(__name__)

MAGIC = b"RLSNYS"
VERSION = 1

_PREFIX = struct.Struct("<6sHI")
_DTYPES = {"float64": "<f8", "int64": "<i8"}


def write_container(path: str, kind: str, metadata: Dict[str, Any], arrays: Dict[str, np.ndarray]) -> None:
    """Write a container file.

    Args:
        path: Output file path
        kind: Artifact type tag stored in the header (e.g. "nystrom")
        metadata: JSON-serializable scalar fields
        arrays: Named float64 or int64 arrays, stored in insertion order
    """
    entries = []
    payloads = []
    for name, array in arrays.items():
        array = np.asarray(array)
        dtype = "int64" if np.issubdtype(array.dtype, np.integer) else "float64"
        data = np.ascontiguousarray(array, dtype=_DTYPES[dtype])
        entries.append({"name": name, "dtype": dtype, "shape": list(data.shape)})
        payloads.append(data.tobytes())

    header = json.dumps({"kind": kind, "metadata": metadata, "arrays": entries}).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_PREFIX.pack(MAGIC, VERSION, len(header)))
        f.write(header)
        for payload in payloads:
            f.write(payload)

    logger.debug(f"Wrote {kind} container to {path} ({len(arrays)} arrays)")


def read_container(path: str, kind: str) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    """Read a container file written by `write_container`.

    Args:
        path: Container file path
        kind: Expected artifact type tag

    Returns:
        (metadata, arrays)

    Raises:
        DataFormatError: Bad magic bytes, unsupported version, wrong kind or
            truncated payload
    """
    with open(path, "rb") as f:
        blob = f.read()

    if len(blob) < _PREFIX.size:
        raise DataFormatError(f"{path} is too short to be a model container")
    magic, version, header_length = _PREFIX.unpack_from(blob)
    if magic != MAGIC:
        raise DataFormatError(f"{path} is not a model container")
    if version != VERSION:
        raise DataFormatError(f"unsupported container version {version} (expected {VERSION})")

    offset = _PREFIX.size
    try:
        header = json.loads(blob[offset:offset + header_length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DataFormatError(f"corrupt container header in {path}: {e}") from None
    offset += header_length

    if header.get("kind") != kind:
        raise DataFormatError(f"{path} holds a '{header.get('kind')}' artifact, expected '{kind}'")

    arrays = {}
    for entry in header["arrays"]:
        dtype = np.dtype(_DTYPES[entry["dtype"]])
        shape = tuple(entry["shape"])
        size = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        if offset + size > len(blob):
            raise DataFormatError(f"container {path} is truncated in array '{entry['name']}'")
        arrays[entry["name"]] = np.frombuffer(blob, dtype=dtype, count=size // dtype.itemsize,
                                              offset=offset).reshape(shape).astype(dtype.newbyteorder("="))
        offset += size

    return header["metadata"], arrays
