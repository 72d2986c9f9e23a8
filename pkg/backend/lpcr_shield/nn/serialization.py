# LPCR Shield - Model File Format
"""
Single-file parameter container.

    b"LPCRMDL1" | u32 little-endian header length | UTF-8 JSON header | tensor data

The header lists the layer specs, the input shape and, for every tensor in
storage order, its name, role (param or buffer), shape and SHA-256 of its
little-endian float32 bytes. Tensor data follows the header back to back.
"""

import json
import struct
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from ..core.exceptions import ModelFileError
from ..utils.helpers import canonical_json, sha256_bytes
from .layers import LayerSpec
from .network import ModelParams, infer_shapes, init_params

MAGIC = b"LPCRMDL1"
FORMAT_VERSION = 1
_DTYPE = np.dtype("<f4")


def encode_params(model: ModelParams, metadata: Optional[Dict[str, Any]] = None) -> bytes:
    tensors = []
    chunks = []
    for role, group in (("param", model.params), ("buffer", model.buffers)):
        for name, tensor in group.items():
            data = np.ascontiguousarray(tensor, dtype=_DTYPE).tobytes()
            tensors.append({
                "name": name,
                "role": role,
                "shape": list(tensor.shape),
                "sha256": sha256_bytes(data),
            })
            chunks.append(data)

    header = {
        "format_version": FORMAT_VERSION,
        "layers": [spec.to_dict() for spec in model.specs],
        "input_shape": list(model.input_shape),
        "num_outputs": model.num_outputs,
        "tensors": tensors,
        "metadata": metadata or {},
    }
    header_bytes = canonical_json(header).encode("utf-8")
    return MAGIC + struct.pack("<I", len(header_bytes)) + header_bytes + b"".join(chunks)


def decode_params(data: bytes, source: str = "<memory>") -> Tuple[ModelParams, Dict[str, Any]]:
    """Inverse of encode_params; every structural or checksum problem raises ModelFileError"""
    if not data.startswith(MAGIC):
        raise ModelFileError(source, "bad magic bytes")
    offset = len(MAGIC)
    if len(data) < offset + 4:
        raise ModelFileError(source, "truncated header length")
    (header_len,) = struct.unpack_from("<I", data, offset)
    offset += 4
    if len(data) < offset + header_len:
        raise ModelFileError(source, "truncated header")
    try:
        header = json.loads(data[offset:offset + header_len].decode("utf-8"))
        specs = tuple(LayerSpec.from_dict(layer) for layer in header["layers"])
        input_shape = tuple(int(d) for d in header["input_shape"])
        entries = header["tensors"]
    except (ValueError, KeyError, TypeError) as e:
        raise ModelFileError(source, f"unreadable header: {e}") from e
    offset += header_len

    if header.get("format_version") != FORMAT_VERSION:
        raise ModelFileError(source, f"unsupported format version {header.get('format_version')}")

    params: Dict[str, np.ndarray] = {}
    buffers: Dict[str, np.ndarray] = {}
    for entry in entries:
        shape = tuple(int(d) for d in entry["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * _DTYPE.itemsize
        chunk = data[offset:offset + nbytes]
        if len(chunk) != nbytes:
            raise ModelFileError(source, f"tensor '{entry['name']}' is truncated")
        if sha256_bytes(chunk) != entry["sha256"]:
            raise ModelFileError(source, f"checksum mismatch for tensor '{entry['name']}'")
        tensor = np.frombuffer(chunk, dtype=_DTYPE).reshape(shape).astype(np.float32)
        (params if entry["role"] == "param" else buffers)[entry["name"]] = tensor
        offset += nbytes
    if offset != len(data):
        raise ModelFileError(source, f"{len(data) - offset} trailing bytes after tensor data")

    try:
        expected = init_params(specs, input_shape, np.random.default_rng(0), scheme="zeros")
        infer_shapes(specs, input_shape)
    except Exception as e:
        raise ModelFileError(source, f"invalid architecture: {e}") from e
    for group, reference in ((params, expected.params), (buffers, expected.buffers)):
        if set(group) != set(reference):
            raise ModelFileError(source, f"tensor set {sorted(group)} does not match the architecture")
        for name, tensor in group.items():
            if tensor.shape != reference[name].shape:
                raise ModelFileError(
                    source, f"tensor '{name}' has shape {tensor.shape}, architecture needs {reference[name].shape}"
                )

    model = ModelParams(
        specs=specs,
        input_shape=input_shape,
        params={name: params[name] for name in expected.params},
        buffers={name: buffers[name] for name in expected.buffers},
    )
    if header.get("num_outputs") != model.num_outputs:
        declared = header.get("num_outputs")
        raise ModelFileError(source, f"header declares {declared} outputs, layers give {model.num_outputs}")
    return model, header.get("metadata", {})


def save_params(path: Union[str, Path], model: ModelParams, metadata: Optional[Dict[str, Any]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_params(model, metadata))
    return path


def load_params(path: Union[str, Path]) -> Tuple[ModelParams, Dict[str, Any]]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise ModelFileError(str(path), f"unreadable: {e}") from e
    return decode_params(data, source=str(path))
