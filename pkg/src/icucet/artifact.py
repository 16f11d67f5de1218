"""Binary model artifact.

Layout (all integers little-endian)::

    magic        8 bytes  b"ICUCETMD"
    version      uint32
    payload_len  uint64
    crc32        uint32   of the payload
    payload      uint32 header_len | JSON header | raw array bytes

The JSON header is written with sorted keys and lists every array's name,
dtype, shape and byte offset, so save -> load -> save reproduces the
file byte for byte.
"""

import json
import struct
import zlib

import numpy as np

from .errors import CorruptArtifact, VersionMismatch
from .featurize import ImputationStats, ScalingStats
from .learners.pipeline import MODEL_TYPES, TrainedModel

MAGIC = b"ICUCETMD"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sIQI")


def _le(a):
    a = np.asarray(a)
    if a.dtype.kind == "b":
        return a.astype("|b1")
    return a.astype(a.dtype.newbyteorder("<"))


def dumps(model: TrainedModel) -> bytes:
    arrays = dict(model.model.to_arrays())
    arrays["imputation_medians"] = model.imputation.medians
    arrays["class_weights"] = model.class_weights
    if model.scaling is not None:
        arrays["scaling_mean"] = model.scaling.mean
        arrays["scaling_std"] = model.scaling.std
    entries, blobs, offset = [], [], 0
    for name in sorted(arrays):
        a = np.ascontiguousarray(_le(arrays[name]))
        raw = a.tobytes()
        entries.append({"name": name, "dtype": a.dtype.str, "shape": list(a.shape), "offset": offset, "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)
    header = {
        "family": model.family,
        "params": model.params,
        "seed": int(model.seed),
        "feature_names": list(model.feature_names),
        "rules": model.rules,
        "arrays": entries,
    }
    hj = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    payload = struct.pack("<I", len(hj)) + hj + b"".join(blobs)
    return _PREFIX.pack(MAGIC, FORMAT_VERSION, len(payload), zlib.crc32(payload)) + payload


def loads(data: bytes) -> TrainedModel:
    if len(data) < _PREFIX.size:
        raise CorruptArtifact("file shorter than the artifact header")
    magic, version, plen, crc = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise CorruptArtifact("not a model artifact (bad magic)")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"artifact format version {version}, this build reads {FORMAT_VERSION}")
    payload = data[_PREFIX.size :]
    if len(payload) != plen:
        raise CorruptArtifact(f"payload is {len(payload)} bytes, header says {plen}")
    if zlib.crc32(payload) != crc:
        raise CorruptArtifact("checksum mismatch")
    try:
        (hlen,) = struct.unpack_from("<I", payload)
        header = json.loads(payload[4 : 4 + hlen])
        base = 4 + hlen
        arrays = {}
        for e in header["arrays"]:
            start = base + e["offset"]
            buf = payload[start : start + e["nbytes"]]
            arrays[e["name"]] = np.frombuffer(buf, dtype=np.dtype(e["dtype"])).reshape(e["shape"]).copy()
        family = header["family"]
        model = MODEL_TYPES[family].from_arrays(arrays)
    except (KeyError, ValueError, struct.error) as exc:
        raise CorruptArtifact(f"malformed payload: {exc}") from None
    scaling = None
    if "scaling_mean" in arrays:
        scaling = ScalingStats(arrays["scaling_mean"], arrays["scaling_std"])
    return TrainedModel(
        family,
        header["params"],
        model,
        ImputationStats(arrays["imputation_medians"]),
        scaling,
        arrays["class_weights"],
        header["seed"],
        tuple(header["feature_names"]),
        header["rules"],
    )


def save_model(model: TrainedModel, path):
    with open(path, "wb") as f:
        f.write(dumps(model))


def load_model(path) -> TrainedModel:
    with open(path, "rb") as f:
        return loads(f.read())
