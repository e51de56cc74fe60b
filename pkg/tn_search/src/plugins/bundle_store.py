"""
Tensor bundle I/O: a directory holding manifest.json and data.bin.

data.bin is little-endian float64, samples concatenated, each sample row-major.
"""
import json
import logging
from pathlib import Path

import numpy as np

from errors import BundleError, UnsupportedDtypeError
from tensors.dataset import SPLITS, TensorDataset

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
DATA = "data.bin"
DTYPES = {"f64": np.dtype("<f8")}


def save_bundle(dataset: TensorDataset, path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    manifest = {
        "shape": list(dataset.shape),
        "num_samples": dataset.num_samples,
        "dtype": "f64",
        "order_tag": dataset.split,
    }
    if dataset.mode_names is not None:
        manifest["mode_names"] = list(dataset.mode_names)
    if "planted_ranks" in dataset.metadata:
        manifest["planted_ranks"] = list(dataset.metadata["planted_ranks"])
    extra = {k: v for k, v in dataset.metadata.items() if k != "planted_ranks"}
    if extra:
        manifest["metadata"] = extra

    dataset.samples.astype(DTYPES["f64"], copy=False).tofile(path / DATA)
    (path / MANIFEST).write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    logger.info(f"[DATA] Saved {dataset.num_samples} x {dataset.shape} ({dataset.split}) to {path}")
    return path


def load_bundle(path) -> TensorDataset:
    path = Path(path)
    manifest_path, data_path = path / MANIFEST, path / DATA
    if not manifest_path.exists():
        raise BundleError(f"Missing {MANIFEST} in bundle {path}")
    if not data_path.exists():
        raise BundleError(f"Missing {DATA} in bundle {path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        shape = tuple(int(d) for d in manifest["shape"])
        num_samples = int(manifest["num_samples"])
        dtype = manifest["dtype"]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise BundleError(f"Malformed manifest {manifest_path}: {e}") from e
    if dtype not in DTYPES:
        raise UnsupportedDtypeError(f"Unsupported dtype {dtype!r} in {manifest_path}; only 'f64' is supported")
    split = manifest.get("order_tag", "unsplit")
    if split not in SPLITS:
        raise BundleError(f"Unknown order_tag {split!r} in {manifest_path}")

    expected = num_samples * int(np.prod(shape))
    data = np.fromfile(data_path, dtype=DTYPES[dtype])
    if data.size != expected or data_path.stat().st_size != expected * DTYPES[dtype].itemsize:
        raise BundleError(
            f"{data_path} holds {data_path.stat().st_size} bytes; manifest shape {shape} x {num_samples} "
            f"needs {expected * DTYPES[dtype].itemsize}"
        )
    metadata = dict(manifest.get("metadata", {}))
    if "planted_ranks" in manifest:
        metadata["planted_ranks"] = list(manifest["planted_ranks"])
    return TensorDataset(
        data.reshape((num_samples, *shape)).astype(np.float64),
        split=split,
        mode_names=manifest.get("mode_names"),
        metadata=metadata,
    )
