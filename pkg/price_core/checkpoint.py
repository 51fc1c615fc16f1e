"""
Model checkpoint container.

A checkpoint is a zip of .npy members (readable with numpy.load): one member per
parameter tensor, each carrying its own shape header, plus `meta` holding the
model config, the fitted FeatureSpec and the split ratios as JSON. Members are
written with a fixed timestamp so identical runs give identical bytes.
"""
import json
import logging
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import jsonschema
import numpy as np

from .config import DataConfig, ModelConfig
from .errors import CheckpointError
from .features import FeatureSpec
from .model import ModelParams

logger = logging.getLogger("price_radar.checkpoint")

FORMAT = "price-radar-checkpoint"
VERSION = 1
_FIXED_TIME = (1980, 1, 1, 0, 0, 0)

META_SCHEMA = {
    "type": "object",
    "required": ["format", "version", "model_config", "param_names"],
    "properties": {
        "format": {"const": FORMAT},
        "version": {"type": "integer", "minimum": 1},
        "model_config": {"type": "object"},
        "data_config": {"type": ["object", "null"]},
        "feature_spec": {"type": ["object", "null"]},
        "param_names": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "extra": {"type": "object"},
    },
}


@dataclass
class Checkpoint:
    model_config: ModelConfig
    params: ModelParams
    feature_spec: Optional[FeatureSpec] = None
    data_config: Optional[DataConfig] = None
    extra: Dict[str, Any] = field(default_factory=dict)


def _write_member(zf: zipfile.ZipFile, name: str, array: np.ndarray) -> None:
    info = zipfile.ZipInfo(f"{name}.npy", date_time=_FIXED_TIME)
    with zf.open(info, "w", force_zip64=True) as fh:
        # 0-d members (meta) keep shape ()
        array = np.asarray(array)
        if not array.flags.c_contiguous:
            array = array.copy(order="C")
        np.lib.format.write_array(fh, array, allow_pickle=False)


def save_checkpoint(path: Union[str, Path], ckpt: Checkpoint) -> Path:
    path = Path(path)
    ckpt.params.check(ckpt.model_config)
    meta = {
        "format": FORMAT,
        "version": VERSION,
        "model_config": ckpt.model_config.model_dump(),
        "data_config": ckpt.data_config.model_dump() if ckpt.data_config else None,
        "feature_spec": ckpt.feature_spec.model_dump() if ckpt.feature_spec else None,
        "param_names": list(ckpt.params),
        "extra": ckpt.extra,
    }
    jsonschema.validate(meta, META_SCHEMA)
    path.parent.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        _write_member(zf, "meta", np.array(json.dumps(meta, sort_keys=True)))
        for name, tensor in ckpt.params.items():
            _write_member(zf, f"param/{name}", tensor.data)
    logger.info(f"✅ Saved checkpoint with {ckpt.params.num_weights():,} weights to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as archive:
            member = archive["meta"]
            if member.shape != ():
                raise ValueError(f"meta member has shape {member.shape}, expected a 0-d string")
            meta = json.loads(member.item())
            jsonschema.validate(meta, META_SCHEMA)
            arrays = {name: archive[f"param/{name}"] for name in meta["param_names"]}
    except (zipfile.BadZipFile, KeyError, ValueError, OSError, jsonschema.ValidationError) as e:
        raise CheckpointError(f"malformed checkpoint {path}: {e}") from e

    cfg = ModelConfig(**meta["model_config"])
    params = ModelParams.from_arrays(arrays).check(cfg)
    spec = FeatureSpec(**meta["feature_spec"]) if meta.get("feature_spec") else None
    data_cfg = DataConfig(**meta["data_config"]) if meta.get("data_config") else None
    return Checkpoint(cfg, params, spec, data_cfg, meta.get("extra", {}))
