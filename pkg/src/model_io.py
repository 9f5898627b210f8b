"""Model file codec - binary W^in with a fixed header and a JSON metadata sidecar."""

import json
import logging
import struct
from pathlib import Path

import numpy as np

from .errors import IngestError
from .mapping import KernelNormalization, MappingKind, MappingModel

logger = logging.getLogger(__name__)

MAGIC = b'A2VM'
FORMAT_VERSION = 1

# Header: magic, version, kind code, m, d, normalization code (little-endian)
HEADER_FORMAT = '<4sHBIIB'
HEADER_SIZE = struct.calcsize(HEADER_FORMAT)

KIND_CODES = {
    MappingKind.LINEAR: 0,
    MappingKind.RELU: 1,
    MappingKind.KERNEL: 2,
    MappingKind.SIGMOID: 3,
}

NORMALIZATION_CODES = {
    KernelNormalization.ATTRIBUTE: 0,
    KernelNormalization.OUTPUT: 1,
}


class ModelFileBuilder:
    """Serializes a MappingModel to bytes."""

    def build(self, model):
        """Build the model file contents.

        Layout:
        +------+---------+------+-----+-----+---------------+
        | A2VM | version | kind |  m  |  d  | normalization |
        +------+---------+------+-----+-----+---------------+
        |  W^in, m x raw_columns, row-major, float32 LE     |
        +---------------------------------------------------+

        Args:
            model: MappingModel

        Returns:
            bytes: Raw model file
        """
        header = struct.pack(HEADER_FORMAT, MAGIC, FORMAT_VERSION, KIND_CODES[model.kind],
                             model.num_features, model.dim,
                             NORMALIZATION_CODES[model.normalization])
        return header + np.ascontiguousarray(model.weights, dtype='<f4').tobytes()


class ModelFileParser:
    """Parses model file bytes back into a MappingModel."""

    KINDS = {code: kind for kind, code in KIND_CODES.items()}
    NORMALIZATIONS = {code: norm for norm, code in NORMALIZATION_CODES.items()}

    def parse_header(self, data, source=None):
        """Decode the fixed header.

        Returns:
            dict: magic, version, kind, m, d, normalization

        Raises:
            IngestError: If the header is short, foreign or of an unknown version
        """
        if len(data) < HEADER_SIZE:
            raise IngestError(f"model file too short (minimum {HEADER_SIZE} bytes required)", source)
        magic, version, kind, m, d, norm = struct.unpack(HEADER_FORMAT, data[:HEADER_SIZE])
        if magic != MAGIC:
            raise IngestError(f"not a model file (magic {magic!r})", source)
        if version != FORMAT_VERSION:
            raise IngestError(f"unsupported model format version {version}", source)
        if kind not in self.KINDS or norm not in self.NORMALIZATIONS:
            raise IngestError(f"unknown mapping kind {kind} or normalization {norm}", source)
        return {
            'version': version,
            'kind': self.KINDS[kind],
            'm': m,
            'd': d,
            'normalization': self.NORMALIZATIONS[norm],
        }

    def parse(self, data, source=None):
        header = self.parse_header(data, source)
        columns = header['d'] // 2 if header['kind'] is MappingKind.KERNEL else header['d']
        expected = header['m'] * columns * 4
        body = data[HEADER_SIZE:]
        if len(body) != expected:
            raise IngestError(f"expected {expected} weight bytes, found {len(body)}", source)
        weights = np.frombuffer(body, dtype='<f4').reshape(header['m'], columns).astype(np.float64)
        return MappingModel(header['kind'], weights, header['normalization'])


def sidecar_path(path):
    return Path(str(path) + '.json')


def save_model(model, path, metadata=None):
    """Write the model file and its JSON sidecar."""
    Path(path).write_bytes(ModelFileBuilder().build(model))
    sidecar = {
        'kind': model.kind.value,
        'm': model.num_features,
        'd': model.dim,
        'normalization': model.normalization.value,
        'metadata': metadata or {},
    }
    with open(sidecar_path(path), 'w', encoding='utf-8') as f:
        json.dump(sidecar, f, indent=2, default=str)
    logger.info("Saved %r to %s", model, path)


def load_model(path):
    """Read a model file.

    Raises:
        IngestError: If the file is not a valid model file
    """
    return ModelFileParser().parse(Path(path).read_bytes(), source=path)


def load_metadata(path):
    """Training metadata from the sidecar, or {} when none was written."""
    sidecar = sidecar_path(path)
    if not sidecar.exists():
        return {}
    with open(sidecar, 'r', encoding='utf-8') as f:
        return json.load(f).get('metadata', {})
