# fieldio.py: FieldFile binary format, CSV tables and JSON documents
#
# FieldFile (little-endian):
#   magic b'NLSF' | version u32 = 1 | N u64 | x0 f64 | dx f64 | t f64 | N x (re f64, im f64)

import dataclasses
import json
import logging
import struct

import numpy as np
import pandas as pd

from errors import ConfigError, FieldFormatError
from fields import ComplexField

logger = logging.getLogger(__name__)

MAGIC = b'NLSF'
VERSION = 1
HEADER = struct.Struct('<4sIQddd')
PAYLOAD_DTYPE = np.dtype('<c16')


def checkKeys(d, cls):
    '''
    Reject keys that are not fields of the dataclass `cls`.
    '''
    if not isinstance(d, dict):
        raise ConfigError(f'{cls.__name__} expects a JSON object, got {type(d).__name__}')
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(d) - known)
    if unknown:
        raise ConfigError(f'Unknown {cls.__name__} keys: {", ".join(unknown)} (allowed: {", ".join(sorted(known))})')


# FieldFile

def packField(q):
    header = HEADER.pack(MAGIC, VERSION, q.n, q.x0, q.dx, q.t)
    return header + q.values.astype(PAYLOAD_DTYPE).tobytes()


def unpackField(data):
    if len(data) < HEADER.size:
        raise FieldFormatError(f'File is {len(data)} bytes, shorter than the {HEADER.size}-byte header')
    magic, version, n, x0, dx, t = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FieldFormatError(f'Bad magic {magic!r}, expected {MAGIC!r}')
    if version != VERSION:
        raise FieldFormatError(f'Unsupported FieldFile version {version}')
    payload = len(data) - HEADER.size
    if payload != 16 * n:
        raise FieldFormatError(f'Header says {n} samples ({16 * n} bytes), payload has {payload} bytes')
    values = np.frombuffer(data, dtype=PAYLOAD_DTYPE, count=n, offset=HEADER.size)
    return ComplexField(x0, dx, t, values.astype(np.complex128))


def writeField(path, q):
    with open(path, 'wb') as f:
        f.write(packField(q))
    logger.info(f'Wrote {q} to {path}')


def readField(path):
    with open(path, 'rb') as f:
        q = unpackField(f.read())
    logger.debug(f'Read {q} from {path}')
    return q


# CSV

def surfaceFrame(times, fields):
    '''
    Rows (x, t, |q|^2), t-major then x.
    '''
    frames = [pd.DataFrame({'x': q.x, 't': t, 'abs_q_sq': np.abs(q.values) ** 2})
              for t, q in zip(times, fields)]
    return pd.concat(frames, ignore_index=True)


def writeCsv(path, df):
    df.to_csv(path, index=False, float_format='%.17g')
    logger.info(f'Wrote {len(df)} rows to {path}')


# JSON

def _plain(value):
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if dataclasses.is_dataclass(value):
        return {k: _plain(v) for k, v in dataclasses.asdict(value).items()}
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def scatteringDocument(data):
    return {
        'eigenvalues': [[p.xi, p.eta] for p in data.eigenvalues],
        'norming': _plain(list(data.norming)),
        'a_samples': [[_plain(z), _plain(a)] for z, a in data.aSamples],
        'grid': {'n': data.n, 'x0': data.x0, 'dx': data.dx},
        'tolerances': _plain(data.tolerances),
    }


def paramsDocument(params):
    return [{'xi': p.xi, 'eta': p.eta, 'x0': p.x0, 'theta': p.theta} for p in params]


def dumpJson(document):
    return json.dumps(_plain(document), indent=2, sort_keys=True)


def writeJson(path, document):
    with open(path, 'w') as f:
        f.write(dumpJson(document) + '\n')
    logger.info(f'Wrote {path}')


def loadJson(path):
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f'{path} is not valid JSON: {e}') from e
