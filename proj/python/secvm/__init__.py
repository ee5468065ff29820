"""Python access to the secvm core: data, hashing, training, simulation, bounds."""

import json as _json
import os as _os

from . import _secvm
from ._secvm import (  # noqa: F401
    Error, DataError, ParseError, IoError, ConfigError, DimensionError, DecodeError,
    SchedulingError, DomainError, ProtocolError, InvariantError,
    Dataset, parse_dataset, load_dataset, serialize_dataset, split_train_test,
    hash_index, hash_vector, siphash24, local_update, predict, train_centralized,
    packetize, reaggregate, encode_package, decode_package,
    lemma1a_bound, lemma1b_bound, lemma2_bound, lemma3_bound, collision_oracle, plan_bins,
)

__version__ = "0.1.0"


def generate_synthetic(spec=None, seed=0):
    """Seeded synthetic corpus; spec keys as in the CLI's synth --spec file."""
    return _secvm.generate_synthetic(_json.dumps(spec or {}), seed)


def simulate(scenario, base_dir=None):
    """Run a scenario given as a dict, or as a path to a scenario JSON file."""
    if isinstance(scenario, (str, _os.PathLike)):
        path = _os.fspath(scenario)
        with open(path) as f:
            scenario = _json.load(f)
        base_dir = base_dir or _os.path.dirname(_os.path.abspath(path))
    out = _secvm.simulate(_json.dumps(scenario), base_dir or "")
    out["resolved"] = _json.loads(out["resolved"])
    return out


def descriptor_digest(descriptor):
    """Hex SHA-256 of a descriptor dict (the JSON served at /descriptor)."""
    return _secvm.descriptor_digest(_json.dumps(descriptor))
