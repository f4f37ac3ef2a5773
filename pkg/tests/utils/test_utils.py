import hashlib

import numpy as np

from shadowpolicy.utils import dump_json, file_digest, load_json


def test_json_round_trip(tmp_path):
    path = tmp_path / "stats.json"
    dump_json(path, {"b": 1, "a": np.float64(0.5), "returns": np.arange(3)})

    assert load_json(path) == {"a": 0.5, "b": 1, "returns": [0, 1, 2]}
    assert path.read_bytes().startswith(b'{\n  "a"')


def test_file_digest(tmp_path):
    path = tmp_path / "blob"
    content = bytes(range(256)) * 1000
    path.write_bytes(content)

    assert file_digest(path) == hashlib.sha256(content).hexdigest()
