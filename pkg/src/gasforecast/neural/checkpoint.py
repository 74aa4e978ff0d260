"""Text tensor dump: a version line, the network spec as JSON, then one
``tensor <name> <shape...>`` header per parameter followed by its row-major
values on one line.
"""

import json
from pathlib import Path

import numpy as np

from .network import Network, NetworkSpec

MAGIC = "gasforecast-checkpoint v1"


def save_checkpoint(network, path):
    lines = [MAGIC, "spec " + json.dumps(network.spec.to_dict(), sort_keys=True),
             f"seed {network.seed}"]
    for name, p in network.params.items():
        lines.append(" ".join(["tensor", name] + [str(d) for d in p.shape]))
        lines.append(" ".join(repr(float(v)) for v in p.ravel()))
    Path(path).write_text("\n".join(lines) + "\n")


def load_checkpoint(path):
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != MAGIC:
        raise ValueError(f"{path}: not a {MAGIC} file")
    spec = NetworkSpec.from_dict(json.loads(lines[1][len("spec "):]))
    net = Network(spec, seed=int(lines[2].split()[1]))
    values = {}
    for head, body in zip(lines[3::2], lines[4::2]):
        parts = head.split()
        name, shape = parts[1], tuple(int(d) for d in parts[2:])
        values[name] = np.array([float(v) for v in body.split()]).reshape(shape)
    if set(values) != set(net.params):
        raise ValueError(f"{path}: parameter names do not match the spec")
    net.set_params(values)
    return net
