"""
Network, input-box and bounds-report files.

Two network formats are read:

* the native JSON format written by ``save_network``::

    {
      "name": "one_neuron",
      "layers": [
        {"shape": [1, 1], "weights": [[1.0]], "bias": [0.0], "activation": "relu"},
        {"shape": [1, 1], "weights": [[1.0]], "bias": [0.0]}
      ],
      "identity_overrides": [[]],
      "input_box": [[-1.0, 1.0]],
      "normalization": {"input": {"mean": [0.0], "range": [1.0]},
                        "output": {"mean": 0.0, "range": 1.0}}
    }

  Weights are listed row-major; every hidden layer names its activation and
  the last layer is the affine output map.

* the comma-separated layered benchmark format (``.nnet``): header comments
  starting with ``//``, then layer count and sizes, the symmetric flag, input
  minimums, maximums, means and ranges, and for every layer its weight rows
  followed by one bias per line. Hidden layers are ReLU.

Normalization constants are folded into the first and last affine maps.
"""

from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from quadcert.exceptions import ParseError, PreconditionError
from quadcert.network.model import Network
from quadcert.utils.serialization import read_json, write_json

NETWORK_KIND = "network"


def fold_normalization(weights, biases, in_mean=None, in_range=None, out_mean=None, out_range=None):
    """
    Fold x_n = (x - mean)/range into the first affine map and
    y = y_n*range + mean into the last one.
    """
    weights = [np.array(W, dtype=float) for W in weights]
    biases = [np.array(b, dtype=float) for b in biases]
    if in_mean is not None or in_range is not None:
        n_x = weights[0].shape[1]
        mean = np.zeros(n_x) if in_mean is None else np.broadcast_to(np.asarray(in_mean, float), (n_x,))
        rng = np.ones(n_x) if in_range is None else np.broadcast_to(np.asarray(in_range, float), (n_x,))
        if np.any(rng == 0):
            raise PreconditionError("normalization range must be nonzero")
        W = weights[0] / rng
        biases[0] = biases[0] - W @ mean
        weights[0] = W
    if out_mean is not None or out_range is not None:
        n_y = weights[-1].shape[0]
        scale = np.ones(n_y) if out_range is None else np.broadcast_to(np.asarray(out_range, float), (n_y,))
        shift = np.zeros(n_y) if out_mean is None else np.broadcast_to(np.asarray(out_mean, float), (n_y,))
        weights[-1] = scale[:, None] * weights[-1]
        biases[-1] = biases[-1] * scale + shift
    return weights, biases


# native format


def network_from_dict(data: dict, source: str = "<network>") -> Network:
    if not isinstance(data, dict) or not isinstance(data.get("layers"), list) or not data["layers"]:
        raise ParseError("network needs a nonempty 'layers' list", location=source)
    weights, biases, activations = [], [], []
    layers = data["layers"]
    for k, layer in enumerate(layers):
        where = f"{source}#layers[{k}]"
        try:
            W = np.array(layer["weights"], dtype=float)
            b = np.array(layer["bias"], dtype=float).ravel()
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad layer: {exc}", location=where) from exc
        if W.ndim == 1:
            W = W.reshape(-1, 1) if b.shape[0] == W.shape[0] else W.reshape(1, -1)
        if "shape" in layer and list(W.shape) != [int(v) for v in layer["shape"]]:
            raise ParseError(f"weights have shape {list(W.shape)}, declared {layer['shape']}", location=where)
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise ParseError("non-finite entries", location=where)
        if k > 0 and W.shape[1] != weights[-1].shape[0]:
            raise ParseError(
                f"weights have {W.shape[1]} columns, previous layer has {weights[-1].shape[0]} neurons",
                location=where,
            )
        weights.append(W)
        biases.append(b)
        if k < len(layers) - 1:
            activations.append(layer.get("activation", "relu"))

    norm = data.get("normalization", {})
    inp, out = norm.get("input", {}), norm.get("output", {})
    try:
        weights, biases = fold_normalization(
            weights, biases, inp.get("mean"), inp.get("range"), out.get("mean"), out.get("range")
        )
        overrides = None
        if "identity_overrides" in data:
            overrides = []
            for W, idx in zip(weights[:-1], data["identity_overrides"]):
                mask = np.zeros(W.shape[0], dtype=bool)
                mask[list(idx)] = True
                overrides.append(mask)
        return Network(
            tuple(weights),
            tuple(biases),
            tuple(activations),
            identity_overrides=tuple(overrides) if overrides else (),
            input_box=data.get("input_box"),
            name=data.get("name", Path(source).stem),
        )
    except (PreconditionError, IndexError, ValueError) as exc:
        raise ParseError(str(exc), location=source) from exc


def network_to_dict(net: Network) -> dict:
    layers = []
    for k, (W, b) in enumerate(zip(net.weights, net.biases)):
        layer = {"shape": list(W.shape), "weights": W, "bias": b}
        if k < net.depth:
            layer["activation"] = net.activations[k]
        layers.append(layer)
    data = {
        "kind": NETWORK_KIND,
        "name": net.name,
        "layers": layers,
        "identity_overrides": [np.flatnonzero(m).tolist() for m in net.identity_overrides],
    }
    if net.input_box is not None:
        data["input_box"] = net.input_box
    return data


def save_network(path: Union[str, Path], net: Network) -> Path:
    return write_json(path, network_to_dict(net))


# benchmark layered format


def _fields(line: str, lineno: int, source: str, count: Optional[int] = None, cast=float) -> list:
    parts = [p for p in line.strip().split(",") if p.strip() != ""]
    try:
        values = [cast(p) for p in parts]
    except ValueError as exc:
        raise ParseError(f"bad number: {exc}", location=f"{source}:{lineno}") from exc
    if count is not None and len(values) < count:
        raise ParseError(f"expected {count} values, found {len(values)}", location=f"{source}:{lineno}")
    return values[:count] if count is not None else values


def parse_nnet(text: str, source: str = "<nnet>") -> Network:
    """Parse the layered benchmark format; hidden layers are ReLU."""
    lines = text.splitlines()
    pos = 0
    while pos < len(lines) and (lines[pos].startswith("//") or not lines[pos].strip()):
        pos += 1

    def next_line():
        nonlocal pos
        if pos >= len(lines):
            raise ParseError("unexpected end of file", location=f"{source}:{pos + 1}")
        pos += 1
        return lines[pos - 1], pos

    line, no = next_line()
    n_layers, n_in, n_out = _fields(line, no, source, 3, cast=int)
    line, no = next_line()
    sizes = _fields(line, no, source, n_layers + 1, cast=int)
    if sizes[0] != n_in or sizes[-1] != n_out:
        raise ParseError("layer sizes disagree with input/output sizes", location=f"{source}:{no}")
    next_line()  # symmetric flag, unused
    mins = _fields(*next_line(), source, n_in)
    maxs = _fields(*next_line(), source, n_in)
    means = _fields(*next_line(), source, n_in + 1)
    ranges = _fields(*next_line(), source, n_in + 1)

    weights, biases = [], []
    for k in range(n_layers):
        rows = [_fields(*next_line(), source, sizes[k]) for _ in range(sizes[k + 1])]
        bias = [_fields(*next_line(), source, 1)[0] for _ in range(sizes[k + 1])]
        W, b = np.array(rows), np.array(bias)
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise ParseError(f"layer {k + 1} has non-finite entries", location=f"{source}:{pos}")
        weights.append(W)
        biases.append(b)

    weights, biases = fold_normalization(
        weights, biases, means[:n_in], ranges[:n_in], means[n_in], ranges[n_in]
    )
    return Network(
        tuple(weights),
        tuple(biases),
        tuple(["relu"] * (n_layers - 1)),
        input_box=np.column_stack([mins, maxs]),
        name=Path(source).stem,
    )


def _resolve(source) -> Path:
    from quadcert.config import resolve_path

    return resolve_path(source, None)


def load_network(source: Union[str, Path, dict]) -> Network:
    """
    Load a network from a native JSON file, a ``.nnet`` file, a dict, or a
    ``bundled:<name>`` fixture.

    Raises:
        ParseError: malformed file, with the file and line or JSON path
    """
    if isinstance(source, dict):
        return network_from_dict(source)
    path = _resolve(source)
    if path.suffix == ".nnet":
        try:
            text = path.read_text(encoding="utf-8")
        except FileNotFoundError as exc:
            raise ParseError("file not found", location=str(path)) from exc
        try:
            return parse_nnet(text, source=str(path))
        except PreconditionError as exc:
            raise ParseError(str(exc), location=str(path)) from exc
    return network_from_dict(read_json(path), source=str(path))


# input boxes


def parse_box(data, source: str = "<box>") -> np.ndarray:
    """
    Input box from ``[[lo, hi], ...]`` or ``{"lower": [...], "upper": [...]}``.
    """
    try:
        if isinstance(data, dict) and "box" in data:
            data = data["box"]
        if isinstance(data, dict):
            box = np.column_stack([np.asarray(data["lower"], float), np.asarray(data["upper"], float)])
        else:
            box = np.asarray(data, dtype=float).reshape(-1, 2)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad input box: {exc}", location=source) from exc
    if not np.all(np.isfinite(box)):
        raise ParseError("input box must be finite", location=source)
    bad = np.flatnonzero(box[:, 0] > box[:, 1])
    if bad.size:
        raise ParseError(f"lower bound above upper bound in coordinate {int(bad[0])}", location=source)
    return box


def load_box(source: Union[str, Path, dict, Sequence]) -> np.ndarray:
    if isinstance(source, (dict, list, tuple, np.ndarray)):
        return parse_box(source)
    path = _resolve(source)
    return parse_box(read_json(path), source=str(path))


def bounds_report(bounds) -> dict:
    """JSON records for a BoundsState: per-neuron intervals and stability."""
    layers: List[dict] = []
    for layer, (pre, post, stab) in enumerate(zip(bounds.pre, bounds.post, bounds.stability), start=1):
        layers.append(
            {
                "layer": layer,
                "neurons": [
                    {
                        "index": i,
                        "pre": [float(pre[i, 0]), float(pre[i, 1])],
                        "post": [float(post[i, 0]), float(post[i, 1])],
                        "stability": None if stab is None else stab[i],
                    }
                    for i in range(pre.shape[0])
                ],
            }
        )
    return {"kind": "bounds_report", "input_box": bounds.input_box, "layers": layers}
