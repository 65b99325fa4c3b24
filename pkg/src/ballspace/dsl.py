"""JSON payloads for functions, spaces, measures, gap series and lattices.

Every parser takes the decoded JSON value and a dotted path used in error
messages, so a malformed field is reported as e.g. ``function.dilate.r``.
"""
from __future__ import annotations

import numpy as np

from .errors import BallspaceError, DSLError
from .gap import GapSeries
from .geometry import SpaceParams
from .holo import (
    AtomicData,
    Dilation,
    FnSum,
    HoloFn,
    KernelSum,
    Lacunary,
    Polynomial,
    atom,
    atomic_synthesize,
    kernel_J,
    kernel_K,
    kernel_L,
)
from .lattice import Lattice, atomic_measure
from .spaces import (
    Bergman,
    BergmanType,
    Bloch,
    DiscreteMeasure,
    NSpace,
    NstarSpace,
    TentSpace,
    WeightedHardy,
    function_measure,
)


def _number(v, path, positive=False, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise DSLError("expected a number", path)
    if integer and int(v) != v:
        raise DSLError("expected an integer", path)
    if positive and not v > 0:
        raise DSLError("expected a positive number", path)
    return int(v) if integer else float(v)


def _object(v, path, required=(), optional=()):
    if not isinstance(v, dict):
        raise DSLError("expected an object", path)
    for key in required:
        if key not in v:
            raise DSLError(f"missing field {key!r}", path)
    unknown = set(v) - set(required) - set(optional)
    if unknown:
        raise DSLError(f"unknown fields {sorted(unknown)}", path)
    return v


def _list(v, path):
    if not isinstance(v, list):
        raise DSLError("expected a list", path)
    return v


def parse_complex(v, path) -> complex:
    """A number, or a [re, im] pair."""
    if isinstance(v, list):
        if len(v) != 2:
            raise DSLError("complex numbers are [re, im] pairs", path)
        return complex(_number(v[0], f"{path}[0]"), _number(v[1], f"{path}[1]"))
    return complex(_number(v, path))


def parse_point(v, path) -> np.ndarray:
    coords = _list(v, path)
    if not coords:
        raise DSLError("a point needs at least one coordinate", path)
    return np.array([parse_complex(c, f"{path}[{i}]") for i, c in enumerate(coords)], dtype=complex)


def _wrap(path, fn, *args):
    try:
        return fn(*args)
    except DSLError:
        raise
    except BallspaceError as exc:
        raise DSLError(str(exc), path) from None


# ---------------------------------------------------------------- functions


def parse_function(obj, path: str = "function") -> HoloFn:
    if not isinstance(obj, dict) or not obj:
        raise DSLError("expected a function object such as {\"poly\": ...}", path)
    kinds = [k for k in obj if k != "n"]
    if len(kinds) != 1:
        raise DSLError(f"expected exactly one function kind, got {sorted(kinds)}", path)
    kind = kinds[0]
    body = obj[kind]
    sub = f"{path}.{kind}"
    if kind == "poly":
        return _parse_poly(body, sub, obj.get("n"))
    if kind == "lacunary":
        return _parse_lacunary(body, sub)
    if kind == "kernel":
        return _parse_kernel(body, sub)
    if kind == "atomic":
        return atomic_synthesize(parse_atomic(body, sub))
    if kind == "kernel_sum":
        _object(body, sub, ("exponent", "terms"))
        terms = _list(body["terms"], f"{sub}.terms")
        coeffs, centers = _atom_list(terms, f"{sub}.terms")
        n = centers.shape[1] if len(centers) else int(obj.get("n", 1))
        return _wrap(sub, KernelSum, coeffs, centers.reshape(-1, n), _number(body["exponent"], f"{sub}.exponent"))
    if kind == "dilate":
        _object(body, sub, ("r", "of"))
        inner = parse_function(body["of"], f"{sub}.of")
        return _wrap(f"{sub}.r", Dilation, inner, _number(body["r"], f"{sub}.r"))
    if kind == "sum":
        terms = [parse_function(t, f"{sub}[{i}]") for i, t in enumerate(_list(body, sub))]
        return _wrap(sub, FnSum, terms)
    raise DSLError(f"unknown function kind {kind!r}", path)


def _parse_poly(body, path, n=None) -> Polynomial:
    coeffs = {}
    for i, term in enumerate(_list(body, path)):
        tp = f"{path}[{i}]"
        if not isinstance(term, list) or len(term) != 3:
            raise DSLError("terms are [[eta_1, ..., eta_n], re, im]", tp)
        eta = _list(term[0], f"{tp}[0]")
        if not eta or any(isinstance(e, bool) or not isinstance(e, int) or e < 0 for e in eta):
            raise DSLError("multi-index entries must be nonnegative integers", f"{tp}[0]")
        key = tuple(eta)
        if n is not None and len(key) != n:
            raise DSLError(f"multi-index has {len(key)} entries, expected n={n}", f"{tp}[0]")
        n = len(key)
        coeffs[key] = coeffs.get(key, 0) + complex(_number(term[1], f"{tp}[1]"), _number(term[2], f"{tp}[2]"))
    if n is None:
        raise DSLError("an empty polynomial needs an explicit n", path)
    return _wrap(path, Polynomial, coeffs, int(n))


def _parse_lacunary(body, path) -> Lacunary:
    if isinstance(body, dict) and isinstance(body.get("freqs"), str):
        return Lacunary.from_source(body, path)
    _object(body, path, ("freqs", "coeffs"), ("n", "blocks", "block_sup"))
    freqs = [_number(f, f"{path}.freqs[{i}]", integer=True) for i, f in enumerate(_list(body["freqs"], f"{path}.freqs"))]
    coeffs = [parse_complex(c, f"{path}.coeffs[{i}]") for i, c in enumerate(_list(body["coeffs"], f"{path}.coeffs"))]
    n = _number(body.get("n", 1), f"{path}.n", positive=True, integer=True)
    blocks = None
    if "blocks" in body:
        blocks = [_parse_poly(b, f"{path}.blocks[{i}]", n) for i, b in enumerate(_list(body["blocks"], f"{path}.blocks"))]
    sup = None
    if "block_sup" in body:
        sup = [_number(v, f"{path}.block_sup[{i}]") for i, v in enumerate(_list(body["block_sup"], f"{path}.block_sup"))]
    return _wrap(path, Lacunary, freqs, coeffs, n, blocks, sup)


def _parse_kernel(body, path) -> KernelSum:
    _object(body, path, ("type", "w"), ("p", "q", "alpha", "b", "l"))
    w = parse_point(body["w"], f"{path}.w")
    kind = body["type"]
    need = {"K": ("p", "q"), "J": ("p", "alpha", "b"), "L": ("l",), "atom": ("b",)}
    if kind not in need:
        raise DSLError(f"unknown kernel type {kind!r}; expected one of {sorted(need)}", f"{path}.type")
    vals = []
    for key in need[kind]:
        if key not in body:
            raise DSLError(f"kernel {kind} needs field {key!r}", path)
        vals.append(_number(body[key], f"{path}.{key}"))
    fn = {"K": kernel_K, "J": kernel_J, "L": kernel_L, "atom": atom}[kind]
    return _wrap(f"{path}.w", fn, w, *vals)


def _atom_list(items, path):
    coeffs, centers = [], []
    for i, item in enumerate(items):
        ip = f"{path}[{i}]"
        if not isinstance(item, list) or len(item) != 3:
            raise DSLError("atoms are [c_re, c_im, [a coords]]", ip)
        coeffs.append(complex(_number(item[0], f"{ip}[0]"), _number(item[1], f"{ip}[1]")))
        centers.append(parse_point(item[2], f"{ip}[2]"))
    if centers and len({c.size for c in centers}) != 1:
        raise DSLError("atom centers differ in dimension", path)
    return np.array(coeffs, dtype=complex), (np.array(centers) if centers else np.zeros((0, 1), dtype=complex))


def parse_atomic(body, path: str = "atomic") -> AtomicData:
    _object(body, path, ("b", "atoms"), ("n",))
    coeffs, centers = _atom_list(_list(body["atoms"], f"{path}.atoms"), f"{path}.atoms")
    if not len(centers):
        centers = np.zeros((0, int(body.get("n", 1))), dtype=complex)
    return _wrap(path, AtomicData, coeffs, centers, _number(body["b"], f"{path}.b"))


# ---------------------------------------------------------------- spaces and parameters


def parse_params(obj, path: str = "params") -> SpaceParams:
    _object(obj, path, ("n", "p", "q", "s"), ("space", "form"))
    return _wrap(path, SpaceParams, _number(obj["n"], f"{path}.n", integer=True), _number(obj["p"], f"{path}.p"),
                 _number(obj["q"], f"{path}.q"), _number(obj["s"], f"{path}.s"))


_SPACE_FIELDS = {
    "BergmanType": ("l",),
    "Bergman": ("p", "alpha"),
    "Bloch": ("alpha",),
    "WeightedHardy": ("alpha", "beta"),
    "Tent": ("m", "l", "mu_exponent"),
}
_SPACE_CLASSES = {"BergmanType": BergmanType, "Bergman": Bergman, "Bloch": Bloch, "WeightedHardy": WeightedHardy,
                  "Tent": TentSpace}


def parse_space(obj, path: str = "space"):
    if not isinstance(obj, dict) or "space" not in obj:
        raise DSLError("expected an object with a 'space' field", path)
    kind = obj["space"]
    if kind == "N":
        params = parse_params(obj, path)
        return _wrap(f"{path}.form", NSpace, params, obj.get("form", "I1"))
    if kind == "Nstar":
        _object(obj, path, ("space", "n", "p", "q", "s"))
        return _wrap(path, NstarSpace, parse_params(obj, path))
    if kind not in _SPACE_FIELDS:
        raise DSLError(f"unknown space {kind!r}; expected N, Nstar or one of {sorted(_SPACE_FIELDS)}", f"{path}.space")
    fields = _SPACE_FIELDS[kind]
    _object(obj, path, ("space",) + fields, ("n",))
    return _wrap(path, _SPACE_CLASSES[kind], *[_number(obj[k], f"{path}.{k}") for k in fields])


def space_to_dsl(space) -> dict:
    if isinstance(space, NSpace):
        return dict(space.params.to_dict(), space="N", form=space.form)
    if isinstance(space, NstarSpace):
        return dict(space.params.to_dict(), space="Nstar")
    for kind, cls in _SPACE_CLASSES.items():
        if isinstance(space, cls):
            return dict({k: getattr(space, k) for k in _SPACE_FIELDS[kind]}, space=kind)
    raise BallspaceError(f"cannot serialize {space!r}")


# ---------------------------------------------------------------- measures, series, lattices


def parse_measure(obj, path: str = "measure"):
    """{"atoms": [[weight, [coords]], ...]} | {"function": f, "params": {...}} | {"atomic": data, "params": {...}}."""
    if not isinstance(obj, dict):
        raise DSLError("expected an object", path)
    if "atoms" in obj:
        _object(obj, path, ("atoms",), ("n",))
        weights, pts = [], []
        for i, item in enumerate(_list(obj["atoms"], f"{path}.atoms")):
            ip = f"{path}.atoms[{i}]"
            if not isinstance(item, list) or len(item) != 2:
                raise DSLError("atoms are [weight, [coords]]", ip)
            weights.append(_number(item[0], f"{ip}[0]"))
            pts.append(parse_point(item[1], f"{ip}[1]"))
        n = pts[0].size if pts else int(obj.get("n", 1))
        return _wrap(path, DiscreteMeasure, np.array(pts).reshape(-1, n), np.array(weights))
    if "function" in obj:
        _object(obj, path, ("function", "params"))
        return function_measure(parse_function(obj["function"], f"{path}.function"), parse_params(obj["params"], f"{path}.params"))
    if "atomic" in obj:
        _object(obj, path, ("atomic", "params"))
        return atomic_measure(parse_atomic(obj["atomic"], f"{path}.atomic"), parse_params(obj["params"], f"{path}.params"))
    raise DSLError("expected one of 'atoms', 'function', 'atomic'", path)


def parse_series(obj, path: str = "series", p: float | None = None) -> GapSeries:
    """Explicit block data, or a lacunary function whose blocks are measured."""
    if isinstance(obj, dict) and "lacunary" in obj:
        f = parse_function(obj, path)
        if p is None:
            return _wrap(path, GapSeries, tuple(f.freqs), f.block_sup_norms())
        return _wrap(path, GapSeries.from_lacunary, f, p)
    _object(obj, path, ("freqs",), ("sup_norms", "p_means", "mean_order"))
    freqs = [_number(f, f"{path}.freqs[{i}]", integer=True) for i, f in enumerate(_list(obj["freqs"], f"{path}.freqs"))]

    def arr(key):
        if key not in obj:
            return None
        return [_number(v, f"{path}.{key}[{i}]") for i, v in enumerate(_list(obj[key], f"{path}.{key}"))]
    order = obj.get("mean_order")
    order = None if order is None else _number(order, f"{path}.mean_order", positive=True)
    return _wrap(path, GapSeries, tuple(freqs), arr("sup_norms"), arr("p_means"), order)


def series_to_dsl(series: GapSeries) -> dict:
    out = {"freqs": list(series.freqs)}
    if series.sup_norms is not None:
        out["sup_norms"] = series.sup_norms.tolist()
    if series.p_means is not None:
        out["p_means"] = series.p_means.tolist()
        out["mean_order"] = series.mean_order
    return out


def parse_lattice(obj, path: str = "lattice") -> Lattice:
    _object(obj, path, ("r", "radius_cap", "centers"), ("n",))
    centers = [parse_point(c, f"{path}.centers[{i}]") for i, c in enumerate(_list(obj["centers"], f"{path}.centers"))]
    n = centers[0].size if centers else int(obj.get("n", 1))
    return Lattice(n, _number(obj["r"], f"{path}.r", positive=True), _number(obj["radius_cap"], f"{path}.radius_cap"),
                   np.array(centers, dtype=complex).reshape(-1, n))
