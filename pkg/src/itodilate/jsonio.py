"""JSON encoding of models, samples, kernel specs and reports.

Complex numbers are written as ``[re, im]`` pairs; a plain number is accepted
on input.  :func:`dumps` formats every float with 17 significant digits so
that reruns produce byte-identical documents.
"""
from __future__ import annotations

import json
import math
from dataclasses import fields, is_dataclass
from typing import Any

import numpy as np

from .germ import (BirthForm, DilatedForm, GeneratorModel, ScalarPoissonForm, TableForm,
                   table_model)
from .ito_algebra import ItoQuadruple
from .pseudo_poisson import BirthSpec
from .coherent_sim import CoherentFunction, KernelSpec
from .semigroup import FiniteGroup, MatrixBall, StarSemigroup, UnitalNilpotent


class InputError(ValueError):
    """Malformed input document."""


# -- output -------------------------------------------------------------------------

def _float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0:
        return "0.0"
    text = "%.17g" % x
    if "e" not in text and "." not in text and "n" not in text:
        text += ".0"
    return text


def to_jsonable(obj: Any) -> Any:
    """Plain lists, dicts, numbers and strings; complex -> ``[re, im]``."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return to_jsonable(obj.tolist())
        return obj.tolist()
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, ItoQuadruple):
        return encode_quadruple(obj)
    if is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in fields(obj)}
    raise TypeError(f"cannot encode {type(obj).__name__}")


def _depth(obj: Any) -> int:
    """List nesting depth; dicts count as deep so they always break lines."""
    if isinstance(obj, dict):
        return 99
    if isinstance(obj, list):
        return 1 + max((_depth(v) for v in obj), default=0)
    return 0


def _write(obj: Any, out: list, indent: int, level: int) -> None:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
        elif _depth(obj) <= 2:
            out.append("[")
            for i, v in enumerate(obj):
                if i:
                    out.append(", ")
                _write(v, out, indent, level + 1)
            out.append("]")
        else:
            out.append("[")
            for i, v in enumerate(obj):
                out.append(("," if i else "") + pad)
                _write(v, out, indent, level + 1)
            out.append(end + "]")
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            out.append(("," if i else "") + pad + json.dumps(k, ensure_ascii=False) + ": ")
            _write(v, out, indent, level + 1)
        out.append(end + "}")
    else:
        raise TypeError(f"cannot write {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    out: list[str] = []
    _write(to_jsonable(obj), out, indent, 0)
    return "".join(out) + "\n"


# -- input helpers --------------------------------------------------------------------

def parse_complex(value) -> complex:
    if isinstance(value, bool):
        raise InputError("expected a number")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(value[0], value[1])
    raise InputError(f"expected a number or [re, im], got {value!r}")


def _is_scalar(value) -> bool:
    try:
        parse_complex(value)
        return True
    except InputError:
        return False


def parse_array(value, shape: tuple | None = None) -> np.ndarray:
    """Nested lists of numbers or ``[re, im]`` pairs -> complex array."""
    def walk(v):
        if _is_scalar(v):
            return parse_complex(v)
        if isinstance(v, list):
            return [walk(x) for x in v]
        raise InputError(f"malformed array entry {v!r}")

    arr = np.array(walk(value), dtype=complex)
    if shape is not None:
        if arr.size != int(np.prod(shape)):
            raise InputError(f"expected {int(np.prod(shape))} entries, got {arr.size}")
        arr = arr.reshape(shape)
    return arr


def _need(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise InputError(f"{where}: missing field {key!r}")
    return d[key]


# -- semigroups and elements -----------------------------------------------------------

def decode_semigroup(d: dict) -> StarSemigroup:
    kind = _need(d, "kind", "semigroup")
    if kind == "cyclic":
        return FiniteGroup.cyclic(int(_need(d, "m", "cyclic")))
    if kind == "quaternion":
        return FiniteGroup.quaternion()
    if kind == "finite_group":
        return FiniteGroup(_need(d, "cayley", "finite_group"), d.get("star"), d.get("unit"),
                           d.get("labels"), d.get("name", "G"))
    if kind == "matrix_ball":
        return MatrixBall(int(_need(d, "d", "matrix_ball")))
    if kind == "unital_nilpotent":
        structure = parse_array(_need(d, "structure", "unital_nilpotent"))
        star = d.get("star")
        return UnitalNilpotent(structure, None if star is None else parse_array(star))
    raise InputError(f"unknown semigroup kind {kind!r}")


def encode_semigroup(S: StarSemigroup) -> dict:
    if isinstance(S, FiniteGroup):
        if S.name.startswith("Z") and S.name[1:].isdigit():
            return {"kind": "cyclic", "m": S.order}
        if S.name == "Q8":
            return {"kind": "quaternion"}
        return {"kind": "finite_group", "cayley": S.cayley.tolist(), "star": S.star_table.tolist(),
                "unit": S.unit, "labels": S.labels, "name": S.name}
    if isinstance(S, MatrixBall):
        return {"kind": "matrix_ball", "d": S.d}
    if isinstance(S, UnitalNilpotent):
        out = {"kind": "unital_nilpotent", "structure": to_jsonable(S.structure)}
        if S.star_matrix is not None:
            out["star"] = to_jsonable(S.star_matrix)
        return out
    raise TypeError("unsupported semigroup")


def decode_element(S: StarSemigroup, value):
    try:
        if isinstance(S, FiniteGroup):
            if isinstance(value, str):
                if value not in S.labels:
                    raise InputError(f"unknown element label {value!r}")
                return S.labels.index(value)
            if isinstance(value, bool) or not isinstance(value, int):
                raise InputError(f"group elements are indices or labels, got {value!r}")
            return S.validate(value)
        if isinstance(S, MatrixBall):
            return S.validate(parse_array(value).reshape(S.d, S.d) if not _is_scalar(value)
                              else parse_complex(value))
        return S.validate(parse_array(value))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(str(exc)) from None


def encode_element(S: StarSemigroup, y):
    if isinstance(S, FiniteGroup):
        return int(y)
    return to_jsonable(np.asarray(y))


def decode_sample(S: StarSemigroup, doc) -> list:
    items = doc.get("elements") if isinstance(doc, dict) else doc
    if not isinstance(items, list) or not items:
        raise InputError("sample must be a nonempty list of elements")
    return [decode_element(S, v) for v in items]


# -- quadruples, forms and models ------------------------------------------------------

def encode_quadruple(a: ItoQuadruple) -> dict:
    return {"n": a.n_modes, "exchange": to_jsonable(a.exchange),
            "creation": to_jsonable(a.creation), "annihilation": to_jsonable(a.annihilation),
            "scalar": to_jsonable(a.scalar)}


def decode_quadruple(d: dict, n: int | None = None) -> ItoQuadruple:
    n = int(d.get("n", n if n is not None else 0))
    try:
        return ItoQuadruple(parse_array(_need(d, "exchange", "quadruple"), (n, n)),
                            parse_array(_need(d, "creation", "quadruple"), (n,)),
                            parse_array(_need(d, "annihilation", "quadruple"), (n,)),
                            parse_complex(_need(d, "scalar", "quadruple")))
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(str(exc)) from None


def decode_birth_spec(d: dict) -> BirthSpec:
    dim = int(_need(d, "d", "birth spec"))
    K = int(_need(d, "K_max", "birth spec"))
    try:
        sigma = [parse_array(v).reshape(-1) for v in _need(d, "sigma", "birth spec")]
        modes = [[parse_array(v).reshape(-1) for v in row] for row in d.get("sigma_modes", [])]
        kappa_modes = parse_array(d.get("kappa_modes", [])).reshape(-1) if d.get("kappa_modes") \
            else np.zeros(len(modes), dtype=complex)
        kappa = parse_complex(d.get("kappa", 0.0))
        if kappa.imag:
            raise InputError("kappa must be real")
        return BirthSpec(dim, K, sigma, modes, kappa.real, kappa_modes)
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(str(exc)) from None


def encode_birth_spec(spec: BirthSpec) -> dict:
    return {"d": spec.d, "K_max": spec.K_max,
            "sigma": [to_jsonable(s) for s in spec.sigma],
            "sigma_shapes": [[spec.d] * k for k in range(1, spec.K_max + 1)],
            "sigma_modes": [[to_jsonable(s) for s in row] for row in spec.sigma_modes],
            "kappa": spec.kappa, "kappa_modes": to_jsonable(spec.kappa_modes)}


def _scalar_function(S: StarSemigroup, spec, name: str):
    if _is_scalar(spec):
        value = parse_complex(spec)
        return lambda y: value
    if isinstance(spec, list):
        table = {}
        for entry in spec:
            table[S.key(decode_element(S, _need(entry, "element", name)))] = \
                parse_complex(_need(entry, "value", name))
        return table
    raise InputError(f"{name} must be a constant or a list of element/value entries")


def decode_model(doc: dict) -> GeneratorModel:
    S = decode_semigroup(_need(doc, "semigroup", "model"))
    n = int(doc.get("n_modes", 0))
    form = _need(doc, "form", "model")
    kind = _need(form, "type", "form")
    try:
        if kind == "table":
            entries = []
            for e in _need(form, "entries", "table form"):
                y = decode_element(S, _need(e, "element", "table entry"))
                if "germ" in e:
                    entries.append((y, parse_array(e["germ"], (n + 1, n + 1))))
                else:
                    entries.append((y, decode_quadruple(_need(e, "quadruple", "table entry"), n)))
            return table_model(S, n, entries)
        if kind == "dilated":
            K = int(_need(form, "K_dim", "dilated form"))
            j, k, l = {}, {}, {}
            for e in _need(form, "entries", "dilated form"):
                key = S.key(decode_element(S, _need(e, "element", "dilated entry")))
                j[key] = parse_array(_need(e, "j", "dilated entry"), (K, K))
                k[key] = parse_array(_need(e, "k", "dilated entry"), (K,))
                l[key] = parse_complex(_need(e, "l", "dilated entry"))
            dform = DilatedForm(float(_need(form, "d", "dilated form")), j, k, l,
                                parse_array(_need(form, "L_circ", "dilated form"), (K, n)),
                                parse_array(_need(form, "L_minus", "dilated form"), (n,)))
            return GeneratorModel(S, n, dform)
        if kind == "birth":
            return GeneratorModel(S, n, BirthForm(decode_birth_spec(_need(form, "spec", "birth form"))))
        if kind == "scalar_poisson":
            return GeneratorModel(S, 0, ScalarPoissonForm(
                _scalar_function(S, _need(form, "alpha", "scalar form"), "alpha"),
                _scalar_function(S, _need(form, "lambda", "scalar form"), "lambda")))
    except InputError:
        raise
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from None
    raise InputError(f"unknown model form {kind!r}")


def encode_model(model: GeneratorModel, elements=None) -> dict:
    """Model document; Table/Dilated tables are written over ``elements`` (group by default)."""
    S = model.semigroup
    if elements is None and isinstance(S, FiniteGroup):
        elements = S.elements()
    form = model.form
    doc = {"semigroup": encode_semigroup(S), "n_modes": model.n_modes}
    if isinstance(form, TableForm):
        doc["form"] = {"type": "table", "entries": [
            {"element": encode_element(S, y), "quadruple": encode_quadruple(model.alpha(y))}
            for y in elements]}
    elif isinstance(form, DilatedForm):
        doc["form"] = {"type": "dilated", "d": form.d, "K_dim": form.K_dim,
                       "L_circ": to_jsonable(form.L_circ), "L_minus": to_jsonable(form.L_minus),
                       "entries": [{"element": encode_element(S, y),
                                    "j": to_jsonable(form.j[S.key(y)]),
                                    "k": to_jsonable(form.k[S.key(y)]),
                                    "l": to_jsonable(form.l[S.key(y)])} for y in elements]}
    elif isinstance(form, BirthForm):
        doc["form"] = {"type": "birth", "spec": encode_birth_spec(form.spec)}
    else:
        alpha, lam = model.scalar_functions()
        doc["form"] = {"type": "scalar_poisson",
                       "alpha": [{"element": encode_element(S, y), "value": to_jsonable(alpha(y))}
                                 for y in elements],
                       "lambda": [{"element": encode_element(S, y), "value": to_jsonable(lam(y))}
                                  for y in elements]}
    return doc


# -- kernel specs ---------------------------------------------------------------------

def decode_coherent(d, n: int) -> CoherentFunction:
    if isinstance(d, list):
        return CoherentFunction.constant(parse_array(d, (n,)))
    segs = []
    for seg in d.get("segments", []):
        if not isinstance(seg, list) or len(seg) != 2:
            raise InputError("segments are [duration, value] pairs")
        segs.append((float(seg[0]), parse_array(seg[1], (n,))))
    try:
        return CoherentFunction(tuple(segs), parse_array(d.get("tail", [0.0] * n), (n,)))
    except ValueError as exc:
        raise InputError(str(exc)) from None


def encode_coherent(f: CoherentFunction) -> dict:
    return {"segments": [[dur, to_jsonable(v)] for dur, v in f.segments],
            "tail": to_jsonable(f.tail)}


def decode_kernel_spec(doc: dict, model: GeneratorModel) -> KernelSpec:
    S, n = model.semigroup, model.n_modes
    pairs = [(decode_coherent(_need(p, "f", "pair"), n), decode_element(S, _need(p, "y", "pair")))
             for p in _need(doc, "pairs", "kernel spec")]
    try:
        return KernelSpec(float(_need(doc, "t", "kernel spec")), pairs)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def encode_kernel_spec(spec: KernelSpec, S: StarSemigroup) -> dict:
    return {"t": spec.t, "pairs": [{"f": encode_coherent(f), "y": encode_element(S, y)}
                                   for f, y in spec.pairs]}
