"""Canonical JSON documents for matrices, maps, triples, certificates, nests and symbols.

Output is byte-reproducible: keys sorted, floats printed with 17
significant digits, every document tagged with ``"schema": "cstar/1"``.
"""
import json
import math

import numpy as np

from .algebras import FiniteCStarAlgebra, Nest
from .cpmaps import ucp_from_kraus
from .errors import InputError, ShapeMismatch
from .extremity import FZCertificate
from .hardy import TrigSymbol
from .numerics import DEFAULT_CONTEXT, Subspace

SCHEMA = "cstar/1"


# ------------------------------------------------------------- encoding

def _fmt_float(x):
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    if x == 0.0:
        return "0"  # drop the sign of negative zero
    return format(x, ".17g")


def _encode(obj, out):
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.append(json.dumps(None if obj is None else bool(obj)))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if i:
                out.append(",")
            out.append(json.dumps(str(key)) + ":")
            _encode(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, x in enumerate(obj):
            if i:
                out.append(",")
            _encode(x, out)
        out.append("]")
    elif isinstance(obj, np.ndarray):
        _encode(matrix_to_json(obj), out)
    else:
        raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(doc):
    out = []
    _encode(doc, out)
    return "".join(out)


def document(**fields):
    return {"schema": SCHEMA, **fields}


# ------------------------------------------------------------- matrices

def matrix_to_json(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    return {"rows": a.shape[0], "cols": a.shape[1],
            "data": [[float(z.real), float(z.imag)] for z in a.reshape(-1)]}


def _number(x, what):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ShapeMismatch(f"{what}: expected a number, got {x!r}")
    if not math.isfinite(x):
        raise ShapeMismatch(f"{what}: non-finite value")
    return float(x)


def _count(doc, key, what="document"):
    v = _field(doc, key, what)
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise InputError(f"{what}: '{key}' must be a non-negative integer")
    return v


def _field(doc, key, what="document"):
    if not isinstance(doc, dict) or key not in doc:
        raise InputError(f"{what}: missing field '{key}'")
    return doc[key]


def matrix_from_json(doc, what="matrix"):
    rows, cols = _count(doc, "rows", what), _count(doc, "cols", what)
    data = _field(doc, "data", what)
    if not isinstance(data, list) or len(data) != rows * cols:
        raise ShapeMismatch(f"{what}: data length must be rows*cols = {rows * cols}")
    vals = []
    for pair in data:
        if not isinstance(pair, list) or len(pair) != 2:
            raise ShapeMismatch(f"{what}: entries must be [re, im] pairs")
        vals.append(complex(_number(pair[0], what), _number(pair[1], what)))
    return np.array(vals, dtype=complex).reshape(rows, cols)


def check_schema(doc):
    if not isinstance(doc, dict):
        raise InputError("top-level JSON value must be an object")
    tag = doc.get("schema", SCHEMA)
    if tag != SCHEMA:
        raise InputError(f"unsupported schema {tag!r}")
    return doc


def load(path):
    try:
        with open(path) as fh:
            return check_schema(json.load(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


# ----------------------------------------------------------------- maps

def algebra_to_json(alg):
    return {"blocks": list(alg.block_dims)}


def algebra_from_json(doc):
    blocks = _field(doc, "blocks", "algebra")
    if not isinstance(blocks, list) or not all(isinstance(b, int) and not isinstance(b, bool)
                                               for b in blocks):
        raise InputError("algebra: 'blocks' must be a list of integers")
    return FiniteCStarAlgebra(tuple(blocks))


def map_to_json(phi):
    return document(kind="map", algebra=algebra_to_json(phi.algebra), out_dim=phi.out_dim,
                    kraus=[[matrix_to_json(v) for v in ops] for ops in phi.kraus],
                    unital_residual=phi.unital_residual)


def map_from_json(doc, cp=False, ctx=DEFAULT_CONTEXT):
    """Accepts a map document or a triple document (whose ``map`` field is used)."""
    if isinstance(doc, dict) and doc.get("kind") == "stinespring":
        doc = _field(doc, "map", "triple")
    alg = algebra_from_json(_field(doc, "algebra", "map"))
    out_dim = _count(doc, "out_dim", "map")
    kraus = _field(doc, "kraus", "map")
    if not isinstance(kraus, list) or not all(isinstance(f, list) for f in kraus):
        raise InputError("map: 'kraus' must be a list of lists of matrices")
    ops = [[matrix_from_json(m, "Kraus operator") for m in fam] for fam in kraus]
    return ucp_from_kraus(alg, out_dim, ops, ctx, cp=cp)


def triple_to_json(triple):
    return document(kind="stinespring", map=map_to_json(triple.map),
                    multiplicities=list(triple.multiplicities),
                    total_dim=triple.rep.total_dim, V=matrix_to_json(triple.V),
                    minimal=triple.minimal)


# --------------------------------------------------------- certificates

def cert_to_json(cert):
    return document(kind="fz_certificate", D=matrix_to_json(cert.D), S=matrix_to_json(cert.S),
                    Z=matrix_to_json(cert.Z),
                    U=None if cert.U is None else matrix_to_json(cert.U),
                    D_sqrt=None if cert.D_sqrt is None else matrix_to_json(cert.D_sqrt),
                    residuals=dict(cert.residuals))


def cert_from_json(doc):
    opt = lambda k: None if doc.get(k) is None else matrix_from_json(doc[k], k)
    return FZCertificate(matrix_from_json(_field(doc, "D", "certificate"), "D"),
                         matrix_from_json(_field(doc, "S", "certificate"), "S"),
                         matrix_from_json(_field(doc, "Z", "certificate"), "Z"),
                         U=opt("U"), D_sqrt=opt("D_sqrt"))


# ---------------------------------------------------------------- nests

def nest_to_json(nest):
    return document(kind="nest", ambient_dim=nest.ambient_dim,
                    members=[matrix_to_json(e.basis) for e in nest.chain])


def nest_from_json(doc, ctx=DEFAULT_CONTEXT):
    """``{"gaps": [...]}`` for a coordinate nest, or ``members``: spanning matrices."""
    if "gaps" in doc:
        gaps = doc["gaps"]
        if not isinstance(gaps, list) or not all(isinstance(g, int) for g in gaps):
            raise InputError("nest: 'gaps' must be a list of integers")
        return Nest.coordinate(gaps)
    n = _count(doc, "ambient_dim", "nest")
    members = _field(doc, "members", "nest")
    if not isinstance(members, list):
        raise InputError("nest: 'members' must be a list of matrices")
    subs = []
    for m in members:
        b = matrix_from_json(m, "nest member")
        if b.shape[0] != n:
            raise ShapeMismatch(f"nest member has {b.shape[0]} rows, ambient dimension is {n}")
        subs.append(Subspace.span(b, ctx) if b.size else Subspace.zero(n))
    return Nest.from_subspaces(n, subs, ctx)


# -------------------------------------------------------------- symbols

def symbol_to_json(sym):
    return document(kind="symbol", block=sym.block, degree=sym.degree,
                    coeffs=[matrix_to_json(c) for c in sym.coeffs])


def symbol_from_json(doc):
    coeffs = _field(doc, "coeffs", "symbol")
    if not isinstance(coeffs, list):
        raise InputError("symbol: 'coeffs' must be a list")
    cs = []
    for c in coeffs:
        cs.append(matrix_from_json(c, "symbol coefficient") if isinstance(c, dict)
                  else np.array([[complex(_number(c, "symbol coefficient"))]]))
    sym = TrigSymbol(cs)
    if "degree" in doc and doc["degree"] != sym.degree:
        raise InputError(f"symbol: degree {doc['degree']} but {len(cs)} coefficients")
    if "block" in doc and doc["block"] != sym.block:
        raise InputError(f"symbol: block {doc['block']} but coefficients are {sym.block}-square")
    return sym


# ------------------------------------------------------------ test sets

def element_to_json(a):
    return {"blocks": [matrix_to_json(b) for b in a.blocks]}


def test_set_from_json(doc, algebra):
    elems = _field(doc, "elements", "test set")
    if not isinstance(elems, list):
        raise InputError("test set: 'elements' must be a list")
    return [algebra.element([matrix_from_json(b, "element block")
                             for b in _field(e, "blocks", "element")]) for e in elems]
