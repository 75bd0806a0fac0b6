"""JSON-driven command line.

Exit codes: 0 completed (the verdict is inside the JSON), 2 malformed input,
3 numerical failure, 4 unsupported class.  JSON goes to stdout, a one-line
summary to stderr.
"""
import argparse
import sys

import numpy as np

from . import jsonio as J
from .algebras import commutant_basis, nest_cholesky_factor
from .cpmaps import minimal_stinespring, rn_derivative
from .errors import (CStarError, FactorizationFailed, InputError, NotDominated,
                     NumericalFailure, UnsupportedClass)
from .extremity import (IncomparablePair, KernelWitness, NonDecomposable, OrthogonalPair,
                        cstar_extreme, cstar_extreme_normal, fz_find_certificate,
                        fz_verify_certificate, is_extreme)
from .hardy import subdiagonal_demo, szego_factor
from .instances import random_pd
from .kmapprox import bw_distance_on, error_envelope, km_build, km_step
from .numerics import NumericContext, fro, opnorm

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_UNSUPPORTED = 0, 2, 3, 4


# ------------------------------------------------------------- reports

def witness_to_json(w):
    if w is None:
        return None
    if isinstance(w, KernelWitness):
        return {"type": "kernel_element", "T": J.matrix_to_json(w.T),
                "compression_norm": w.compression_norm}
    if isinstance(w, OrthogonalPair):
        return {"type": "orthogonal_pair", "i": w.i, "j": w.j, "norm": w.norm}
    if isinstance(w, IncomparablePair):
        return {"type": "incomparable_pair", "block": w.block, "i": w.i, "j": w.j,
                "E": J.matrix_to_json(w.E.basis), "F": J.matrix_to_json(w.F.basis)}
    if isinstance(w, NonDecomposable):
        return {"type": "non_decomposable", "residual": w.residual, "reason": w.reason}
    return {"type": type(w).__name__, "repr": repr(w)}


def decomposition_to_json(dec):
    out = {"decomposable": dec.decomposable, "residual": dec.residual, "reason": dec.reason}
    if dec.decomposable:
        out["components"] = [{"block": c.block, "G": J.matrix_to_json(c.G.basis),
                              "multiplicity": c.K.shape[1]} for c in dec.components]
    return out


def report_to_json(report):
    doc = J.document(kind="decision", verdict=report.verdict.value,
                     witness=witness_to_json(report.witness), notes=report.notes)
    data = {}
    for key, val in report.data.items():
        if key == "decomposition":
            data[key] = decomposition_to_json(val)
        elif key == "spec":
            continue
        elif key == "chains":
            data[key] = {str(b): idx for b, idx in val.items()}
        elif key == "m_algebra":
            data["m_algebra_dim"] = val.dim
        elif hasattr(val, "value"):
            data[key] = val.value
        else:
            data[key] = val
    doc["data"] = data
    return doc


# ------------------------------------------------------------ commands

def _ctx(args):
    return NumericContext(eps_rank=args.eps_rank, eps_eq=args.eps_eq, rng_seed=args.seed)


def _load_map(path, ctx, cp=False):
    return J.map_from_json(J.load(path), cp=cp, ctx=ctx)


def cmd_dilate(args, ctx):
    triple = minimal_stinespring(_load_map(args.map, ctx), ctx)
    doc = J.triple_to_json(triple)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(J.dumps(doc) + "\n")
    return doc, f"multiplicities {list(triple.multiplicities)}, H_pi of dimension {triple.rep.total_dim}"


def cmd_commutant(args, ctx):
    triple = minimal_stinespring(_load_map(args.map, ctx), ctx)
    span = commutant_basis(triple.rep, ctx)
    expected = sum(m * m for m in triple.multiplicities)
    doc = J.document(kind="commutant", dimension=span.dim, expected_dimension=expected,
                     multiplicities=list(triple.multiplicities),
                     basis=[J.matrix_to_json(b) for b in span.basis])
    return doc, f"commutant dimension {span.dim}"


def cmd_check_extreme(args, ctx):
    report = is_extreme(_load_map(args.map, ctx), ctx)
    return report_to_json(report), f"extreme: {report.verdict.value}"


def cmd_check_cstar(args, ctx):
    report = cstar_extreme(_load_map(args.map, ctx), ctx)
    return report_to_json(report), f"C*-extreme: {report.verdict.value}"


def cmd_check_cstar_normal(args, ctx):
    v = J.matrix_from_json(J.load(args.isometry), "isometry")
    report = cstar_extreme_normal(v, args.g, args.k, ctx)
    return report_to_json(report), f"C*-extreme: {report.verdict.value}"


def _rn_json(res):
    return {"D": J.matrix_to_json(res.D), "residual": res.residual,
            "uniqueness_gap": res.uniqueness_gap, "min_eig": res.min_eig,
            "max_eig": res.max_eig, "hermitian_residual": res.hermitian_residual}


def cmd_rn(args, ctx):
    phi = _load_map(args.phi, ctx)
    psi = _load_map(args.psi, ctx, cp=args.cp)
    try:
        res = rn_derivative(phi, psi, ctx)
    except NotDominated as exc:
        doc = J.document(kind="radon_nikodym", verdict="false", dominated=False, reason=str(exc))
        if exc.result is not None:
            doc.update(_rn_json(exc.result))
        return doc, f"not dominated: {exc}"
    doc = J.document(kind="radon_nikodym", verdict="true", dominated=True, **_rn_json(res))
    return doc, f"dominated, spectrum of D in [{res.min_eig:.3g}, {res.max_eig:.3g}]"


def cmd_fz_cert(args, ctx):
    triple = minimal_stinespring(_load_map(args.map, ctx), ctx)
    d = J.matrix_from_json(J.load(args.d), "D")
    try:
        cert = fz_find_certificate(triple, d, ctx)
    except FactorizationFailed as exc:
        doc = J.document(kind="fz_certificate", status="factorization_failed",
                         reason=str(exc), evidence=exc.evidence)
        return doc, f"no factorization in the M-algebra: {exc}"
    doc = J.cert_to_json(cert)
    doc["status"] = "ok"
    return doc, f"certificate found, max residual {max(cert.residuals.values()):.3e}"


def cmd_fz_verify(args, ctx):
    triple = minimal_stinespring(_load_map(args.map, ctx), ctx)
    cert = J.cert_from_json(J.load(args.cert))
    ok, res = fz_verify_certificate(triple, cert, ctx)
    doc = J.document(kind="fz_verification", verified=ok, residuals=res)
    return doc, f"certificate {'verified' if ok else 'rejected'}"


def cmd_nest_factor(args, ctx):
    d = J.matrix_from_json(J.load(args.matrix), "matrix")
    nest = J.nest_from_json(J.load(args.nest), ctx)
    fac = nest_cholesky_factor(d, nest, ctx)
    doc = J.document(kind="nest_factor", S=J.matrix_to_json(fac.S), S_inv=J.matrix_to_json(fac.S_inv),
                     residual=fac.residual, membership=fac.membership,
                     inverse_membership=fac.inverse_membership, gaps=nest.gap_dims)
    return doc, f"factored, residual {fac.residual:.3e}"


def cmd_szego(args, ctx):
    sym = J.symbol_from_json(J.load(args.symbol))
    out = szego_factor(sym, args.order, args.tol, ctx)
    doc = J.document(kind="outer_factor", block=sym.block, degree=out.degree,
                     coeffs=[J.matrix_to_json(c) for c in out.coeffs],
                     drift=out.drift, residual=out.residual)
    if out.roots is not None:
        doc["min_root_modulus"] = out.min_root_modulus
    return doc, f"outer factor of degree {out.degree}, drift {out.drift:.3e}"


def cmd_km(args, ctx):
    phi = _load_map(args.map, ctx)
    anchor = _load_map(args.anchor, ctx) if args.anchor else None
    approx = km_build(phi, anchor, ctx)
    gens = (J.test_set_from_json(J.load(args.test_set), phi.algebra) if args.test_set
            else phi.algebra.matrix_units())
    last = approx.size if args.steps is None else args.steps
    steps = []
    for n in range(last + 1):
        comb = km_step(approx, n, ctx)
        psi = comb.map
        steps.append({
            "step": n,
            "distance": bw_distance_on(phi, psi, gens),
            "envelope": max((error_envelope(approx, n, g) for g in gens), default=0.0),
            "unital_residual": fro(psi.image_of_unit() - np.eye(phi.out_dim)),
            "coefficient_residual": comb.coefficient_residual,
            "B_norm": opnorm(approx.B[n]),
        })
    doc = J.document(kind="km_approximation", components=approx.size, dropped=approx.dropped,
                     anchor_verdict=approx.anchor_report.verdict.value, steps=steps)
    return doc, f"{approx.size} components, final distance {steps[-1]['distance']:.3e}"


def cmd_subdiag_demo(args, ctx):
    rng = np.random.default_rng(args.seed)
    x = random_pd(rng, args.n, cond=1e2)
    rep = subdiagonal_demo(args.n, x, ctx)
    doc = J.document(kind="subdiagonal_demo", n=args.n, seed=args.seed, x=J.matrix_to_json(x),
                     z=J.matrix_to_json(rep.z), residuals=rep.residuals,
                     ok=rep.ok(ctx.eps_eq))
    return doc, f"max residual {max(rep.residuals.values()):.3e}"


# --------------------------------------------------------------- parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--eps-rank", type=float, default=1e-10)
    common.add_argument("--eps-eq", type=float, default=1e-8)

    p = argparse.ArgumentParser(prog="cstar", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("dilate", cmd_dilate, "minimal Stinespring triple")
    sp.add_argument("--map", required=True)
    sp.add_argument("--out")
    add("commutant", cmd_commutant, "commutant basis").add_argument("--map", required=True)
    add("check-extreme", cmd_check_extreme, "extreme point test").add_argument("--map", required=True)
    add("check-cstar", cmd_check_cstar, "C*-extremity decision").add_argument("--map", required=True)
    sp = add("check-cstar-normal", cmd_check_cstar_normal, "decision for X -> V*(X (x) I_k)V")
    sp.add_argument("--isometry", required=True)
    sp.add_argument("--g", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp = add("rn", cmd_rn, "Radon-Nikodym derivative of psi with respect to phi")
    sp.add_argument("--phi", required=True)
    sp.add_argument("--psi", required=True)
    sp.add_argument("--cp", action="store_true", help="psi is CP, not necessarily unital")
    sp = add("fz-cert", cmd_fz_cert, "build a factorization certificate")
    sp.add_argument("--map", required=True)
    sp.add_argument("--d", required=True)
    sp = add("fz-verify", cmd_fz_verify, "verify a factorization certificate")
    sp.add_argument("--map", required=True)
    sp.add_argument("--cert", required=True)
    sp = add("nest-factor", cmd_nest_factor, "D = S*S with S, S^-1 in the nest algebra")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--nest", required=True)
    sp = add("szego", cmd_szego, "outer factor of a positive trigonometric symbol")
    sp.add_argument("--symbol", required=True)
    sp.add_argument("--order", type=int, default=128)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp = add("km", cmd_km, "C*-convex approximation by C*-extreme maps")
    sp.add_argument("--map", required=True)
    sp.add_argument("--anchor")
    sp.add_argument("--steps", type=int)
    sp.add_argument("--test-set")
    sp = add("subdiag-demo", cmd_subdiag_demo, "upper-triangular factorization in M_n")
    sp.add_argument("--n", type=int, default=8)
    return p


def _exit_code(exc):
    if isinstance(exc, InputError):
        return EXIT_INPUT
    if isinstance(exc, NumericalFailure):
        return EXIT_NUMERICAL
    if isinstance(exc, UnsupportedClass):
        return EXIT_UNSUPPORTED
    return EXIT_NUMERICAL


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        ctx = _ctx(args)
        doc, summary = args.fn(args, ctx)
    except (CStarError, ValueError, np.linalg.LinAlgError) as exc:
        code = _exit_code(exc) if isinstance(exc, CStarError) else EXIT_INPUT
        if isinstance(exc, np.linalg.LinAlgError):
            code = EXIT_NUMERICAL
        stdout.write(J.dumps(J.document(kind="error", error=type(exc).__name__,
                                        message=str(exc), exit_code=code)) + "\n")
        stderr.write(f"cstar {args.command}: {type(exc).__name__}: {exc}\n")
        return code
    stdout.write(J.dumps(doc) + "\n")
    stderr.write(f"cstar {args.command}: {summary}\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
