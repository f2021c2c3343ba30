"""Command-line front door.

Subcommands: ``validate`` (grade a triple against the admissibility
conditions), ``classify`` (case label from the gcd tower), ``tangent``
(the two-dimensional tangent basis), ``flow`` (trace a deformation path),
``oracle`` (randomized cross-checks of the polynomial solvers against
independent dense solves), ``plot`` (SVG of branch points and roots).

Exit codes: 0 success/pass, 1 validated-false (condition failures or a
non-deformable case), 2 usage/parse error, 3 numerical failure.  Reports
are byte-deterministic: fixed field order and shortest round-trip float
formatting.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .deformation import classify, r_kernel, r_value, tangent_basis
from .errors import NotDeformableError, WhithamError
from .flow import FlowConfig, trace
from .polyring import Polynomial, random_real_section, roots
from .spectral import (
    SpectralTriple,
    ToleranceProfile,
    psi,
    validate,
)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _np_scalar(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"not JSON serializable: {type(x)}")


def _dump(obj, args):
    text = json.dumps(obj, indent=2, default=_np_scalar)
    if getattr(args, "out", None):
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


def _load_triple(path):
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return SpectralTriple.from_json_dict(data)


def _tolerances(args):
    base = ToleranceProfile()
    return ToleranceProfile(
        alg=args.tol_alg if args.tol_alg is not None else base.alg,
        integral=args.tol_int if args.tol_int is not None else base.integral,
        circle=base.circle,
        cluster=args.cluster_radius if args.cluster_radius is not None else base.cluster,
        p8=base.p8,
        equation=base.equation,
    )


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_validate(args):
    path = Path(args.input)
    if path.is_dir():
        return _validate_batch(path, args)
    triple = _load_triple(path)
    report = validate(triple, tol=_tolerances(args), quad_order=args.quad_order)
    _dump(report.to_json_dict(), args)
    return EXIT_PASS if report.verdict else EXIT_FAIL


def _validate_batch(path, args):
    files = sorted(path.glob("*.json"))
    tol = _tolerances(args)

    def one(f):
        try:
            rep = validate(_load_triple(f), tol=tol, quad_order=args.quad_order)
            return f.name, ("pass" if rep.verdict else "fail"), rep.failed()
        except WhithamError as exc:
            return f.name, "numerical-failure", [str(exc)]

    with ThreadPoolExecutor(max_workers=4) as pool:
        rows = list(pool.map(one, files))
    _dump({"results": [{"file": n, "verdict": v, "failed": fl} for n, v, fl in rows]}, args)
    worst = EXIT_PASS
    for _, v, _ in rows:
        if v == "numerical-failure":
            worst = max(worst, EXIT_NUMERICAL)
        elif v == "fail":
            worst = max(worst, EXIT_FAIL)
    return worst


def cmd_classify(args):
    triple = _load_triple(args.input)
    label = classify(triple, cluster_radius=args.cluster_radius or 1e-8)
    fs = label.factors
    _dump(
        {
            "case": label.label,
            "conformal": label.conformal,
            "deformable": label.deformable,
            "degrees": {"F": fs.d_F, "F1": fs.d_1, "F2": fs.d_2, "G": fs.d_G},
            "warnings": list(label.warnings),
        },
        args,
    )
    return EXIT_PASS


def cmd_tangent(args):
    triple = _load_triple(args.input)
    try:
        vectors, gram = tangent_basis(triple)
    except NotDeformableError as exc:
        payload = {"deformable": False, "case": exc.case}
        if exc.indicator is not None:
            payload["case_c_indicator"] = [exc.indicator.real, exc.indicator.imag]
        _dump(payload, args)
        return EXIT_FAIL
    _dump(
        {
            "deformable": True,
            "gram_determinant": gram,
            "vectors": [v.to_json_dict() for v in vectors],
        },
        args,
    )
    return EXIT_PASS


def cmd_flow(args):
    triple = _load_triple(args.input)
    cfg = FlowConfig(
        h=args.dt,
        steps=args.steps,
        params_rule=args.rule,
        quad_order=args.quad_order,
        projection_tol=args.tol_int if args.tol_int is not None else 1e-10,
    )
    samples, status = trace(triple, cfg)
    if args.format == "csv":
        lines = ["t,tau_re,tau_im,residual"]
        for s in samples:
            lines.append(f"{s.t!r},{s.tau.real!r},{s.tau.imag!r},{s.psi_residual!r}")
        text = "\n".join(lines) + "\n"
    else:
        lines = [json.dumps(s.to_json_dict()) for s in samples]
        lines.append(json.dumps({"status": status}))
        text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_PASS if status == "completed" else EXIT_NUMERICAL


# -- randomized oracle suites -------------------------------------------------


def _conv_matrix(p, cols, rows):
    M = np.zeros((rows, cols), dtype=complex)
    for j in range(cols):
        M[j : j + p.coeffs.size, j] = p.coeffs
    return M


def _dense_bezout_x(A, B, C, d):
    """Independent stacked-coefficient solve for the minimal X (oracle
    route; deliberately not the Vandermonde path)."""
    x_len = max(B.degree - d, 1)
    y_len = max(max(A.degree + x_len - 1, C.degree) - B.degree + 1, 1)
    rows = max(A.degree + x_len - 1, B.degree + y_len - 1, C.degree) + 1
    M = np.hstack([_conv_matrix(A, x_len, rows), -_conv_matrix(B, y_len, rows)])
    sol, *_ = np.linalg.lstsq(M, C.padded(rows), rcond=None)
    return Polynomial(sol[:x_len])


def _oracle_bezout(rng, count):
    from .bezout import minimal_solution

    worst = 0.0
    for _ in range(count):
        d_deg = int(rng.integers(0, 3))
        D = (
            Polynomial(rng.standard_normal(d_deg + 1) + 1j * rng.standard_normal(d_deg + 1))
            if d_deg
            else Polynomial.one()
        )
        A = Polynomial(rng.standard_normal(4) + 1j * rng.standard_normal(4)) * D
        B = Polynomial(rng.standard_normal(5) + 1j * rng.standard_normal(5)) * D
        C = Polynomial(rng.standard_normal(4) + 1j * rng.standard_normal(4)) * D
        sol = minimal_solution(A, B, C)
        X_o = _dense_bezout_x(A, B, C, d_deg)
        worst = max(worst, (sol.X - X_o).norm() / max(1.0, X_o.norm()))
    return worst, 1e-8


def _oracle_r_reality(rng, count):
    from .polyring import roots_flat

    worst = 0.0
    for _ in range(count):
        g = int(rng.integers(0, 3))
        alphas = 0.25 + 0.5 * rng.random(g + 1) * np.exp(2j * np.pi * rng.random(g + 1))
        P = Polynomial.one()
        for a in alphas:
            P = P * Polynomial([-a, 1.0]) * Polynomial([1.0, -np.conj(a)])
        t = SpectralTriple(
            g, P, random_real_section(rng, g + 3), random_real_section(rng, g + 3)
        )
        lab = classify(t)
        if lab.label != "a":
            continue
        Q = random_real_section(rng, 2)
        R = r_value(t, Q)
        from .deformation import build_tower

        tw = build_tower(t, lab)
        betas = roots_flat(tw.b2_tilde)
        n = tw.b2_tilde.degree - 1
        rel = (-1.0) ** n * np.prod(betas) * R
        worst = max(worst, abs(np.conj(R) - rel) / max(1.0, abs(R)))
    return worst, 1e-8


def _oracle_kernel(rng, count):
    from .deformation import empdi_operator_matrix

    worst_min = np.inf
    for _ in range(count):
        g = int(rng.integers(0, 6))
        alphas = 0.2 + 0.55 * rng.random(g + 1) * np.exp(2j * np.pi * rng.random(g + 1))
        P = Polynomial.one()
        for a in alphas:
            P = P * Polynomial([-a, 1.0]) * Polynomial([1.0, -np.conj(a)])
        M = empdi_operator_matrix(P, g)
        rn = np.linalg.norm(M, axis=1)
        Ms = M[rn > 0] / rn[rn > 0, None]
        worst_min = min(worst_min, float(np.linalg.svd(Ms, compute_uv=False)[-1]))
    return worst_min, 1e-10


def cmd_oracle(args):
    seed = args.seed if args.seed is not None else int.from_bytes(np.random.bytes(4), "little")
    rng = np.random.default_rng(seed)
    count = args.count
    bez, bez_tol = _oracle_bezout(rng, count)
    rr, rr_tol = _oracle_r_reality(rng, count)
    smin, smin_tol = _oracle_kernel(rng, max(count // 5, 5))
    ok = bez <= bez_tol and rr <= rr_tol and smin > smin_tol
    _dump(
        {
            "seed": seed,
            "count": count,
            "bezout_vs_dense_max_error": bez,
            "r_reality_max_defect": rr,
            "recovery_operator_min_sigma": smin,
            "verdict": "pass" if ok else "fail",
        },
        args,
    )
    return EXIT_PASS if ok else EXIT_FAIL


# -- SVG plot -------------------------------------------------------------------


def _svg_point(z, scale=120.0, cx=300.0, cy=300.0):
    return cx + scale * z.real, cy - scale * z.imag


def cmd_plot(args):
    triple = _load_triple(args.input)
    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="600" height="600" viewBox="0 0 600 600">',
        '<rect width="600" height="600" fill="white"/>',
        '<circle cx="300" cy="300" r="120" fill="none" stroke="#888" stroke-dasharray="4 3"/>',
    ]
    try:
        from .curve import build_curve

        cur = build_curve(triple.P)
        for a, partner in cur.branch_pairs:
            xa, ya = _svg_point(a)
            parts.append(f'<circle cx="{xa:.2f}" cy="{ya:.2f}" r="5" fill="#c22"/>')
            if partner is not None and abs(partner) < 2.4:
                xp, yp = _svg_point(partner)
                parts.append(
                    f'<line x1="{xa:.2f}" y1="{ya:.2f}" x2="{xp:.2f}" y2="{yp:.2f}" '
                    'stroke="#c22" stroke-dasharray="2 2"/>'
                )
                parts.append(f'<rect x="{xp - 4:.2f}" y="{yp - 4:.2f}" width="8" height="8" fill="none" stroke="#c22"/>')
    except WhithamError:
        pass
    for b, color in ((triple.b1, "#26c"), (triple.b2, "#2a2")):
        try:
            for r, _ in roots(b):
                if abs(r) < 2.4:
                    x, y = _svg_point(r)
                    parts.append(
                        f'<circle cx="{x:.2f}" cy="{y:.2f}" r="4" fill="none" stroke="{color}" stroke-width="1.5"/>'
                    )
        except WhithamError:
            pass
    parts.append(
        '<text x="10" y="20" font-size="13" fill="#333">'
        "red: branch pairs (dot inside, square outside) - blue/green: roots of b1/b2</text>"
    )
    parts.append("</svg>")
    text = "\n".join(parts) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_PASS


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(
        prog="whitham",
        description="Spectral triples of harmonic tori: validation, tangent spaces, flows.",
    )
    sub = p.add_subparsers(dest="command")

    def common(sp, needs_input=True):
        if needs_input:
            sp.add_argument("input", help="triple JSON file (or directory for validate)")
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--tol-alg", type=float, default=None, dest="tol_alg")
        sp.add_argument("--tol-int", type=float, default=None, dest="tol_int")
        sp.add_argument("--cluster-radius", type=float, default=None, dest="cluster_radius")
        sp.add_argument("--quad-order", type=int, default=32, dest="quad_order")
        sp.add_argument("--format", default="json", choices=("json", "csv", "svg"))

    sp = sub.add_parser("validate", help="grade a triple against the conditions")
    common(sp)
    sp.set_defaults(fn=cmd_validate)

    sp = sub.add_parser("classify", help="case label (a)-(f) from the gcd tower")
    common(sp)
    sp.set_defaults(fn=cmd_classify)

    sp = sub.add_parser("tangent", help="two-dimensional tangent basis")
    common(sp)
    sp.set_defaults(fn=cmd_tangent)

    sp = sub.add_parser("flow", help="trace a deformation path")
    common(sp)
    sp.add_argument("--steps", type=int, default=10)
    sp.add_argument("--dt", type=float, default=1e-2)
    sp.add_argument("--rule", default="basis0")
    sp.set_defaults(fn=cmd_flow)

    sp = sub.add_parser("oracle", help="randomized solver cross-checks")
    common(sp, needs_input=False)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--count", type=int, default=100)
    sp.set_defaults(fn=cmd_oracle)

    sp = sub.add_parser("plot", help="SVG of branch points and differential roots")
    common(sp)
    sp.set_defaults(fn=cmd_plot)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_PASS
    if not getattr(args, "command", None):
        parser.print_help()
        return EXIT_USAGE
    try:
        return args.fn(args)
    except (json.JSONDecodeError, KeyError, FileNotFoundError, ValueError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_USAGE
    except WhithamError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
