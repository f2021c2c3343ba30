"""Spectral triples (P, b1, b2), their admissibility conditions, and the
condition map Psi.

A candidate triple consists of a curve polynomial P (real section of
weight 2g+2) and differential numerators b1, b2 (real sections of weight
g+3) with at most a simple root at zeta = 0.  Membership in the moduli
set additionally requires: no unit-circle roots and only simple roots of
P, vanishing residues over zeta = 0, all periods and the four closing
integrals on the 2*pi*i lattice, real-linearly independent principal
parts, and the product-form scaling normalization of P.

``psi`` collects every one of those numerical conditions into one vector;
``validate`` grades them against a tolerance profile.  The map is
deterministic given the deterministic homology basis; for derivative work
(``d_psi``, Jacobians, Newton projection) the basis geometry and the
scaling's reference coefficient index are frozen in a ``PsiFrame`` so
nearby triples are measured against identical paths.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .curve import (
    Differential,
    build_curve,
    homology_basis,
    integrate_batch,
)
from .errors import (
    CircleRootError,
    DegreeBoundError,
    MultipleRootError,
    RealityViolationError,
    StepSizeError,
    WhithamError,
)
from .polyring import Polynomial, real_defect, roots

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ToleranceProfile:
    """Default thresholds: algebraic identities at 1e-10, integral lattice
    checks at 1e-8 (quadrature error dominates), all CLI-overridable."""

    alg: float = 1e-10
    integral: float = 1e-8
    circle: float = 1e-8
    cluster: float = 1e-8
    p8: float = 1e-10
    equation: float = 1e-9


@dataclass(frozen=True)
class SpectralTriple:
    g: int
    P: Polynomial
    b1: Polynomial
    b2: Polynomial

    def __post_init__(self):
        if self.P.degree > 2 * self.g + 2:
            raise DegreeBoundError("P exceeds weight 2g+2")
        for b in (self.b1, self.b2):
            if b.degree > self.g + 3:
                raise DegreeBoundError("b exceeds weight g+3")

    def weights(self):
        return 2 * self.g + 2, self.g + 3, self.g + 3

    def curve(self, tol=1e-8):
        return build_curve(self.P, tol=tol)

    def differentials(self, curve=None):
        cur = curve if curve is not None else self.curve()
        return Differential(cur, self.b1), Differential(cur, self.b2)

    # -- serialization ----------------------------------------------------

    def to_json_dict(self):
        return {
            "genus": self.g,
            "P": self.P.to_pairs(),
            "b1": self.b1.to_pairs(),
            "b2": self.b2.to_pairs(),
        }

    @staticmethod
    def from_json_dict(d):
        g = int(d["genus"])
        return SpectralTriple(
            g,
            Polynomial.from_pairs(d["P"], bound=2 * g + 2),
            Polynomial.from_pairs(d["b1"], bound=g + 3),
            Polynomial.from_pairs(d["b2"], bound=g + 3),
        )

    @staticmethod
    def from_json(text):
        return SpectralTriple.from_json_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Real coordinate chart
# ---------------------------------------------------------------------------


def pack_section(p, k):
    """Real coordinates of a weight-k real section: k+1 numbers."""
    c = p.padded(k + 1)
    out = []
    for i in range((k + 1) // 2):
        out.extend((c[i].real, c[i].imag))
    if (k + 1) % 2:
        out.append(c[k // 2].real)
    return np.array(out)


def unpack_section(x, k):
    c = np.zeros(k + 1, dtype=complex)
    j = 0
    for i in range((k + 1) // 2):
        c[i] = complex(x[j], x[j + 1])
        c[k - i] = np.conj(c[i])
        j += 2
    if (k + 1) % 2:
        c[k // 2] = x[j]
    return Polynomial(c, bound=k)


def pack_triple(triple):
    """The 4g+11 real coordinates (2g+3 for P, g+4 for each b)."""
    kP, k1, k2 = triple.weights()
    return np.concatenate(
        [
            pack_section(triple.P, kP),
            pack_section(triple.b1, k1),
            pack_section(triple.b2, k2),
        ]
    )


def unpack_triple(x, g):
    kP, kb = 2 * g + 2, g + 3
    nP, nb = kP + 1, kb + 1
    return SpectralTriple(
        g,
        unpack_section(x[:nP], kP),
        unpack_section(x[nP : nP + nb], kb),
        unpack_section(x[nP + nb :], kb),
    )


def chart_dim(g):
    return 4 * g + 11


# ---------------------------------------------------------------------------
# Scaling normalization
# ---------------------------------------------------------------------------


def product_form(curve):
    """The normalized polynomial with the same branch pairs as the curve:
    product of (zeta - a)(1 - conj(a) zeta), with zeta for a pair at 0."""
    out = Polynomial.one()
    for a, partner in curve.branch_pairs:
        if partner is None or abs(a) < 1e-13:
            out = out * Polynomial.zeta()
        else:
            out = out * Polynomial([-a, 1.0]) * Polynomial([1.0, -np.conj(a)])
    return out


def scaling_value(P, curve=None, index=None):
    """Last Psi component: Pi_m / P_m for the product-form Pi.

    At a nonconformal normalized point with m = 0 this is the classical
    prod(-alpha_k) / P_0; the stable index m = argmax |Pi_m| extends it
    across the conformal locus where both of those vanish.
    """
    cur = curve if curve is not None else build_curve(P)
    Pi = product_form(cur)
    if index is None:
        index = int(np.argmax(np.abs(Pi.coeffs)))
    pm = P.coeff(index)
    if pm == 0:
        raise RealityViolationError("scaling reference coefficient of P vanishes")
    return complex(Pi.coeff(index) / pm), index


def normalize(triple, tol=1e-8):
    """Rescale (P, b1, b2) -> (P/lambda^2, b1/lambda, b2/lambda) so P takes
    the product form; the differentials are unchanged as differentials."""
    cur = build_curve(triple.P, tol=tol)
    s, index = scaling_value(triple.P, cur)
    lam2 = 1.0 / s
    if abs(lam2.imag) > 1e-6 * abs(lam2) or lam2.real <= 0:
        raise RealityViolationError(
            f"scaling factor lambda^2 = {lam2:.6g} is not positive real"
        )
    lam = np.sqrt(lam2.real)
    return SpectralTriple(
        triple.g, triple.P / lam2.real, triple.b1 / lam, triple.b2 / lam
    )


# ---------------------------------------------------------------------------
# The condition map Psi
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PsiFrame:
    """Frozen evaluation context: cycle geometry, scaling index, quadrature.

    Psi evaluated in one frame is smooth in the triple's coefficients, so
    finite differences and Newton steps are taken inside a frame.
    Rebuilding a frame ``like`` an old one keeps the cycle assignment
    continuous when branch points have moved (and possibly reordered).
    """

    basis: object
    scaling_index: int
    quad_order: int = 32
    anchors: tuple = ()

    @staticmethod
    def build(triple, quad_order=32, jitter=0.0, like=None):
        cur = build_curve(triple.P)
        anchor = like.anchors if like is not None and like.anchors else None
        basis = homology_basis(cur, jitter=jitter, anchor=anchor)
        _, index = scaling_value(triple.P, cur)
        anchors = tuple(a for a, _ in basis.cuts)
        if like is not None:
            index = like.scaling_index
        return PsiFrame(basis, index, quad_order, anchors)


@dataclass(frozen=True)
class PsiVector:
    """Structured value of the condition map.

    ``periods``: 4g values (A_1..A_g, B_1..B_g for each differential),
    ``closings``: the four closing integrals (gamma+/gamma- per
    differential), ``residues``: both residue-condition values,
    ``scaling``: the normalization ratio (target 1).  Lattice targets are
    the nearest points of 2*pi*i*Z.  The flattening to real components is
    ``real_accounting``; it is finer than strictly necessary (real parts
    of periods vanish automatically on real sections).
    """

    periods: tuple
    closings: tuple
    residues: tuple
    scaling: complex
    labels: tuple
    integration_error: float = 0.0

    @property
    def g(self):
        return len(self.periods) // 4

    @property
    def real_accounting(self):
        n = len(self.periods) + len(self.closings)
        return {
            "lattice_values": 2 * n,
            "residues": 4,
            "scaling": 2,
            "total": 2 * n + 6,
        }

    def lattice_values(self):
        return tuple(self.periods) + tuple(self.closings)

    def lattice_integers(self):
        return tuple(int(np.round(v.imag / TWO_PI)) for v in self.lattice_values())

    def lattice_residuals(self):
        return tuple(
            abs(v - TWO_PI * 1j * m)
            for v, m in zip(self.lattice_values(), self.lattice_integers())
        )

    def max_residual(self):
        parts = list(self.lattice_residuals())
        parts.extend(abs(r) for r in self.residues)
        parts.append(abs(self.scaling - 1.0))
        return max(parts)

    def flatten(self, integers=None):
        """Real residual vector against lattice targets (default: nearest)."""
        vals = self.lattice_values()
        if integers is None:
            integers = self.lattice_integers()
        out = []
        for v, m in zip(vals, integers):
            d = v - TWO_PI * 1j * m
            out.extend((d.real, d.imag))
        for r in self.residues:
            out.extend((r.real, r.imag))
        d = self.scaling - 1.0
        out.extend((d.real, d.imag))
        return np.array(out)

    def to_json_dict(self):
        return {
            "periods": [[v.real, v.imag] for v in self.periods],
            "closings": [[v.real, v.imag] for v in self.closings],
            "residues": [[v.real, v.imag] for v in self.residues],
            "scaling": [self.scaling.real, self.scaling.imag],
            "labels": list(self.labels),
            "lattice_integers": list(self.lattice_integers()),
            "lattice_residuals": list(self.lattice_residuals()),
            "real_accounting": self.real_accounting,
        }


def psi(triple, frame=None, quad_order=None):
    """Assemble all period/closing integrals, residue values and the scaling.

    Component order: A_1..A_g, B_1..B_g of the first differential, the
    same for the second, then gamma+/gamma- of the first and of the
    second, both residue values, and the scaling ratio.
    """
    if frame is None:
        frame = PsiFrame.build(triple, quad_order=quad_order or 32)
    order = quad_order or frame.quad_order
    cur = build_curve(triple.P)
    basis = frame.basis
    numerators = [triple.b1, triple.b2]

    # one sheet-tracked walk per path, shared by both differentials
    per_cycle = [
        integrate_batch(cur, numerators, cyc, order)
        for cyc in basis.period_cycles()
    ]
    per_closing = [
        integrate_batch(cur, numerators, path, order)
        for path in (basis.gamma_plus, basis.gamma_minus)
    ]
    periods = []
    labels = []
    err = 0.0
    for i, tag in ((0, "T1"), (1, "T2")):
        for cyc, res in zip(basis.period_cycles(), per_cycle):
            periods.append(res[i].value)
            labels.append(f"{tag}.{cyc.label}")
            err = max(err, res[i].error)
    closings = []
    for i, tag in ((0, "T1"), (1, "T2")):
        for path, res in zip((basis.gamma_plus, basis.gamma_minus), per_closing):
            closings.append(res[i].value)
            labels.append(f"{tag}.{path.label}")
            err = max(err, res[i].error)
    residues = (
        _residue_value(triple.P, triple.b1),
        _residue_value(triple.P, triple.b2),
    )
    labels.extend(("res.T1", "res.T2"))
    s, _ = scaling_value(triple.P, cur, index=frame.scaling_index)
    labels.append("scaling")
    return PsiVector(tuple(periods), tuple(closings), residues, s, tuple(labels), err)


def _residue_value(P, b):
    return P.coeff(1) * b.coeff(0) - 2.0 * P.coeff(0) * b.coeff(1)


def psi_flat(triple, frame, integers):
    return psi(triple, frame=frame).flatten(integers)


# ---------------------------------------------------------------------------
# Directional derivative and Jacobian (central differences in a frame)
# ---------------------------------------------------------------------------


def _perturbed(triple, direction, h):
    return SpectralTriple(
        triple.g,
        triple.P + h * direction.P_dot,
        triple.b1 + h * direction.b1_dot,
        triple.b2 + h * direction.b2_dot,
    )


def d_psi(triple, direction, h=1e-5, frame=None, quad_order=None):
    """Central-difference directional derivative of Psi.

    Lattice components are differenced raw (their integer targets are
    locally constant).  Raises ``StepSizeError`` when the stepped triples
    leave the admissible set.
    """
    if frame is None:
        frame = PsiFrame.build(triple, quad_order=quad_order or 48)
    try:
        hi = psi(_perturbed(triple, direction, h), frame=frame, quad_order=quad_order)
        lo = psi(_perturbed(triple, direction, -h), frame=frame, quad_order=quad_order)
    except (CircleRootError, MultipleRootError, RealityViolationError) as exc:
        raise StepSizeError(f"step h={h} left the admissible set: {exc}") from exc
    scale = 0.5 / h
    return PsiVector(
        tuple((a - b) * scale for a, b in zip(hi.periods, lo.periods)),
        tuple((a - b) * scale for a, b in zip(hi.closings, lo.closings)),
        tuple((a - b) * scale for a, b in zip(hi.residues, lo.residues)),
        (hi.scaling - lo.scaling) * scale,
        hi.labels,
        max(hi.integration_error, lo.integration_error) / h,
    )


def d_psi_norm(dvec):
    """Euclidean norm of the flattened derivative (targets at zero shift)."""
    out = []
    for v in dvec.lattice_values():
        out.extend((v.real, v.imag))
    for r in dvec.residues:
        out.extend((r.real, r.imag))
    out.extend((dvec.scaling.real, dvec.scaling.imag))
    return float(np.linalg.norm(out))


def psi_jacobian(triple, frame=None, h=1e-6, quad_order=None):
    """Finite-difference Jacobian of the flattened Psi over the real chart.

    Columns are central differences along every one of the 4g+11
    coordinate directions; the kernel of the true derivative on the
    moduli set is two-dimensional.
    """
    if frame is None:
        frame = PsiFrame.build(triple, quad_order=quad_order or 48)
    integers = psi(triple, frame=frame, quad_order=quad_order).lattice_integers()
    x0 = pack_triple(triple)
    g = triple.g
    cols = []
    for j in range(x0.size):
        dx = h * max(1.0, abs(x0[j]))
        xp = x0.copy()
        xp[j] += dx
        xm = x0.copy()
        xm[j] -= dx
        fp = psi_flat(unpack_triple(xp, g), frame, integers)
        fm = psi_flat(unpack_triple(xm, g), frame, integers)
        cols.append((fp - fm) / (2.0 * dx))
    return np.column_stack(cols)


# ---------------------------------------------------------------------------
# Validation report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionCheck:
    name: str
    residual: float
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)
    error: str = ""

    def to_json_dict(self):
        d = {
            "name": self.name,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }
        if self.details:
            d["details"] = self.details
        if self.error:
            d["error"] = self.error
        return d


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple
    verdict: bool

    def check(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed(self):
        return [c.name for c in self.checks if not c.passed]

    def to_json_dict(self):
        return {
            "verdict": "pass" if self.verdict else "fail",
            "checks": [c.to_json_dict() for c in self.checks],
        }


def _margin_check(name, margin, threshold, details):
    """Threshold-type condition: pass iff margin >= threshold; the residual
    is the normalized shortfall (0 when passing)."""
    residual = max(0.0, 1.0 - margin / threshold) if threshold > 0 else 0.0
    return ConditionCheck(
        name, residual, 0.0, margin >= threshold, {**details, "margin": margin}
    )


def validate(triple, tol=None, quad_order=32):
    """Grade every admissibility condition; failures are entries, never
    exceptions (integration failures are recorded per entry)."""
    tol = tol or ToleranceProfile()
    checks = []
    g = triple.g
    kP, kb, _ = triple.weights()

    defect = max(
        real_defect(triple.P, kP) / max(triple.P.norm(), 1e-300),
        real_defect(triple.b1, kb) / max(triple.b1.norm(), 1e-300),
        real_defect(triple.b2, kb) / max(triple.b2.norm(), 1e-300),
    )
    checks.append(
        ConditionCheck("P1_real_sections", defect, tol.alg, defect <= tol.alg)
    )

    # at most a simple root of b^i at zeta = 0
    simple_ok = True
    for name, b in (("b1", triple.b1), ("b2", triple.b2)):
        if b.is_zero or (
            abs(b.coeff(0)) <= tol.alg * b.norm()
            and abs(b.coeff(1)) <= tol.alg * b.norm()
        ):
            simple_ok = False
    checks.append(
        ConditionCheck(
            "U_simple_zero_of_b", 0.0 if simple_ok else 1.0, 0.5, simple_ok
        )
    )

    curve = None
    root_list = None
    try:
        root_list = roots(triple.P)
        margins = [abs(abs(r) - 1.0) for r, _ in root_list]
        checks.append(
            _margin_check(
                "P2_no_circle_roots", min(margins), tol.circle, {"roots": len(margins)}
            )
        )
        seps = [
            abs(r1 - r2)
            for i, (r1, _) in enumerate(root_list)
            for (r2, _) in root_list[i + 1 :]
        ]
        multiple = any(m > 1 for _, m in root_list)
        sep_margin = 0.0 if multiple else (min(seps) if seps else np.inf)
        checks.append(
            _margin_check("P3_simple_roots", sep_margin, tol.cluster, {})
        )
        curve = build_curve(triple.P, tol=tol.circle)
    except WhithamError as exc:
        checks.append(
            ConditionCheck("curve", 1.0, 0.5, False, {}, error=str(exc))
        )

    for i, b in ((1, triple.b1), (2, triple.b2)):
        r = abs(_residue_value(triple.P, b)) / max(
            triple.P.norm() * b.norm(), 1e-300
        )
        checks.append(
            ConditionCheck(f"P4_residue_T{i}", r, tol.alg, r <= tol.alg)
        )

    if curve is not None:
        try:
            vec = psi(triple, frame=PsiFrame.build(triple, quad_order=quad_order))
            vals = vec.lattice_values()
            labels = vec.labels
            for v, lab in zip(vals, labels):
                name = "P6_period" if not lab.split(".")[1].startswith("g") else "P7_closing"
                m = int(np.round(v.imag / TWO_PI))
                r = abs(v - TWO_PI * 1j * m)
                checks.append(
                    ConditionCheck(
                        f"{name}.{lab}",
                        r,
                        tol.integral,
                        r <= tol.integral,
                        {"integer": m, "quad_error": vec.integration_error},
                    )
                )
            s = abs(vec.scaling - 1.0)
            checks.append(
                ConditionCheck("scaling", s, 10 * tol.alg, s <= 10 * tol.alg)
            )
        except WhithamError as exc:
            checks.append(
                ConditionCheck("P6_P7_integrals", 1.0, 0.5, False, {}, error=str(exc))
            )

        margin = _principal_part_margin(triple)
        checks.append(
            _margin_check("P8_independence", margin, tol.p8, {"conformal": _is_conformal(triple)})
        )

    verdict = all(c.passed for c in checks)
    return ValidationReport(tuple(checks), verdict)


def _is_conformal(triple, rel=1e-9):
    return abs(triple.P.coeff(0)) <= rel * max(triple.P.norm(), 1e-300)


def _principal_part_margin(triple):
    """Normalized real-linear independence of the principal parts.

    Over zeta = 0 the principal part of each differential is carried by
    b_m / sqrt(P-data) with m = 0 (unbranched) or m = 1 (branched); the
    pair is independent over R iff Im(conj(b1_m) b2_m) != 0.  The same
    number shows up at infinity by reality; both ends are checked.
    """
    m = 1 if _is_conformal(triple) else 0
    k = triple.g + 3
    margins = []
    for i, j in ((m, m), (k - m, k - m)):
        z1, z2 = triple.b1.coeff(i), triple.b2.coeff(j)
        denom = abs(z1) * abs(z2)
        margins.append(abs(np.imag(np.conj(z1) * z2)) / denom if denom > 0 else 0.0)
    return min(margins)


def conformal_type(triple):
    """tau = b2_m / b1_m with m = 0 (nonconformal) or 1 (conformal)."""
    from .errors import UndefinedConformalTypeError

    m = 1 if _is_conformal(triple) else 0
    denom = triple.b1.coeff(m)
    if abs(denom) == 0.0:
        raise UndefinedConformalTypeError("b1 constant coefficient vanishes")
    return triple.b2.coeff(m) / denom
