"""Whitham tangent vectors: case analysis and the polynomial linear systems.

A period-preserving infinitesimal deformation (P-dot, b1-dot, b2-dot) of a
triple is encoded by a pair of polynomials (c1, c2) of weight g+1 and a
real quadratic Q tied together by

    b1 * c2 - b2 * c1 = Q * P,

and by the pair of identities (one per differential, chat = (zeta^2-1)*c)

    P-dot * b - 2 P * b-dot = 2 P (chat - zeta*chat') + P' * zeta * chat.

Common factors between P, b1, b2 (the gcd tower F, F1, F2, G) both
obstruct and shape the solutions; the deformable cases are

    (a) gcd(b1,b2) = 1, nonconformal: Q ranges over the 2-plane ker R
        inside the real quadratics,
    (b) G = gcd(b1,b2) of degree 1 or 2 not dividing P: Q = G*Q-tilde,
    (e) conformal (P_0 = 0) with gcd(b1,b2) = zeta: Q = Q_1*zeta.

Cases (c), (d), (f) admit no construction here; (c) carries a scalar
obstruction value that is computed and reported.

Construction pipeline: solve the reduced Q-equation for (c1, c2) at the
case's parameter choice, feed them into the two reduced identities, solve
each by the confluent-Vandermonde machinery, reconcile the two P-dot
families on the common-solution line, and finally fix the rescaling
freedom (P-dot, b-dot) -> (P-dot + 2sP, b-dot + s b) by requiring the
derivative of the scaling normalization to vanish (plus, at conformal
points, the residue-derivative condition that pins s_0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bezout import minimal_solution, realify
from .curve import build_curve
from .errors import (
    DegenerateKernelError,
    InternalInconsistencyError,
    NotDeformableError,
    RealityViolationError,
    SingularOperatorError,
)
from .polyring import (
    FactorStructure,
    Polynomial,
    factor_structure,
    real_defect,
    real_section_scale,
    symmetrize,
)
from .spectral import pack_section, product_form, unpack_section

EQUATION_RTOL = 1e-9
CONFORMAL_RTOL = 1e-9


# ---------------------------------------------------------------------------
# Data containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CaseLabel:
    label: str  # one of a, b, c, d, e, f
    conformal: bool
    factors: FactorStructure
    warnings: tuple = ()

    @property
    def deformable(self):
        return self.label in ("a", "b", "e")


@dataclass(frozen=True)
class CaseAParams:
    """Q in the real quadratics with R(Q) = 0."""

    Q: Polynomial

    def scaled(self, t):
        return CaseAParams(self.Q * t)


@dataclass(frozen=True)
class CaseBLinearParams:
    """Q-tilde in the weight-1 real sections (Q = G * Q-tilde)."""

    Q_tilde: Polynomial

    def scaled(self, t):
        return CaseBLinearParams(self.Q_tilde * t)


@dataclass(frozen=True)
class CaseBQuadParams:
    """(Q-tilde, r) real numbers: Q = q*G, plus r along (b1-tilde, b2-tilde)."""

    q: float
    r: float

    def scaled(self, t):
        return CaseBQuadParams(self.q * t, self.r * t)


@dataclass(frozen=True)
class CaseEParams:
    """(Q_1, r) real numbers at a conformal point: Q = Q_1 * zeta."""

    q1: float
    r: float

    def scaled(self, t):
        return CaseEParams(self.q1 * t, self.r * t)


@dataclass(frozen=True)
class TangentVector:
    P_dot: Polynomial
    b1_dot: Polynomial
    b2_dot: Polynomial
    params: object
    c1: Polynomial
    c2: Polynomial
    Q: Polynomial
    residuals: dict = field(default_factory=dict)
    warnings: tuple = ()

    def norm(self):
        return float(
            np.sqrt(
                self.P_dot.norm() ** 2
                + self.b1_dot.norm() ** 2
                + self.b2_dot.norm() ** 2
            )
        )

    def scaled(self, t):
        return TangentVector(
            self.P_dot * t,
            self.b1_dot * t,
            self.b2_dot * t,
            self.params.scaled(t) if self.params is not None else None,
            self.c1 * t,
            self.c2 * t,
            self.Q * t,
            dict(self.residuals),
            self.warnings,
        )

    def to_json_dict(self):
        return {
            "P_dot": self.P_dot.to_pairs(),
            "b1_dot": self.b1_dot.to_pairs(),
            "b2_dot": self.b2_dot.to_pairs(),
            "Q": self.Q.to_pairs(),
            "c1": self.c1.to_pairs(),
            "c2": self.c2.to_pairs(),
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "warnings": list(self.warnings),
        }


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


def is_conformal(triple, rel=CONFORMAL_RTOL):
    return abs(triple.P.coeff(0)) <= rel * max(triple.P.norm(), 1e-300)


def classify(triple, cluster_radius=1e-8):
    """Case label from the gcd tower and the conformality of P.

    Nonconformal: (a) F = G = 1; (b) F = 1, deg G in {1, 2}; (c) deg F = 2,
    G = 1; (d) anything larger.  Conformal: (e) F = zeta with G = 1;
    everything else is (f) (no deformations exist there even when
    deg F*G <= 2).
    """
    fs = factor_structure(triple.P, triple.b1, triple.b2, cluster_radius)
    warnings = tuple(
        f"borderline gcd cluster: |{r1:.4g} - {r2:.4g}| = {d:.2e}"
        for r1, r2, d in fs.borderline
    )
    dF, dG = fs.d_F, fs.d_G
    if is_conformal(triple):
        zeta_factor = dF == 1 and abs(fs.F.coeff(0)) <= 1e-8
        label = "e" if (zeta_factor and dG == 0) else "f"
    elif dF == 0 and dG == 0:
        label = "a"
    elif dF == 0 and dG in (1, 2):
        label = "b"
    elif dF == 2 and dG == 0:
        label = "c"
    else:
        label = "d"
        if dF % 2 == 1:
            warnings = warnings + (
                f"odd deg F = {dF} is impossible for exact real sections",
            )
    return CaseLabel(label, is_conformal(triple), fs, warnings)


# ---------------------------------------------------------------------------
# Real-normalized towers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Tower:
    """Factor tower with every factor rescaled to a real section, so that
    quotients and the reduced equations stay inside the real sections.
    In the conformal case the zeta factor of F is split off and G must be
    trivial."""

    conformal: bool
    F: Polynomial  # without the zeta factor in the conformal case
    F1: Polynomial
    F2: Polynomial
    G: Polynomial
    P_tilde: Polynomial
    b1_tilde: Polynomial
    b2_tilde: Polynomial

    @property
    def d1(self):
        return self.F1.degree

    @property
    def d2(self):
        return self.F2.degree

    def btilde(self, i):
        return self.b1_tilde if i == 1 else self.b2_tilde

    def Fi(self, i):
        return self.F1 if i == 1 else self.F2


def _real_factor(p):
    """Gcd factors arrive monic; rotate them onto the real sections so all
    quotients in the tower stay real.  Constants collapse to 1."""
    if p.degree <= 0:
        return Polynomial.one()
    q, _ = real_section_scale(p)
    return q


def build_tower(triple, label=None, cluster_radius=1e-8):
    lab = label if label is not None else classify(triple, cluster_radius)
    fs = lab.factors
    conformal = lab.conformal
    if conformal:
        if lab.label != "e":
            raise NotDeformableError("conformal tower requires case (e)", case=lab.label)
        zeta = Polynomial.zeta()
        F1 = _real_factor(fs.F1)
        F2 = _real_factor(fs.F2)
        P_tilde = triple.P.deflate(zeta * F1 * F2)
        b1_tilde = triple.b1.deflate(zeta * F1)
        b2_tilde = triple.b2.deflate(zeta * F2)
        return Tower(True, Polynomial.one(), F1, F2, Polynomial.one(), P_tilde, b1_tilde, b2_tilde)
    F = _real_factor(fs.F)
    F1 = _real_factor(fs.F1)
    F2 = _real_factor(fs.F2)
    G = _real_factor(fs.G)
    P_tilde = triple.P.deflate(F * F1 * F2)
    b1_tilde = triple.b1.deflate(F * F1 * G)
    b2_tilde = triple.b2.deflate(F * F2 * G)
    return Tower(False, F, F1, F2, G, P_tilde, b1_tilde, b2_tilde)


# ---------------------------------------------------------------------------
# The R function and its kernel
# ---------------------------------------------------------------------------

_QUAD_BASIS = (
    Polynomial([1.0, 0.0, 1.0]),
    Polynomial([1j, 0.0, -1j]),
    Polynomial([0.0, 1.0, 0.0]),
)


def r_value(triple, Q, tower=None):
    """Leading (degree g+2-d2) coefficient of the minimal interpolant of the
    reduced Q-equation; linear in Q.  Vanishing of R makes the solution
    degree drop to the deformation degree."""
    tw = tower if tower is not None else build_tower(triple)
    return _r_last_coefficient(tw.b1_tilde, tw.b2_tilde, Q * tw.P_tilde)


def _r_last_coefficient(A, B, C):
    if B.degree < 1:
        raise DegenerateKernelError("b2-tilde is degenerate (degree < 1); R undefined")
    sol = minimal_solution(A, B, C, known_gcd=Polynomial.one())
    x = sol.x_raw
    return complex(x[-1]) if x.size else 0.0 + 0.0j


def r_kernel(triple, tower=None, rank_rtol=1e-10):
    """Orthonormal basis (in real coordinates) of the 2-plane of real
    quadratics with R(Q) = 0.

    The reality relation conj(R) = (-1)^n (prod beta_i) R forces the real
    rank of R on the quadratics to be at most 1; a numerical rank other
    than 1 yields a degeneracy error, never a fabricated basis.
    """
    tw = tower if tower is not None else build_tower(triple)
    M = np.zeros((2, 3))
    for j, e in enumerate(_QUAD_BASIS):
        val = r_value(triple, e, tw)
        M[0, j] = val.real
        M[1, j] = val.imag
    U, s, Vt = np.linalg.svd(M)
    scale = max(s[0], 1e-300)
    rank = int(np.sum(s > rank_rtol * scale)) if s[0] > 1e-14 else 0
    if rank != 1:
        raise DegenerateKernelError(
            f"R on the real quadratics has numerical rank {rank}, expected 1 "
            f"(singular values {s})"
        )
    out = []
    for row in Vt[1:]:
        Q = sum((float(cj) * e for cj, e in zip(row, _QUAD_BASIS)), Polynomial.zero())
        out.append(Q)
    for Q in out:
        if abs(r_value(triple, Q, tw)) > 1e-8 * scale * max(1.0, Q.norm()):
            raise DegenerateKernelError("kernel candidate fails R(Q) = 0 re-evaluation")
    return tuple(out)


def case_c_indicator(triple, tower=None):
    """The scalar whose vanishing would allow case-(c) deformations: the
    leading coefficient of the minimal solution of the reduced equation
    with right-hand side P-tilde (i.e. R evaluated at Q = F)."""
    lab = classify(triple)
    fs = lab.factors
    F = _real_factor(fs.F)
    F1, F2 = _real_factor(fs.F1), _real_factor(fs.F2)
    P_tilde = triple.P.deflate(F * F1 * F2)
    b1_tilde = triple.b1.deflate(F * F1)
    b2_tilde = triple.b2.deflate(F * F2)
    return _r_last_coefficient(b1_tilde, b2_tilde, P_tilde)


# ---------------------------------------------------------------------------
# The reduced Q-equation
# ---------------------------------------------------------------------------


def solve_q_equation(triple, params, tower=None, label=None):
    """Construct (c1, c2, Q) for the given case parameters.

    Returns (c1, c2, Q, info) where info carries the consistency residual
    of b1*c2 - b2*c1 = Q*P.  Raises ``NotDeformableError`` in cases
    (c)/(d)/(f) and a precondition error when a case-(a) Q has R(Q) != 0.
    """
    lab = label if label is not None else classify(triple)
    if not lab.deformable:
        indicator = None
        if lab.label == "c":
            indicator = case_c_indicator(triple)
        raise NotDeformableError(
            f"case ({lab.label}) admits no deformation construction",
            case=lab.label,
            indicator=indicator,
        )
    tw = tower if tower is not None else build_tower(triple, lab)
    g = triple.g
    d1, d2 = tw.d1, tw.d2
    dG = tw.G.degree

    if isinstance(params, CaseAParams):
        if lab.label != "a":
            raise ValueError(f"case-(a) parameters passed to a case-({lab.label}) triple")
        Q = params.Q
        if real_defect(Q, 2) > 1e-8 * max(1.0, Q.norm()):
            raise RealityViolationError("Q is not a real quadratic section")
        C = Q * tw.P_tilde
        a_w, b_w = g + 3 - d1, g + 3 - d2
        c_w = 2 * g + 4 - d1 - d2
        sol = minimal_solution(tw.b1_tilde, tw.b2_tilde, C, known_gcd=Polynomial.one())
        x = sol.x_raw
        top = abs(x[-1]) if x.size else 0.0
        scale = max(1.0, float(np.linalg.norm(x)) if x.size else 0.0)
        if top > 1e-8 * scale:
            raise RealityViolationError(
                f"R(Q) = {x[-1]:.3e} does not vanish; Q is outside the kernel"
            )
        c2t = symmetrize(Polynomial(x[:-1]) if x.size > 1 else Polynomial.zero(), c_w - a_w)
        c1t, rem = (tw.b1_tilde * c2t - C).divmod(tw.b2_tilde)
        rem_rel = rem.norm() / max(C.norm(), 1.0)
        c1 = tw.F1 * c1t
        c2 = tw.F2 * c2t
        Q_full = Q
    elif isinstance(params, CaseBLinearParams):
        if lab.label != "b" or dG != 1:
            raise ValueError("linear-G parameters need case (b) with deg G = 1")
        Qt = params.Q_tilde
        if real_defect(Qt, 1) > 1e-8 * max(1.0, Qt.norm()):
            raise RealityViolationError("Q-tilde is not a weight-1 real section")
        C = Qt * tw.P_tilde
        sol = minimal_solution(tw.b1_tilde, tw.b2_tilde, C, known_gcd=Polynomial.one())
        c2t, c1t = sol.X, sol.Y
        rem_rel = sol.residual
        c1 = tw.F1 * c1t
        c2 = tw.F2 * c2t
        Q_full = tw.G * Qt
    elif isinstance(params, CaseBQuadParams):
        if lab.label != "b" or dG != 2:
            raise ValueError("quadratic-G parameters need case (b) with deg G = 2")
        a_w, b_w = g + 1 - d1, g + 1 - d2
        c_w = 2 * g + 2 - d1 - d2
        C = tw.P_tilde * float(params.q)
        sol = minimal_solution(tw.b1_tilde, tw.b2_tilde, C, known_gcd=Polynomial.one())
        sol = realify(tw.b1_tilde, tw.b2_tilde, C, a_w, b_w, c_w, sol)
        c2t = sol.X + float(params.r) * tw.b2_tilde
        c1t = sol.Y + float(params.r) * tw.b1_tilde
        rem_rel = sol.residual
        c1 = tw.F1 * c1t
        c2 = tw.F2 * c2t
        Q_full = tw.G * float(params.q)
    elif isinstance(params, CaseEParams):
        if lab.label != "e":
            raise ValueError("case-(e) parameters need a conformal case-(e) triple")
        a_w, b_w = g + 1 - d1, g + 1 - d2
        c_w = 2 * g + 2 - d1 - d2
        C = Polynomial.zeta() * tw.P_tilde * float(params.q1)
        sol = minimal_solution(tw.b1_tilde, tw.b2_tilde, C, known_gcd=Polynomial.one())
        sol = realify(tw.b1_tilde, tw.b2_tilde, C, a_w, b_w, c_w, sol)
        c2t = sol.X + float(params.r) * tw.b2_tilde
        c1t = sol.Y + float(params.r) * tw.b1_tilde
        rem_rel = sol.residual
        c1 = tw.F1 * c1t
        c2 = tw.F2 * c2t
        Q_full = Polynomial([0.0, float(params.q1)])
    else:
        raise TypeError(f"unrecognized deformation parameters: {params!r}")

    q_res = (triple.b1 * c2 - triple.b2 * c1 - Q_full * triple.P).norm() / max(
        (Q_full * triple.P).norm(), triple.b1.norm() * max(c2.norm(), 1e-300), 1e-300
    )
    info = {"q_identity": float(q_res), "solve_residual": float(rem_rel)}
    return c1, c2, Q_full, info


# ---------------------------------------------------------------------------
# The deformation identities
# ---------------------------------------------------------------------------


def _empdi_rhs(P, chat):
    """2P(chat - zeta chat') + P' zeta chat."""
    zeta = Polynomial.zeta()
    return 2.0 * P * (chat - zeta * chat.derivative()) + P.derivative() * zeta * chat


def _empdi_residual(triple, v, i):
    b = triple.b1 if i == 1 else triple.b2
    b_dot = v.b1_dot if i == 1 else v.b2_dot
    c = v.c1 if i == 1 else v.c2
    chat = Polynomial([-1.0, 0.0, 1.0]) * c
    lhs = v.P_dot * b - 2.0 * triple.P * b_dot
    rhs = _empdi_rhs(triple.P, chat)
    scale = max(lhs.norm(), rhs.norm(), triple.P.norm() * b.norm() * 1e-6, 1e-300)
    return (lhs - rhs).norm() / scale


def _residue_tangent_residual(triple, v, i):
    b = triple.b1 if i == 1 else triple.b2
    b_dot = v.b1_dot if i == 1 else v.b2_dot
    val = (
        v.P_dot.coeff(1) * b.coeff(0)
        + triple.P.coeff(1) * b_dot.coeff(0)
        - 2.0 * v.P_dot.coeff(0) * b.coeff(1)
        - 2.0 * triple.P.coeff(0) * b_dot.coeff(1)
    )
    scale = max(
        v.P_dot.norm() * b.norm() + triple.P.norm() * b_dot.norm(), 1e-300
    )
    return abs(val) / scale


def _scaling_shift(triple, P_dot):
    """The real rescale parameter t killing the scaling-normalization
    derivative along (P_dot + 2tP, ...).

    Uses d/dt of the product-form coefficients: alpha_k moves by
    -P_dot(alpha_k)/P'(alpha_k), and the reference index is the largest
    product-form coefficient (stable across the conformal locus).
    """
    cur = build_curve(triple.P)
    Pi = product_form(cur)
    dP = triple.P.derivative()
    terms = Polynomial.zero()
    for k, (a, partner) in enumerate(cur.branch_pairs):
        a_dot = -P_dot(a) / dP(a)
        rest = Polynomial.one()
        for j, (a2, p2) in enumerate(cur.branch_pairs):
            if j == k:
                continue
            if p2 is None or abs(a2) < 1e-13:
                rest = rest * Polynomial.zeta()
            else:
                rest = rest * Polynomial([-a2, 1.0]) * Polynomial([1.0, -np.conj(a2)])
        dpair = Polynomial([-a_dot, 0.0]) * Polynomial([1.0, -np.conj(a)]) + Polynomial(
            [-a, 1.0]
        ) * Polynomial([0.0, -np.conj(a_dot)])
        terms = terms + dpair * rest
    m = int(np.argmax(np.abs(Pi.coeffs)))
    Pm = triple.P.coeff(m)
    t = (Pm * terms.coeff(m) - P_dot.coeff(m) * Pi.coeff(m)) / (2.0 * Pm * Pi.coeff(m))
    return float(t.real), float(abs(t.imag))


def solve_empdi(triple, c1, c2, Q, params=None, tower=None, label=None):
    """Solve both deformation identities for a common (P-dot, b1-dot, b2-dot).

    The two reduced Bezout problems are solved independently, their P-dot
    solution families reconciled by a dense least-squares over the small
    real parameter polynomials (r, s), and the leftover rescaling freedom
    fixed by the scaling-derivative condition (at conformal points the
    residue-derivative condition first pins the constant part s_0, after
    which the second differential's condition holds automatically).
    """
    lab = label if label is not None else classify(triple)
    if not lab.deformable:
        raise NotDeformableError(
            f"case ({lab.label}) admits no deformation construction", case=lab.label
        )
    tw = tower if tower is not None else build_tower(triple, lab)
    g = triple.g
    warnings = []

    zeta = Polynomial.zeta()
    zeta2m1 = Polynomial([-1.0, 0.0, 1.0])
    chat = (zeta2m1 * c1, zeta2m1 * c2)
    dP = triple.P.derivative()

    sols = []
    hom = []
    for i in (1, 2):
        j = 2 if i == 1 else 1
        Fj = tw.Fi(j)
        bt = tw.btilde(i)
        ci = c1 if i == 1 else c2
        if tw.conformal:
            ct = ci.deflate(tw.Fi(i))
            A = bt
            B = 2.0 * Fj * tw.P_tilde
            C = B * (chat[i - 1] - zeta * chat[i - 1].derivative()) + zeta2m1 * dP * ct
            a_w = g + 1 - tw.d1 if i == 1 else g + 1 - tw.d2
            c_w = 3 * g + 3 - (tw.d1 if i == 1 else tw.d2)
        else:
            ct = ci.deflate(tw.F * tw.Fi(i))
            A = tw.G * bt
            B = 2.0 * Fj * tw.P_tilde
            C = (
                B * (chat[i - 1] - zeta * chat[i - 1].derivative())
                + zeta * zeta2m1 * dP * ct
            )
            dF = tw.F.degree
            di = tw.d1 if i == 1 else tw.d2
            a_w = g + 3 - dF - di
            c_w = 3 * g + 5 - dF - di
        b_w = c_w - (g + 3)
        sol = minimal_solution(A, B, C, known_gcd=Polynomial.one())
        sol = realify(A, B, C, a_w, b_w, c_w, sol)
        warnings.extend(sol.warnings)
        sols.append(sol)
        hom.append((B, A, c_w - a_w - b_w))  # X-generator, Y-generator, param weight

    # reconcile: P1dot + u1*B1 = P2dot + u2*B2 over real-section (u1, u2)
    delta1, delta2 = hom[0][2], hom[1][2]
    n_rows = 2 * g + 3
    cols = []
    for sgn, dlt, (Bgen, _, _) in ((1.0, delta1, hom[0]), (-1.0, delta2, hom[1])):
        for bidx in range(dlt + 1):
            x = np.zeros(dlt + 1)
            x[bidx] = 1.0
            e = unpack_section(x, dlt)
            col = (sgn * (e * Bgen)).padded(n_rows)
            cols.append(np.concatenate([col.real, col.imag]))
    M = np.column_stack(cols)
    rhs_poly = sols[1].X - sols[0].X
    rhs = np.concatenate([rhs_poly.padded(n_rows).real, rhs_poly.padded(n_rows).imag])
    u, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    recon_res = float(np.linalg.norm(M @ u - rhs))
    scale = max(sols[0].X.norm(), sols[1].X.norm(), triple.P.norm(), 1.0)
    if recon_res > 1e-6 * scale:
        raise InternalInconsistencyError(
            f"P-dot reconciliation residual {recon_res / scale:.3e}; "
            "input triple is not consistent deformation data"
        )
    u1 = unpack_section(u[: delta1 + 1], delta1)
    u2 = unpack_section(u[delta1 + 1 :], delta2)
    P1 = sols[0].X + u1 * hom[0][0]
    P2 = sols[1].X + u2 * hom[1][0]
    P_dot = (P1 + P2) * 0.5
    b1_dot = sols[0].Y + u1 * hom[0][1]
    b2_dot = sols[1].Y + u2 * hom[1][1]

    if tw.conformal:
        # pin s_0 from the first differential's residue-derivative condition
        P1c = triple.P.coeff(1)
        b11 = triple.b1.coeff(1)
        s0 = (P1c * b1_dot.coeff(0) - 2.0 * P_dot.coeff(0) * b11) / (3.0 * P1c * b11)
        u_e = Polynomial([s0, 0.0, np.conj(s0)])
        P_over_zeta = tw.F1 * tw.F2 * tw.P_tilde
        P_dot = P_dot + 2.0 * (u_e * P_over_zeta)
        b1_dot = b1_dot + u_e * (tw.F1 * tw.b1_tilde)
        b2_dot = b2_dot + u_e * (tw.F2 * tw.b2_tilde)

    t, t_imag = _scaling_shift(triple, P_dot)
    if t_imag > 1e-6 * max(1.0, abs(t)):
        warnings.append(f"scaling shift has imaginary part {t_imag:.2e}")
    P_dot = P_dot + 2.0 * t * triple.P
    b1_dot = b1_dot + t * triple.b1
    b2_dot = b2_dot + t * triple.b2

    v = TangentVector(
        P_dot, b1_dot, b2_dot, params, c1, c2, Q, {}, tuple(warnings)
    )
    t_after, _ = _scaling_shift(triple, P_dot)
    residuals = {
        "empd1": _empdi_residual(triple, v, 1),
        "empd2": _empdi_residual(triple, v, 2),
        "residue_tangent_1": _residue_tangent_residual(triple, v, 1),
        "residue_tangent_2": _residue_tangent_residual(triple, v, 2),
        "reconciliation": recon_res / scale,
        "scaling_derivative": abs(t_after) / max(1.0, v.norm()),
        "reality": max(
            real_defect(P_dot, 2 * g + 2),
            real_defect(b1_dot, g + 3),
            real_defect(b2_dot, g + 3),
        )
        / max(v.norm(), 1e-300),
    }
    return TangentVector(
        P_dot, b1_dot, b2_dot, params, c1, c2, Q, residuals, tuple(warnings)
    )


def make_tangent(triple, params, tower=None, label=None):
    """solve_q_equation followed by solve_empdi."""
    lab = label if label is not None else classify(triple)
    tw = tower if tower is not None else build_tower(triple, lab)
    c1, c2, Q, info = solve_q_equation(triple, params, tower=tw, label=lab)
    v = solve_empdi(triple, c1, c2, Q, params=params, tower=tw, label=lab)
    v.residuals["q_identity"] = info["q_identity"]
    return v


def tangent_basis(triple, label=None):
    """Two independent tangent vectors spanning the deformation parameters.

    Case (a): the kernel basis of R; case (b) with G linear: the real
    sections {1 + zeta, i - i zeta}; case (b) with G quadratic and case
    (e): the canonical parameter pairs (1, 0) and (0, 1).
    """
    lab = label if label is not None else classify(triple)
    if not lab.deformable:
        raise NotDeformableError(
            f"case ({lab.label}) does not admit deformations",
            case=lab.label,
            indicator=case_c_indicator(triple) if lab.label == "c" else None,
        )
    tw = build_tower(triple, lab)
    if lab.label == "a":
        q1, q2 = r_kernel(triple, tw)
        plist = [CaseAParams(q1), CaseAParams(q2)]
    elif lab.label == "b" and tw.G.degree == 1:
        plist = [
            CaseBLinearParams(Polynomial([1.0, 1.0])),
            CaseBLinearParams(Polynomial([1j, -1j])),
        ]
    elif lab.label == "b":
        plist = [CaseBQuadParams(1.0, 0.0), CaseBQuadParams(0.0, 1.0)]
    else:
        plist = [CaseEParams(1.0, 0.0), CaseEParams(0.0, 1.0)]
    vectors = tuple(make_tangent(triple, p, tower=tw, label=lab) for p in plist)
    return vectors, gram_determinant(vectors)


def gram_determinant(vectors):
    """Determinant of the Gram matrix of the coefficient-flattened,
    normalized tangent vectors; the independence certificate."""
    flats = []
    for v in vectors:
        x = np.concatenate(
            [v.P_dot.padded(40), v.b1_dot.padded(40), v.b2_dot.padded(40)]
        )
        n = np.linalg.norm(x)
        flats.append(x / max(n, 1e-300))
    G = np.zeros((len(flats), len(flats)))
    for i, a in enumerate(flats):
        for j, b in enumerate(flats):
            G[i, j] = np.real(np.vdot(a, b))
    return float(np.linalg.det(G))


# ---------------------------------------------------------------------------
# Recovery of chat from a tangent vector
# ---------------------------------------------------------------------------


def empdi_operator_matrix(P, g):
    """Matrix of chat -> 2P(chat - zeta chat') + P' zeta chat on the
    weight-(g+3) polynomials; injective for nonsingular P."""
    zeta = Polynomial.zeta()
    dP = P.derivative()
    n_cols = g + 4
    n_rows = 3 * g + 6
    M = np.zeros((n_rows, n_cols), dtype=complex)
    for m in range(n_cols):
        mono = Polynomial.from_roots([0.0] * m) if m else Polynomial.one()
        col = 2.0 * (1 - m) * P * mono + dP * zeta * mono
        M[:, m] = col.padded(n_rows)
    return M


def recover_chat(triple, v, rtol=1e-8):
    """The unique pair (chat1, chat2) reproducing the tangent vector through
    the deformation identities; raises when the operator is numerically
    singular (which would contradict a nonsingular spectral curve)."""
    g = triple.g
    M = empdi_operator_matrix(triple.P, g)
    row_norms = np.linalg.norm(M, axis=1)
    keep = row_norms > 0
    Ms = M[keep] / row_norms[keep, None]
    smin = np.linalg.svd(Ms, compute_uv=False)[-1]
    if smin <= 1e-10:
        raise SingularOperatorError(
            f"homogeneous recovery operator has sigma_min = {smin:.2e}"
        )
    out = []
    for b, b_dot in ((triple.b1, v.b1_dot), (triple.b2, v.b2_dot)):
        rhs_poly = v.P_dot * b - 2.0 * triple.P * b_dot
        rhs = rhs_poly.padded(M.shape[0])
        chat, *_ = np.linalg.lstsq(M, rhs, rcond=None)
        res = np.linalg.norm(M @ chat - rhs) / max(np.linalg.norm(rhs), 1e-300)
        if res > max(rtol, 1e-6):
            raise SingularOperatorError(
                f"chat recovery residual {res:.3e}; tangent data inconsistent"
            )
        out.append(Polynomial(chat))
    return tuple(out)


# ---------------------------------------------------------------------------
# Conformal-type evolution
# ---------------------------------------------------------------------------


def conformal_type_rate(triple, v):
    """tau-dot = Q_0 * tau * P_0 / (b1_0 * b2_0) at a nonconformal point."""
    from .errors import UndefinedConformalTypeError

    P0 = triple.P.coeff(0)
    b10 = triple.b1.coeff(0)
    b20 = triple.b2.coeff(0)
    if abs(b10) == 0.0:
        raise UndefinedConformalTypeError("b1_0 = 0: conformal type undefined")
    if is_conformal(triple):
        raise UndefinedConformalTypeError("conformal point: P_0 = 0")
    tau = b20 / b10
    return v.Q.coeff(0) * tau * P0 / (b10 * b20)
