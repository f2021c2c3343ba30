"""Dense univariate complex polynomials and their real-section structure.

Everything downstream is carried by polynomials in the variable zeta with
complex coefficients: the curve polynomial P, the differential numerators
b^i, the deformation data c^i, Q and the gcd tower between them.  A section
of weight k is "real" when its coefficients satisfy q_i = conj(q_{k-i});
these are the fixed points of the pullback ``real_pullback(-, k)``.

Coefficients are stored dense and low-to-high (coeffs[i] multiplies
zeta**i).  Degrees in play stay below ~25, so no sparse or FFT machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegreeBoundError,
    NumericalFailureError,
    RealityViolationError,
    ZeroPolynomialError,
)

# Trailing coefficients below TRIM_REL * max|coeff| are treated as zero.
TRIM_REL = 1e-13

# Root-cluster radii: GCD_CLUSTER_RADIUS matches roots *between* two
# polynomials; MULTIPLICITY_RADIUS merges near-coincident roots of a single
# polynomial into one multiple root.  The latter is looser because a double
# root computed in floating point splits by ~sqrt(eps).
GCD_CLUSTER_RADIUS = 1e-8
MULTIPLICITY_RADIUS = 1e-6

ABERTH_MAX_ITER = 200
ABERTH_TARGET = 1e-12


class Polynomial:
    """Immutable dense polynomial over the complex floats.

    Parameters
    ----------
    coeffs : sequence of complex
        Low-to-high coefficients; trailing near-zeros are trimmed.
    bound : int, optional
        Nominal degree bound k of the section space this polynomial lives
        in.  May exceed the numerical degree (e.g. a weight-(2g+2) curve
        polynomial branched over zeta=0 has numerical degree 2g+1).
    """

    __slots__ = ("coeffs", "bound")

    def __init__(self, coeffs, bound=None):
        c = np.atleast_1d(np.asarray(coeffs, dtype=complex)).ravel()
        if c.size == 0:
            c = np.zeros(1, dtype=complex)
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite polynomial coefficient")
        scale = np.max(np.abs(c))
        if scale > 0.0:
            keep = np.abs(c) > TRIM_REL * scale
            last = int(np.max(np.nonzero(keep)[0])) if np.any(keep) else -1
        else:
            last = -1
        c = c[: last + 1] if last >= 0 else np.zeros(1, dtype=complex)
        c = np.ascontiguousarray(c)
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)
        if bound is not None and self.degree > bound:
            raise DegreeBoundError(
                f"degree {self.degree} exceeds nominal bound {bound}"
            )
        object.__setattr__(self, "bound", bound)

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    # -- basics ----------------------------------------------------------

    @property
    def degree(self):
        """Numerical degree; the zero polynomial reports -1."""
        if self.coeffs.size == 1 and self.coeffs[0] == 0:
            return -1
        return self.coeffs.size - 1

    @property
    def is_zero(self):
        return self.degree < 0

    def coeff(self, i):
        """Coefficient of zeta**i (zero beyond the stored length)."""
        if 0 <= i < self.coeffs.size:
            return complex(self.coeffs[i])
        return 0.0 + 0.0j

    def padded(self, n):
        """Coefficient vector padded with zeros to length n."""
        out = np.zeros(n, dtype=complex)
        out[: self.coeffs.size] = self.coeffs
        return out

    def norm(self):
        return float(np.linalg.norm(self.coeffs))

    def __repr__(self):
        return f"Polynomial({list(self.coeffs)})"

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.coeffs.size == other.coeffs.size and bool(
            np.array_equal(self.coeffs, other.coeffs)
        )

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    # -- ring operations -------------------------------------------------

    def __add__(self, other):
        other = _as_poly(other)
        n = max(self.coeffs.size, other.coeffs.size)
        return Polynomial(self.padded(n) + other.padded(n))

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(-self.coeffs)

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) + (-self)

    def __mul__(self, other):
        if np.isscalar(other):
            return Polynomial(self.coeffs * complex(other))
        other = _as_poly(other)
        if self.is_zero or other.is_zero:
            return Polynomial([0.0])
        return Polynomial(np.convolve(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Polynomial(self.coeffs / complex(scalar))

    def __call__(self, z):
        """Horner evaluation; accepts scalars or arrays."""
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, self.coeffs[-1], dtype=complex)
        for a in self.coeffs[-2::-1]:
            out = out * z + a
        return out if out.shape else complex(out)

    def derivative(self):
        if self.coeffs.size == 1:
            return Polynomial([0.0])
        k = np.arange(1, self.coeffs.size)
        return Polynomial(self.coeffs[1:] * k)

    def monic(self):
        if self.is_zero:
            raise ZeroPolynomialError("monic of zero polynomial")
        return Polynomial(self.coeffs / self.coeffs[-1])

    # -- division --------------------------------------------------------

    def divmod(self, divisor):
        """Long division: self = q * divisor + r with deg r < deg divisor."""
        divisor = _as_poly(divisor)
        if divisor.is_zero:
            raise ZeroPolynomialError("division by zero polynomial")
        if self.degree < divisor.degree:
            return Polynomial([0.0]), self
        num = self.coeffs.copy()
        den = divisor.coeffs
        qlen = num.size - den.size + 1
        q = np.zeros(qlen, dtype=complex)
        for i in range(qlen - 1, -1, -1):
            q[i] = num[i + den.size - 1] / den[-1]
            num[i : i + den.size] -= q[i] * den
        return Polynomial(q), Polynomial(num[: den.size - 1] if den.size > 1 else [0.0])

    def deflate(self, factor, rel_tol=1e-8):
        """Exact division; raises if the remainder is not negligible."""
        q, r = self.divmod(factor)
        scale = max(self.norm(), 1e-300)
        if r.norm() > rel_tol * scale:
            raise NumericalFailureError(
                f"deflation remainder {r.norm() / scale:.3e} exceeds {rel_tol:.1e}",
                best=q,
            )
        return q

    # -- constructors ----------------------------------------------------

    @staticmethod
    def from_roots(roots, leading=1.0):
        p = np.array([complex(leading)])
        for r in roots:
            p = np.convolve(p, np.array([-complex(r), 1.0]))
        return Polynomial(p)

    @staticmethod
    def zero():
        return Polynomial([0.0])

    @staticmethod
    def one():
        return Polynomial([1.0])

    @staticmethod
    def zeta():
        return Polynomial([0.0, 1.0])

    # -- serialization ---------------------------------------------------

    def to_pairs(self):
        """JSON form: list of [re, im], index = power of zeta."""
        return [[float(c.real), float(c.imag)] for c in self.coeffs]

    @staticmethod
    def from_pairs(pairs, bound=None):
        return Polynomial([complex(p[0], p[1]) for p in pairs], bound=bound)


def _as_poly(x):
    if isinstance(x, Polynomial):
        return x
    if np.isscalar(x):
        return Polynomial([complex(x)])
    return Polynomial(x)


# ---------------------------------------------------------------------------
# Real structure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RealSectionWitness:
    poly: Polynomial
    k: int
    max_defect: float


def real_pullback(p, k):
    """Action of the real involution on a weight-k section: q_i -> conj(q_{k-i}).

    Applying it twice is the identity up to rounding.
    """
    p = _as_poly(p)
    if p.degree > k:
        raise DegreeBoundError(f"degree {p.degree} exceeds weight {k}")
    return Polynomial(np.conj(p.padded(k + 1))[::-1])


def real_defect(p, k):
    """max_i |q_i - conj(q_{k-i})|, the distance from being a real section.

    Coefficients beyond the weight (possible as numerical dirt on computed
    polynomials) count toward the defect at full magnitude.
    """
    p = _as_poly(p)
    over = 0.0
    if p.degree > k:
        over = float(np.max(np.abs(p.coeffs[k + 1 :])))
    c = np.zeros(k + 1, dtype=complex)
    m = min(k + 1, p.coeffs.size)
    c[:m] = p.coeffs[:m]
    return max(float(np.max(np.abs(c - np.conj(c[::-1])))), over)


def is_real_section(p, k, tol=1e-10):
    """Whether p lies in the weight-k real sections, with a defect witness."""
    d = real_defect(p, k)
    return d <= tol, RealSectionWitness(_as_poly(p), k, d)


def symmetrize(p, k):
    """Orthogonal projection onto the weight-k real sections."""
    p = _as_poly(p)
    return (p + real_pullback(p, k)) * 0.5


def real_section_scale(p, tol=1e-8):
    """Complex unit lambda such that lambda*p is a real section of weight deg p.

    Exists whenever the root multiset of p is invariant under the
    conjugate-inverse involution (true for any gcd of real sections with the
    pairing intact).  Raises if no phase gets close.
    """
    p = _as_poly(p)
    if p.is_zero:
        raise ZeroPolynomialError("cannot scale zero polynomial")
    k = p.degree
    if k == 0:
        # constants: rotate to the positive real axis
        lam = np.sqrt(np.conj(p.coeffs[0]) / abs(p.coeffs[0]))
    else:
        c = p.coeffs
        rev = np.conj(c[::-1])
        # rev = mu * c in the least-squares sense; lambda = sqrt(mu)
        mu = np.vdot(c, rev) / np.vdot(c, c)
        m = abs(mu)
        if m < 1e-8:
            raise RealityViolationError("no real-section phase exists")
        lam = np.sqrt(mu / m)
    if lam.real < 0 or (lam.real == 0 and lam.imag < 0):
        lam = -lam
    q = p * lam
    if real_defect(q, k) > tol * max(1.0, q.norm()):
        raise RealityViolationError(
            f"real-section defect {real_defect(q, k):.3e} after rescale"
        )
    return q, complex(lam)


def random_real_section(rng, k, scale=1.0):
    """Random element of the weight-k real sections (test helper)."""
    c = (rng.standard_normal(k + 1) + 1j * rng.standard_normal(k + 1)) * scale
    return symmetrize(Polynomial(c, bound=k), k)


# ---------------------------------------------------------------------------
# Root finding (Aberth-Ehrlich)
# ---------------------------------------------------------------------------


def _aberth_start(coeffs):
    """Initial guesses from the upper convex hull of (k, log|a_k|).

    Each hull segment contributes points on a circle whose radius estimates
    the moduli of the roots it accounts for; this keeps widely spread root
    magnitudes (1e-5 .. 1e5) inside the basin.
    """
    n = coeffs.size - 1
    with np.errstate(divide="ignore"):
        logs = np.where(coeffs != 0, np.log(np.abs(coeffs)), -np.inf)
    hull = [0]
    for k in range(1, n + 1):
        if logs[k] == -np.inf:
            continue
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            # keep the hull upper-convex
            if (logs[j] - logs[i]) * (k - j) <= (logs[k] - logs[j]) * (j - i):
                hull.pop()
            else:
                break
        hull.append(k)
    if hull[-1] != n:
        hull.append(n)
    guesses = np.empty(n, dtype=complex)
    pos = 0
    for i, j in zip(hull[:-1], hull[1:]):
        m = j - i
        if logs[i] == -np.inf or logs[j] == -np.inf:
            r = 1.0
        else:
            r = np.exp((logs[i] - logs[j]) / m)
        ang = 2.0 * np.pi * (np.arange(m) + 0.5) / m + 0.4 + pos
        guesses[pos : pos + m] = r * np.exp(1j * ang)
        pos += m
    return guesses


def _aberth(coeffs, max_iter=ABERTH_MAX_ITER, target=ABERTH_TARGET):
    """Simultaneous iteration for all roots of a squarefree-ish polynomial."""
    n = coeffs.size - 1
    if n == 0:
        return np.empty(0, dtype=complex)
    if n == 1:
        return np.array([-coeffs[0] / coeffs[1]])
    dcoeffs = coeffs[1:] * np.arange(1, n + 1)
    z = _aberth_start(coeffs)
    mags = np.abs(coeffs)

    def backward_ok(zv, pv):
        # |p(z)| measured against sum |a_i||z|^i (backward-error style)
        az = np.abs(zv)
        s = np.zeros_like(az)
        for a in mags[::-1]:
            s = s * az + a
        return np.abs(pv) <= target * np.maximum(s, 1e-300)

    converged = np.zeros(n, dtype=bool)
    for _ in range(max_iter):
        p = np.full(n, coeffs[-1], dtype=complex)
        for a in coeffs[-2::-1]:
            p = p * z + a
        dp = np.full(n, dcoeffs[-1], dtype=complex)
        for a in dcoeffs[-2::-1]:
            dp = dp * z + a
        converged = backward_ok(z, p)
        if np.all(converged):
            return z
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = np.where(dp != 0, p / dp, 0.1 + 0.1j)
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            sums = np.sum(1.0 / diff, axis=1) - 1.0 / np.diag(diff)
            denom = 1.0 - newton * sums
            step = np.where(np.abs(denom) > 1e-300, newton / denom, newton)
        step[converged] = 0.0
        z = z - step
    if np.all(backward_ok(z, _eval_many(coeffs, z))):
        return z
    raise NumericalFailureError("root iteration did not converge", best=z)


def _eval_many(coeffs, z):
    out = np.full(z.shape, coeffs[-1], dtype=complex)
    for a in coeffs[-2::-1]:
        out = out * z + a
    return out


def _cluster(points, rel_radius):
    """Greedy merge of near-coincident points; returns (center, count) pairs."""
    pts = list(points)
    used = [False] * len(pts)
    out = []
    order = sorted(range(len(pts)), key=lambda i: (pts[i].real, pts[i].imag))
    for i in order:
        if used[i]:
            continue
        group = [i]
        used[i] = True
        changed = True
        while changed:
            changed = False
            center = np.mean([pts[j] for j in group])
            scale = max(1.0, abs(center))
            for j in order:
                if not used[j] and abs(pts[j] - center) <= rel_radius * scale:
                    group.append(j)
                    used[j] = True
                    changed = True
        center = complex(np.mean([pts[j] for j in group]))
        out.append((center, len(group)))
    out.sort(key=lambda rm: (rm[0].real, rm[0].imag))
    return out


def roots(p, cluster_radius=MULTIPLICITY_RADIUS):
    """All roots of p as (root, multiplicity) pairs.

    Exact zeta-factors are deflated before iteration; the remaining roots
    come from Aberth-Ehrlich, Newton-polished on the deflated polynomial,
    then merged into clusters of relative radius ``cluster_radius``.
    """
    p = _as_poly(p)
    if p.is_zero:
        raise ZeroPolynomialError("roots of zero polynomial")
    c = p.coeffs
    zero_mult = 0
    scale = np.max(np.abs(c))
    while c.size > 1 and abs(c[0]) <= TRIM_REL * scale:
        c = c[1:]
        zero_mult += 1
    found = _aberth(np.ascontiguousarray(c)) if c.size > 1 else np.empty(0, complex)
    if found.size:
        dc = c[1:] * np.arange(1, c.size)
        for _ in range(2):
            pv = _eval_many(c, found)
            dv = _eval_many(dc, found) if dc.size else np.ones_like(found)
            step = np.where(np.abs(dv) > 1e-300, pv / dv, 0.0)
            mask = np.abs(step) < 1e-3 * np.maximum(1.0, np.abs(found))
            found = found - np.where(mask, step, 0.0)
    out = []
    if zero_mult:
        out.append((0.0 + 0.0j, zero_mult))
    out.extend(_cluster(found, cluster_radius))
    out.sort(key=lambda rm: (rm[0].real, rm[0].imag))
    return out


def roots_flat(p, cluster_radius=MULTIPLICITY_RADIUS):
    """Roots expanded with multiplicity."""
    return [r for r, m in roots(p, cluster_radius) for _ in range(m)]


# ---------------------------------------------------------------------------
# Approximate gcd and the common-factor tower
# ---------------------------------------------------------------------------


def approx_gcd(p, q, cluster_radius=GCD_CLUSTER_RADIUS, return_info=False):
    """Monic gcd by root-cluster matching.

    Roots of p and q closer than ``cluster_radius`` (relative) are treated
    as common; multiplicities combine by min.  Coprime inputs give 1.
    With ``return_info`` also reports borderline near-matches (distance
    within 10x the radius) for diagnostics.
    """
    p, q = _as_poly(p), _as_poly(q)
    if p.is_zero and q.is_zero:
        raise ZeroPolynomialError("gcd of two zero polynomials")
    if p.is_zero or q.is_zero:
        g = (q if p.is_zero else p).monic()
        return (g, []) if return_info else g
    rp = roots(p)
    rq = roots(q)
    pairs = []
    for i, (r1, m1) in enumerate(rp):
        for j, (r2, m2) in enumerate(rq):
            d = abs(r1 - r2) / max(1.0, abs(r1), abs(r2))
            pairs.append((d, i, j))
    pairs.sort(key=lambda t: t[0])
    used_p, used_q = set(), set()
    matched = []
    borderline = []
    for d, i, j in pairs:
        if i in used_p or j in used_q:
            continue
        if d <= cluster_radius:
            used_p.add(i)
            used_q.add(j)
            m = min(rp[i][1], rq[j][1])
            matched.append((0.5 * (rp[i][0] + rq[j][0]), m))
        elif d <= 10.0 * cluster_radius:
            borderline.append((rp[i][0], rq[j][0], d))
    if not matched:
        g = Polynomial.one()
    else:
        g = Polynomial.from_roots([r for r, m in matched for _ in range(m)])
    return (g, borderline) if return_info else g


@dataclass(frozen=True)
class FactorStructure:
    """The gcd tower between P and the differential numerators.

    F divides all three; F1 (resp. F2) the further common part of P and b1
    (resp. b2); G what b1 and b2 still share after that.  Reconstruction:
    P = F*F1*F2*P_tilde, b1 = F*F1*G*b1_tilde, b2 = F*F2*G*b2_tilde.
    """

    F: Polynomial
    F1: Polynomial
    F2: Polynomial
    G: Polynomial
    P_tilde: Polynomial
    b1_tilde: Polynomial
    b2_tilde: Polynomial
    borderline: tuple = ()

    @property
    def d_F(self):
        return self.F.degree

    @property
    def d_1(self):
        return self.F1.degree

    @property
    def d_2(self):
        return self.F2.degree

    @property
    def d_G(self):
        return self.G.degree

    def reconstruction_residual(self, P, b1, b2):
        rP = (self.F * self.F1 * self.F2 * self.P_tilde - P).norm() / max(P.norm(), 1e-300)
        r1 = (self.F * self.F1 * self.G * self.b1_tilde - b1).norm() / max(b1.norm(), 1e-300)
        r2 = (self.F * self.F2 * self.G * self.b2_tilde - b2).norm() / max(b2.norm(), 1e-300)
        return max(rP, r1, r2)


def factor_structure(P, b1, b2, cluster_radius=GCD_CLUSTER_RADIUS):
    """Compute the gcd tower, first F, then F1 and F2, then G."""
    P, b1, b2 = _as_poly(P), _as_poly(b1), _as_poly(b2)
    if P.is_zero or b1.is_zero or b2.is_zero:
        raise ZeroPolynomialError("factor tower of zero polynomial")
    info = []
    F, binfo = approx_gcd(approx_gcd(P, b1, cluster_radius), b2, cluster_radius, return_info=True)
    info.extend(binfo)
    P_F = P.deflate(F)
    b1_F = b1.deflate(F)
    b2_F = b2.deflate(F)
    F1, binfo = approx_gcd(P_F, b1_F, cluster_radius, return_info=True)
    info.extend(binfo)
    F2, binfo = approx_gcd(P_F, b2_F, cluster_radius, return_info=True)
    info.extend(binfo)
    G, binfo = approx_gcd(b1_F.deflate(F1), b2_F.deflate(F2), cluster_radius, return_info=True)
    info.extend(binfo)
    P_tilde = P_F.deflate(F1).deflate(F2)
    b1_tilde = b1_F.deflate(F1).deflate(G)
    b2_tilde = b2_F.deflate(F2).deflate(G)
    return FactorStructure(F, F1, F2, G, P_tilde, b1_tilde, b2_tilde, tuple(info))


# ---------------------------------------------------------------------------
# Taylor jets (for confluent right-hand sides)
# ---------------------------------------------------------------------------


def poly_jet(p, beta, order):
    """Taylor coefficients of p at beta up to t**(order-1), by Horner shifts."""
    p = _as_poly(p)
    work = p.coeffs.copy()
    out = np.zeros(order, dtype=complex)
    for m in range(min(order, work.size)):
        # synthetic division by (zeta - beta); remainder is the next jet coeff
        for i in range(work.size - 2, -1, -1):
            work[i] = work[i] + beta * work[i + 1]
        out[m] = work[0]
        work = work[1:]
        if work.size == 0:
            break
    return out


def jet_divide(num, den):
    """Truncated power-series division num/den (den[0] != 0)."""
    n = num.size
    if abs(den[0]) < 1e-300:
        raise ZeroDivisionError("jet division by series with vanishing constant term")
    out = np.zeros(n, dtype=complex)
    for k in range(n):
        acc = num[k]
        for j in range(1, k + 1):
            if j < den.size:
                acc -= den[j] * out[k - j]
        out[k] = acc / den[0]
    return out
