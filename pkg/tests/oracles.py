"""Independent brute-force oracles shared by the unit and acceptance tests.

These deliberately avoid the library's solution paths: the Bezout oracle
stacks raw coefficient convolutions into one dense least-squares solve, and
instance generators build data from explicit factors.
"""

import numpy as np

from whitham.polyring import Polynomial, random_real_section, real_section_scale


def conv_matrix(p, cols, rows):
    """Matrix of the map (coefficients of X) -> coefficients of p*X."""
    M = np.zeros((rows, cols), dtype=complex)
    c = p.coeffs
    for j in range(cols):
        M[j : j + c.size, j] = c
    return M


def dense_bezout(A, B, C, d):
    """Solve AX - BY = C for the minimal X by a stacked dense solve.

    Unknowns: X of degree <= deg(B) - d - 1 and Y of the implied degree,
    flattened into one complex least-squares problem over the coefficient
    identity.  Returns (X, Y, residual).
    """
    a, b, c = A.degree, B.degree, C.degree
    x_len = max(b - d, 1)
    y_len = max(a + x_len - 1, c) - b + 1
    y_len = max(y_len, 1)
    rows = max(a + x_len - 1, b + y_len - 1, c) + 1
    M = np.hstack([conv_matrix(A, x_len, rows), -conv_matrix(B, y_len, rows)])
    rhs = C.padded(rows)
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    X = Polynomial(sol[:x_len]) if x_len else Polynomial.zero()
    Y = Polynomial(sol[x_len:])
    res = (A * X - B * Y - C).norm() / max(C.norm(), 1e-300)
    return X, Y, res


def random_complex_poly(rng, deg):
    c = rng.standard_normal(deg + 1) + 1j * rng.standard_normal(deg + 1)
    c[-1] += 2.0 * np.sign(c[-1].real or 1.0)  # keep the degree honest
    return Polynomial(c)


def random_bezout_instance(rng, max_deg=8, d_deg=None):
    """Random (A, B, C, D) with forced common factor D and D | C."""
    if d_deg is None:
        d_deg = int(rng.integers(0, 3))
    a1 = int(rng.integers(1, max_deg - d_deg + 1))
    b1 = int(rng.integers(1, max_deg - d_deg + 1))
    c1 = int(rng.integers(0, max_deg - d_deg + 1))
    D = random_complex_poly(rng, d_deg) if d_deg else Polynomial.one()
    A = random_complex_poly(rng, a1) * D
    B1 = random_complex_poly(rng, b1)
    if rng.random() < 0.3 and b1 >= 2:
        # force a multiple root in B/D to exercise the confluent rows
        beta = complex(rng.standard_normal(), rng.standard_normal())
        B1 = Polynomial.from_roots([beta, beta]) * random_complex_poly(rng, b1 - 2)
    B = B1 * D
    C = random_complex_poly(rng, c1) * D
    return A, B, C, D


def random_real_bezout_instance(rng, strict=True):
    """Real-section (A, B, C) with gcd D | C; strict => c < a+b-d.

    Built as C = A*X0 - B*Y0 with real-section X0, Y0, so the minimal
    solution is known to be real.
    """
    d_deg = int(rng.integers(0, 2)) * 2  # even, paired factor
    a1 = int(rng.integers(1, 4))
    b1 = int(rng.integers(2, 5))
    if d_deg:
        alpha = 0.3 + 0.4 * rng.random() + 0.2j * rng.random()
        D = Polynomial.from_roots([alpha, 1 / np.conj(alpha)])
        D, _ = real_section_scale(D)
    else:
        D = Polynomial.one()
    A = random_real_section(rng, a1) * D
    B = random_real_section(rng, b1) * D
    a, b = a1 + d_deg, b1 + d_deg
    if strict:
        x_w = int(rng.integers(0, b1))  # weight of X0, < b - d
        c = a + x_w
    else:
        x_w = b1 + int(rng.integers(0, 2))
        c = a + x_w
    X0 = random_real_section(rng, x_w)
    Y0 = random_real_section(rng, c - b) if c - b >= 0 else Polynomial.zero()
    C = A * X0 - B * Y0
    return A, B, C, D, (a, b, c), (X0, Y0)


