"""Factorization of the principal symbols on each side of the interface.

Side indices follow the convention k=1 for x_n < 0 (the 'minus' matrix) and
k=2 for x_n > 0 (the 'plus' matrix). At a tangential frequency xi' the symbol
of side k factors as

    p_k(xi) = a_nn * ((xi_n + E + iF)**2 + b),    b = (A - iB)**2,  A >= 0,

and the conjugated symbol in the normal variable lambda has the two roots
sigma_1, sigma_2 returned by :func:`conjugated_roots`.
"""

import cmath
from dataclasses import dataclass

import numpy as np

from .coefficients import CoefficientPair, ComplexSymmetricMatrix, DerivedConstants
from .errors import DimensionError, InternalInconsistencyError, InvalidFrequencyError
from .tolerances import TOL


def _complex_matrix(matrix):
    if isinstance(matrix, ComplexSymmetricMatrix):
        return matrix.a
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


def principal_symbol(matrix, zeta):
    """sum_{l,j} a_lj zeta_l zeta_j, complex bilinear (no conjugation).

    ``zeta`` may carry leading batch axes.
    """
    a = _complex_matrix(matrix)
    z = np.asarray(zeta, dtype=complex)
    if z.shape[-1] != a.shape[0]:
        raise DimensionError(f"zeta has {z.shape[-1]} components, matrix is {a.shape[0]}x{a.shape[0]}")
    return np.einsum("...l,lj,...j->...", z, a, z)


def symbol_gradient(matrix, zeta):
    """d p / d xi_j at zeta, i.e. 2 (A zeta)_j for symmetric A."""
    a = _complex_matrix(matrix)
    z = np.asarray(zeta, dtype=complex)
    return np.einsum("lj,...j->...l", a + a.T, z)


def principal_sqrt(b):
    """(A, B) real with A >= 0 and (A - iB)**2 = b.

    A is the real part of the principal square root; when b is a nonpositive
    real the root is purely imaginary and B is taken >= 0.
    """
    s = cmath.sqrt(complex(b))
    A, B = s.real, -s.imag
    if A == 0.0:
        B = abs(B)
    return A, B


def principal_sqrt_array(b):
    s = np.sqrt(np.asarray(b, dtype=complex))
    A, B = s.real, -s.imag
    B = np.where(A == 0.0, np.abs(B), B)
    return A, B


@dataclass(frozen=True)
class SymbolFactorization:
    side: int
    xi_prime: np.ndarray
    a_nn: complex
    E: float
    F: float
    A: float
    B: float
    b: complex

    @property
    def xi_norm(self):
        return float(np.linalg.norm(self.xi_prime))

    def roots(self, alpha, tau):
        return conjugated_roots(self, alpha, tau)

    def to_dict(self):
        return {
            "side": self.side,
            "xi_prime": [float(v) for v in self.xi_prime],
            "a_nn": [self.a_nn.real, self.a_nn.imag],
            "E": self.E, "F": self.F, "A": self.A, "B": self.B,
            "b": [self.b.real, self.b.imag],
        }


def factor_arrays(matrix, xi_prime):
    """Vectorized factorization data over rows of ``xi_prime`` (shape (m, n-1)).

    Returns a dict of arrays a_nn, E, F, A, B, b and the Schur-identity defect.
    """
    a = _complex_matrix(matrix)
    n = a.shape[0]
    xi = np.atleast_2d(np.asarray(xi_prime, dtype=float))
    if xi.shape[-1] != n - 1:
        raise DimensionError(f"xi' must have {n - 1} components")
    ann = a[-1, -1]
    top = a[:-1, :-1]
    row = a[-1, :-1]
    S = np.einsum("ml,lj,mj->m", xi, top, xi)
    t = xi @ row
    b = (S * ann - t * t) / ann ** 2
    ef = t / ann
    A, B = principal_sqrt_array(b)
    alt = S / ann - ef * ef
    defect = np.abs(b - alt) / np.maximum(np.abs(S / ann), np.finfo(float).tiny)
    return {"a_nn": ann, "E": ef.real, "F": ef.imag, "A": A, "B": B, "b": b,
            "schur_defect": defect}


def factor_at(pair, side, xi_prime) -> SymbolFactorization:
    """Factorization data of side k (1 = minus, 2 = plus) at xi'.

    ``pair`` may also be a single matrix, in which case ``side`` only labels
    the result.
    """
    xi = np.asarray(xi_prime, dtype=float).reshape(-1)
    if not np.any(xi):
        raise InvalidFrequencyError("xi' must be nonzero")
    k = _side_index(side)
    matrix = pair.side(k) if isinstance(pair, CoefficientPair) else pair
    d = factor_arrays(matrix, xi[None, :])
    if d["schur_defect"][0] > TOL.schur_identity:
        raise InternalInconsistencyError(
            f"reduced-symbol identity defect {d['schur_defect'][0]:.3e}")
    A, B, b = float(d["A"][0]), float(d["B"][0]), complex(d["b"][0])
    return SymbolFactorization(k, xi, complex(d["a_nn"]), float(d["E"][0]),
                               float(d["F"][0]), A, B, b)


def _side_index(side):
    if side in (2, "plus", "+"):
        return 2
    if side in (1, "minus", "-"):
        return 1
    raise ValueError(f"side must be 1/2 or 'minus'/'plus', got {side!r}")


def conjugated_roots(fact: SymbolFactorization, alpha, tau):
    """Roots (sigma_1, sigma_2) of the conjugated symbol in lambda."""
    E, F, A, B = fact.E, fact.F, fact.A, fact.B
    ta = tau * alpha
    if fact.side == 2:
        return (complex(-E - B, -(ta + F + A)), complex(-E + B, -(ta + F - A)))
    return (complex(E + B, ta + F + A), complex(E - B, ta + F - A))


def conjugated_symbol(fact: SymbolFactorization, alpha, tau, lam):
    """a_nn * (((-1)**k lambda + i tau alpha + E + iF)**2 + b)."""
    sgn = -1.0 if fact.side == 1 else 1.0
    w = sgn * np.asarray(lam, dtype=complex) + 1j * tau * alpha + complex(fact.E, fact.F)
    return fact.a_nn * (w * w + fact.b)


@dataclass(frozen=True)
class BoundCheck:
    lhs: float
    rhs: float
    passed: bool


def lemma_ak_bound(fact: SymbolFactorization, derived: DerivedConstants, xi_prime=None):
    """A >= sqrt(lambda_tilde1 |xi'|^2 + F^2), up to TOL.ak_bound."""
    xn = fact.xi_norm if xi_prime is None else float(np.linalg.norm(xi_prime))
    rhs = float(np.sqrt(derived.lambda_tilde1 * xn * xn + fact.F ** 2))
    return BoundCheck(fact.A, rhs, fact.A >= rhs - TOL.ak_bound)


def magnitude_cap(fact: SymbolFactorization, lambda0, Lambda0, n):
    """A^2 + B^2 <= n (Lambda0/lambda0)^2 |xi'|^2."""
    lhs = fact.A ** 2 + fact.B ** 2
    rhs = n * (Lambda0 / lambda0) ** 2 * fact.xi_norm ** 2
    return BoundCheck(lhs, rhs, lhs <= rhs * (1 + TOL.ak_bound))
