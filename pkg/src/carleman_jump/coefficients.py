"""Complex symmetric coefficient matrices ``A = M + i*gamma*N`` on both sides
of the interface, their validation, and the constants derived from them."""

from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, InvalidInputError
from .tolerances import TOL


def _real_matrix(x, name):
    arr = np.array(x, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ComplexSymmetricMatrix:
    """``a_lj = M_lj + i*gamma*N_lj`` stored as the real pair (M, N) and gamma."""

    M: np.ndarray
    N: np.ndarray
    gamma: float = 0.0

    def __post_init__(self):
        M = _real_matrix(self.M, "M")
        N = _real_matrix(self.N, "N")
        if M.shape != N.shape:
            raise DimensionError(f"M and N shapes differ: {M.shape} vs {N.shape}")
        if M.shape[0] < 2:
            raise DimensionError("dimension n must be >= 2")
        gamma = float(self.gamma)
        if not np.isfinite(gamma) or gamma < 0:
            raise InvalidInputError(f"gamma must be finite and >= 0, got {self.gamma}")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "gamma", gamma)

    @property
    def n(self):
        return self.M.shape[0]

    @property
    def a(self):
        return self.M + 1j * self.gamma * self.N

    @property
    def symmetry_defect(self):
        a = self.a
        return float(np.max(np.abs(a - a.T)))

    def scaled(self, c):
        return ComplexSymmetricMatrix(c * self.M, c * self.N, self.gamma)

    @classmethod
    def identity(cls, n, gamma=0.0):
        return cls(np.eye(n), np.eye(n), gamma)


SpatialField = Callable[[np.ndarray], tuple]


@dataclass(frozen=True)
class CoefficientPair:
    """Coefficients A+ (x_n > 0) and A- (x_n < 0) at the base point, with the
    shared ellipticity bounds and an optional spatially varying field.

    ``lambda0``/``Lambda0`` left as None are inferred as the tightest values
    bracketing the spectra of M and N on both sides.
    """

    plus: ComplexSymmetricMatrix
    minus: ComplexSymmetricMatrix
    lambda0: Optional[float] = None
    Lambda0: Optional[float] = None
    M0: float = 0.0
    spatial_field: Optional[SpatialField] = field(default=None, compare=False)
    inferred_bounds: bool = field(default=False, init=False)

    def __post_init__(self):
        if self.plus.n != self.minus.n:
            raise DimensionError(
                f"plus and minus dimensions differ: {self.plus.n} vs {self.minus.n}")
        if self.plus.gamma != self.minus.gamma:
            raise InvalidInputError("a single gamma is shared by both sides; got "
                                    f"{self.plus.gamma} and {self.minus.gamma}")
        eigs = np.concatenate([np.linalg.eigvalsh(m) for m in self._real_parts()])
        inferred = False
        if self.lambda0 is None:
            object.__setattr__(self, "lambda0", float(eigs.min()))
            inferred = True
        if self.Lambda0 is None:
            object.__setattr__(self, "Lambda0", float(eigs.max()))
            inferred = True
        object.__setattr__(self, "inferred_bounds", inferred)
        for name in ("lambda0", "Lambda0", "M0"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise InvalidInputError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.M0 < 0:
            raise InvalidInputError("M0 must be >= 0")

    def _real_parts(self):
        return (self.plus.M, self.plus.N, self.minus.M, self.minus.N)

    @property
    def n(self):
        return self.plus.n

    @property
    def gamma(self):
        return self.plus.gamma

    def side(self, side):
        """Matrix for ``side`` given as 'plus'/'minus' or the index 2/1."""
        if side in ("plus", "+", 2):
            return self.plus
        if side in ("minus", "-", 1):
            return self.minus
        raise InvalidInputError(f"unknown side {side!r}")

    def matrices_at(self, x):
        """Complex A+(x), A-(x) with shape (..., n, n).

        Without a spatial field both are the constant base matrices.
        """
        x = np.asarray(x, dtype=float)
        if self.spatial_field is None:
            shape = x.shape[:-1] + (self.n, self.n)
            return (np.broadcast_to(self.plus.a, shape), np.broadcast_to(self.minus.a, shape))
        return self.spatial_field(x)

    def with_gamma(self, gamma):
        return CoefficientPair(
            ComplexSymmetricMatrix(self.plus.M, self.plus.N, gamma),
            ComplexSymmetricMatrix(self.minus.M, self.minus.N, gamma),
            None if self.inferred_bounds else self.lambda0,
            None if self.inferred_bounds else self.Lambda0,
            self.M0, self.spatial_field)

    def frozen(self):
        """The same pair with the spatial field dropped (coefficients at 0)."""
        return CoefficientPair(self.plus, self.minus,
                               None if self.inferred_bounds else self.lambda0,
                               None if self.inferred_bounds else self.Lambda0,
                               0.0, None)


@dataclass(frozen=True)
class DerivedConstants:
    lambda_tilde1: float
    lambda_tilde2: float
    gamma0: float
    lambda0: float = 1.0
    Lambda0: float = 1.0


@dataclass(frozen=True)
class MatrixCheck:
    side: str
    matrix: str
    eig_min: float
    eig_max: float
    lower_margin: float
    upper_margin: float
    ok: bool


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    n: int
    gamma: float
    lambda0: float
    Lambda0: float
    inferred_bounds: bool
    symmetry_defect: dict
    checks: list
    messages: list

    def to_dict(self):
        return {
            "passed": self.passed,
            "n": self.n,
            "gamma": self.gamma,
            "lambda0": self.lambda0,
            "Lambda0": self.Lambda0,
            "inferred_bounds": self.inferred_bounds,
            "symmetry_defect": self.symmetry_defect,
            "checks": [asdict(c) for c in self.checks],
            "messages": list(self.messages),
        }


def validate(pair: CoefficientPair) -> ValidationReport:
    """Check symmetry and the two-sided ellipticity bounds of M and N."""
    tol = TOL.eig_margin
    checks, messages = [], []
    sym = {}
    l0, L0 = pair.lambda0, pair.Lambda0
    if not (0 < l0 <= L0):
        messages.append(f"ellipticity constants must satisfy 0 < lambda0 <= Lambda0 "
                        f"(got {l0}, {L0})")
    for side in ("plus", "minus"):
        mat = pair.side(side)
        sym[side] = max(mat.symmetry_defect,
                        float(np.max(np.abs(mat.M - mat.M.T))),
                        float(np.max(np.abs(mat.N - mat.N.T))))
        if sym[side] != 0.0:
            messages.append(f"{side}: matrix not symmetric (defect {sym[side]:.3e})")
        for name in ("M", "N"):
            w = np.linalg.eigvalsh(getattr(mat, name))
            lo, hi = float(w[0]), float(w[-1])
            ok = (lo - l0 >= -tol) and (L0 - hi >= -tol)
            if not ok:
                messages.append(f"{side}.{name}: eigenvalues [{lo:.6g}, {hi:.6g}] not in "
                                f"[{l0:.6g}, {L0:.6g}]")
            checks.append(MatrixCheck(side, name, lo, hi, lo - l0, L0 - hi, ok))
    passed = (not messages) and 0 < l0 <= L0
    return ValidationReport(passed, pair.n, pair.gamma, l0, L0, pair.inferred_bounds,
                            sym, checks, messages)


def gamma_threshold(lambda0, Lambda0, n):
    """Smallness threshold on gamma guaranteeing det T != 0."""
    if not (lambda0 > 0 and Lambda0 > 0):
        raise InvalidInputError("lambda0 and Lambda0 must be positive")
    if lambda0 > Lambda0:
        raise InvalidInputError("need lambda0 <= Lambda0")
    if n < 2:
        raise InvalidInputError("n must be >= 2")
    l4, L4 = lambda0 ** 4, Lambda0 ** 4
    return np.sqrt(2.0) * lambda0 ** 5 / (Lambda0 ** 3 * np.sqrt(n * l4 + n * n * L4))


def derived_constants(pair_or_bounds, n=None) -> DerivedConstants:
    if isinstance(pair_or_bounds, CoefficientPair):
        l0, L0, n = pair_or_bounds.lambda0, pair_or_bounds.Lambda0, pair_or_bounds.n
    else:
        l0, L0 = pair_or_bounds
    lt1 = (l0 / L0) ** 2
    lt2 = np.sqrt(n) * (L0 / l0) ** 2
    return DerivedConstants(float(lt1), float(lt2), float(gamma_threshold(l0, L0, n)),
                            float(l0), float(L0))


def random_spd(rng, n, lo, hi):
    """Q^T D Q with D uniform in [lo, hi] and Q Haar-orthogonal."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    d = rng.uniform(lo, hi, size=n)
    m = (q.T * d) @ q
    return 0.5 * (m + m.T)


def random_pair(rng, n=3, gamma=None, lambda0=1.0, Lambda0=2.0, gamma_max=1.0):
    """A random validated pair with spectra of M, N in [lambda0, Lambda0]."""
    if gamma is None:
        gamma = rng.uniform(0.0, gamma_max)
    mats = [random_spd(rng, n, lambda0, Lambda0) for _ in range(4)]
    return CoefficientPair(ComplexSymmetricMatrix(mats[0], mats[1], gamma),
                           ComplexSymmetricMatrix(mats[2], mats[3], gamma),
                           lambda0, Lambda0)


class LipschitzPerturbation:
    """Spatial field ``A(x) = A(0) * (1 + amplitude * sin(k . x))``.

    With ``vertical_only`` the phase depends on x_n alone. The factor stays in
    [1 - amplitude, 1 + amplitude], so ellipticity survives with bounds scaled
    by that factor; the Lipschitz constant is amplitude * |k| * max|A(0)|.
    """

    def __init__(self, plus, minus, amplitude=0.1, wavenumber=2.0, vertical_only=False):
        if not 0 <= amplitude < 1:
            raise InvalidInputError("amplitude must lie in [0, 1)")
        self.a_plus = np.asarray(plus.a)
        self.a_minus = np.asarray(minus.a)
        self.amplitude = float(amplitude)
        self.n = self.a_plus.shape[0]
        if vertical_only:
            k = np.zeros(self.n)
            k[-1] = wavenumber
        else:
            k = np.full(self.n, wavenumber / np.sqrt(self.n))
        self.k = k

    @property
    def lipschitz(self):
        scale = max(np.abs(self.a_plus).max(), np.abs(self.a_minus).max())
        return self.amplitude * float(np.linalg.norm(self.k)) * float(scale)

    def factor(self, x):
        x = np.asarray(x, dtype=float)
        return 1.0 + self.amplitude * np.sin(x @ self.k)

    def __call__(self, x):
        f = self.factor(x)[..., None, None]
        return f * self.a_plus, f * self.a_minus


def perturbed_pair(pair, amplitude=0.1, wavenumber=2.0, vertical_only=False):
    """Attach a :class:`LipschitzPerturbation` to ``pair``; the bounds widen by
    the factor range so the hypotheses keep holding along the field."""
    fld = LipschitzPerturbation(pair.plus, pair.minus, amplitude, wavenumber, vertical_only)
    return CoefficientPair(pair.plus, pair.minus,
                           pair.lambda0 * (1 - amplitude), pair.Lambda0 * (1 + amplitude),
                           fld.lipschitz, fld)


def pair_from_config(cfg) -> CoefficientPair:
    """Build a pair from the coefficient schema
    ``{"n", "gamma", "plus": {"M", "N"}, "minus": {...}, "lambda0"?, "Lambda0"?, "M0"?}``.
    """
    try:
        n = int(cfg["n"])
        gamma = float(cfg.get("gamma", 0.0))
        sides = {}
        for side in ("plus", "minus"):
            spec = cfg[side]
            if "gamma" in spec and float(spec["gamma"]) != gamma:
                raise InvalidInputError("per-side gamma is not supported; use the "
                                        "top-level 'gamma'")
            M = spec["M"]
            N = spec.get("N", M)
            sides[side] = ComplexSymmetricMatrix(M, N, gamma)
    except KeyError as exc:
        raise InvalidInputError(f"coefficient config is missing key {exc}") from None
    if sides["plus"].n != n:
        raise DimensionError(f"declared n={n} but matrices are {sides['plus'].n}x{sides['plus'].n}")
    return CoefficientPair(sides["plus"], sides["minus"], cfg.get("lambda0"),
                           cfg.get("Lambda0"), float(cfg.get("M0") or 0.0))
