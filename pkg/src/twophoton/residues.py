"""Iterated contour integration of rational-times-exponential integrands.

An integrand over real variables ``v`` is a product of affine factors
``(A . v + b + i delta s)^(-m)`` times ``exp(i sum_v v (L_v . x))`` where ``x`` are
external coordinates.  Integrating one variable closes the contour in the
half-plane where the exponential decays; the sign of ``L_v . x`` becomes a step
function.  Repeating for every variable yields a finite sum of
``poly(x) exp(i rates . x)`` pieces on wedges: a :class:`KernelSum`.

Higher-order poles appear whenever two substituted factors coincide, so the
residue formula keeps the full Taylor expansion and emits polynomial
prefactors in the coordinates.
"""
from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field

import numpy as np

from .model import DegenerateSpectrumError

_TWO_PI_I = 2j * math.pi


class ResidueError(RuntimeError):
    """Integrand shape outside what the residue engine can close."""


@dataclass(frozen=True)
class ExpTerm:
    """``coeff * prod(x**powers) * exp(i rates . x)`` on ``{c . x < 0 for c in support}``."""

    coeff: complex
    powers: tuple[int, ...]
    rates: tuple[complex, ...]
    support: tuple[tuple[float, ...], ...] = ()

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        val = self.coeff * np.exp(1j * (x @ np.asarray(self.rates)))
        for i, p in enumerate(self.powers):
            if p:
                val = val * x[..., i] ** p
        for c in self.support:
            s = x @ np.asarray(c)
            val = val * np.where(s < 0, 1.0, np.where(s == 0, 0.5, 0.0))
        return val

    def is_decaying(self, tol: float = 1e-9) -> bool:
        """Check ``Im(rates) . v >= 0`` on every direction ``v`` of the support cone."""
        from scipy.optimize import linprog

        im = np.imag(np.asarray(self.rates))
        n = len(im)
        if not np.any(np.abs(im) > tol):
            return True
        a_ub = np.array(self.support, dtype=float) if self.support else None
        b_ub = np.zeros(len(self.support)) if self.support else None
        res = linprog(
            im, A_ub=a_ub, b_ub=b_ub, bounds=[(-1, 1)] * n, method="highs"
        )
        return res.status == 0 and res.fun >= -tol * max(1.0, np.abs(im).max())


@dataclass
class KernelSum:
    """Finite sum of :class:`ExpTerm` plus an optional identity (delta) part."""

    terms: list[ExpTerm]
    arity: int
    has_delta: bool = False

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1], dtype=complex)
        for t in self.terms:
            out = out + t(x)
        return out

    def __add__(self, other: KernelSum) -> KernelSum:
        if other.arity != self.arity:
            raise ValueError("arity mismatch")
        return KernelSum(
            self.terms + other.terms, self.arity, self.has_delta or other.has_delta
        )

    def scaled(self, c: complex) -> KernelSum:
        return KernelSum(
            [ExpTerm(c * t.coeff, t.powers, t.rates, t.support) for t in self.terms],
            self.arity,
            self.has_delta,
        )

    def compose(self, a: np.ndarray) -> KernelSum:
        """Substitute ``x = a @ r``; returns a kernel in the coordinates ``r``."""
        a = np.asarray(a, dtype=float)
        nx, nr = a.shape
        if nx != self.arity:
            raise ValueError("matrix rows must match kernel arity")
        out = []
        for t in self.terms:
            rates = tuple(complex(v) for v in a.T @ np.asarray(t.rates))
            support = tuple(tuple(float(v) for v in a.T @ np.asarray(c)) for c in t.support)
            poly = {(0,) * nr: t.coeff}
            for i, p in enumerate(t.powers):
                for _ in range(p):
                    poly = _poly_mul(poly, _linear_poly(a[i]))
            for mono, c in poly.items():
                if c != 0:
                    out.append(ExpTerm(c, mono, rates, support))
        return KernelSum(_merge_terms(out), nr, self.has_delta)

    def dump(self) -> str:
        """One line per term: coefficient, monomial powers, rates and support."""
        lines = []
        for t in self.terms:
            rates = " ".join(f"({r.real:.16e},{r.imag:.16e})" for r in t.rates)
            sup = " & ".join(
                "[" + ",".join(f"{v + 0.0:+g}" for v in c) + "].x<0" for c in t.support
            )
            lines.append(
                f"coeff=({t.coeff.real:.16e},{t.coeff.imag:.16e}) "
                f"powers={list(t.powers)} rates={rates} support={sup or 'all'}"
            )
        return "\n".join(lines) + "\n"


def parse_dump(text: str) -> list[dict]:
    """Inverse of :meth:`KernelSum.dump`, for golden-file comparison."""
    import re

    num = r"\(([-+0-9.eE]+),([-+0-9.eE]+)\)"
    rows = []
    for line in text.strip().splitlines():
        head, rest = line.split(" powers=")
        m = re.match(r"coeff=" + num, head)
        coeff = complex(float(m.group(1)), float(m.group(2)))
        powers_s, rest = rest.split(" rates=")
        rates_s, sup_s = rest.split(" support=")
        rates = [complex(float(a), float(b)) for a, b in re.findall(num, rates_s)]
        sup = []
        if sup_s != "all":
            for c in sup_s.split(" & "):
                sup.append(tuple(float(v) for v in c[1 : c.index("]")].split(",")))
        rows.append(
            dict(coeff=coeff, powers=ast.literal_eval(powers_s), rates=rates, support=sup)
        )
    return rows


# --- polynomial helpers (dict: monomial exponent tuple -> complex) ---------


def _linear_poly(vec) -> dict:
    n = len(vec)
    poly = {}
    for i, v in enumerate(vec):
        if v != 0:
            mono = tuple(1 if j == i else 0 for j in range(n))
            poly[mono] = complex(v)
    return poly


def _poly_mul(p1: dict, p2: dict) -> dict:
    out: dict = {}
    for m1, c1 in p1.items():
        for m2, c2 in p2.items():
            m = tuple(a + b for a, b in zip(m1, m2))
            out[m] = out.get(m, 0) + c1 * c2
    return out


def _poly_pow(p: dict, n: int, nvar: int) -> dict:
    out = {(0,) * nvar: 1.0 + 0j}
    for _ in range(n):
        out = _poly_mul(out, p)
    return out


# --- integrand representation ----------------------------------------------


@dataclass
class Factor:
    """Affine factor ``a . v + b + i delta * dsign``; ``power`` < 0 means numerator."""

    a: np.ndarray
    b: complex
    dsign: int
    power: int

    def same_as(self, other: Factor, tol: float) -> bool:
        return (
            np.array_equal(self.a, other.a)
            and abs(self.b - other.b) <= tol
            and self.dsign == other.dsign
        )


@dataclass
class Piece:
    """Intermediate term during iterated integration."""

    coeff: complex
    poly: dict
    lam: np.ndarray  # (nvar, ncoord): exponent i * v . (lam[v] . x)
    rates: np.ndarray  # (ncoord,) complex
    factors: list[Factor]
    support: list[tuple[float, ...]] = field(default_factory=list)


def _normalise(f: Factor, tol: float) -> tuple[Factor | None, complex]:
    """Scale so the first nonzero variable coefficient is 1.

    Returns the normalised factor (None if constant) and the multiplicative
    constant contributed to the coefficient.
    """
    nz = np.flatnonzero(f.a)
    if len(nz) == 0:
        val = f.b
        if abs(val) <= tol:
            raise DegenerateSpectrumError(
                "integrand factor collapsed to zero: coinciding poles"
            )
        return None, val ** (-f.power)
    lead = f.a[nz[0]]
    dsign = int(np.sign(lead)) * f.dsign
    nf = Factor(f.a / lead, f.b / lead, dsign, f.power)
    return nf, complex(lead) ** (-f.power)


def _canonical(piece: Piece, tol: float) -> Piece | None:
    """Normalise and merge factors; drop the piece if its coefficient vanishes."""
    coeff = piece.coeff
    merged: list[Factor] = []
    for f in piece.factors:
        nf, c = _normalise(f, tol)
        coeff *= c
        if nf is None:
            continue
        for g in merged:
            if g.same_as(nf, tol):
                g.power += nf.power
                break
        else:
            merged.append(nf)
    merged = [f for f in merged if f.power != 0]
    if coeff == 0:
        return None
    return Piece(coeff, piece.poly, piece.lam, piece.rates, merged, piece.support)


def _pole_side(f: Factor, w: int, tol: float) -> int:
    """+1 if the factor's pole in variable ``w`` lies in the upper half-plane."""
    im = -f.b.imag / f.a[w]
    if abs(im) > tol:
        return 1 if im > 0 else -1
    if f.dsign == 0:
        raise ResidueError("pole on the real integration axis")
    return 1 if -f.dsign / f.a[w] > 0 else -1


def _integrate_var(piece: Piece, w: int, tol: float) -> list[Piece]:
    ncoord = piece.lam.shape[1]
    lam_w = piece.lam[w].copy()
    poles = [f for f in piece.factors if f.a[w] != 0 and f.power > 0]
    numer = [f for f in piece.factors if f.a[w] != 0 and f.power < 0]
    deficit = sum(f.power for f in poles) + sum(f.power for f in numer)
    zero_lam = not np.any(lam_w)
    if deficit < (2 if zero_lam else 1):
        raise ResidueError(
            f"integrand does not decay in variable {w} (degree deficit {deficit})"
        )
    out = []
    sides = (1,) if zero_lam else (1, -1)
    for side in sides:
        chosen = [f for f in poles if _pole_side(f, w, tol) == side]
        sign = _TWO_PI_I if side > 0 else -_TWO_PI_I
        # side>0 needs lam_w . x > 0, i.e. (-lam_w) . x < 0
        cond = [] if zero_lam else [tuple(float(v) for v in -side * lam_w)]
        for pf in chosen:
            out.extend(_residue(piece, pf, w, sign, cond, ncoord, tol))
    return out


def _residue(piece, pf, w, sign, cond, ncoord, tol) -> list[Piece]:
    m = pf.power
    aw = pf.a[w]
    # pole: w = p_vec . v + p_const
    p_vec = -pf.a / aw
    p_vec[w] = 0.0
    p_const = -pf.b / aw
    lam_w = piece.lam[w]

    lam = piece.lam.copy()
    lam += np.outer(p_vec, lam_w)
    lam[w] = 0.0
    rates = piece.rates + p_const * lam_w

    others = []
    for f in piece.factors:
        if f is pf:
            continue
        alpha = f.a[w]
        a_new = f.a + alpha * p_vec
        a_new[w] = 0.0
        b_new = f.b + alpha * p_const
        others.append((Factor(a_new, b_new, f.dsign, f.power), alpha))

    base_coeff = piece.coeff * sign * complex(aw) ** (-m)
    lin = _linear_poly(1j * lam_w)
    active = [i for i, (_, alpha) in enumerate(others) if alpha != 0]
    pieces = []
    # distribute the m-1 derivatives among the exponential and active factors
    for ks in _compositions(m - 1, 1 + len(active)):
        k0, rest = ks[0], ks[1:]
        coeff = base_coeff / math.factorial(k0)
        poly = _poly_mul(piece.poly, _poly_pow(lin, k0, ncoord)) if k0 else piece.poly
        factors = []
        kmap = dict(zip(active, rest))
        for i, (f, alpha) in enumerate(others):
            k = kmap.get(i, 0)
            if k:
                coeff *= _binom_neg(f.power, k) * alpha**k
            factors.append(Factor(f.a.copy(), f.b, f.dsign, f.power + k))
        cand = Piece(coeff, poly, lam.copy(), rates.copy(), factors, piece.support + cond)
        cand = _canonical(cand, tol)
        if cand is not None:
            pieces.append(cand)
    return pieces


def _binom_neg(m: int, k: int) -> float:
    """Taylor coefficient binom(-m, k) of (1 + u)^(-m)."""
    out = 1.0
    for j in range(k):
        out *= (-m - j) / (j + 1)
    return out


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _simplify_support(support) -> tuple | None:
    """Deduplicate wedge conditions; None if two conditions contradict."""
    seen = []
    for c in support:
        v = np.asarray(c, dtype=float)
        v = v / np.abs(v).max()
        if any(np.allclose(v, s) for s in seen):
            continue
        if any(np.allclose(v, -s) for s in seen):
            return None
        seen.append(v)
    order = sorted(seen, key=lambda v: tuple(v))
    return tuple(tuple(float(x) for x in v) for v in order)


def _merge_terms(terms: list[ExpTerm], rtol: float = 1e-11) -> list[ExpTerm]:
    groups: dict = {}
    for t in terms:
        key = (
            t.powers,
            tuple((round(r.real, 9), round(r.imag, 9)) for r in t.rates),
            t.support,
        )
        if key in groups:
            g = groups[key]
            groups[key] = ExpTerm(g.coeff + t.coeff, g.powers, g.rates, g.support)
        else:
            groups[key] = t
    scale = max((abs(t.coeff) for t in groups.values()), default=0.0)
    return [t for t in groups.values() if abs(t.coeff) > rtol * scale * 1e-3]


def integrate_rational_exp(
    factors: list[Factor],
    lam: np.ndarray,
    order: tuple[int, ...],
    coeff: complex = 1.0,
    tol: float = 1e-12,
) -> KernelSum:
    """Integrate over every variable (in ``order``) along the real axis.

    ``factors`` are denominator factors (``power`` > 0) or numerator factors
    (``power`` < 0).  ``lam[v]`` is the coordinate vector multiplying ``v`` in
    the exponent.  Step-function supports come out of contour closure.
    """
    lam = np.asarray(lam, dtype=float)
    nvar, ncoord = lam.shape
    if sorted(order) != list(range(nvar)):
        raise ValueError("order must be a permutation of the variables")
    start = Piece(
        complex(coeff),
        {(0,) * ncoord: 1.0 + 0j},
        lam,
        np.zeros(ncoord, dtype=complex),
        [Factor(np.asarray(f.a, float), complex(f.b), f.dsign, f.power) for f in factors],
    )
    scale = max([1.0] + [abs(f.b) for f in factors])
    pieces = [_canonical(start, tol * scale)]
    for w in order:
        nxt = []
        for pc in pieces:
            nxt.extend(_integrate_var(pc, w, tol * scale))
        pieces = nxt
    terms = []
    for pc in pieces:
        if pc.factors:
            raise ResidueError("leftover variable dependence after integration")
        sup = _simplify_support(pc.support)
        if sup is None:
            continue
        rates = tuple(complex(r) for r in pc.rates)
        for mono, c in pc.poly.items():
            if c != 0:
                terms.append(ExpTerm(complex(pc.coeff * c), mono, rates, sup))
    return KernelSum(_merge_terms(terms), ncoord)


def factor(a, b=0.0, power=1, dsign=0) -> Factor:
    return Factor(np.asarray(a, dtype=float), complex(b), dsign, power)
