"""Chart models: symplectic form, Poisson tensor, connection and curvature as jets.

Conventions
-----------
* ``Lambda^{ij} omega_{kj} = delta^i_k``.
* Complex frames order coordinates ``z^1..z^n, zbar^1..zbar^n``; the Kaehler
  matrix ``H_{kl} = omega_{k lbar}`` enters as ``omega = (i/2) H_{kl} dz^k ^ dzbar^l``
  and its inverse ``G`` satisfies ``G[k][l] H[t][l] = delta_kt``.
* ``R^t_{jkl} = d_k Gamma^t_{lj} - d_l Gamma^t_{kj} + Gamma^t_{km} Gamma^m_{lj}
  - Gamma^t_{lm} Gamma^m_{kj}`` and the curvature section is
  ``1/4 omega_{it} R^t_{jkl} y^i y^j (x) dx^k ^ dx^l``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

from gmpy2 import mpq

from .galg import Caps, PairingTensor, Section, pi_type
from .jets import Frame, Jet, Scalar, SingularityError, StructuralError
from .report import Report

__all__ = [
    "ChartModel",
    "flat_symplectic",
    "flat_kaehler",
    "fubini_study",
    "poincare_disc",
    "kaehler_from_potential",
    "kaehler_from_matrix",
    "symplectic_from_matrix",
    "curvature_section",
    "curvature_tensor",
    "validate",
]

I = Scalar(0, 1)
Matrix = list  # list[list[Jet | None]]


@dataclass
class ChartModel:
    """All geometric data of one chart around a base point, as jets of order ``order``."""

    name: str
    n: int
    frame: Frame
    base_point: tuple[Scalar, ...]
    order: int
    omega: Matrix
    poisson: PairingTensor
    christoffel: dict
    connection: str
    kaehler: Matrix | None = None
    kaehler_inverse: Matrix | None = None
    wick_pairing: PairingTensor | None = None
    builder: Callable[[int], "ChartModel"] | None = field(default=None, repr=False, compare=False)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        by_upper: dict = {}
        for (k, i, j), g in sorted(self.christoffel.items()):
            if not g.is_zero():
                by_upper.setdefault(k, []).append((i, j, g))
        self.christoffel_by_upper = by_upper
        self._curvature = None

    @property
    def dim(self) -> int:
        return 2 * self.n

    @property
    def is_kaehler(self) -> bool:
        return self.frame is Frame.COMPLEX and self.kaehler is not None

    def at_order(self, order: int) -> "ChartModel":
        if order == self.order:
            return self
        if self.builder is None:
            raise StructuralError(f"model {self.name} cannot be rebuilt at order {order}")
        return self.builder(order)

    def coordinate(self, i: int, order: int | None = None) -> Jet:
        return Jet.coordinate(self.dim, self.order if order is None else order, i, self.base_point[i])

    def gamma(self, k: int, i: int, j: int) -> Jet:
        return self.christoffel.get((k, i, j)) or Jet.zero(self.dim, self.order)

    def curvature(self, caps: Caps | None = None) -> Section:
        if self._curvature is None:
            self._curvature = curvature_section(self)
        return self._curvature if caps is None else self._curvature.with_caps(caps)

    # fault injection used by validation tests
    def perturb_christoffel(self, k: int, i: int, j: int, amount=1) -> "ChartModel":
        chris = dict(self.christoffel)
        chris[(k, i, j)] = self.gamma(k, i, j) + Jet.constant(self.dim, self.order - 1, amount)
        return replace(self, christoffel=chris, builder=None)

    def perturb_omega(self, i: int, j: int, amount=1) -> "ChartModel":
        """Shift the single entry ``omega_ij`` (its partner ``omega_ji`` is left alone)."""
        om = [list(row) for row in self.omega]
        cur = om[i][j] if om[i][j] is not None else Jet.zero(self.dim, self.order)
        om[i][j] = cur + Jet.constant(self.dim, self.order, amount)
        return replace(self, omega=om, builder=None)

    def perturb_kaehler(self, k: int, l: int, amount=1) -> "ChartModel":
        """Shift ``H_{kl} = omega_{k lbar}`` alone, keeping the 2-form block consistent with it."""
        n = self.n
        H = [list(row) for row in self.kaehler]
        cur = H[k][l] if H[k][l] is not None else Jet.zero(self.dim, self.order)
        H[k][l] = cur + Jet.constant(self.dim, self.order, amount)
        om = [list(row) for row in self.omega]
        om[k][n + l] = H[k][l].scale(Scalar(0, mpq(1, 2)))
        om[n + l][k] = -om[k][n + l]
        return replace(self, omega=om, kaehler=H, builder=None)

    def transpose_omega(self) -> "ChartModel":
        """Swap omega_{ij} and omega_{ji}; the Kaehler block follows (it changes sign)."""
        d = self.dim
        om = [[self.omega[j][i] for j in range(d)] for i in range(d)]
        kae = None
        if self.kaehler is not None:
            kae = [[_neg(x) for x in row] for row in self.kaehler]
        return replace(self, omega=om, kaehler=kae, builder=None)


def _zero(model) -> Jet:
    return Jet.zero(model.dim, model.order)


def _neg(j: Jet | None) -> Jet | None:
    return None if j is None else -j


def _nz(j: Jet | None) -> Jet | None:
    return None if j is None or j.is_zero() else j


# -- small jet linear algebra -----------------------------------------------------------


def jet_matrix_inverse(M: Sequence[Sequence[Jet | None]], dim: int, order: int) -> Matrix:
    """Gauss-Jordan inverse of a matrix of jets; pivots need nonzero constant term."""
    n = len(M)
    zero = Jet.zero(dim, order)
    one = Jet.constant(dim, order, 1)
    A = [[(M[i][j] if M[i][j] is not None else zero) for j in range(n)]
         + [one if i == j else zero for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col].eval0()), None)
        if piv is None:
            raise SingularityError("matrix is singular at the base point")
        A[col], A[piv] = A[piv], A[col]
        inv = A[col][col].invert()
        A[col] = [x * inv for x in A[col]]
        for r in range(n):
            if r != col and not A[r][col].is_zero():
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return [[_nz(A[i][n + j]) for j in range(n)] for i in range(n)]


def _det_at_base(M: list[list[Scalar]]) -> Scalar:
    n = len(M)
    if n == 0:
        return Scalar(1)
    if n == 1:
        return M[0][0]
    out = Scalar(0)
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * _det_at_base(minor)
        out = out + term if j % 2 == 0 else out - term
    return out


# -- builders ---------------------------------------------------------------------------


def _complex_base_point(n: int, base_point) -> tuple[Scalar, ...]:
    """Frame coordinates ``(z, zbar)`` from ``n`` complex values or ``2n`` frame values."""
    pts = [Scalar.coerce(x) for x in (base_point if base_point is not None else [0] * n)]
    if len(pts) == n:
        return tuple(pts) + tuple(p.conjugate() for p in pts)
    if len(pts) == 2 * n:
        for k in range(n):
            if pts[n + k] != pts[k].conjugate():
                raise StructuralError("zbar coordinates of the base point must conjugate the z coordinates")
        return tuple(pts)
    raise StructuralError(f"base point needs {n} or {2 * n} entries, got {len(pts)}")


def _real_base_point(dim: int, base_point) -> tuple[Scalar, ...]:
    pts = [Scalar.coerce(x) for x in (base_point if base_point is not None else [0] * dim)]
    if len(pts) != dim:
        raise StructuralError(f"base point needs {dim} entries, got {len(pts)}")
    if any(not p.is_real() for p in pts):
        raise StructuralError("real frame base point must be real")
    return tuple(pts)


def kaehler_from_matrix(name: str, n: int, base_point, order: int,
                        metric: Callable[[list[Jet], list[Jet], int], Matrix],
                        connection: str = "kaehler", params: dict | None = None) -> ChartModel:
    """Kaehler model from ``metric(z, zbar, order) -> H`` with ``H[k][l] = omega_{k lbar}``."""
    dim = 2 * n
    base = _complex_base_point(n, base_point)
    z = [Jet.coordinate(dim, order, k, base[k]) for k in range(n)]
    zb = [Jet.coordinate(dim, order, n + k, base[n + k]) for k in range(n)]
    H = [[_nz(x) for x in row] for row in metric(z, zb, order)]
    HT = [[H[l][k] for l in range(n)] for k in range(n)]
    G = jet_matrix_inverse(HT, dim, order)
    omega: Matrix = [[None] * dim for _ in range(dim)]
    poisson = {}
    wick = {}
    for k in range(n):
        for l in range(n):
            if H[k][l] is not None:
                omega[k][n + l] = H[k][l].scale(Scalar(0, mpq(1, 2)))
                omega[n + l][k] = -omega[k][n + l]
            if G[k][l] is not None:
                lam = G[k][l].scale(Scalar(0, -2))        # (2/i) G
                poisson[(k, n + l)] = lam
                poisson[(n + l, k)] = -lam
                wick[(k, n + l)] = G[k][l].scale(Scalar(0, -4))  # (4/i) G
    if connection == "kaehler":
        chris = _kaehler_christoffel(n, H, G)
    elif connection == "symplectic-flat":
        chris = _symplectic_christoffel(dim, omega, poisson)
    else:
        raise StructuralError(f"unknown connection {connection!r}")

    def rebuild(o: int) -> ChartModel:
        return kaehler_from_matrix(name, n, base_point, o, metric, connection, params)

    return ChartModel(name=name, n=n, frame=Frame.COMPLEX, base_point=base, order=order,
                      omega=omega, poisson=PairingTensor(dim, poisson, "weyl"), christoffel=chris,
                      connection=connection, kaehler=H, kaehler_inverse=G,
                      wick_pairing=PairingTensor(dim, wick, "wick"), builder=rebuild,
                      params=dict(params or {}))


def _kaehler_christoffel(n: int, H: Matrix, G: Matrix) -> dict:
    """``Gamma^k_ij = G[k][m] d_i H[j][m]`` and its conjugate ``Gamma^{kbar}_{ibar jbar}``."""
    chris = {}
    for k, i, j in itertools.product(range(n), repeat=3):
        acc = None
        acc_b = None
        for m in range(n):
            if G[k][m] is not None and H[j][m] is not None:
                t = G[k][m] * H[j][m].partial(i)
                acc = t if acc is None else acc + t
            if G[m][k] is not None and H[m][j] is not None:
                t = G[m][k] * H[m][j].partial(n + i)
                acc_b = t if acc_b is None else acc_b + t
        if acc is not None and not acc.is_zero():
            chris[(k, i, j)] = acc
        if acc_b is not None and not acc_b.is_zero():
            chris[(n + k, n + i, n + j)] = acc_b
    return chris


def _symplectic_christoffel(dim: int, omega: Matrix, poisson: dict) -> dict:
    """Torsion-free symplectic connection built from the flat coordinate connection.

    ``omega_{mk} Gamma^m_ij = (d_i omega_jk + d_j omega_ik) / 3``, solved with
    ``(omega^{-1})_{km} = Lambda^{mk}``.
    """
    third = Scalar(mpq(1, 3))
    T = {}
    for i, j, k in itertools.product(range(dim), repeat=3):
        acc = None
        for a, b in ((i, (j, k)), (j, (i, k))):
            w = omega[b[0]][b[1]]
            if w is not None:
                d = w.partial(a)
                acc = d if acc is None else acc + d
        if acc is not None and not acc.is_zero():
            T[(i, j, k)] = acc.scale(third)
    chris = {}
    for (i, j, k), t in T.items():
        for m in range(dim):
            lam = poisson.get((m, k))
            if lam is None:
                continue
            term = t * lam
            chris[(m, i, j)] = term if (m, i, j) not in chris else chris[(m, i, j)] + term
    return {k: v for k, v in chris.items() if not v.is_zero()}


def flat_kaehler(n: int = 1, base_point=None, order: int = 8) -> ChartModel:
    """``C^n`` with ``omega_{k lbar} = delta_kl``."""
    def metric(z, zb, o):
        d = 2 * n
        return [[Jet.constant(d, o, 1 if k == l else 0) for l in range(n)] for k in range(n)]
    return kaehler_from_matrix(f"flat-kaehler:{n}", n, base_point, order, metric,
                               params={"n": n})


def fubini_study(n: int = 1, base_point=None, scale=1, order: int = 8,
                 connection: str = "kaehler") -> ChartModel:
    """``omega_{k lbar} = scale * d_k d_lbar log(1 + |z|^2)`` in an affine chart of ``CP^n``."""
    lam = Scalar.coerce(scale)
    if not lam.is_real() or lam.re <= 0:
        raise StructuralError("scale must be a positive rational")

    def metric(z, zb, o):
        q = Jet.constant(2 * n, o, 1)
        for k in range(n):
            q = q + z[k] * zb[k]
        q2inv = (q * q).invert()
        return [[((q if k == l else Jet.zero(2 * n, o)) - zb[k] * z[l]) * q2inv * lam
                 for l in range(n)] for k in range(n)]

    return kaehler_from_matrix(f"fubini-study:{n}", n, base_point, order, metric, connection,
                               params={"n": n, "scale": str(lam)})


def poincare_disc(base_point=None, scale=1, order: int = 8, n: int = 1,
                  connection: str = "kaehler") -> ChartModel:
    """``omega_{k lbar} = scale * d_k d_lbar (-log(1 - |z|^2))`` on the unit ball."""
    lam = Scalar.coerce(scale)
    if not lam.is_real() or lam.re <= 0:
        raise StructuralError("scale must be a positive rational")
    base = _complex_base_point(n, base_point)
    r2 = sum((base[k] * base[n + k] for k in range(n)), Scalar(0))
    if r2.re >= 1:
        raise StructuralError("base point must lie inside the unit ball")

    def metric(z, zb, o):
        p = Jet.constant(2 * n, o, 1)
        for k in range(n):
            p = p - z[k] * zb[k]
        p2inv = (p * p).invert()
        return [[((p if k == l else Jet.zero(2 * n, o)) + zb[k] * z[l]) * p2inv * lam
                 for l in range(n)] for k in range(n)]

    return kaehler_from_matrix("poincare-disc" if n == 1 else f"poincare-ball:{n}", n, base_point, order,
                               metric, connection, params={"n": n, "scale": str(lam)})


def kaehler_from_potential(n: int, potential: Callable[[list[Jet], list[Jet], int], Jet],
                           base_point=None, order: int = 8, name: str = "user-kaehler",
                           connection: str = "kaehler") -> ChartModel:
    """Kaehler model from a potential ``K``: ``omega_{k lbar} = d_k d_lbar K``."""
    def metric(z, zb, o):
        d = 2 * n
        base = _complex_base_point(n, base_point)
        zz = [Jet.coordinate(d, o + 2, k, base[k]) for k in range(n)]
        zzb = [Jet.coordinate(d, o + 2, n + k, base[n + k]) for k in range(n)]
        K = potential(zz, zzb, o + 2)
        return [[K.partial(k).partial(n + l) for l in range(n)] for k in range(n)]
    return kaehler_from_matrix(name, n, base_point, order, metric, connection)


def symplectic_from_matrix(n: int, omega_fn: Callable[[list[Jet], int], Matrix],
                           base_point=None, order: int = 8, name: str = "user-symplectic") -> ChartModel:
    """Real-frame model from ``omega_fn(x, order) -> omega_{ij}``.

    The connection is the torsion-free symplectic one obtained by correcting
    the flat coordinate connection.
    """
    dim = 2 * n
    base = _real_base_point(dim, base_point)
    x = [Jet.coordinate(dim, order, i, base[i]) for i in range(dim)]
    om = [[_nz(w) for w in row] for row in omega_fn(x, order)]
    omT = [[om[j][i] for j in range(dim)] for i in range(dim)]
    lam = jet_matrix_inverse(omT, dim, order)  # Lambda = (omega^T)^{-1}
    poisson = {(i, j): lam[i][j] for i in range(dim) for j in range(dim) if lam[i][j] is not None}
    chris = _symplectic_christoffel(dim, om, poisson)

    def rebuild(o: int) -> ChartModel:
        return symplectic_from_matrix(n, omega_fn, base_point, o, name)

    return ChartModel(name=name, n=n, frame=Frame.REAL, base_point=base, order=order, omega=om,
                      poisson=PairingTensor(dim, poisson, "weyl"), christoffel=chris,
                      connection="symplectic-flat", builder=rebuild)


def flat_symplectic(n: int = 1, base_point=None, order: int = 8) -> ChartModel:
    """``R^{2n}`` with ``omega = dq^i ^ dp_i``, so ``Lambda^{i, n+i} = 1``."""
    def omega_fn(x, o):
        d = 2 * n
        om = [[None] * d for _ in range(d)]
        for i in range(n):
            om[i][n + i] = Jet.constant(d, o, 1)
            om[n + i][i] = Jet.constant(d, o, -1)
        return om
    model = symplectic_from_matrix(n, omega_fn, base_point, order, name=f"flat-symplectic:{n}")
    model.connection = "flat"
    return model


# -- curvature -------------------------------------------------------------------------------


def curvature_tensor(model: ChartModel) -> dict:
    """``R^t_{jkl}`` as a sparse dict of jets."""
    d = model.dim
    G = model.christoffel
    out = {}
    for t, j, k, l in itertools.product(range(d), repeat=4):
        if k == l:
            continue
        acc = []
        g = G.get((t, l, j))
        if g is not None:
            acc.append(g.partial(k))
        g = G.get((t, k, j))
        if g is not None:
            acc.append(-g.partial(l))
        for m in range(d):
            a, b = G.get((t, k, m)), G.get((m, l, j))
            if a is not None and b is not None:
                acc.append(a * b)
            a, b = G.get((t, l, m)), G.get((m, k, j))
            if a is not None and b is not None:
                acc.append(-(a * b))
        if acc:
            s = acc[0]
            for x in acc[1:]:
                s = s + x
            if not s.is_zero():
                out[(t, j, k, l)] = s
    return out


def lowered_curvature(model: ChartModel, Rt: dict | None = None) -> dict:
    """``omega_{it} R^t_{jkl}``."""
    Rt = curvature_tensor(model) if Rt is None else Rt
    out = {}
    for (t, j, k, l), r in Rt.items():
        for i in range(model.dim):
            w = model.omega[i][t]
            if w is None:
                continue
            key = (i, j, k, l)
            out[key] = w * r if key not in out else out[key] + w * r
    return {k: v for k, v in out.items() if not v.is_zero()}


def curvature_section(model: ChartModel, caps: Caps | None = None) -> Section:
    """``R = 1/4 omega_{it} R^t_{jkl} dx^i v dx^j (x) dx^k ^ dx^l``."""
    caps = caps or Caps.for_degree(2)
    d = model.dim
    rho = lowered_curvature(model)
    quarter = Scalar(mpq(1, 4))
    terms: dict = {}
    for (i, j, k, l), v in rho.items():
        alpha = [0] * d
        alpha[i] += 1
        alpha[j] += 1
        sign = 1 if k < l else -1
        key = (0, tuple(alpha), (min(k, l), max(k, l)))
        c = v.scale(quarter * sign)
        terms[key] = c if key not in terms else terms[key] + c
    return Section(d, model.frame, caps, terms)


def kaehler_curvature_section(model: ChartModel, caps: Caps | None = None) -> Section:
    """The Kaehler form ``(i/2) omega_{k tbar} R^{tbar}_{lbar i jbar} dz^k v dzbar^l (x) dz^i ^ dzbar^j``."""
    caps = caps or Caps.for_degree(2)
    n, d = model.n, model.dim
    Rt = curvature_tensor(model)
    half_i = Scalar(0, mpq(1, 2))
    terms: dict = {}
    for k, t, l, i, j in itertools.product(range(n), repeat=5):
        h = model.kaehler[k][t]
        r = Rt.get((n + t, n + l, i, n + j))
        if h is None or r is None:
            continue
        alpha = [0] * d
        alpha[k] += 1
        alpha[n + l] += 1
        key = (0, tuple(alpha), (i, n + j))
        c = (h * r).scale(half_i)
        terms[key] = c if key not in terms else terms[key] + c
    return Section(d, model.frame, caps, terms)


# -- validation -----------------------------------------------------------------------------


def _first(jets) -> Scalar:
    for j in jets:
        if j is not None and not j.is_zero():
            return j.first_nonzero()
    return Scalar(0)


def validate(model: ChartModel) -> Report:
    """Exact checks of every chart-model invariant; one entry per identity."""
    rep = Report(f"validate {model.name}")
    d = model.dim
    om = model.omega
    zero = Jet.zero(d, model.order)

    def w(i, j):
        return om[i][j] if om[i][j] is not None else zero

    rep.add("omega antisymmetric", _first(w(i, j) + w(j, i) for i in range(d) for j in range(d)))
    closed = []
    for i, j, k in itertools.combinations(range(d), 3):
        closed.append(w(j, k).partial(i) + w(k, i).partial(j) + w(i, j).partial(k))
    rep.add("omega closed", _first(closed))

    lam = model.poisson
    inv = []
    for i in range(d):
        for k in range(d):
            acc = Jet.constant(d, model.order, -1 if i == k else 0)
            for j in range(d):
                e = lam.entry(i, j)
                if e is not None and om[k][j] is not None:
                    acc = acc + e * om[k][j]
            inv.append(acc)
    rep.add("Lambda^ij omega_kj = delta^i_k", _first(inv))

    G = model.christoffel
    rep.add("torsion-free", _first(model.gamma(k, i, j) - model.gamma(k, j, i)
                                   for k in range(d) for i in range(d) for j in range(i + 1, d)))
    nab = []
    for k, i, j in itertools.product(range(d), repeat=3):
        acc = w(i, j).partial(k)
        for m in range(d):
            g = G.get((m, k, i))
            if g is not None and om[m][j] is not None:
                acc = acc - g * om[m][j]
            g = G.get((m, k, j))
            if g is not None and om[i][m] is not None:
                acc = acc - g * om[i][m]
        nab.append(acc)
    rep.add("nabla omega = 0", _first(nab))

    rho = lowered_curvature(model)
    sym = []
    for (i, j, k, l), v in rho.items():
        sym.append(v - rho.get((j, i, k, l), zero))
        sym.append(v + rho.get((i, j, l, k), zero))
    rep.add("omega_it R^t_jkl symmetric in ij, antisymmetric in kl", _first(sym))

    if model.frame is Frame.COMPLEX:
        n = model.n
        H = model.kaehler
        if H is None:
            rep.add_bool("Kaehler data present", False)
            return rep
        herm = []
        for k in range(n):
            for l in range(n):
                a = H[k][l].conjugate(Frame.COMPLEX) if H[k][l] is not None else zero
                b = H[l][k] if H[l][k] is not None else zero
                herm.append(a - b)
        rep.add("omega_{k lbar} Hermitian", _first(herm))
        at0 = [[(H[k][l].eval0() if H[k][l] is not None else Scalar(0)) for l in range(n)] for k in range(n)]
        minors = [_det_at_base([row[:m] for row in at0[:m]]) for m in range(1, n + 1)]
        bad = next((m for m in minors if not (m.is_real() and m.re > 0)), None)
        rep.add_bool("omega_{k lbar} positive at base point", bad is None, defect=bad)
        # omega_{k,n+l} must be (i/2) H_kl
        blk = []
        for k in range(n):
            for l in range(n):
                h = H[k][l] if H[k][l] is not None else zero
                blk.append(w(k, n + l) - h.scale(Scalar(0, mpq(1, 2))))
                blk.append(w(k, l))
                blk.append(w(n + k, n + l))
        rep.add("omega of type (1,1) with block (i/2) omega_{k lbar}", _first(blk))
        if model.connection == "kaehler":
            impure = [g for (k, i, j), g in G.items()
                      if not (max(k, i, j) < n or min(k, i, j) >= n)]
            rep.add("Christoffels of pure type", _first(impure))
            R = model.curvature()
            rep.add("curvature of symmetric type (1,1)",
                    (pi_type(R, 2, 0) + pi_type(R, 0, 2)).defect())
            rep.add("curvature matches Kaehler form", (R - kaehler_curvature_section(model)).defect())
    return rep
