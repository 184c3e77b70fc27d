"""Built-in anyon models and the combinators used to assemble the FQH ones.

Conventions: Z_N charges are labeled ``[k]_N`` with vacuum ``[0]_N``; product
charges render as ``(x,[k]_N)``.  ASCII aliases (``sigma``, ``psi``, ``eps``)
are accepted wherever a label is expected.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .fusion import FusionTensor, ModelDataError
from .model import AnyonModel, FBlock, assemble_f_blocks

PHI = (1.0 + math.sqrt(5.0)) / 2.0

_ALIASES = {"sigma": "σ", "psi": "ψ", "eps": "ε", "epsilon": "ε", "vac": "1"}


@dataclass(frozen=True)
class FqhChargeMeta:
    """Electric-charge bookkeeping for an FQH anyon model.

    ``counts[label]`` is the number of fundamental quasiholes making up the
    charge (mod ``period``); the electric charge is ``counts * electric_unit``
    in units of e.
    """

    quasihole: str
    electron: str
    electric_unit: Fraction
    counts: dict
    period: int

    def electric(self, label) -> Fraction:
        return self.counts[label] * self.electric_unit

    def sectors(self) -> dict:
        """Superselection partition: charges sharing a quasihole count."""
        return dict(self.counts)


# --------------------------------------------------------------------------
# elementary models


def trivial() -> AnyonModel:
    tensor = FusionTensor(1, 0, {(0, 0, 0): 1})
    blocks = assemble_f_blocks(tensor, lambda *args: 1.0)
    return AnyonModel("trivial", ("1",), "1", tensor, blocks, {(0, 0, 0): [[1.0]]})


def z_n(n: int, w) -> AnyonModel:
    """The Abelian Z_N model with braiding weight w (half-integer only for even N)."""
    w = Fraction(w).limit_denominator(2)
    if w.denominator not in (1, 2):
        raise ModelDataError(f"w must be integer or half-integer, got {w}")
    if w.denominator == 2 and n % 2 == 1:
        raise ModelDataError(f"half-integer w requires even N, got N={n}, w={w}")
    labels = tuple(f"[{k}]_{n}" for k in range(n))
    entries = {(a, b, (a + b) % n): 1 for a in range(n) for b in range(n)}
    tensor = FusionTensor(n, 0, entries)

    wf = float(w)
    if w.denominator == 1:
        f_entry = lambda a, b, c, d, r, col: 1.0  # noqa: E731
    else:

        def f_entry(a, b, c, d, r, col):
            return np.exp(1j * math.pi / n * a * (b + c - (b + c) % n))

    blocks = assemble_f_blocks(tensor, f_entry)
    r_blocks = {
        (a, b, (a + b) % n): [[np.exp(2j * math.pi * wf * a * b / n)]]
        for a in range(n)
        for b in range(n)
    }
    aliases = {str(k): labels[k] for k in range(n)}
    return AnyonModel(f"z_{n}^({w})", labels, labels[0], tensor, blocks, r_blocks, aliases)


def _fib_tensor() -> FusionTensor:
    # charges (1, ε)
    entries = {
        (0, 0, 0): 1,
        (0, 1, 1): 1,
        (1, 0, 1): 1,
        (1, 1, 0): 1,
        (1, 1, 1): 1,
    }
    return FusionTensor(2, 0, entries)


def _fib_model(name: str, conjugated: bool) -> AnyonModel:
    tensor = _fib_tensor()
    fmat = np.array(
        [[1.0 / PHI, 1.0 / math.sqrt(PHI)], [1.0 / math.sqrt(PHI), -1.0 / PHI]], dtype=complex
    )

    def f_entry(a, b, c, d, r, col):
        if (a, b, c, d) == (1, 1, 1, 1):
            return fmat[r[0], col[0]]
        return 1.0

    blocks = assemble_f_blocks(tensor, f_entry)
    r1 = np.exp(-4j * math.pi / 5.0)
    re = np.exp(3j * math.pi / 5.0)
    if conjugated:
        r1, re = np.conj(r1), np.conj(re)
    r_blocks = {
        (0, 0, 0): [[1.0]],
        (0, 1, 1): [[1.0]],
        (1, 0, 1): [[1.0]],
        (1, 1, 0): [[r1]],
        (1, 1, 1): [[re]],
    }
    return AnyonModel(name, ("1", "ε"), "1", tensor, blocks, r_blocks, dict(_ALIASES))


def fib() -> AnyonModel:
    """The Fibonacci model: charges {1, ε}, ε x ε = 1 + ε."""
    return _fib_model("fib", conjugated=False)


def fib_bar() -> AnyonModel:
    """Fibonacci with all R-symbols (hence spins) complex conjugated."""
    return _fib_model("fib_bar", conjugated=True)


def ising() -> AnyonModel:
    """The Ising model: charges {1, σ, ψ} with σ x σ = 1 + ψ."""
    entries = {
        (0, 0, 0): 1,
        (0, 1, 1): 1,
        (1, 0, 1): 1,
        (0, 2, 2): 1,
        (2, 0, 2): 1,
        (1, 1, 0): 1,
        (1, 1, 2): 1,
        (1, 2, 1): 1,
        (2, 1, 1): 1,
        (2, 2, 0): 1,
    }
    tensor = FusionTensor(3, 0, entries)
    isq = 1.0 / math.sqrt(2.0)
    fsigma = np.array([[isq, isq], [isq, -isq]], dtype=complex)  # rows/cols over (1, ψ)

    def f_entry(a, b, c, d, r, col):
        if (a, b, c, d) == (1, 1, 1, 1):
            i = 0 if r[0] == 0 else 1
            j = 0 if col[0] == 0 else 1
            return fsigma[i, j]
        if (a, b, c, d) in ((1, 2, 1, 2), (2, 1, 2, 1)):
            return -1.0
        return 1.0

    blocks = assemble_f_blocks(tensor, f_entry)
    r_blocks = {
        (0, 0, 0): [[1.0]],
        (0, 1, 1): [[1.0]],
        (1, 0, 1): [[1.0]],
        (0, 2, 2): [[1.0]],
        (2, 0, 2): [[1.0]],
        (1, 1, 0): [[np.exp(-1j * math.pi / 8.0)]],
        (1, 1, 2): [[np.exp(3j * math.pi / 8.0)]],
        (1, 2, 1): [[np.exp(-1j * math.pi / 2.0)]],
        (2, 1, 1): [[np.exp(-1j * math.pi / 2.0)]],
        (2, 2, 0): [[-1.0]],
    }
    return AnyonModel("ising", ("1", "σ", "ψ"), "1", tensor, blocks, r_blocks, dict(_ALIASES))


# --------------------------------------------------------------------------
# combinators


def _product_label(la: str, lb: str) -> str:
    return f"({la},{lb})"


def direct_product(ma: AnyonModel, mb: AnyonModel, name: str | None = None) -> AnyonModel:
    """Componentwise product model: every symbol is the product of the factors'."""
    na, nb = len(ma.charges), len(mb.charges)
    labels = tuple(_product_label(ma.charges[i], mb.charges[j]) for i in range(na) for j in range(nb))

    def comb(i, j):
        return i * nb + j

    entries = {}
    for (a1, b1, c1), m1 in ma.fusion.entries.items():
        for (a2, b2, c2), m2 in mb.fusion.entries.items():
            entries[(comb(a1, a2), comb(b1, b2), comb(c1, c2))] = m1 * m2
    tensor = FusionTensor(na * nb, comb(ma.vacuum_index, mb.vacuum_index), entries)

    blocks = {}
    for (a1, b1, c1, d1), blk1 in ma._f.items():
        for (a2, b2, c2, d2), blk2 in mb._f.items():
            rows = []
            for e1, al1, be1 in blk1.rows:
                for e2, al2, be2 in blk2.rows:
                    rows.append(
                        (
                            comb(e1, e2),
                            al1 * mb.fusion.n(a2, b2, e2) + al2,
                            be1 * mb.fusion.n(e2, c2, d2) + be2,
                        )
                    )
            cols = []
            for f1, mu1, nu1 in blk1.cols:
                for f2, mu2, nu2 in blk2.cols:
                    cols.append(
                        (
                            comb(f1, f2),
                            mu1 * mb.fusion.n(b2, c2, f2) + mu2,
                            nu1 * mb.fusion.n(a2, f2, d2) + nu2,
                        )
                    )
            mat = np.kron(blk1.mat, blk2.mat)
            rperm = sorted(range(len(rows)), key=lambda i: rows[i])
            cperm = sorted(range(len(cols)), key=lambda j: cols[j])
            blocks[(comb(a1, a2), comb(b1, b2), comb(c1, c2), comb(d1, d2))] = FBlock(
                tuple(rows[i] for i in rperm),
                tuple(cols[j] for j in cperm),
                mat[np.ix_(rperm, cperm)],
            )

    r_blocks = {}
    for (a1, b1, c1), r1 in ma._r.items():
        for (a2, b2, c2), r2 in mb._r.items():
            r_blocks[(comb(a1, a2), comb(b1, b2), comb(c1, c2))] = np.kron(r1, r2)

    aliases = {}
    alias_a = {**{lab: lab for lab in ma.charges}, **ma._aliases}
    alias_b = {**{lab: lab for lab in mb.charges}, **mb._aliases}
    for ka, va in alias_a.items():
        for kb, vb in alias_b.items():
            alias = _product_label(ka, kb)
            target = _product_label(va, vb)
            if alias != target:
                aliases[alias] = target
    return AnyonModel(
        name or f"{ma.name}x{mb.name}",
        labels,
        _product_label(ma.vacuum, mb.vacuum),
        tensor,
        blocks,
        r_blocks,
        aliases,
    )


def restrict(model: AnyonModel, spectrum, name: str | None = None) -> AnyonModel:
    """Restriction of a model to a fusion-closed sub-spectrum.

    The sub-spectrum must contain the vacuum and be closed under conjugation
    and fusion; D and the S-matrix are recomputed for the restricted charge
    set (they are not inherited).
    """
    keep = [model.index(lab) for lab in spectrum]
    if len(set(keep)) != len(keep):
        raise ModelDataError("spectrum contains duplicate charges")
    keep_set = set(keep)
    if model.vacuum_index not in keep_set:
        raise ModelDataError("spectrum must contain the vacuum")
    for a in keep:
        if model._conj[a] not in keep_set:
            raise ModelDataError(f"spectrum not closed under conjugation at {model.label(a)}")
    for a in keep:
        for b in keep:
            for c, _ in model.fusion.fuse(a, b):
                if c not in keep_set:
                    raise ModelDataError(
                        "spectrum not closed under fusion at "
                        f"({model.label(a)}, {model.label(b)}) -> {model.label(c)}"
                    )
    keep.sort()
    old2new = {old: new for new, old in enumerate(keep)}
    labels = tuple(model.label(old) for old in keep)
    entries = {
        (old2new[a], old2new[b], old2new[c]): m
        for (a, b, c), m in model.fusion.entries.items()
        if a in keep_set and b in keep_set and c in keep_set
    }
    tensor = FusionTensor(len(keep), old2new[model.vacuum_index], entries)

    def remap_labels(tup):
        return tuple((old2new[x], i, j) for x, i, j in tup)

    blocks = {}
    for (a, b, c, d), blk in model._f.items():
        if a in keep_set and b in keep_set and c in keep_set and d in keep_set:
            blocks[(old2new[a], old2new[b], old2new[c], old2new[d])] = FBlock(
                remap_labels(blk.rows), remap_labels(blk.cols), blk.mat.copy()
            )
    r_blocks = {
        (old2new[a], old2new[b], old2new[c]): blk.copy()
        for (a, b, c), blk in model._r.items()
        if a in keep_set and b in keep_set and c in keep_set
    }
    aliases = {k: v for k, v in model._aliases.items() if v in labels}
    return AnyonModel(
        name or f"{model.name}|{len(keep)}",
        labels,
        model.vacuum,
        tensor,
        blocks,
        r_blocks,
        aliases,
    )


# --------------------------------------------------------------------------
# FQH models


def moore_read() -> AnyonModel:
    """Moore-Read model: Ising x Z_8^(1/2) restricted to the matched-parity spectrum."""
    prod = direct_product(ising(), z_n(8, Fraction(1, 2)))
    spectrum = []
    for x, parity in (("1", 0), ("ψ", 0), ("σ", 1)):
        for k in range(8):
            if k % 2 == parity:
                spectrum.append(f"({x},[{k}]_8)")
    mr = restrict(prod, spectrum, name="moore_read")
    counts = {}
    for lab in mr.charges:
        k = int(re.match(r"\(.+,\[(\d+)\]_8\)$", lab).group(1))
        counts[lab] = k
    meta = FqhChargeMeta(
        quasihole="(σ,[1]_8)",
        electron="(ψ,[4]_8)",
        electric_unit=Fraction(1, 4),
        counts=counts,
        period=8,
    )
    mr.fqh = meta
    return mr


def rr_bar_31() -> AnyonModel:
    """Particle-hole conjugate k=3, M=1 clustered state: conj(Fib) x Z_10^(3)."""
    model = direct_product(fib_bar(), z_n(10, 3), name="rr_bar_31")
    counts = {}
    for lab in model.charges:
        k = int(re.match(r"\(.+,\[(\d+)\]_10\)$", lab).group(1))
        counts[lab] = k
    model.fqh = FqhChargeMeta(
        quasihole="(ε,[1]_10)",
        electron="(1,[5]_10)",
        electric_unit=Fraction(1, 5),
        counts=counts,
        period=10,
    )
    return model


def hierarchy(n: int, m: int) -> AnyonModel:
    """Abelian hierarchy state at filling n/m (m odd, n < m): the Z_2m model.

    The braiding weight is the unique odd p with n p = 1 (mod m), taken as the
    least odd positive representative mod 2m.
    """
    if m % 2 == 0 or not (0 < n < m) or math.gcd(n, m) != 1:
        raise ModelDataError(f"hierarchy requires odd m, 0 < n < m, gcd(n,m)=1; got n={n}, m={m}")
    p = next(p for p in range(1, 2 * m + 1, 2) if (n * p) % m == 1)
    model = z_n(2 * m, p)
    model.name = f"hierarchy_{n}_{m}"
    counts = {f"[{k}]_{2 * m}": k for k in range(2 * m)}
    model.fqh = FqhChargeMeta(
        quasihole=f"[1]_{2 * m}",
        electron=f"[{m}]_{2 * m}",
        electric_unit=Fraction(1, m),
        counts=counts,
        period=2 * m,
    )
    return model


# --------------------------------------------------------------------------
# registry

_BUILTINS = {
    "trivial": trivial,
    "ising": ising,
    "fib": fib,
    "fib_bar": fib_bar,
    "moore_read": moore_read,
    "rr_bar_31": rr_bar_31,
}

_ZN_RE = re.compile(r"^z_?n?\((\d+)\s*,\s*([0-9]+(?:/[0-9]+)?|[0-9]*\.?[0-9]+)\)$")
_HIER_RE = re.compile(r"^hierarchy\((\d+)\s*,\s*(\d+)\)$")


def builtin_names() -> list:
    return sorted(_BUILTINS) + ["zn(N,w)", "hierarchy(n,m)"]


def get_model(name: str) -> AnyonModel:
    """Look up a built-in model by name, e.g. 'ising', 'zn(8,1/2)', 'hierarchy(1,3)'."""
    key = name.strip().lower()
    if key in _BUILTINS:
        return _BUILTINS[key]()
    m = _ZN_RE.match(key)
    if m:
        return z_n(int(m.group(1)), Fraction(m.group(2)))
    m = _HIER_RE.match(key)
    if m:
        return hierarchy(int(m.group(1)), int(m.group(2)))
    raise KeyError(f"unknown model {name!r}; built-ins: {', '.join(builtin_names())}")
