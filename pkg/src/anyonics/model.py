"""Anyon model: F/R symbol tables with derived spins, S-matrix and monodromies.

Index conventions
-----------------
An F-block ``[F_d^{abc}]`` is a unitary matrix whose rows are labeled by
``(e, alpha, beta)`` with ``alpha < N_ab^e`` and ``beta < N_ec^d``, and whose
columns are labeled by ``(f, mu, nu)`` with ``mu < N_bc^f`` and ``nu < N_af^d``.
Vertex-multiplicity indices are 0-based and collapse to 0 in all built-in
(multiplicity-free) models.

The bent block ``[F^{ab}_{cd}]`` is never stored; it is derived from the upper
blocks through

    [F^{ab}_{cd}]_{(e,a,b)(f,m,n)} = sqrt(d_e d_f / (d_a d_d)) conj([F_f^{ceb}]_{(a,a,m)(d,b,n)})

Any symbol lookup whose vertices are forbidden by fusion evaluates to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fusion import (
    DIM_TOL,
    CheckResult,
    FusionTensor,
    ModelDataError,
    NumericalError,
    UnknownChargeError,
    ValidationReport,
)


@dataclass(frozen=True)
class FBlock:
    """One F-matrix with its row/column index labels."""

    rows: tuple  # tuple of (charge, alpha, beta)
    cols: tuple  # tuple of (charge, mu, nu)
    mat: np.ndarray

    def row_pos(self, label) -> int:
        return self.rows.index(label)

    def col_pos(self, label) -> int:
        return self.cols.index(label)

    def entry(self, row_label, col_label) -> complex:
        try:
            i = self.rows.index(row_label)
            j = self.cols.index(col_label)
        except ValueError:
            return 0.0 + 0.0j
        return complex(self.mat[i, j])

    @property
    def empty(self) -> bool:
        return len(self.rows) == 0 or len(self.cols) == 0


_EMPTY_BLOCK = FBlock(rows=(), cols=(), mat=np.zeros((0, 0), dtype=complex))


def f_row_labels(tensor: FusionTensor, a: int, b: int, c: int, d: int) -> list:
    out = []
    for e in range(tensor.n_charges):
        n1 = tensor.n(a, b, e)
        n2 = tensor.n(e, c, d)
        for alpha in range(n1):
            for beta in range(n2):
                out.append((e, alpha, beta))
    return out

def f_col_labels(tensor: FusionTensor, a: int, b: int, c: int, d: int) -> list:
    out = []
    for f in range(tensor.n_charges):
        n1 = tensor.n(b, c, f)
        n2 = tensor.n(a, f, d)
        for mu in range(n1):
            for nu in range(n2):
                out.append((f, mu, nu))
    return out


def assemble_f_blocks(tensor: FusionTensor, entry_fn) -> dict:
    """Build every admissible F-block from a pointwise entry function.

    ``entry_fn(a, b, c, d, row_label, col_label) -> complex``
    """
    blocks = {}
    nc = tensor.n_charges
    for a in range(nc):
        for b in range(nc):
            for c in range(nc):
                d_candidates = set()
                for e, _ in tensor.fuse(a, b):
                    for d, _ in tensor.fuse(e, c):
                        d_candidates.add(d)
                for d in sorted(d_candidates):
                    rows = f_row_labels(tensor, a, b, c, d)
                    cols = f_col_labels(tensor, a, b, c, d)
                    if not rows or not cols:
                        continue
                    mat = np.empty((len(rows), len(cols)), dtype=complex)
                    for i, r in enumerate(rows):
                        for j, col in enumerate(cols):
                            mat[i, j] = entry_fn(a, b, c, d, r, col)
                    blocks[(a, b, c, d)] = FBlock(tuple(rows), tuple(cols), mat)
    return blocks


class AnyonModel:
    """A finite anyon model: charges, fusion, F/R symbols, derived data.

    Instances are immutable after construction and safe to share across
    threads.  Construction computes quantum dimensions, topological spins,
    the S-matrix and the monodromy matrix, raising ModelDataError when the
    supplied tables are structurally broken.
    """

    def __init__(
        self,
        name: str,
        charges,
        vacuum: str,
        fusion: FusionTensor,
        f_blocks: dict,
        r_blocks: dict,
        aliases: dict | None = None,
        fqh=None,
        strict: bool = True,
    ):
        self.name = name
        self.charges = tuple(charges)
        if len(set(self.charges)) != len(self.charges):
            raise ModelDataError("charge labels are not pairwise distinct")
        self._index = {lab: i for i, lab in enumerate(self.charges)}
        self._aliases = dict(aliases or {})
        if vacuum not in self._index:
            raise ModelDataError(f"vacuum label {vacuum!r} not among charges")
        self.vacuum = vacuum
        self.vacuum_index = self._index[vacuum]
        if fusion.vacuum != self.vacuum_index or fusion.n_charges != len(self.charges):
            raise ModelDataError("fusion tensor does not match the charge set")
        self.fusion = fusion
        self._f = dict(f_blocks)
        self._r = {}
        for key, value in r_blocks.items():
            n = fusion.n(*key)
            if n == 0:
                continue
            self._r[key] = np.asarray(value, dtype=complex).reshape(n, n)
        self._bent_cache: dict = {}
        self.fqh = fqh

        if strict:
            rep = fusion.validate()
            if not rep.passed:
                raise ModelDataError("fusion axioms violated:\n" + str(rep))
        self.d, self.D, self._dim_residual = fusion.quantum_dimensions()
        self._conj = np.array([fusion.conjugate(a) for a in range(len(self.charges))])
        self.theta = self._compute_spins()
        self.S = self._compute_s_matrix()
        self.M = self._compute_monodromy()
        self.modular = bool(
            np.linalg.norm(self.S @ self.S.conj().T - np.eye(len(self.charges)), ord=np.inf) < 1e-9
        )

    # -- label plumbing ----------------------------------------------------

    def index(self, label) -> int:
        if isinstance(label, (int, np.integer)):
            if 0 <= label < len(self.charges):
                return int(label)
            raise UnknownChargeError(label)
        lab = self._aliases.get(label, label)
        try:
            return self._index[lab]
        except KeyError:
            raise UnknownChargeError(label) from None

    def label(self, i: int) -> str:
        return self.charges[i]

    def __repr__(self) -> str:
        return f"AnyonModel({self.name!r}, {len(self.charges)} charges)"

    # -- basic fusion operations -------------------------------------------

    def fuse(self, a, b) -> list:
        """Charges c with N_ab^c >= 1, as (label, multiplicity) pairs."""
        ia, ib = self.index(a), self.index(b)
        return [(self.label(c), m) for c, m in self.fusion.fuse(ia, ib)]

    def n_abc(self, a, b, c) -> int:
        return self.fusion.n(self.index(a), self.index(b), self.index(c))

    def conjugate(self, a) -> str:
        return self.label(self._conj[self.index(a)])

    def quantum_dimension(self, a) -> float:
        return float(self.d[self.index(a)])

    def total_dimension(self) -> float:
        return float(self.D)

    def is_abelian(self, a) -> bool:
        """True iff a has a single fusion channel with every charge.

        Checked both combinatorially and through d_a = 1; a mismatch means the
        model data is inconsistent and raises.
        """
        ia = self.index(a)
        single = all(
            sum(m for _, m in self.fusion.fuse(ia, b)) == 1 for b in range(len(self.charges))
        )
        by_dim = abs(self.d[ia] - 1.0) < DIM_TOL
        if single != by_dim:
            raise ModelDataError(
                f"abelian criteria disagree for {self.label(ia)}: channels say {single}, d={self.d[ia]}"
            )
        return single

    # -- symbol access -------------------------------------------------------

    def f_block(self, a, b, c, d) -> FBlock:
        key = (self.index(a), self.index(b), self.index(c), self.index(d))
        return self._f.get(key, _EMPTY_BLOCK)

    def f_symbol(self, a, b, c, d, row, col) -> complex:
        return self.f_block(a, b, c, d).entry(tuple(row), tuple(col))

    def r_block(self, a, b, c) -> np.ndarray:
        """The unitary [R_c^{ab}] over the vertex index (1x1 when N_ab^c = 1)."""
        key = (self.index(a), self.index(b), self.index(c))
        blk = self._r.get(key)
        if blk is None:
            n = self.fusion.n(*key)
            return np.zeros((n, n), dtype=complex)
        return blk

    def r_symbol(self, a, b, c, mu: int = 0, nu: int = 0) -> complex:
        blk = self.r_block(a, b, c)
        if mu >= blk.shape[0] or nu >= blk.shape[1]:
            return 0.0 + 0.0j
        return complex(blk[mu, nu])

    def bent_f_block(self, a, b, c, d) -> FBlock:
        """[F^{ab}_{cd}], rows (e,alpha,beta): N_ce^a, N_eb^d; cols (f,mu,nu): N_ab^f, N_cd^f."""
        key = (self.index(a), self.index(b), self.index(c), self.index(d))
        blk = self._bent_cache.get(key)
        if blk is None:
            blk = self._derive_bent(*key)
            self._bent_cache[key] = blk
        return blk

    def _derive_bent(self, a: int, b: int, c: int, d: int) -> FBlock:
        nzc = self.fusion
        rows = []
        for e in range(len(self.charges)):
            n1 = nzc.n(c, e, a)
            n2 = nzc.n(e, b, d)
            for alpha in range(n1):
                for beta in range(n2):
                    rows.append((e, alpha, beta))
        cols = []
        for f in range(len(self.charges)):
            n1 = nzc.n(a, b, f)
            n2 = nzc.n(c, d, f)
            for mu in range(n1):
                for nu in range(n2):
                    cols.append((f, mu, nu))
        if not rows or not cols:
            return _EMPTY_BLOCK
        mat = np.zeros((len(rows), len(cols)), dtype=complex)
        for i, (e, alpha, beta) in enumerate(rows):
            pref_e = np.sqrt(self.d[e] / (self.d[a] * self.d[d]))
            for j, (f, mu, nu) in enumerate(cols):
                upper = self._f.get((c, e, b, f))
                if upper is None:
                    continue
                val = upper.entry((a, alpha, mu), (d, beta, nu))
                mat[i, j] = pref_e * np.sqrt(self.d[f]) * np.conj(val)
        return FBlock(tuple(rows), tuple(cols), mat)

    # -- derived topological data ---------------------------------------------

    def _compute_spins(self) -> np.ndarray:
        theta = np.empty(len(self.charges), dtype=complex)
        for a in range(len(self.charges)):
            acc = 0.0 + 0.0j
            for c, _ in self.fusion.fuse(a, a):
                acc += (self.d[c] / self.d[a]) * np.trace(self.r_block(a, a, c))
            theta[a] = acc
        return theta

    def topological_spin(self, a) -> complex:
        """theta_a from the twist of the R-symbols; must be unit modulus."""
        th = complex(self.theta[self.index(a)])
        if abs(abs(th) - 1.0) > 1e-9:
            raise ModelDataError(f"topological spin of {a} has modulus {abs(th)}")
        return th

    def _compute_s_matrix(self) -> np.ndarray:
        nc = len(self.charges)
        s = np.empty((nc, nc), dtype=complex)
        for a in range(nc):
            for b in range(nc):
                acc = 0.0 + 0.0j
                for c, mult in self.fusion.fuse(a, b):
                    acc += mult * self.d[c] * self.theta[c] / (self.theta[a] * self.theta[b])
                s[a, b] = acc / self.D
        return s

    def s_matrix(self) -> np.ndarray:
        s = self.S
        nc = len(self.charges)
        sym = np.max(np.abs(s - s.T))
        conj = max(
            abs(s[a, b] - np.conj(s[self._conj[a], b])) for a in range(nc) for b in range(nc)
        )
        drow = np.max(np.abs(self.d - np.real(s[self.vacuum_index] / s[self.vacuum_index, self.vacuum_index])))
        if max(sym, conj, drow) > 1e-9:
            raise ModelDataError(
                f"S-matrix invariants violated: sym {sym:.2e}, conj {conj:.2e}, d-row {drow:.2e}"
            )
        return s.copy()

    def _compute_monodromy(self) -> np.ndarray:
        nc = len(self.charges)
        m = np.empty((nc, nc), dtype=complex)
        for a in range(nc):
            for b in range(nc):
                acc = 0.0 + 0.0j
                for c, mult in self.fusion.fuse(a, b):
                    acc += mult * self.d[c] * self.theta[c] / (self.theta[a] * self.theta[b])
                m[a, b] = acc / (self.d[a] * self.d[b])
        return m

    def monodromy_scalar(self, a, b) -> complex:
        """M_ab, computed from the spin sum and cross-checked against S."""
        ia, ib = self.index(a), self.index(b)
        via_theta = complex(self.M[ia, ib])
        v = self.vacuum_index
        via_s = complex(self.S[ia, ib] * self.S[v, v] / (self.S[v, ia] * self.S[v, ib]))
        if abs(via_theta - via_s) > 1e-9:
            raise ModelDataError(
                f"monodromy cross-check failed for ({a},{b}): {via_theta} vs {via_s}"
            )
        return via_theta

    def monodromy_matrix(self, a, b) -> tuple:
        """Channel decomposition of the double braid of a and b.

        Returns (channel labels, diagonal matrix); the channels are the (c, mu)
        pairs of a x b and each eigenphase is theta_c / (theta_a theta_b).
        """
        ia, ib = self.index(a), self.index(b)
        labels = []
        phases = []
        for c, mult in self.fusion.fuse(ia, ib):
            lam = self.theta[c] / (self.theta[ia] * self.theta[ib])
            for mu in range(mult):
                labels.append((self.label(c), mu))
                phases.append(lam)
        return labels, np.diag(np.asarray(phases, dtype=complex))

    def check_fused_monodromy(self, tol: float = 1e-9) -> ValidationReport:
        """M_ce = M_ae M_be whenever N_ab^c != 0 and |M_be| = 1."""
        report = ValidationReport()
        chk = CheckResult("fused_monodromy", True)
        nc = len(self.charges)
        for a in range(nc):
            for b in range(nc):
                for c, _ in self.fusion.fuse(a, b):
                    for e in range(nc):
                        if abs(abs(self.M[b, e]) - 1.0) > tol:
                            continue
                        resid = abs(self.M[c, e] - self.M[a, e] * self.M[b, e])
                        chk.worst_residual = max(chk.worst_residual, resid)
                        if resid > tol:
                            chk.add(
                                (self.label(a), self.label(b), self.label(c), self.label(e)),
                                f"M_ce - M_ae M_be = {resid:.3e}",
                                resid,
                            )
        report.checks.append(chk)
        return report

    # -- full verification ------------------------------------------------------

    def verify(self, tol: float = 1e-9) -> ValidationReport:
        """Run every checkable identity; report pass/fail and worst residual each."""
        report = ValidationReport()
        nc = len(self.charges)

        fus = CheckResult("fusion_axioms", True)
        sub = self.fusion.validate()
        for c in sub.checks:
            for where, detail in c.violations:
                fus.add(where, f"{c.name}: {detail}")
        fus.worst_residual = max(fus.worst_residual, self._dim_residual)
        if self._dim_residual > tol:
            fus.add((), f"quantum-dimension residual {self._dim_residual:.3e}", self._dim_residual)
        report.checks.append(fus)

        funi = CheckResult("f_unitarity", True)
        for (a, b, c, d), blk in self._f.items():
            if blk.mat.shape[0] != blk.mat.shape[1]:
                funi.add((a, b, c, d), f"non-square block {blk.mat.shape}", np.inf)
                continue
            resid = float(np.max(np.abs(blk.mat @ blk.mat.conj().T - np.eye(len(blk.rows)))))
            funi.worst_residual = max(funi.worst_residual, resid)
            if resid > tol:
                funi.add((a, b, c, d), f"unitarity residual {resid:.3e}", resid)
        report.checks.append(funi)

        # [F^{ab}_{ab}]_{1,(c,mu,nu)} = sqrt(d_c/d_a d_b) delta_{mu nu}
        idf = CheckResult("idF_normalization", True)
        for a in range(nc):
            for b in range(nc):
                blk = self.bent_f_block(a, b, a, b)
                if blk.empty:
                    continue
                try:
                    i = blk.rows.index((self.vacuum_index, 0, 0))
                except ValueError:
                    idf.add((a, b), "vacuum row missing from bent block", np.inf)
                    continue
                for j, (f, mu, nu) in enumerate(blk.cols):
                    want = np.sqrt(self.d[f] / (self.d[a] * self.d[b])) if mu == nu else 0.0
                    resid = abs(blk.mat[i, j] - want)
                    idf.worst_residual = max(idf.worst_residual, resid)
                    if resid > tol:
                        idf.add((a, b, f, mu, nu), f"residual {resid:.3e}", resid)
        report.checks.append(idf)

        bent = CheckResult("bent_unitarity", True)
        bent_keys = set()
        for e in range(nc):
            for c in range(nc):
                for a, _ in self.fusion.fuse(c, e):
                    for b in range(nc):
                        for d, _ in self.fusion.fuse(e, b):
                            bent_keys.add((a, b, c, d))
        for a, b, c, d in sorted(bent_keys):
            blk = self.bent_f_block(a, b, c, d)
            if blk.empty:
                continue
            if blk.mat.shape[0] != blk.mat.shape[1]:
                bent.add((a, b, c, d), f"non-square bent block {blk.mat.shape}", np.inf)
                continue
            resid = float(np.max(np.abs(blk.mat @ blk.mat.conj().T - np.eye(len(blk.rows)))))
            bent.worst_residual = max(bent.worst_residual, resid)
            if resid > tol:
                bent.add((a, b, c, d), f"unitarity residual {resid:.3e}", resid)
        report.checks.append(bent)

        runi = CheckResult("r_unitarity", True)
        for (a, b, c), blk in self._r.items():
            n = self.fusion.n(a, b, c)
            if n == 0:
                continue
            other = self.r_block(b, a, c)
            try:
                resid = float(np.max(np.abs(np.linalg.inv(blk) - other.conj().T)))
            except np.linalg.LinAlgError:
                resid = np.inf
            runi.worst_residual = max(runi.worst_residual, resid)
            if resid > tol:
                runi.add((a, b, c), f"R inverse mismatch {resid:.3e}", resid)
        report.checks.append(runi)

        rib = CheckResult("ribbon", True)
        for (a, b, c), blk in self._r.items():
            if self.fusion.n(a, b, c) == 0:
                continue
            lhs = blk @ self.r_block(b, a, c)
            want = (self.theta[c] / (self.theta[a] * self.theta[b])) * np.eye(blk.shape[0])
            resid = float(np.max(np.abs(lhs - want)))
            rib.worst_residual = max(rib.worst_residual, resid)
            if resid > tol:
                rib.add((a, b, c), f"ribbon residual {resid:.3e}", resid)
        report.checks.append(rib)

        # theta sanity folded into the S checks
        smat = CheckResult("s_matrix", True)
        for a in range(nc):
            resid = abs(abs(self.theta[a]) - 1.0)
            smat.worst_residual = max(smat.worst_residual, resid)
            if resid > tol:
                smat.add((a,), f"|theta| = {abs(self.theta[a])}", resid)
        resid = abs(self.theta[self.vacuum_index] - 1.0)
        if resid > tol:
            smat.add((self.vacuum_index,), "theta_1 != 1", resid)
        for a in range(nc):
            resid = abs(self.theta[a] - self.theta[self._conj[a]])
            smat.worst_residual = max(smat.worst_residual, resid)
            if resid > tol:
                smat.add((a,), "theta_a != theta_abar", resid)
        sym = float(np.max(np.abs(self.S - self.S.T)))
        smat.worst_residual = max(smat.worst_residual, sym)
        if sym > tol:
            smat.add((), f"S not symmetric: {sym:.3e}", sym)
        for a in range(nc):
            for b in range(nc):
                resid = abs(self.S[a, b] - np.conj(self.S[self._conj[a], b]))
                smat.worst_residual = max(smat.worst_residual, resid)
                if resid > tol:
                    smat.add((a, b), "S_ab != conj(S_abar,b)", resid)
        v = self.vacuum_index
        for a in range(nc):
            resid = abs(self.d[a] - self.S[v, a] / self.S[v, v])
            smat.worst_residual = max(smat.worst_residual, resid)
            if resid > tol:
                smat.add((a,), "d_a != S_1a/S_11", resid)
        report.checks.append(smat)

        mcross = CheckResult("monodromy_cross_check", True)
        for a in range(nc):
            for b in range(nc):
                via_s = self.S[a, b] * self.S[v, v] / (self.S[v, a] * self.S[v, b])
                resid = abs(self.M[a, b] - via_s)
                mcross.worst_residual = max(mcross.worst_residual, resid)
                if resid > tol:
                    mcross.add((a, b), f"two monodromy formulas differ by {resid:.3e}", resid)
        report.checks.append(mcross)

        mbound = CheckResult("monodromy_bound", True)
        for a in range(nc):
            for b in range(nc):
                over = abs(self.M[a, b]) - 1.0
                mbound.worst_residual = max(mbound.worst_residual, max(over, 0.0))
                if over > tol:
                    mbound.add((a, b), f"|M| = {abs(self.M[a, b])}", over)
            resid = abs(self.M[v, a] - 1.0)
            mbound.worst_residual = max(mbound.worst_residual, resid)
            if resid > tol:
                mbound.add((v, a), "M_1b != 1", resid)
        report.checks.append(mbound)

        fused = self.check_fused_monodromy(tol).checks[0]
        report.checks.append(fused)

        report.meta["modular"] = self.modular
        report.meta["model"] = self.name
        return report

    verify_model = verify
