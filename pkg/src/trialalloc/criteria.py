"""A-type design criteria for genotype-effect and contrast prediction.

The criteria measure the summed prediction-error variance of genotype-effect
BLUPs (or of all pairwise contrasts between them) as a function of how the
trials of a multi-environment network are allocated to sub-regions.  All of
them share one backbone,

    phi(w) = tr[ (I ⊗ diag(w) + B)^-1 H ],

with ``B`` and ``H`` design-independent positive (semi)definite matrices, so
every path is well defined even when some sub-regions receive weight zero.

Which path evaluates ``phi`` depends on the genetic covariance structure.
Exchangeable (compound-symmetry) kinship collapses the K·P-dimensional trace
to a single P-dimensional one; two-level family-block kinship collapses it to
two such traces (the ``cbrc`` path) or, equivalently, a block-diagonal
2P-dimensional one (the ``kbayes`` path).  A general dense kinship has to go
through the full K·P assembly.  ``Path.AUTO`` picks the cheapest valid path.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations

import numpy as np

from ._linalg import spd_inverse, spd_solve, sym
from .errors import ValidationError
from .kinship import (BlockCompoundSymmetry, CompoundSymmetry, Identity,
                      KinshipSpec)
from .model import (DENSE_KP_LIMIT, Design, SubRegionProfile,
                    VarianceComponents, effective_error_constant,
                    centering_matrix, scaled_genetic_covariances,
                    scaled_year_matrix)

__all__ = [
    "Target",
    "Weighting",
    "Path",
    "CriterionSpec",
    "CriterionValue",
    "DesignProblem",
    "mse_effects_full",
    "mse_contrasts_full",
    "phi_effects",
    "phi_contrasts",
    "phi_bayes_cs",
    "phi_cbrc_blockcs",
    "phi_kbayes_blockcs",
    "mse_trace_report",
]

_CONTRAST_K_LIMIT = 12


class Target(str, Enum):
    """What the criterion averages over: effects themselves, or pairwise contrasts."""

    EFFECTS = "effects"
    CONTRASTS = "contrasts"


class Weighting(str, Enum):
    """Plain trace, or trace weighted by sub-regional genotype counts."""

    STANDARD = "standard"
    WEIGHTED = "weighted"


class Path(str, Enum):
    AUTO = "auto"
    FULL = "full"
    BAYES_CS = "bayes_cs"
    KBAYES = "kbayes"
    CBRC = "cbrc"


@dataclass(frozen=True)
class CriterionSpec:
    """Choice of criterion: target, weighting and evaluation path."""

    target: Target = Target.EFFECTS
    weighting: Weighting = Weighting.STANDARD
    path: Path = Path.AUTO

    def __post_init__(self):
        object.__setattr__(self, "target", Target(self.target))
        object.__setattr__(self, "weighting", Weighting(self.weighting))
        object.__setattr__(self, "path", Path(self.path))


@dataclass(frozen=True)
class CriterionValue:
    """Criterion value at one design, with its gradient and the MSE trace.

    ``phi`` is the value of the evaluation path actually used (reduced paths
    report the reduced criterion).  ``mse_trace`` is always the plain summed
    prediction-error variance of the target quantities for the given design
    and network size, independent of the criterion's weighting, so values
    are comparable across paths and match what evaluation reports print.
    """

    phi: float
    mse_trace: float
    path_used: Path
    gradient: np.ndarray


def _pairwise_contrasts(k: int) -> np.ndarray:
    """All K(K-1)/2 pairwise difference rows, (1,2), (1,3), ..., (K-1,K)."""
    rows = np.zeros((k * (k - 1) // 2, k))
    for idx, (i, j) in enumerate(combinations(range(k), 2)):
        rows[idx, i], rows[idx, j] = 1.0, -1.0
    return rows


def _weight_matrix(profile: SubRegionProfile, weighting: Weighting) -> np.ndarray:
    if weighting is Weighting.STANDARD:
        return np.eye(profile.P)
    if profile.ell is None:
        raise ValidationError(
            "weighted criteria need sub-regional genotype counts (profile.ell)"
        )
    return np.diag(profile.ell)


def _cs_params(spec: KinshipSpec):
    """Exchangeable-structure parameters (K, a1, a), or None if not exchangeable.

    Degenerate family-block structures collapse to this case: a single family
    is plain compound symmetry, singleton families are uncorrelated.
    """
    if isinstance(spec, Identity):
        return spec.K, 1.0 + spec.jitter, 0.0
    if isinstance(spec, CompoundSymmetry):
        return spec.K, spec.a1 + spec.jitter, spec.a
    if isinstance(spec, BlockCompoundSymmetry):
        if spec.f == 1:
            return spec.m, spec.b1 + spec.jitter, spec.b
        if spec.m == 1:
            return spec.f, spec.b + spec.b1 + spec.jitter, 0.0
    return None


def _block_params(spec: KinshipSpec):
    if isinstance(spec, BlockCompoundSymmetry) and spec.f >= 2 and spec.m >= 2:
        return spec.f, spec.m, spec.b1 + spec.jitter, spec.b
    return None


class _ReducedTrace:
    """One P-dimensional trace term tr[(diag(w) + S^-1)^-1 G] and its gradient."""

    def __init__(self, s: np.ndarray, g: np.ndarray):
        self.s_inv = spd_inverse(s, "criterion inner matrix")
        self.g = sym(g)

    def phi(self, w: np.ndarray) -> float:
        a = np.diag(w) + self.s_inv
        return float(np.trace(spd_solve(a, self.g, "criterion system")))

    def gradient(self, w: np.ndarray) -> np.ndarray:
        a_inv = spd_inverse(np.diag(w) + self.s_inv, "criterion system")
        return -np.einsum("ij,jk,ki->i", a_inv, self.g, a_inv)


class _BayesCsEvaluator:
    """Exchangeable-kinship path: a single P-dimensional trace.

    The exchangeable structure makes the effects and contrasts criteria
    proportional with the same constant, so one core serves both targets;
    only the reported MSE traces differ.
    """

    path = Path.BAYES_CS

    def __init__(self, vc, profile, params, J, spec: CriterionSpec):
        k, a1, a = params
        self.K = k
        c = effective_error_constant(vc)
        self.mse_scale = c / J
        vt = (J / c) * np.asarray(profile.V)
        rt = scaled_year_matrix(vc, J, profile.P)
        s = rt + a1 * vt
        s_inv = spd_inverse(s, "exchangeable inner matrix")
        lmat = _weight_matrix(profile, spec.weighting)
        self._core = _ReducedTrace(s, s_inv @ vt @ lmat @ vt @ s_inv)
        if spec.weighting is Weighting.STANDARD:
            self._core_std = self._core
        else:
            self._core_std = _ReducedTrace(s, s_inv @ vt @ vt @ s_inv)
        # design-independent parts of the plain MSE traces
        vsv = vt @ s_inv @ vt
        contrast_const = a1 * (k - 1) * np.trace(vt - a1 * vsv)
        self._const_effects = contrast_const + (a * k + a1) * np.trace(vt)
        self._const_contrasts = contrast_const
        self._scale = a1 ** 2 * (k - 1)

    def phi(self, w):
        return self._core.phi(w)

    def gradient(self, w):
        return self._core.gradient(w)

    def mse_trace(self, w, target: Target) -> float:
        phi_std = self._scale * self._core_std.phi(w)
        if target is Target.EFFECTS:
            return self.mse_scale * (phi_std + self._const_effects)
        return self.mse_scale * self.K * (phi_std + self._const_contrasts)


class _BlockCore:
    """Shared precomputation for the two family-block paths."""

    def __init__(self, vc, profile, params, J, spec: CriterionSpec):
        f, m, b1, b = params
        self.f, self.m, self.K = f, m, f * m
        c = effective_error_constant(vc)
        self.mse_scale = c / J
        vt = (J / c) * np.asarray(profile.V)
        rt = scaled_year_matrix(vc, J, profile.P)
        lmat = _weight_matrix(profile, spec.weighting)
        # within-family contrasts see b1*V, between-family ones (m*b + b1)*V
        self.v = (b1 * vt, (m * b + b1) * vt)
        self.s = tuple(rt + v for v in self.v)
        self.s_inv = tuple(spd_inverse(s, "family-block inner matrix") for s in self.s)
        self.mult = (f * (m - 1), f - 1)
        self.cores = tuple(
            _ReducedTrace(s, si @ v @ lmat @ v @ si)
            for s, si, v in zip(self.s, self.s_inv, self.v)
        )
        if spec.weighting is Weighting.STANDARD:
            self.cores_std = self.cores
        else:
            self.cores_std = tuple(
                _ReducedTrace(s, si @ v @ v @ si)
                for s, si, v in zip(self.s, self.s_inv, self.v)
            )
        resid = [np.trace(v - v @ si @ v) for v, si in zip(self.v, self.s_inv)]
        self.const_contrasts = self.mult[0] * resid[0] + self.mult[1] * resid[1]
        self.const_effects = self.const_contrasts + np.trace(self.v[1])

    def phi_std(self, w):
        return sum(q * core.phi(w) for q, core in zip(self.mult, self.cores_std))

    def mse_trace(self, w, target: Target) -> float:
        if target is Target.EFFECTS:
            return self.mse_scale * (self.phi_std(w) + self.const_effects)
        return self.mse_scale * self.K * (self.phi_std(w) + self.const_contrasts)


class _CbrcEvaluator:
    """Family-block path as two separate P-dimensional traces."""

    path = Path.CBRC

    def __init__(self, vc, profile, params, J, spec):
        self._core = _BlockCore(vc, profile, params, J, spec)

    def phi(self, w):
        c = self._core
        return sum(q * core.phi(w) for q, core in zip(c.mult, c.cores))

    def gradient(self, w):
        c = self._core
        return sum(q * core.gradient(w) for q, core in zip(c.mult, c.cores))

    def mse_trace(self, w, target):
        return self._core.mse_trace(w, target)


class _KBayesEvaluator:
    """Family-block path as one block-diagonal 2P-dimensional trace.

    Numerically identical to the two-trace path; kept as a separate literal
    assembly because its shape is the natural one for dimension checks.
    """

    path = Path.KBAYES

    def __init__(self, vc, profile, params, J, spec):
        core = _BlockCore(vc, profile, params, J, spec)
        self._core = core
        self.P = profile.P
        p = self.P
        self._s_inv = np.zeros((2 * p, 2 * p))
        self._q = np.zeros((2 * p, 2 * p))
        for i in (0, 1):
            sl = slice(i * p, (i + 1) * p)
            self._s_inv[sl, sl] = core.s_inv[i]
            self._q[sl, sl] = core.mult[i] * core.cores[i].g

    def _system(self, w):
        return np.kron(np.eye(2), np.diag(w)) + self._s_inv

    def phi(self, w):
        return float(np.trace(spd_solve(self._system(w), self._q, "block criterion")))

    def gradient(self, w):
        a_inv = spd_inverse(self._system(w), "block criterion")
        diag = np.einsum("ij,jk,ki->i", a_inv, self._q, a_inv)
        return -(diag[:self.P] + diag[self.P:])

    def mse_trace(self, w, target):
        return self._core.mse_trace(w, target)


class _FullEvaluator:
    """General-kinship path: literal K·P-dimensional assembly.

    Valid for every structure; required for dense kinship, where the
    all-genotypes mean need not be an eigenvector and effects- and
    contrasts-optimal allocations can genuinely differ.
    """

    path = Path.FULL

    def __init__(self, vc, profile, kinship, J, spec: CriterionSpec):
        sg = scaled_genetic_covariances(vc, J, profile, kinship)
        n, vt = sg.N, sg.Vt
        k, p = sg.K, profile.P
        self.K, self.P = k, p
        c = effective_error_constant(vc)
        self.mse_scale = c / J
        rt = scaled_year_matrix(vc, J, p)
        t = centering_matrix(k)
        tnt = sym(t @ n @ t)
        self._b = spd_inverse(
            np.kron(np.eye(k), rt) + np.kron(tnt, vt), "criterion base matrix"
        )
        lmat = _weight_matrix(profile, spec.weighting)
        vlv = sym(vt @ lmat @ vt)
        vv = vt @ vt
        mid_eff = sym(t @ n @ n @ t)
        mid_con = sym(t @ n @ t @ n @ t)
        mid = mid_eff if spec.target is Target.EFFECTS else mid_con
        self._h = sym(self._b @ np.kron(mid, vlv) @ self._b)
        self._h_std = {
            Target.EFFECTS: sym(self._b @ np.kron(mid_eff, vv) @ self._b),
            Target.CONTRASTS: sym(self._b @ np.kron(mid_con, vv) @ self._b),
        }
        if spec.weighting is Weighting.STANDARD:
            self._h_std[spec.target] = self._h
        # design-independent parts of the plain MSE traces
        self._const = {
            Target.EFFECTS: np.trace(n) * np.trace(vt)
            - np.trace(self._b @ np.kron(mid_eff, vv)),
            Target.CONTRASTS: np.trace(n @ t) * np.trace(vt)
            - np.trace(self._b @ np.kron(mid_con, vv)),
        }

    def _system(self, w):
        return np.kron(np.eye(self.K), np.diag(w)) + self._b

    def phi(self, w):
        return float(np.trace(spd_solve(self._system(w), self._h, "criterion system")))

    def _phi_h(self, w, h):
        return float(np.trace(spd_solve(self._system(w), h, "criterion system")))

    def gradient(self, w):
        a_inv = spd_inverse(self._system(w), "criterion system")
        diag = np.einsum("ij,jk,ki->i", a_inv, self._h, a_inv)
        return -diag.reshape(self.K, self.P).sum(axis=0)

    def mse_trace(self, w, target: Target) -> float:
        phi_std = self._phi_h(w, self._h_std[target])
        total = self._const[target] + phi_std
        if target is Target.CONTRASTS:
            total *= self.K
        return self.mse_scale * total


def _route(kinship: KinshipSpec, path: Path) -> Path:
    cs = _cs_params(kinship)
    block = _block_params(kinship)
    if path is Path.AUTO:
        if cs is not None:
            return Path.BAYES_CS
        if block is not None:
            return Path.KBAYES
        return Path.FULL
    if path is Path.BAYES_CS and cs is None:
        raise ValidationError(
            "the exchangeable path needs identity, compound-symmetry or "
            "single-level family-block kinship; use the kbayes/cbrc paths for "
            "two-level family blocks or the full path for dense kinship"
        )
    if path in (Path.KBAYES, Path.CBRC) and block is None:
        if cs is not None:
            raise ValidationError(
                f"the {path.value} path needs family-block kinship with at least "
                "two families of at least two genotypes; this structure is "
                "exchangeable — use the bayes_cs path"
            )
        raise ValidationError(
            f"the {path.value} path needs family-block kinship; use the full "
            "path for dense kinship"
        )
    return path


@dataclass(frozen=True, eq=False)
class DesignProblem:
    """A criterion bound to a trial network, reusable across designs.

    Evaluation-path precomputations depend on the design only through the
    network size J, so they are cached per J; repeated evaluations during
    optimization cost one small linear solve each.
    """

    vc: VarianceComponents
    profile: SubRegionProfile
    kinship: KinshipSpec
    criterion: CriterionSpec = field(default_factory=CriterionSpec)

    def __post_init__(self):
        if not isinstance(self.criterion, CriterionSpec):
            raise ValidationError("criterion must be a CriterionSpec")
        if self.criterion.weighting is Weighting.WEIGHTED and self.profile.ell is None:
            raise ValidationError(
                "weighted criteria need sub-regional genotype counts (profile.ell)"
            )
        # resolve (and validate) the path once, design-independently
        object.__setattr__(self, "path_used", _route(self.kinship, self.criterion.path))
        object.__setattr__(self, "_evaluators", {})
        object.__setattr__(self, "_lock", threading.Lock())

    @property
    def P(self) -> int:
        return self.profile.P

    def evaluator(self, J: int):
        with self._lock:
            ev = self._evaluators.get(J)
            if ev is None:
                ev = self._build(J)
                self._evaluators[J] = ev
            return ev

    def _build(self, J: int):
        path = self.path_used
        if path is Path.BAYES_CS:
            return _BayesCsEvaluator(self.vc, self.profile, _cs_params(self.kinship),
                                     J, self.criterion)
        if path is Path.CBRC:
            return _CbrcEvaluator(self.vc, self.profile, _block_params(self.kinship),
                                  J, self.criterion)
        if path is Path.KBAYES:
            return _KBayesEvaluator(self.vc, self.profile, _block_params(self.kinship),
                                    J, self.criterion)
        return _FullEvaluator(self.vc, self.profile, self.kinship, J, self.criterion)

    def phi(self, design: Design) -> float:
        return self.evaluator(design.J).phi(design.weights)

    def gradient(self, design: Design) -> np.ndarray:
        return self.evaluator(design.J).gradient(design.weights)

    def mse_trace(self, design: Design) -> float:
        return self.evaluator(design.J).mse_trace(design.weights,
                                                  self.criterion.target)

    def value(self, design: Design) -> CriterionValue:
        ev = self.evaluator(design.J)
        w = design.weights
        return CriterionValue(
            phi=ev.phi(w),
            mse_trace=ev.mse_trace(w, self.criterion.target),
            path_used=ev.path,
            gradient=ev.gradient(w),
        )


# ---------------------------------------------------------------------------
# Functional interface


def mse_effects_full(design: Design, vc: VarianceComponents,
                     profile: SubRegionProfile, kinship: KinshipSpec) -> np.ndarray:
    """Full KP×KP prediction-error covariance of the genotype-effect BLUPs.

    Requires strictly positive allocation everywhere — the matrix itself (as
    opposed to the criteria) is not defined for empty sub-regions.  For an
    exact design this is the per-observation error covariance; trace slices
    of it are what :func:`mse_trace_report` reports.
    """
    if np.any(design.weights <= 0):
        raise ValidationError(
            "the full MSE matrix needs positive weight in every sub-region; "
            "empty sub-regions are only supported by the criterion paths"
        )
    sg = scaled_genetic_covariances(vc, design.J, profile, kinship)
    if sg.K * profile.P > DENSE_KP_LIMIT:
        raise ValidationError(
            f"dense prediction-error covariance is guarded to K*P <= "
            f"{DENSE_KP_LIMIT} (got {sg.K * profile.P}); use the trace criteria"
        )
    c = effective_error_constant(vc)
    rt = scaled_year_matrix(vc, design.J, profile.P)
    inner = spd_inverse(np.diag(1.0 / design.weights) + rt, "per-region information")
    u_inv = np.kron(spd_inverse(sg.N, "kinship"), spd_inverse(sg.Vt, "genetic covariance"))
    t = centering_matrix(sg.K)
    mse = spd_inverse(np.kron(t, inner) + u_inv, "prediction-error system")
    return (c / design.J) * mse


def mse_contrasts_full(design: Design, vc: VarianceComponents,
                       profile: SubRegionProfile, kinship: KinshipSpec) -> np.ndarray:
    """Prediction-error covariance of all pairwise genotype contrasts.

    The row count grows quadratically in K, so this is guarded to K <= 12;
    use the trace criteria for anything larger.
    """
    sg = scaled_genetic_covariances(vc, design.J, profile, kinship)
    if sg.K > _CONTRAST_K_LIMIT:
        raise ValidationError(
            f"pairwise-contrast covariance is guarded to K <= {_CONTRAST_K_LIMIT} "
            f"(got K={sg.K}); use the contrast trace criteria instead"
        )
    lift = np.kron(_pairwise_contrasts(sg.K), np.eye(profile.P))
    return lift @ mse_effects_full(design, vc, profile, kinship) @ lift.T


def _one_shot(design, vc, profile, kinship, target, weighting, path) -> CriterionValue:
    problem = DesignProblem(vc, profile, kinship,
                            CriterionSpec(target=target, weighting=weighting, path=path))
    return problem.value(design)


def phi_effects(design: Design, vc: VarianceComponents, profile: SubRegionProfile,
                kinship: KinshipSpec, weighting="standard") -> CriterionValue:
    """Effects criterion on the full path, any kinship, zero weights allowed."""
    return _one_shot(design, vc, profile, kinship, Target.EFFECTS, weighting, Path.FULL)


def phi_contrasts(design: Design, vc: VarianceComponents, profile: SubRegionProfile,
                  kinship: KinshipSpec, weighting="standard") -> CriterionValue:
    """Pairwise-contrast criterion on the full path."""
    return _one_shot(design, vc, profile, kinship, Target.CONTRASTS, weighting, Path.FULL)


def phi_bayes_cs(design: Design, vc: VarianceComponents, profile: SubRegionProfile,
                 kinship: KinshipSpec, weighting="standard") -> CriterionValue:
    """Reduced criterion for exchangeable kinship (P-dimensional).

    Effects- and contrast-optimal allocations coincide under exchangeability,
    so there is a single criterion here; the reported ``mse_trace`` is the
    effects trace.
    """
    return _one_shot(design, vc, profile, kinship, Target.EFFECTS, weighting,
                     Path.BAYES_CS)


def phi_cbrc_blockcs(design: Design, vc: VarianceComponents, profile: SubRegionProfile,
                     kinship: KinshipSpec, weighting="standard") -> CriterionValue:
    """Reduced family-block criterion as two P-dimensional traces."""
    return _one_shot(design, vc, profile, kinship, Target.EFFECTS, weighting, Path.CBRC)


def phi_kbayes_blockcs(design: Design, vc: VarianceComponents, profile: SubRegionProfile,
                       kinship: KinshipSpec, weighting="standard") -> CriterionValue:
    """Reduced family-block criterion as one block-diagonal 2P-dimensional trace."""
    return _one_shot(design, vc, profile, kinship, Target.EFFECTS, weighting, Path.KBAYES)


def mse_trace_report(design: Design, vc: VarianceComponents, profile: SubRegionProfile,
                     kinship: KinshipSpec, target="effects") -> float:
    """Summed prediction-error variance of the target quantities.

    This is the plain (unweighted) trace at the scale of the actual network —
    the number evaluation tables report — computed on the cheapest valid path.
    """
    problem = DesignProblem(vc, profile, kinship, CriterionSpec(target=Target(target)))
    return problem.mse_trace(design)
