"""Exponential probes, the indicator function, and support recovery.

A probe is the harmonic exponential exp(tau * x.(theta + i*theta_perp)),
carried everywhere in shifted form exp(tau*((x.theta - s) + i*x.theta_perp))
with s = sup over the domain of x.theta, so its trace magnitude never
exceeds 1 and no intermediate overflows.  The indicator at height t is

    I(tau, t) = exp(2*tau*(s - t)) * J(tau),
    J(tau)    = Re <(Lambda_inclusion - Lambda_background) f_s, conj(f_s)>,

with f_s the shifted trace; all arithmetic on I is done as log|J| plus the
exact linear shift 2*tau*(s - t).  The log-slope of I(tau, 0) against
2*tau converges to the support function of the inclusion, which a
least-squares fit over the upper half of the tau window estimates per
direction; intersecting the fitted half planes encloses the convex hull.
"""

from __future__ import annotations

import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import geometry, materials
from .errors import (
    DegenerateHullError,
    EstimationError,
    InvalidParameterError,
    ProbeResolutionError,
)
from .geometry import ConvexPolygon, DirectionFrame
from .materials import MaterialScene, ReducedScene, RegimeReport
from .meshing import Mesh
from .solver import CoeffField, DirichletSystem, assemble, identity_field, reduced_field

# probe oscillation must be resolved: tau * h_max <= RESOLUTION_GATE
RESOLUTION_GATE = 0.5
UNDERFLOW_FLOOR = 1e-300

THREADS_ENV = "ENCLOSURE_KIT_THREADS"

NO_INCLUSION_FLAG = "no-inclusion"
NO_SIGNAL_FLAG = "no-signal"
OUTSIDE_REGIME_FLAG = "outside proven regime"


@dataclass(frozen=True)
class Probe:
    """One exponential probe: direction frame, growth rate, and shift."""

    frame: DirectionFrame
    tau: float
    shift: float

    def __post_init__(self):
        if not self.tau > 0.0:
            raise InvalidParameterError("probe tau must be > 0")

    @classmethod
    def for_domain(cls, domain, frame: DirectionFrame, tau: float) -> "Probe":
        return cls(frame=frame, tau=tau, shift=domain.support(frame.theta))

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Shifted probe values exp(tau*((x.th - s) + i*x.th_perp))."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        along = pts @ np.asarray(self.frame.theta)
        across = pts @ np.asarray(self.frame.theta_perp)
        return np.exp(self.tau * (along - self.shift) + 1j * self.tau * across)


def max_admissible_tau(mesh: Mesh) -> float:
    return RESOLUTION_GATE / mesh.h_max


def _require_resolved(mesh: Mesh, tau: float) -> None:
    if tau * mesh.h_max > RESOLUTION_GATE:
        raise ProbeResolutionError(
            f"tau = {tau:g} underresolved on this mesh (h_max = {mesh.h_max:.4g}); "
            f"largest admissible tau is {max_admissible_tau(mesh):.4g}",
            tau_max_admissible=max_admissible_tau(mesh),
        )


def cgo_trace(mesh: Mesh, probe: Probe) -> np.ndarray:
    """Probe trace at the boundary vertices, in boundary-loop order.

    Refuses underresolved probes instead of degrading.
    """
    _require_resolved(mesh, probe.tau)
    return probe.evaluate(mesh.vertices[mesh.boundary_vertices])


@dataclass(frozen=True)
class IndicatorSample:
    log_abs: float
    sign: int
    underflow: bool


@dataclass(frozen=True)
class IndicatorCurve:
    """Indicator samples along increasing tau at a fixed height t.

    ``log_abs`` entries are meaningless where ``underflow`` is set (the raw
    pairing difference fell below the floor); they are stored as 0.0, never
    as -inf.
    """

    frame: DirectionFrame
    t: float
    taus: np.ndarray
    log_abs: np.ndarray
    signs: np.ndarray
    underflow: np.ndarray

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=float)
        if len(taus) and np.any(np.diff(taus) <= 0.0):
            raise InvalidParameterError("curve taus must be strictly increasing")
        ok = ~np.asarray(self.underflow, dtype=bool)
        if not np.all(np.isfinite(np.asarray(self.log_abs)[ok])):
            raise InvalidParameterError("non-finite log sample without underflow flag")

    def __len__(self) -> int:
        return len(self.taus)

    def shifted(self, new_t: float) -> "IndicatorCurve":
        """Same curve at another height via the exact identity
        log|I(tau, t1)| - log|I(tau, t2)| = 2*tau*(t2 - t1)."""
        return IndicatorCurve(
            frame=self.frame,
            t=new_t,
            taus=self.taus,
            log_abs=self.log_abs + 2.0 * self.taus * (self.t - new_t),
            signs=self.signs,
            underflow=self.underflow,
        )


@dataclass(frozen=True)
class SupportEstimate:
    """Fitted support value for one direction."""

    frame: DirectionFrame
    h_hat: float
    fit_residual: float
    tau_window: tuple[float, float]
    h_exact: float | None = None


class IndicatorEngine:
    """Shared factorization for indicator evaluation on one mesh.

    The probe itself is an exact solution of the background problem, so
    the pairing difference has the local scattered-field form

        J = sum over inclusion triangles of dA grad(u0 + w) . grad(conj u0),

    where u0 is the analytic probe field, dA the coefficient perturbation,
    and w the scattering correction solving the inclusion problem with the
    local source -div(dA grad u0) and zero trace.  Every term scales with
    the signal, so J keeps full relative precision even when it is
    exponentially small; solving the background problem numerically and
    subtracting pairings would bury it under discretization pollution.

    One factorized system serves every direction and tau.  Solves are
    serialized internally, so the engine may be shared across threads.
    """

    def __init__(self, reduced: ReducedScene, mesh: Mesh):
        self.mesh = mesh
        self.reduced = reduced
        self._init_fields(reduced_field(mesh, reduced), identity_field(mesh))

    def _init_fields(self, coeff: CoeffField, background: CoeffField) -> None:
        self.system_inclusion = DirichletSystem(self.mesh, coeff)
        self.delta_k = assemble(
            self.mesh, CoeffField(coeff.matrices - background.matrices)
        )
        self.delta_k.eliminate_zeros()
        self._lock = threading.Lock()

    @classmethod
    def from_fields(
        cls, mesh: Mesh, coeff: CoeffField, background: CoeffField
    ) -> "IndicatorEngine":
        """Engine over explicit coefficient fields.

        ``background`` must be a constant multiple of the identity so the
        probe stays an exact background solution; used e.g. to run the
        pipeline in original variables before rescaling.
        """
        engine = cls.__new__(cls)
        engine.mesh = mesh
        engine.reduced = None
        engine._init_fields(coeff, background)
        return engine

    def pairing_differences(self, frame: DirectionFrame, taus) -> np.ndarray:
        """Complex pairing differences for the shifted probes, one per tau."""
        taus = np.asarray(taus, dtype=float)
        _require_resolved(self.mesh, float(np.max(taus)))
        shift = self.mesh.domain.support(frame.theta)
        u0 = np.column_stack(
            [
                Probe(frame, float(tau), shift).evaluate(self.mesh.vertices)
                for tau in taus
            ]
        )
        source = self.delta_k @ u0
        with self._lock:
            w = self.system_inclusion.solve_interior(-source)
        return np.einsum("vk,vk->k", np.conj(u0), source + self.delta_k @ w)

    def curve(self, frame: DirectionFrame, taus, t: float = 0.0) -> IndicatorCurve:
        """Indicator curve at height t; one factorization pair for all tau."""
        taus = np.asarray(taus, dtype=float)
        j = np.real(self.pairing_differences(frame, taus))
        shift = self.mesh.domain.support(frame.theta)
        under = np.abs(j) < UNDERFLOW_FLOOR
        safe = np.where(under, 1.0, np.abs(j))
        log_abs = np.where(under, 0.0, np.log(safe) + 2.0 * taus * (shift - t))
        signs = np.where(under, 0, np.sign(j)).astype(int)
        return IndicatorCurve(
            frame=frame, t=t, taus=taus, log_abs=log_abs, signs=signs, underflow=under
        )


def indicator(
    reduced: ReducedScene, mesh: Mesh, probe: Probe, t: float
) -> IndicatorSample:
    """Single indicator sample log|I(tau, t)| and its sign.

    Builds fresh factorizations; use IndicatorEngine to evaluate many
    probes on one scene.
    """
    engine = IndicatorEngine(reduced, mesh)
    curve = engine.curve(probe.frame, [probe.tau], t)
    return IndicatorSample(
        log_abs=float(curve.log_abs[0]),
        sign=int(curve.signs[0]),
        underflow=bool(curve.underflow[0]),
    )


def indicator_curve(
    reduced: ReducedScene,
    mesh: Mesh,
    frame: DirectionFrame,
    taus,
    t: float = 0.0,
) -> IndicatorCurve:
    """Indicator samples over a tau sweep (fresh factorizations)."""
    return IndicatorEngine(reduced, mesh).curve(frame, taus, t)


def estimate_support(curve: IndicatorCurve) -> SupportEstimate:
    """Least-squares slope of log|I(tau, 0)| against 2*tau.

    Fits over the upper half of the tau window, where the asymptotic
    regime dominates; needs at least 8 samples and no underflow inside the
    fit window.
    """
    if curve.t != 0.0:
        raise InvalidParameterError("support estimation expects a curve at t = 0")
    if len(curve) < 8:
        raise InvalidParameterError("support estimation needs at least 8 samples")
    mid = 0.5 * (curve.taus[0] + curve.taus[-1])
    window = curve.taus >= mid
    if int(np.sum(window)) < 4:
        raise EstimationError(
            "fewer than 4 samples in the upper half of the tau window"
        )
    if np.any(curve.underflow[window]):
        raise EstimationError("underflowed samples inside the fit window")
    x = 2.0 * curve.taus[window]
    y = curve.log_abs[window]
    xm, ym = np.mean(x), np.mean(y)
    slope = float(np.sum((x - xm) * (y - ym)) / np.sum((x - xm) ** 2))
    resid = float(np.sqrt(np.mean((y - (ym + slope * (x - xm))) ** 2)))
    return SupportEstimate(
        frame=curve.frame,
        h_hat=slope,
        fit_residual=resid,
        tau_window=(float(x[0] / 2.0), float(x[-1] / 2.0)),
    )


# ---------------------------------------------------------------------------
# direction sweeps


@dataclass(frozen=True)
class DirectionResult:
    index: int
    frame: DirectionFrame
    curve: IndicatorCurve
    estimate: SupportEstimate | None
    report: RegimeReport | None
    flags: tuple[str, ...]


@dataclass(frozen=True)
class SweepResult:
    directions: tuple[DirectionResult, ...]
    hull: ConvexPolygon | None
    hull_error: str | None
    detected: bool
    message: str

    def estimates(self) -> list[SupportEstimate]:
        return [d.estimate for d in self.directions if d.estimate is not None]

    def max_support_error(self) -> float | None:
        errs = [
            abs(e.h_hat - e.h_exact)
            for e in self.estimates()
            if e.h_exact is not None
        ]
        return max(errs) if errs else None


def worker_count(n_tasks: int, threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(threads, n_tasks))


def sweep(
    scene: MaterialScene,
    mesh: Mesh,
    n_directions: int,
    taus,
    delta: float | None = None,
    threads: int | None = None,
) -> SweepResult:
    """Estimate the support function on uniform directions and enclose.

    Directions whose regime report has an empty applicable set are flagged
    "outside proven regime" but still estimated.  Per-direction work runs
    on a thread pool capped by ENCLOSURE_KIT_THREADS (results are
    aggregated in direction order, so output is deterministic).
    """
    if n_directions < 8:
        raise InvalidParameterError("sweep needs at least 8 directions")
    taus = np.asarray(taus, dtype=float)
    if len(taus) < 8:
        raise InvalidParameterError("sweep needs at least 8 tau samples")
    reduced = materials.reduce_scene(scene)
    engine = IndicatorEngine(reduced, mesh)
    frames = geometry.uniform_directions(n_directions)

    def one_direction(k: int) -> DirectionResult:
        frame = frames[k]
        curve = engine.curve(frame, taus, t=0.0)
        flags: list[str] = []
        h_exact = None
        report = None
        if not scene.inclusions:
            flags.append(NO_INCLUSION_FLAG)
        else:
            h_exact = materials.scene_support(scene, frame.theta)
            report = materials.classify_regime(scene, frame, delta)
            if report.applicable:
                flags.extend(sorted(report.applicable))
            else:
                flags.append(OUTSIDE_REGIME_FLAG)
        try:
            estimate = estimate_support(curve)
            if h_exact is not None:
                estimate = SupportEstimate(
                    frame=estimate.frame,
                    h_hat=estimate.h_hat,
                    fit_residual=estimate.fit_residual,
                    tau_window=estimate.tau_window,
                    h_exact=h_exact,
                )
        except EstimationError:
            estimate = None
            flags.append(NO_SIGNAL_FLAG)
        return DirectionResult(
            index=k,
            frame=frame,
            curve=curve,
            estimate=estimate,
            report=report,
            flags=tuple(flags),
        )

    with ThreadPoolExecutor(max_workers=worker_count(n_directions, threads)) as pool:
        results = list(pool.map(one_direction, range(n_directions)))

    estimated = [(d.frame, d.estimate.h_hat) for d in results if d.estimate is not None]
    hull = None
    hull_error = None
    if not estimated:
        detected = False
        message = "no inclusion detected"
    else:
        detected = True
        message = f"estimated support on {len(estimated)}/{n_directions} directions"
        try:
            hull = geometry.hull_from_support(estimated)
        except (DegenerateHullError, InvalidParameterError) as exc:
            hull_error = str(exc)
    return SweepResult(
        directions=tuple(results),
        hull=hull,
        hull_error=hull_error,
        detected=detected,
        message=message,
    )
