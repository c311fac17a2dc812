"""Experiment drivers: co-evolution with eigenvalue tracing, turning-point
detection, |det B|-triggered mesh refinement, TOL calibration, and
reduced-model switchover with optional coefficient identification.

Case I co-evolves the full system and an actual reduced model; Case II
evolves only the full system and builds the reduced-side matrix from the
full system's resolved modes.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field, replace

import numpy as np

from .integrate import IntegratorSettings, StepUnderflow, adaptive_step, rk4_step
from .models import (
    FULL_COEFFICIENTS,
    BurgersSystem,
    CoefficientVector,
    ModelKind,
)
from .renorm import (
    MAX_DIGITS,
    SINGULAR_DET_THRESHOLD,
    RenormState,
    build_matrices,
    digits_agreement,
    quantities_array,
    rate_contributions_arrays,
)
from .spectral import (
    ModePartition,
    SpectralField,
    field_from_sine,
    hermitianize,
    restrict,
    spectral_interpolate,
)


class CalibrationError(RuntimeError):
    """TOL calibration ran out of headroom before meeting the digit target."""

    def __init__(self, message: str, best_digits: int):
        super().__init__(message)
        self.best_digits = best_digits


@dataclass(frozen=True)
class ExperimentConfig:
    nu: float = 0.0
    n_start: int = 256
    n_final: int | None = None
    tol: float = 1e-16
    model: ModelKind = field(default_factory=ModelKind.t_model)
    case: str = "I"
    reduced_fraction: float = 0.5
    t_end: float = 1.1
    record_stride: int = 4
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)
    pad_factor: int = 1
    resolve_per_record: bool = False
    reset_model_time: bool = False
    force_record_at: tuple[float, ...] = ()

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError("viscosity must be nonnegative")
        if self.n_final is not None and self.n_start > self.n_final:
            raise ValueError("n_start must not exceed n_final")
        if self.tol < 1e-16:
            raise ValueError("TOL below 1e-16 is under the double-precision floor")
        if self.case not in ("I", "II"):
            raise ValueError(f"case must be 'I' or 'II', got {self.case!r}")
        if self.record_stride < 1:
            raise ValueError("record_stride must be positive")
        if not 0 < self.reduced_fraction < 1:
            raise ValueError("reduced_fraction must lie in (0, 1)")

    @property
    def max_size(self) -> int:
        return self.n_final if self.n_final is not None else self.n_start

    def reduced_size(self, m: int) -> int:
        n = int(round(m * self.reduced_fraction))
        if n < 2 or n & (n - 1) != 0:
            raise ValueError(f"reduced size {n} of total {m} is not a power of two")
        return n


@dataclass(frozen=True)
class TraceRecord:
    t: float
    n_current: int
    eig1: complex
    eig2: complex
    detB: float
    digits1: int
    digits2: int
    E1_full: float
    E2_full: float
    E1_red: float
    E2_red: float
    dE1_full: float
    dE1_red: float
    refinement_event: bool = False
    switchover_event: bool = False
    b_singular: bool = False


@dataclass
class Trace:
    config: ExperimentConfig
    records: list[TraceRecord] = field(default_factory=list)
    blow_up: bool = False
    exhausted_time: float | None = None
    switch_time: float | None = None
    coefficients: CoefficientVector | None = None
    coefficient_history: list = field(default_factory=list)  # (t, CoefficientVector) pairs
    duration: float = 0.0
    final_field: SpectralField | None = None

    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


@dataclass(frozen=True)
class TurningPointReport:
    t_turn: float
    eig_at_turn: float
    crossing_times: list = field(default_factory=list)
    resolutions: list = field(default_factory=list)


class _Run:
    """Mutable state of one experiment: full field, reduced field, systems."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.t = 0.0
        self.dt_next = cfg.integrator.initial_dt
        self.prev_eig: tuple[complex, complex] | None = None
        self.switched = False
        self._model_t0 = 0.0
        self._install(cfg.n_start, field_from_sine(cfg.n_start).modes.copy(), None)

    # -- system plumbing ------------------------------------------------

    def _install(self, m: int, u: np.ndarray, up: np.ndarray | None):
        cfg = self.cfg
        n = cfg.reduced_size(m)
        self.m = m
        self.partition = ModePartition(n, m, cfg.pad_factor)
        self.full_sys = BurgersSystem.full(self.partition, cfg.nu)
        self.red_sys = BurgersSystem.reduced(self.partition, cfg.model, cfg.nu)
        self.u = u
        if cfg.case == "I":
            self.up = up if up is not None else self._restricted()
        else:
            self.up = None

    def _restricted(self) -> np.ndarray:
        field_ = SpectralField(self.u, self.m, self.t)
        return restrict(field_, self.partition.n_resolved).modes.copy()

    def _systems(self):
        if self.switched:
            return [self.red_sys], [self.up]
        if self.cfg.case == "I":
            return [self.full_sys, self.red_sys], [self.u, self.up]
        return [self.full_sys], [self.u]

    @property
    def active_size(self) -> int:
        return self.red_sys.size if self.switched else self.m

    # -- stepping --------------------------------------------------------

    def advance(self, t_stop: float) -> None:
        """Advance by one record stride (or up to t_stop, whichever is first)."""
        cfg = self.cfg
        systems, states = self._systems()
        if cfg.reset_model_time and self.switched:
            systems = [_ShiftedClock(s, self._model_t0) for s in systems]
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(cfg.record_stride):
                if self.t >= t_stop:
                    break
                if cfg.integrator.mode == "fixed":
                    dt = min(cfg.integrator.fixed_step(systems, self.t), t_stop - self.t)
                    states = rk4_step(systems, self.t, states, dt)
                    self.t += dt
                else:
                    dt_try = min(self.dt_next, t_stop - self.t)
                    self.t, states, _, self.dt_next = adaptive_step(
                        systems, self.t, states, dt_try, cfg.integrator.rtol, cfg.integrator.atol
                    )
        for y in states:
            if not np.all(np.isfinite(y.view(np.float64))):
                raise StepUnderflow(f"non-finite state at t={self.t:.6g}")
            hermitianize(y)
        if self.switched:
            self.up = states[0]
        elif cfg.case == "I":
            self.u, self.up = states
        else:
            self.u = states[0]

    # -- diagnostics -----------------------------------------------------

    def snapshot(self, refine=False, switch=False) -> tuple[TraceRecord, RenormState, np.ndarray]:
        """Record row plus the renormalization state and full-rate vector."""
        cfg = self.cfg
        if self.switched:
            t_model = self.t - self._model_t0 if cfg.reset_model_time else self.t
            e1, e2 = quantities_array(self.up)
            terms = self.red_sys.terms(t_model, self.up)
            c = rate_contributions_arrays(terms.r1, terms.r2, self.up)
            a1 = self.red_sys.coefficients.as_array()
            de = c @ a1
            rec = TraceRecord(
                t=self.t, n_current=self.red_sys.size,
                eig1=0j, eig2=0j, detB=0.0,
                digits1=MAX_DIGITS, digits2=MAX_DIGITS,
                E1_full=e1, E2_full=e2, E1_red=e1, E2_red=e2,
                dE1_full=de[0], dE1_red=de[0],
                refinement_event=refine, switchover_event=switch, b_singular=True,
            )
            return rec, None, de

        full_terms = self.full_sys.terms(self.t, self.u)
        off = (self.m - self.partition.n_resolved) // 2
        sl = slice(off, off + self.partition.n_resolved)
        u_f = self.u[sl]
        full_c = rate_contributions_arrays(full_terms.r1[sl], full_terms.r2[sl], u_f)

        if cfg.case == "I":
            up = self.up
        else:
            up = self.u[sl].copy()
            up[0] = 0.0  # restriction zeroes the reduced band's Nyquist mode
        red_terms = self.red_sys.terms(self.t, up)
        red_c = rate_contributions_arrays(red_terms.r1, red_terms.r2, up)

        state = build_matrices(full_c, red_c, time=self.t)
        a0 = FULL_COEFFICIENTS.as_array()
        a1 = self.red_sys.coefficients.as_array()
        de_full = full_c @ a0
        de_red = red_c @ a1
        if cfg.case == "I":
            # conditions agreement: the monitored quantities over F, with the
            # resolved band's unpaired Nyquist slot dormant on both sides
            u_res = u_f.copy()
            u_res[0] = 0.0
            qf = quantities_array(u_res)
            qr = quantities_array(up)
            digits = (
                digits_agreement(qf[0], qr[0]),
                digits_agreement(qf[1], qr[1]),
            )
        else:
            digits = (MAX_DIGITS, MAX_DIGITS)

        eig = state.eig
        if not state.b_singular_flag:
            # Label the branch glued to 1 as first: the informative branch
            # crosses straight through 1 on its way up, where continuity
            # matching degenerates to a coin flip.
            if abs(eig[1] - 1.0) < abs(eig[0] - 1.0):
                eig = (eig[1], eig[0])
            self.prev_eig = eig

        e1f, e2f = quantities_array(self.u)
        e1r, e2r = quantities_array(up)
        rec = TraceRecord(
            t=self.t, n_current=self.m,
            eig1=eig[0], eig2=eig[1], detB=state.detB,
            digits1=digits[0], digits2=digits[1],
            E1_full=e1f, E2_full=e2f, E1_red=e1r, E2_red=e2r,
            dE1_full=de_full[0], dE1_red=de_red[0],
            refinement_event=refine, switchover_event=switch,
            b_singular=state.b_singular_flag,
        )
        return rec, state, de_full

    # -- structural events -------------------------------------------------

    def refine(self) -> None:
        m_new = 2 * self.m
        u_new = spectral_interpolate(SpectralField(self.u, self.m, self.t), m_new).modes.copy()
        up_new = None
        if self.cfg.case == "I":
            n_new = self.cfg.reduced_size(m_new)
            up_new = spectral_interpolate(
                SpectralField(self.up, self.red_sys.size, self.t), n_new
            ).modes.copy()
        self._install(m_new, u_new, up_new)

    def switch_to_reduced(self, coefficients: CoefficientVector | None = None) -> None:
        cfg = self.cfg
        k = self.m
        n = cfg.reduced_size(k)
        partition = ModePartition(n, k, cfg.pad_factor)
        model = cfg.model if coefficients is None else ModelKind.identified(coefficients)
        self.red_sys = BurgersSystem.reduced(partition, model, cfg.nu)
        self.up = restrict(SpectralField(self.u, self.m, self.t), n).modes.copy()
        self.switched = True
        self._model_t0 = self.t


class _ShiftedClock:
    """Wrap a system so its explicit time factor restarts at a switchover."""

    def __init__(self, system, t0: float):
        self._system = system
        self._t0 = t0

    def rhs(self, t, y):
        return self._system.rhs(t - self._t0, y)

    def stable_step(self, t):
        return self._system.stable_step(t - self._t0)


def _next_stop(cfg: ExperimentConfig, t: float) -> float:
    """Earliest requested record instant still ahead, else t_end."""
    ahead = [s for s in cfg.force_record_at if s > t + 1e-15]
    return min(ahead) if ahead and min(ahead) < cfg.t_end else cfg.t_end


def _drive(cfg: ExperimentConfig, refinement: bool, follow: bool) -> Trace:
    trace = Trace(config=cfg)
    run = _Run(cfg)
    started = _time.perf_counter()
    rec, state, de_full = run.snapshot()
    trace.records.append(rec)
    try:
        while run.t < cfg.t_end:
            run.advance(_next_stop(cfg, run.t))
            rec, state, de_full = run.snapshot()
            if (
                cfg.resolve_per_record
                and cfg.case == "II"
                and state is not None
                and not state.b_singular_flag
            ):
                # exploratory mode: watch the identified coefficients settle
                trace.coefficient_history.append(
                    (run.t, solve_coefficients(state.B, de_full))
                )
            if (
                refinement
                and not run.switched
                and abs(rec.detB) >= cfg.tol
            ):
                if run.m < cfg.max_size:
                    rec = replace(rec, refinement_event=True)
                    trace.records.append(rec)
                    run.refine()
                    continue
                # resolution exhausted at maximum size
                trace.exhausted_time = run.t
                if not follow:
                    trace.records.append(rec)
                    break
                coeffs = None
                if cfg.case == "II":
                    coeffs = solve_coefficients(state.B, de_full)
                    trace.coefficients = coeffs
                elif cfg.model.name == "identified":
                    coeffs = cfg.model.coefficients
                rec = replace(rec, switchover_event=True)
                trace.records.append(rec)
                run.switch_to_reduced(coeffs)
                trace.switch_time = run.t
                run.prev_eig = None
                continue
            trace.records.append(rec)
    except StepUnderflow:
        trace.blow_up = True
    trace.duration = _time.perf_counter() - started
    state = run.up if run.switched else run.u
    if state is not None and np.all(np.isfinite(state.view(np.float64))):
        trace.final_field = SpectralField(state.copy(), len(state), run.t)
    return trace


def run_case1_detect(cfg: ExperimentConfig) -> Trace:
    """Algorithm for locating a possible singularity with a known reduced model."""
    if cfg.case != "I":
        raise ValueError("run_case1_detect requires case I")
    return _drive(cfg, refinement=False, follow=False)


def run_case2_detect(cfg: ExperimentConfig) -> Trace:
    """Detection driven by the full system alone (reduced side from restriction)."""
    if cfg.case != "II":
        raise ValueError("run_case2_detect requires case II")
    return _drive(cfg, refinement=False, follow=False)


def run_detect(cfg: ExperimentConfig) -> Trace:
    return run_case1_detect(cfg) if cfg.case == "I" else run_case2_detect(cfg)


def run_refine(cfg: ExperimentConfig) -> Trace:
    """Refine by doubling whenever |det B| >= TOL, until resolution exhausts."""
    return _drive(cfg, refinement=True, follow=False)


def run_follow(cfg: ExperimentConfig) -> Trace:
    """Refine to exhaustion, then hand over to the reduced model."""
    return _drive(cfg, refinement=True, follow=True)


def solve_coefficients(B: np.ndarray, e: np.ndarray) -> CoefficientVector:
    """Identify reduced-model coefficients a from B a = e at switchover.

    Rows of B are the monitored quantities, columns the model terms, so
    B a is the reduced model's quantity-rate vector; matching it to the
    full system's rates e pins down the coefficients.
    """
    detB = B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0]
    if abs(detB) < SINGULAR_DET_THRESHOLD:
        raise ValueError("B is numerically singular; cannot identify coefficients")
    a = np.linalg.solve(B, np.asarray(e, dtype=float))
    return CoefficientVector(float(a[0]), float(a[1]))


def _moving_average(y: np.ndarray, window: int = 5) -> np.ndarray:
    half = window // 2
    out = np.empty_like(y)
    for i in range(len(y)):
        lo = max(0, i - half)
        hi = min(len(y), i + half + 1)
        out[i] = np.mean(y[lo:hi])
    return out


def detect_turning_point(trace: Trace, window: int = 5) -> TurningPointReport | None:
    """Inflection of the second-eigenvalue growth: the time where the
    smoothed centered growth rate peaks.  Returns None when no growth
    phase exists."""
    rows = [r for r in trace.records if not r.b_singular]
    if len(rows) < window + 2:
        return None
    t = np.array([r.t for r in rows])
    y = _moving_average(np.array([r.eig2.real for r in rows]), window)
    rate = np.empty(len(y))
    rate[1:-1] = (y[2:] - y[:-2]) / (t[2:] - t[:-2])
    rate[0] = rate[1]
    rate[-1] = rate[-2]
    i = int(np.argmax(rate[1:-1])) + 1
    scale = max(np.max(np.abs(y)), 1e-30)
    if rate[i] <= 1e-12 * scale:
        return None
    if i >= len(y) - (window // 2 + 2):
        # still accelerating at trace end (the tail of the smoothing
        # window is truncated there): turning not reached yet
        return None
    return TurningPointReport(
        t_turn=float(t[i]),
        eig_at_turn=float(y[i]),
        crossing_times=[],
        resolutions=[trace.config.n_start],
    )


def second_eigenvalue_crossing(low: Trace, high: Trace) -> float | None:
    """Time where the higher-resolution second eigenvalue overtakes the lower.

    Both traces must come from the same experiment at two resolutions.
    The search is restricted to the growth phase (both series past 5% of
    the lower trace's peak) where the ordering flip is meaningful.
    """
    rows_l = [r for r in low.records if not r.b_singular]
    rows_h = [r for r in high.records if not r.b_singular]
    if not rows_l or not rows_h:
        return None
    tl = np.array([r.t for r in rows_l])
    yl = np.array([r.eig2.real for r in rows_l])
    th = np.array([r.t for r in rows_h])
    yh = np.array([r.eig2.real for r in rows_h])
    t0 = max(tl[0], th[0])
    t1 = min(tl[-1], th[-1])
    grid = tl[(tl >= t0) & (tl <= t1)]
    a = np.interp(grid, tl, yl)
    b = np.interp(grid, th, yh)
    threshold = 0.05 * np.max(np.abs(yl))
    active = np.abs(a) > threshold
    diff = b - a
    for i in range(1, len(grid)):
        if not (active[i] and active[i - 1]):
            continue
        if diff[i - 1] < 0.0 <= diff[i]:
            frac = -diff[i - 1] / (diff[i] - diff[i - 1])
            return float(grid[i - 1] + frac * (grid[i] - grid[i - 1]))
    return None


def turning_point_sweep(traces: list[Trace], window: int = 5) -> TurningPointReport | None:
    """Aggregate turning-point report over a resolution sweep."""
    traces = sorted(traces, key=lambda tr: tr.config.n_start)
    reports = [detect_turning_point(tr, window) for tr in traces]
    if not reports or reports[-1] is None:
        return None
    crossings = []
    for lo, hi in zip(traces, traces[1:]):
        c = second_eigenvalue_crossing(lo, hi)
        if c is not None:
            crossings.append(c)
    last = reports[-1]
    return TurningPointReport(
        t_turn=last.t_turn,
        eig_at_turn=last.eig_at_turn,
        crossing_times=crossings,
        resolutions=[tr.config.n_start for tr in traces],
    )


def calibrate_tol(cfg: ExperimentConfig, target_digits: int) -> float:
    """Algorithm-2 calibration: shrink TOL decade by decade until the
    refining run and the fixed-resolution run agree on the quantities at
    their exhaustion instants to the requested number of digits."""
    if target_digits <= 0:
        return cfg.tol
    if target_digits > 10:
        raise ValueError("target digits must lie in [1, 10]")
    tol = cfg.tol
    best = -1
    while True:
        s1 = run_refine(replace(cfg, tol=tol))
        s2 = run_refine(replace(cfg, tol=tol, n_start=cfg.max_size, n_final=cfg.max_size))
        d = _exhaustion_agreement(s1, s2)
        best = max(best, d)
        if d >= target_digits:
            return tol
        tol *= 0.1
        if tol < 1e-16:
            raise CalibrationError(
                f"no TOL above 1e-16 reaches {target_digits} digits (best: {best})", best
            )


def _exhaustion_agreement(s1: Trace, s2: Trace) -> int:
    if s1.exhausted_time is None or s2.exhausted_time is None:
        return -1
    r1 = s1.records[-1]
    r2 = s2.records[-1]
    return min(
        digits_agreement(r1.E1_full, r2.E1_full),
        digits_agreement(r1.E2_full, r2.E2_full),
    )
