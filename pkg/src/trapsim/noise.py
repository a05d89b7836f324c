"""Spectral estimation, resonance/ringdown fitting and sensitivity budgets.

The measured observable is a generic flux-like signal proportional to one
rigid-body coordinate of the sphere; absolute displacement calibration is
not required anywhere because torque noise is calibrated by transfer: a
spectrum taken in a gas-damped regime, where the thermal torque PSD is
known from Eq-of-motion thermodynamics, fixes the conversion between the
fitted peak amplitude ``A1`` and physical torque PSD, and that conversion
is then applied to the low-damping spectrum.

PSD conventions: one-sided densities in (signal units)^2 / Hz with the
normalisation that the integral over frequency equals the mean square of
the time series.  The resonance model is

    S(f) = A0 + A1 f0^4 / ((f^2 - f0^2)^2 + (f f0 / Q)^2)

with white background A0, peak amplitude A1 (so S(f0) = A0 + A1 Q^2 and
S(0) = A0 + A1).  Narrow peaks leak into a few neighbouring FFT bins, so
the fitter can drop a window of bins centred on the peak and fit the
model to the tails only.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, signal

from .core import (
    CONSTANTS,
    DataFormatError,
    FitError,
    InvalidParameterError,
    MagnetParticle,
    PhysicalConstants,
    ValidityWarning,
    atomic_write_text,
)

__all__ = [
    "SpectrumRecord",
    "RingdownRecord",
    "LorentzianFit",
    "RingdownFit",
    "SensitivityReport",
    "lorentzian_psd",
    "estimate_psd",
    "fit_lorentzian",
    "fit_exponential_ringdown",
    "demodulate_amplitude",
    "ringdown_frequency_trace",
    "thermal_torque_psd",
    "calibrate_torque",
    "sensitivity_report",
    "save_spectrum_csv",
    "load_spectrum_csv",
    "save_ringdown_csv",
    "load_ringdown_csv",
]


# --------------------------------------------------------------------------
# record types
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectrumRecord:
    """A one-sided power spectral density estimate."""

    frequencies: np.ndarray     # [Hz]
    psd: np.ndarray             # [units^2/Hz]
    df: float                   # bin width [Hz]
    n_segments: int             # periodogram averages
    sample_rate: float          # [Hz]; 0 for imported spectra

    @property
    def nyquist(self) -> float:
        return 0.5 * self.sample_rate


@dataclass(frozen=True, eq=False)
class RingdownRecord:
    """A time-domain record of a decaying mode.

    ``kind`` is ``"waveform"`` for a raw oscillating signal (the fitter
    demodulates it) or ``"amplitude"`` for an already-demodulated
    envelope sampled at arbitrary times.
    """

    times: np.ndarray           # [s]
    values: np.ndarray
    sample_rate: float          # [Hz]; 0 for irregular amplitude samples
    kind: str = "waveform"

    def __post_init__(self) -> None:
        if self.kind not in ("waveform", "amplitude"):
            raise InvalidParameterError(
                f"kind must be 'waveform' or 'amplitude', got {self.kind!r}")
        if len(self.times) != len(self.values):
            raise InvalidParameterError("times and values length mismatch")


# --------------------------------------------------------------------------
# resonance model
# --------------------------------------------------------------------------

def lorentzian_psd(f, a0: float, a1: float, f0: float, q: float):
    """Resonance PSD model; accepts scalar or array frequency >= 0."""
    farr = np.asarray(f, dtype=float)
    if np.any(farr < 0.0):
        raise InvalidParameterError("frequencies must be >= 0")
    if not (f0 > 0.0 and q > 0.0):
        raise InvalidParameterError("f0 and q must be > 0")
    value = a0 + a1 * f0 ** 4 / ((farr ** 2 - f0 ** 2) ** 2
                                 + (farr * f0 / q) ** 2)
    return value if value.shape else float(value)


def lorentzian_peak_power(a1: float, f0: float, q: float) -> float:
    """Integrated power of the resonant part, a1 * pi * f0 * q / 2.

    Exact in the limit q >> 1; the mean-square contribution of the peak
    to a time series whose PSD follows :func:`lorentzian_psd`.
    """
    return a1 * math.pi * f0 * q / 2.0


@dataclass(frozen=True)
class LorentzianFit:
    """Result of a resonance-model fit to a spectrum."""

    a0: float
    a1: float
    f0: float
    q: float
    a0_stderr: float
    a1_stderr: float
    f0_stderr: float
    q_stderr: float
    excluded_bins: int
    band: tuple[float, float]
    residual_rms: float             # rms of relative residuals over fit bins
    n_points: int
    exclusion_shifted_a1: bool | None  # did dropping the window move A1 > 1 sigma
    q_fixed: bool = False

    def evaluate(self, f):
        return lorentzian_psd(f, self.a0, self.a1, self.f0, self.q)


# --------------------------------------------------------------------------
# PSD estimation
# --------------------------------------------------------------------------

def estimate_psd(values, sample_rate: float, segment_length: int,
                 overlap: float = 0.5) -> SpectrumRecord:
    """Averaged-periodogram (Welch) PSD of a uniformly sampled series.

    Hann-windowed segments with fractional ``overlap``, one-sided density
    normalisation: integrating the result over frequency returns the mean
    square of the series (within the leakage-weighting of the window, a
    couple of percent).  The mean is deliberately not removed so that the
    DC bin accounts for any offset and the Parseval property holds for
    the raw series.

    ``segment_length`` must be a power of two and no longer than the
    series.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        raise InvalidParameterError("series must be 1-D")
    if not sample_rate > 0.0:
        raise InvalidParameterError("sample_rate must be > 0")
    n = int(segment_length)
    if n < 2 or (n & (n - 1)) != 0:
        raise InvalidParameterError(
            f"segment_length must be a power of two >= 2, got {segment_length}")
    if n > x.size:
        raise InvalidParameterError(
            f"series too short: {x.size} samples < segment_length {n}")
    if not 0.0 <= overlap < 1.0:
        raise InvalidParameterError("overlap must lie in [0, 1)")
    noverlap = int(round(overlap * n))
    freqs, psd = signal.welch(x, fs=sample_rate, window="hann", nperseg=n,
                              noverlap=noverlap, detrend=False,
                              return_onesided=True, scaling="density")
    step = n - noverlap
    n_segments = 1 + (x.size - n) // step
    return SpectrumRecord(frequencies=freqs, psd=psd,
                          df=float(freqs[1] - freqs[0]),
                          n_segments=int(n_segments),
                          sample_rate=float(sample_rate))


# --------------------------------------------------------------------------
# resonance fitting
# --------------------------------------------------------------------------

def _initial_guess(f: np.ndarray, s: np.ndarray) -> tuple[float, float, float, float]:
    a0 = float(np.median(s))
    peak = int(np.argmax(s))
    f0 = float(f[peak])
    height = float(s[peak])
    # half-power width around the peak as a Q estimate
    threshold = 0.5 * (height + a0)
    above = s >= threshold
    lo = peak
    while lo > 0 and above[lo - 1]:
        lo -= 1
    hi = peak
    while hi < s.size - 1 and above[hi + 1]:
        hi += 1
    width = max(float(f[hi] - f[lo]), float(f[1] - f[0]))
    q = min(max(f0 / width, 5.0), 1.0e7)
    a1 = max(height - a0, 1e-3 * max(height, 1.0e-300)) / q ** 2
    return a0, a1, f0, q


def fit_lorentzian(spectrum: SpectrumRecord,
                   initial: tuple[float, float, float, float] | None = None,
                   exclude_bins: int = 0,
                   band: tuple[float, float] | None = None,
                   fix_q: float | None = None) -> LorentzianFit:
    """Maximum-likelihood fit of the resonance model to a spectrum.

    Averaged-periodogram bins follow a scaled chi^2 law, so the fit
    minimises the Whittle likelihood sum(ln m + s/m) rather than weighted
    least squares (which is biased low by ~2/n_segments); standard errors
    come from the Fisher information using the record's segment count.

    Parameters
    ----------
    initial : (a0, a1, f0, q), optional
        Starting point; estimated from the data when omitted.
    exclude_bins : int
        Total number of bins, centred on the peak bin, dropped from the
        residual.  Use this when the true linewidth is below the bin
        width so the peak bins carry spectral leakage rather than the
        model shape; the tails then determine ``a1`` (and ``q`` becomes
        unidentifiable -- consider ``fix_q``).
    band : (f_lo, f_hi), optional
        Restrict the fit to a frequency window, e.g. to keep out-of-band
        electronics noise away from the residual.
    fix_q : float, optional
        Hold Q at this value and fit only (a0, a1, f0).

    Returns a :class:`LorentzianFit` whose ``exclusion_shifted_a1`` field
    reports whether removing the window moved ``a1`` by more than its
    standard error (compared against a fit of the same data without
    exclusion).
    """
    f_all = np.asarray(spectrum.frequencies, dtype=float)
    s_all = np.asarray(spectrum.psd, dtype=float)
    if exclude_bins < 0:
        raise InvalidParameterError("exclude_bins must be >= 0")
    keep = f_all > 0.0
    if band is not None:
        lo, hi = band
        if not hi > lo:
            raise InvalidParameterError("band must satisfy f_hi > f_lo")
        keep &= (f_all >= lo) & (f_all <= hi)
    f = f_all[keep]
    s = s_all[keep]
    if f.size < 8:
        raise InvalidParameterError("fewer than 8 usable bins in the band")
    band_used = (float(f[0]), float(f[-1]))

    guess = initial if initial is not None else _initial_guess(f, s)
    a0_0, a1_0, f0_0, q_0 = (float(v) for v in guess)
    if not (f0_0 > 0.0 and q_0 > 0.0):
        raise InvalidParameterError("initial f0 and q must be > 0")
    # The model only constrains the fit if the band resolves the resonance:
    # require the window to span several linewidths (skipped when there is
    # no discernible peak to measure, e.g. a null spectrum).
    peak_height = float(np.max(s))
    if peak_height > 3.0 * a0_0:
        span = band_used[1] - band_used[0]
        if span < 10.0 * f0_0 / q_0:
            raise InvalidParameterError(
                f"band spans {span:.3g} Hz < 10 half-widths "
                f"({10.0 * f0_0 / q_0:.3g} Hz) of the initial guess")

    n_avg = max(int(spectrum.n_segments), 1)

    def run(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
        fm, sm = f[mask], s[mask]
        if not np.max(sm) > 0.0:
            raise FitError("spectrum is nonpositive over the fit bins")
        s_scale = float(np.median(sm[sm > 0.0]))

        # A Welch bin is chi^2 distributed about the true spectrum, so a
        # least-squares fit weighted by either the data or the model is
        # biased by O(1/n_segments).  Minimise the Whittle likelihood
        # sum(ln m + s/m) instead: it is asymptotically unbiased and its
        # value is comparable across starting points.
        if fix_q is None:
            def unpack(t):
                return (t[0] * s_scale, math.exp(t[1]) * s_scale,
                        t[2], math.exp(t[3]))

            def pack(a0, a1, f0, q):
                return [a0 / s_scale, math.log(max(a1, 1e-300) / s_scale),
                        f0, math.log(q)]

            nm_bounds = [(0.0, None), (None, None), band_used,
                         (0.0, math.log(1.0e12))]
        else:
            def unpack(t):
                return (t[0] * s_scale, math.exp(t[1]) * s_scale,
                        t[2], float(fix_q))

            def pack(a0, a1, f0, _q):
                return [a0 / s_scale, math.log(max(a1, 1e-300) / s_scale), f0]

            nm_bounds = [(0.0, None), (None, None), band_used]

        def objective(t):
            a0, a1, f0, q = unpack(t)
            m = lorentzian_psd(fm, max(a0, 0.0), a1, f0, q)
            return float(np.sum(np.log(m) + sm / m))

        # the half-power width estimate behind q_0 is fragile on noisy
        # spectra, so try several Q decades and keep the best optimum
        q_grid = (1.0, 1.0 / 8.0, 1.0 / 64.0, 8.0) if fix_q is None \
            else (1.0,)
        best_t, best_value = None, math.inf
        for ratio in q_grid:
            q_start = min(max((fix_q or q_0) * ratio, 1.0), 1.0e12)
            a1_start = a1_0 * (q_0 / q_start) ** 2
            t0 = pack(a0_0, a1_start, f0_0, q_start)
            result = optimize.minimize(
                objective, t0, method="Nelder-Mead", bounds=nm_bounds,
                options={"maxiter": 4000, "xatol": 1e-10, "fatol": 1e-10})
            if math.isfinite(result.fun) and result.fun < best_value:
                best_t, best_value = result.x, result.fun
        if best_t is None:
            raise FitError(
                f"resonance fit did not converge from {len(q_grid)} starting "
                f"points over {fm.size} bins")

        a0, a1, f0, q = unpack(best_t)
        popt = np.array([a0, a1, f0, q] if fix_q is None else [a0, a1, f0])
        m_best = lorentzian_psd(fm, a0, a1, f0, q)

        # Gauss-Newton covariance of the likelihood optimum: the Fisher
        # information of an n_avg-segment bin is n_avg * (dm/dp)^2 / m^2
        def model_of(p):
            if fix_q is None:
                return lorentzian_psd(fm, max(p[0], 0.0), p[1], p[2], p[3])
            return lorentzian_psd(fm, max(p[0], 0.0), p[1], p[2], fix_q)

        jac = np.empty((fm.size, popt.size))
        scales = np.array([s_scale, max(a1, 1e-300 * s_scale),
                           max(f0, band_used[1] - band_used[0]), q][:popt.size])
        for j in range(popt.size):
            h = 1e-6 * scales[j]
            stepped = popt.copy()
            stepped[j] = popt[j] + h
            upper = model_of(stepped)
            stepped[j] = popt[j] - h
            jac[:, j] = (upper - model_of(stepped)) / (2.0 * h)
        # Work in relative parameter units so the Gram matrix stays
        # invertible despite the ~16 decades between a1 and q.
        weighted = (jac * scales[None, :]) / np.maximum(m_best, 1e-300)[:, None]
        pcov_rel = np.linalg.pinv(weighted.T @ weighted) / n_avg
        pcov = pcov_rel * np.outer(scales, scales)

        resid = (sm - m_best) / np.maximum(m_best, 1e-300)
        return popt, pcov, float(np.sqrt(np.mean(resid ** 2)))

    full_mask = np.ones(f.size, dtype=bool)
    if exclude_bins > 0:
        peak = int(np.argmax(s))
        lo_cut = peak - (exclude_bins - 1) // 2
        hi_cut = peak + exclude_bins // 2
        mask = full_mask.copy()
        mask[max(lo_cut, 0):hi_cut + 1] = False
        if mask.sum() < 8:
            raise InvalidParameterError("exclusion leaves fewer than 8 bins")
    else:
        mask = full_mask

    popt, pcov, resid_rms = run(mask)
    stderr = np.sqrt(np.maximum(np.diag(pcov), 0.0))
    if fix_q is None:
        a0, a1, f0, q = popt
        se = stderr
    else:
        a0, a1, f0 = popt
        q = float(fix_q)
        se = np.append(stderr, 0.0)

    shifted = None
    if exclude_bins > 0:
        try:
            popt_nx, _, _ = run(full_mask)
            a1_nx = popt_nx[1]
            shifted = bool(abs(a1 - a1_nx) > max(se[1], 0.0))
        except FitError:
            shifted = None

    return LorentzianFit(a0=float(a0), a1=float(a1), f0=float(f0), q=float(q),
                         a0_stderr=float(se[0]), a1_stderr=float(se[1]),
                         f0_stderr=float(se[2]), q_stderr=float(se[3]),
                         excluded_bins=int(exclude_bins), band=band_used,
                         residual_rms=resid_rms, n_points=int(mask.sum()),
                         exclusion_shifted_a1=shifted,
                         q_fixed=fix_q is not None)


# --------------------------------------------------------------------------
# ringdown fitting
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RingdownFit:
    """Exponential amplitude-decay fit A(t) = A0 exp(-t / tau)."""

    tau: float                  # [s]; inf when no decay is detected
    tau_stderr: float
    amplitude0: float
    curvature_zscore: float     # significance of a quadratic term in log A
    n_points: int
    carrier_frequency: float | None
    times: np.ndarray = field(repr=False, default=None)
    amplitudes: np.ndarray = field(repr=False, default=None)
    note: str = ""

    @property
    def decaying(self) -> bool:
        return math.isfinite(self.tau)


def _estimate_carrier(values: np.ndarray, sample_rate: float) -> float:
    """Carrier frequency from the FFT peak of an early chunk, refined
    by parabolic interpolation of the log magnitude."""
    n = min(values.size, 1 << 18)
    n = 1 << int(math.floor(math.log2(n)))
    chunk = values[:n] * np.hanning(n)
    mag = np.abs(np.fft.rfft(chunk))
    mag[0] = 0.0
    k = int(np.argmax(mag))
    if 0 < k < mag.size - 1 and mag[k] > 0.0:
        lm, l0, lp = np.log(np.maximum(mag[k - 1:k + 2], 1e-300))
        denom = lm - 2.0 * l0 + lp
        delta = 0.5 * (lm - lp) / denom if denom != 0.0 else 0.0
        delta = float(np.clip(delta, -0.5, 0.5))
    else:
        delta = 0.0
    return (k + delta) * sample_rate / n


def demodulate_amplitude(record: RingdownRecord, block_cycles: float = 24.0,
                         carrier: float | None = None
                         ) -> tuple[np.ndarray, np.ndarray, float]:
    """Lock-in style amplitude envelope of a waveform record.

    The record is mixed with quadrature references at the (estimated)
    carrier frequency and block-averaged over ``block_cycles`` carrier
    periods; a small detuning or slow chirp only rotates the quadrature
    pair and leaves the magnitude unaffected.  Returns block centre
    times, amplitudes, and the carrier frequency used.
    """
    if record.kind != "waveform":
        raise InvalidParameterError("demodulation needs a waveform record")
    fs = record.sample_rate
    if not fs > 0.0:
        raise InvalidParameterError("waveform record needs a sample rate")
    x = np.asarray(record.values, dtype=float)
    f_c = carrier if carrier is not None else _estimate_carrier(x, fs)
    if not f_c > 0.0:
        raise FitError("could not identify a carrier frequency")
    block = max(int(round(block_cycles * fs / f_c)), 4)
    n_blocks = x.size // block
    if n_blocks < 2:
        raise InvalidParameterError(
            f"record too short to demodulate: {x.size} samples give "
            f"{n_blocks} blocks of {block}")
    t = np.asarray(record.times, dtype=float)[:n_blocks * block]
    xs = x[:n_blocks * block]
    phase = 2.0 * math.pi * f_c * t
    i_blocks = (xs * np.cos(phase)).reshape(n_blocks, block).mean(axis=1)
    q_blocks = (xs * np.sin(phase)).reshape(n_blocks, block).mean(axis=1)
    amp = 2.0 * np.hypot(i_blocks, q_blocks)
    t_mid = t.reshape(n_blocks, block).mean(axis=1)
    return t_mid, amp, f_c


def fit_exponential_ringdown(record: RingdownRecord,
                             block_cycles: float = 24.0) -> RingdownFit:
    """Exponential decay time from a ringdown record.

    Waveform records are demodulated first; amplitude records are fitted
    directly.  The fit is weighted log-linear least squares (weights
    proportional to amplitude squared, appropriate for additive noise on
    the envelope), and a quadratic term in log-amplitude is fitted
    alongside to flag decay nonlinearity: ``curvature_zscore`` is its
    coefficient over its standard error.

    A non-decaying record returns ``tau = inf`` with a note instead of a
    spurious negative time constant.
    """
    if record.kind == "waveform":
        t, a, f_c = demodulate_amplitude(record, block_cycles)
    else:
        t = np.asarray(record.times, dtype=float)
        a = np.asarray(record.values, dtype=float)
        f_c = None
    if np.any(a <= 0.0):
        raise DataFormatError("amplitudes must be positive for a log-linear fit")
    if t.size < 2:
        raise InvalidParameterError("need at least 2 amplitude samples")

    y = np.log(a)
    w = a ** 2
    w = w / w.sum()

    def weighted_fit(design: np.ndarray):
        wd = design * w[:, None]
        gram = design.T @ wd
        beta = np.linalg.solve(gram, wd.T @ y)
        resid = y - design @ beta
        dof = t.size - design.shape[1]
        if dof > 0:
            sigma2 = float((w * resid ** 2).sum() / w.sum()) * t.size / dof
            cov = sigma2 * np.linalg.inv(gram) * float(w.mean())
            stderr = np.sqrt(np.maximum(np.diag(cov), 0.0))
        else:
            stderr = np.full(design.shape[1], np.nan)
        return beta, stderr

    t0 = t - t[0]
    design_lin = np.column_stack([np.ones_like(t0), t0])
    (b0, slope), (_, slope_se) = weighted_fit(design_lin)

    scale = max(t0[-1], 1.0)
    design_quad = np.column_stack([np.ones_like(t0), t0, (t0 / scale) ** 2])
    if t.size >= 4:
        beta_q, se_q = weighted_fit(design_quad)
        curvature_z = float(beta_q[2] / se_q[2]) if se_q[2] > 0 else 0.0
    else:
        curvature_z = float("nan")

    amplitude0 = float(math.exp(b0))
    if slope >= 0.0:
        return RingdownFit(tau=math.inf, tau_stderr=math.inf,
                           amplitude0=amplitude0,
                           curvature_zscore=curvature_z, n_points=int(t.size),
                           carrier_frequency=f_c, times=t, amplitudes=a,
                           note="no decay detected (non-negative slope)")
    tau = -1.0 / slope
    tau_stderr = float(slope_se / slope ** 2) if np.isfinite(slope_se) else float("nan")
    return RingdownFit(tau=float(tau), tau_stderr=tau_stderr,
                       amplitude0=amplitude0, curvature_zscore=curvature_z,
                       n_points=int(t.size), carrier_frequency=f_c,
                       times=t, amplitudes=a)


def ringdown_frequency_trace(record: RingdownRecord,
                             window_cycles: float = 200.0
                             ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-window amplitude and instantaneous frequency of a ringdown.

    Splits a waveform record into windows of ``window_cycles`` carrier
    periods and measures, in each, the rms-derived amplitude and the
    zero-crossing frequency.  Returns (window centre times, amplitudes,
    frequencies) -- the raw material for an amplitude-squared versus
    frequency-shift analysis.
    """
    if record.kind != "waveform":
        raise InvalidParameterError("frequency trace needs a waveform record")
    fs = record.sample_rate
    x = np.asarray(record.values, dtype=float)
    f_c = _estimate_carrier(x, fs)
    block = max(int(round(window_cycles * fs / f_c)), 16)
    n_blocks = x.size // block
    if n_blocks < 2:
        raise InvalidParameterError("record too short for a frequency trace")
    t = np.asarray(record.times, dtype=float)[:n_blocks * block]
    xs = x[:n_blocks * block].reshape(n_blocks, block)
    ts = t.reshape(n_blocks, block)
    amp = np.sqrt(2.0 * (xs ** 2).mean(axis=1))
    freqs = np.empty(n_blocks)
    for i in range(n_blocks):
        row = xs[i]
        crossings = np.nonzero((row[:-1] < 0.0) & (row[1:] >= 0.0))[0]
        if crossings.size >= 2:
            # linear interpolation of first and last upward crossing
            def cross_time(j):
                frac = -row[j] / (row[j + 1] - row[j])
                return ts[i, j] + frac / fs
            span = cross_time(crossings[-1]) - cross_time(crossings[0])
            freqs[i] = (crossings.size - 1) / span
        else:
            freqs[i] = np.nan
    return ts.mean(axis=1), amp, freqs


# --------------------------------------------------------------------------
# torque noise and sensitivity
# --------------------------------------------------------------------------

def thermal_torque_psd(temperature: float, inertia: float, omega0: float,
                       q: float, constants: PhysicalConstants = CONSTANTS
                       ) -> float:
    """One-sided thermal torque PSD S_T = 4 kB T I omega0 / Q [N^2 m^2/Hz]."""
    if temperature < 0.0:
        raise InvalidParameterError("temperature must be >= 0")
    if not (inertia > 0.0 and omega0 > 0.0 and q > 0.0):
        raise InvalidParameterError("inertia, omega0 and q must be > 0")
    return 4.0 * constants.kB * temperature * inertia * omega0 / q


def calibrate_torque(a1_low: float, a1_high: float, s_t_high: float) -> float:
    """Transfer an absolute torque calibration between two spectra.

    The fitted peak amplitude ``A1`` is proportional to the driving
    torque PSD with a proportionality fixed by the (uncalibrated) readout
    chain, so S_T_low = S_T_high * (A1_low / A1_high).
    """
    if not a1_high > 0.0:
        raise InvalidParameterError("a1_high must be > 0")
    if a1_low < 0.0 or s_t_high < 0.0:
        raise InvalidParameterError("a1_low and s_t_high must be >= 0")
    return s_t_high * (a1_low / a1_high)


@dataclass(frozen=True)
class SensitivityReport:
    """Noise-equivalent sensing figures for one mode of the levitated sphere.

    All PSDs are one-sided.  ``torque_source`` records whether the torque
    PSD is a measured value supplied by the caller or the thermal limit
    computed from (T, I, omega, Q).  The quantum-limit field PSD uses the
    physical sphere volume as the normalising volume.
    """

    mode: str
    frequency: float            # [Hz]
    q: float
    temperature: float          # [K]
    tau: float                  # amplitude decay time Q/(pi f) [s]
    force_psd: float            # S_f = 4 kB T m omega/Q [N^2/Hz]
    accel_psd: float            # S_a = S_f / m^2 [m^2 s^-4 / Hz]
    torque_psd: float           # [N^2 m^2/Hz]
    torque_source: str          # "measured" | "thermal-limit"
    field_psd: float            # S_B = S_T / mu^2 [T^2/Hz]
    field_psd_quantum_limit: float  # 2 mu0 hbar / V [T^2/Hz]
    t_over_tau: float           # [K/s]


def sensitivity_report(particle: MagnetParticle, frequency: float, q: float,
                       temperature: float, mode: str = "alpha",
                       measured_torque_psd: float | None = None,
                       constants: PhysicalConstants = CONSTANTS
                       ) -> SensitivityReport:
    """Sensing figures of merit for one mode at a given frequency and Q.

    Force and acceleration PSDs use the translational thermal-noise form
    with the mode's damping rate omega/Q; torque and field PSDs use the
    rotational form (or the measured torque PSD when provided).  All four
    are reported for any mode label so different sensing scenarios can be
    compared from the same call.
    """
    if not (frequency > 0.0 and q > 0.0):
        raise InvalidParameterError("frequency and q must be > 0")
    if temperature < 0.0:
        raise InvalidParameterError("temperature must be >= 0")
    omega = 2.0 * math.pi * frequency
    m = particle.mass
    force_psd = 4.0 * constants.kB * temperature * m * omega / q
    accel_psd = force_psd / m ** 2
    if measured_torque_psd is not None:
        if measured_torque_psd < 0.0:
            raise InvalidParameterError("measured_torque_psd must be >= 0")
        torque_psd = float(measured_torque_psd)
        torque_source = "measured"
    else:
        torque_psd = thermal_torque_psd(temperature, particle.inertia, omega,
                                        q, constants)
        torque_source = "thermal-limit"
    mu = particle.dipole_moment
    field_psd = torque_psd / mu ** 2 if mu > 0.0 else math.inf
    field_psd_ql = 2.0 * constants.mu0 * constants.hbar / particle.volume
    tau = q / (math.pi * frequency)
    return SensitivityReport(mode=mode, frequency=frequency, q=q,
                             temperature=temperature, tau=tau,
                             force_psd=force_psd, accel_psd=accel_psd,
                             torque_psd=torque_psd, torque_source=torque_source,
                             field_psd=field_psd,
                             field_psd_quantum_limit=field_psd_ql,
                             t_over_tau=temperature / tau)


# --------------------------------------------------------------------------
# CSV interfaces
# --------------------------------------------------------------------------

def save_spectrum_csv(path: str, spectrum: SpectrumRecord) -> None:
    """Write a spectrum as CSV with header ``f_hz,psd`` (atomic)."""
    buf = io.StringIO()
    buf.write("f_hz,psd\n")
    for f, s in zip(spectrum.frequencies, spectrum.psd):
        buf.write(f"{float(f)!r},{float(s)!r}\n")
    atomic_write_text(path, buf.getvalue())


def load_spectrum_csv(path: str) -> SpectrumRecord:
    """Read a ``f_hz,psd`` CSV back into a :class:`SpectrumRecord`."""
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().strip()
        if header.split(",") != ["f_hz", "psd"]:
            raise DataFormatError(
                f"{path}: expected header 'f_hz,psd', got {header!r}")
        try:
            data = np.loadtxt(handle, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise DataFormatError(f"{path}: {exc}") from exc
    if data.shape[1] != 2:
        raise DataFormatError(f"{path}: expected 2 columns, got {data.shape[1]}")
    f = data[:, 0]
    if f.size < 2 or np.any(np.diff(f) <= 0.0):
        raise DataFormatError(f"{path}: column f_hz must be strictly increasing")
    return SpectrumRecord(frequencies=f, psd=data[:, 1],
                          df=float(np.median(np.diff(f))), n_segments=1,
                          sample_rate=0.0)


def save_ringdown_csv(path: str, record: RingdownRecord) -> None:
    """Write a ringdown record as CSV: ``t_s,signal`` for waveforms,
    ``t_s,amplitude`` for envelopes (atomic)."""
    column = "signal" if record.kind == "waveform" else "amplitude"
    buf = io.StringIO()
    buf.write(f"t_s,{column}\n")
    for t, v in zip(record.times, record.values):
        buf.write(f"{float(t)!r},{float(v)!r}\n")
    atomic_write_text(path, buf.getvalue())


def load_ringdown_csv(path: str) -> RingdownRecord:
    """Read a ringdown CSV; the second column name selects the kind."""
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().strip().split(",")
        if len(header) != 2 or header[0] != "t_s" or \
                header[1] not in ("signal", "amplitude"):
            raise DataFormatError(
                f"{path}: expected header 't_s,signal' or 't_s,amplitude', "
                f"got {','.join(header)!r}")
        try:
            data = np.loadtxt(handle, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise DataFormatError(f"{path}: {exc}") from exc
    if data.shape[1] != 2:
        raise DataFormatError(f"{path}: expected 2 columns, got {data.shape[1]}")
    t = data[:, 0]
    if t.size < 2 or np.any(np.diff(t) <= 0.0):
        raise DataFormatError(f"{path}: column t_s must be strictly increasing")
    kind = "waveform" if header[1] == "signal" else "amplitude"
    steps = np.diff(t)
    uniform = np.allclose(steps, steps[0], rtol=1e-6)
    fs = 1.0 / float(steps[0]) if uniform else 0.0
    if kind == "waveform" and not uniform:
        raise DataFormatError(f"{path}: waveform records must be uniformly sampled")
    return RingdownRecord(times=t, values=data[:, 1], sample_rate=fs, kind=kind)
