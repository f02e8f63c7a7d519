"""Ring-array geometry and per-element gains for LoS plus specular multipath.

The link is a pair of coaxial uniform circular arrays (UCAs) separated by an
axial distance D, with N elements on each ring.  Besides the direct path,
signals reach the receiver by bouncing off up to three flat specular
reflectors that lie parallel to the array axis.  Every bounce sequence is
collapsed into a single image source: an odd number of bounces mirrors the
transmit ring (and therefore flips the sign of any vortex mode riding on it),
an even number merely translates it.  All distances, grazing angles, Fresnel
coefficients, delays and complex per-element gains used elsewhere in the
package are computed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

TWO_PI = 2.0 * math.pi


def mode_indices(num_elements: int) -> np.ndarray:
    """Integer vortex-mode orders resolvable by an N-element ring.

    Returns the N consecutive integers from floor((-N+2)/2) to floor(N/2),
    e.g. -3..4 for N=8.
    """
    n = int(num_elements)
    return np.arange(math.floor((-n + 2) / 2), math.floor(n / 2) + 1)


def subcarrier_wavelengths(first_subcarrier_hz: float, spacing_hz: float,
                           count: int) -> np.ndarray:
    """Carrier wavelength of each subcarrier, lambda_m = c / (f0 + m*df)."""
    freqs = first_subcarrier_hz + spacing_hz * np.arange(count)
    return SPEED_OF_LIGHT / freqs


@dataclass(frozen=True)
class UcaGeometry:
    """Coaxial transmit/receive ring pair.

    num_elements: elements per ring (same count at both ends).
    radius_tx / radius_rx: ring radii in meters (zero collapses a ring to a
        point antenna; allowed for edge-case studies).
    axial_distance: center-to-center separation D in meters.
    attenuation_constant: dimensionless global amplitude scale (cancels in
        any SNR-normalized result; defaults to 1).
    """

    num_elements: int
    radius_tx: float
    radius_rx: float
    axial_distance: float
    attenuation_constant: float = 1.0

    def __post_init__(self):
        if self.num_elements < 1:
            raise ValueError("num_elements must be a positive integer")
        if self.axial_distance <= 0:
            raise ValueError("axial_distance must be positive")
        if self.radius_tx < 0 or self.radius_rx < 0:
            raise ValueError("ring radii must be nonnegative")
        limit = self.axial_distance / 10.0
        if self.radius_tx >= limit or self.radius_rx >= limit:
            raise ValueError(
                "radius too large relative to axial distance "
                f"(need r < D/10 = {limit:g} m)")
        if self.attenuation_constant <= 0:
            raise ValueError("attenuation_constant must be positive")

    @property
    def center_norm_sq(self) -> float:
        """D^2 + r1^2 + r2^2, the squared center separation norm."""
        return (self.axial_distance ** 2 + self.radius_tx ** 2
                + self.radius_rx ** 2)

    def element_angles(self) -> np.ndarray:
        return TWO_PI * np.arange(self.num_elements) / self.num_elements


@dataclass(frozen=True)
class ReflectionPath:
    """One specular bounce sequence.

    order: number of bounces (1, 2 or 3).
    bounce_distances: reflector offsets from the transmit ring center, one
        per bounce, meters.
    permittivities: relative permittivity of each reflector (> 1).

    Odd orders mirror the transmit ring, so they carry the opposite vortex
    mode; even orders preserve it.
    """

    order: int
    bounce_distances: tuple[float, ...]
    permittivities: tuple[float, ...]

    def __post_init__(self):
        if self.order not in (1, 2, 3):
            raise ValueError("reflection order must be 1, 2 or 3")
        object.__setattr__(self, "bounce_distances",
                           tuple(float(d) for d in self.bounce_distances))
        object.__setattr__(self, "permittivities",
                           tuple(float(e) for e in self.permittivities))
        if len(self.bounce_distances) != self.order:
            raise ValueError("need one bounce distance per bounce")
        if len(self.permittivities) != self.order:
            raise ValueError("need one permittivity per bounce")
        if any(d <= 0 for d in self.bounce_distances):
            raise ValueError("bounce distances must be positive")
        if any(e <= 1.0 for e in self.permittivities):
            raise ValueError("permittivity must exceed 1")

    @property
    def total_distance(self) -> float:
        """Summed reflector offsets; the image source sits 2x this aside."""
        return sum(self.bounce_distances)

    @property
    def mode_parity(self) -> int:
        """(-1)**order: -1 when the carried vortex mode flips sign."""
        return -1 if self.order % 2 else 1

    @property
    def reverses_mode(self) -> bool:
        return self.order % 2 == 1


@dataclass(frozen=True)
class PathSet:
    """The propagation paths of one link: optional LoS plus reflections."""

    include_los: bool
    reflections: tuple[ReflectionPath, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "reflections", tuple(self.reflections))

    @property
    def total_paths(self) -> int:
        return (1 if self.include_los else 0) + len(self.reflections)

    def by_order(self, order: int) -> list[tuple[int, ReflectionPath]]:
        """(global index, path) pairs of one bounce order, in config order."""
        return [(i, p) for i, p in enumerate(self.reflections)
                if p.order == order]


def check_path_geometry(geom: UcaGeometry, path: ReflectionPath) -> None:
    """Reflector offsets must clear both rings and stay inside the link."""
    r_max = max(geom.radius_tx, geom.radius_rx)
    for d in path.bounce_distances:
        if d <= r_max:
            raise ValueError(
                f"bounce distance {d:g} m must exceed the larger ring "
                f"radius {r_max:g} m")
        if d >= geom.axial_distance:
            raise ValueError(
                f"bounce distance {d:g} m must be smaller than the axial "
                f"distance {geom.axial_distance:g} m")


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------

def los_distance_exact(geom: UcaGeometry, v, n):
    """Exact straight-line distance from transmit element n to receive
    element v; depends on (v - n) mod N only."""
    dphi = TWO_PI * (np.asarray(v) - np.asarray(n)) / geom.num_elements
    return np.sqrt(geom.center_norm_sq
                   - 2.0 * geom.radius_tx * geom.radius_rx * np.cos(dphi))


def los_distance_taylor(geom: UcaGeometry, v, n):
    """First-order expansion of the LoS distance in r1*r2 / (D^2+r1^2+r2^2)."""
    q = math.sqrt(geom.center_norm_sq)
    dphi = TWO_PI * (np.asarray(v) - np.asarray(n)) / geom.num_elements
    return q - geom.radius_tx * geom.radius_rx * np.cos(dphi) / q


def reflection_distance_exact(geom: UcaGeometry, path: ReflectionPath, v, n):
    """Image-source distance for a bounce sequence, element to element.

    Odd orders mirror the transmit ring about the reflector stack, even
    orders translate it; only the sign of the transmit-radius term in the
    transverse offset differs between the two cases.
    """
    d = path.total_distance
    ang_n = TWO_PI * np.asarray(n) / geom.num_elements
    ang_v = TWO_PI * np.asarray(v) / geom.num_elements
    r1, r2 = geom.radius_tx, geom.radius_rx
    if path.reverses_mode:
        x = 2.0 * d - r1 * np.cos(ang_n) - r2 * np.cos(ang_v)
    else:
        x = 2.0 * d - r1 * np.cos(ang_n) + r2 * np.cos(ang_v)
    y = r1 * np.sin(ang_n) - r2 * np.sin(ang_v)
    return np.sqrt(x * x + y * y + geom.axial_distance ** 2)


def reflection_distance(geom: UcaGeometry, path: ReflectionPath, v, n):
    """First-order (Taylor) image-source distance, the form the per-element
    gain phases are built from."""
    d = path.total_distance
    big = geom.center_norm_sq + 4.0 * d * d
    s = math.sqrt(big)
    ang_n = TWO_PI * np.asarray(n) / geom.num_elements
    ang_v = TWO_PI * np.asarray(v) / geom.num_elements
    r1, r2 = geom.radius_tx, geom.radius_rx
    if path.reverses_mode:
        num = (-r1 * r2 * np.cos(ang_v + ang_n)
               + 2.0 * r2 * d * np.cos(ang_v) + 2.0 * r1 * d * np.cos(ang_n))
    else:
        num = (r1 * r2 * np.cos(ang_v - ang_n)
               - 2.0 * r2 * d * np.cos(ang_v) + 2.0 * r1 * d * np.cos(ang_n))
    return s - num / s


# ---------------------------------------------------------------------------
# reflection coefficients
# ---------------------------------------------------------------------------

def fresnel_coefficient(alpha, permittivity: float):
    """Specular amplitude reflection coefficient, vertical polarization.

    alpha is the grazing angle (complement of the incidence angle) in
    radians.  For permittivity > 1 the result lies in [-1, 0].
    """
    alpha = np.asarray(alpha, dtype=float)
    radicand = permittivity - np.cos(alpha) ** 2 / permittivity
    if np.any(radicand < 0):
        raise ValueError("reflection radicand negative; permittivity must "
                         "exceed 1")
    root = np.sqrt(radicand)
    s = np.sin(alpha)
    return (s - root) / (s + root)


def reflection_angle(geom: UcaGeometry, path: ReflectionPath, v, n):
    """Grazing angle at the reflector stack for one element pair."""
    d = path.total_distance
    ang_n = TWO_PI * np.asarray(n) / geom.num_elements
    ang_v = TWO_PI * np.asarray(v) / geom.num_elements
    num = (2.0 * d - geom.radius_tx * np.cos(ang_n)
           - geom.radius_rx * np.cos(ang_v))
    ratio = num / reflection_distance(geom, path, v, n)
    if np.any(np.abs(ratio) > 1.0):
        raise ValueError("grazing-angle ratio exceeds 1; geometry is "
                         "inconsistent")
    return np.arcsin(ratio)


def path_reflection_coefficient(geom: UcaGeometry, path: ReflectionPath) -> float:
    """Bounce-product Fresnel coefficient averaged over all element pairs.

    Every bounce of a sequence sees the same grazing angle (the reflectors
    are parallel to the axis), so the per-pair coefficient is the product of
    the per-reflector coefficients at that angle.
    """
    nn = np.arange(geom.num_elements)
    v, n = np.meshgrid(nn, nn, indexing="ij")
    alpha = reflection_angle(geom, path, v, n)
    prod = np.ones_like(alpha)
    for eps in path.permittivities:
        prod = prod * fresnel_coefficient(alpha, eps)
    return float(np.mean(prod))


# ---------------------------------------------------------------------------
# gains and delays
# ---------------------------------------------------------------------------

def los_gain(geom: UcaGeometry, v, n, wavelength: float):
    """Complex per-element LoS gain (free-space spreading, split into a
    common magnitude/phase and a small element-dependent phase)."""
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    q = math.sqrt(geom.center_norm_sq)
    dphi = TWO_PI * (np.asarray(v) - np.asarray(n)) / geom.num_elements
    amp = geom.attenuation_constant * wavelength / (4.0 * math.pi * q)
    global_phase = np.exp(-2j * math.pi * q / wavelength)
    element_phase = np.exp(
        2j * math.pi * geom.radius_tx * geom.radius_rx * np.cos(dphi)
        / (wavelength * q))
    return amp * global_phase * element_phase


def _reflection_phase_numerator(geom: UcaGeometry, path: ReflectionPath, v, n):
    d = path.total_distance
    ang_n = TWO_PI * np.asarray(n) / geom.num_elements
    ang_v = TWO_PI * np.asarray(v) / geom.num_elements
    r1, r2 = geom.radius_tx, geom.radius_rx
    if path.reverses_mode:
        return (-r1 * r2 * np.cos(ang_v + ang_n)
                + 2.0 * r1 * d * np.cos(ang_n) + 2.0 * r2 * d * np.cos(ang_v))
    return (r1 * r2 * np.cos(ang_v - ang_n)
            - 2.0 * r1 * d * np.cos(ang_n) + 2.0 * r2 * d * np.cos(ang_v))


def reflection_gain(geom: UcaGeometry, path: ReflectionPath, v, n,
                    wavelength: float, avg_coefficient: float | None = None):
    """Complex per-element gain of one bounce sequence.

    The magnitude is shared by all element pairs: the averaged reflection
    coefficient times the free-space spreading of the image-source
    distance.  avg_coefficient lets a caller reuse a precomputed average.
    """
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    if avg_coefficient is None:
        avg_coefficient = path_reflection_coefficient(geom, path)
    d = path.total_distance
    s = math.sqrt(geom.center_norm_sq + 4.0 * d * d)
    amp = (avg_coefficient * geom.attenuation_constant * wavelength
           / (4.0 * math.pi * s))
    global_phase = np.exp(-2j * math.pi * s / wavelength)
    num = _reflection_phase_numerator(geom, path, v, n)
    return amp * global_phase * np.exp(2j * math.pi * num / (wavelength * s))


def path_delay(geom: UcaGeometry, path: ReflectionPath, v, n):
    """Excess propagation delay of a bounce sequence over the direct path."""
    return ((reflection_distance(geom, path, v, n)
             - los_distance_exact(geom, v, n)) / SPEED_OF_LIGHT)


def max_path_delay(geom: UcaGeometry, path: ReflectionPath) -> float:
    nn = np.arange(geom.num_elements)
    v, n = np.meshgrid(nn, nn, indexing="ij")
    return float(np.max(path_delay(geom, path, v, n)))


# ---------------------------------------------------------------------------
# sampled taps
# ---------------------------------------------------------------------------

def delay_offsets(geom: UcaGeometry, paths: PathSet, samples_per_frame: int,
                  frame_duration: float, tap_mode: str = "literal") -> list[int]:
    """Integer sample offset of every reflection path, in config order.

    "literal" indexes each bounce category from its per-category span L:
    the i-th configured path of a category lands at offset L - i, with L the
    ceiling of the category's largest delay in samples, raised to the path
    count so no offset goes negative.  "physical" rounds each path's own
    delay to the nearest sample instead.
    """
    if tap_mode not in ("literal", "physical"):
        raise ValueError("tap_mode must be 'literal' or 'physical'")
    sample_interval = frame_duration / samples_per_frame
    offsets = [0] * len(paths.reflections)
    if tap_mode == "physical":
        for i, p in enumerate(paths.reflections):
            offsets[i] = int(round(max_path_delay(geom, p) / sample_interval))
        return offsets
    for order in (1, 2, 3):
        group = paths.by_order(order)
        if not group:
            continue
        span = max(max_path_delay(geom, p) for _, p in group) / sample_interval
        span = max(math.ceil(span), len(group))
        for rank, (i, _) in enumerate(group, start=1):
            offsets[i] = span - rank
    return offsets


@dataclass
class ChannelTap:
    """One sampled propagation path: per (rx element, tx element, subcarrier)
    complex gains at a common integer delay offset."""

    gains: np.ndarray          # (N, N, M) complex, indexed (v, n, m)
    delay_offset: int
    reverses_mode: bool
    total_distance: float = 0.0


@dataclass
class ElementChannel:
    """Sampled element-to-element channel: a list of taps plus the frame
    bookkeeping needed to apply them."""

    taps: list[ChannelTap]
    num_elements: int
    num_subcarriers: int
    cp_length: int
    wavelengths: np.ndarray
    max_reflector_distance: float
    geometry: UcaGeometry

    @property
    def max_offset(self) -> int:
        return max((t.delay_offset for t in self.taps), default=0)


def build_element_channel(geom: UcaGeometry, paths: PathSet,
                          wavelengths: np.ndarray, samples_per_frame: int,
                          frame_duration: float, cp_length: int,
                          tap_mode: str = "literal") -> ElementChannel:
    """Assemble per-element, per-subcarrier taps for every configured path.

    LoS sits at offset zero; each reflection is placed at its integer offset
    and keeps its mode-reversal flag.  Raises if any offset exceeds the
    cyclic-prefix budget (the prefix must absorb the whole delay spread).
    """
    for p in paths.reflections:
        check_path_geometry(geom, p)
    wavelengths = np.asarray(wavelengths, dtype=float)
    if wavelengths.size != samples_per_frame:
        # per-subcarrier taps: one wavelength per subcarrier of the frame
        raise ValueError("need one wavelength per subcarrier")
    n_el = geom.num_elements
    nn = np.arange(n_el)
    v, n = np.meshgrid(nn, nn, indexing="ij")
    taps: list[ChannelTap] = []
    if paths.include_los:
        g = np.empty((n_el, n_el, wavelengths.size), dtype=complex)
        for m, lam in enumerate(wavelengths):
            g[:, :, m] = los_gain(geom, v, n, lam)
        taps.append(ChannelTap(g, 0, False, 0.0))
    offsets = delay_offsets(geom, paths, samples_per_frame, frame_duration,
                            tap_mode)
    for p, off in zip(paths.reflections, offsets):
        if off < 0:
            raise ValueError("negative tap offset; physical delays are "
                             "inconsistent with the tap mapping")
        if off > cp_length:
            raise ValueError(
                f"tap offset {off} exceeds the cyclic prefix length "
                f"{cp_length}; the prefix must cover the delay spread")
        coeff = path_reflection_coefficient(geom, p)
        g = np.empty((n_el, n_el, wavelengths.size), dtype=complex)
        for m, lam in enumerate(wavelengths):
            g[:, :, m] = reflection_gain(geom, p, v, n, lam, coeff)
        taps.append(ChannelTap(g, off, p.reverses_mode, p.total_distance))
    d_max = max((p.total_distance for p in paths.reflections), default=0.0)
    return ElementChannel(taps, n_el, samples_per_frame, cp_length,
                          wavelengths, d_max, geom)
