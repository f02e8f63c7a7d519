"""Flat key=value experiment configuration: parse, validate, serialize.

The file format is one `key = value` pair per line, `#` comments, no
sections.  Unknown keys are rejected; every key has a default, so an empty
file is a valid configuration.  Reflection paths are written as
semicolon-separated specs `order:dist[,dist..]:eps[,eps..]`, e.g.
`1:0.5:15 ; 2:0.275,0.275:15,15`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from .geometry import PathSet, ReflectionPath, UcaGeometry, check_path_geometry

SWEEP_AXES = ("auto", "distance", "snr", "rho", "modes", "paths")


class ConfigError(ValueError):
    """Carries every validation failure of one parse attempt."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  "
                         + "\n  ".join(self.errors))


@dataclass
class ExperimentConfig:
    # geometry
    axial_distance_m: float = 3.0
    radius_tx_m: float = 0.05
    radius_rx_m: float = 0.05
    num_elements: int = 8
    attenuation_constant: float = 1.0
    # frame
    num_subcarriers: int = 8
    first_subcarrier_hz: float = 60.0e9
    subcarrier_spacing_hz: float = 5.0e6
    cp_length_samples: int = 4
    # propagation paths
    include_los: bool = True
    paths: tuple[ReflectionPath, ...] = (
        ReflectionPath(1, (0.5,), (15.0,)),
        ReflectionPath(2, (0.275, 0.275), (15.0, 15.0)),
        ReflectionPath(3, (0.2, 0.2, 0.2), (15.0, 15.0, 15.0)),
    )
    # sweep
    sweep_axis: str = "auto"
    sweep_values: tuple[float, ...] = ()
    fixed_snr_db: float = 20.0
    # statistics
    budget_w: float = 2.0
    rician_k_db: float = 10.0
    capacity_realizations: int = 400
    detection_draws: int = 10000
    cee_rho_values: tuple[float, ...] = (0.01, 0.05, 0.1, 0.5)
    master_seed: int = 20313
    tap_mode: str = "literal"

    def geometry(self, axial_distance: float | None = None,
                 num_elements: int | None = None) -> UcaGeometry:
        return UcaGeometry(
            num_elements=num_elements or self.num_elements,
            radius_tx=self.radius_tx_m,
            radius_rx=self.radius_rx_m,
            axial_distance=axial_distance or self.axial_distance_m,
            attenuation_constant=self.attenuation_constant)

    def path_set(self) -> PathSet:
        return PathSet(self.include_los, self.paths)

    @property
    def frame_duration(self) -> float:
        return 1.0 / self.subcarrier_spacing_hz


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_float_list(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(tok) for tok in text.split(","))


def _parse_paths(text: str) -> tuple[ReflectionPath, ...]:
    text = text.strip()
    if not text or text.lower() == "none":
        return ()
    out = []
    for spec in text.split(";"):
        spec = spec.strip()
        if not spec:
            continue
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(
                f"path spec {spec!r} must be order:distances:permittivities")
        order = int(parts[0])
        dists = tuple(float(t) for t in parts[1].split(","))
        perms = tuple(float(t) for t in parts[2].split(","))
        out.append(ReflectionPath(order, dists, perms))
    return tuple(out)


def _format_paths(paths: tuple[ReflectionPath, ...]) -> str:
    if not paths:
        return "none"
    return " ; ".join(
        f"{p.order}:{','.join(repr(d) for d in p.bounce_distances)}:"
        f"{','.join(repr(e) for e in p.permittivities)}" for p in paths)


def _format_float_list(values) -> str:
    return ",".join(repr(float(v)) for v in values)


_PARSERS = {
    "axial_distance_m": float,
    "radius_tx_m": float,
    "radius_rx_m": float,
    "num_elements": int,
    "attenuation_constant": float,
    "num_subcarriers": int,
    "first_subcarrier_hz": float,
    "subcarrier_spacing_hz": float,
    "cp_length_samples": int,
    "include_los": _parse_bool,
    "paths": _parse_paths,
    "sweep_axis": str.strip,
    "sweep_values": _parse_float_list,
    "fixed_snr_db": float,
    "budget_w": float,
    "rician_k_db": float,
    "capacity_realizations": int,
    "detection_draws": int,
    "cee_rho_values": _parse_float_list,
    "master_seed": int,
    "tap_mode": str.strip,
}

_FORMATTERS = {
    "include_los": lambda v: "true" if v else "false",
    "paths": _format_paths,
    "sweep_values": _format_float_list,
    "cee_rho_values": _format_float_list,
    "sweep_axis": str,
    "tap_mode": str,
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate; raises ConfigError listing every problem."""
    errors: list[str] = []
    kwargs = {}
    explicit = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value', got {raw!r}")
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _PARSERS:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in explicit:
            errors.append(f"line {lineno}: duplicate key {key!r}")
            continue
        explicit.add(key)
        try:
            kwargs[key] = _PARSERS[key](value.strip())
        except ValueError as exc:
            errors.append(f"line {lineno}: {key}: {exc}")
    if errors:
        raise ConfigError(errors)
    try:
        cfg = ExperimentConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError([str(exc)]) from exc
    validate_config(cfg, sweep_required="sweep_values" in explicit)
    return cfg


def validate_config(cfg: ExperimentConfig,
                    sweep_required: bool = False) -> None:
    """Field-level invariant checks, aggregated into one ConfigError."""
    errors: list[str] = []
    if cfg.axial_distance_m <= 0:
        errors.append("axial_distance_m must be positive")
    if cfg.num_elements < 2:
        errors.append("num_elements must be at least 2")
    limit = cfg.axial_distance_m / 10.0
    for name, r in (("radius_tx_m", cfg.radius_tx_m),
                    ("radius_rx_m", cfg.radius_rx_m)):
        if r <= 0:
            errors.append(f"{name} must be positive")
        elif r >= limit:
            errors.append(f"{name}: radius too large relative to axial "
                          f"distance (need r < D/10 = {limit:g} m)")
    if cfg.attenuation_constant <= 0:
        errors.append("attenuation_constant must be positive")
    if cfg.num_subcarriers < 1:
        errors.append("num_subcarriers must be at least 1")
    if cfg.first_subcarrier_hz <= 0:
        errors.append("first_subcarrier_hz must be positive")
    if cfg.subcarrier_spacing_hz <= 0:
        errors.append("subcarrier_spacing_hz must be positive")
    if not 0 <= cfg.cp_length_samples < cfg.num_subcarriers:
        errors.append("cp_length_samples must lie in [0, num_subcarriers)")
    for i, p in enumerate(cfg.paths):
        for eps in p.permittivities:
            if eps <= 1.0:
                errors.append(f"paths[{i}]: permittivity must exceed 1")
        r_max = max(cfg.radius_tx_m, cfg.radius_rx_m)
        for d in p.bounce_distances:
            if d <= r_max:
                errors.append(f"paths[{i}]: bounce distance {d:g} must "
                              f"exceed the larger ring radius {r_max:g}")
            if d >= cfg.axial_distance_m:
                errors.append(f"paths[{i}]: bounce distance {d:g} must be "
                              "smaller than the axial distance")
    if cfg.sweep_axis not in SWEEP_AXES:
        errors.append(f"sweep_axis must be one of {'|'.join(SWEEP_AXES)}")
    if sweep_required and not cfg.sweep_values:
        errors.append("sweep_values must not be empty")
    if cfg.sweep_values and cfg.sweep_axis != "auto":
        if list(cfg.sweep_values) != sorted(set(cfg.sweep_values)):
            errors.append("sweep_values must be strictly increasing")
    if cfg.budget_w <= 0:
        errors.append("budget_w must be positive")
    if cfg.capacity_realizations < 1:
        errors.append("capacity_realizations must be at least 1")
    if cfg.detection_draws < 1:
        errors.append("detection_draws must be at least 1")
    for rho in cfg.cee_rho_values:
        if not 0.0 <= rho < 1.0:
            errors.append("cee_rho_values entries must lie in [0, 1)")
    if cfg.master_seed < 0:
        errors.append("master_seed must be nonnegative")
    if cfg.tap_mode not in ("literal", "physical"):
        errors.append("tap_mode must be 'literal' or 'physical'")
    if errors:
        raise ConfigError(errors)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Emit a flat key=value file that parses back to the same config."""
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        fmt = _FORMATTERS.get(f.name)
        if fmt is not None:
            text = fmt(value)
        elif isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


def default_config() -> ExperimentConfig:
    return ExperimentConfig()


def canonical_reflections(total_paths: int, axial_distance: float,
                          permittivity: float = 15.0
                          ) -> tuple[ReflectionPath, ...]:
    """Standard reflector layout realizing a given total path count.

    total_paths = 1 is direct-only; otherwise it must be 1 + 3k, giving k
    reflections per bounce order.  Reflector offsets step outward with the
    in-category index so successive paths are resolvable; totals are chosen
    so the default layouts accumulate rather than cancel at low mode orders.
    """
    if total_paths == 1:
        return ()
    if total_paths < 1 or (total_paths - 1) % 3 != 0:
        raise ValueError("total path count must be 1 or 1 + 3k")
    per_category = (total_paths - 1) // 3
    base = {1: 0.5, 2: 0.55, 3: 0.6}
    out = []
    for order in (1, 2, 3):
        for i in range(per_category):
            total = base[order] + 0.25 * i
            if total >= axial_distance:
                raise ValueError(
                    f"canonical layout needs reflectors at {total:g} m, "
                    f"beyond the axial distance {axial_distance:g} m")
            dists = tuple(total / order for _ in range(order))
            eps = tuple(permittivity for _ in range(order))
            out.append(ReflectionPath(order, dists, eps))
    return tuple(out)
