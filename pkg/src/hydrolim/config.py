"""Run and sweep configuration files.

Line-oriented UTF-8 text: ``key = value`` pairs under bracketed section
headers.  Recognized sections are [ic], [potential], [integrator], [grid],
[testfns] and [output] (plus [sweep] for sweep configs); unknown sections or
keys are hard errors.  Blank lines and full-line ``#`` comments are ignored.
A RunConfig fully determines a run: two runs from the same RunConfig produce
byte-identical outputs.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError
from .initcond import BURST_CLOSED_FORM, GENERAL_QUADRATIC

GENERATORS = ("lattice_burst", "lattice_lifted", "planar_lattice")

_SCHEMA = {
    "ic": {
        "generator": str,
        "n": int,
        "seed": int,
        "alpha": float,
        "lambda": float,
        "jitter": float,
        "c_scale": float,
        "vx": float,
        "vy": float,
        "vz": float,
        "signs": str,
        "b_mode": str,
    },
    "potential": {"kind": str, "p": float},
    "integrator": {"t": float, "h": str, "stride": int},
    "grid": {"time_bins": int, "space_cells": int, "inflate": float},
    "testfns": {"count": int, "radius_frac": float, "amplitude": float},
    "output": {"dir": str},
    "sweep": {"n_values": str},
}


@dataclass(frozen=True)
class RunConfig:
    generator: str
    n: int
    seed: int
    alpha: float = 0.5
    lam: float = 1.0
    jitter: float = 0.0
    c_scale: float = 1.0
    vx: float = 1.0
    vy: float = 0.0
    vz: float = 1.0
    signs: str = "alternating"
    b_mode: str = GENERAL_QUADRATIC
    potential_kind: str = "power_law"
    p: float = 2.0
    T: float = 1.0
    h: float | None = None  # None = auto
    stride: int = 10
    time_bins: int = 16
    space_cells: int = 24
    inflate: float = 0.05
    tf_count: int = 8
    tf_radius_frac: float = 0.25
    tf_amplitude: float = 1.0
    out_dir: str = "runs/out"

    def validate(self):
        if self.generator not in GENERATORS:
            raise ConfigError(f"unknown generator {self.generator!r}; expected one of {GENERATORS}")
        if self.n < 2:
            raise ConfigError("[ic] n must be >= 2")
        if self.alpha <= 0:
            raise ConfigError("[ic] alpha must be positive")
        if self.lam <= 0:
            raise ConfigError("[ic] lambda must be positive")
        if not 0.0 <= self.jitter < 0.49:
            raise ConfigError("[ic] jitter must lie in [0, 0.49)")
        if self.signs not in ("alternating", "equal"):
            raise ConfigError("[ic] signs must be 'alternating' or 'equal'")
        if self.b_mode not in (GENERAL_QUADRATIC, BURST_CLOSED_FORM):
            raise ConfigError(
                f"[ic] b_mode must be {GENERAL_QUADRATIC!r} or {BURST_CLOSED_FORM!r}"
            )
        if self.potential_kind not in ("power_law", "free"):
            raise ConfigError("[potential] kind must be 'power_law' or 'free'")
        if self.potential_kind == "power_law" and self.p <= 1:
            raise ConfigError("[potential] p must be > 1")
        if self.T <= 0:
            raise ConfigError("[integrator] t must be positive")
        if self.h is not None and self.h <= 0:
            raise ConfigError("[integrator] h must be positive or 'auto'")
        if self.stride < 1:
            raise ConfigError("[integrator] stride must be >= 1")
        if self.time_bins < 1 or self.space_cells < 1:
            raise ConfigError("[grid] bin counts must be positive")
        if self.inflate < 0:
            raise ConfigError("[grid] inflate must be nonnegative")
        if self.tf_count < 1:
            raise ConfigError("[testfns] count must be positive")
        if not 0.0 < self.tf_radius_frac < 0.5:
            raise ConfigError("[testfns] radius_frac must lie in (0, 0.5)")
        return self


@dataclass(frozen=True)
class SweepConfig:
    base: RunConfig
    n_values: tuple = field(default_factory=tuple)

    def validate(self):
        self.base.validate()
        if len(self.n_values) < 2:
            raise ConfigError("[sweep] n_values needs at least two entries")
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise ConfigError("[sweep] n_values must be strictly increasing")
        return self


def _parse_sections(text: str):
    sections: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _SCHEMA:
                raise ConfigError(f"line {lineno}: unknown section [{name}]")
            if name in sections:
                raise ConfigError(f"line {lineno}: duplicate section [{name}]")
            current = name
            sections[name] = {}
            continue
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any section: {line!r}")
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key = key.strip()
        value = value.strip()
        if key not in _SCHEMA[current]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in section [{current}]")
        if key in sections[current]:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} in section [{current}]")
        caster = _SCHEMA[current][key]
        try:
            sections[current][key] = caster(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {value!r}") from exc
    return sections


def _require(sections, section, key):
    try:
        return sections[section][key]
    except KeyError:
        raise ConfigError(f"missing required key {key!r} in section [{section}]") from None


def parse_config(text: str, allow_sweep=False):
    """Parse config text into RunConfig (or (RunConfig, SweepConfig) keys)."""
    sections = _parse_sections(text)
    if "sweep" in sections and not allow_sweep:
        raise ConfigError("section [sweep] is only valid for the sweep command")

    ic = sections.get("ic", {})
    pot = sections.get("potential", {})
    integ = sections.get("integrator", {})
    grid = sections.get("grid", {})
    tfs = sections.get("testfns", {})
    out = sections.get("output", {})

    h_text = integ.get("h", "auto")
    if h_text == "auto":
        h = None
    else:
        try:
            h = float(h_text)
        except ValueError:
            raise ConfigError(f"[integrator] h must be a float or 'auto', got {h_text!r}") from None

    cfg = RunConfig(
        generator=_require(sections, "ic", "generator"),
        n=_require(sections, "ic", "n"),
        seed=_require(sections, "ic", "seed"),
        alpha=ic.get("alpha", 0.5),
        lam=ic.get("lambda", 1.0),
        jitter=ic.get("jitter", 0.0),
        c_scale=ic.get("c_scale", 1.0),
        vx=ic.get("vx", 1.0),
        vy=ic.get("vy", 0.0),
        vz=ic.get("vz", 1.0),
        signs=ic.get("signs", "alternating"),
        b_mode=ic.get("b_mode", GENERAL_QUADRATIC),
        potential_kind=pot.get("kind", "power_law"),
        p=pot.get("p", 2.0),
        T=_require(sections, "integrator", "t"),
        h=h,
        stride=integ.get("stride", 10),
        time_bins=grid.get("time_bins", 16),
        space_cells=grid.get("space_cells", 24),
        inflate=grid.get("inflate", 0.05),
        tf_count=tfs.get("count", 8),
        tf_radius_frac=tfs.get("radius_frac", 0.25),
        tf_amplitude=tfs.get("amplitude", 1.0),
        out_dir=_require(sections, "output", "dir"),
    ).validate()

    if not allow_sweep:
        return cfg
    if "sweep" not in sections:
        raise ConfigError("sweep command needs a [sweep] section with n_values")
    try:
        n_values = tuple(int(v) for v in sections["sweep"]["n_values"].split())
    except (KeyError, ValueError):
        raise ConfigError("[sweep] n_values must be a space-separated integer list") from None
    return SweepConfig(base=cfg, n_values=n_values).validate()


def load_config(path, allow_sweep=False):
    return parse_config(Path(path).read_text(encoding="utf-8"), allow_sweep=allow_sweep)


def apply_overrides(cfg: RunConfig, n=None, seed=None, h=None, stride=None, out=None) -> RunConfig:
    """Replace fields from CLI flags; validation reruns on the result."""
    updates = {}
    if n is not None:
        updates["n"] = int(n)
    if seed is not None:
        updates["seed"] = int(seed)
    if h is not None:
        updates["h"] = float(h)
    if stride is not None:
        updates["stride"] = int(stride)
    if out is not None:
        updates["out_dir"] = str(out)
    return replace(cfg, **updates).validate() if updates else cfg
