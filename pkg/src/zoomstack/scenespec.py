"""Scene description files.

A scene is a plain text file of `key = value` lines plus one `prompt = ...`
line per zoom level, ordered from most zoomed-out to most zoomed-in:

    # two-level demo scene
    p = 2
    size = 64x64          # width x height
    seed = 7
    steps = 64
    omega = 7.5
    prompt = A sunflower field from afar
    prompt = A single sunflower facing the camera

Recognised keys: p, size, channels, seed, steps, omega, noise, blend,
schedule, levels, ground, out, prompt.  `levels`, if present, must equal the
number of prompt lines.  Blank lines and lines starting with '#' are ignored;
unknown keys are rejected with their line number.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from .core import ZoomSchedule
from .errors import ValidationError

NOISE_MODES = ("shared-exact", "shared-paper", "independent")
BLEND_MODES = ("multiresolution", "naive", "iterative", "independent")

_DEFAULT_SIZE = 64
_SCALAR_KEYS = {
    "p", "size", "channels", "seed", "steps", "omega",
    "noise", "blend", "schedule", "levels", "ground", "out",
}


@dataclass(frozen=True)
class SceneSpec:
    """Everything needed to sample one zoom stack."""

    prompts: tuple[str, ...]
    schedule: ZoomSchedule
    seed: int = 0
    omega: float = 7.5
    steps: int = 256
    noise_mode: str = "shared-exact"
    blend_mode: str = "multiresolution"
    schedule_kind: str = "cosine"
    grounding_path: str | None = None
    output_dir: str | None = None

    def __post_init__(self) -> None:
        if len(self.prompts) != self.schedule.N:
            raise ValidationError(
                f"{len(self.prompts)} prompts for {self.schedule.N} levels"
            )
        if self.noise_mode not in NOISE_MODES:
            raise ValidationError(f"noise mode {self.noise_mode!r} not in {NOISE_MODES}")
        if self.blend_mode not in BLEND_MODES:
            raise ValidationError(f"blend mode {self.blend_mode!r} not in {BLEND_MODES}")
        if self.steps < 1:
            raise ValidationError(f"steps must be >= 1, got {self.steps}")
        if self.omega < 0:
            raise ValidationError(f"omega must be >= 0, got {self.omega}")

    def with_overrides(self, **kwargs) -> "SceneSpec":
        return replace(self, **kwargs)


def _parse_int(raw: str, key: str, lineno: int) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"line {lineno}: {key} expects an integer, got {raw!r}") from None


def _parse_float(raw: str, key: str, lineno: int) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ValidationError(f"line {lineno}: {key} expects a number, got {raw!r}") from None


def parse_scene_spec(path: str | Path) -> SceneSpec:
    """Parse and validate a scene file; errors carry line numbers."""
    path = Path(path)
    values: dict[str, tuple[str, int]] = {}
    prompts: list[str] = []
    for lineno, rawline in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = rawline.strip()
        if not line or line.startswith("#"):
            continue
        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key:
            raise ValidationError(f"line {lineno}: expected 'key = value', got {rawline!r}")
        if key == "prompt":
            if not value:
                raise ValidationError(f"line {lineno}: empty prompt")
            prompts.append(value)
        elif key in _SCALAR_KEYS:
            if key in values:
                raise ValidationError(f"line {lineno}: duplicate key {key!r}")
            values[key] = (value, lineno)
        else:
            raise ValidationError(f"line {lineno}: unknown key {key!r}")

    if not prompts:
        raise ValidationError(f"{path}: no prompts given")
    if "p" not in values:
        raise ValidationError(f"{path}: missing required key 'p'")

    raw_p, p_line = values["p"]
    p = _parse_int(raw_p, "p", p_line)
    if p < 2:
        raise ValidationError(f"line {p_line}: zoom base p must be >= 2, got {p}")

    n = len(prompts)
    if "levels" in values:
        raw, lineno = values["levels"]
        declared = _parse_int(raw, "levels", lineno)
        if declared != n:
            raise ValidationError(
                f"line {lineno}: scene declares levels = {declared} "
                f"but {n} prompts were given"
            )

    width = height = _DEFAULT_SIZE
    if "size" in values:
        raw, lineno = values["size"]
        parts = raw.lower().split("x")
        if len(parts) != 2:
            raise ValidationError(f"line {lineno}: size expects WIDTHxHEIGHT, got {raw!r}")
        width = _parse_int(parts[0], "size", lineno)
        height = _parse_int(parts[1], "size", lineno)

    channels = 3
    if "channels" in values:
        raw, lineno = values["channels"]
        channels = _parse_int(raw, "channels", lineno)

    try:
        schedule = ZoomSchedule(p=p, N=n, H=height, W=width, C=channels)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None

    def scalar(key: str, default: str) -> str:
        return values[key][0] if key in values else default

    def integer(key: str, default: int) -> int:
        if key not in values:
            return default
        raw, lineno = values[key]
        return _parse_int(raw, key, lineno)

    return SceneSpec(
        prompts=tuple(prompts),
        schedule=schedule,
        seed=integer("seed", 0),
        omega=_parse_float(values["omega"][0], "omega", values["omega"][1])
        if "omega" in values
        else 7.5,
        steps=integer("steps", 256),
        noise_mode=scalar("noise", "shared-exact"),
        blend_mode=scalar("blend", "multiresolution"),
        schedule_kind=scalar("schedule", "cosine"),
        grounding_path=values["ground"][0] if "ground" in values else None,
        output_dir=values["out"][0] if "out" in values else None,
    )
