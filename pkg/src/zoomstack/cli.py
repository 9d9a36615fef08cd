"""Command-line surface.

Subcommands: generate (sample a scene and export stack + frames), ground
(same, constrained to a photograph), ablate (baseline/ablation modes),
render (frames from an existing stack file), verify (built-in property
suites), serve-check (backend handshake probe).

Backends are selected with --backend:
    builtin-oracle[:targets.zstk]   exact-target verification backend
    builtin-gaussian[:MU,STD]       analytic Gaussian-prior backend
    remote:HOST:PORT                TCP wire-protocol backend
    subprocess:CMD ...              spawned stdio wire-protocol backend

Exit codes: 0 success, 1 validation error, 2 backend error, 3 violated
internal invariant.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import rng
from .core import (
    ZoomSchedule,
    ZoomStack,
    center_mask,
    composite_levels,
    downscale_once,
    render_image,
)
from .denoisers import Denoiser, GaussianDenoiser, OracleDenoiser
from .diffusion import make_schedule
from .errors import (
    BackendError,
    InvariantViolation,
    ValidationError,
    ZoomStackError,
)
from .fixtures import synthetic_renders
from .grounding import GroundingConfig
from .pyramid import build_laplacian, recompose
from .remote import RemoteDenoiser, handshake_check, open_transport
from .sampling import SamplerConfig, joint_sample
from .scenespec import SceneSpec, parse_scene_spec
from .storage import load_png, load_stack, save_png, save_stack
from .video import export_sequence

ABLATION_MODES = ("independent", "iterative", "naive", "unshared-noise")


def synthesize_targets(schedule: ZoomSchedule, seed: int) -> np.ndarray:
    """Deterministic smooth consistent target renders for the oracle backend."""
    return synthetic_renders(schedule, seed)


def open_backend(spec: str, scene: SceneSpec, config: SamplerConfig) -> Denoiser:
    sched = make_schedule(config.T, config.schedule_kind)
    if spec.startswith("builtin-oracle"):
        _, _, arg = spec.partition(":")
        if arg:
            targets_stack = load_stack(arg)
            if targets_stack.schedule != scene.schedule:
                raise ValidationError(
                    f"oracle targets {arg} have schedule {targets_stack.schedule}, "
                    f"scene needs {scene.schedule}"
                )
            targets = np.stack(
                [render_image(targets_stack, i) for i in range(scene.schedule.N)]
            )
        else:
            targets = synthesize_targets(scene.schedule, config.seed)
        return OracleDenoiser(targets, sched)
    if spec.startswith("builtin-gaussian"):
        _, _, arg = spec.partition(":")
        mu_val, std_val = 0.0, 0.5
        if arg:
            try:
                mu_raw, std_raw = arg.split(",")
                mu_val, std_val = float(mu_raw), float(std_raw)
            except ValueError:
                raise ValidationError(
                    f"builtin-gaussian expects MU,STD after ':', got {arg!r}"
                ) from None
        mu = np.full(scene.schedule.layer_shape(), mu_val)
        return GaussianDenoiser(mu, std_val, sched)
    if spec.startswith(("remote:", "subprocess:")):
        return RemoteDenoiser(open_transport(spec), total_steps=config.T)
    raise ValidationError(f"unknown backend {spec!r}")


def _load_scene(args: argparse.Namespace) -> SceneSpec:
    scene = parse_scene_spec(args.scene)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.steps is not None:
        overrides["steps"] = args.steps
    if overrides:
        scene = scene.with_overrides(**overrides)
    return scene


def _out_dir(args: argparse.Namespace, scene: SceneSpec) -> Path:
    if args.out:
        return Path(args.out)
    if scene.output_dir:
        return Path(scene.output_dir)
    return Path(Path(args.scene).stem + "_out")


def _run_and_export(
    scene: SceneSpec, config: SamplerConfig, args: argparse.Namespace, out_dir: Path
) -> None:
    backend = open_backend(args.backend, scene, config)
    try:
        stack, trace = joint_sample(scene, backend, config)
    finally:
        backend.close()
    out_dir.mkdir(parents=True, exist_ok=True)
    save_stack(stack, out_dir / "stack.zstk")
    levels_dir = out_dir / "levels"
    levels_dir.mkdir(exist_ok=True)
    for i in range(scene.schedule.N):
        save_png(render_image(stack, i), levels_dir / f"level_{i:02d}.png")
    export_sequence(stack, args.frames, out_dir / "frames")
    log_path = Path(args.log) if args.log else out_dir / "trace.jsonl"
    trace.write(log_path)
    print(f"wrote {out_dir}/stack.zstk, {scene.schedule.N} level renders, "
          f"{args.frames} frames ({trace.wall_time:.1f}s)")


def _cmd_generate(args: argparse.Namespace) -> int:
    scene = _load_scene(args)
    config = SamplerConfig.from_scene(scene)
    _run_and_export(scene, config, args, _out_dir(args, scene))
    return 0


def _cmd_ground(args: argparse.Namespace) -> int:
    scene = _load_scene(args)
    image_path = args.image or scene.grounding_path
    if not image_path:
        raise ValidationError("ground needs --image or a 'ground =' scene entry")
    target = load_png(image_path)
    if target.shape != scene.schedule.layer_shape():
        raise ValidationError(
            f"grounding image {image_path} is {target.shape}, "
            f"scene needs {scene.schedule.layer_shape()}"
        )
    config = SamplerConfig.from_scene(scene, grounding=GroundingConfig(target=target))
    _run_and_export(scene, config, args, _out_dir(args, scene))
    return 0


def _cmd_ablate(args: argparse.Namespace) -> int:
    scene = _load_scene(args)
    if args.mode == "unshared-noise":
        scene = scene.with_overrides(noise_mode="independent")
    else:
        scene = scene.with_overrides(blend_mode=args.mode)
    config = SamplerConfig.from_scene(scene)
    _run_and_export(scene, config, args, _out_dir(args, scene) / f"ablate-{args.mode}")
    return 0


def _cmd_render(args: argparse.Namespace) -> int:
    stack = load_stack(args.stack)
    out_dir = Path(args.out) if args.out else Path(args.stack).with_suffix("")
    entries = export_sequence(stack, args.frames, out_dir)
    print(f"wrote {len(entries)} frames to {out_dir}")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else 0
    _verify_consistency(seed)
    _verify_pyramid(seed)
    _verify_mask_partition()
    _verify_dc_preservation()
    _verify_noise_stats(seed)
    return 0


def _verify_consistency(seed: int) -> None:
    g = np.random.Generator(np.random.Philox(seed))
    cases = [(2, 3, 32), (2, 4, 64), (4, 2, 32), (4, 3, 64)]
    worst = 0.0
    for p, n, size in cases:
        schedule = ZoomSchedule(p=p, N=n, H=size, W=size, C=3)
        for _ in range(5):
            stack = ZoomStack(schedule, g.uniform(-1, 1, (n, size, size, 3)))
            for i in range(n - 1):
                fine = render_image(stack, i + 1)
                coarse = render_image(stack, i)
                got = downscale_once(fine, p)
                h, w = schedule.level_shape(1)
                r0, c0 = (size - h) // 2, (size - w) // 2
                want = coarse[r0 : r0 + h, c0 : c0 + w, :]
                worst = max(worst, float(np.max(np.abs(got - want))))
    if worst >= 1e-6:
        raise InvariantViolation(f"cross-level render consistency: max diff {worst:.3e}")
    print(f"ok cross-level-consistency (max diff {worst:.1e})")


def _verify_pyramid(seed: int) -> None:
    g = np.random.Generator(np.random.Philox(seed + 1))
    worst = 0.0
    for _ in range(20):
        img = g.uniform(-1, 1, (32, 32, 3))
        err = float(np.max(np.abs(recompose(build_laplacian(img)) - img)))
        worst = max(worst, err)
    if worst >= 1e-6:
        raise InvariantViolation(f"pyramid perfect reconstruction: max err {worst:.3e}")
    print(f"ok pyramid-reconstruction (max err {worst:.1e})")


def _verify_mask_partition() -> None:
    schedule = ZoomSchedule(p=2, N=3, H=16, W=16, C=2)
    g = np.random.Generator(np.random.Philox(7))
    x = g.uniform(-1, 1, (16, 16, 2))
    for k in range(3):
        m = center_mask(schedule, k).array
        if not np.array_equal(m * x + (1 - m) * x, x):
            raise InvariantViolation(f"mask partition identity failed at k={k}")
    print("ok mask-partition")


def _verify_dc_preservation() -> None:
    for p in (2, 3, 4):
        const = np.full((p * p, p * p, 1), 0.37)
        out = downscale_once(const, p)
        if np.max(np.abs(out - 0.37)) > 1e-12:
            raise InvariantViolation(f"DC preservation failed for p={p}")
    print("ok dc-preservation")


def _verify_noise_stats(seed: int, samples: int = 10_000) -> None:
    schedule = ZoomSchedule(p=2, N=3, H=16, W=16, C=1)
    g = rng.stream(seed, rng.TARGET_SYNTH, 999)
    layers = g.standard_normal((schedule.N, samples, schedule.H, schedule.W, schedule.C))
    for i in range(schedule.N):
        rendered = composite_levels(layers, i, schedule.p, "noise-exact")
        mean = rendered.mean(axis=0)
        var = rendered.var(axis=0)
        pooled_z = abs(rendered.mean()) * np.sqrt(rendered.size)
        if np.max(np.abs(mean)) > 0.05:
            raise InvariantViolation(
                f"noise mean out of [-0.05, 0.05] at level {i}: {np.max(np.abs(mean)):.4f}"
            )
        if var.min() < 0.9 or var.max() > 1.1:
            raise InvariantViolation(
                f"noise variance out of [0.9, 1.1] at level {i}: "
                f"[{var.min():.4f}, {var.max():.4f}]"
            )
        if pooled_z > 3.2905:
            raise InvariantViolation(f"pooled noise z-test failed at level {i}: z={pooled_z:.2f}")
    print(f"ok noise-statistics ({samples} samples/level)")


def _cmd_serve_check(args: argparse.Namespace) -> int:
    version = handshake_check(args.endpoint)
    print(f"handshake ok (protocol version {version})")
    return 0


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; that slot belongs to
    backend failures here, so usage problems become validation errors."""

    def error(self, message):
        raise ValidationError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="zoomstack", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the scene seed")
    common.add_argument("--steps", type=int, default=None, help="override the scene step count")
    common.add_argument("--backend", default="builtin-oracle", help="denoiser backend")
    common.add_argument("--log", default=None, help="trace log path")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--frames", type=int, default=33, help="frames to export")

    p = sub.add_parser("generate", parents=[common], help="sample a scene")
    p.add_argument("scene")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("ground", parents=[common], help="sample grounded to a photo")
    p.add_argument("scene")
    p.add_argument("--image", default=None, help="grounding photograph (PNG)")
    p.set_defaults(func=_cmd_ground)

    p = sub.add_parser("ablate", parents=[common], help="run an ablation mode")
    p.add_argument("scene")
    p.add_argument("--mode", required=True, choices=ABLATION_MODES)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("render", help="render frames from a stack file")
    p.add_argument("stack")
    p.add_argument("--frames", type=int, default=33)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("verify", help="run the built-in property suites")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("serve-check", help="probe a backend's protocol handshake")
    p.add_argument("endpoint")
    p.set_defaults(func=_cmd_serve_check)
    return parser


def cli_main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return 3
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ZoomStackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
