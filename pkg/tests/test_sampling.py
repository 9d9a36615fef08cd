import numpy as np
import pytest

from zoomstack import (
    BackendError,
    GaussianDenoiser,
    GroundingConfig,
    OracleDenoiser,
    SamplerConfig,
    SceneSpec,
    ValidationError,
    ZoomSchedule,
    downscale_once,
    joint_sample,
    make_schedule,
    sample_iterative,
)
from zoomstack.fixtures import synthetic_renders
from zoomstack.rng import derive_level_seed


def scene_for(schedule, seed=0, steps=16, omega=1.0, **kwargs):
    prompts = tuple(f"level {i}" for i in range(schedule.N))
    return SceneSpec(prompts=prompts, schedule=schedule, seed=seed, steps=steps,
                     omega=omega, **kwargs)


def oracle_for(schedule, steps, seed=3):
    targets = synthetic_renders(schedule, seed)
    return OracleDenoiser(targets, make_schedule(steps)), targets


def psnr(a, b):
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return np.inf
    return 10 * np.log10(4.0 / mse)


class TestJointSample:
    def test_deterministic(self):
        s = ZoomSchedule(p=2, N=2, H=16, W=16, C=1)
        scene = scene_for(s, seed=7, steps=8)
        den, _ = oracle_for(s, 8)
        a, _ = joint_sample(scene, den, SamplerConfig.from_scene(scene))
        b, _ = joint_sample(scene, den, SamplerConfig.from_scene(scene))
        assert np.array_equal(a.layers, b.layers)

    def test_seed_changes_output(self):
        s = ZoomSchedule(p=2, N=1, H=16, W=16, C=1)
        den = GaussianDenoiser(np.zeros((16, 16, 1)), 0.5, make_schedule(8))
        a, _ = joint_sample(scene_for(s, seed=1, steps=8), den,
                            SamplerConfig(T=8, seed=1, omega=0.0))
        b, _ = joint_sample(scene_for(s, seed=2, steps=8), den,
                            SamplerConfig(T=8, seed=2, omega=0.0))
        assert not np.array_equal(a.layers, b.layers)

    def test_oracle_converges_to_targets(self):
        s = ZoomSchedule(p=2, N=3, H=32, W=32, C=1)
        scene = scene_for(s, seed=5, steps=24)
        den, targets = oracle_for(s, 24)
        stack, trace = joint_sample(scene, den, SamplerConfig.from_scene(scene))
        renders = np.stack([stack.render(i) for i in range(3)])
        assert psnr(renders, targets) > 40.0
        assert len(trace.records) == 24

    def test_trace_contents(self):
        s = ZoomSchedule(p=2, N=2, H=16, W=16, C=1)
        scene = scene_for(s, steps=4)
        den, _ = oracle_for(s, 4)
        _, trace = joint_sample(scene, den, SamplerConfig.from_scene(scene))
        assert [rec.t for rec in trace.records] == [4, 3, 2, 1]
        for rec in trace.records:
            assert [d["level"] for d in rec.levels] == [0, 1]
            for d in rec.levels:
                assert d["min"] <= d["mean"] <= d["max"]
        assert trace.stack is not None
        assert trace.wall_time > 0

    def test_structural_consistency_every_mode(self):
        s = ZoomSchedule(p=2, N=3, H=16, W=16, C=1)
        den = GaussianDenoiser(np.zeros((16, 16, 1)), 0.4, make_schedule(6))
        for noise_mode, blend_mode in [
            ("shared-exact", "multiresolution"),
            ("shared-paper", "multiresolution"),
            ("independent", "multiresolution"),
            ("shared-exact", "naive"),
            ("shared-exact", "iterative"),
            ("shared-exact", "independent"),
        ]:
            scene = scene_for(s, steps=6, omega=0.0,
                              noise_mode=noise_mode, blend_mode=blend_mode)
            stack, _ = joint_sample(scene, den, SamplerConfig.from_scene(scene))
            for i in range(2):
                want = stack.render(i)[4:12, 4:12, :]
                got = downscale_once(stack.render(i + 1), 2)
                assert np.max(np.abs(got - want)) < 1e-6

    def test_denoiser_failure_carries_context(self):
        class FailAt:
            def predict_noise(self, z, t, prompt, level):
                if t == 2 and level == 1:
                    raise RuntimeError("synthetic fault")
                return np.zeros_like(z)

        s = ZoomSchedule(p=2, N=2, H=16, W=16, C=1)
        scene = scene_for(s, steps=5)
        with pytest.raises(BackendError, match=r"t=2, level=1"):
            joint_sample(scene, FailAt(), SamplerConfig.from_scene(scene))

    def test_prompt_and_uncond_queries(self):
        seen = []

        class Recorder:
            def __init__(self, sched):
                self.sched = sched

            def predict_noise(self, z, t, prompt, level):
                seen.append((t, prompt, level))
                return np.zeros_like(z)

        s = ZoomSchedule(p=2, N=2, H=16, W=16, C=1)
        scene = scene_for(s, steps=3)
        joint_sample(scene, Recorder(make_schedule(3)), SamplerConfig.from_scene(scene))
        # per step and level: one conditional then one unconditional query at t-1
        assert seen[0] == (2, "level 0", 0)
        assert seen[1] == (2, None, 0)
        assert {t for t, _, _ in seen} == {0, 1, 2}
        conditional = [p for _, p, _ in seen if p is not None]
        assert set(conditional) == {"level 0", "level 1"}


class TestIndependentMode:
    def test_bit_equivalent_to_single_chains(self):
        s = ZoomSchedule(p=2, N=3, H=16, W=16, C=1)
        steps = 10
        den, targets = oracle_for(s, steps)
        scene = scene_for(s, seed=13, steps=steps, blend_mode="independent")
        stack, trace = joint_sample(scene, den, SamplerConfig.from_scene(scene))
        assert len(trace.records) == steps
        sub_schedule = ZoomSchedule(p=2, N=1, H=16, W=16, C=1)
        dsched = make_schedule(steps)
        for i in range(3):
            single = SceneSpec(
                prompts=(scene.prompts[i],),
                schedule=sub_schedule,
                seed=derive_level_seed(13, i),
                steps=steps,
                omega=scene.omega,
            )
            ref, _ = joint_sample(
                single, OracleDenoiser(targets[i : i + 1], dsched),
                SamplerConfig.from_scene(single),
            )
            assert np.array_equal(ref.layers[0], stack.layers[i])

    def test_grounding_rejected(self):
        with pytest.raises(ValidationError):
            SamplerConfig(blend_mode="independent",
                          grounding=GroundingConfig(target=np.zeros((4, 4, 1))))


class TestIterative:
    def test_single_level_matches_joint(self):
        s = ZoomSchedule(p=2, N=1, H=16, W=16, C=1)
        scene = scene_for(s, seed=3, steps=12)
        den, _ = oracle_for(s, 12)
        joint, _ = joint_sample(scene, den, SamplerConfig.from_scene(scene))
        iter_scene = scene.with_overrides(blend_mode="iterative")
        it = sample_iterative(iter_scene, den, SamplerConfig.from_scene(iter_scene))
        assert np.array_equal(joint.layers, it.layers)

    def test_oracle_converges(self):
        s = ZoomSchedule(p=2, N=3, H=32, W=32, C=1)
        scene = scene_for(s, seed=4, steps=24, blend_mode="iterative")
        den, targets = oracle_for(s, 24)
        stack = sample_iterative(scene, den, SamplerConfig.from_scene(scene))
        renders = np.stack([stack.render(i) for i in range(3)])
        assert psnr(renders, targets) > 40.0


class TestGroundedSampling:
    def test_grounding_loss_recorded_and_drops(self):
        s = ZoomSchedule(p=2, N=2, H=16, W=16, C=1)
        xi = synthetic_renders(s, seed=9)[0]
        scene = scene_for(s, seed=2, steps=12, omega=0.0)
        den = GaussianDenoiser(np.zeros((16, 16, 1)), 0.4, make_schedule(12))
        config = SamplerConfig.from_scene(scene).__class__(
            omega=0.0, T=12, seed=2, grounding=GroundingConfig(target=xi)
        )
        _, trace = joint_sample(scene, den, config)
        losses = [rec.grounding_loss for rec in trace.records]
        assert all(l is not None for l in losses)
        assert losses[-1] < losses[0]


class TestModeDistinctness:
    def test_all_modes_pairwise_distinct(self):
        s = ZoomSchedule(p=2, N=3, H=16, W=16, C=1)
        den = GaussianDenoiser(np.zeros((16, 16, 1)), 0.5, make_schedule(8))
        outs = {}
        for label, noise_mode, blend_mode in [
            ("joint", "shared-exact", "multiresolution"),
            ("independent", "shared-exact", "independent"),
            ("iterative", "shared-exact", "iterative"),
            ("naive", "shared-exact", "naive"),
            ("unshared-noise", "independent", "multiresolution"),
        ]:
            scene = scene_for(s, seed=6, steps=8, omega=0.0,
                              noise_mode=noise_mode, blend_mode=blend_mode)
            stack, _ = joint_sample(scene, den, SamplerConfig.from_scene(scene))
            outs[label] = stack.layers
        labels = list(outs)
        for i, a in enumerate(labels):
            for b in labels[i + 1 :]:
                assert not np.array_equal(outs[a], outs[b]), f"{a} == {b}"


class TestConfig:
    def test_mode_validation(self):
        with pytest.raises(ValidationError):
            SamplerConfig(noise_mode="bogus")
        with pytest.raises(ValidationError):
            SamplerConfig(blend_mode="bogus")
        with pytest.raises(ValidationError):
            SamplerConfig(T=0)
        with pytest.raises(ValidationError):
            SamplerConfig(omega=-1.0)
