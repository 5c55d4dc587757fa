"""Procedural mocap generator with exact per-frame ground truth.

Each sequence is assembled from a script of labeled segments (standing,
walk bouts, turns, reach/retrieve), and the joint angles are phase-driven
sinusoids computed from the same segment boundaries the labels use, so the
ground truth is analytically exact.

Design notes that matter for learning:
  - Experiments usually run on local coordinates, where the root transform
    is zeroed. Turns therefore counter-rotate the spine and chest (visible
    locally) while the root-yaw ramp only shows up in global space and in
    the written BVH.
  - reach and retrieve traverse the same poses in opposite temporal
    directions, so only a temporally-aware model can tell them apart.
  - Class durations are balanced so that a fully noise-trained model scores
    about 1/C regardless of what marginal distribution it collapses to.

Everything derives from RngStream(seed), so a spec reproduces its dataset
bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bvh import EndSite, Joint, MotionSequence, Skeleton
from .errors import DataError
from .experiments import Dataset
from .kinematics import to_cartesian
from .labels import CLASS_NAMES, LabelTrack
from .motion_image import motion_image_from_cartesian
from .nn.rng import RngStream

_ROOT_CHANNELS = ("Xposition", "Yposition", "Zposition", "Zrotation", "Xrotation", "Yrotation")
_JOINT_CHANNELS = ("Zrotation", "Xrotation", "Yrotation")

_PRESETS = {
    2: ("standing", "reach"),
    3: ("standing", "reach", "retrieve"),
    4: ("standing", "turnRight", "reach", "retrieve"),
    10: CLASS_NAMES,
}


def class_names_for(classes: int) -> tuple[str, ...]:
    if classes not in _PRESETS:
        raise DataError(f"unsupported class count {classes}; choose one of {sorted(_PRESETS)}")
    return tuple(_PRESETS[classes])


@dataclass(frozen=True)
class SynthSpec:
    sequences: int = 28
    frames: int = 240
    fps: float = 72.0
    joint_count: int = 17
    classes: int = 10
    height: int = 224
    space: str = "local"
    seed: int = 0
    idle_only: bool = False

    def __post_init__(self):
        if min(self.sequences, self.frames, self.joint_count, self.classes) < 1 or self.fps <= 0:
            raise DataError("spec fields must be positive")
        class_names_for(self.classes)
        if self.joint_count < 15:
            raise DataError("joint_count must be >= 15 (root, two legs, two arms, torso chain)")
        if self.frames < 6 * self.classes:
            raise DataError(f"frames must be >= {6 * self.classes} for {self.classes} classes")


def build_skeleton(joint_count: int = 17) -> Skeleton:
    """Humanoid: root, torso/head chain, two 3-joint arms, two 3-joint legs.

    The torso chain absorbs joint_count - 13 joints (minimum 2), so any
    requested size >= 15 produces a valid hierarchy.
    """
    if joint_count < 15:
        raise DataError("joint_count must be >= 15")
    chain_len = joint_count - 13
    base_names = ["Spine", "Chest", "Neck", "Head"]
    if chain_len <= 4:
        chain_names = base_names[: chain_len - 1] + ["Head"]
    else:
        chain_names = (
            base_names[:3] + [f"Spine{i + 2}" for i in range(chain_len - 4)] + ["Head"]
        )
    chain_offsets = [(0.0, 10.0, 0.0), (0.0, 10.0, 0.0)] + [(0.0, 6.0, 0.0)] * (chain_len - 2)

    joints: list[Joint] = [Joint("Hips", None, np.array((0.0, 0.0, 0.0)), _ROOT_CHANNELS)]
    for k, (name, off) in enumerate(zip(chain_names, chain_offsets)):
        joints.append(Joint(name, k, np.array(off, dtype=float), _JOINT_CHANNELS))

    arm_parent = 1 + max(0, chain_len - 3)  # Chest for the default chain
    head_index = chain_len

    def limb(names, parent, offsets):
        start = len(joints)
        joints.append(Joint(names[0], parent, np.array(offsets[0], dtype=float), _JOINT_CHANNELS))
        joints.append(Joint(names[1], start, np.array(offsets[1], dtype=float), _JOINT_CHANNELS))
        joints.append(Joint(names[2], start + 1, np.array(offsets[2], dtype=float), _JOINT_CHANNELS))
        return start + 2  # leaf index

    l_wrist = limb(("LeftShoulder", "LeftElbow", "LeftWrist"), arm_parent,
                   ((8.0, 2.0, 0.0), (0.0, -11.0, 0.0), (0.0, -10.0, 0.0)))
    r_wrist = limb(("RightShoulder", "RightElbow", "RightWrist"), arm_parent,
                   ((-8.0, 2.0, 0.0), (0.0, -11.0, 0.0), (0.0, -10.0, 0.0)))
    l_ankle = limb(("LeftHip", "LeftKnee", "LeftAnkle"), 0,
                   ((4.0, -3.0, 0.0), (0.0, -17.0, 0.0), (0.0, -17.0, 0.0)))
    r_ankle = limb(("RightHip", "RightKnee", "RightAnkle"), 0,
                   ((-4.0, -3.0, 0.0), (0.0, -17.0, 0.0), (0.0, -17.0, 0.0)))

    end_sites = (
        EndSite(head_index, np.array((0.0, 5.0, 0.0))),
        EndSite(l_wrist, np.array((0.0, -4.0, 0.0))),
        EndSite(r_wrist, np.array((0.0, -4.0, 0.0))),
        EndSite(l_ankle, np.array((0.0, -3.0, 5.0))),
        EndSite(r_ankle, np.array((0.0, -3.0, 5.0))),
    )
    return Skeleton(joints=tuple(joints), end_sites=end_sites)


@dataclass
class SynthSequence:
    """One generated sequence plus its construction record."""

    name: str
    skeleton: Skeleton
    sequence: MotionSequence
    track: LabelTrack
    script: list  # [(class_name, length), ...] with zero-length entries dropped


def _segment_tau(length: int) -> np.ndarray:
    # Mid-frame parameterization in (0, 1); avoids exact endpoint poses.
    return (np.arange(length) + 0.5) / length


def _ease(tau: np.ndarray) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(np.pi * tau)


def _make_script(spec: SynthSpec, rng: RngStream) -> list[tuple[str, int]]:
    """Segment plan whose lengths sum exactly to spec.frames."""
    frames = spec.frames
    if spec.idle_only:
        return [("standing", frames)]

    if spec.classes == 2:
        u = frames // 4
        plan = [("standing", u), ("reach", u), ("standing", u), ("reach", frames - 3 * u)]
    elif spec.classes == 3:
        u = frames // 6
        plan = [
            ("standing", u), ("reach", u), ("retrieve", u),
            ("standing", u), ("reach", u), ("retrieve", frames - 5 * u),
        ]
    elif spec.classes == 4:
        u = frames // 6
        plan = [
            ("standing", u), ("turnRight", u), ("reach", u), ("retrieve", u),
            ("turnRight", u), ("standing", frames - 5 * u),
        ]
    else:
        u = frames // 10
        blocks = [
            [("beginRightStep", u), ("leftStep", u), ("endRightStep", u)],
            [("turnRight", u)],
            [("reach", u), ("retrieve", u)],
            [("beginLeftStep", u), ("rightStep", u), ("endLeftStep", u)],
        ]
        order = rng.permutation(4)
        idle_total = frames - 9 * u
        gap, extra = divmod(idle_total, 5)
        plan = []
        for slot in range(4):
            plan.append(("standing", gap))
            plan.extend(blocks[int(order[slot])])
        plan.append(("standing", gap + extra))
    return [(name, length) for name, length in plan if length > 0]


class _Channels:
    """Accumulator for per-joint rotation curves and the root trajectory."""

    def __init__(self, frames: int):
        self.rot: dict[str, np.ndarray] = {}
        self.frames = frames
        self.root_pos = np.zeros((frames, 3))
        self.root_yaw = np.zeros(frames)

    def add(self, joint: str, axis: str, start: int, values: np.ndarray) -> None:
        key = f"{joint}.{axis}"
        if key not in self.rot:
            self.rot[key] = np.zeros(self.frames)
        self.rot[key][start : start + len(values)] += values

    def get(self, joint: str, axis: str) -> np.ndarray:
        return self.rot.get(f"{joint}.{axis}", np.zeros(self.frames))


def _animate(spec: SynthSpec, script, rng: RngStream) -> _Channels:
    frames = spec.frames
    ch = _Channels(frames)
    t_sec = np.arange(frames) / spec.fps

    # Continuous idle sway keeps every coordinate channel non-degenerate.
    phases = rng.uniform(6, 0.0, 2.0 * np.pi)
    freqs = rng.uniform(3, 0.8, 1.2)
    ch.add("Spine", "Z", 0, 1.2 * np.sin(2 * np.pi * 0.31 * freqs[0] * t_sec + phases[0]))
    ch.add("Chest", "Z", 0, 0.8 * np.sin(2 * np.pi * 0.23 * freqs[1] * t_sec + phases[1]))
    ch.add("LeftShoulder", "Z", 0, -1.0 * np.sin(2 * np.pi * 0.27 * freqs[2] * t_sec + phases[2]))
    ch.add("RightShoulder", "Z", 0, 1.0 * np.sin(2 * np.pi * 0.27 * freqs[2] * t_sec + phases[3]))
    ch.add("LeftAnkle", "X", 0, 0.5 * np.sin(2 * np.pi * 0.19 * t_sec + phases[4]))
    ch.add("RightAnkle", "X", 0, 0.5 * np.sin(2 * np.pi * 0.19 * t_sec + phases[5]))

    leg_amp = 24.0 + 8.0 * rng.uniform()
    knee_amp = 22.0 + 8.0 * rng.uniform()
    step_len = 1.4 + 0.8 * rng.uniform()
    arm_reach_amp = 110.0 + 30.0 * rng.uniform()
    turn_amp = 70.0 + 40.0 * rng.uniform()

    # Walk bouts span three consecutive script segments; track them by the
    # begin segment and emit the whole bout at once.
    starts = np.cumsum([0] + [length for _, length in script])
    segments = [(name, int(starts[i]), int(length)) for i, (name, length) in enumerate(script)]

    heading = 0.0
    velocity = np.zeros((frames, 3))
    i = 0
    while i < len(segments):
        name, start, length = segments[i]
        tau = _segment_tau(length)

        if name in ("beginRightStep", "beginLeftStep"):
            total = length + segments[i + 1][2] + segments[i + 2][2]
            phi = 3.0 * np.pi * (np.arange(total) + 0.5) / total
            env = np.clip(np.minimum(phi / np.pi, (3.0 * np.pi - phi) / np.pi), 0.0, 1.0)
            sign = 1.0 if name == "beginRightStep" else -1.0
            swing = leg_amp * np.sin(phi) * env * sign
            ch.add("RightHip", "X", start, -swing)
            ch.add("LeftHip", "X", start, swing)
            ch.add("RightKnee", "X", start, knee_amp * np.maximum(0.0, np.sin(phi) * sign) * env)
            ch.add("LeftKnee", "X", start, knee_amp * np.maximum(0.0, -np.sin(phi) * sign) * env)
            ch.add("LeftShoulder", "X", start, 0.35 * swing)
            ch.add("RightShoulder", "X", start, -0.35 * swing)
            rad = np.deg2rad(heading)
            speed = step_len * (0.5 - 0.5 * np.cos(2.0 * phi)) * env
            velocity[start : start + total, 0] += speed * np.sin(rad)
            velocity[start : start + total, 2] += speed * np.cos(rad)
            ch.root_pos[start : start + total, 1] += 1.2 * (0.5 - 0.5 * np.cos(2.0 * phi)) * env
            i += 3
            continue

        if name == "turnRight":
            direction = 1.0 if rng.integers(2) == 0 else -1.0
            bump = np.sin(np.pi * tau)
            ch.add("Spine", "Y", start, direction * 16.0 * bump)
            ch.add("Chest", "Y", start, direction * 11.0 * bump)
            ch.root_yaw[start : start + length] += direction * turn_amp * _ease(tau)
            ch.root_yaw[start + length :] += direction * turn_amp
            heading += direction * turn_amp
        elif name == "reach":
            side = "Left" if rng.integers(2) == 0 else "Right"
            follows_retrieve = i + 1 < len(segments) and segments[i + 1][0] == "retrieve"
            curve = _ease(tau) if follows_retrieve else np.sin(np.pi * tau)
            ch.add(f"{side}Shoulder", "X", start, -arm_reach_amp * curve)
            ch.add(f"{side}Elbow", "X", start, -18.0 * curve)
            if follows_retrieve:
                nxt_start, nxt_len = segments[i + 1][1], segments[i + 1][2]
                down = 1.0 - _ease(_segment_tau(nxt_len))
                ch.add(f"{side}Shoulder", "X", nxt_start, -arm_reach_amp * down)
                ch.add(f"{side}Elbow", "X", nxt_start, -18.0 * down)
                i += 2
                continue
        # standing and retrieve-handled-above need nothing extra here.
        i += 1

    ch.root_pos += np.cumsum(velocity, axis=0)
    return ch


def _channel_matrix(skeleton: Skeleton, ch: _Channels) -> np.ndarray:
    frames = ch.frames
    columns = []
    for joint in skeleton.joints:
        if joint.parent_index is None:
            for name in joint.channels:
                axis, kind = name[0], name[1:]
                if kind == "position":
                    columns.append(ch.root_pos[:, "XYZ".index(axis)])
                elif axis == "Y":
                    columns.append(ch.root_yaw)
                else:
                    columns.append(ch.get(joint.name, axis))
        else:
            for name in joint.channels:
                columns.append(ch.get(joint.name, name[0]))
    return np.column_stack(columns)


def synthesize_sequences(spec: SynthSpec) -> list[SynthSequence]:
    """Generate all sequences with skeleton, motion, labels, and scripts."""
    skeleton = build_skeleton(spec.joint_count)
    names = class_names_for(spec.classes)
    index = {name: i for i, name in enumerate(names)}
    base = RngStream(spec.seed)

    out = []
    for s in range(spec.sequences):
        rng = base.derive(3, s)
        script = _make_script(spec, rng)
        ch = _animate(spec, script, rng)
        values = _channel_matrix(skeleton, ch)
        sequence = MotionSequence(
            skeleton=skeleton,
            frame_count=spec.frames,
            frame_time=1.0 / spec.fps,
            channel_values=values,
        )
        classes = np.concatenate(
            [np.full(length, index[name], dtype=np.int64) for name, length in script]
        )
        track = LabelTrack(classes=classes, class_count=len(names))
        out.append(
            SynthSequence(
                name=f"synth_{s:03d}",
                skeleton=skeleton,
                sequence=sequence,
                track=track,
                script=script,
            )
        )
    return out


def synthesize_dataset(spec: SynthSpec) -> Dataset:
    """Sequences pushed through the real kinematics -> motion-image pipeline."""
    items = []
    for record in synthesize_sequences(spec):
        cart = to_cartesian(record.skeleton, record.sequence, spec.space)
        image = motion_image_from_cartesian(cart, spec.height)
        items.append((image, record.track, record.name))
    return Dataset(items=tuple(items), class_names=class_names_for(spec.classes))


def write_dataset_files(spec: SynthSpec, outdir) -> str:
    """Materialize BVH + label JSON files plus a manifest; returns its path."""
    import json
    import os

    from .bvh import serialize_bvh
    from .io_utils import atomic_write_text
    from .labels import save_label_json

    os.makedirs(outdir, exist_ok=True)
    names = class_names_for(spec.classes)
    entries = []
    for record in synthesize_sequences(spec):
        bvh_name = f"{record.name}.bvh"
        label_name = f"{record.name}.labels.json"
        atomic_write_text(os.path.join(outdir, bvh_name), serialize_bvh(record.skeleton, record.sequence))
        save_label_json(os.path.join(outdir, label_name), record.track, names)
        entries.append({"bvh": bvh_name, "labels": label_name})
    manifest_path = os.path.join(outdir, "manifest.json")
    atomic_write_text(manifest_path, json.dumps({"items": entries}, indent=2) + "\n")
    return manifest_path
