"""Forward kinematics over parsed BVH hierarchies.

Convention: Euler angles in degrees, composed in each joint's declared channel
order, right-handed axes, column-vector matrices (first declared rotation is
the outermost factor). A joint's local transform is translation by
(offset + position channels) followed by its local rotation; globals compose
parent-first down the hierarchy.

Local coordinate space zeroes the root's entire local transform (offset,
translation channels, and rotation channels), which pins the root row of the
output to the origin and makes the result invariant to any rigid root motion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bvh import MotionSequence, Skeleton

GLOBAL = "global"
LOCAL = "local"


@dataclass(frozen=True)
class CartesianSequence:
    """Joint positions per frame: positions[joint, frame, xyz]."""

    positions: np.ndarray
    coordinate_space: str

    def __post_init__(self):
        if self.positions.ndim != 3 or self.positions.shape[2] != 3:
            raise ValueError("positions must have shape (joints, frames, 3)")
        if self.coordinate_space not in (GLOBAL, LOCAL):
            raise ValueError(f"unknown coordinate space {self.coordinate_space!r}")

    @property
    def joint_count(self) -> int:
        return self.positions.shape[0]

    @property
    def frame_count(self) -> int:
        return self.positions.shape[1]


def _axis_rotation(axis: str, degrees: np.ndarray) -> np.ndarray:
    """Stack of 3x3 rotation matrices, one per frame."""
    theta = np.deg2rad(degrees)
    c, s = np.cos(theta), np.sin(theta)
    m = np.zeros((len(theta), 3, 3))
    if axis == "X":
        m[:, 0, 0] = 1
        m[:, 1, 1], m[:, 1, 2] = c, -s
        m[:, 2, 1], m[:, 2, 2] = s, c
    elif axis == "Y":
        m[:, 1, 1] = 1
        m[:, 0, 0], m[:, 0, 2] = c, s
        m[:, 2, 0], m[:, 2, 2] = -s, c
    elif axis == "Z":
        m[:, 2, 2] = 1
        m[:, 0, 0], m[:, 0, 1] = c, -s
        m[:, 1, 0], m[:, 1, 1] = s, c
    else:
        raise ValueError(f"bad rotation axis {axis!r}")
    return m


def _fk_all_frames(skeleton: Skeleton, channel_values: np.ndarray, zero_root: bool) -> np.ndarray:
    """Positions (N, M, 3) for every joint and frame."""
    m_frames = channel_values.shape[0]
    slices = skeleton.channel_slices()
    eye = np.broadcast_to(np.eye(3), (m_frames, 3, 3))

    rot_global: list[np.ndarray] = []
    pos_global: list[np.ndarray] = []
    for j, joint in enumerate(skeleton.joints):
        if j == 0 and zero_root:
            rot_global.append(np.array(eye))
            pos_global.append(np.zeros((m_frames, 3)))
            continue

        vals = channel_values[:, slices[j]]
        translation = np.tile(joint.offset, (m_frames, 1))
        rotation = np.array(eye)
        for k, ch in enumerate(joint.channels):
            axis, kind = ch[0], ch[1:]
            if kind == "position":
                translation[:, "XYZ".index(axis)] += vals[:, k]
            else:
                rotation = rotation @ _axis_rotation(axis, vals[:, k])

        if j == 0:
            rot_global.append(rotation)
            pos_global.append(translation)
        else:
            parent = joint.parent_index
            rot_global.append(rot_global[parent] @ rotation)
            pos_global.append(
                pos_global[parent]
                + np.einsum("mij,mj->mi", rot_global[parent], translation)
            )
    return np.stack(pos_global, axis=0)


def forward_kinematics(skeleton: Skeleton, sequence: MotionSequence, frame: int) -> np.ndarray:
    """Global joint positions (N, 3) for a single frame."""
    if not 0 <= frame < sequence.frame_count:
        raise IndexError(f"frame {frame} out of range [0, {sequence.frame_count})")
    row = sequence.channel_values[frame : frame + 1]
    return _fk_all_frames(skeleton, row, zero_root=False)[:, 0, :]


def to_cartesian(skeleton: Skeleton, sequence: MotionSequence, space: str = GLOBAL) -> CartesianSequence:
    """Joint positions for all frames in global or local coordinates."""
    if space not in (GLOBAL, LOCAL):
        raise ValueError(f"unknown coordinate space {space!r}")
    positions = _fk_all_frames(skeleton, sequence.channel_values, zero_root=(space == LOCAL))
    positions = np.ascontiguousarray(positions)
    positions.flags.writeable = False
    return CartesianSequence(positions=positions, coordinate_space=space)
