"""BVH motion-capture parsing and serialization.

The parser accepts the common BVH dialect: a HIERARCHY section with one ROOT,
nested JOINT blocks with OFFSET and CHANNELS lines, End Site blocks, and a
MOTION section with "Frames:" and "Frame Time:" headers followed by one
whitespace-delimited row of channel values per frame. LF and CRLF line
endings are both accepted.

End Sites carry no channels; they are kept on the skeleton for re-serialization
but are not part of ``Skeleton.joints`` and contribute no rows to forward
kinematics output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BvhParseError

POSITION_CHANNELS = ("Xposition", "Yposition", "Zposition")
ROTATION_CHANNELS = ("Xrotation", "Yrotation", "Zrotation")
VALID_CHANNELS = POSITION_CHANNELS + ROTATION_CHANNELS


@dataclass(frozen=True)
class Joint:
    """One channel-bearing joint of the hierarchy.

    ``parent_index`` is None only for the root. ``channels`` preserves the
    file's declared order; rotation order is meaningful and never normalized.
    """

    name: str
    parent_index: int | None
    offset: np.ndarray
    channels: tuple[str, ...]

    def __post_init__(self):
        if len(self.channels) not in (3, 6):
            raise BvhParseError(
                f"joint {self.name!r} declares {len(self.channels)} channels; expected 3 or 6"
            )
        for ch in self.channels:
            if ch not in VALID_CHANNELS:
                raise BvhParseError(f"joint {self.name!r} has unknown channel {ch!r}")


@dataclass(frozen=True)
class EndSite:
    """Channel-less leaf marker attached to a joint."""

    parent_index: int
    offset: np.ndarray


@dataclass(frozen=True)
class Skeleton:
    """Joint hierarchy in depth-first file order.

    Invariant: parent_index of joints[j] is < j (topological order), and
    exactly one joint (index 0) has no parent.
    """

    joints: tuple[Joint, ...]
    end_sites: tuple[EndSite, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for j, joint in enumerate(self.joints):
            if j == 0:
                if joint.parent_index is not None:
                    raise BvhParseError("first joint must be the root (no parent)")
            elif joint.parent_index is None or not 0 <= joint.parent_index < j:
                raise BvhParseError(f"joint {joint.name!r} breaks topological order")

    @property
    def joint_count(self) -> int:
        return len(self.joints)

    @property
    def total_channels(self) -> int:
        return sum(len(j.channels) for j in self.joints)

    def channel_slices(self) -> list[slice]:
        """Per-joint column ranges into a channel_values matrix."""
        out, start = [], 0
        for j in self.joints:
            out.append(slice(start, start + len(j.channels)))
            start += len(j.channels)
        return out


@dataclass(frozen=True)
class MotionSequence:
    """Per-frame channel values for one skeleton; rotations in degrees."""

    skeleton: Skeleton
    frame_count: int
    frame_time: float
    channel_values: np.ndarray

    def __post_init__(self):
        m, c = self.channel_values.shape
        if m != self.frame_count:
            raise BvhParseError("channel_values row count disagrees with frame_count")
        if c != self.skeleton.total_channels:
            raise BvhParseError("channel count mismatch between motion data and skeleton")
        if not self.frame_time > 0:
            raise BvhParseError("frame_time must be positive")


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.flags.writeable = False
    return arr


class _Lines:
    """Line cursor that remembers 1-based numbers for error messages."""

    def __init__(self, text: str):
        self.rows = text.replace("\r\n", "\n").replace("\r", "\n").split("\n")
        self.pos = 0

    def next_tokens(self) -> tuple[list[str], int]:
        """Tokens of the next non-blank line, plus its line number."""
        while self.pos < len(self.rows):
            self.pos += 1
            tokens = self.rows[self.pos - 1].split()
            if tokens:
                return tokens, self.pos
        return [], self.pos

    def peek_tokens(self) -> tuple[list[str], int]:
        save = self.pos
        tokens, num = self.next_tokens()
        self.pos = save
        return tokens, num


def parse_bvh(text: str) -> tuple[Skeleton, MotionSequence]:
    """Parse BVH text into a skeleton and its motion data."""
    lines = _Lines(text)

    tokens, num = lines.next_tokens()
    if tokens != ["HIERARCHY"]:
        raise BvhParseError("expected HIERARCHY header", num)
    tokens, num = lines.next_tokens()
    if len(tokens) != 2 or tokens[0] != "ROOT":
        raise BvhParseError("expected ROOT declaration", num)

    joints: list[Joint] = []
    end_sites: list[EndSite] = []
    _parse_joint_block(lines, tokens[1], None, joints, end_sites)

    tokens, num = lines.next_tokens()
    if tokens and tokens[0] == "ROOT":
        raise BvhParseError("multiple ROOT declarations; exactly one root allowed", num)
    if tokens != ["MOTION"]:
        raise BvhParseError("expected MOTION section", num)

    tokens, num = lines.next_tokens()
    if len(tokens) != 2 or tokens[0] != "Frames:":
        raise BvhParseError('expected "Frames:" header', num)
    try:
        frame_count = int(tokens[1])
    except ValueError:
        raise BvhParseError(f"bad frame count {tokens[1]!r}", num) from None
    if frame_count < 1:
        raise BvhParseError("frame count must be positive", num)

    tokens, num = lines.next_tokens()
    if len(tokens) != 3 or tokens[:2] != ["Frame", "Time:"]:
        raise BvhParseError('expected "Frame Time:" header', num)
    try:
        frame_time = float(tokens[2])
    except ValueError:
        raise BvhParseError(f"bad frame time {tokens[2]!r}", num) from None

    skeleton = Skeleton(joints=tuple(joints), end_sites=tuple(end_sites))
    total = skeleton.total_channels
    values = np.empty((frame_count, total), dtype=np.float64)
    for i in range(frame_count):
        tokens, num = lines.next_tokens()
        if not tokens:
            raise BvhParseError(f"expected {frame_count} frame rows, found {i}", num)
        if len(tokens) != total:
            raise BvhParseError(
                f"channel count mismatch: frame row has {len(tokens)} values, "
                f"skeleton declares {total}",
                num,
            )
        try:
            values[i] = [float(t) for t in tokens]
        except ValueError:
            raise BvhParseError("non-numeric value in frame row", num) from None
    tokens, num = lines.next_tokens()
    if tokens:
        raise BvhParseError("unexpected data after the last frame row", num)

    sequence = MotionSequence(
        skeleton=skeleton,
        frame_count=frame_count,
        frame_time=frame_time,
        channel_values=_freeze(values),
    )
    return skeleton, sequence


def _parse_offset(lines: _Lines) -> np.ndarray:
    tokens, num = lines.next_tokens()
    if len(tokens) != 4 or tokens[0] != "OFFSET":
        raise BvhParseError("expected OFFSET line", num)
    try:
        return _freeze(np.array([float(t) for t in tokens[1:]]))
    except ValueError:
        raise BvhParseError("non-numeric OFFSET value", num) from None


def _parse_joint_block(lines, name, parent_index, joints, end_sites):
    tokens, num = lines.next_tokens()
    if tokens != ["{"]:
        raise BvhParseError(f"expected '{{' opening joint {name!r}", num)
    offset = _parse_offset(lines)

    tokens, num = lines.next_tokens()
    if not tokens or tokens[0] != "CHANNELS":
        raise BvhParseError(f"expected CHANNELS line for joint {name!r}", num)
    try:
        declared = int(tokens[1])
    except (IndexError, ValueError):
        raise BvhParseError("bad CHANNELS count", num) from None
    channels = tuple(tokens[2:])
    if len(channels) != declared:
        raise BvhParseError(
            f"CHANNELS declares {declared} names but lists {len(channels)}", num
        )
    if declared not in (3, 6):
        raise BvhParseError(f"joint {name!r} declares {declared} channels; expected 3 or 6", num)
    for ch in channels:
        if ch not in VALID_CHANNELS:
            raise BvhParseError(f"unknown channel name {ch!r}", num)

    index = len(joints)
    joints.append(Joint(name=name, parent_index=parent_index, offset=offset, channels=channels))

    while True:
        tokens, num = lines.next_tokens()
        if not tokens:
            raise BvhParseError(f"unterminated joint block {name!r}", num)
        if tokens == ["}"]:
            return
        if tokens[0] == "JOINT" and len(tokens) == 2:
            _parse_joint_block(lines, tokens[1], index, joints, end_sites)
        elif tokens[:2] == ["End", "Site"]:
            t2, n2 = lines.next_tokens()
            if t2 != ["{"]:
                raise BvhParseError("expected '{' opening End Site", n2)
            site_offset = _parse_offset(lines)
            t2, n2 = lines.next_tokens()
            if t2 != ["}"]:
                raise BvhParseError("expected '}' closing End Site", n2)
            end_sites.append(EndSite(parent_index=index, offset=site_offset))
        else:
            raise BvhParseError(f"unexpected token {tokens[0]!r} inside joint block", num)


def serialize_bvh(skeleton: Skeleton, sequence: MotionSequence) -> str:
    """Render BVH text. Floats use shortest round-trip form, so parsing the
    output reproduces every numeric value bit-exactly."""
    children: list[list[int]] = [[] for _ in skeleton.joints]
    for j, joint in enumerate(skeleton.joints):
        if joint.parent_index is not None:
            children[joint.parent_index].append(j)
    sites: list[list[EndSite]] = [[] for _ in skeleton.joints]
    for site in skeleton.end_sites:
        sites[site.parent_index].append(site)

    out: list[str] = ["HIERARCHY"]

    def fmt(v: float) -> str:
        return repr(float(v))

    def emit(j: int, depth: int):
        joint = skeleton.joints[j]
        indent = "\t" * depth
        keyword = "ROOT" if joint.parent_index is None else "JOINT"
        out.append(f"{indent}{keyword} {joint.name}")
        out.append(indent + "{")
        inner = "\t" * (depth + 1)
        out.append(f"{inner}OFFSET {' '.join(fmt(v) for v in joint.offset)}")
        out.append(f"{inner}CHANNELS {len(joint.channels)} {' '.join(joint.channels)}")
        for child in children[j]:
            emit(child, depth + 1)
        for site in sites[j]:
            out.append(f"{inner}End Site")
            out.append(inner + "{")
            out.append(f"{inner}\tOFFSET {' '.join(fmt(v) for v in site.offset)}")
            out.append(inner + "}")
        out.append(indent + "}")

    emit(0, 0)
    out.append("MOTION")
    out.append(f"Frames: {sequence.frame_count}")
    out.append(f"Frame Time: {fmt(sequence.frame_time)}")
    for row in sequence.channel_values:
        out.append(" ".join(fmt(v) for v in row))
    return "\n".join(out) + "\n"
