"""Shared test setup.

Thread pinning must happen before numpy is imported anywhere, so this
module sets the environment first thing; BLAS thread fan-out would
otherwise make timing-sensitive tests flaky on loaded machines.
"""

import os

os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import numpy as np  # noqa: E402
import pytest  # noqa: E402

SIMPLE_BVH = """HIERARCHY
ROOT Hips
{
\tOFFSET 0.0 0.0 0.0
\tCHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
\tJOINT Spine
\t{
\t\tOFFSET 0.0 10.0 0.0
\t\tCHANNELS 3 Zrotation Xrotation Yrotation
\t\tJOINT Head
\t\t{
\t\t\tOFFSET 0.0 8.0 0.0
\t\t\tCHANNELS 3 Zrotation Xrotation Yrotation
\t\t\tEnd Site
\t\t\t{
\t\t\t\tOFFSET 0.0 4.0 0.0
\t\t\t}
\t\t}
\t}
\tJOINT LeftLeg
\t{
\t\tOFFSET 2.0 -5.0 0.0
\t\tCHANNELS 3 Zrotation Xrotation Yrotation
\t\tEnd Site
\t\t{
\t\t\tOFFSET 0.0 -6.0 0.0
\t\t}
\t}
}
MOTION
Frames: 3
Frame Time: 0.033333
0 0 0 0 0 0 0 0 0 0 0 0 0 0 0
1 2 3 0 0 0 0 0 0 0 0 0 0 0 0
0 0 0 0 0 90 0 0 0 0 0 0 0 0 0
"""


@pytest.fixture
def simple_bvh_text():
    return SIMPLE_BVH


@pytest.fixture
def simple_parsed():
    from mocapseg import parse_bvh

    return parse_bvh(SIMPLE_BVH)


def random_channel_values(rng: np.random.Generator, skeleton, frames: int) -> np.ndarray:
    """Plausible random channels: modest translations, rotations in +-170 deg."""
    vals = rng.uniform(-170.0, 170.0, size=(frames, skeleton.total_channels))
    for sl, joint in zip(skeleton.channel_slices(), skeleton.joints):
        for k, ch in enumerate(joint.channels):
            if ch.endswith("position"):
                vals[:, sl.start + k] = rng.uniform(-20.0, 20.0, size=frames)
    return vals
