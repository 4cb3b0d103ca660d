"""Fixed kitchen geometry: region boxes, handles, and the policy workspace.

Regions are axis-aligned boxes chosen to be pairwise disjoint (the sink
and drawers sit below the table plane, the table region is the air band
above it), so location membership is unambiguous.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..canonical import q6_tuple

Pose = tuple[float, float, float, float]  # x, y, z, yaw


@dataclass(frozen=True)
class Box:
    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self):
        for axis in range(3):
            if self.lo[axis] > self.hi[axis]:
                raise ValueError(f"box is empty on axis {axis}: {self.lo} > {self.hi}")

    def contains(self, p) -> bool:
        return all(self.lo[i] <= p[i] <= self.hi[i] for i in range(3))

    @property
    def center(self) -> tuple[float, float, float]:
        return q6_tuple((self.lo[i] + self.hi[i]) / 2.0 for i in range(3))

    @property
    def size(self) -> tuple[float, float, float]:
        return tuple(self.hi[i] - self.lo[i] for i in range(3))


@dataclass(frozen=True)
class KitchenGeometry:
    """One kitchen layout: region boxes plus fixed handle poses."""

    name: str
    table: Box
    sink: Box
    drawer_left: Box
    drawer_right: Box
    faucet_handle: Pose
    drawer_left_handle: Pose
    drawer_right_handle: Pose
    workspace: Box

    def region(self, location: str) -> Box | None:
        """Region box for a storable location; gripper/absent have none."""
        return {
            "table": self.table,
            "sink": self.sink,
            "drawer_left": self.drawer_left,
            "drawer_right": self.drawer_right,
        }.get(location)

    def handle(self, fixture: str) -> Pose:
        return {
            "faucet": self.faucet_handle,
            "drawer_left": self.drawer_left_handle,
            "drawer_right": self.drawer_right_handle,
        }[fixture]


DEFAULT_KITCHEN = KitchenGeometry(
    name="default",
    table=Box((-0.50, -0.35, 0.0), (0.50, 0.35, 0.25)),
    sink=Box((0.20, -0.30, -0.10), (0.45, 0.00, -0.001)),
    drawer_left=Box((-0.45, 0.02, -0.12), (-0.17, 0.30, -0.02)),
    drawer_right=Box((-0.45, -0.30, -0.12), (-0.17, -0.02, -0.02)),
    faucet_handle=(0.42, 0.12, 0.15, 0.0),
    drawer_left_handle=(-0.15, 0.16, -0.05, 0.0),
    drawer_right_handle=(-0.15, -0.16, -0.05, 0.0),
    workspace=Box((-0.60, -0.45, -0.15), (0.60, 0.45, 0.45)),
)

# Mirrored layout used by the multi-scene training plumbing.
ALT_KITCHEN = KitchenGeometry(
    name="alt",
    table=Box((-0.50, -0.35, 0.0), (0.50, 0.35, 0.25)),
    sink=Box((-0.45, 0.00, -0.10), (-0.20, 0.30, -0.001)),
    drawer_left=Box((0.17, 0.02, -0.12), (0.45, 0.30, -0.02)),
    drawer_right=Box((0.17, -0.30, -0.12), (0.45, -0.02, -0.02)),
    faucet_handle=(-0.42, 0.24, 0.15, 0.0),
    drawer_left_handle=(0.15, 0.16, -0.05, 0.0),
    drawer_right_handle=(0.15, -0.16, -0.05, 0.0),
    workspace=Box((-0.60, -0.45, -0.15), (0.60, 0.45, 0.45)),
)

KITCHENS = {"default": DEFAULT_KITCHEN, "alt": ALT_KITCHEN}
