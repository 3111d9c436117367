from __future__ import annotations

import pytest

from hazcom import (
    CrowdDensity,
    Entity,
    EnvContext,
    LocationType,
    Observation,
    ScriptedBackend,
)


def make_obs(
    entities=(),
    location=LocationType.CORRIDOR,
    crowd=CrowdDensity.NONE,
    vulnerable=False,
    caption="test scene",
    timestamp=0,
):
    return Observation(
        timestamp=timestamp,
        scene_caption=caption,
        salient_entities=tuple(Entity(label, attr) for label, attr in entities),
        env=EnvContext(location, crowd, vulnerable),
    )


@pytest.fixture
def s1_obs():
    """Knife in a corridor: the unsafe-area situation."""
    return make_obs(
        [("knife", "on-floor")],
        location=LocationType.CORRIDOR,
        crowd=CrowdDensity.SPARSE,
        caption="unattended knife on the corridor floor",
    )


@pytest.fixture
def s2_obs():
    """The same object label in a kitchen during food preparation."""
    return make_obs(
        [("knife", "in-use-cooking")],
        location=LocationType.KITCHEN,
        crowd=CrowdDensity.SPARSE,
        caption="cook using a knife in the kitchen",
    )


@pytest.fixture
def empty_obs():
    return make_obs([], caption="clear corridor")


@pytest.fixture
def scripted():
    return ScriptedBackend()
