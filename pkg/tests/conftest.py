import math

import pytest
from hypothesis import strategies as st

from engagesim.model import Channel, ChannelSetting, Entity, Environment, Pose, World
from engagesim.scenario import load_scenario


def person(eid, x=0.0, y=0.0, heading=0.0, fov=math.pi / 2, radius=0.3, **channels):
    """An engageable entity; keyword channels are magnitude or (magnitude, target)."""
    settings = {}
    for name, spec in channels.items():
        mag, target = spec if isinstance(spec, tuple) else (spec, None)
        settings[Channel(name)] = ChannelSetting(mag, 1.0, target)
    return Entity(eid, Pose((x, y), heading, radius), fov_half_angle=fov, channel_settings=settings)


def thing(eid, x=0.0, y=0.0, body=1.0):
    return Entity(
        eid,
        Pose((x, y), 0.0),
        engageable=False,
        channel_settings={Channel.BODY: ChannelSetting(body)},
    )


def facing(e: Entity, other: Entity) -> Entity:
    from dataclasses import replace

    from engagesim.model import bearing

    return replace(e, pose=Pose(e.position, bearing(e.position, other.position), e.pose.body_radius))


def world(*entities, noise=None, tick=0):
    return World(tuple(entities), Environment(noise or {}), tick)


@pytest.fixture(scope="session")
def fig4():
    return load_scenario("fig4")


def focus_maps(min_size=1, max_size=10):
    """Random focus maps over ids e0..e{n-1}; each entity focuses anyone, itself included."""

    @st.composite
    def build(draw):
        n = draw(st.integers(min_size, max_size))
        ids = [f"e{i}" for i in range(n)]
        return {a: draw(st.sampled_from(ids)) for a in ids}

    return build()


@st.composite
def small_scenes(draw, min_n=2, max_n=5):
    """Random engageable scenes with spread-out bodies and Body/Gaze/Gesture/Talking emissions."""
    n = draw(st.integers(min_n, max_n))
    ids = [f"p{i}" for i in range(n)]
    ents = []
    coords = st.floats(-6.0, 6.0, allow_nan=False)
    placed = []
    for eid in ids:
        for _ in range(50):
            x, y = draw(coords), draw(coords)
            if all(math.dist((x, y), q) > 0.8 for q in placed):
                break
        else:
            x, y = 20.0 + 2.0 * len(placed), 20.0
        placed.append((x, y))
        channels = {"body": draw(st.floats(0.1, 1.0))}
        others = [o for o in ids if o != eid]
        for ch in ("gaze", "gesture", "talking"):
            if draw(st.booleans()):
                channels[ch] = (draw(st.floats(0.1, 1.0)), draw(st.sampled_from(others)))
        ents.append(
            person(
                eid,
                x,
                y,
                heading=draw(st.floats(0.0, 2 * math.pi, exclude_max=True)),
                fov=draw(st.floats(0.5, math.pi)),
                **channels,
            )
        )
    noise = {Channel.TALKING: draw(st.floats(0.0, 0.9))}
    return world(*ents, noise=noise)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
