"""homegraph: an online semantic scene graph driving a replanning fetch
executive inside a deterministic household simulator.

The graph fuses spatial relations from geometric detections and from
environment-embedded cues (speech transcripts, written signs, pointing
gestures), resolving conflicts by provenance-aware, age-decayed confidence.
Plans search likely locations until the graph believes one strongly enough,
then collapse to direct retrieval.
"""

from importlib import resources
from pathlib import Path

from .graph import (
    EntityNode,
    GraphDelta,
    Kind,
    LocationChain,
    Pose,
    Relation,
    RelationEdge,
    SceneGraph,
    SemanticAssertion,
    Source,
    effective_confidence,
    normalize_label,
)
from .cues import (
    GestureCue,
    MockInterpreterClient,
    UpdateDecision,
    VerbalCue,
    WrittenCue,
    decide_next_steps,
    interpret_statement,
    interpret_with_client,
    resolve_gesture,
)
from .geometry import (
    AABB,
    Detection,
    GeometricObservation,
    Rect,
    RoomGeometry,
    SurfaceModel,
    associate_detection,
    containment_test,
    extract_relations,
    support_test,
)
from .planner import (
    Plan,
    PriorTable,
    Task,
    TaskStatus,
    candidate_locations,
    is_relevant,
    parse_command,
    plan,
    replan,
)
from .sim import RunReport, Scenario, Simulator, World, load_scenario, metrics
from .orchestrator import Executive, replay_log, run_headless

__version__ = "0.1.0"


def scenario_path(name: str) -> Path:
    """Path to a bundled scenario: verbal_apple, written_orange, gesture_teddy."""
    ref = resources.files("homegraph.scenarios").joinpath(f"{name}.json")
    return Path(str(ref))
