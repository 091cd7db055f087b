"""Plan-grounding toolkit for household task planning experiments.

Pipeline: floorplan scenes -> observation poses -> simulated detection ->
deduplicated object lists -> backend-generated action plans -> automated
validation -> voted or automated success tables.
"""

from .errors import PlangroundError
from .exploration import CameraPose, CollectionStrategy, kmeans_wcss, plan_poses, select_k_elbow
from .perception import CameraConfig, DetectorConfig, aggregate_object_list, detect, visible_objects
from .planning import ActionStep, BackendConfig, Plan, build_prompt, parse_plan_text, request_plan
from .scene import (
    ObjectInstance,
    ObjectList,
    RoomType,
    Scene,
    SceneGenSpec,
    achievable_grid_points,
    generate_synthetic_scene,
    ground_truth_object_list,
    load_scene,
    save_scene,
)
from .validation import MatchResult, RuleSet, SynonymTable, match_object, simulate_plan, validate
from .evaluation import SuccessTable, VoteRecord, VoteStore, aggregate_success, failure_breakdown, majority_verdict
from .dataset import Triplet, augment_scene, expand_scenes, filter_generated_sample, split_scenes
from .experiment import ExperimentConfig, load_config, run_experiment

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
