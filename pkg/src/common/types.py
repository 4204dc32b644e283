"""
Énumérations partagées utilisées par plusieurs applications.

Ce sont de simples StrEnums : leur valeur est ce qui apparaît dans les
fichiers de configuration JSON et sur la ligne de commande.
"""

from enum import StrEnum


class ClusteringMode(StrEnum):
    BINARY = "binary"
    DISTANCE = "distance"


class ScorerName(StrEnum):
    HEURISTIC = "heuristic"
    ORACLE = "oracle"
    CONSTANT = "constant"


class RefinerName(StrEnum):
    IDENTITY = "identity"
    ADJACENT_MERGE = "adjacent_merge"


class NoiseKind(StrEnum):
    GAUSSIAN = "gaussian"
    HEAVY_TAIL = "heavy_tail"
    BOUNDARY_PULL = "boundary_pull"


class Primitive(StrEnum):
    BOX = "box"
    SPHERE = "sphere"
    CYLINDER = "cylinder"
    L_SHAPE = "l_shape"


class AblationStage(StrEnum):
    VOTING = "voting"
    LOCAL_SCENES = "local_scenes"
    BINARY = "binary"


class Stage(StrEnum):
    """Timing rows of a segmentation run, in execution order."""

    BASELINE = "baseline"
    BINARIZE = "binarize"
    GROUP_HPS = "group_hps"
    VOTE_LPS = "vote_lps"
    LOCAL_SCENE = "local_scene"
    POST_PROCESS = "post_process"
