from ._madi import (
    Masker,
    ReacherEnv,
    checkpoint_meta,
    evaluate_checkpoint,
    incomplete_beta,
    is_red_pixel,
    overlay,
    radial_weight,
    reward_visual,
    train,
    welch_t_test,
)

__all__ = [
    "Masker",
    "ReacherEnv",
    "checkpoint_meta",
    "evaluate_checkpoint",
    "incomplete_beta",
    "is_red_pixel",
    "overlay",
    "radial_weight",
    "reward_visual",
    "train",
    "welch_t_test",
]
