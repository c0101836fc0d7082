from .evaluate import EvalReport, evaluate, discriminator_fake_probability
from .sweep import SweepResult, SweepRow, noise_sweep, detect_switch_point
from .gradcheck import run_gradcheck, numerical_gradient, max_relative_error
from .ablation import ABLATION_SUITES, ablation_arms, run_ablation

__all__ = [
    "EvalReport", "evaluate", "discriminator_fake_probability",
    "SweepResult", "SweepRow", "noise_sweep", "detect_switch_point",
    "run_gradcheck", "numerical_gradient", "max_relative_error",
    "ABLATION_SUITES", "ablation_arms", "run_ablation",
]
