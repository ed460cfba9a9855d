"""Learning-rate schedule: linear warmup into cosine decay."""

from __future__ import annotations

import math


def lr_schedule(step: int, total_steps: int, base_lr: float,
                warmup_epochs: int, steps_per_epoch: int) -> float:
    """Linear ramp 0 -> base_lr over the warmup epochs, then cosine decay
    toward 0.

    The ramp starts at 0 on step 0 and hits exactly base_lr at the first
    post-warmup step; decay progress then runs linearly over the remaining
    span, so the last step sits one step short of the cosine zero.
    """
    if not 0 <= step < total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps})")
    warmup_steps = warmup_epochs * steps_per_epoch
    if warmup_steps >= total_steps:
        warmup_steps = max(0, total_steps - 1)
    if step < warmup_steps:
        return base_lr * step / warmup_steps
    progress = (step - warmup_steps) / (total_steps - warmup_steps)
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * progress))
