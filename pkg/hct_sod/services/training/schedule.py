"""
Per-epoch learning rate: log-linear decay from lr_start to lr_end
"""
from hct_sod.models.config import TrainConfig


def lr_schedule(epoch: int, cfg: TrainConfig) -> float:
    """lr_start * (lr_end / lr_start) ** (epoch / (epochs - 1)); both endpoints returned exactly"""
    if not 0 <= epoch < cfg.epochs:
        raise ValueError(f"epoch {epoch} outside [0, {cfg.epochs})")
    if epoch == 0 or cfg.epochs == 1:
        return cfg.lr_start
    if epoch == cfg.epochs - 1:
        return cfg.lr_end
    return cfg.lr_start * (cfg.lr_end / cfg.lr_start) ** (epoch / (cfg.epochs - 1))
