# LPCR Shield - Attack-Aware Retraining
from typing import Optional, Sequence

from ..core.exceptions import ConfigurationError, DatasetValidationError
from ..core.logging import get_logger
from ..dataset.types import GlyphImage
from ..model.lpcr import LpcrModel, build_from_config
from ..model.training import TrainResult, train
from ..model.types import TrainConfig
from ..utils.helpers import stable_hash
from .mixing import AdvMixConfig, build_adversarial_train_set

logger = get_logger('lpcr.advtrain')


def train_aa_lpcr(
    clean_set: Sequence[GlyphImage],
    val_set: Sequence[GlyphImage],
    train_config: TrainConfig,
    mix_config: AdvMixConfig,
    model: Optional[LpcrModel] = None,
) -> TrainResult:
    """Retrain the LPCR architecture on clean/patched mixes.

    Online mode draws a fresh mix every epoch; frozen mode reuses the
    epoch-0 mix for the whole run.
    """
    images = list(clean_set)
    if mix_config.seed is None:
        raise ConfigurationError("advtrain.seed", "seed must be resolved before adversarial training")
    if not images:
        raise DatasetValidationError("dataset", "adversarial training needs a non-empty training set")
    model = model or build_from_config(images[0].dims, train_config)

    frozen = None if mix_config.online else build_adversarial_train_set(images, mix_config, epoch=0).images

    def mix(epoch: int, clean: Sequence[GlyphImage]) -> Sequence[GlyphImage]:
        if frozen is not None:
            return frozen
        return build_adversarial_train_set(clean, mix_config, epoch=epoch).images

    logger.info(
        f"Adversarial training on {len(images)} images "
        f"(clean fraction {mix_config.clean_fraction}, {'online' if mix_config.online else 'frozen'} mixing)"
    )
    result = train(model, images, val_set, train_config, epoch_transform=mix)
    result.model.provenance.update({
        "attack_aware": True,
        "mix_config_hash": stable_hash(mix_config.model_dump(mode="json")),
        "mix_online": mix_config.online,
    })
    return result
