import logging

from craftforecast.data.dataset import Dataset
from craftforecast.metrics import pearson_by_horizon
from craftforecast.models import PearsonCurve

logger = logging.getLogger(__name__)


def pearson_curve(dataset: Dataset, p_max: int) -> PearsonCurve:
    """
    Correlation between look-back labels and on-hand bookings for growing forecast prefixes,
    over every sample of the dataset.
    """
    samples = [sample for sample in dataset.samples if sample.reported]
    correlations = pearson_by_horizon(samples, p_max)
    for p, value in enumerate(correlations, start=1):
        logger.info(f"p={p}: pearson {value:.4f}")
    return PearsonCurve(p_max=p_max, sample_count=len(samples), correlations=correlations)
