import logging
from pathlib import Path

from craftforecast.execution.evaluate import NodePrediction
from craftforecast.util import json

logger = logging.getLogger(__name__)


def write_predictions(predictions: list[NodePrediction], path: Path) -> int:
    """
    One JSON line per reported hotel and origin with the final forecast and the forecasts of
    the Koopman and trend-mining stages.
    """
    count = 0
    with open(path, "wb") as fp:
        for prediction in predictions:
            sample = prediction.sample
            if prediction.is_parent or not sample.reported:
                continue
            record = {
                "hotel_id": sample.hotel_id,
                "district_id": sample.district_id,
                "origin": sample.origin,
                "forecast": prediction.y_hat,
                "kpm_forecast": prediction.y_kpm,
                "itm_forecast": prediction.y_itm,
                "label": sample.y_P,
            }
            fp.write(json.dumpb(record))
            fp.write(b"\n")
            count += 1
    logger.info(f"Wrote {count} forecasts to {path}")
    return count
